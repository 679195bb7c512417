use std::fs;
use std::path::Path;

use dbcfr::imageio::{read_gray, write_pgm};
use dbcfr::preprocess::binarize;
use dbcfr::*;

fn synth(dir: &Path, seed: u64, n: usize, m: usize, noise: f64) -> DatasetManifest {
    synth_dataset(
        dir,
        &SynthParams {
            seed,
            n_subjects: n,
            images_per_subject: m,
            noise_level: noise,
        },
    )
    .unwrap()
}

fn mean_abs_diff(a: &GrayImage, b: &GrayImage) -> f64 {
    a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / a.pixels().len() as f64
}

fn all_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_byte_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth(a.path(), 1, 3, 3, 0.2);
    synth(b.path(), 1, 3, 3, 0.2);
    let (fa, fb) = (all_files(a.path()), all_files(b.path()));
    assert_eq!(fa.len(), 10);
    assert_eq!(fa, fb);
}

#[test]
fn subjects_differ_more_than_their_own_images() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = synth(a.path(), 1, 4, 3, 0.1);
    let mb = synth(b.path(), 2, 4, 3, 0.1);
    let load = |m: &DatasetManifest, s: usize, k: usize| {
        read_gray(&m.resolve(&m.subjects[s].image_paths[k])).unwrap()
    };
    let mut intra = 0.0;
    let mut inter = 0.0;
    for s in 0..4 {
        intra += mean_abs_diff(&load(&ma, s, 0), &load(&ma, s, 1));
        intra += mean_abs_diff(&load(&mb, s, 0), &load(&mb, s, 2));
        inter += mean_abs_diff(&load(&ma, s, 0), &load(&mb, s, 0));
        inter += mean_abs_diff(&load(&ma, s, 0), &load(&ma, (s + 1) % 4, 0));
    }
    assert!(inter > intra, "inter {inter} intra {intra}");
}

#[test]
fn directory_of_ninety_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::new(2, 2, vec![0.0, 50.0, 100.0, 200.0]).unwrap();
    for s in 0..90 {
        let sub = dir.path().join(format!("p{s:03}"));
        fs::create_dir(&sub).unwrap();
        for k in 0..14 {
            write_pgm(&sub.join(format!("{k:02}.pgm")), &img).unwrap();
        }
    }
    let m = load_manifest(dir.path(), Layout::SubjectPerDirectory).unwrap();
    assert_eq!(m.subjects.len(), 90);
    assert_eq!(m.image_count(), 1260);
    m.validate(true).unwrap();
    let split = make_split(&m, 90, 13).unwrap();
    assert_eq!(split.gallery.len(), 1170);
    assert!(split.impostor_probes.is_empty());
}

#[test]
fn manifest_json_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth(dir.path(), 5, 2, 3, 0.0);
    let reread = open_dataset(dir.path()).unwrap();
    assert_eq!(reread, m);

    fs::remove_file(m.resolve(&m.subjects[1].image_paths[2])).unwrap();
    assert!(matches!(open_dataset(dir.path()), Err(Error::Manifest(_))));
}

#[test]
fn synthetic_face_preprocesses_to_mostly_foreground() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth(dir.path(), 1, 3, 2, 0.1);
    for s in &m.subjects {
        let img = read_gray(&m.resolve(&s.image_paths[0])).unwrap();
        let face = preprocess(&img).unwrap();
        assert_eq!((face.width(), face.height()), (100, 100));
        let t = otsu_threshold(&face).unwrap();
        let fraction = binarize(&face, f64::from(t)).count_ones() as f64 / 1e4;
        assert!(fraction > 0.5, "foreground fraction {fraction}");
    }
}

#[test]
fn noiseless_probe_matches_its_gallery_copy() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth(dir.path(), 3, 4, 3, 0.0);
    let split = make_split(&m, 3, 2).unwrap();
    let pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
    let eval = pipeline.evaluate(&m, &split, &[0.0, 0.5]).unwrap();
    assert!(eval.failures.is_empty());
    let at_zero = eval.report.rows[0];
    assert_eq!((at_zero.frr, at_zero.rr_percent), (0.0, 100.0));
    assert_eq!(at_zero.far, 0.0);
}

#[test]
fn unreadable_gallery_image_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth(dir.path(), 3, 2, 3, 0.0);
    fs::write(m.resolve(&m.subjects[0].image_paths[1]), b"not an image").unwrap();
    let split = make_split(&m, 2, 2).unwrap();
    let pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
    let enrolled = pipeline.enroll(&m, &split).unwrap();
    assert_eq!(enrolled.gallery.len(), 3);
    assert_eq!(enrolled.failures.len(), 1);
    assert!(enrolled.failures[0].path.ends_with("s000/01.pgm"));
}
