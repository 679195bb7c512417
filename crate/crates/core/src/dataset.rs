//! Dataset manifests, gallery/probe splits and the procedural face generator.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GrayImage, Grid};
use crate::imageio::{is_supported_image, write_pgm};

pub const MANIFEST_FILE: &str = "manifest.json";

/// How images are arranged under a dataset root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// One subdirectory per subject; images inside sorted by file name.
    #[default]
    SubjectPerDirectory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectRecord {
    #[serde(rename = "id")]
    pub subject_id: String,
    /// Paths relative to the manifest root, `/`-separated.
    #[serde(rename = "images")]
    pub image_paths: Vec<String>,
    pub enrolled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub subjects: Vec<SubjectRecord>,
    #[serde(skip)]
    pub source_root: PathBuf,
}

impl DatasetManifest {
    pub fn image_count(&self) -> usize {
        self.subjects.iter().map(|s| s.image_paths.len()).sum()
    }

    pub fn resolve(&self, image_path: &str) -> PathBuf {
        self.source_root.join(image_path)
    }

    /// Checks the structural invariants; with `check_files`, also that
    /// every image exists under `source_root`.
    pub fn validate(&self, check_files: bool) -> Result<()> {
        if self.subjects.is_empty() {
            return Err(Error::Manifest("no subjects".into()));
        }
        let mut ids = HashSet::new();
        let mut paths = HashSet::new();
        for s in &self.subjects {
            if s.subject_id.is_empty() {
                return Err(Error::Manifest("empty subject id".into()));
            }
            if !ids.insert(s.subject_id.as_str()) {
                return Err(Error::Manifest(format!(
                    "duplicate subject id {:?}",
                    s.subject_id
                )));
            }
            if s.image_paths.is_empty() {
                return Err(Error::Manifest(format!(
                    "subject {:?} has no images",
                    s.subject_id
                )));
            }
            if s.enrolled && s.image_paths.len() < 2 {
                return Err(Error::Manifest(format!(
                    "enrolled subject {:?} needs at least 2 images",
                    s.subject_id
                )));
            }
            for p in &s.image_paths {
                if !paths.insert(p.as_str()) {
                    return Err(Error::Manifest(format!("image {p:?} listed twice")));
                }
                if check_files && !self.resolve(p).is_file() {
                    return Err(Error::Manifest(format!(
                        "image {p:?} of subject {:?} not found under {}",
                        s.subject_id,
                        self.source_root.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("manifest serialisation cannot fail");
        text.push('\n');
        text
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Reads `manifest.json`; image paths resolve against its directory.
    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        manifest.source_root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate(true)?;
        Ok(manifest)
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

fn file_name(path: &Path) -> Result<String> {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Manifest(format!("non UTF-8 path {}", path.display())))
}

/// Scans a dataset root. Subjects with two or more images start enrolled.
pub fn load_manifest(root: &Path, layout: Layout) -> Result<DatasetManifest> {
    match layout {
        Layout::SubjectPerDirectory => {}
    }
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root not found"),
        ));
    }
    let mut subjects = Vec::new();
    for dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let id = file_name(&dir)?;
        let mut images = Vec::new();
        for file in sorted_entries(&dir)? {
            if file.is_file() && is_supported_image(&file) {
                images.push(format!("{id}/{}", file_name(&file)?));
            }
        }
        if images.is_empty() {
            return Err(Error::Manifest(format!("subject {id:?} has no images")));
        }
        subjects.push(SubjectRecord {
            subject_id: id,
            enrolled: images.len() >= 2,
            image_paths: images,
        });
    }
    if subjects.is_empty() {
        return Err(Error::Manifest("no subjects".into()));
    }
    Ok(DatasetManifest {
        subjects,
        source_root: root.to_path_buf(),
    })
}

/// Loads `root/manifest.json` when present, otherwise scans the directory.
pub fn open_dataset(root: &Path) -> Result<DatasetManifest> {
    let manifest = root.join(MANIFEST_FILE);
    if manifest.is_file() {
        DatasetManifest::read_json(&manifest)
    } else {
        load_manifest(root, Layout::default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitItem {
    pub subject_id: String,
    pub image_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub gallery: Vec<SplitItem>,
    pub genuine_probes: Vec<SplitItem>,
    pub impostor_probes: Vec<SplitItem>,
}

/// Enrols the first `enrolled_count` subjects flagged `enrolled`, in manifest
/// order. Each contributes its first `gallery_per_subject` images to the
/// gallery and the next one as a genuine probe. Every other subject
/// contributes its first image as an impostor probe.
pub fn make_split(
    manifest: &DatasetManifest,
    enrolled_count: usize,
    gallery_per_subject: usize,
) -> Result<Split> {
    if enrolled_count == 0 || gallery_per_subject == 0 {
        return Err(Error::Split(
            "enrolled count and gallery size per subject must be positive".into(),
        ));
    }
    let eligible = manifest.subjects.iter().filter(|s| s.enrolled).count();
    if enrolled_count > eligible {
        return Err(Error::Split(format!(
            "cannot enrol {enrolled_count} subjects; only {eligible} of {} are eligible",
            manifest.subjects.len()
        )));
    }
    let item = |s: &SubjectRecord, k: usize| SplitItem {
        subject_id: s.subject_id.clone(),
        image_path: s.image_paths[k].clone(),
    };
    let mut split = Split::default();
    let mut remaining = enrolled_count;
    for s in &manifest.subjects {
        if s.enrolled && remaining > 0 {
            remaining -= 1;
            if s.image_paths.len() < gallery_per_subject + 1 {
                return Err(Error::Split(format!(
                    "subject {:?} has {} images, needs {}",
                    s.subject_id,
                    s.image_paths.len(),
                    gallery_per_subject + 1
                )));
            }
            split
                .gallery
                .extend((0..gallery_per_subject).map(|k| item(s, k)));
            split.genuine_probes.push(item(s, gallery_per_subject));
        } else {
            split.impostor_probes.push(item(s, 0));
        }
    }
    Ok(split)
}

/// Parameters of the procedural face generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub n_subjects: usize,
    pub images_per_subject: usize,
    /// Scales both the additive pixel noise and the random translation.
    pub noise_level: f64,
}

/// Side of generated images.
pub const SYNTH_SIZE: usize = 128;
const BACKGROUND: f64 = 20.0;
/// Pixel noise standard deviation at `noise_level = 1`.
const NOISE_SIGMA: f64 = 20.0;
/// Largest translation in pixels at `noise_level = 1`.
const MAX_SHIFT: f64 = 6.0;
const BLOBS: usize = 8;

struct Blob {
    u: f64,
    v: f64,
    sigma: f64,
    amplitude: f64,
}

/// Everything that identifies one synthetic subject.
struct FaceModel {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    base: f64,
    blobs: Vec<Blob>,
    grating_dir: (f64, f64),
    grating_freq: f64,
    grating_amp: f64,
    grating_phase: f64,
    ramp: (f64, f64),
}

impl FaceModel {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let half = SYNTH_SIZE as f64 / 2.0;
        let sign = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let blobs = (0..BLOBS)
            .map(|_| Blob {
                u: rng.random_range(-0.8..0.8),
                v: rng.random_range(-0.8..0.8),
                sigma: rng.random_range(0.12..0.3),
                amplitude: sign(rng) * rng.random_range(15.0..35.0),
            })
            .collect();
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        Self {
            cx: half + rng.random_range(-4.0..4.0),
            cy: half + rng.random_range(-4.0..4.0),
            rx: rng.random_range(38.0..46.0),
            ry: rng.random_range(48.0..54.0),
            base: rng.random_range(160.0..180.0),
            blobs,
            grating_dir: (angle.cos(), angle.sin()),
            grating_freq: std::f64::consts::TAU / rng.random_range(0.25..0.6),
            grating_amp: rng.random_range(15.0..30.0),
            grating_phase: rng.random_range(0.0..std::f64::consts::TAU),
            ramp: (rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0)),
        }
    }

    /// Noise-free intensity at pixel centre `(x, y)`.
    fn intensity(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.cx) / self.rx;
        let v = (y - self.cy) / self.ry;
        // superellipse outline keeps the background corners of the crop small
        if u.powi(4) + v.powi(4) > 1.0 {
            return BACKGROUND;
        }
        let blobs: f64 = self
            .blobs
            .iter()
            .map(|b| {
                let r2 = (u - b.u).powi(2) + (v - b.v).powi(2);
                b.amplitude * (-r2 / (2.0 * b.sigma * b.sigma)).exp()
            })
            .sum();
        let along = u * self.grating_dir.0 + v * self.grating_dir.1;
        let grating = self.grating_amp * (self.grating_freq * along + self.grating_phase).sin();
        let ramp = self.ramp.0 * u + self.ramp.1 * v;
        (self.base + blobs + grating + ramp).clamp(90.0, 250.0)
    }

    fn render(&self, seed: u64, noise_level: f64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = MAX_SHIFT * noise_level;
        let dx = shift * rng.random_range(-1.0..=1.0);
        let dy = shift * rng.random_range(-1.0..=1.0);
        let noise = Normal::new(0.0, NOISE_SIGMA * noise_level).expect("finite sigma");
        let grid = Grid::from_fn(SYNTH_SIZE, SYNTH_SIZE, |r, c| {
            let clean = self.intensity(c as f64 + 0.5 - dx, r as f64 + 0.5 - dy);
            if noise_level > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            }
        })
        .expect("fixed synthetic size");
        GrayImage::from_grid_clamped(grid)
    }
}

fn image_seed(seed: u64, subject: usize, image: usize) -> u64 {
    // splitmix-style decorrelation of (seed, subject, image)
    let mut z = seed
        ^ (subject as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (image as u64 + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn padded_width(n: usize, min: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(min)
}

/// Renders a deterministic dataset under `out_dir` in the
/// subject-per-directory layout and writes its `manifest.json`.
pub fn synth_dataset(out_dir: &Path, params: &SynthParams) -> Result<DatasetManifest> {
    if params.n_subjects == 0 || params.images_per_subject == 0 {
        return Err(Error::Config(
            "subject and image counts must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&params.noise_level) {
        return Err(Error::Config(format!(
            "noise level {} outside [0, 1]",
            params.noise_level
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let models: Vec<FaceModel> = (0..params.n_subjects)
        .map(|_| FaceModel::random(&mut rng))
        .collect();

    let sw = padded_width(params.n_subjects, 3);
    let iw = padded_width(params.images_per_subject, 2);
    let subjects = models
        .par_iter()
        .enumerate()
        .map(|(s, model)| {
            let id = format!("s{s:0sw$}");
            let dir = out_dir.join(&id);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let mut images = Vec::with_capacity(params.images_per_subject);
            for k in 0..params.images_per_subject {
                let name = format!("{k:0iw$}.pgm");
                // noise-free images of a subject are identical by construction
                let img = model.render(image_seed(params.seed, s, k), params.noise_level);
                write_pgm(&dir.join(&name), &img)?;
                images.push(format!("{id}/{name}"));
            }
            Ok(SubjectRecord {
                subject_id: id,
                image_paths: images,
                enrolled: params.images_per_subject >= 2,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        subjects,
        source_root: out_dir.to_path_buf(),
    };
    manifest.write_json(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(counts: &[usize]) -> DatasetManifest {
        DatasetManifest {
            subjects: counts
                .iter()
                .enumerate()
                .map(|(s, &n)| SubjectRecord {
                    subject_id: format!("p{s}"),
                    image_paths: (0..n).map(|k| format!("p{s}/{k}.png")).collect(),
                    enrolled: n >= 2,
                })
                .collect(),
            source_root: PathBuf::new(),
        }
    }

    fn all_paths(split: &Split) -> Vec<&str> {
        split
            .gallery
            .iter()
            .chain(&split.genuine_probes)
            .chain(&split.impostor_probes)
            .map(|i| i.image_path.as_str())
            .collect()
    }

    #[test]
    fn split_protocol_counts() {
        let m = manifest(&[14; 115]);
        let s = make_split(&m, 90, 13).unwrap();
        assert_eq!(
            (
                s.gallery.len(),
                s.genuine_probes.len(),
                s.impostor_probes.len()
            ),
            (1170, 90, 25)
        );
        assert_eq!(s.genuine_probes[0].image_path, "p0/13.png");
        assert_eq!(s.impostor_probes[0].image_path, "p90/0.png");
    }

    #[test]
    fn split_small_cases() {
        let s = make_split(&manifest(&[2]), 1, 1).unwrap();
        assert_eq!(
            (
                s.gallery.len(),
                s.genuine_probes.len(),
                s.impostor_probes.len()
            ),
            (1, 1, 0)
        );
        let s = make_split(&manifest(&[3, 3, 3]), 2, 2).unwrap();
        assert_eq!(
            (
                s.gallery.len(),
                s.genuine_probes.len(),
                s.impostor_probes.len()
            ),
            (4, 2, 1)
        );
    }

    #[test]
    fn split_is_a_partition() {
        let s = make_split(&manifest(&[5, 4, 6, 2, 3]), 3, 3).unwrap();
        let paths = all_paths(&s);
        let unique: HashSet<_> = paths.iter().collect();
        assert_eq!(unique.len(), paths.len());
        let gallery_subjects: HashSet<_> = s.gallery.iter().map(|i| &i.subject_id).collect();
        assert!(s
            .genuine_probes
            .iter()
            .all(|p| gallery_subjects.contains(&p.subject_id)));
        assert!(s
            .impostor_probes
            .iter()
            .all(|p| !gallery_subjects.contains(&p.subject_id)));
        assert_eq!(make_split(&manifest(&[5, 4, 6, 2, 3]), 3, 3).unwrap(), s);
    }

    #[test]
    fn split_skips_unflagged_subjects() {
        let mut m = manifest(&[3, 3, 3]);
        m.subjects[0].enrolled = false;
        let s = make_split(&m, 2, 2).unwrap();
        assert_eq!(s.impostor_probes[0].subject_id, "p0");
        assert_eq!(s.genuine_probes[0].subject_id, "p1");
        assert!(make_split(&m, 3, 2).is_err());
    }

    #[test]
    fn split_rejects_short_subject() {
        let err = make_split(&manifest(&[3, 2]), 2, 2).unwrap_err();
        assert!(matches!(&err, Error::Split(m) if m.contains("p1")), "{err}");
    }

    #[test]
    fn manifest_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        for (s, names) in [("s02", vec!["a.pgm"]), ("s01", vec!["b.pgm", "a.pgm"])] {
            fs::create_dir(dir.path().join(s)).unwrap();
            for n in names {
                write_pgm(&dir.path().join(s).join(n), &img).unwrap();
            }
        }
        fs::write(dir.path().join("s01/notes.txt"), "x").unwrap();
        let m = load_manifest(dir.path(), Layout::SubjectPerDirectory).unwrap();
        assert_eq!(m.subjects.len(), 2);
        assert_eq!(m.image_count(), 3);
        assert_eq!(m.subjects[0].image_paths, vec!["s01/a.pgm", "s01/b.pgm"]);
        assert!(m.subjects[0].enrolled && !m.subjects[1].enrolled);
        m.validate(true).unwrap();
    }

    #[test]
    fn manifest_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_manifest(dir.path(), Layout::SubjectPerDirectory),
            Err(Error::Manifest(m)) if m == "no subjects"
        ));
        fs::create_dir(dir.path().join("lonely")).unwrap();
        assert!(matches!(
            load_manifest(dir.path(), Layout::SubjectPerDirectory),
            Err(Error::Manifest(m)) if m.contains("lonely")
        ));
        assert!(matches!(
            load_manifest(&dir.path().join("missing"), Layout::SubjectPerDirectory),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn manifest_json_fields() {
        let m = manifest(&[2]);
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["subjects"][0]["id"], "p0");
        assert_eq!(v["subjects"][0]["images"][1], "p0/1.png");
        assert_eq!(v["subjects"][0]["enrolled"], true);
        assert!(v.get("source_root").is_none());
    }

    #[test]
    fn manifest_validation() {
        let mut m = manifest(&[2, 2]);
        m.subjects[1].subject_id = "p0".into();
        assert!(m.validate(false).is_err());
        let mut m = manifest(&[2]);
        m.subjects[0].image_paths.pop();
        assert!(m.validate(false).is_err());
        assert!(manifest(&[2]).validate(true).is_err());
    }

    #[test]
    fn synth_rejects_bad_params() {
        let dir = tempfile::tempdir().unwrap();
        let p = SynthParams {
            seed: 1,
            n_subjects: 0,
            images_per_subject: 2,
            noise_level: 0.0,
        };
        assert!(synth_dataset(dir.path(), &p).is_err());
        let p = SynthParams {
            seed: 1,
            n_subjects: 1,
            images_per_subject: 2,
            noise_level: 1.5,
        };
        assert!(synth_dataset(dir.path(), &p).is_err());
    }

    #[test]
    fn synth_zero_noise_repeats_each_subject() {
        let dir = tempfile::tempdir().unwrap();
        let p = SynthParams {
            seed: 1,
            n_subjects: 2,
            images_per_subject: 2,
            noise_level: 0.0,
        };
        let m = synth_dataset(dir.path(), &p).unwrap();
        assert_eq!(m.image_count(), 4);
        for s in &m.subjects {
            let a = fs::read(m.resolve(&s.image_paths[0])).unwrap();
            let b = fs::read(m.resolve(&s.image_paths[1])).unwrap();
            assert_eq!(a, b);
        }
        let a = fs::read(m.resolve(&m.subjects[0].image_paths[0])).unwrap();
        let b = fs::read(m.resolve(&m.subjects[1].image_paths[0])).unwrap();
        assert_ne!(a, b);
        assert_eq!(
            DatasetManifest::read_json(&dir.path().join(MANIFEST_FILE)).unwrap(),
            m
        );
    }

    #[test]
    fn image_seeds_differ() {
        let seeds: HashSet<u64> = (0..20)
            .flat_map(|s| (0..14).map(move |k| image_seed(1, s, k)))
            .collect();
        assert_eq!(seeds.len(), 280);
    }
}
