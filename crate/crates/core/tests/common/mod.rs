//! Naive reference implementations used as test oracles. They share no code
//! with the library beyond its plain data types.

#![allow(dead_code)]

use dbcfr::{FeatureVector, Gallery, GrayImage, Grid};
use rand::{Rng, SeedableRng};

pub type TestRng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    TestRng::seed_from_u64(seed)
}

pub fn random_grid(rng: &mut TestRng, w: usize, h: usize, lo: f64, hi: f64) -> Grid {
    Grid::new(w, h, (0..w * h).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Code of the 3x3 centre of a 5x5 block for one direction, written out
/// position by position: centre, W, NW, N, NE, E, SE, S, SW.
pub fn brute_force_code(block: &[[f64; 5]; 5], degrees: u32) -> u16 {
    let positions = [
        (2, 2),
        (2, 1),
        (1, 1),
        (1, 2),
        (1, 3),
        (2, 3),
        (3, 3),
        (3, 2),
        (3, 1),
    ];
    let mut code = 0u16;
    for (k, &(i, j)) in positions.iter().enumerate() {
        let here: f64 = block[i][j];
        let there = match degrees {
            0 => block[i][j - 1],
            45 => block[i - 1][j + 1],
            90 => block[i - 1][j],
            135 => block[i - 1][j - 1],
            _ => unreachable!(),
        };
        if here - there > 0.0 {
            code += 1 << (8 - k);
        }
    }
    code
}

/// Loop-everything feature extraction for a 50x50 band with 5x5 cells.
pub fn brute_force_features(ll: &Grid) -> Vec<f64> {
    assert_eq!((ll.width(), ll.height()), (50, 50));
    let mut out = Vec::with_capacity(100);
    for cr in 0..10 {
        for cc in 0..10 {
            let mut block = [[0.0; 5]; 5];
            for (i, row) in block.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = ll.get(cr * 5 + i, cc * 5 + j);
                }
            }
            let sum: u32 = [0, 45, 90, 135]
                .iter()
                .map(|&deg| u32::from(brute_force_code(&block, deg)))
                .sum();
            out.push(sum as f64 / 4.0 / 511.0);
        }
    }
    out
}

/// Otsu by evaluating every candidate threshold from scratch; near-equal
/// maxima resolve to the smallest threshold.
pub fn brute_force_otsu(img: &GrayImage) -> u8 {
    let bins: Vec<usize> = img
        .pixels()
        .iter()
        .map(|v| (v.floor() as usize).min(255))
        .collect();
    let n = bins.len() as f64;
    let scores: Vec<f64> = (0..=255usize)
        .map(|t| {
            let low: Vec<f64> = bins.iter().filter(|&&b| b < t).map(|&b| b as f64).collect();
            let high: Vec<f64> = bins
                .iter()
                .filter(|&&b| b >= t)
                .map(|&b| b as f64)
                .collect();
            if low.is_empty() || high.is_empty() {
                return 0.0;
            }
            let w0 = low.len() as f64 / n;
            let w1 = high.len() as f64 / n;
            let m0 = low.iter().sum::<f64>() / low.len() as f64;
            let m1 = high.iter().sum::<f64>() / high.len() as f64;
            w0 * w1 * (m0 - m1) * (m0 - m1)
        })
        .collect();
    let best = scores.iter().cloned().fold(0.0, f64::max);
    scores
        .iter()
        .position(|&s| s >= best * (1.0 - 1e-12) && s > 0.0)
        .unwrap() as u8
}

/// Exhaustive nearest neighbour: (index, distance), first index on ties.
pub fn brute_force_nearest(probe: &[f64], gallery: &Gallery) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (k, e) in gallery.entries().iter().enumerate() {
        let mut s = 0.0;
        for (p, g) in probe.iter().zip(e.features.coeffs()) {
            s += (p - g) * (p - g);
        }
        let d = s.sqrt();
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

pub fn random_features(rng: &mut TestRng, len: usize) -> FeatureVector {
    FeatureVector::new((0..len).map(|_| rng.random_range(0.0..1.0)).collect())
}

pub fn random_gallery(rng: &mut TestRng, entries: usize, len: usize) -> Gallery {
    Gallery::new(
        (0..entries)
            .map(|k| dbcfr::GalleryEntry {
                subject_id: format!("s{}", k % 7),
                image_id: format!("{k}"),
                features: random_features(rng, len),
            })
            .collect(),
    )
    .unwrap()
}

/// A 5x5 tile with every compared neighbour strictly smaller than the
/// pixel, so all four codes are 511.
pub fn steep_tile(row: usize, col: usize) -> f64 {
    (2 * row + col) as f64
}
