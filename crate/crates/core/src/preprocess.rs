//! Grayscale conversion, row-scan face cropping and bilinear resizing.

use crate::error::{Error, Result};
use crate::grid::{GrayImage, Grid};

/// Side length of the normalised face image.
pub const FACE_SIZE: usize = 100;

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// BT.601 luminance of three equally sized channels.
pub fn to_gray(r: &Grid, g: &Grid, b: &Grid) -> Result<GrayImage> {
    let dims = (r.width(), r.height());
    if (g.width(), g.height()) != dims || (b.width(), b.height()) != dims {
        return Err(Error::Shape(format!(
            "channel dimensions differ: r {}x{}, g {}x{}, b {}x{}",
            r.width(),
            r.height(),
            g.width(),
            g.height(),
            b.width(),
            b.height()
        )));
    }
    let data = r
        .data()
        .iter()
        .zip(g.data())
        .zip(b.data())
        .map(|((&r, &g), &b)| (LUMA_R * r + LUMA_G * g + LUMA_B * b).clamp(0.0, 255.0))
        .collect();
    GrayImage::new(dims.0, dims.1, data)
}

/// Foreground mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrid {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryGrid {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Pixels at or above `threshold` become foreground.
pub fn binarize(img: &GrayImage, threshold: f64) -> BinaryGrid {
    BinaryGrid {
        width: img.width(),
        height: img.height(),
        bits: img.pixels().iter().map(|&v| v >= threshold).collect(),
    }
}

/// Column extents found by the row scans plus the retained row range.
/// Rows without foreground carry `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CropBounds {
    pub left: Vec<Option<usize>>,
    pub right: Vec<Option<usize>>,
    pub top: usize,
    pub bottom: usize,
}

impl CropBounds {
    pub fn min_left(&self) -> Option<usize> {
        self.left.iter().flatten().copied().min()
    }

    pub fn max_right(&self) -> Option<usize> {
        self.right.iter().flatten().copied().max()
    }
}

/// Binarizes the image, scans each row inward from both sides and returns the
/// bounding box of everything the scans hit.
///
/// The left half is scanned left to right and the right half right to left.
/// When a half holds no foreground in some row the scan continues into the
/// other half, so a row's entry is always its outermost foreground pixel.
pub fn scan_crop(img: &GrayImage, threshold: f64) -> Result<(GrayImage, CropBounds)> {
    let mask = binarize(img, threshold);
    let (w, h) = (mask.width, mask.height);
    let mid = w / 2;

    let mut left = Vec::with_capacity(h);
    let mut right = Vec::with_capacity(h);
    for row in 0..h {
        let first = (0..mid)
            .find(|&c| mask.get(row, c))
            .or_else(|| (mid..w).find(|&c| mask.get(row, c)));
        let last = (mid..w)
            .rev()
            .find(|&c| mask.get(row, c))
            .or_else(|| (0..mid).rev().find(|&c| mask.get(row, c)));
        left.push(first);
        right.push(last);
    }

    let top = left.iter().position(Option::is_some);
    let bottom = left.iter().rposition(Option::is_some);
    let (Some(top), Some(bottom)) = (top, bottom) else {
        return Err(Error::Crop(format!(
            "no pixel at or above threshold {threshold}"
        )));
    };
    let bounds = CropBounds {
        left,
        right,
        top,
        bottom,
    };
    // Both are Some once a foreground row exists.
    let (l, r) = (bounds.min_left().unwrap(), bounds.max_right().unwrap());
    let cropped = img.as_grid().crop(top, bottom, l, r)?;
    Ok((GrayImage::try_from(cropped)?, bounds))
}

/// 256-bin intensity histogram; real intensities are floored into bins.
pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in img.pixels() {
        hist[(v.floor() as usize).min(255)] += 1;
    }
    hist
}

/// Otsu's threshold over the 256-bin histogram.
///
/// The result `t` splits pixels into `v < t` and `v >= t`, matching
/// [`binarize`]. Candidates run over `1..=255`; ties resolve to the
/// smallest `t`.
pub fn otsu_threshold(img: &GrayImage) -> Result<u8> {
    let hist = histogram(img);
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Threshold(
            "histogram has a single occupied bin; no threshold separates it".into(),
        ));
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();

    let mut n_low = 0u64;
    let mut s_low = 0u64;
    let mut best = (0u8, -1.0f64);
    for t in 1..=255usize {
        n_low += hist[t - 1];
        s_low += (t as u64 - 1) * hist[t - 1];
        let n_high = total - n_low;
        if n_low == 0 || n_high == 0 {
            continue;
        }
        let s_high = total_sum - s_low;
        // n_low * n_high * (mean_low - mean_high)^2 on integer sums
        let cross = s_low as f64 * n_high as f64 - s_high as f64 * n_low as f64;
        let between = cross * cross / (n_low as f64 * n_high as f64);
        if between > best.1 {
            best = (t as u8, between);
        }
    }
    Ok(best.0)
}

/// Bilinear resampling with pixel-centre alignment.
pub fn resize(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Shape(format!(
            "resize target must be positive, got {out_w}x{out_h}"
        )));
    }
    let (in_w, in_h) = (img.width(), img.height());
    let sample_axis = |i: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        let scale = n_in as f64 / n_out as f64;
        let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
        let lo = src.floor() as usize;
        let hi = (lo + 1).min(n_in - 1);
        (lo, hi, src - lo as f64)
    };
    let cols: Vec<_> = (0..out_w).map(|c| sample_axis(c, in_w, out_w)).collect();
    let mut data = Vec::with_capacity(out_w * out_h);
    for r in 0..out_h {
        let (r0, r1, fy) = sample_axis(r, in_h, out_h);
        for &(c0, c1, fx) in &cols {
            let top = img.get(r0, c0) * (1.0 - fx) + img.get(r0, c1) * fx;
            let bottom = img.get(r1, c0) * (1.0 - fx) + img.get(r1, c1) * fx;
            data.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 255.0));
        }
    }
    GrayImage::new(out_w, out_h, data)
}

/// Otsu threshold, row-scan crop, then resize to `size`x`size`.
pub fn preprocess_to(img: &GrayImage, size: usize) -> Result<GrayImage> {
    let threshold = otsu_threshold(img)?;
    let (cropped, _) = scan_crop(img, f64::from(threshold))?;
    resize(&cropped, size, size)
}

/// [`preprocess_to`] at the standard 100x100 face size.
pub fn preprocess(img: &GrayImage) -> Result<GrayImage> {
    preprocess_to(img, FACE_SIZE)
}
