//! Reading and writing 8-bit PNG and binary PGM ("P5") images.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::grid::{GrayImage, Grid};
use crate::preprocess::to_gray;

/// File extensions accepted when scanning a dataset directory.
pub const IMAGE_EXTENSIONS: &[&str] = &["png", "pgm"];

pub fn is_supported_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
        .unwrap_or(false)
}

/// Decodes an image file into grayscale. Colour input goes through
/// [`to_gray`] so the luminance weights match the rest of the pipeline.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let image_err = |message: String| Error::Image {
        path: path.to_path_buf(),
        message,
    };
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        other => return Err(image_err(format!("unsupported image format {other:?}"))),
    }
    let decoded = reader.decode().map_err(|e| image_err(e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    if decoded.color().has_color() {
        let rgb = decoded.to_rgb8();
        let channel = |k: usize| -> Result<Grid> {
            Grid::new(
                width,
                height,
                rgb.pixels().map(|p| f64::from(p.0[k])).collect(),
            )
        };
        to_gray(&channel(0)?, &channel(1)?, &channel(2)?)
    } else {
        let luma = decoded.to_luma8();
        GrayImage::from_u8(width, height, luma.as_raw())
    }
}

/// Encodes a binary PGM. Intensities are rounded to 8 bits here and
/// nowhere else.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_u8());
    out
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_pgm(img))
        .map_err(|e| Error::io(path, e))
}

pub fn write_png(path: &Path, img: &GrayImage) -> Result<()> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.to_u8())
        .ok_or_else(|| Error::Shape("pixel buffer does not match dimensions".into()))?;
    DynamicImage::ImageLuma8(buf)
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Writes PNG or PGM according to the path's extension.
pub fn write_gray(path: &Path, img: &GrayImage) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("png") => write_png(path, img),
        Some(e) if e.eq_ignore_ascii_case("pgm") => write_pgm(path, img),
        _ => Err(Error::Image {
            path: path.to_path_buf(),
            message: "expected a .png or .pgm extension".into(),
        }),
    }
}

/// Affinely maps a grid's range onto `[0, 255]` for viewing. Constant grids
/// map to zero.
pub fn rescale_for_display(grid: &Grid) -> GrayImage {
    let (lo, hi) = grid
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    GrayImage::from_grid_clamped(grid.map(|v| {
        if span > 0.0 {
            (v - lo) / span * 255.0
        } else {
            0.0
        }
    }))
}
