//! Nearest-neighbour identification against an enrolled gallery.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::dbc::FeatureVector;
use crate::error::{Error, Result};

/// First line of a gallery file.
pub const GALLERY_HEADER: &str = "dbcfr-gallery v1";

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry {
    pub subject_id: String,
    pub image_id: String,
    pub features: FeatureVector,
}

/// Enrolled feature vectors in enrolment order. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gallery {
    entries: Vec<GalleryEntry>,
}

fn check_id(kind: &str, id: &str) -> Result<()> {
    if id.is_empty() || id.contains([',', '\n', '\r']) {
        return Err(Error::Gallery(format!(
            "{kind} {id:?} must be non-empty without commas or line breaks"
        )));
    }
    Ok(())
}

impl Gallery {
    pub fn new(entries: Vec<GalleryEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        let dim = entries.first().map(|e| e.features.len());
        for e in &entries {
            check_id("subject id", &e.subject_id)?;
            check_id("image id", &e.image_id)?;
            if !seen.insert((e.subject_id.as_str(), e.image_id.as_str())) {
                return Err(Error::Gallery(format!(
                    "duplicate entry ({}, {})",
                    e.subject_id, e.image_id
                )));
            }
            if Some(e.features.len()) != dim {
                return Err(Error::Gallery(format!(
                    "entry ({}, {}) has {} coefficients, expected {}",
                    e.subject_id,
                    e.image_id,
                    e.features.len(),
                    dim.unwrap_or(0)
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[GalleryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn feature_len(&self) -> Option<usize> {
        self.entries.first().map(|e| e.features.len())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(GALLERY_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&e.subject_id);
            out.push(',');
            out.push_str(&e.image_id);
            out.push(',');
            out.push_str(&e.features.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == GALLERY_HEADER => {}
            other => {
                return Err(Error::Gallery(format!(
                    "expected header {GALLERY_HEADER:?}, found {other:?}"
                )))
            }
        }
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (Some(subject), Some(image)) = (fields.next(), fields.next()) else {
                return Err(Error::Gallery(format!("line {}: missing ids", n + 2)));
            };
            let features = FeatureVector::parse_csv(fields)
                .map_err(|e| Error::Gallery(format!("line {}: {e}", n + 2)))?;
            entries.push(GalleryEntry {
                subject_id: subject.to_string(),
                image_id: image.to_string(),
                features,
            });
        }
        Self::new(entries)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

pub fn euclidean(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "feature lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub best_subject: String,
    pub best_image: String,
    pub distance: f64,
    pub accepted: bool,
}

/// Closest entry without a threshold decision: (index, distance).
/// Ties go to the earliest entry.
pub fn nearest(probe: &FeatureVector, gallery: &Gallery) -> Result<(usize, f64)> {
    if gallery.is_empty() {
        return Err(Error::Gallery("gallery is empty".into()));
    }
    let mut best = (0, f64::INFINITY);
    for (k, entry) in gallery.entries().iter().enumerate() {
        let dist = euclidean(probe, &entry.features)?;
        if dist < best.1 {
            best = (k, dist);
        }
    }
    Ok(best)
}

/// Accepts when the nearest entry lies within `threshold` (inclusive).
pub fn identify(probe: &FeatureVector, gallery: &Gallery, threshold: f64) -> Result<MatchResult> {
    let (k, distance) = nearest(probe, gallery)?;
    let entry = &gallery.entries()[k];
    Ok(MatchResult {
        best_subject: entry.subject_id.clone(),
        best_image: entry.image_id.clone(),
        distance,
        accepted: distance <= threshold,
    })
}
