//! End-to-end feature extraction and the enrol / evaluate drivers.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::{DatasetManifest, Split, SplitItem};
use crate::dbc::{extract_features_with, DbcConfig, FeatureVector};
use crate::dwt::{haar_dwt2, SubbandSet};
use crate::error::{Error, Result};
use crate::eval::{sweep, EvalReport, Probe};
use crate::grid::GrayImage;
use crate::imageio::{read_gray, rescale_for_display, write_pgm};
use crate::matcher::{Gallery, GalleryEntry};
use crate::preprocess::preprocess_to;

/// Fixed geometry of the recognition pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    /// Side of the normalised face image.
    pub image_size: usize,
    /// Side of a DBC cell on the LL band.
    pub cell_size: usize,
    /// Derivative distance of the directional codes.
    pub distance: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            image_size: 100,
            cell_size: 5,
            distance: 1,
        }
    }
}

impl PipelineConfig {
    pub fn dbc(&self) -> DbcConfig {
        DbcConfig {
            grid_side: self.image_size / 2,
            cell_size: self.cell_size,
            distance: self.distance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_size == 0 || !self.image_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "image size {} must be positive and even",
                self.image_size
            )));
        }
        if self.cell_size == 0 || !(self.image_size / 2).is_multiple_of(self.cell_size) {
            return Err(Error::Config(format!(
                "half the image size ({}) is not divisible by cell size {}",
                self.image_size / 2,
                self.cell_size
            )));
        }
        self.dbc().validate()
    }

    pub fn feature_len(&self) -> usize {
        self.dbc().feature_len()
    }
}

/// Validated pipeline: preprocess, Haar LL band, directional codes.
#[derive(Debug, Clone, Copy)]
pub struct Pipeline {
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn subbands(&self, img: &GrayImage) -> Result<SubbandSet> {
        let face = preprocess_to(img, self.config.image_size)?;
        haar_dwt2(face.as_grid())
    }

    pub fn features(&self, img: &GrayImage) -> Result<FeatureVector> {
        let bands = self.subbands(img)?;
        extract_features_with(&bands.ll, &self.config.dbc())
    }

    pub fn features_from_path(&self, path: &Path) -> Result<FeatureVector> {
        self.features(&read_gray(path)?)
    }

    /// Extracts features for every item in parallel; results keep item order.
    pub fn extract_items(
        &self,
        manifest: &DatasetManifest,
        items: &[SplitItem],
    ) -> Vec<(SplitItem, Result<FeatureVector>)> {
        items
            .par_iter()
            .map(|item| {
                let path = manifest.resolve(&item.image_path);
                let features = self.features_from_path(&path).map_err(|e| Error::Image {
                    path: path.clone(),
                    message: e.to_string(),
                });
                (item.clone(), features)
            })
            .collect()
    }

    fn extract_probes(
        &self,
        manifest: &DatasetManifest,
        items: &[SplitItem],
        failures: &mut Vec<Failure>,
    ) -> Result<Vec<Probe>> {
        let mut probes = Vec::with_capacity(items.len());
        for (item, result) in self.extract_items(manifest, items) {
            match result {
                Ok(features) => probes.push(Probe {
                    image_id: image_id(&item.image_path),
                    subject_id: item.subject_id,
                    features,
                }),
                Err(error) => failures.push(Failure {
                    path: manifest.resolve(&item.image_path),
                    error,
                }),
            }
        }
        Ok(probes)
    }

    /// Builds the gallery of a split. Images that fail are collected in
    /// `failures` and left out.
    pub fn enroll(&self, manifest: &DatasetManifest, split: &Split) -> Result<Enrollment> {
        let mut failures = Vec::new();
        let probes = self.extract_probes(manifest, &split.gallery, &mut failures)?;
        let entries = probes
            .into_iter()
            .map(|p| GalleryEntry {
                subject_id: p.subject_id,
                image_id: p.image_id,
                features: p.features,
            })
            .collect();
        Ok(Enrollment {
            gallery: Gallery::new(entries)?,
            failures,
        })
    }

    /// Enrols the gallery in memory and sweeps `thresholds` over the probes.
    pub fn evaluate(
        &self,
        manifest: &DatasetManifest,
        split: &Split,
        thresholds: &[f64],
    ) -> Result<Evaluation> {
        let Enrollment {
            gallery,
            mut failures,
        } = self.enroll(manifest, split)?;
        if gallery.is_empty() {
            return Err(Error::Eval("gallery is empty after enrolment".into()));
        }
        let genuine = self.extract_probes(manifest, &split.genuine_probes, &mut failures)?;
        let impostor = self.extract_probes(manifest, &split.impostor_probes, &mut failures)?;
        let report = sweep(&genuine, &impostor, &gallery, thresholds)?;
        Ok(Evaluation {
            report,
            gallery,
            failures,
        })
    }
}

/// An image that could not be turned into features.
#[derive(Debug)]
pub struct Failure {
    pub path: PathBuf,
    pub error: Error,
}

#[derive(Debug)]
pub struct Enrollment {
    pub gallery: Gallery,
    pub failures: Vec<Failure>,
}

#[derive(Debug)]
pub struct Evaluation {
    pub report: EvalReport,
    pub gallery: Gallery,
    pub failures: Vec<Failure>,
}

/// Gallery image id: the file name within the subject directory.
pub fn image_id(image_path: &str) -> String {
    image_path
        .rsplit('/')
        .next()
        .unwrap_or(image_path)
        .to_string()
}

/// Writes each subband as `<stem>_<band>.pgm`, rescaled to `[0, 255]`.
pub fn dump_subbands(bands: &SubbandSet, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    bands
        .bands()
        .iter()
        .map(|(name, grid)| {
            let path = dir.join(format!("{stem}_{name}.pgm"));
            write_pgm(&path, &rescale_for_display(grid))?;
            Ok(path)
        })
        .collect()
}
