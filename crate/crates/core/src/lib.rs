//! Face identification from directional binary codes of the Haar LL band.
//!
//! The pipeline normalises a face image (grayscale, row-scan crop, bilinear
//! resize to 100x100), takes a one-level Haar transform, tiles the 50x50 LL
//! band into 5x5 cells and describes each cell by the average of its four
//! directional binary codes. Probes are identified by Euclidean nearest
//! neighbour against an enrolled gallery, and a threshold sweep yields
//! FRR, FAR, recognition rate and the equal error rate.
//!
//! ```
//! use dbcfr::{extract_features, haar_dwt2, Grid};
//!
//! let face = Grid::from_fn(100, 100, |r, c| ((r * 7 + c * 3) % 255) as f64).unwrap();
//! let bands = haar_dwt2(&face).unwrap();
//! let features = extract_features(&bands.ll, 1).unwrap();
//! assert_eq!(features.len(), 100);
//! ```

pub mod dataset;
pub mod dbc;
pub mod dwt;
pub mod error;
pub mod eval;
pub mod grid;
pub mod imageio;
pub mod matcher;
pub mod pipeline;
pub mod preprocess;

pub use dataset::{
    load_manifest, make_split, open_dataset, synth_dataset, DatasetManifest, Layout, Split,
    SplitItem, SubjectRecord, SynthParams,
};
pub use dbc::{
    binarize_derivative, cell_code, directional_derivative, extract_features,
    extract_features_with, partition_cells, Cell, DbcConfig, Direction, DirectionalCode,
    FeatureVector,
};
pub use dwt::{haar_dwt2, haar_idwt2, SubbandSet};
pub use error::{Error, Result};
pub use eval::{
    equal_error_rate, run_genuine_pass, run_impostor_pass, sweep, EqualErrorRate, EvalReport,
    GenuineOutcome, Probe, SweepRow,
};
pub use grid::{GrayImage, Grid};
pub use matcher::{euclidean, identify, Gallery, GalleryEntry, MatchResult};
pub use pipeline::{Pipeline, PipelineConfig};
pub use preprocess::{
    binarize, otsu_threshold, preprocess, resize, scan_crop, to_gray, CropBounds,
};
