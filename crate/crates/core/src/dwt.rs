//! One-level orthonormal 2D Haar transform.
//!
//! Analysis runs along rows first and then along the columns of each half:
//!
//! ```text
//! a = (x[2k] + x[2k+1]) / sqrt(2)      d = (x[2k] - x[2k+1]) / sqrt(2)
//! ```
//!
//! Naming follows (row filter, column filter): `ll` is low/low, `hl` takes the
//! row-direction difference (horizontal detail), `lh` the column-direction
//! difference (vertical detail) and `hh` both.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// The four half-size subbands of a one-level decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub ll: Grid,
    pub lh: Grid,
    pub hl: Grid,
    pub hh: Grid,
    pub source_width: usize,
    pub source_height: usize,
}

impl SubbandSet {
    pub fn bands(&self) -> [(&'static str, &Grid); 4] {
        [
            ("ll", &self.ll),
            ("lh", &self.lh),
            ("hl", &self.hl),
            ("hh", &self.hh),
        ]
    }

    pub fn energy(&self) -> f64 {
        self.bands()
            .iter()
            .map(|(_, g)| g.data().iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

pub fn haar_dwt2(img: &Grid) -> Result<SubbandSet> {
    let (w, h) = (img.width(), img.height());
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::Shape(format!(
            "Haar transform needs even dimensions, got {w}x{h}"
        )));
    }
    let (hw, hh) = (w / 2, h / 2);
    let mut ll = vec![0.0; hw * hh];
    let mut lh = vec![0.0; hw * hh];
    let mut hl = vec![0.0; hw * hh];
    let mut hh_band = vec![0.0; hw * hh];

    for r in 0..hh {
        let upper = img.row(2 * r);
        let lower = img.row(2 * r + 1);
        for c in 0..hw {
            let (a, b) = (upper[2 * c], upper[2 * c + 1]);
            let (cc, d) = (lower[2 * c], lower[2 * c + 1]);
            // the row and column passes each scale by 1/sqrt(2); fold both into 1/2
            let (row_sum_u, row_diff_u) = (a + b, a - b);
            let (row_sum_l, row_diff_l) = (cc + d, cc - d);
            let k = r * hw + c;
            ll[k] = (row_sum_u + row_sum_l) * 0.5;
            lh[k] = (row_sum_u - row_sum_l) * 0.5;
            hl[k] = (row_diff_u + row_diff_l) * 0.5;
            hh_band[k] = (row_diff_u - row_diff_l) * 0.5;
        }
    }

    Ok(SubbandSet {
        ll: Grid::new(hw, hh, ll)?,
        lh: Grid::new(hw, hh, lh)?,
        hl: Grid::new(hw, hh, hl)?,
        hh: Grid::new(hw, hh, hh_band)?,
        source_width: w,
        source_height: h,
    })
}

pub fn haar_idwt2(sb: &SubbandSet) -> Result<Grid> {
    let (hw, hh) = (sb.ll.width(), sb.ll.height());
    for (name, band) in sb.bands() {
        if (band.width(), band.height()) != (hw, hh) {
            return Err(Error::Shape(format!(
                "subband {name} is {}x{}, expected {hw}x{hh}",
                band.width(),
                band.height()
            )));
        }
    }
    if (sb.source_width, sb.source_height) != (2 * hw, 2 * hh) {
        return Err(Error::Shape(format!(
            "source {}x{} does not match {hw}x{hh} subbands",
            sb.source_width, sb.source_height
        )));
    }
    let w = 2 * hw;
    let mut out = vec![0.0; w * 2 * hh];
    for r in 0..hh {
        for c in 0..hw {
            let k = r * hw + c;
            let (ll, lh) = (sb.ll.data()[k], sb.lh.data()[k]);
            let (hl, hh) = (sb.hl.data()[k], sb.hh.data()[k]);
            let (upper_sum, lower_sum) = (ll + lh, ll - lh);
            let (upper_diff, lower_diff) = (hl + hh, hl - hh);
            let up = 2 * r * w;
            let lo = up + w;
            out[up + 2 * c] = (upper_sum + upper_diff) * 0.5;
            out[up + 2 * c + 1] = (upper_sum - upper_diff) * 0.5;
            out[lo + 2 * c] = (lower_sum + lower_diff) * 0.5;
            out[lo + 2 * c + 1] = (lower_sum - lower_diff) * 0.5;
        }
    }
    Grid::new(w, 2 * hh, out)
}
