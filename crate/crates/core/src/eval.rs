//! Threshold sweep over genuine and impostor probes: FRR, FAR, recognition
//! rate and the equal error rate.
//!
//! Each genuine probe ends in exactly one of three outcomes at a threshold:
//! rejected (nearest distance above it), matched (accepted with the right
//! subject) or mismatched (accepted with the wrong subject). An impostor
//! probe is a false accept whenever its nearest distance is within the
//! threshold.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dbc::FeatureVector;
use crate::error::{Error, Result};
use crate::matcher::{nearest, Gallery};

/// Default sweep grid: 0 to 1.2 in steps of 0.05.
pub const DEFAULT_GRID: (f64, f64, f64) = (0.0, 1.2, 0.05);

pub const CSV_HEADER: &str = "threshold,frr,far,rr_percent";

/// A query image with its extracted features.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub subject_id: String,
    pub image_id: String,
    pub features: FeatureVector,
}

/// A probe reduced to its nearest gallery neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredProbe {
    pub subject_id: String,
    pub best_subject: String,
    pub distance: f64,
}

/// Nearest-neighbour search for every probe, in probe order.
pub fn score_probes(probes: &[Probe], gallery: &Gallery) -> Result<Vec<ScoredProbe>> {
    probes
        .par_iter()
        .map(|p| {
            let (k, distance) = nearest(&p.features, gallery)?;
            Ok(ScoredProbe {
                subject_id: p.subject_id.clone(),
                best_subject: gallery.entries()[k].subject_id.clone(),
                distance,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenuineOutcome {
    pub matches: usize,
    pub mismatches: usize,
    pub rejections: usize,
}

impl GenuineOutcome {
    pub fn total(&self) -> usize {
        self.matches + self.mismatches + self.rejections
    }

    pub fn frr(&self) -> f64 {
        self.rejections as f64 / self.total() as f64
    }

    pub fn mismatch_rate(&self) -> f64 {
        self.mismatches as f64 / self.total() as f64
    }

    pub fn rr_percent(&self) -> f64 {
        100.0 * self.matches as f64 / self.total() as f64
    }
}

pub fn genuine_outcome(scored: &[ScoredProbe], threshold: f64) -> Result<GenuineOutcome> {
    if scored.is_empty() {
        return Err(Error::Eval("no genuine probes".into()));
    }
    let mut out = GenuineOutcome::default();
    for s in scored {
        if s.distance > threshold {
            out.rejections += 1;
        } else if s.best_subject == s.subject_id {
            out.matches += 1;
        } else {
            out.mismatches += 1;
        }
    }
    Ok(out)
}

pub fn false_accept_rate(scored: &[ScoredProbe], threshold: f64) -> Result<f64> {
    if scored.is_empty() {
        return Err(Error::Eval(
            "no impostor probes; leave at least one subject unenrolled".into(),
        ));
    }
    let accepted = scored.iter().filter(|s| s.distance <= threshold).count();
    Ok(accepted as f64 / scored.len() as f64)
}

pub fn run_genuine_pass(
    probes: &[Probe],
    gallery: &Gallery,
    threshold: f64,
) -> Result<GenuineOutcome> {
    if probes.is_empty() {
        return Err(Error::Eval("no genuine probes".into()));
    }
    genuine_outcome(&score_probes(probes, gallery)?, threshold)
}

/// FAR of impostor probes at one threshold.
pub fn run_impostor_pass(probes: &[Probe], gallery: &Gallery, threshold: f64) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::Eval(
            "no impostor probes; leave at least one subject unenrolled".into(),
        ));
    }
    false_accept_rate(&score_probes(probes, gallery)?, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub frr: f64,
    pub far: f64,
    pub rr_percent: f64,
}

/// Crossing point of the FRR and FAR curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualErrorRate {
    pub rate: f64,
    pub threshold: f64,
}

/// Locates the first sign change of `frr - far` and interpolates both curves
/// linearly between the two bracketing thresholds. A sample where the curves
/// are exactly equal is returned as is. `None` when they never meet.
pub fn equal_error_rate(thresholds: &[f64], frr: &[f64], far: &[f64]) -> Option<EqualErrorRate> {
    let n = thresholds.len().min(frr.len()).min(far.len());
    let gap = |k: usize| frr[k] - far[k];
    for k in 0..n {
        if gap(k) == 0.0 {
            return Some(EqualErrorRate {
                rate: frr[k],
                threshold: thresholds[k],
            });
        }
        if k > 0 && (gap(k - 1) > 0.0) != (gap(k) > 0.0) {
            let (g0, g1) = (gap(k - 1), gap(k));
            let frac = g0 / (g0 - g1);
            return Some(EqualErrorRate {
                rate: frr[k - 1] + frac * (frr[k] - frr[k - 1]),
                threshold: thresholds[k - 1] + frac * (thresholds[k] - thresholds[k - 1]),
            });
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalCounts {
    pub genuine_probes: usize,
    pub impostor_probes: usize,
    pub gallery_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<SweepRow>,
    pub eer: Option<EqualErrorRate>,
    pub counts: EvalCounts,
}

impl EvalReport {
    pub fn eer_line(&self) -> String {
        match self.eer {
            Some(e) => format!("# eer={} at threshold={}", e.rate, e.threshold),
            None => "# eer=undefined at threshold=undefined".to_string(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.threshold, r.frr, r.far, r.rr_percent);
        }
        out.push_str(&self.eer_line());
        out.push('\n');
        if self.eer.is_none() {
            out.push_str("# warning: FRR and FAR do not cross within the threshold grid\n");
        }
        out
    }

    /// Two-column `threshold value` plot data for the FRR curve.
    pub fn frr_curve(&self) -> String {
        self.curve("frr", |r| r.frr)
    }

    pub fn far_curve(&self) -> String {
        self.curve("far", |r| r.far)
    }

    fn curve(&self, name: &str, value: impl Fn(&SweepRow) -> f64) -> String {
        let mut out = format!("# threshold {name}\n");
        for r in &self.rows {
            let _ = writeln!(out, "{} {}", r.threshold, value(r));
        }
        out
    }
}

/// `start, start + step, ...` up to `stop` inclusive. Points are computed by
/// index and rounded to 1e-9 so `0.6` prints as `0.6`.
pub fn threshold_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::Config(format!(
            "invalid threshold grid start={start} stop={stop} step={step}"
        )));
    }
    let steps = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=steps)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::Eval("threshold list is empty".into()));
    }
    if thresholds.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Eval(
            "thresholds must be finite and non-negative".into(),
        ));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Eval("thresholds must be strictly increasing".into()));
    }
    Ok(())
}

/// Sweep already-scored probes.
pub fn sweep_scored(
    genuine: &[ScoredProbe],
    impostor: &[ScoredProbe],
    gallery_size: usize,
    thresholds: &[f64],
) -> Result<EvalReport> {
    check_thresholds(thresholds)?;
    let rows = thresholds
        .iter()
        .map(|&t| {
            let g = genuine_outcome(genuine, t)?;
            Ok(SweepRow {
                threshold: t,
                frr: g.frr(),
                far: false_accept_rate(impostor, t)?,
                rr_percent: g.rr_percent(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let frr: Vec<f64> = rows.iter().map(|r| r.frr).collect();
    let far: Vec<f64> = rows.iter().map(|r| r.far).collect();
    let eer = equal_error_rate(thresholds, &frr, &far);
    Ok(EvalReport {
        rows,
        eer,
        counts: EvalCounts {
            genuine_probes: genuine.len(),
            impostor_probes: impostor.len(),
            gallery_size,
        },
    })
}

pub fn sweep(
    genuine: &[Probe],
    impostor: &[Probe],
    gallery: &Gallery,
    thresholds: &[f64],
) -> Result<EvalReport> {
    check_thresholds(thresholds)?;
    let g = score_probes(genuine, gallery)?;
    let i = score_probes(impostor, gallery)?;
    sweep_scored(&g, &i, gallery.len(), thresholds)
}
