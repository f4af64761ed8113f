//! Block-level comparison of score series with physiological features.
//!
//! Scores and physiology are cut into the same fixed-length blocks over
//! their common duration. Each block gets the mean mental effort and stress
//! level, the LF/HF ratio, the mean SCL and the mean SCR peak amplitude.
//! Spearman's r_s is then computed for the three pairings
//! (mental_effort, LF/HF), (stress_level, SCL) and (stress_level, SCR).

use serde::Serialize;

use crate::blocks::block_ranges;
use crate::eda::{eda_decompose, EdaSeries};
use crate::error::PhysioError;
use crate::rr::{lf_hf_ratio, RrSeries, MIN_SPAN_S};
use crate::spearman::spearman;

/// Time-stamped score samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSeries {
    pub t: Vec<f64>,
    pub mental_effort: Vec<f64>,
    pub stress_level: Vec<f64>,
}

impl ScoreSeries {
    pub fn duration(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSummary {
    /// 1-based.
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub mental_effort: f64,
    pub stress_level: f64,
    pub lf_hf: f64,
    pub scl_mean: f64,
    pub scr_peak_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub score: &'static str,
    pub feature: &'static str,
    /// `None` when the correlation is undefined; see `error`.
    pub r_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub block_length: f64,
    pub overlap: f64,
    pub blocks: Vec<BlockSummary>,
    pub correlations: Vec<Correlation>,
}

/// Mean over samples in `[start, end)` (closed at `end` for the last block).
/// Accumulating offsets from the first sample keeps constant series exact, so
/// constant scores give identical block means and a zero-variance result.
fn mean_in(t: &[f64], x: &[f64], start: f64, end: f64, last: bool) -> f64 {
    let mut values = t
        .iter()
        .zip(x)
        .filter(|(&ti, _)| ti >= start && (ti < end || (last && ti <= end)))
        .map(|(_, &v)| v);
    let Some(first) = values.next() else {
        return f64::NAN;
    };
    let (sum, n) = values.fold((0.0, 1usize), |(s, n), v| (s + (v - first), n + 1));
    first + sum / n as f64
}

/// Summarises blocks over the common duration and correlates them.
///
/// Blocks shorter than the LF/HF minimum span use an RR window of that span
/// ending at the block end, or starting at 0 for the earliest blocks.
/// Fewer than two common blocks is [`PhysioError::SeriesTooShort`].
pub fn validate_blocks(
    scores: &ScoreSeries,
    rr: &RrSeries,
    eda: &EdaSeries,
    block_length: f64,
) -> Result<ValidationReport, PhysioError> {
    if scores.t.len() != scores.mental_effort.len() || scores.t.len() != scores.stress_level.len() {
        return Err(PhysioError::LengthMismatch {
            left: scores.t.len(),
            right: scores.mental_effort.len().min(scores.stress_level.len()),
        });
    }
    if rr.duration() + 1e-9 < MIN_SPAN_S {
        return Err(PhysioError::SeriesTooShort {
            needed: MIN_SPAN_S,
            got: rr.duration(),
        });
    }
    let overlap = scores.duration().min(rr.duration()).min(eda.start() + eda.duration());
    let ranges = block_ranges(overlap, block_length);
    if ranges.len() < 2 {
        return Err(PhysioError::SeriesTooShort {
            needed: 2.0 * block_length,
            got: overlap.max(0.0),
        });
    }
    let decomposition = eda_decompose(eda)?;

    let mut blocks = Vec::with_capacity(ranges.len());
    for (i, &(start, end)) in ranges.iter().enumerate() {
        let last = i + 1 == ranges.len();
        let (rr_start, rr_end) = if end - start < MIN_SPAN_S {
            let lo = (end - MIN_SPAN_S).max(0.0);
            (lo, lo + MIN_SPAN_S)
        } else {
            (start, end)
        };
        let lf_hf = match rr.slice(rr_start, rr_end) {
            Some(s) => lf_hf_ratio(&s)?.ratio,
            None => f64::NAN,
        };
        let (scl_mean, scr_peak_mean) = decomposition.window_features(start, end).unwrap_or((f64::NAN, f64::NAN));
        blocks.push(BlockSummary {
            index: i + 1,
            start,
            end,
            mental_effort: mean_in(&scores.t, &scores.mental_effort, start, end, last),
            stress_level: mean_in(&scores.t, &scores.stress_level, start, end, last),
            lf_hf,
            scl_mean,
            scr_peak_mean,
        });
    }

    let column = |f: fn(&BlockSummary) -> f64| -> Vec<f64> { blocks.iter().map(f).collect() };
    type Column = fn(&BlockSummary) -> f64;
    let pairs: [(&'static str, &'static str, Column, Column); 3] = [
        ("mental_effort", "lf_hf", |b| b.mental_effort, |b| b.lf_hf),
        ("stress_level", "scl_mean", |b| b.stress_level, |b| b.scl_mean),
        ("stress_level", "scr_peak_mean", |b| b.stress_level, |b| b.scr_peak_mean),
    ];
    let correlations = pairs
        .iter()
        .map(|&(score, feature, fs, ff)| {
            let (x, y) = (column(fs), column(ff));
            let result = if x.iter().chain(&y).any(|v| !v.is_finite()) {
                Err(PhysioError::InvalidValue {
                    index: x.iter().zip(&y).position(|(a, b)| !a.is_finite() || !b.is_finite()).unwrap_or(0),
                    value: f64::NAN,
                })
            } else {
                spearman(&x, &y)
            };
            match result {
                Ok(r) => Correlation {
                    score,
                    feature,
                    r_s: Some(r),
                    error: None,
                },
                Err(e) => Correlation {
                    score,
                    feature,
                    r_s: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    Ok(ValidationReport {
        block_length,
        overlap,
        blocks,
        correlations,
    })
}
