//! Offline physiological signal processing for validating online
//! cognitive-load scores.
//!
//! The toolkit covers five steps:
//!
//! * [`rr`]: artifact rejection on RR intervals and LF/HF band powers from a
//!   Welch periodogram of the resampled tachogram.
//! * [`eda`]: zero-phase low-pass filtering of skin conductance and a
//!   median-baseline split into tonic (SCL) and phasic (SCR) parts.
//! * [`blocks`]: fixed-length block segmentation of time series.
//! * [`spearman`]: rank correlation with mid-rank tie handling.
//! * [`validate`]: block means of scores and features, and their correlations.
//!
//! The HRV and EDA routines are deliberately simple stand-ins for the
//! commercial and MATLAB tools usually applied to this data. The EDA split in
//! particular is a median baseline, not a deconvolution model.

pub mod blocks;
pub mod eda;
pub mod error;
pub mod filter;
pub mod rr;
pub mod spearman;
pub mod spline;
pub mod validate;

pub use blocks::{block_ranges, segment_blocks, Block, DEFAULT_BLOCK_LENGTH};
pub use eda::{eda_decompose, EdaDecomposition, EdaSeries, ScrPeak};
pub use error::PhysioError;
pub use rr::{lf_hf_ratio, HrvBands, RrSeries};
pub use spearman::{mid_ranks, spearman};
pub use validate::{validate_blocks, BlockSummary, Correlation, ScoreSeries, ValidationReport};
