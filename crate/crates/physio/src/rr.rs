//! RR-interval handling and frequency-domain HRV.
//!
//! The tachogram is resampled at 4 Hz with a natural cubic spline, mean
//! detrended, and fed to a Welch periodogram (120 s Hann segments, 50 %
//! overlap). Band edges follow the usual short-term HRV conventions:
//! LF = [0.04, 0.15) Hz, HF = [0.15, 0.40] Hz.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::spline::CubicSpline;
use crate::PhysioError;

pub const RESAMPLE_HZ: f64 = 4.0;
pub const WELCH_SEGMENT_S: f64 = 120.0;
pub const MIN_SPAN_S: f64 = 120.0;
pub const LF_BAND: (f64, f64) = (0.04, 0.15);
pub const HF_BAND: (f64, f64) = (0.15, 0.40);

/// Accepted physiological interval range, seconds (exclusive bounds).
pub const RR_RANGE: (f64, f64) = (0.25, 3.0);
/// Maximum relative change from the previous accepted interval.
pub const MAX_RELATIVE_STEP: f64 = 0.25;

/// RR intervals after artifact rejection, each tagged with the time of the
/// beat that closes it.
#[derive(Debug, Clone, PartialEq)]
pub struct RrSeries {
    intervals: Vec<f64>,
    beat_times: Vec<f64>,
    rejected: usize,
    duration: f64,
}

impl RrSeries {
    /// Builds a series from raw intervals whose first beat is at `t = 0`.
    ///
    /// Intervals outside [`RR_RANGE`] or differing from the previous accepted
    /// interval by more than [`MAX_RELATIVE_STEP`] are dropped; the time axis
    /// still advances by the dropped interval.
    pub fn from_intervals(raw: &[f64]) -> Result<Self, PhysioError> {
        let mut intervals = Vec::with_capacity(raw.len());
        let mut beat_times = Vec::with_capacity(raw.len());
        let mut clock = 0.0;
        let mut rejected = 0;
        for (index, &rr) in raw.iter().enumerate() {
            if !rr.is_finite() || rr <= 0.0 {
                return Err(PhysioError::InvalidValue { index, value: rr });
            }
            clock += rr;
            let in_range = rr > RR_RANGE.0 && rr < RR_RANGE.1;
            let smooth = intervals
                .last()
                .is_none_or(|&prev: &f64| (rr - prev).abs() <= MAX_RELATIVE_STEP * prev);
            if in_range && smooth {
                intervals.push(rr);
                beat_times.push(clock);
            } else {
                rejected += 1;
            }
        }
        if intervals.is_empty() {
            return Err(PhysioError::AllArtifacts);
        }
        Ok(Self {
            intervals,
            beat_times,
            rejected,
            duration: clock,
        })
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    pub fn beat_times(&self) -> &[f64] {
        &self.beat_times
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Total recording time including rejected intervals.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Sub-series of beats falling in `[start, end)`. The duration of the
    /// slice is `end - start` clipped to the recording.
    pub fn slice(&self, start: f64, end: f64) -> Option<Self> {
        let lo = self.beat_times.partition_point(|&t| t < start);
        let hi = self.beat_times.partition_point(|&t| t < end);
        if lo >= hi {
            return None;
        }
        Some(Self {
            intervals: self.intervals[lo..hi].to_vec(),
            beat_times: self.beat_times[lo..hi].to_vec(),
            rejected: 0,
            duration: end.min(self.duration) - start.max(0.0),
        })
    }
}

/// Band powers in s^2 and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrvBands {
    pub lf: f64,
    pub hf: f64,
    pub ratio: f64,
}

/// LF/HF ratio of an RR series spanning at least [`MIN_SPAN_S`] seconds.
pub fn lf_hf_ratio(rr: &RrSeries) -> Result<HrvBands, PhysioError> {
    if rr.duration + 1e-9 < MIN_SPAN_S {
        return Err(PhysioError::SeriesTooShort {
            needed: MIN_SPAN_S,
            got: rr.duration,
        });
    }
    if rr.intervals.len() < 2 {
        return Err(PhysioError::TooFewSamples {
            needed: 2,
            got: rr.intervals.len(),
        });
    }

    let spline = CubicSpline::natural(&rr.beat_times, &rr.intervals)?;
    let t0 = rr.beat_times[0];
    let span = rr.beat_times[rr.beat_times.len() - 1] - t0;
    let count = (span * RESAMPLE_HZ).floor() as usize + 1;
    let mut tachogram = spline.resample(t0, 1.0 / RESAMPLE_HZ, count);
    let mean = tachogram.iter().sum::<f64>() / count as f64;
    tachogram.iter_mut().for_each(|v| *v -= mean);

    let (freqs, psd) = welch(&tachogram, RESAMPLE_HZ, (WELCH_SEGMENT_S * RESAMPLE_HZ) as usize);
    let lf = band_power(&freqs, &psd, LF_BAND, false);
    let hf = band_power(&freqs, &psd, HF_BAND, true);
    Ok(HrvBands {
        lf,
        hf,
        ratio: lf / hf,
    })
}

fn band_power(freqs: &[f64], psd: &[f64], (lo, hi): (f64, f64), closed: bool) -> f64 {
    let df = if freqs.len() > 1 { freqs[1] - freqs[0] } else { 0.0 };
    freqs
        .iter()
        .zip(psd)
        .filter(|(&f, _)| f >= lo && if closed { f <= hi } else { f < hi })
        .map(|(_, p)| p * df)
        .sum()
}

/// One-sided Welch PSD estimate with a Hann window and 50 % overlap. When the
/// input is shorter than `segment`, a single segment spanning the whole input
/// is used.
pub fn welch(x: &[f64], rate: f64, segment: usize) -> (Vec<f64>, Vec<f64>) {
    let seg = segment.min(x.len()).max(2);
    let step = (seg / 2).max(1);
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / seg as f64).cos())
        .collect();
    let norm = rate * window.iter().map(|w| w * w).sum::<f64>();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(seg);
    let bins = seg / 2 + 1;
    let mut psd = vec![0.0; bins];
    let mut segments = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); seg];

    let mut start = 0;
    while start + seg <= x.len() {
        let chunk = &x[start..start + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        for ((b, v), w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, p) in psd.iter_mut().enumerate() {
            let scale = if k == 0 || (seg.is_multiple_of(2) && k == seg / 2) { 1.0 } else { 2.0 };
            *p += scale * buf[k].norm_sqr() / norm;
        }
        segments += 1;
        start += step;
    }
    psd.iter_mut().for_each(|p| *p /= segments as f64);
    let freqs = (0..bins).map(|k| k as f64 * rate / seg as f64).collect();
    (freqs, psd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Beat-to-beat intervals from a continuous RR(t) profile.
    fn intervals_from(profile: impl Fn(f64) -> f64, duration: f64) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = Vec::new();
        while t < duration {
            let rr = profile(t);
            out.push(rr);
            t += rr;
        }
        out
    }

    #[test]
    fn artifact_rejection_rules() {
        let rr = RrSeries::from_intervals(&[0.8, 0.81, 0.2, 0.79, 1.5, 0.8, 3.5, 0.82]).unwrap();
        assert_eq!(rr.intervals(), &[0.8, 0.81, 0.79, 0.8, 0.82]);
        assert_eq!(rr.rejected(), 3);
        // time keeps running through rejected beats
        let total: f64 = [0.8, 0.81, 0.2, 0.79, 1.5, 0.8, 3.5, 0.82].iter().sum();
        assert!((rr.duration() - total).abs() < 1e-12);
        assert!((rr.beat_times()[2] - (0.8 + 0.81 + 0.2 + 0.79)).abs() < 1e-12);
    }

    #[test]
    fn all_artifacts() {
        assert_eq!(
            RrSeries::from_intervals(&[0.1, 0.2, 4.0]),
            Err(PhysioError::AllArtifacts)
        );
    }

    #[test]
    fn short_series_rejected() {
        let rr = RrSeries::from_intervals(&vec![0.8; 100]).unwrap();
        assert!(matches!(lf_hf_ratio(&rr), Err(PhysioError::SeriesTooShort { .. })));
    }

    #[test]
    fn welch_recovers_sinusoid_power() {
        // analytic: a sinusoid of amplitude a carries a^2/2 of power
        let rate = 4.0;
        let x: Vec<f64> = (0..2400)
            .map(|i| 0.05 * (2.0 * PI * 0.1 * i as f64 / rate).sin())
            .collect();
        let (f, p) = welch(&x, rate, 480);
        let total: f64 = p.iter().sum::<f64>() * (f[1] - f[0]);
        assert!((total - 0.05 * 0.05 / 2.0).abs() < 1e-6);
        let lf = band_power(&f, &p, LF_BAND, false);
        assert!((lf / total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn lf_modulation_dominates() {
        let raw = intervals_from(|t| 0.8 + 0.05 * (2.0 * PI * 0.1 * t).sin(), 300.0);
        let bands = lf_hf_ratio(&RrSeries::from_intervals(&raw).unwrap()).unwrap();
        assert!(bands.ratio > 5.0, "{bands:?}");
        // the band holds roughly the analytic sinusoid power a^2/2
        assert!((bands.lf / (0.05f64.powi(2) / 2.0) - 1.0).abs() < 0.15, "{bands:?}");
    }

    #[test]
    fn hf_modulation_dominates() {
        let raw = intervals_from(|t| 0.8 + 0.05 * (2.0 * PI * 0.25 * t).sin(), 300.0);
        let bands = lf_hf_ratio(&RrSeries::from_intervals(&raw).unwrap()).unwrap();
        assert!(bands.ratio < 0.2, "{bands:?}");
    }

    #[test]
    fn equal_power_modulations_balance() {
        let raw = intervals_from(
            |t| 0.8 + 0.05 * (2.0 * PI * 0.1 * t).sin() + 0.05 * (2.0 * PI * 0.25 * t).sin(),
            300.0,
        );
        let bands = lf_hf_ratio(&RrSeries::from_intervals(&raw).unwrap()).unwrap();
        assert!((bands.ratio - 1.0).abs() < 0.2, "{bands:?}");
    }

    #[test]
    fn constant_offset_invariance() {
        let profile = |t: f64| 0.05 * (2.0 * PI * 0.1 * t).sin() + 0.04 * (2.0 * PI * 0.25 * t).sin();
        let base = intervals_from(|t| 0.8 + profile(t), 300.0);
        let a = lf_hf_ratio(&RrSeries::from_intervals(&base).unwrap()).unwrap();
        let shifted: Vec<f64> = base.iter().map(|r| r + 0.01).collect();
        let b = lf_hf_ratio(&RrSeries::from_intervals(&shifted).unwrap()).unwrap();
        assert!((a.ratio / b.ratio - 1.0).abs() < 0.01, "{} vs {}", a.ratio, b.ratio);
    }

    #[test]
    fn slice_selects_beats_by_time() {
        let rr = RrSeries::from_intervals(&[1.0; 10]).unwrap();
        let s = rr.slice(2.5, 6.0).unwrap();
        assert_eq!(s.beat_times(), &[3.0, 4.0, 5.0]);
        assert!((s.duration() - 3.5).abs() < 1e-12);
        assert!(rr.slice(20.0, 30.0).is_none());
    }
}
