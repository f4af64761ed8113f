//! Skin-conductance decomposition.
//!
//! The raw signal is low-passed at 2 Hz (4th-order Butterworth, zero phase).
//! The tonic level is a 10 s centred running median of the filtered signal,
//! smoothed again by a 0.05 Hz zero-phase low-pass; the phasic part is the
//! remainder. SCR peaks are local maxima of the phasic signal of at least
//! [`SCR_MIN_AMPLITUDE`] µS.

use crate::filter::lowpass_zero_phase;
use crate::PhysioError;

pub const PREFILTER_HZ: f64 = 2.0;
pub const PREFILTER_ORDER: usize = 4;
pub const MEDIAN_WINDOW_S: f64 = 10.0;
pub const TONIC_SMOOTH_HZ: f64 = 0.05;
pub const TONIC_SMOOTH_ORDER: usize = 2;
pub const SCR_MIN_AMPLITUDE: f64 = 0.01;
pub const MIN_RATE_HZ: f64 = 8.0;
pub const MIN_DURATION_S: f64 = 60.0;

/// Uniformly sampled skin conductance in µS.
#[derive(Debug, Clone, PartialEq)]
pub struct EdaSeries {
    values: Vec<f64>,
    rate: f64,
    start: f64,
}

impl EdaSeries {
    pub fn new(values: Vec<f64>, rate: f64, start: f64) -> Result<Self, PhysioError> {
        if !(rate.is_finite() && rate >= MIN_RATE_HZ) {
            return Err(PhysioError::LowSampleRate {
                rate,
                min: MIN_RATE_HZ,
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(PhysioError::InvalidValue { index, value });
        }
        Ok(Self { values, rate, start })
    }

    /// Builds a series from `(t, value)` pairs at a declared rate. Every time
    /// step must match `1/rate` within 1 %.
    pub fn from_samples(times: &[f64], values: Vec<f64>, rate: f64) -> Result<Self, PhysioError> {
        if times.len() != values.len() {
            return Err(PhysioError::LengthMismatch {
                left: times.len(),
                right: values.len(),
            });
        }
        let period = 1.0 / rate;
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - period).abs() > 0.01 * period {
                return Err(PhysioError::NonUniformSampling { index: i + 1 });
            }
        }
        Self::new(values, rate, times.first().copied().unwrap_or(0.0))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn duration(&self) -> f64 {
        self.values.len() as f64 / self.rate
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.start + index as f64 / self.rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrPeak {
    pub index: usize,
    pub t: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaDecomposition {
    pub filtered: Vec<f64>,
    pub tonic: Vec<f64>,
    pub phasic: Vec<f64>,
    pub peaks: Vec<ScrPeak>,
    pub rate: f64,
    pub start: f64,
}

impl EdaDecomposition {
    pub fn scl_mean(&self) -> f64 {
        mean(&self.tonic)
    }

    /// Mean SCR peak amplitude; `None` when no peak was found.
    pub fn scr_peak_mean(&self) -> Option<f64> {
        (!self.peaks.is_empty())
            .then(|| self.peaks.iter().map(|p| p.amplitude).sum::<f64>() / self.peaks.len() as f64)
    }

    /// SCL mean and SCR peak mean amplitude restricted to `[start, end)`.
    /// A window without peaks reports an SCR amplitude of 0.
    pub fn window_features(&self, start: f64, end: f64) -> Option<(f64, f64)> {
        let lo = (((start - self.start) * self.rate).ceil().max(0.0)) as usize;
        let hi = ((((end - self.start) * self.rate).ceil().max(0.0)) as usize).min(self.tonic.len());
        if lo >= hi {
            return None;
        }
        let scl = mean(&self.tonic[lo..hi]);
        let amps: Vec<f64> = self
            .peaks
            .iter()
            .filter(|p| p.index >= lo && p.index < hi)
            .map(|p| p.amplitude)
            .collect();
        let scr = if amps.is_empty() { 0.0 } else { mean(&amps) };
        Some((scl, scr))
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Centred running median; the window is truncated at the edges.
pub fn running_median(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut sorted: Vec<f64> = Vec::with_capacity(2 * half + 1);
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    // maintain a sorted copy of the current window
    let mut lo = 0;
    let mut hi = 0; // exclusive
    for i in 0..n {
        let want_lo = i.saturating_sub(half);
        let want_hi = (i + half + 1).min(n);
        while hi < want_hi {
            let v = x[hi];
            let pos = sorted.partition_point(|&s| s < v);
            sorted.insert(pos, v);
            hi += 1;
        }
        while lo < want_lo {
            let v = x[lo];
            let pos = sorted.partition_point(|&s| s < v);
            sorted.remove(pos);
            lo += 1;
        }
        let m = sorted.len();
        out.push(if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        });
    }
    out
}

pub fn eda_decompose(eda: &EdaSeries) -> Result<EdaDecomposition, PhysioError> {
    if eda.duration() + 1e-9 < MIN_DURATION_S {
        return Err(PhysioError::SeriesTooShort {
            needed: MIN_DURATION_S,
            got: eda.duration(),
        });
    }
    let rate = eda.rate;
    let filtered = lowpass_zero_phase(&eda.values, PREFILTER_ORDER, PREFILTER_HZ, rate)?;
    let window = ((MEDIAN_WINDOW_S * rate).round() as usize) | 1;
    let baseline = running_median(&filtered, window);
    let tonic = lowpass_zero_phase(&baseline, TONIC_SMOOTH_ORDER, TONIC_SMOOTH_HZ, rate)?;
    let phasic: Vec<f64> = filtered.iter().zip(&tonic).map(|(f, t)| f - t).collect();

    let peaks = (1..phasic.len().saturating_sub(1))
        .filter(|&i| {
            phasic[i] > phasic[i - 1] && phasic[i] >= phasic[i + 1] && phasic[i] >= SCR_MIN_AMPLITUDE
        })
        .map(|i| ScrPeak {
            index: i,
            t: eda.time_of(i),
            amplitude: phasic[i],
        })
        .collect();

    Ok(EdaDecomposition {
        filtered,
        tonic,
        phasic,
        peaks,
        rate,
        start: eda.start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const RATE: f64 = 16.0;

    fn gaussian_bumps(base: f64, duration: f64, bumps: &[(f64, f64)]) -> EdaSeries {
        // (centre, amplitude), sigma 1 s
        let n = (duration * RATE) as usize;
        let values = (0..n)
            .map(|i| {
                let t = i as f64 / RATE;
                base + bumps
                    .iter()
                    .map(|(c, a)| a * (-(t - c).powi(2) / 2.0).exp())
                    .sum::<f64>()
            })
            .collect();
        EdaSeries::new(values, RATE, 0.0).unwrap()
    }

    #[test]
    fn running_median_small_cases() {
        assert_eq!(running_median(&[3.0, 1.0, 2.0, 5.0, 4.0], 3), vec![2.0, 2.0, 2.0, 4.0, 4.5]);
        assert_eq!(running_median(&[1.0], 5), vec![1.0]);
    }

    #[test]
    fn running_median_matches_sort_per_window() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let fast = running_median(&x, 21);
        for i in 0..x.len() {
            let mut w: Vec<f64> = x[i.saturating_sub(10)..(i + 11).min(x.len())].to_vec();
            w.sort_by(f64::total_cmp);
            let m = w.len();
            let expected = if m % 2 == 1 { w[m / 2] } else { 0.5 * (w[m / 2 - 1] + w[m / 2]) };
            assert_eq!(fast[i], expected);
        }
    }

    #[test]
    fn flat_signal_has_no_responses() {
        let d = eda_decompose(&gaussian_bumps(5.0, 120.0, &[])).unwrap();
        assert!((d.scl_mean() - 5.0).abs() < 1e-9);
        assert!(d.peaks.is_empty());
        assert_eq!(d.scr_peak_mean(), None);
    }

    #[test]
    fn single_bump_recovered() {
        let d = eda_decompose(&gaussian_bumps(5.0, 120.0, &[(60.0, 0.5)])).unwrap();
        assert_eq!(d.peaks.len(), 1);
        let p = d.peaks[0];
        assert!((p.t - 60.0).abs() < 0.2);
        assert!((p.amplitude - 0.5).abs() <= 0.05, "{}", p.amplitude);
    }

    #[test]
    fn three_bumps_mean_amplitude() {
        let d = eda_decompose(&gaussian_bumps(5.0, 150.0, &[(30.0, 0.2), (70.0, 0.3), (110.0, 0.4)])).unwrap();
        assert_eq!(d.peaks.len(), 3);
        assert!((d.scr_peak_mean().unwrap() - 0.3).abs() <= 0.05);
    }

    #[test]
    fn decomposition_conserves_signal() {
        let d = eda_decompose(&gaussian_bumps(3.0, 90.0, &[(20.0, 0.4), (50.0, 0.1)])).unwrap();
        for ((f, t), p) in d.filtered.iter().zip(&d.tonic).zip(&d.phasic) {
            assert!((t + p - f).abs() <= 1e-9);
        }
    }

    #[test]
    fn input_checks() {
        assert!(matches!(
            eda_decompose(&gaussian_bumps(5.0, 30.0, &[])),
            Err(PhysioError::SeriesTooShort { .. })
        ));
        assert!(matches!(
            EdaSeries::new(vec![1.0; 10], 4.0, 0.0),
            Err(PhysioError::LowSampleRate { .. })
        ));
        assert!(matches!(
            EdaSeries::new(vec![1.0, -0.1], 16.0, 0.0),
            Err(PhysioError::InvalidValue { index: 1, .. })
        ));
        let times = [0.0, 0.0625, 0.125, 0.25];
        assert_eq!(
            EdaSeries::from_samples(&times, vec![1.0; 4], 16.0),
            Err(PhysioError::NonUniformSampling { index: 3 })
        );
    }

    #[test]
    fn window_features_split_by_time() {
        let d = eda_decompose(&gaussian_bumps(2.0, 120.0, &[(30.0, 0.3), (90.0, 0.5)])).unwrap();
        let (_, first) = d.window_features(0.0, 60.0).unwrap();
        let (_, second) = d.window_features(60.0, 120.0).unwrap();
        assert!((first - 0.3).abs() < 0.05);
        assert!((second - 0.5).abs() < 0.05);
        assert!(d.window_features(200.0, 300.0).is_none());
    }
}
