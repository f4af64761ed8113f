//! Butterworth low-pass design and zero-phase (forward-backward) filtering.

use std::f64::consts::PI;

use crate::PhysioError;

/// One second-order section, transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    // a0 is normalised to 1
    pub a: [f64; 2],
}

impl Biquad {
    /// Internal state that makes the section output `value` forever when fed
    /// the constant `value`. Only valid for unity DC gain.
    fn steady_state(&self, value: f64) -> [f64; 2] {
        let z2 = (self.b[2] - self.a[1]) * value;
        let z1 = (self.b[1] - self.a[0]) * value + z2;
        [z1, z2]
    }

    fn run(&self, x: &mut [f64], mut z: [f64; 2]) {
        for v in x.iter_mut() {
            let input = *v;
            let out = self.b[0] * input + z[0];
            z[0] = self.b[1] * input - self.a[0] * out + z[1];
            z[1] = self.b[2] * input - self.a[1] * out;
            *v = out;
        }
    }
}

/// Digital Butterworth low-pass as a cascade of second-order sections
/// (bilinear transform with frequency prewarping).
pub fn butter_lowpass(order: usize, cutoff_hz: f64, rate_hz: f64) -> Result<Vec<Biquad>, PhysioError> {
    if order == 0 {
        return Err(PhysioError::InvalidFilter("order must be positive".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0) {
        return Err(PhysioError::InvalidFilter(format!(
            "cutoff {cutoff_hz} Hz outside (0, {}) Hz",
            rate_hz / 2.0
        )));
    }
    let k = 2.0 * rate_hz;
    let wc = k * (PI * cutoff_hz / rate_hz).tan();
    let mut sections = Vec::with_capacity(order.div_ceil(2));

    for i in 0..order / 2 {
        // conjugate pole pair on the left half of the circle of radius wc
        let theta = PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
        let a = -2.0 * wc * theta.cos();
        let b = wc * wc;
        let d0 = k * k + a * k + b;
        sections.push(Biquad {
            b: [b / d0, 2.0 * b / d0, b / d0],
            a: [(2.0 * b - 2.0 * k * k) / d0, (k * k - a * k + b) / d0],
        });
    }
    if order % 2 == 1 {
        let d0 = k + wc;
        sections.push(Biquad {
            b: [wc / d0, wc / d0, 0.0],
            a: [(wc - k) / d0, 0.0],
        });
    }
    Ok(sections)
}

fn cascade(sections: &[Biquad], x: &mut [f64]) {
    let first = x.first().copied().unwrap_or(0.0);
    for s in sections {
        s.run(x, s.steady_state(first));
    }
}

/// Zero-phase filtering: odd-extension padding, forward pass, backward pass.
/// Each pass starts from the steady state of its first sample, which removes
/// the start-up transient for signals that begin near a constant level.
pub fn filtfilt(sections: &[Biquad], x: &[f64], padlen: usize) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return x.to_vec();
    }
    let pad = padlen.min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    cascade(sections, &mut ext);
    ext.reverse();
    cascade(sections, &mut ext);
    ext.reverse();

    ext[pad..pad + n].to_vec()
}

/// Convenience wrapper: zero-phase Butterworth low-pass with a padding long
/// enough for the slowest pole to settle.
pub fn lowpass_zero_phase(x: &[f64], order: usize, cutoff_hz: f64, rate_hz: f64) -> Result<Vec<f64>, PhysioError> {
    let sections = butter_lowpass(order, cutoff_hz, rate_hz)?;
    let settle = (3.0 * rate_hz / cutoff_hz).ceil() as usize;
    let padlen = settle.max(3 * (2 * sections.len() + 1));
    Ok(filtfilt(&sections, x, padlen))
}

/// Magnitude response of the cascade at `freq_hz`.
pub fn magnitude(sections: &[Biquad], freq_hz: f64, rate_hz: f64) -> f64 {
    let w = 2.0 * PI * freq_hz / rate_hz;
    let (c1, s1) = (w.cos(), -w.sin());
    let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
    sections
        .iter()
        .map(|s| {
            let nr = s.b[0] + s.b[1] * c1 + s.b[2] * c2;
            let ni = s.b[1] * s1 + s.b[2] * s2;
            let dr = 1.0 + s.a[0] * c1 + s.a[1] * c2;
            let di = s.a[0] * s1 + s.a[1] * s2;
            ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
        })
        .product()
}
