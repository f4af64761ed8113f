//! Spearman rank correlation.

use crate::PhysioError;

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, PhysioError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(PhysioError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's r_s: Pearson correlation of mid-ranks. Needs equal lengths of
/// at least 3 and non-constant inputs.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, PhysioError> {
    if x.len() != y.len() {
        return Err(PhysioError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(PhysioError::TooFewSamples {
            needed: 3,
            got: x.len(),
        });
    }
    if let Some((index, &value)) = x.iter().chain(y).enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(PhysioError::InvalidValue {
            index: index % x.len(),
            value,
        });
    }
    pearson(&mid_ranks(x), &mid_ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: rank by counting smaller and equal elements.
    fn brute_ranks(x: &[f64]) -> Vec<f64> {
        x.iter()
            .map(|&v| {
                let less = x.iter().filter(|&&o| o < v).count() as f64;
                let equal = x.iter().filter(|&&o| o == v).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    }

    fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
        let (rx, ry) = (brute_ranks(x), brute_ranks(y));
        let n = x.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn monotone_and_anti_monotone() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap(), -1.0);
    }

    #[test]
    fn ties_use_mid_ranks() {
        let x = [1.0, 2.0, 2.0, 4.0];
        let y = [3.0, 1.0, 4.0, 4.0];
        assert_eq!(mid_ranks(&x), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(mid_ranks(&y), vec![2.0, 1.0, 3.5, 3.5]);
        // hand computation: rx - 2.5 = [-1.5, 0, 0, 1.5], ry - 2.5 = [-0.5, -1.5, 1, 1]
        // cov = 0.75 + 1.5 = 2.25; vx = 4.5; vy = 0.25 + 2.25 + 1 + 1 = 4.5
        let expected = 2.25 / 4.5;
        let got = spearman(&x, &y).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - brute_spearman(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn error_cases() {
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(PhysioError::LengthMismatch { left: 3, right: 2 })
        );
        assert!(matches!(spearman(&[1.0, 2.0], &[1.0, 2.0]), Err(PhysioError::TooFewSamples { .. })));
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(PhysioError::ZeroVariance));
    }

    proptest! {
        #[test]
        fn self_correlation_is_one(x in prop::collection::vec(-100i32..100, 3..40)) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            prop_assume!(x.iter().any(|v| *v != x[0]));
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((spearman(&x, &x).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((spearman(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        }

        #[test]
        fn matches_brute_force(pairs in prop::collection::vec((0i32..6, 0i32..6), 3..25)) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            match spearman(&x, &y) {
                Ok(r) => prop_assert!((r - brute_spearman(&x, &y)).abs() < 1e-12),
                Err(e) => prop_assert_eq!(e, PhysioError::ZeroVariance),
            }
        }
    }
}
