//! Head-to-workstation bearings, the raised-cosine attention membership, and
//! focus classification.
//!
//! The membership roll-off is `½[1 + cos(π(|α|−α_min)/(α_max−α_min))]`,
//! which equals 1 at the inner bound and 0 at the outer bound, so the
//! function is continuous with both flat branches.

use std::f64::consts::PI;

use thiserror::Error;

use crate::config::{AngularWindow, EngineConfig, WorkstationConfig};
use crate::session::HeadPoseSample;

/// Workstations closer to the head than this have no defined direction.
pub const MIN_BEARING_DISTANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttentionError {
    #[error("workstation {workstation} coincides with the head position (distance {distance} m)")]
    DegenerateGeometry { workstation: usize, distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkstationBearing {
    pub workstation: usize,
    /// Degrees, positive to the operator's left (+x of the head frame).
    pub azimuth: f64,
    /// Degrees, positive upward.
    pub elevation: f64,
    pub distance: f64,
}

/// Expresses the workstation position in the head frame, whose viewing axis
/// is +z.
pub fn bearing(head: &HeadPoseSample, ws: &WorkstationConfig) -> Result<WorkstationBearing, AttentionError> {
    let v = head.orientation.inverse_transform_vector(&(ws.position - head.position));
    let distance = v.norm();
    if distance.is_nan() || distance < MIN_BEARING_DISTANCE {
        return Err(AttentionError::DegenerateGeometry {
            workstation: ws.id,
            distance,
        });
    }
    Ok(WorkstationBearing {
        workstation: ws.id,
        azimuth: v.x.atan2(v.z).to_degrees(),
        elevation: v.y.atan2(v.x.hypot(v.z)).to_degrees(),
        distance,
    })
}

/// Raised-cosine membership of an angle in degrees.
pub fn membership(alpha: f64, window: AngularWindow) -> f64 {
    let a = alpha.abs();
    if a <= window.min {
        1.0
    } else if a > window.max {
        0.0
    } else {
        // normalise first so the midpoint maps to exactly π/2
        let x = (a - window.min) / (window.max - window.min);
        0.5 * (1.0 + (PI * x).cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionVector {
    pub t: f64,
    /// `levels[i]` belongs to workstation `i + 1`.
    pub levels: Vec<f64>,
}

/// `A_Wi = f(θ_i) · f(φ_i)` for every workstation; a degenerate bearing
/// yields 0.
pub fn attention_levels(head: &HeadPoseSample, config: &EngineConfig) -> AttentionVector {
    let levels = config
        .workstations
        .iter()
        .map(|ws| match bearing(head, ws) {
            Ok(b) => level_of(&b, ws),
            Err(_) => 0.0,
        })
        .collect();
    AttentionVector { t: head.t, levels }
}

pub fn level_of(b: &WorkstationBearing, ws: &WorkstationConfig) -> f64 {
    membership(b.azimuth, ws.azimuth_window) * membership(b.elevation, ws.elevation_window)
}

/// Argmax workstation (1-based, lowest id on ties) if its level reaches the
/// threshold.
pub fn classify_focus(levels: &[f64], threshold: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &a) in levels.iter().enumerate() {
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best.filter(|&(_, a)| a >= threshold).map(|(i, _)| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kalman::gaze_rotation;
    use crate::session::Vec3;
    use nalgebra::UnitQuaternion;
    use proptest::prelude::*;

    fn ws(position: Vec3) -> WorkstationConfig {
        WorkstationConfig {
            id: 1,
            name: "w".into(),
            position,
            azimuth_window: AngularWindow::new(10.0, 30.0),
            elevation_window: AngularWindow::new(10.0, 30.0),
        }
    }

    fn identity() -> HeadPoseSample {
        HeadPoseSample {
            t: 0.0,
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    #[test]
    fn bearing_examples() {
        let b = bearing(&identity(), &ws(Vec3::new(0.0, 0.0, 1.0))).unwrap();
        assert_eq!((b.azimuth, b.elevation, b.distance), (0.0, 0.0, 1.0));
        let b = bearing(&identity(), &ws(Vec3::new(1.0, 0.0, 1.0))).unwrap();
        assert!((b.azimuth - 45.0).abs() < 1e-12 && b.elevation == 0.0);
        let b = bearing(&identity(), &ws(Vec3::new(0.0, 1.0, 1.0))).unwrap();
        assert!((b.elevation - 45.0).abs() < 1e-12 && b.azimuth == 0.0);
        assert!(matches!(
            bearing(&identity(), &ws(Vec3::new(0.0, 0.0005, 0.0))),
            Err(AttentionError::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn bearing_follows_head_rotation() {
        let head = HeadPoseSample {
            orientation: gaze_rotation(30.0, -15.0),
            position: Vec3::new(0.2, 0.1, -0.3),
            ..identity()
        };
        // a point straight along the rotated viewing axis
        let target = head.position + head.orientation * Vec3::new(0.0, 0.0, 0.8);
        let b = bearing(&head, &ws(target)).unwrap();
        assert!(b.azimuth.abs() < 1e-9 && b.elevation.abs() < 1e-9);
        assert!((b.distance - 0.8).abs() < 1e-12);
    }

    #[test]
    fn membership_examples() {
        let w = AngularWindow::new(10.0, 30.0);
        assert_eq!(membership(0.0, w), 1.0);
        assert_eq!(membership(30.0, w), 0.0);
        assert_eq!(membership(-30.0, w), 0.0);
        assert!((membership(20.0, w) - 0.5).abs() < 1e-15);
        assert_eq!(membership(-20.0, w), membership(20.0, w));
    }

    #[test]
    fn membership_midpoint_is_exact() {
        // π·(a − min) rounded before the division used to land one ulp low
        let w = AngularWindow::new(2.5, 28.5);
        assert_eq!(membership(15.5, w), 0.5);
    }

    #[test]
    fn membership_continuous_at_breakpoints() {
        let w = AngularWindow::new(12.5, 41.0);
        for b in [w.min, w.max] {
            assert!((membership(b + 1e-9, w) - membership(b, w)).abs() < 1e-6);
            assert!((membership(b - 1e-9, w) - membership(b, w)).abs() < 1e-6);
        }
    }

    #[test]
    fn level_products() {
        let w = ws(Vec3::new(0.0, 0.0, 1.0));
        let b = |azimuth, elevation| WorkstationBearing {
            workstation: 1,
            azimuth,
            elevation,
            distance: 1.0,
        };
        assert_eq!(level_of(&b(0.0, 0.0), &w), 1.0);
        assert!((level_of(&b(20.0, 20.0), &w) - 0.25).abs() < 1e-15);
        assert_eq!(level_of(&b(31.0, 0.0), &w), 0.0);
    }

    #[test]
    fn focus_examples() {
        assert_eq!(classify_focus(&[0.9, 0.2, 0.1], 0.5), Some(1));
        assert_eq!(classify_focus(&[0.3, 0.2, 0.1], 0.5), None);
        assert_eq!(classify_focus(&[0.7, 0.7, 0.1], 0.5), Some(1));
        assert_eq!(classify_focus(&[0.1, 0.7, 0.7], 0.5), Some(2));
        assert_eq!(classify_focus(&[0.5], 0.5), Some(1));
        assert_eq!(classify_focus(&[], 0.5), None);
    }

    proptest! {
        #[test]
        fn membership_non_increasing(min in 0.0f64..170.0, width in 1e-3f64..90.0) {
            let w = AngularWindow::new(min, (min + width).min(180.0));
            let mut prev = f64::INFINITY;
            for i in 0..=1000 {
                let v = membership(180.0 * i as f64 / 1000.0, w);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!(v <= prev);
                prev = v;
            }
        }

        #[test]
        fn focus_scale_invariant(levels in prop::collection::vec(0.0f64..1.0, 1..6), c in 0.01f64..10.0, th in 0.05f64..0.95) {
            let scaled: Vec<f64> = levels.iter().map(|a| a * c).collect();
            let base = classify_focus(&levels, th);
            let s = classify_focus(&scaled, th * c);
            // scaling can only flip decisions sitting within rounding of the threshold
            let max = levels.iter().cloned().fold(f64::MIN, f64::max);
            prop_assume!((max - th).abs() > 1e-9);
            prop_assert_eq!(base, s);
        }

        #[test]
        fn levels_in_unit_interval(yaw in -180.0f64..180.0, pitch in -89.0f64..89.0) {
            let head = HeadPoseSample { orientation: gaze_rotation(yaw, pitch), ..identity() };
            let config = EngineConfig::with_workstations(vec![ws(Vec3::new(0.3, -0.4, 0.6))]).unwrap();
            let v = attention_levels(&head, &config);
            prop_assert!(v.levels.iter().all(|a| (0.0..=1.0).contains(a)));
        }
    }
}
