//! Head-pose stabilisation with independent constant-velocity Kalman filters
//! on position (x, y, z) and on the two gaze angles (yaw, pitch).
//!
//! The gaze angles describe where the head's +z axis points; roll about that
//! axis is passed through unfiltered. The filtered orientation is rebuilt as
//! `Ry(yaw) · Rx(−pitch) · roll_residual`.

use nalgebra::{UnitQuaternion, Vector3};

use crate::config::KalmanConfig;
use crate::session::{HeadPoseSample, Vec3};

/// A gap longer than this restarts the filter from the next sample.
pub const MAX_GAP: f64 = 1.0;

/// Wraps an angle in degrees into (−180, 180].
pub fn wrap_degrees(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 { 180.0 } else { w }
}

/// Yaw and pitch (degrees) of the rotated +z axis.
pub fn gaze_angles(q: &UnitQuaternion<f64>) -> (f64, f64) {
    let f = q * Vector3::z();
    let yaw = f.x.atan2(f.z).to_degrees();
    let pitch = f.y.atan2(f.x.hypot(f.z)).to_degrees();
    (yaw, pitch)
}

/// Rotation whose +z axis points along the given gaze angles, with no roll.
pub fn gaze_rotation(yaw: f64, pitch: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), yaw.to_radians())
        * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), -pitch.to_radians())
}

/// One scalar constant-velocity filter with white-acceleration process noise.
#[derive(Debug, Clone, Copy)]
struct Axis {
    x: [f64; 2],
    p: [[f64; 2]; 2],
    circular: bool,
}

impl Axis {
    fn new(z: f64, r: f64, circular: bool) -> Self {
        Self {
            x: [z, 0.0],
            p: [[r, 0.0], [0.0, r]],
            circular,
        }
    }

    fn step(&mut self, z: f64, dt: f64, q: f64, r: f64) -> f64 {
        let [pos, vel] = self.x;
        let [[p00, p01], [p10, p11]] = self.p;
        // predict
        let pos = pos + vel * dt;
        let p00 = p00 + dt * (p10 + p01) + dt * dt * p11 + q * dt.powi(3) / 3.0;
        let p01 = p01 + dt * p11 + q * dt * dt / 2.0;
        let p10 = p10 + dt * p11 + q * dt * dt / 2.0;
        let p11 = p11 + q * dt;
        // update
        let mut innovation = z - pos;
        if self.circular {
            innovation = wrap_degrees(innovation);
        }
        let s = p00 + r;
        let (k0, k1) = (p00 / s, p10 / s);
        let mut pos = pos + k0 * innovation;
        if self.circular {
            pos = wrap_degrees(pos);
        }
        self.x = [pos, vel + k1 * innovation];
        self.p = [
            [(1.0 - k0) * p00, (1.0 - k0) * p01],
            [p10 - k1 * p00, p11 - k1 * p01],
        ];
        pos
    }
}

#[derive(Debug, Clone, Copy)]
struct Filters {
    t: f64,
    position: [Axis; 3],
    yaw: Axis,
    pitch: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredPose {
    pub pose: HeadPoseSample,
    /// True when this sample (re)initialised the filter after a gap.
    pub reset: bool,
}

#[derive(Debug, Clone)]
pub struct PoseFilter {
    config: KalmanConfig,
    state: Option<Filters>,
    resets: usize,
}

impl PoseFilter {
    pub fn new(config: KalmanConfig) -> Self {
        Self {
            config,
            state: None,
            resets: 0,
        }
    }

    /// Number of gap-triggered resets so far (the initial start is not one).
    pub fn resets(&self) -> usize {
        self.resets
    }

    pub fn smooth(&mut self, raw: &HeadPoseSample) -> FilteredPose {
        let (yaw, pitch) = gaze_angles(&raw.orientation);
        let roll = gaze_rotation(yaw, pitch).inverse() * raw.orientation;
        let KalmanConfig {
            process_noise: q,
            measurement_noise: r,
        } = self.config;

        let (fresh_start, reset, state) = match &mut self.state {
            Some(s) if raw.t - s.t <= MAX_GAP => {
                let dt = (raw.t - s.t).max(0.0);
                for (axis, z) in s.position.iter_mut().zip(raw.position.iter()) {
                    axis.step(*z, dt, q, r);
                }
                s.yaw.step(yaw, dt, q, r);
                s.pitch.step(pitch, dt, q, r);
                s.t = raw.t;
                (false, false, *s)
            }
            previous => {
                let reset = previous.is_some();
                let p = raw.position;
                let fresh = Filters {
                    t: raw.t,
                    position: [Axis::new(p.x, r, false), Axis::new(p.y, r, false), Axis::new(p.z, r, false)],
                    yaw: Axis::new(yaw, r, true),
                    pitch: Axis::new(pitch, r, false),
                };
                *previous = Some(fresh);
                (true, reset, fresh)
            }
        };
        if reset {
            self.resets += 1;
        }
        let pose = if fresh_start {
            *raw
        } else {
            HeadPoseSample {
                t: raw.t,
                position: Vec3::new(state.position[0].x[0], state.position[1].x[0], state.position[2].x[0]),
                orientation: gaze_rotation(state.yaw.x[0], state.pitch.x[0]) * roll,
            }
        };
        FilteredPose { pose, reset }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn pose(t: f64, p: Vec3, yaw: f64, pitch: f64) -> HeadPoseSample {
        HeadPoseSample {
            t,
            position: p,
            orientation: gaze_rotation(yaw, pitch),
        }
    }

    #[test]
    fn gaze_round_trip_with_roll() {
        for (yaw, pitch, roll) in [(0.0, 0.0, 0.0), (40.0, -20.0, 10.0), (-170.0, 60.0, -35.0)] {
            let q = gaze_rotation(yaw, pitch) * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), f64::to_radians(roll));
            let (y, p) = gaze_angles(&q);
            assert!((y - yaw).abs() < 1e-9 && (p - pitch).abs() < 1e-9);
        }
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(45.0), 45.0);
    }

    #[test]
    fn constant_input_passes_through() {
        let mut f = PoseFilter::new(KalmanConfig::default());
        let raw = pose(0.0, Vec3::new(0.1, 0.2, -0.3), 25.0, -10.0);
        for k in 0..30 {
            let out = f.smooth(&HeadPoseSample { t: k as f64 / 15.0, ..raw });
            assert!((out.pose.position - raw.position).norm() < 1e-12);
            assert!(out.pose.orientation.angle_to(&raw.orientation) < 1e-9);
            assert_eq!(out.pose.t, k as f64 / 15.0);
        }
    }

    #[test]
    fn step_settles_within_three_periods() {
        let mut f = PoseFilter::new(KalmanConfig::default());
        let dt = 1.0 / 15.0;
        for k in 0..30 {
            f.smooth(&pose(k as f64 * dt, Vec3::zeros(), 0.0, 0.0));
        }
        let mut last = None;
        for k in 30..33 {
            last = Some(f.smooth(&pose(k as f64 * dt, Vec3::new(0.1, 0.0, 0.0), 20.0, 0.0)));
        }
        let out = last.unwrap().pose;
        assert!((out.position.x - 0.1).abs() <= 0.005, "{}", out.position.x);
        let (yaw, _) = gaze_angles(&out.orientation);
        assert!((yaw - 20.0).abs() <= 1.0, "{yaw}");
    }

    #[test]
    fn noise_variance_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut f = PoseFilter::new(KalmanConfig::default());
        let (mut raw_sq, mut out_sq) = (0.0, 0.0);
        for k in 0..300 {
            let p = Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), 1.0 + noise.sample(&mut rng));
            let out = f.smooth(&pose(k as f64 / 15.0, p, 0.0, 0.0)).pose;
            let c = Vec3::new(0.0, 0.0, 1.0);
            raw_sq += (p - c).norm_squared();
            out_sq += (out.position - c).norm_squared();
        }
        assert!(out_sq < raw_sq, "{out_sq} vs {raw_sq}");
    }

    #[test]
    fn gap_resets() {
        let mut f = PoseFilter::new(KalmanConfig::default());
        assert!(!f.smooth(&pose(0.0, Vec3::zeros(), 0.0, 0.0)).reset);
        assert!(!f.smooth(&pose(0.5, Vec3::zeros(), 0.0, 0.0)).reset);
        let out = f.smooth(&pose(2.5, Vec3::new(1.0, 0.0, 0.0), 30.0, 0.0));
        assert!(out.reset);
        assert_eq!(out.pose.position.x, 1.0);
        assert_eq!(f.resets(), 1);
    }

    #[test]
    fn yaw_crosses_the_seam_smoothly() {
        let mut f = PoseFilter::new(KalmanConfig::default());
        for (k, yaw) in [178.0, 179.0, -179.0, -178.0].into_iter().enumerate() {
            let out = f.smooth(&pose(k as f64 / 15.0, Vec3::zeros(), yaw, 0.0)).pose;
            let (y, _) = gaze_angles(&out.orientation);
            assert!(wrap_degrees(y - yaw).abs() < 1.0, "{y} vs {yaw}");
        }
    }
}
