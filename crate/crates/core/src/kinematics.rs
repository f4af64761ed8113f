//! Upper-body motion: windowed joint displacement, the resting baseline,
//! the hyperactivity activity level, and self-touch detection.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::session::{Joint, SkeletonSample, Vec3};

/// Lower bound on a baseline standard deviation, metres per window.
pub const SIGMA_FLOOR: f64 = 1e-3;
/// Shortest skeleton segment accepted for calibration, seconds.
pub const MIN_CALIBRATION_SPAN: f64 = 30.0;

const EPS: f64 = 1e-9;
const JOINTS: usize = Joint::ALL.len();

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("fewer than two samples inside the motion window")]
    InsufficientHistory,
    #[error("calibration segment spans {got} s, need at least {needed} s")]
    SegmentTooShort { needed: f64, got: f64 },
}

/// Skeleton samples covering the trailing motion window, plus the one
/// sample before it that starts the first segment.
#[derive(Debug, Clone)]
pub struct MotionHistory {
    window: f64,
    samples: VecDeque<(f64, [Vec3; JOINTS])>,
}

impl MotionHistory {
    pub fn new(window: f64) -> Self {
        Self {
            window,
            samples: VecDeque::new(),
        }
    }

    pub fn push(&mut self, sample: &SkeletonSample) {
        self.samples.push_back((sample.t, sample.joints));
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Drops samples that can no longer start a segment ending in the
    /// window at `t` or later.
    fn prune(&mut self, t: f64) {
        while self.samples.len() >= 2 && self.samples[1].0 <= t - self.window + EPS {
            self.samples.pop_front();
        }
    }

    /// Σ‖p_l − p_{l−1}‖ over the segments whose end sample lies in
    /// `(t − τ, t]`.
    pub fn windowed_motion(&mut self, t: f64, joint: Joint) -> Result<f64, KinematicsError> {
        self.prune(t);
        let j = joint.index();
        let lo = t - self.window + EPS;
        let mut total = 0.0;
        let mut segments = 0;
        for pair in self.samples.make_contiguous().windows(2) {
            let (t1, ref end) = pair[1];
            if t1 > t + EPS {
                break;
            }
            if t1 > lo {
                total += (end[j] - pair[0].1[j]).norm();
                segments += 1;
            }
        }
        if segments == 0 {
            Err(KinematicsError::InsufficientHistory)
        } else {
            Ok(total)
        }
    }

    /// Motion of every joint at `t`; `None` where the window holds no segment.
    pub fn motion(&mut self, t: f64) -> [Option<f64>; JOINTS] {
        Joint::ALL.map(|j| self.windowed_motion(t, j).ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotionBaseline {
    pub mean: [f64; JOINTS],
    pub std: [f64; JOINTS],
    pub duration: f64,
}

impl MotionBaseline {
    /// Per-joint sample mean and (n−1) standard deviation of windowed
    /// motion values, with the deviation clamped to [`SIGMA_FLOOR`].
    pub fn from_windows(windows: &[[Option<f64>; JOINTS]], duration: f64) -> Self {
        let mut mean = [0.0; JOINTS];
        let mut std = [SIGMA_FLOOR; JOINTS];
        for j in 0..JOINTS {
            let values: Vec<f64> = windows.iter().filter_map(|w| w[j]).collect();
            if values.is_empty() {
                continue;
            }
            let n = values.len() as f64;
            let mu = values.iter().sum::<f64>() / n;
            mean[j] = mu;
            if values.len() >= 2 {
                let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0);
                std[j] = var.sqrt().max(SIGMA_FLOOR);
            }
        }
        Self { mean, std, duration }
    }
}

/// Evaluates windowed motion on the loop clock over a resting segment.
/// Loops run from `first.t + τ` in steps of `1/loop_rate` up to the last
/// sample.
pub fn calibrate_baseline(
    samples: &[SkeletonSample],
    window: f64,
    loop_rate: f64,
) -> Result<MotionBaseline, KinematicsError> {
    let span = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    if span + EPS < MIN_CALIBRATION_SPAN {
        return Err(KinematicsError::SegmentTooShort {
            needed: MIN_CALIBRATION_SPAN,
            got: span,
        });
    }
    let start = samples[0].t + window;
    let end = samples[samples.len() - 1].t;
    let mut history = MotionHistory::new(window);
    let mut next = 0;
    let mut windows = Vec::new();
    let mut k = 0u64;
    loop {
        let t = start + k as f64 / loop_rate;
        if t > end + EPS {
            break;
        }
        while next < samples.len() && samples[next].t <= t + EPS {
            history.push(&samples[next]);
            next += 1;
        }
        windows.push(history.motion(t));
        k += 1;
    }
    if windows.len() < 2 {
        return Err(KinematicsError::SegmentTooShort {
            needed: MIN_CALIBRATION_SPAN,
            got: span,
        });
    }
    Ok(MotionBaseline::from_windows(&windows, span))
}

/// `Δ/σ − 1` when `Δ = m − μ` exceeds `σ`, else 0.
pub fn joint_activity(m: f64, mean: f64, std: f64) -> f64 {
    let delta = m - mean;
    if delta > std {
        delta / std - 1.0
    } else {
        0.0
    }
}

/// `min(mean of the per-joint levels, 1)`; `None` for no joints.
pub fn aggregate_activity(levels: &[f64]) -> Option<f64> {
    (!levels.is_empty()).then(|| (levels.iter().sum::<f64>() / levels.len() as f64).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActivitySample {
    pub t: f64,
    /// `None` for joints without motion this loop.
    pub joints: [Option<f64>; JOINTS],
    pub level: f64,
}

/// Activity from the current motion values; joints without motion are left
/// out of the mean. `None` when no joint has motion.
pub fn activity_level(t: f64, motion: &[Option<f64>; JOINTS], baseline: &MotionBaseline) -> Option<ActivitySample> {
    let mut joints = [None; JOINTS];
    let mut levels = Vec::with_capacity(JOINTS);
    for j in 0..JOINTS {
        if let Some(m) = motion[j] {
            let a = joint_activity(m, baseline.mean[j], baseline.std[j]);
            joints[j] = Some(a);
            levels.push(a);
        }
    }
    aggregate_activity(&levels).map(|level| ActivitySample { t, joints, level })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];

    pub fn wrist(self) -> Joint {
        match self {
            Hand::Left => Joint::LeftWrist,
            Hand::Right => Joint::RightWrist,
        }
    }
}

impl fmt::Display for Hand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hand::Left => "left",
            Hand::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfTouchEvent {
    pub t: f64,
    pub hand: Hand,
}

/// Reports a touch when a wrist enters the proximity of the head or neck
/// keypoint; a hand that touched less than `debounce` seconds ago is not
/// reported again.
#[derive(Debug, Clone)]
pub struct SelfTouchDetector {
    distance: f64,
    debounce: f64,
    inside: [bool; 2],
    last: [Option<f64>; 2],
}

impl SelfTouchDetector {
    pub fn new(distance: f64, debounce: f64) -> Self {
        Self {
            distance,
            debounce,
            inside: [false; 2],
            last: [None; 2],
        }
    }

    /// Whether each hand (left, right) was in contact at the last sample.
    pub fn contact(&self) -> [bool; 2] {
        self.inside
    }

    pub fn update(&mut self, sample: &SkeletonSample) -> Vec<SelfTouchEvent> {
        let head = sample.joint(Joint::Head);
        let neck = sample.joint(Joint::Neck);
        let mut out = Vec::new();
        for (i, hand) in Hand::BOTH.into_iter().enumerate() {
            let wrist = sample.joint(hand.wrist());
            let near = (wrist - head).norm() <= self.distance || (wrist - neck).norm() <= self.distance;
            let entered = near && !self.inside[i];
            self.inside[i] = near;
            if entered && self.last[i].is_none_or(|prev| sample.t - prev >= self.debounce - EPS) {
                self.last[i] = Some(sample.t);
                out.push(SelfTouchEvent { t: sample.t, hand });
            }
        }
        out
    }
}
