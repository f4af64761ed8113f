//! Deterministic synthetic sessions for the three scenario archetypes.
//!
//! A session is scripted first — a focus timeline of workstation dwells,
//! distraction episodes, self-touch gestures and hyperactivity episodes —
//! and then rendered into head-pose (20 Hz), skeleton (15 Hz) and event
//! records on the session clock. The script is returned as [`GroundTruth`].
//!
//! Every random aspect draws from its own ChaCha stream, so changing one
//! rate leaves the rest of the script untouched: the distraction episodes
//! of a session are a subset of those of the same seed at a higher rate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use cogload_physio::blocks::{block_ranges, DEFAULT_BLOCK_LENGTH};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::config::{
    AngularWindow, EngineConfig, WorkstationConfig, ASSEMBLY_WORKSTATION, ASSISTANT_WORKSTATION,
    DEFAULT_CALIBRATION_DURATION, DEFAULT_NOT_REQUIRED_SWITCH_GRACE, INSTRUCTION_WORKSTATION,
};
use crate::factors::Factor;
use crate::interaction::{run_scripted_assistant, FsmInput, PhaseDurations};
use crate::kalman::gaze_rotation;
use crate::session::{EventKind, HeadPoseSample, InteractionEvent, Joint, Record, SkeletonSample, Vec3};

pub const HEAD_POSE_RATE: f64 = 20.0;
pub const SKELETON_RATE: f64 = 15.0;
pub const SLEW_DURATION: f64 = 0.4;
pub const HEAD_ANGLE_NOISE_DEG: f64 = 2.0;
pub const JOINT_NOISE_M: f64 = 0.005;
pub const EDA_RATE: f64 = 16.0;

/// Nominal bearings (azimuth°, elevation°, distance m) of the workstations
/// from the operator's head, which sits at the camera-frame origin.
pub const LAYOUT: [(f64, f64, f64); 3] = [(0.0, -40.0, 0.6), (50.0, 0.0, 0.8), (-60.0, -5.0, 1.2)];
const WINDOW: (f64, f64) = (10.0, 30.0);
/// Gaze while distracted: up and away from every workstation.
const DISTRACTION_AZIMUTH: (f64, f64) = (-20.0, 20.0);
const DISTRACTION_ELEVATION: (f64, f64) = (50.0, 65.0);

const HUB_DWELL: (f64, f64) = (8.0, 14.0);
const VISIT_LENGTH: (f64, f64) = (2.5, 4.5);
/// Browse events fall this long after entering the instruction screen.
const BROWSE_DELAY: (f64, f64) = (0.5, 1.5);
const DISTRACTION_LENGTH: (f64, f64) = (2.0, 4.0);
/// Minimum assembly dwell on either side of a distraction.
const DISTRACTION_MARGIN: f64 = 2.0;
/// Minimum assembly dwell before a scripted handover block.
const HANDOVER_MARGIN: f64 = 3.0;
const MIN_HANDOVER_SPACING: f64 = 20.0;

const TOUCH_REACH: f64 = 0.6;
const TOUCH_HOLD: f64 = 1.2;
/// Candidate gesture slots are this far apart, leaving ≥ 5 s between
/// gestures.
const TOUCH_SLOT: f64 = 7.5;
const HYPER_LENGTH: f64 = 8.0;
const HYPER_AMPLITUDE: f64 = 0.04;
const HYPER_FREQUENCY: f64 = 2.0;

// one RNG stream per script aspect
const STREAM_TIMELINE: u64 = 1;
const STREAM_HEAD: u64 = 2;
const STREAM_SKELETON: u64 = 3;
const STREAM_DISTRACTION: u64 = 4;
const STREAM_TOUCH: u64 = 5;
const STREAM_HYPER: u64 = 6;
const STREAM_PHYSIO: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    /// Human–human: the coworker is asked verbally; no request events.
    Hhc,
    /// Requests are issued on the assistant's touch screen.
    Hri,
    /// Requests are triggered by advancing the instructions.
    Hrc,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::Hhc, Archetype::Hri, Archetype::Hrc];

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::Hhc => "hhc",
            Archetype::Hri => "hri",
            Archetype::Hrc => "hrc",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Archetype {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::UnknownArchetype(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unknown scenario `{0}` (expected hhc, hri or hrc)")]
    UnknownArchetype(String),
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub archetype: Archetype,
    /// Task duration in seconds, after the resting calibration phase.
    pub duration: f64,
    pub handovers: usize,
    /// Mean distraction episodes per minute; later blocks get more.
    pub distraction_rate: f64,
    /// Mean self-touch gestures per minute; later blocks get more.
    pub self_touch_rate: f64,
    pub hyperactivity_episodes: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(archetype: Archetype, seed: u64) -> Self {
        Self {
            archetype,
            duration: 600.0,
            handovers: 5,
            distraction_rate: 1.0,
            self_touch_rate: 0.5,
            hyperactivity_episodes: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidSpec(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        for (name, v) in [("distraction_rate", self.distraction_rate), ("self_touch_rate", self.self_touch_rate)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.handovers > 0 && self.duration / (self.handovers as f64) < MIN_HANDOVER_SPACING {
            return bad(format!(
                "{} handovers do not fit in {} s (need {} s each)",
                self.handovers, self.duration, MIN_HANDOVER_SPACING
            ));
        }
        Ok(())
    }

    /// Per-block load in [0, 1]: the block ramp scaled by the overall
    /// distraction and self-touch intensity.
    pub fn load_profile(&self) -> Vec<f64> {
        let ramp = block_ramp(block_ranges(self.duration, DEFAULT_BLOCK_LENGTH).len());
        let top = ramp.last().copied().unwrap_or(1.0);
        let intensity = ((self.distraction_rate + 2.0 * self.self_touch_rate) / 4.0).min(1.0);
        ramp.iter().map(|w| (intensity * w / top).clamp(0.0, 1.0)).collect()
    }
}

/// Relative event intensity per block, rising linearly with mean 1.
pub fn block_ramp(blocks: usize) -> Vec<f64> {
    (1..=blocks).map(|b| 2.0 * b as f64 / (blocks as f64 + 1.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocusSegment {
    pub start: f64,
    pub end: f64,
    pub target: Option<usize>,
}

/// The script behind a generated session. Times are on the task clock
/// (session time minus `calibration_duration`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub spec: ScenarioSpec,
    pub calibration_duration: f64,
    pub block_length: f64,
    /// Contiguous, covering [0, duration]; labels switch at slew midpoints.
    pub focus: Vec<FocusSegment>,
    pub attention_losses: Vec<f64>,
    /// Instruction-screen entries without a browse event that resolve
    /// before the session ends.
    pub not_required_switches: Vec<f64>,
    pub check_backs: Vec<f64>,
    pub assistant_checks: Vec<f64>,
    /// Start of the contact hold of each gesture.
    pub self_touches: Vec<f64>,
    pub requests: Vec<f64>,
    pub hyperactivity: Vec<(f64, f64)>,
    pub load_profile: Vec<f64>,
}

impl GroundTruth {
    pub fn focus_at(&self, t: f64) -> Option<usize> {
        let i = self.focus.partition_point(|s| s.start <= t);
        i.checked_sub(1).and_then(|i| self.focus[i].target)
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: f64,
    end: f64,
    target: Option<usize>,
    /// Gaze direction (yaw°, pitch°) held during the segment.
    gaze: (f64, f64),
    /// Free assembly dwell that may host a distraction.
    hub: bool,
}

#[derive(Debug, Clone, Copy)]
struct Gesture {
    start: f64,
    right: bool,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn workstation_position(id: usize) -> Vec3 {
    let (az, el, d) = LAYOUT[id - 1];
    let (az, el) = (az.to_radians(), el.to_radians());
    Vec3::new(d * el.cos() * az.sin(), d * el.sin(), d * el.cos() * az.cos())
}

/// The layout the simulated operator works in.
pub fn simulation_workstations() -> Vec<WorkstationConfig> {
    let names = ["assembly", "instructions", "assistant"];
    (1..=LAYOUT.len())
        .map(|id| WorkstationConfig {
            id,
            name: names[id - 1].to_string(),
            position: workstation_position(id),
            azimuth_window: AngularWindow::new(WINDOW.0, WINDOW.1),
            elevation_window: AngularWindow::new(WINDOW.0, WINDOW.1),
        })
        .collect()
}

/// Engine configuration matching [`simulation_workstations`], with factor
/// thresholds set near the largest values reached by ten-minute sessions
/// at up to four distractions per minute so that scores do not saturate.
pub fn simulation_config() -> EngineConfig {
    let mut config = EngineConfig::with_workstations(simulation_workstations()).expect("static layout is valid");
    for (f, tau) in [
        (Factor::ConcentrationDemand, 25.0),
        (Factor::InstructionCost, 6.0),
        (Factor::TaskDifficulty, 6.0),
        (Factor::WarinessForAssistant, 10.0),
    ] {
        config.thresholds.insert(f, tau);
    }
    config
}

fn gaze_of(target: usize) -> (f64, f64) {
    let (az, el, _) = LAYOUT[target - 1];
    (az, el)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Visit {
    Next,
    Back,
    NotRequired,
    Check,
}

struct Script {
    segments: Vec<Segment>,
    events: Vec<InteractionEvent>,
    truth: GroundTruth,
    gestures: Vec<Gesture>,
}

fn push_segment(segments: &mut Vec<Segment>, start: f64, end: f64, target: usize, rng: &mut ChaCha8Rng, hub: bool) {
    if end <= start {
        return;
    }
    // small fixation offsets keep the gaze well inside the flat window region
    let (az, el) = gaze_of(target);
    let gaze = (az + uniform(rng, (-3.0, 3.0)), el + uniform(rng, (-3.0, 3.0)));
    match segments.last_mut() {
        Some(last) if last.target == Some(target) && !hub && !last.hub => last.end = end,
        _ => segments.push(Segment {
            start,
            end,
            target: Some(target),
            gaze,
            hub,
        }),
    }
}

fn build_script(spec: &ScenarioSpec) -> Script {
    let duration = spec.duration;
    let durations = PhaseDurations::default();
    let mut rng = stream(spec.seed, STREAM_TIMELINE);
    let mut events: Vec<InteractionEvent> = Vec::new();
    let mut requests = Vec::new();

    // Handover blocks: (block start, segments relative to the request).
    let spacing = duration / spec.handovers.max(1) as f64;
    let handover_at = durations.reaching + durations.grasping + durations.delivering;
    let mut reserved: Vec<(f64, f64, f64)> = Vec::new(); // (start, request, end)
    let block = 1.0 + handover_at + durations.handing_over;
    let jitter = ((spacing - block - 2.0 * HANDOVER_MARGIN) / 2.0).clamp(0.0, 5.0);
    for i in 0..spec.handovers {
        let r = spacing * (i as f64 + 0.5) + uniform(&mut rng, (-jitter, jitter));
        let start = r - 1.0;
        let end = r + handover_at + durations.handing_over;
        if start >= HANDOVER_MARGIN && end <= duration {
            reserved.push((start, r, end));
        }
    }

    let mut segments: Vec<Segment> = Vec::new();
    let mut visits: Vec<(f64, Visit)> = Vec::new();
    let mut c = 0.0;
    let mut next_block = 0;
    while c < duration {
        let dwell = uniform(&mut rng, HUB_DWELL);
        let visit_len = uniform(&mut rng, VISIT_LENGTH);
        let roll: f64 = rng.random();
        if let Some(&(start, r, end)) = reserved.get(next_block) {
            if c + dwell + VISIT_LENGTH.1 + HANDOVER_MARGIN > start {
                push_segment(&mut segments, c, start, ASSEMBLY_WORKSTATION, &mut rng, start - c >= HUB_DWELL.0);
                let (first, first_end) = match spec.archetype {
                    Archetype::Hrc => (INSTRUCTION_WORKSTATION, r + 2.5),
                    Archetype::Hri => (ASSISTANT_WORKSTATION, r + 1.0),
                    Archetype::Hhc => (ASSEMBLY_WORKSTATION, r + 1.0),
                };
                push_segment(&mut segments, start, first_end, first, &mut rng, false);
                push_segment(&mut segments, first_end, r + handover_at, ASSEMBLY_WORKSTATION, &mut rng, false);
                push_segment(&mut segments, r + handover_at, end, ASSISTANT_WORKSTATION, &mut rng, false);
                match spec.archetype {
                    Archetype::Hrc => {
                        events.push(InteractionEvent::new(r, EventKind::InstructionNext));
                        visits.push((start, Visit::Next));
                    }
                    Archetype::Hri => visits.push((start, Visit::Check)),
                    Archetype::Hhc => {}
                }
                visits.push((r + handover_at, Visit::Check));
                if spec.archetype != Archetype::Hhc {
                    events.push(InteractionEvent::with_arg(r, EventKind::RequestComponent, format!("profile_{}", next_block + 1)));
                    requests.push(r);
                }
                c = end;
                next_block += 1;
                continue;
            }
        }
        let dwell_end = (c + dwell).min(duration);
        push_segment(&mut segments, c, dwell_end, ASSEMBLY_WORKSTATION, &mut rng, true);
        c = dwell_end;
        if c >= duration {
            break;
        }
        let kind = match roll {
            x if x < 0.55 => Visit::Next,
            x if x < 0.70 => Visit::Back,
            x if x < 0.85 => Visit::NotRequired,
            _ => Visit::Check,
        };
        let end = (c + visit_len).min(duration);
        let target = if kind == Visit::Check { ASSISTANT_WORKSTATION } else { INSTRUCTION_WORKSTATION };
        push_segment(&mut segments, c, end, target, &mut rng, false);
        let delay = uniform(&mut rng, BROWSE_DELAY);
        match kind {
            Visit::Next | Visit::Back if c + delay < end => {
                let k = if kind == Visit::Next { EventKind::InstructionNext } else { EventKind::InstructionBack };
                events.push(InteractionEvent::new(c + delay, k));
                visits.push((c, kind));
            }
            Visit::Next | Visit::Back => visits.push((c, Visit::NotRequired)),
            _ => visits.push((c, kind)),
        }
        c = end;
    }
    if let Some(last) = segments.last_mut() {
        last.end = duration;
    }

    let load_profile = spec.load_profile();
    let ranges = block_ranges(duration, DEFAULT_BLOCK_LENGTH);
    let block_of = |t: f64| -> usize {
        let b = (t / DEFAULT_BLOCK_LENGTH).floor() as usize;
        b.min(ranges.len().saturating_sub(1))
    };
    let block_span = |b: usize| -> f64 {
        // the dropped tail of the series belongs to the last block
        if b + 1 == ranges.len() { duration - ranges[b].0 } else { ranges[b].1 - ranges[b].0 }
    };
    let ramp = block_ramp(ranges.len());
    let quota = |rate: f64, b: usize| (ramp[b] * rate * block_span(b) / 60.0).round() as usize;

    // Distraction candidates: one per hub dwell, drawn whether used or not.
    let mut drng = stream(spec.seed, STREAM_DISTRACTION);
    // (segment, start, len, priority, gaze)
    type Candidate = (usize, f64, f64, f64, (f64, f64));
    let mut candidates: Vec<Candidate> = Vec::new();
    for (i, s) in segments.iter().enumerate() {
        if !s.hub {
            continue;
        }
        let len = uniform(&mut drng, DISTRACTION_LENGTH);
        let room = s.end - s.start - 2.0 * DISTRACTION_MARGIN - len;
        let offset = uniform(&mut drng, (0.0, 1.0)) * room.max(0.0);
        let priority: f64 = drng.random();
        let gaze = (uniform(&mut drng, DISTRACTION_AZIMUTH), uniform(&mut drng, DISTRACTION_ELEVATION));
        if room > 0.0 && !ranges.is_empty() {
            candidates.push((i, s.start + DISTRACTION_MARGIN + offset, len, priority, gaze));
        }
    }
    let mut chosen: Vec<(usize, f64, f64, (f64, f64))> = Vec::new();
    for b in 0..ranges.len() {
        let mut in_block: Vec<_> = candidates.iter().filter(|c| block_of(c.1) == b).collect();
        in_block.sort_by(|x, y| y.3.total_cmp(&x.3));
        chosen.extend(in_block.iter().take(quota(spec.distraction_rate, b)).map(|c| (c.0, c.1, c.2, c.4)));
    }
    chosen.sort_by_key(|c| c.0);
    let mut attention_losses = Vec::new();
    for &(i, start, len, gaze) in chosen.iter().rev() {
        let s = segments[i];
        let none = Segment {
            start,
            end: start + len,
            target: None,
            gaze,
            hub: false,
        };
        let tail = Segment { start: start + len, ..s };
        segments[i].end = start;
        segments.splice(i + 1..i + 1, [none, tail]);
        attention_losses.push(start);
    }
    attention_losses.reverse();

    // Self-touch gestures: one candidate per slot, the highest priorities win.
    let mut trng = stream(spec.seed, STREAM_TOUCH);
    let slots = (duration / TOUCH_SLOT).floor() as usize;
    let mut touch_candidates = Vec::new();
    for k in 0..slots {
        let start = k as f64 * TOUCH_SLOT + uniform(&mut trng, (0.5, 2.0));
        let priority: f64 = trng.random();
        let right = trng.random::<bool>();
        if !ranges.is_empty() && start + TOUCH_REACH + TOUCH_HOLD + TOUCH_REACH < duration {
            touch_candidates.push((start, priority, right));
        }
    }
    let mut gestures = Vec::new();
    for b in 0..ranges.len() {
        let mut in_block: Vec<_> = touch_candidates.iter().filter(|c| block_of(c.0) == b).collect();
        in_block.sort_by(|x, y| y.1.total_cmp(&x.1));
        gestures.extend(
            in_block
                .iter()
                .take(quota(spec.self_touch_rate, b))
                .map(|c| Gesture { start: c.0, right: c.2 }),
        );
    }
    gestures.sort_by(|a, b| a.start.total_cmp(&b.start));

    // Hyperactivity episodes, apportioned to blocks by the ramp.
    let mut hrng = stream(spec.seed, STREAM_HYPER);
    let mut hyperactivity = Vec::new();
    if !ranges.is_empty() && spec.hyperactivity_episodes > 0 {
        let total: f64 = ramp.iter().sum();
        let shares: Vec<f64> = ramp.iter().map(|w| w / total * spec.hyperactivity_episodes as f64).collect();
        let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
        let mut order: Vec<usize> = (0..ramp.len()).collect();
        order.sort_by(|&a, &b| (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor())).then(b.cmp(&a)));
        let missing = spec.hyperactivity_episodes - counts.iter().sum::<usize>();
        for &b in order.iter().take(missing) {
            counts[b] += 1;
        }
        for (b, &n) in counts.iter().enumerate() {
            let (lo, _) = ranges[b];
            let span = block_span(b) - HYPER_LENGTH;
            for k in 0..n {
                // stratified within the block so episodes do not pile up
                let width = span / n as f64;
                let start = lo + width * (k as f64 + uniform(&mut hrng, (0.0, 1.0)));
                hyperactivity.push((start, start + HYPER_LENGTH));
            }
        }
    }

    // Ground-truth event instants derived from the final script.
    let grace = DEFAULT_NOT_REQUIRED_SWITCH_GRACE;
    let not_required_switches = visits
        .iter()
        .filter(|(t, v)| *v == Visit::NotRequired && t + grace <= duration)
        .map(|(t, _)| *t)
        .collect();
    let assistant_checks = segments
        .iter()
        .filter(|s| s.target == Some(ASSISTANT_WORKSTATION))
        .map(|s| s.start)
        .collect();
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    let check_backs = events
        .iter()
        .filter(|e| e.kind == EventKind::InstructionBack)
        .map(|e| e.t)
        .collect();

    let focus = segments
        .iter()
        .map(|s| FocusSegment {
            start: s.start,
            end: s.end,
            target: s.target,
        })
        .collect();
    let truth = GroundTruth {
        spec: spec.clone(),
        calibration_duration: DEFAULT_CALIBRATION_DURATION,
        block_length: DEFAULT_BLOCK_LENGTH,
        focus,
        attention_losses,
        not_required_switches,
        check_backs,
        assistant_checks,
        self_touches: gestures.iter().map(|g| g.start + TOUCH_REACH).collect(),
        requests,
        hyperactivity,
        load_profile,
    };
    Script {
        segments,
        events,
        truth,
        gestures,
    }
}

/// Gaze (yaw°, pitch°) at task time `t`, slewing linearly across segment
/// boundaries.
fn gaze_at(segments: &[Segment], t: f64) -> (f64, f64) {
    let half = SLEW_DURATION / 2.0;
    let i = segments.partition_point(|s| s.start <= t).saturating_sub(1);
    let s = &segments[i];
    let lerp = |a: (f64, f64), b: (f64, f64), u: f64| (a.0 + (b.0 - a.0) * u, a.1 + (b.1 - a.1) * u);
    if i > 0 && t - s.start < half {
        lerp(segments[i - 1].gaze, s.gaze, (t - (s.start - half)) / SLEW_DURATION)
    } else if i + 1 < segments.len() && s.end - t < half {
        lerp(s.gaze, segments[i + 1].gaze, (t - (s.end - half)) / SLEW_DURATION)
    } else {
        s.gaze
    }
}

/// Resting upper-body pose, camera frame, head at the origin.
fn rest_pose() -> [Vec3; 8] {
    let mut joints = [Vec3::zeros(); 8];
    for (j, p) in [
        (Joint::Neck, Vec3::new(0.0, -0.12, 0.0)),
        (Joint::Head, Vec3::new(0.0, 0.0, 0.0)),
        (Joint::LeftShoulder, Vec3::new(0.18, -0.18, 0.0)),
        (Joint::RightShoulder, Vec3::new(-0.18, -0.18, 0.0)),
        (Joint::LeftElbow, Vec3::new(0.22, -0.45, 0.05)),
        (Joint::RightElbow, Vec3::new(-0.22, -0.45, 0.05)),
        (Joint::LeftWrist, Vec3::new(0.2, -0.5, 0.3)),
        (Joint::RightWrist, Vec3::new(-0.2, -0.5, 0.3)),
    ] {
        joints[j.index()] = p;
    }
    joints
}

/// Gesture extension in [0, 1]: reach, hold, return.
fn gesture_extension(g: &Gesture, t: f64) -> f64 {
    let u = t - g.start;
    if u <= 0.0 || u >= 2.0 * TOUCH_REACH + TOUCH_HOLD {
        0.0
    } else if u < TOUCH_REACH {
        u / TOUCH_REACH
    } else if u <= TOUCH_REACH + TOUCH_HOLD {
        1.0
    } else {
        (2.0 * TOUCH_REACH + TOUCH_HOLD - u) / TOUCH_REACH
    }
}

fn skeleton_at(script: &Script, t: f64) -> [Vec3; 8] {
    let mut joints = rest_pose();
    for g in &script.gestures {
        let s = gesture_extension(g, t);
        if s == 0.0 {
            continue;
        }
        let side = if g.right { -1.0 } else { 1.0 };
        let (wrist, elbow) = if g.right {
            (Joint::RightWrist, Joint::RightElbow)
        } else {
            (Joint::LeftWrist, Joint::LeftElbow)
        };
        let wrist_target = Vec3::new(side * 0.04, -0.03, 0.03);
        let elbow_target = Vec3::new(side * 0.25, -0.25, 0.12);
        let (w0, e0) = (joints[wrist.index()], joints[elbow.index()]);
        joints[wrist.index()] = w0 + (wrist_target - w0) * s;
        joints[elbow.index()] = e0 + (elbow_target - e0) * s;
    }
    for &(start, end) in &script.truth.hyperactivity {
        if t < start || t >= end {
            continue;
        }
        let phase = 2.0 * PI * HYPER_FREQUENCY * (t - start);
        let offset = Vec3::new(phase.sin(), 0.5 * phase.cos(), 0.0) * HYPER_AMPLITUDE;
        for (j, sign) in [(Joint::LeftWrist, 1.0), (Joint::RightWrist, -1.0), (Joint::LeftElbow, 0.5), (Joint::RightElbow, -0.5)] {
            joints[j.index()] += offset * sign;
        }
    }
    joints
}

/// Generates the session records (sorted by time, session clock) and the
/// script they were rendered from.
pub fn generate_session(spec: &ScenarioSpec) -> Result<(Vec<Record>, GroundTruth), SimError> {
    spec.validate()?;
    let script = build_script(spec);
    let calib = script.truth.calibration_duration;
    let end = calib + spec.duration;

    let angle_noise = Normal::new(0.0, HEAD_ANGLE_NOISE_DEG).expect("valid std");
    let position_noise = Normal::new(0.0, JOINT_NOISE_M).expect("valid std");

    let mut heads = Vec::new();
    let mut hrng = stream(spec.seed, STREAM_HEAD);
    let rest_gaze = gaze_of(ASSEMBLY_WORKSTATION);
    let mut k = 0u64;
    loop {
        let t = k as f64 / HEAD_POSE_RATE;
        if t > end {
            break;
        }
        let (yaw, pitch) = if t < calib { rest_gaze } else { gaze_at(&script.segments, t - calib) };
        let mut n = || angle_noise.sample(&mut hrng);
        let (dy, dp, dr) = (n(), n(), n());
        let orientation = gaze_rotation(yaw + dy, pitch + dp)
            * nalgebra::UnitQuaternion::from_axis_angle(&Vec3::z_axis(), dr.to_radians());
        let position = Vec3::new(
            position_noise.sample(&mut hrng),
            position_noise.sample(&mut hrng),
            position_noise.sample(&mut hrng),
        );
        heads.push(Record::HeadPose(HeadPoseSample { t, position, orientation }));
        k += 1;
    }

    let mut skeletons = Vec::new();
    let mut srng = stream(spec.seed, STREAM_SKELETON);
    let mut k = 0u64;
    loop {
        let t = k as f64 / SKELETON_RATE;
        if t > end {
            break;
        }
        let mut joints = if t < calib { rest_pose() } else { skeleton_at(&script, t - calib) };
        for p in joints.iter_mut() {
            for axis in 0..3 {
                p[axis] += position_noise.sample(&mut srng);
            }
        }
        skeletons.push(Record::Skeleton(SkeletonSample::new(t, joints)));
        k += 1;
    }

    let mut events: Vec<Record> = script
        .events
        .iter()
        .map(|e| Record::Event(InteractionEvent { t: e.t + calib, ..e.clone() }))
        .collect();
    if spec.archetype != Archetype::Hhc {
        let commands: Vec<(f64, FsmInput)> = script
            .events
            .iter()
            .filter(|e| e.kind == EventKind::RequestComponent)
            .map(|e| (e.t + calib, FsmInput::from_event(e).expect("request is an FSM input")))
            .collect();
        let trace = run_scripted_assistant(&commands, &PhaseDurations::default())
            .expect("scripted requests are spaced beyond one cycle");
        events.extend(
            trace
                .iter()
                .filter(|f| f.t <= end)
                .map(|f| Record::Event(InteractionEvent::with_arg(f.t, EventKind::FsmFeedback, f.phase.label()))),
        );
    }
    events.sort_by(|a, b| a.t().total_cmp(&b.t()));

    // merge; at equal instants head poses precede skeletons precede events
    let mut records = Vec::with_capacity(heads.len() + skeletons.len() + events.len());
    records.extend(heads);
    records.extend(skeletons);
    records.extend(events);
    records.sort_by(|a, b| a.t().total_cmp(&b.t()));
    Ok((records, script.truth))
}

/// Synthetic physiology for a per-block load profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysioSignals {
    /// Successive RR intervals in seconds, starting at task time 0.
    pub rr: Vec<f64>,
    /// Skin conductance in µS sampled at `eda_rate` from task time 0.
    pub eda: Vec<f64>,
    pub eda_rate: f64,
    pub duration: f64,
}

impl PhysioSignals {
    pub fn eda_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.eda.len()).map(move |i| i as f64 / self.eda_rate)
    }
}

/// RR intervals whose LF (0.1 Hz) modulation grows and HF (0.25 Hz)
/// modulation shrinks with block load, and skin conductance whose tonic
/// level, SCR count and SCR amplitude grow with load over a slow drift.
pub fn generate_physio(load_profile: &[f64], block_length: f64, seed: u64) -> PhysioSignals {
    let duration = load_profile.len() as f64 * block_length;
    let mut rng = stream(seed, STREAM_PHYSIO);
    let load_at = |t: f64| -> f64 {
        let b = ((t / block_length).floor() as usize).min(load_profile.len().saturating_sub(1));
        load_profile.get(b).copied().unwrap_or(0.0).clamp(0.0, 1.0)
    };

    let jitter = Normal::new(0.0, 0.004).expect("valid std");
    let (phi_lf, phi_hf) = (uniform(&mut rng, (0.0, 2.0 * PI)), uniform(&mut rng, (0.0, 2.0 * PI)));
    let mut rr = Vec::new();
    let mut t = 0.0;
    while t < duration {
        let load = load_at(t);
        let lf = 0.03 * (0.5 + load) * (2.0 * PI * 0.1 * t + phi_lf).sin();
        let hf = 0.03 * (1.5 - load) * (2.0 * PI * 0.25 * t + phi_hf).sin();
        let interval = 0.8 + lf + hf + jitter.sample(&mut rng);
        rr.push(interval);
        t += interval;
    }

    // tonic level follows the load with 10 s ramps between blocks
    let n = (duration * EDA_RATE).round() as usize;
    let drift_phase = uniform(&mut rng, (0.0, 2.0 * PI));
    let ramp = 10.0;
    let smooth_load = |t: f64| -> f64 {
        let b = (t / block_length).floor();
        let into = t - b * block_length;
        let here = load_at(t);
        if b >= 1.0 && into < ramp / 2.0 {
            let prev = load_at(t - into - 1e-9);
            prev + (here - prev) * (into + ramp / 2.0) / ramp
        } else if into > block_length - ramp / 2.0 && ((b + 1.0) * block_length) < duration {
            let next = load_at((b + 1.0) * block_length);
            here + (next - here) * (into - (block_length - ramp / 2.0)) / ramp
        } else {
            here
        }
    };
    let mut bumps: Vec<(f64, f64)> = Vec::new();
    for (b, &load) in load_profile.iter().enumerate() {
        let load = load.clamp(0.0, 1.0);
        let count = (3.0 + 9.0 * load).round() as usize;
        let lo = b as f64 * block_length;
        let width = block_length / count as f64;
        for k in 0..count {
            // one bump per stratum keeps responses separable
            let at = lo + width * (k as f64 + uniform(&mut rng, (0.25, 0.75)));
            let amplitude = (0.1 + 0.4 * load) * uniform(&mut rng, (0.8, 1.2));
            bumps.push((at, amplitude));
        }
    }
    let eda = (0..n)
        .map(|i| {
            let t = i as f64 / EDA_RATE;
            let tonic = 2.0 + 3.0 * smooth_load(t) + 0.15 * (2.0 * PI * t / 400.0 + drift_phase).sin();
            let phasic: f64 = bumps
                .iter()
                .filter(|(c, _)| (t - c).abs() < 6.0)
                .map(|(c, a)| a * (-0.5 * (t - c).powi(2)).exp())
                .sum();
            tonic + phasic
        })
        .collect();
    PhysioSignals {
        rr,
        eda,
        eda_rate: EDA_RATE,
        duration,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::Phase;
    use crate::session::write_session;

    fn spec(archetype: Archetype, seed: u64) -> ScenarioSpec {
        ScenarioSpec::new(archetype, seed)
    }

    #[test]
    fn hrc_has_five_request_cycles() {
        let (records, truth) = generate_session(&spec(Archetype::Hrc, 42)).unwrap();
        let requests = records
            .iter()
            .filter(|r| matches!(r, Record::Event(e) if e.kind == EventKind::RequestComponent))
            .count();
        assert_eq!(requests, 5);
        assert_eq!(truth.requests.len(), 5);
        let idle_returns = records
            .iter()
            .filter(|r| matches!(r, Record::Event(e) if e.kind == EventKind::FsmFeedback && e.arg.as_deref() == Some(Phase::InputWaiting.label())))
            .count();
        assert_eq!(idle_returns, 5);
        // every request follows an instruction_next at the same instant
        for &r in &truth.requests {
            assert!(records.iter().any(|x| matches!(x, Record::Event(e) if e.kind == EventKind::InstructionNext && e.t == r + truth.calibration_duration)));
        }
    }

    #[test]
    fn archetype_event_styles() {
        let (records, _) = generate_session(&spec(Archetype::Hhc, 3)).unwrap();
        assert!(!records.iter().any(|r| matches!(r, Record::Event(e) if e.kind == EventKind::RequestComponent || e.kind == EventKind::FsmFeedback)));
        let (records, truth) = generate_session(&spec(Archetype::Hri, 3)).unwrap();
        assert_eq!(truth.requests.len(), 5);
        // requests are issued while looking at the assistant screen
        for &r in &truth.requests {
            assert_eq!(truth.focus_at(r), Some(ASSISTANT_WORKSTATION));
        }
        assert!(records.iter().any(|r| matches!(r, Record::Event(e) if e.kind == EventKind::FsmFeedback)));
    }

    #[test]
    fn byte_deterministic() {
        let s = spec(Archetype::Hrc, 7);
        let (a, ta) = generate_session(&s).unwrap();
        let (b, tb) = generate_session(&s).unwrap();
        assert_eq!(write_session(&a), write_session(&b));
        assert_eq!(ta, tb);
        let (c, _) = generate_session(&spec(Archetype::Hrc, 8)).unwrap();
        assert_ne!(write_session(&a), write_session(&c));
    }

    #[test]
    fn distractions_grow_with_rate() {
        let mut quiet = spec(Archetype::Hri, 11);
        quiet.distraction_rate = 0.0;
        let mut busy = quiet.clone();
        busy.distraction_rate = 4.0;
        let (_, tq) = generate_session(&quiet).unwrap();
        let (_, tb) = generate_session(&busy).unwrap();
        assert!(tq.attention_losses.is_empty());
        assert!(tb.attention_losses.len() > tq.attention_losses.len());
        // a higher rate only adds episodes
        let mut mid = quiet.clone();
        mid.distraction_rate = 1.0;
        let (_, tm) = generate_session(&mid).unwrap();
        assert!(tm.attention_losses.iter().all(|t| tb.attention_losses.contains(t)));
    }

    #[test]
    fn truth_timeline_is_contiguous() {
        for seed in 1..5 {
            let (_, truth) = generate_session(&spec(Archetype::Hrc, seed)).unwrap();
            assert_eq!(truth.focus[0].start, 0.0);
            assert_eq!(truth.focus.last().unwrap().end, 600.0);
            for w in truth.focus.windows(2) {
                assert_eq!(w[0].end, w[1].start);
                assert!(w[0].end > w[0].start);
            }
            for &t in &truth.attention_losses {
                assert_eq!(truth.focus_at(t), None);
            }
        }
    }

    #[test]
    fn record_rates_and_order() {
        let mut s = spec(Archetype::Hhc, 1);
        s.duration = 30.0;
        s.handovers = 1;
        let (records, _) = generate_session(&s).unwrap();
        let heads = records.iter().filter(|r| matches!(r, Record::HeadPose(_))).count();
        let skels = records.iter().filter(|r| matches!(r, Record::Skeleton(_))).count();
        assert_eq!(heads, 90 * 20 + 1);
        assert_eq!(skels, 90 * 15 + 1);
        assert!(records.windows(2).all(|w| w[0].t() <= w[1].t()));
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(Archetype::Hrc, 1);
        s.duration = 0.0;
        assert!(matches!(generate_session(&s), Err(SimError::InvalidSpec(_))));
        let mut s = spec(Archetype::Hrc, 1);
        s.self_touch_rate = -1.0;
        assert!(s.validate().is_err());
        assert!("robot".parse::<Archetype>().is_err());
        assert_eq!("HRC".parse::<Archetype>().unwrap(), Archetype::Hrc);
    }

    #[test]
    fn gestures_reach_the_head() {
        let mut script = build_script(&spec(Archetype::Hhc, 1));
        script.gestures = vec![Gesture { start: 10.0, right: true }];
        script.truth.hyperactivity.clear();
        let held = skeleton_at(&script, 11.0);
        let d = (held[Joint::RightWrist.index()] - held[Joint::Head.index()]).norm();
        assert!(d < 0.1);
        let rest = skeleton_at(&script, 5.0);
        assert!((rest[Joint::RightWrist.index()] - rest[Joint::Head.index()]).norm() > 0.4);
    }

    #[test]
    fn load_profile_shape() {
        let s = spec(Archetype::Hrc, 1);
        let p = s.load_profile();
        assert_eq!(p.len(), 4);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        let mut zero = s.clone();
        zero.distraction_rate = 0.0;
        zero.self_touch_rate = 0.0;
        assert!(zero.load_profile().iter().all(|&l| l == 0.0));
        assert_eq!(block_ramp(4), vec![0.4, 0.8, 1.2, 1.6]);
    }

    #[test]
    fn physio_tracks_load() {
        let p = generate_physio(&[], 150.0, 1);
        assert!(p.rr.is_empty() && p.eda.is_empty() && p.duration == 0.0);
        let p = generate_physio(&[0.0, 1.0], 150.0, 1);
        assert_eq!(p.eda.len(), 300 * 16);
        let total: f64 = p.rr.iter().sum();
        assert!((total - 300.0).abs() < 1.0);
        let a = generate_physio(&[0.3, 0.6], 150.0, 9);
        assert_eq!(a, generate_physio(&[0.3, 0.6], 150.0, 9));
        // the tonic level rises with load
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean(&p.eda[2400..]) > mean(&p.eda[..2400]) + 2.0);
    }
}
