//! The per-loop pipeline: records are consumed in time order and the loop
//! runs at `loop_rate` on the task clock, which starts when the calibration
//! segment ends. Each loop holds the latest value of every stream (zero-order
//! hold) and produces attention levels, focus, transitions, factors and
//! scores.

use serde::Serialize;

use crate::attention::{attention_levels, classify_focus};
use crate::config::EngineConfig;
use crate::factors::{scores, FactorEvent, FactorState, FactorVector, ScorePair};
use crate::interaction::{fsm_step, AssistantState, FsmInput, Phase, TaskProgress};
use crate::kalman::PoseFilter;
use crate::kinematics::{
    activity_level, calibrate_baseline, ActivitySample, MotionBaseline, MotionHistory, SelfTouchDetector,
    SelfTouchEvent,
};
use crate::session::{EventKind, HeadPoseSample, Record, SkeletonSample};
use crate::transitions::{AttentionTransition, TransitionDetector, TransitionKind, TransitionParams};

const EPS: f64 = 1e-9;

/// Everything computed at one loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopOutput {
    /// Loop index, starting at 1.
    pub k: u64,
    /// Task-clock instant.
    pub t: f64,
    pub levels: Vec<f64>,
    pub focus: Option<usize>,
    pub transitions: Vec<AttentionTransition>,
    pub self_touches: Vec<SelfTouchEvent>,
    /// Events appended to the factor logs during this loop, in order.
    pub factor_events: Vec<(FactorEvent, f64)>,
    pub activity: Option<ActivitySample>,
    /// Wrist contact (left, right) at the latest skeleton sample.
    pub contact: [bool; 2],
    pub factors: FactorVector,
    pub scores: ScorePair,
    pub assistant: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EngineCounts {
    pub head_poses: usize,
    pub skeletons: usize,
    pub events: usize,
    pub loops: u64,
    pub attention_losses: usize,
    pub focus_switches: usize,
    pub assistant_checks: usize,
    pub not_required_switches: usize,
    pub check_backs: usize,
    pub self_touches: usize,
    pub filter_resets: usize,
    pub assistant_feedback: usize,
}

pub struct Engine {
    config: EngineConfig,
    filter: PoseFilter,
    pose: Option<HeadPoseSample>,
    detector: TransitionDetector,
    history: MotionHistory,
    touch: SelfTouchDetector,
    calibration: Vec<SkeletonSample>,
    baseline: Option<MotionBaseline>,
    calibrated: bool,
    progress: TaskProgress,
    assistant: AssistantState,
    factors: FactorState,
    k: u64,
    pending_events: Vec<(FactorEvent, f64)>,
    pending_touches: Vec<SelfTouchEvent>,
    last_record_t: Option<f64>,
    counts: EngineCounts,
    warnings: Vec<String>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Self {
            filter: PoseFilter::new(config.kalman),
            pose: None,
            detector: TransitionDetector::new(TransitionParams::from_config(&config)),
            history: MotionHistory::new(config.motion_window),
            touch: SelfTouchDetector::new(config.self_touch_distance, config.self_touch_debounce),
            calibration: Vec::new(),
            baseline: None,
            calibrated: false,
            progress: TaskProgress::default(),
            assistant: AssistantState::default(),
            factors: FactorState::new(config.workstations.len(), config.loop_rate),
            k: 0,
            pending_events: Vec::new(),
            pending_touches: Vec::new(),
            last_record_t: None,
            counts: EngineCounts::default(),
            warnings: Vec::new(),
            config,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn counts(&self) -> &EngineCounts {
        &self.counts
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn baseline(&self) -> Option<&MotionBaseline> {
        self.baseline.as_ref()
    }

    pub fn progress(&self) -> &TaskProgress {
        &self.progress
    }

    pub fn factor_state(&self) -> &FactorState {
        &self.factors
    }

    /// Session-clock instant of loop `k`.
    fn loop_time(&self, k: u64) -> f64 {
        self.config.calibration_duration + k as f64 / self.config.loop_rate
    }

    fn task_time(&self, t: f64) -> f64 {
        t - self.config.calibration_duration
    }

    /// Consumes one record. Loops strictly before the record's instant run
    /// first and are appended to `out`. Records must arrive in time order.
    pub fn push(&mut self, record: &Record, out: &mut Vec<LoopOutput>) {
        let t = record.t();
        self.run_loops_until(|lt| lt < t - EPS, out);
        self.last_record_t = Some(self.last_record_t.map_or(t, |prev| prev.max(t)));
        match record {
            Record::HeadPose(p) => self.on_head_pose(p),
            Record::Skeleton(s) => self.on_skeleton(s),
            Record::Event(e) => self.on_event(e),
        }
    }

    /// Runs the remaining loops up to the last record's instant.
    pub fn finish(&mut self, out: &mut Vec<LoopOutput>) {
        if let Some(end) = self.last_record_t {
            self.run_loops_until(|lt| lt <= end + EPS, out);
        }
        if self.counts.skeletons == 0 {
            self.warnings
                .push("no skeleton records: hyperactivity is undefined for the whole session".into());
        }
        if self.k == 0 {
            self.warnings.push("session ends before the task clock starts: no loops".into());
        }
    }

    /// Convenience wrapper: runs a whole record sequence.
    pub fn run(config: EngineConfig, records: &[Record]) -> (Vec<LoopOutput>, Engine) {
        let mut engine = Engine::new(config);
        let mut out = Vec::new();
        for r in records {
            engine.push(r, &mut out);
        }
        engine.finish(&mut out);
        (out, engine)
    }

    fn run_loops_until(&mut self, mut keep_going: impl FnMut(f64) -> bool, out: &mut Vec<LoopOutput>) {
        loop {
            let lt = self.loop_time(self.k + 1);
            if !keep_going(lt) {
                break;
            }
            self.k += 1;
            let o = self.step(lt);
            out.push(o);
        }
    }

    fn on_head_pose(&mut self, raw: &HeadPoseSample) {
        self.counts.head_poses += 1;
        let filtered = self.filter.smooth(raw);
        if filtered.reset {
            self.counts.filter_resets += 1;
        }
        self.pose = Some(filtered.pose);
    }

    fn on_skeleton(&mut self, s: &SkeletonSample) {
        self.counts.skeletons += 1;
        if s.t < self.config.calibration_duration - EPS {
            self.calibration.push(s.clone());
        }
        self.history.push(s);
        for ev in self.touch.update(s) {
            let t = self.task_time(ev.t);
            if t >= 0.0 {
                self.counts.self_touches += 1;
                self.pending_events.push((FactorEvent::SelfTouch, t));
                self.pending_touches.push(SelfTouchEvent { t, hand: ev.hand });
            }
        }
    }

    fn on_event(&mut self, e: &crate::session::InteractionEvent) {
        self.counts.events += 1;
        let t = self.task_time(e.t);
        match e.kind {
            EventKind::InstructionNext | EventKind::InstructionBack => {
                if let Some(tb) = self.progress.apply(e) {
                    if t >= 0.0 {
                        self.counts.check_backs += 1;
                        self.pending_events.push((FactorEvent::CheckBack, self.task_time(tb)));
                    }
                }
                self.detector.notify_browse(t);
            }
            EventKind::FsmFeedback => {
                self.counts.assistant_feedback += 1;
                match e.arg.as_deref().map(str::parse::<Phase>) {
                    Some(Ok(phase)) => {
                        self.assistant.phase = phase;
                        self.assistant.paused = false;
                        self.assistant.paused_from = None;
                        if !phase.carries_component() {
                            self.assistant.active_component = None;
                        } else if self.assistant.active_component.is_none() {
                            self.assistant.active_component = Some(String::new());
                        }
                    }
                    Some(Err(err)) => self.warnings.push(format!("t={}: {err}", e.t)),
                    None => self.warnings.push(format!("t={}: fsm_feedback without a state name", e.t)),
                }
            }
            _ => {
                if let Some(input) = FsmInput::from_event(e) {
                    match fsm_step(&self.assistant, &input) {
                        Ok((next, _)) => self.assistant = next,
                        Err(err) => self.warnings.push(format!("t={}: assistant: {err}", e.t)),
                    }
                }
            }
        }
    }

    fn step(&mut self, session_t: f64) -> LoopOutput {
        // exact multiples of the loop period, equal to the elapsed time
        let t = self.k as f64 / self.config.loop_rate;
        if !self.calibrated {
            self.calibrated = true;
            match calibrate_baseline(&self.calibration, self.config.motion_window, self.config.loop_rate) {
                Ok(b) => self.baseline = Some(b),
                Err(e) if self.counts.skeletons > 0 => {
                    self.warnings.push(format!("motion baseline unavailable: {e}"));
                }
                Err(_) => {}
            }
            self.calibration = Vec::new();
        }

        let levels = match &self.pose {
            Some(p) => attention_levels(p, &self.config).levels,
            None => vec![0.0; self.config.workstations.len()],
        };
        let focus = classify_focus(&levels, self.config.attention_threshold);
        let transitions = self.detector.update(t, focus);
        for tr in &transitions {
            let kind = match tr.kind {
                TransitionKind::AttentionLoss => {
                    self.counts.attention_losses += 1;
                    Some(FactorEvent::AttentionLoss)
                }
                TransitionKind::NotRequiredInstructionSwitch => {
                    self.counts.not_required_switches += 1;
                    Some(FactorEvent::NotRequiredSwitch)
                }
                TransitionKind::AssistantCheck => {
                    self.counts.assistant_checks += 1;
                    Some(FactorEvent::AssistantCheck)
                }
                TransitionKind::FocusSwitch => {
                    self.counts.focus_switches += 1;
                    None
                }
            };
            if let Some(kind) = kind {
                self.pending_events.push((kind, tr.t));
            }
        }

        let factor_events = std::mem::take(&mut self.pending_events);
        for &(kind, te) in &factor_events {
            self.factors.record(kind, te);
        }
        self.factors.accumulate(focus);

        let activity = match &self.baseline {
            Some(b) if !self.history.is_empty() => activity_level(t, &self.history.motion(session_t), b),
            _ => None,
        };
        let factors = self
            .factors
            .factor_vector(activity.map(|a| a.level), t)
            .expect("at least one loop accumulated");
        let scores =
            scores(&factors, &self.config.weights, &self.config.thresholds).expect("config carries every weight");
        self.counts.loops = self.k;

        LoopOutput {
            k: self.k,
            t,
            levels,
            focus,
            transitions,
            self_touches: std::mem::take(&mut self.pending_touches),
            factor_events,
            activity,
            contact: self.touch.contact(),
            factors,
            scores,
            assistant: if self.assistant.paused {
                "paused".to_string()
            } else {
                self.assistant.phase.snake_name().to_string()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AngularWindow, WorkstationConfig};
    use crate::factors::recompute_factors;
    use crate::kalman::gaze_rotation;
    use crate::session::{InteractionEvent, Vec3};

    fn config() -> EngineConfig {
        let ws = |id, name: &str, p: Vec3| WorkstationConfig {
            id,
            name: name.into(),
            position: p,
            azimuth_window: AngularWindow::new(10.0, 30.0),
            elevation_window: AngularWindow::new(10.0, 30.0),
        };
        let mut c = EngineConfig::with_workstations(vec![
            ws(1, "assembly", Vec3::new(0.0, 0.0, 1.0)),
            ws(2, "instructions", Vec3::new(1.0, 0.0, 0.0)),
            ws(3, "assistant", Vec3::new(-1.0, 0.0, 0.0)),
        ])
        .unwrap();
        c.calibration_duration = 0.0;
        c
    }

    fn look(t: f64, yaw: f64) -> Record {
        Record::HeadPose(HeadPoseSample {
            t,
            position: Vec3::zeros(),
            orientation: gaze_rotation(yaw, 0.0),
        })
    }

    /// Head pose at 15 Hz following (yaw, duration) segments.
    fn script(segments: &[(f64, f64)]) -> Vec<Record> {
        let mut out = Vec::new();
        let mut start = 0.0;
        let mut k = 0;
        for &(yaw, d) in segments {
            while (k as f64) / 15.0 < start + d - 1e-9 {
                out.push(look(k as f64 / 15.0, yaw));
                k += 1;
            }
            start += d;
        }
        out
    }

    #[test]
    fn dwell_and_events_flow_into_factors() {
        // W1 ahead (yaw 0), W2 at yaw 90, W3 at yaw -90, 170 = nothing
        let mut records = script(&[(0.0, 10.0), (90.0, 2.0), (0.0, 5.0), (-90.0, 2.0), (170.0, 3.0), (0.0, 8.0)]);
        records.push(Record::Event(InteractionEvent::new(25.0, EventKind::InstructionBack)));
        records.sort_by(|a, b| a.t().total_cmp(&b.t()));
        let (out, engine) = Engine::run(config(), &records);
        let c = engine.counts();
        assert_eq!(c.assistant_checks, 1);
        assert_eq!(c.attention_losses, 1);
        assert_eq!(c.not_required_switches, 1);
        assert_eq!(c.check_backs, 1);
        let last = out.last().unwrap();
        let fractions: f64 = engine.factor_state().dwell_fractions().iter().sum();
        assert!((last.factors.concentration_loss + fractions - 1.0).abs() < 1e-12);
        assert!(last.factors.concentration_loss > 0.05);
        assert_eq!(last.factors.hyperactivity, None);

        // streaming factors equal the reference recomputation at every loop
        let mut focus = Vec::new();
        let mut events = Vec::new();
        for o in &out {
            focus.push(o.focus);
            events.extend(o.factor_events.iter().copied());
            let oracle = recompute_factors(&focus, &events, 3, 15.0, o.factors.hyperactivity, o.t).unwrap();
            assert_eq!(o.factors, oracle);
        }
    }

    #[test]
    fn loops_run_on_the_task_clock() {
        let mut c = config();
        c.calibration_duration = 2.0;
        let records = script(&[(0.0, 4.0)]);
        let (out, _) = Engine::run(c, &records);
        assert_eq!(out.first().unwrap().t, 1.0 / 15.0);
        assert!(out.iter().all(|o| o.t > 0.0));
        assert!(out.last().unwrap().t <= 2.0);
        assert_eq!(out.len(), 29);
    }

    #[test]
    fn assistant_column_follows_feedback() {
        let mut records = script(&[(0.0, 3.0)]);
        records.push(Record::Event(InteractionEvent::with_arg(1.0, EventKind::RequestComponent, "p1")));
        records.push(Record::Event(InteractionEvent::with_arg(1.0, EventKind::FsmFeedback, "Reaching component")));
        records.push(Record::Event(InteractionEvent::new(2.0, EventKind::Pause)));
        records.sort_by(|a, b| a.t().total_cmp(&b.t()));
        let (out, engine) = Engine::run(config(), &records);
        assert_eq!(out[5].assistant, "input_waiting");
        assert_eq!(out[20].assistant, "reaching_component");
        assert_eq!(out.last().unwrap().assistant, "paused");
        assert!(engine.warnings().iter().any(|w| w.contains("skeleton")));
    }
}
