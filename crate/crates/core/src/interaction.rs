//! Instruction browsing and the assistant state machine.
//!
//! The assistant cycles InputWaiting → ReachingComponent → Grasping →
//! Delivering → HandingOver → Homing → InputWaiting. Phase completion is an
//! explicit input, so the machine itself is a pure function; the scripted
//! runner supplies phase completions from a table of phase durations.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::session::{EventKind, InteractionEvent};

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TaskProgress {
    pub current_step: usize,
    pub steps_completed: usize,
    /// Upper bound on `current_step`, when the instruction set is known.
    pub total_steps: Option<usize>,
    pub check_backs: Vec<f64>,
}

impl TaskProgress {
    pub fn new(total_steps: Option<usize>) -> Self {
        Self {
            total_steps,
            ..Self::default()
        }
    }

    /// Applies an instruction_next/back event; returns the instant of a newly
    /// recorded check-back. Other event kinds are ignored. A second back
    /// event at the same instant as the previous one is a duplicate and is
    /// not recorded again.
    pub fn apply(&mut self, event: &InteractionEvent) -> Option<f64> {
        match event.kind {
            EventKind::InstructionNext => {
                if self.total_steps.is_none_or(|n| self.current_step < n) {
                    self.current_step += 1;
                }
                self.steps_completed += 1;
                None
            }
            EventKind::InstructionBack => {
                self.current_step = self.current_step.saturating_sub(1);
                if self.check_backs.last().is_some_and(|&last| event.t <= last) {
                    return None;
                }
                self.check_backs.push(event.t);
                Some(event.t)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    InputWaiting,
    ReachingComponent,
    Grasping,
    Delivering,
    HandingOver,
    Homing,
    ReturningPart,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::InputWaiting,
        Phase::ReachingComponent,
        Phase::Grasping,
        Phase::Delivering,
        Phase::HandingOver,
        Phase::Homing,
        Phase::ReturningPart,
    ];

    /// Feedback label shown to the operator.
    pub fn label(self) -> &'static str {
        match self {
            Phase::InputWaiting => "Input waiting",
            Phase::ReachingComponent => "Reaching component",
            Phase::Grasping => "Grasping",
            Phase::Delivering => "Delivering",
            Phase::HandingOver => "Handing over",
            Phase::Homing => "Homing",
            Phase::ReturningPart => "Returning part",
        }
    }

    pub fn snake_name(self) -> &'static str {
        match self {
            Phase::InputWaiting => "input_waiting",
            Phase::ReachingComponent => "reaching_component",
            Phase::Grasping => "grasping",
            Phase::Delivering => "delivering",
            Phase::HandingOver => "handing_over",
            Phase::Homing => "homing",
            Phase::ReturningPart => "returning_part",
        }
    }

    /// Phases during which the assistant holds a component.
    pub fn carries_component(self) -> bool {
        !matches!(self, Phase::InputWaiting | Phase::Homing)
    }

    /// Phases that a reset can abort: the part has been picked or is about
    /// to be.
    pub fn resettable(self) -> bool {
        matches!(
            self,
            Phase::ReachingComponent | Phase::Grasping | Phase::Delivering | Phase::HandingOver
        )
    }

    fn after_done(self) -> Option<Phase> {
        Some(match self {
            Phase::InputWaiting => return None,
            Phase::ReachingComponent => Phase::Grasping,
            Phase::Grasping => Phase::Delivering,
            Phase::Delivering => Phase::HandingOver,
            Phase::HandingOver => Phase::Homing,
            Phase::Homing => Phase::InputWaiting,
            Phase::ReturningPart => Phase::Homing,
        })
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown assistant state `{0}`")]
pub struct UnknownPhase(pub String);

impl FromStr for Phase {
    type Err = UnknownPhase;

    /// Accepts the feedback label or its snake_case form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s) || p.snake_name() == s)
            .ok_or_else(|| UnknownPhase(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssistantState {
    pub phase: Phase,
    pub paused: bool,
    pub paused_from: Option<Phase>,
    pub active_component: Option<String>,
}

impl Default for AssistantState {
    fn default() -> Self {
        Self {
            phase: Phase::InputWaiting,
            paused: false,
            paused_from: None,
            active_component: None,
        }
    }
}

impl AssistantState {
    pub fn is_consistent(&self) -> bool {
        self.paused == self.paused_from.is_some()
            && self.active_component.is_some() == self.phase.carries_component()
            && self.paused_from.is_none_or(|p| p == self.phase)
    }

    fn entering(&self, phase: Phase) -> Self {
        Self {
            phase,
            paused: false,
            paused_from: None,
            active_component: if phase.carries_component() {
                self.active_component.clone()
            } else {
                None
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FsmInput {
    Request(String),
    Pause,
    Resume,
    Reset,
    PhaseDone,
}

impl FsmInput {
    /// The machine input carried by a session event, if any.
    pub fn from_event(event: &InteractionEvent) -> Option<Self> {
        match event.kind {
            EventKind::RequestComponent => Some(FsmInput::Request(event.arg.clone().unwrap_or_default())),
            EventKind::Pause => Some(FsmInput::Pause),
            EventKind::Resume => Some(FsmInput::Resume),
            EventKind::Reset => Some(FsmInput::Reset),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            FsmInput::Request(_) => "request",
            FsmInput::Pause => "pause",
            FsmInput::Resume => "resume",
            FsmInput::Reset => "reset",
            FsmInput::PhaseDone => "phase_done",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{input} is not valid in state {phase}{}", if *.paused { " (paused)" } else { "" })]
pub struct InvalidInput {
    pub phase: Phase,
    pub paused: bool,
    pub input: &'static str,
}

/// One transition. Returns the new state and the phase entered, if any;
/// every entered phase produces one feedback entry.
pub fn fsm_step(state: &AssistantState, input: &FsmInput) -> Result<(AssistantState, Option<Phase>), InvalidInput> {
    let invalid = || InvalidInput {
        phase: state.phase,
        paused: state.paused,
        input: input.name(),
    };
    match input {
        FsmInput::Request(component) => {
            if state.phase != Phase::InputWaiting || state.paused || component.is_empty() {
                return Err(invalid());
            }
            let next = AssistantState {
                phase: Phase::ReachingComponent,
                paused: false,
                paused_from: None,
                active_component: Some(component.clone()),
            };
            Ok((next, Some(Phase::ReachingComponent)))
        }
        FsmInput::Pause => {
            if state.paused || state.phase == Phase::InputWaiting {
                return Err(invalid());
            }
            let mut next = state.clone();
            next.paused = true;
            next.paused_from = Some(state.phase);
            Ok((next, None))
        }
        FsmInput::Resume => {
            let Some(phase) = state.paused_from else {
                return Err(invalid());
            };
            let mut next = state.clone();
            next.phase = phase;
            next.paused = false;
            next.paused_from = None;
            Ok((next, None))
        }
        FsmInput::Reset => {
            if !state.phase.resettable() {
                return Err(invalid());
            }
            Ok((state.entering(Phase::ReturningPart), Some(Phase::ReturningPart)))
        }
        FsmInput::PhaseDone => {
            if state.paused {
                return Err(invalid());
            }
            let phase = state.phase.after_done().ok_or_else(invalid)?;
            Ok((state.entering(phase), Some(phase)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssistantFeedback {
    pub t: f64,
    pub phase: Phase,
}

/// Seconds spent in each timed phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDurations {
    pub reaching: f64,
    pub grasping: f64,
    pub delivering: f64,
    pub handing_over: f64,
    pub homing: f64,
    pub returning_part: f64,
}

impl Default for PhaseDurations {
    fn default() -> Self {
        Self {
            reaching: 3.0,
            grasping: 2.0,
            delivering: 3.0,
            handing_over: 4.0,
            homing: 3.0,
            returning_part: 4.0,
        }
    }
}

impl PhaseDurations {
    pub fn of(&self, phase: Phase) -> Option<f64> {
        Some(match phase {
            Phase::InputWaiting => return None,
            Phase::ReachingComponent => self.reaching,
            Phase::Grasping => self.grasping,
            Phase::Delivering => self.delivering,
            Phase::HandingOver => self.handing_over,
            Phase::Homing => self.homing,
            Phase::ReturningPart => self.returning_part,
        })
    }

    /// Duration of one undisturbed request-to-idle cycle.
    pub fn cycle(&self) -> f64 {
        self.reaching + self.grasping + self.delivering + self.handing_over + self.homing
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("at t={t}: {source}")]
pub struct ScriptError {
    pub t: f64,
    #[source]
    pub source: InvalidInput,
}

/// Drives the machine on a clock: commands are applied at their instants
/// and each timed phase completes after its duration. Pausing freezes the
/// remaining time of the current phase. Commands must be time-ordered; at
/// equal instants a phase completion is applied before the command. After
/// the last command the machine runs until it is idle.
pub fn run_scripted_assistant(
    commands: &[(f64, FsmInput)],
    durations: &PhaseDurations,
) -> Result<Vec<AssistantFeedback>, ScriptError> {
    let mut state = AssistantState::default();
    let mut trace = Vec::new();
    // absolute end of the running phase, or remaining time while paused
    let mut phase_end: Option<f64> = None;
    let mut remaining = 0.0;

    let enter = |state: &AssistantState, entered: Option<Phase>, t: f64, trace: &mut Vec<AssistantFeedback>| {
        entered.map(|phase| {
            trace.push(AssistantFeedback { t, phase });
            durations.of(state.phase).map(|d| t + d)
        })
    };

    let mut commands = commands.iter().peekable();
    loop {
        let next_command = commands.peek().map(|(t, _)| *t);
        let (t, input) = match (phase_end, next_command) {
            (Some(end), Some(tc)) if end <= tc => (end, FsmInput::PhaseDone),
            (Some(end), None) => (end, FsmInput::PhaseDone),
            (_, Some(tc)) => {
                let (_, input) = commands.next().expect("peeked");
                (tc, input.clone())
            }
            (None, None) => break,
        };
        let (next, entered) = fsm_step(&state, &input).map_err(|source| ScriptError { t, source })?;
        match input {
            FsmInput::Pause => {
                remaining = phase_end.map_or(0.0, |end| end - t);
                phase_end = None;
            }
            FsmInput::Resume => phase_end = Some(t + remaining),
            _ => {
                if let Some(end) = enter(&next, entered, t, &mut trace) {
                    phase_end = end;
                }
            }
        }
        state = next;
    }
    Ok(trace)
}
