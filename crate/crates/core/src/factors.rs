//! Dwell-time accumulators, event logs, the nine cognitive-load factors and
//! the two aggregate scores.
//!
//! Time is kept as an integer loop count so that `elapsed` and every
//! attention time are exact multiples of the loop period; the dwell
//! fractions therefore add up with `concentration_loss` to one up to a
//! single rounding.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ASSEMBLY_WORKSTATION, ASSISTANT_WORKSTATION};

/// Length of the linear decay of one self-touch contribution.
pub const SELF_TOUCH_DECAY: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    ConcentrationLoss,
    LearningDelay,
    ConcentrationDemand,
    InstructionCost,
    TaskDifficulty,
    CollaborationBurden,
    WarinessForAssistant,
    SelfTouching,
    Hyperactivity,
}

impl Factor {
    /// Column order of the output CSV.
    pub const ALL: [Factor; 9] = [
        Factor::ConcentrationLoss,
        Factor::LearningDelay,
        Factor::ConcentrationDemand,
        Factor::InstructionCost,
        Factor::TaskDifficulty,
        Factor::CollaborationBurden,
        Factor::WarinessForAssistant,
        Factor::SelfTouching,
        Factor::Hyperactivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Factor::ConcentrationLoss => "concentration_loss",
            Factor::LearningDelay => "learning_delay",
            Factor::ConcentrationDemand => "concentration_demand",
            Factor::InstructionCost => "instruction_cost",
            Factor::TaskDifficulty => "task_difficulty",
            Factor::CollaborationBurden => "collaboration_burden",
            Factor::WarinessForAssistant => "wariness_for_assistant",
            Factor::SelfTouching => "self_touching",
            Factor::Hyperactivity => "hyperactivity",
        }
    }

    pub fn group(self) -> FactorGroup {
        match self {
            Factor::SelfTouching | Factor::Hyperactivity => FactorGroup::Stress,
            _ => FactorGroup::MentalEffort,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorGroup {
    MentalEffort,
    Stress,
}

impl FactorGroup {
    pub const ALL: [FactorGroup; 2] = [FactorGroup::MentalEffort, FactorGroup::Stress];

    pub fn factors(self) -> &'static [Factor] {
        match self {
            FactorGroup::MentalEffort => &Factor::ALL[..7],
            FactorGroup::Stress => &Factor::ALL[7..],
        }
    }
}

impl fmt::Display for FactorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorGroup::MentalEffort => "mental_effort",
            FactorGroup::Stress => "stress_level",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error("factors are undefined before the first loop completes")]
    ZeroElapsed,
    #[error("weight missing for `{0}`")]
    MissingWeight(Factor),
}

/// The occurrences counted by the event-sum factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorEvent {
    AttentionLoss,
    NotRequiredSwitch,
    CheckBack,
    AssistantCheck,
    SelfTouch,
}

impl FactorEvent {
    pub const ALL: [FactorEvent; 5] = [
        FactorEvent::AttentionLoss,
        FactorEvent::NotRequiredSwitch,
        FactorEvent::CheckBack,
        FactorEvent::AssistantCheck,
        FactorEvent::SelfTouch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FactorEvent::AttentionLoss => "attention_loss",
            FactorEvent::NotRequiredSwitch => "not_required_switch",
            FactorEvent::CheckBack => "check_back",
            FactorEvent::AssistantCheck => "assistant_check",
            FactorEvent::SelfTouch => "self_touch",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// An append-only list of instants with its running sum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    times: Vec<f64>,
    sum: f64,
}

impl EventLog {
    pub fn push(&mut self, t: f64) {
        self.times.push(t);
        self.sum += t;
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FactorVector {
    pub t: f64,
    pub concentration_loss: f64,
    pub learning_delay: f64,
    pub concentration_demand: f64,
    pub instruction_cost: f64,
    pub task_difficulty: f64,
    pub collaboration_burden: f64,
    pub wariness_for_assistant: f64,
    pub self_touching: f64,
    /// `None` while no skeleton data supports the activity estimate.
    pub hyperactivity: Option<f64>,
}

impl FactorVector {
    pub fn get(&self, f: Factor) -> Option<f64> {
        Some(match f {
            Factor::ConcentrationLoss => self.concentration_loss,
            Factor::LearningDelay => self.learning_delay,
            Factor::ConcentrationDemand => self.concentration_demand,
            Factor::InstructionCost => self.instruction_cost,
            Factor::TaskDifficulty => self.task_difficulty,
            Factor::CollaborationBurden => self.collaboration_burden,
            Factor::WarinessForAssistant => self.wariness_for_assistant,
            Factor::SelfTouching => self.self_touching,
            Factor::Hyperactivity => return self.hyperactivity,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ScorePair {
    pub t: f64,
    pub mental_effort: f64,
    pub stress_level: f64,
}

/// Streaming state behind the factor values.
#[derive(Debug, Clone)]
pub struct FactorState {
    rate: f64,
    ticks: u64,
    dwell_ticks: Vec<u64>,
    logs: [EventLog; 5],
    /// Self-touch instants that still contribute to the decaying factor.
    live_touches: VecDeque<f64>,
}

impl FactorState {
    pub fn new(workstations: usize, loop_rate: f64) -> Self {
        Self {
            rate: loop_rate,
            ticks: 0,
            dwell_ticks: vec![0; workstations],
            logs: Default::default(),
            live_touches: VecDeque::new(),
        }
    }

    /// Advances one loop period. `target` is a 1-based workstation id.
    pub fn accumulate(&mut self, target: Option<usize>) {
        self.ticks += 1;
        if let Some(slot) = target.and_then(|w| w.checked_sub(1)).and_then(|i| self.dwell_ticks.get_mut(i)) {
            *slot += 1;
        }
    }

    pub fn record(&mut self, kind: FactorEvent, t: f64) {
        self.logs[kind.slot()].push(t);
        if kind == FactorEvent::SelfTouch {
            self.live_touches.push_back(t);
        }
    }

    pub fn log(&self, kind: FactorEvent) -> &EventLog {
        &self.logs[kind.slot()]
    }

    pub fn elapsed(&self) -> f64 {
        self.ticks as f64 / self.rate
    }

    pub fn loops(&self) -> u64 {
        self.ticks
    }

    /// Attention time of the 1-based workstation `w`, 0 if not configured.
    pub fn attention_time(&self, w: usize) -> f64 {
        w.checked_sub(1)
            .and_then(|i| self.dwell_ticks.get(i))
            .map_or(0.0, |&n| n as f64 / self.rate)
    }

    pub fn workstations(&self) -> usize {
        self.dwell_ticks.len()
    }

    /// Evaluates every factor at instant `t` (normally `elapsed`).
    pub fn factor_vector(&mut self, activity: Option<f64>, t: f64) -> Result<FactorVector, FactorError> {
        if self.ticks == 0 {
            return Err(FactorError::ZeroElapsed);
        }
        while self
            .live_touches
            .front()
            .is_some_and(|&ts| ts + SELF_TOUCH_DECAY - t <= 0.0)
        {
            self.live_touches.pop_front();
        }
        let elapsed = self.elapsed();
        let fractions: Vec<f64> = (1..=self.workstations()).map(|w| self.attention_time(w) / elapsed).collect();
        Ok(FactorVector {
            t,
            concentration_loss: 1.0 - fractions.iter().sum::<f64>(),
            learning_delay: self.attention_time(ASSEMBLY_WORKSTATION) / elapsed,
            concentration_demand: self.log(FactorEvent::AttentionLoss).sum() / elapsed,
            instruction_cost: self.log(FactorEvent::NotRequiredSwitch).sum() / elapsed,
            task_difficulty: self.log(FactorEvent::CheckBack).sum() / elapsed,
            collaboration_burden: self.attention_time(ASSISTANT_WORKSTATION) / elapsed,
            wariness_for_assistant: self.log(FactorEvent::AssistantCheck).sum() / elapsed,
            self_touching: self_touch_value(self.live_touches.iter().copied(), t),
            hyperactivity: activity,
        })
    }

    /// Dwell fraction of every workstation, in id order.
    pub fn dwell_fractions(&self) -> Vec<f64> {
        let elapsed = self.elapsed();
        (1..=self.workstations()).map(|w| self.attention_time(w) / elapsed).collect()
    }
}

/// Σ max(0, (t_s + 60 − t)/60) over the touches, clipped to 1.
pub fn self_touch_value(touches: impl IntoIterator<Item = f64>, t: f64) -> f64 {
    touches
        .into_iter()
        .map(|ts| ((ts + SELF_TOUCH_DECAY - t) / SELF_TOUCH_DECAY).max(0.0))
        .sum::<f64>()
        .min(1.0)
}

/// Reference evaluation from the complete per-loop focus history and event
/// journal, with no running state. Produces the same bits as
/// [`FactorState::factor_vector`] for the same inputs.
pub fn recompute_factors(
    focus: &[Option<usize>],
    events: &[(FactorEvent, f64)],
    workstations: usize,
    loop_rate: f64,
    activity: Option<f64>,
    t: f64,
) -> Result<FactorVector, FactorError> {
    if focus.is_empty() {
        return Err(FactorError::ZeroElapsed);
    }
    let elapsed = focus.len() as f64 / loop_rate;
    let dwell = |w: usize| focus.iter().filter(|f| **f == Some(w)).count() as f64 / loop_rate;
    let sum_of = |kind: FactorEvent| {
        events
            .iter()
            .filter(|(k, _)| *k == kind)
            .fold(0.0, |acc, (_, ts)| acc + ts)
    };
    let fractions: Vec<f64> = (1..=workstations).map(|w| dwell(w) / elapsed).collect();
    Ok(FactorVector {
        t,
        concentration_loss: 1.0 - fractions.iter().sum::<f64>(),
        learning_delay: dwell(ASSEMBLY_WORKSTATION) / elapsed,
        concentration_demand: sum_of(FactorEvent::AttentionLoss) / elapsed,
        instruction_cost: sum_of(FactorEvent::NotRequiredSwitch) / elapsed,
        task_difficulty: sum_of(FactorEvent::CheckBack) / elapsed,
        collaboration_burden: if workstations >= ASSISTANT_WORKSTATION {
            dwell(ASSISTANT_WORKSTATION) / elapsed
        } else {
            0.0
        },
        wariness_for_assistant: sum_of(FactorEvent::AssistantCheck) / elapsed,
        self_touching: self_touch_value(
            events.iter().filter(|(k, _)| *k == FactorEvent::SelfTouch).map(|(_, ts)| *ts),
            t,
        ),
        hyperactivity: activity,
    })
}

/// Weighted, threshold-normalised sums per group. A missing hyperactivity
/// value contributes nothing to the stress level.
pub fn scores(
    factors: &FactorVector,
    weights: &BTreeMap<Factor, f64>,
    thresholds: &BTreeMap<Factor, f64>,
) -> Result<ScorePair, FactorError> {
    let group_score = |group: FactorGroup| -> Result<f64, FactorError> {
        let mut total = 0.0;
        for &f in group.factors() {
            let w = *weights.get(&f).ok_or(FactorError::MissingWeight(f))?;
            let tau = thresholds.get(&f).copied().unwrap_or(1.0);
            if let Some(v) = factors.get(f) {
                total += w * (v / tau).clamp(0.0, 1.0);
            }
        }
        Ok(total.clamp(0.0, 1.0))
    };
    Ok(ScorePair {
        t: factors.t,
        mental_effort: group_score(FactorGroup::MentalEffort)?,
        stress_level: group_score(FactorGroup::Stress)?,
    })
}
