//! Attention-transition detection over the per-loop focus stream.
//!
//! Runs of "no focus" shorter than the minimum attention-loss duration are
//! bridged: the previous target is held through them and no transition is
//! reported. A run that lasts long enough produces one `attention_loss`
//! stamped at its first loop. Entering the assistant workstation is an
//! `assistant_check`. Entering the instruction workstation is resolved once
//! the browse grace window has passed: with a browse event inside it the
//! entry is an ordinary `focus_switch`, otherwise it is a
//! `not_required_instruction_switch`. Every other change is a `focus_switch`.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use crate::config::{EngineConfig, ASSISTANT_WORKSTATION, INSTRUCTION_WORKSTATION};

/// Tolerance for comparing loop instants against window edges.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    AttentionLoss,
    FocusSwitch,
    AssistantCheck,
    NotRequiredInstructionSwitch,
}

impl TransitionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::AttentionLoss => "attention_loss",
            TransitionKind::FocusSwitch => "focus_switch",
            TransitionKind::AssistantCheck => "assistant_check",
            TransitionKind::NotRequiredInstructionSwitch => "not_required_instruction_switch",
        }
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttentionTransition {
    /// Instant the transition took place; may precede the loop on which it
    /// is reported.
    pub t: f64,
    pub kind: TransitionKind,
    pub from: Option<usize>,
    pub to: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionParams {
    pub min_attention_loss_duration: f64,
    pub not_required_switch_grace: f64,
    pub instruction_workstation: usize,
    pub assistant_workstation: usize,
}

impl TransitionParams {
    pub fn from_config(c: &EngineConfig) -> Self {
        Self {
            min_attention_loss_duration: c.min_attention_loss_duration,
            not_required_switch_grace: c.not_required_switch_grace,
            instruction_workstation: INSTRUCTION_WORKSTATION,
            assistant_workstation: ASSISTANT_WORKSTATION,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PendingEntry {
    t: f64,
    from: Option<usize>,
    browsed: bool,
}

#[derive(Debug, Clone)]
pub struct TransitionDetector {
    params: TransitionParams,
    started: bool,
    held: Option<usize>,
    none_since: Option<f64>,
    pending: VecDeque<PendingEntry>,
    /// Browse instants still able to resolve an entry made at the same loop.
    recent_browses: VecDeque<f64>,
}

impl TransitionDetector {
    pub fn new(params: TransitionParams) -> Self {
        Self {
            params,
            started: false,
            held: None,
            none_since: None,
            pending: VecDeque::new(),
            recent_browses: VecDeque::new(),
        }
    }

    /// Target after bridging short gaps.
    pub fn held(&self) -> Option<usize> {
        self.held
    }

    /// Registers an instruction browse (next/back) at `t`.
    pub fn notify_browse(&mut self, t: f64) {
        let grace = self.params.not_required_switch_grace;
        for p in self.pending.iter_mut() {
            if t >= p.t - EPS && t <= p.t + grace + EPS {
                p.browsed = true;
            }
        }
        self.recent_browses.push_back(t);
    }

    /// Feeds the focus classified at loop instant `t`; returns the
    /// transitions that became known at this loop.
    pub fn update(&mut self, t: f64, focus: Option<usize>) -> Vec<AttentionTransition> {
        let mut out = Vec::new();
        let grace = self.params.not_required_switch_grace;

        match focus {
            None => {
                let since = *self.none_since.get_or_insert(t);
                if !self.started {
                    self.started = true;
                } else if self.held.is_some() && t - since >= self.params.min_attention_loss_duration - EPS {
                    out.push(AttentionTransition {
                        t: since,
                        kind: TransitionKind::AttentionLoss,
                        from: self.held,
                        to: None,
                    });
                    self.held = None;
                }
            }
            Some(w) => {
                self.none_since = None;
                if !self.started {
                    self.started = true;
                    self.held = Some(w);
                } else if self.held != Some(w) {
                    let from = self.held;
                    self.held = Some(w);
                    if w == self.params.assistant_workstation {
                        out.push(AttentionTransition {
                            t,
                            kind: TransitionKind::AssistantCheck,
                            from,
                            to: Some(w),
                        });
                    } else if w == self.params.instruction_workstation {
                        let browsed = self.recent_browses.iter().any(|&b| b >= t - EPS);
                        self.pending.push_back(PendingEntry { t, from, browsed });
                    } else {
                        out.push(AttentionTransition {
                            t,
                            kind: TransitionKind::FocusSwitch,
                            from,
                            to: Some(w),
                        });
                    }
                }
            }
        }

        while let Some(p) = self.pending.front().copied() {
            if t < p.t + grace - EPS {
                break;
            }
            self.pending.pop_front();
            out.push(AttentionTransition {
                t: p.t,
                kind: if p.browsed {
                    TransitionKind::FocusSwitch
                } else {
                    TransitionKind::NotRequiredInstructionSwitch
                },
                from: p.from,
                to: Some(self.params.instruction_workstation),
            });
        }
        while self.recent_browses.front().is_some_and(|&b| b < t - EPS) {
            self.recent_browses.pop_front();
        }
        out
    }
}

/// Offline formulation over the complete recorded sequence: split the focus
/// stream into runs, drop short "no focus" runs, and classify the changes
/// of the remaining run sequence. Entries to the instruction workstation
/// whose grace window extends past the last loop stay unresolved and are
/// not reported, exactly as in the streaming detector.
pub fn offline_transitions(
    loops: &[(f64, Option<usize>)],
    browses: &[f64],
    params: &TransitionParams,
) -> Vec<AttentionTransition> {
    // (target, first instant, last instant)
    let mut runs: Vec<(Option<usize>, f64, f64)> = Vec::new();
    for &(t, f) in loops {
        match runs.last_mut() {
            Some(run) if run.0 == f => run.2 = t,
            _ => runs.push((f, t, t)),
        }
    }
    let Some(&(last_t, _)) = loops.last() else {
        return Vec::new();
    };
    let grace = params.not_required_switch_grace;

    let mut out = Vec::new();
    let mut held: Option<usize> = None;
    for (i, &(target, first, last)) in runs.iter().enumerate() {
        if i == 0 {
            held = target;
            continue;
        }
        match target {
            None => {
                if held.is_some() && last - first >= params.min_attention_loss_duration - EPS {
                    out.push(AttentionTransition {
                        t: first,
                        kind: TransitionKind::AttentionLoss,
                        from: held,
                        to: None,
                    });
                    held = None;
                }
            }
            Some(w) if Some(w) != held => {
                let kind = if w == params.assistant_workstation {
                    Some(TransitionKind::AssistantCheck)
                } else if w == params.instruction_workstation {
                    if last_t < first + grace - EPS {
                        None
                    } else if browses.iter().any(|&b| b >= first - EPS && b <= first + grace + EPS) {
                        Some(TransitionKind::FocusSwitch)
                    } else {
                        Some(TransitionKind::NotRequiredInstructionSwitch)
                    }
                } else {
                    Some(TransitionKind::FocusSwitch)
                };
                if let Some(kind) = kind {
                    out.push(AttentionTransition {
                        t: first,
                        kind,
                        from: held,
                        to: Some(w),
                    });
                }
                held = Some(w);
            }
            Some(_) => {}
        }
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RATE: f64 = 15.0;

    fn params() -> TransitionParams {
        TransitionParams {
            min_attention_loss_duration: 1.0,
            not_required_switch_grace: 3.0,
            instruction_workstation: 2,
            assistant_workstation: 3,
        }
    }

    /// Builds a loop sequence from (target, duration) segments.
    fn trace(segments: &[(Option<usize>, f64)]) -> Vec<(f64, Option<usize>)> {
        let mut out = Vec::new();
        let mut k = 0u64;
        let mut end = 0.0;
        for &(target, d) in segments {
            end += d;
            while (k as f64) / RATE < end - 1e-9 {
                out.push((k as f64 / RATE, target));
                k += 1;
            }
        }
        out
    }

    fn run(loops: &[(f64, Option<usize>)], browses: &[f64]) -> Vec<AttentionTransition> {
        let mut d = TransitionDetector::new(params());
        let mut b = browses.iter().peekable();
        let mut out = Vec::new();
        for &(t, f) in loops {
            while let Some(&&tb) = b.peek() {
                if tb > t {
                    break;
                }
                d.notify_browse(tb);
                b.next();
            }
            out.extend(d.update(t, f));
        }
        out.sort_by(|a, b| a.t.total_cmp(&b.t));
        out
    }

    fn count(v: &[AttentionTransition], kind: TransitionKind) -> usize {
        v.iter().filter(|e| e.kind == kind).count()
    }

    #[test]
    fn long_gap_is_one_loss_at_entry() {
        let loops = trace(&[(Some(1), 5.0), (None, 2.0), (Some(1), 5.0)]);
        let ev = run(&loops, &[]);
        assert_eq!(count(&ev, TransitionKind::AttentionLoss), 1);
        let loss = ev.iter().find(|e| e.kind == TransitionKind::AttentionLoss).unwrap();
        assert!((loss.t - 5.0).abs() < 1e-9);
        // returning to W1 afterwards is a switch from nothing
        assert_eq!(count(&ev, TransitionKind::FocusSwitch), 1);
    }

    #[test]
    fn short_gap_is_bridged() {
        let loops = trace(&[(Some(1), 5.0), (None, 0.5), (Some(1), 5.0)]);
        assert!(run(&loops, &[]).is_empty());
    }

    #[test]
    fn instruction_grace_window() {
        let loops = trace(&[(Some(1), 40.0), (Some(2), 2.0), (Some(1), 38.0), (Some(2), 2.0), (Some(1), 20.0)]);
        let ev = run(&loops, &[41.0]);
        let nrs: Vec<_> = ev
            .iter()
            .filter(|e| e.kind == TransitionKind::NotRequiredInstructionSwitch)
            .collect();
        assert_eq!(nrs.len(), 1);
        assert!((nrs[0].t - 80.0).abs() < 1e-9);
    }

    #[test]
    fn browse_at_entry_instant_counts() {
        let loops = trace(&[(Some(1), 3.0), (Some(2), 4.0), (Some(1), 3.0)]);
        assert_eq!(count(&run(&loops, &[3.0]), TransitionKind::NotRequiredInstructionSwitch), 0);
        assert_eq!(count(&run(&loops, &[2.9]), TransitionKind::NotRequiredInstructionSwitch), 1);
    }

    #[test]
    fn assistant_checks_on_each_entry() {
        let loops = trace(&[(Some(1), 2.0), (Some(3), 1.0), (Some(1), 2.0), (Some(3), 1.0), (None, 0.3), (Some(3), 1.0)]);
        let ev = run(&loops, &[]);
        assert_eq!(count(&ev, TransitionKind::AssistantCheck), 2);
        assert!(ev.iter().all(|e| e.from != e.to));
    }

    fn arb_segments() -> impl Strategy<Value = Vec<(Option<usize>, f64)>> {
        prop::collection::vec((prop::option::of(1usize..=3), 0.05f64..6.0), 1..40)
    }

    proptest! {
        #[test]
        fn streaming_matches_offline(segments in arb_segments(), browses in prop::collection::vec(0.0f64..120.0, 0..10)) {
            let mut browses = browses;
            browses.sort_by(f64::total_cmp);
            let loops = trace(&segments);
            let live = run(&loops, &browses);
            let offline = offline_transitions(&loops, &browses, &params());
            prop_assert_eq!(live.len(), offline.len());
            for kind in [TransitionKind::AttentionLoss, TransitionKind::FocusSwitch,
                         TransitionKind::AssistantCheck, TransitionKind::NotRequiredInstructionSwitch] {
                prop_assert_eq!(count(&live, kind), count(&offline, kind));
            }
            prop_assert!(live.iter().all(|e| e.from != e.to));
        }
    }
}
