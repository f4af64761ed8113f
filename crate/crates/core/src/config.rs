//! Engine configuration: workstation layout, detector parameters, factor
//! weights and thresholds.
//!
//! The on-disk format is TOML. Every scalar parameter is optional and falls
//! back to a default; the names of the defaults that were applied are
//! returned by [`load_config`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factors::{Factor, FactorGroup};
use crate::session::Vec3;

pub const DEFAULT_ATTENTION_THRESHOLD: f64 = 0.5;
pub const DEFAULT_LOOP_RATE: f64 = 15.0;
pub const DEFAULT_MOTION_WINDOW: f64 = 1.0;
pub const DEFAULT_SELF_TOUCH_DISTANCE: f64 = 0.15;
pub const DEFAULT_SELF_TOUCH_DEBOUNCE: f64 = 2.0;
pub const DEFAULT_NOT_REQUIRED_SWITCH_GRACE: f64 = 3.0;
pub const DEFAULT_MIN_ATTENTION_LOSS_DURATION: f64 = 1.0;
pub const DEFAULT_CALIBRATION_DURATION: f64 = 60.0;
/// The filter responds to the ratio of the two noise values; this pair
/// settles within 5 % of a step in three loop periods.
pub const DEFAULT_PROCESS_NOISE: f64 = 2.0;
pub const DEFAULT_MEASUREMENT_NOISE: f64 = 1e-4;

/// Conventional workstation roles by id.
pub const ASSEMBLY_WORKSTATION: usize = 1;
pub const INSTRUCTION_WORKSTATION: usize = 2;
pub const ASSISTANT_WORKSTATION: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("workstation {workstation}: invalid {axis} window ({min}, {max}); need 0 <= min < max <= 180")]
    InvalidWindow {
        workstation: usize,
        axis: &'static str,
        min: f64,
        max: f64,
    },
    #[error("no workstations configured")]
    NoWorkstations,
    #[error("workstation ids must be exactly 1..={count}, found {found:?}")]
    InvalidWorkstationIds { count: usize, found: Vec<usize> },
    #[error("negative weight {value} for `{factor}`")]
    NegativeWeight { factor: Factor, value: f64 },
    #[error("threshold for `{factor}` must be positive, got {value}")]
    NonPositiveThreshold { factor: Factor, value: f64 },
    #[error("weight missing for `{0}`")]
    MissingWeight(Factor),
    #[error("weights of the {0} group sum to zero")]
    ZeroWeightSum(FactorGroup),
    #[error("`{field}`: {reason}")]
    InvalidValue { field: &'static str, reason: String },
}

/// Inner/outer angular bounds in degrees for the attention membership.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct AngularWindow {
    pub min: f64,
    pub max: f64,
}

impl AngularWindow {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && 0.0 <= self.min && self.min < self.max && self.max <= 180.0
    }
}

impl From<[f64; 2]> for AngularWindow {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<AngularWindow> for [f64; 2] {
    fn from(w: AngularWindow) -> Self {
        [w.min, w.max]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkstationConfig {
    /// 1-based index.
    pub id: usize,
    pub name: String,
    pub position: Vec3,
    pub azimuth_window: AngularWindow,
    pub elevation_window: AngularWindow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanConfig {
    pub process_noise: f64,
    pub measurement_noise: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            process_noise: DEFAULT_PROCESS_NOISE,
            measurement_noise: DEFAULT_MEASUREMENT_NOISE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Sorted by id, ids are 1..=M.
    pub workstations: Vec<WorkstationConfig>,
    pub attention_threshold: f64,
    pub loop_rate: f64,
    pub motion_window: f64,
    pub self_touch_distance: f64,
    pub self_touch_debounce: f64,
    pub not_required_switch_grace: f64,
    pub min_attention_loss_duration: f64,
    /// Leading part of the session used as the resting baseline; the task
    /// clock starts when it ends.
    pub calibration_duration: f64,
    /// Normalised to sum 1 within each factor group.
    pub weights: BTreeMap<Factor, f64>,
    pub thresholds: BTreeMap<Factor, f64>,
    pub kalman: KalmanConfig,
}

impl EngineConfig {
    /// Defaults for everything but the layout.
    pub fn with_workstations(workstations: Vec<WorkstationConfig>) -> Result<Self, ConfigError> {
        let raw = RawConfig {
            workstations: workstations.into_iter().map(RawWorkstation::from).collect(),
            ..RawConfig::default()
        };
        raw.resolve().map(|(c, _)| c)
    }

    pub fn loop_period(&self) -> f64 {
        1.0 / self.loop_rate
    }

    pub fn workstation(&self, id: usize) -> Option<&WorkstationConfig> {
        id.checked_sub(1).and_then(|i| self.workstations.get(i))
    }

    pub fn weight(&self, f: Factor) -> Option<f64> {
        self.weights.get(&f).copied()
    }

    pub fn threshold(&self, f: Factor) -> Option<f64> {
        self.thresholds.get(&f).copied()
    }

    /// TOML document that [`load_config`] turns back into this config.
    pub fn to_toml(&self) -> String {
        let raw = RawConfig {
            workstations: self.workstations.iter().cloned().map(RawWorkstation::from).collect(),
            attention_threshold: Some(self.attention_threshold),
            loop_rate: Some(self.loop_rate),
            motion_window: Some(self.motion_window),
            self_touch_distance: Some(self.self_touch_distance),
            self_touch_debounce: Some(self.self_touch_debounce),
            not_required_switch_grace: Some(self.not_required_switch_grace),
            min_attention_loss_duration: Some(self.min_attention_loss_duration),
            calibration_duration: Some(self.calibration_duration),
            weights: self.weights.clone(),
            thresholds: self.thresholds.clone(),
            kalman: Some(RawKalman {
                process_noise: Some(self.kalman.process_noise),
                measurement_noise: Some(self.kalman.measurement_noise),
            }),
        };
        toml::to_string(&raw).expect("config serialises")
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKalman {
    process_noise: Option<f64>,
    measurement_noise: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkstation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<usize>,
    name: String,
    position: [f64; 3],
    azimuth_window: AngularWindow,
    elevation_window: AngularWindow,
}

impl From<WorkstationConfig> for RawWorkstation {
    fn from(w: WorkstationConfig) -> Self {
        Self {
            id: Some(w.id),
            name: w.name,
            position: [w.position.x, w.position.y, w.position.z],
            azimuth_window: w.azimuth_window,
            elevation_window: w.elevation_window,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    attention_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loop_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    motion_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    self_touch_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    self_touch_debounce: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    not_required_switch_grace: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_attention_loss_duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration_duration: Option<f64>,
    #[serde(default)]
    weights: BTreeMap<Factor, f64>,
    #[serde(default)]
    thresholds: BTreeMap<Factor, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kalman: Option<RawKalman>,
    #[serde(default)]
    workstations: Vec<RawWorkstation>,
}

/// Trust factors borrow the parameters of their instruction-related
/// counterparts when they are not given explicitly.
const TRUST_COUNTERPARTS: [(Factor, Factor); 2] = [
    (Factor::WarinessForAssistant, Factor::InstructionCost),
    (Factor::CollaborationBurden, Factor::LearningDelay),
];

fn positive(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::InvalidValue {
            field,
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::InvalidValue {
            field,
            reason: format!("must be non-negative and finite, got {v}"),
        })
    }
}

impl RawConfig {
    fn resolve(self) -> Result<(EngineConfig, Vec<String>), ConfigError> {
        let mut defaults = Vec::new();
        let mut take = |field: &'static str, v: Option<f64>, default: f64| {
            v.unwrap_or_else(|| {
                defaults.push(field.to_string());
                default
            })
        };

        let attention_threshold = take("attention_threshold", self.attention_threshold, DEFAULT_ATTENTION_THRESHOLD);
        let loop_rate = take("loop_rate", self.loop_rate, DEFAULT_LOOP_RATE);
        let motion_window = take("motion_window", self.motion_window, DEFAULT_MOTION_WINDOW);
        let self_touch_distance = take("self_touch_distance", self.self_touch_distance, DEFAULT_SELF_TOUCH_DISTANCE);
        let self_touch_debounce = take("self_touch_debounce", self.self_touch_debounce, DEFAULT_SELF_TOUCH_DEBOUNCE);
        let not_required_switch_grace = take(
            "not_required_switch_grace",
            self.not_required_switch_grace,
            DEFAULT_NOT_REQUIRED_SWITCH_GRACE,
        );
        let min_attention_loss_duration = take(
            "min_attention_loss_duration",
            self.min_attention_loss_duration,
            DEFAULT_MIN_ATTENTION_LOSS_DURATION,
        );
        let calibration_duration = take("calibration_duration", self.calibration_duration, DEFAULT_CALIBRATION_DURATION);
        let raw_kalman = self.kalman.unwrap_or_default();
        let kalman = KalmanConfig {
            process_noise: take("kalman.process_noise", raw_kalman.process_noise, DEFAULT_PROCESS_NOISE),
            measurement_noise: take("kalman.measurement_noise", raw_kalman.measurement_noise, DEFAULT_MEASUREMENT_NOISE),
        };

        if !(attention_threshold > 0.0 && attention_threshold < 1.0) {
            return Err(ConfigError::InvalidValue {
                field: "attention_threshold",
                reason: format!("must lie in (0, 1), got {attention_threshold}"),
            });
        }
        positive("loop_rate", loop_rate)?;
        positive("motion_window", motion_window)?;
        positive("self_touch_distance", self_touch_distance)?;
        non_negative("self_touch_debounce", self_touch_debounce)?;
        non_negative("not_required_switch_grace", not_required_switch_grace)?;
        non_negative("min_attention_loss_duration", min_attention_loss_duration)?;
        non_negative("calibration_duration", calibration_duration)?;
        positive("kalman.process_noise", kalman.process_noise)?;
        positive("kalman.measurement_noise", kalman.measurement_noise)?;

        let workstations = resolve_workstations(self.workstations)?;
        let weights = resolve_weights(self.weights, &mut defaults)?;
        let thresholds = resolve_thresholds(self.thresholds, &mut defaults)?;

        Ok((
            EngineConfig {
                workstations,
                attention_threshold,
                loop_rate,
                motion_window,
                self_touch_distance,
                self_touch_debounce,
                not_required_switch_grace,
                min_attention_loss_duration,
                calibration_duration,
                weights,
                thresholds,
                kalman,
            },
            defaults,
        ))
    }
}

fn resolve_workstations(raw: Vec<RawWorkstation>) -> Result<Vec<WorkstationConfig>, ConfigError> {
    if raw.is_empty() {
        return Err(ConfigError::NoWorkstations);
    }
    let count = raw.len();
    let mut out: Vec<WorkstationConfig> = raw
        .into_iter()
        .enumerate()
        .map(|(i, w)| WorkstationConfig {
            id: w.id.unwrap_or(i + 1),
            name: w.name,
            position: Vec3::from(w.position),
            azimuth_window: w.azimuth_window,
            elevation_window: w.elevation_window,
        })
        .collect();
    out.sort_by_key(|w| w.id);
    if out.iter().enumerate().any(|(i, w)| w.id != i + 1) {
        return Err(ConfigError::InvalidWorkstationIds {
            count,
            found: out.iter().map(|w| w.id).collect(),
        });
    }
    for w in &out {
        for (axis, win) in [("azimuth", w.azimuth_window), ("elevation", w.elevation_window)] {
            if !win.is_valid() {
                return Err(ConfigError::InvalidWindow {
                    workstation: w.id,
                    axis,
                    min: win.min,
                    max: win.max,
                });
            }
        }
        if !w.position.iter().all(|v| v.is_finite()) {
            return Err(ConfigError::InvalidValue {
                field: "workstations.position",
                reason: format!("workstation {} has a non-finite position", w.id),
            });
        }
    }
    Ok(out)
}

fn fill_trust(map: &mut BTreeMap<Factor, f64>) {
    for (trust, counterpart) in TRUST_COUNTERPARTS {
        if !map.contains_key(&trust) {
            if let Some(&v) = map.get(&counterpart) {
                map.insert(trust, v);
            }
        }
    }
}

fn resolve_weights(
    mut given: BTreeMap<Factor, f64>,
    defaults: &mut Vec<String>,
) -> Result<BTreeMap<Factor, f64>, ConfigError> {
    for (&factor, &value) in &given {
        if !(value.is_finite() && value >= 0.0) {
            return Err(ConfigError::NegativeWeight { factor, value });
        }
    }
    fill_trust(&mut given);

    let mut out = BTreeMap::new();
    for group in FactorGroup::ALL {
        let members = group.factors();
        let specified = members.iter().filter(|f| given.contains_key(f)).count();
        if specified == 0 {
            defaults.push(format!("weights.{group}"));
            for &f in members {
                out.insert(f, 1.0 / members.len() as f64);
            }
            continue;
        }
        if let Some(&missing) = members.iter().find(|f| !given.contains_key(f)) {
            return Err(ConfigError::MissingWeight(missing));
        }
        let sum: f64 = members.iter().map(|f| given[f]).sum();
        if sum <= 0.0 {
            return Err(ConfigError::ZeroWeightSum(group));
        }
        // weights that already sum to one are kept verbatim
        let scale = if (sum - 1.0).abs() <= 1e-12 { 1.0 } else { sum };
        for &f in members {
            out.insert(f, given[&f] / scale);
        }
    }
    Ok(out)
}

fn resolve_thresholds(
    mut given: BTreeMap<Factor, f64>,
    defaults: &mut Vec<String>,
) -> Result<BTreeMap<Factor, f64>, ConfigError> {
    for (&factor, &value) in &given {
        if !(value.is_finite() && value > 0.0) {
            return Err(ConfigError::NonPositiveThreshold { factor, value });
        }
    }
    fill_trust(&mut given);
    for f in Factor::ALL {
        given.entry(f).or_insert_with(|| {
            defaults.push(format!("thresholds.{f}"));
            1.0
        });
    }
    Ok(given)
}

/// Parses a TOML config, applying defaults. Returns the config and the list
/// of parameters that took their default value.
pub fn load_config(text: &str) -> Result<(EngineConfig, Vec<String>), ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    raw.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = r#"
[[workstations]]
name = "assembly"
position = [0.0, -0.5, 0.6]
azimuth_window = [10.0, 30.0]
elevation_window = [10.0, 30.0]

[[workstations]]
name = "instructions"
position = [0.6, 0.0, 0.5]
azimuth_window = [10.0, 30.0]
elevation_window = [10.0, 30.0]

[[workstations]]
name = "assistant"
position = [-1.0, 0.0, 0.6]
azimuth_window = [15.0, 35.0]
elevation_window = [10.0, 30.0]
"#;

    #[test]
    fn minimal_config_gets_uniform_weights() {
        let (c, defaults) = load_config(THREE).unwrap();
        assert_eq!(c.workstations.len(), 3);
        assert_eq!(c.workstations[2].id, 3);
        for f in FactorGroup::MentalEffort.factors() {
            assert!((c.weights[f] - 1.0 / 7.0).abs() < 1e-15);
        }
        assert_eq!(c.weights[&Factor::SelfTouching], 0.5);
        assert_eq!(c.weights[&Factor::Hyperactivity], 0.5);
        assert!(Factor::ALL.iter().all(|f| c.thresholds[f] == 1.0));
        assert_eq!(c.loop_rate, 15.0);
        assert!(defaults.contains(&"loop_rate".to_string()));
        assert!(defaults.contains(&"weights.mental_effort".to_string()));
    }

    #[test]
    fn inverted_window_rejected() {
        let text = THREE.replacen("azimuth_window = [10.0, 30.0]", "azimuth_window = [30.0, 10.0]", 1);
        assert!(matches!(
            load_config(&text),
            Err(ConfigError::InvalidWindow { workstation: 1, axis: "azimuth", .. })
        ));
    }

    #[test]
    fn no_workstations() {
        assert_eq!(load_config("loop_rate = 15.0").unwrap_err(), ConfigError::NoWorkstations);
    }

    #[test]
    fn negative_weight() {
        let text = format!("[weights]\nself_touching = -0.5\nhyperactivity = 1.0\n{THREE}");
        assert!(matches!(load_config(&text), Err(ConfigError::NegativeWeight { .. })));
    }

    #[test]
    fn explicit_mental_effort_weights_pass_through() {
        let text = format!(
            "[weights]\nconcentration_loss = 0.3\nlearning_delay = 0.1\nconcentration_demand = 0.2\n\
             instruction_cost = 0.1\ntask_difficulty = 0.1\ncollaboration_burden = 0.1\n\
             wariness_for_assistant = 0.1\n{THREE}"
        );
        let (c, _) = load_config(&text).unwrap();
        assert!((c.weights[&Factor::ConcentrationLoss] - 0.3).abs() < 1e-12);
        let sum: f64 = FactorGroup::MentalEffort.factors().iter().map(|f| c.weights[f]).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((c.weights[&Factor::ConcentrationDemand] - 0.2).abs() < 1e-12);
        assert_eq!(c.weights[&Factor::SelfTouching], 0.5);
    }

    #[test]
    fn trust_factors_borrow_instruction_parameters() {
        let text = format!(
            "[weights]\nconcentration_loss = 1\nlearning_delay = 2\nconcentration_demand = 1\n\
             instruction_cost = 3\ntask_difficulty = 1\n\
             [thresholds]\ninstruction_cost = 4.0\nlearning_delay = 0.8\n{THREE}"
        );
        let (c, _) = load_config(&text).unwrap();
        assert_eq!(c.weights[&Factor::WarinessForAssistant], c.weights[&Factor::InstructionCost]);
        assert_eq!(c.weights[&Factor::CollaborationBurden], c.weights[&Factor::LearningDelay]);
        assert_eq!(c.thresholds[&Factor::WarinessForAssistant], 4.0);
        assert_eq!(c.thresholds[&Factor::CollaborationBurden], 0.8);
    }

    #[test]
    fn partial_group_is_an_error() {
        let text = format!("[weights]\nconcentration_loss = 1\n{THREE}");
        assert!(matches!(load_config(&text), Err(ConfigError::MissingWeight(_))));
    }

    #[test]
    fn bad_scalars_and_ids() {
        assert!(load_config(&format!("loop_rate = 0.0\n{THREE}")).is_err());
        assert!(load_config(&format!("attention_threshold = 1.0\n{THREE}")).is_err());
        assert!(load_config(&format!("bogus = 1\n{THREE}")).is_err());
        let dup = THREE.replacen("name = \"instructions\"", "id = 1\nname = \"instructions\"", 1);
        assert!(matches!(load_config(&dup), Err(ConfigError::InvalidWorkstationIds { .. })));
    }

    #[test]
    fn toml_round_trip() {
        let text = format!("[thresholds]\ntask_difficulty = 2.5\n[kalman]\nprocess_noise = 3.0\n{THREE}");
        let (c, _) = load_config(&text).unwrap();
        let (again, defaults) = load_config(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert!(defaults.is_empty());
    }
}
