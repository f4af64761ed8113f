//! Session records and the line-delimited interchange format.
//!
//! Every line is one JSON object with a `t` field (seconds since session
//! start) and a `type` tag:
//!
//! ```text
//! {"t":0.0,"type":"head_pose","pos":[0,0,0],"quat":[1,0,0,0]}
//! {"t":0.1,"type":"skeleton","joints":{"neck":[0,-0.1,0], ...}}
//! {"t":4.2,"type":"event","kind":"instruction_next"}
//! ```
//!
//! Camera frame: x right, y up, z toward the scene. Data recorded in another
//! convention must be rotated before ingestion. Quaternions are `[w,x,y,z]`.
//!
//! Non-finite numbers cannot be written as JSON numbers; tools that export
//! them as strings (`"NaN"`, `"inf"`) are reported as [`SessionError::NonFiniteValue`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Allowed deviation of a quaternion norm from 1.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: non-finite value in `{field}`")]
    NonFiniteValue { line: usize, field: String },
    #[error("line {line}: skeleton is missing joint `{joint}`")]
    MissingJoint { line: usize, joint: String },
}

impl SessionError {
    pub fn line(&self) -> usize {
        match self {
            Self::MalformedRecord { line, .. }
            | Self::NonFiniteValue { line, .. }
            | Self::MissingJoint { line, .. } => *line,
        }
    }
}

/// Upper-body keypoints tracked by the kinematics module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Joint {
    Neck,
    Head,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
}

impl Joint {
    pub const ALL: [Joint; 8] = [
        Joint::Neck,
        Joint::Head,
        Joint::LeftShoulder,
        Joint::RightShoulder,
        Joint::LeftElbow,
        Joint::RightElbow,
        Joint::LeftWrist,
        Joint::RightWrist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Joint::Neck => "neck",
            Joint::Head => "head",
            Joint::LeftShoulder => "left_shoulder",
            Joint::RightShoulder => "right_shoulder",
            Joint::LeftElbow => "left_elbow",
            Joint::RightElbow => "right_elbow",
            Joint::LeftWrist => "left_wrist",
            Joint::RightWrist => "right_wrist",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Joint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadPoseSample {
    pub t: f64,
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSample {
    pub t: f64,
    /// Indexed by [`Joint::index`].
    pub joints: [Vec3; 8],
    /// Keypoints outside the upper-body set, kept for round-tripping.
    pub extra: BTreeMap<String, Vec3>,
}

impl SkeletonSample {
    pub fn new(t: f64, joints: [Vec3; 8]) -> Self {
        Self {
            t,
            joints,
            extra: BTreeMap::new(),
        }
    }

    pub fn joint(&self, joint: Joint) -> Vec3 {
        self.joints[joint.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    InstructionNext,
    InstructionBack,
    RequestComponent,
    Pause,
    Resume,
    Reset,
    FsmFeedback,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::InstructionNext => "instruction_next",
            EventKind::InstructionBack => "instruction_back",
            EventKind::RequestComponent => "request_component",
            EventKind::Pause => "pause",
            EventKind::Resume => "resume",
            EventKind::Reset => "reset",
            EventKind::FsmFeedback => "fsm_feedback",
        }
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "instruction_next" => EventKind::InstructionNext,
            "instruction_back" => EventKind::InstructionBack,
            "request_component" => EventKind::RequestComponent,
            "pause" => EventKind::Pause,
            "resume" => EventKind::Resume,
            "reset" => EventKind::Reset,
            "fsm_feedback" => EventKind::FsmFeedback,
            other => return Err(format!("unknown event kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionEvent {
    pub t: f64,
    pub kind: EventKind,
    pub arg: Option<String>,
}

impl InteractionEvent {
    pub fn new(t: f64, kind: EventKind) -> Self {
        Self { t, kind, arg: None }
    }

    pub fn with_arg(t: f64, kind: EventKind, arg: impl Into<String>) -> Self {
        Self {
            t,
            kind,
            arg: Some(arg.into()),
        }
    }

    pub fn is_browse(&self) -> bool {
        matches!(self.kind, EventKind::InstructionNext | EventKind::InstructionBack)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    HeadPose(HeadPoseSample),
    Skeleton(SkeletonSample),
    Event(InteractionEvent),
}

impl Record {
    pub fn t(&self) -> f64 {
        match self {
            Record::HeadPose(s) => s.t,
            Record::Skeleton(s) => s.t,
            Record::Event(e) => e.t,
        }
    }

    /// Serialises the record as one JSON line (no trailing newline). Floats
    /// use the shortest representation that round-trips.
    pub fn to_line(&self) -> String {
        let value = match self {
            Record::HeadPose(s) => {
                let q = s.orientation.quaternion();
                json!({
                    "t": s.t,
                    "type": "head_pose",
                    "pos": [s.position.x, s.position.y, s.position.z],
                    "quat": [q.w, q.i, q.j, q.k],
                })
            }
            Record::Skeleton(s) => {
                let mut joints = Map::new();
                for j in Joint::ALL {
                    let p = s.joint(j);
                    joints.insert(j.name().to_string(), json!([p.x, p.y, p.z]));
                }
                for (name, p) in &s.extra {
                    joints.insert(name.clone(), json!([p.x, p.y, p.z]));
                }
                json!({ "t": s.t, "type": "skeleton", "joints": joints })
            }
            Record::Event(e) => {
                let mut v = json!({ "t": e.t, "type": "event", "kind": e.kind.as_str() });
                if let Some(arg) = &e.arg {
                    v["arg"] = json!(arg);
                }
                v
            }
        };
        value.to_string()
    }
}

/// Output of [`parse_session`].
#[derive(Debug, Clone, Default)]
pub struct ParsedSession {
    /// Valid records, stably sorted by time.
    pub records: Vec<Record>,
    pub errors: Vec<SessionError>,
    /// Number of non-blank input lines.
    pub lines: usize,
}

/// Parses a line-delimited session. Blank lines are skipped; every other
/// line yields either a record or an error.
pub fn parse_session(text: &str) -> ParsedSession {
    let mut out = ParsedSession::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.lines += 1;
        match parse_record(line, i + 1) {
            Ok(r) => out.records.push(r),
            Err(e) => out.errors.push(e),
        }
    }
    out.records.sort_by(|a, b| a.t().total_cmp(&b.t()));
    out
}

/// Serialises records one per line, each terminated by `\n`.
pub fn write_session(records: &[Record]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

fn malformed(line: usize, reason: impl Into<String>) -> SessionError {
    SessionError::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

fn number(v: &Value, field: &str, line: usize) -> Result<f64, SessionError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| malformed(line, format!("`{field}` is not representable as f64"))),
        Value::String(s) => match s.trim().parse::<f64>() {
            Ok(x) if !x.is_finite() => Err(SessionError::NonFiniteValue {
                line,
                field: field.to_string(),
            }),
            _ => Err(malformed(line, format!("`{field}` must be a number"))),
        },
        _ => Err(malformed(line, format!("`{field}` must be a number"))),
    }
}

fn numbers<const N: usize>(v: Option<&Value>, field: &str, line: usize) -> Result<[f64; N], SessionError> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(line, format!("`{field}` must be an array of {N} numbers")))?;
    if arr.len() != N {
        return Err(malformed(line, format!("`{field}` must have {N} elements, found {}", arr.len())));
    }
    let mut out = [0.0; N];
    for (o, x) in out.iter_mut().zip(arr) {
        *o = number(x, field, line)?;
    }
    Ok(out)
}

/// Parses one line; `line` is the 1-based line number used in errors.
pub fn parse_record(text: &str, line: usize) -> Result<Record, SessionError> {
    let value: Value = serde_json::from_str(text).map_err(|e| malformed(line, e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed(line, "record is not an object"))?;
    let t = number(
        obj.get("t").ok_or_else(|| malformed(line, "missing `t`"))?,
        "t",
        line,
    )?;
    if t < 0.0 {
        return Err(malformed(line, "`t` must be non-negative"));
    }
    let tag = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(line, "missing `type`"))?;

    match tag {
        "head_pose" => {
            let [x, y, z] = numbers::<3>(obj.get("pos"), "pos", line)?;
            let [w, i, j, k] = numbers::<4>(obj.get("quat"), "quat", line)?;
            let q = Quaternion::new(w, i, j, k);
            if (q.norm() - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
                return Err(malformed(line, format!("quaternion norm {} is not 1", q.norm())));
            }
            Ok(Record::HeadPose(HeadPoseSample {
                t,
                position: Vec3::new(x, y, z),
                // keep the stored components so serialisation round-trips exactly
                orientation: UnitQuaternion::new_unchecked(q),
            }))
        }
        "skeleton" => {
            let joints = obj
                .get("joints")
                .and_then(Value::as_object)
                .ok_or_else(|| malformed(line, "`joints` must be an object"))?;
            let mut parsed = [Vec3::zeros(); 8];
            for j in Joint::ALL {
                let v = joints.get(j.name()).ok_or_else(|| SessionError::MissingJoint {
                    line,
                    joint: j.name().to_string(),
                })?;
                let [x, y, z] = numbers::<3>(Some(v), j.name(), line)?;
                parsed[j.index()] = Vec3::new(x, y, z);
            }
            let mut extra = BTreeMap::new();
            for (name, v) in joints {
                if Joint::ALL.iter().any(|j| j.name() == name) {
                    continue;
                }
                let [x, y, z] = numbers::<3>(Some(v), name, line)?;
                extra.insert(name.clone(), Vec3::new(x, y, z));
            }
            Ok(Record::Skeleton(SkeletonSample {
                t,
                joints: parsed,
                extra,
            }))
        }
        "event" => {
            let kind: EventKind = obj
                .get("kind")
                .and_then(Value::as_str)
                .ok_or_else(|| malformed(line, "missing `kind`"))?
                .parse()
                .map_err(|e: String| malformed(line, e))?;
            let arg = match obj.get("arg") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(_) => return Err(malformed(line, "`arg` must be a string")),
            };
            if kind == EventKind::RequestComponent && arg.as_deref().is_none_or(str::is_empty) {
                return Err(malformed(line, "request_component needs a non-empty `arg`"));
            }
            Ok(Record::Event(InteractionEvent { t, kind, arg }))
        }
        other => Err(malformed(line, format!("unknown record type `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FULL_SKELETON: &str = r#"{"t":1.0,"type":"skeleton","joints":{"neck":[0,0,0],"head":[0,0.1,0],"left_shoulder":[-0.2,0,0],"right_shoulder":[0.2,0,0],"left_elbow":[-0.3,-0.2,0],"right_elbow":[0.3,-0.2,0],"left_wrist":[-0.3,-0.4,0.1],"right_wrist":[0.3,-0.4,0.1]}}"#;

    #[test]
    fn identity_head_pose() {
        let p = parse_session(r#"{"t":0.0,"type":"head_pose","pos":[0,0,0],"quat":[1,0,0,0]}"#);
        assert!(p.errors.is_empty());
        assert_eq!(p.records.len(), 1);
        let Record::HeadPose(h) = &p.records[0] else { panic!() };
        assert_eq!(h.t, 0.0);
        assert_eq!(h.position, Vec3::zeros());
        assert_eq!(h.orientation, UnitQuaternion::identity());
    }

    #[test]
    fn records_sorted_by_time() {
        let text = "{\"t\":5.0,\"type\":\"event\",\"kind\":\"pause\"}\n{\"t\":3.0,\"type\":\"event\",\"kind\":\"resume\"}\n";
        let p = parse_session(text);
        let ts: Vec<f64> = p.records.iter().map(Record::t).collect();
        assert_eq!(ts, vec![3.0, 5.0]);
    }

    #[test]
    fn equal_times_keep_input_order() {
        let text = "{\"t\":1.0,\"type\":\"event\",\"kind\":\"request_component\",\"arg\":\"p1\"}\n\
                    {\"t\":1.0,\"type\":\"event\",\"kind\":\"fsm_feedback\",\"arg\":\"Reaching component\"}\n\
                    {\"t\":0.5,\"type\":\"event\",\"kind\":\"pause\"}";
        let p = parse_session(text);
        let kinds: Vec<EventKind> = p
            .records
            .iter()
            .map(|r| match r {
                Record::Event(e) => e.kind,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(kinds, vec![EventKind::Pause, EventKind::RequestComponent, EventKind::FsmFeedback]);
    }

    #[test]
    fn missing_joint_names_line() {
        let bad = FULL_SKELETON.replace(r#","left_wrist":[-0.3,-0.4,0.1]"#, "");
        let text = format!("{FULL_SKELETON}\n{bad}\n");
        let p = parse_session(&text);
        assert_eq!(p.records.len(), 1);
        assert_eq!(
            p.errors,
            vec![SessionError::MissingJoint {
                line: 2,
                joint: "left_wrist".into()
            }]
        );
    }

    #[test]
    fn malformed_and_non_finite() {
        let text = [
            "not json",
            r#"{"t":1,"type":"gaze"}"#,
            r#"{"t":"NaN","type":"event","kind":"pause"}"#,
            r#"{"t":1,"type":"head_pose","pos":[0,0,"inf"],"quat":[1,0,0,0]}"#,
            r#"{"t":1,"type":"head_pose","pos":[0,0,0],"quat":[1,0,0,0.1]}"#,
            r#"{"t":1,"type":"event","kind":"request_component"}"#,
            r#"{"t":1,"type":"event","kind":"teleport"}"#,
            r#"{"t":-1,"type":"event","kind":"pause"}"#,
        ]
        .join("\n");
        let p = parse_session(&text);
        assert!(p.records.is_empty());
        assert_eq!(p.errors.len(), 8);
        assert!(matches!(p.errors[2], SessionError::NonFiniteValue { line: 3, .. }));
        assert!(matches!(&p.errors[3], SessionError::NonFiniteValue { line: 4, field } if field == "pos"));
        for (i, e) in p.errors.iter().enumerate() {
            assert_eq!(e.line(), i + 1);
        }
    }

    #[test]
    fn blank_lines_skipped() {
        let p = parse_session("\n  \n{\"t\":0,\"type\":\"event\",\"kind\":\"pause\"}\n\n");
        assert_eq!(p.lines, 1);
        assert_eq!(p.records.len(), 1);
    }

    #[test]
    fn extra_joints_round_trip() {
        let with_extra = FULL_SKELETON.replace(r#""neck""#, r#""pelvis":[0,-0.5,0],"neck""#);
        let p = parse_session(&with_extra);
        let line = p.records[0].to_line();
        assert!(line.contains("pelvis"));
        assert_eq!(parse_session(&line).records, p.records);
    }

    fn arb_record() -> impl Strategy<Value = Record> {
        let t = 0.0..1000.0f64;
        let v = || prop::array::uniform3(-5.0..5.0f64);
        prop_oneof![
            (t.clone(), v(), prop::array::uniform4(-1.0..1.0f64))
                .prop_filter("non-degenerate quaternion", |(_, _, q)| q.iter().map(|x| x * x).sum::<f64>() > 1e-3)
                .prop_map(|(t, p, q)| Record::HeadPose(HeadPoseSample {
                    t,
                    position: Vec3::from(p),
                    orientation: UnitQuaternion::new_normalize(Quaternion::new(q[0], q[1], q[2], q[3])),
                })),
            (t.clone(), prop::array::uniform8(v())).prop_map(|(t, js)| Record::Skeleton(SkeletonSample::new(
                t,
                js.map(Vec3::from)
            ))),
            (t, 0usize..7, prop::option::of("[a-z0-9_ ]{1,12}")).prop_map(|(t, k, arg)| {
                let kind = [
                    EventKind::InstructionNext,
                    EventKind::InstructionBack,
                    EventKind::RequestComponent,
                    EventKind::Pause,
                    EventKind::Resume,
                    EventKind::Reset,
                    EventKind::FsmFeedback,
                ][k];
                let arg = if kind == EventKind::RequestComponent {
                    Some(arg.unwrap_or_else(|| "c".into()))
                } else {
                    arg
                };
                Record::Event(InteractionEvent { t, kind, arg })
            }),
        ]
    }

    proptest! {
        #[test]
        fn serialise_parse_round_trip(records in prop::collection::vec(arb_record(), 0..30)) {
            let text = write_session(&records);
            let parsed = parse_session(&text);
            prop_assert!(parsed.errors.is_empty());
            let mut expected = records.clone();
            expected.sort_by(|a, b| a.t().total_cmp(&b.t()));
            prop_assert_eq!(parsed.records, expected);
        }

        #[test]
        fn valid_plus_errors_equals_lines(lines in prop::collection::vec(
            prop_oneof![
                arb_record().prop_map(|r| r.to_line()),
                "[a-z{}:,\"0-9]{0,20}".prop_map(|s| format!("x{s}")),
            ],
            0..30,
        )) {
            let parsed = parse_session(&lines.join("\n"));
            prop_assert_eq!(parsed.records.len() + parsed.errors.len(), parsed.lines);
            prop_assert_eq!(parsed.lines, lines.len());
            prop_assert!(parsed.records.windows(2).all(|w| w[0].t() <= w[1].t()));
        }
    }
}
