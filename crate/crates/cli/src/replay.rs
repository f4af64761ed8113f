//! `replay`: stream a session through the engine.
//!
//! The session file is read line by line and every record is pushed into
//! the engine as it arrives, so memory use does not grow with the session
//! beyond the score trace kept for block means and the chart. Records must
//! be in time order; a record earlier than its predecessor is skipped with a
//! warning, as are malformed lines.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use cogload_core::config::load_config;
use cogload_core::engine::{Engine, EngineCounts, LoopOutput};
use cogload_core::factors::Factor;
use cogload_core::kinematics::Hand;
use cogload_core::session::{parse_record, Joint};
use cogload_physio::{segment_blocks, DEFAULT_BLOCK_LENGTH};
use serde::{Deserialize, Serialize};

use crate::svg::{score_chart, ScorePoint};
use crate::{CliError, ReplayArgs};

pub const SCORES_FILE: &str = "scores.csv";
pub const BLOCKS_FILE: &str = "blocks.csv";
pub const CHART_FILE: &str = "scores.svg";
pub const REPORT_FILE: &str = "report.json";
pub const ATTENTION_FILE: &str = "attention.csv";
pub const KINEMATICS_FILE: &str = "kinematics.csv";

/// Warnings beyond this many are counted but not listed individually.
const MAX_LISTED_WARNINGS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub path: PathBuf,
    pub lines: usize,
    pub records: usize,
    pub rejected_records: usize,
    pub first_t: Option<f64>,
    pub last_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMeans {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub mental_effort: f64,
    pub stress_level: f64,
    pub loops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub scores_csv: PathBuf,
    pub blocks_csv: PathBuf,
    pub chart_svg: PathBuf,
    pub attention_csv: Option<PathBuf>,
    pub kinematics_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub session: SessionInfo,
    pub config: PathBuf,
    /// Config fields that fell back to defaults.
    pub config_defaults: Vec<String>,
    pub loop_rate: f64,
    pub calibration_duration: f64,
    /// Task-clock length covered by loops.
    pub duration: f64,
    pub outputs: Outputs,
    pub blocks: Vec<BlockMeans>,
    pub counts: ReportCounts,
    pub warnings: Vec<String>,
    pub warnings_total: usize,
}

/// Engine counters, mirrored so the report can be read back.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportCounts {
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

impl From<&EngineCounts> for ReportCounts {
    fn from(c: &EngineCounts) -> Self {
        Self {
            head_poses: c.head_poses,
            skeletons: c.skeletons,
            events: c.events,
            loops: c.loops,
            attention_losses: c.attention_losses,
            focus_switches: c.focus_switches,
            assistant_checks: c.assistant_checks,
            not_required_switches: c.not_required_switches,
            check_backs: c.check_backs,
            self_touches: c.self_touches,
            filter_resets: c.filter_resets,
            assistant_feedback: c.assistant_feedback,
        }
    }
}

/// Header of the per-loop score CSV.
pub fn scores_header() -> String {
    let mut cols = vec!["t"];
    cols.extend(Factor::ALL.iter().map(|f| f.name()));
    cols.extend(["mental_effort", "stress_level", "focus", "assistant"]);
    cols.join(",")
}

/// Shortest round-trip representation; negative zero prints as `0`.
pub fn num(x: f64) -> String {
    (x + 0.0).to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn scores_row(o: &LoopOutput) -> String {
    let mut row = vec![num(o.t)];
    row.extend(Factor::ALL.iter().map(|&f| opt(o.factors.get(f))));
    row.push(num(o.scores.mental_effort));
    row.push(num(o.scores.stress_level));
    row.push(o.focus.map(|w| w.to_string()).unwrap_or_default());
    row.push(o.assistant.clone());
    row.join(",")
}

fn attention_header(workstations: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=workstations).map(|i| format!("A_W{i}")));
    cols.extend(["focus".to_string(), "transition_kind".to_string()]);
    cols.join(",")
}

fn attention_row(o: &LoopOutput) -> String {
    let mut row = vec![num(o.t)];
    row.extend(o.levels.iter().map(|&a| num(a)));
    row.push(o.focus.map(|w| w.to_string()).unwrap_or_default());
    row.push(o.transitions.iter().map(|tr| tr.kind.as_str()).collect::<Vec<_>>().join(";"));
    row.join(",")
}

fn kinematics_header() -> String {
    let mut cols = vec!["t", "a_k"];
    cols.extend(Joint::ALL.iter().map(|j| j.name()));
    cols.extend(["left_contact", "right_contact", "self_touch"]);
    cols.join(",")
}

fn kinematics_row(o: &LoopOutput) -> String {
    let mut row = vec![num(o.t)];
    match &o.activity {
        Some(a) => {
            row.push(num(a.level));
            row.extend(a.joints.iter().map(|&j| opt(j)));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 1 + Joint::ALL.len())),
    }
    row.push(u8::from(o.contact[0]).to_string());
    row.push(u8::from(o.contact[1]).to_string());
    row.push(
        o.self_touches
            .iter()
            .map(|e| if e.hand == Hand::Left { "left" } else { "right" })
            .collect::<Vec<_>>()
            .join(";"),
    );
    row.join(",")
}

/// Files created so far; removed again unless the run succeeds.
struct Created(Vec<PathBuf>);

impl Created {
    fn create(&mut self, path: PathBuf) -> anyhow::Result<BufWriter<File>> {
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.0.push(path);
        Ok(BufWriter::new(file))
    }

    fn remove_all(&mut self) {
        for p in self.0.drain(..) {
            let _ = fs::remove_file(p);
        }
    }
}

struct Sinks {
    scores: BufWriter<File>,
    attention: Option<BufWriter<File>>,
    kinematics: Option<BufWriter<File>>,
    trace: Vec<ScorePoint>,
}

impl Sinks {
    fn write(&mut self, loops: &mut Vec<LoopOutput>) -> std::io::Result<()> {
        for o in loops.drain(..) {
            writeln!(self.scores, "{}", scores_row(&o))?;
            if let Some(w) = self.attention.as_mut() {
                writeln!(w, "{}", attention_row(&o))?;
            }
            if let Some(w) = self.kinematics.as_mut() {
                writeln!(w, "{}", kinematics_row(&o))?;
            }
            self.trace.push(ScorePoint {
                t: o.t,
                mental_effort: o.scores.mental_effort,
                stress_level: o.scores.stress_level,
            });
        }
        Ok(())
    }
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<RunReport, CliError> {
    let config_text =
        fs::read_to_string(&args.config).with_context(|| format!("reading config {}", args.config.display()))?;
    let (config, defaults) =
        load_config(&config_text).map_err(|e| anyhow!("config {}: {e}", args.config.display()))?;
    let session = File::open(&args.session).with_context(|| format!("opening session {}", args.session.display()))?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut created = Created(Vec::new());
    let result = replay_into(args, config, defaults, BufReader::new(session), &mut created);
    if result.is_err() {
        created.remove_all();
    }
    result.map_err(CliError::Runtime)
}

fn replay_into(
    args: &ReplayArgs,
    config: cogload_core::config::EngineConfig,
    config_defaults: Vec<String>,
    session: impl BufRead,
    created: &mut Created,
) -> anyhow::Result<RunReport> {
    let out = &args.out;
    let outputs = Outputs {
        scores_csv: out.join(SCORES_FILE),
        blocks_csv: out.join(BLOCKS_FILE),
        chart_svg: out.join(CHART_FILE),
        attention_csv: args.debug.then(|| out.join(ATTENTION_FILE)),
        kinematics_csv: args.debug.then(|| out.join(KINEMATICS_FILE)),
    };
    let workstations = config.workstations.len();
    let (loop_rate, calibration_duration) = (config.loop_rate, config.calibration_duration);

    let mut sinks = Sinks {
        scores: created.create(outputs.scores_csv.clone())?,
        attention: outputs.attention_csv.clone().map(|p| created.create(p)).transpose()?,
        kinematics: outputs.kinematics_csv.clone().map(|p| created.create(p)).transpose()?,
        trace: Vec::new(),
    };
    writeln!(sinks.scores, "{}", scores_header())?;
    if let Some(w) = sinks.attention.as_mut() {
        writeln!(w, "{}", attention_header(workstations))?;
    }
    if let Some(w) = sinks.kinematics.as_mut() {
        writeln!(w, "{}", kinematics_header())?;
    }

    let mut engine = Engine::new(config);
    let mut loops = Vec::new();
    let mut warnings = Vec::new();
    let mut info = SessionInfo {
        path: args.session.clone(),
        lines: 0,
        records: 0,
        rejected_records: 0,
        first_t: None,
        last_t: None,
    };
    for (i, line) in session.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", args.session.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        info.lines += 1;
        let record = match parse_record(&line, i + 1) {
            Ok(r) => r,
            Err(e) => {
                info.rejected_records += 1;
                warnings.push(e.to_string());
                continue;
            }
        };
        let t = record.t();
        if info.last_t.is_some_and(|last| t < last) {
            info.rejected_records += 1;
            warnings.push(format!("line {}: record at t={t} is out of order; skipped", i + 1));
            continue;
        }
        info.first_t.get_or_insert(t);
        info.last_t = Some(t);
        info.records += 1;
        engine.push(&record, &mut loops);
        sinks.write(&mut loops)?;
    }
    if info.records == 0 {
        anyhow::bail!("session {} contains no valid records", args.session.display());
    }
    engine.finish(&mut loops);
    sinks.write(&mut loops)?;
    warnings.extend(engine.warnings().iter().cloned());

    sinks.scores.flush()?;
    for w in [sinks.attention.as_mut(), sinks.kinematics.as_mut()].into_iter().flatten() {
        w.flush()?;
    }

    let trace = sinks.trace;
    let blocks = block_means(&trace, DEFAULT_BLOCK_LENGTH);
    let mut blocks_csv = created.create(outputs.blocks_csv.clone())?;
    writeln!(blocks_csv, "block,start,end,mental_effort,stress_level,loops")?;
    for b in &blocks {
        writeln!(
            blocks_csv,
            "{},{},{},{},{},{}",
            b.index,
            num(b.start),
            num(b.end),
            num(b.mental_effort),
            num(b.stress_level),
            b.loops
        )?;
    }
    blocks_csv.flush()?;

    let mut chart = created.create(outputs.chart_svg.clone())?;
    chart.write_all(score_chart(&trace, loop_rate).as_bytes())?;
    chart.flush()?;

    let warnings_total = warnings.len();
    warnings.truncate(MAX_LISTED_WARNINGS);
    let report = RunReport {
        session: info,
        config: args.config.clone(),
        config_defaults,
        loop_rate,
        calibration_duration,
        duration: trace.last().map_or(0.0, |p| p.t),
        outputs,
        blocks,
        counts: engine.counts().into(),
        warnings,
        warnings_total,
    };
    let mut report_file = created.create(out.join(REPORT_FILE))?;
    serde_json::to_writer_pretty(&mut report_file, &report)?;
    writeln!(report_file)?;
    report_file.flush()?;
    Ok(report)
}

/// Block means of the score trace, 2.5-minute blocks from task time 0.
pub fn block_means(trace: &[ScorePoint], block_length: f64) -> Vec<BlockMeans> {
    let t: Vec<f64> = trace.iter().map(|p| p.t).collect();
    let me: Vec<f64> = trace.iter().map(|p| p.mental_effort).collect();
    let sl: Vec<f64> = trace.iter().map(|p| p.stress_level).collect();
    segment_blocks(&t, &[&me, &sl], block_length)
        .into_iter()
        .map(|b| BlockMeans {
            index: b.index,
            start: b.start,
            end: b.end,
            mental_effort: b.means[0],
            stress_level: b.means[1],
            loops: b.samples,
        })
        .collect()
}

/// Reads a replay report back.
pub fn read_report(path: &Path) -> anyhow::Result<RunReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
