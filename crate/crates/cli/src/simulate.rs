//! `simulate`: session, ground truth, config and physiology files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use cogload_core::simulator::{generate_physio, generate_session, simulation_config, PhysioSignals, ScenarioSpec};
use cogload_core::session::write_session;

use crate::{CliError, SimulateArgs};

pub const SESSION_FILE: &str = "session.jsonl";
pub const TRUTH_FILE: &str = "truth.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const RR_FILE: &str = "rr.txt";
pub const EDA_FILE: &str = "eda.txt";

/// Seconds of task time reserved per handover; shorter sessions get fewer.
const SECONDS_PER_HANDOVER: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub session: PathBuf,
    pub truth: PathBuf,
    pub config: PathBuf,
    pub rr: PathBuf,
    pub eda: PathBuf,
}

impl SimulateOutput {
    pub fn paths(&self) -> [&Path; 5] {
        [&self.session, &self.truth, &self.config, &self.rr, &self.eda]
    }
}

pub fn spec_from_args(args: &SimulateArgs) -> Result<ScenarioSpec, CliError> {
    if !(args.duration > 0.0 && args.duration.is_finite()) {
        return Err(CliError::Usage(format!("--duration must be positive, got {}", args.duration)));
    }
    let mut spec = ScenarioSpec::new(args.scenario.into(), args.seed);
    spec.duration = args.duration;
    spec.handovers = spec.handovers.min((args.duration / SECONDS_PER_HANDOVER).floor() as usize);
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

pub fn rr_text(p: &PhysioSignals) -> String {
    let mut s = String::from("# RR intervals in seconds; the first beat closes at task time 0 + rr[0]\n");
    for rr in &p.rr {
        writeln!(s, "{rr}").expect("write to string");
    }
    s
}

pub fn eda_text(p: &PhysioSignals) -> String {
    let mut s = format!("# rate_hz {}\n# t value (skin conductance in uS, task time in s)\n", p.eda_rate);
    for (t, v) in p.eda_times().zip(&p.eda) {
        writeln!(s, "{t} {v}").expect("write to string");
    }
    s
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateOutput, CliError> {
    let spec = spec_from_args(args)?;
    let (records, truth) = generate_session(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let physio = generate_physio(&truth.load_profile, truth.block_length, spec.seed);

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let out = SimulateOutput {
        session: args.out.join(SESSION_FILE),
        truth: args.out.join(TRUTH_FILE),
        config: args.out.join(CONFIG_FILE),
        rr: args.out.join(RR_FILE),
        eda: args.out.join(EDA_FILE),
    };
    let truth_json = serde_json::to_string_pretty(&truth).context("serialising ground truth")?;
    for (path, text) in [
        (&out.session, write_session(&records)),
        (&out.truth, truth_json + "\n"),
        (&out.config, simulation_config().to_toml()),
        (&out.rr, rr_text(&physio)),
        (&out.eda, eda_text(&physio)),
    ] {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(out)
}
