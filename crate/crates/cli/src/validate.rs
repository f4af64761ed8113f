//! `validate`: block-level correlation of scores with physiology.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use cogload_physio::{validate_blocks, EdaSeries, RrSeries, ScoreSeries, ValidationReport};

use crate::{CliError, ValidateArgs};

pub const VALIDATION_FILE: &str = "validation.json";

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty())
}

fn number(field: &str, path: &Path, line: usize) -> anyhow::Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| anyhow!("{}:{line}: `{field}` is not a number", path.display()))
}

/// Reads `t`, `mental_effort` and `stress_level` from a score CSV by header
/// name.
pub fn read_scores(path: &Path) -> anyhow::Result<ScoreSeries> {
    let text = read(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| anyhow!("{}: empty score file", path.display()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| anyhow!("{}: missing column `{name}`", path.display()))
    };
    let (ct, cm, cs) = (col("t")?, col("mental_effort")?, col("stress_level")?);
    let mut s = ScoreSeries::default();
    for (i, line) in lines {
        let row: Vec<&str> = line.split(',').collect();
        let get = |c: usize| -> anyhow::Result<f64> {
            let f = row.get(c).ok_or_else(|| anyhow!("{}:{}: short row", path.display(), i + 1))?;
            number(f.trim(), path, i + 1)
        };
        s.t.push(get(ct)?);
        s.mental_effort.push(get(cm)?);
        s.stress_level.push(get(cs)?);
    }
    Ok(s)
}

/// One RR interval (seconds) per line; `#` starts a comment.
pub fn read_rr(path: &Path) -> anyhow::Result<RrSeries> {
    let text = read(path)?;
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        raw.push(number(line, path, i + 1)?);
    }
    RrSeries::from_intervals(&raw).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// `t value` pairs (comma or whitespace separated). The rate comes from a
/// `# rate_hz <value>` comment when present and otherwise from the first
/// time step.
pub fn read_eda(path: &Path) -> anyhow::Result<EdaSeries> {
    let text = read(path)?;
    let mut declared = None;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("rate_hz") {
                let v = parts.next().ok_or_else(|| anyhow!("{}:{}: rate_hz without a value", path.display(), i + 1))?;
                declared = Some(number(v, path, i + 1)?);
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let f: Vec<&str> = fields(trimmed).collect();
        if f.len() != 2 {
            bail!("{}:{}: expected `t value`", path.display(), i + 1);
        }
        times.push(number(f[0], path, i + 1)?);
        values.push(number(f[1], path, i + 1)?);
    }
    let rate = match declared {
        Some(r) => r,
        None if times.len() >= 2 => 1.0 / (times[1] - times[0]),
        None => bail!("{}: need at least two samples or a rate_hz comment", path.display()),
    };
    EdaSeries::from_samples(&times, values, rate).map_err(|e| anyhow!("{}: {e}", path.display()))
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<ValidationReport, CliError> {
    if !(args.block_length > 0.0 && args.block_length.is_finite()) {
        return Err(CliError::Usage(format!("--block-length must be positive, got {}", args.block_length)));
    }
    let scores = read_scores(&args.scores)?;
    let rr = read_rr(&args.rr)?;
    let eda = read_eda(&args.eda)?;
    let report = validate_blocks(&scores, &rr, &eda, args.block_length).map_err(|e| anyhow!("validation: {e}"))?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(VALIDATION_FILE);
        let text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)? + "\n";
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}
