//! Human-readable summary of a replay run.

use std::fmt::Write as _;
use std::path::Path;

use crate::replay::{read_report, RunReport, REPORT_FILE};
use crate::CliError;

pub fn load(dir: &Path) -> Result<RunReport, CliError> {
    Ok(read_report(&dir.join(REPORT_FILE))?)
}

pub fn summary(r: &RunReport) -> String {
    let mut s = String::new();
    let c = &r.counts;
    let _ = writeln!(
        s,
        "session {}: {} records ({} rejected), {} loops over {:.1} s",
        r.session.path.display(),
        r.session.records,
        r.session.rejected_records,
        c.loops,
        r.duration
    );
    let _ = writeln!(
        s,
        "events: {} attention losses, {} focus switches, {} assistant checks, {} not-required switches, {} check-backs, {} self-touches",
        c.attention_losses, c.focus_switches, c.assistant_checks, c.not_required_switches, c.check_backs, c.self_touches
    );
    let _ = writeln!(s, "block  mental_effort  stress_level");
    for b in &r.blocks {
        let _ = writeln!(s, "{:>5}  {:>13.4}  {:>12.4}", b.index, b.mental_effort, b.stress_level);
    }
    if r.warnings_total > 0 {
        let _ = writeln!(s, "{} warning(s):", r.warnings_total);
        for w in r.warnings.iter().take(10) {
            let _ = writeln!(s, "  {w}");
        }
        if r.warnings_total > 10 {
            let _ = writeln!(s, "  ... see {}", REPORT_FILE);
        }
    }
    let _ = write!(s, "scores: {}", r.outputs.scores_csv.display());
    s
}
