//! Static SVG line chart of the two scores over task time.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorePoint {
    pub t: f64,
    pub mental_effort: f64,
    pub stress_level: f64,
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 50.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 40.0;

/// Round to 0.01 px so the document stays small and stable.
fn px(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Plots one point per second of loops (every `loop_rate`-th sample) for
/// mental effort and stress level on a shared [0, 1] axis.
pub fn score_chart(trace: &[ScorePoint], loop_rate: f64) -> String {
    let step = (loop_rate.round() as usize).max(1);
    let points: Vec<&ScorePoint> = trace
        .iter()
        .enumerate()
        .filter(|(i, _)| (i + 1) % step == 0 || i + 1 == trace.len())
        .map(|(_, p)| p)
        .collect();
    let t_max = points.last().map_or(1.0, |p| p.t.max(1e-9));
    let (plot_w, plot_h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let x = |t: f64| px(LEFT + plot_w * t / t_max);
    let y = |v: f64| px(TOP + plot_h * (1.0 - v.clamp(0.0, 1.0)));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    // axes and gridlines
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yv}" x2="{x2}" y2="{yv}" stroke="#ddd"/><text x="{tx}" y="{ty}" text-anchor="end">{v}</text>"##,
            yv = y(v),
            x2 = WIDTH - RIGHT,
            tx = LEFT - 6.0,
            ty = y(v) + 4.0
        );
    }
    let ticks = 6;
    for k in 0..=ticks {
        let t = t_max * k as f64 / ticks as f64;
        let _ = writeln!(
            s,
            r#"<text x="{tx}" y="{ty}" text-anchor="middle">{label}</text>"#,
            tx = x(t),
            ty = HEIGHT - BOTTOM + 16.0,
            label = t.round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{cx}" y="{ty}" text-anchor="middle">task time (s)</text>"#,
        cx = LEFT + plot_w / 2.0,
        ty = HEIGHT - 6.0
    );
    for (name, colour, value) in [
        ("mental_effort", "#1f77b4", (|p: &ScorePoint| p.mental_effort) as fn(&ScorePoint) -> f64),
        ("stress_level", "#d62728", |p: &ScorePoint| p.stress_level),
    ] {
        let coords: Vec<String> = points.iter().map(|p| format!("{},{}", x(p.t), y(value(p)))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"><title>{name}</title></polyline>"#,
            coords.join(" ")
        );
    }
    let _ = writeln!(
        s,
        r##"<text x="{LEFT}" y="18" fill="#1f77b4">mental_effort</text><text x="{x2}" y="18" fill="#d62728">stress_level</text>"##,
        x2 = LEFT + 110.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_per_second() {
        let trace: Vec<ScorePoint> = (1..=150)
            .map(|k| ScorePoint {
                t: k as f64 / 15.0,
                mental_effort: 0.5,
                stress_level: 0.25,
            })
            .collect();
        let svg = score_chart(&trace, 15.0);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        let line = svg.lines().find(|l| l.contains("mental_effort</title>")).unwrap();
        let points = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points.split(' ').count(), 10);
    }

    #[test]
    fn empty_trace_is_valid_svg() {
        let svg = score_chart(&[], 15.0);
        assert!(svg.contains("</svg>"));
    }
}
