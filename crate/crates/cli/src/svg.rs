//! Minimal pressure-vs-time plot.

use std::fmt::Write as _;

use tubelogic::engine::Trace;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 40.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn render(trace: &Trace) -> String {
    let t_max = trace.samples.last().map_or(1.0, |s| s.time).max(f64::MIN_POSITIVE);
    let p_max = trace
        .samples
        .iter()
        .flat_map(|s| s.pressures.iter().copied())
        .fold(1.0, f64::max);
    let x = |t: f64| MARGIN + t / t_max * (WIDTH - 2.0 * MARGIN);
    let y = |p: f64| HEIGHT - MARGIN - p / p_max * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{}">0 s</text><text x="{}" y="{}" text-anchor="end">{t_max} s</text>"#,
        HEIGHT - MARGIN + 16.0,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{p_max:.0} kPa</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0
    );
    for (j, name) in trace.probe_names.iter().enumerate() {
        let colour = COLOURS[j % COLOURS.len()];
        let points: Vec<String> = trace
            .samples
            .iter()
            .map(|s| format!("{:.2},{:.2}", x(s.time), y(s.pressures[j])))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{colour}">{name}</text>"#,
            WIDTH - MARGIN + 4.0,
            MARGIN + 14.0 * (j as f64 + 1.0)
        );
    }
    out.push_str("</svg>\n");
    out
}
