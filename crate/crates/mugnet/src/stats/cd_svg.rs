//! Critical-difference diagram rendered as standalone SVG: a reversed rank
//! axis (rank 1, the best, on the right), method labels connected to their
//! rank positions, and one thick bar per significance group.

use crate::stats::CdReport;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const MARGIN: f64 = 110.0;
const AXIS_Y: f64 = 40.0;
const BAR_GAP: f64 = 14.0;
const LABEL_STEP: f64 = 22.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_cd_diagram(report: &CdReport) -> String {
    let k = report.methods.len();
    let kf = k as f64;
    // Reversed axis: rank 1 maps to the right edge.
    let x_of = |rank: f64| -> f64 {
        let span = WIDTH - 2.0 * MARGIN;
        MARGIN + span * (kf - rank) / (kf - 1.0)
    };

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| report.mean_ranks[a].total_cmp(&report.mean_ranks[b]));
    let left_count = k - k / 2;

    let bars_height = report.groups.len() as f64 * BAR_GAP;
    let labels_height = left_count as f64 * LABEL_STEP;
    let height = AXIS_Y + bars_height + labels_height + 50.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );

    // Axis with integer ticks.
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{AXIS_Y}" x2="{}" y2="{AXIS_Y}" stroke="black"/>"#,
        x_of(kf),
        x_of(1.0)
    );
    for r in 1..=k {
        let x = x_of(r as f64);
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{AXIS_Y}" stroke="black"/>"#,
            AXIS_Y - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" text-anchor="middle">{r}</text>"#,
            AXIS_Y - 10.0
        );
    }

    // CD ruler above the axis, anchored at the worst-rank end.
    let cd_x1 = x_of(kf);
    let cd_x2 = x_of(kf - report.cd);
    let _ = writeln!(
        svg,
        r#"<line x1="{cd_x1}" y1="14" x2="{cd_x2}" y2="14" stroke="black" stroke-width="1"/>"#
    );
    for x in [cd_x1, cd_x2] {
        let _ = writeln!(svg, r#"<line x1="{x}" y1="10" x2="{x}" y2="18" stroke="black"/>"#);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="10" text-anchor="middle">CD={:.3}</text>"#,
        (cd_x1 + cd_x2) / 2.0,
        report.cd
    );

    // Group bars under the axis.
    for (i, group) in report.groups.iter().enumerate() {
        let ranks: Vec<f64> = group
            .iter()
            .map(|name| {
                let m = report.methods.iter().position(|n| n == name).unwrap();
                report.mean_ranks[m]
            })
            .collect();
        let lo = ranks.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ranks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let y = AXIS_Y + BAR_GAP * (i + 1) as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black" stroke-width="4" stroke-linecap="round"/>"#,
            x_of(hi) - 4.0,
            x_of(lo) + 4.0
        );
    }

    // Method labels: best half on the right, rest on the left, with
    // connectors from the rank position.
    let label_top = AXIS_Y + bars_height + 20.0;
    for (pos, &m) in order.iter().enumerate() {
        let rank = report.mean_ranks[m];
        let x = x_of(rank);
        let (label_x, anchor, row) = if pos < left_count {
            (WIDTH - MARGIN + 80.0, "end", pos)
        } else {
            (MARGIN - 80.0, "start", k - 1 - pos)
        };
        let y = label_top + row as f64 * LABEL_STEP;
        let _ = writeln!(
            svg,
            r#"<polyline points="{x},{AXIS_Y} {x},{y} {label_x},{y}" fill="none" stroke="black" stroke-width="0.8"/>"#
        );
        let text_x = if anchor == "end" { label_x + 4.0 } else { label_x - 4.0 };
        let text_anchor = if anchor == "end" { "start" } else { "end" };
        let _ = writeln!(
            svg,
            r#"<text x="{text_x}" y="{}" text-anchor="{text_anchor}">{} ({:.3})</text>"#,
            y + 4.0,
            esc(&report.methods[m]),
            rank
        );
    }

    svg.push_str("</svg>\n");
    svg
}
