//! Static SVG charts of stress curves with stacked per-term contributions.

use std::fmt::Write as _;

use crate::dataio::Experiment;
use crate::energy::{ModelWeights, TermId, NUM_TERMS};
use crate::error::Result;
use crate::stress::{stress_contributions, Condition, LoadingCase};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;

/// One colour per catalog term.
pub const TERM_COLORS: [&str; NUM_TERMS] = [
    "#1f4e79", "#2e75b6", "#5b9bd5", "#9dc3e6", "#385723", "#548235", "#70ad47", "#a9d18e",
    "#843c0c", "#c55a11", "#7030a0", "#b4a7d6",
];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 1.5 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 1.5 * MARGIN)
    }
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

/// Model stress on `condition` at `loadings`, drawn as stacked term areas
/// with the total as a line. Measured points from `data` are overlaid.
pub fn decomposition_svg(
    model: &ModelWeights,
    condition: Condition,
    loadings: &[f64],
    data: Option<&Experiment>,
) -> Result<String> {
    let mut parts = Vec::with_capacity(loadings.len());
    for &l in loadings {
        parts.push(stress_contributions(
            model,
            &LoadingCase::new(condition.mode, condition.dir, l)?,
        )?);
    }
    let totals: Vec<f64> = parts.iter().map(|p| p.iter().sum()).collect();
    let measured: Vec<(f64, f64)> = data
        .map(|e| e.samples.iter().map(|s| (s.loading, s.stress)).collect())
        .unwrap_or_default();

    let frame = Frame {
        x: span(loadings.iter().copied().chain(measured.iter().map(|p| p.0))),
        y: span(totals.iter().copied().chain(measured.iter().map(|p| p.1))),
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{} {}</text>"#,
        WIDTH / 2.0,
        condition.mode,
        condition.dir
    );

    let mut lower = vec![0.0; loadings.len()];
    for k in TermId::all() {
        let i = k.index();
        if parts.iter().all(|p| p[i] == 0.0) {
            continue;
        }
        let upper: Vec<f64> = lower.iter().zip(&parts).map(|(l, p)| l + p[i]).collect();
        let mut d = String::new();
        for (j, &x) in loadings.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if j == 0 { "M" } else { "L" },
                frame.px(x),
                frame.py(upper[j])
            );
        }
        for (j, &x) in loadings.iter().enumerate().rev() {
            let _ = write!(d, "L{:.2},{:.2} ", frame.px(x), frame.py(lower[j]));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}Z" fill="{}" fill-opacity="0.8" stroke="none"><title>term {}: {}</title></path>"#,
            d,
            TERM_COLORS[i],
            k.number(),
            k.describe()
        );
        lower = upper;
    }

    let mut line = String::new();
    for (j, (&x, &y)) in loadings.iter().zip(&totals).enumerate() {
        let _ = write!(
            line,
            "{}{:.2},{:.2} ",
            if j == 0 { "M" } else { "L" },
            frame.px(x),
            frame.py(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<path d="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        line.trim_end()
    );
    for (x, y) in &measured {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="none" stroke="black"/>"#,
            frame.px(*x),
            frame.py(*y)
        );
    }

    // axes through the frame edges, with the zero-stress line
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(
        svg,
        r##"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="#444"/>"##
    );
    let yz = frame.py(0.0);
    let _ = writeln!(
        svg,
        r##"<line x1="{x0:.2}" y1="{yz:.2}" x2="{x1:.2}" y2="{yz:.2}" stroke="#999" stroke-dasharray="3,3"/>"##
    );
    let xlabel = if condition.mode.is_uniaxial() {
        "stretch [-]"
    } else {
        "shear [-]"
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">stress [kPa]</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (v, anchor_x, anchor_y, align) in [
        (frame.x.0, x0, y0 + 14.0, "middle"),
        (frame.x.1, x1, y0 + 14.0, "middle"),
    ] {
        let _ = writeln!(
            svg,
            r#"<text x="{anchor_x:.2}" y="{anchor_y:.2}" text-anchor="{align}">{v:.3}</text>"#
        );
    }
    for v in [frame.y.0, frame.y.1] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            x0 - 4.0,
            frame.py(v) + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
