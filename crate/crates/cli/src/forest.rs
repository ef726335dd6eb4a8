//! Static SVG forest plot: one row per study with the input estimate, its
//! 95% interval and the shrinkage interval; summary rows with a diamond for
//! the effect and a bar for the prediction; a vertical zero reference line.
//!
//! Geometry elements carry `data-*` attributes with their coordinates on the
//! effect scale, which keeps the output testable and self-describing.

use std::fmt::Write as _;
use std::path::Path;

use remeta::{AnalysisResult, IntervalKind, Target};

use crate::CliError;

const WIDTH: f64 = 860.0;
const LABEL_X: f64 = 10.0;
const TEXT_X: f64 = 180.0;
const PLOT_X0: f64 = 400.0;
const PLOT_X1: f64 = WIDTH - 30.0;
const ROW_H: f64 = 26.0;
const TOP: f64 = 46.0;

struct Scale {
    lo: f64,
    hi: f64,
}

impl Scale {
    fn x(&self, value: f64) -> f64 {
        PLOT_X0 + (value - self.lo) / (self.hi - self.lo) * (PLOT_X1 - PLOT_X0)
    }
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render the forest plot for a finished analysis to `path`.
pub fn render_forest(result: &AnalysisResult, path: &Path) -> Result<(), CliError> {
    let data = result.data();
    let k = data.k();
    let s = result.summary();

    let study_lo: Vec<f64> = data.estimates().iter().map(|e| e.y - 1.96 * e.sigma).collect();
    let study_hi: Vec<f64> = data.estimates().iter().map(|e| e.y + 1.96 * e.sigma).collect();
    let shrink: Vec<_> = (0..k)
        .map(|i| result.credible_interval(Target::Shrinkage(i), 0.95, IntervalKind::Shortest))
        .collect();

    let mut lo = 0.0_f64;
    let mut hi = 0.0_f64;
    for v in study_lo
        .iter()
        .chain(study_hi.iter())
        .chain(shrink.iter().flat_map(|iv| [&iv.lo, &iv.hi]))
        .chain([
            &s.mu.interval.lo,
            &s.mu.interval.hi,
            &s.predictive.interval.lo,
            &s.predictive.interval.hi,
        ])
    {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let pad = 0.05 * (hi - lo).max(1e-9);
    let scale = Scale {
        lo: lo - pad,
        hi: hi + pad,
    };

    let n_rows = k + 3; // studies, gap, effect, prediction
    let height = TOP + n_rows as f64 * ROW_H + 50.0;
    let mut svg = String::new();
    let _ = writeln!(svg, r##"<?xml version="1.0" encoding="UTF-8"?>"##);
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height}" font-family="monospace" font-size="12">"##
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{LABEL_X}" y="20" font-weight="bold">study</text>"##
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{TEXT_X}" y="20" font-weight="bold">estimate [95% interval]</text>"##
    );

    // zero reference line across the plotting area
    let x0 = scale.x(0.0);
    let plot_bottom = TOP + n_rows as f64 * ROW_H;
    let _ = writeln!(
        svg,
        r##"  <line class="zero" x1="{x0:.2}" y1="{TOP}" x2="{x0:.2}" y2="{plot_bottom:.2}" stroke="#999" stroke-dasharray="4 3"/>"##
    );

    for (i, e) in data.estimates().iter().enumerate() {
        let y_px = TOP + (i as f64 + 0.5) * ROW_H;
        let iv = &shrink[i];
        let _ = writeln!(
            svg,
            r##"  <text x="{LABEL_X}" y="{:.2}">{}</text>"##,
            y_px + 4.0,
            esc(&e.label)
        );
        let _ = writeln!(
            svg,
            r##"  <text x="{TEXT_X}" y="{:.2}">{:.2} [{:.2}, {:.2}]</text>"##,
            y_px + 4.0,
            e.y,
            study_lo[i],
            study_hi[i]
        );
        // shrinkage interval in grey, slightly below the study line
        let _ = writeln!(
            svg,
            r##"  <line class="shrinkage" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#aaa" stroke-width="3" data-lo="{}" data-hi="{}"/>"##,
            scale.x(iv.lo),
            y_px + 5.0,
            scale.x(iv.hi),
            y_px + 5.0,
            iv.lo,
            iv.hi
        );
        let _ = writeln!(
            svg,
            r##"  <line class="study" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000" stroke-width="1.5" data-lo="{}" data-hi="{}"/>"##,
            scale.x(study_lo[i]),
            y_px,
            scale.x(study_hi[i]),
            y_px,
            study_lo[i],
            study_hi[i]
        );
        let _ = writeln!(
            svg,
            r##"  <circle class="estimate" cx="{:.2}" cy="{y_px:.2}" r="4" fill="#000" data-y="{}"/>"##,
            scale.x(e.y),
            e.y
        );
    }

    // effect summary: diamond spanning the 95% interval, centred vertically
    let y_mu = TOP + (k as f64 + 1.5) * ROW_H;
    let (mu_lo, mu_hi) = (s.mu.interval.lo, s.mu.interval.hi);
    let _ = writeln!(
        svg,
        r##"  <text x="{LABEL_X}" y="{:.2}">effect (mu)</text>"##,
        y_mu + 4.0
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{TEXT_X}" y="{:.2}">{:.2} [{:.2}, {:.2}]</text>"##,
        y_mu + 4.0,
        s.mu.median,
        mu_lo,
        mu_hi
    );
    let _ = writeln!(
        svg,
        r##"  <polygon class="effect" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#000" data-lo="{}" data-hi="{}" data-median="{}"/>"##,
        scale.x(mu_lo),
        y_mu,
        scale.x(s.mu.median),
        y_mu - 7.0,
        scale.x(mu_hi),
        y_mu,
        scale.x(s.mu.median),
        y_mu + 7.0,
        mu_lo,
        mu_hi,
        s.mu.median
    );

    // prediction: bar spanning the predictive 95% interval
    let y_pred = y_mu + ROW_H;
    let (p_lo, p_hi) = (s.predictive.interval.lo, s.predictive.interval.hi);
    let _ = writeln!(
        svg,
        r##"  <text x="{LABEL_X}" y="{:.2}">prediction</text>"##,
        y_pred + 4.0
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{TEXT_X}" y="{:.2}">{:.2} [{:.2}, {:.2}]</text>"##,
        y_pred + 4.0,
        s.predictive.median,
        p_lo,
        p_hi
    );
    let _ = writeln!(
        svg,
        r##"  <rect class="prediction" x="{:.2}" y="{:.2}" width="{:.2}" height="8" fill="#666" data-lo="{}" data-hi="{}"/>"##,
        scale.x(p_lo),
        y_pred - 4.0,
        scale.x(p_hi) - scale.x(p_lo),
        p_lo,
        p_hi
    );

    // axis labels
    let _ = writeln!(
        svg,
        r##"  <text x="{:.2}" y="{:.2}" text-anchor="middle">0</text>"##,
        x0,
        plot_bottom + 16.0
    );
    let _ = writeln!(svg, "</svg>");

    std::fs::write(path, svg)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
