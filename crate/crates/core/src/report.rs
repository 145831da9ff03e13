//! Serializable summaries and plain-text rendering of analysis results.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::compositeness::PoleReport;
use crate::lseq::XBreakdown;

fn fmt_c(z: Complex64) -> String {
    if z.im >= 0.0 {
        format!("{:.9e} + {:.9e} i", z.re, z.im)
    } else {
        format!("{:.9e} - {:.9e} i", z.re, -z.im)
    }
}

/// Human-readable block for one pole analysis.
pub fn pole_report_text(report: &PoleReport, channel_labels: &[String]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "pole at {} on sheets {}\n",
        fmt_c(report.pole.value),
        report.pole.sheet
    ));
    for (i, label) in channel_labels.iter().enumerate() {
        out.push_str(&format!(
            "  channel {i} [{label}]: g = {}\n    X_i = {}  |X_i| = {:.9}  phi_i = {:+.6} rad\n",
            fmt_c(report.couplings[i]),
            fmt_c(report.x_i[i]),
            report.x_abs_i[i],
            report.phases[i],
        ));
    }
    out.push_str(&format!("  X (total) = {}\n", fmt_c(report.x_total)));
    match report.z {
        Some(z) => {
            out.push_str(&format!("  Z         = {}\n", fmt_c(z)));
            out.push_str(&format!(
                "  |X + Z - 1| = {:.3e}\n",
                report.sum_residual.unwrap_or(f64::NAN)
            ));
        }
        None => out.push_str("  Z unavailable (no kernel derivative)\n"),
    }
    out.push_str(&format!(
        "  Laurent window: {}\n",
        if report.laurent_reliable {
            "ok"
        } else {
            "unreliable"
        }
    ));
    for note in &report.notes {
        out.push_str(&format!("  note: {note}\n"));
    }
    out
}

/// Serializable view of a Lippmann-Schwinger compositeness breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XBreakdownSummary {
    pub per_wave: Vec<WaveXSummary>,
    pub total: Complex64,
    pub sum_deviation: f64,
    pub tail_warning: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveXSummary {
    pub label: String,
    pub integral: Complex64,
    pub boundary: Complex64,
    pub total: Complex64,
}

impl From<&XBreakdown> for XBreakdownSummary {
    fn from(x: &XBreakdown) -> Self {
        XBreakdownSummary {
            per_wave: x
                .per_wave
                .iter()
                .map(|w| WaveXSummary {
                    label: w.label.clone(),
                    integral: w.integral,
                    boundary: w.boundary,
                    total: w.total,
                })
                .collect(),
            total: x.total,
            sum_deviation: (x.total - 1.0).norm(),
            tail_warning: x.tail_warning,
        }
    }
}

pub fn x_breakdown_text(x: &XBreakdownSummary) -> String {
    let mut out = String::new();
    for w in &x.per_wave {
        out.push_str(&format!(
            "  wave {}: X = {} (integral {}, boundary {})\n",
            w.label,
            fmt_c(w.total),
            fmt_c(w.integral),
            fmt_c(w.boundary)
        ));
    }
    out.push_str(&format!(
        "  sum X = {}  |sum X - 1| = {:.3e}{}\n",
        fmt_c(x.total),
        x.sum_deviation,
        if x.tail_warning {
            "  [tail warning: integrand not decayed at grid edge]"
        } else {
            ""
        }
    ));
    out
}
