//! Partial compositeness `X_i`, elementariness `Z`, the sum rule, S-matrix
//! phase transformations, ERE compositeness formulas, CDD diagnostics and
//! the shallow-bound-state (Weinberg) limit.
//!
//! With the coupling orientation of [`crate::poles`] (`g_i g_j = -res T_ij`)
//! the sum rule reads
//!
//! ```text
//! 1 = sum_i X_i + Z,   X_i = -g_i^2 dG_i/ds|_{pole},
//! Z = g^T G (dK/ds) G g|_{pole}
//! ```
//!
//! where every loop function is evaluated on the pole's sheet signature.
//! For resonances the `X_i` are complex; diagonal phase transformations of
//! the S matrix rotate `g_i^2 -> g_i^2 e^{2 i phi_i}` and can make each
//! `X_i` real and non-negative, leaving `|X_i|` invariant.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::amplitudes::{CddModel, KernelModel};
use crate::error::{Error, Result};
use crate::kinematics::{phase_space, Channel, Sheet, SheetSignature, SheetedPoint};
use crate::poles::{CouplingSet, PoleCandidate};

/// Full compositeness record for one pole.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoleReport {
    pub pole: SheetedPoint,
    /// Couplings with `g_i g_j` equal to the extracted residue matrix.
    pub couplings: Vec<Complex64>,
    /// Partial compositeness per channel, complex in general.
    pub x_i: Vec<Complex64>,
    /// Total `sum_i X_i`.
    pub x_total: Complex64,
    /// Elementariness from the kernel derivative; `None` when unavailable.
    pub z: Option<Complex64>,
    /// `|X + Z - 1|` when Z is available.
    pub sum_residual: Option<f64>,
    /// `|X_i|` after the phase transformation.
    pub x_abs_i: Vec<f64>,
    /// Phases `phi_i` rotating each `X_i` onto the positive real axis,
    /// in (-pi/2, pi/2].
    pub phases: Vec<f64>,
    /// Whether `Re s_R` lies in the threshold window matching the sheet
    /// signature, so the Laurent-expansion interpretation applies.
    pub laurent_reliable: bool,
    pub notes: Vec<String>,
}

/// `X_i = -g_i^2 dG_i/ds` and `Z = g^T G K' G g` at the pole, everything on
/// the pole's sheet signature. Phases are left un-normalized (see
/// [`phase_normalize`]).
pub fn compositeness_sum_rule(
    model: &KernelModel,
    pole: &PoleCandidate,
    couplings: &CouplingSet,
) -> Result<PoleReport> {
    let n = model.n_channels();
    if couplings.g.len() != n {
        return Err(Error::InvalidConfig(
            "coupling vector length != channel count".into(),
        ));
    }
    let point = &pole.location;
    let dg = model.loop_deriv_diag(point)?;
    let g_loop = model.loop_diag(point)?;
    let dk = model.kernel_deriv(point.value);

    let mut x_i = Vec::with_capacity(n);
    let mut x_total = Complex64::default();
    for i in 0..n {
        let xi = -couplings.g[i] * couplings.g[i] * dg[i];
        x_total += xi;
        x_i.push(xi);
    }
    let mut z = Complex64::default();
    for i in 0..n {
        for j in 0..n {
            z += couplings.g[i] * g_loop[i] * dk[(i, j)] * g_loop[j] * couplings.g[j];
        }
    }
    let sum_residual = (x_total + z - 1.0).norm();

    let thresholds: Vec<f64> = model.channels().iter().map(|c| c.threshold_s()).collect();
    let (laurent_reliable, mut notes) = laurent_window(&thresholds, &point.sheet, point.value.re);
    if sum_residual > 1e-6 {
        notes.push(format!(
            "sum rule residual {sum_residual:.3e} above 1e-6; couplings or pole may be inaccurate"
        ));
    }
    Ok(PoleReport {
        pole: point.clone(),
        couplings: couplings.g.clone(),
        x_i: x_i.clone(),
        x_total,
        z: Some(z),
        sum_residual: Some(sum_residual),
        x_abs_i: x_i.iter().map(|x| x.norm()).collect(),
        phases: vec![0.0; n],
        laurent_reliable,
        notes,
    })
}

/// Checks `s_th;n < Re s_R < s_th;n+1` for a sheet signature with its first
/// n channels on the second sheet.
fn laurent_window(
    thresholds: &[f64],
    sheet: &SheetSignature,
    re_pole: f64,
) -> (bool, Vec<String>) {
    let mut notes = Vec::new();
    let mut n_second = 0usize;
    let mut contiguous = true;
    let mut seen_first = false;
    for flag in &sheet.0 {
        match flag {
            Sheet::Second => {
                if seen_first {
                    contiguous = false;
                }
                n_second += 1;
            }
            Sheet::First => seen_first = true,
        }
    }
    if !contiguous {
        notes.push(
            "sheet signature is not a contiguous second-sheet prefix; Laurent window check not applicable"
                .into(),
        );
        return (false, notes);
    }
    let lower = if n_second == 0 {
        f64::NEG_INFINITY
    } else {
        thresholds[n_second - 1]
    };
    let upper = if n_second < thresholds.len() {
        thresholds[n_second]
    } else {
        f64::INFINITY
    };
    let ok = re_pole > lower && re_pole < upper;
    if !ok {
        notes.push(format!(
            "Re s_R = {re_pole:.6e} outside the threshold window ({lower:.6e}, {upper:.6e}); Laurent-based X is unreliable"
        ));
    }
    (ok, notes)
}

/// Rotate each `X_i` onto the non-negative real axis, recording the phases.
/// The complex values are preserved; only `phases` and `x_abs_i` change.
pub fn phase_normalize(mut report: PoleReport) -> PoleReport {
    report.phases = report
        .x_i
        .iter()
        .map(|x| {
            if x.norm() == 0.0 {
                0.0
            } else {
                let mut phi = -0.5 * x.arg();
                if phi <= -0.5 * PI {
                    phi += PI;
                } else if phi > 0.5 * PI {
                    phi -= PI;
                }
                phi
            }
        })
        .collect();
    report.x_abs_i = report.x_i.iter().map(|x| x.norm()).collect();
    report
}

/// ERE parameters reconstructed from a resonance pole momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EreFromPole {
    pub a: f64,
    pub r: f64,
    pub r_over_a: f64,
}

fn split_resonance_momentum(k_pole: Complex64) -> Result<(f64, f64)> {
    let k_r = k_pole.re;
    let k_i = -k_pole.im;
    if k_i <= 0.0 {
        return Err(Error::Domain(format!(
            "expected a lower-half-plane resonance momentum k_r - i k_i with k_i > 0, got {k_pole}"
        )));
    }
    Ok((k_r, k_i))
}

/// `a = -2 k_i/|k_R|^2`, `r = -1/k_i` from the sheet-II pole momentum
/// `k_R = k_r - i k_i`. Requires `k_r != 0` (the bound/virtual limit has its
/// own dictionary and is rejected here).
pub fn ere_from_pole(k_pole: Complex64) -> Result<EreFromPole> {
    let (k_r, k_i) = split_resonance_momentum(k_pole)?;
    if k_r == 0.0 {
        return Err(Error::Domain(
            "k_r = 0 is a real-axis (virtual/bound) pole; the resonance dictionary a = -2 k_i/|k_R|^2 does not apply"
                .into(),
        ));
    }
    let norm_sq = k_r * k_r + k_i * k_i;
    let a = -2.0 * k_i / norm_sq;
    let r = -1.0 / k_i;
    Ok(EreFromPole {
        a,
        r,
        r_over_a: r / a,
    })
}

/// Both ERE compositeness evaluations, reported side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EreCompositeness {
    /// `X = i k_i/k_r`, purely imaginary for any resonance pole.
    pub x: Complex64,
    /// `|X| = k_i/k_r`.
    pub x_abs: f64,
    /// The alternative `(2 r/a - 1)^{-1}`, which equals `(k_i/k_r)^2`; the
    /// two candidates disagree and both are reported.
    pub x_abs_alt: f64,
}

/// Compositeness of an ERE resonance pole at `k_R = k_r - i k_i`,
/// `k_r, k_i > 0`.
pub fn ere_compositeness(k_pole: Complex64) -> Result<EreCompositeness> {
    let (k_r, k_i) = split_resonance_momentum(k_pole)?;
    if k_r <= 0.0 {
        return Err(Error::Domain(format!(
            "ERE resonance compositeness needs k_r > 0, got k_r = {k_r}"
        )));
    }
    let params = ere_from_pole(k_pole)?;
    let x_abs_alt = 1.0 / (2.0 * params.r_over_a - 1.0);
    Ok(EreCompositeness {
        x: Complex64::new(0.0, k_i / k_r),
        x_abs: k_i / k_r,
        x_abs_alt,
    })
}

/// Contribution of a near-threshold CDD pole to the effective range; the
/// `M_Z -> 0` limit is a typed divergence rather than a crash.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RangeShift {
    Finite(f64),
    NegativeInfinity,
    PositiveInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CddDiagnostics {
    /// `delta a = M_Z / lambda` (MeV^-1); zero when lambda = 0.
    pub delta_a: f64,
    /// `delta r = -lambda / (mu M_Z^2)` (MeV^-1).
    pub delta_r: RangeShift,
    /// Set when `|delta r|` exceeds `threshold_multiple / |k|` at the
    /// analysis momentum: the hallmark of a nearby CDD pole.
    pub cdd_proximity_flag: bool,
}

/// CDD-pole contributions to the scattering length and effective range.
/// `k_analysis` is the momentum scale of the analysis window and
/// `threshold_multiple` the proximity-flag multiplier (10 by default).
pub fn cdd_shifts(model: &CddModel, k_analysis: f64, threshold_multiple: f64) -> CddDiagnostics {
    if model.lambda == 0.0 {
        // No CDD pole at all: both shifts vanish.
        return CddDiagnostics {
            delta_a: 0.0,
            delta_r: RangeShift::Finite(0.0),
            cdd_proximity_flag: false,
        };
    }
    if model.m_z == 0.0 {
        return CddDiagnostics {
            delta_a: 0.0,
            delta_r: if model.lambda > 0.0 {
                RangeShift::NegativeInfinity
            } else {
                RangeShift::PositiveInfinity
            },
            cdd_proximity_flag: true,
        };
    }
    let delta_a = model.m_z / model.lambda;
    let delta_r = -model.lambda / (model.mu * model.m_z * model.m_z);
    let natural = if k_analysis > 0.0 {
        1.0 / k_analysis
    } else {
        f64::INFINITY
    };
    CddDiagnostics {
        delta_a,
        delta_r: RangeShift::Finite(delta_r),
        cdd_proximity_flag: delta_r.abs() > threshold_multiple * natural,
    }
}

/// Weinberg's shallow-bound-state compositeness `X = g^2 mu^2 / (2 pi kappa)`
/// for a bound state at `k_B = i kappa`, `kappa > 0`, with the on-shell
/// coupling `g` normalized as in [`crate::lseq`].
pub fn shallow_bound_x(g: f64, mu: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!(
            "binding momentum must be positive, got {kappa}"
        )));
    }
    Ok(g * g * mu * mu / (2.0 * PI * kappa))
}

/// Narrow-resonance partial widths `Gamma_i = |g_i|^2 p_i(M_R^2) / (8 pi
/// M_R^2)` with `M_R = Re sqrt(s_R)`; `None` for channels closed at the
/// resonance mass. The CM momentum factor `p_i` makes the expression carry
/// the dimension of a width.
pub fn partial_widths(
    channels: &[Channel],
    g: &[Complex64],
    s_pole: Complex64,
) -> Result<Vec<Option<f64>>> {
    let m_r = s_pole.sqrt().re;
    let s_on = Complex64::new(m_r * m_r, 0.0);
    let pt = SheetedPoint::mandelstam(s_on, SheetSignature::all_first(channels.len()));
    channels
        .iter()
        .zip(g)
        .enumerate()
        .map(|(i, (ch, gi))| {
            if m_r * m_r <= ch.threshold_s() {
                return Ok(None);
            }
            let p = (8.0 * PI * s_on.sqrt() * phase_space(ch, &pt, i)?).re;
            Ok(Some(gi.norm_sqr() * p / (8.0 * PI * m_r * m_r)))
        })
        .collect()
}

/// Sum rule plus phase normalization in one step.
pub fn analyze_kernel_pole(
    model: &KernelModel,
    pole: &PoleCandidate,
    couplings: &CouplingSet,
) -> Result<PoleReport> {
    Ok(phase_normalize(compositeness_sum_rule(model, pole, couplings)?))
}
