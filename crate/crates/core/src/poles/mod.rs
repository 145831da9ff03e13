//! Pole location on a chosen sheet and residue/coupling extraction.
//!
//! Couplings follow the `T_ij ~ -g_i g_j / (z - z_R)` orientation, i.e. the
//! residue matrix reported here is `R_ij = -lim (z - z_R) T_ij = g_i g_j`.
//! This is the orientation in which a bound state of an attractive kernel
//! has `g^2 > 0` and the compositeness sum rule comes out as `X + Z = 1`.

mod newton;

pub use newton::{find_root, RootResult, SearchOptions};

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::amplitudes::AmplitudeModel;
use crate::error::{Error, Result};
use crate::kinematics::{SheetSignature, SheetedPoint};

/// A converged pole.
#[derive(Debug, Clone)]
pub struct PoleCandidate {
    pub location: SheetedPoint,
    /// |pole objective| at convergence.
    pub det_residual: f64,
    pub newton_steps: usize,
    pub basin_start: Complex64,
}

impl SearchOptions {
    /// Default search options with the convergence scale taken from the
    /// model's kinematic variable.
    pub fn for_model(model: &AmplitudeModel) -> Self {
        SearchOptions {
            scale: model.variable_scale().abs().max(1e-12),
            ..Default::default()
        }
    }
}

/// Newton search for a zero of the pole objective on the requested sheet,
/// with Muller fallback on stagnation (see [`find_root`]).
pub fn find_pole(
    model: &AmplitudeModel,
    sheet: SheetSignature,
    start: Complex64,
    opts: &SearchOptions,
) -> Result<PoleCandidate> {
    if sheet.len() != model.n_channels() {
        return Err(Error::InvalidConfig(format!(
            "sheet signature length {} != {} channels",
            sheet.len(),
            model.n_channels()
        )));
    }
    let objective = |z: Complex64| model.pole_objective(&model.point(z, sheet.clone()));
    // Analytic derivative with a numerical fallback near kinematic edges.
    let derivative = |z: Complex64| {
        let pt = model.point(z, sheet.clone());
        model.pole_objective_deriv(&pt).or_else(|_| {
            let h = Complex64::new(1e-7 * z.norm().max(opts.scale), 0.0);
            Ok((objective(z + h)? - objective(z - h)?) / (2.0 * h))
        })
    };
    let root = find_root(&objective, Some(&derivative), start, opts)?;

    let scale = root.z.norm().max(opts.scale);
    for bp in model.non_analytic_points() {
        if (root.z - bp).norm() < 1e-6 * scale {
            return Err(Error::SearchFailed {
                reason: format!(
                    "search converged to the non-analytic point {bp} (z = {})",
                    root.z
                ),
                trace: vec![],
            });
        }
    }
    Ok(PoleCandidate {
        location: model.point(root.z, sheet),
        det_residual: root.residual,
        newton_steps: root.iterations,
        basin_start: start,
    })
}

/// How the residue matrix is extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidueMethod {
    /// 1/(2 pi i) contour integral of T on a circle around the pole,
    /// 64-point trapezoid by default.
    Contour,
    /// Richardson extrapolation of (z - z_R) T(z).
    PoleFactor,
    /// Central finite difference of d(1/T_ij)/dz at the pole.
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct CouplingOptions {
    pub contour_points: usize,
    /// Contour radius as a fraction of the distance to the nearest
    /// non-analyticity (conjugate pole included).
    pub radius_factor: f64,
    pub rank1_tol: f64,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions {
            contour_points: 64,
            radius_factor: 0.1,
            rank1_tol: 1e-6,
        }
    }
}

/// Couplings `g_i` with `g_i g_j = R_ij` and the raw residue matrix.
#[derive(Debug, Clone)]
pub struct CouplingSet {
    pub g: Vec<Complex64>,
    /// `R_ij = -lim (z - z_R) T_ij`.
    pub residue: DMatrix<Complex64>,
    pub method: ResidueMethod,
    /// `max_ij |g_i g_j - R_ij| / max_ij |R_ij|`.
    pub rank1_residual: f64,
    /// Set when the rank-1 residual exceeds the configured tolerance,
    /// hinting at contamination from another nearby pole.
    pub multi_pole_warning: bool,
    /// Contour radius (or sampling scale) actually used, in the model's
    /// kinematic variable.
    pub radius: f64,
}

/// Distance from the pole to the nearest non-analyticity of T, including
/// the conjugate pole.
fn safe_distance(model: &AmplitudeModel, z_r: Complex64, scale: f64) -> Result<f64> {
    let mut d = f64::INFINITY;
    for p in model.non_analytic_points() {
        d = d.min((z_r - p).norm());
    }
    if z_r.im.abs() > 1e-12 * scale {
        d = d.min(2.0 * z_r.im.abs());
    }
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::ContourInvalid(format!(
            "pole at {z_r} coincides with a non-analyticity"
        )));
    }
    Ok(d)
}

/// Extract the residue matrix and rank-1 couplings at a converged pole.
pub fn extract_couplings(
    model: &AmplitudeModel,
    pole: &PoleCandidate,
    method: ResidueMethod,
    opts: &CouplingOptions,
) -> Result<CouplingSet> {
    let z_r = pole.location.value;
    let sheet = pole.location.sheet.clone();
    let scale = z_r.norm().max(model.variable_scale());
    let distance = safe_distance(model, z_r, scale)?;
    let t_at = |z: Complex64| model.t_matrix(&model.point(z, sheet.clone()));

    let (limit, radius) = match method {
        ResidueMethod::Contour => {
            let radius = opts.radius_factor * distance;
            (contour_residue(&t_at, z_r, radius, opts.contour_points)?, radius)
        }
        ResidueMethod::PoleFactor => {
            let h0 = 0.05 * distance;
            (pole_factor_residue(&t_at, z_r, h0, model.n_channels())?, h0)
        }
        ResidueMethod::FiniteDifference => {
            let h = 1e-4 * distance;
            (finite_difference_residue(&t_at, z_r, h)?, h)
        }
    };

    let residue = limit.map(|x| -x);
    let (g, rank1_residual) = rank_one_factor(&residue);
    Ok(CouplingSet {
        g,
        multi_pole_warning: rank1_residual > opts.rank1_tol,
        residue,
        method,
        rank1_residual,
        radius,
    })
}

/// `(1/2 pi i) contour integral` of T on a circle, trapezoid rule (which is
/// spectrally accurate for analytic integrands on a periodic domain).
pub(crate) fn contour_residue(
    t_at: &dyn Fn(Complex64) -> Result<DMatrix<Complex64>>,
    z_r: Complex64,
    radius: f64,
    n_points: usize,
) -> Result<DMatrix<Complex64>> {
    let mut acc: Option<DMatrix<Complex64>> = None;
    for k in 0..n_points {
        let theta = 2.0 * PI * k as f64 / n_points as f64;
        let phase = Complex64::new(0.0, theta).exp();
        let t = t_at(z_r + radius * phase)?;
        let term = t.map(|x| x * phase * radius / n_points as f64);
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    Ok(acc.expect("n_points > 0"))
}

/// Richardson-extrapolated `lim (z - z_R) T(z)` along a fixed direction.
fn pole_factor_residue(
    t_at: &dyn Fn(Complex64) -> Result<DMatrix<Complex64>>,
    z_r: Complex64,
    h0: f64,
    n: usize,
) -> Result<DMatrix<Complex64>> {
    let dir = Complex64::new(0.0, PI / 7.0).exp();
    let levels = 5;
    let mut samples: Vec<DMatrix<Complex64>> = Vec::with_capacity(levels);
    for m in 0..levels {
        let h = dir * (h0 / 2f64.powi(m as i32));
        let t = t_at(z_r + h)?;
        samples.push(t.map(|x| x * h));
    }
    // Neville-style elimination of the h, h^2, ... error terms.
    let mut table = samples;
    for level in 1..levels {
        let factor = 2f64.powi(level as i32);
        for i in 0..(levels - level) {
            let hi = table[i + 1].clone();
            let lo = table[i].clone();
            table[i] = (hi.map(|x| x * factor) - lo).map(|x| x / (factor - 1.0));
        }
    }
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    out.copy_from(&table[0]);
    Ok(out)
}

/// `R_ij` entrywise from `d(1/T_ij)/dz` at the pole; entries where T is
/// negligible come out as zero.
fn finite_difference_residue(
    t_at: &dyn Fn(Complex64) -> Result<DMatrix<Complex64>>,
    z_r: Complex64,
    h: f64,
) -> Result<DMatrix<Complex64>> {
    let hp = Complex64::new(h, 0.0);
    let t_plus = t_at(z_r + hp)?;
    let t_minus = t_at(z_r - hp)?;
    let n = t_plus.nrows();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    let t_scale = t_plus.iter().fold(0.0f64, |a, x| a.max(x.norm()));
    for i in 0..n {
        for j in 0..n {
            if t_plus[(i, j)].norm() < 1e-13 * t_scale {
                continue;
            }
            let deriv = (1.0 / t_plus[(i, j)] - 1.0 / t_minus[(i, j)]) / (2.0 * hp);
            out[(i, j)] = 1.0 / deriv;
        }
    }
    Ok(out)
}

/// Factor a (nearly) rank-one symmetric matrix as `g g^T`, pivoting on the
/// largest diagonal entry; the square-root branch puts the pivot coupling's
/// phase in (-pi/2, pi/2].
fn rank_one_factor(r: &DMatrix<Complex64>) -> (Vec<Complex64>, f64) {
    let n = r.nrows();
    let mut pivot = 0;
    for i in 1..n {
        if r[(i, i)].norm() > r[(pivot, pivot)].norm() {
            pivot = i;
        }
    }
    let g_p = r[(pivot, pivot)].sqrt();
    let mut g = vec![Complex64::default(); n];
    if g_p.norm() == 0.0 {
        return (g, 0.0);
    }
    for j in 0..n {
        g[j] = r[(pivot, j)] / g_p;
    }
    let r_scale = r.iter().fold(0.0f64, |a, x| a.max(x.norm())).max(1e-300);
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            residual = residual.max((g[i] * g[j] - r[(i, j)]).norm());
        }
    }
    (g, residual / r_scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::{EreModel, KernelForm, KernelModel};
    use crate::kinematics::{Channel, HBARC_MEV_FM};
    use crate::loopfn::{self, SubtractionScheme};
    use nalgebra::DMatrix;

    /// 1-channel constant kernel tuned so that K^{ -1} = -G(s_B): the
    /// amplitude then has a bound-state pole exactly at s_B.
    fn constructed_bound_state(s_b: f64) -> (AmplitudeModel, f64) {
        let ch = Channel::new(138.0, 138.0, 0, "S").unwrap();
        let scheme = SubtractionScheme::new(-1.0, 1000.0).unwrap();
        let pt = SheetedPoint::mandelstam(Complex64::new(s_b, 0.0), SheetSignature::all_first(1));
        let g_val = loopfn::g(&ch, &scheme, &pt, 0).unwrap().re;
        let k = -1.0 / g_val;
        let model = AmplitudeModel::Kernel(
            KernelModel::new(
                vec![ch],
                vec![scheme],
                KernelForm::Constant(DMatrix::from_element(1, 1, k)),
            )
            .unwrap(),
        );
        (model, k)
    }

    #[test]
    fn constructed_identity_pole_found_exactly() {
        let s_b = 270.0 * 270.0;
        let (model, _) = constructed_bound_state(s_b);
        let opts = SearchOptions::for_model(&model);
        let pole = find_pole(
            &model,
            SheetSignature::all_first(1),
            Complex64::new(0.97 * s_b, 0.0),
            &opts,
        )
        .unwrap();
        assert!(
            (pole.location.value - s_b).norm() <= 1e-10 * 276.0f64.powi(2),
            "pole at {}",
            pole.location.value
        );
    }

    #[test]
    fn ere_resonance_pole_matches_quadratic_oracle() {
        // Oracle: parameters built from (k_r, k_i) = (100, 20); the pole of
        // -1/a + r k^2/2 - i k sits exactly at k = 100 - 20i, i.e. at
        // E = k^2/(2 mu) on sheet II.
        let (kr, ki) = (100.0, 20.0);
        let mu = 469.459;
        let a = -2.0 * ki / (kr * kr + ki * ki);
        let r = -1.0 / ki;
        let model = AmplitudeModel::Ere(EreModel::new(a, r, mu, 1878.0).unwrap());
        let k_pole = Complex64::new(kr, -ki);
        let e_pole = k_pole * k_pole / (2.0 * mu);
        let opts = SearchOptions::for_model(&model);
        let found = find_pole(
            &model,
            SheetSignature::all_second(1),
            e_pole * Complex64::new(1.15, 0.1),
            &opts,
        )
        .unwrap();
        assert!(
            (found.location.value - e_pole).norm() <= 1e-8 * e_pole.norm(),
            "found {} expected {e_pole}",
            found.location.value
        );
    }

    #[test]
    fn singlet_s0_virtual_state_is_order_ten_mev() {
        // 1S0-like nucleon-nucleon ERE: a = -23.7 fm, r = 2.7 fm.
        let a = -23.7 / HBARC_MEV_FM;
        let r = 2.7 / HBARC_MEV_FM;
        let mu = 469.459;
        let model = AmplitudeModel::Ere(EreModel::new(a, r, mu, 1878.0).unwrap());
        let opts = SearchOptions::for_model(&model);
        let start = Complex64::new(-0.05, 0.0);
        let pole = find_pole(&model, SheetSignature::all_second(1), start, &opts).unwrap();
        let e = pole.location.value;
        assert!(e.re < 0.0 && e.im.abs() < 1e-10 * e.norm());
        let k = crate::kinematics::nonrel_momentum(mu, e, crate::kinematics::Sheet::Second);
        // Purely imaginary momentum on the negative imaginary axis.
        assert!(k.re.abs() < 1e-8 * k.norm());
        assert!(k.im < 0.0);
        let k_mag = k.norm();
        assert!((3.0..30.0).contains(&k_mag), "|k_R| = {k_mag} MeV");
    }

    #[test]
    fn residue_methods_agree_on_the_constant_kernel_bound_state() {
        let s_b = 270.0 * 270.0;
        let (model, _) = constructed_bound_state(s_b);
        let opts = SearchOptions::for_model(&model);
        let pole = find_pole(
            &model,
            SheetSignature::all_first(1),
            Complex64::new(0.97 * s_b, 0.0),
            &opts,
        )
        .unwrap();
        let copts = CouplingOptions::default();
        let contour =
            extract_couplings(&model, &pole, ResidueMethod::Contour, &copts).unwrap();
        let factor =
            extract_couplings(&model, &pole, ResidueMethod::PoleFactor, &copts).unwrap();
        let fd =
            extract_couplings(&model, &pole, ResidueMethod::FiniteDifference, &copts).unwrap();
        let g2_contour = contour.residue[(0, 0)];
        for other in [&factor, &fd] {
            let rel = (other.residue[(0, 0)] - g2_contour).norm() / g2_contour.norm();
            assert!(rel <= 1e-6, "method {:?}: rel = {rel:e}", other.method);
        }
        // Analytic oracle: residue of T = 1/(1/K + G) is 1/G'(s_B), so
        // g^2 = -1/G'(s_B) > 0.
        let ch = Channel::new(138.0, 138.0, 0, "S").unwrap();
        let scheme = SubtractionScheme::new(-1.0, 1000.0).unwrap();
        let dg = loopfn::dg_ds(
            &ch,
            &scheme,
            &SheetedPoint::mandelstam(pole.location.value, SheetSignature::all_first(1)),
            0,
        )
        .unwrap();
        let g2_analytic = -1.0 / dg;
        let rel = (g2_contour - g2_analytic).norm() / g2_analytic.norm();
        assert!(rel <= 1e-8, "contour vs analytic: {rel:e}");
        assert!(g2_contour.re > 0.0);
        assert!(!contour.multi_pole_warning);
    }

    #[test]
    fn contour_radius_independence() {
        let s_b = 270.0 * 270.0;
        let (model, _) = constructed_bound_state(s_b);
        let opts = SearchOptions::for_model(&model);
        let pole = find_pole(
            &model,
            SheetSignature::all_first(1),
            Complex64::new(0.97 * s_b, 0.0),
            &opts,
        )
        .unwrap();
        let base = CouplingOptions::default();
        let halved = CouplingOptions {
            radius_factor: 0.05,
            ..base.clone()
        };
        let r1 = extract_couplings(&model, &pole, ResidueMethod::Contour, &base).unwrap();
        let r2 = extract_couplings(&model, &pole, ResidueMethod::Contour, &halved).unwrap();
        let rel = (r1.residue[(0, 0)] - r2.residue[(0, 0)]).norm() / r1.residue[(0, 0)].norm();
        assert!(rel <= 1e-8, "radius dependence {rel:e}");
    }

    #[test]
    fn ere_bound_state_residue_matches_denominator_derivative() {
        // Deuteron-like ERE bound state at kappa = 45.7 MeV with r = 2.7 fm.
        let kappa = 45.7;
        let mu = 469.459;
        let r = 2.7 / HBARC_MEV_FM;
        let a = 1.0 / (kappa - 0.5 * r * kappa * kappa);
        let model = AmplitudeModel::Ere(EreModel::new(a, r, mu, 1878.0).unwrap());
        let e_b = -kappa * kappa / (2.0 * mu);
        let opts = SearchOptions::for_model(&model);
        let pole = find_pole(
            &model,
            SheetSignature::all_first(1),
            Complex64::new(1.3 * e_b, 0.0),
            &opts,
        )
        .unwrap();
        assert!((pole.location.value.re - e_b).abs() < 1e-9 * e_b.abs());
        let couplings = extract_couplings(
            &model,
            &pole,
            ResidueMethod::Contour,
            &CouplingOptions::default(),
        )
        .unwrap();
        // g^2 = -1/(dT^{-1}/dE) = 1/(mu (1/kappa - r)).
        let g2_expect = 1.0 / (mu * (1.0 / kappa - r));
        let g2 = couplings.residue[(0, 0)];
        assert!(
            (g2 - g2_expect).norm() <= 1e-7 * g2_expect.abs(),
            "g^2 = {g2}, expected {g2_expect}"
        );
    }

    #[test]
    fn conjugate_pole_carries_conjugate_couplings() {
        let (kr, ki) = (100.0, 20.0);
        let mu = 469.459;
        let a = -2.0 * ki / (kr * kr + ki * ki);
        let r = -1.0 / ki;
        let model = AmplitudeModel::Ere(EreModel::new(a, r, mu, 1878.0).unwrap());
        let k_pole = Complex64::new(kr, -ki);
        let e_pole = k_pole * k_pole / (2.0 * mu);
        let opts = SearchOptions::for_model(&model);
        let lower = find_pole(
            &model,
            SheetSignature::all_second(1),
            e_pole * Complex64::new(1.1, 0.05),
            &opts,
        )
        .unwrap();
        let upper = find_pole(
            &model,
            SheetSignature::all_second(1),
            e_pole.conj() * Complex64::new(1.1, 0.05),
            &opts,
        )
        .unwrap();
        assert!((upper.location.value - lower.location.value.conj()).norm() <= 1e-8 * e_pole.norm());
        let copts = CouplingOptions::default();
        let g_lo = extract_couplings(&model, &lower, ResidueMethod::Contour, &copts).unwrap();
        let g_up = extract_couplings(&model, &upper, ResidueMethod::Contour, &copts).unwrap();
        let rel = (g_up.residue[(0, 0)] - g_lo.residue[(0, 0)].conj()).norm()
            / g_lo.residue[(0, 0)].norm();
        assert!(rel <= 1e-7, "conjugate residue mismatch {rel:e}");
    }

    #[test]
    fn pole_location_is_start_independent_within_the_basin() {
        let (kr, ki) = (100.0, 20.0);
        let mu = 469.459;
        let a = -2.0 * ki / (kr * kr + ki * ki);
        let r = -1.0 / ki;
        let model = AmplitudeModel::Ere(EreModel::new(a, r, mu, 1878.0).unwrap());
        let k_pole = Complex64::new(kr, -ki);
        let e_pole = k_pole * k_pole / (2.0 * mu);
        let opts = SearchOptions::for_model(&model);
        let mut found = Vec::new();
        for di in -1..=1 {
            for dj in -1..=1 {
                let start =
                    e_pole + Complex64::new(1.5 * di as f64, 1.5 * dj as f64);
                let pole = find_pole(&model, SheetSignature::all_second(1), start, &opts).unwrap();
                found.push(pole.location.value);
            }
        }
        for w in found.windows(2) {
            assert!((w[0] - w[1]).norm() <= 1e-9 * e_pole.norm());
        }
    }
}
