//! Nystrom solution of `T = V + V K_E T` with the kernel
//! `(K_E f)(k) = (1/2 pi^2) Int q^2 f(q) / (q^2/2mu - E) dq`,
//! bound/virtual/resonance pole location, residue-normalized coupling
//! functions and the compositeness integrals.
//!
//! Separable potentials additionally carry the closed-form moment algebra
//! `t(E) = [I - C D(E)]^{-1} C` over their terms, which is what the pole
//! searches and the second-sheet continuation use. The second sheet is
//! reached by `D_II(E) = D(E) - (i/pi) mu k_I f_a(k_I) f_b(k_I)` with the
//! first-sheet momentum `k_I`, and the compositeness integral for a
//! sheet-II pole picks up the boundary term
//! `(i mu^2 / pi k_n) d/dk [k g^2]` at the pole momentum `k_n = -k_I` on
//! top of a contour rotated by half the pole's momentum phase.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::potential::{Potential, SeparablePotential};
use super::quadrature::MomentumGrid;
use crate::error::{Error, Result};
use crate::kinematics::{nonrel_momentum, Sheet};
use crate::poles::{find_root, SearchOptions};

/// Default number of Gauss-Legendre nodes on the mapped momentum grid.
pub const DEFAULT_QUADRATURE_POINTS: usize = 200;

#[derive(Debug, Clone)]
pub struct LsSolver {
    potential: Potential,
    grid: MomentumGrid,
}

/// Coupling function `g(k)` per partial wave, residue-normalized:
/// `T(k, k'; E) -> -g(k) g(k') / (E - E_pole)` near the pole.
#[derive(Debug, Clone)]
pub struct CouplingFunction {
    pub nodes: Vec<f64>,
    pub waves: Vec<WaveCoupling>,
}

#[derive(Debug, Clone)]
pub struct WaveCoupling {
    pub label: String,
    /// g at the grid nodes.
    pub values: Vec<Complex64>,
    /// g at the pole momentum.
    pub on_shell: Complex64,
    /// Separable-term coefficients `g_w(k) = sum_t c_t f_t(k)`, when the
    /// potential is separable.
    pub coeffs: Option<Vec<Complex64>>,
}

#[derive(Debug, Clone)]
pub struct BoundState {
    /// Binding energy (negative, MeV).
    pub e_b: f64,
    pub coupling: CouplingFunction,
}

/// Per-wave compositeness with the continuation boundary term split out.
#[derive(Debug, Clone)]
pub struct WaveX {
    pub label: String,
    pub integral: Complex64,
    pub boundary: Complex64,
    pub total: Complex64,
}

#[derive(Debug, Clone)]
pub struct XBreakdown {
    pub per_wave: Vec<WaveX>,
    pub total: Complex64,
    /// Set when the integrand has not decayed at the grid edge.
    pub tail_warning: bool,
}

impl LsSolver {
    pub fn new(potential: Potential) -> Self {
        Self::with_points(potential, DEFAULT_QUADRATURE_POINTS)
    }

    pub fn with_points(potential: Potential, n: usize) -> Self {
        let scale = match &potential {
            Potential::Separable(p) => {
                2.0 * p
                    .terms
                    .iter()
                    .map(|t| t.form.beta())
                    .fold(0.0f64, f64::max)
            }
            Potential::Grid(_) => 600.0,
        };
        LsSolver {
            potential,
            grid: MomentumGrid::rational(n, scale),
        }
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn mu(&self) -> f64 {
        self.potential.mu()
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    /// Same solver with a rebuilt grid (convergence studies).
    pub fn refined(&self, n: usize) -> Self {
        Self::with_points(self.potential.clone(), n)
    }

    fn v_real(&self, k: f64, kp: f64) -> f64 {
        match &self.potential {
            Potential::Separable(p) => p
                .value(Complex64::new(k, 0.0), Complex64::new(kp, 0.0))
                .re,
            Potential::Grid(p) => p.value(k, kp),
        }
    }

    // ----- Nystrom T-matrix -------------------------------------------------

    /// On-grid half-off-shell T at complex energy off the positive real
    /// axis (or real negative). Entry (j, l) is `T(k_j, k_l; E)`.
    pub fn solve_t(&self, e: Complex64) -> Result<DMatrix<Complex64>> {
        if e.im == 0.0 && e.re > 0.0 {
            return Err(Error::InvalidConfig(
                "real positive E needs solve_t_onshell (principal-value path)".into(),
            ));
        }
        let n = self.grid.len();
        let mu = self.mu();
        let mut m = DMatrix::<Complex64>::identity(n, n);
        let mut v = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            for l in 0..n {
                let vjl = Complex64::new(self.v_real(self.grid.k[j], self.grid.k[l]), 0.0);
                v[(j, l)] = vjl;
                let prop = self.grid.k[l] * self.grid.k[l]
                    / (Complex64::new(self.grid.k[l] * self.grid.k[l] / (2.0 * mu), 0.0) - e);
                m[(j, l)] -= vjl * (self.grid.w[l] / (2.0 * PI * PI)) * prop;
            }
        }
        let lu = m.lu();
        lu.solve(&v).ok_or(Error::PoleProximity {
            condition: f64::INFINITY,
        })
    }

    /// Scattering solution at real `E > 0` with the principal-value
    /// subtraction; returns the half-off-shell column `T(., k0; E)` with the
    /// on-shell element last, plus the on-shell momentum.
    pub fn solve_t_onshell(&self, e: f64) -> Result<(Vec<Complex64>, f64)> {
        if !(e > 0.0) {
            return Err(Error::InvalidConfig("on-shell solve needs E > 0".into()));
        }
        let mu = self.mu();
        let k0 = (2.0 * mu * e).sqrt();
        let n = self.grid.len();
        let dim = n + 1;
        let mut points: Vec<f64> = self.grid.k.clone();
        points.push(k0);

        // Discrete principal-value weight that multiplies the on-shell
        // column: i pi mu / k0 minus the quadrature image of the subtracted
        // singular integral.
        let mut pv_sum = 0.0;
        for l in 0..n {
            pv_sum += self.grid.w[l] / (self.grid.k[l] * self.grid.k[l] / (2.0 * mu) - e);
        }
        let onshell_weight = Complex64::new(-pv_sum, PI * mu / k0);

        let mut m = DMatrix::<Complex64>::identity(dim, dim);
        let mut rhs = DMatrix::<Complex64>::zeros(dim, 1);
        for (row, &p) in points.iter().enumerate() {
            for l in 0..n {
                let prop = self.grid.k[l] * self.grid.k[l]
                    / (self.grid.k[l] * self.grid.k[l] / (2.0 * mu) - e);
                m[(row, l)] -=
                    Complex64::new(self.v_real(p, self.grid.k[l]) * self.grid.w[l] * prop, 0.0)
                        / (2.0 * PI * PI);
            }
            m[(row, n)] -= Complex64::new(self.v_real(p, k0) * k0 * k0, 0.0) * onshell_weight
                / (2.0 * PI * PI);
            rhs[(row, 0)] = Complex64::new(self.v_real(p, k0), 0.0);
        }
        let sol = m.lu().solve(&rhs).ok_or(Error::PoleProximity {
            condition: f64::INFINITY,
        })?;
        Ok((sol.column(0).iter().copied().collect(), k0))
    }

    /// Elastic phase shift (radians) at `E > 0` from the on-shell T:
    /// `S = 1 + i (mu k / pi) T_on`.
    pub fn phase_shift(&self, e: f64) -> Result<f64> {
        let (column, k0) = self.solve_t_onshell(e)?;
        let t_on = *column.last().unwrap();
        let s = 1.0 + Complex64::i() * (self.mu() * k0 / PI) * t_on;
        Ok(0.5 * s.arg())
    }

    // ----- Separable moment algebra ----------------------------------------

    fn separable(&self) -> Result<&SeparablePotential> {
        match &self.potential {
            Potential::Separable(p) => Ok(p),
            Potential::Grid(_) => Err(Error::ContinuationBlocked(
                "analytic continuation of a sampled kernel is ill-posed; separable potentials only"
                    .into(),
            )),
        }
    }

    /// Check that a contour rotated to `angle` (in (-pi/2, 0]) does not
    /// sweep over a form-factor pole.
    fn check_rotation(&self, angle: f64) -> Result<()> {
        let p = self.separable()?;
        for term in &p.terms {
            for pole in term.form.pole_positions() {
                let arg = pole.arg();
                if arg < 0.0 && arg > angle {
                    return Err(Error::ContinuationBlocked(format!(
                        "form factor pole at {pole} obstructs a contour rotation to {angle} rad"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Loop moments `D_ab(E)` over separable terms along a ray rotated by
    /// `angle` (0 for the real axis). Cross-wave entries vanish by partial
    /// wave orthogonality.
    fn moments(&self, e: Complex64, angle: f64) -> Result<DMatrix<Complex64>> {
        let p = self.separable()?;
        if angle != 0.0 {
            self.check_rotation(angle)?;
        }
        let nt = p.terms.len();
        let mu = p.mu;
        let phase = Complex64::new(0.0, angle).exp();
        let mut d = DMatrix::<Complex64>::zeros(nt, nt);
        for a in 0..nt {
            for b in a..nt {
                if p.terms[a].wave != p.terms[b].wave {
                    continue;
                }
                let mut acc = Complex64::default();
                for (t, w) in self.grid.k.iter().zip(&self.grid.w) {
                    let z = phase * *t;
                    let fa = p.terms[a].form.eval(z);
                    let fb = p.terms[b].form.eval(z);
                    acc += *w * z * z * fa * fb / (z * z / (2.0 * mu) - e) * phase;
                }
                let val = acc / (2.0 * PI * PI);
                d[(a, b)] = val;
                d[(b, a)] = val;
            }
        }
        Ok(d)
    }

    /// `dD_ab/dE` along the same ray.
    fn moments_deriv(&self, e: Complex64, angle: f64) -> Result<DMatrix<Complex64>> {
        let p = self.separable()?;
        if angle != 0.0 {
            self.check_rotation(angle)?;
        }
        let nt = p.terms.len();
        let mu = p.mu;
        let phase = Complex64::new(0.0, angle).exp();
        let mut d = DMatrix::<Complex64>::zeros(nt, nt);
        for a in 0..nt {
            for b in a..nt {
                if p.terms[a].wave != p.terms[b].wave {
                    continue;
                }
                let mut acc = Complex64::default();
                for (t, w) in self.grid.k.iter().zip(&self.grid.w) {
                    let z = phase * *t;
                    let fa = p.terms[a].form.eval(z);
                    let fb = p.terms[b].form.eval(z);
                    let den = z * z / (2.0 * mu) - e;
                    acc += *w * z * z * fa * fb / (den * den) * phase;
                }
                let val = acc / (2.0 * PI * PI);
                d[(a, b)] = val;
                d[(b, a)] = val;
            }
        }
        Ok(d)
    }

    /// Second-sheet correction `-(i/pi) mu k_I f_a(k_I) f_b(k_I)`.
    fn sheet2_correction(&self, e: Complex64) -> Result<DMatrix<Complex64>> {
        let p = self.separable()?;
        let nt = p.terms.len();
        let k_first = nonrel_momentum(p.mu, e, Sheet::First);
        let mut c = DMatrix::<Complex64>::zeros(nt, nt);
        for a in 0..nt {
            for b in a..nt {
                if p.terms[a].wave != p.terms[b].wave {
                    continue;
                }
                let val = -(Complex64::i() / PI)
                    * p.mu
                    * k_first
                    * p.terms[a].form.eval(k_first)
                    * p.terms[b].form.eval(k_first);
                c[(a, b)] = val;
                c[(b, a)] = val;
            }
        }
        Ok(c)
    }

    fn sheet2_correction_deriv(&self, e: Complex64) -> Result<DMatrix<Complex64>> {
        let p = self.separable()?;
        let nt = p.terms.len();
        let k = nonrel_momentum(p.mu, e, Sheet::First);
        if k.norm() == 0.0 {
            return Err(Error::SingularKinematics(
                "sheet-II correction derivative at threshold".into(),
            ));
        }
        // d/dE = (mu/k) d/dk of -(i/pi) mu k f_a f_b.
        let mut c = DMatrix::<Complex64>::zeros(nt, nt);
        for a in 0..nt {
            for b in a..nt {
                if p.terms[a].wave != p.terms[b].wave {
                    continue;
                }
                let fa = p.terms[a].form.eval(k);
                let fb = p.terms[b].form.eval(k);
                let dfa = p.terms[a].form.deriv(k);
                let dfb = p.terms[b].form.deriv(k);
                let dk_prod = fa * fb + k * (dfa * fb + fa * dfb);
                let val = -(Complex64::i() / PI) * p.mu * (p.mu / k) * dk_prod;
                c[(a, b)] = val;
                c[(b, a)] = val;
            }
        }
        Ok(c)
    }

    /// Moments on the requested sheet; `angle` rotates the quadrature ray.
    fn moments_on_sheet(
        &self,
        e: Complex64,
        sheet: Sheet,
        angle: f64,
    ) -> Result<DMatrix<Complex64>> {
        let d = self.moments(e, angle)?;
        match sheet {
            Sheet::First => Ok(d),
            Sheet::Second => Ok(d + self.sheet2_correction(e)?),
        }
    }

    /// `det(I - C D(E))` on the requested sheet (separable potentials).
    pub fn fredholm_det(&self, e: Complex64, sheet: Sheet, angle: f64) -> Result<Complex64> {
        let p = self.separable()?;
        let d = self.moments_on_sheet(e, sheet, angle)?;
        let c = p.strength.map(|x| Complex64::new(x, 0.0));
        let m = DMatrix::<Complex64>::identity(p.terms.len(), p.terms.len()) - &c * d;
        Ok(m.determinant())
    }

    fn fredholm_det_deriv(
        &self,
        e: Complex64,
        sheet: Sheet,
        angle: f64,
    ) -> Result<Complex64> {
        let p = self.separable()?;
        let nt = p.terms.len();
        let d = self.moments_on_sheet(e, sheet, angle)?;
        let mut dd = self.moments_deriv(e, angle)?;
        if sheet == Sheet::Second {
            dd += self.sheet2_correction_deriv(e)?;
        }
        let c = p.strength.map(|x| Complex64::new(x, 0.0));
        let m = DMatrix::<Complex64>::identity(nt, nt) - &c * d;
        let det = m.determinant();
        let inv = m.try_inverse().ok_or(Error::PoleProximity {
            condition: f64::INFINITY,
        })?;
        let mprime = -(&c * dd);
        let prod = inv * mprime;
        let mut tr = Complex64::default();
        for i in 0..nt {
            tr += prod[(i, i)];
        }
        Ok(det * tr)
    }

    /// Term-space amplitude `t(E) = [I - C D]^{-1} C` (separable).
    fn term_amplitude(
        &self,
        e: Complex64,
        sheet: Sheet,
        angle: f64,
    ) -> Result<DMatrix<Complex64>> {
        let p = self.separable()?;
        let nt = p.terms.len();
        let d = self.moments_on_sheet(e, sheet, angle)?;
        let c = p.strength.map(|x| Complex64::new(x, 0.0));
        let m = DMatrix::<Complex64>::identity(nt, nt) - &c * d;
        let inv = m.try_inverse().ok_or(Error::PoleProximity {
            condition: f64::INFINITY,
        })?;
        Ok(inv * c)
    }

    // ----- Pole searches -----------------------------------------------------

    /// Grid-potential Fredholm determinant (sheet I, or sheet II on the real
    /// axis below threshold via small-kappa extrapolation of V).
    fn grid_det(&self, e: f64, sheet: Sheet) -> Result<f64> {
        let Potential::Grid(p) = &self.potential else {
            return Err(Error::InvalidConfig("grid determinant on a separable potential".into()));
        };
        if e >= 0.0 {
            return Err(Error::InvalidConfig(
                "grid determinant expects E < 0 (bound/virtual region)".into(),
            ));
        }
        let mu = p.mu;
        let n = self.grid.len();
        let second = sheet == Sheet::Second;
        let dim = if second { n + 1 } else { n };
        let kappa = (-2.0 * mu * e).sqrt();
        let mut m = DMatrix::<f64>::identity(dim, dim);
        for row in 0..dim {
            let v_row = |kp: f64| -> Result<f64> {
                if row < n {
                    if kp < 0.0 {
                        p.value_imag(self.grid.k[row], kappa)
                    } else {
                        Ok(p.value(self.grid.k[row], kp))
                    }
                } else if kp < 0.0 {
                    // V(i kappa, i kappa): extrapolate twice.
                    p.value_imag_imag(kappa)
                } else {
                    p.value_imag(kp, kappa)
                }
            };
            for l in 0..n {
                let prop = self.grid.k[l] * self.grid.k[l]
                    / (self.grid.k[l] * self.grid.k[l] / (2.0 * mu) - e);
                m[(row, l)] -= v_row(self.grid.k[l])? * self.grid.w[l] * prop / (2.0 * PI * PI);
            }
            if second {
                // Sheet-II insertion at k = i kappa carries weight mu kappa / pi.
                m[(row, n)] -= v_row(-1.0)? * mu * kappa / PI;
            }
        }
        Ok(m.determinant())
    }

    fn det_real(&self, e: f64, sheet: Sheet) -> Result<f64> {
        match &self.potential {
            Potential::Separable(_) => {
                let angle = if sheet == Sheet::Second { -PI / 4.0 } else { 0.0 };
                // Real E < 0: the rotation is legal and the determinant real.
                let d = self.fredholm_det(Complex64::new(e, 0.0), sheet, angle)?;
                Ok(d.re)
            }
            Potential::Grid(_) => self.grid_det(e, sheet),
        }
    }

    /// Bound state from the vanishing of the Fredholm determinant in a real
    /// window `(e_lo, e_hi)` below threshold, plus the residue-normalized
    /// coupling function.
    pub fn bound_state(&self, window: (f64, f64)) -> Result<BoundState> {
        let e_b = self.real_axis_zero(window, Sheet::First)?;
        let coupling = self.coupling_at_pole(Complex64::new(e_b, 0.0), Sheet::First)?;
        Ok(BoundState { e_b, coupling })
    }

    /// Virtual state: real below-threshold zero of the second-sheet
    /// determinant.
    pub fn virtual_state(&self, window: (f64, f64)) -> Result<(f64, CouplingFunction)> {
        let e_v = self.real_axis_zero(window, Sheet::Second)?;
        let coupling = self.coupling_at_pole(Complex64::new(e_v, 0.0), Sheet::Second)?;
        Ok((e_v, coupling))
    }

    fn real_axis_zero(&self, window: (f64, f64), sheet: Sheet) -> Result<f64> {
        let (lo, hi) = window;
        if !(lo < hi) || hi > 0.0 {
            return Err(Error::InvalidConfig(format!(
                "search window must satisfy lo < hi <= 0, got ({lo}, {hi})"
            )));
        }
        let n_scan = 120;
        let mut prev_e = lo;
        let mut prev_d = self.det_real(prev_e, sheet)?;
        let mut bracket = None;
        for i in 1..=n_scan {
            let e = lo + (hi - lo) * i as f64 / n_scan as f64;
            let d = self.det_real(e, sheet)?;
            if prev_d == 0.0 {
                bracket = Some((prev_e, prev_e));
                break;
            }
            if d == 0.0 || d.signum() != prev_d.signum() {
                bracket = Some((prev_e, e));
                break;
            }
            prev_e = e;
            prev_d = d;
        }
        let (mut a, mut b) = bracket.ok_or_else(|| Error::SearchFailed {
            reason: format!("no determinant zero in ({lo}, {hi}) on sheet {sheet:?}"),
            trace: vec![],
        })?;
        if a == b {
            return Ok(a);
        }
        let mut fa = self.det_real(a, sheet)?;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let fm = self.det_real(mid, sheet)?;
            if fm == 0.0 || (b - a).abs() <= 1e-14 * mid.abs().max(1e-6) {
                return Ok(mid);
            }
            if fa.signum() == fm.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Sheet-II pole search in the complex E plane (separable potentials).
    /// The quadrature ray is rotated by half the momentum phase of the
    /// running iterate, recomputed once from the start point.
    pub fn resonance_pole(&self, start: Complex64) -> Result<Complex64> {
        let p = self.separable()?;
        let k_start = -nonrel_momentum(p.mu, start, Sheet::First);
        let angle = 0.5 * k_start.arg().clamp(-0.5 * PI, 0.0);
        self.check_rotation(angle)?;
        let f = |e: Complex64| self.fredholm_det(e, Sheet::Second, angle);
        let d = |e: Complex64| self.fredholm_det_deriv(e, Sheet::Second, angle);
        let opts = SearchOptions {
            scale: start.norm().max(1e-6),
            ..Default::default()
        };
        let root = find_root(&f, Some(&d), start, &opts)?;
        Ok(root.z)
    }

    // ----- Coupling functions -------------------------------------------------

    /// Residue-normalized coupling function at a pole on either sheet.
    pub fn coupling_at_pole(&self, e_pole: Complex64, sheet: Sheet) -> Result<CouplingFunction> {
        match &self.potential {
            Potential::Separable(p) => {
                let angle = match sheet {
                    Sheet::First => 0.0,
                    Sheet::Second => {
                        0.5 * (-nonrel_momentum(p.mu, e_pole, Sheet::First))
                            .arg()
                            .clamp(-0.5 * PI, 0.0)
                    }
                };
                // Residue of the term-space amplitude by Richardson
                // extrapolation of (E - E_p) t(E).
                let dist = e_pole.norm().min(if e_pole.im.abs() > 0.0 {
                    2.0 * e_pole.im.abs()
                } else {
                    f64::INFINITY
                });
                let h0 = 0.02 * dist;
                let dir = Complex64::new(0.0, PI / 7.0).exp();
                let nt = p.terms.len();
                let mut samples: Vec<DMatrix<Complex64>> = Vec::new();
                for m in 0..5 {
                    let h = dir * (h0 / 2f64.powi(m));
                    let t = self.term_amplitude(e_pole + h, sheet, angle)?;
                    samples.push(t.map(|x| x * h));
                }
                let mut table = samples;
                for level in 1..5 {
                    let factor = 2f64.powi(level as i32);
                    for i in 0..(5 - level) {
                        let hi = table[i + 1].clone();
                        let lo = table[i].clone();
                        table[i] = (hi.map(|x| x * factor) - lo).map(|x| x / (factor - 1.0));
                    }
                }
                let residue = table[0].map(|x| -x);
                let coeffs = rank_one_coefficients(&residue);

                let k_pole = nonrel_momentum(p.mu, e_pole, sheet);
                let waves = p
                    .waves()
                    .into_iter()
                    .map(|label| {
                        let term_idx: Vec<usize> = (0..nt)
                            .filter(|&t| p.terms[t].wave == label)
                            .collect();
                        let g_at = |k: Complex64| {
                            term_idx
                                .iter()
                                .map(|&t| coeffs[t] * p.terms[t].form.eval(k))
                                .sum::<Complex64>()
                        };
                        WaveCoupling {
                            label,
                            values: self
                                .grid
                                .k
                                .iter()
                                .map(|&k| g_at(Complex64::new(k, 0.0)))
                                .collect(),
                            on_shell: g_at(k_pole),
                            coeffs: Some(coeffs.clone()),
                        }
                    })
                    .collect();
                Ok(CouplingFunction {
                    nodes: self.grid.k.clone(),
                    waves,
                })
            }
            Potential::Grid(p) => {
                if e_pole.im != 0.0 {
                    return Err(Error::ContinuationBlocked(
                        "complex poles are not supported for sampled potentials".into(),
                    ));
                }
                if sheet == Sheet::Second {
                    return Err(Error::ContinuationBlocked(
                        "second-sheet coupling functions are not supported for sampled potentials"
                            .into(),
                    ));
                }
                let e_b = e_pole.re;
                // Residue of the on-grid T by Richardson extrapolation.
                let h0 = 0.02 * e_b.abs();
                let n = self.grid.len();
                let mut samples: Vec<DMatrix<Complex64>> = Vec::new();
                for m in 0..5 {
                    let h = Complex64::new(0.0, h0 / 2f64.powi(m));
                    let t = self.solve_t(Complex64::new(e_b, 0.0) + h)?;
                    samples.push(t.map(|x| x * h));
                }
                let mut table = samples;
                for level in 1..5 {
                    let factor = 2f64.powi(level as i32);
                    for i in 0..(5 - level) {
                        let hi = table[i + 1].clone();
                        let lo = table[i].clone();
                        table[i] = (hi.map(|x| x * factor) - lo).map(|x| x / (factor - 1.0));
                    }
                }
                let residue = table[0].map(|x| -x);
                let g_nodes = rank_one_coefficients(&residue);
                // On-shell value from the homogeneous equation with the
                // extrapolated potential row at i kappa.
                let mu = p.mu;
                let kappa = (-2.0 * mu * e_b).sqrt();
                let mut on_shell = Complex64::default();
                for l in 0..n {
                    let prop = self.grid.k[l] * self.grid.k[l]
                        / (self.grid.k[l] * self.grid.k[l] / (2.0 * mu) - e_b);
                    on_shell += p.value_imag(self.grid.k[l], kappa)?
                        * self.grid.w[l]
                        * prop
                        * g_nodes[l]
                        / (2.0 * PI * PI);
                }
                Ok(CouplingFunction {
                    nodes: self.grid.k.clone(),
                    waves: vec![WaveCoupling {
                        label: "S".into(),
                        values: g_nodes,
                        on_shell,
                        coeffs: None,
                    }],
                })
            }
        }
    }

    /// Residual of the homogeneous coupling equation at every node, per
    /// wave: `|g(k_j) - (1/2pi^2) sum_l w_l q_l^2 V(k_j, q_l) g(q_l) /
    /// (q_l^2/2mu - E)|`.
    pub fn coupling_residual(&self, e_pole: f64, coupling: &CouplingFunction) -> Vec<Vec<f64>> {
        let mu = self.mu();
        let n = self.grid.len();
        let wave_of = |label: &str| -> usize {
            coupling
                .waves
                .iter()
                .position(|w| w.label == label)
                .expect("wave label")
        };
        let mut residuals = Vec::new();
        for wave in &coupling.waves {
            let mut per_node = Vec::with_capacity(n);
            for j in 0..n {
                let mut rhs = Complex64::default();
                for l in 0..n {
                    let prop = self.grid.k[l] * self.grid.k[l]
                        / (self.grid.k[l] * self.grid.k[l] / (2.0 * mu) - e_pole);
                    // Sum the wave-diagonal and wave-coupling blocks.
                    match &self.potential {
                        Potential::Separable(p) => {
                            for (a, term_a) in p.terms.iter().enumerate() {
                                if term_a.wave != wave.label {
                                    continue;
                                }
                                for (b, term_b) in p.terms.iter().enumerate() {
                                    if p.strength[(a, b)] == 0.0 {
                                        continue;
                                    }
                                    let g_b = coupling.waves[wave_of(&term_b.wave)].values[l];
                                    rhs += p.strength[(a, b)]
                                        * term_a.form.eval(Complex64::new(self.grid.k[j], 0.0))
                                        * term_b.form.eval(Complex64::new(self.grid.k[l], 0.0))
                                        * g_b
                                        * (self.grid.w[l] * prop)
                                        / (2.0 * PI * PI);
                                }
                            }
                        }
                        Potential::Grid(p) => {
                            rhs += p.value(self.grid.k[j], self.grid.k[l])
                                * wave.values[l]
                                * (self.grid.w[l] * prop)
                                / (2.0 * PI * PI);
                        }
                    }
                }
                per_node.push((wave.values[j] - rhs).norm());
            }
            residuals.push(per_node);
        }
        residuals
    }

    // ----- Compositeness integrals ---------------------------------------------

    /// Bound-state compositeness per wave:
    /// `X_w = (1/2pi^2) Int k^2 g_w(k)^2 / (k^2/2mu - E_B)^2 dk`.
    pub fn x_bound(&self, bound: &BoundState) -> XBreakdown {
        let mu = self.mu();
        let e_b = bound.e_b;
        let mut per_wave = Vec::new();
        let mut total = Complex64::default();
        let mut tail_warning = false;
        for wave in &bound.coupling.waves {
            let mut acc = Complex64::default();
            let mut last_term = Complex64::default();
            for (j, (&k, &w)) in self.grid.k.iter().zip(&self.grid.w).enumerate() {
                let den = k * k / (2.0 * mu) - e_b;
                let term = w * k * k * wave.values[j] * wave.values[j] / (den * den)
                    / (2.0 * PI * PI);
                acc += term;
                last_term = term;
            }
            if last_term.norm() > 1e-8 * acc.norm().max(1e-300) {
                tail_warning = true;
            }
            total += acc;
            per_wave.push(WaveX {
                label: wave.label.clone(),
                integral: acc,
                boundary: Complex64::default(),
                total: acc,
            });
        }
        XBreakdown {
            per_wave,
            total,
            tail_warning,
        }
    }

    /// Sheet-II compositeness for a separable-potential pole at `e_pole`:
    /// rotated-ray integral plus the boundary term
    /// `(i mu^2/(pi k_n)) d/dk [k g_w^2]` at `k_n`.
    pub fn x_resonance(&self, e_pole: Complex64) -> Result<XBreakdown> {
        let p = self.separable()?;
        let coupling = self.coupling_at_pole(e_pole, Sheet::Second)?;
        let mu = p.mu;
        let k_n = nonrel_momentum(mu, e_pole, Sheet::Second);
        let angle = 0.5 * k_n.arg().clamp(-0.5 * PI, 0.0);
        self.check_rotation(angle)?;
        let phase = Complex64::new(0.0, angle).exp();

        let mut per_wave = Vec::new();
        let mut total = Complex64::default();
        let mut tail_warning = false;
        for wave in &coupling.waves {
            let coeffs = wave.coeffs.as_ref().expect("separable couplings");
            let term_idx: Vec<usize> = (0..p.terms.len())
                .filter(|&t| p.terms[t].wave == wave.label)
                .collect();
            let g_at = |k: Complex64| -> Complex64 {
                term_idx
                    .iter()
                    .map(|&t| coeffs[t] * p.terms[t].form.eval(k))
                    .sum()
            };
            let dg_at = |k: Complex64| -> Complex64 {
                term_idx
                    .iter()
                    .map(|&t| coeffs[t] * p.terms[t].form.deriv(k))
                    .sum()
            };

            let mut acc = Complex64::default();
            let mut last_term = Complex64::default();
            for (&t, &w) in self.grid.k.iter().zip(&self.grid.w) {
                let z = phase * t;
                let g = g_at(z);
                let den = z * z / (2.0 * mu) - e_pole;
                let term = w * z * z * g * g / (den * den) * phase / (2.0 * PI * PI);
                acc += term;
                last_term = term;
            }
            if last_term.norm() > 1e-8 * acc.norm().max(1e-300) {
                tail_warning = true;
            }
            let g_n = g_at(k_n);
            let dg_n = dg_at(k_n);
            // d/dk [k g^2] = g^2 + 2 k g g'.
            let boundary = Complex64::i() * mu * mu / (PI * k_n)
                * (g_n * g_n + 2.0 * k_n * g_n * dg_n);
            let x = acc + boundary;
            total += x;
            per_wave.push(WaveX {
                label: wave.label.clone(),
                integral: acc,
                boundary,
                total: x,
            });
        }
        Ok(XBreakdown {
            per_wave,
            total,
            tail_warning,
        })
    }

    /// Fully-off-shell `T(p, p; E)` at a fixed probe momentum, computed by
    /// appending the probe to the quadrature grid (no principal value
    /// needed for `E` off the scattering axis).
    pub fn t_probe(&self, e: Complex64, p: f64) -> Result<Complex64> {
        if e.im == 0.0 && e.re > 0.0 {
            return Err(Error::InvalidConfig(
                "use solve_t_onshell for real positive E".into(),
            ));
        }
        let n = self.grid.len();
        let mu = self.mu();
        let dim = n + 1;
        let mut points: Vec<f64> = self.grid.k.clone();
        points.push(p);
        let mut m = DMatrix::<Complex64>::identity(dim, dim);
        let mut rhs = DMatrix::<Complex64>::zeros(dim, 1);
        for (row, &q) in points.iter().enumerate() {
            for l in 0..n {
                let prop = self.grid.k[l] * self.grid.k[l]
                    / (Complex64::new(self.grid.k[l] * self.grid.k[l] / (2.0 * mu), 0.0) - e);
                m[(row, l)] -= Complex64::new(self.v_real(q, self.grid.k[l]), 0.0)
                    * (self.grid.w[l] / (2.0 * PI * PI))
                    * prop;
            }
            rhs[(row, 0)] = Complex64::new(self.v_real(q, p), 0.0);
        }
        let sol = m.lu().solve(&rhs).ok_or(Error::PoleProximity {
            condition: f64::INFINITY,
        })?;
        Ok(sol[(n, 0)])
    }

    /// Relative change of an off-shell probe of T under a doubled grid;
    /// the quadrature-convergence diagnostic.
    pub fn convergence_check(&self, e: Complex64) -> Result<f64> {
        let p = 0.37 * self.grid.scale;
        let a = self.t_probe(e, p)?;
        let fine = self.refined(2 * self.grid.len());
        let b = fine.t_probe(e, p)?;
        Ok((a - b).norm() / b.norm().max(1e-300))
    }
}

/// Rank-one factor of a symmetric matrix, pivoting on the largest diagonal.
fn rank_one_coefficients(r: &DMatrix<Complex64>) -> Vec<Complex64> {
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
        return g;
    }
    for j in 0..n {
        g[j] = r[(pivot, j)] / g_p;
    }
    g
}

impl super::potential::GridPotential {
    /// `V(i kappa, i kappa)` by iterating the small-kappa extrapolation in
    /// both arguments.
    pub fn value_imag_imag(&self, kappa: f64) -> Result<f64> {
        let nodes: Vec<f64> = self.nodes()[..3].to_vec();
        let mut col = Vec::with_capacity(3);
        for &k in &nodes {
            col.push(self.value_imag(k, kappa)?);
        }
        let xs: Vec<f64> = nodes.iter().map(|v| v * v).collect();
        let x = -kappa * kappa;
        let mut acc = 0.0;
        for i in 0..3 {
            let mut term = col[i];
            for j in 0..3 {
                if i != j {
                    term *= (x - xs[j]) / (xs[i] - xs[j]);
                }
            }
            acc += term;
        }
        Ok(acc)
    }
}
