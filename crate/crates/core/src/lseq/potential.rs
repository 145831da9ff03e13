//! Energy-independent two-body potentials in momentum space.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank-one form factors; all analytic in a strip around the real axis with
/// poles at `+-i beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FormFactor {
    /// `1/(k^2 + beta^2)` (S wave).
    Yamaguchi { beta: f64 },
    /// `1/(k^2 + beta^2)^2` (S wave, softer).
    Dipole { beta: f64 },
    /// `k/(k^2 + beta^2)^2` (P-wave barrier; supports resonances).
    PWave { beta: f64 },
    /// `k^2/(k^2 + beta^2)^2` (D-wave-like).
    DWave { beta: f64 },
}

impl FormFactor {
    pub fn beta(&self) -> f64 {
        match self {
            FormFactor::Yamaguchi { beta }
            | FormFactor::Dipole { beta }
            | FormFactor::PWave { beta }
            | FormFactor::DWave { beta } => *beta,
        }
    }

    pub fn eval(&self, k: Complex64) -> Complex64 {
        let b2 = self.beta() * self.beta();
        let d = k * k + b2;
        match self {
            FormFactor::Yamaguchi { .. } => 1.0 / d,
            FormFactor::Dipole { .. } => 1.0 / (d * d),
            FormFactor::PWave { .. } => k / (d * d),
            FormFactor::DWave { .. } => k * k / (d * d),
        }
    }

    /// `df/dk`.
    pub fn deriv(&self, k: Complex64) -> Complex64 {
        let b2 = self.beta() * self.beta();
        let d = k * k + b2;
        match self {
            FormFactor::Yamaguchi { .. } => -2.0 * k / (d * d),
            FormFactor::Dipole { .. } => -4.0 * k / (d * d * d),
            FormFactor::PWave { .. } => (d - 4.0 * k * k) / (d * d * d),
            FormFactor::DWave { .. } => (2.0 * k * d - 4.0 * k * k * k) / (d * d * d),
        }
    }

    /// Pole positions in the complex k plane.
    pub fn pole_positions(&self) -> Vec<Complex64> {
        let b = self.beta();
        vec![Complex64::new(0.0, b), Complex64::new(0.0, -b)]
    }
}

/// One separable term: a form factor tagged with its partial wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableTerm {
    pub wave: String,
    pub form: FormFactor,
}

/// `V(k, k') = sum_ab C_ab f_a(k) f_b(k')`, with `C_ab` nonzero only when
/// terms a and b belong to the same partial wave is NOT required: the
/// strength matrix couples waves, the loop moments stay diagonal per wave.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparablePotential {
    pub mu: f64,
    pub terms: Vec<SeparableTerm>,
    /// Symmetric strength matrix over terms.
    pub strength: DMatrix<f64>,
}

impl SeparablePotential {
    pub fn new(mu: f64, terms: Vec<SeparableTerm>, strength: DMatrix<f64>) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidConfig("reduced mass must be positive".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidConfig("at least one separable term".into()));
        }
        if strength.nrows() != terms.len() || strength.ncols() != terms.len() {
            return Err(Error::InvalidConfig(
                "strength matrix size != number of terms".into(),
            ));
        }
        let scale = strength.amax().max(1e-300);
        for i in 0..terms.len() {
            for j in (i + 1)..terms.len() {
                if (strength[(i, j)] - strength[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidConfig("strength matrix must be symmetric".into()));
                }
            }
        }
        Ok(SeparablePotential {
            mu,
            terms,
            strength,
        })
    }

    /// Rank-one attractive potential `V = -lambda f f` with the sign chosen
    /// so positive `lambda` binds.
    pub fn rank_one(mu: f64, wave: &str, form: FormFactor, lambda: f64) -> Result<Self> {
        SeparablePotential::new(
            mu,
            vec![SeparableTerm {
                wave: wave.to_string(),
                form,
            }],
            DMatrix::from_element(1, 1, lambda),
        )
    }

    pub fn value(&self, k: Complex64, kp: Complex64) -> Complex64 {
        let mut acc = Complex64::default();
        for a in 0..self.terms.len() {
            for b in 0..self.terms.len() {
                if self.strength[(a, b)] != 0.0 {
                    acc += self.strength[(a, b)]
                        * self.terms[a].form.eval(k)
                        * self.terms[b].form.eval(kp);
                }
            }
        }
        acc
    }

    /// Distinct wave labels in term order.
    pub fn waves(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.terms {
            if !out.contains(&t.wave) {
                out.push(t.wave.clone());
            }
        }
        out
    }
}

/// `V(k, k')` sampled on a rectangular grid; evaluated off-grid by bilinear
/// interpolation. Single partial wave.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPotential {
    pub mu: f64,
    nodes: Vec<f64>,
    values: DMatrix<f64>,
}

impl GridPotential {
    pub fn new(mu: f64, nodes: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidConfig("reduced mass must be positive".into()));
        }
        if nodes.len() < 4 {
            return Err(Error::InvalidConfig(
                "grid potential needs at least 4 nodes".into(),
            ));
        }
        if values.nrows() != nodes.len() || values.ncols() != nodes.len() {
            return Err(Error::InvalidConfig("value matrix size != node count".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) || nodes[0] < 0.0 {
            return Err(Error::InvalidConfig(
                "grid nodes must be non-negative and strictly increasing".into(),
            ));
        }
        let scale = values.amax().max(1e-300);
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::InvalidConfig("V(k, k') must be symmetric".into()));
                }
            }
        }
        Ok(GridPotential { mu, nodes, values })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn bracket(&self, k: f64) -> (usize, f64) {
        let n = self.nodes.len();
        if k <= self.nodes[0] {
            return (0, 0.0);
        }
        if k >= self.nodes[n - 1] {
            return (n - 2, 1.0);
        }
        let i = self.nodes.partition_point(|&x| x <= k) - 1;
        let i = i.min(n - 2);
        let t = (k - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        (i, t)
    }

    /// Bilinear interpolation. Below the first node the edge value is used;
    /// beyond the last node the potential is taken to vanish (the sampled
    /// range must cover everything non-negligible).
    pub fn value(&self, k: f64, kp: f64) -> f64 {
        let k_max = *self.nodes.last().unwrap();
        if k > k_max || kp > k_max {
            return 0.0;
        }
        let (i, t) = self.bracket(k);
        let (j, u) = self.bracket(kp);
        let v00 = self.values[(i, j)];
        let v10 = self.values[(i + 1, j)];
        let v01 = self.values[(i, j + 1)];
        let v11 = self.values[(i + 1, j + 1)];
        (1.0 - t) * (1.0 - u) * v00 + t * (1.0 - u) * v10 + (1.0 - t) * u * v01 + t * u * v11
    }

    /// Fit abscissae for the small-|k| continuation: three distinct nodes
    /// near `0.7, 1.2, 1.8 x kappa`, so the quadratic fit in `k^2` spans the
    /// extrapolation distance to `-kappa^2`.
    fn continuation_stencil(&self, kappa: f64) -> Result<[usize; 3]> {
        let pick = |target: f64| -> usize {
            let i = self.nodes.partition_point(|&x| x < target);
            i.min(self.nodes.len() - 1)
        };
        let mut idx = [pick(0.7 * kappa), pick(1.2 * kappa), pick(1.8 * kappa)];
        // Deduplicate while keeping the nodes ordered.
        if idx[1] <= idx[0] {
            idx[1] = idx[0] + 1;
        }
        if idx[2] <= idx[1] {
            idx[2] = idx[1] + 1;
        }
        if idx[2] >= self.nodes.len() || self.nodes[idx[0]] > 1.5 * kappa {
            return Err(Error::ContinuationBlocked(format!(
                "sample grid does not bracket the continuation scale kappa = {kappa:.3} MeV"
            )));
        }
        Ok(idx)
    }

    /// Quadratic-in-k'^2 extrapolation of `V(k, .)` onto a purely imaginary
    /// momentum `i kappa`; trusted only when the samples vary slowly on the
    /// scale kappa.
    pub fn value_imag(&self, k: f64, kappa: f64) -> Result<f64> {
        let idx = self.continuation_stencil(kappa)?;
        let xs: Vec<f64> = idx.iter().map(|&i| self.nodes[i] * self.nodes[i]).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| self.value(k, self.nodes[i])).collect();
        Ok(lagrange3(&xs, &ys, -kappa * kappa))
    }
}

fn lagrange3(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let mut term = ys[i];
        for j in 0..3 {
            if i != j {
                term *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += term;
    }
    acc
}

impl GridPotential {
    /// `V(i kappa, i kappa)` by iterating the continuation in both
    /// arguments.
    pub fn value_imag_imag(&self, kappa: f64) -> Result<f64> {
        let idx = self.continuation_stencil(kappa)?;
        let xs: Vec<f64> = idx.iter().map(|&i| self.nodes[i] * self.nodes[i]).collect();
        let mut ys = Vec::with_capacity(3);
        for &i in &idx {
            ys.push(self.value_imag(self.nodes[i], kappa)?);
        }
        Ok(lagrange3(&xs, &ys, -kappa * kappa))
    }
}

/// Either family behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Separable(SeparablePotential),
    Grid(GridPotential),
}

impl Potential {
    pub fn mu(&self) -> f64 {
        match self {
            Potential::Separable(p) => p.mu,
            Potential::Grid(p) => p.mu,
        }
    }
}
