//! Coupled-channel unitarized amplitudes `T = [K^{-1} + G]^{-1}`.
//!
//! The kernel is kept in the form `K(s) = N(s) / d(s)` with a finite matrix
//! numerator and a scalar denominator (`d = 1` except for the bare-pole
//! family, where `d = M0^2 - s`). The amplitude is then evaluated as
//! `T = [d I + N G]^{-1} N`, which needs no kernel inversion: kernels with
//! zero entries, singular constant kernels and the `K -> inf` point of a
//! bare pole are all regular in this form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kinematics::{Channel, KinematicsMode, SheetedPoint};
use crate::loopfn::{self, SubtractionScheme};

/// Functional form of the interaction kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    /// Energy-independent symmetric matrix.
    Constant(DMatrix<f64>),
    /// `K(s) = sum_j C_j (s/s_scale)^j` with symmetric coefficient matrices.
    Polynomial {
        coeffs: Vec<DMatrix<f64>>,
        s_scale: f64,
    },
    /// `K_ij(s) = g0_i g0_j / (M0^2 - s)`; the residue is rank one.
    BarePole { g0: DVector<f64>, m0_sq: f64 },
}

/// A coupled-channel model: channels, subtraction scheme per channel, kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    channels: Vec<Channel>,
    schemes: Vec<SubtractionScheme>,
    form: KernelForm,
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidConfig(format!("{what} must be square")));
    }
    let scale = m.amax().max(1e-300);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidConfig(format!(
                    "{what} must be symmetric; entries ({i},{j}) and ({j},{i}) differ"
                )));
            }
        }
    }
    Ok(())
}

impl KernelModel {
    pub fn new(
        channels: Vec<Channel>,
        schemes: Vec<SubtractionScheme>,
        form: KernelForm,
    ) -> Result<Self> {
        let n = channels.len();
        if n == 0 {
            return Err(Error::InvalidConfig("at least one channel required".into()));
        }
        if schemes.len() != n {
            return Err(Error::InvalidConfig(format!(
                "{} subtraction schemes for {} channels",
                schemes.len(),
                n
            )));
        }
        match &form {
            KernelForm::Constant(k) => {
                check_symmetric(k, "constant kernel")?;
                if k.nrows() != n {
                    return Err(Error::InvalidConfig("kernel size != channel count".into()));
                }
            }
            KernelForm::Polynomial { coeffs, s_scale } => {
                if coeffs.is_empty() || !(*s_scale > 0.0) {
                    return Err(Error::InvalidConfig(
                        "polynomial kernel needs coefficients and a positive scale".into(),
                    ));
                }
                for c in coeffs {
                    check_symmetric(c, "polynomial kernel coefficient")?;
                    if c.nrows() != n {
                        return Err(Error::InvalidConfig("kernel size != channel count".into()));
                    }
                }
            }
            KernelForm::BarePole { g0, m0_sq } => {
                if g0.len() != n {
                    return Err(Error::InvalidConfig("g0 length != channel count".into()));
                }
                if !(*m0_sq > 0.0) {
                    return Err(Error::InvalidConfig("bare mass squared must be positive".into()));
                }
            }
        }
        Ok(KernelModel {
            channels,
            schemes,
            form,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn schemes(&self) -> &[SubtractionScheme] {
        &self.schemes
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    /// Kernel numerator and scalar denominator at s: `K = N/d`.
    fn numerator_denominator(&self, s: Complex64) -> (DMatrix<Complex64>, Complex64) {
        let n = self.n_channels();
        match &self.form {
            KernelForm::Constant(k) => (k.map(|x| Complex64::new(x, 0.0)), Complex64::new(1.0, 0.0)),
            KernelForm::Polynomial { coeffs, s_scale } => {
                let u = s / *s_scale;
                let mut acc = DMatrix::<Complex64>::zeros(n, n);
                let mut power = Complex64::new(1.0, 0.0);
                for c in coeffs {
                    acc += c.map(|x| x * power);
                    power *= u;
                }
                (acc, Complex64::new(1.0, 0.0))
            }
            KernelForm::BarePole { g0, m0_sq } => {
                let mut p = DMatrix::<Complex64>::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        p[(i, j)] = Complex64::new(g0[i] * g0[j], 0.0);
                    }
                }
                (p, *m0_sq - s)
            }
        }
    }

    /// `K(s)` itself; infinite entries at s = M0^2 for the bare pole.
    pub fn kernel(&self, s: Complex64) -> DMatrix<Complex64> {
        let (num, den) = self.numerator_denominator(s);
        num.map(|x| x / den)
    }

    /// Analytic `dK/ds`.
    pub fn kernel_deriv(&self, s: Complex64) -> DMatrix<Complex64> {
        let n = self.n_channels();
        match &self.form {
            KernelForm::Constant(_) => DMatrix::zeros(n, n),
            KernelForm::Polynomial { coeffs, s_scale } => {
                let u = s / *s_scale;
                let mut acc = DMatrix::<Complex64>::zeros(n, n);
                let mut power = Complex64::new(1.0, 0.0);
                for (j, c) in coeffs.iter().enumerate().skip(1) {
                    // d/ds (s/s0)^j = j (s/s0)^{j-1} / s0
                    acc += c.map(|x| x * (j as f64) * power / *s_scale);
                    power *= u;
                }
                acc
            }
            KernelForm::BarePole { g0, m0_sq } => {
                let den = *m0_sq - s;
                let den2 = den * den;
                let mut p = DMatrix::<Complex64>::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        p[(i, j)] = g0[i] * g0[j] / den2;
                    }
                }
                p
            }
        }
    }

    /// Diagonal of the loop function on the point's sheet signature.
    pub fn loop_diag(&self, point: &SheetedPoint) -> Result<DVector<Complex64>> {
        let mut g = DVector::zeros(self.n_channels());
        for (i, (ch, scheme)) in self.channels.iter().zip(&self.schemes).enumerate() {
            g[i] = loopfn::g(ch, scheme, point, i)?;
        }
        Ok(g)
    }

    /// Diagonal of `dG/ds` on the point's sheet signature.
    pub fn loop_deriv_diag(&self, point: &SheetedPoint) -> Result<DVector<Complex64>> {
        let mut g = DVector::zeros(self.n_channels());
        for (i, (ch, scheme)) in self.channels.iter().zip(&self.schemes).enumerate() {
            g[i] = loopfn::dg_ds(ch, scheme, point, i)?;
        }
        Ok(g)
    }

    fn check_point(&self, point: &SheetedPoint) -> Result<()> {
        if point.mode != KinematicsMode::Relativistic {
            return Err(Error::InvalidConfig(
                "kernel models use relativistic kinematics".into(),
            ));
        }
        if point.sheet.len() != self.n_channels() {
            return Err(Error::InvalidConfig(format!(
                "sheet signature length {} != {} channels",
                point.sheet.len(),
                self.n_channels()
            )));
        }
        Ok(())
    }

    /// `T(s) = [d I + N G]^{-1} N` on the requested sheets.
    pub fn t_matrix(&self, point: &SheetedPoint) -> Result<DMatrix<Complex64>> {
        self.check_point(point)?;
        let n = self.n_channels();
        let (num, den) = self.numerator_denominator(point.value);
        let g = self.loop_diag(point)?;
        let mut m = DMatrix::<Complex64>::identity(n, n) * den;
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += num[(i, j)] * g[j];
            }
        }
        let m_norm = m.camax();
        let inv = m.try_inverse().ok_or(Error::PoleProximity {
            condition: f64::INFINITY,
        })?;
        let condition = m_norm * inv.camax();
        if condition > 1e14 {
            return Err(Error::PoleProximity { condition });
        }
        Ok(inv * num)
    }

    /// Scalar function whose zeros are the amplitude poles on the requested
    /// sheets: `det(I + K G)` for finite kernels, the dressed inverse
    /// propagator `M0^2 - s + sum_i g0_i^2 G_i` for the bare pole.
    pub fn pole_objective(&self, point: &SheetedPoint) -> Result<Complex64> {
        self.check_point(point)?;
        let g = self.loop_diag(point)?;
        match &self.form {
            KernelForm::BarePole { g0, m0_sq } => {
                let mut acc = *m0_sq - point.value;
                for i in 0..self.n_channels() {
                    acc += g0[i] * g0[i] * g[i];
                }
                Ok(acc)
            }
            _ => {
                let m = self.id_plus_kg(point.value, &g);
                Ok(m.determinant())
            }
        }
    }

    /// Analytic derivative of [`Self::pole_objective`] with respect to s.
    pub fn pole_objective_deriv(&self, point: &SheetedPoint) -> Result<Complex64> {
        self.check_point(point)?;
        let g = self.loop_diag(point)?;
        let dg = self.loop_deriv_diag(point)?;
        match &self.form {
            KernelForm::BarePole { g0, .. } => {
                let mut acc = Complex64::new(-1.0, 0.0);
                for i in 0..self.n_channels() {
                    acc += g0[i] * g0[i] * dg[i];
                }
                Ok(acc)
            }
            _ => {
                // Jacobi's formula: det' = det * tr(M^{-1} M').
                let n = self.n_channels();
                let s = point.value;
                let m = self.id_plus_kg(s, &g);
                let det = m.determinant();
                let inv = m.try_inverse().ok_or(Error::PoleProximity {
                    condition: f64::INFINITY,
                })?;
                let k = self.kernel(s);
                let dk = self.kernel_deriv(s);
                let mut mprime = DMatrix::<Complex64>::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        mprime[(i, j)] = dk[(i, j)] * g[j] + k[(i, j)] * dg[j];
                    }
                }
                let prod = inv * mprime;
                let mut trace = Complex64::default();
                for i in 0..n {
                    trace += prod[(i, i)];
                }
                Ok(det * trace)
            }
        }
    }

    fn id_plus_kg(&self, s: Complex64, g: &DVector<Complex64>) -> DMatrix<Complex64> {
        let n = self.n_channels();
        let k = self.kernel(s);
        let mut m = DMatrix::<Complex64>::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += k[(i, j)] * g[j];
            }
        }
        m
    }

    /// Branch points and other non-analyticities in s, used to size residue
    /// contours: thresholds, pseudo-thresholds, s = 0 and the bare pole.
    pub fn non_analytic_points(&self) -> Vec<Complex64> {
        let mut pts: Vec<Complex64> = Vec::new();
        pts.push(Complex64::default());
        for ch in &self.channels {
            pts.push(Complex64::new(ch.threshold_s(), 0.0));
            if ch.pseudo_threshold_s() > 0.0 {
                pts.push(Complex64::new(ch.pseudo_threshold_s(), 0.0));
            }
        }
        if let KernelForm::BarePole { m0_sq, .. } = &self.form {
            pts.push(Complex64::new(*m0_sq, 0.0));
        }
        pts
    }
}

trait MaxAbs {
    fn camax(&self) -> f64;
}

impl MaxAbs for DMatrix<Complex64> {
    fn camax(&self) -> f64 {
        self.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
    }
}
