//! Single-CDD-pole amplitude `t(E) = 1 / (lambda/(E - M_Z) + beta - i k)`.
//!
//! Internally the regularized form
//! `t(E) = (E - M_Z) / (lambda + (beta - i k)(E - M_Z))`
//! is used; it is analytic at `E = M_Z` and vanishes there exactly, which is
//! the defining property of a CDD zero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{nonrel_momentum, KinematicsMode, SheetedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CddModel {
    /// Residue of t^{-1} at the CDD pole (MeV^2, momentum times energy).
    pub lambda: f64,
    /// CDD pole position in energy from threshold (MeV).
    pub m_z: f64,
    /// Subtraction constant (MeV).
    pub beta: f64,
    /// Reduced mass (MeV).
    pub mu: f64,
    /// Absolute threshold energy (MeV), for labeling output.
    pub m_th: f64,
}

impl CddModel {
    pub fn new(lambda: f64, m_z: f64, beta: f64, mu: f64, m_th: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidConfig("reduced mass must be positive".into()));
        }
        Ok(CddModel {
            lambda,
            m_z,
            beta,
            mu,
            m_th,
        })
    }

    fn check(&self, point: &SheetedPoint) -> Result<Complex64> {
        if point.mode != KinematicsMode::Nonrelativistic {
            return Err(Error::InvalidConfig(
                "CDD amplitudes use nonrelativistic kinematics".into(),
            ));
        }
        if point.sheet.len() != 1 {
            return Err(Error::InvalidConfig(
                "CDD amplitudes are single channel".into(),
            ));
        }
        Ok(point.value)
    }

    pub fn momentum(&self, point: &SheetedPoint) -> Result<Complex64> {
        let e = self.check(point)?;
        Ok(nonrel_momentum(self.mu, e, point.sheet.get(0)?))
    }

    /// Denominator of the regularized form; its zeros are the amplitude
    /// poles and it stays finite at the CDD pole.
    pub fn pole_objective(&self, point: &SheetedPoint) -> Result<Complex64> {
        let e = self.check(point)?;
        let k = self.momentum(point)?;
        Ok(self.lambda + (self.beta - Complex64::i() * k) * (e - self.m_z))
    }

    /// `d/dE` of [`Self::pole_objective`].
    pub fn pole_objective_deriv(&self, point: &SheetedPoint) -> Result<Complex64> {
        let e = self.check(point)?;
        let k = self.momentum(point)?;
        if k.norm() == 0.0 {
            return Err(Error::SingularKinematics(
                "objective derivative singular at threshold".into(),
            ));
        }
        let dk_de = self.mu / k;
        Ok(self.beta - Complex64::i() * k - Complex64::i() * dk_de * (e - self.m_z))
    }

    /// `t(E)`; exactly zero at `E = M_Z` when `lambda != 0`.
    pub fn t(&self, point: &SheetedPoint) -> Result<Complex64> {
        let e = self.check(point)?;
        let num = e - self.m_z;
        if self.lambda != 0.0 && num.norm() == 0.0 {
            return Ok(Complex64::default());
        }
        Ok(num / self.pole_objective(point)?)
    }

    /// `t^{-1}(E) = lambda/(E - M_Z) + beta - i k`; errors at the CDD pole.
    pub fn t_inverse(&self, point: &SheetedPoint) -> Result<Complex64> {
        let e = self.check(point)?;
        let num = e - self.m_z;
        if num.norm() == 0.0 {
            return Err(Error::SingularKinematics(
                "t^{-1} has a pole at E = M_Z".into(),
            ));
        }
        let k = self.momentum(point)?;
        Ok(self.lambda / num + self.beta - Complex64::i() * k)
    }
}
