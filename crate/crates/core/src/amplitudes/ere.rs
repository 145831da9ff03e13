//! Effective-range amplitude `T(k) = 1 / (-1/a + r k^2 / 2 - i k)` in
//! nonrelativistic kinematics, energies measured from the threshold `m_th`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{nonrel_momentum, KinematicsMode, SheetedPoint};

/// Scattering length `a` and effective range `r` in MeV^-1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EreModel {
    pub a: f64,
    pub r: f64,
    /// Reduced mass (MeV).
    pub mu: f64,
    /// Absolute threshold energy (MeV), only used for labeling output.
    pub m_th: f64,
}

impl EreModel {
    pub fn new(a: f64, r: f64, mu: f64, m_th: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidConfig("reduced mass must be positive".into()));
        }
        if a == 0.0 {
            return Err(Error::InvalidConfig("scattering length must be nonzero".into()));
        }
        Ok(EreModel { a, r, mu, m_th })
    }

    fn check(&self, point: &SheetedPoint) -> Result<Complex64> {
        if point.mode != KinematicsMode::Nonrelativistic {
            return Err(Error::InvalidConfig(
                "ERE amplitudes use nonrelativistic kinematics".into(),
            ));
        }
        if point.sheet.len() != 1 {
            return Err(Error::InvalidConfig(
                "ERE amplitudes are single channel".into(),
            ));
        }
        Ok(point.value)
    }

    pub fn momentum(&self, point: &SheetedPoint) -> Result<Complex64> {
        let e = self.check(point)?;
        Ok(nonrel_momentum(self.mu, e, point.sheet.get(0)?))
    }

    /// `T^{-1}(E) = -1/a + r k^2/2 - i k` with the sheet-consistent momentum.
    pub fn t_inverse(&self, point: &SheetedPoint) -> Result<Complex64> {
        let k = self.momentum(point)?;
        Ok(-1.0 / self.a + 0.5 * self.r * k * k - Complex64::i() * k)
    }

    pub fn t(&self, point: &SheetedPoint) -> Result<Complex64> {
        Ok(1.0 / self.t_inverse(point)?)
    }

    /// `d T^{-1} / dE = mu (r - i/k)`.
    pub fn t_inverse_deriv(&self, point: &SheetedPoint) -> Result<Complex64> {
        let k = self.momentum(point)?;
        if k.norm() == 0.0 {
            return Err(Error::SingularKinematics(
                "dT^{-1}/dE singular at threshold".into(),
            ));
        }
        Ok(self.mu * (self.r - Complex64::i() / k))
    }
}
