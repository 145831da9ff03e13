//! Two-channel width-saturation constraints: the total width and total
//! compositeness (or a branching fraction) pin down the partial
//! compositeness coefficients through
//!
//! ```text
//! Gamma_1 = 2 X_1 k(M_R) |k_R| / mu
//! Gamma_2 = X_2 |k_R| M_R^2/(pi mu) Int_{M_th}^inf dW k(W)/W^2
//!                    Gamma / ((M_R - W)^2 + Gamma^2/4)
//! ```
//!
//! with channel 1 the light channel and channel 2 the near-threshold one
//! that owns `k_R` and `mu`. Both widths are linear in their `X_i`, so the
//! closure `{X_1 + X_2 = X, Gamma_1 + Gamma_2 = Gamma}` is a 2x2 linear
//! system.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lseq::adaptive_simpson;

/// Channel-1 momentum convention for `k(W)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumForm {
    /// `k(W) = sqrt(2 mu1 (W - M_th1))`.
    Nonrelativistic,
    /// `k(W) = sqrt((W^2 - (m1+m2)^2)(W^2 - (m1-m2)^2)) / (2W)`.
    Relativistic,
}

/// Which closure input accompanies the total width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Total compositeness `X = X_1 + X_2`.
    TotalCompositeness(f64),
    /// Branching fraction `Gamma_1 / Gamma`.
    BranchingFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationSystem {
    /// Resonance mass (MeV).
    pub m_r: f64,
    /// Total width (MeV).
    pub gamma: f64,
    /// |k_R| of the near-threshold channel 2 (MeV).
    pub k_r_abs: f64,
    /// Reduced mass of channel 2 (MeV).
    pub mu: f64,
    /// Channel-1 threshold (MeV) for the spectral integral.
    pub m_th1: f64,
    /// Channel-1 masses (MeV).
    pub m1_a: f64,
    pub m1_b: f64,
    pub momentum_form: MomentumForm,
    pub closure: Closure,
    /// Admissibility band `X_i in [0, 1 + eps]`.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationSolution {
    pub x1: f64,
    pub x2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Width per unit X in channel 1 (the Gamma_1 kernel).
    pub c1: f64,
    /// Width per unit X in channel 2 (the spectral-integral kernel).
    pub c2: f64,
}

impl SaturationSystem {
    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig("width must be positive".into()));
        }
        if !(self.m_r > self.m_th1) {
            return Err(Error::InvalidConfig(
                "resonance mass must lie above the channel-1 threshold".into(),
            ));
        }
        if !(self.mu > 0.0) || !(self.k_r_abs > 0.0) {
            return Err(Error::InvalidConfig(
                "channel-2 kinematics must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Channel-1 CM momentum at total energy W.
    pub fn k_of_w(&self, w: f64) -> f64 {
        match self.momentum_form {
            MomentumForm::Nonrelativistic => {
                let mu1 = self.m1_a * self.m1_b / (self.m1_a + self.m1_b);
                (2.0 * mu1 * (w - self.m_th1).max(0.0)).sqrt()
            }
            MomentumForm::Relativistic => {
                let sum = self.m1_a + self.m1_b;
                let dif = self.m1_a - self.m1_b;
                let lam = (w * w - sum * sum) * (w * w - dif * dif);
                lam.max(0.0).sqrt() / (2.0 * w)
            }
        }
    }
}

/// `Gamma_1 = 2 X_1 k_MR |k_R| / mu`; linear in `X_1`.
pub fn gamma1(x1: f64, mu: f64, k_mr: f64, k_r_abs: f64) -> f64 {
    2.0 * x1 / mu * k_mr * k_r_abs
}

/// `Gamma_2` for unit `X_2`: the Lorentzian-weighted spectral integral in
/// three mapped regions. `W = M_th + v^2` removes the threshold square
/// root, `W = M_R + (Gamma/2) tan(theta)` flattens the peak, and the far
/// tail uses `W = W_s/u^2`, which removes the half-integer endpoint power
/// carried by `k(W)`. Each region is integrated adaptively to 1e-9 of the
/// total.
pub fn gamma2_kernel(system: &SaturationSystem) -> Result<f64> {
    system.validate()?;
    let half = 0.5 * system.gamma;
    let lorentz = |w: f64| -> f64 {
        system.gamma / ((system.m_r - w) * (system.m_r - w) + 0.25 * system.gamma * system.gamma)
    };
    let integrand = |w: f64| system.k_of_w(w) / (w * w) * lorentz(w);

    // Region boundaries: the peak window is +-8 Gamma when it clears the
    // threshold, otherwise everything below the window is folded into the
    // threshold map.
    let w_a = (system.m_r - 8.0 * system.gamma).max(system.m_th1);
    let w_b = system.m_r + 8.0 * system.gamma;

    let threshold_region = |tol: f64| -> f64 {
        if w_a <= system.m_th1 {
            return 0.0;
        }
        let v_max = (w_a - system.m_th1).sqrt();
        adaptive_simpson(
            &|v: f64| 2.0 * v * integrand(system.m_th1 + v * v),
            0.0,
            v_max,
            tol,
        )
    };
    let peak_region = |tol: f64| -> f64 {
        let theta_lo = ((w_a - system.m_r) / half).atan();
        let theta_hi = ((w_b - system.m_r) / half).atan();
        // The Lorentzian cancels the Jacobian in theta.
        adaptive_simpson(
            &|theta: f64| {
                let w = system.m_r + half * theta.tan();
                2.0 * system.k_of_w(w) / (w * w)
            },
            theta_lo,
            theta_hi,
            tol,
        )
    };
    let tail_region = |tol: f64| -> f64 {
        adaptive_simpson(
            &|u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let w = w_b / (u * u);
                integrand(w) * 2.0 * w_b / (u * u * u)
            },
            0.0,
            1.0,
            tol,
        )
    };

    let rough = threshold_region(1e-4) + peak_region(1e-4) + tail_region(1e-4);
    let tol = 1e-9 * rough.abs().max(1e-300);
    let value = threshold_region(tol) + peak_region(tol) + tail_region(tol);
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(
            "spectral integral diverged; check the k(W) tail".into(),
        ));
    }
    let prefactor = system.k_r_abs * system.m_r * system.m_r / (PI * system.mu);
    Ok(prefactor * value)
}

/// `Gamma_2 = X_2 * gamma2_kernel`.
pub fn gamma2(x2: f64, system: &SaturationSystem) -> Result<f64> {
    Ok(x2 * gamma2_kernel(system)?)
}

/// Solve `{X_1 + X_2 = X, c_1 X_1 + c_2 X_2 = Gamma}` (total-X closure) or
/// distribute the widths according to the branching fraction. Solutions with
/// any `X_i` outside `[0, 1 + eps]` are rejected with the attainable
/// frontier in the error message.
pub fn solve_saturation(system: &SaturationSystem) -> Result<SaturationSolution> {
    system.validate()?;
    let c1 = gamma1(1.0, system.mu, system.k_of_w(system.m_r), system.k_r_abs);
    let c2 = gamma2_kernel(system)?;
    let (x1, x2) = match system.closure {
        Closure::TotalCompositeness(x_total) => {
            if (c1 - c2).abs() <= 1e-14 * c1.abs().max(c2.abs()) {
                return Err(Error::Infeasible(
                    "degenerate system: the two width kernels coincide".into(),
                ));
            }
            // X_1 + X_2 = X, c1 X_1 + c2 X_2 = Gamma.
            let x1 = (system.gamma - c2 * x_total) / (c1 - c2);
            (x1, x_total - x1)
        }
        Closure::BranchingFraction(b) => {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidConfig(format!(
                    "branching fraction must lie in [0, 1], got {b}"
                )));
            }
            (b * system.gamma / c1, (1.0 - b) * system.gamma / c2)
        }
    };
    let band = -system.epsilon..=(1.0 + system.epsilon);
    if !band.contains(&x1) || !band.contains(&x2) {
        return Err(Error::Infeasible(format!(
            "solution (X1, X2) = ({x1:.6}, {x2:.6}) outside [0, 1+{}]; attainable widths at the band edges: \
             Gamma(X1=0..1) = [{:.4}, {:.4}] MeV, Gamma(X2=0..1) = [{:.4}, {:.4}] MeV",
            system.epsilon,
            0.0,
            c1,
            0.0,
            c2
        )));
    }
    Ok(SaturationSolution {
        x1,
        x2,
        gamma1: c1 * x1,
        gamma2: c2 * x2,
        c1,
        c2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f0_like(closure: Closure) -> SaturationSystem {
        // A near-KbarK-threshold resonance decaying mostly to two pions.
        SaturationSystem {
            m_r: 980.0,
            gamma: 50.0,
            k_r_abs: 90.0,
            mu: 247.5,
            m_th1: 276.0,
            m1_a: 138.0,
            m1_b: 138.0,
            momentum_form: MomentumForm::Nonrelativistic,
            closure,
            epsilon: 0.05,
        }
    }

    #[test]
    fn gamma1_is_linear_and_vanishes_with_x() {
        assert_eq!(gamma1(0.0, 247.5, 400.0, 90.0), 0.0);
        let g = gamma1(0.3, 247.5, 400.0, 90.0);
        assert!((gamma1(0.6, 247.5, 400.0, 90.0) - 2.0 * g).abs() < 1e-12 * g);
        // MeV * MeV / MeV = MeV.
        assert!(g > 0.0);
    }

    #[test]
    fn gamma2_vanishes_with_x2_and_integral_is_stable() {
        let sys = f0_like(Closure::TotalCompositeness(0.8));
        assert_eq!(gamma2(0.0, &sys).unwrap(), 0.0);
        let k1 = gamma2_kernel(&sys).unwrap();
        assert!(k1 > 0.0);
    }

    #[test]
    fn narrow_limit_reduces_gamma2_to_the_gamma1_kernel() {
        // Gamma/(M_R - M_th) = 1e-3: the Lorentzian acts as 2 pi delta and
        // Gamma_2/X_2 -> 2 k(M_R)|k_R|/mu within 1%.
        let mut sys = f0_like(Closure::TotalCompositeness(1.0));
        sys.gamma = 1e-3 * (sys.m_r - sys.m_th1);
        let c2 = gamma2_kernel(&sys).unwrap();
        let c1 = gamma1(1.0, sys.mu, sys.k_of_w(sys.m_r), sys.k_r_abs);
        assert!(
            ((c2 - c1) / c1).abs() <= 0.01,
            "c2 = {c2}, c1 = {c1}, rel = {:e}",
            (c2 - c1) / c1
        );
    }

    #[test]
    fn round_trip_recovers_partial_compositeness() {
        let mut sys = f0_like(Closure::TotalCompositeness(0.0));
        let (x1_true, x2_true) = (0.55, 0.3);
        let c1 = gamma1(1.0, sys.mu, sys.k_of_w(sys.m_r), sys.k_r_abs);
        // Build a consistent Gamma by iterating, since the kernel depends on
        // Gamma itself.
        let mut gamma = 40.0;
        for _ in 0..60 {
            sys.gamma = gamma;
            let c2 = gamma2_kernel(&sys).unwrap();
            let new_gamma = c1 * x1_true + c2 * x2_true;
            if (new_gamma - gamma).abs() < 1e-12 * gamma {
                break;
            }
            gamma = new_gamma;
        }
        sys.gamma = gamma;
        sys.closure = Closure::TotalCompositeness(x1_true + x2_true);
        let sol = solve_saturation(&sys).unwrap();
        assert!((sol.x1 - x1_true).abs() <= 1e-8);
        assert!((sol.x2 - x2_true).abs() <= 1e-8);
        assert!((sol.gamma1 + sol.gamma2 - sys.gamma).abs() <= 1e-8 * sys.gamma);
    }

    #[test]
    fn branching_closure_distributes_widths() {
        let mut sys = f0_like(Closure::BranchingFraction(0.7));
        sys.gamma = 45.0;
        let sol = solve_saturation(&sys).unwrap();
        assert!((sol.gamma1 - 0.7 * 45.0).abs() < 1e-10);
        assert!((sol.gamma2 - 0.3 * 45.0).abs() < 1e-10);
        assert!(sol.x1 >= 0.0 && sol.x2 >= 0.0);
    }

    #[test]
    fn boundary_solution_x2_zero() {
        // Choose Gamma consistent with X = 1 carried entirely by channel 1.
        let mut sys = f0_like(Closure::TotalCompositeness(1.0));
        let c1 = gamma1(1.0, sys.mu, sys.k_of_w(sys.m_r), sys.k_r_abs);
        sys.gamma = c1;
        let sol = solve_saturation(&sys).unwrap();
        assert!((sol.x1 - 1.0).abs() <= 1e-9, "X1 = {}", sol.x1);
        assert!(sol.x2.abs() <= 1e-9, "X2 = {}", sol.x2);
    }

    #[test]
    fn infeasible_width_is_reported() {
        let mut sys = f0_like(Closure::TotalCompositeness(0.2));
        sys.gamma = 500.0;
        match solve_saturation(&sys) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("outside")),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn monotonicity_of_the_width_in_each_x() {
        let sys = f0_like(Closure::TotalCompositeness(1.0));
        let c1 = gamma1(1.0, sys.mu, sys.k_of_w(sys.m_r), sys.k_r_abs);
        let c2 = gamma2_kernel(&sys).unwrap();
        assert!(c1 > 0.0 && c2 > 0.0);
        for x in [0.1, 0.4, 0.9] {
            assert!(gamma1(x + 0.05, sys.mu, sys.k_of_w(sys.m_r), sys.k_r_abs)
                > gamma1(x, sys.mu, sys.k_of_w(sys.m_r), sys.k_r_abs));
        }
    }
}
