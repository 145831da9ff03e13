//! The scalar two-body unitarity loop function `G_i(s)`, its second-sheet
//! value, and its analytic s-derivative.
//!
//! The once-subtracted form implemented here is
//!
//! ```text
//! G(s) = (1/16 pi^2) [ a(L) + ln(m1^2/L^2)
//!                      - x+ ln((x+ - 1)/x+) - x- ln((x- - 1)/x-) ]
//! x+- = (c +- sqrt(D)) / (2s),   c = s + m2^2 - m1^2,
//! D   = (s - (m1+m2)^2) (s - (m1-m2)^2)
//! ```
//!
//! with the Kallen function `D` kept in factored form so that no precision is
//! lost arbitrarily close to the branch points (the expanded `c^2 - 4 s m2^2`
//! cancels catastrophically there). Real-axis input is evaluated in the
//! `s + i0` limit; the `-i0` shift on `m2^2` in the definition of `x+-` then
//! amounts to placing `x+` above and `x-` below the log cut.
//!
//! Sign convention (fixed, asserted by tests): on the first sheet
//! `Im G(s + i0) = -rho(s)` above threshold, with `rho = p/(8 pi sqrt(s))`.
//! The second sheet is reached by adding the full discontinuity,
//! `G_II(s) = G_I(s) + 2 i rho_I(s)`, where `rho_I` uses the first-sheet
//! (`Im k >= 0`) momentum; this is the unique continuation that glues
//! `G_II(s - i eps)` to `G_I(s + i eps)` across the cut.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kinematics::{
    cm_momentum, phase_space, Channel, KinematicsMode, Sheet, SheetSignature, SheetedPoint,
};

/// Sign of `Im G(s+i0)` above threshold in units of `rho(s)`.
pub const IM_G_SIGN: f64 = -1.0;

/// Subtraction constant and regularization scale of the once-subtracted loop.
///
/// Only the combination `a(Lambda) - ln Lambda^2` is physical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubtractionScheme {
    pub a: f64,
    pub lambda: f64,
}

impl SubtractionScheme {
    pub fn new(a: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "regularization scale must be positive, got {lambda}"
            )));
        }
        Ok(SubtractionScheme { a, lambda })
    }

    /// Same loop function expressed at a different scale.
    pub fn rescaled(&self, lambda_new: f64) -> Self {
        SubtractionScheme {
            a: self.a + (lambda_new * lambda_new / (self.lambda * self.lambda)).ln(),
            lambda: lambda_new,
        }
    }
}

const SIXTEEN_PI_SQ: f64 = 16.0 * PI * PI;

/// `ln((x-1)/x)` with the branch on the log cut resolved by `side` (+1 keeps
/// the `+i pi` limit, -1 the `-i pi` limit). Off the cut the principal value
/// is returned unchanged.
fn log_ratio(x: Complex64, side: f64) -> Result<Complex64> {
    let num = x - 1.0;
    if num.norm() == 0.0 || x.norm() == 0.0 {
        return Err(Error::AmbiguousBranch(format!(
            "log argument degenerate at x = {x}"
        )));
    }
    let ratio = num / x;
    if ratio.im == 0.0 && ratio.re < 0.0 {
        Ok(Complex64::new((-ratio.re).ln(), side * PI))
    } else {
        Ok(ratio.ln())
    }
}

/// The pair `x+, x-` together with `w = sqrt(D)`.
///
/// `x-` is obtained from the product identity `x+ x- = m2^2/s`, which avoids
/// the cancellation in `(c - w)` when `w ~ c`; when `Re c < 0` the roles are
/// swapped for the same reason.
pub(crate) fn x_plus_minus(
    channel: &Channel,
    s: Complex64,
) -> (Complex64, Complex64, Complex64) {
    let m1 = channel.m1();
    let m2 = channel.m2();
    let c = s + m2 * m2 - m1 * m1;
    let d = (s - channel.threshold_s()) * (s - channel.pseudo_threshold_s());
    let w = d.sqrt();
    // Principal sqrt keeps Im w and Im D with the same sign, which is the
    // -i0 prescription on m2^2 for s just above the real axis.
    let (x_plus, x_minus) = if c.re >= 0.0 {
        let big = c + w;
        (big / (2.0 * s), 2.0 * m2 * m2 / big)
    } else {
        let big = c - w;
        (2.0 * m2 * m2 / big, big / (2.0 * s))
    };
    (x_plus, x_minus, w)
}

fn check_mode(point: &SheetedPoint) -> Result<Complex64> {
    if point.mode != KinematicsMode::Relativistic {
        return Err(Error::InvalidConfig(
            "loop function G(s) is defined in relativistic kinematics".into(),
        ));
    }
    if point.value.norm() == 0.0 {
        return Err(Error::SingularKinematics("G(s) needs s != 0".into()));
    }
    Ok(point.value)
}

/// First-sheet loop function at complex s (real axis taken as `s + i0`).
pub(crate) fn g_first_sheet(
    channel: &Channel,
    scheme: &SubtractionScheme,
    s: Complex64,
) -> Result<Complex64> {
    let (x_plus, x_minus, _) = x_plus_minus(channel, s);
    let l_plus = log_ratio(x_plus, 1.0)?;
    let l_minus = log_ratio(x_minus, -1.0)?;
    let subtraction = scheme.a + (channel.m1() * channel.m1() / (scheme.lambda * scheme.lambda)).ln();
    Ok((subtraction - x_plus * l_plus - x_minus * l_minus) / SIXTEEN_PI_SQ)
}

/// First-sheet `dG/ds`, independent of the subtraction constant and scale.
pub(crate) fn dg_ds_first_sheet(channel: &Channel, s: Complex64) -> Result<Complex64> {
    let (x_plus, x_minus, w) = x_plus_minus(channel, s);
    let scale = channel.threshold_s().max(s.norm());
    if w.norm() * w.norm() < 1e-12 * scale * scale {
        return Err(Error::AmbiguousBranch(format!(
            "dG/ds evaluated at a kinematic branch point, s = {s}"
        )));
    }
    let d_prime = 2.0 * s - channel.threshold_s() - channel.pseudo_threshold_s();
    let mass_diff = channel.m1() * channel.m1() - channel.m2() * channel.m2();
    // x'_+- = [ (m1^2 - m2^2) +- (w' s - w) ] / (2 s^2), w' = D'/(2w).
    let odd = (d_prime / (2.0 * w)) * s - w;
    let two_s_sq = 2.0 * s * s;
    let dx_plus = (mass_diff + odd) / two_s_sq;
    let dx_minus = (mass_diff - odd) / two_s_sq;
    let term_plus = dx_plus * (log_ratio(x_plus, 1.0)? + 1.0 / (x_plus - 1.0));
    let term_minus = dx_minus * (log_ratio(x_minus, -1.0)? + 1.0 / (x_minus - 1.0));
    Ok(-(term_plus + term_minus) / SIXTEEN_PI_SQ)
}

fn rho_first_sheet(channel: &Channel, s: Complex64) -> Result<Complex64> {
    let pt = SheetedPoint::mandelstam(s, SheetSignature::all_first(1));
    phase_space(channel, &pt, 0)
}

/// `d rho_I / ds` with the first-sheet momentum branch.
fn drho_ds_first_sheet(channel: &Channel, s: Complex64) -> Result<Complex64> {
    let pt = SheetedPoint::mandelstam(s, SheetSignature::all_first(1));
    let k = cm_momentum(channel, &pt, 0)?.k;
    let scale = channel.threshold_s().max(s.norm());
    if k.norm() * k.norm() < 1e-12 * scale {
        return Err(Error::AmbiguousBranch(format!(
            "d rho/ds evaluated at a kinematic branch point, s = {s}"
        )));
    }
    let d = (s - channel.threshold_s()) * (s - channel.pseudo_threshold_s());
    let d_prime = 2.0 * s - channel.threshold_s() - channel.pseudo_threshold_s();
    // z = k^2 = D/(4s); rho = k/(8 pi sqrt(s)).
    let z_prime = d_prime / (4.0 * s) - d / (4.0 * s * s);
    let dk_ds = z_prime / (2.0 * k);
    Ok((dk_ds - k / (2.0 * s)) / (8.0 * PI * s.sqrt()))
}

/// Loop function of channel `channel_index` at a sheeted point.
pub fn g(
    channel: &Channel,
    scheme: &SubtractionScheme,
    point: &SheetedPoint,
    channel_index: usize,
) -> Result<Complex64> {
    let s = check_mode(point)?;
    let first = g_first_sheet(channel, scheme, s)?;
    match point.sheet.get(channel_index)? {
        Sheet::First => Ok(first),
        Sheet::Second => {
            let rho = rho_first_sheet(channel, s)?;
            Ok(first + 2.0 * Complex64::i() * rho)
        }
    }
}

/// Analytic `dG/ds` on the requested sheet.
pub fn dg_ds(
    channel: &Channel,
    scheme: &SubtractionScheme,
    point: &SheetedPoint,
    channel_index: usize,
) -> Result<Complex64> {
    let _ = scheme; // the derivative is scheme independent; kept for symmetry
    let s = check_mode(point)?;
    let first = dg_ds_first_sheet(channel, s)?;
    match point.sheet.get(channel_index)? {
        Sheet::First => Ok(first),
        Sheet::Second => Ok(first + 2.0 * Complex64::i() * drho_ds_first_sheet(channel, s)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pipi() -> (Channel, SubtractionScheme) {
        (
            Channel::new(138.0, 138.0, 0, "S").unwrap(),
            SubtractionScheme::new(-1.0, 1000.0).unwrap(),
        )
    }

    fn pt_first(s: Complex64) -> SheetedPoint {
        SheetedPoint::mandelstam(s, SheetSignature::all_first(1))
    }

    fn pt_second(s: Complex64) -> SheetedPoint {
        SheetedPoint::mandelstam(s, SheetSignature::all_second(1))
    }

    #[test]
    fn x_pm_collapse_at_threshold() {
        let ch = Channel::new(138.0, 138.0, 0, "S").unwrap();
        let s = Complex64::new(ch.threshold_s(), 0.0);
        let (xp, xm, _) = x_plus_minus(&ch, s);
        let expect = ch.m2() / (ch.m1() + ch.m2());
        assert!((xp - expect).norm() < 1e-12);
        assert!((xm - expect).norm() < 1e-12);

        let ch2 = Channel::new(494.0, 138.0, 0, "S").unwrap();
        let s2 = Complex64::new(ch2.threshold_s(), 0.0);
        let (xp2, xm2, _) = x_plus_minus(&ch2, s2);
        let expect2 = ch2.m2() / (ch2.m1() + ch2.m2());
        assert!((xp2 - expect2).norm() < 1e-10);
        assert!((xm2 - expect2).norm() < 1e-10);
    }

    #[test]
    fn imaginary_part_is_minus_rho_above_threshold() {
        let (ch, scheme) = pipi();
        for i in 1..=50 {
            let s = Complex64::new(ch.threshold_s() * (1.0 + 0.09 * i as f64), 0.0);
            let g_val = g(&ch, &scheme, &pt_first(s), 0).unwrap();
            let rho = rho_first_sheet(&ch, s).unwrap().re;
            assert!(
                (g_val.im - IM_G_SIGN * rho).abs() <= 1e-10 * rho,
                "s = {s}: Im G = {}, rho = {rho}",
                g_val.im
            );
        }
    }

    #[test]
    fn unequal_mass_unitarity() {
        let ch = Channel::new(493.7, 138.0, 0, "S").unwrap();
        let scheme = SubtractionScheme::new(-1.6, 1200.0).unwrap();
        for i in 1..=30 {
            let s = Complex64::new(ch.threshold_s() * (1.0 + 0.15 * i as f64), 0.0);
            let g_val = g(&ch, &scheme, &pt_first(s), 0).unwrap();
            let rho = rho_first_sheet(&ch, s).unwrap().re;
            assert!((g_val.im + rho).abs() <= 1e-10 * rho, "s = {s}");
        }
    }

    #[test]
    fn scale_invariance_of_compensated_scheme() {
        let (ch, scheme) = pipi();
        let rescaled = scheme.rescaled(500.0);
        for s in [
            Complex64::new(4.0e4, 0.0),
            Complex64::new(3.6e5, 0.0),
            Complex64::new(2.0e5, 7.0e4),
            Complex64::new(1.1e5, -3.0e4),
        ] {
            let g1 = g(&ch, &scheme, &pt_first(s), 0).unwrap();
            let g2 = g(&ch, &rescaled, &pt_first(s), 0).unwrap();
            assert!(
                (g1 - g2).norm() <= 1e-12 * g1.norm().max(1e-3),
                "s = {s}: {g1} vs {g2}"
            );
        }
    }

    #[test]
    fn derivative_is_scheme_independent() {
        let (ch, scheme) = pipi();
        let other = SubtractionScheme::new(2.75, 650.0).unwrap();
        let s = Complex64::new(2.9e5, 0.0);
        let d1 = dg_ds(&ch, &scheme, &pt_first(s), 0).unwrap();
        let d2 = dg_ds(&ch, &other, &pt_first(s), 0).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (ch, scheme) = pipi();
        for s in [
            Complex64::new(3.6e5, 0.0),
            Complex64::new(5.0e4, 0.0),
            Complex64::new(1.5e5, 4.0e4),
            Complex64::new(9.0e4, -2.0e4),
        ] {
            for sheet in [true, false] {
                let pt = |v: Complex64| if sheet { pt_first(v) } else { pt_second(v) };
                let h = 1e-6 * s.norm();
                // Step parallel to the real axis stays on the same side of
                // the cut for real-axis input.
                let f_plus = g(&ch, &scheme, &pt(s + h), 0).unwrap();
                let f_minus = g(&ch, &scheme, &pt(s - h), 0).unwrap();
                let fd = (f_plus - f_minus) / (2.0 * h);
                let an = dg_ds(&ch, &scheme, &pt(s), 0).unwrap();
                assert!(
                    (fd - an).norm() <= 1e-6 * an.norm(),
                    "s = {s}, first_sheet = {sheet}: fd = {fd}, analytic = {an}"
                );
            }
        }
    }

    #[test]
    fn second_sheet_glues_to_first_across_the_cut() {
        let (ch, scheme) = pipi();
        let s0 = 3.2e5;
        let mut residuals = Vec::new();
        for eps in [1.0, 0.1, 0.01] {
            let above = g(&ch, &scheme, &pt_first(Complex64::new(s0, eps)), 0).unwrap();
            let below = g(&ch, &scheme, &pt_second(Complex64::new(s0, -eps)), 0).unwrap();
            residuals.push((above - below).norm());
        }
        // Linear-in-eps mismatch must extrapolate to zero.
        let extrapolated = (10.0 * residuals[1] - residuals[0]) / 9.0;
        let g_scale = g(&ch, &scheme, &pt_first(Complex64::new(s0, 0.0)), 0)
            .unwrap()
            .norm();
        assert!(
            extrapolated <= 1e-8 * g_scale,
            "residuals: {residuals:?}, extrapolated {extrapolated:e}"
        );
        assert!(residuals[2] < residuals[1] && residuals[1] < residuals[0]);
    }

    #[test]
    fn values_stay_accurate_arbitrarily_close_to_threshold() {
        // The factored Kallen function keeps G finite-precision here; the
        // derivative legitimately diverges like 1/k but must match finite
        // differences.
        let (ch, scheme) = pipi();
        let s_th = ch.threshold_s();
        for delta in [1e-4, 1e-6, 1e-8] {
            let s = Complex64::new(s_th * (1.0 + delta), 0.0);
            let g_val = g(&ch, &scheme, &pt_first(s), 0).unwrap();
            assert!(g_val.is_finite(), "delta = {delta}");
            let rho = rho_first_sheet(&ch, s).unwrap().re;
            assert!((g_val.im + rho).abs() <= 1e-9 * rho.max(1e-12));
        }
    }

    #[test]
    fn branch_point_derivative_is_rejected() {
        let (ch, scheme) = pipi();
        let s = Complex64::new(ch.threshold_s(), 0.0);
        assert!(matches!(
            dg_ds(&ch, &scheme, &pt_first(s), 0),
            Err(Error::AmbiguousBranch(_))
        ));
    }

    proptest! {
        #[test]
        fn schwarz_reflection_off_the_cuts(
            m1 in 100.0f64..600.0,
            m2 in 100.0f64..600.0,
            re in 0.2f64..3.0,
            im in 0.05f64..2.0,
        ) {
            let ch = Channel::new(m1, m2, 0, "S").unwrap();
            let scheme = SubtractionScheme::new(-1.2, 900.0).unwrap();
            let s = Complex64::new(re * ch.threshold_s(), im * ch.threshold_s());
            let upper = g(&ch, &scheme, &pt_first(s), 0).unwrap();
            let lower = g(&ch, &scheme, &pt_first(s.conj()), 0).unwrap();
            prop_assert!((lower - upper.conj()).norm() <= 1e-12 * upper.norm().max(1e-6));
            let dup = dg_ds(&ch, &scheme, &pt_first(s), 0).unwrap();
            let dlo = dg_ds(&ch, &scheme, &pt_first(s.conj()), 0).unwrap();
            prop_assert!((dlo - dup.conj()).norm() <= 1e-12 * dup.norm().max(1e-12));
        }

        #[test]
        fn real_below_threshold_first_sheet_is_real(
            frac in 0.15f64..0.95,
        ) {
            let (ch, scheme) = pipi();
            let s = Complex64::new(frac * ch.threshold_s(), 0.0);
            let g_val = g(&ch, &scheme, &pt_first(s), 0).unwrap();
            prop_assert!(g_val.im.abs() <= 1e-14 * g_val.norm().max(1e-9));
        }
    }
}
