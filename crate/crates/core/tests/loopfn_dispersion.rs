//! Once-subtracted dispersion relation as an independent oracle for the
//! closed-form loop function: the discontinuity across the unitarity cut is
//! the two-body phase space, so
//!
//! ```text
//! G(s) - G(s0) = (s - s0)/pi * Int_{s_th}^inf  Im G(s'+i0) ds'
//!                                              / ((s' - s)(s' - s0))
//! ```
//!
//! must reproduce the closed form everywhere on the first sheet. The
//! integral is done with adaptive Simpson plus a 1/s' tail substitution,
//! entirely outside the library code paths.

mod common;

use common::adaptive_simpson;
use num_complex::Complex64;
use polekit::kinematics::{Channel, SheetSignature, SheetedPoint};
use polekit::loopfn::{self, SubtractionScheme, IM_G_SIGN};

fn rho(ch: &Channel, s: f64) -> f64 {
    let lam = (s - ch.threshold_s()) * (s - ch.pseudo_threshold_s());
    lam.max(0.0).sqrt() / (2.0 * s.sqrt()) / (8.0 * std::f64::consts::PI * s.sqrt())
}

fn g_closed(ch: &Channel, scheme: &SubtractionScheme, s: Complex64) -> Complex64 {
    let pt = SheetedPoint::mandelstam(s, SheetSignature::all_first(1));
    loopfn::g(ch, scheme, &pt, 0).unwrap()
}

/// Dispersion integral for complex s off the real axis (no principal value
/// needed). `s0` is the real subtraction point below threshold.
fn dispersion_offaxis(ch: &Channel, s: Complex64, s0: f64, tol: f64) -> Complex64 {
    let s_th = ch.threshold_s();
    let cut = 40.0 * s_th.max(s.norm());
    let im_g = |sp: f64| IM_G_SIGN * rho(ch, sp);
    let integrand_re = |sp: f64| (im_g(sp) / ((sp - s) * (sp - s0))).re;
    let integrand_im = |sp: f64| (im_g(sp) / ((sp - s) * (sp - s0))).im;
    let finite = Complex64::new(
        adaptive_simpson(&integrand_re, s_th, cut, tol),
        adaptive_simpson(&integrand_im, s_th, cut, tol),
    );
    // Tail: s' = cut/u maps [0,1] onto [cut, inf).
    let tail_re = |u: f64| {
        if u == 0.0 {
            // limit u->0 of Im G(s'/u)/.. * cut/u^2 = Im G(inf)/cut
            return IM_G_SIGN / (16.0 * std::f64::consts::PI) / cut;
        }
        let sp = cut / u;
        (Complex64::new(im_g(sp), 0.0) / ((sp - s) * (sp - s0))).re * cut / (u * u)
    };
    let tail_im = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        let sp = cut / u;
        (Complex64::new(im_g(sp), 0.0) / ((sp - s) * (sp - s0))).im * cut / (u * u)
    };
    let tail = Complex64::new(
        adaptive_simpson(&tail_re, 0.0, 1.0, tol),
        adaptive_simpson(&tail_im, 0.0, 1.0, tol),
    );
    (finite + tail) * (s - s0) / std::f64::consts::PI
}

/// Principal-value dispersion integral for real s on the cut, evaluated as
/// the s + i0 limit.
fn dispersion_on_cut(ch: &Channel, s: f64, s0: f64, tol: f64) -> Complex64 {
    let s_th = ch.threshold_s();
    let h = |sp: f64| IM_G_SIGN * rho(ch, sp) / (sp - s0);
    let hs = h(s);
    // Symmetric window around s kills the PV singularity exactly.
    let d = 0.5 * (s - s_th);
    let dh = (h(s + 1e-4 * d) - h(s - 1e-4 * d)) / (2e-4 * d);
    let reg = |sp: f64| {
        if (sp - s).abs() < 1e-9 * s {
            dh
        } else {
            (h(sp) - hs) / (sp - s)
        }
    };
    let window = adaptive_simpson(&reg, s - d, s + d, tol);
    let left = adaptive_simpson(&|sp| h(sp) / (sp - s), s_th, s - d, tol);
    let cut = 40.0 * s_th.max(s);
    let right = adaptive_simpson(&|sp| h(sp) / (sp - s), s + d, cut, tol);
    let tail = adaptive_simpson(
        &|u: f64| {
            if u == 0.0 {
                return IM_G_SIGN / (16.0 * std::f64::consts::PI) / cut;
            }
            let sp = cut / u;
            h(sp) / (sp - s) * cut / (u * u)
        },
        0.0,
        1.0,
        tol,
    );
    let pv = window + left + right + tail;
    let real_part = (s - s0) / std::f64::consts::PI * pv;
    Complex64::new(real_part, IM_G_SIGN * rho(ch, s))
}

#[test]
fn closed_form_matches_dispersion_integral_on_the_cut() {
    let ch = Channel::new(138.0, 138.0, 0, "S").unwrap();
    let scheme = SubtractionScheme::new(-1.0, 1000.0).unwrap();
    let s0 = 0.4 * ch.threshold_s();
    let g0 = g_closed(&ch, &scheme, Complex64::new(s0, 0.0));
    assert!(g0.im.abs() < 1e-14);

    let s = 600.0 * 600.0;
    let oracle = g0 + dispersion_on_cut(&ch, s, s0, 1e-14);
    let closed = g_closed(&ch, &scheme, Complex64::new(s, 0.0));
    let rel = (closed - oracle).norm() / closed.norm();
    assert!(
        rel <= 1e-8,
        "closed = {closed}, dispersive = {oracle}, rel = {rel:e}"
    );
}

#[test]
fn closed_form_matches_dispersion_integral_off_axis() {
    let ch = Channel::new(138.0, 138.0, 0, "S").unwrap();
    let scheme = SubtractionScheme::new(-1.0, 1000.0).unwrap();
    let s0 = 0.4 * ch.threshold_s();
    let g0 = g_closed(&ch, &scheme, Complex64::new(s0, 0.0));

    for s in [
        Complex64::new(2.0e5, 7.0e4),
        Complex64::new(2.0e5, -7.0e4),
        Complex64::new(3.5e4, 2.0e4),
        Complex64::new(6.0e5, -1.5e5),
        Complex64::new(1.2e5, 3.0e3),
    ] {
        let oracle = g0 + dispersion_offaxis(&ch, s, s0, 1e-14);
        let closed = g_closed(&ch, &scheme, s);
        let rel = (closed - oracle).norm() / closed.norm();
        assert!(
            rel <= 1e-8,
            "s = {s}: closed = {closed}, dispersive = {oracle}, rel = {rel:e}"
        );
    }
}

#[test]
fn unequal_masses_match_dispersion_integral() {
    let ch = Channel::new(493.7, 138.0, 0, "S").unwrap();
    let scheme = SubtractionScheme::new(-1.8, 1200.0).unwrap();
    let s0 = 0.5 * ch.threshold_s();
    let g0 = g_closed(&ch, &scheme, Complex64::new(s0, 0.0));
    for s in [
        Complex64::new(1.4 * ch.threshold_s(), 0.3 * ch.threshold_s()),
        Complex64::new(2.2 * ch.threshold_s(), -0.4 * ch.threshold_s()),
    ] {
        let oracle = g0 + dispersion_offaxis(&ch, s, s0, 1e-14);
        let closed = g_closed(&ch, &scheme, s);
        let rel = (closed - oracle).norm() / closed.norm();
        assert!(rel <= 1e-8, "s = {s}: rel = {rel:e}");
    }
}
