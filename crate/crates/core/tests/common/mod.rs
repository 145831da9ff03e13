//! Shared oracle helpers for the integration tests. Everything here is
//! deliberately independent of the library's own quadrature and root-finding
//! paths: plain adaptive Simpson and closed-form algebra only.

#![allow(dead_code)]

use num_complex::Complex64;

/// Adaptive Simpson integration of a real function to absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(f, a, fa, m, fm, flm);
        let right = simpson(f, m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(f, a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

/// Complex-valued adaptive Simpson along a straight segment, via two real
/// integrations.
pub fn adaptive_simpson_complex(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
) -> Complex64 {
    let re = adaptive_simpson(&|x| f(x).re, a, b, tol);
    let im = adaptive_simpson(&|x| f(x).im, a, b, tol);
    Complex64::new(re, im)
}

/// Both roots of the ERE pole equation `-1/a + (r/2) k^2 - i k = 0`, solved
/// by the quadratic formula with the numerically stable root pairing.
pub fn ere_pole_roots(a: f64, r: f64) -> (Complex64, Complex64) {
    // (r/2) k^2 - i k - 1/a = 0.
    let qa = Complex64::new(0.5 * r, 0.0);
    let qb = Complex64::new(0.0, -1.0);
    let qc = Complex64::new(-1.0 / a, 0.0);
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    // Root with the larger |qb -+ disc| first to avoid cancellation.
    let denom = if (qb + disc).norm() >= (qb - disc).norm() {
        -(qb + disc) / 2.0
    } else {
        -(qb - disc) / 2.0
    };
    let k1 = denom / qa;
    let k2 = qc / denom;
    (k1, k2)
}

/// Richardson extrapolation to h -> 0 for samples f(h), f(h/2), f(h/4), ...
/// assuming an expansion in integer powers of h.
pub fn richardson(samples: &[Complex64]) -> Complex64 {
    let mut table: Vec<Complex64> = samples.to_vec();
    let n = table.len();
    for level in 1..n {
        let factor = 2f64.powi(level as i32);
        for i in 0..(n - level) {
            table[i] = (factor * table[i + 1] - table[i]) / (factor - 1.0);
        }
    }
    table[0]
}
