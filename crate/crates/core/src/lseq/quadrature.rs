//! Gauss-Legendre nodes/weights and the rational map onto (0, inf).

use std::f64::consts::PI;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on P_n with the Chebyshev initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let deriv = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, deriv)
}

/// Adaptive Simpson integration to an absolute tolerance; used for the
/// one-off spectral integrals where spectral quadrature buys nothing.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
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
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

/// Momentum grid `k = c (1 + x)/(1 - x)` mapping [-1, 1) onto (0, inf);
/// weights include the Jacobian `2c/(1 - x)^2`.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    pub k: Vec<f64>,
    pub w: Vec<f64>,
    pub scale: f64,
}

impl MomentumGrid {
    pub fn rational(n: usize, scale: f64) -> Self {
        let rule = GaussLegendre::new(n);
        let mut k = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for (x, wx) in rule.nodes.iter().zip(&rule.weights) {
            k.push(scale * (1.0 + x) / (1.0 - x));
            w.push(wx * 2.0 * scale / ((1.0 - x) * (1.0 - x)));
        }
        MomentumGrid { k, w, scale }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_nodes_match_known_values() {
        let rule = GaussLegendre::new(3);
        let expect = (0.6f64).sqrt();
        assert!((rule.nodes[0] + expect).abs() < 1e-14);
        assert!(rule.nodes[1].abs() < 1e-14);
        assert!((rule.nodes[2] - expect).abs() < 1e-14);
        assert!((rule.weights[1] - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_exactness() {
        // An n-point rule integrates monomials up to degree 2n-1 exactly.
        let n = 12;
        let rule = GaussLegendre::new(n);
        for p in 0..(2 * n) {
            let got: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * x.powi(p as i32))
                .sum();
            let expect = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert!((got - expect).abs() < 1e-13, "degree {p}: {got} vs {expect}");
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [2, 7, 50, 200] {
            let rule = GaussLegendre::new(n);
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn adaptive_simpson_handles_a_peaked_integrand() {
        let got = adaptive_simpson(&|x: f64| 1.0 / (x * x + 1e-4), -1.0, 1.0, 1e-12);
        let expect = 2.0 * (1.0f64 / 0.01).atan() / 0.01;
        assert!((got - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn mapped_grid_integrates_a_lorentzian_tail() {
        // int_0^inf dk / (k^2 + b^2) = pi/(2b).
        let grid = MomentumGrid::rational(200, 400.0);
        let b = 350.0;
        let got: f64 = grid
            .k
            .iter()
            .zip(&grid.w)
            .map(|(k, w)| w / (k * k + b * b))
            .sum();
        assert!((got - PI / (2.0 * b)).abs() < 1e-12 / b);
    }
}
