//! Complex root finding: damped Newton iteration with a Muller fallback.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Options for a complex root search.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub max_iters: usize,
    /// Converged when |dz| <= step_rel_tol * max(|z|, scale).
    pub step_rel_tol: f64,
    /// ... and |f(z)| <= objective_rel_tol * |f(start)|.
    pub objective_rel_tol: f64,
    /// Floor for the step-size convergence scale.
    pub scale: f64,
    /// Reflect an upper-half-plane result into the lower half plane and
    /// re-polish (resonance searches on Schwarz-symmetric sheets).
    pub enforce_lower_half: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_iters: 80,
            step_rel_tol: 1e-10,
            objective_rel_tol: 1e-10,
            scale: 1.0,
            enforce_lower_half: false,
        }
    }
}

/// Outcome of a converged root search.
#[derive(Debug, Clone)]
pub struct RootResult {
    pub z: Complex64,
    /// |f(z)| at convergence.
    pub residual: f64,
    pub iterations: usize,
}

/// Newton iteration on `f`, using `fprime` when provided and a central
/// difference otherwise. Stagnation (three steps without a residual
/// decrease) switches to Muller's method on the last three iterates.
pub fn find_root<F, D>(
    f: &F,
    fprime: Option<&D>,
    start: Complex64,
    opts: &SearchOptions,
) -> Result<RootResult>
where
    F: Fn(Complex64) -> Result<Complex64>,
    D: Fn(Complex64) -> Result<Complex64>,
{
    let mut trace: Vec<String> = Vec::new();
    let f0_norm = f(start)?.norm().max(1e-300);

    let mut z = start;
    let mut fz = f(z)?;
    let mut history: Vec<(Complex64, Complex64)> = vec![(z, fz)];
    let mut stagnant = 0usize;

    for iter in 1..=opts.max_iters {
        let scale = z.norm().max(opts.scale);
        let deriv = match fprime {
            Some(d) => d(z)?,
            None => {
                let h = Complex64::new(1e-7 * scale, 0.0);
                (f(z + h)? - f(z - h)?) / (2.0 * h)
            }
        };
        if deriv.norm() == 0.0 {
            return Err(Error::SearchFailed {
                reason: "vanishing derivative".into(),
                trace,
            });
        }
        let mut step = -fz / deriv;
        // Damp unreasonably large steps; keeps the iteration inside the
        // analyticity domain around the start.
        let max_step = 0.5 * scale;
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        let z_new = z + step;
        let f_new = f(z_new)?;
        trace.push(format!(
            "newton {iter}: z = {z_new}, |f| = {:.3e}",
            f_new.norm()
        ));

        if f_new.norm() >= fz.norm() {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        let converged_step = step.norm() <= opts.step_rel_tol * z_new.norm().max(opts.scale);
        let converged_obj = f_new.norm() <= opts.objective_rel_tol * f0_norm;
        z = z_new;
        fz = f_new;
        history.push((z, fz));

        if converged_step && converged_obj {
            return finish(f, z, fz.norm(), iter, opts, trace);
        }
        if stagnant >= 3 && history.len() >= 3 {
            let pts: Vec<(Complex64, Complex64)> =
                history[history.len() - 3..].to_vec();
            match muller(f, &pts, opts, &mut trace) {
                Ok(res) => {
                    if res.residual <= opts.objective_rel_tol * f0_norm {
                        return finish(f, res.z, res.residual, iter + res.iterations, opts, trace);
                    }
                    z = res.z;
                    fz = f(z)?;
                    history.push((z, fz));
                    stagnant = 0;
                }
                Err(_) => {
                    stagnant = 0;
                }
            }
        }
    }
    Err(Error::SearchFailed {
        reason: format!(
            "no convergence in {} iterations (|f| = {:.3e}, needed {:.3e})",
            opts.max_iters,
            fz.norm(),
            opts.objective_rel_tol * f0_norm
        ),
        trace: trace.into_iter().rev().take(8).collect(),
    })
}

fn finish<F>(
    f: &F,
    z: Complex64,
    residual: f64,
    iterations: usize,
    opts: &SearchOptions,
    trace: Vec<String>,
) -> Result<RootResult>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if opts.enforce_lower_half && z.im > opts.step_rel_tol * z.norm().max(opts.scale) {
        // The conjugate point is a root of equal residual on
        // Schwarz-symmetric sheets; polish it to machine accuracy.
        let mut opts2 = opts.clone();
        opts2.enforce_lower_half = false;
        let polished = find_root(f, None::<&F>, z.conj(), &opts2).map_err(|_| {
            Error::SearchFailed {
                reason: "converged to the upper-half mirror; conjugate polish failed".into(),
                trace,
            }
        })?;
        return Ok(RootResult {
            iterations: iterations + polished.iterations,
            ..polished
        });
    }
    Ok(RootResult {
        z,
        residual,
        iterations,
    })
}

/// Muller's method seeded with three points.
fn muller<F>(
    f: &F,
    seed: &[(Complex64, Complex64)],
    opts: &SearchOptions,
    trace: &mut Vec<String>,
) -> Result<RootResult>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let (mut z0, mut f0) = seed[0];
    let (mut z1, mut f1) = seed[1];
    let (mut z2, mut f2) = seed[2];
    for iter in 1..=opts.max_iters {
        let h1 = z1 - z0;
        let h2 = z2 - z1;
        if h1.norm() == 0.0 || h2.norm() == 0.0 {
            break;
        }
        let d1 = (f1 - f0) / h1;
        let d2 = (f2 - f1) / h2;
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc = (b * b - 4.0 * f2 * a).sqrt();
        let denom = if (b + disc).norm() > (b - disc).norm() {
            b + disc
        } else {
            b - disc
        };
        if denom.norm() == 0.0 {
            break;
        }
        let z3 = z2 - 2.0 * f2 / denom;
        let f3 = f(z3)?;
        trace.push(format!("muller {iter}: z = {z3}, |f| = {:.3e}", f3.norm()));
        let step = (z3 - z2).norm();
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f2;
        z2 = z3;
        f2 = f3;
        if step <= opts.step_rel_tol * z3.norm().max(opts.scale) {
            return Ok(RootResult {
                z: z2,
                residual: f2.norm(),
                iterations: iter,
            });
        }
    }
    Ok(RootResult {
        z: z2,
        residual: f2.norm(),
        iterations: opts.max_iters,
    })
}
