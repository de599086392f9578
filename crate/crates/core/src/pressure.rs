//! Variable-coefficient elliptic pressure equation `div(λ∇π) = div(rhs)`.
//!
//! The solver is a Richardson iteration preconditioned by `Δ⁻¹ρ`, `ρ = 1/λ`:
//!
//! `π ← π + ω Δ⁻¹[ρ (div rhs - div(λ∇π))]`
//!
//! which for `ω = 1` is the fixed point `Δπ = ρ div rhs + ∇log ρ · ∇π` with
//! the mean projected out. The relaxation factor starts at one and is halved
//! whenever the residual grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField, VectorField};
use crate::ops;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureOptions {
    /// Relative residual target, or absolute when `div rhs = 0`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PressureOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PressureSolution<T: Real> {
    /// Mean-zero pressure.
    pub pi: ScalarField<T>,
    pub iterations: usize,
    pub residual: f64,
}

const MIN_RELAXATION: f64 = 1.0 / 1024.0;

/// `div(λ∇π)` without dealiasing.
pub fn elliptic_operator<T: Real>(lambda: &ScalarField<T>, pi: &ScalarField<T>) -> Result<ScalarField<T>> {
    Ok(ops::div(&ops::grad(pi).scale_by(lambda)?))
}

pub fn solve_pressure<T: Real>(
    lambda: &ScalarField<T>,
    rhs: &VectorField<T>,
    opts: PressureOptions,
) -> Result<PressureSolution<T>> {
    solve_pressure_from(lambda, rhs, &ScalarField::zeros(lambda.grid()), opts)
}

/// Same as [`solve_pressure`] starting from `guess`.
pub fn solve_pressure_from<T: Real>(
    lambda: &ScalarField<T>,
    rhs: &VectorField<T>,
    guess: &ScalarField<T>,
    opts: PressureOptions,
) -> Result<PressureSolution<T>> {
    same_grid(lambda.grid(), rhs.grid())?;
    same_grid(lambda.grid(), guess.grid())?;
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("pressure tolerance {} must be positive", opts.tol)));
    }
    lambda.check_finite("lambda")?;
    rhs.check_finite("rhs")?;
    let lmin = lambda.min();
    if !(lmin > T::zero()) {
        return Err(Error::Precondition(format!(
            "elliptic coefficient must be positive (min {lmin})"
        )));
    }
    let rho = lambda.map(|l| T::one() / l);
    let target = ops::div(rhs);
    let scale = target.norm_l2().to_f64_lossy();
    let measure = |r: &ScalarField<T>| {
        let a = r.norm_l2().to_f64_lossy();
        if scale > 0.0 {
            a / scale
        } else {
            a
        }
    };

    let mut pi = guess.map(|v| v);
    let mean = pi.mean();
    pi = pi.map(|v| v - mean);
    let mut res_field = target.sub(&elliptic_operator(lambda, &pi)?)?;
    let mut res = measure(&res_field);
    let mut omega = 1.0;
    let mut iterations = 0;
    while res > opts.tol {
        if iterations >= opts.max_iter || omega < MIN_RELAXATION {
            return Err(Error::Convergence {
                iterations,
                residual: res,
            });
        }
        iterations += 1;
        let corr = ops::inverse_laplacian_spectrum(&res_field.mul(&rho)?.to_spectrum()).to_field();
        let mut trial = pi.clone();
        trial.axpy(T::lit(omega), &corr)?;
        let trial_res_field = target.sub(&elliptic_operator(lambda, &trial)?)?;
        let trial_res = measure(&trial_res_field);
        if !trial_res.is_finite() {
            return Err(Error::Convergence {
                iterations,
                residual: trial_res,
            });
        }
        if trial_res > res {
            omega *= 0.5;
            continue;
        }
        pi = trial;
        res_field = trial_res_field;
        res = trial_res;
    }
    Ok(PressureSolution {
        pi,
        iterations,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::random::SmoothFieldSampler;

    #[test]
    fn unit_coefficient_one_application() {
        let g = Grid::<f64>::periodic(2, 32).unwrap();
        let rhs = SmoothFieldSampler::new(3).solenoidal(&g, 6).add(&ops::grad(&SmoothFieldSampler::new(4).mean_zero(&g, 6))).unwrap();
        let lambda = ScalarField::constant(&g, 1.0);
        let sol = solve_pressure(&lambda, &rhs, PressureOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        let direct = ops::inverse_laplacian(&ops::div(&rhs)).unwrap();
        assert!(sol.pi.sub(&direct).unwrap().norm_inf() < 1e-13);
    }

    #[test]
    fn manufactured_recovery() {
        let g = Grid::<f64>::periodic(2, 64).unwrap();
        let exact = SmoothFieldSampler::new(8).mean_zero(&g, 8);
        let lambda = ScalarField::from_fn(&g, |x| 1.0 / (1.0 + 0.3 * x[0].cos()));
        let rhs = ops::grad(&exact).scale_by(&lambda).unwrap();
        let sol = solve_pressure(&lambda, &rhs, PressureOptions { tol: 1e-12, max_iter: 200 }).unwrap();
        assert!(sol.pi.sub(&exact).unwrap().norm_inf() < 1e-8 * exact.norm_inf());
        assert!(sol.pi.mean().abs() < 1e-14);
    }

    #[test]
    fn divergence_free_rhs_and_errors() {
        let g = Grid::<f64>::periodic(2, 32).unwrap();
        let rhs = SmoothFieldSampler::new(1).solenoidal(&g, 5);
        let lambda = ScalarField::from_fn(&g, |x| 1.0 + 0.2 * x[1].sin());
        let sol = solve_pressure(&lambda, &rhs, PressureOptions::default()).unwrap();
        assert!(sol.pi.norm_inf() < 1e-10);
        let bad = ScalarField::from_fn(&g, |x| x[0].cos());
        assert!(matches!(
            solve_pressure(&bad, &rhs, PressureOptions::default()),
            Err(Error::Precondition(_))
        ));
        let grad_rhs = ops::grad(&SmoothFieldSampler::new(2).mean_zero(&g, 6));
        let hard = ScalarField::from_fn(&g, |x| 1.0 + 0.9 * x[0].cos());
        assert!(matches!(
            solve_pressure(&hard, &grad_rhs, PressureOptions { tol: 1e-14, max_iter: 3 }),
            Err(Error::Convergence { .. })
        ));
    }
}
