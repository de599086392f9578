//! Lifespan lower bound and the inhomogeneity sweep.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField, VectorField};
use crate::grid::Grid;
use crate::lp::{BesovParams, FilterBank};
use crate::ops;
use crate::scalar::Real;
use crate::solver::{MonitorParams, Solver, SolverOptions, State, StopReason};

/// Norms of the initial data and the constants `ℓ > 5`, `L > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LifespanInputs {
    /// `‖ϱ₀‖_{L²}`
    pub rho_l2: f64,
    /// `‖ϱ₀‖_{B¹_{∞,1}}`
    pub rho_b1: f64,
    /// `‖u₀‖_{L²} + ‖u₀‖_{B¹_{∞,1}}`
    pub u_norm: f64,
    pub ell: f64,
    pub big_l: f64,
}

impl LifespanInputs {
    /// Norms of `(ρ₀ - 1, u₀)`.
    pub fn from_data<T: Real>(
        bank: &FilterBank<T>,
        rho0: &ScalarField<T>,
        u0: &VectorField<T>,
        ell: f64,
        big_l: f64,
    ) -> Result<Self> {
        let pert = rho0.map(|r| r - T::one());
        let b1 = BesovParams::sup(1.0, 1.0);
        Ok(Self {
            rho_l2: pert.norm_l2().to_f64_lossy(),
            rho_b1: bank.besov_norm(&pert, b1)?.to_f64_lossy(),
            u_norm: u0.norm_l2().to_f64_lossy() + bank.besov_norm_vector(u0, b1)?.to_f64_lossy(),
            ell,
            big_l,
        })
    }

    /// `Γ₀ = 1 + ‖ϱ₀‖²_{L²} + ‖u₀‖_{L²∩B¹_{∞,1}}`.
    pub fn gamma0(&self) -> f64 {
        1.0 + self.rho_l2 * self.rho_l2 + self.u_norm
    }
}

/// `(L/Γ₀) log((L/Γ₀²) log(1 + L/((1 + R₀^ℓ)R₀)))` with `R₀ = ‖ϱ₀‖_{B¹_{∞,1}}`.
///
/// Returns zero where either logarithm is nonpositive and `+∞` for `R₀ = 0`.
pub fn lifespan_lower_bound(inputs: &LifespanInputs) -> Result<f64> {
    let LifespanInputs {
        rho_l2,
        rho_b1,
        u_norm,
        ell,
        big_l,
    } = *inputs;
    if !(ell > 5.0) {
        return Err(Error::Parameter(format!("exponent ell = {ell} must exceed 5")));
    }
    if !(big_l > 0.0 && big_l.is_finite()) {
        return Err(Error::Parameter(format!("constant L = {big_l} must be positive")));
    }
    for (name, v) in [("rho_l2", rho_l2), ("rho_b1", rho_b1), ("u_norm", u_norm)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!("{name} = {v} must be finite and nonnegative")));
        }
    }
    if rho_b1 == 0.0 {
        return Ok(f64::INFINITY);
    }
    let g0 = inputs.gamma0();
    let inner = (big_l / ((1.0 + rho_b1.powf(ell)) * rho_b1)).ln_1p();
    let outer = big_l / (g0 * g0) * inner;
    if !(outer > 1.0) {
        return Ok(0.0);
    }
    Ok(big_l / g0 * outer.ln())
}

/// Fraction of the spectral energy of `u` in the top third of the retained
/// band, `max|mᵢ| > 2N/3` with `N` the dealiasing cutoff.
pub fn tail_fraction<T: Real>(u: &VectorField<T>) -> f64 {
    let g = u.grid().clone();
    let cutoff = g.dealias_cutoff() as f64;
    let mut tail = 0.0;
    let mut total = 0.0;
    for c in u.components() {
        let s = c.to_spectrum();
        for (i, z) in s.coeffs().iter().enumerate() {
            let e = z.norm_sqr().to_f64_lossy();
            total += e;
            let m = g.lattice(i);
            let top = m[..g.dim()].iter().map(|v| v.abs()).max().unwrap_or(0) as f64;
            if 3.0 * top > 2.0 * cutoff {
                tail += e;
            }
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

fn max_gradient<T: Real>(u: &VectorField<T>) -> f64 {
    let grads: Vec<VectorField<T>> = u.components().iter().map(ops::grad).collect();
    let mut acc = ScalarField::zeros(u.grid());
    for gu in &grads {
        for c in gu.components() {
            acc = acc.zip_map(c, |a, b| a + b * b).expect("same grid");
        }
    }
    acc.norm_inf().sqrt().to_f64_lossy()
}

/// Stopping thresholds of the blow-up proxy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProxyThresholds {
    /// Fires when `‖∇u‖_{L∞} >= factor · (1 + ‖∇u₀‖_{L∞})`.
    pub gradient_factor: f64,
    /// Fires when [`tail_fraction`] exceeds this value.
    pub tail: f64,
}

impl Default for ProxyThresholds {
    fn default() -> Self {
        Self {
            gradient_factor: 10.0,
            tail: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LifespanConfig {
    pub model: CoefficientModel,
    pub options: SolverOptions,
    pub t_max: f64,
    pub dt: f64,
    pub thresholds: ProxyThresholds,
    pub ell: f64,
    pub big_l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LifespanTableRow {
    pub eps: f64,
    pub t_measured: f64,
    pub t_lb: f64,
    /// `no_blowup`, `gradient`, `tail` or `step_error: ...`.
    pub reason: String,
}

impl LifespanTableRow {
    pub const CSV_HEADER: &'static str = "eps,T_measured,T_lb,reason";

    pub fn csv_row(&self) -> String {
        let reason = self.reason.replace(['"', ','], ";");
        format!("{},{},{},{}", self.eps, self.t_measured, self.t_lb, reason)
    }
}

fn lifespan_row<T: Real>(
    grid: &Arc<Grid<T>>,
    config: &LifespanConfig,
    g: &ScalarField<T>,
    u0: &VectorField<T>,
    eps: f64,
) -> LifespanTableRow {
    let bank = FilterBank::new(grid);
    let rho0 = g.map(|x| T::one() + T::lit(eps) * x);
    let mut row = LifespanTableRow {
        eps,
        t_measured: 0.0,
        t_lb: f64::NAN,
        reason: String::new(),
    };
    let mut run = || -> Result<(f64, String)> {
        let inputs = LifespanInputs::from_data(&bank, &ops::dealias(&rho0), &ops::dealias_vector(u0), config.ell, config.big_l)?;
        row.t_lb = lifespan_lower_bound(&inputs)?;
        let mut solver = Solver::new(grid, config.model, config.options)?;
        let state = State::new(T::zero(), rho0.clone(), u0.clone())?;
        let th = config.thresholds;
        let mut reference = None;
        let out = solver.run_observed(
            &state,
            T::lit(config.t_max),
            T::lit(config.dt),
            MonitorParams::default(),
            |st, _, _| {
                let grad = max_gradient(&st.u);
                let base = *reference.get_or_insert(grad);
                if grad >= th.gradient_factor * (1.0 + base) {
                    return Some("gradient".to_string());
                }
                (tail_fraction(&st.u) > th.tail).then(|| "tail".to_string())
            },
        )?;
        let t = out.state.t.to_f64_lossy();
        Ok(match out.reason {
            StopReason::Completed => (t, "no_blowup".to_string()),
            StopReason::Observer(r) => (t, r),
            StopReason::Failed(e) => (t, format!("step_error: {e}")),
        })
    };
    match run() {
        Ok((t, reason)) => {
            row.t_measured = t;
            row.reason = reason;
        }
        Err(e) => row.reason = format!("step_error: {e}"),
    }
    row
}

/// Runs `ρ₀ = 1 + εg` with fixed `u₀` for every `ε` until the proxy fires
/// or `t_max` is reached. Rows are computed in parallel and returned in the
/// order of `eps`.
pub fn measure_lifespan<T: Real>(
    grid: &Arc<Grid<T>>,
    config: &LifespanConfig,
    g: &ScalarField<T>,
    u0: &VectorField<T>,
    eps: &[f64],
) -> Result<Vec<LifespanTableRow>> {
    same_grid(grid, g.grid())?;
    same_grid(grid, u0.grid())?;
    if eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::Parameter("amplitudes must be finite and nonnegative".into()));
    }
    if eps.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Parameter("amplitudes must be listed in descending order".into()));
    }
    Ok(eps
        .par_iter()
        .map(|&e| lifespan_row(grid, config, g, u0, e))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(rho_b1: f64) -> LifespanInputs {
        LifespanInputs {
            rho_l2: 0.0,
            rho_b1,
            u_norm: 1.0,
            ell: 6.0,
            big_l: 1.0,
        }
    }

    #[test]
    fn reference_value() {
        // evaluated independently in 50-digit arithmetic
        let t = lifespan_lower_bound(&inputs(0.01)).unwrap();
        assert!((t - 0.071_521_810_326_097_2).abs() < 1e-14, "{t}");
    }

    #[test]
    fn limits_and_errors() {
        assert_eq!(lifespan_lower_bound(&inputs(0.0)).unwrap(), f64::INFINITY);
        assert_eq!(lifespan_lower_bound(&inputs(1.0)).unwrap(), 0.0);
        let mut bad = inputs(0.1);
        bad.ell = 5.0;
        assert!(matches!(lifespan_lower_bound(&bad), Err(Error::Parameter(_))));
        bad.ell = 6.0;
        bad.big_l = 0.0;
        assert!(matches!(lifespan_lower_bound(&bad), Err(Error::Parameter(_))));
    }

    #[test]
    fn tail_of_low_and_high_modes() {
        let g = Grid::<f64>::periodic(2, 64).unwrap();
        let low = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
        assert!(tail_fraction(&low) < 1e-28);
        // cutoff 21, top third starts above 14
        let mixed = VectorField::from_fn(&g, |x| [x[1].sin() + (16.0 * x[1]).sin(), 0.0, 0.0]);
        assert!((tail_fraction(&mixed) - 0.5).abs() < 1e-12);
    }
}
