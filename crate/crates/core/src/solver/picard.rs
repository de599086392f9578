//! Picard linearization over a short window.
//!
//! Iterate `n` solves the linear system with coefficients frozen at iterate
//! `n - 1` along its whole trajectory:
//!
//! `∂tϱⁿ + uⁿ⁻¹·∇ϱⁿ - div(κⁿ⁻¹∇ϱⁿ) = 0`,
//! `∂tuⁿ + (uⁿ⁻¹ - κⁿ⁻¹(ρⁿ)⁻¹∇ρⁿ)·∇uⁿ + λⁿ∇πⁿ = hⁿ⁻¹`,
//!
//! starting from `(ϱ⁰, u⁰, ∇π⁰) = (ϱ₀, u₀, 0)`. The time discretization is the
//! one of [`Solver::step`](crate::solver::Solver::step), so a fixed point of
//! the iteration is the direct integrator's trajectory.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::ops;
use crate::scalar::Real;
use crate::solver::{density_tendency, heat_combine, step_count, velocity_tendency, Solver, State};
use crate::heat::apply_heat_factor;

/// Per-iterate difference norms of the linearized sequence.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PicardTrace {
    /// `‖ϱⁿ - ϱⁿ⁻¹‖_{L∞(L²)}` over the window.
    pub delta_rho: Vec<f64>,
    /// `‖uⁿ - uⁿ⁻¹‖_{L∞(L²)}`.
    pub delta_u: Vec<f64>,
    /// `‖∇(πⁿ - πⁿ⁻¹)‖_{L¹(L²)}`.
    pub delta_grad_pi: Vec<f64>,
    /// `(δϱⁿ + δuⁿ) / (δϱⁿ⁻¹ + δuⁿ⁻¹)` for `n >= 2`.
    pub ratios: Vec<f64>,
    pub converged: bool,
}

impl PicardTrace {
    pub const CSV_HEADER: &'static str = "n,delta_rho,delta_u,delta_grad_pi,ratio";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for k in 0..self.delta_rho.len() {
            let ratio = if k == 0 { String::new() } else { self.ratios[k - 1].to_string() };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                k + 1,
                self.delta_rho[k],
                self.delta_u[k],
                self.delta_grad_pi[k],
                ratio
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PicardOptions {
    /// Window length `τ`.
    pub window: f64,
    /// Sub-step, the same as the outer integrator's.
    pub dt: f64,
    pub n_max: usize,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct PicardOutcome<T: Real> {
    /// Converged iterate at the end of the window.
    pub state: State<T>,
    pub trace: PicardTrace,
}

/// Node values at `t_k` and midpoint-stage values at `t_k + dt/2`.
struct Trajectory<T: Real> {
    rho: Vec<ScalarField<T>>,
    rho_half: Vec<ScalarField<T>>,
    u: Vec<VectorField<T>>,
    u_half: Vec<VectorField<T>>,
    pi: Vec<ScalarField<T>>,
}

impl<T: Real> Trajectory<T> {
    fn constant(state: &State<T>, steps: usize) -> Self {
        Self {
            rho: vec![state.rho.clone(); steps + 1],
            rho_half: vec![state.rho.clone(); steps],
            u: vec![state.u.clone(); steps + 1],
            u_half: vec![state.u.clone(); steps],
            pi: vec![ScalarField::zeros(state.grid()); steps],
        }
    }
}

fn max_l2_gap<F>(a: &[F], b: &[F], norm: impl Fn(&F, &F) -> Result<f64>) -> Result<f64> {
    let mut best = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        best = best.max(norm(x, y)?);
    }
    Ok(best)
}

/// One linearized solve over the window given the previous iterate.
fn iterate<T: Real>(solver: &Solver<T>, prev: &Trajectory<T>, dt: T) -> Result<Trajectory<T>> {
    let model = solver.model();
    let popts = solver.options().pressure;
    let steps = prev.rho_half.len();
    let half = dt / T::lit(2.0);

    let mut rho = Vec::with_capacity(steps + 1);
    let mut rho_half = Vec::with_capacity(steps);
    rho.push(prev.rho[0].clone());
    for k in 0..steps {
        model.check_density(&prev.rho[k])?;
        model.check_density(&prev.rho_half[k])?;
        let kappa0 = model.kappa_field(&prev.rho[k]);
        let kappa1 = model.kappa_field(&prev.rho_half[k]);
        let kbar = kappa0.mean();
        let n0 = density_tendency(&kappa0, kbar, &rho[k], &prev.u[k])?;
        let rh = heat_combine(&rho[k], half, &n0, kbar, half)?;
        let n1 = density_tendency(&kappa1, kbar, &rh, &prev.u_half[k])?;
        let mut s = rho[k].to_spectrum();
        apply_heat_factor(&mut s, kbar, half);
        rho.push(heat_combine(&s.to_field(), dt, &n1, kbar, half)?);
        rho_half.push(rh);
    }

    let stage = |rho_n: &ScalarField<T>,
                 rho_prev: &ScalarField<T>,
                 u_prev: &VectorField<T>,
                 u: &VectorField<T>,
                 guess: &ScalarField<T>|
     -> Result<(VectorField<T>, ScalarField<T>)> {
        model.check_density(rho_n)?;
        let lambda = rho_n.map(|r| T::one() / r);
        let w = model.kappa_field(rho_prev).mul(&lambda)?;
        let drift = ops::grad(rho_n).scale_by(&w)?;
        let transport = ops::dealias_vector(&u_prev.sub(&drift)?);
        let h = model.source_h(rho_prev, u_prev)?;
        let (du, pi, _) = velocity_tendency(&lambda, &transport, &h, u, guess, popts)?;
        Ok((du, pi))
    };

    let mut u = Vec::with_capacity(steps + 1);
    let mut u_half = Vec::with_capacity(steps);
    let mut pi = Vec::with_capacity(steps);
    u.push(prev.u[0].clone());
    for k in 0..steps {
        let (du0, p0) = stage(&rho[k], &prev.rho[k], &prev.u[k], &u[k], &prev.pi[k])?;
        let mut uh = u[k].clone();
        uh.axpy(half, &du0)?;
        let (du1, _) = stage(&rho_half[k], &prev.rho_half[k], &prev.u_half[k], &uh, &p0)?;
        let mut next = u[k].clone();
        next.axpy(dt, &du1)?;
        u.push(ops::leray(&next));
        u_half.push(uh);
        pi.push(p0);
    }
    Ok(Trajectory {
        rho,
        rho_half,
        u,
        u_half,
        pi,
    })
}

/// Runs the Picard iteration over `[t, t + window]`.
pub fn picard_window<T: Real>(solver: &mut Solver<T>, state: &State<T>, opts: PicardOptions) -> Result<PicardOutcome<T>> {
    if opts.n_max < 3 {
        return Err(Error::Parameter(format!("n_max = {} must be at least 3", opts.n_max)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance {} must be positive", opts.tol)));
    }
    let steps = step_count(opts.window, opts.dt)?;
    if steps == 0 {
        return Err(Error::Parameter("window shorter than one step".into()));
    }
    let start = solver.initialize(state)?;
    let dt = T::lit(opts.dt);
    let mut prev = Trajectory::constant(&start, steps);
    let mut trace = PicardTrace::default();
    let mut rising = 0;
    for n in 1..=opts.n_max {
        let next = iterate(solver, &prev, dt)?;
        let d_rho = max_l2_gap(&next.rho, &prev.rho, |a, b| Ok(a.sub(b)?.norm_l2().to_f64_lossy()))?;
        let d_u = max_l2_gap(&next.u, &prev.u, |a, b| Ok(a.sub(b)?.norm_l2().to_f64_lossy()))?;
        let mut d_pi = 0.0;
        for (a, b) in next.pi.iter().zip(&prev.pi) {
            d_pi += opts.dt * ops::grad(&a.sub(b)?).norm_l2().to_f64_lossy();
        }
        let total = d_rho + d_u;
        if !total.is_finite() {
            return Err(Error::NonFinite(format!("Picard iterate {n}")));
        }
        if n >= 2 {
            let before = trace.delta_rho[n - 2] + trace.delta_u[n - 2];
            let ratio = total / before;
            trace.ratios.push(ratio);
            rising = if ratio >= 1.0 { rising + 1 } else { 0 };
        }
        trace.delta_rho.push(d_rho);
        trace.delta_u.push(d_u);
        trace.delta_grad_pi.push(d_pi);
        prev = next;
        if total <= opts.tol {
            trace.converged = true;
            let state = State {
                t: start.t + T::from_usize_lossy(steps) * dt,
                rho: prev.rho[steps].clone(),
                u: prev.u[steps].clone(),
            };
            return Ok(PicardOutcome { state, trace });
        }
        if rising >= 2 {
            break;
        }
    }
    let iterations = trace.delta_rho.len();
    let last_ratio = trace.ratios.last().copied().unwrap_or(f64::NAN);
    Err(Error::Divergence {
        iterations,
        last_ratio,
        trace: Box::new(trace),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientModel;
    use crate::grid::Grid;
    use crate::solver::SolverOptions;

    #[test]
    fn rest_state_converges_at_first_iterate() {
        let g = Grid::<f64>::periodic(2, 16).unwrap();
        let mut s = Solver::new(&g, CoefficientModel::constant(1.0), SolverOptions::default()).unwrap();
        let st = State::new(0.0, ScalarField::constant(&g, 1.0), VectorField::zeros(&g)).unwrap();
        let out = picard_window(
            &mut s,
            &st,
            PicardOptions {
                window: 0.01,
                dt: 2.5e-3,
                n_max: 5,
                tol: 1e-12,
            },
        )
        .unwrap();
        assert!(out.trace.converged);
        assert_eq!(out.trace.delta_rho, vec![0.0]);
        assert_eq!(out.trace.delta_u, vec![0.0]);
        assert!(out.trace.ratios.is_empty());
    }
}
