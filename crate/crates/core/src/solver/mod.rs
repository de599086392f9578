//! Time integration of the reformulated zero-Mach system
//!
//! `∂tρ + u·∇ρ - div(κ∇ρ) = 0`, `∂tu + (u + ∇b)·∇u + λ∇π = h`, `div u = 0`.
//!
//! Each step is a two-stage midpoint rule over `(ρ, u)`; the mean-diffusivity
//! part `κ̄Δρ` is carried by an exact integrating factor.

mod diagnostics;
mod parabolic;
mod picard;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientFields, CoefficientModel};
use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField, VectorField};
use crate::grid::Grid;
use crate::heat::{apply_heat_factor, deviation_flux_divergence};
use crate::lp::FilterBank;
use crate::ops;
use crate::pressure::{solve_pressure_from, PressureOptions};
use crate::scalar::Real;

pub use diagnostics::{check_energy_identities, DiagnosticsRecord, DiagnosticsRow, EnergyReport, MonitorParams};
pub use parabolic::{parabolic_trial, verify_parabolic_estimate, ParabolicReport, ParabolicTrial, PARABOLIC_DT, PARABOLIC_HORIZON};
pub use picard::{picard_window, PicardOptions, PicardOutcome, PicardTrace};

/// `(t, ρ, u)` with `u` divergence-free.
#[derive(Clone, Debug)]
pub struct State<T: Real> {
    pub t: T,
    pub rho: ScalarField<T>,
    pub u: VectorField<T>,
}

impl<T: Real> State<T> {
    pub fn new(t: T, rho: ScalarField<T>, u: VectorField<T>) -> Result<Self> {
        same_grid(rho.grid(), u.grid())?;
        Ok(Self { t, rho, u })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.rho.grid()
    }

    /// `½∫ρ|u|²`.
    pub fn kinetic_energy(&self) -> T {
        let m = self.u.dot(&self.u).expect("same grid");
        m.mul(&self.rho).expect("same grid").integral() / T::lit(2.0)
    }

    /// `½‖ρ - 1‖²_{L²}`.
    pub fn density_energy(&self) -> T {
        let n = self.rho.map(|r| r - T::one()).norm_l2();
        n * n / T::lit(2.0)
    }
}

/// Numerical settings shared by the integrators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub pressure: PressureOptions,
    /// `dt <= cfl · Δx / ‖u + ∇b‖_{L∞}`.
    pub cfl: f64,
    /// Allowed overshoot of the initial density bounds.
    pub tol_mp: f64,
    /// Bound on the relative spectral divergence of `u`.
    pub div_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pressure: PressureOptions::default(),
            cfl: 0.5,
            tol_mp: 1e-8,
            div_tol: 1e-10,
        }
    }
}

/// Right-hand sides and auxiliary fields at one stage.
#[derive(Clone, Debug)]
pub struct Stage<T: Real> {
    pub coeffs: CoefficientFields<T>,
    /// `D(u + ∇b)`.
    pub transport: VectorField<T>,
    pub h: VectorField<T>,
    pub pi: ScalarField<T>,
    pub pressure_iterations: usize,
    pub drho: ScalarField<T>,
    pub du: VectorField<T>,
}

/// `D((w·∇)u)`, the pressure solve for `div(λ∇π) = div(h - (w·∇)u)` and the
/// projected tendency `P[h - (w·∇)u - D(λ∇π)]`.
pub(crate) fn velocity_tendency<T: Real>(
    lambda: &ScalarField<T>,
    transport: &VectorField<T>,
    h: &VectorField<T>,
    u: &VectorField<T>,
    guess: &ScalarField<T>,
    popts: PressureOptions,
) -> Result<(VectorField<T>, ScalarField<T>, usize)> {
    let adv = ops::advect_vector(transport, u)?;
    let rhs = h.sub(&adv)?;
    let sol = solve_pressure_from(lambda, &rhs, guess, popts)?;
    let lgp = ops::dealias_vector(&ops::grad(&sol.pi).scale_by(lambda)?);
    let du = ops::leray(&rhs.sub(&lgp)?);
    Ok((du, sol.pi, sol.iterations))
}

/// `div(D((κ - κ̄)∇ρ)) - D(w·∇ρ)`.
pub(crate) fn density_tendency<T: Real>(
    kappa: &ScalarField<T>,
    kbar: T,
    rho: &ScalarField<T>,
    transport: &VectorField<T>,
) -> Result<ScalarField<T>> {
    let diff = deviation_flux_divergence(kappa, kbar, rho)?;
    diff.sub(&ops::advect(transport, rho)?)
}

/// `E_{τ}(a) + c · E_{τ}(b)` with `E_τ = e^{τκ̄Δ}`.
pub(crate) fn heat_combine<T: Real>(a: &ScalarField<T>, c: T, b: &ScalarField<T>, kbar: T, tau: T) -> Result<ScalarField<T>> {
    let mut x = a.clone();
    x.axpy(c, b)?;
    let mut s = x.to_spectrum();
    apply_heat_factor(&mut s, kbar, tau);
    Ok(s.to_field())
}

/// Primitive-variable integrator.
pub struct Solver<T: Real> {
    model: CoefficientModel,
    opts: SolverOptions,
    grid: Arc<Grid<T>>,
    bank: FilterBank<T>,
    bounds: Option<(T, T)>,
    pi_guess: ScalarField<T>,
}

impl<T: Real> Solver<T> {
    pub fn new(grid: &Arc<Grid<T>>, model: CoefficientModel, opts: SolverOptions) -> Result<Self> {
        model.validate()?;
        if !(opts.cfl > 0.0 && opts.tol_mp >= 0.0 && opts.div_tol > 0.0) {
            return Err(Error::Parameter("solver options must be positive".into()));
        }
        Ok(Self {
            model,
            opts,
            grid: grid.clone(),
            bank: FilterBank::new(grid),
            bounds: None,
            pi_guess: ScalarField::zeros(grid),
        })
    }

    pub fn model(&self) -> &CoefficientModel {
        &self.model
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn bank(&self) -> &FilterBank<T> {
        &self.bank
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// Density bounds enforced by the maximum-principle check.
    pub fn density_bounds(&self) -> Option<(T, T)> {
        self.bounds
    }

    /// Truncates the data to the retained band, checks admissibility and
    /// records the density bounds for the maximum-principle check.
    pub fn initialize(&mut self, state: &State<T>) -> Result<State<T>> {
        same_grid(&self.grid, state.grid())?;
        state.rho.check_finite("rho")?;
        state.u.check_finite("u")?;
        let rho = ops::dealias(&state.rho);
        let u = ops::dealias_vector(&state.u);
        self.model.check_density(&rho)?;
        let div = ops::relative_divergence(&u).to_f64_lossy();
        if div > self.opts.div_tol {
            return Err(Error::Precondition(format!("initial velocity has relative divergence {div:e}")));
        }
        self.bounds = Some((rho.min(), rho.max()));
        self.pi_guess = ScalarField::zeros(&self.grid);
        Ok(State { t: state.t, rho, u })
    }

    /// Tendencies at `(ρ, u)` with the step's mean diffusivity `κ̄`.
    pub fn evaluate(&mut self, rho: &ScalarField<T>, u: &VectorField<T>, kbar: T) -> Result<Stage<T>> {
        let coeffs = self.model.eval(rho)?;
        let transport = ops::dealias_vector(&u.add(&ops::grad(&coeffs.b))?);
        let h = self.model.source_h(rho, u)?;
        let (du, pi, iters) =
            velocity_tendency(&coeffs.lambda, &transport, &h, u, &self.pi_guess, self.opts.pressure)?;
        self.pi_guess = pi.clone();
        let drho = density_tendency(&coeffs.kappa, kbar, rho, u)?;
        Ok(Stage {
            coeffs,
            transport,
            h,
            pi,
            pressure_iterations: iters,
            drho,
            du,
        })
    }

    /// Mean diffusivity used by a step starting at `rho`.
    pub fn mean_kappa(&self, rho: &ScalarField<T>) -> T {
        self.model.kappa_field(rho).mean()
    }

    /// Largest admissible step for the given stage.
    pub fn cfl_limit(&self, stage: &Stage<T>) -> f64 {
        let speed = stage.transport.norm_inf().to_f64_lossy().max(1e-12);
        self.opts.cfl * self.grid.spacing().to_f64_lossy() / speed
    }

    pub fn step(&mut self, state: &State<T>, dt: T) -> Result<State<T>> {
        let kbar = self.mean_kappa(&state.rho);
        let stage0 = self.evaluate(&state.rho, &state.u, kbar)?;
        self.advance(state, &stage0, kbar, dt)
    }

    /// Completes a step whose first stage has been evaluated.
    pub fn advance(&mut self, state: &State<T>, stage0: &Stage<T>, kbar: T, dt: T) -> Result<State<T>> {
        Ok(self.advance_with_midpoint(state, stage0, kbar, dt)?.0)
    }

    /// [`Self::advance`], also returning the midpoint state and its stage.
    pub fn advance_with_midpoint(
        &mut self,
        state: &State<T>,
        stage0: &Stage<T>,
        kbar: T,
        dt: T,
    ) -> Result<(State<T>, State<T>, Stage<T>)> {
        if !(dt > T::zero()) {
            return Err(Error::Parameter(format!("time step {dt} must be positive")));
        }
        let limit = self.cfl_limit(stage0);
        if dt.to_f64_lossy() > limit {
            return Err(Error::Cfl {
                dt: dt.to_f64_lossy(),
                limit,
            });
        }
        let half = dt / T::lit(2.0);
        let rho_h = heat_combine(&state.rho, half, &stage0.drho, kbar, half)?;
        let mut u_h = state.u.clone();
        u_h.axpy(half, &stage0.du)?;
        let stage1 = self.evaluate(&rho_h, &u_h, kbar)?;
        let mut s = state.rho.to_spectrum();
        apply_heat_factor(&mut s, kbar, half);
        let rho = heat_combine(&s.to_field(), dt, &stage1.drho, kbar, half)?;
        let mut u = state.u.clone();
        u.axpy(dt, &stage1.du)?;
        let u = ops::leray(&u);
        let next = State {
            t: state.t + dt,
            rho,
            u,
        };
        self.check_invariants(&next)?;
        let mid = State {
            t: state.t + half,
            rho: rho_h,
            u: u_h,
        };
        Ok((next, mid, stage1))
    }

    fn check_invariants(&mut self, state: &State<T>) -> Result<()> {
        state.rho.check_finite("rho")?;
        state.u.check_finite("u")?;
        let (lo, hi) = *self.bounds.get_or_insert((state.rho.min(), state.rho.max()));
        let tol = T::lit(self.opts.tol_mp);
        let (rmin, rmax) = (state.rho.min(), state.rho.max());
        if rmin < lo - tol || rmax > hi + tol {
            return Err(Error::Stability(format!(
                "density range [{rmin}, {rmax}] leaves the initial range [{lo}, {hi}]"
            )));
        }
        let div = ops::relative_divergence(&state.u).to_f64_lossy();
        if div > self.opts.div_tol {
            return Err(Error::Stability(format!("relative divergence {div:e}")));
        }
        Ok(())
    }

    /// Integrates to `t_end` with fixed `dt`, sampling diagnostics every
    /// step. Step failures are returned as errors.
    pub fn run(&mut self, initial: &State<T>, t_end: T, dt: T, monitors: MonitorParams) -> Result<RunOutcome<T>> {
        let out = self.run_observed(initial, t_end, dt, monitors, |_, _, _| None)?;
        match &out.reason {
            StopReason::Failed(e) => Err(Error::State(e.clone())),
            _ => Ok(out),
        }
    }

    /// Like [`Self::run`], but an observer may stop the run early and step
    /// failures end the run with [`StopReason::Failed`].
    pub fn run_observed(
        &mut self,
        initial: &State<T>,
        t_end: T,
        dt: T,
        monitors: MonitorParams,
        mut observer: impl FnMut(&State<T>, &Stage<T>, &DiagnosticsRow) -> Option<String>,
    ) -> Result<RunOutcome<T>> {
        let steps = step_count_for(t_end, dt)?;
        let mut state = self.initialize(initial)?;
        let t0 = state.t;
        let mut record = DiagnosticsRecord::new(&self.bank, monitors);
        for k in 0..=steps {
            let kbar = self.mean_kappa(&state.rho);
            let stage0 = match self.evaluate(&state.rho, &state.u, kbar) {
                Ok(s) => s,
                Err(e) => return Ok(RunOutcome::failed(state, record, k, e)),
            };
            let row = record.push(&self.bank, &state, &stage0, &self.model)?.clone();
            if let Some(reason) = observer(&state, &stage0, &row) {
                return Ok(RunOutcome {
                    state,
                    record,
                    steps: k,
                    reason: StopReason::Observer(reason),
                });
            }
            if k == steps {
                break;
            }
            match self.advance_with_midpoint(&state, &stage0, kbar, dt) {
                Ok((mut next, mid, stage1)) => {
                    next.t = t0 + T::from_usize_lossy(k + 1) * dt;
                    record.push_midpoint(&mid, &stage1.h, &self.model)?;
                    state = next;
                }
                Err(e) => return Ok(RunOutcome::failed(state, record, k, e)),
            }
        }
        Ok(RunOutcome {
            state,
            record,
            steps,
            reason: StopReason::Completed,
        })
    }
}

/// Number of uniform steps covering `[0, t_end]`.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    step_count_rel(t_end, dt, 1e-9)
}

/// As [`step_count`], with the multiple check loosened to the precision of `T`.
pub fn step_count_for<T: Real>(t_end: T, dt: T) -> Result<usize> {
    let tol = (T::epsilon().to_f64_lossy() * 16.0).max(1e-9);
    step_count_rel(t_end.to_f64_lossy(), dt.to_f64_lossy(), tol)
}

fn step_count_rel(t_end: f64, dt: f64, tol: f64) -> Result<usize> {
    if !(dt > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Parameter(format!("need dt > 0 and t_end >= 0 (dt {dt}, t_end {t_end})")));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > tol * t_end.max(dt) {
        return Err(Error::Parameter(format!("t_end {t_end} is not a multiple of dt {dt}")));
    }
    Ok(steps as usize)
}

/// Why a run ended.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    Observer(String),
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct RunOutcome<T: Real> {
    /// Last successfully computed state.
    pub state: State<T>,
    pub record: DiagnosticsRecord,
    pub steps: usize,
    pub reason: StopReason,
}

impl<T: Real> RunOutcome<T> {
    fn failed(state: State<T>, record: DiagnosticsRecord, steps: usize, e: Error) -> Self {
        Self {
            state,
            record,
            steps,
            reason: StopReason::Failed(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SmoothFieldSampler;

    fn setup(n: usize) -> (Arc<Grid<f64>>, Solver<f64>) {
        let g = Grid::periodic(2, n).unwrap();
        let s = Solver::new(&g, CoefficientModel::constant(1.0), SolverOptions::default()).unwrap();
        (g, s)
    }

    #[test]
    fn rest_state_is_fixed() {
        let (g, mut s) = setup(32);
        let st = State::new(0.0, ScalarField::constant(&g, 1.0), VectorField::zeros(&g)).unwrap();
        let st = s.initialize(&st).unwrap();
        let next = s.step(&st, 0.01).unwrap();
        assert!(next.rho.sub(&st.rho).unwrap().norm_inf() < 1e-15);
        assert!(next.u.norm_inf() < 1e-15);
    }

    #[test]
    fn constant_density_stays_constant() {
        let (g, mut s) = setup(32);
        let u = SmoothFieldSampler::new(3).solenoidal(&g, 4).scale(0.5);
        let st = s.initialize(&State::new(0.0, ScalarField::constant(&g, 1.0), u).unwrap()).unwrap();
        let mut cur = st.clone();
        for _ in 0..10 {
            cur = s.step(&cur, 0.01).unwrap();
        }
        assert!(cur.rho.map(|r| r - 1.0).norm_inf() < 1e-13);
        assert!((cur.kinetic_energy() - st.kinetic_energy()).abs() < 1e-6 * st.kinetic_energy());
    }

    #[test]
    fn cfl_violation_is_reported() {
        let (g, mut s) = setup(32);
        let u = SmoothFieldSampler::new(3).solenoidal(&g, 4).scale(10.0);
        let st = s.initialize(&State::new(0.0, ScalarField::constant(&g, 1.0), u).unwrap()).unwrap();
        assert!(matches!(s.step(&st, 0.1), Err(Error::Cfl { .. })));
    }

    #[test]
    fn step_count_validation() {
        assert_eq!(step_count(0.5, 2.5e-3).unwrap(), 200);
        assert!(step_count(0.5, 0.3).is_err());
        assert!(step_count(0.5, 0.0).is_err());
    }
}
