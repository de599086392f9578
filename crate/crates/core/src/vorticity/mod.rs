//! Two-dimensional vorticity formulation
//!
//! `∂tω + div(vω) + ∇λ ∧ ∇Π = 0`, `v = u + ∇b`, `∇Π = ∇π + ∇(κ∂tρ)`,
//!
//! with `u = ū + ∇⊥Δ⁻¹ω` and the density advanced as in [`crate::solver`].
//! The mean flow `ū` is not conserved when the density varies; it follows
//! `dū/dt = -mean(v·∇v + λ∇Π)`.

mod lifespan;
mod transport;

use std::sync::Arc;

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField, VectorField};
use crate::grid::Grid;
use crate::heat::apply_heat_factor;
use crate::ops;
use crate::pressure::solve_pressure_from;
use crate::scalar::Real;
use crate::solver::{density_tendency, heat_combine, step_count_for, SolverOptions};

pub use lifespan::{
    lifespan_lower_bound, measure_lifespan, tail_fraction, LifespanConfig, LifespanInputs, LifespanTableRow,
    ProxyThresholds,
};
pub use transport::{verify_transport_growth, TransportGrowthReport, TransportSample, TransportSetup};

fn require_2d<T: Real>(g: &Grid<T>) -> Result<()> {
    if g.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: g.dim(),
        });
    }
    Ok(())
}

/// `ω = ∂₁u₂ - ∂₂u₁`.
pub fn curl2d<T: Real>(u: &VectorField<T>) -> Result<ScalarField<T>> {
    require_2d(u.grid())?;
    ops::partial(u.component(1), 0).sub(&ops::partial(u.component(0), 1))
}

/// `u = ∇⊥Δ⁻¹ω` for mean-zero `ω`.
pub fn biot_savart<T: Real>(omega: &ScalarField<T>) -> Result<VectorField<T>> {
    require_2d(omega.grid())?;
    ops::perp_grad(&ops::inverse_laplacian(omega)?)
}

/// `(t, ρ, ω, ū)`.
#[derive(Clone, Debug)]
pub struct VorticityState<T: Real> {
    pub t: T,
    pub rho: ScalarField<T>,
    pub omega: ScalarField<T>,
    pub mean_flow: [T; 2],
}

fn with_mean<T: Real>(omega: &ScalarField<T>, mean: [T; 2]) -> Result<VectorField<T>> {
    let u = biot_savart(omega)?;
    let comps = u
        .into_components()
        .into_iter()
        .zip(mean)
        .map(|(c, m)| c.map(|x| x + m))
        .collect();
    VectorField::from_components(comps)
}

impl<T: Real> VorticityState<T> {
    pub fn velocity(&self) -> Result<VectorField<T>> {
        with_mean(&self.omega, self.mean_flow)
    }
}

/// Two-stage integrator for `(ρ, ω)`.
pub struct VorticitySolver<T: Real> {
    model: CoefficientModel,
    opts: SolverOptions,
    grid: Arc<Grid<T>>,
    bounds: Option<(T, T)>,
    pi_guess: ScalarField<T>,
}

struct Rates<T: Real> {
    drho: ScalarField<T>,
    domega: ScalarField<T>,
    dmean: [T; 2],
    speed: T,
}

impl<T: Real> VorticitySolver<T> {
    pub fn new(grid: &Arc<Grid<T>>, model: CoefficientModel, opts: SolverOptions) -> Result<Self> {
        require_2d(grid)?;
        model.validate()?;
        Ok(Self {
            model,
            opts,
            grid: grid.clone(),
            bounds: None,
            pi_guess: ScalarField::zeros(grid),
        })
    }

    /// Builds the state from primitive data; `u` must be divergence-free.
    pub fn initialize(&mut self, t: T, rho: &ScalarField<T>, u: &VectorField<T>) -> Result<VorticityState<T>> {
        same_grid(&self.grid, rho.grid())?;
        same_grid(&self.grid, u.grid())?;
        let rho = ops::dealias(rho);
        let u = ops::dealias_vector(u);
        self.model.check_density(&rho)?;
        let div = ops::relative_divergence(&u).to_f64_lossy();
        if div > self.opts.div_tol {
            return Err(Error::Precondition(format!("initial velocity has relative divergence {div:e}")));
        }
        self.bounds = Some((rho.min(), rho.max()));
        self.pi_guess = ScalarField::zeros(&self.grid);
        let m = u.mean();
        Ok(VorticityState {
            t,
            omega: curl2d(&u)?,
            rho,
            mean_flow: [m[0], m[1]],
        })
    }

    fn rates(&mut self, rho: &ScalarField<T>, omega: &ScalarField<T>, mean: [T; 2], kbar: T) -> Result<Rates<T>> {
        let u = with_mean(omega, mean)?;
        let coeffs = self.model.eval(rho)?;
        let v = ops::dealias_vector(&u.add(&ops::grad(&coeffs.b))?);
        let h = self.model.source_h(rho, &u)?;
        let rhs = h.sub(&ops::advect_vector(&v, &u)?)?;
        let sol = solve_pressure_from(&coeffs.lambda, &rhs, &self.pi_guess, self.opts.pressure)?;
        self.pi_guess = sol.pi.clone();

        let drho = density_tendency(&coeffs.kappa, kbar, rho, &u)?;
        let mut rho_t = ops::laplacian(rho).scale(kbar);
        rho_t.axpy(T::one(), &drho)?;
        let mut big_pi = ops::dealias(&coeffs.kappa.mul(&rho_t)?);
        big_pi.axpy(T::one(), &sol.pi)?;
        let lgp = ops::dealias_vector(&ops::grad(&big_pi).scale_by(&coeffs.lambda)?);
        let flux = ops::dealias_vector(&v.scale_by(omega)?);
        let mut domega = ops::div(&flux).scale(-T::one());
        domega.axpy(-T::one(), &curl2d(&lgp)?)?;
        let accel = ops::advect_vector(&v, &v)?.add(&lgp)?.mean();
        Ok(Rates {
            drho,
            domega,
            dmean: [-accel[0], -accel[1]],
            speed: v.norm_inf(),
        })
    }

    pub fn step(&mut self, state: &VorticityState<T>, dt: T) -> Result<VorticityState<T>> {
        if !(dt > T::zero()) {
            return Err(Error::Parameter(format!("time step {dt} must be positive")));
        }
        let kbar = self.model.kappa_field(&state.rho).mean();
        let r0 = self.rates(&state.rho, &state.omega, state.mean_flow, kbar)?;
        let limit = self.opts.cfl * self.grid.spacing().to_f64_lossy() / r0.speed.to_f64_lossy().max(1e-12);
        if dt.to_f64_lossy() > limit {
            return Err(Error::Cfl {
                dt: dt.to_f64_lossy(),
                limit,
            });
        }
        let half = dt / T::lit(2.0);
        let rho_h = heat_combine(&state.rho, half, &r0.drho, kbar, half)?;
        let mut omega_h = state.omega.clone();
        omega_h.axpy(half, &r0.domega)?;
        let mean_h = [0, 1].map(|a| state.mean_flow[a] + half * r0.dmean[a]);
        let r1 = self.rates(&rho_h, &omega_h, mean_h, kbar)?;
        let mut s = state.rho.to_spectrum();
        apply_heat_factor(&mut s, kbar, half);
        let rho = heat_combine(&s.to_field(), dt, &r1.drho, kbar, half)?;
        let mut omega = state.omega.clone();
        omega.axpy(dt, &r1.domega)?;
        rho.check_finite("rho")?;
        omega.check_finite("omega")?;
        let (lo, hi) = *self.bounds.get_or_insert((state.rho.min(), state.rho.max()));
        let tol = T::lit(self.opts.tol_mp);
        if rho.min() < lo - tol || rho.max() > hi + tol {
            return Err(Error::Stability(format!(
                "density range [{}, {}] leaves the initial range [{lo}, {hi}]",
                rho.min(),
                rho.max()
            )));
        }
        Ok(VorticityState {
            t: state.t + dt,
            rho,
            omega,
            mean_flow: [0, 1].map(|a| state.mean_flow[a] + dt * r1.dmean[a]),
        })
    }

    /// Integrates to `t_end` with fixed `dt`.
    pub fn run(&mut self, initial: &VorticityState<T>, t_end: T, dt: T) -> Result<VorticityState<T>> {
        let steps = step_count_for(t_end, dt)?;
        let t0 = initial.t;
        let mut state = initial.clone();
        for k in 0..steps {
            state = self.step(&state, dt)?;
            state.t = t0 + T::from_usize_lossy(k + 1) * dt;
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SmoothFieldSampler;

    #[test]
    fn curl_of_shear_and_gradient() {
        let g = Grid::<f64>::periodic(2, 32).unwrap();
        let u = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
        let w = curl2d(&u).unwrap();
        let expect = ScalarField::from_fn(&g, |x| -x[1].cos());
        assert!(w.sub(&expect).unwrap().norm_inf() < 1e-13);
        let f = SmoothFieldSampler::new(2).mean_zero(&g, 8);
        assert!(curl2d(&ops::grad(&f)).unwrap().norm_inf() < 1e-13);
        let g3 = Grid::<f64>::periodic(3, 16).unwrap();
        assert!(matches!(curl2d(&VectorField::zeros(&g3)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn biot_savart_round_trip() {
        let g = Grid::<f64>::periodic(2, 64).unwrap();
        let psi = SmoothFieldSampler::new(9).mean_zero(&g, 12);
        let omega = ops::laplacian(&psi);
        let u = biot_savart(&omega).unwrap();
        let expect = ops::perp_grad(&psi).unwrap();
        assert!(u.sub(&expect).unwrap().norm_inf() < 1e-12);
        assert!(curl2d(&u).unwrap().sub(&omega).unwrap().norm_inf() < 1e-12);
        assert!(biot_savart(&ScalarField::zeros(&g)).unwrap().norm_inf() == 0.0);
        assert!(matches!(
            biot_savart(&ScalarField::constant(&g, 1.0)),
            Err(Error::Precondition(_))
        ));
    }
}
