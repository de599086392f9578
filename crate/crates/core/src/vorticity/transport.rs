//! Growth of a transported scalar under a compressible steady flow.
//!
//! For `∂tω + v·∇ω = g` the ratio
//!
//! `Q(t) = ‖ω(t)‖_{B⁰_{∞,1}} / ((‖ω₀‖_{B⁰_{∞,1}} + ∫‖g‖_{B⁰_{∞,1}})(1 + 𝒱(t)))`,
//! `𝒱(t) = ∫(‖∇v‖_{L∞} + ‖div v‖_{B^β_{∞,∞}})`,
//!
//! stays bounded, while the generic estimate only gives
//! `‖ω(t)‖ <= e^{V(t)}(‖ω₀‖ + ∫‖g‖)` with `V(t) = ∫‖∇v‖_{L∞}`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField, VectorField};
use crate::grid::Grid;
use crate::lp::{BesovParams, FilterBank};
use crate::ops;
use crate::random::SmoothFieldSampler;
use crate::scalar::Real;
use crate::solver::step_count;

/// `v = (A sin x₂, 0) + γ∇(cos x₁ cos x₂)` and a random `ω₀` of band
/// `band` and unit coefficient `ℓ¹` norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransportSetup {
    pub shear: f64,
    pub potential: f64,
    pub beta: f64,
    pub t_end: f64,
    pub dt: f64,
    pub band: usize,
    pub seed: u64,
}

impl Default for TransportSetup {
    fn default() -> Self {
        Self {
            shear: 1.0,
            potential: 0.25,
            beta: 1.0,
            t_end: 5.0,
            dt: 5e-3,
            band: 3,
            seed: 0,
        }
    }
}

impl TransportSetup {
    pub fn velocity<T: Real>(&self, grid: &Arc<Grid<T>>) -> VectorField<T> {
        let (a, c) = (self.shear, self.potential);
        VectorField::from_fn(grid, |x| {
            let (x1, x2) = (x[0].to_f64_lossy(), x[1].to_f64_lossy());
            [
                T::lit(a * x2.sin() - c * x1.sin() * x2.cos()),
                T::lit(-c * x1.cos() * x2.sin()),
                T::zero(),
            ]
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransportSample {
    pub t: f64,
    pub q: f64,
    /// `e^{V(t)} / (1 + 𝒱(t))`, the exponential bound in units of `Q`.
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportGrowthReport {
    pub n: usize,
    pub samples: Vec<TransportSample>,
    pub sup_q: f64,
    /// Envelope at the final time.
    pub envelope_final: f64,
    /// `𝒱` at the final time.
    pub calv_final: f64,
}

impl TransportGrowthReport {
    pub const CSV_HEADER: &'static str = "t,Q,envelope";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for s in &self.samples {
            out.push_str(&format!("{},{},{}\n", s.t, s.q, s.envelope));
        }
        out
    }
}

fn gradient_sup<T: Real>(v: &VectorField<T>) -> f64 {
    let mut acc = ScalarField::zeros(v.grid());
    for c in v.components() {
        for d in ops::grad(c).components() {
            acc = acc.zip_map(d, |a, b| a + b * b).expect("same grid");
        }
    }
    acc.norm_inf().sqrt().to_f64_lossy()
}

/// Integrates the transport equation with the midpoint rule and records
/// `Q(t)` at every step. `g = None` means no source.
pub fn verify_transport_growth<T: Real>(
    grid: &Arc<Grid<T>>,
    setup: &TransportSetup,
    g: Option<&ScalarField<T>>,
) -> Result<TransportGrowthReport> {
    if !(setup.beta > 0.0) {
        return Err(Error::Parameter(format!("beta = {} must be positive", setup.beta)));
    }
    let steps = step_count(setup.t_end, setup.dt)?;
    let bank = FilterBank::new(grid);
    let zero = ScalarField::zeros(grid);
    let g = g.unwrap_or(&zero);
    same_grid(grid, g.grid())?;
    let v = ops::dealias_vector(&setup.velocity(grid));
    let omega0 = SmoothFieldSampler::new(setup.seed).bounded(grid, setup.band);

    let b0 = BesovParams::sup(0.0, 1.0);
    let lossy = |x: T| x.to_f64_lossy();
    let grad_rate = gradient_sup(&v);
    let div_rate = lossy(bank.besov_norm(&ops::div(&v), BesovParams::sup(setup.beta, f64::INFINITY))?);
    let g_norm = lossy(bank.besov_norm(g, b0)?);
    let w0 = lossy(bank.besov_norm(&omega0, b0)?);

    let dt = T::lit(setup.dt);
    let half = dt / T::lit(2.0);
    let rate = |w: &ScalarField<T>| -> Result<ScalarField<T>> {
        let mut r = ops::advect(&v, w)?.scale(-T::one());
        r.axpy(T::one(), g)?;
        Ok(r)
    };
    let mut omega = omega0;
    let mut samples = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * setup.dt;
        if k > 0 {
            let mut mid = omega.clone();
            mid.axpy(half, &rate(&omega)?)?;
            omega.axpy(dt, &rate(&mid)?)?;
            omega.check_finite("omega")?;
        }
        let calv = t * (grad_rate + div_rate);
        let data = w0 + t * g_norm;
        let norm = lossy(bank.besov_norm(&omega, b0)?);
        let q = if data > 0.0 { norm / (data * (1.0 + calv)) } else { 0.0 };
        samples.push(TransportSample {
            t,
            q,
            envelope: (t * grad_rate).exp() / (1.0 + calv),
        });
    }
    let sup_q = samples.iter().map(|s| s.q).fold(0.0, f64::max);
    let last = samples.last().expect("at least one sample");
    Ok(TransportGrowthReport {
        n: grid.n(),
        envelope_final: last.envelope,
        calv_final: setup.t_end * (grad_rate + div_rate),
        sup_q,
        samples,
    })
}
