//! Variable-coefficient heat equation `∂tρ - div(κ∇ρ) = f`.
//!
//! The mean coefficient `κ̄` is integrated exactly through the factor
//! `e^{-κ̄|k|²t}`; the deviation `div((κ - κ̄)∇ρ)` and any forcing are
//! advanced explicitly with the midpoint rule in integrating-factor form.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField, Spectrum};
use crate::grid::Grid;
use crate::lp::{BesovParams, Blocks, CheminLernerAccumulator, FilterBank, Lebesgue, TimeExponent};
use crate::ops;
use crate::random::SmoothFieldSampler;
use crate::scalar::Real;

/// Applies `e^{-κ̄|k|²τ}` in place.
pub(crate) fn apply_heat_factor<T: Real>(s: &mut Spectrum<T>, kbar: T, tau: T) {
    let g = s.grid().clone();
    let k2 = g.deriv_k2();
    for (c, &k) in s.coeffs_mut().iter_mut().zip(k2) {
        *c *= (-kbar * k * tau).exp();
    }
}

/// One integrating-factor midpoint step for `∂tρ = κ̄Δρ + N(ρ, t)`.
pub fn imex_step<T: Real>(
    rho: &ScalarField<T>,
    kbar: T,
    t: T,
    dt: T,
    mut tendency: impl FnMut(&ScalarField<T>, T) -> Result<ScalarField<T>>,
) -> Result<ScalarField<T>> {
    let half = dt / T::lit(2.0);
    let n0 = tendency(rho, t)?;
    let mut stage = rho.clone();
    stage.axpy(half, &n0)?;
    let mut sh = stage.to_spectrum();
    apply_heat_factor(&mut sh, kbar, half);
    let rho_h = sh.to_field();
    let n1 = tendency(&rho_h, t + half)?;
    let mut s = rho.to_spectrum();
    apply_heat_factor(&mut s, kbar, half);
    let mut acc = s.to_field();
    acc.axpy(dt, &n1)?;
    let mut out = acc.to_spectrum();
    apply_heat_factor(&mut out, kbar, half);
    Ok(out.to_field())
}

/// `div(D((κ - κ̄)∇ρ))`.
pub fn deviation_flux_divergence<T: Real>(
    kappa: &ScalarField<T>,
    kbar: T,
    rho: &ScalarField<T>,
) -> Result<ScalarField<T>> {
    let flux = ops::grad(rho).scale_by(&kappa.map(|k| k - kbar))?;
    Ok(ops::div(&ops::dealias_vector(&flux)))
}

fn check_kappa<T: Real>(kappa: &ScalarField<T>) -> Result<T> {
    kappa.check_finite("kappa")?;
    let kmin = kappa.min();
    if !(kmin > T::zero()) {
        return Err(Error::Precondition(format!("diffusivity must be positive (min {kmin})")));
    }
    Ok(kappa.mean())
}

/// One step with a time-dependent forcing `f(t)`.
pub fn heat_step_forced<T: Real>(
    rho: &ScalarField<T>,
    kappa: &ScalarField<T>,
    t: T,
    dt: T,
    mut forcing: impl FnMut(T) -> Result<ScalarField<T>>,
) -> Result<ScalarField<T>> {
    same_grid(rho.grid(), kappa.grid())?;
    if !(dt > T::zero()) {
        return Err(Error::Parameter(format!("time step {dt} must be positive")));
    }
    let kbar = check_kappa(kappa)?;
    imex_step(rho, kbar, t, dt, |r, tt| {
        let mut n = deviation_flux_divergence(kappa, kbar, r)?;
        n.axpy(T::one(), &forcing(tt)?)?;
        Ok(n)
    })
}

/// One step with a forcing held fixed over the step (`None` for `f = 0`).
pub fn heat_step<T: Real>(
    rho: &ScalarField<T>,
    kappa: &ScalarField<T>,
    f: Option<&ScalarField<T>>,
    dt: T,
) -> Result<ScalarField<T>> {
    let zero = ScalarField::zeros(rho.grid());
    let f = f.unwrap_or(&zero);
    same_grid(rho.grid(), f.grid())?;
    heat_step_forced(rho, kappa, T::zero(), dt, |_| Ok(f.clone()))
}

/// Outcome of the heat-semigroup estimate check.
#[derive(Clone, Debug, Serialize)]
pub struct HeatSemigroupReport {
    /// Per-trial `LHS / RHS`; zero when both sides vanish.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// Time nodes clustered near `t = 0`, geometric in the bulk.
pub(crate) fn clustered_times(horizon: f64, intervals: usize) -> Vec<f64> {
    let beta = 10.0f64;
    let denom = beta.exp_m1();
    (0..=intervals)
        .map(|i| horizon * (beta * i as f64 / intervals as f64).exp_m1() / denom)
        .collect()
}

/// `‖F‖_{L̃∞_T(Ċ^s)} + ‖F‖_{L̃¹_T(Ċ^{s+2})}` over `‖f₀‖_{Ċ^s} + ‖f‖_{L̃¹_T(Ċ^s)}`
/// for the unit-diffusivity flow `F` driven by a steady `f`, evaluated mode
/// by mode in closed form.
pub fn heat_semigroup_ratio<T: Real>(
    bank: &FilterBank<T>,
    f0: &ScalarField<T>,
    f: &ScalarField<T>,
    s: f64,
    horizon: f64,
) -> Result<f64> {
    same_grid(bank.grid(), f0.grid())?;
    same_grid(bank.grid(), f.grid())?;
    if !(horizon > 0.0) {
        return Err(Error::Parameter(format!("horizon {horizon} must be positive")));
    }
    let kind = Blocks::Homogeneous;
    let p = BesovParams::sup(s, f64::INFINITY).homogeneous();
    let rhs = bank.besov_norm(f0, p)?.to_f64_lossy() + horizon * bank.besov_norm(f, p)?.to_f64_lossy();

    let g = bank.grid().clone();
    let k2 = g.deriv_k2().to_vec();
    let s0 = f0.to_spectrum();
    let sf = f.to_spectrum();
    let at = |t: f64| -> ScalarField<T> {
        let mut out = Spectrum::zeros(&g);
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            let k = k2[i].to_f64_lossy();
            if k > 0.0 {
                let decay = (-k * t).exp();
                let gain = -(-k * t).exp_m1() / k;
                *c = s0.coeffs()[i] * T::lit(decay) + sf.coeffs()[i] * T::lit(gain);
            }
        }
        out.to_field()
    };
    let mut sup = CheminLernerAccumulator::new(bank, TimeExponent::Inf, Lebesgue::Inf, kind);
    let mut l1 = CheminLernerAccumulator::new(bank, TimeExponent::One, Lebesgue::Inf, kind);
    let times = clustered_times(horizon, 128);
    let one = T::one();
    sup.push(bank, &at(0.0), one)?;
    for w in times.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        l1.push(bank, &at(mid), T::lit(w[1] - w[0]))?;
        sup.push(bank, &at(w[1]), one)?;
    }
    let lhs = sup.norm(s, f64::INFINITY)?.to_f64_lossy() + l1.norm(s + 2.0, f64::INFINITY)?.to_f64_lossy();
    if rhs == 0.0 {
        return Ok(if lhs == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(lhs / rhs)
}

/// Random ensemble of [`heat_semigroup_ratio`] with band `kmax` data.
pub fn verify_heat_semigroup<T: Real>(
    grid: &Arc<Grid<T>>,
    s: f64,
    trials: usize,
    seed: u64,
    kmax: usize,
) -> Result<HeatSemigroupReport> {
    if trials == 0 {
        return Err(Error::Parameter("trial count must be at least 1".into()));
    }
    let bank = FilterBank::new(grid);
    let mut sampler = SmoothFieldSampler::new(seed);
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let f0 = sampler.mean_zero(grid, kmax);
        let f = sampler.mean_zero(grid, kmax);
        ratios.push(heat_semigroup_ratio(&bank, &f0, &f, s, 1.0)?);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(HeatSemigroupReport { ratios, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient_decay_is_exact() {
        let g = Grid::<f64>::periodic(2, 32).unwrap();
        let rho = ScalarField::from_fn(&g, |x| (3.0 * x[0] - 2.0 * x[1]).cos());
        let kappa = ScalarField::constant(&g, 0.7);
        let dt = 0.05;
        let out = heat_step(&rho, &kappa, None, dt).unwrap();
        let expect = rho.scale((-0.7 * 13.0 * dt).exp());
        assert!(out.sub(&expect).unwrap().norm_inf() < 1e-14);
        let c = ScalarField::constant(&g, 1.3);
        let varying = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * x[1].sin());
        assert!(heat_step(&c, &varying, None, dt).unwrap().sub(&c).unwrap().norm_inf() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_kappa() {
        let g = Grid::<f64>::periodic(2, 16).unwrap();
        let rho = ScalarField::constant(&g, 1.0);
        let kappa = ScalarField::from_fn(&g, |x| x[0].sin());
        assert!(matches!(heat_step(&rho, &kappa, None, 0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn semigroup_zero_and_single_mode() {
        let g = Grid::<f64>::periodic(2, 64).unwrap();
        let bank = FilterBank::new(&g);
        let z = ScalarField::zeros(&g);
        assert_eq!(heat_semigroup_ratio(&bank, &z, &z, 0.5, 1.0).unwrap(), 0.0);
        // |k| = 12 is a single-block mode of j = 3
        let f0 = ScalarField::from_fn(&g, |x| (12.0 * x[0]).cos());
        let s = 0.5;
        let lhs = 2f64.powf(3.0 * s) + 2f64.powf(3.0 * (s + 2.0)) * (-(-144.0f64).exp_m1()) / 144.0;
        let rhs = 2f64.powf(3.0 * s);
        let r = heat_semigroup_ratio(&bank, &f0, &z, s, 1.0).unwrap();
        assert!((r - lhs / rhs).abs() < 1e-3 * lhs / rhs, "{r} {}", lhs / rhs);
    }
}
