//! Empirical constant in the smoothing estimate for `∂tρ - div(κ∇ρ) = f`:
//!
//! `‖ρ‖_{L̃∞_t(B^s)} + ‖ρ‖_{L̃¹_t(B^{s+2})} <= C₁ e^{C₁K(t)} (‖ρ₀‖_{B^s} + ‖f‖_{L̃¹_t(B^s)})`
//!
//! with `K(t) = ∫(1 + ‖∇κ‖²_{L∞} + ‖∇κ‖_{B^s_{∞,r}}^{max(2/(1+s), 1)})`.

use std::sync::Arc;

use serde::Serialize;

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField};
use crate::grid::Grid;
use crate::heat::heat_step;
use crate::lp::{aggregate, BesovParams, Blocks, FilterBank, Lebesgue};
use crate::ops;
use crate::random::SmoothFieldSampler;
use crate::scalar::Real;

/// Horizon and step used by [`verify_parabolic_estimate`].
pub const PARABOLIC_HORIZON: f64 = 0.5;
pub const PARABOLIC_DT: f64 = 2.5e-3;
const BAND: usize = 8;

/// Fit for one data set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParabolicTrial {
    /// Smallest `C₁` for which the bound holds at every sampled time.
    pub c1: f64,
    /// Left side at the horizon.
    pub lhs: f64,
    /// `‖ρ₀‖_{B^s} + ‖f‖_{L̃¹(B^s)}` at the horizon.
    pub rhs: f64,
    /// `K` at the horizon.
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParabolicReport {
    pub s: f64,
    pub r: f64,
    pub n: usize,
    pub trials: Vec<ParabolicTrial>,
    pub max_c1: f64,
}

/// Smallest `c >= 0` with `c e^{cK} >= q`.
fn fit_constant(q: f64, k: f64) -> f64 {
    if !(q > 0.0) {
        return 0.0;
    }
    let g = |c: f64| c * (c * k).exp();
    let mut hi = q.max(1.0);
    while g(hi) < q {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= q {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    hi
}

/// Integrates the linear equation with steady `κ` and `f` over
/// `[0, t_end]` and fits `C₁`.
#[allow(clippy::too_many_arguments)]
pub fn parabolic_trial<T: Real>(
    bank: &FilterBank<T>,
    rho0: &ScalarField<T>,
    f: &ScalarField<T>,
    kappa: &ScalarField<T>,
    s: f64,
    r: f64,
    t_end: f64,
    dt: f64,
) -> Result<ParabolicTrial> {
    for x in [rho0, f, kappa] {
        same_grid(bank.grid(), x.grid())?;
    }
    let params = BesovParams::new(s, Lebesgue::Inf, r)?;
    let steps = crate::solver::step_count(t_end, dt)?;
    let lossy = |x: T| x.to_f64_lossy();

    let grad_kappa = ops::grad(kappa);
    let kexp = (2.0 / (1.0 + s)).max(1.0);
    let k_rate = 1.0
        + lossy(grad_kappa.norm_inf()).powi(2)
        + lossy(bank.besov_norm_vector(&grad_kappa, params)?).powf(kexp);
    let f_norm = lossy(bank.besov_norm(f, params)?);
    let rho0_norm = lossy(bank.besov_norm(rho0, params)?);

    let blocks = |x: &ScalarField<T>| -> Result<Vec<(i32, f64)>> {
        Ok(bank
            .block_norms(x, Lebesgue::Inf, Blocks::Inhomogeneous)?
            .into_iter()
            .map(|(j, a)| (j, lossy(a)))
            .collect())
    };
    let mut rho = rho0.clone();
    let mut prev = blocks(&rho)?;
    let mut sup = prev.clone();
    let mut int: Vec<(i32, f64)> = prev.iter().map(|&(j, _)| (j, 0.0)).collect();
    let mut c1 = 0.0f64;
    let mut last = ParabolicTrial {
        c1: 0.0,
        lhs: 0.0,
        rhs: 0.0,
        k: 0.0,
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        if k > 0 {
            rho = heat_step(&rho, kappa, Some(f), T::lit(dt))?;
            rho.check_finite("rho")?;
            let cur = blocks(&rho)?;
            for ((acc, m), (&(_, a), &(_, b))) in int.iter_mut().zip(sup.iter_mut()).zip(prev.iter().zip(&cur)) {
                acc.1 += 0.5 * dt * (a + b);
                m.1 = m.1.max(b);
            }
            prev = cur;
        }
        let lhs = aggregate(&sup, s, r) + aggregate(&int, s + 2.0, r);
        let rhs = rho0_norm + t * f_norm;
        let kt = t * k_rate;
        let q = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        c1 = c1.max(fit_constant(q, kt));
        last = ParabolicTrial { c1, lhs, rhs, k: kt };
    }
    Ok(last)
}

/// Random ensemble: `ρ₀ = 1 + 0.2g`, `f = 0.5h` and `κ = κ(1 + 0.3w)` with
/// bounded band-limited `g, h, w`, over `[0, 0.5]` with `dt = 2.5·10⁻³`.
pub fn verify_parabolic_estimate<T: Real>(
    grid: &Arc<Grid<T>>,
    model: &CoefficientModel,
    s: f64,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<ParabolicReport> {
    if trials == 0 {
        return Err(Error::Parameter("trial count must be at least 1".into()));
    }
    model.validate()?;
    let bank = FilterBank::new(grid);
    let mut sampler = SmoothFieldSampler::new(seed);
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let rho0 = sampler.bounded(grid, BAND).map(|g| T::one() + T::lit(0.2) * g);
        let f = sampler.bounded(grid, BAND).scale(T::lit(0.5));
        let frozen = sampler.bounded(grid, BAND).map(|w| T::one() + T::lit(0.3) * w);
        model.check_density(&frozen)?;
        let kappa = model.kappa_field(&frozen);
        out.push(parabolic_trial(&bank, &rho0, &f, &kappa, s, r, PARABOLIC_HORIZON, PARABOLIC_DT)?);
    }
    let max_c1 = out.iter().map(|t| t.c1).fold(0.0, f64::max);
    Ok(ParabolicReport {
        s,
        r,
        n: grid.n(),
        trials: out,
        max_c1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_inverts_the_envelope() {
        assert_eq!(fit_constant(0.0, 1.0), 0.0);
        assert!((fit_constant(2.0, 0.0) - 2.0).abs() < 1e-12);
        let c = fit_constant(5.0, 0.7);
        assert!((c * (0.7 * c).exp() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn zero_data_holds_trivially() {
        let g = Grid::<f64>::periodic(2, 32).unwrap();
        let bank = FilterBank::new(&g);
        let z = ScalarField::zeros(&g);
        let k = ScalarField::constant(&g, 1.0);
        let t = parabolic_trial(&bank, &z, &z, &k, 1.0, 1.0, 0.05, 0.01).unwrap();
        assert_eq!(t.lhs, 0.0);
        assert_eq!(t.c1, 0.0);
    }

    #[test]
    fn single_mode_matches_closed_form() {
        let g = Grid::<f64>::periodic(2, 64).unwrap();
        let bank = FilterBank::new(&g);
        // |k| = 12 lies in block j = 3 only
        let rho0 = ScalarField::from_fn(&g, |x| (12.0 * x[0]).cos());
        let z = ScalarField::zeros(&g);
        let kappa = ScalarField::constant(&g, 0.01);
        let (t_end, dt) = (0.5, 1e-3);
        let t = parabolic_trial(&bank, &rho0, &z, &kappa, 1.0, 1.0, t_end, dt).unwrap();
        let rate = 0.01 * 144.0;
        let exact = 8.0 + 512.0 * (-(-rate * t_end).exp_m1()) / rate;
        assert!((t.lhs - exact).abs() < 1e-5 * exact, "{} {exact}", t.lhs);
        assert!((t.rhs - 8.0).abs() < 1e-12);
        assert!(t.c1 >= 1.0 && t.c1.is_finite());
    }
}
