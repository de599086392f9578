//! Coefficient models `ρ ↦ (κ, a, b, λ)` and the change of variables
//! `u = v - ∇b(ρ)`.
//!
//! `a' = κ`, `b' = -κ/ρ`, `a(1) = b(1) = 0`, `λ = 1/ρ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Extremum, Result};
use crate::field::{same_grid, ScalarField, VectorField};
use crate::lp::{BesovParams, FilterBank};
use crate::ops;
use crate::scalar::Real;

/// Functional form of the diffusivity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KappaLaw {
    /// `κ = k₀`
    Const,
    /// `κ = k₀ρ`
    Linear,
}

/// A diffusivity law together with the density range on which it is used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub law: KappaLaw,
    pub k0: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

/// Pointwise coefficient fields.
#[derive(Clone, Debug)]
pub struct CoefficientFields<T: Real> {
    pub kappa: ScalarField<T>,
    pub a: ScalarField<T>,
    pub b: ScalarField<T>,
    pub lambda: ScalarField<T>,
}

const DEFAULT_RHO_MIN: f64 = 0.05;
const DEFAULT_RHO_MAX: f64 = 20.0;

impl CoefficientModel {
    pub fn constant(k0: f64) -> Self {
        Self {
            law: KappaLaw::Const,
            k0,
            rho_min: DEFAULT_RHO_MIN,
            rho_max: DEFAULT_RHO_MAX,
        }
    }

    pub fn linear(k0: f64) -> Self {
        Self {
            law: KappaLaw::Linear,
            k0,
            rho_min: DEFAULT_RHO_MIN,
            rho_max: DEFAULT_RHO_MAX,
        }
    }

    pub fn with_bounds(mut self, rho_min: f64, rho_max: f64) -> Self {
        self.rho_min = rho_min;
        self.rho_max = rho_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return Err(Error::Parameter(format!("k0 = {} must be positive", self.k0)));
        }
        if !(self.rho_min > 0.0 && self.rho_min < 1.0 && self.rho_max > 1.0 && self.rho_max.is_finite()) {
            return Err(Error::Parameter(format!(
                "density range [{}, {}] must satisfy 0 < rho_min < 1 < rho_max",
                self.rho_min, self.rho_max
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.law {
            KappaLaw::Const => "const",
            KappaLaw::Linear => "linear",
        }
    }

    /// `(κ∗, κ*)` on the admissible density range.
    pub fn kappa_bounds(&self) -> (f64, f64) {
        match self.law {
            KappaLaw::Const => (self.k0, self.k0),
            KappaLaw::Linear => (self.k0 * self.rho_min, self.k0 * self.rho_max),
        }
    }

    pub fn kappa<T: Real>(&self, rho: T) -> T {
        let k0 = T::lit(self.k0);
        match self.law {
            KappaLaw::Const => k0,
            KappaLaw::Linear => k0 * rho,
        }
    }

    pub fn a<T: Real>(&self, rho: T) -> T {
        let k0 = T::lit(self.k0);
        match self.law {
            KappaLaw::Const => k0 * (rho - T::one()),
            KappaLaw::Linear => k0 * (rho * rho - T::one()) / T::lit(2.0),
        }
    }

    pub fn b<T: Real>(&self, rho: T) -> T {
        let k0 = T::lit(self.k0);
        match self.law {
            KappaLaw::Const => -k0 * rho.ln(),
            KappaLaw::Linear => -k0 * (rho - T::one()),
        }
    }

    /// Checks `ρ_min <= ρ <= ρ_max` pointwise.
    pub fn check_density<T: Real>(&self, rho: &ScalarField<T>) -> Result<()> {
        rho.check_finite("rho")?;
        let lo = rho.min().to_f64_lossy();
        let hi = rho.max().to_f64_lossy();
        if lo < self.rho_min {
            return Err(Error::Bound {
                quantity: "rho".into(),
                extremum: Extremum::Min,
                value: lo,
                bound: self.rho_min,
            });
        }
        if hi > self.rho_max {
            return Err(Error::Bound {
                quantity: "rho".into(),
                extremum: Extremum::Max,
                value: hi,
                bound: self.rho_max,
            });
        }
        Ok(())
    }

    pub fn kappa_field<T: Real>(&self, rho: &ScalarField<T>) -> ScalarField<T> {
        rho.map(|r| self.kappa(r))
    }

    pub fn a_field<T: Real>(&self, rho: &ScalarField<T>) -> ScalarField<T> {
        rho.map(|r| self.a(r))
    }

    pub fn b_field<T: Real>(&self, rho: &ScalarField<T>) -> ScalarField<T> {
        rho.map(|r| self.b(r))
    }

    pub fn eval<T: Real>(&self, rho: &ScalarField<T>) -> Result<CoefficientFields<T>> {
        self.check_density(rho)?;
        Ok(CoefficientFields {
            kappa: self.kappa_field(rho),
            a: self.a_field(rho),
            b: self.b_field(rho),
            lambda: rho.map(|r| T::one() / r),
        })
    }

    /// `∇b(ρ)`, dealiased.
    pub fn grad_b<T: Real>(&self, rho: &ScalarField<T>) -> VectorField<T> {
        ops::dealias_vector(&ops::grad(&self.b_field(rho)))
    }

    /// `u = v - ∇b(ρ)`.
    pub fn to_reformulated<T: Real>(&self, rho: &ScalarField<T>, v: &VectorField<T>) -> Result<VectorField<T>> {
        same_grid(rho.grid(), v.grid())?;
        v.sub(&self.grad_b(rho))
    }

    /// `u = v + κρ⁻¹∇ρ`, the chain-rule form of [`Self::to_reformulated`].
    pub fn to_reformulated_chain<T: Real>(
        &self,
        rho: &ScalarField<T>,
        v: &VectorField<T>,
    ) -> Result<VectorField<T>> {
        same_grid(rho.grid(), v.grid())?;
        let w = rho.map(|r| self.kappa(r) / r);
        let corr = ops::dealias_vector(&ops::grad(rho).scale_by(&w)?);
        v.add(&corr)
    }

    /// `v = u + ∇b(ρ)`.
    pub fn from_reformulated<T: Real>(&self, rho: &ScalarField<T>, u: &VectorField<T>) -> Result<VectorField<T>> {
        same_grid(rho.grid(), u.grid())?;
        u.add(&self.grad_b(rho))
    }

    /// `‖Q v₀ - ∇b(ρ₀)‖_{L²}`.
    pub fn check_compatibility<T: Real>(&self, rho0: &ScalarField<T>, v0: &VectorField<T>) -> Result<T> {
        same_grid(rho0.grid(), v0.grid())?;
        let (_, q) = ops::leray_project(v0);
        Ok(q.sub(&self.grad_b(rho0))?.norm_l2())
    }

    /// `h = ρ⁻¹ div(v ⊗ ∇a)` with `v = u + ∇b`, i.e.
    /// `hᵢ = ρ⁻¹ Σⱼ ∂ⱼ(vⱼ ∂ᵢa)`; every product dealiased.
    pub fn source_h<T: Real>(&self, rho: &ScalarField<T>, u: &VectorField<T>) -> Result<VectorField<T>> {
        same_grid(rho.grid(), u.grid())?;
        self.check_density(rho)?;
        let v = ops::dealias_vector(&self.from_reformulated(rho, u)?);
        let grad_a = ops::dealias_vector(&ops::grad(&self.a_field(rho)));
        let lambda = ops::dealias(&rho.map(|r| T::one() / r));
        let d = rho.grid().dim();
        let mut comps = Vec::with_capacity(d);
        for i in 0..d {
            let flux: Vec<ScalarField<T>> = (0..d)
                .map(|j| ops::dealias(&v.component(j).mul(grad_a.component(i)).expect("same grid")))
                .collect();
            let dv = ops::div(&VectorField::from_components(flux)?);
            comps.push(ops::dealias(&dv.mul(&lambda)?));
        }
        VectorField::from_components(comps)
    }

    /// The four-term expansion
    /// `-u·∇²b - (u·∇λ)∇a - (∇b·∇λ)∇a - div(∇b ⊗ ∇b)`.
    pub fn source_h_expanded<T: Real>(&self, rho: &ScalarField<T>, u: &VectorField<T>) -> Result<VectorField<T>> {
        same_grid(rho.grid(), u.grid())?;
        self.check_density(rho)?;
        let d = rho.grid().dim();
        let u = ops::dealias_vector(u);
        let gb = self.grad_b(rho);
        let ga = ops::dealias_vector(&ops::grad(&self.a_field(rho)));
        let gl = ops::dealias_vector(&ops::grad(&rho.map(|r| T::one() / r)));
        let u_gl = ops::dealias(&u.dot(&gl)?);
        let gb_gl = ops::dealias(&gb.dot(&gl)?);
        let coeff = u_gl.add(&gb_gl)?;
        let mut comps = Vec::with_capacity(d);
        for i in 0..d {
            let u_hess_b = ops::advect(&u, gb.component(i))?;
            let flux: Vec<ScalarField<T>> = (0..d)
                .map(|j| ops::dealias(&gb.component(j).mul(gb.component(i)).expect("same grid")))
                .collect();
            let div_bb = ops::div(&VectorField::from_components(flux)?);
            let mixed = ops::dealias(&coeff.mul(ga.component(i))?);
            let hi = u_hess_b.add(&mixed)?.add(&div_bb)?.scale(-T::one());
            comps.push(hi);
        }
        VectorField::from_components(comps)
    }
}

/// Which antiderivative a composition check applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Antiderivative {
    A,
    B,
}

/// Ensemble statistics of `‖F(ρ)‖_{B^s_{∞,r}} / ‖ρ - 1‖_{B^s_{∞,r}}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositionStats {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
    pub skipped: usize,
}

pub fn verify_composition<T: Real>(
    bank: &FilterBank<T>,
    ensemble: &[ScalarField<T>],
    model: &CoefficientModel,
    which: Antiderivative,
    s: f64,
    r: f64,
) -> Result<CompositionStats> {
    let params = BesovParams::new(s, crate::lp::Lebesgue::Inf, r)?;
    let mut stats = CompositionStats {
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        samples: 0,
        skipped: 0,
    };
    for rho in ensemble {
        model.check_density(rho)?;
        let pert = rho.map(|x| x - T::one());
        let den = bank.besov_norm(&pert, params)?.to_f64_lossy();
        if den == 0.0 {
            stats.skipped += 1;
            continue;
        }
        let comp = match which {
            Antiderivative::A => model.a_field(rho),
            Antiderivative::B => model.b_field(rho),
        };
        let ratio = bank.besov_norm(&comp, params)?.to_f64_lossy() / den;
        stats.min_ratio = stats.min_ratio.min(ratio);
        stats.max_ratio = stats.max_ratio.max(ratio);
        stats.samples += 1;
    }
    if stats.samples == 0 {
        stats.min_ratio = 0.0;
    }
    Ok(stats)
}
