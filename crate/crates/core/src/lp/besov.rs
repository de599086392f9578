//! Besov and Chemin-Lerner norms built from the dyadic blocks.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField, VectorField};
use crate::grid::Grid;
use crate::lp::bank::{Blocks, FilterBank};
use crate::scalar::Real;

/// Lebesgue exponent of the per-block norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lebesgue {
    Two,
    Inf,
}

/// Parameters `(s, p, r)` of `B^s_{p,r}` plus the homogeneous flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovParams {
    pub s: f64,
    pub p: Lebesgue,
    /// Summation exponent in `[1, ∞]`.
    pub r: f64,
    pub homogeneous: bool,
}

impl BesovParams {
    pub fn new(s: f64, p: Lebesgue, r: f64) -> Result<Self> {
        let out = Self {
            s,
            p,
            r,
            homogeneous: false,
        };
        out.validate()?;
        Ok(out)
    }

    /// `B^s_{∞,r}`
    pub fn sup(s: f64, r: f64) -> Self {
        Self {
            s,
            p: Lebesgue::Inf,
            r,
            homogeneous: false,
        }
    }

    pub fn homogeneous(mut self) -> Self {
        self.homogeneous = true;
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 1.0) {
            return Err(Error::Parameter(format!("summation exponent r = {} < 1", self.r)));
        }
        if !self.s.is_finite() {
            return Err(Error::Parameter("regularity index must be finite".into()));
        }
        Ok(())
    }

    pub fn blocks(&self) -> Blocks {
        if self.homogeneous {
            Blocks::Homogeneous
        } else {
            Blocks::Inhomogeneous
        }
    }
}

/// `ℓ^r` aggregate of nonnegative terms; `r = ∞` is the maximum.
pub fn lr_aggregate<T: Real>(terms: impl IntoIterator<Item = T>, r: f64) -> T {
    if r.is_infinite() {
        terms.into_iter().fold(T::zero(), T::max)
    } else if r == 1.0 {
        terms.into_iter().sum()
    } else {
        let rr = T::lit(r);
        terms.into_iter().map(|t| t.powf(rr)).sum::<T>().powf(T::one() / rr)
    }
}

fn lebesgue_norm<T: Real>(f: &ScalarField<T>, p: Lebesgue) -> T {
    match p {
        Lebesgue::Inf => f.norm_inf(),
        Lebesgue::Two => f.norm_l2(),
    }
}

fn lebesgue_norm_vector<T: Real>(w: &VectorField<T>, p: Lebesgue) -> T {
    match p {
        Lebesgue::Inf => w.norm_inf(),
        Lebesgue::Two => w.norm_l2(),
    }
}

/// Weight `2^{js}`.
pub fn dyadic_weight<T: Real>(j: i32, s: f64) -> T {
    T::lit(2f64.powf(j as f64 * s))
}

impl<T: Real> FilterBank<T> {
    /// `(j, ‖Δⱼ f‖_{L^p})` for every block of the requested family.
    pub fn block_norms(&self, f: &ScalarField<T>, p: Lebesgue, kind: Blocks) -> Result<Vec<(i32, T)>> {
        f.check_finite("f")?;
        if kind == Blocks::Homogeneous {
            self.require_mean_zero(f)?;
        }
        let blocks = self.blocks(f, kind)?;
        Ok(self
            .indices(kind)
            .zip(blocks.iter())
            .map(|(j, b)| (j, lebesgue_norm(b, p)))
            .collect())
    }

    /// Block norms of a vector field, using the pointwise Euclidean magnitude.
    pub fn vector_block_norms(
        &self,
        w: &VectorField<T>,
        p: Lebesgue,
        kind: Blocks,
    ) -> Result<Vec<(i32, T)>> {
        w.check_finite("w")?;
        if kind == Blocks::Homogeneous {
            for c in w.components() {
                self.require_mean_zero(c)?;
            }
        }
        let blocks = self.vector_blocks(w, kind)?;
        Ok(self
            .indices(kind)
            .zip(blocks.iter())
            .map(|(j, b)| (j, lebesgue_norm_vector(b, p)))
            .collect())
    }

    /// `‖f‖_{B^s_{p,r}}` (or its homogeneous counterpart).
    pub fn besov_norm(&self, f: &ScalarField<T>, params: BesovParams) -> Result<T> {
        params.validate()?;
        let norms = self.block_norms(f, params.p, params.blocks())?;
        Ok(aggregate(&norms, params.s, params.r))
    }

    pub fn besov_norm_vector(&self, w: &VectorField<T>, params: BesovParams) -> Result<T> {
        params.validate()?;
        let norms = self.vector_block_norms(w, params.p, params.blocks())?;
        Ok(aggregate(&norms, params.s, params.r))
    }
}

/// `ℓ^r` over blocks of `2^{js} a_j`.
pub fn aggregate<T: Real>(norms: &[(i32, T)], s: f64, r: f64) -> T {
    lr_aggregate(norms.iter().map(|&(j, a)| dyadic_weight::<T>(j, s) * a), r)
}

/// Time exponent of a Chemin-Lerner norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeExponent {
    One,
    Two,
    Inf,
}

/// Running per-block time aggregates for `L̃^q_T(B^s_{p,r})`.
///
/// Each push contributes `dt` times the block norms (q = 1), `dt` times their
/// squares (q = 2), or a running maximum (q = ∞).
#[derive(Clone, Debug)]
pub struct CheminLernerAccumulator<T: Real> {
    grid: Arc<Grid<T>>,
    q: TimeExponent,
    p: Lebesgue,
    kind: Blocks,
    j_min: i32,
    aggregates: Vec<T>,
    elapsed: T,
    samples: usize,
}

impl<T: Real> CheminLernerAccumulator<T> {
    pub fn new(bank: &FilterBank<T>, q: TimeExponent, p: Lebesgue, kind: Blocks) -> Self {
        let nb = bank.indices(kind).count();
        Self {
            grid: bank.grid().clone(),
            q,
            p,
            kind,
            j_min: bank.j_min(kind),
            aggregates: vec![T::zero(); nb],
            elapsed: T::zero(),
            samples: 0,
        }
    }

    pub fn time_exponent(&self) -> TimeExponent {
        self.q
    }

    pub fn elapsed(&self) -> T {
        self.elapsed
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Adds already computed block norms for a sample of weight `dt`.
    pub fn push_norms(&mut self, norms: &[(i32, T)], dt: T) -> Result<()> {
        if !(dt > T::zero()) {
            return Err(Error::Parameter(format!("time weight must be positive, got {dt}")));
        }
        if norms.len() != self.aggregates.len() {
            return Err(Error::Parameter("block count does not match accumulator".into()));
        }
        for (agg, &(_, a)) in self.aggregates.iter_mut().zip(norms) {
            match self.q {
                TimeExponent::One => *agg += a * dt,
                TimeExponent::Two => *agg += a * a * dt,
                TimeExponent::Inf => *agg = agg.max(a),
            }
        }
        self.elapsed += dt;
        self.samples += 1;
        Ok(())
    }

    pub fn push(&mut self, bank: &FilterBank<T>, f: &ScalarField<T>, dt: T) -> Result<()> {
        same_grid(&self.grid, f.grid())?;
        let norms = bank.block_norms(f, self.p, self.kind)?;
        self.push_norms(&norms, dt)
    }

    pub fn push_vector(&mut self, bank: &FilterBank<T>, w: &VectorField<T>, dt: T) -> Result<()> {
        same_grid(&self.grid, w.grid())?;
        let norms = bank.vector_block_norms(w, self.p, self.kind)?;
        self.push_norms(&norms, dt)
    }

    /// Per-block time aggregates `‖Δⱼ f‖_{L^q_T(L^p)}`.
    pub fn block_aggregates(&self) -> Result<Vec<(i32, T)>> {
        if self.samples == 0 {
            return Err(Error::State("Chemin-Lerner accumulator is empty".into()));
        }
        Ok(self
            .aggregates
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let v = match self.q {
                    TimeExponent::Two => a.sqrt(),
                    _ => a,
                };
                (self.j_min + k as i32, v)
            })
            .collect())
    }

    /// `ℓ^r` over `j` of `2^{js}` times the per-block time aggregate.
    pub fn norm(&self, s: f64, r: f64) -> Result<T> {
        if !(r >= 1.0) {
            return Err(Error::Parameter(format!("summation exponent r = {r} < 1")));
        }
        Ok(aggregate(&self.block_aggregates()?, s, r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SmoothFieldSampler;

    fn bank(n: usize) -> FilterBank<f64> {
        FilterBank::new(&Grid::periodic(2, n).unwrap())
    }

    #[test]
    fn constant_and_zero() {
        let b = bank(32);
        let g = b.grid().clone();
        let c = ScalarField::constant(&g, -3.0);
        for s in [-1.0, 0.0, 1.5] {
            let v = b.besov_norm(&c, BesovParams::sup(s, 1.0)).unwrap();
            assert!((v - 2f64.powf(-s) * 3.0).abs() < 1e-13);
        }
        let z = ScalarField::zeros(&g);
        assert_eq!(b.besov_norm(&z, BesovParams::sup(1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn cosine_mode_brute_force() {
        let b = bank(128);
        let g = b.grid().clone();
        let f = ScalarField::from_fn(&g, |x| (8.0 * x[0]).cos());
        // |k| = 8 sits in the annuli of j = 2 (3, 32/3) and j = 3 (6, 64/3)
        let mut expect = 0.0;
        for j in -1..=b.j_max() {
            let w = if j < 0 { crate::lp::chi(8.0) } else { crate::lp::phi(8.0 / 2f64.powi(j)) };
            // max |w cos 8x| over the grid is |w|
            expect += 2f64.powi(j) * w.abs();
        }
        let v = b.besov_norm(&f, BesovParams::sup(1.0, 1.0)).unwrap();
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        let nonzero = (-1..=b.j_max())
            .filter(|&j| b.dyadic_block(&f, j).unwrap().norm_inf() > 1e-14)
            .count();
        assert!(nonzero <= 2);
    }

    #[test]
    fn errors() {
        let b = bank(32);
        let g = b.grid().clone();
        let mut f = ScalarField::constant(&g, 1.0);
        assert!(matches!(
            b.besov_norm(&f, BesovParams::sup(0.0, 1.0).homogeneous()),
            Err(Error::Precondition(_))
        ));
        f.values_mut()[3] = f64::NAN;
        assert!(matches!(
            b.besov_norm(&f, BesovParams::sup(0.0, 1.0)),
            Err(Error::NonFinite(_))
        ));
        assert!(BesovParams::new(0.0, Lebesgue::Two, 0.5).is_err());
    }

    #[test]
    fn blockwise_monotone_in_s() {
        let b = bank(64);
        let g = b.grid().clone();
        let f = SmoothFieldSampler::new(2).mean_zero(&g, 16);
        let norms = b.block_norms(&f, Lebesgue::Inf, Blocks::Inhomogeneous).unwrap();
        for &(j, a) in norms.iter().filter(|(j, _)| *j >= 0) {
            assert!(dyadic_weight::<f64>(j, 0.5) * a <= dyadic_weight::<f64>(j, 1.5) * a);
        }
    }

    #[test]
    fn chemin_lerner_constant_in_time() {
        let b = bank(32);
        let g = b.grid().clone();
        let f = SmoothFieldSampler::new(4).mean_zero(&g, 8);
        let params = BesovParams::sup(1.0, 1.0);
        let snap = b.besov_norm(&f, params).unwrap();
        let mut one = CheminLernerAccumulator::new(&b, TimeExponent::One, Lebesgue::Inf, Blocks::Inhomogeneous);
        let mut inf = CheminLernerAccumulator::new(&b, TimeExponent::Inf, Lebesgue::Inf, Blocks::Inhomogeneous);
        assert!(matches!(one.norm(1.0, 1.0), Err(Error::State(_))));
        for _ in 0..8 {
            one.push(&b, &f, 0.125).unwrap();
            inf.push(&b, &f, 0.125).unwrap();
        }
        assert!((one.norm(1.0, 1.0).unwrap() - snap).abs() < 1e-12 * snap);
        assert_eq!(
            inf.block_aggregates().unwrap(),
            b.block_norms(&f, Lebesgue::Inf, Blocks::Inhomogeneous).unwrap()
        );
        assert!((inf.norm(1.0, 1.0).unwrap() - snap).abs() < 1e-12 * snap);
        assert!(one.push(&b, &f, 0.0).is_err());
    }

    #[test]
    fn chemin_lerner_single_block_quadrature() {
        let b = bank(64);
        let g = b.grid().clone();
        // |k| = 12 is a single-block mode of j = 3
        let base = ScalarField::from_fn(&g, |x| (12.0 * x[1]).cos());
        let mut acc = CheminLernerAccumulator::new(&b, TimeExponent::One, Lebesgue::Inf, Blocks::Inhomogeneous);
        let steps = 400;
        let dt = 2.0 / steps as f64;
        for k in 0..steps {
            let t = (k as f64 + 0.5) * dt;
            acc.push(&b, &base.scale((-t).exp() * (3.0 * t).cos()), dt).unwrap();
        }
        // independent adaptive-free quadrature of |e^{-t} cos 3t| on [0, 2]
        let fine = 200_000;
        let h = 2.0 / fine as f64;
        let integral: f64 = (0..fine)
            .map(|k| {
                let t = (k as f64 + 0.5) * h;
                ((-t).exp() * (3.0 * t).cos()).abs() * h
            })
            .sum();
        let v = acc.norm(0.5, 1.0).unwrap();
        assert!((v - 2f64.powf(1.5) * integral).abs() < 2e-3 * v, "{v}");
    }
}
