//! Seeded random smooth fields.
//!
//! Coefficients are drawn from a ChaCha stream in a fixed lattice order that
//! does not depend on the grid size, so one seed describes the same continuous
//! field at every resolution that resolves its band.

use std::sync::Arc;

use num_complex::Complex;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::field::{ScalarField, Spectrum, VectorField};
use crate::grid::Grid;
use crate::ops;
use crate::scalar::Real;

/// Counter-based generator of band-limited random fields.
#[derive(Clone, Debug)]
pub struct SmoothFieldSampler {
    rng: ChaCha20Rng,
}

impl SmoothFieldSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Uniform sample in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform sample in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// Raw lattice coefficients `(m, c_m)` for `|m_i| <= kmax`, Gaussian
    /// envelope of width `kmax / 2`, zero mode excluded.
    fn coefficients(&mut self, dim: usize, kmax: usize) -> Vec<([i64; 3], Complex<f64>)> {
        let k = kmax as i64;
        let width = (kmax as f64 / 2.0).max(1.0);
        let mut out = Vec::new();
        let range: Vec<i64> = (-k..=k).collect();
        let mut m = [0i64; 3];
        let total = range.len().pow(dim as u32);
        for flat in 0..total {
            let mut rem = flat;
            for a in (0..dim).rev() {
                m[a] = range[rem % range.len()];
                rem /= range.len();
            }
            let re = self.symmetric();
            let im = self.symmetric();
            if m.iter().all(|&v| v == 0) {
                continue;
            }
            let r2: i64 = m.iter().map(|v| v * v).sum();
            let w = (-(r2 as f64) / (2.0 * width * width)).exp();
            out.push((m, Complex::new(re * w, im * w)));
        }
        out
    }

    fn synthesize<T: Real>(grid: &Arc<Grid<T>>, coeffs: &[([i64; 3], Complex<f64>)], scale: f64) -> ScalarField<T> {
        let mut s = Spectrum::zeros(grid);
        let n_total = grid.len() as f64;
        for (m, c) in coeffs {
            let idx = grid.index_of(m);
            s.coeffs_mut()[idx] += Complex::new(T::lit(c.re * scale * n_total), T::lit(c.im * scale * n_total));
        }
        s.to_field()
    }

    fn check_band<T: Real>(grid: &Grid<T>, kmax: usize) {
        assert!(
            kmax >= 1 && kmax <= grid.dealias_cutoff(),
            "random band {kmax} must lie in [1, {}]",
            grid.dealias_cutoff()
        );
    }

    /// Mean-zero field with unit RMS (in the continuum sense).
    pub fn mean_zero<T: Real>(&mut self, grid: &Arc<Grid<T>>, kmax: usize) -> ScalarField<T> {
        Self::check_band(grid, kmax);
        let coeffs = self.coefficients(grid.dim(), kmax);
        // field = Re Σ c_m e^{imx}; its mean square is Σ|c_m|²/2 up to pairing
        let energy: f64 = coeffs.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>() / 2.0;
        Self::synthesize(grid, &coeffs, 1.0 / energy.sqrt().max(f64::MIN_POSITIVE))
    }

    /// Mean-zero field with `sup |g| <= 1`, normalized by the coefficient
    /// `ℓ¹` norm (independent of the grid).
    pub fn bounded<T: Real>(&mut self, grid: &Arc<Grid<T>>, kmax: usize) -> ScalarField<T> {
        Self::check_band(grid, kmax);
        let coeffs = self.coefficients(grid.dim(), kmax);
        let l1: f64 = coeffs.iter().map(|(_, c)| c.norm()).sum();
        Self::synthesize(grid, &coeffs, 1.0 / l1.max(f64::MIN_POSITIVE))
    }

    /// Divergence-free, mean-zero vector field with unit RMS per stream
    /// function normalization.
    pub fn solenoidal<T: Real>(&mut self, grid: &Arc<Grid<T>>, kmax: usize) -> VectorField<T> {
        if grid.dim() == 2 {
            let psi = self.mean_zero(grid, kmax);
            let u = ops::perp_grad(&psi).expect("2D grid");
            let rms = u.norm_l2() / grid.volume().sqrt();
            u.scale(T::one() / rms)
        } else {
            let comps = (0..grid.dim()).map(|_| self.mean_zero(grid, kmax)).collect();
            let w = VectorField::from_components(comps).expect("same grid");
            let u = ops::leray(&w);
            let rms = u.norm_l2() / grid.volume().sqrt();
            u.scale(T::one() / rms)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_field_across_resolutions() {
        let g1 = Grid::<f64>::periodic(2, 32).unwrap();
        let g2 = Grid::<f64>::periodic(2, 64).unwrap();
        let a = SmoothFieldSampler::new(5).bounded(&g1, 6);
        let b = SmoothFieldSampler::new(5).bounded(&g2, 6);
        // every point of the coarse grid is a point of the fine one
        for i in 0..g1.len() {
            let j = (i / 32) * 2 * 64 + (i % 32) * 2;
            assert!((a.values()[i] - b.values()[j]).abs() < 1e-13);
        }
        assert!(a.norm_inf() <= 1.0);
        assert!(a.mean().abs() < 1e-15);
    }

    #[test]
    fn solenoidal_is_divergence_free() {
        let g = Grid::<f64>::periodic(2, 32).unwrap();
        let u = SmoothFieldSampler::new(9).solenoidal(&g, 5);
        assert!(ops::relative_divergence(&u) < 1e-13);
        let rms = u.norm_l2() / g.volume().sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
    }

    #[test]
    fn streams_are_deterministic() {
        let mut a = SmoothFieldSampler::new(1);
        let mut b = SmoothFieldSampler::new(1);
        for _ in 0..10 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }
}
