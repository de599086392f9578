//! Dyadic filter bank: the cutoff `χ`, the annulus profile `φ`, and the
//! blocks `Δⱼ`, `Sⱼ` realized as Fourier multipliers on the lattice.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField, Spectrum, VectorField};
use crate::grid::Grid;
use crate::ops::mean_tolerance;
use crate::scalar::Real;

/// Inner radius of the transition: `χ ≡ 1` on `|ξ| <= 3/4`.
pub const CHI_INNER: f64 = 0.75;
/// Outer radius: `supp χ ⊂ B(0, 4/3)`.
pub const CHI_OUTER: f64 = 4.0 / 3.0;

fn bump<T: Real>(s: T) -> T {
    if s <= T::zero() {
        T::zero()
    } else {
        (-T::one() / s).exp()
    }
}

/// Smooth radial cutoff evaluated at a lattice magnitude.
pub fn chi<T: Real>(r: T) -> T {
    let inner = T::lit(CHI_INNER);
    let outer = T::lit(CHI_OUTER);
    if r <= inner {
        return T::one();
    }
    if r >= outer {
        return T::zero();
    }
    let t = (r - inner) / (outer - inner);
    let a = bump(T::one() - t);
    let b = bump(t);
    a / (a + b)
}

/// Annulus profile `φ(ξ) = χ(ξ/2) - χ(ξ)`.
pub fn phi<T: Real>(r: T) -> T {
    chi(r / T::lit(2.0)) - chi(r)
}

/// Which family of blocks a computation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Blocks {
    /// `Δ₋₁ = χ(D)`, `Δⱼ = φ(2⁻ʲD)` for `j >= 0`.
    Inhomogeneous,
    /// `Δ̇ⱼ = φ(2⁻ʲD)` for every `j` whose annulus meets the nonzero lattice.
    Homogeneous,
}

/// Immutable bank of block multipliers sampled once per grid.
#[derive(Debug)]
pub struct FilterBank<T: Real> {
    grid: Arc<Grid<T>>,
    j_max: i32,
    j_min_hom: i32,
    inhom: Vec<Vec<T>>,
    hom: Vec<Vec<T>>,
}

impl<T: Real> FilterBank<T> {
    pub fn new(grid: &Arc<Grid<T>>) -> Self {
        let mags = grid.lattice_magnitudes();
        let kmax = grid.max_lattice_mag().to_f64_lossy();
        // largest j whose open annulus (3/4 2^j, 8/3 2^j) holds a lattice point
        let mut j_max = -1;
        while CHI_INNER * 2f64.powi(j_max + 1) < kmax {
            j_max += 1;
        }
        // smallest nonzero lattice magnitude is 1
        let mut j_min_hom = 0;
        while 2.0 * CHI_OUTER * 2f64.powi(j_min_hom - 1) > 1.0 {
            j_min_hom -= 1;
        }
        let scaled = |j: i32| T::lit(2f64.powi(-j));
        let mut inhom = Vec::with_capacity((j_max + 2) as usize);
        inhom.push(mags.iter().map(|&r| chi(r)).collect::<Vec<T>>());
        for j in 0..=j_max {
            let sc = scaled(j);
            inhom.push(mags.iter().map(|&r| phi(r * sc)).collect());
        }
        let mut hom = Vec::new();
        for j in j_min_hom..=j_max {
            let sc = scaled(j);
            hom.push(
                mags.iter()
                    .map(|&r| if r > T::zero() { phi(r * sc) } else { T::zero() })
                    .collect(),
            );
        }
        Self {
            grid: grid.clone(),
            j_max,
            j_min_hom,
            inhom,
            hom,
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// Largest dyadic index with a nonempty annulus on the grid.
    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn j_min(&self, kind: Blocks) -> i32 {
        match kind {
            Blocks::Inhomogeneous => -1,
            Blocks::Homogeneous => self.j_min_hom,
        }
    }

    /// Indices `j` of the blocks of one family, in increasing order.
    pub fn indices(&self, kind: Blocks) -> std::ops::RangeInclusive<i32> {
        self.j_min(kind)..=self.j_max
    }

    pub fn multiplier(&self, j: i32, kind: Blocks) -> Result<&[T]> {
        let lo = self.j_min(kind);
        if j < lo || j > self.j_max {
            return Err(Error::IndexOutOfRange {
                index: j,
                min: lo,
                max: self.j_max,
            });
        }
        let k = (j - lo) as usize;
        Ok(match kind {
            Blocks::Inhomogeneous => &self.inhom[k],
            Blocks::Homogeneous => &self.hom[k],
        })
    }

    fn check(&self, f: &ScalarField<T>) -> Result<()> {
        same_grid(&self.grid, f.grid())
    }

    /// `Δⱼ f` for `-1 <= j <= j_max`.
    pub fn dyadic_block(&self, f: &ScalarField<T>, j: i32) -> Result<ScalarField<T>> {
        self.check(f)?;
        let m = self.multiplier(j, Blocks::Inhomogeneous)?;
        Ok(f.to_spectrum().multiplied(|i| m[i]).to_field())
    }

    /// Homogeneous block `Δ̇ⱼ f`.
    pub fn homogeneous_block(&self, f: &ScalarField<T>, j: i32) -> Result<ScalarField<T>> {
        self.check(f)?;
        let m = self.multiplier(j, Blocks::Homogeneous)?;
        Ok(f.to_spectrum().multiplied(|i| m[i]).to_field())
    }

    /// Low-frequency cutoff `Sⱼ f = χ(2⁻ʲD) f` for `j >= 1`, zero for `j <= 0`.
    pub fn low_cutoff(&self, f: &ScalarField<T>, j: i32) -> Result<ScalarField<T>> {
        self.check(f)?;
        if j <= 0 {
            return Ok(ScalarField::zeros(f.grid()));
        }
        let sc = T::lit(2f64.powi(-j));
        let mags = self.grid.lattice_magnitudes();
        Ok(f.to_spectrum().multiplied(|i| chi(mags[i] * sc)).to_field())
    }

    /// All blocks of one family from a single forward transform.
    pub fn blocks(&self, f: &ScalarField<T>, kind: Blocks) -> Result<Vec<ScalarField<T>>> {
        self.check(f)?;
        Ok(self.blocks_of_spectrum(&f.to_spectrum(), kind))
    }

    pub(crate) fn blocks_of_spectrum(&self, s: &Spectrum<T>, kind: Blocks) -> Vec<ScalarField<T>> {
        let set = match kind {
            Blocks::Inhomogeneous => &self.inhom,
            Blocks::Homogeneous => &self.hom,
        };
        set.iter()
            .map(|m| s.multiplied(|i| m[i]).to_field())
            .collect()
    }

    /// Blocks of each component of a vector field.
    pub fn vector_blocks(&self, w: &VectorField<T>, kind: Blocks) -> Result<Vec<VectorField<T>>> {
        let per_comp = w
            .components()
            .iter()
            .map(|c| self.blocks(c, kind))
            .collect::<Result<Vec<_>>>()?;
        let nb = per_comp[0].len();
        Ok((0..nb)
            .map(|b| {
                VectorField::from_components(per_comp.iter().map(|c| c[b].clone()).collect())
                    .expect("same grid")
            })
            .collect())
    }

    pub(crate) fn require_mean_zero(&self, f: &ScalarField<T>) -> Result<()> {
        let s = f.to_spectrum();
        let mean = s.coeffs()[0].re / T::from_usize_lossy(self.grid.len());
        if mean.abs() > mean_tolerance::<T>() * s.norm() {
            return Err(Error::Precondition(format!(
                "homogeneous blocks need a mean-zero field (mean {mean})"
            )));
        }
        Ok(())
    }
}
