//! Real fields sampled on a [`Grid`] and their Fourier coefficients.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Real scalar field at the collocation points of a grid.
#[derive(Clone, Debug)]
pub struct ScalarField<T: Real> {
    grid: Arc<Grid<T>>,
    data: Vec<T>,
}

/// `d`-component real vector field on one grid.
#[derive(Clone, Debug)]
pub struct VectorField<T: Real> {
    grid: Arc<Grid<T>>,
    comps: Vec<ScalarField<T>>,
}

/// Complex Fourier coefficients of a real field (conjugate symmetric).
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    grid: Arc<Grid<T>>,
    coeffs: Vec<Complex<T>>,
}

pub(crate) fn same_grid<T: Real>(a: &Arc<Grid<T>>, b: &Arc<Grid<T>>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Arc<Grid<T>>, c: T) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![c; grid.len()],
        }
    }

    pub fn from_vec(grid: &Arc<Grid<T>>, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            data,
        })
    }

    /// Samples `f(x)` at every collocation point.
    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn(&[T; 3]) -> T) -> Self {
        let data = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self {
            grid: grid.clone(),
            data,
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn check_finite(&self, name: &str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(name.to_string()))
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// Pointwise product without dealiasing.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: T, other: &Self) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn mean(&self) -> T {
        self.data.iter().copied().sum::<T>() / T::from_usize_lossy(self.data.len())
    }

    pub fn min(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Grid maximum of `|f|`.
    pub fn norm_inf(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Quadrature `L²` norm over the torus.
    pub fn norm_l2(&self) -> T {
        (self.data.iter().map(|&v| v * v).sum::<T>() * self.grid.cell_volume()).sqrt()
    }

    /// Quadrature integral over the torus.
    pub fn integral(&self) -> T {
        self.data.iter().copied().sum::<T>() * self.grid.cell_volume()
    }

    pub fn to_spectrum(&self) -> Spectrum<T> {
        let mut coeffs: Vec<Complex<T>> = self
            .data
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        self.grid.fft_forward(&mut coeffs);
        Spectrum {
            grid: self.grid.clone(),
            coeffs,
        }
    }
}

impl<T: Real> Spectrum<T> {
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex::new(T::zero(), T::zero()); grid.len()],
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid<T>>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Parameter("coefficient count does not match grid".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Applies a real multiplier evaluated per storage index.
    pub fn multiplied(&self, m: impl Fn(usize) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * m(i))
                .collect(),
        }
    }

    /// Applies a complex multiplier evaluated per storage index.
    pub fn multiplied_complex(&self, m: impl Fn(usize) -> Complex<T>) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * m(i))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(())
    }

    /// Root of the summed squared coefficient magnitudes, normalized so that it
    /// equals the RMS of the field (Parseval).
    pub fn norm(&self) -> T {
        let n = T::from_usize_lossy(self.coeffs.len());
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<T>()).sqrt() / n
    }

    /// Inverse transform, keeping the real part.
    pub fn to_field(&self) -> ScalarField<T> {
        let mut buf = self.coeffs.clone();
        self.grid.fft_inverse(&mut buf);
        ScalarField {
            grid: self.grid.clone(),
            data: buf.into_iter().map(|c| c.re).collect(),
        }
    }
}

impl<T: Real> VectorField<T> {
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        Self {
            grid: grid.clone(),
            comps: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_components(comps: Vec<ScalarField<T>>) -> Result<Self> {
        let first = comps
            .first()
            .ok_or_else(|| Error::Parameter("vector field needs components".into()))?;
        let grid = first.grid().clone();
        if comps.len() != grid.dim() {
            return Err(Error::Dimension {
                expected: grid.dim(),
                found: comps.len(),
            });
        }
        for c in &comps {
            same_grid(&grid, c.grid())?;
        }
        Ok(Self { grid, comps })
    }

    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn(&[T; 3]) -> [T; 3]) -> Self {
        let comps = (0..grid.dim())
            .map(|a| ScalarField::from_fn(grid, |x| f(x)[a]))
            .collect();
        Self {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField<T>] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField<T>] {
        &mut self.comps
    }

    pub fn into_components(self) -> Vec<ScalarField<T>> {
        self.comps
    }

    pub fn component(&self, a: usize) -> &ScalarField<T> {
        &self.comps[a]
    }

    pub fn check_finite(&self, name: &str) -> Result<()> {
        for (a, c) in self.comps.iter().enumerate() {
            c.check_finite(&format!("{name}[{a}]"))?;
        }
        Ok(())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T + Copy) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.zip_map(b, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: self.grid.clone(),
            comps,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            grid: self.grid.clone(),
            comps: self.comps.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// Multiplies each component by a scalar field, pointwise.
    pub fn scale_by(&self, s: &ScalarField<T>) -> Result<Self> {
        same_grid(&self.grid, s.grid())?;
        let comps = self
            .comps
            .iter()
            .map(|c| c.mul(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: self.grid.clone(),
            comps,
        })
    }

    pub fn axpy(&mut self, c: T, other: &Self) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.axpy(c, b)?;
        }
        Ok(())
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField<T> {
        let mut out = ScalarField::zeros(&self.grid);
        for c in &self.comps {
            for (o, &v) in out.values_mut().iter_mut().zip(c.values()) {
                *o += v * v;
            }
        }
        out.map(|v| v.sqrt())
    }

    /// Pointwise dot product without dealiasing.
    pub fn dot(&self, other: &Self) -> Result<ScalarField<T>> {
        same_grid(&self.grid, &other.grid)?;
        let mut out = ScalarField::zeros(&self.grid);
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for ((o, &x), &y) in out.values_mut().iter_mut().zip(a.values()).zip(b.values()) {
                *o += x * y;
            }
        }
        Ok(out)
    }

    /// Grid maximum of `|w|`.
    pub fn norm_inf(&self) -> T {
        self.magnitude().norm_inf()
    }

    pub fn norm_l2(&self) -> T {
        self.comps
            .iter()
            .map(|c| {
                let n = c.norm_l2();
                n * n
            })
            .sum::<T>()
            .sqrt()
    }

    pub fn mean(&self) -> Vec<T> {
        self.comps.iter().map(|c| c.mean()).collect()
    }
}
