//! Periodic collocation grid on `[0, L)^d` and its FFT machinery.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform periodic grid with `n` points per axis in `d` dimensions.
///
/// Samples are stored row-major with axis 0 (`x₁`) slowest. Wavenumbers are
/// integers scaled by `2π / length`; the Nyquist index `n/2` is stored as
/// `-n/2`.
pub struct Grid<T: Real> {
    dim: usize,
    n: usize,
    length: T,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    // per-point, per-axis wavenumber used for differentiation (Nyquist zeroed)
    deriv_k: Vec<T>,
    // per-point |k_d|^2 with the derivative wavenumbers
    deriv_k2: Vec<T>,
    // per-point magnitude of the integer lattice vector
    lattice_mag: Vec<T>,
    // per-point flag: inside the 2/3-rule retained band
    retained: Vec<bool>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

/// Signed integer wavenumber for storage index `i` on an `n`-point axis.
#[inline]
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl<T: Real> Grid<T> {
    /// Grid on the standard torus `[0, 2π)^d`.
    pub fn periodic(dim: usize, n: usize) -> Result<Arc<Self>> {
        Self::new(dim, n, T::TAU())
    }

    pub fn new(dim: usize, n: usize, length: T) -> Result<Arc<Self>> {
        if dim != 2 && dim != 3 {
            return Err(Error::Parameter(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "points per axis must be a power of two >= 16, got {n}"
            )));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::Parameter(format!("period must be positive, got {length}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let total = n.pow(dim as u32);
        let scale = T::TAU() / length;
        let cut = n / 3;
        let mut deriv_k = vec![T::zero(); total * dim];
        let mut deriv_k2 = vec![T::zero(); total];
        let mut lattice_mag = vec![T::zero(); total];
        let mut retained = vec![false; total];
        for idx in 0..total {
            let m = lattice_of(idx, n, dim);
            let mut k2 = T::zero();
            let mut m2 = 0i64;
            let mut keep = true;
            for a in 0..dim {
                m2 += m[a] * m[a];
                let is_nyquist = m[a] == -(n as i64 / 2);
                let kd = if is_nyquist {
                    T::zero()
                } else {
                    T::lit(m[a] as f64) * scale
                };
                deriv_k[idx * dim + a] = kd;
                k2 += kd * kd;
                if m[a].unsigned_abs() as usize > cut {
                    keep = false;
                }
            }
            deriv_k2[idx] = k2;
            lattice_mag[idx] = T::lit((m2 as f64).sqrt());
            retained[idx] = keep;
        }
        Ok(Arc::new(Self {
            dim,
            n,
            length,
            forward,
            inverse,
            deriv_k,
            deriv_k2,
            lattice_mag,
            retained,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Number of collocation points, `n^d`.
    pub fn len(&self) -> usize {
        self.lattice_mag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice_mag.is_empty()
    }

    pub fn spacing(&self) -> T {
        self.length / T::from_usize_lossy(self.n)
    }

    /// Quadrature weight of one cell, `h^d`.
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> T {
        self.length.powi(self.dim as i32)
    }

    /// Fundamental wavenumber `2π / length`.
    pub fn fundamental(&self) -> T {
        T::TAU() / self.length
    }

    /// Largest index kept by the 2/3 rule along one axis.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Largest lattice magnitude present on the grid, `sqrt(d) n / 2`.
    pub fn max_lattice_mag(&self) -> T {
        T::lit((self.dim as f64).sqrt() * (self.n / 2) as f64)
    }

    /// Integer lattice vector of a storage index (unused axes are zero).
    pub fn lattice(&self, idx: usize) -> [i64; 3] {
        lattice_of(idx, self.n, self.dim)
    }

    /// Storage index of an integer lattice vector (taken modulo `n`).
    pub fn index_of(&self, m: &[i64]) -> usize {
        let n = self.n as i64;
        m.iter()
            .take(self.dim)
            .fold(0usize, |acc, &mi| acc * self.n + mi.rem_euclid(n) as usize)
    }

    /// Physical coordinates of collocation point `idx`.
    pub fn coords(&self, idx: usize) -> [T; 3] {
        let h = self.spacing();
        let mut out = [T::zero(); 3];
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            out[a] = T::from_usize_lossy(rem % self.n) * h;
            rem /= self.n;
        }
        out
    }

    pub(crate) fn deriv_k(&self, idx: usize, axis: usize) -> T {
        self.deriv_k[idx * self.dim + axis]
    }

    pub(crate) fn deriv_k2(&self) -> &[T] {
        &self.deriv_k2
    }

    /// Lattice magnitude `|m|` per storage index.
    pub fn lattice_magnitudes(&self) -> &[T] {
        &self.lattice_mag
    }

    /// 2/3-rule mask per storage index.
    pub fn retained_mask(&self) -> &[bool] {
        &self.retained
    }

    /// Unnormalized forward transform in place.
    pub fn fft_forward(&self, data: &mut [Complex<T>]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform in place, normalized by `1 / n^d`.
    pub fn fft_inverse(&self, data: &mut [Complex<T>]) {
        self.transform(data, &self.inverse);
        let norm = T::one() / T::from_usize_lossy(self.len());
        for c in data.iter_mut() {
            *c *= norm;
        }
    }

    fn transform(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        let n = self.n;
        // contiguous (last) axis: rustfft handles the batch directly
        plan.process(data);
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); n * n.pow(self.dim as u32 - 1)];
        for axis in (0..self.dim - 1).rev() {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = n * stride;
            for chunk in data.chunks_mut(block) {
                let lines = &mut scratch[..block];
                for s in 0..stride {
                    for i in 0..n {
                        lines[s * n + i] = chunk[i * stride + s];
                    }
                }
                plan.process(lines);
                for s in 0..stride {
                    for i in 0..n {
                        chunk[i * stride + s] = lines[s * n + i];
                    }
                }
            }
        }
    }
}

fn lattice_of(idx: usize, n: usize, dim: usize) -> [i64; 3] {
    let mut out = [0i64; 3];
    let mut rem = idx;
    for a in (0..dim).rev() {
        out[a] = signed_index(rem % n, n);
        rem /= n;
    }
    out
}
