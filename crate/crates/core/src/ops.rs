//! Spectral differential operators, projectors and dealiased products.
//!
//! Differentiation uses the wavenumber `i k` with the Nyquist component of the
//! differentiated axis set to zero, so `div ∘ grad` and `laplacian` share one
//! symbol exactly and real fields stay real.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField, Spectrum, VectorField};
use crate::scalar::Real;

/// Relative threshold under which a mean is treated as zero.
pub(crate) fn mean_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

fn derivative_spectrum<T: Real>(s: &Spectrum<T>, axis: usize) -> Spectrum<T> {
    let g = s.grid().clone();
    s.multiplied_complex(|i| Complex::new(T::zero(), g.deriv_k(i, axis)))
}

/// Zeroes every coefficient outside the 2/3-rule band.
pub fn truncate_spectrum<T: Real>(s: &mut Spectrum<T>) {
    let g = s.grid().clone();
    let zero = Complex::new(T::zero(), T::zero());
    for (c, &keep) in s.coeffs_mut().iter_mut().zip(g.retained_mask()) {
        if !keep {
            *c = zero;
        }
    }
}

/// 2/3-rule truncation of a real field.
pub fn dealias<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    let mut s = f.to_spectrum();
    truncate_spectrum(&mut s);
    s.to_field()
}

pub fn dealias_vector<T: Real>(w: &VectorField<T>) -> VectorField<T> {
    VectorField::from_components(w.components().iter().map(dealias).collect())
        .expect("components share a grid")
}

/// True when `f` has no energy outside the retained band (to round-off).
pub fn is_band_limited<T: Real>(f: &ScalarField<T>) -> bool {
    let s = f.to_spectrum();
    let g = s.grid().clone();
    let total = s.norm();
    let tail: T = s
        .coeffs()
        .iter()
        .zip(g.retained_mask())
        .filter(|(_, &k)| !k)
        .map(|(c, _)| c.norm_sqr())
        .sum::<T>()
        .sqrt()
        / T::from_usize_lossy(g.len());
    tail <= T::epsilon() * T::lit(1e3) * (total + T::min_positive_value())
}

/// Dealiased product `D(D(a) D(b))`.
pub fn dealiased_product<T: Real>(a: &ScalarField<T>, b: &ScalarField<T>) -> Result<ScalarField<T>> {
    same_grid(a.grid(), b.grid())?;
    Ok(dealias(&dealias(a).mul(&dealias(b))?))
}

pub fn grad<T: Real>(f: &ScalarField<T>) -> VectorField<T> {
    grad_of_spectrum(&f.to_spectrum())
}

pub(crate) fn grad_of_spectrum<T: Real>(s: &Spectrum<T>) -> VectorField<T> {
    let comps = (0..s.grid().dim())
        .map(|a| derivative_spectrum(s, a).to_field())
        .collect();
    VectorField::from_components(comps).expect("components share a grid")
}

/// Spectral partial derivative along `axis`.
pub fn partial<T: Real>(f: &ScalarField<T>, axis: usize) -> ScalarField<T> {
    derivative_spectrum(&f.to_spectrum(), axis).to_field()
}

pub(crate) fn div_spectrum<T: Real>(w: &VectorField<T>) -> Spectrum<T> {
    let g = w.grid().clone();
    let mut acc = Spectrum::zeros(&g);
    for (a, c) in w.components().iter().enumerate() {
        let d = derivative_spectrum(&c.to_spectrum(), a);
        acc.add_assign(&d).expect("same grid");
    }
    acc
}

pub fn div<T: Real>(w: &VectorField<T>) -> ScalarField<T> {
    div_spectrum(w).to_field()
}

pub fn laplacian<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    let g = f.grid().clone();
    let k2 = g.deriv_k2();
    f.to_spectrum().multiplied(|i| -k2[i]).to_field()
}

/// Hessian entries `∂_a ∂_b f` for `a <= b`, row-major upper triangle.
pub fn hessian<T: Real>(f: &ScalarField<T>) -> Vec<ScalarField<T>> {
    let s = f.to_spectrum();
    let g = f.grid().clone();
    let mut out = Vec::new();
    for a in 0..g.dim() {
        for b in a..g.dim() {
            out.push(
                s.multiplied(|i| -(g.deriv_k(i, a) * g.deriv_k(i, b)))
                    .to_field(),
            );
        }
    }
    out
}

/// Grid maximum of the Frobenius norm of the Hessian.
pub fn hessian_norm_inf<T: Real>(f: &ScalarField<T>) -> T {
    let g = f.grid().clone();
    let h = hessian(f);
    let d = g.dim();
    let mut best = T::zero();
    for i in 0..g.len() {
        let mut acc = T::zero();
        let mut idx = 0;
        for a in 0..d {
            for b in a..d {
                let v = h[idx].values()[i];
                acc += if a == b { v * v } else { T::lit(2.0) * v * v };
                idx += 1;
            }
        }
        best = best.max(acc.sqrt());
    }
    best
}

/// Solves `Δu = f` for mean-zero `f`; returns the mean-zero solution.
pub fn inverse_laplacian<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    let s = f.to_spectrum();
    let mean = s.coeffs()[0].re / T::from_usize_lossy(f.grid().len());
    let scale = s.norm();
    if mean.abs() > mean_tolerance::<T>() * scale {
        return Err(Error::Precondition(format!(
            "inverse Laplacian needs a mean-zero field (mean {mean})"
        )));
    }
    Ok(inverse_laplacian_spectrum(&s).to_field())
}

/// `Δ⁻¹` on the spectrum, dropping modes whose symbol vanishes.
pub(crate) fn inverse_laplacian_spectrum<T: Real>(s: &Spectrum<T>) -> Spectrum<T> {
    let g = s.grid().clone();
    let k2 = g.deriv_k2();
    s.multiplied(|i| if k2[i] > T::zero() { -T::one() / k2[i] } else { T::zero() })
}

/// Splits `w` into its divergence-free part `P w` and gradient part `Q w`.
///
/// `Q̂w = k (k·ŵ) / |k|²`; the zero mode (and any mode with vanishing
/// derivative symbol) goes wholly to `P w`.
pub fn leray_project<T: Real>(w: &VectorField<T>) -> (VectorField<T>, VectorField<T>) {
    let g = w.grid().clone();
    let d = g.dim();
    let specs: Vec<Spectrum<T>> = w.components().iter().map(|c| c.to_spectrum()).collect();
    let k2 = g.deriv_k2();
    let mut q_specs: Vec<Spectrum<T>> = (0..d).map(|_| Spectrum::zeros(&g)).collect();
    for (i, &ksq) in k2.iter().enumerate() {
        if ksq <= T::zero() {
            continue;
        }
        let mut kdotw = Complex::new(T::zero(), T::zero());
        for (a, s) in specs.iter().enumerate() {
            kdotw += s.coeffs()[i] * g.deriv_k(i, a);
        }
        for (a, q) in q_specs.iter_mut().enumerate() {
            q.coeffs_mut()[i] = kdotw * (g.deriv_k(i, a) / ksq);
        }
    }
    let mut p_comps = Vec::with_capacity(d);
    let mut q_comps = Vec::with_capacity(d);
    for (s, q) in specs.iter().zip(&q_specs) {
        let mut p = s.clone();
        for (pc, &qc) in p.coeffs_mut().iter_mut().zip(q.coeffs()) {
            *pc -= qc;
        }
        p_comps.push(p.to_field());
        q_comps.push(q.to_field());
    }
    (
        VectorField::from_components(p_comps).expect("same grid"),
        VectorField::from_components(q_comps).expect("same grid"),
    )
}

/// Divergence-free part only.
pub fn leray<T: Real>(w: &VectorField<T>) -> VectorField<T> {
    leray_project(w).0
}

/// RMS of the spectral divergence relative to the RMS of the field.
pub fn relative_divergence<T: Real>(w: &VectorField<T>) -> T {
    let num = div_spectrum(w).norm();
    let den: T = w
        .components()
        .iter()
        .map(|c| {
            let n = c.to_spectrum().norm();
            n * n
        })
        .sum::<T>()
        .sqrt();
    if den > T::zero() {
        num / den
    } else {
        num
    }
}

/// `D(v · ∇f)` with `v` truncated before the product.
pub fn advect<T: Real>(v: &VectorField<T>, f: &ScalarField<T>) -> Result<ScalarField<T>> {
    same_grid(v.grid(), f.grid())?;
    let vt = dealias_vector(v);
    advect_truncated(&vt, f)
}

/// Advection when the transport field is already band-limited.
pub(crate) fn advect_truncated<T: Real>(
    v: &VectorField<T>,
    f: &ScalarField<T>,
) -> Result<ScalarField<T>> {
    let mut s = f.to_spectrum();
    truncate_spectrum(&mut s);
    let gf = grad_of_spectrum(&s);
    let acc = v.dot(&gf)?;
    Ok(dealias(&acc))
}

/// Componentwise `D((v · ∇) w)`.
pub fn advect_vector<T: Real>(v: &VectorField<T>, w: &VectorField<T>) -> Result<VectorField<T>> {
    same_grid(v.grid(), w.grid())?;
    let vt = dealias_vector(v);
    let comps = w
        .components()
        .iter()
        .map(|c| advect_truncated(&vt, c))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

/// Perpendicular gradient `∇⊥ψ = (-∂₂ψ, ∂₁ψ)` in two dimensions.
pub fn perp_grad<T: Real>(psi: &ScalarField<T>) -> Result<VectorField<T>> {
    if psi.grid().dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: psi.grid().dim(),
        });
    }
    let s = psi.to_spectrum();
    let d1 = derivative_spectrum(&s, 0).to_field();
    let d2 = derivative_spectrum(&s, 1).to_field();
    VectorField::from_components(vec![d2.scale(-T::one()), d1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::random::SmoothFieldSampler;

    fn grid(n: usize) -> std::sync::Arc<Grid<f64>> {
        Grid::periodic(2, n).unwrap()
    }

    #[test]
    fn gradient_of_cosine() {
        let g = grid(32);
        let f = ScalarField::from_fn(&g, |x| x[0].cos());
        let gr = grad(&f);
        let expect = ScalarField::from_fn(&g, |x| -x[0].sin());
        assert!(gr.component(0).sub(&expect).unwrap().norm_inf() < 1e-13);
        assert!(gr.component(1).norm_inf() < 1e-13);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = grid(32);
        let f = ScalarField::constant(&g, 3.5);
        assert!(grad(&f).norm_inf() < 1e-13);
    }

    #[test]
    fn div_grad_matches_laplacian_on_rough_field() {
        let g = grid(64);
        // full-band noise, including Nyquist content
        let f = ScalarField::from_fn(&g, |x| ((x[0] * 37.0).sin() * 1e3 + x[1] * 17.0).sin());
        let lhs = div(&grad(&f));
        let rhs = laplacian(&f);
        let scale = rhs.norm_inf();
        assert!(lhs.sub(&rhs).unwrap().norm_inf() <= 1e-13 * scale);
    }

    #[test]
    fn inverse_laplacian_cases() {
        let g = grid(32);
        let f = ScalarField::from_fn(&g, |x| -x[0].cos());
        let u = inverse_laplacian(&f).unwrap();
        let expect = ScalarField::from_fn(&g, |x| x[0].cos());
        assert!(u.sub(&expect).unwrap().norm_inf() < 1e-13);

        let z = inverse_laplacian(&ScalarField::zeros(&g)).unwrap();
        assert_eq!(z.norm_inf(), 0.0);

        let bad = ScalarField::from_fn(&g, |x| 1.0 + x[0].cos());
        assert!(matches!(inverse_laplacian(&bad), Err(Error::Precondition(_))));

        let mut sampler = SmoothFieldSampler::new(11);
        let r = sampler.mean_zero(&g, 8);
        let back = laplacian(&inverse_laplacian(&r).unwrap());
        assert!(back.sub(&r).unwrap().norm_inf() < 1e-12 * r.norm_inf());
        assert!(inverse_laplacian(&r).unwrap().mean().abs() < 1e-14);
    }

    #[test]
    fn leray_splits_gradients_and_rotations() {
        let g = grid(32);
        let f = ScalarField::from_fn(&g, |x| (2.0 * x[0]).sin() * x[1].cos());
        let gf = grad(&f);
        let (p, q) = leray_project(&gf);
        assert!(p.norm_inf() < 1e-13);
        assert!(q.sub(&gf).unwrap().norm_inf() < 1e-13);

        let rot = perp_grad(&f).unwrap();
        let (p, q) = leray_project(&rot);
        assert!(p.sub(&rot).unwrap().norm_inf() < 1e-13);
        assert!(q.norm_inf() < 1e-13);
    }

    #[test]
    fn dealiased_product_is_band_limited() {
        let g = grid(32);
        let a = ScalarField::from_fn(&g, |x| (9.0 * x[0]).cos());
        let b = ScalarField::from_fn(&g, |x| (8.0 * x[0]).cos() + x[1].sin());
        let p = dealiased_product(&a, &b).unwrap();
        assert!(is_band_limited(&p));
        // cos 9x cos 8x = (cos x + cos 17x)/2 and 17 > 32/3 is removed
        let expect = ScalarField::from_fn(&g, |x| 0.5 * x[0].cos() + (9.0 * x[0]).cos() * x[1].sin());
        assert!(p.sub(&expect).unwrap().norm_inf() < 1e-13);
    }

    #[test]
    fn hessian_of_product_mode() {
        let g = grid(32);
        let f = ScalarField::from_fn(&g, |x| x[0].sin() * (2.0 * x[1]).sin());
        let h = hessian(&f);
        let f12 = ScalarField::from_fn(&g, |x| 2.0 * x[0].cos() * (2.0 * x[1]).cos());
        assert!(h[1].sub(&f12).unwrap().norm_inf() < 1e-12);
    }
}
