//! Empirical checks of Bernstein, interpolation and Hölder-equivalence
//! inequalities on the grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{same_grid, ScalarField};
use crate::lp::bank::FilterBank;
use crate::lp::besov::BesovParams;
use crate::ops;
use crate::random::SmoothFieldSampler;
use crate::scalar::Real;

/// Ensemble statistics of `‖∇u‖_{L∞} / (2ʲ‖u‖_{L∞})` over block-localized `u`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BernsteinStats {
    pub j: i32,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
    pub skipped: usize,
}

impl BernsteinStats {
    pub const CSV_HEADER: &'static str = "j,min_ratio,max_ratio,n";

    pub fn csv_row(&self) -> String {
        format!("{},{:e},{:e},{}", self.j, self.min_ratio, self.max_ratio, self.samples)
    }
}

impl<T: Real> FilterBank<T> {
    /// Localizes each field by `Δⱼ` and records the Bernstein ratio. Fields
    /// whose block vanishes are counted in `skipped`.
    pub fn bernstein_ratios(&self, j: i32, fields: &[ScalarField<T>]) -> Result<BernsteinStats> {
        if j < 0 || j > self.j_max() {
            return Err(Error::IndexOutOfRange {
                index: j,
                min: 0,
                max: self.j_max(),
            });
        }
        let scale = 2f64.powi(j);
        let mut stats = BernsteinStats {
            j,
            min_ratio: f64::INFINITY,
            max_ratio: 0.0,
            samples: 0,
            skipped: 0,
        };
        for f in fields {
            same_grid(self.grid(), f.grid())?;
            let u = self.dyadic_block(f, j)?;
            let denom = u.norm_inf().to_f64_lossy() * scale;
            if denom <= f64::MIN_POSITIVE {
                stats.skipped += 1;
                continue;
            }
            let r = ops::grad(&u).magnitude().norm_inf().to_f64_lossy() / denom;
            stats.min_ratio = stats.min_ratio.min(r);
            stats.max_ratio = stats.max_ratio.max(r);
            stats.samples += 1;
        }
        if stats.samples == 0 {
            stats.min_ratio = 0.0;
        }
        Ok(stats)
    }

    /// Bernstein ratios over `trials` random fields drawn from `seed`.
    pub fn verify_bernstein(&self, j: i32, trials: usize, seed: u64) -> Result<BernsteinStats> {
        if trials == 0 {
            return Err(Error::Parameter("ensemble size must be at least 1".into()));
        }
        let g = self.grid();
        let band = (((8.0 / 3.0) * 2f64.powi(j.max(0))).ceil() as usize).clamp(1, g.dealias_cutoff());
        let mut sampler = SmoothFieldSampler::new(seed);
        let fields: Vec<_> = (0..trials).map(|_| sampler.bounded(g, band)).collect();
        self.bernstein_ratios(j, &fields)
    }

    /// `‖f‖_{B^{s+1}} / (‖f‖_{B^s} ‖f‖_{B^{s+2}})^{1/2}` with `p = ∞`.
    pub fn verify_interpolation(&self, f: &ScalarField<T>, s: f64, r: f64) -> Result<T> {
        let p = BesovParams::sup(s, r);
        let lo = self.besov_norm(f, p)?;
        if lo == T::zero() {
            return Err(Error::Precondition("interpolation ratio of a zero field".into()));
        }
        let mid = self.besov_norm(f, p.with_s(s + 1.0))?;
        let hi = self.besov_norm(f, p.with_s(s + 2.0))?;
        Ok(mid / (lo * hi).sqrt())
    }

    /// Dyadic `Ċ^ε` norm against the difference-quotient seminorm over all
    /// grid shifts.
    pub fn verify_holder_equivalence(&self, f: &ScalarField<T>, eps: f64) -> Result<HolderReport> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Parameter(format!("Hölder exponent {eps} must lie in (0, 1)")));
        }
        same_grid(self.grid(), f.grid())?;
        let dyadic = self
            .besov_norm(f, BesovParams::sup(eps, f64::INFINITY).homogeneous())?
            .to_f64_lossy();
        let quotient = difference_quotient(f, eps);
        let ratio = if dyadic == 0.0 && quotient == 0.0 {
            0.0
        } else {
            quotient / dyadic
        };
        Ok(HolderReport {
            dyadic,
            difference_quotient: quotient,
            ratio,
        })
    }
}

/// Values of the two Hölder seminorms and their ratio (quotient over dyadic).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderReport {
    pub dyadic: f64,
    pub difference_quotient: f64,
    pub ratio: f64,
}

/// `max_{y ≠ 0} max_x |f(x+y) - f(x)| / |y|^ε` over grid shifts, with `|y|`
/// the shortest periodic representative.
pub fn difference_quotient<T: Real>(f: &ScalarField<T>, eps: f64) -> f64 {
    let g = f.grid();
    let (d, n) = (g.dim(), g.n());
    let h = g.spacing().to_f64_lossy();
    let vals: Vec<f64> = f.values().iter().map(|v| v.to_f64_lossy()).collect();
    let len = vals.len();
    let strides: Vec<usize> = (0..d).map(|a| n.pow((d - 1 - a) as u32)).collect();
    (1..len)
        .into_par_iter()
        .map(|shift| {
            let mut y2 = 0.0;
            let mut sh = [0usize; 3];
            for a in 0..d {
                let m = (shift / strides[a]) % n;
                sh[a] = m;
                let k = crate::grid::signed_index(m, n).abs() as f64;
                y2 += (k * h) * (k * h);
            }
            let mut best = 0.0f64;
            let mut idx = [0usize; 3];
            for i in 0..len {
                let mut j = 0;
                for a in 0..d {
                    idx[a] = (i / strides[a]) % n;
                    j += ((idx[a] + sh[a]) % n) * strides[a];
                }
                best = best.max((vals[j] - vals[i]).abs());
            }
            best / y2.sqrt().powf(eps)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn bank(n: usize) -> FilterBank<f64> {
        FilterBank::new(&Grid::periodic(2, n).unwrap())
    }

    #[test]
    fn bernstein_single_mode_and_skip() {
        let b = bank(64);
        let g = b.grid().clone();
        let j = 3;
        let mode = ScalarField::from_fn(&g, |x| (8.0 * x[0]).cos());
        let z = ScalarField::zeros(&g);
        let st = b.bernstein_ratios(j, &[mode, z]).unwrap();
        assert!((st.min_ratio - 1.0).abs() < 1e-12 && (st.max_ratio - 1.0).abs() < 1e-12);
        assert_eq!((st.samples, st.skipped), (1, 1));
        assert!(b.bernstein_ratios(-1, &[]).is_err());
    }

    #[test]
    fn bernstein_intervals_overlap() {
        let b = bank(128);
        let lo = b.verify_bernstein(1, 20, 3).unwrap();
        let hi = b.verify_bernstein(4, 20, 3).unwrap();
        assert!(lo.min_ratio > 0.0 && hi.min_ratio > 0.0);
        assert!(lo.min_ratio <= hi.max_ratio && hi.min_ratio <= lo.max_ratio, "{lo:?} {hi:?}");
    }

    #[test]
    fn interpolation_single_and_two_block() {
        let b = bank(64);
        let g = b.grid().clone();
        // |k| = 12 lives only in j = 3
        let one = ScalarField::from_fn(&g, |x| (12.0 * x[0]).cos());
        assert!((b.verify_interpolation(&one, 0.3, 1.0).unwrap() - 1.0).abs() < 1e-12);
        // |k| = 6 lives only in j = 2; equal block norms after rescaling
        let p2 = crate::lp::phi(6.0 / 4.0);
        let p3 = crate::lp::phi(12.0 / 8.0);
        let two = ScalarField::from_fn(&g, |x| (6.0 * x[1]).cos() / p2 + (12.0 * x[0]).cos() / p3);
        let s = 0.0;
        let sum = |w: f64| 2f64.powf(2.0 * w) + 2f64.powf(3.0 * w);
        let expect = sum(s + 1.0) / (sum(s) * sum(s + 2.0)).sqrt();
        let got = b.verify_interpolation(&two, s, 1.0).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} {expect}");
        assert!(matches!(
            b.verify_interpolation(&ScalarField::zeros(&g), 0.0, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn holder_cases() {
        let b = bank(32);
        let g = b.grid().clone();
        let z = b.verify_holder_equivalence(&ScalarField::zeros(&g), 0.5).unwrap();
        assert_eq!((z.dyadic, z.difference_quotient), (0.0, 0.0));
        let f = ScalarField::from_fn(&g, |x| x[0].cos());
        let r1 = b.verify_holder_equivalence(&f, 0.5).unwrap();
        let r2 = b.verify_holder_equivalence(&f.scale(2.0), 0.5).unwrap();
        assert!((r2.dyadic - 2.0 * r1.dyadic).abs() < 1e-13);
        assert!((r2.difference_quotient - 2.0 * r1.difference_quotient).abs() < 1e-13);
        assert!((r2.ratio - r1.ratio).abs() < 1e-13);
        // independent scan for cos x: shifts along x only matter
        let h = g.spacing();
        let mut best = 0.0f64;
        for m in 1..32 {
            let k = crate::grid::signed_index(m, 32).abs() as f64;
            let mut amp = 0.0f64;
            for i in 0..32 {
                let x = i as f64 * h;
                amp = amp.max(((x + m as f64 * h).cos() - x.cos()).abs());
            }
            best = best.max(amp / (k * h).sqrt());
        }
        assert!((r1.difference_quotient - best).abs() < 1e-12);
        assert!(b.verify_holder_equivalence(&f, 1.0).is_err());
    }
}
