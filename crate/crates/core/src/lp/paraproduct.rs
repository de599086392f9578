//! Bony decomposition `uv = T_u v + T_v u + R(u, v)` and the transport
//! commutator `[v·∇, Δⱼ]`.

use crate::error::Result;
use crate::field::{same_grid, ScalarField, VectorField};
use crate::lp::bank::{Blocks, FilterBank};
use crate::ops;
use crate::scalar::Real;

impl<T: Real> FilterBank<T> {
    /// Inhomogeneous blocks of the 2/3-truncated field.
    fn truncated_blocks(&self, f: &ScalarField<T>) -> Vec<ScalarField<T>> {
        let mut s = f.to_spectrum();
        ops::truncate_spectrum(&mut s);
        self.blocks_of_spectrum(&s, Blocks::Inhomogeneous)
    }

    /// Paraproduct `T_u v = Σⱼ S_{j-1}u Δⱼv` on truncated inputs, dealiased.
    ///
    /// Inside the sum, `S_{j-1}` is the partial sum `Σ_{j' <= j-2} Δ_{j'}`, so
    /// the pair `(Δ₋₁u, Δ₁v)` belongs to `T_u v`.
    pub fn paraproduct(&self, u: &ScalarField<T>, v: &ScalarField<T>) -> Result<ScalarField<T>> {
        same_grid(self.grid(), u.grid())?;
        same_grid(self.grid(), v.grid())?;
        let ub = self.truncated_blocks(u);
        let vb = self.truncated_blocks(v);
        let g = self.grid().clone();
        let mut low = ScalarField::zeros(&g);
        let mut acc = ScalarField::zeros(&g);
        // storage k <-> j = k - 1
        for k in 0..vb.len() {
            if k >= 2 {
                low.axpy(T::one(), &ub[k - 2])?;
                for ((a, &l), &b) in acc.values_mut().iter_mut().zip(low.values()).zip(vb[k].values()) {
                    *a += l * b;
                }
            }
        }
        Ok(ops::dealias(&acc))
    }

    /// Remainder `R(u, v) = Σ_{|j-j'| <= 1} Δⱼu Δ_{j'}v` on truncated inputs.
    pub fn remainder(&self, u: &ScalarField<T>, v: &ScalarField<T>) -> Result<ScalarField<T>> {
        same_grid(self.grid(), u.grid())?;
        same_grid(self.grid(), v.grid())?;
        let ub = self.truncated_blocks(u);
        let vb = self.truncated_blocks(v);
        let g = self.grid().clone();
        let mut acc = ScalarField::zeros(&g);
        let nb = ub.len();
        for (k, uk) in ub.iter().enumerate() {
            let lo = k.saturating_sub(1);
            let hi = (k + 1).min(nb - 1);
            for vk in &vb[lo..=hi] {
                for ((a, &x), &y) in acc.values_mut().iter_mut().zip(uk.values()).zip(vk.values()) {
                    *a += x * y;
                }
            }
        }
        Ok(ops::dealias(&acc))
    }

    /// `v·∇(Δⱼf) - Δⱼ(v·∇f)`, both products dealiased.
    pub fn commutator_transport(
        &self,
        v: &VectorField<T>,
        f: &ScalarField<T>,
        j: i32,
    ) -> Result<ScalarField<T>> {
        same_grid(self.grid(), v.grid())?;
        same_grid(self.grid(), f.grid())?;
        let first = ops::advect(v, &self.dyadic_block(f, j)?)?;
        let second = self.dyadic_block(&ops::advect(v, f)?, j)?;
        first.sub(&second)
    }
}
