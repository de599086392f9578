//! Initial data from the configured families.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};

use zeromach_core::random::SmoothFieldSampler;
use zeromach_core::snapshot::{self, SnapshotHeader};
use zeromach_core::{Grid64, ScalarField64, State64, VectorField64};

use crate::config::{DensityInit, RunConfig, VelocityInit};

pub fn grid(config: &RunConfig) -> Result<Arc<Grid64>> {
    let g = &config.grid;
    Grid64::new(g.dim, g.n, g.length).context("building grid")
}

/// Loads a snapshot and rebinds it to `grid`, which must match the header.
pub fn load_snapshot(grid: &Arc<Grid64>, path: &Path) -> Result<ScalarField64> {
    Ok(load_snapshot_with_header(grid, path)?.1)
}

pub fn load_snapshot_with_header(grid: &Arc<Grid64>, path: &Path) -> Result<(SnapshotHeader, ScalarField64)> {
    let (header, field) =
        snapshot::load::<f64>(path).with_context(|| format!("reading snapshot {}", path.display()))?;
    if header.dims != grid.dim() || header.n != grid.n() || (header.length - grid.length()).abs() > 1e-12 * grid.length()
    {
        bail!(
            "snapshot {} is {}D, n = {}, length {}; grid is {}D, n = {}, length {}",
            path.display(),
            header.dims,
            header.n,
            header.length,
            grid.dim(),
            grid.n(),
            grid.length()
        );
    }
    let field = ScalarField64::from_vec(grid, field.into_values())?;
    Ok((header, field))
}

/// Angle coordinate `2πx/L` so that the analytic families have unit
/// wavenumber on any box.
fn angles(grid: &Grid64, x: &[f64; 3]) -> [f64; 3] {
    let s = 2.0 * PI / grid.length();
    [x[0] * s, x[1] * s, x[2] * s]
}

/// Density then velocity, both drawn from one sampler seeded with
/// `config.seed`.
pub fn initial_state(grid: &Arc<Grid64>, config: &RunConfig, sampler: &mut SmoothFieldSampler) -> Result<State64> {
    let rho = density(grid, &config.rho, sampler)?;
    let u = velocity(grid, &config.u, sampler)?;
    Ok(State64::new(0.0, rho, u)?)
}

pub fn density(grid: &Arc<Grid64>, init: &DensityInit, sampler: &mut SmoothFieldSampler) -> Result<ScalarField64> {
    Ok(match init {
        DensityInit::Uniform => ScalarField64::constant(grid, 1.0),
        DensityInit::Random { eps, band } => sampler.bounded(grid, *band).map(|g| 1.0 + eps * g),
        DensityInit::Snapshot { path } => load_snapshot(grid, path)?,
    })
}

pub fn velocity(grid: &Arc<Grid64>, init: &VelocityInit, sampler: &mut SmoothFieldSampler) -> Result<VectorField64> {
    let g = grid.clone();
    Ok(match init {
        VelocityInit::Zero => VectorField64::zeros(grid),
        VelocityInit::Random { amp, band } => sampler.solenoidal(grid, *band).scale(*amp),
        VelocityInit::Shear { amp } => VectorField64::from_fn(grid, |x| {
            let y = angles(&g, x);
            [amp * y[1].sin(), 0.0, 0.0]
        }),
        VelocityInit::DoubleShear { amp, delta } => VectorField64::from_fn(grid, |x| {
            let y = angles(&g, x)[1];
            let layer = if y <= PI {
                ((y - PI / 2.0) / delta).tanh()
            } else {
                ((3.0 * PI / 2.0 - y) / delta).tanh()
            };
            [amp * layer, 0.0, 0.0]
        }),
        VelocityInit::Cellular { amp } => VectorField64::from_fn(grid, |x| {
            let y = angles(&g, x);
            [amp * y[0].sin() * y[1].cos(), -amp * y[0].cos() * y[1].sin(), 0.0]
        }),
        VelocityInit::Snapshot { paths } => {
            let comps = paths.iter().map(|p| load_snapshot(grid, p)).collect::<Result<Vec<_>>>()?;
            VectorField64::from_components(comps)?
        }
    })
}
