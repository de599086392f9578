//! Time series of energies, extrema and Besov monitors.

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::lp::{aggregate, Blocks, FilterBank, Lebesgue};
use crate::ops;
use crate::scalar::Real;
use crate::solver::{Stage, State};

/// Exponent `ℓ` used in the `Γ₁`, `Γ₂` monitors.
const ELL: i32 = 6;

/// Regularity `s` and summation `r` of the configurable Besov monitors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorParams {
    pub s: f64,
    pub r: f64,
}

impl Default for MonitorParams {
    fn default() -> Self {
        Self { s: 1.0, r: 1.0 }
    }
}

/// One sample of the diagnostics. Integrals are cumulative from the first
/// sample: Simpson's rule for the energy fluxes when a midpoint sample is
/// supplied, the trapezoidal rule otherwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    /// `½‖ρ - 1‖²_{L²}`
    pub rho_energy: f64,
    /// `∫∫κ|∇ρ|²`
    pub dissipation: f64,
    /// `½∫ρ|u|²`
    pub kinetic: f64,
    /// `∫⟨div(v ⊗ ∇a), u⟩ = ∫∫ρ h·u`
    pub work: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub div_u: f64,
    pub theta: f64,
    /// `‖ϱ‖_{L∞_t(B¹_{∞,1})}`
    pub r: f64,
    /// `‖ϱ‖_{L¹_t(B³_{∞,1})}`
    pub s: f64,
    /// `‖u‖_{L∞_t(B¹_{∞,1})}`
    pub u: f64,
    /// `U + ‖u(t)‖_{L²}`
    pub x: f64,
    pub r6: f64,
    /// `∫R³`
    pub int_r3: f64,
    pub two_r0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub grad_pi_l2: f64,
    pub grad_pi_inf: f64,
    /// `‖ϱ(t)‖_{B^s_{∞,r}}`
    pub besov_rho: f64,
    /// `‖u(t)‖_{B^s_{∞,r}}`
    pub besov_u: f64,
    /// `‖ϱ‖_{L̃∞_t(B^s_{∞,r})}`
    pub cl_rho_inf: f64,
    /// `‖ϱ‖_{L̃¹_t(B^{s+2}_{∞,r})}`
    pub cl_rho_one: f64,
    pub pressure_iterations: usize,
}

const COLUMNS: &[&str] = &[
    "t",
    "rho_energy",
    "dissipation",
    "kinetic",
    "work",
    "rho_min",
    "rho_max",
    "div_u",
    "theta",
    "R",
    "S",
    "U",
    "X",
    "R6",
    "int_R3",
    "two_R0",
    "gamma1",
    "gamma2",
    "grad_pi_l2",
    "grad_pi_inf",
    "besov_rho",
    "besov_u",
    "cl_rho_inf",
    "cl_rho_one",
    "pressure_iterations",
];

impl DiagnosticsRow {
    fn csv(&self) -> String {
        let v = [
            self.t,
            self.rho_energy,
            self.dissipation,
            self.kinetic,
            self.work,
            self.rho_min,
            self.rho_max,
            self.div_u,
            self.theta,
            self.r,
            self.s,
            self.u,
            self.x,
            self.r6,
            self.int_r3,
            self.two_r0,
            self.gamma1,
            self.gamma2,
            self.grad_pi_l2,
            self.grad_pi_inf,
            self.besov_rho,
            self.besov_u,
            self.cl_rho_inf,
            self.cl_rho_one,
        ];
        let mut out: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        out.push(self.pressure_iterations.to_string());
        out.join(",")
    }
}

/// Pointwise rates whose time integrals appear in the record.
#[derive(Clone, Debug, Default)]
struct Rates {
    t: f64,
    dissipation: f64,
    work: f64,
    theta: f64,
    b3: f64,
    r_cubed: f64,
    one_plus_x2: f64,
    grad_rho_l2sq: f64,
    x_s_prime: f64,
    rho_blocks: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DiagnosticsRecord {
    params: MonitorParams,
    rows: Vec<DiagnosticsRow>,
    prev: Option<Rates>,
    r0: f64,
    sup_blocks: Vec<f64>,
    int_blocks: Vec<f64>,
    j_min: i32,
    int: Integrals,
    mid: Option<Midpoint>,
}

/// Energy-flux rates at an interior time of the next interval.
#[derive(Clone, Copy, Debug)]
struct Midpoint {
    t: f64,
    dissipation: f64,
    work: f64,
}

/// `∫κ|∇ρ|²` and `∫ρh·u`.
fn energy_rates<T: Real>(state: &State<T>, h: &crate::field::VectorField<T>, model: &CoefficientModel) -> Result<(f64, f64)> {
    let rho = &state.rho;
    let gmag2 = {
        let g = ops::grad(rho);
        g.dot(&g)?
    };
    let dissipation = gmag2.mul(&model.kappa_field(rho))?.integral().to_f64_lossy();
    let work = h.dot(&state.u)?.mul(rho)?.integral().to_f64_lossy();
    Ok((dissipation, work))
}

#[derive(Clone, Debug, Default)]
struct Integrals {
    dissipation: f64,
    work: f64,
    theta: f64,
    s: f64,
    r3: f64,
    x2: f64,
    grad_rho: f64,
    xs: f64,
    r: f64,
    u: f64,
}

fn trapz(acc: &mut f64, a: f64, b: f64, dt: f64) {
    *acc += 0.5 * (a + b) * dt;
}

impl DiagnosticsRecord {
    pub fn new<T: Real>(bank: &FilterBank<T>, params: MonitorParams) -> Self {
        let nb = bank.indices(Blocks::Inhomogeneous).count();
        Self {
            params,
            rows: Vec::new(),
            prev: None,
            r0: 0.0,
            sup_blocks: vec![0.0; nb],
            int_blocks: vec![0.0; nb],
            j_min: bank.j_min(Blocks::Inhomogeneous),
            int: Integrals::default(),
            mid: None,
        }
    }

    pub fn rows(&self) -> &[DiagnosticsRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&DiagnosticsRow> {
        self.rows.last()
    }

    pub fn params(&self) -> MonitorParams {
        self.params
    }

    pub fn csv_header() -> String {
        COLUMNS.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header();
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }

    /// Records the energy-flux rates at the midpoint of the interval ending
    /// at the next [`Self::push`]; `h` is the source term at `state`.
    pub fn push_midpoint<T: Real>(
        &mut self,
        state: &State<T>,
        h: &crate::field::VectorField<T>,
        model: &CoefficientModel,
    ) -> Result<()> {
        let (dissipation, work) = energy_rates(state, h, model)?;
        self.mid = Some(Midpoint {
            t: state.t.to_f64_lossy(),
            dissipation,
            work,
        });
        Ok(())
    }

    /// Appends the sample at `state`; `stage` supplies `h` and `π`.
    pub fn push<T: Real>(
        &mut self,
        bank: &FilterBank<T>,
        state: &State<T>,
        stage: &Stage<T>,
        model: &CoefficientModel,
    ) -> Result<&DiagnosticsRow> {
        let t = state.t.to_f64_lossy();
        if let Some(p) = &self.prev {
            if !(t > p.t) {
                return Err(Error::State(format!("diagnostics time {t} does not advance past {}", p.t)));
            }
        }
        let rho = &state.rho;
        let pert = rho.map(|r| r - T::one());
        let grad_rho = ops::grad(rho);
        let gmag = grad_rho.magnitude();
        let f = |x: T| x.to_f64_lossy();

        let (dissipation, work) = energy_rates(state, &stage.h, model)?;
        let g_inf = f(gmag.norm_inf());
        let hess = f(ops::hessian_norm_inf(rho));
        let theta = g_inf.powi(2) + g_inf.powi(4) + hess + hess * hess;
        let grad_rho_l2 = f(grad_rho.norm_l2());

        let rho_blocks: Vec<(i32, f64)> = bank
            .block_norms(&pert, Lebesgue::Inf, Blocks::Inhomogeneous)?
            .into_iter()
            .map(|(j, a)| (j, f(a)))
            .collect();
        let u_blocks: Vec<(i32, f64)> = bank
            .vector_block_norms(&state.u, Lebesgue::Inf, Blocks::Inhomogeneous)?
            .into_iter()
            .map(|(j, a)| (j, f(a)))
            .collect();
        let b1_rho = aggregate(&rho_blocks, 1.0, 1.0);
        let b3_rho = aggregate(&rho_blocks, 3.0, 1.0);
        let b1_u = aggregate(&u_blocks, 1.0, 1.0);
        let MonitorParams { s, r } = self.params;
        let besov_rho = aggregate(&rho_blocks, s, r);
        let besov_u = aggregate(&u_blocks, s, r);

        let first = self.prev.is_none();
        if first {
            self.r0 = b1_rho;
        }
        self.int.r = self.int.r.max(b1_rho);
        self.int.u = self.int.u.max(b1_u);
        let u_l2 = f(state.u.norm_l2());
        let x = self.int.u + u_l2;
        let rates = Rates {
            t,
            dissipation,
            work,
            theta,
            b3: b3_rho,
            r_cubed: self.int.r.powi(3),
            one_plus_x2: 1.0 + x * x,
            grad_rho_l2sq: grad_rho_l2 * grad_rho_l2,
            x_s_prime: x * b3_rho,
            rho_blocks: rho_blocks.iter().map(|&(_, a)| a).collect(),
        };
        for (sup, &(_, a)) in self.sup_blocks.iter_mut().zip(&rho_blocks) {
            *sup = sup.max(a);
        }
        if let Some(p) = &self.prev {
            let dt = t - p.t;
            let i = &mut self.int;
            match self.mid.take() {
                Some(m) if (m.t - 0.5 * (p.t + t)).abs() <= 1e-9 * dt.max(t.abs()) => {
                    i.dissipation += dt / 6.0 * (p.dissipation + 4.0 * m.dissipation + rates.dissipation);
                    i.work += dt / 6.0 * (p.work + 4.0 * m.work + rates.work);
                }
                _ => {
                    trapz(&mut i.dissipation, p.dissipation, rates.dissipation, dt);
                    trapz(&mut i.work, p.work, rates.work, dt);
                }
            }
            trapz(&mut i.theta, p.theta, rates.theta, dt);
            trapz(&mut i.s, p.b3, rates.b3, dt);
            trapz(&mut i.r3, p.r_cubed, rates.r_cubed, dt);
            trapz(&mut i.x2, p.one_plus_x2, rates.one_plus_x2, dt);
            trapz(&mut i.grad_rho, p.grad_rho_l2sq, rates.grad_rho_l2sq, dt);
            trapz(&mut i.xs, p.x_s_prime, rates.x_s_prime, dt);
            for (acc, (&a, &b)) in self
                .int_blocks
                .iter_mut()
                .zip(p.rho_blocks.iter().zip(&rates.rho_blocks))
            {
                trapz(acc, a, b, dt);
            }
        }
        self.prev = Some(rates);

        let r0l = 1.0 + self.r0.powi(ELL);
        let growth = self.int.x2.exp();
        let gamma1 = self.r0 * r0l * growth * (self.int.grad_rho + 1.0);
        let gamma2 = r0l * growth * self.int.xs;
        let sup_pairs: Vec<(i32, f64)> = self
            .sup_blocks
            .iter()
            .enumerate()
            .map(|(k, &a)| (self.j_min + k as i32, a))
            .collect();
        let int_pairs: Vec<(i32, f64)> = self
            .int_blocks
            .iter()
            .enumerate()
            .map(|(k, &a)| (self.j_min + k as i32, a))
            .collect();
        let gp = ops::grad(&stage.pi);
        let row = DiagnosticsRow {
            t,
            rho_energy: f(state.density_energy()),
            dissipation: self.int.dissipation,
            kinetic: f(state.kinetic_energy()),
            work: self.int.work,
            rho_min: f(rho.min()),
            rho_max: f(rho.max()),
            div_u: f(ops::relative_divergence(&state.u)),
            theta: self.int.theta,
            r: self.int.r,
            s: self.int.s,
            u: self.int.u,
            x,
            r6: self.int.r.powi(6),
            int_r3: self.int.r3,
            two_r0: 2.0 * self.r0,
            gamma1,
            gamma2,
            grad_pi_l2: f(gp.norm_l2()),
            grad_pi_inf: f(gp.norm_inf()),
            besov_rho,
            besov_u,
            cl_rho_inf: aggregate(&sup_pairs, s, r),
            cl_rho_one: aggregate(&int_pairs, s + 2.0, r),
            pressure_iterations: stage.pressure_iterations,
        };
        self.rows.push(row);
        Ok(self.rows.last().expect("just pushed"))
    }
}

/// Maximal residuals of the density and kinetic energy balances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `max_t |½‖ϱ‖² + ∫∫κ|∇ρ|² - ½‖ϱ₀‖²| / (½‖ϱ₀‖² + ε)`.
    pub density: f64,
    /// `max_t |K(t) - K(0) - ∫∫ρh·u|`, relative to `K(0)` when it is positive.
    pub kinetic: f64,
    pub kinetic_relative: bool,
}

pub fn check_energy_identities(record: &DiagnosticsRecord) -> Result<EnergyReport> {
    let rows = record.rows();
    let first = rows
        .first()
        .ok_or_else(|| Error::State("empty diagnostics record".into()))?;
    let e0 = first.rho_energy;
    let k0 = first.kinetic;
    let mut density = 0.0f64;
    let mut kinetic = 0.0f64;
    for r in rows {
        density = density.max((r.rho_energy + r.dissipation - e0).abs() / (e0 + f64::EPSILON));
        kinetic = kinetic.max((r.kinetic - k0 - r.work).abs());
    }
    let kinetic_relative = k0 > 0.0;
    if kinetic_relative {
        kinetic /= k0;
    }
    Ok(EnergyReport {
        density,
        kinetic,
        kinetic_relative,
    })
}
