//! Experiment drivers. Each returns a bundle; errors become entries in its
//! failure list rather than aborting the report.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use serde::Serialize;

use zeromach_core::coefficients::{verify_composition, Antiderivative};
use zeromach_core::heat::verify_heat_semigroup;
use zeromach_core::lp::{BesovParams, CheminLernerAccumulator, Lebesgue, TimeExponent};
use zeromach_core::pressure::PressureOptions;
use zeromach_core::random::SmoothFieldSampler;
use zeromach_core::snapshot::write_snapshot;
use zeromach_core::solver::{
    check_energy_identities, picard_window, verify_parabolic_estimate, MonitorParams, PicardOptions, SolverOptions,
    StopReason,
};
use zeromach_core::vorticity::{
    measure_lifespan, verify_transport_growth, LifespanConfig, ProxyThresholds, TransportSetup,
};
use zeromach_core::{Error, FilterBank64, Solver64, State64};

use crate::config::{DensityInit, RunConfig};
use crate::init;
use crate::output::{Check, ReportBundle};

/// Subcommands understood by [`dispatch`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Run,
    Picard,
    LifespanScan,
    Verify,
    VerifyParabolic,
    VerifyTransport,
    Norms,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Picard => "picard",
            Command::LifespanScan => "lifespan-scan",
            Command::Verify => "verify",
            Command::VerifyParabolic => "verify-parabolic",
            Command::VerifyTransport => "verify-transport",
            Command::Norms => "norms",
        }
    }
}

pub fn dispatch(command: Command, config: &RunConfig) -> ReportBundle {
    let mut b = ReportBundle::new(command.name(), Some(config.clone()));
    let out = match command {
        Command::Run => run(config, &mut b),
        Command::Picard => picard(config, &mut b),
        Command::LifespanScan => lifespan_scan(config, &mut b),
        Command::Verify => verify(config, &mut b),
        Command::VerifyParabolic => verify_parabolic(config, &mut b),
        Command::VerifyTransport => verify_transport(config, &mut b),
        Command::Norms => norms(config, &mut b),
    };
    if let Err(e) = out {
        b.fail(format!("{e:#}"));
    }
    b
}

pub fn solver_options(c: &RunConfig) -> SolverOptions {
    SolverOptions {
        pressure: PressureOptions {
            tol: c.solver.pressure_tol,
            max_iter: c.solver.pressure_max_iter,
        },
        cfl: c.solver.cfl,
        tol_mp: c.solver.tol_mp,
        div_tol: c.solver.div_tol,
    }
}

fn monitors(c: &RunConfig) -> MonitorParams {
    MonitorParams {
        s: c.monitors.s,
        r: c.monitors.r,
    }
}

fn encode(f: &zeromach_core::ScalarField64, name: &str, t: f64) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, f, name, t)?;
    Ok(buf)
}

fn state_snapshots(st: &State64, k: usize) -> Result<Vec<(String, Vec<u8>)>> {
    let t = st.t;
    let mut out = vec![(format!("snap_{k:06}_rho.bin"), encode(&st.rho, "rho", t)?)];
    for (a, c) in st.u.components().iter().enumerate() {
        let name = format!("u{}", a + 1);
        out.push((format!("snap_{k:06}_{name}.bin"), encode(c, &name, t)?));
    }
    Ok(out)
}

fn finite(name: &str, x: f64) -> Check {
    Check::holds(name, x.is_finite())
}

/// Forward run with diagnostics, snapshots and energy checks.
fn run(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    let mut sampler = SmoothFieldSampler::new(c.seed);
    let state = init::initial_state(&grid, c, &mut sampler)?;
    let mut solver = Solver64::new(&grid, c.kappa, solver_options(c))?;
    let stride = c.output.stride;
    let mut snaps = Vec::new();
    let mut k = 0usize;
    let out = solver.run_observed(&state, c.time.t_end, c.time.dt, monitors(c), |st, _, _| {
        if stride > 0 && k.is_multiple_of(stride) {
            match state_snapshots(st, k) {
                Ok(v) => snaps.extend(v),
                Err(e) => return Some(format!("snapshot at step {k}: {e}")),
            }
        }
        k += 1;
        None
    })?;
    b.file("diagnostics.csv", out.record.to_csv());
    for (name, data) in snaps {
        b.file(name, data);
    }
    match &out.reason {
        StopReason::Completed => {}
        StopReason::Observer(r) => b.fail(r.clone()),
        StopReason::Failed(e) => b.fail(format!("step {} failed: {e}", out.steps)),
    }
    b.result("steps", out.steps);
    b.result("t_final", out.state.t);
    b.result("stop", &out.reason);

    let rows = out.record.rows();
    let (first, last) = (&rows[0], rows.last().expect("nonempty"));
    let energy = check_energy_identities(&out.record)?;
    b.check(Check::at_most("density_residual", energy.density, c.checks.density_residual));
    b.check(Check::at_most("kinetic_residual", energy.kinetic, c.checks.kinetic_residual));
    let overshoot = rows
        .iter()
        .map(|r| (first.rho_min - r.rho_min).max(r.rho_max - first.rho_max))
        .fold(0.0, f64::max);
    b.check(Check::at_most("max_principle_overshoot", overshoot, c.solver.tol_mp));
    let div = rows.iter().map(|r| r.div_u).fold(0.0, f64::max);
    b.check(Check::at_most("max_div_u", div, c.solver.div_tol));
    if c.rho == DensityInit::Uniform {
        let dev = rows
            .iter()
            .map(|r| (r.rho_min - 1.0).abs().max((r.rho_max - 1.0).abs()))
            .fold(0.0, f64::max);
        b.check(Check::at_most("euler_density_deviation", dev, c.checks.euler_density));
        let elapsed = last.t - first.t;
        if first.kinetic > 0.0 && elapsed > 0.0 {
            let drift = rows
                .iter()
                .map(|r| (r.kinetic - first.kinetic).abs())
                .fold(0.0, f64::max)
                / first.kinetic
                / elapsed;
            b.check(Check::at_most("euler_kinetic_drift_rate", drift, c.checks.euler_drift));
        }
    }
    b.result("energy", energy);
    b.result("final", last);
    Ok(())
}

/// Picard iteration over one window, compared with the direct integrator.
fn picard(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    let mut sampler = SmoothFieldSampler::new(c.seed);
    let state = init::initial_state(&grid, c, &mut sampler)?;
    let mut solver = Solver64::new(&grid, c.kappa, solver_options(c))?;
    let opts = PicardOptions {
        window: c.picard.window,
        dt: c.time.dt,
        n_max: c.picard.n_max,
        tol: c.picard.tol,
    };
    let (trace, end) = match picard_window(&mut solver, &state, opts) {
        Ok(out) => (out.trace, Some(out.state)),
        Err(Error::Divergence { trace, iterations, last_ratio }) => {
            b.fail(format!("no contraction after {iterations} iterates (last ratio {last_ratio})"));
            (*trace, None)
        }
        Err(e) => return Err(e.into()),
    };
    b.file("picard.csv", trace.to_csv());
    b.check(Check::holds("converged", trace.converged));
    let max_ratio = trace.ratios.iter().copied().fold(0.0, f64::max);
    b.check(Check::below("max_contraction_ratio", max_ratio, 1.0));
    b.result("iterations", trace.delta_rho.len());
    b.result("trace", &trace);
    if let Some(end) = end {
        let direct = solver.run(&state, opts.window, opts.dt, monitors(c))?.state;
        let gap = end
            .rho
            .sub(&direct.rho)?
            .norm_l2()
            .max(end.u.sub(&direct.u)?.norm_l2());
        let tol = 1e-8f64.max(opts.dt * opts.dt);
        b.check(Check::at_most("picard_direct_gap", gap, tol));
    }
    Ok(())
}

fn nondecreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0])
}

/// `ρ₀ = 1 + εg` for every listed `ε` with the configured velocity.
fn lifespan_scan(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    let mut sampler = SmoothFieldSampler::new(c.seed);
    let g = sampler.bounded(&grid, c.lifespan.band);
    let u0 = init::velocity(&grid, &c.u, &mut sampler)?;
    let thresholds = ProxyThresholds {
        gradient_factor: c.lifespan.gradient_factor,
        tail: c.lifespan.tail,
    };
    let lc = LifespanConfig {
        model: c.kappa,
        options: solver_options(c),
        t_max: c.lifespan.t_max,
        dt: c.time.dt,
        thresholds,
        ell: c.lifespan.ell,
        big_l: c.lifespan.big_l,
    };
    let rows = measure_lifespan(&grid, &lc, &g, &u0, &c.lifespan.eps)?;
    let mut csv = format!("{}\n", zeromach_core::vorticity::LifespanTableRow::CSV_HEADER);
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    b.file("lifespan.csv", csv);
    let measured: Vec<f64> = rows.iter().map(|r| r.t_measured).collect();
    let bounds: Vec<f64> = rows.iter().map(|r| r.t_lb).collect();
    b.check(Check::holds("t_measured_nondecreasing", nondecreasing(&measured)));
    b.check(Check::holds("t_lb_nondecreasing", nondecreasing(&bounds)));
    let errors: Vec<&str> = rows
        .iter()
        .filter(|r| r.reason.starts_with("step_error"))
        .map(|r| r.reason.as_str())
        .collect();
    b.check(Check::at_most("step_errors", errors.len() as f64, 0.0));
    b.result("thresholds", thresholds);
    b.result("rows", &rows);
    Ok(())
}

fn run_battery(c: &RunConfig, b: &mut ReportBundle, parts: &[fn(&RunConfig, &mut ReportBundle) -> Result<()>]) {
    for part in parts {
        if let Err(e) = part(c, b) {
            b.fail(format!("{e:#}"));
        }
    }
}

/// The full verifier battery; a failing verifier does not stop the others.
fn verify(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    run_battery(
        c,
        b,
        &[
            verify_bernstein,
            verify_interpolation,
            verify_holder,
            verify_heat,
            verify_parabolic,
            verify_transport,
            verify_composition_bounds,
        ],
    );
    Ok(())
}

/// Bernstein's inequality for functions of exponential type `(8/3)2ʲ` caps
/// the ratio at 8/3.
fn verify_bernstein(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    let bank = FilterBank64::new(&grid);
    let mut csv = format!("{}\n", zeromach_core::lp::BernsteinStats::CSV_HEADER);
    let mut all = Vec::new();
    for &j in &c.verify.bernstein_j {
        let st = bank.verify_bernstein(j, c.verify.trials, c.seed)?;
        csv.push_str(&st.csv_row());
        csv.push('\n');
        b.check(Check::at_most(&format!("bernstein_j{j}_max"), st.max_ratio, 8.0 / 3.0));
        b.check(Check::above(&format!("bernstein_j{j}_min"), st.min_ratio, 0.0));
        all.push(st);
    }
    b.file("bernstein.csv", csv);
    b.result("bernstein", all);
    Ok(())
}

/// `‖f‖_{B^{s+1}} <= (‖f‖_{B^s}‖f‖_{B^{s+2}})^{1/2}` by Hölder over blocks.
fn verify_interpolation(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    let bank = FilterBank64::new(&grid);
    let mut sampler = SmoothFieldSampler::new(c.seed);
    let mut ratios = Vec::with_capacity(c.verify.trials);
    for _ in 0..c.verify.trials {
        let f = sampler.mean_zero(&grid, c.verify.band);
        ratios.push(bank.verify_interpolation(&f, c.verify.s, c.verify.r)?);
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    b.check(Check::at_most("interpolation_max_ratio", max, 1.0 + 1e-12));
    b.result("interpolation_ratios", ratios);
    Ok(())
}

fn verify_holder(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    let bank = FilterBank64::new(&grid);
    let mut sampler = SmoothFieldSampler::new(c.seed);
    let mut reports = Vec::with_capacity(c.verify.holder_trials);
    for _ in 0..c.verify.holder_trials {
        let f = sampler.bounded(&grid, c.verify.band);
        reports.push(bank.verify_holder_equivalence(&f, c.verify.holder_eps)?);
    }
    let lo = reports.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
    b.check(Check::above("holder_min_ratio", lo, 0.0));
    b.check(finite("holder_max_ratio_finite", hi));
    b.result("holder", reports);
    Ok(())
}

fn verify_heat(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    let rep = verify_heat_semigroup(&grid, c.verify.s, c.verify.trials, c.seed, c.verify.band)?;
    b.check(finite("heat_semigroup_ratio_finite", rep.max_ratio));
    b.result("heat_semigroup", rep);
    Ok(())
}

fn verify_parabolic(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    let rep = verify_parabolic_estimate(&grid, &c.kappa, c.verify.s, c.verify.r, c.verify.parabolic_trials, c.seed)?;
    let mut csv = String::from("trial,C1,lhs,rhs,K\n");
    for (i, t) in rep.trials.iter().enumerate() {
        writeln!(csv, "{},{},{},{},{}", i, t.c1, t.lhs, t.rhs, t.k).expect("string write");
    }
    b.file("parabolic.csv", csv);
    b.check(finite("parabolic_c1_finite", rep.max_c1));
    b.result("parabolic", rep);
    Ok(())
}

fn verify_transport(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    if grid.dim() != 2 {
        bail!("transport growth is a two-dimensional experiment (grid.dim = {})", grid.dim());
    }
    let t = &c.transport;
    let setup = TransportSetup {
        shear: t.shear,
        potential: t.potential,
        beta: t.beta,
        t_end: t.t_end,
        dt: t.dt,
        band: t.band,
        seed: c.seed,
    };
    let rep = verify_transport_growth(&grid, &setup, None)?;
    b.file("transport.csv", rep.to_csv());
    b.check(finite("transport_sup_q_finite", rep.sup_q));
    b.check(Check::at_most("transport_sup_q_vs_envelope", rep.sup_q, rep.envelope_final / 10.0));
    #[derive(Serialize)]
    struct Brief {
        sup_q: f64,
        envelope_final: f64,
        calv_final: f64,
        samples: usize,
    }
    b.result(
        "transport",
        Brief {
            sup_q: rep.sup_q,
            envelope_final: rep.envelope_final,
            calv_final: rep.calv_final,
            samples: rep.samples.len(),
        },
    );
    Ok(())
}

fn verify_composition_bounds(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let grid = init::grid(c)?;
    let bank = FilterBank64::new(&grid);
    let mut sampler = SmoothFieldSampler::new(c.seed);
    let amp = c.verify.composition_amp;
    let ensemble: Vec<_> = (0..c.verify.trials)
        .map(|_| sampler.bounded(&grid, c.verify.band).map(|g| 1.0 + amp * g))
        .collect();
    let mut csv = String::from("which,min_ratio,max_ratio,samples\n");
    for (label, which) in [("a", Antiderivative::A), ("b", Antiderivative::B)] {
        let st = verify_composition(&bank, &ensemble, &c.kappa, which, c.verify.s, c.verify.r)?;
        writeln!(csv, "{label},{},{},{}", st.min_ratio, st.max_ratio, st.samples).expect("string write");
        b.check(finite(&format!("composition_{label}_finite"), st.max_ratio));
        b.result(&format!("composition_{label}"), st);
    }
    b.file("composition.csv", csv);
    Ok(())
}

/// Besov norms of each listed snapshot and, for two or more snapshots,
/// Chemin-Lerner norms of the sequence with trapezoid time weights.
fn norms(c: &RunConfig, b: &mut ReportBundle) -> Result<()> {
    let n = &c.norms;
    if n.paths.is_empty() {
        bail!("norms.paths is empty");
    }
    let grid = init::grid(c)?;
    let bank = FilterBank64::new(&grid);
    let p = if n.p == "2" { Lebesgue::Two } else { Lebesgue::Inf };
    let mut params = BesovParams::new(0.0, p, n.r)?;
    if n.homogeneous {
        params = params.homogeneous();
    }
    let kind = params.blocks();
    let mut fields = Vec::with_capacity(n.paths.len());
    let mut norms_csv = String::from("path,name,time,s,norm\n");
    let mut blocks_csv = String::from("path,j,norm\n");
    #[derive(Serialize)]
    struct Row {
        path: String,
        name: String,
        time: f64,
        s: f64,
        norm: f64,
    }
    let mut rows = Vec::new();
    for path in &n.paths {
        let (h, f) = init::load_snapshot_with_header(&grid, path)?;
        let shown = path.display().to_string().replace(',', ";");
        for &s in &n.s {
            let v = bank.besov_norm(&f, params.with_s(s))?;
            writeln!(norms_csv, "{shown},{},{},{s},{v}", h.name, h.time).expect("string write");
            rows.push(Row {
                path: shown.clone(),
                name: h.name.clone(),
                time: h.time,
                s,
                norm: v,
            });
        }
        for (j, a) in bank.block_norms(&f, p, kind)? {
            writeln!(blocks_csv, "{shown},{j},{a}").expect("string write");
        }
        fields.push((h.time, f));
    }
    b.file("norms.csv", norms_csv);
    b.file("blocks.csv", blocks_csv);
    b.result("norms", rows);

    if fields.len() >= 2 {
        if fields.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            bail!("Chemin-Lerner norms need snapshots in strictly increasing time");
        }
        let m = fields.len();
        let mut one = CheminLernerAccumulator::new(&bank, TimeExponent::One, p, kind);
        let mut sup = CheminLernerAccumulator::new(&bank, TimeExponent::Inf, p, kind);
        for (i, (_, f)) in fields.iter().enumerate() {
            let left = if i > 0 { fields[i].0 - fields[i - 1].0 } else { 0.0 };
            let right = if i + 1 < m { fields[i + 1].0 - fields[i].0 } else { 0.0 };
            one.push(&bank, f, 0.5 * (left + right))?;
            sup.push(&bank, f, 1.0)?;
        }
        let mut csv = String::from("s,q,norm\n");
        for &s in &n.s {
            writeln!(csv, "{s},1,{}", one.norm(s, n.r)?).expect("string write");
            writeln!(csv, "{s},inf,{}", sup.norm(s, n.r)?).expect("string write");
        }
        b.file("chemin_lerner.csv", csv);
    }
    Ok(())
}
