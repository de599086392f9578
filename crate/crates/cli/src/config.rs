//! Strict TOML run configuration.
//!
//! Every key is optional and has a documented default; unknown keys, type
//! mismatches and range violations are all collected before reporting.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use toml::{Table, Value};

use zeromach_core::coefficients::{CoefficientModel, KappaLaw};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// All problems found in a configuration document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensityInit {
    Uniform,
    /// `1 + eps g` with `g` bounded, mean-zero and of band `band`.
    Random { eps: f64, band: usize },
    Snapshot { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum VelocityInit {
    Zero,
    /// Solenoidal, unit RMS times `amp`.
    Random { amp: f64, band: usize },
    /// `amp (sin x₂, 0)`.
    Shear { amp: f64 },
    /// Two `tanh` layers of thickness `delta` at `x₂ = π/2, 3π/2`.
    DoubleShear { amp: f64, delta: f64 },
    /// `amp (sin x₁ cos x₂, -cos x₁ sin x₂)`.
    Cellular { amp: f64 },
    /// One snapshot per component.
    Snapshot { paths: Vec<PathBuf> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub pressure_tol: f64,
    pub pressure_max_iter: usize,
    pub cfl: f64,
    pub tol_mp: f64,
    pub div_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorConfig {
    pub s: f64,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    /// Snapshot every `stride` steps; zero disables snapshots.
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckConfig {
    pub density_residual: f64,
    pub kinetic_residual: f64,
    /// Bound on `|ρ - 1|` for runs started from uniform density.
    pub euler_density: f64,
    /// Bound on the relative kinetic energy drift per unit time for runs
    /// started from uniform density.
    pub euler_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PicardConfig {
    pub window: f64,
    pub n_max: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LifespanSection {
    pub eps: Vec<f64>,
    pub band: usize,
    pub t_max: f64,
    pub gradient_factor: f64,
    pub tail: f64,
    pub ell: f64,
    pub big_l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub trials: usize,
    pub band: usize,
    pub bernstein_j: Vec<i32>,
    pub s: f64,
    pub r: f64,
    pub holder_eps: f64,
    /// The Hölder check searches all grid shifts, so it gets its own count.
    pub holder_trials: usize,
    pub parabolic_trials: usize,
    pub composition_amp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportConfig {
    pub shear: f64,
    pub potential: f64,
    pub beta: f64,
    pub t_end: f64,
    pub dt: f64,
    pub band: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormsConfig {
    pub paths: Vec<PathBuf>,
    pub s: Vec<f64>,
    pub r: f64,
    pub p: String,
    pub homogeneous: bool,
}

/// Fully resolved configuration; serializes to the echo written in every
/// summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub kappa: CoefficientModel,
    pub rho: DensityInit,
    pub u: VelocityInit,
    pub solver: SolverConfig,
    pub monitors: MonitorConfig,
    pub output: OutputConfig,
    pub checks: CheckConfig,
    pub picard: PicardConfig,
    pub lifespan: LifespanSection,
    pub verify: VerifyConfig,
    pub transport: TransportConfig,
    pub norms: NormsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("empty document is valid")
    }
}

struct Reader {
    errors: Vec<ConfigError>,
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

fn join(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

impl Reader {
    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError {
            path: path.into(),
            message: message.into(),
        });
    }

    fn check_keys(&mut self, table: &Table, section: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.error(join(section, key), "unknown key");
            }
        }
    }

    /// Sub-table `name` of `root`, empty when absent.
    fn table(&mut self, root: &Table, section: &str, name: &str, allowed: &[&str]) -> Table {
        let path = join(section, name);
        match root.get(name) {
            None => Table::new(),
            Some(Value::Table(t)) => {
                self.check_keys(t, &path, allowed);
                t.clone()
            }
            Some(v) => {
                self.error(path, format!("expected a table, found {}", type_name(v)));
                Table::new()
            }
        }
    }

    fn float(&mut self, t: &Table, section: &str, key: &str, default: f64, ok: impl Fn(f64) -> Result<(), String>) -> f64 {
        let path = join(section, key);
        let v = match t.get(key) {
            None => return default,
            Some(Value::Float(x)) => *x,
            Some(Value::Integer(i)) => *i as f64,
            Some(v) => {
                self.error(path, format!("expected a number, found {}", type_name(v)));
                return default;
            }
        };
        if let Err(m) = ok(v) {
            self.error(path, m);
            return default;
        }
        v
    }

    fn int(&mut self, t: &Table, section: &str, key: &str, default: i64, ok: impl Fn(i64) -> Result<(), String>) -> i64 {
        let path = join(section, key);
        let v = match t.get(key) {
            None => return default,
            Some(Value::Integer(i)) => *i,
            Some(v) => {
                self.error(path, format!("expected an integer, found {}", type_name(v)));
                return default;
            }
        };
        if let Err(m) = ok(v) {
            self.error(path, m);
            return default;
        }
        v
    }

    fn string(&mut self, t: &Table, section: &str, key: &str, default: &str, choices: &[&str]) -> String {
        let path = join(section, key);
        match t.get(key) {
            None => default.to_string(),
            Some(Value::String(s)) => {
                if !choices.is_empty() && !choices.contains(&s.as_str()) {
                    self.error(path, format!("must be one of {}", choices.join(", ")));
                    return default.to_string();
                }
                s.clone()
            }
            Some(v) => {
                self.error(path, format!("expected a string, found {}", type_name(v)));
                default.to_string()
            }
        }
    }

    fn boolean(&mut self, t: &Table, section: &str, key: &str, default: bool) -> bool {
        match t.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(v) => {
                self.error(join(section, key), format!("expected a boolean, found {}", type_name(v)));
                default
            }
        }
    }

    fn float_list(&mut self, t: &Table, section: &str, key: &str, default: &[f64]) -> Vec<f64> {
        let path = join(section, key);
        match t.get(key) {
            None => default.to_vec(),
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    match v {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(x) => out.push(*x as f64),
                        v => self.error(format!("{path}[{i}]"), format!("expected a number, found {}", type_name(v))),
                    }
                }
                out
            }
            Some(v) => {
                self.error(path, format!("expected an array, found {}", type_name(v)));
                default.to_vec()
            }
        }
    }

    fn int_list(&mut self, t: &Table, section: &str, key: &str, default: &[i64]) -> Vec<i64> {
        let path = join(section, key);
        match t.get(key) {
            None => default.to_vec(),
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    match v {
                        Value::Integer(x) => out.push(*x),
                        v => self.error(format!("{path}[{i}]"), format!("expected an integer, found {}", type_name(v))),
                    }
                }
                out
            }
            Some(v) => {
                self.error(path, format!("expected an array, found {}", type_name(v)));
                default.to_vec()
            }
        }
    }

    fn string_list(&mut self, t: &Table, section: &str, key: &str) -> Vec<String> {
        let path = join(section, key);
        match t.get(key) {
            None => Vec::new(),
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    match v {
                        Value::String(s) => out.push(s.clone()),
                        v => self.error(format!("{path}[{i}]"), format!("expected a string, found {}", type_name(v))),
                    }
                }
                out
            }
            Some(v) => {
                self.error(path, format!("expected an array, found {}", type_name(v)));
                Vec::new()
            }
        }
    }
}

fn positive(x: f64) -> Result<(), String> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(format!("must be positive and finite, got {x}"))
    }
}

fn nonnegative(x: f64) -> Result<(), String> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(format!("must be nonnegative and finite, got {x}"))
    }
}

fn at_least(min: i64) -> impl Fn(i64) -> Result<(), String> {
    move |x| {
        if x >= min {
            Ok(())
        } else {
            Err(format!("must be at least {min}, got {x}"))
        }
    }
}

fn any_f(_: f64) -> Result<(), String> {
    Ok(())
}

const TOP_KEYS: &[&str] = &[
    "seed", "grid", "time", "kappa", "rho", "u", "solver", "monitors", "output", "checks", "picard", "lifespan",
    "verify", "transport", "norms",
];

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let root: Table = match text.parse::<Table>() {
        Ok(t) => t,
        Err(e) => {
            return Err(ConfigErrors(vec![ConfigError {
                path: "<document>".into(),
                message: e.to_string().trim().to_string(),
            }]))
        }
    };
    let mut rd = Reader { errors: Vec::new() };
    rd.check_keys(&root, "", TOP_KEYS);

    let seed = rd.int(&root, "", "seed", 0, at_least(0)) as u64;

    let t = rd.table(&root, "", "grid", &["dim", "n", "length"]);
    let dim = rd.int(&t, "grid", "dim", 2, |d| {
        if d == 2 || d == 3 {
            Ok(())
        } else {
            Err(format!("must be 2 or 3, got {d}"))
        }
    }) as usize;
    let n = rd.int(&t, "grid", "n", 64, |n| {
        if n >= 16 && (n as u64).is_power_of_two() {
            Ok(())
        } else {
            Err(format!("must be a power of two >= 16, got {n}"))
        }
    }) as usize;
    let length = rd.float(&t, "grid", "length", std::f64::consts::TAU, positive);
    let grid = GridConfig { dim, n, length };

    let t = rd.table(&root, "", "time", &["dt", "t_end"]);
    let time = TimeConfig {
        dt: rd.float(&t, "time", "dt", 2.5e-3, positive),
        t_end: rd.float(&t, "time", "t_end", 0.5, nonnegative),
    };
    if time.dt > 0.0 && time.t_end >= 0.0 {
        let steps = (time.t_end / time.dt).round();
        if (steps * time.dt - time.t_end).abs() > 1e-9 * time.t_end.max(time.dt) {
            rd.error("time.t_end", format!("must be a multiple of time.dt = {}", time.dt));
        }
    }

    let t = rd.table(&root, "", "kappa", &["law", "k0", "rho_min", "rho_max"]);
    let law = match rd.string(&t, "kappa", "law", "const", &["const", "linear"]).as_str() {
        "linear" => KappaLaw::Linear,
        _ => KappaLaw::Const,
    };
    let k0 = rd.float(&t, "kappa", "k0", 1.0, positive);
    let base = match law {
        KappaLaw::Const => CoefficientModel::constant(k0),
        KappaLaw::Linear => CoefficientModel::linear(k0),
    };
    let rho_min = rd.float(&t, "kappa", "rho_min", base.rho_min, positive);
    let rho_max = rd.float(&t, "kappa", "rho_max", base.rho_max, positive);
    if rho_min > 0.0 && rho_max > 0.0 && rho_min >= rho_max {
        rd.error("kappa.rho_max", format!("must exceed kappa.rho_min = {rho_min}"));
    }
    let kappa = base.with_bounds(rho_min, rho_max);

    let t = rd.table(&root, "", "rho", &["family", "eps", "band", "path"]);
    let family = rd.string(&t, "rho", "family", "uniform", &["uniform", "random", "snapshot"]);
    let cutoff = (n / 3).max(1) as i64;
    let band_ok = move |b: i64| {
        if b >= 1 && b <= cutoff {
            Ok(())
        } else {
            Err(format!("must lie in [1, {cutoff}] for grid.n = {n}, got {b}"))
        }
    };
    let rho = match family.as_str() {
        "random" => DensityInit::Random {
            eps: rd.float(&t, "rho", "eps", 0.1, |e| {
                if (0.0..1.0).contains(&e) {
                    Ok(())
                } else {
                    Err(format!("must lie in [0, 1), got {e}"))
                }
            }),
            band: rd.int(&t, "rho", "band", 8.min(cutoff), band_ok) as usize,
        },
        "snapshot" => {
            let p = rd.string(&t, "rho", "path", "", &[]);
            if p.is_empty() {
                rd.error("rho.path", "required for the snapshot family");
            }
            DensityInit::Snapshot { path: p.into() }
        }
        _ => DensityInit::Uniform,
    };
    for key in ["eps", "band", "path"] {
        let used = matches!(
            (family.as_str(), key),
            ("random", "eps") | ("random", "band") | ("snapshot", "path")
        );
        if !used && t.contains_key(key) {
            rd.error(format!("rho.{key}"), format!("not used by family \"{family}\""));
        }
    }

    let t = rd.table(&root, "", "u", &["family", "amp", "band", "delta", "paths"]);
    let family = rd.string(
        &t,
        "u",
        "family",
        "zero",
        &["zero", "random", "shear", "double_shear", "cellular", "snapshot"],
    );
    let amp = |rd: &mut Reader| rd.float(&t, "u", "amp", 1.0, nonnegative);
    let u = match family.as_str() {
        "random" => VelocityInit::Random {
            amp: amp(&mut rd),
            band: rd.int(&t, "u", "band", 4.min(cutoff), band_ok) as usize,
        },
        "shear" => VelocityInit::Shear { amp: amp(&mut rd) },
        "double_shear" => VelocityInit::DoubleShear {
            amp: amp(&mut rd),
            delta: rd.float(&t, "u", "delta", 0.1, positive),
        },
        "cellular" => VelocityInit::Cellular { amp: amp(&mut rd) },
        "snapshot" => {
            let paths: Vec<PathBuf> = rd.string_list(&t, "u", "paths").into_iter().map(PathBuf::from).collect();
            if paths.len() != dim {
                rd.error("u.paths", format!("needs one snapshot per component ({dim})"));
            }
            VelocityInit::Snapshot { paths }
        }
        _ => VelocityInit::Zero,
    };
    for key in ["amp", "band", "delta", "paths"] {
        let used = matches!(
            (family.as_str(), key),
            ("random", "amp" | "band")
                | ("shear", "amp")
                | ("double_shear", "amp" | "delta")
                | ("cellular", "amp")
                | ("snapshot", "paths")
        );
        if !used && t.contains_key(key) {
            rd.error(format!("u.{key}"), format!("not used by family \"{family}\""));
        }
    }

    let t = rd.table(&root, "", "solver", &["pressure_tol", "pressure_max_iter", "cfl", "tol_mp", "div_tol"]);
    let solver = SolverConfig {
        pressure_tol: rd.float(&t, "solver", "pressure_tol", 1e-10, positive),
        pressure_max_iter: rd.int(&t, "solver", "pressure_max_iter", 500, at_least(1)) as usize,
        cfl: rd.float(&t, "solver", "cfl", 0.5, positive),
        tol_mp: rd.float(&t, "solver", "tol_mp", 1e-8, nonnegative),
        div_tol: rd.float(&t, "solver", "div_tol", 1e-10, positive),
    };

    let r_ok = |r: f64| {
        if r >= 1.0 {
            Ok(())
        } else {
            Err(format!("must be at least 1 (inf allowed), got {r}"))
        }
    };
    let t = rd.table(&root, "", "monitors", &["s", "r"]);
    let monitors = MonitorConfig {
        s: rd.float(&t, "monitors", "s", 1.0, any_f),
        r: rd.float(&t, "monitors", "r", 1.0, r_ok),
    };

    let t = rd.table(&root, "", "output", &["stride"]);
    let output = OutputConfig {
        stride: rd.int(&t, "output", "stride", 0, at_least(0)) as usize,
    };

    let t = rd.table(
        &root,
        "",
        "checks",
        &["density_residual", "kinetic_residual", "euler_density", "euler_drift"],
    );
    let checks = CheckConfig {
        density_residual: rd.float(&t, "checks", "density_residual", 1e-4, positive),
        kinetic_residual: rd.float(&t, "checks", "kinetic_residual", 1e-3, positive),
        euler_density: rd.float(&t, "checks", "euler_density", 1e-13, positive),
        euler_drift: rd.float(&t, "checks", "euler_drift", 1e-6, positive),
    };

    let t = rd.table(&root, "", "picard", &["window", "n_max", "tol"]);
    let picard = PicardConfig {
        window: rd.float(&t, "picard", "window", 0.01, positive),
        n_max: rd.int(&t, "picard", "n_max", 20, at_least(3)) as usize,
        tol: rd.float(&t, "picard", "tol", 1e-10, positive),
    };

    let t = rd.table(
        &root,
        "",
        "lifespan",
        &["eps", "band", "t_max", "gradient_factor", "tail", "ell", "big_l"],
    );
    let lifespan = LifespanSection {
        eps: rd.float_list(&t, "lifespan", "eps", &[0.4, 0.2, 0.1, 0.05, 0.0]),
        band: rd.int(&t, "lifespan", "band", 4.min(cutoff), band_ok) as usize,
        t_max: rd.float(&t, "lifespan", "t_max", 7.0, positive),
        gradient_factor: rd.float(&t, "lifespan", "gradient_factor", 10.0, positive),
        tail: rd.float(&t, "lifespan", "tail", 1e-3, positive),
        ell: rd.float(&t, "lifespan", "ell", 6.0, |l| {
            if l > 5.0 {
                Ok(())
            } else {
                Err(format!("must exceed 5, got {l}"))
            }
        }),
        big_l: rd.float(&t, "lifespan", "big_l", 1.0, positive),
    };
    if lifespan.eps.iter().any(|e| !(*e >= 0.0 && *e < 1.0)) {
        rd.error("lifespan.eps", "amplitudes must lie in [0, 1)");
    }
    if lifespan.eps.windows(2).any(|w| w[1] > w[0]) {
        rd.error("lifespan.eps", "amplitudes must be in descending order");
    }

    let t = rd.table(
        &root,
        "",
        "verify",
        &[
            "trials",
            "band",
            "bernstein_j",
            "s",
            "r",
            "holder_eps",
            "holder_trials",
            "parabolic_trials",
            "composition_amp",
        ],
    );
    let verify = VerifyConfig {
        trials: rd.int(&t, "verify", "trials", 10, at_least(1)) as usize,
        band: rd.int(&t, "verify", "band", 8.min(cutoff), band_ok) as usize,
        bernstein_j: rd
            .int_list(&t, "verify", "bernstein_j", &[1, 2, 3])
            .into_iter()
            .map(|j| j as i32)
            .collect(),
        s: rd.float(&t, "verify", "s", 1.0, any_f),
        r: rd.float(&t, "verify", "r", 1.0, r_ok),
        holder_eps: rd.float(&t, "verify", "holder_eps", 0.5, |e| {
            if e > 0.0 && e < 1.0 {
                Ok(())
            } else {
                Err(format!("must lie in (0, 1), got {e}"))
            }
        }),
        holder_trials: rd.int(&t, "verify", "holder_trials", 2, at_least(1)) as usize,
        parabolic_trials: rd.int(&t, "verify", "parabolic_trials", 10, at_least(1)) as usize,
        composition_amp: rd.float(&t, "verify", "composition_amp", 0.3, |a| {
            if (0.0..1.0).contains(&a) {
                Ok(())
            } else {
                Err(format!("must lie in [0, 1), got {a}"))
            }
        }),
    };
    let j_max = (n as f64).log2() as i32 - 1;
    for (i, &j) in verify.bernstein_j.iter().enumerate() {
        if j < 0 || j > j_max {
            rd.error(format!("verify.bernstein_j[{i}]"), format!("must lie in [0, {j_max}], got {j}"));
        }
    }

    let t = rd.table(&root, "", "transport", &["shear", "potential", "beta", "t_end", "dt", "band"]);
    let transport = TransportConfig {
        shear: rd.float(&t, "transport", "shear", 1.0, any_f),
        potential: rd.float(&t, "transport", "potential", 0.25, any_f),
        beta: rd.float(&t, "transport", "beta", 1.0, positive),
        t_end: rd.float(&t, "transport", "t_end", 5.0, positive),
        dt: rd.float(&t, "transport", "dt", 5e-3, positive),
        band: rd.int(&t, "transport", "band", 3.min(cutoff), band_ok) as usize,
    };

    let t = rd.table(&root, "", "norms", &["paths", "s", "r", "p", "homogeneous"]);
    let norms = NormsConfig {
        paths: rd.string_list(&t, "norms", "paths").into_iter().map(PathBuf::from).collect(),
        s: rd.float_list(&t, "norms", "s", &[0.0, 1.0]),
        r: rd.float(&t, "norms", "r", 1.0, r_ok),
        p: rd.string(&t, "norms", "p", "inf", &["2", "inf"]),
        homogeneous: rd.boolean(&t, "norms", "homogeneous", false),
    };

    if rd.errors.is_empty() {
        Ok(RunConfig {
            seed,
            grid,
            time,
            kappa,
            rho,
            u,
            solver,
            monitors,
            output,
            checks,
            picard,
            lifespan,
            verify,
            transport,
            norms,
        })
    } else {
        Err(ConfigErrors(rd.errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.grid, GridConfig { dim: 2, n: 64, length: std::f64::consts::TAU });
        assert_eq!(c.time.dt, 2.5e-3);
        assert_eq!(c.kappa, CoefficientModel::constant(1.0));
        assert_eq!(c.rho, DensityInit::Uniform);
        assert_eq!(c.u, VelocityInit::Zero);
        assert_eq!(c.solver.pressure_tol, 1e-10);
    }

    #[test]
    fn bad_grid_size_names_the_key() {
        let e = parse_config("[grid]\nn = 12\n").unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].path, "grid.n");
    }

    #[test]
    fn all_errors_are_reported() {
        let e = parse_config("colour = 1\n[grid]\nn = 12\n[time]\ndt = \"small\"\n").unwrap_err();
        let paths: Vec<&str> = e.0.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, vec!["colour", "grid.n", "time.dt"]);
    }

    #[test]
    fn inline_kappa_table() {
        let c = parse_config("kappa = { law = \"linear\", k0 = 0.05 }\n").unwrap();
        assert_eq!(c.kappa, CoefficientModel::linear(0.05));
        let e = parse_config("kappa = { law = \"cubic\" }\n").unwrap_err();
        assert_eq!(e.0[0].path, "kappa.law");
    }

    #[test]
    fn family_specific_keys() {
        let e = parse_config("[rho]\nfamily = \"uniform\"\neps = 0.1\n").unwrap_err();
        assert_eq!(e.0[0].path, "rho.eps");
        let c = parse_config("[u]\nfamily = \"double_shear\"\namp = 2.0\ndelta = 0.2\n").unwrap();
        assert_eq!(c.u, VelocityInit::DoubleShear { amp: 2.0, delta: 0.2 });
    }
}
