//! Command-line driver: argument and config-file handling, caching and
//! CSV/JSON output for the `stable-cones` numerics.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use statrs::function::gamma::gamma;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use stable_cones::cache::{Cache, CACHE_ENV};
use stable_cones::cone::Cone;
use stable_cones::constants::{verify_all, DEFAULT_IDENTITY_TOL};
use stable_cones::energy::{first_variation_scan, Configuration1D, EnergyMesh};
use stable_cones::error::Error;
use stable_cones::exponent::{find_aperture, ApertureResult, MeshControls};
use stable_cones::fraclap::{flap_1d, Profile1D, QuadratureSpec};
use stable_cones::kernel::{mellin_m0, KernelConfig, KernelTable, TableSpec};
use stable_cones::stability::{check_stability_at, hardy_2d_demo, StabilityConfig, StabilityReport};
use stable_cones::wos::{green_estimate, WosConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DEFAULT_CACHE_DIR: &str = ".stable-cones-cache";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileKind {
    /// `t₊^γ`
    PowerPlus,
    Constant,
}

#[derive(Debug, Parser)]
#[command(name = "stable-cones", version, about = "Numerics for stable cones of the fractional one-phase problem")]
pub struct Cli {
    /// Key-value file supplying defaults for the global settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true)]
    pub base_cells: Option<usize>,
    #[arg(long, global = true)]
    pub grading: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form constants against their integral representations.
    Verify {
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        dims: Vec<u32>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// One-dimensional fractional Laplacian of a profile.
    Flap {
        #[arg(long, value_enum, default_value = "power-plus")]
        profile: ProfileKind,
        /// Exponent for power-plus, value for constant; defaults to `s`.
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        #[arg(long)]
        s: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        points: Vec<f64>,
    },
    /// Energy change under domain variations of the half-line profile.
    Firstvar {
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        /// Defaults to `Λ/Γ(1+s)`.
        #[arg(long)]
        u0: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.02,-0.01,0.01,0.02")]
        eps: Vec<f64>,
        #[arg(long)]
        level: Option<usize>,
    },
    /// Critical aperture β with λ(β) = s.
    Aperture {
        n: usize,
        s: f64,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Green function spot check on a cone.
    Wos {
        n: usize,
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y: Vec<f64>,
    },
    /// Radial kernel table on the critical cone and the resulting m(0).
    KernelTable {
        n: usize,
        s: f64,
        /// Skips the aperture search.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// H₁ against m(0) on the critical cone.
    Stability {
        n: usize,
        s: f64,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Logarithmic Hardy term against the bounded seminorm in 2D.
    Hardy2d {
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long = "r", value_delimiter = ',', default_value = "100,1000,10000")]
        r_list: Vec<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify { .. } => "verify",
            Command::Flap { .. } => "flap",
            Command::Firstvar { .. } => "firstvar",
            Command::Aperture { .. } => "aperture",
            Command::Wos { .. } => "wos",
            Command::KernelTable { .. } => "kernel-table",
            Command::Stability { .. } => "stability",
            Command::Hardy2d { .. } => "hardy2d",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Aperture { .. } | Command::Wos { .. } | Command::Stability { .. } => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Effective settings after merging defaults, the config file and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub format: Option<Format>,
    pub cache_dir: PathBuf,
    pub cache: bool,
    pub seed: u64,
    pub paths: usize,
    pub batch_size: usize,
    pub max_steps: usize,
    pub ball_fraction: f64,
    pub vertex_radius: f64,
    pub eps_levels: Vec<f64>,
    pub window: f64,
    pub shell_half_width: f64,
    pub cells: usize,
    pub t_split: f64,
    pub base_cells: usize,
    pub grading: f64,
    pub aperture_tol: f64,
    pub identity_tol: f64,
    pub flap_rel_tol: f64,
    pub energy_level: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let k = KernelConfig::default();
        let t = TableSpec::default();
        let m = MeshControls::default();
        Self {
            format: None,
            cache_dir: PathBuf::from(DEFAULT_CACHE_DIR),
            cache: true,
            seed: k.wos.seed,
            paths: k.wos.paths,
            batch_size: k.wos.batch_size,
            max_steps: k.wos.max_steps,
            ball_fraction: k.wos.ball_fraction,
            vertex_radius: k.wos.vertex_radius,
            eps_levels: k.eps_levels,
            window: k.window,
            shell_half_width: k.shell_half_width,
            cells: t.cells,
            t_split: t.t_split,
            base_cells: m.base_cells,
            grading: m.grading,
            aperture_tol: 1e-3,
            identity_tol: DEFAULT_IDENTITY_TOL,
            flap_rel_tol: QuadratureSpec::default().target_rel_err,
            energy_level: EnergyMesh::default().level,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.trim().parse().map_err(|_| format!("config key {key}: cannot parse {v:?}"))
}

impl Settings {
    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<(), String> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "format" => {
                    self.format = Some(Format::from_str(value, true).map_err(|_| format!("unknown format {value:?}"))?)
                }
                "cache_dir" => self.cache_dir = PathBuf::from(value),
                "cache" => self.cache = parse_value(key, value)?,
                "seed" => self.seed = parse_value(key, value)?,
                "paths" => self.paths = parse_value(key, value)?,
                "batch_size" => self.batch_size = parse_value(key, value)?,
                "max_steps" => self.max_steps = parse_value(key, value)?,
                "ball_fraction" => self.ball_fraction = parse_value(key, value)?,
                "vertex_radius" => self.vertex_radius = parse_value(key, value)?,
                "eps_levels" => {
                    self.eps_levels = value
                        .split(',')
                        .map(|v| parse_value(key, v))
                        .collect::<Result<_, _>>()?
                }
                "window" => self.window = parse_value(key, value)?,
                "shell_half_width" => self.shell_half_width = parse_value(key, value)?,
                "cells" => self.cells = parse_value(key, value)?,
                "t_split" => self.t_split = parse_value(key, value)?,
                "base_cells" => self.base_cells = parse_value(key, value)?,
                "grading" => self.grading = parse_value(key, value)?,
                "aperture_tol" => self.aperture_tol = parse_value(key, value)?,
                "identity_tol" => self.identity_tol = parse_value(key, value)?,
                "flap_rel_tol" => self.flap_rel_tol = parse_value(key, value)?,
                "energy_level" => self.energy_level = parse_value(key, value)?,
                _ => return Err(format!("config line {}: unknown key {key:?}", lineno + 1)),
            }
        }
        Ok(())
    }

    /// Precedence is flag, then the environment, then the config file.
    fn apply_flags(&mut self, cli: &Cli) {
        if let Some(d) = std::env::var_os(CACHE_ENV).filter(|d| !d.is_empty()) {
            self.cache_dir = PathBuf::from(d);
        }
        if let Some(f) = cli.format {
            self.format = Some(f);
        }
        if let Some(d) = &cli.cache_dir {
            self.cache_dir = d.clone();
        }
        if cli.no_cache {
            self.cache = false;
        }
        if let Some(v) = cli.seed {
            self.seed = v;
        }
        if let Some(v) = cli.paths {
            self.paths = v;
        }
        if let Some(v) = cli.base_cells {
            self.base_cells = v;
        }
        if let Some(v) = cli.grading {
            self.grading = v;
        }
    }

    pub fn mesh(&self) -> MeshControls {
        MeshControls {
            base_cells: self.base_cells,
            grading: self.grading,
        }
    }

    pub fn kernel(&self) -> KernelConfig {
        KernelConfig {
            wos: self.wos(),
            eps_levels: self.eps_levels.clone(),
            window: self.window,
            shell_half_width: self.shell_half_width,
        }
    }

    pub fn wos(&self) -> WosConfig {
        WosConfig {
            seed: self.seed,
            paths: self.paths,
            ball_fraction: self.ball_fraction,
            max_steps: self.max_steps,
            batch_size: self.batch_size,
            vertex_radius: self.vertex_radius,
        }
    }

    pub fn table(&self) -> TableSpec {
        TableSpec {
            cells: self.cells,
            t_split: self.t_split,
        }
    }
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Domain { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Failed(e.to_string()),
        }
    }
}

/// Rows of a CSV table.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

struct Outcome {
    json: Value,
    table: Table,
    /// Human-readable lines for standard error.
    summary: Vec<String>,
    passed: bool,
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn render(command: &str, args: &Value, settings: &Settings, format: Format, out: &Outcome) -> String {
    let config = json!({ "command": command, "args": args, "settings": settings });
    match format {
        Format::Json => {
            let doc = json!({
                "tool": "stable-cones",
                "version": env!("CARGO_PKG_VERSION"),
                "config": config,
                "result": out.json,
            });
            serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# stable-cones {} {command}", env!("CARGO_PKG_VERSION"));
            let flat: BTreeMap<String, Value> = [("args", args), ("settings", &config["settings"])]
                .iter()
                .flat_map(|(prefix, v)| match v {
                    Value::Object(m) => m.iter().map(|(k, v)| (format!("{prefix}.{k}"), v.clone())).collect::<Vec<_>>(),
                    _ => Vec::new(),
                })
                .collect();
            for (k, v) in flat {
                let _ = writeln!(s, "# {k}={v}");
            }
            let _ = writeln!(s, "{}", out.table.columns.join(","));
            for row in &out.table.rows {
                let _ = writeln!(s, "{}", row.join(","));
            }
            s
        }
    }
}

fn cache_for(settings: &Settings) -> Option<Cache> {
    settings.cache.then(|| Cache::new(settings.cache_dir.clone()))
}

fn cached<P, T, F>(settings: &Settings, subject: &str, params: &P, compute: F) -> Result<(T, bool), Failure>
where
    P: Serialize,
    T: Serialize + serde::de::DeserializeOwned,
    F: FnOnce() -> stable_cones::error::Result<T>,
{
    match cache_for(settings) {
        Some(c) => Ok(c.get_or_compute(subject, params, compute)?),
        None => Ok((compute()?, false)),
    }
}

fn aperture(settings: &Settings, n: usize, s: f64, tol: f64) -> Result<(ApertureResult, bool), Failure> {
    let mesh = settings.mesh();
    let params = json!({ "n": n, "s": s, "tol": tol, "mesh": mesh });
    cached(settings, "aperture", &params, || find_aperture(n, s, tol, &mesh))
}

fn run_command(cmd: &Command, settings: &Settings) -> Result<(Value, Outcome), Failure> {
    match cmd {
        Command::Verify { s, dims, tol } => {
            let s_list = if s.is_empty() {
                (1..10).map(|k| k as f64 / 10.0).collect()
            } else {
                s.clone()
            };
            let dims = if dims.is_empty() { vec![2, 3, 4, 5] } else { dims.clone() };
            let tol = tol.unwrap_or(settings.identity_tol);
            let mut reports = Vec::new();
            for &sv in &s_list {
                reports.extend(verify_all(sv, &dims, tol)?);
            }
            let passed = reports.iter().all(|r| r.pass);
            let rows = reports
                .iter()
                .map(|r| {
                    vec![
                        r.identity_id.to_string(),
                        r.s.to_string(),
                        r.n.map(|n| n.to_string()).unwrap_or_default(),
                        num(r.lhs),
                        num(r.rhs),
                        num(r.residual),
                        if r.pass { "pass" } else { "fail" }.to_string(),
                    ]
                })
                .collect();
            let failed = reports.iter().filter(|r| !r.pass).count();
            Ok((
                json!({ "s": s_list, "dims": dims, "tol": tol }),
                Outcome {
                    json: serde_json::to_value(&reports).map_err(Error::from)?,
                    table: Table {
                        columns: vec!["id", "s", "n", "lhs", "rhs", "residual", "status"],
                        rows,
                    },
                    summary: vec![format!("{} identities checked, {failed} failed", reports.len())],
                    passed,
                },
            ))
        }
        Command::Flap { profile, gamma, s, points } => {
            let profile_value = match profile {
                ProfileKind::PowerPlus => Profile1D::power_plus(gamma.unwrap_or(*s)),
                ProfileKind::Constant => Profile1D::Constant {
                    value: gamma.unwrap_or(1.0),
                },
            };
            let q = QuadratureSpec {
                target_rel_err: settings.flap_rel_tol,
                ..QuadratureSpec::default()
            };
            let values = points
                .iter()
                .map(|x| flap_1d(&profile_value, *s, *x, &q))
                .collect::<stable_cones::error::Result<Vec<_>>>()?;
            let rows = values
                .iter()
                .map(|v| vec![v.x.to_string(), num(v.value), num(v.error_estimate)])
                .collect();
            let kind = match profile {
                ProfileKind::PowerPlus => "power-plus",
                ProfileKind::Constant => "constant",
            };
            Ok((
                json!({ "profile": kind, "gamma": gamma, "s": s, "points": points }),
                Outcome {
                    json: serde_json::to_value(&values).map_err(Error::from)?,
                    table: Table {
                        columns: vec!["x", "value", "error_estimate"],
                        rows,
                    },
                    summary: Vec::new(),
                    passed: true,
                },
            ))
        }
        Command::Firstvar { s, u0, lambda, eps, level } => {
            let u0 = u0.unwrap_or(lambda / gamma(1.0 + s));
            let level = level.unwrap_or(settings.energy_level);
            let c = Configuration1D::new(0.0, u0, (-1.0, 1.0), *lambda).with_mesh(EnergyMesh { level });
            let scan = first_variation_scan(&c, *s, eps)?;
            let rows = scan
                .eps
                .iter()
                .zip(&scan.delta_energy)
                .map(|(e, d)| vec![e.to_string(), num(*d)])
                .collect();
            let summary = vec![
                format!("slope {:e} (expected {:e})", scan.slope, scan.expected_slope),
                format!("critical U0 {:.8}", scan.critical_u0),
            ];
            Ok((
                json!({ "s": s, "u0": u0, "lambda": lambda, "eps": eps, "level": level }),
                Outcome {
                    json: serde_json::to_value(&scan).map_err(Error::from)?,
                    table: Table {
                        columns: vec!["epsilon", "delta_energy"],
                        rows,
                    },
                    summary,
                    passed: true,
                },
            ))
        }
        Command::Aperture { n, s, tol } => {
            let tol = tol.unwrap_or(settings.aperture_tol);
            let (a, hit) = aperture(settings, *n, *s, tol)?;
            let row = vec![
                a.n.to_string(),
                a.s.to_string(),
                num(a.beta),
                num(a.lambda),
                num(a.mu),
                num(a.error_estimate),
                a.evaluations.to_string(),
                a.mesh_signature.clone(),
            ];
            Ok((
                json!({ "n": n, "s": s, "tol": tol }),
                Outcome {
                    json: serde_json::to_value(&a).map_err(Error::from)?,
                    table: Table {
                        columns: vec!["n", "s", "beta", "lambda", "mu", "error_estimate", "evaluations", "mesh_signature"],
                        rows: vec![row],
                    },
                    summary: vec![format!("beta* = {:.6}{}", a.beta, if hit { " (cached)" } else { "" })],
                    passed: true,
                },
            ))
        }
        Command::Wos { n, s, beta, x, y } => {
            let cone = Cone::new(*n, *beta)?;
            let g = green_estimate(&cone, x, y, *s, &settings.wos())?;
            let row = vec![num(g.value), num(g.std_err), g.n_samples.to_string(), num(g.truncated_fraction)];
            Ok((
                json!({ "n": n, "s": s, "beta": beta, "x": x, "y": y }),
                Outcome {
                    json: serde_json::to_value(&g).map_err(Error::from)?,
                    table: Table {
                        columns: vec!["value", "std_err", "n_samples", "truncated_fraction"],
                        rows: vec![row],
                    },
                    summary: Vec::new(),
                    passed: true,
                },
            ))
        }
        Command::KernelTable { n, s, beta, tol } => {
            let tol = tol.unwrap_or(settings.aperture_tol);
            let beta = match beta {
                Some(b) => *b,
                None => aperture(settings, *n, *s, tol)?.0.beta,
            };
            let cone = Cone::new(*n, beta)?;
            let (kc, spec) = (settings.kernel(), settings.table());
            let params = json!({ "n": n, "s": s, "beta": beta, "kernel": kc, "table": spec });
            let (table, _) = cached(settings, "kernel-table", &params, || KernelTable::build(&cone, *s, &spec, &kc))?;
            let m0 = mellin_m0(&table, *n)?;
            let rows = table
                .t_grid
                .iter()
                .zip(&table.values)
                .zip(&table.std_errs)
                .map(|((t, v), e)| vec![t.to_string(), num(*v), num(*e)])
                .collect();
            Ok((
                json!({ "n": n, "s": s, "beta": beta, "tol": tol }),
                Outcome {
                    json: json!({ "table": table, "m0": m0 }),
                    table: Table {
                        columns: vec!["t", "value", "std_err"],
                        rows,
                    },
                    summary: vec![
                        format!("near-one paired integral {:e} ± {:e}", table.near_one.value, table.near_one.std_err),
                        format!("m(0) = {:e} ± {:e}", m0.value, m0.std_err),
                    ],
                    passed: true,
                },
            ))
        }
        Command::Stability { n, s, tol } => {
            let tol = tol.unwrap_or(settings.aperture_tol);
            let (a, _) = aperture(settings, *n, *s, tol)?;
            let cfg = StabilityConfig {
                kernel: settings.kernel(),
                table: settings.table(),
                mesh: settings.mesh(),
                aperture_tol: tol,
            };
            let params = json!({ "aperture": a, "config": cfg });
            let (r, _): (StabilityReport, bool) = cached(settings, "stability", &params, || check_stability_at(&a, &cfg))?;
            let rows = vec![
                vec!["n".into(), r.n.to_string()],
                vec!["s".into(), r.s.to_string()],
                vec!["beta_star".into(), num(r.beta_star)],
                vec!["h1".into(), num(r.h1.value)],
                vec!["h1_std_err".into(), num(r.h1.std_err)],
                vec!["m0".into(), num(r.m0.value)],
                vec!["m0_std_err".into(), num(r.m0.std_err)],
                vec!["margin".into(), num(r.margin)],
                vec!["combined_sigma".into(), num(r.combined_sigma)],
                vec!["verdict".into(), r.verdict.as_str().into()],
            ];
            let summary = vec![
                format!("n = {}, s = {}, beta* = {:.6}", r.n, r.s, r.beta_star),
                format!("H1   = {:.5} ± {:.5}", r.h1.value, r.h1.std_err),
                format!("m(0) = {:.5} ± {:.5}", r.m0.value, r.m0.std_err),
                format!("verdict: {} ({})", r.verdict.as_str(), r.note),
            ];
            Ok((
                json!({ "n": n, "s": s, "tol": tol }),
                Outcome {
                    json: serde_json::to_value(&r).map_err(Error::from)?,
                    table: Table {
                        columns: vec!["key", "value"],
                        rows,
                    },
                    summary,
                    passed: true,
                },
            ))
        }
        Command::Hardy2d { s, r_list } => {
            let h = hardy_2d_demo(*s, r_list)?;
            let rows = h
                .r_grid
                .iter()
                .zip(&h.lhs_values)
                .zip(&h.rhs_values)
                .map(|((r, l), q)| vec![r.to_string(), num(*l), num(*q)])
                .collect();
            Ok((
                json!({ "s": s, "r": r_list }),
                Outcome {
                    json: serde_json::to_value(&h).map_err(Error::from)?,
                    table: Table {
                        columns: vec!["R", "lhs", "rhs"],
                        rows,
                    },
                    summary: vec![format!(
                        "log slope {:.6} = {:.6} x rays",
                        h.fitted_log_slope,
                        h.fitted_log_slope / h.cap_measure
                    )],
                    passed: true,
                },
            ))
        }
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the exit code. Results go to `stdout` or `--output`, messages to
/// `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version arrive here with exit code 0
            let text = e.render().to_string();
            if e.exit_code() == 0 {
                let _ = write!(stdout, "{text}");
                return EXIT_OK;
            }
            let _ = write!(stderr, "{text}");
            return EXIT_USAGE;
        }
    };
    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        let applied = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))
            .and_then(|text| settings.apply_config(&text));
        if let Err(msg) = applied {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
    }
    settings.apply_flags(&cli);
    let format = settings.format.unwrap_or_else(|| cli.command.default_format());
    match run_command(&cli.command, &settings) {
        Ok((args, outcome)) => {
            let text = render(cli.command.name(), &args, &settings, format, &outcome);
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &text).map_err(|e| e.to_string()),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return EXIT_FAILED;
            }
            for line in &outcome.summary {
                let _ = writeln!(stderr, "{line}");
            }
            if outcome.passed {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Failed(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_FAILED
        }
    }
}
