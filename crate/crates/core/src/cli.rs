//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a numerical failure, 2 on a usage error.
//! Parameters come from flags, then from an optional TOML config file, then
//! from built-in defaults. Every JSON report embeds the resolved config.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{coeff_table, l0_closed, ln_quadrature, ln_table_quadrature, reflection_residual, Dim};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hyperbolic::{decay_datum, default_t_max, from_hyperbolic, log_times, residual_norms, to_hyperbolic, Variant};
use crate::profiles::{validate_assumption, DataSpec, Kind, Profile, DEFAULT_NMAX};
use crate::solver::{final_value_experiment, from_half_kg, half_kg_variables, EvolutionState, SolverConfig, Spectral};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "NLKG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nlkg", version, about = "Asymptotic profiles for complex nonlinear Klein-Gordon equations")]
pub struct Cli {
    /// TOML run config supplying defaults for every subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resonant coefficients L_n(zeta) as CSV.
    Coeffs(CoeffsArgs),
    /// Profile samples on a spatial grid as CSV.
    Profile(ProfileArgs),
    /// Residual norms and decay fit as JSON.
    Residual(ResidualArgs),
    /// Final-value experiment for the 1D solver.
    Solve(SolveArgs),
    /// Identity suite, or `check assumption` for a data report.
    Check(CheckArgs),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffsConfig {
    pub dimension: u32,
    pub zeta: f64,
    pub n_min: i64,
    pub n_max: i64,
    pub derivative: u32,
    pub quadrature: bool,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        Self { dimension: 2, zeta: 1.0, n_min: 0, n_max: 0, derivative: 0, quadrature: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub t: f64,
    pub with_correction: bool,
    pub nmax: usize,
    /// Spatial grid points per axis; the grid spans `[-t, t)`.
    pub points: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { t: 50.0, with_correction: false, nmax: DEFAULT_NMAX, points: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualConfig {
    pub variant: Variant,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub nmax: usize,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self { variant: Variant::WithCorrection, t_min: 10.0, t_max: 1000.0, samples: 16, nmax: DEFAULT_NMAX }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

/// Everything a run needs; round-trips through TOML.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Reserved for randomized test data; all current commands are deterministic.
    #[serde(default)]
    pub seed: u32,
    pub data: Option<DataSpec>,
    pub coeffs: Option<CoeffsConfig>,
    pub profile: Option<ProfileConfig>,
    pub residual: Option<ResidualConfig>,
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub dimension: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub zeta: Option<f64>,
    /// Single index; shorthand for `--n-min N --n-max N`.
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["n_min", "n_max"])]
    pub n: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub n_min: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub n_max: Option<i64>,
    /// Derivative order in zeta (0, 1 or 2).
    #[arg(long)]
    pub derivative: Option<u32>,
    /// Use trapezoid quadrature even where exact forms exist.
    #[arg(long)]
    pub quadrature: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flags shared by commands that build final data.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// TOML file holding a data spec.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub dimension: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub with_correction: bool,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Domain half-width.
    #[arg(long = "L")]
    pub half_width: Option<f64>,
    /// Grid points.
    #[arg(long = "N")]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Start time.
    #[arg(long = "T")]
    pub t_start: Option<f64>,
    #[arg(long = "T-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub amp_a: Option<f64>,
    #[arg(long)]
    pub amp_b: Option<f64>,
    /// Phase of B_1 relative to A_1, in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub phase_b: Option<f64>,
    /// Data spec file giving A_1, B_1 and hence the ratio zeta; overrides the amplitude flags.
    #[arg(long)]
    pub zeta_profile: Option<PathBuf>,
    #[arg(long)]
    pub no_dealias: bool,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(subcommand)]
    pub what: Option<CheckWhat>,
}

#[derive(Debug, Subcommand)]
pub enum CheckWhat {
    /// Hypothesis report for final data, as JSON.
    Assumption {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    match s {
        "with-correction" => Ok(Variant::WithCorrection),
        "without-correction" => Ok(Variant::WithoutCorrection),
        _ => Err(format!("unknown variant `{s}`; expected with-correction or without-correction")),
    }
}

/// Applies the thread override from the environment, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count")))?;
    if n == 0 {
        return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
    }
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match configure_threads().and_then(|()| run(cli, stdout)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

/// Runs a parsed command; `Ok` carries the exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Coeffs(a) => cmd_coeffs(a, file, out),
        Command::Profile(a) => cmd_profile(a, file, out),
        Command::Residual(a) => cmd_residual(a, file, out),
        Command::Solve(a) => cmd_solve(a, file, out),
        Command::Check(CheckArgs { what: None }) => cmd_check(out),
        Command::Check(CheckArgs { what: Some(CheckWhat::Assumption { data, out: path }) }) => {
            cmd_assumption(data, path, file, out)
        }
    }
}

/// Writes to `path` when given, else to `out`.
fn emit(path: Option<&Path>, out: &mut dyn Write, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, body)?,
        None => out.write_all(body)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a RunConfig,
    result: T,
}

fn json_report<T: Serialize>(config: &RunConfig, result: T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(&Report { config, result })?;
    v.push(b'\n');
    Ok(v)
}

fn resolve_data(args: &DataArgs, file: &RunConfig, default_dim: u32, default_spec: impl Fn(Dim) -> DataSpec) -> Result<DataSpec> {
    let mut spec = match (&args.data, &file.data) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        (None, Some(d)) => d.clone(),
        (None, None) => {
            let dim = Dim::from_int(args.dimension.unwrap_or(default_dim))?;
            default_spec(dim)
        }
    };
    if let Some(d) = args.dimension {
        if d != spec.dimension {
            return Err(Error::Config(format!("--dimension {d} contradicts data dimension {}", spec.dimension)));
        }
    }
    if let Some(l) = args.lambda {
        spec.lambda = l;
    }
    Ok(spec)
}

pub fn cmd_coeffs(a: CoeffsArgs, mut file: RunConfig, out: &mut dyn Write) -> Result<i32> {
    let mut c = file.coeffs.clone().unwrap_or_default();
    if let Some(v) = a.dimension {
        c.dimension = v;
    }
    if let Some(v) = a.zeta {
        c.zeta = v;
    }
    if let Some(n) = a.n {
        c.n_min = n;
        c.n_max = n;
    }
    if let Some(v) = a.n_min {
        c.n_min = v;
    }
    if let Some(v) = a.n_max {
        c.n_max = v;
    }
    if let Some(v) = a.derivative {
        c.derivative = v;
    }
    c.quadrature |= a.quadrature;
    let table = coeff_table(Dim::from_int(c.dimension)?, c.zeta, c.n_min, c.n_max, c.derivative, c.quadrature)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "zeta", "value", "method", "im_residue"])?;
    for (j, n) in (table.n_min..=table.n_max).enumerate() {
        w.write_record([
            n.to_string(),
            table.zeta.to_string(),
            table.values[j].to_string(),
            table.methods[j].as_str().to_string(),
            table.im_residues[j].to_string(),
        ])?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    if a.out.is_some() {
        file.output.csv = a.out.clone();
    }
    file.coeffs = Some(c);
    emit(a.out.as_deref(), out, &body)?;
    Ok(0)
}

pub fn cmd_profile(a: ProfileArgs, mut file: RunConfig, out: &mut dyn Write) -> Result<i32> {
    let spec = resolve_data(&a.data, &file, 1, |d| DataSpec::canonical(d, 1.0))?;
    let mut c = file.profile.clone().unwrap_or_default();
    if let Some(v) = a.t {
        c.t = v;
    }
    c.with_correction |= a.with_correction;
    if let Some(v) = a.nmax {
        c.nmax = v;
    }
    if let Some(v) = a.points {
        c.points = v;
    }
    let profile = Profile::build(spec.build()?, c.nmax)?;
    let dim = profile.dim();
    let xgrid = Grid::new(dim, c.points, c.t)?;
    let kind = if c.with_correction { Kind::UTilde } else { Kind::UAp };
    let (field, _) = profile.eval_x(c.t, &xgrid, kind)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    match dim {
        Dim::One => w.write_record(["x", "re", "im"])?,
        Dim::Two => w.write_record(["x", "y", "re", "im"])?,
    }
    for (idx, v) in field.values.iter().enumerate() {
        let p = xgrid.point(idx);
        let mut row = vec![p[0].to_string()];
        if dim == Dim::Two {
            row.push(p[1].to_string());
        }
        row.push(v.re.to_string());
        row.push(v.im.to_string());
        w.write_record(&row)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    file.data = Some(spec);
    file.profile = Some(c);
    emit(a.out.as_deref(), out, &body)?;
    Ok(0)
}

pub fn cmd_residual(a: ResidualArgs, mut file: RunConfig, out: &mut dyn Write) -> Result<i32> {
    let spec = resolve_data(&a.data, &file, 1, decay_datum)?;
    let dim = Dim::from_int(spec.dimension)?;
    let mut c = file.residual.clone().unwrap_or(ResidualConfig { t_max: default_t_max(dim), ..Default::default() });
    if let Some(v) = a.variant {
        c.variant = v;
    }
    if let Some(v) = a.t_min {
        c.t_min = v;
    }
    if let Some(v) = a.t_max {
        c.t_max = v;
    }
    if let Some(v) = a.samples {
        c.samples = v;
    }
    if let Some(v) = a.nmax {
        c.nmax = v;
    }
    let profile = Profile::build(spec.build()?, c.nmax)?;
    let report = residual_norms(&profile, c.variant, &log_times(c.t_min, c.t_max, c.samples)?)?;
    file.data = Some(spec);
    file.residual = Some(c);
    file.output.json = a.out.clone();
    let body = json_report(&file, &report)?;
    emit(a.out.as_deref(), out, &body)?;
    Ok(0)
}

pub fn cmd_solve(a: SolveArgs, mut file: RunConfig, out: &mut dyn Write) -> Result<i32> {
    let mut c = file.solver.unwrap_or_default();
    if let Some(v) = a.half_width {
        c.half_width = v;
    }
    if let Some(v) = a.grid_points {
        c.grid_points = v;
    }
    if let Some(v) = a.dt {
        c.dt = v;
    }
    if let Some(v) = a.lambda {
        c.lambda = v;
    }
    if let Some(v) = a.t_start {
        c.t_start = v;
    }
    if let Some(v) = a.t_end {
        c.t_end = v;
    }
    c.dealias &= !a.no_dealias;
    c.validate()?;
    let mut spec = match (&a.zeta_profile, &file.data) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        (None, Some(d)) => d.clone(),
        (None, None) => DataSpec::canonical(Dim::One, c.lambda),
    };
    if a.zeta_profile.is_none() {
        if let Some(v) = a.amp_a {
            spec.a.amplitude = v;
        }
        if let Some(v) = a.amp_b {
            spec.b.amplitude = v;
        }
        if let Some(v) = a.phase_b {
            spec.b.phase = spec.a.phase + v;
        }
    }
    if spec.dimension != 1 {
        return Err(Error::Config("the solver is one-dimensional".into()));
    }
    spec.lambda = c.lambda;
    let profile = Profile::build(spec.build()?, DEFAULT_NMAX)?;
    let report = final_value_experiment(&c, &profile)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "error", "error_uap", "profile_norm", "correction_norm", "im_norm", "residual_integral", "energy"])?;
    for j in 0..report.times.len() {
        w.write_record(
            [
                report.times[j],
                report.error_norms[j],
                report.error_uap_norms[j],
                report.profile_norms[j],
                report.correction_norms[j],
                report.im_norms[j],
                report.residual_integrals[j],
                report.energies[j],
            ]
            .map(|x| x.to_string()),
        )?;
    }
    let csv_body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    if let Some(p) = &a.out_csv {
        fs::write(p, &csv_body)?;
    }
    file.data = Some(spec);
    file.solver = Some(c);
    file.output = OutputConfig { csv: a.out_csv.clone(), json: a.out_json.clone() };
    let body = json_report(&file, &report)?;
    emit(a.out_json.as_deref(), out, &body)?;
    Ok(0)
}

pub fn cmd_assumption(data: DataArgs, path: Option<PathBuf>, mut file: RunConfig, out: &mut dyn Write) -> Result<i32> {
    let spec = resolve_data(&data, &file, 1, |d| DataSpec::canonical(d, 1.0))?;
    let report = validate_assumption(&spec.build()?);
    file.data = Some(spec);
    file.output.json = path.clone();
    let body = json_report(&file, &report)?;
    emit(path.as_deref(), out, &body)?;
    Ok(0)
}

/// One row of the identity suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn row(name: &'static str, value: f64, tolerance: f64) -> CheckRow {
    CheckRow { name, value, tolerance, pass: value <= tolerance }
}

/// Fast identities that must hold on any correct build.
pub fn identity_suite() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();

    let mut refl: f64 = 0.0;
    for dim in [Dim::One, Dim::Two] {
        for zeta in [0.5, 2.0] {
            for n in -4..=4 {
                refl = refl.max(reflection_residual(n, zeta, dim)?);
            }
        }
    }
    rows.push(row("reflection identity", refl, 1e-10));

    // Closed form, single-index quadrature and FFT table at one ratio.
    let mut tri: f64 = 0.0;
    for zeta in [0.5, 1.0, 2.0] {
        let closed = l0_closed(zeta)?;
        let quad = ln_quadrature(0, zeta, Dim::Two)?.value;
        let table = ln_table_quadrature(zeta, Dim::Two, 0, 0)?.0[0].value;
        tri = tri.max((closed - quad).abs()).max((quad - table).abs()).max((table - closed).abs());
    }
    rows.push(row("L0 oracle triangle", tri, 1e-10));

    let mut hyp: f64 = 0.0;
    for (dim, x) in [(Dim::One, [3.0, 0.0]), (Dim::One, [-7.5, 0.0]), (Dim::Two, [2.0, -1.5]), (Dim::Two, [0.0, 0.0])] {
        let t = 10.0;
        let (t2, x2) = from_hyperbolic(&to_hyperbolic(t, x, dim)?);
        hyp = hyp.max((t2 - t).abs()).max((x2[0] - x[0]).abs()).max((x2[1] - x[1]).abs());
    }
    rows.push(row("hyperbolic round trip", hyp, 1e-12));

    let grid = Grid::new(Dim::One, 64, 10.0)?;
    let sp = Spectral::new(grid)?;
    let u: Vec<Complex64> = (0..64).map(|i| Complex64::new((-grid.coord(i).powi(2)).exp(), 0.1 * (0.3 * grid.coord(i)).sin())).collect();
    let ut: Vec<Complex64> = (0..64).map(|i| Complex64::new(0.5 * (0.2 * grid.coord(i)).cos(), grid.coord(i) * (-grid.coord(i).powi(2)).exp())).collect();
    let state = EvolutionState { t: 0.0, u, ut };
    let (p, m) = half_kg_variables(&sp, &state);
    let back = from_half_kg(&sp, 0.0, &p, &m);
    let hk = back.u.iter().zip(&state.u).chain(back.ut.iter().zip(&state.ut)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    rows.push(row("half-wave round trip", hk, 1e-12));

    let cfg = RunConfig {
        seed: 7,
        data: Some(DataSpec::canonical(Dim::Two, 1.5)),
        residual: Some(ResidualConfig::default()),
        solver: Some(SolverConfig::default()),
        ..Default::default()
    };
    let same = RunConfig::from_toml(&cfg.to_toml()?)? == cfg;
    rows.push(row("config round trip", if same { 0.0 } else { 1.0 }, 0.0));
    Ok(rows)
}

pub fn cmd_check(out: &mut dyn Write) -> Result<i32> {
    let rows = identity_suite()?;
    for r in &rows {
        writeln!(out, "{:<24} {:>12.3e} {:>10.1e}  {}", r.name, r.value, r.tolerance, if r.pass { "PASS" } else { "FAIL" })?;
    }
    Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
}
