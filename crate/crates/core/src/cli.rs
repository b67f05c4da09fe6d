//! Command-line front end: configuration loading, subcommands composing the
//! computational modules, and deterministic CSV/JSON emission.
//!
//! Precedence for every setting is flag > config file > default. Usage
//! problems exit with code 2; computational/module errors exit with code 1
//! and a single-line diagnostic on stderr.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io::{self, SeriesFormat};
use crate::modes::{self, classify_regime};
use crate::occupation::{self, InitialOccupation, ThermalState};
use crate::oracle;
use crate::spectra::SpectralDensity;
use crate::volterra::{self, TimeGrid};

#[derive(Parser, Debug)]
#[command(
    name = "oscbath",
    about = "Reduced dynamics of an oscillator in a structured bosonic bath",
    version,
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the critical coupling strength eta_c for a half-side spectrum
    Threshold(CommonOpts),
    /// Report bound modes (omega0, amplitude) and the stabilization regime as JSON
    Modes(CommonOpts),
    /// Integrate the survival amplitude u(t) and emit the trajectory
    Evolve(CommonOpts),
    /// Mean occupation number n(t) against a discretized thermal bath
    Occupation(CommonOpts),
    /// Compare the integro-differential solver with the finite-bath exact solution
    Oracle(CommonOpts),
    /// Run evolve + modes over a list of parameter values into a directory
    Sweep(SweepOpts),
}

#[derive(Args, Debug, Clone, Default)]
struct CommonOpts {
    /// JSON config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spectral family: ohmic | triangle | square | gapped-exponential | lorentzian | tabulated
    #[arg(long)]
    spectrum: Option<String>,
    /// Overall coupling strength eta >= 0
    #[arg(long)]
    eta: Option<f64>,
    /// System frequency Omega (also the triangle/square spectral scale)
    #[arg(long)]
    omega: Option<f64>,
    /// Ohmic cutoff frequency
    #[arg(long)]
    omega_c: Option<f64>,
    /// Gapped spectrum: lower-band amplitude
    #[arg(long)]
    eta1: Option<f64>,
    /// Gapped spectrum: upper-band amplitude
    #[arg(long)]
    eta2: Option<f64>,
    /// Gapped spectrum: lower-band decay rate
    #[arg(long)]
    gamma1: Option<f64>,
    /// Gapped spectrum: upper-band decay rate
    #[arg(long)]
    gamma2: Option<f64>,
    /// Gapped spectrum: lower gap edge
    #[arg(long)]
    omega1: Option<f64>,
    /// Gapped spectrum: upper gap edge
    #[arg(long)]
    omega2: Option<f64>,
    /// Lorentzian center frequency
    #[arg(long)]
    center: Option<f64>,
    /// Lorentzian half-width
    #[arg(long)]
    half_width: Option<f64>,
    /// CSV file (header omega,j) for a tabulated spectrum
    #[arg(long)]
    table: Option<PathBuf>,
    /// Time horizon
    #[arg(long)]
    t_max: Option<f64>,
    /// Time step (default: min(0.01/Omega, 0.1/sqrt(total weight)))
    #[arg(long)]
    dt: Option<f64>,
    /// Inverse temperature; "inf" selects T = 0
    #[arg(long)]
    beta: Option<String>,
    /// Number of discretized bath modes
    #[arg(long)]
    n_modes: Option<usize>,
    /// Lower edge of the discretization window
    #[arg(long)]
    window_lo: Option<f64>,
    /// Upper edge of the discretization window
    #[arg(long)]
    window_hi: Option<f64>,
    /// Initial system occupation <a^dag a>
    #[arg(long)]
    n_system: Option<f64>,
    /// Output path (stdout when omitted; directory for sweep)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Series output format: csv | json
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct SweepOpts {
    #[command(flatten)]
    common: CommonOpts,
    /// Parameter to sweep (only "eta" is supported)
    #[arg(long)]
    param: String,
    /// Comma-separated parameter values
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
    /// Worker pool size (default: logical cores)
    #[arg(long)]
    jobs: Option<usize>,
}

enum CliError {
    Usage(String),
    Module(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Module(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Entry point used by `main` and by in-process tests. Returns the exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    let outcome = match cli.command {
        Command::Threshold(o) => cmd_threshold(&o),
        Command::Modes(o) => cmd_modes(&o),
        Command::Evolve(o) => cmd_evolve(&o),
        Command::Occupation(o) => cmd_occupation(&o),
        Command::Oracle(o) => cmd_oracle(&o),
        Command::Sweep(o) => cmd_sweep(&o),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(CliError::Module(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

// ---------------------------------------------------------------------------
// Config file

/// Raw settings from a config file, one slot per recognized key.
#[derive(Debug, Clone, Default)]
struct FileConfig {
    spectrum_kind: Option<String>,
    eta: Option<f64>,
    omega_c: Option<f64>,
    spectrum_omega: Option<f64>,
    eta1: Option<f64>,
    eta2: Option<f64>,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    omega1: Option<f64>,
    omega2: Option<f64>,
    center: Option<f64>,
    half_width: Option<f64>,
    table: Option<PathBuf>,
    system_omega: Option<f64>,
    t_max: Option<f64>,
    dt: Option<f64>,
    n_modes: Option<usize>,
    window_lo: Option<f64>,
    window_hi: Option<f64>,
    beta: Option<f64>,
    n_system: Option<f64>,
    out: Option<PathBuf>,
    format: Option<String>,
}

fn cfg_err(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

fn want_obj<'v>(v: &'v Value, path: &str) -> Result<&'v serde_json::Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| cfg_err(format!("{path}: expected an object")))
}

fn want_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| cfg_err(format!("{path}: expected a number")))
}

fn want_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| cfg_err(format!("{path}: expected a non-negative integer")))
}

fn want_str(v: &Value, path: &str) -> Result<String> {
    v.as_str()
        .map(str::to_owned)
        .ok_or_else(|| cfg_err(format!("{path}: expected a string")))
}

fn reject_unknown(
    map: &serde_json::Map<String, Value>,
    path: &str,
    allowed: &[&str],
) -> Result<()> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            let full = if path.is_empty() {
                key.clone()
            } else {
                format!("{path}.{key}")
            };
            return Err(cfg_err(format!("unknown key '{full}'")));
        }
    }
    Ok(())
}

/// Load and strictly validate a JSON config file; every invariant violation
/// names the offending field path.
fn load_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root: Value =
        serde_json::from_str(&text).map_err(|e| cfg_err(format!("malformed JSON: {e}")))?;
    let top = want_obj(&root, "config")?;
    reject_unknown(
        top,
        "",
        &[
            "spectrum",
            "system_omega",
            "grid",
            "bath",
            "thermal",
            "initial",
            "output",
        ],
    )?;

    let mut cfg = FileConfig::default();

    if let Some(s) = top.get("spectrum") {
        let m = want_obj(s, "spectrum")?;
        reject_unknown(
            m,
            "spectrum",
            &[
                "kind", "eta", "omega_c", "omega", "eta1", "eta2", "gamma1", "gamma2", "omega1",
                "omega2", "center", "half_width", "path",
            ],
        )?;
        if let Some(v) = m.get("kind") {
            cfg.spectrum_kind = Some(want_str(v, "spectrum.kind")?);
        }
        let num = |key: &str, slot: &mut Option<f64>| -> Result<()> {
            if let Some(v) = m.get(key) {
                *slot = Some(want_f64(v, &format!("spectrum.{key}"))?);
            }
            Ok(())
        };
        num("eta", &mut cfg.eta)?;
        num("omega_c", &mut cfg.omega_c)?;
        num("omega", &mut cfg.spectrum_omega)?;
        num("eta1", &mut cfg.eta1)?;
        num("eta2", &mut cfg.eta2)?;
        num("gamma1", &mut cfg.gamma1)?;
        num("gamma2", &mut cfg.gamma2)?;
        num("omega1", &mut cfg.omega1)?;
        num("omega2", &mut cfg.omega2)?;
        num("center", &mut cfg.center)?;
        num("half_width", &mut cfg.half_width)?;
        if let Some(v) = m.get("path") {
            cfg.table = Some(PathBuf::from(want_str(v, "spectrum.path")?));
        }
        if let Some(eta) = cfg.eta {
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(cfg_err(format!("spectrum.eta: must be >= 0 (got {eta})")));
            }
        }
    }

    if let Some(v) = top.get("system_omega") {
        let w = want_f64(v, "system_omega")?;
        if !(w.is_finite() && w > 0.0) {
            return Err(cfg_err(format!("system_omega: must be > 0 (got {w})")));
        }
        cfg.system_omega = Some(w);
    }

    if let Some(g) = top.get("grid") {
        let m = want_obj(g, "grid")?;
        reject_unknown(m, "grid", &["t_max", "dt"])?;
        if let Some(v) = m.get("t_max") {
            let t = want_f64(v, "grid.t_max")?;
            if !(t.is_finite() && t > 0.0) {
                return Err(cfg_err(format!("grid.t_max: must be > 0 (got {t})")));
            }
            cfg.t_max = Some(t);
        }
        if let Some(v) = m.get("dt") {
            let t = want_f64(v, "grid.dt")?;
            if !(t.is_finite() && t > 0.0) {
                return Err(cfg_err(format!("grid.dt: must be > 0 (got {t})")));
            }
            cfg.dt = Some(t);
        }
    }

    if let Some(b) = top.get("bath") {
        let m = want_obj(b, "bath")?;
        reject_unknown(m, "bath", &["n_modes", "window_lo", "window_hi"])?;
        if let Some(v) = m.get("n_modes") {
            let n = want_usize(v, "bath.n_modes")?;
            if n == 0 {
                return Err(cfg_err("bath.n_modes: must be >= 1"));
            }
            cfg.n_modes = Some(n);
        }
        if let Some(v) = m.get("window_lo") {
            cfg.window_lo = Some(want_f64(v, "bath.window_lo")?);
        }
        if let Some(v) = m.get("window_hi") {
            cfg.window_hi = Some(want_f64(v, "bath.window_hi")?);
        }
    }

    if let Some(t) = top.get("thermal") {
        let m = want_obj(t, "thermal")?;
        reject_unknown(m, "thermal", &["beta"])?;
        if let Some(v) = m.get("beta") {
            let beta = match v {
                Value::String(s) if s == "inf" => f64::INFINITY,
                other => want_f64(other, "thermal.beta")?,
            };
            if !(beta > 0.0) {
                return Err(cfg_err(format!("thermal.beta: must be > 0 (got {beta})")));
            }
            cfg.beta = Some(beta);
        }
    }

    if let Some(t) = top.get("initial") {
        let m = want_obj(t, "initial")?;
        reject_unknown(m, "initial", &["n_system"])?;
        if let Some(v) = m.get("n_system") {
            let n = want_f64(v, "initial.n_system")?;
            if !(n.is_finite() && n >= 0.0) {
                return Err(cfg_err(format!("initial.n_system: must be >= 0 (got {n})")));
            }
            cfg.n_system = Some(n);
        }
    }

    if let Some(o) = top.get("output") {
        let m = want_obj(o, "output")?;
        reject_unknown(m, "output", &["path", "format"])?;
        if let Some(v) = m.get("path") {
            cfg.out = Some(PathBuf::from(want_str(v, "output.path")?));
        }
        if let Some(v) = m.get("format") {
            let f = want_str(v, "output.format")?;
            if f != "csv" && f != "json" {
                return Err(cfg_err(format!("output.format: expected csv or json (got {f})")));
            }
            cfg.format = Some(f);
        }
    }

    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Flag/file merging

/// Fully merged settings for one invocation.
#[derive(Debug, Clone)]
struct Resolved {
    spectrum_kind: Option<String>,
    eta: f64,
    omega_c: Option<f64>,
    spectrum_omega: Option<f64>,
    eta1: Option<f64>,
    eta2: Option<f64>,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    omega1: Option<f64>,
    omega2: Option<f64>,
    center: Option<f64>,
    half_width: Option<f64>,
    table: Option<PathBuf>,
    system_omega: f64,
    t_max: Option<f64>,
    dt: Option<f64>,
    n_modes: Option<usize>,
    window_lo: Option<f64>,
    window_hi: Option<f64>,
    beta: Option<f64>,
    n_system: f64,
    out: Option<PathBuf>,
    format: Option<String>,
}

fn parse_beta_flag(s: &str) -> CliResult<f64> {
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = s
        .parse()
        .map_err(|e| usage(format!("--beta: {e}")))?;
    if !(v > 0.0) {
        return Err(usage(format!("--beta: must be > 0 (got {v})")));
    }
    Ok(v)
}

fn resolve(opts: &CommonOpts) -> CliResult<Resolved> {
    let file = match &opts.config {
        Some(p) => load_config(p)?,
        None => FileConfig::default(),
    };
    let beta = match &opts.beta {
        Some(s) => Some(parse_beta_flag(s)?),
        None => file.beta,
    };
    if let Some(f) = &opts.format {
        if f != "csv" && f != "json" {
            return Err(usage(format!("--format: expected csv or json (got {f})")));
        }
    }
    Ok(Resolved {
        spectrum_kind: opts.spectrum.clone().or(file.spectrum_kind),
        eta: opts.eta.or(file.eta).unwrap_or(1.0),
        omega_c: opts.omega_c.or(file.omega_c),
        spectrum_omega: file.spectrum_omega,
        eta1: opts.eta1.or(file.eta1),
        eta2: opts.eta2.or(file.eta2),
        gamma1: opts.gamma1.or(file.gamma1),
        gamma2: opts.gamma2.or(file.gamma2),
        omega1: opts.omega1.or(file.omega1),
        omega2: opts.omega2.or(file.omega2),
        center: opts.center.or(file.center),
        half_width: opts.half_width.or(file.half_width),
        table: opts.table.clone().or(file.table),
        system_omega: opts.omega.or(file.system_omega).unwrap_or(1.0),
        t_max: opts.t_max.or(file.t_max),
        dt: opts.dt.or(file.dt),
        n_modes: opts.n_modes.or(file.n_modes),
        window_lo: opts.window_lo.or(file.window_lo),
        window_hi: opts.window_hi.or(file.window_hi),
        beta,
        n_system: opts.n_system.or(file.n_system).unwrap_or(1.0),
        out: opts.out.clone().or(file.out),
        format: opts.format.clone().or(file.format),
    })
}

impl Resolved {
    fn spectrum(&self) -> CliResult<SpectralDensity> {
        let kind = self
            .spectrum_kind
            .as_deref()
            .ok_or_else(|| usage("a spectrum is required (--spectrum or config spectrum.kind)"))?;
        let need = |v: Option<f64>, name: &str| -> CliResult<f64> {
            v.ok_or_else(|| usage(format!("{kind} spectrum requires --{name}")))
        };
        let j = match kind {
            "ohmic" => SpectralDensity::ohmic(self.eta, need(self.omega_c, "omega-c")?),
            "triangle" => SpectralDensity::triangle(
                self.eta,
                self.spectrum_omega.unwrap_or(self.system_omega),
            ),
            "square" => SpectralDensity::square(
                self.eta,
                self.spectrum_omega.unwrap_or(self.system_omega),
            ),
            "gapped-exponential" | "gapped_exponential" => SpectralDensity::gapped_exponential(
                self.eta,
                need(self.eta1, "eta1")?,
                need(self.eta2, "eta2")?,
                need(self.gamma1, "gamma1")?,
                need(self.gamma2, "gamma2")?,
                need(self.omega1, "omega1")?,
                need(self.omega2, "omega2")?,
            ),
            "lorentzian" => SpectralDensity::lorentzian(
                self.eta,
                need(self.center, "center")?,
                need(self.half_width, "half-width")?,
            ),
            "tabulated" => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| usage("tabulated spectrum requires --table <csv>"))?;
                let samples = io::read_tabulated_csv(path)?;
                SpectralDensity::tabulated(self.eta, samples)
            }
            other => {
                return Err(usage(format!(
                    "unknown spectrum '{other}' (expected ohmic, triangle, square, \
                     gapped-exponential, lorentzian or tabulated)"
                )))
            }
        };
        Ok(j?)
    }

    fn grid(&self, j: &SpectralDensity) -> CliResult<TimeGrid> {
        let t_max = self
            .t_max
            .ok_or_else(|| usage("this command requires --t-max"))?;
        let grid = match self.dt {
            Some(dt) => TimeGrid::new(t_max, dt),
            None => TimeGrid::with_default_dt(j, self.system_omega, t_max),
        }?;
        Ok(grid)
    }

    fn bath(&self, j: &SpectralDensity) -> CliResult<oracle::BathDiscretization> {
        let n = self
            .n_modes
            .ok_or_else(|| usage("this command requires --n-modes"))?;
        let lo = self
            .window_lo
            .ok_or_else(|| usage("this command requires --window-lo"))?;
        let hi = self
            .window_hi
            .ok_or_else(|| usage("this command requires --window-hi"))?;
        Ok(oracle::discretize_bath(j, lo, hi, n)?)
    }

    fn series_format(&self) -> SeriesFormat {
        match self.format.as_deref() {
            Some("json") => SeriesFormat::Json,
            _ => SeriesFormat::Csv,
        }
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.out {
            Some(path) => io::write_text(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_threshold(opts: &CommonOpts) -> CliResult<()> {
    let r = resolve(opts)?;
    let j = r.spectrum()?;
    let eta_c = modes::threshold_eta_c(&j, r.system_omega)?;
    let line = format!("{eta_c:.6}\n");
    match &r.out {
        Some(path) => io::write_text(path, &line)?,
        None => print!("{line}"),
    }
    Ok(())
}

fn mode_report(j: &SpectralDensity, omega: f64) -> Result<io::ModeReport> {
    let eta_c = match modes::threshold_eta_c(j, omega) {
        Ok(v) if v.is_finite() => Some(v),
        Ok(_) => None,
        Err(Error::NotHalfSide) => None,
        Err(e) => return Err(e),
    };
    let found = modes::find_modes(j, omega)?;
    let regime = classify_regime(&found);
    Ok(io::ModeReport {
        eta_c,
        modes: found
            .iter()
            .map(|m| io::ModeEntry {
                omega0: m.omega0,
                amplitude: m.amplitude,
            })
            .collect(),
        regime,
    })
}

fn reject_csv_format(r: &Resolved, what: &str) -> CliResult<()> {
    if r.format.as_deref() == Some("csv") {
        return Err(usage(format!("{what} emits a JSON report; --format csv is not supported")));
    }
    Ok(())
}

fn cmd_modes(opts: &CommonOpts) -> CliResult<()> {
    let r = resolve(opts)?;
    reject_csv_format(&r, "modes")?;
    let j = r.spectrum()?;
    let report = mode_report(&j, r.system_omega)?;
    r.emit(&io::render_json(&report))
}

fn cmd_evolve(opts: &CommonOpts) -> CliResult<()> {
    let r = resolve(opts)?;
    let j = r.spectrum()?;
    let grid = r.grid(&j)?;
    let u = volterra::solve_u(&j, r.system_omega, &grid)?;
    let text = io::render_series(
        r.series_format(),
        &io::TRAJECTORY_HEADER,
        &io::trajectory_rows(&u),
    );
    r.emit(&text)
}

fn cmd_occupation(opts: &CommonOpts) -> CliResult<()> {
    let r = resolve(opts)?;
    let j = r.spectrum()?;
    let grid = r.grid(&j)?;
    let bath = r.bath(&j)?;
    let beta = r
        .beta
        .ok_or_else(|| usage("occupation requires --beta (or config thermal.beta)"))?;
    let state = ThermalState::new(beta)?;
    let init = InitialOccupation::new(r.n_system)?;
    let u = volterra::solve_u(&j, r.system_omega, &grid)?;
    let series = occupation::occupation_series(&u, &bath, &init, &state)?;
    let text = io::render_series(
        r.series_format(),
        &io::OCCUPATION_HEADER,
        &io::occupation_rows(&series),
    );
    r.emit(&text)
}

fn cmd_oracle(opts: &CommonOpts) -> CliResult<()> {
    let r = resolve(opts)?;
    reject_csv_format(&r, "oracle")?;
    let j = r.spectrum()?;
    let grid = r.grid(&j)?;
    let bath = r.bath(&j)?;
    let recurrence = oracle::recurrence_time(&bath)?;
    let horizon = (0.5 * recurrence).min(grid.t_max());

    let u = volterra::solve_u(&j, r.system_omega, &grid)?;
    let times: Vec<f64> = grid.times().filter(|&t| t <= horizon).collect();
    let exact = oracle::exact_survival(r.system_omega, &bath, &times)?;

    let mut per_time = Vec::with_capacity(times.len());
    let mut max_err = 0.0_f64;
    for (k, (&t, ex)) in times.iter().zip(&exact).enumerate() {
        let err = (u.samples()[k] - ex).norm();
        max_err = max_err.max(err);
        per_time.push(io::PerTimeError { t, abs_error: err });
    }
    let report = io::OracleReport {
        n_modes: bath.len(),
        window: [r.window_lo.unwrap_or(f64::NAN), r.window_hi.unwrap_or(f64::NAN)],
        recurrence_time: recurrence,
        max_abs_error: max_err,
        per_time_errors: per_time,
    };
    r.emit(&io::render_json(&report))
}

#[derive(Serialize)]
struct ManifestEntry {
    value: f64,
    trajectory: String,
    modes: String,
}

#[derive(Serialize)]
struct Manifest {
    param: String,
    entries: Vec<ManifestEntry>,
}

fn sanitize_token(token: &str) -> String {
    token
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || ".+-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn cmd_sweep(opts: &SweepOpts) -> CliResult<()> {
    if opts.param != "eta" {
        return Err(usage(format!(
            "unsupported sweep parameter '{}' (only eta is supported)",
            opts.param
        )));
    }
    if opts.values.is_empty() {
        return Err(usage("sweep requires --values v1,v2,..."));
    }
    let r = resolve(&opts.common)?;
    let values: Vec<(String, f64)> = opts
        .values
        .iter()
        .map(|tok| {
            tok.parse::<f64>()
                .map(|v| (tok.clone(), v))
                .map_err(|e| usage(format!("--values: '{tok}': {e}")))
        })
        .collect::<CliResult<_>>()?;

    let out_dir = r.out.clone().unwrap_or_else(|| PathBuf::from("sweep_out"));
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Module(Error::Config(format!("worker pool: {e}"))))?;

    let runs: Vec<Result<ManifestEntry>> = pool.install(|| {
        values
            .par_iter()
            .map(|(token, value)| run_sweep_entry(&r, &out_dir, token, *value))
            .collect()
    });

    let mut entries = Vec::with_capacity(runs.len());
    for run in runs {
        entries.push(run?);
    }
    let manifest = Manifest {
        param: opts.param.clone(),
        entries,
    };
    let path = out_dir.join("manifest.json");
    io::write_text(&path, &io::render_json(&manifest))?;
    Ok(())
}

fn run_sweep_entry(
    base: &Resolved,
    out_dir: &Path,
    token: &str,
    value: f64,
) -> Result<ManifestEntry> {
    let mut r = base.clone();
    r.eta = value;
    let j = r
        .spectrum()
        .map_err(|e| match e {
            CliError::Usage(m) => Error::Config(m),
            CliError::Module(e) => e,
        })?;
    let grid = match r.dt {
        Some(dt) => TimeGrid::new(r.t_max.unwrap_or(100.0), dt)?,
        None => TimeGrid::with_default_dt(&j, r.system_omega, r.t_max.unwrap_or(100.0))?,
    };
    let u = volterra::solve_u(&j, r.system_omega, &grid)?;

    let tag = sanitize_token(token);
    let traj_name = format!("eta_{tag}_trajectory.csv");
    let modes_name = format!("eta_{tag}_modes.json");
    io::write_series(
        &out_dir.join(&traj_name),
        SeriesFormat::Csv,
        &io::TRAJECTORY_HEADER,
        &io::trajectory_rows(&u),
    )?;
    let report = mode_report(&j, r.system_omega)?;
    io::write_text(&out_dir.join(&modes_name), &io::render_json(&report))?;
    Ok(ManifestEntry {
        value,
        trajectory: traj_name,
        modes: modes_name,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"spectrum":{"kind":"ohmic","eta":1,"omega_c":1},"system_omega":1,"grid":{"t_max":100,"dt":0.01}}"#,
        )
        .unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.spectrum_kind.as_deref(), Some("ohmic"));
        assert_eq!(cfg.eta, Some(1.0));
        assert_eq!(cfg.t_max, Some(100.0));
        assert_eq!(cfg.dt, Some(0.01));
    }

    #[test]
    fn config_rejects_negative_eta_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"spectrum":{"kind":"ohmic","eta":-1,"omega_c":1}}"#).unwrap();
        let err = load_config(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("spectrum.eta"), "{msg}");
        assert!(msg.contains(">= 0"), "{msg}");
    }

    #[test]
    fn config_rejects_unknown_key_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"spectrm":{"kind":"ohmic"}}"#).unwrap();
        let msg = load_config(&path).unwrap_err().to_string();
        assert!(msg.contains("unknown key 'spectrm'"), "{msg}");

        std::fs::write(&path, r#"{"grid":{"t_max":1,"dtt":0.1}}"#).unwrap();
        let msg = load_config(&path).unwrap_err().to_string();
        assert!(msg.contains("unknown key 'grid.dtt'"), "{msg}");
    }

    #[test]
    fn config_beta_inf_string() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"thermal":{"beta":"inf"}}"#).unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.beta, Some(f64::INFINITY));
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"spectrum":{"kind":"ohmic","eta":1,"omega_c":1},"system_omega":2}"#,
        )
        .unwrap();
        let opts = CommonOpts {
            config: Some(path),
            eta: Some(3.5),
            ..Default::default()
        };
        let r = resolve(&opts).ok().unwrap();
        assert_eq!(r.eta, 3.5); // flag wins
        assert_eq!(r.system_omega, 2.0); // file wins over default
    }

    #[test]
    fn sanitize_tokens() {
        assert_eq!(sanitize_token("0.01"), "0.01");
        assert_eq!(sanitize_token("1e-3"), "1e-3");
        assert_eq!(sanitize_token("a/b"), "a_b");
    }
}
