//! The `magflow` command line.
//!
//! Exit codes: 0 on success, 1 when a check or computation fails, 2 for usage and
//! configuration errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::acceptance::Battery;
use crate::config::{Config, ConfigError};
use crate::crit::{estimate_critical_value, proposition_from_estimate, s_c_value, theorem_gap_from_estimate};
use crate::error::Error;
use crate::field::{helicity_formula, helicity_integral, metric_area, s_h_value, total_flux, CHI};
use crate::flow::{detect_period, integrate_with};
use crate::radon::{
    boundedness_probe, eigenfunction_mean_value_check, growth_check, kernel_sample, EigenPart, Spectral,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

pub const THREADS_VAR: &str = "MAGFLOW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "magflow", version, about = "Magnetic flows on a genus-2 hyperbolic surface")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON configuration; defaults apply to everything left out.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Write the table or report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Helicity by closed form and by phase-space integral, and s_h.
    Helicity,
    /// Bounds on the critical value, the s_c <= s_h check and the proposition chain.
    Critical,
    /// Integrate the magnetic flow from the configured initial state (CSV).
    Flow,
    /// Spectral kernel tables and disk Radon transform reports.
    Radon {
        #[command(subcommand)]
        table: RadonTable,
    },
    /// Run the acceptance battery.
    Verify,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum RadonTable {
    /// Kernel values over the radius grid and spectral parameters (CSV).
    Kernel,
    /// Mean-value identity for explicit eigenfunctions (CSV).
    Meanvalue,
    /// Transform of the configured zero-mean function at growing radii (CSV).
    Probe,
    /// Kernel growth along the sequence of radii (CSV).
    Growth,
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Check(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Check(_) => EXIT_FAILURE,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Check(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Check(m) => eprintln!("failed: {m}"),
            }
            f.code()
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = match value.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got {value:?}"))),
    };
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> Outcome {
    configure_threads()?;
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let out = Output::new(cli.output.as_deref());
    match cli.command {
        Command::Helicity => helicity(&config, &out),
        Command::Critical => critical(&config, &out),
        Command::Flow => flow(&config, &out),
        Command::Radon { table } => radon(&config, table, &out),
        Command::Verify => verify(&config, &out),
    }
}

/// The destination of the main table or report; summaries go to the terminal.
struct Output<'a> {
    path: Option<&'a Path>,
}

impl<'a> Output<'a> {
    fn new(path: Option<&'a Path>) -> Self {
        Self { path }
    }

    fn write(&self, text: &str) -> Outcome {
        match self.path {
            Some(p) => std::fs::write(p, text)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| Failure::Usage(format!("cannot write to standard output: {e}")))
            }
        }
    }

    fn json<T: Serialize>(&self, value: &T) -> Outcome {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Check(e.to_string()))?;
        text.push('\n');
        self.write(&text)
    }

    /// Summary lines go to stdout when the data went to a file, else to stderr.
    fn note(&self, line: &str) {
        if self.path.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

/// Shortest decimal that reads back exactly; exponent form outside `[1e-5, 1e16)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// CSV with a header row and LF line endings.
struct Csv {
    text: String,
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }
}

#[derive(Serialize)]
struct HelicityReport {
    area: f64,
    flux: f64,
    chi: f64,
    helicity_formula: f64,
    helicity_integral: f64,
    s_h: Option<f64>,
    relative_tolerance: f64,
    absolute_tolerance: f64,
    agree: bool,
}

fn helicity(config: &Config, out: &Output) -> Outcome {
    let model = config.model()?;
    let (g, sigma) = (&model.metric, &model.field);
    let formula = helicity_formula(g, sigma);
    let integral = helicity_integral(g, sigma)?;
    let tol = &config.tolerances;
    let agree = if formula.abs() < tol.cross_check {
        integral.abs() < tol.cross_check
    } else {
        ((integral - formula) / formula).abs() < tol.helicity_relative
    };
    let report = HelicityReport {
        area: metric_area(g),
        flux: total_flux(sigma),
        chi: CHI,
        helicity_formula: formula,
        helicity_integral: integral,
        s_h: s_h_value(g, sigma),
        relative_tolerance: tol.helicity_relative,
        absolute_tolerance: tol.cross_check,
        agree,
    };
    out.json(&report)?;
    if !agree {
        return Err(Failure::Check(format!(
            "helicity integral {integral} disagrees with the closed form {formula}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct CriticalReport {
    estimate: crate::crit::CriticalEstimate,
    s_c: crate::crit::ScInterval,
    s_h: Option<f64>,
    theorem: Option<crate::crit::TheoremReport>,
    proposition: crate::crit::PropositionReport,
}

fn critical(config: &Config, out: &Output) -> Outcome {
    let model = config.model()?;
    let (g, sigma) = (&model.metric, &model.field);
    let estimate = estimate_critical_value(g, sigma, &config.critical_budget())?;
    let s_h = s_h_value(g, sigma);
    let theorem = match s_h {
        Some(_) => Some(theorem_gap_from_estimate(g, sigma, estimate.clone(), config.tolerances.theorem)?),
        None => None,
    };
    let proposition = proposition_from_estimate(g, sigma, estimate.clone(), config.tolerances.cross_check)?;
    let report = CriticalReport {
        s_c: s_c_value(&estimate),
        estimate,
        s_h,
        theorem,
        proposition,
    };
    out.note(&format!("c in [{}, {}]", report.estimate.lower, report.estimate.upper));
    if let Some(t) = &report.theorem {
        let gap = t.gap.map_or("unbounded".to_string(), |g| g.to_string());
        out.note(&format!("s_h - s_c upper = {gap}{}", if t.strict_gap() { " (strict)" } else { "" }));
    }
    out.json(&report)
}

fn flow(config: &Config, out: &Output) -> Outcome {
    let model = config.model()?;
    let start = config.initial_state()?;
    let f = &config.flow;
    let traj = integrate_with(
        &model.metric,
        &model.field,
        f.s,
        start,
        f.duration,
        f.dt,
        config.integrator_options(),
    )?;
    let mut csv = Csv::new(&["t", "x", "y", "theta"]);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        csv.row(&[num(*t), num(s.x), num(s.y), num(s.theta)]);
    }
    out.write(&csv.text)?;
    match detect_period(&traj, config.tolerances.period) {
        Some(p) => out.note(&format!("period: {p}")),
        None => out.note("period: none detected"),
    }
    Ok(())
}

fn radon(config: &Config, table: RadonTable, out: &Output) -> Outcome {
    let rc = &config.radon;
    match table {
        RadonTable::Kernel => {
            let mut csv = Csv::new(&["r", "kind", "s_or_alpha", "value"]);
            for &r in &rc.r_grid {
                for (kind, list, label) in [
                    (Spectral::Real, &rc.s_list, "real"),
                    (Spectral::Imaginary, &rc.alpha_list, "imaginary"),
                ] {
                    for &p in list {
                        let k = kernel_sample(r, kind, p)?;
                        csv.row(&[num(r), label.into(), num(p), num(k.value)]);
                    }
                }
            }
            out.write(&csv.text)
        }
        RadonTable::Meanvalue => {
            let mut csv = Csv::new(&["s", "part", "center_x", "center_y", "r", "lhs", "rhs", "residual"]);
            let mut failures = Vec::new();
            for &s in &rc.s_list {
                for &r in &rc.r_grid {
                    for &c in &rc.centers {
                        for (part, label) in [(EigenPart::Real, "real"), (EigenPart::Imaginary, "imaginary")] {
                            let m = eigenfunction_mean_value_check(s, part, c, r)?;
                            csv.row(&[
                                num(s),
                                label.into(),
                                num(c.x),
                                num(c.y),
                                num(r),
                                num(m.lhs),
                                num(m.rhs),
                                num(m.residual),
                            ]);
                            if !m.passes(config.tolerances.cross_check) {
                                failures.push(format!("s {s} r {r} ({}, {}) {label}", c.x, c.y));
                            }
                        }
                    }
                }
            }
            out.write(&csv.text)?;
            if failures.is_empty() {
                Ok(())
            } else {
                Err(Failure::Check(format!("mean-value identity fails at {}", failures.join(", "))))
            }
        }
        RadonTable::Probe => {
            let model = config.model()?;
            let h = config.radon_function(&model.group)?;
            let probe = boundedness_probe(&h, &rc.r_grid, &rc.centers, rc.method)?;
            let mut csv = Csv::new(&["r", "x_index", "value"]);
            for (j, r) in probe.radii.iter().enumerate() {
                for (i, row) in probe.values.iter().enumerate() {
                    csv.row(&[num(*r), i.to_string(), num(row[j])]);
                }
            }
            out.write(&csv.text)?;
            if let Some(max) = probe.running_max.last() {
                out.note(&format!("running max: {max}"));
            }
            Ok(())
        }
        RadonTable::Growth => {
            let mut csv = Csv::new(&["s", "n", "r", "q", "bound"]);
            let mut failure = None;
            for &s in &rc.growth_s {
                match growth_check(s, rc.growth_n) {
                    Ok(rows) => {
                        for row in rows {
                            csv.row(&[num(s), row.n.to_string(), num(row.r), num(row.q), num(row.bound)]);
                        }
                    }
                    Err(e) => {
                        failure.get_or_insert(format!("s {s}: {e}"));
                    }
                }
            }
            out.write(&csv.text)?;
            failure.map_or(Ok(()), |m| Err(Failure::Check(m)))
        }
    }
}

fn verify(config: &Config, out: &Output) -> Outcome {
    let battery = Battery::new(config.tolerances)?;
    let mut text = String::new();
    let mut failed = Vec::new();
    for outcome in battery.run_all() {
        let _ = writeln!(text, "{outcome}");
        if !outcome.passed {
            failed.push(outcome.id.to_string());
        }
    }
    out.write(&text)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("criteria {} failed", failed.join(", "))))
    }
}
