//! Command-line front end: flag parsing, config file IO, output rendering
//! and exit-code mapping for the `wgqed` binary.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, unreadable or
//! invalid config), 2 numerical error, 3 failed reference checks in `sweep`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::SystemConfig;
use crate::optimize::{self, SearchBounds, SearchSpace};
use crate::output::{csv_line, format_float, OutputEnvelope};
use crate::protocol::{self, ProtocolOptions};
use crate::scattering;
use crate::scenario::{self, CustomScenario, ScenarioReport};
use crate::units::{rate_to_per_ns, AngularFrequency};
use crate::{collective, hamiltonian};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_EXPECTATIONS: i32 = 3;

#[derive(Debug)]
enum CliError {
    Validation(String),
    Numerical(String),
}

impl From<scattering::ScatteringError> for CliError {
    fn from(e: scattering::ScatteringError) -> Self {
        match e {
            scattering::ScatteringError::MissingTls => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "wgqed",
    version = crate::TOOL_VERSION,
    about = "Waveguide-QED transducer simulator: scattering, collective modes, \
             Raman optimization and heralded entanglement",
    disable_help_subcommand = true
)]
struct Cli {
    /// Cap on worker threads for grid evaluations (fallback: WGQED_THREADS).
    /// Results are independent of the thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump the effective Hamiltonian minus δ·I (the matrix the scattering
    /// solver inverts) as JSON with basis labels.
    Hamiltonian {
        #[command(flatten)]
        config: ConfigArg,
        /// Probe detuning in GHz (default: the config's delta_ghz).
        #[arg(long)]
        delta_ghz: Option<f64>,
        /// Write the JSON envelope here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Table of collective emitter modes (energies and decay rates) as CSV.
    Eigenmodes {
        #[command(flatten)]
        config: ConfigArg,
        /// Write the CSV here (an envelope goes to stdout); default: CSV to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Elastic and Raman scattering amplitudes over a probe-detuning grid as CSV.
    Spectrum {
        #[command(flatten)]
        config: ConfigArg,
        /// Grid start, GHz.
        #[arg(long)]
        from_ghz: f64,
        /// Grid end, GHz.
        #[arg(long)]
        to_ghz: f64,
        /// Number of grid points.
        #[arg(long)]
        points: usize,
        /// Write the CSV here (an envelope goes to stdout); default: CSV to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scattering amplitudes and Raman probability at one detuning as JSON.
    Raman {
        #[command(flatten)]
        config: ConfigArg,
        /// Probe detuning in GHz (default: the config's delta_ghz).
        #[arg(long)]
        delta_ghz: Option<f64>,
        /// Write the JSON envelope here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for the operating point that maximizes the Raman probability.
    Optimize {
        #[command(flatten)]
        config: ConfigArg,
        /// Free parameters: `delta` or `delta,Delta` (Delta = symmetric
        /// emitter splitting ladder).
        #[arg(long, default_value = "delta")]
        free: String,
        /// Probe-detuning search interval `a:b` in GHz.
        #[arg(long, value_name = "A:B")]
        delta_ghz_range: String,
        /// Splitting search interval `a:b` in GHz (default 0 to 10·Γ_max).
        #[arg(long = "Delta-ghz-range", value_name = "A:B")]
        splitting_ghz_range: Option<String>,
        /// Objective-evaluation budget.
        #[arg(long, default_value_t = optimize::DEFAULT_BUDGET)]
        budget: usize,
        /// Write the JSON envelope here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heralded-entanglement fidelity and success probability over a
    /// log-spaced pulse-size grid, for two nodes at their stored detunings.
    Entangle {
        /// First node's config file.
        #[arg(long)]
        config1: PathBuf,
        /// Second node's config file.
        #[arg(long)]
        config2: PathBuf,
        /// Mean-photon-number interval `a:b` (log-spaced grid, a > 0).
        #[arg(long, value_name = "A:B")]
        nbar_range: String,
        /// Number of grid points.
        #[arg(long)]
        points: usize,
        /// Detection efficiency per photon.
        #[arg(long, default_value_t = 0.7)]
        eta: f64,
        /// Model detectors that cannot resolve photon number.
        #[arg(long)]
        non_resolving: bool,
        /// Disable elastic-scattering (Rayleigh) dephasing in the model.
        #[arg(long)]
        no_rayleigh: bool,
        /// Write the CSV here (an envelope goes to stdout); default: CSV to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in or user-defined sweep scenario with reference checks.
    Sweep {
        /// Built-in scenario name, or path to a scenario JSON file.
        #[arg(long)]
        scenario: Option<String>,
        /// Directory receiving `<name>.csv` and `<name>_report.json`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// List the built-in scenario names and exit.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// System config JSON file.
    #[arg(long)]
    config: PathBuf,
}

/// Parse argv and run; returns the process exit code.
pub fn dispatch<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let argv: Vec<String> = argv.into_iter().collect();
    let echo = argv.join(" ");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            // Help/version go to stdout, errors with usage text to stderr.
            let _ = e.print();
            return code;
        }
    };
    let threads = match resolve_threads(cli.threads) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_VALIDATION;
        }
    };
    let body = || match run(cli.command, &echo) {
        Ok(code) => code,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            EXIT_VALIDATION
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            EXIT_NUMERICAL
        }
    };
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(body),
            Err(e) => {
                eprintln!("error: cannot build thread pool: {e}");
                EXIT_VALIDATION
            }
        },
        None => body(),
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    let from_env = || match std::env::var("WGQED_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(format!("WGQED_THREADS must be a positive integer, got '{s}'")),
        },
        Err(_) => Ok(None),
    };
    let n = match flag {
        Some(n) => Some(n),
        None => from_env()?,
    };
    match n {
        Some(0) => Err("--threads must be at least 1".to_string()),
        other => Ok(other),
    }
}

fn load_config(path: &Path) -> Result<(SystemConfig, Value), CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read config file '{}': {e}", path.display()))
    })?;
    let config = SystemConfig::from_json_str(&text).map_err(|e| {
        CliError::Validation(format!("config file '{}': {e}", path.display()))
    })?;
    let value: Value = serde_json::from_str(&text).expect("parsed once already");
    Ok((config, value))
}

fn parse_range(s: &str, flag: &str) -> Result<(f64, f64), CliError> {
    let bad = || {
        CliError::Validation(format!(
            "{flag} must look like `a:b` with finite numbers a ≤ b, got '{s}'"
        ))
    };
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

/// Deliver a JSON envelope to a file or stdout.
fn emit_json(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| {
            CliError::Validation(format!("cannot write '{}': {e}", path.display()))
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Deliver CSV to a file (announcing it with an envelope on stdout) or, with
/// no --out, print the CSV itself to stdout.
fn emit_csv(csv: &str, out: Option<&Path>, echo: &str, config: &Value) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, csv).map_err(|e| {
                CliError::Validation(format!("cannot write '{}': {e}", path.display()))
            })?;
            let payload = json!({
                "csv_path": path.display().to_string(),
                "rows": csv.lines().count().saturating_sub(1),
            });
            println!(
                "{}",
                OutputEnvelope::new(echo.to_string(), config, payload).to_json()
            );
            Ok(())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run(command: Command, echo: &str) -> Result<i32, CliError> {
    match command {
        Command::Hamiltonian { config, delta_ghz, out } => {
            let (system, value) = load_config(&config.config)?;
            let delta = delta_ghz
                .map(AngularFrequency::from_ghz)
                .unwrap_or(system.delta);
            let h = if system.tls.is_some() {
                hamiltonian::build_with_tls(&system).expect("tls presence checked")
            } else {
                hamiltonian::build_bare(&system)
            };
            let shifted = h.shifted(delta.rad_per_s());
            let matrix: Vec<Vec<[f64; 2]>> = (0..shifted.dimension())
                .map(|i| {
                    (0..shifted.dimension())
                        .map(|j| {
                            let z = shifted.matrix[(i, j)];
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect();
            let basis: Vec<String> = shifted
                .basis
                .iter()
                .map(|b| {
                    if system.tls.is_some() {
                        format!("e{}|tls{}", b.emitter, u8::from(b.tls_excited))
                    } else {
                        format!("e{}", b.emitter)
                    }
                })
                .collect();
            let payload = json!({
                "delta_ghz": delta.to_ghz(),
                "dimension": shifted.dimension(),
                "basis": basis,
                "matrix_rad_per_s": matrix,
            });
            let envelope = OutputEnvelope::new(echo.to_string(), &value, payload);
            emit_json(&envelope.to_json(), out.as_deref())?;
            Ok(EXIT_OK)
        }

        Command::Eigenmodes { config, out } => {
            let (system, value) = load_config(&config.config)?;
            let report = collective::eigenmodes(&system);
            if report.degenerate {
                eprintln!(
                    "DEGENERATE_SPECTRUM: mode energies coincide; basis fixed by decay rates"
                );
            }
            let mut csv = csv_line(
                &["mode_index", "energy_shift_ghz", "gamma_total_ns", "gamma_1d_ns", "gamma_prime_ns", "dark_flag"]
                    .map(String::from),
            );
            for m in &report.modes {
                csv.push_str(&csv_line(&[
                    m.index.to_string(),
                    format_float(AngularFrequency(m.energy_shift).to_ghz()),
                    format_float(rate_to_per_ns(m.gamma_total)),
                    format_float(rate_to_per_ns(m.gamma_1d)),
                    format_float(rate_to_per_ns(m.gamma_prime)),
                    u8::from(m.dark).to_string(),
                ]));
            }
            emit_csv(&csv, out.as_deref(), echo, &value)?;
            Ok(EXIT_OK)
        }

        Command::Spectrum { config, from_ghz, to_ghz, points, out } => {
            let (system, value) = load_config(&config.config)?;
            if !(1..=scenario::MAX_SWEEP_POINTS).contains(&points) {
                return Err(CliError::Validation(format!(
                    "--points must lie in [1, {}]",
                    scenario::MAX_SWEEP_POINTS
                )));
            }
            if !(from_ghz.is_finite() && to_ghz.is_finite()) || from_ghz > to_ghz {
                return Err(CliError::Validation(
                    "--from-ghz/--to-ghz must be finite with from ≤ to".into(),
                ));
            }
            let deltas: Vec<f64> = (0..points)
                .map(|i| {
                    let f = if points == 1 {
                        from_ghz
                    } else {
                        from_ghz + (to_ghz - from_ghz) * i as f64 / (points - 1) as f64
                    };
                    AngularFrequency::from_ghz(f).rad_per_s()
                })
                .collect();
            let rows = scattering::spectrum(&system, &deltas)?;
            let mut csv = csv_line(
                &["delta_ghz", "t_re", "t_im", "r_re", "r_im", "transmittance", "reflectance", "p_raman_t", "p_raman_r", "p_raman", "total_outgoing"]
                    .map(String::from),
            );
            for a in &rows {
                csv.push_str(&csv_line(&[
                    format_float(AngularFrequency(a.delta).to_ghz()),
                    format_float(a.t.re),
                    format_float(a.t.im),
                    format_float(a.r.re),
                    format_float(a.r.im),
                    format_float(a.transmittance()),
                    format_float(a.reflectance()),
                    format_float(a.raman_t.norm_sqr()),
                    format_float(a.raman_r.norm_sqr()),
                    format_float(a.raman_coherent()),
                    format_float(a.total_outgoing()),
                ]));
            }
            emit_csv(&csv, out.as_deref(), echo, &value)?;
            Ok(EXIT_OK)
        }

        Command::Raman { config, delta_ghz, out } => {
            let (system, value) = load_config(&config.config)?;
            if system.tls.is_none() {
                return Err(CliError::Validation(
                    "config has no tls block; `raman` needs one".into(),
                ));
            }
            let delta = delta_ghz
                .map(AngularFrequency::from_ghz)
                .unwrap_or(system.delta);
            let a = scattering::amplitudes(&system, delta.rad_per_s())?;
            let payload = json!({
                "delta_ghz": delta.to_ghz(),
                "p_raman": a.raman_coherent(),
                "p_raman_t": a.raman_t.norm_sqr(),
                "p_raman_r": a.raman_r.norm_sqr(),
                "p_raman_quadrature": a.raman_quadrature(),
                "t_re": a.t.re,
                "t_im": a.t.im,
                "r_re": a.r.re,
                "r_im": a.r.im,
                "transmittance": a.transmittance(),
                "reflectance": a.reflectance(),
                "total_outgoing": a.total_outgoing(),
            });
            let envelope = OutputEnvelope::new(echo.to_string(), &value, payload);
            emit_json(&envelope.to_json(), out.as_deref())?;
            Ok(EXIT_OK)
        }

        Command::Optimize { config, free, delta_ghz_range, splitting_ghz_range, budget, out } => {
            let (system, value) = load_config(&config.config)?;
            let space = match free.as_str() {
                "delta" => SearchSpace::Detuning,
                "delta,Delta" => SearchSpace::DetuningAndSplitting,
                other => {
                    return Err(CliError::Validation(format!(
                        "--free must be `delta` or `delta,Delta`, got '{other}'"
                    )))
                }
            };
            if space == SearchSpace::Detuning && splitting_ghz_range.is_some() {
                return Err(CliError::Validation(
                    "--Delta-ghz-range requires --free delta,Delta".into(),
                ));
            }
            let (lo, hi) = parse_range(&delta_ghz_range, "--delta-ghz-range")?;
            let splitting = splitting_ghz_range
                .as_deref()
                .map(|s| parse_range(s, "--Delta-ghz-range"))
                .transpose()?
                .map(|(a, b)| {
                    (
                        AngularFrequency::from_ghz(a).rad_per_s(),
                        AngularFrequency::from_ghz(b).rad_per_s(),
                    )
                });
            let bounds = SearchBounds {
                delta: (
                    AngularFrequency::from_ghz(lo).rad_per_s(),
                    AngularFrequency::from_ghz(hi).rad_per_s(),
                ),
                splitting,
            };
            let report = optimize::optimize_raman(&system, space, bounds, budget)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let payload = json!({
                "free": free,
                "best_delta_ghz": AngularFrequency(report.best_delta).to_ghz(),
                "best_splitting_ghz": report
                    .best_splitting
                    .map(|s| AngularFrequency(s).to_ghz()),
                "p_raman_at_opt": report.p_raman_at_opt,
                "report": serde_json::to_value(&report).expect("report serializes"),
            });
            let envelope = OutputEnvelope::new(echo.to_string(), &value, payload);
            emit_json(&envelope.to_json(), out.as_deref())?;
            Ok(EXIT_OK)
        }

        Command::Entangle { config1, config2, nbar_range, points, eta, non_resolving, no_rayleigh, out } => {
            let (node1, value1) = load_config(&config1)?;
            let (node2, value2) = load_config(&config2)?;
            if !(2..=scenario::MAX_SWEEP_POINTS).contains(&points) {
                return Err(CliError::Validation(format!(
                    "--points must lie in [2, {}]",
                    scenario::MAX_SWEEP_POINTS
                )));
            }
            let (lo, hi) = parse_range(&nbar_range, "--nbar-range")?;
            if lo <= 0.0 {
                return Err(CliError::Validation(
                    "--nbar-range endpoints must be positive (log-spaced grid)".into(),
                ));
            }
            if !(0.0..=1.0).contains(&eta) {
                return Err(CliError::Validation("--eta must lie in [0, 1]".into()));
            }
            let options = ProtocolOptions {
                number_resolving: !non_resolving,
                rayleigh_dephasing: !no_rayleigh,
            };
            let grid: Vec<f64> = (0..points)
                .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
                .collect();
            use rayon::prelude::*;
            let results: Result<Vec<_>, _> = grid
                .par_iter()
                .map(|&n_bar| protocol::coherent_protocol(&node1, &node2, n_bar, eta, options))
                .collect();
            let results = results?;
            let mut warned = std::collections::BTreeSet::new();
            let mut csv = csv_line(
                &["n_bar", "fidelity", "p_success", "infid_double", "infid_rayleigh", "truncation_mass"]
                    .map(String::from),
            );
            for (n_bar, r) in grid.iter().zip(&results) {
                for w in &r.warnings {
                    warned.insert(w.clone());
                }
                csv.push_str(&csv_line(&[
                    format_float(*n_bar),
                    format_float(r.fidelity),
                    format_float(r.p_success),
                    format_float(r.breakdown.double_flip),
                    format_float(r.breakdown.rayleigh_dephasing),
                    format_float(r.truncation_mass),
                ]));
            }
            for w in warned {
                eprintln!("warning: {w}");
            }
            let combined = json!({ "config1": value1, "config2": value2 });
            emit_csv(&csv, out.as_deref(), echo, &combined)?;
            Ok(EXIT_OK)
        }

        Command::Sweep { scenario, out_dir, list } => {
            if list {
                for name in scenario::list() {
                    println!("{name}");
                }
                return Ok(EXIT_OK);
            }
            let Some(name) = scenario else {
                return Err(CliError::Validation(
                    "pass --scenario <name-or-file> or --list".into(),
                ));
            };
            let (report, config_value) = resolve_scenario(&name)?;
            fs::create_dir_all(&out_dir).map_err(|e| {
                CliError::Validation(format!(
                    "cannot create output directory '{}': {e}",
                    out_dir.display()
                ))
            })?;
            let stem = sanitize_filename(&report.name);
            let csv_path = out_dir.join(format!("{stem}.csv"));
            fs::write(&csv_path, &report.csv).map_err(|e| {
                CliError::Validation(format!("cannot write '{}': {e}", csv_path.display()))
            })?;
            let payload = json!({
                "name": report.name,
                "csv_path": csv_path.display().to_string(),
                "expectations": serde_json::to_value(&report.expectations)
                    .expect("expectations serialize"),
                "all_passed": report.all_passed,
            });
            let report_path = out_dir.join(format!("{stem}_report.json"));
            let envelope = OutputEnvelope::new(echo.to_string(), &config_value, payload);
            fs::write(&report_path, envelope.to_json()).map_err(|e| {
                CliError::Validation(format!("cannot write '{}': {e}", report_path.display()))
            })?;
            let passed = report.expectations.iter().filter(|e| e.passed).count();
            for e in &report.expectations {
                println!(
                    "{} {} observed={} reference={} [{}]",
                    if e.passed { "PASS" } else { "FAIL" },
                    e.label,
                    format_float(e.observed),
                    format_float(e.reference),
                    e.source,
                );
            }
            println!(
                "scenario {}: {}/{} reference checks passed; wrote {} and {}",
                report.name,
                passed,
                report.expectations.len(),
                csv_path.display(),
                report_path.display(),
            );
            Ok(if report.all_passed { EXIT_OK } else { EXIT_EXPECTATIONS })
        }
    }
}

/// A built-in name, or a path to a user scenario file (built-ins win ties).
fn resolve_scenario(name: &str) -> Result<(ScenarioReport, Value), CliError> {
    if scenario::list().contains(&name) {
        let report = scenario::run(name).map_err(CliError::Numerical)?;
        return Ok((report, json!({ "scenario": name })));
    }
    let path = Path::new(name);
    let looks_like_file = name.ends_with(".json") || name.contains(std::path::MAIN_SEPARATOR);
    if !path.exists() {
        if looks_like_file {
            return Err(CliError::Validation(format!(
                "cannot read scenario file '{name}': no such file"
            )));
        }
        return Err(CliError::Validation(format!(
            "unknown scenario '{name}'; built-ins: {}",
            scenario::list().join(", ")
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read scenario file '{name}': {e}"))
    })?;
    let custom = CustomScenario::from_json_str(&text)
        .map_err(|e| CliError::Validation(format!("scenario file '{name}': {e}")))?;
    let report = custom.run().map_err(CliError::Numerical)?;
    let value: Value = serde_json::from_str(&text).expect("parsed once already");
    Ok((report, value))
}

fn sanitize_filename(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "scenario".to_string()
    } else {
        cleaned
    }
}
