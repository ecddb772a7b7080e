//! Canned parameter sweeps reproducing the reference figures and tables as
//! deterministic CSV datasets, each with machine-checked expectations.
//!
//! Expectations never abort a run: every comparison becomes a row in the
//! report with its observed value, reference value and verdict, so a failed
//! reference check is itself a recorded regression result.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collective;
use crate::config::{ConfigError, ConfigFile, EmitterParams, SystemConfig, TlsParams};
use crate::optimize::{self, OptimumReport, SearchBounds, SearchSpace};
use crate::output::{csv_line, format_float};
use crate::protocol::{self, ProtocolOptions};
use crate::units::AngularFrequency;
use std::f64::consts::PI;

/// Dark-state splitting of four emitters at kΔz = π/2, in units of Γ_1D:
/// ν = √((√5 + 1)/2)·Γ_1D.
pub fn quad_dark_splitting_fraction() -> f64 {
    ((5.0_f64.sqrt() + 1.0) / 2.0).sqrt()
}

/// Waveguide-rate fraction of each dark mode in the same geometry:
/// 1 − √((√5 − 1)/2).
pub fn quad_dark_rate_fraction() -> f64 {
    1.0 - ((5.0_f64.sqrt() - 1.0) / 2.0).sqrt()
}

/// Small-coupling closed forms for the optimized Raman probability, exactly
/// as printed in the reference material, evaluated independently of the
/// scattering pipeline. `x` is g_s/ω_q.
pub fn closed_form(n_qds: usize, beta: f64, x: f64) -> f64 {
    match n_qds {
        1 => beta * beta * x * x,
        2 => beta * beta / (1.0 - beta * beta) * x * x,
        4 => {
            let d = 0.79 / beta - 0.62;
            0.11 * x * x / (x * x + d * d).powi(2)
        }
        _ => f64::NAN,
    }
}

/// Reference transducer node: N ∈ {1, 2, 4} emitters with uniform β.
/// One- and two-emitter nodes use Γ_1D = 1 ns⁻¹; the four-emitter node is
/// Purcell-matched so its dark-state splitting ν equals ω_q, unless
/// `gamma_1d` overrides that. Two-emitter spacing kΔz = 0 (a multiple of π);
/// four-emitter spacing kΔz = π/2 with the TLS on emitter 1.
pub fn reference_node(
    n_qds: usize,
    beta: f64,
    omega_q: f64,
    g_s: f64,
    gamma_1d: Option<f64>,
) -> SystemConfig {
    let gamma_1d = gamma_1d.unwrap_or(if n_qds == 4 {
        omega_q / quad_dark_splitting_fraction()
    } else {
        1.0e9
    });
    let gamma_prime = gamma_1d * (1.0 - beta) / beta;
    let kdz = if n_qds == 4 { 0.5 * PI } else { 0.0 };
    SystemConfig {
        emitters: (0..n_qds)
            .map(|m| EmitterParams {
                gamma_1d,
                gamma_prime,
                kz: kdz * m as f64,
                delta: AngularFrequency(0.0),
            })
            .collect(),
        tls: Some(TlsParams {
            omega_q: AngularFrequency(omega_q),
            g_s: AngularFrequency(g_s),
            coupled_emitter: if n_qds == 4 { 1 } else { 0 },
        }),
        delta: AngularFrequency(0.0),
    }
}

/// Optimize a node's operating point (δ, plus Δ for emitter pairs) and
/// return the tuned config together with the optimizer report.
pub fn tune_node(config: &SystemConfig, budget: usize) -> (SystemConfig, OptimumReport) {
    let wq = config
        .tls
        .as_ref()
        .map(|t| t.omega_q.rad_per_s())
        .unwrap_or(0.0);
    let gamma = config
        .emitters
        .iter()
        .map(|e| e.gamma_total())
        .fold(0.0, f64::max);
    let lo = (0.2 * wq).min(wq - 4.0 * gamma);
    let hi = wq + 4.0 * gamma.max(0.1 * wq);
    let space = if config.n_emitters() == 2 {
        SearchSpace::DetuningAndSplitting
    } else {
        SearchSpace::Detuning
    };
    let report = optimize::optimize_raman(
        config,
        space,
        SearchBounds {
            delta: (lo, hi),
            splitting: None,
        },
        budget,
    )
    .expect("reference nodes always carry a TLS");
    let mut tuned = match report.best_splitting {
        Some(s) => optimize::with_splitting(config, s),
        None => config.clone(),
    };
    tuned.delta = AngularFrequency(report.best_delta);
    (tuned, report)
}

/// How an expectation compares observed to reference.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum CompareKind {
    /// |observed − reference| ≤ rel_tol·|reference|.
    WithinRel { rel_tol: f64 },
    /// observed ≤ reference.
    AtMost,
}

/// One recorded reference check.
#[derive(Debug, Clone, Serialize)]
pub struct Expectation {
    pub label: String,
    pub observed: f64,
    pub reference: f64,
    pub kind: CompareKind,
    /// Where the reference value comes from: a published value, an
    /// independently evaluated closed form, or a derived cross-check.
    pub source: &'static str,
    pub passed: bool,
}

impl Expectation {
    fn new(
        label: String,
        observed: f64,
        reference: f64,
        kind: CompareKind,
        source: &'static str,
    ) -> Self {
        let passed = match kind {
            CompareKind::WithinRel { rel_tol } => {
                (observed - reference).abs() <= rel_tol * reference.abs()
            }
            CompareKind::AtMost => observed <= reference,
        };
        Self {
            label,
            observed,
            reference,
            kind,
            source,
            passed,
        }
    }
}

/// Dataset plus verdicts for one scenario run.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    /// Full CSV text (header + rows, LF endings).
    pub csv: String,
    pub expectations: Vec<Expectation>,
    pub all_passed: bool,
}

impl ScenarioReport {
    fn assemble(name: &str, header: &[&str], rows: Vec<Vec<String>>, exp: Vec<Expectation>) -> Self {
        let mut csv = csv_line(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        for row in rows {
            csv.push_str(&csv_line(&row));
        }
        let all_passed = exp.iter().all(|e| e.passed);
        ScenarioReport {
            name: name.to_string(),
            csv,
            expectations: exp,
            all_passed,
        }
    }
}

/// Names of the built-in scenarios.
pub fn list() -> &'static [&'static str] {
    &[
        "fig3a_1qd",
        "fig3a_2qd",
        "fig3a_4qd",
        "fig3a_4qd_litgamma",
        "fig3b",
        "cpb_table",
        "fourqd_spectrum",
        "supp_unequal",
    ]
}

const WQ: f64 = 2.0 * PI * 5.0e9;
const FIG3A_BETA: f64 = 0.9;
const FIG3A_HEADER: &[&str] = &[
    "n_qds",
    "g_s_ghz",
    "gs_over_omega_q",
    "p_raman",
    "p_closed_form",
    "best_delta_ghz",
    "best_splitting_ghz",
    "n_evaluations",
    "converged",
];

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect()
}

fn fig3a(name: &str, n_qds: usize, gamma_1d: Option<f64>) -> ScenarioReport {
    let mut rows = Vec::new();
    let mut exp = Vec::new();
    for gs_ghz in log_grid(0.01, 2.0, 21) {
        let g_s = 2.0 * PI * gs_ghz * 1e9;
        let node = reference_node(n_qds, FIG3A_BETA, WQ, g_s, gamma_1d);
        let (_, report) = tune_node(&node, optimize::DEFAULT_BUDGET);
        let x = g_s / WQ;
        let approx = closed_form(n_qds, FIG3A_BETA, x);
        rows.push(vec![
            n_qds.to_string(),
            format_float(gs_ghz),
            format_float(x),
            format_float(report.p_raman_at_opt),
            format_float(approx),
            format_float(AngularFrequency(report.best_delta).to_ghz()),
            format_float(
                report
                    .best_splitting
                    .map(|s| AngularFrequency(s).to_ghz())
                    .unwrap_or(0.0),
            ),
            report.n_evaluations.to_string(),
            u8::from(report.converged).to_string(),
        ]);
        if x >= 0.1 {
            exp.push(Expectation::new(
                format!("exact_at_most_closed_form@gs={gs_ghz:.3}GHz"),
                report.p_raman_at_opt,
                approx,
                CompareKind::AtMost,
                "derived",
            ));
        }
    }
    ScenarioReport::assemble(name, FIG3A_HEADER, rows, exp)
}

fn cpb_table() -> ScenarioReport {
    let beta = 0.98;
    let published: [(usize, f64, f64); 6] = [
        (1, 0.4, 0.006),
        (2, 0.4, 0.13),
        (4, 0.4, 0.31),
        (1, 1.0, 0.04),
        (2, 1.0, 0.40),
        (4, 1.0, 0.78),
    ];
    let mut rows = Vec::new();
    let mut exp = Vec::new();
    for (n_qds, gs_ghz, reference) in published {
        let g_s = 2.0 * PI * gs_ghz * 1e9;
        let node = reference_node(n_qds, beta, WQ, g_s, None);
        let (_, report) = tune_node(&node, optimize::DEFAULT_BUDGET);
        let p = report.p_raman_at_opt;
        let residual = (p - reference) / reference;
        let e = Expectation::new(
            format!("published_p_raman@{n_qds}qd_gs={gs_ghz}GHz"),
            p,
            reference,
            CompareKind::WithinRel { rel_tol: 0.25 },
            "published",
        );
        rows.push(vec![
            n_qds.to_string(),
            format_float(gs_ghz),
            format_float(p),
            format_float(reference),
            format_float(residual),
            u8::from(e.passed).to_string(),
        ]);
        exp.push(e);
    }
    ScenarioReport::assemble(
        "cpb_table",
        &["n_qds", "g_s_ghz", "p_raman", "reference_p", "rel_residual", "passed"],
        rows,
        exp,
    )
}

fn fourqd_spectrum() -> ScenarioReport {
    let node = reference_node(4, 0.98, WQ, 0.0, None);
    let bare = SystemConfig { tls: None, ..node };
    let gamma_1d = bare.emitters[0].gamma_1d;
    let metrics = collective::four_qd_metrics(&bare).expect("uniform four-emitter node");
    let checks = [
        (
            "nu_over_gamma_1d",
            metrics.nu / gamma_1d,
            quad_dark_splitting_fraction(),
        ),
        (
            "dark_rate_fraction",
            metrics.dark_gamma_1d / gamma_1d,
            quad_dark_rate_fraction(),
        ),
    ];
    let mut rows = Vec::new();
    let mut exp = Vec::new();
    for (label, observed, reference) in checks {
        let e = Expectation::new(
            label.to_string(),
            observed,
            reference,
            CompareKind::WithinRel { rel_tol: 1e-6 },
            "closed-form",
        );
        rows.push(vec![
            label.to_string(),
            format_float(observed),
            format_float(reference),
            format_float((observed - reference) / reference),
            u8::from(e.passed).to_string(),
        ]);
        exp.push(e);
    }
    ScenarioReport::assemble(
        "fourqd_spectrum",
        &["metric", "observed", "reference", "rel_error", "passed"],
        rows,
        exp,
    )
}

fn supp_unequal() -> ScenarioReport {
    let beta = 0.9;
    let x = 0.01;
    let mut rows = Vec::new();
    let mut exp = Vec::new();
    for ratio in [0.5, 2.0] {
        let gamma_1 = 1.0e9;
        let gamma_2 = ratio * gamma_1;
        let mut node = reference_node(2, beta, WQ, x * WQ, None);
        node.emitters[1].gamma_1d = gamma_2;
        node.emitters[1].gamma_prime = gamma_2 * (1.0 - beta) / beta;
        let (_, report) = tune_node(&node, optimize::DEFAULT_BUDGET);
        let reference = closed_form(2, beta, x);
        let e = Expectation::new(
            format!("pair_closed_form@ratio={ratio}"),
            report.p_raman_at_opt,
            reference,
            CompareKind::WithinRel { rel_tol: 0.30 },
            "published",
        );
        rows.push(vec![
            format_float(ratio),
            format_float(report.p_raman_at_opt),
            format_float(reference),
            format_float((report.p_raman_at_opt - reference) / reference),
            u8::from(e.passed).to_string(),
        ]);
        exp.push(e);
    }
    ScenarioReport::assemble(
        "supp_unequal",
        &["rate_ratio", "p_raman", "pair_closed_form", "rel_residual", "passed"],
        rows,
        exp,
    )
}

const FIG3B_ETA: f64 = 0.7;
const FIG3B_HEADER: &[&str] = &[
    "n_qds",
    "n_bar",
    "fidelity",
    "p_success",
    "infid_double",
    "infid_rayleigh",
    "infid_other",
    "truncation_mass",
];

/// Smallest n̄ at which the tuned node pair reaches the target success
/// probability (bisection on the monotone P_suc(n̄)).
fn n_bar_for_p_success(node: &SystemConfig, eta: f64, target: f64) -> Option<f64> {
    let p = |n_bar: f64| {
        protocol::coherent_protocol(node, node, n_bar, eta, ProtocolOptions::default())
            .map(|r| r.p_success)
            .unwrap_or(0.0)
    };
    let (mut lo, mut hi) = (1e-8, 8.0);
    if p(hi) < target {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn fig3b() -> ScenarioReport {
    let g_s = 2.0 * PI * 1.0e9;
    let mut tuned = Vec::new();
    for n_qds in [1usize, 2, 4] {
        let node = reference_node(n_qds, FIG3A_BETA, WQ, g_s, None);
        tuned.push((n_qds, tune_node(&node, optimize::DEFAULT_BUDGET).0));
    }
    let mut rows = Vec::new();
    for (n_qds, node) in &tuned {
        for n_bar in log_grid(1e-3, 1.0, 19) {
            let r = protocol::coherent_protocol(node, node, n_bar, FIG3B_ETA, ProtocolOptions::default())
                .expect("tuned nodes evaluate");
            rows.push(vec![
                n_qds.to_string(),
                format_float(n_bar),
                format_float(r.fidelity),
                format_float(r.p_success),
                format_float(r.breakdown.double_flip),
                format_float(r.breakdown.rayleigh_dephasing),
                format_float(r.breakdown.other),
                format_float(r.truncation_mass),
            ]);
        }
    }
    // Reading of the figure: at any fixed success probability, more emitters
    // reach it with less infidelity.
    let mut exp = Vec::new();
    for target in [1e-3, 3e-3, 1e-2] {
        let mut infid = Vec::new();
        for (n_qds, node) in &tuned {
            if let Some(n_bar) = n_bar_for_p_success(node, FIG3B_ETA, target) {
                let r = protocol::coherent_protocol(node, node, n_bar, FIG3B_ETA, ProtocolOptions::default())
                    .expect("tuned nodes evaluate");
                infid.push((*n_qds, 1.0 - r.fidelity));
            }
        }
        for pair in infid.windows(2) {
            exp.push(Expectation::new(
                format!(
                    "infidelity_{}qd_at_most_{}qd@p_suc={target}",
                    pair[1].0, pair[0].0
                ),
                pair[1].1,
                pair[0].1,
                CompareKind::AtMost,
                "published",
            ));
        }
    }
    ScenarioReport::assemble("fig3b", FIG3B_HEADER, rows, exp)
}

/// Run a built-in scenario by name.
pub fn run(name: &str) -> Result<ScenarioReport, String> {
    match name {
        "fig3a_1qd" => Ok(fig3a("fig3a_1qd", 1, None)),
        "fig3a_2qd" => Ok(fig3a("fig3a_2qd", 2, None)),
        "fig3a_4qd" => Ok(fig3a("fig3a_4qd", 4, None)),
        // Literal reading of the stated 250 ps Purcell-enhanced lifetime.
        "fig3a_4qd_litgamma" => Ok(fig3a("fig3a_4qd_litgamma", 4, Some(4.0e9))),
        "fig3b" => Ok(fig3b()),
        "cpb_table" => Ok(cpb_table()),
        "fourqd_spectrum" => Ok(fourqd_spectrum()),
        "supp_unequal" => Ok(supp_unequal()),
        other => Err(format!(
            "unknown scenario '{other}'; built-ins: {}",
            list().join(", ")
        )),
    }
}

/// Upper bound on sweep grid sizes; datasets beyond this are rejected as
/// config mistakes before any allocation happens.
pub const MAX_SWEEP_POINTS: usize = 1_000_000;

/// Errors from loading a user-defined scenario file.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario invalid: {0}")]
    Invalid(String),
}

/// User-defined sweep description (same JSON dialect as config files).
#[derive(Debug, Clone, Deserialize)]
pub struct CustomScenario {
    pub name: String,
    pub config: ConfigFile,
    pub sweep: SweepFile,
    #[serde(default)]
    pub optimizer: OptimizerFile,
    /// Detector efficiency for `n_bar` sweeps.
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    0.7
}

/// Swept parameter: the Stark coupling (optimizing per point) or the mean
/// photon number of the entanglement pulse (tuning the node once).
#[derive(Debug, Clone, Deserialize)]
pub struct SweepFile {
    pub parameter: SweepParameter,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    #[serde(default = "default_true")]
    pub log: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "g_s_ghz")]
    StarkGhz,
    #[serde(rename = "n_bar")]
    PulseMean,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct OptimizerFile {
    pub delta_lo_ghz: Option<f64>,
    pub delta_hi_ghz: Option<f64>,
    pub vary_splitting: Option<bool>,
    pub budget: Option<usize>,
}

impl CustomScenario {
    pub fn from_json_str(s: &str) -> Result<Self, ScenarioError> {
        let parsed: CustomScenario = serde_json::from_str(s).map_err(ConfigError::Parse)?;
        if !(2..=MAX_SWEEP_POINTS).contains(&parsed.sweep.points) {
            return Err(ScenarioError::Invalid(format!(
                "sweep.points must lie in [2, {MAX_SWEEP_POINTS}]"
            )));
        }
        if !(parsed.sweep.lo.is_finite() && parsed.sweep.hi.is_finite())
            || parsed.sweep.lo <= 0.0
            || parsed.sweep.hi < parsed.sweep.lo
        {
            return Err(ScenarioError::Invalid(
                "sweep range must be finite, positive and ordered".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&parsed.eta) {
            return Err(ScenarioError::Invalid("eta must lie in [0, 1]".to_string()));
        }
        Ok(parsed)
    }

    fn grid(&self) -> Vec<f64> {
        let (lo, hi, n) = (self.sweep.lo, self.sweep.hi, self.sweep.points);
        if self.sweep.log {
            log_grid(lo, hi, n)
        } else {
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        }
    }

    /// Execute the sweep; the config must already validate.
    pub fn run(&self) -> Result<ScenarioReport, String> {
        let base = self.config.to_config();
        base.validate()
            .map_err(|v| ConfigError::Invalid(v).to_string())?;
        let tls = base.tls.as_ref().ok_or("scenario config needs a tls block")?;
        let wq = tls.omega_q.rad_per_s();
        let gamma = base
            .emitters
            .iter()
            .map(|e| e.gamma_total())
            .fold(0.0, f64::max);
        let bounds = SearchBounds {
            delta: (
                self.optimizer
                    .delta_lo_ghz
                    .map(|g| AngularFrequency::from_ghz(g).rad_per_s())
                    .unwrap_or((0.2 * wq).min(wq - 4.0 * gamma)),
                self.optimizer
                    .delta_hi_ghz
                    .map(|g| AngularFrequency::from_ghz(g).rad_per_s())
                    .unwrap_or(wq + 4.0 * gamma.max(0.1 * wq)),
            ),
            splitting: None,
        };
        let budget = self.optimizer.budget.unwrap_or(optimize::DEFAULT_BUDGET);
        let space = if self.optimizer.vary_splitting.unwrap_or(base.n_emitters() == 2) {
            SearchSpace::DetuningAndSplitting
        } else {
            SearchSpace::Detuning
        };

        match self.sweep.parameter {
            SweepParameter::StarkGhz => {
                let mut rows = Vec::new();
                for gs_ghz in self.grid() {
                    let mut node = base.clone();
                    node.tls.as_mut().expect("checked").g_s = AngularFrequency::from_ghz(gs_ghz);
                    let report = optimize::optimize_raman(&node, space, bounds, budget)
                        .map_err(|e| e.to_string())?;
                    let x = AngularFrequency::from_ghz(gs_ghz).rad_per_s() / wq;
                    rows.push(vec![
                        node.n_emitters().to_string(),
                        format_float(gs_ghz),
                        format_float(x),
                        format_float(report.p_raman_at_opt),
                        format_float(closed_form(node.n_emitters(), node.emitters[0].beta(), x)),
                        format_float(AngularFrequency(report.best_delta).to_ghz()),
                        format_float(
                            report
                                .best_splitting
                                .map(|s| AngularFrequency(s).to_ghz())
                                .unwrap_or(0.0),
                        ),
                        report.n_evaluations.to_string(),
                        u8::from(report.converged).to_string(),
                    ]);
                }
                Ok(ScenarioReport::assemble(&self.name, FIG3A_HEADER, rows, Vec::new()))
            }
            SweepParameter::PulseMean => {
                let report = optimize::optimize_raman(&base, space, bounds, budget)
                    .map_err(|e| e.to_string())?;
                let mut node = match report.best_splitting {
                    Some(s) => optimize::with_splitting(&base, s),
                    None => base,
                };
                node.delta = AngularFrequency(report.best_delta);
                let mut rows = Vec::new();
                for n_bar in self.grid() {
                    let r = protocol::coherent_protocol(
                        &node,
                        &node,
                        n_bar,
                        self.eta,
                        ProtocolOptions::default(),
                    )
                    .map_err(|e| e.to_string())?;
                    rows.push(vec![
                        node.n_emitters().to_string(),
                        format_float(n_bar),
                        format_float(r.fidelity),
                        format_float(r.p_success),
                        format_float(r.breakdown.double_flip),
                        format_float(r.breakdown.rayleigh_dephasing),
                        format_float(r.breakdown.other),
                        format_float(r.truncation_mass),
                    ]);
                }
                Ok(ScenarioReport::assemble(&self.name, FIG3B_HEADER, rows, Vec::new()))
            }
        }
    }
}
