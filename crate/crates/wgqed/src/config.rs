//! System description and validation.
//!
//! A [`SystemConfig`] is the single input type for every physics routine: an ordered
//! array of emitters in a one-dimensional waveguide, an optional low-frequency
//! two-level system (TLS) Stark-coupled to one emitter, and the detuning of the
//! incoming probe photon.
//!
//! Positions enter the physics only through the optical phase `kz` accumulated
//! along the waveguide (the Markovian regime: retardation across the array is
//! negligible), so emitters carry a phase coordinate rather than a length.
//!
//! The on-disk JSON schema carries laboratory units (`*_ghz`, `*_ns`,
//! `kz_over_pi`); parsing converts to internal angular units exactly once — see
//! [`crate::units`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{rate_from_per_ns, rate_to_per_ns, AngularFrequency};

/// Hard cap on the emitter count (keeps every dense solve at most 32×32).
pub const MAX_EMITTERS: usize = 16;

/// One quantum emitter coupled to the waveguide.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterParams {
    /// Decay rate into the waveguide mode, s⁻¹.
    pub gamma_1d: f64,
    /// Leakage rate into non-guided modes, s⁻¹.
    pub gamma_prime: f64,
    /// Optical phase position k·z along the waveguide, radians.
    pub kz: f64,
    /// Individual detuning of this emitter from the common reference, rad/s.
    pub delta: AngularFrequency,
}

impl EmitterParams {
    /// Total linewidth Γ = Γ_1D + γ′, s⁻¹.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_1d + self.gamma_prime
    }

    /// Waveguide coupling efficiency β = Γ_1D / (Γ_1D + γ′).
    pub fn beta(&self) -> f64 {
        self.gamma_1d / self.gamma_total()
    }
}

/// The low-frequency two-level system Stark-coupled to one emitter.
#[derive(Debug, Clone, PartialEq)]
pub struct TlsParams {
    /// TLS transition frequency ω_q, rad/s.
    pub omega_q: AngularFrequency,
    /// Stark coupling strength g_s between the TLS and its host emitter, rad/s.
    pub g_s: AngularFrequency,
    /// Index of the emitter the TLS couples to.
    pub coupled_emitter: usize,
}

/// Full system description consumed by every physics routine.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Emitters ordered by non-decreasing position along the waveguide.
    pub emitters: Vec<EmitterParams>,
    /// Optional TLS; without it the system scatters only elastically.
    pub tls: Option<TlsParams>,
    /// Detuning δ of the incoming probe photon, rad/s (the operating point).
    pub delta: AngularFrequency,
}

/// Machine-readable codes for validation failures (stable CLI vocabulary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationCode {
    #[serde(rename = "NEGATIVE_RATE")]
    NegativeRate,
    #[serde(rename = "BAD_INDEX")]
    BadIndex,
    #[serde(rename = "DIMENSION_EXCEEDED")]
    DimensionExceeded,
    #[serde(rename = "NONMONOTONIC_POSITIONS")]
    NonmonotonicPositions,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NegativeRate => "NEGATIVE_RATE",
            ViolationCode::BadIndex => "BAD_INDEX",
            ViolationCode::DimensionExceeded => "DIMENSION_EXCEEDED",
            ViolationCode::NonmonotonicPositions => "NONMONOTONIC_POSITIONS",
        }
    }
}

/// One violated constraint: which field, and what it must satisfy.
#[derive(Debug, Clone, Error, Serialize)]
#[error("{code:?} at {field}: {constraint}")]
pub struct Violation {
    pub code: ViolationCode,
    /// Dotted path of the offending field, e.g. `emitters[2].gamma_1d`.
    pub field: String,
    /// Human-readable constraint that failed.
    pub constraint: String,
}

impl SystemConfig {
    pub fn n_emitters(&self) -> usize {
        self.emitters.len()
    }

    /// Dimension of the single-excitation scattering problem: N without a TLS,
    /// 2N with one (each emitter appears once per TLS state).
    pub fn dimension(&self) -> usize {
        match self.tls {
            Some(_) => 2 * self.emitters.len(),
            None => self.emitters.len(),
        }
    }

    /// Checks every structural invariant; returns all violations, not just the first.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut violations = Vec::new();

        if self.emitters.is_empty() {
            violations.push(Violation {
                code: ViolationCode::DimensionExceeded,
                field: "emitters".into(),
                constraint: "at least one emitter is required".into(),
            });
        }
        if self.emitters.len() > MAX_EMITTERS {
            violations.push(Violation {
                code: ViolationCode::DimensionExceeded,
                field: "emitters".into(),
                constraint: format!("at most {MAX_EMITTERS} emitters are supported"),
            });
        }

        for (m, e) in self.emitters.iter().enumerate() {
            if !(e.gamma_1d >= 0.0) || !e.gamma_1d.is_finite() {
                violations.push(Violation {
                    code: ViolationCode::NegativeRate,
                    field: format!("emitters[{m}].gamma_1d"),
                    constraint: "decay rate must be finite and >= 0".into(),
                });
            }
            if !(e.gamma_prime >= 0.0) || !e.gamma_prime.is_finite() {
                violations.push(Violation {
                    code: ViolationCode::NegativeRate,
                    field: format!("emitters[{m}].gamma_prime"),
                    constraint: "leakage rate must be finite and >= 0".into(),
                });
            }
        }

        for m in 1..self.emitters.len() {
            if self.emitters[m].kz < self.emitters[m - 1].kz {
                violations.push(Violation {
                    code: ViolationCode::NonmonotonicPositions,
                    field: format!("emitters[{m}].kz"),
                    constraint: "positions kz must be non-decreasing along the waveguide"
                        .into(),
                });
            }
        }

        if let Some(tls) = &self.tls {
            if tls.coupled_emitter >= self.emitters.len() {
                violations.push(Violation {
                    code: ViolationCode::BadIndex,
                    field: "tls.coupled_emitter".into(),
                    constraint: format!(
                        "index {} out of range for {} emitter(s)",
                        tls.coupled_emitter,
                        self.emitters.len()
                    ),
                });
            }
            if !(tls.g_s.rad_per_s() >= 0.0) || !tls.g_s.rad_per_s().is_finite() {
                violations.push(Violation {
                    code: ViolationCode::NegativeRate,
                    field: "tls.g_s".into(),
                    constraint: "Stark coupling must be finite and >= 0".into(),
                });
            }
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }
}

// ---------------------------------------------------------------------------
// On-disk JSON schema (laboratory units)
// ---------------------------------------------------------------------------

/// JSON form of one emitter. Rates are in ns⁻¹, detunings in GHz, positions in
/// units of π (so `kz_over_pi: 0.5` places an emitter a quarter-wavelength on).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EmitterFile {
    pub gamma_1d_ns: f64,
    #[serde(default)]
    pub gamma_prime_ns: f64,
    #[serde(default)]
    pub kz_over_pi: f64,
    #[serde(default)]
    pub delta_ghz: f64,
}

/// JSON form of the TLS block.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TlsFile {
    pub omega_q_ghz: f64,
    pub g_s_ghz: f64,
    #[serde(default)]
    pub coupled_emitter: usize,
}

/// JSON form of a full system description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub emitters: Vec<EmitterFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tls: Option<TlsFile>,
    #[serde(default)]
    pub delta_ghz: f64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config JSON parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config invalid: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("{} at {}: {}", v.code.as_str(), v.field, v.constraint))
        .collect::<Vec<_>>()
        .join("; ")
}

impl ConfigFile {
    /// Converts to internal units without validating.
    pub fn to_config(&self) -> SystemConfig {
        SystemConfig {
            emitters: self
                .emitters
                .iter()
                .map(|e| EmitterParams {
                    gamma_1d: rate_from_per_ns(e.gamma_1d_ns),
                    gamma_prime: rate_from_per_ns(e.gamma_prime_ns),
                    kz: e.kz_over_pi * std::f64::consts::PI,
                    delta: AngularFrequency::from_ghz(e.delta_ghz),
                })
                .collect(),
            tls: self.tls.as_ref().map(|t| TlsParams {
                omega_q: AngularFrequency::from_ghz(t.omega_q_ghz),
                g_s: AngularFrequency::from_ghz(t.g_s_ghz),
                coupled_emitter: t.coupled_emitter,
            }),
            delta: AngularFrequency::from_ghz(self.delta_ghz),
        }
    }

    /// Back to laboratory units (inverse of [`ConfigFile::to_config`]).
    pub fn from_config(config: &SystemConfig) -> Self {
        ConfigFile {
            emitters: config
                .emitters
                .iter()
                .map(|e| EmitterFile {
                    gamma_1d_ns: rate_to_per_ns(e.gamma_1d),
                    gamma_prime_ns: rate_to_per_ns(e.gamma_prime),
                    kz_over_pi: e.kz / std::f64::consts::PI,
                    delta_ghz: e.delta.to_ghz(),
                })
                .collect(),
            tls: config.tls.as_ref().map(|t| TlsFile {
                omega_q_ghz: t.omega_q.to_ghz(),
                g_s_ghz: t.g_s.to_ghz(),
                coupled_emitter: t.coupled_emitter,
            }),
            delta_ghz: config.delta.to_ghz(),
        }
    }
}

impl SystemConfig {
    /// Parses the JSON schema and validates. This is the untrusted-input entry point
    /// (CLI `--config` files, fuzz targets): it must never panic on any byte string.
    pub fn from_json_str(s: &str) -> Result<SystemConfig, ConfigError> {
        let file: ConfigFile = serde_json::from_str(s)?;
        let config = file.to_config();
        config.validate().map_err(ConfigError::Invalid)?;
        Ok(config)
    }

    /// Serializes to the JSON schema (laboratory units), pretty-printed.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ConfigFile::from_config(self))
            .expect("config serialization cannot fail")
    }
}
