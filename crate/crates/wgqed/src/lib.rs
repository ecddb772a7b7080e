//! Waveguide-QED transducer simulator.
//!
//! Models one, two or four quantum emitters in a one-dimensional waveguide, each
//! optionally Stark-coupled to a low-frequency two-level system (TLS), and computes:
//!
//! | module | what it does |
//! |---|---|
//! | [`config`] / [`units`] | system description, JSON schema, unit discipline |
//! | [`hamiltonian`] | non-Hermitian effective Hamiltonian on the single-excitation manifold |
//! | [`collective`] | super-/sub-radiant collective modes and their decay rates |
//! | [`scattering`] | elastic and Raman scattering amplitudes of a probe photon |
//! | [`optimize`] | operating-point search maximizing the Raman (transduction) probability |
//! | [`protocol`] | heralded entanglement generation between two remote TLS |
//! | [`scenario`] | canned parameter sweeps with reference expectations, CSV output |
//!
//! Physics in one paragraph: a probe photon near an emitter resonance scatters off
//! the array; the Stark shift from the TLS state splits the scattering resonances,
//! and an inelastic (Raman) scattering event flips the TLS while re-emitting the
//! photon shifted by the TLS frequency — a microwave-to-optics transducer. Arrays
//! beat a single emitter because a subradiant collective mode with a tailored
//! linewidth can be matched to the weak Stark coupling.
//!
//! All frequencies and rates are angular (rad/s) internally; see [`units`].

pub mod cli;
pub mod collective;
pub mod config;
pub mod hamiltonian;
pub mod optimize;
pub mod output;
pub mod protocol;
pub mod scattering;
pub mod scenario;
pub mod units;

pub use config::{ConfigError, EmitterParams, SystemConfig, TlsParams, MAX_EMITTERS};
pub use hamiltonian::{build_bare, build_with_tls, collective_coupling, EffectiveHamiltonian};
pub use units::AngularFrequency;

/// Version string embedded in every output envelope.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
