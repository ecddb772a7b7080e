//! Non-Hermitian effective Hamiltonian of the emitter array (+ optional TLS).
//!
//! The waveguide is eliminated in the Markovian limit, leaving a dense matrix on
//! the single-excitation manifold: each basis state has exactly one emitter
//! excited, and (when a TLS is present) a definite TLS state, ordered as
//! `|e_0,0⟩ … |e_{N-1},0⟩, |e_0,1⟩ … |e_{N-1},1⟩`.
//!
//! Matrix elements:
//!
//! * diagonal: `δ_m − iΓ_m/2`, plus `ω_q` in the TLS-excited sector,
//! * emitter–emitter: the photon-mediated coupling
//!   `Ω_mn = −(i/2)·√(Γ_m,1D·Γ_n,1D)·exp(i·|kz_m − kz_n|)`,
//! * TLS Stark coupling: `g_s/2` between the two TLS sectors of the host emitter.
//!
//! The probe detuning δ is *not* included here; scattering routines subtract
//! `δ·I` per probe frequency, so one Hamiltonian serves a whole spectrum.
//!
//! Both the `1/2` in `Ω_mn` and the `g_s/2` matrix element are deliberate: they
//! are the unique normalization under which the collective rates
//! `Γ_{A/S,1D}` (see [`crate::collective`]), the single-emitter transmission
//! `t = 1 − β` and the Raman resonances `δ_± = (ω_q ± √(ω_q²+g_s²−Γ²))/2` with
//! peak `β²·g_s²/(g_s²+ω_q²)` all come out exact simultaneously.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::config::SystemConfig;

/// Label of one basis vector of the single-excitation manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct BasisState {
    /// Which emitter holds the excitation.
    pub emitter: usize,
    /// TLS state (false = ground). Always false when the config has no TLS.
    pub tls_excited: bool,
}

/// Dense effective Hamiltonian with its basis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    /// Matrix in rad/s over the labeled basis.
    pub matrix: DMatrix<Complex64>,
    /// Basis labels, row/column order.
    pub basis: Vec<BasisState>,
    /// True when the probe detuning δ has not been folded in.
    pub delta_independent: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum HamiltonianError {
    #[error("config has no TLS block")]
    MissingTls,
}

/// Photon-mediated coupling between two emitters separated by optical phase
/// `|kz_m − kz_n|` (rates in s⁻¹, result in rad/s):
/// `Ω = −(i/2)·√(Γ_m,1D·Γ_n,1D)·exp(i·phase)`.
///
/// Real part `(1/2)√(Γ_m Γ_n)·sin(phase)` is the coherent exchange; imaginary
/// part `−(1/2)√(Γ_m Γ_n)·cos(phase)` is the collective decay.
pub fn collective_coupling(gamma_m_1d: f64, gamma_n_1d: f64, phase: f64) -> Complex64 {
    let root = (gamma_m_1d * gamma_n_1d).sqrt();
    -0.5 * Complex64::i() * root * Complex64::new(0.0, phase).exp()
}

/// Hamiltonian of the bare array (no TLS): N×N over `|e_m⟩`.
pub fn build_bare(config: &SystemConfig) -> EffectiveHamiltonian {
    let n = config.n_emitters();
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for m in 0..n {
        let em = &config.emitters[m];
        h[(m, m)] = Complex64::new(em.delta.rad_per_s(), -0.5 * em.gamma_total());
        for nn in 0..n {
            if nn == m {
                continue;
            }
            let en = &config.emitters[nn];
            h[(m, nn)] =
                collective_coupling(em.gamma_1d, en.gamma_1d, (em.kz - en.kz).abs());
        }
    }
    EffectiveHamiltonian {
        matrix: h,
        basis: (0..n)
            .map(|m| BasisState {
                emitter: m,
                tls_excited: false,
            })
            .collect(),
        delta_independent: true,
    }
}

/// Full Hamiltonian including the TLS: 2N×2N over `|e_m, s⟩`.
///
/// The TLS ground sector occupies indices `0..N`, the excited sector `N..2N`
/// (shifted up by `ω_q`); the Stark term `g_s/2` connects the two sectors of the
/// host emitter only.
pub fn build_with_tls(
    config: &SystemConfig,
) -> Result<EffectiveHamiltonian, HamiltonianError> {
    let tls = config.tls.as_ref().ok_or(HamiltonianError::MissingTls)?;
    let n = config.n_emitters();
    let bare = build_bare(config).matrix;

    let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for m in 0..n {
        for nn in 0..n {
            h[(m, nn)] = bare[(m, nn)];
            h[(n + m, n + nn)] = bare[(m, nn)];
        }
        h[(n + m, n + m)] += Complex64::new(tls.omega_q.rad_per_s(), 0.0);
    }
    let c = tls.coupled_emitter;
    let half_g = Complex64::new(0.5 * tls.g_s.rad_per_s(), 0.0);
    h[(c, n + c)] = half_g;
    h[(n + c, c)] = half_g;

    let mut basis = Vec::with_capacity(2 * n);
    for s in [false, true] {
        for m in 0..n {
            basis.push(BasisState {
                emitter: m,
                tls_excited: s,
            });
        }
    }
    Ok(EffectiveHamiltonian {
        matrix: h,
        basis,
        delta_independent: true,
    })
}

impl EffectiveHamiltonian {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Hermitian part `(H + H†)/2`. Real for this Hamiltonian: the matrix is
    /// complex-symmetric, so the Hermitian part is just its real part.
    pub fn hermitian_part(&self) -> DMatrix<f64> {
        self.matrix.map(|z| z.re)
    }

    /// Decay-rate matrix `B = i(H − H†) = −2·Im(H)`: real symmetric,
    /// positive-semidefinite, with `B_mm = Γ_m` on the diagonal and
    /// `√(Γ_m,1D·Γ_n,1D)·cos(kz_m − kz_n)` off it. For any normalized mode
    /// vector `v`, `vᵀBv` is the total emission rate of that mode.
    pub fn decay_matrix(&self) -> DMatrix<f64> {
        self.matrix.map(|z| -2.0 * z.im)
    }

    /// `H − δ·I`, the matrix inverted by the scattering routines; marks the
    /// result as probe-dependent.
    pub fn shifted(&self, delta: f64) -> EffectiveHamiltonian {
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= Complex64::new(delta, 0.0);
        }
        EffectiveHamiltonian {
            matrix: m,
            basis: self.basis.clone(),
            delta_independent: false,
        }
    }
}
