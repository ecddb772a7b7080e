//! Operating-point search: maximize the Raman transfer probability over the
//! probe detuning δ (and optionally a symmetric inter-emitter splitting Δ).
//!
//! The objective is smooth but has no exposed closed form, so the search is
//! derivative-free and fully deterministic: a seeded coarse grid followed by
//! golden-section (1-D) or compass (2-D) refinement. Ties are broken toward
//! smaller |δ| so reruns and parallel variants agree bit for bit.

use serde::Serialize;

use crate::config::SystemConfig;
use crate::scattering;
use crate::units::AngularFrequency;

/// Minimum evaluation budget accepted by [`optimize_raman`].
pub const MIN_BUDGET: usize = 100;
/// Default evaluation budget (generous; a 2-D search uses a few thousand).
pub const DEFAULT_BUDGET: usize = 40_000;
/// Coarse-grid points per search dimension.
pub const GRID_POINTS: usize = 64;
/// Relative tolerance on the objective at which refinement stops.
const REL_TOL: f64 = 1e-8;

/// Which parameters the optimizer may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SearchSpace {
    /// Probe detuning δ only.
    Detuning,
    /// δ plus a symmetric emitter splitting Δ (emitter *i* is detuned to
    /// Δ·(i − (N−1)/2), replacing any individual detunings).
    DetuningAndSplitting,
}

/// Inclusive search intervals, rad/s.
#[derive(Debug, Clone, Copy)]
pub struct SearchBounds {
    /// Probe-detuning interval.
    pub delta: (f64, f64),
    /// Splitting interval; `None` selects `[0, 10·max Γ]`.
    pub splitting: Option<(f64, f64)>,
}

/// Closed-form single-emitter Raman resonances δ±.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResonanceGuess {
    pub delta_plus: f64,
    pub delta_minus: f64,
    /// Set when ω_q² + g_s² < Γ²: the two roots merge and the returned
    /// degenerate point ω_q/2 is only a starting guess (code `OVERDAMPED`).
    pub overdamped: bool,
}

/// δ± = (ω_q ± √(ω_q² + g_s² − Γ²))/2, the detunings at which the dressed
/// TLS-emitter resonances sit; degenerate point ω_q/2 when overdamped.
pub fn resonance_guess_1qd(omega_q: f64, g_s: f64, gamma: f64) -> ResonanceGuess {
    let radicand = omega_q * omega_q + g_s * g_s - gamma * gamma;
    if radicand < 0.0 {
        return ResonanceGuess {
            delta_plus: 0.5 * omega_q,
            delta_minus: 0.5 * omega_q,
            overdamped: true,
        };
    }
    let root = radicand.sqrt();
    ResonanceGuess {
        delta_plus: 0.5 * (omega_q + root),
        delta_minus: 0.5 * (omega_q - root),
        overdamped: false,
    }
}

/// Two-emitter Raman resonance δ = ω_q − √(Γ₁,1D·Γ₂,1D)·sin(kΔz)/2 + g_s²/(4ω_q)
/// (input resonant with the TLS-flipped subradiant mode, Stark-shifted).
/// `None` without a TLS or with ω_q ≤ 0.
pub fn resonance_guess_2qd(config: &SystemConfig) -> Option<f64> {
    let tls = config.tls.as_ref()?;
    let wq = tls.omega_q.rad_per_s();
    if wq <= 0.0 || config.n_emitters() < 2 {
        return None;
    }
    let gs = tls.g_s.rad_per_s();
    let (e0, e1) = (&config.emitters[0], &config.emitters[1]);
    let kdz = e1.kz - e0.kz;
    Some(wq - 0.5 * (e0.gamma_1d * e1.gamma_1d).sqrt() * kdz.sin() + gs * gs / (4.0 * wq))
}

/// Result of an operating-point search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimumReport {
    /// Best probe detuning found, rad/s.
    pub best_delta: f64,
    /// Best symmetric splitting, rad/s (splitting searches only).
    pub best_splitting: Option<f64>,
    /// Objective value at the optimum.
    pub p_raman_at_opt: f64,
    /// The closed-form seed the search started from, rad/s.
    pub closed_form_guess: f64,
    /// Objective evaluations spent.
    pub n_evaluations: usize,
    /// False when the budget ran out before the refinement tolerance was met.
    pub converged: bool,
    /// Stable diagnostic codes (`OVERDAMPED`, `BUDGET_EXHAUSTED`).
    pub warnings: Vec<String>,
}

/// Replace per-emitter detunings by the symmetric ladder Δ·(i − (N−1)/2).
pub fn with_splitting(config: &SystemConfig, splitting: f64) -> SystemConfig {
    let mut c = config.clone();
    let n = c.emitters.len() as f64;
    for (i, e) in c.emitters.iter_mut().enumerate() {
        e.delta = AngularFrequency(splitting * (i as f64 - 0.5 * (n - 1.0)));
    }
    c
}

struct Objective<'a> {
    config: &'a SystemConfig,
    vary_splitting: bool,
    evals: usize,
}

impl Objective<'_> {
    /// Raman probability; singular resolvents score zero instead of aborting
    /// the search (they are isolated poles the optimum never sits on).
    fn eval(&mut self, delta: f64, splitting: f64) -> f64 {
        self.evals += 1;
        let p = if self.vary_splitting {
            scattering::raman_probability(&with_splitting(self.config, splitting), delta)
        } else {
            scattering::raman_probability(self.config, delta)
        };
        p.unwrap_or(0.0)
    }
}

/// Strict improvement test with the tie-break toward smaller |δ|.
fn better(p: f64, delta: f64, best_p: f64, best_delta: f64) -> bool {
    p > best_p || (p == best_p && delta.abs() < best_delta.abs())
}

/// Maximize the Raman probability over the requested search space.
///
/// Deterministic for identical inputs. When `budget` (≥ 100, clamped) runs
/// out, the best point found so far is returned with `converged = false` and
/// a `BUDGET_EXHAUSTED` warning.
pub fn optimize_raman(
    config: &SystemConfig,
    space: SearchSpace,
    bounds: SearchBounds,
    budget: usize,
) -> Result<OptimumReport, scattering::ScatteringError> {
    let tls = config
        .tls
        .as_ref()
        .ok_or(scattering::ScatteringError::MissingTls)?;
    let budget = budget.max(MIN_BUDGET);
    let (dlo, dhi) = bounds.delta;
    let dwidth = dhi - dlo;
    let mut warnings = Vec::new();

    // Closed-form seeds.
    let gamma_max = config
        .emitters
        .iter()
        .map(|e| e.gamma_total())
        .fold(0.0, f64::max);
    let guess1 = resonance_guess_1qd(
        tls.omega_q.rad_per_s(),
        tls.g_s.rad_per_s(),
        config.emitters[0].gamma_total(),
    );
    if guess1.overdamped {
        warnings.push("OVERDAMPED".to_string());
    }
    let mut seeds = Vec::new();
    let closed_form_guess = if config.n_emitters() == 1 {
        seeds.push(guess1.delta_plus);
        seeds.push(guess1.delta_minus);
        guess1.delta_plus
    } else {
        let g = resonance_guess_2qd(config).unwrap_or(guess1.delta_plus);
        seeds.push(g);
        g
    };
    seeds.retain(|d| (dlo..=dhi).contains(d));

    let vary_splitting = matches!(space, SearchSpace::DetuningAndSplitting);
    let (slo, shi) = if vary_splitting {
        bounds.splitting.unwrap_or((0.0, 10.0 * gamma_max))
    } else {
        (0.0, 0.0)
    };
    let swidth = shi - slo;

    let mut obj = Objective {
        config,
        vary_splitting,
        evals: 0,
    };
    let mut best = (f64::NAN, 0.0, f64::NEG_INFINITY); // (delta, splitting, p)
    let consider = |obj: &mut Objective, d: f64, s: f64, best: &mut (f64, f64, f64)| {
        let p = obj.eval(d, s);
        if best.0.is_nan() || better(p, d, best.2, best.0) {
            *best = (d, s, p);
        }
    };

    // Stage 1: seeded coarse grid.
    let grid = |i: usize, lo: f64, width: f64| lo + width * i as f64 / (GRID_POINTS - 1) as f64;
    if vary_splitting {
        for j in 0..GRID_POINTS {
            let s = grid(j, slo, swidth);
            for i in 0..GRID_POINTS {
                consider(&mut obj, grid(i, dlo, dwidth), s, &mut best);
            }
            for &d in &seeds {
                consider(&mut obj, d, s, &mut best);
            }
        }
    } else {
        for i in 0..GRID_POINTS {
            consider(&mut obj, grid(i, dlo, dwidth), 0.0, &mut best);
        }
        for &d in &seeds {
            consider(&mut obj, d, 0.0, &mut best);
        }
    }

    // Stage 2: local refinement.
    let mut converged = false;
    if vary_splitting {
        // Compass search from the best grid point.
        let (mut d0, mut s0, mut p0) = best;
        let mut hd = dwidth / (GRID_POINTS - 1) as f64;
        let mut hs = swidth / (GRID_POINTS - 1) as f64;
        while obj.evals + 4 <= budget {
            let mut local = (d0, s0, p0);
            for (d, s) in [
                ((d0 - hd).max(dlo), s0),
                ((d0 + hd).min(dhi), s0),
                (d0, (s0 - hs).max(slo)),
                (d0, (s0 + hs).min(shi)),
            ] {
                let p = obj.eval(d, s);
                if better(p, d, local.2, local.0) {
                    local = (d, s, p);
                }
            }
            if local.2 > p0 {
                let gain = (local.2 - p0) / local.2.max(f64::MIN_POSITIVE);
                (d0, s0, p0) = local;
                if gain < REL_TOL && hd < 1e-9 * dwidth {
                    converged = true;
                    break;
                }
            } else {
                hd *= 0.5;
                hs *= 0.5;
                if hd < 1e-12 * dwidth && hs < 1e-12 * swidth.max(dwidth) {
                    converged = true;
                    break;
                }
            }
        }
        if better(p0, d0, best.2, best.0) {
            best = (d0, s0, p0);
        }
    } else {
        // Golden-section around the best point, bracketed by one grid step.
        let h = dwidth / (GRID_POINTS - 1) as f64;
        let (mut a, mut b) = ((best.0 - h).max(dlo), (best.0 + h).min(dhi));
        let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut pc = obj.eval(c, 0.0);
        let mut pd = obj.eval(d, 0.0);
        while obj.evals < budget {
            if better(pc, c, best.2, best.0) {
                best = (c, 0.0, pc);
            }
            if better(pd, d, best.2, best.0) {
                best = (d, 0.0, pd);
            }
            let pmax = pc.max(pd).max(f64::MIN_POSITIVE);
            if (pc - pd).abs() <= REL_TOL * pmax && (b - a) <= 1e-10 * dwidth.max(b.abs()) {
                converged = true;
                break;
            }
            if pc > pd || (pc == pd && c.abs() < d.abs()) {
                b = d;
                d = c;
                pd = pc;
                c = b - phi * (b - a);
                pc = obj.eval(c, 0.0);
            } else {
                a = c;
                c = d;
                pc = pd;
                d = a + phi * (b - a);
                pd = obj.eval(d, 0.0);
            }
        }
    }

    if !converged {
        warnings.push("BUDGET_EXHAUSTED".to_string());
    }
    Ok(OptimumReport {
        best_delta: best.0,
        best_splitting: vary_splitting.then_some(best.1),
        p_raman_at_opt: best.2,
        closed_form_guess,
        n_evaluations: obj.evals,
        converged,
        warnings,
    })
}
