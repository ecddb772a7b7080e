//! Frequency and rate units.
//!
//! Every frequency-like quantity inside the library is an *angular* frequency in
//! rad/s: detunings, qubit splittings, Stark couplings, and decay rates all live on
//! the same axis and can be added without bookkeeping. Conversions happen exactly
//! once, at the API boundary:
//!
//! * laboratory frequencies quoted in GHz are multiplied by 2π·10⁹ on the way in,
//! * decay rates quoted in ns⁻¹ are multiplied by 10⁹ (a rate is already angular),
//! * dimensionless inputs ("units of Γ_1D") are scaled by a reference rate.

use serde::{Deserialize, Serialize};

/// 2π·10⁹: one GHz of ordinary frequency, as an angular frequency in rad/s.
pub const GHZ: f64 = 2.0 * std::f64::consts::PI * 1e9;

/// 10⁹: one inverse nanosecond, as a rate in s⁻¹.
pub const PER_NS: f64 = 1e9;

/// An angular frequency in rad/s (also used for detunings, which may be negative).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularFrequency(pub f64);

impl AngularFrequency {
    /// From an ordinary frequency in GHz (multiplies by 2π·10⁹).
    pub fn from_ghz(f: f64) -> Self {
        AngularFrequency(f * GHZ)
    }

    /// From a raw angular frequency in rad/s.
    pub fn from_rad_per_s(w: f64) -> Self {
        AngularFrequency(w)
    }

    /// From a dimensionless value quoted in units of a reference rate (s⁻¹).
    pub fn from_units_of(x: f64, reference: f64) -> Self {
        AngularFrequency(x * reference)
    }

    /// Raw value in rad/s.
    pub fn rad_per_s(self) -> f64 {
        self.0
    }

    /// As an ordinary frequency in GHz.
    pub fn to_ghz(self) -> f64 {
        self.0 / GHZ
    }
}

/// A decay rate in ns⁻¹, converted to s⁻¹.
pub fn rate_from_per_ns(r: f64) -> f64 {
    r * PER_NS
}

/// A decay rate in s⁻¹, expressed in ns⁻¹.
pub fn rate_to_per_ns(r: f64) -> f64 {
    r / PER_NS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghz_round_trip_is_exact() {
        let w = AngularFrequency::from_ghz(5.0);
        assert_eq!(w.rad_per_s(), 5.0 * GHZ);
        assert_eq!(w.to_ghz(), 5.0);
    }

    #[test]
    fn one_ghz_exceeds_one_per_ns_by_two_pi() {
        // A 1 GHz splitting is 2π times faster than a 1 ns⁻¹ decay: the source of
        // most bookkeeping errors this module exists to prevent.
        let w = AngularFrequency::from_ghz(1.0);
        let r = rate_from_per_ns(1.0);
        assert!((w.rad_per_s() / r - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn dimensionless_mode_scales_by_reference() {
        let gamma = rate_from_per_ns(1.0);
        let w = AngularFrequency::from_units_of(0.5, gamma);
        assert_eq!(w.rad_per_s(), 0.5e9);
    }
}
