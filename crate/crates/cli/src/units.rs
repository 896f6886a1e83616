//! Unit conversions. Every number handed to the simulator is in units where
//! the reference cavity decay rate `κ_ref` is 1; times are then in `1/κ_ref`.
//!
//! With `--unit ns` the rate flags (`--g`, `--kappa`, `--gamma`,
//! `--dark-rate`) are read in ns⁻¹ and the time flags in ns. `κ_ref` is
//! `--kappa-hz` converted to ns⁻¹ when given, otherwise the arm-B cavity
//! decay rate. Rates are divided by `κ_ref`, times multiplied by it, and
//! reported times are converted back.
//!
//! The budget command takes its physical inputs in the units they are
//! usually quoted in (Hz for dark counts, μs for coherence times, ns for
//! lifetimes) and converts them to ns here.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

pub const NS_PER_US: f64 = 1e3;
pub const NS_PER_S: f64 = 1e9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    /// Rates in units of `κ_ref`.
    #[default]
    Kappa,
    /// Rates in ns⁻¹, times in ns.
    Ns,
}

/// Rate in s⁻¹ to ns⁻¹.
pub fn hz_to_per_ns(hz: f64) -> f64 {
    hz / NS_PER_S
}

pub fn us_to_ns(us: f64) -> f64 {
    us * NS_PER_US
}

/// Factor between input units and simulator units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scale {
    /// `κ_ref` expressed in the input rate unit.
    pub kappa_ref: f64,
}

impl Scale {
    pub const IDENTITY: Scale = Scale { kappa_ref: 1.0 };

    pub fn rate(&self, r: f64) -> f64 {
        r / self.kappa_ref
    }

    pub fn time(&self, t: f64) -> f64 {
        t * self.kappa_ref
    }

    /// Simulator time back to input units.
    pub fn time_out(&self, t: f64) -> f64 {
        t / self.kappa_ref
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let s = Scale { kappa_ref: 0.04 };
        assert!((s.time_out(s.time(25.0)) - 25.0).abs() < 1e-12);
        assert!((s.rate(0.04) - 1.0).abs() < 1e-15);
        assert!((hz_to_per_ns(500.0) - 5e-7).abs() < 1e-20);
        assert_eq!(us_to_ns(32.0), 32_000.0);
    }
}
