//! Numerical checks of the a priori estimates.

mod bmo;
mod bogovskii;
mod energy;
mod fixtures;
mod flux;
mod gronwall;
mod truncation;

pub use bmo::{bmo_norm, cube_oscillations, log_inequality_ratio, log_inequality_rhs, CubeOscillation, DyadicCubeSet};
pub use bogovskii::{bogovskii_pressure_test, bogovskii_vector, BogovskiiLevel, BogovskiiReport};
pub use energy::{dissipation, energy_balance, renormalized_identity_residual, BalanceRow};
pub use fixtures::{bmo_cos_value, log_ratio_samples, BmoFixture, Fixtures, LogRatioFixture, LogRatioSample};
pub use flux::{cz_consistency, cz_flux, cz_flux_regularized, effective_viscous_flux, CzConsistency};
pub use gronwall::{comparison_solution, gronwall_compare, ladder_defect, GronwallOptions, GronwallReport, LadderDefect};
pub use truncation::{pk_apply, truncation_apply, TruncationOperator};

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "SKIPPED",
        })
    }
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// One line of a diagnostics table.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub name: String,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl DiagnosticRow {
    /// `value ≤ bound`.
    pub fn check(name: impl Into<String>, t: f64, value: f64, bound: f64) -> Self {
        DiagnosticRow {
            name: name.into(),
            t,
            value,
            bound,
            verdict: Verdict::from_bool(value <= bound),
        }
    }

    pub fn skipped(name: impl Into<String>) -> Self {
        DiagnosticRow {
            name: name.into(),
            t: f64::NAN,
            value: f64::NAN,
            bound: f64::NAN,
            verdict: Verdict::Skipped,
        }
    }
}
