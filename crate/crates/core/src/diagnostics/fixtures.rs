//! Regression constants pinned from the brute-force oracles.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bmo::{bmo_norm, log_inequality_ratio, DyadicCubeSet};
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};

pub const FIXTURE_N: usize = 64;
pub const FIXTURE_DEPTH: u32 = 4;
pub const FIXTURE_SHIFTS: usize = 2;
pub const FIXTURE_Q: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixtures {
    pub log_ratio: LogRatioFixture,
    pub bmo_cos: BmoFixture,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRatioFixture {
    pub n: usize,
    pub q: f64,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BmoFixture {
    pub n: usize,
    pub depth: u32,
    pub shifts: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogRatioSample {
    pub family: &'static str,
    pub param: f64,
    pub ratio: f64,
}

fn fixture_cubes() -> Result<(Grid, DyadicCubeSet)> {
    let grid = Grid::new(2, FIXTURE_N)?;
    let cubes = DyadicCubeSet::new(&grid, FIXTURE_DEPTH, FIXTURE_SHIFTS)?;
    Ok((grid, cubes))
}

/// `f = cos x₁` against three families of `g`: constants, `(1 + cos x₁)^s`
/// for `s ∈ {1, 2, 4}`, and `g_k` with `‖g_k‖₁ = 2^{−k}`, `k = 0..=20`.
pub fn log_ratio_samples() -> Result<Vec<LogRatioSample>> {
    let (grid, cubes) = fixture_cubes()?;
    let f = ScalarField::from_fn(&grid, |x| x[0].cos());
    let bump = ScalarField::from_fn(&grid, |x| 1.0 + x[0].cos());
    let mut out = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        let g = ScalarField::constant(&grid, c);
        out.push(LogRatioSample {
            family: "constant",
            param: c,
            ratio: log_inequality_ratio(&f, &g, FIXTURE_Q, &cubes)?,
        });
    }
    for s in [1, 2, 4] {
        let g = bump.map(|v| v.powi(s));
        out.push(LogRatioSample {
            family: "power",
            param: s as f64,
            ratio: log_inequality_ratio(&f, &g, FIXTURE_Q, &cubes)?,
        });
    }
    let l1 = bump.integral();
    for k in 0..=20 {
        let g = bump.scaled(0.5f64.powi(k) / l1);
        out.push(LogRatioSample {
            family: "shrinking",
            param: k as f64,
            ratio: log_inequality_ratio(&f, &g, FIXTURE_Q, &cubes)?,
        });
    }
    Ok(out)
}

pub fn bmo_cos_value() -> Result<f64> {
    let (grid, cubes) = fixture_cubes()?;
    bmo_norm(&ScalarField::from_fn(&grid, |x| x[0].cos()), &cubes)
}

impl Fixtures {
    pub fn compute() -> Result<Self> {
        let max_ratio = log_ratio_samples()?.iter().map(|s| s.ratio).fold(0.0, f64::max);
        Ok(Fixtures {
            log_ratio: LogRatioFixture {
                n: FIXTURE_N,
                q: FIXTURE_Q,
                max_ratio,
            },
            bmo_cos: BmoFixture {
                n: FIXTURE_N,
                depth: FIXTURE_DEPTH,
                shifts: FIXTURE_SHIFTS,
                value: bmo_cos_value()?,
            },
        })
    }

    /// The checked-in fixture file of this crate.
    pub fn default_path() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/diagnostics.toml")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::param("fixtures", format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let text = toml::to_string(self).map_err(|e| Error::param("fixtures", e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }

    /// Loads `path`, or computes and writes it when absent.
    pub fn load_or_pin(path: &Path) -> Result<(Self, bool)> {
        if path.exists() {
            return Ok((Self::load(path)?, false));
        }
        let fx = Self::compute()?;
        fx.save(path)?;
        Ok((fx, true))
    }
}
