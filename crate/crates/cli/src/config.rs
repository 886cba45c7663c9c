//! Run configuration: TOML with dotted sections, unknown keys rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use csnt_core::constitutive::{HerschelBulkley, Rational, ViscosityLaw};
use csnt_core::continuity::Scheme;
use csnt_core::coupling::{CoupledConfig, FixedPointConfig, FixedPointMode};
use csnt_core::fields::random_trigonometric;
use csnt_core::{ConstitutiveModel, Grid, RegularizationParams, ScalarField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    #[default]
    Single,
    FixedPoint,
    Ladder,
    Diagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Snapshot every this many levels; the final level is always written.
    #[serde(default = "defaults::snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub regularization: RegularizationConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub momentum: MomentumConfig,
    #[serde(default)]
    pub fixed_point: FixedPointSection,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    /// Written into emitted manifests; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
}

mod defaults {
    pub fn snapshot_every() -> usize {
        50
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn two() -> f64 {
        2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { dim: 2, n: 64 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub gamma: Option<f64>,
    #[serde(default)]
    pub mu0: LawConfig,
    #[serde(default)]
    pub lambda: LawConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    /// `τ/(a + z)`.
    Rational {
        #[serde(default = "defaults::one")]
        tau: f64,
        #[serde(default = "defaults::one")]
        a: f64,
    },
    /// `τ0/max(z, threshold)`.
    HerschelBulkley {
        tau0: f64,
        threshold: f64,
        #[serde(default = "defaults::one")]
        flow_index: f64,
    },
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig::Rational { tau: 1.0, a: 1.0 }
    }
}

impl LawConfig {
    fn build(&self) -> csnt_core::Result<Arc<dyn ViscosityLaw>> {
        Ok(match *self {
            LawConfig::Rational { tau, a } => Arc::new(Rational::new(tau, a)?),
            LawConfig::HerschelBulkley {
                tau0,
                threshold,
                flow_index,
            } => {
                HerschelBulkley::check_flow_index(flow_index)?;
                if flow_index != 1.0 {
                    return Err(csnt_core::Error::InvalidParameter {
                        name: "flow_index",
                        reason: format!("only 1 is implemented, got {flow_index}"),
                    });
                }
                Arc::new(HerschelBulkley::new(tau0, threshold)?)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationConfig {
    pub delta: f64,
    pub epsilon: f64,
    pub m: u32,
    pub beta: u32,
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        RegularizationConfig {
            delta: 1e-3,
            epsilon: 1e-4,
            m: 2,
            beta: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Rk4Lawson,
    ImexEuler,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub cfl: f64,
    #[serde(default)]
    pub scheme: SchemeName,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            dt: 1e-3,
            t_final: 0.25,
            cfl: 0.5,
            scheme: SchemeName::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentumConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        MomentumConfig {
            tol: 1e-9,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    PerStep,
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointSection {
    #[serde(default)]
    pub mode: ModeName,
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
}

impl Default for FixedPointSection {
    fn default() -> Self {
        let d = FixedPointConfig::default();
        FixedPointSection {
            mode: ModeName::PerStep,
            tol: d.tol,
            max_iter: d.max_iter,
            relaxation: d.relaxation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Constant {
        value: f64,
    },
    /// `mean + amplitude cos x₁`.
    Cosine {
        #[serde(default = "defaults::one")]
        mean: f64,
        amplitude: f64,
    },
    /// `mean + amplitude tanh(w)` for a random trigonometric `w` drawn from `seed`.
    Random {
        #[serde(default = "defaults::one")]
        mean: f64,
        amplitude: f64,
        kmax: i64,
    },
    Snapshot {
        path: PathBuf,
    },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Cosine {
            mean: 1.0,
            amplitude: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub deltas: Vec<f64>,
    /// Defaults to `δ/10` per rung.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default = "defaults::two")]
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Empty means every check.
    #[serde(default)]
    pub checks: Vec<String>,
    pub theta: f64,
    pub truncation_k: f64,
    pub truncation_p: f64,
    pub balance_tol: f64,
    pub cz_tol: f64,
    pub gronwall_c: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            checks: Vec::new(),
            theta: 2.0,
            truncation_k: 1.0,
            truncation_p: 2.0,
            balance_tol: 1e-5,
            cz_tol: 1e-6,
            gronwall_c: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub content_hash: String,
    pub csnt_version: String,
}

/// Configuration problems, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<csnt_core::Error> for ConfigError {
    fn from(e: csnt_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// Everything a run needs, built and validated up front.
pub struct Resolved {
    pub config: RunConfig,
    pub coupled: CoupledConfig,
    pub rho0: ScalarField,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn gamma(&self) -> Result<f64, ConfigError> {
        self.model
            .gamma
            .ok_or_else(|| ConfigError("missing required key `model.gamma`".into()))
    }

    pub fn model(&self) -> Result<ConstitutiveModel, ConfigError> {
        let gamma = self.gamma()?;
        Ok(ConstitutiveModel::from_laws(self.model.mu0.build()?, self.model.lambda.build()?, gamma)?)
    }

    pub fn params(&self) -> RegularizationParams {
        let r = &self.regularization;
        RegularizationParams::new(r.delta, r.epsilon, r.m, r.beta)
    }

    pub fn coupled(&self) -> Result<CoupledConfig, ConfigError> {
        let grid = Grid::new(self.grid.dim, self.grid.n)?;
        let mut c = CoupledConfig::new(self.model()?, self.params(), grid, self.time.dt, self.time.t_final);
        c.cfl = self.time.cfl;
        c.scheme = match self.time.scheme {
            SchemeName::Rk4Lawson => Scheme::IntegratingFactorRk4,
            SchemeName::ImexEuler => Scheme::ImexEuler,
            SchemeName::Explicit => Scheme::Explicit,
        };
        c.momentum_tol = self.momentum.tol;
        c.momentum_max_iter = self.momentum.max_iter;
        let fp = &self.fixed_point;
        c.fixed_point = FixedPointConfig {
            mode: match fp.mode {
                ModeName::PerStep => FixedPointMode::PerStep,
                ModeName::Global => FixedPointMode::Global,
            },
            tol: fp.tol,
            max_iter: fp.max_iter,
            relaxation: fp.relaxation,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn initial_density(&self, grid: &Grid) -> Result<ScalarField, ConfigError> {
        let rho = match &self.initial {
            InitialConfig::Constant { value } => ScalarField::constant(grid, *value),
            InitialConfig::Cosine { mean, amplitude } => ScalarField::from_fn(grid, |x| mean + amplitude * x[0].cos()),
            InitialConfig::Random { mean, amplitude, kmax } => {
                if !(*kmax >= 1 && *kmax <= grid.dealias_cutoff()) {
                    return Err(ConfigError(format!(
                        "initial.kmax must lie in [1, {}], got {kmax}",
                        grid.dealias_cutoff()
                    )));
                }
                random_trigonometric(grid, *kmax, self.seed).map(|w| mean + amplitude * w.tanh())
            }
            InitialConfig::Snapshot { path } => {
                let snap = csnt_core::fields::io::read_snapshot(path)
                    .map_err(|e| ConfigError(format!("initial.path: {e}")))?;
                match snap.field {
                    csnt_core::fields::io::AnyField::Scalar(f) if f.grid() == grid => f,
                    _ => {
                        return Err(ConfigError(format!(
                            "initial.path: {} is not a scalar field on the configured grid",
                            path.display()
                        )))
                    }
                }
            }
        };
        if !(rho.min() > 0.0) {
            return Err(ConfigError(format!("initial density must be positive, min is {}", rho.min())));
        }
        Ok(rho)
    }

    /// Checks every key and builds the solver inputs; no compute beyond that.
    pub fn resolve(self) -> Result<Resolved, ConfigError> {
        let coupled = self.coupled()?;
        let rho0 = self.initial_density(&coupled.grid)?;
        if let Some(l) = &self.ladder {
            if l.deltas.is_empty() {
                return Err(ConfigError("ladder.deltas must not be empty".into()));
            }
            if let Some(e) = &l.epsilons {
                if e.len() != l.deltas.len() {
                    return Err(ConfigError("ladder.epsilons must match ladder.deltas in length".into()));
                }
            }
        } else if self.kind == Kind::Ladder {
            return Err(ConfigError("missing required key `ladder.deltas` for a ladder run".into()));
        }
        if let Some(unknown) = self.diagnostics.checks.iter().find(|c| !crate::diagnose::CHECKS.contains(&c.as_str())) {
            return Err(ConfigError(format!(
                "unknown check `{unknown}` in diagnostics.checks (known: {})",
                crate::diagnose::CHECKS.join(", ")
            )));
        }
        Ok(Resolved {
            config: self,
            coupled,
            rho0,
        })
    }

    /// Canonical TOML of the inputs: manifest and output location excluded.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.manifest = None;
        c.output_dir = None;
        toml::to_string(&c).expect("config serializes")
    }

    /// Git-style hash: `sha256("config <len>\0" + canonical)`.
    pub fn content_hash(&self) -> String {
        let body = self.canonical();
        let mut h = Sha256::new();
        h.update(format!("config {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        hex::encode(h.finalize())
    }

    /// The config as written to `manifest.toml`.
    pub fn manifest_text(&self) -> String {
        let mut c = self.clone();
        c.manifest = Some(ManifestInfo {
            content_hash: self.content_hash(),
            csnt_version: env!("CARGO_PKG_VERSION").into(),
        });
        toml::to_string(&c).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "model.gamma = 2.0\n";

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.model.mu0, LawConfig::Rational { tau: 1.0, a: 1.0 });
        assert!(c.resolve().is_ok());
    }

    #[test]
    fn missing_gamma_is_named() {
        let c = RunConfig::parse("[grid]\ndim = 2\nn = 16\n").unwrap();
        let err = c.resolve().err().unwrap();
        assert!(err.0.contains("model.gamma"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("model.gamma = 2.0\nmodel.gama = 2.0\n").is_err());
        assert!(RunConfig::parse("model.gamma = 2.0\n[time]\ndt = 1e-3\nt_final = 1.0\ncfl = 0.5\nfoo = 1\n").is_err());
        assert!(RunConfig::parse("model.gamma = 2.0\nmodel.mu0.law = \"rational\"\nmodel.mu0.b = 1.0\n").is_err());
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let c = RunConfig::parse("model.gamma = 2.0\ntime.dt = 1e-2\ndiagnostics.checks = [\"cz_flux\"]\n").unwrap();
        assert_eq!(c.time.dt, 1e-2);
        assert_eq!(c.time.t_final, TimeConfig::default().t_final);
        assert_eq!(c.diagnostics.theta, DiagnosticsConfig::default().theta);
    }

    #[test]
    fn dotted_and_tabled_forms_agree() {
        let a = RunConfig::parse("model.gamma = 2.0\nmodel.mu0.law = \"herschel_bulkley\"\nmodel.mu0.tau0 = 1.0\nmodel.mu0.threshold = 0.1\n").unwrap();
        let b = RunConfig::parse("[model]\ngamma = 2.0\n[model.mu0]\nlaw = \"herschel_bulkley\"\ntau0 = 1.0\nthreshold = 0.1\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn only_unit_flow_index_accepted() {
        let c = RunConfig::parse("model.gamma = 2.0\nmodel.mu0.law = \"herschel_bulkley\"\nmodel.mu0.tau0 = 1.0\nmodel.mu0.threshold = 0.1\nmodel.mu0.flow_index = 1.5\n").unwrap();
        assert!(c.resolve().is_err());
        let c = RunConfig::parse("model.gamma = 2.0\nmodel.mu0.law = \"herschel_bulkley\"\nmodel.mu0.tau0 = 1.0\nmodel.mu0.threshold = 0.1\nmodel.mu0.flow_index = 0.5\n").unwrap();
        assert!(c.resolve().is_err());
        let c = RunConfig::parse("model.gamma = 2.0\nmodel.mu0.law = \"herschel_bulkley\"\nmodel.mu0.tau0 = 1.0\nmodel.mu0.threshold = 0.1\n").unwrap();
        assert!(c.resolve().is_ok());
    }

    #[test]
    fn manifest_round_trip_keeps_hash() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.output_dir = Some("somewhere".into());
        let text = c.manifest_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.manifest.as_ref().unwrap().content_hash, c.content_hash());
        assert_eq!(back.content_hash(), c.content_hash());
        let mut other = c.clone();
        other.seed = 7;
        assert_ne!(other.content_hash(), c.content_hash());
    }

    #[test]
    fn bad_values_fail_validation() {
        for bad in [
            "model.gamma = 0.5\n",
            "model.gamma = 2.0\nregularization.beta = 3\nregularization.delta = 1e-3\nregularization.epsilon = 1e-4\nregularization.m = 2\n",
            "model.gamma = 2.0\ngrid.dim = 2\ngrid.n = 12\n",
            "model.gamma = 2.0\ninitial.kind = \"constant\"\ninitial.value = -1.0\n",
        ] {
            assert!(RunConfig::parse(bad).unwrap().resolve().is_err(), "{bad}");
        }
    }
}
