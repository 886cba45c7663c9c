//! Diagnostic checks over a trajectory, in memory or rebuilt from snapshots.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use csnt_core::continuity::decay_ode;
use csnt_core::coupling::{discrete_residuals, CoupledConfig, FixedPointMode, FixedPointReport, LadderReport, Trajectory};
use csnt_core::diagnostics::{
    bmo_norm, bogovskii_pressure_test, cz_consistency, effective_viscous_flux, energy_balance, gronwall_compare,
    ladder_defect, log_ratio_samples, renormalized_identity_residual, DiagnosticRow, DyadicCubeSet, Fixtures,
    GronwallOptions, TruncationOperator, Verdict,
};
use csnt_core::fields::io::{fmt17, read_snapshot, AnyField};
use csnt_core::momentum::energy_identity;
use csnt_core::{MomentumProblem, ScalarField, VectorField};

use crate::config::{DiagnosticsConfig, InitialConfig, RunConfig};

pub const CHECKS: &[&str] = &[
    "nonnegativity",
    "energy_monotone",
    "energy_balance",
    "pk_identity",
    "momentum_energy_identity",
    "discrete_residuals",
    "fixed_point_monotone",
    "cz_flux",
    "bogovskii",
    "bmo_flux",
    "constant_state_decay",
    "log_inequality_fixture",
    "gronwall_ladder",
];

/// What the checks may look at.
pub struct Context<'a> {
    pub run: &'a RunConfig,
    pub coupled: &'a CoupledConfig,
    pub traj: &'a Trajectory,
    /// Levels are consecutive solver steps rather than a thinned subset.
    pub consecutive: bool,
    pub ladder: Option<&'a LadderReport>,
    pub fixtures: Option<PathBuf>,
}

fn max(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

/// `max|r| / max scale`, with `0` when every residual vanishes.
fn relative(rows: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (r, s) = rows.fold((0.0f64, 0.0f64), |(r, s), (a, b)| (r.max(a.abs()), s.max(b.abs())));
    if r == 0.0 {
        0.0
    } else {
        r / s
    }
}

fn last_t(traj: &Trajectory) -> f64 {
    *traj.times.last().unwrap_or(&0.0)
}

pub fn run_checks(ctx: &Context) -> csnt_core::Result<Vec<DiagnosticRow>> {
    let d: &DiagnosticsConfig = &ctx.run.diagnostics;
    let wanted: Vec<&str> = if d.checks.is_empty() {
        CHECKS.to_vec()
    } else {
        CHECKS.iter().copied().filter(|c| d.checks.iter().any(|w| w == c)).collect()
    };
    let mut rows = Vec::new();
    for name in wanted {
        rows.push(check(name, ctx)?);
    }
    Ok(rows)
}

fn check(name: &str, ctx: &Context) -> csnt_core::Result<DiagnosticRow> {
    let traj = ctx.traj;
    let model = &ctx.coupled.model;
    let params = &ctx.coupled.params;
    let d = &ctx.run.diagnostics;
    let t_end = last_t(traj);
    let levels = traj.rho.len();
    let row = match name {
        "nonnegativity" => {
            let min = traj.rho.iter().map(|r| r.min()).fold(f64::INFINITY, f64::min);
            DiagnosticRow::check(name, t_end, (-min).max(0.0), 0.0)
        }
        "energy_monotone" if levels >= 2 => {
            let e: Vec<f64> = traj.rho.iter().map(|r| model.internal_energy(r)).collect();
            let steps = (traj.dt() / ctx.coupled.time_grid()?.1).round().max(1.0);
            let inc = e.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            DiagnosticRow::check(name, t_end, inc.max(0.0), 1e-8 * steps)
        }
        "energy_balance" if ctx.consecutive && levels >= 2 => {
            let rows = energy_balance(traj, model, params);
            DiagnosticRow::check(name, t_end, relative(rows.iter().map(|r| (r.residual, r.scale))), d.balance_tol)
        }
        "pk_identity" if ctx.consecutive && levels >= 2 => {
            let op = TruncationOperator::new(d.truncation_k)?;
            let rows = renormalized_identity_residual(traj, &op, d.truncation_p, params);
            DiagnosticRow::check(name, t_end, relative(rows.iter().map(|r| (r.residual, r.scale))), d.balance_tol)
        }
        "momentum_energy_identity" => {
            let mut worst: f64 = 0.0;
            for (rho, u) in traj.rho.iter().zip(&traj.u) {
                let pb = MomentumProblem::from_density(model.clone(), *params, rho)?;
                let (l, r) = energy_identity(&pb, u);
                worst = worst.max(relative([(l - r, l.abs().max(r.abs()))].into_iter()));
            }
            DiagnosticRow::check(name, t_end, worst, 1e-6)
        }
        "discrete_residuals" if ctx.consecutive && levels >= 2 => {
            let (mom, cont) = discrete_residuals(ctx.coupled, traj)?;
            let tol = ctx.coupled.momentum_tol.max(ctx.coupled.fixed_point.tol);
            DiagnosticRow::check(name, t_end, mom.max(cont), 10.0 * tol)
        }
        "fixed_point_monotone" if traj.fixed_point.mode == FixedPointMode::Global => {
            let fp = &traj.fixed_point;
            let last = fp.residual_history.last().copied().unwrap_or(0.0);
            let mut row = DiagnosticRow::check(name, t_end, last, ctx.coupled.fixed_point.tol);
            if !fp.monotone {
                row.verdict = Verdict::Fail;
            }
            row
        }
        "cz_flux" => {
            let mut worst: f64 = 0.0;
            for (rho, u) in traj.rho.iter().zip(&traj.u) {
                worst = worst.max(cz_consistency(u, rho, model, params)?.band);
            }
            DiagnosticRow::check(name, t_end, worst, d.cz_tol)
        }
        "bogovskii" if levels >= 2 => {
            let rep = bogovskii_pressure_test(traj, model, params, d.theta)?;
            DiagnosticRow::check(name, t_end, rep.max_div_residual, 1e-10)
        }
        "bmo_flux" => {
            let cubes = DyadicCubeSet::new(traj.grid(), DyadicCubeSet::deepest(traj.grid()).min(4), 2)?;
            let mut bmo: f64 = 0.0;
            let mut sup: f64 = 0.0;
            for (rho, u) in traj.rho.iter().zip(&traj.u) {
                let g = effective_viscous_flux(u, rho, model)?;
                bmo = bmo.max(bmo_norm(&g, &cubes)?);
                sup = sup.max(g.max_abs());
            }
            DiagnosticRow::check(name, t_end, bmo, 2.0 * sup)
        }
        "constant_state_decay" => match ctx.run.initial {
            InitialConfig::Constant { value } => {
                let err = traj
                    .times
                    .iter()
                    .zip(&traj.rho)
                    .map(|(&t, r)| {
                        let exact = decay_ode(value, params.delta, params.beta as f64, t);
                        (r.max() - exact).abs().max((r.min() - exact).abs())
                    })
                    .fold(0.0, f64::max);
                DiagnosticRow::check(name, t_end, err, 1e-6)
            }
            _ => DiagnosticRow::skipped(name),
        },
        "log_inequality_fixture" => match &ctx.fixtures {
            Some(path) if path.exists() => {
                let fx = Fixtures::load(path)?;
                let worst = max(log_ratio_samples()?.iter().map(|s| s.ratio));
                DiagnosticRow::check(name, t_end, worst, fx.log_ratio.max_ratio * (1.0 + 1e-9))
            }
            _ => DiagnosticRow::skipped(name),
        },
        "gronwall_ladder" => match ctx.ladder {
            Some(rep) => gronwall_ladder(rep, ctx)?,
            None => DiagnosticRow::skipped(name),
        },
        _ => DiagnosticRow::skipped(name),
    };
    Ok(row)
}

fn gronwall_ladder(rep: &LadderReport, ctx: &Context) -> csnt_core::Result<DiagnosticRow> {
    let name = "gronwall_ladder";
    let mut worst = f64::NEG_INFINITY;
    let mut t_end = 0.0;
    for w in rep.rungs.windows(2) {
        let (Ok(a), Ok(b)) = (&w[0].outcome, &w[1].outcome) else {
            return Ok(DiagnosticRow::skipped(name));
        };
        let mut pa = ctx.coupled.params;
        pa.delta = w[0].delta;
        pa.epsilon = w[0].epsilon;
        let mut pb = ctx.coupled.params;
        pb.delta = w[1].delta;
        pb.epsilon = w[1].epsilon;
        let defect = ladder_defect(&ctx.coupled.model, (a, &pa), (b, &pb))?;
        let opts = GronwallOptions {
            budget: Some(defect.budget),
            ..Default::default()
        };
        let r = gronwall_compare(&defect.series, ctx.run.diagnostics.gronwall_c, &opts);
        worst = worst.max(r.margins.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max));
        t_end = last_t(a);
    }
    if worst == f64::NEG_INFINITY {
        return Ok(DiagnosticRow::skipped(name));
    }
    Ok(DiagnosticRow::check(name, t_end, worst, 0.0))
}

pub fn write_csv(path: &Path, rows: &[DiagnosticRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["check", "t", "value", "bound", "verdict"])?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            fmt17(r.t),
            fmt17(r.value),
            fmt17(r.bound),
            r.verdict.to_string(),
        ])?;
    }
    w.flush()
}

/// Snapshot pairs `rho_XXXX.csnt` / `u_XXXX.csnt` keyed by level.
pub struct SnapshotSet {
    pub levels: Vec<usize>,
    pub times: Vec<f64>,
    pub rho: Vec<ScalarField>,
    pub u: Vec<VectorField>,
}

#[derive(Debug)]
pub enum LoadError {
    /// Malformed or mismatched data files.
    Data(String),
    Io(String),
}

fn level_of(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.strip_suffix(".csnt")?.parse().ok()
}

pub fn load_snapshots(dir: &Path) -> Result<SnapshotSet, LoadError> {
    let entries = fs::read_dir(dir).map_err(|e| LoadError::Io(format!("{}: {e}", dir.display())))?;
    let mut rho = BTreeMap::new();
    let mut u = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| LoadError::Io(e.to_string()))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(l) = level_of(&name, "rho_") {
            rho.insert(l, entry.path());
        } else if let Some(l) = level_of(&name, "u_") {
            u.insert(l, entry.path());
        }
    }
    if rho.is_empty() {
        return Err(LoadError::Data(format!("no rho_XXXX.csnt snapshots in {}", dir.display())));
    }
    let mut set = SnapshotSet {
        levels: Vec::new(),
        times: Vec::new(),
        rho: Vec::new(),
        u: Vec::new(),
    };
    for (level, path) in &rho {
        let upath = u
            .get(level)
            .ok_or_else(|| LoadError::Data(format!("missing u_{level:04}.csnt next to {}", path.display())))?;
        let r = read_snapshot(path).map_err(|e| LoadError::Data(e.to_string()))?;
        let v = read_snapshot(upath).map_err(|e| LoadError::Data(e.to_string()))?;
        let AnyField::Scalar(rf) = r.field else {
            return Err(LoadError::Data(format!("{} is not a scalar field", path.display())));
        };
        let AnyField::Vector(uf) = v.field else {
            return Err(LoadError::Data(format!("{} is not a vector field", upath.display())));
        };
        if rf.grid() != uf.grid() || (r.time - v.time).abs() > 1e-12 {
            return Err(LoadError::Data(format!("{} and {} disagree", path.display(), upath.display())));
        }
        if let Some(first) = set.rho.first() {
            if first.grid() != rf.grid() {
                return Err(LoadError::Data(format!("{} uses a different grid", path.display())));
            }
        }
        set.levels.push(*level);
        set.times.push(r.time);
        set.rho.push(rf);
        set.u.push(uf);
    }
    Ok(set)
}

impl SnapshotSet {
    /// Levels `0, 1, 2, …` without gaps.
    pub fn consecutive(&self) -> bool {
        self.levels.iter().enumerate().all(|(i, &l)| i == l)
    }

    /// Uniformly spaced levels, as the time-integrated checks assume.
    pub fn uniform(&self) -> bool {
        self.levels.windows(2).all(|w| w[1] - w[0] == self.levels[1] - self.levels[0])
    }

    pub fn into_trajectory(self) -> Trajectory {
        let n = self.rho.len();
        Trajectory {
            times: self.times,
            rho: self.rho,
            u: self.u,
            momentum_iterations: vec![0; n],
            clamp_events: 0,
            fixed_point: FixedPointReport {
                mode: FixedPointMode::PerStep,
                iterations: 1,
                residual_history: Vec::new(),
                relaxation_history: Vec::new(),
                monotone: true,
            },
        }
    }
}
