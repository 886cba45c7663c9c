use std::fs;
use std::path::{Path, PathBuf};

use csnt_core::coupling::{regularization_ladder, solve_fixed_point, LadderReport, Trajectory};
use csnt_core::diagnostics::{DiagnosticRow, Fixtures, Verdict};
use csnt_core::fields::io::{fmt17, write_snapshot, AnyField};

use crate::config::{Kind, Resolved};
use crate::diagnose::{self, Context};
use crate::Failure;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, Failure> {
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

fn write_series(dir: &Path, r: &Resolved, traj: &Trajectory) -> Result<(), Failure> {
    let path = dir.join("series.csv");
    let mut w = csv_writer(&path)?;
    let put = |w: &mut csv::Writer<fs::File>, rec: Vec<String>| w.write_record(rec).map_err(|e| io_err(&path, e));
    put(
        &mut w,
        ["t", "energy", "mass", "rho_min", "rho_max", "rho_metric", "grad_u_l2"].map(String::from).to_vec(),
    )?;
    for s in traj.series(&r.coupled.model) {
        put(
            &mut w,
            [s.t, s.energy, s.mass, s.rho_min, s.rho_max, s.rho_metric, s.grad_u_l2].map(fmt17).to_vec(),
        )?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;

    let path = dir.join("momentum_iterations.csv");
    let mut w = csv_writer(&path)?;
    let put = |w: &mut csv::Writer<fs::File>, rec: Vec<String>| w.write_record(rec).map_err(|e| io_err(&path, e));
    put(&mut w, vec!["level".into(), "t".into(), "iterations".into()])?;
    for (j, (t, it)) in traj.times.iter().zip(&traj.momentum_iterations).enumerate() {
        put(&mut w, vec![j.to_string(), fmt17(*t), it.to_string()])?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;

    let fp = &traj.fixed_point;
    if !fp.residual_history.is_empty() {
        let path = dir.join("fixed_point.csv");
        let mut w = csv_writer(&path)?;
        let put = |w: &mut csv::Writer<fs::File>, rec: Vec<String>| w.write_record(rec).map_err(|e| io_err(&path, e));
        put(&mut w, vec!["iteration".into(), "residual".into(), "relaxation".into()])?;
        for (i, (res, theta)) in fp.residual_history.iter().zip(&fp.relaxation_history).enumerate() {
            put(&mut w, vec![(i + 1).to_string(), fmt17(*res), fmt17(*theta)])?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

fn write_snapshots(dir: &Path, every: usize, traj: &Trajectory) -> Result<(), Failure> {
    let last = traj.rho.len() - 1;
    for j in 0..=last {
        if !(j == last || (every > 0 && j % every == 0)) {
            continue;
        }
        let t = traj.times[j];
        let p = dir.join(format!("rho_{j:04}.csnt"));
        write_snapshot(&p, t, &AnyField::Scalar(traj.rho[j].clone())).map_err(|e| io_err(&p, e))?;
        let p = dir.join(format!("u_{j:04}.csnt"));
        write_snapshot(&p, t, &AnyField::Vector(traj.u[j].clone())).map_err(|e| io_err(&p, e))?;
    }
    Ok(())
}

fn write_ladder(dir: &Path, rep: &LadderReport) -> Result<(), Failure> {
    let path = dir.join("ladder_report.csv");
    let mut w = csv_writer(&path)?;
    let header = [
        "rung",
        "delta",
        "epsilon",
        "status",
        "eps_lap_certificate",
        "delta_grad_certificate",
        "rho_distance_to_next",
        "grad_u_distance_to_next",
    ];
    w.write_record(header).map_err(|e| io_err(&path, e))?;
    for (i, r) in rep.rungs.iter().enumerate() {
        let dist = rep.distances.iter().find(|d| d.0 == i);
        let status = match &r.outcome {
            Ok(_) => "ok".to_string(),
            Err(e) => format!("failed: {e}"),
        };
        w.write_record([
            i.to_string(),
            fmt17(r.delta),
            fmt17(r.epsilon),
            status,
            fmt17(r.eps_lap_certificate),
            fmt17(r.delta_grad_certificate),
            dist.map_or(String::new(), |d| fmt17(d.1)),
            dist.map_or(String::new(), |d| fmt17(d.2)),
        ])
        .map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))
}

/// Runs the configured experiment into `out`; returns the diagnostic rows.
pub fn execute(r: &Resolved, out: &Path) -> Result<Vec<DiagnosticRow>, Failure> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let manifest = out.join("manifest.toml");
    fs::write(&manifest, r.config.manifest_text()).map_err(|e| io_err(&manifest, e))?;

    let cfg = &r.config;
    let coupled = &r.coupled;
    let ladder = match (&cfg.kind, &cfg.ladder) {
        (Kind::Ladder, Some(l)) => {
            let eps = l
                .epsilons
                .clone()
                .unwrap_or_else(|| l.deltas.iter().map(|d| d / 10.0).collect());
            let rep = regularization_ladder(coupled, &r.rho0, &l.deltas, &eps, l.p).map_err(Failure::from)?;
            write_ladder(out, &rep)?;
            Some(rep)
        }
        _ => None,
    };

    let mut coupled = coupled.clone();
    let traj = match &ladder {
        Some(rep) => match rep.rungs.iter().rev().find(|r| r.outcome.is_ok()) {
            Some(rung) => {
                coupled.params.delta = rung.delta;
                coupled.params.epsilon = rung.epsilon;
                rung.outcome.as_ref().unwrap().clone()
            }
            None => return Err(Failure::Solver("every ladder rung failed".into())),
        },
        None => {
            let mut c = coupled.clone();
            if cfg.kind == Kind::FixedPoint {
                c.fixed_point.mode = csnt_core::coupling::FixedPointMode::Global;
            }
            solve_fixed_point(&c, &r.rho0).map_err(Failure::from)?
        }
    };
    write_series(out, r, &traj)?;
    write_snapshots(out, cfg.snapshot_every, &traj)?;

    let mut rows = Vec::new();
    if cfg.kind == Kind::FixedPoint {
        let per_step = solve_fixed_point(&coupled, &r.rho0).map_err(Failure::from)?;
        let dist = csnt_core::coupling::c_lq_distance(&per_step.rho, &traj.rho, coupled.metric_exponent());
        rows.push(DiagnosticRow::check(
            "mode_agreement",
            *traj.times.last().unwrap(),
            dist,
            5.0 * coupled.fixed_point.tol,
        ));
    }
    let fixtures = Fixtures::default_path();
    let ctx = Context {
        run: cfg,
        coupled: &coupled,
        traj: &traj,
        consecutive: true,
        ladder: ladder.as_ref(),
        fixtures: Some(fixtures),
    };
    rows.extend(diagnose::run_checks(&ctx).map_err(Failure::from)?);
    let path = out.join("diagnostics.csv");
    diagnose::write_csv(&path, &rows).map_err(|e| io_err(&path, e))?;
    Ok(rows)
}

/// Rebuilds a trajectory from snapshots in `dir` and checks it.
pub fn diagnose_dir(dir: &Path, r: &Resolved, fixtures: Option<PathBuf>) -> Result<Vec<DiagnosticRow>, Failure> {
    let set = diagnose::load_snapshots(dir).map_err(|e| match e {
        diagnose::LoadError::Data(m) | diagnose::LoadError::Io(m) => Failure::Data(m),
    })?;
    if set.rho[0].grid() != &r.coupled.grid {
        return Err(Failure::Data(format!(
            "snapshots use {:?}, the configuration {:?}",
            set.rho[0].grid(),
            r.coupled.grid
        )));
    }
    let consecutive = set.consecutive();
    let uniform = set.uniform();
    let traj = set.into_trajectory();
    let ctx = Context {
        run: &r.config,
        coupled: &r.coupled,
        traj: &traj,
        consecutive,
        ladder: None,
        fixtures,
    };
    let mut rows = diagnose::run_checks(&ctx).map_err(Failure::from)?;
    if !uniform {
        for row in rows.iter_mut().filter(|r| r.name == "energy_monotone" || r.name == "bogovskii") {
            *row = DiagnosticRow::skipped(row.name.clone());
        }
    }
    let path = dir.join("diagnostics.csv");
    diagnose::write_csv(&path, &rows).map_err(|e| io_err(&path, e))?;
    Ok(rows)
}

pub fn any_failed(rows: &[DiagnosticRow]) -> bool {
    rows.iter().any(|r| r.verdict == Verdict::Fail)
}
