//! The map Φ (momentum solve, then continuity solve), its fixed points, and
//! the δ, ε → 0 ladder.

use rayon::prelude::*;

use crate::constitutive::{ConstitutiveModel, RegularizationParams};
use crate::continuity::{step, step_count, ContinuityStepper, DensityState, Scheme};
use crate::error::{Error, Result};
use crate::fields::{gradient, jacobian, laplacian_power, Grid, Norm, ScalarField, VectorField};
use crate::momentum::{self, MomentumOptions, MomentumProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FixedPointMode {
    /// Velocity recomputed from the current density at every step.
    #[default]
    PerStep,
    /// Picard iteration of Φ on whole trajectories.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointConfig {
    pub mode: FixedPointMode,
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            mode: FixedPointMode::PerStep,
            tol: 1e-8,
            max_iter: 50,
            relaxation: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoupledConfig {
    pub model: ConstitutiveModel,
    pub params: RegularizationParams,
    pub grid: Grid,
    pub dt: f64,
    pub t_final: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub momentum_tol: f64,
    pub momentum_max_iter: usize,
    pub fixed_point: FixedPointConfig,
}

impl CoupledConfig {
    pub fn new(
        model: ConstitutiveModel,
        params: RegularizationParams,
        grid: Grid,
        dt: f64,
        t_final: f64,
    ) -> Self {
        CoupledConfig {
            model,
            params,
            grid,
            dt,
            t_final,
            cfl: 0.5,
            scheme: Scheme::default(),
            momentum_tol: 1e-9,
            momentum_max_iter: 500,
            fixed_point: FixedPointConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate(self.model.gamma(), self.grid.dim())?;
        let fp = &self.fixed_point;
        if !(fp.tol > 0.0) {
            return Err(Error::param("fixed_point.tol", format!("must be positive, got {}", fp.tol)));
        }
        if !(fp.relaxation > 0.0 && fp.relaxation <= 1.0) {
            return Err(Error::param(
                "fixed_point.relaxation",
                format!("must lie in (0, 1], got {}", fp.relaxation),
            ));
        }
        if fp.max_iter == 0 {
            return Err(Error::param("fixed_point.max_iter", "must be ≥ 1"));
        }
        if !(self.momentum_tol > 0.0) {
            return Err(Error::param("momentum.tol", "must be positive"));
        }
        step_count(self.t_final, self.dt)?;
        self.stepper().map(|_| ())
    }

    /// Number of steps and the uniform step actually used.
    pub fn time_grid(&self) -> Result<(usize, f64)> {
        let steps = step_count(self.t_final, self.dt)?;
        Ok((steps, self.t_final / steps as f64))
    }

    fn stepper(&self) -> Result<ContinuityStepper> {
        let (_, dt) = self.time_grid()?;
        ContinuityStepper::new(self.params, dt, self.cfl, self.scheme)
    }

    /// Fixed-point metric exponent `2γ`.
    pub fn metric_exponent(&self) -> f64 {
        2.0 * self.model.gamma()
    }

    fn momentum_solve(&self, rho: &ScalarField, warm: Option<&VectorField>) -> Result<momentum::MomentumSolution> {
        let pb = MomentumProblem::from_density(self.model.clone(), self.params, rho)?;
        momentum::solve_momentum_with(
            &pb,
            &MomentumOptions {
                tol: self.momentum_tol,
                max_iter: self.momentum_max_iter,
                initial_guess: warm.cloned(),
            },
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointReport {
    pub mode: FixedPointMode,
    pub iterations: usize,
    /// `‖ρ^{(k+1)} − ρ^{(k)}‖_{C([0,T];L^{2γ})}` per iteration.
    pub residual_history: Vec<f64>,
    pub relaxation_history: Vec<f64>,
    /// Residuals non-increasing after the first iteration.
    pub monotone: bool,
}

/// Density and velocity at every time level.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rho: Vec<ScalarField>,
    /// `u[j]` solves the momentum problem with datum `ρ̃_j^γ` and drives step `j → j+1`.
    pub u: Vec<VectorField>,
    pub momentum_iterations: Vec<usize>,
    pub clamp_events: usize,
    pub fixed_point: FixedPointReport,
}

/// One row of the scalar time series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub energy: f64,
    pub mass: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_metric: f64,
    pub grad_u_l2: f64,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.rho[0].grid()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn series(&self, model: &ConstitutiveModel) -> Vec<SeriesRow> {
        let q = 2.0 * model.gamma();
        self.times
            .iter()
            .zip(&self.rho)
            .zip(&self.u)
            .map(|((&t, r), u)| SeriesRow {
                t,
                energy: model.internal_energy(r),
                mass: r.integral(),
                rho_min: r.min(),
                rho_max: r.max(),
                rho_metric: r.lp_norm(Norm::L(q)).unwrap_or(f64::NAN),
                grad_u_l2: jacobian(u).frobenius().l2_norm(),
            })
            .collect()
    }
}

/// `max_j ‖a_j − b_j‖_{L^q}`.
pub fn c_lq_distance(a: &[ScalarField], b: &[ScalarField], q: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.sub(y).lp_norm(Norm::L(q)).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// `‖a − b‖_{L^q((0,T)×𝕋^d)}` with the trapezoid rule in time.
pub fn spacetime_lq_distance(a: &[ScalarField], b: &[ScalarField], dt: f64, q: f64) -> f64 {
    let vals: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.sub(y).map(|v| v.abs().powf(q)).integral())
        .collect();
    trapezoid(&vals, dt).powf(1.0 / q)
}

pub(crate) fn trapezoid(vals: &[f64], dt: f64) -> f64 {
    if vals.len() < 2 {
        return 0.0;
    }
    let inner: f64 = vals[1..vals.len() - 1].iter().sum();
    dt * (inner + 0.5 * (vals[0] + vals[vals.len() - 1]))
}

/// Output of one application of Φ.
#[derive(Clone, Debug)]
pub struct PhiOutput {
    pub rho: Vec<ScalarField>,
    pub u: Vec<VectorField>,
    pub momentum_iterations: Vec<usize>,
    pub clamp_events: usize,
}

/// `Φ(ρ̃)`: velocities from `ρ̃^γ` at every level (in parallel), then the
/// continuity equation from `rho0` driven by them.
pub fn phi_map(config: &CoupledConfig, rho0: &ScalarField, rho_tilde: &[ScalarField]) -> Result<PhiOutput> {
    phi_map_warm(config, rho0, rho_tilde, None)
}

fn phi_map_warm(
    config: &CoupledConfig,
    rho0: &ScalarField,
    rho_tilde: &[ScalarField],
    warm: Option<&[VectorField]>,
) -> Result<PhiOutput> {
    let (steps, dt) = config.time_grid()?;
    if rho_tilde.len() != steps + 1 {
        return Err(Error::param(
            "rho_tilde",
            format!("expected {} time levels, got {}", steps + 1, rho_tilde.len()),
        ));
    }
    let sols: Vec<_> = rho_tilde
        .par_iter()
        .enumerate()
        .map(|(j, r)| {
            config
                .momentum_solve(r, warm.map(|w| &w[j]))
                .map_err(|e| e.at_level(j, j as f64 * dt))
        })
        .collect::<Result<_>>()?;
    let stepper = config.stepper()?;
    let mut state = DensityState::new(rho0.clone(), 0.0);
    let mut rho = Vec::with_capacity(steps + 1);
    rho.push(rho0.clone());
    for (j, sol) in sols.iter().take(steps).enumerate() {
        state = step(&state, &sol.u, &stepper).map_err(|e| e.at_level(j, j as f64 * dt))?;
        state.t = (j + 1) as f64 * dt;
        rho.push(state.rho.clone());
    }
    Ok(PhiOutput {
        rho,
        momentum_iterations: sols.iter().map(|s| s.iterations).collect(),
        u: sols.into_iter().map(|s| s.u).collect(),
        clamp_events: state.clamp_events,
    })
}

pub fn solve_fixed_point(config: &CoupledConfig, rho0: &ScalarField) -> Result<Trajectory> {
    config.validate()?;
    config.grid.check_same(rho0.grid())?;
    let (index, min) = rho0.argmin();
    if min < 0.0 {
        return Err(Error::NegativeDensity { min, index });
    }
    match config.fixed_point.mode {
        FixedPointMode::PerStep => solve_per_step(config, rho0),
        FixedPointMode::Global => solve_global(config, rho0, 1.0),
    }
}

fn solve_per_step(config: &CoupledConfig, rho0: &ScalarField) -> Result<Trajectory> {
    let (steps, dt) = config.time_grid()?;
    let stepper = config.stepper()?;
    let mut state = DensityState::new(rho0.clone(), 0.0);
    let mut rho = vec![rho0.clone()];
    let mut u: Vec<VectorField> = Vec::with_capacity(steps + 1);
    let mut iters = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let t = j as f64 * dt;
        let sol = config
            .momentum_solve(&state.rho, u.last())
            .map_err(|e| e.at_level(j, t))?;
        iters.push(sol.iterations);
        u.push(sol.u);
        if j < steps {
            state = step(&state, &u[j], &stepper).map_err(|e| e.at_level(j, t))?;
            state.t = (j + 1) as f64 * dt;
            rho.push(state.rho.clone());
        }
    }
    Ok(Trajectory {
        times: (0..=steps).map(|j| j as f64 * dt).collect(),
        rho,
        u,
        momentum_iterations: iters,
        clamp_events: state.clamp_events,
        fixed_point: FixedPointReport {
            mode: FixedPointMode::PerStep,
            iterations: 1,
            residual_history: Vec::new(),
            relaxation_history: Vec::new(),
            monotone: true,
        },
    })
}

/// Picard iteration of `ρ ↦ sΦ(ρ)`; `s = 1` is the fixed-point problem itself.
fn solve_global(config: &CoupledConfig, rho0: &ScalarField, s: f64) -> Result<Trajectory> {
    let (steps, dt) = config.time_grid()?;
    let fp = config.fixed_point;
    let q = config.metric_exponent();
    let mut current: Vec<ScalarField> = vec![rho0.scaled(s); steps + 1];
    let mut warm: Option<Vec<VectorField>> = None;
    let mut theta = fp.relaxation;
    let mut history = Vec::new();
    let mut thetas = Vec::new();
    for k in 1..=fp.max_iter {
        let mut out = phi_map_warm(config, rho0, &current, warm.as_deref())?;
        if s != 1.0 {
            out.rho.iter_mut().for_each(|r| *r = r.scaled(s));
        }
        let diff = c_lq_distance(&out.rho, &current, q);
        if let Some(&prev) = history.last() {
            if theta * diff > prev && theta > 0.5 {
                theta = 0.5;
            }
        }
        let res = theta * diff;
        history.push(res);
        thetas.push(theta);
        current = current
            .iter()
            .zip(&out.rho)
            .map(|(c, o)| c.scaled(1.0 - theta).axpy(theta, o))
            .collect();
        if res < fp.tol {
            let monotone = history.windows(2).all(|w| w[1] <= w[0]);
            return Ok(Trajectory {
                times: (0..=steps).map(|j| j as f64 * dt).collect(),
                rho: out.rho,
                u: out.u,
                momentum_iterations: out.momentum_iterations,
                clamp_events: out.clamp_events,
                fixed_point: FixedPointReport {
                    mode: FixedPointMode::Global,
                    iterations: k,
                    residual_history: history,
                    relaxation_history: thetas,
                    monotone,
                },
            });
        }
        warm = Some(out.u);
    }
    Err(Error::NoConvergence {
        iterations: fp.max_iter,
        residual: history.last().copied().unwrap_or(f64::INFINITY),
        history,
    })
}

/// `(‖Φ(ρ̃₁) − Φ(ρ̃₂)‖, ‖ρ̃₁ − ρ̃₂‖, ratio)` in `C([0,T];L^{2γ})`.
pub fn lipschitz_probe(
    config: &CoupledConfig,
    rho0: &ScalarField,
    rho_tilde_1: &[ScalarField],
    rho_tilde_2: &[ScalarField],
) -> Result<(f64, f64, f64)> {
    let q = config.metric_exponent();
    let a = phi_map(config, rho0, rho_tilde_1)?;
    let b = phi_map(config, rho0, rho_tilde_2)?;
    let out = c_lq_distance(&a.rho, &b.rho, q);
    let inp = c_lq_distance(rho_tilde_1, rho_tilde_2, q);
    Ok((out, inp, if inp > 0.0 { out / inp } else { 0.0 }))
}

/// For each `s`, the `C([0,T];L^{2γ})` norm of the solution of `ρ = sΦ(ρ)`.
pub fn homotopy_probe(config: &CoupledConfig, rho0: &ScalarField, s_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    let q = config.metric_exponent();
    s_values
        .iter()
        .map(|&s| {
            let traj = solve_global(config, rho0, s)?;
            let norm = traj
                .rho
                .iter()
                .map(|r| r.lp_norm(Norm::L(q)).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            Ok((s, norm))
        })
        .collect()
}

/// Discrete residuals of the converged pair: the largest preconditioned
/// momentum residual and the largest continuity-step mismatch in `L²`.
pub fn discrete_residuals(config: &CoupledConfig, traj: &Trajectory) -> Result<(f64, f64)> {
    let stepper = config.stepper()?;
    let mut mom: f64 = 0.0;
    let mut cont: f64 = 0.0;
    for j in 0..traj.rho.len() {
        let pb = MomentumProblem::from_density(config.model.clone(), config.params, &traj.rho[j])?;
        mom = mom.max(momentum::residual_norm(&pb, &traj.u[j])?);
        if j + 1 < traj.rho.len() {
            let next = step(&DensityState::new(traj.rho[j].clone(), traj.times[j]), &traj.u[j], &stepper)?;
            cont = cont.max(next.rho.sub(&traj.rho[j + 1]).l2_norm());
        }
    }
    Ok((mom, cont))
}

#[derive(Clone, Debug)]
pub struct RungResult {
    pub delta: f64,
    pub epsilon: f64,
    pub outcome: std::result::Result<Trajectory, String>,
    /// `max_t √ε ‖Δ^m u‖_{L²}`.
    pub eps_lap_certificate: f64,
    /// `√δ ‖∇ρ‖_{L²((0,T)×𝕋^d)}`.
    pub delta_grad_certificate: f64,
}

#[derive(Clone, Debug)]
pub struct LadderReport {
    pub rungs: Vec<RungResult>,
    /// `(i, ‖ρ_i − ρ_{i+1}‖_{L^p((0,T)×𝕋^d)}, ‖∇u_i − ∇u_{i+1}‖_{L²((0,T)×𝕋^d)})`.
    pub distances: Vec<(usize, f64, f64)>,
    pub p: f64,
}

/// Runs every rung (concurrently) and compares consecutive rungs.
pub fn regularization_ladder(
    base: &CoupledConfig,
    rho0: &ScalarField,
    deltas: &[f64],
    epsilons: &[f64],
    p: f64,
) -> Result<LadderReport> {
    if deltas.len() != epsilons.len() || deltas.is_empty() {
        return Err(Error::param("ladder", "deltas and epsilons must have the same nonzero length"));
    }
    for w in deltas.windows(2).chain(epsilons.windows(2)) {
        if !(w[1] < w[0]) {
            return Err(Error::param("ladder", "rungs must be strictly decreasing"));
        }
    }
    if deltas.iter().chain(epsilons).any(|&x| !(x > 0.0)) {
        return Err(Error::param("ladder", "rungs must be positive"));
    }
    let rungs: Vec<RungResult> = deltas
        .par_iter()
        .zip(epsilons)
        .map(|(&delta, &epsilon)| {
            let mut cfg = base.clone();
            cfg.params.delta = delta;
            cfg.params.epsilon = epsilon;
            let outcome = solve_fixed_point(&cfg, rho0).map_err(|e| e.to_string());
            let (eps_lap_certificate, delta_grad_certificate) = match &outcome {
                Ok(traj) => {
                    let lap = traj
                        .u
                        .iter()
                        .map(|u| epsilon.sqrt() * laplacian_power(u, cfg.params.m).l2_norm())
                        .fold(0.0, f64::max);
                    let g: Vec<f64> = traj
                        .rho
                        .iter()
                        .map(|r| {
                            let gr = gradient(r);
                            gr.dot(&gr)
                        })
                        .collect();
                    (lap, (delta * trapezoid(&g, traj.dt())).sqrt())
                }
                Err(_) => (f64::NAN, f64::NAN),
            };
            RungResult {
                delta,
                epsilon,
                outcome,
                eps_lap_certificate,
                delta_grad_certificate,
            }
        })
        .collect();
    let mut distances = Vec::new();
    for i in 0..rungs.len().saturating_sub(1) {
        if let (Ok(a), Ok(b)) = (&rungs[i].outcome, &rungs[i + 1].outcome) {
            let dt = a.dt();
            let rho = spacetime_lq_distance(&a.rho, &b.rho, dt, p);
            let g: Vec<f64> = a
                .u
                .iter()
                .zip(&b.u)
                .map(|(x, y)| {
                    let d = jacobian(&x.sub(y)).frobenius();
                    d.dot(&d)
                })
                .collect();
            distances.push((i, rho, trapezoid(&g, dt).sqrt()));
        }
    }
    Ok(LadderReport { rungs, distances, p })
}
