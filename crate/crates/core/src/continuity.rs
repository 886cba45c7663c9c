//! Time stepping for `ρ_t + div(ρu) + δρ^β = δΔρ`.

use rustfft::num_complex::Complex64;

use crate::constitutive::{pow, RegularizationParams};
use crate::error::{Error, Result};
use crate::fields::spectral::{in_band, k_squared, wavevector};
use crate::fields::{jacobian, Grid, Norm, ScalarField, Spectrum, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Fourth-order Runge–Kutta in the integrating factor `exp(δΔt)`.
    #[default]
    IntegratingFactorRk4,
    /// Implicit spectral diffusion, explicit transport and penalty.
    ImexEuler,
    /// Forward Euler on the whole right-hand side.
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuityStepper {
    pub params: RegularizationParams,
    pub dt: f64,
    pub cfl: f64,
    pub scheme: Scheme,
}

impl ContinuityStepper {
    pub fn new(params: RegularizationParams, dt: f64, cfl: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if !(cfl > 0.0 && cfl <= 0.5) {
            return Err(Error::param("cfl", format!("must lie in (0, 0.5], got {cfl}")));
        }
        if !(params.delta >= 0.0 && params.delta.is_finite()) {
            return Err(Error::param("delta", format!("must be ≥ 0, got {}", params.delta)));
        }
        Ok(ContinuityStepper {
            params,
            dt,
            cfl,
            scheme,
        })
    }

    /// Largest admissible step for the velocity `u`.
    pub fn cfl_limit(&self, u: &VectorField) -> f64 {
        self.cfl * u.grid().spacing() / u.magnitude().max_abs().max(1.0)
    }

    pub fn check_cfl(&self, u: &VectorField) -> Result<()> {
        let limit = self.cfl_limit(u);
        if self.dt > limit {
            return Err(Error::CflViolation { dt: self.dt, limit });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    pub rho: ScalarField,
    pub t: f64,
    /// Cumulative count of round-off negatives set to zero.
    pub clamp_events: usize,
}

impl DensityState {
    pub fn new(rho: ScalarField, t: f64) -> Self {
        DensityState {
            rho,
            t,
            clamp_events: 0,
        }
    }
}

/// Explicit part `N(ρ) = −div(ρu) − δρ^β`, dealiased, in Fourier space.
fn transport_rhs(rho: &ScalarField, u: &VectorField, params: &RegularizationParams) -> Vec<Complex64> {
    let grid = rho.grid();
    let cutoff = grid.dealias_cutoff();
    let nyq = (grid.n() / 2) as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (axis, c) in u.components().iter().enumerate() {
        if c.values().iter().all(|&x| x == 0.0) {
            continue;
        }
        let flux = Spectrum::forward(&rho.zip_map(c, |r, v| r * v));
        for (i, (o, f)) in out.iter_mut().zip(flux.coefficients()).enumerate() {
            let k = wavevector(grid, i);
            if in_band(k, cutoff) && k[axis] != nyq {
                *o -= Complex64::new(0.0, k[axis] as f64) * f;
            }
        }
    }
    if params.delta > 0.0 {
        let beta = params.beta as f64;
        let pen = Spectrum::forward(&rho.map(|r| pow(r, beta)));
        for (i, (o, p)) in out.iter_mut().zip(pen.coefficients()).enumerate() {
            if in_band(wavevector(grid, i), cutoff) {
                *o -= params.delta * p;
            }
        }
    }
    out
}

/// Discrete right-hand side `−div(ρu) − δρ^β + δΔρ` in physical space.
pub fn continuity_rhs(rho: &ScalarField, u: &VectorField, params: &RegularizationParams) -> ScalarField {
    let grid = rho.grid();
    let mut n = transport_rhs(rho, u, params);
    let r = Spectrum::forward(rho);
    for (i, (x, c)) in n.iter_mut().zip(r.coefficients()).enumerate() {
        *x -= params.delta * k_squared(wavevector(grid, i)) * c;
    }
    from_coeffs(grid, n)
}

fn from_coeffs(grid: &Grid, data: Vec<Complex64>) -> ScalarField {
    let mut s = Spectrum::zeros(grid);
    s.coefficients_mut().copy_from_slice(&data);
    s.inverse()
}

/// Advances `state` by one step with the velocity held fixed.
pub fn step(state: &DensityState, u: &VectorField, stepper: &ContinuityStepper) -> Result<DensityState> {
    let grid = state.rho.grid();
    grid.check_same(u.grid())?;
    u.ensure_finite("velocity")?;
    stepper.check_cfl(u)?;
    let p = &stepper.params;
    let h = stepper.dt;
    let decay: Vec<f64> = (0..grid.len())
        .map(|i| p.delta * k_squared(wavevector(grid, i)))
        .collect();
    let rho = &state.rho;
    let rho_hat = Spectrum::forward(rho).coefficients().to_vec();
    // States are formed as ρ + increment so that a vanishing increment leaves ρ untouched.
    let plus = |inc: Vec<Complex64>| -> ScalarField {
        if inc.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            return rho.clone();
        }
        let d = from_coeffs(grid, inc);
        rho.zip_map(&d, |a, b| a + b)
    };

    let increment: Vec<Complex64> = match stepper.scheme {
        Scheme::IntegratingFactorRk4 => {
            let e = |tau: f64, i: usize| (-decay[i] * tau).exp();
            let k1 = transport_rhs(rho, u, p);
            let inc2: Vec<_> = (0..grid.len())
                .map(|i| (e(0.5 * h, i) - 1.0) * rho_hat[i] + 0.5 * h * e(0.5 * h, i) * k1[i])
                .collect();
            let k2 = transport_rhs(&plus(inc2), u, p);
            let inc3: Vec<_> = (0..grid.len())
                .map(|i| (e(0.5 * h, i) - 1.0) * rho_hat[i] + 0.5 * h * k2[i])
                .collect();
            let k3 = transport_rhs(&plus(inc3), u, p);
            let inc4: Vec<_> = (0..grid.len())
                .map(|i| (e(h, i) - 1.0) * rho_hat[i] + h * e(0.5 * h, i) * k3[i])
                .collect();
            let k4 = transport_rhs(&plus(inc4), u, p);
            (0..grid.len())
                .map(|i| {
                    (e(h, i) - 1.0) * rho_hat[i]
                        + h / 6.0
                            * (e(h, i) * k1[i] + 2.0 * e(0.5 * h, i) * (k2[i] + k3[i]) + k4[i])
                })
                .collect()
        }
        Scheme::ImexEuler => {
            let n = transport_rhs(rho, u, p);
            (0..grid.len())
                .map(|i| h * (n[i] - decay[i] * rho_hat[i]) / (1.0 + h * decay[i]))
                .collect()
        }
        Scheme::Explicit => {
            let n = transport_rhs(rho, u, p);
            (0..grid.len()).map(|i| h * (n[i] - decay[i] * rho_hat[i])).collect()
        }
    };
    let mut next = plus(increment);
    next.ensure_finite("density")?;
    let clamps = clamp_negative(&mut next)?;
    Ok(DensityState {
        rho: next,
        t: state.t + h,
        clamp_events: state.clamp_events + clamps,
    })
}

/// Zeroes round-off negatives (`ρ ≥ −1e−12 max ρ`); anything below is an error.
fn clamp_negative(rho: &mut ScalarField) -> Result<usize> {
    let slack = 1e-12 * rho.max().max(0.0);
    let mut count = 0;
    for (i, v) in rho.values_mut().iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -slack {
                return Err(Error::NegativeDensity { min: *v, index: i });
            }
            *v = 0.0;
            count += 1;
        }
    }
    Ok(count)
}

/// Densities at every time level plus the velocity used on each step.
#[derive(Clone, Debug)]
pub struct ContinuityTrajectory {
    pub states: Vec<DensityState>,
    /// `velocities[j]` drives the step from level `j` to `j + 1`.
    pub velocities: Vec<VectorField>,
}

impl ContinuityTrajectory {
    pub fn clamp_events(&self) -> usize {
        self.states.last().map_or(0, |s| s.clamp_events)
    }

    /// `(t, ‖ρ(t)‖_p, ‖ρ₀‖_p exp((p−1)/p ∫₀^t ‖u‖_{W^{1,∞}}))` at every level.
    pub fn lp_growth_certificate(&self, p: f64) -> Result<Vec<(f64, f64, f64)>> {
        let rho0 = self.states[0].rho.lp_norm(Norm::L(p))?;
        let mut integral = 0.0;
        let mut out = Vec::with_capacity(self.states.len());
        for (j, s) in self.states.iter().enumerate() {
            if j > 0 {
                let dt = s.t - self.states[j - 1].t;
                integral += dt * w1inf_norm(&self.velocities[j - 1]);
            }
            let bound = rho0 * ((p - 1.0) / p * integral).exp();
            out.push((s.t, s.rho.lp_norm(Norm::L(p))?, bound));
        }
        Ok(out)
    }
}

/// `max|u| + max Σ_ij |∂_j u_i|`, which dominates `‖div u‖_∞`.
pub fn w1inf_norm(u: &VectorField) -> f64 {
    let j = jacobian(u);
    let grid = u.grid();
    let grad = (0..grid.len())
        .map(|p| j.components().iter().map(|c| c.values()[p].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    u.magnitude().max_abs() + grad
}

/// Number of uniform steps covering `[0, T]` at a step no larger than `dt`.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::param("T", format!("must be positive, got {t_final}")));
    }
    Ok(((t_final / dt) - 1e-9).ceil().max(1.0) as usize)
}

/// Marches from `rho0` to `T`. The provider receives the level index, the time
/// and the current density and returns the velocity for the next step.
pub fn solve_continuity(
    rho0: &ScalarField,
    velocity: &mut dyn FnMut(usize, f64, &ScalarField) -> Result<VectorField>,
    t_final: f64,
    stepper: &ContinuityStepper,
) -> Result<ContinuityTrajectory> {
    rho0.ensure_finite("initial density")?;
    let (index, min) = rho0.argmin();
    if min <= 0.0 {
        return Err(Error::NegativeDensity { min, index });
    }
    let steps = step_count(t_final, stepper.dt)?;
    let mut st = *stepper;
    st.dt = t_final / steps as f64;
    let mut states = vec![DensityState::new(rho0.clone(), 0.0)];
    let mut velocities = Vec::with_capacity(steps);
    for j in 0..steps {
        let cur = &states[j];
        let u = velocity(j, cur.t, &cur.rho).map_err(|e| e.at_level(j, cur.t))?;
        let mut next = step(cur, &u, &st).map_err(|e| e.at_level(j, cur.t))?;
        next.t = (j + 1) as f64 * st.dt;
        velocities.push(u);
        states.push(next);
    }
    Ok(ContinuityTrajectory { states, velocities })
}

/// Smooth positive initial datum: modes `|k_a| ≤ n/4` only, then shifted up so
/// that `min ≥ floor`. Returns the field and the applied shift.
pub fn mollify_initial(rho0: &ScalarField, floor: f64) -> (ScalarField, f64) {
    let grid = rho0.grid();
    let cutoff = (grid.n() / 4) as i64;
    let mut s = Spectrum::forward(rho0);
    s.apply_real(|k| if in_band(k, cutoff) { 1.0 } else { 0.0 });
    let smooth = s.inverse();
    let shift = (floor - smooth.min()).max(0.0);
    (smooth.map(|r| r + shift), shift)
}

/// Exact solution of `ρ' = −δρ^β` from `ρ0`.
pub fn decay_ode(rho0: f64, delta: f64, beta: f64, t: f64) -> f64 {
    (rho0.powf(1.0 - beta) + delta * (beta - 1.0) * t).powf(1.0 / (1.0 - beta))
}
