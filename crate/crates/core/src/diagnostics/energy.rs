use crate::constitutive::{pow, ConstitutiveModel, RegularizationParams};
use crate::coupling::Trajectory;
use crate::fields::{divergence, gradient, jacobian, laplacian_power, symmetric_gradient, ScalarField, VectorField};

use super::truncation::TruncationOperator;

/// Per-step residual of a balance law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceRow {
    /// Start of the step.
    pub t: f64,
    pub residual: f64,
    /// Sum of the magnitudes of the terms in the balance, for relative
    /// comparisons.
    pub scale: f64,
}

/// `∫ μ0|𝔻u|² + |∇u|² + (1+λ)(div u)² + ε|Δ^m u|²`.
pub fn dissipation(u: &VectorField, model: &ConstitutiveModel, params: &RegularizationParams) -> f64 {
    let du = symmetric_gradient(u).frobenius();
    let div = divergence(u);
    let grad = jacobian(u).frobenius();
    let mut d = du.map(|z| model.mu0_at(z) * z * z).integral()
        + grad.dot(&grad)
        + div.map(|s| (1.0 + model.lambda_at(s.abs())) * s * s).integral();
    if params.epsilon > 0.0 {
        let lap = laplacian_power(u, params.m);
        d += params.epsilon * lap.dot(&lap);
    }
    d
}

fn grad_sq(rho: &ScalarField) -> ScalarField {
    let g = gradient(rho);
    g.magnitude().map(|x| x * x)
}

/// `δ(∫ b'(ρ)ρ^β + ∫ b''(ρ)|∇ρ|²)`.
fn energy_sink(rho: &ScalarField, model: &ConstitutiveModel, params: &RegularizationParams) -> f64 {
    if params.delta == 0.0 {
        return 0.0;
    }
    let beta = params.beta as f64;
    let g2 = grad_sq(rho);
    let a = rho.map(|r| model.pressure_potential_slope(r) * pow(r, beta)).integral();
    let b = rho
        .zip_map(&g2, |r, g| if g == 0.0 { 0.0 } else { model.pressure_potential_curvature(r) * g })
        .integral();
    params.delta * (a + b)
}

/// Residual of `dE/dt + D + δ-terms = 0` per step, with `E = ∫b(ρ)`, the
/// dissipation `D` taken from the momentum identity at the start of the step
/// and the trapezoid rule for the time integrals.
pub fn energy_balance(traj: &Trajectory, model: &ConstitutiveModel, params: &RegularizationParams) -> Vec<BalanceRow> {
    let n = traj.rho.len();
    let energy: Vec<f64> = traj.rho.iter().map(|r| model.internal_energy(r)).collect();
    let sink: Vec<f64> = traj.rho.iter().map(|r| energy_sink(r, model, params)).collect();
    (0..n - 1)
        .map(|j| {
            let dt = traj.times[j + 1] - traj.times[j];
            let u = &traj.u[j];
            let d0 = dissipation(u, model, params);
            let div = divergence(u);
            let p1 = model.pressure(&traj.rho[j + 1]).map(|p| p.dot(&div)).unwrap_or(f64::NAN);
            let rate = (energy[j + 1] - energy[j]) / dt;
            let s = 0.5 * (sink[j] + sink[j + 1]);
            BalanceRow {
                t: traj.times[j],
                residual: rate + 0.5 * (d0 + p1) + s,
                scale: rate.abs() + 0.5 * (d0 + p1.abs()) + s.abs(),
            }
        })
        .collect()
}

/// `δ(∫ P_k'(ρ)ρ^β + ∫ P_k''(ρ)|∇ρ|²)`.
fn pk_sink(rho: &ScalarField, op: &TruncationOperator, p: f64, params: &RegularizationParams) -> f64 {
    if params.delta == 0.0 {
        return 0.0;
    }
    let beta = params.beta as f64;
    let g2 = grad_sq(rho);
    let a = rho.map(|r| op.pk_prime(p, r) * pow(r, beta)).integral();
    let b = rho.zip_map(&g2, |r, g| op.pk_second(p, r) * g).integral();
    params.delta * (a + b)
}

/// Residual of `d/dt ∫P_k(ρ) + δ(…) + ∫T_k(ρ)^p div u = 0` per step.
pub fn renormalized_identity_residual(
    traj: &Trajectory,
    op: &TruncationOperator,
    p: f64,
    params: &RegularizationParams,
) -> Vec<BalanceRow> {
    let n = traj.rho.len();
    let pk: Vec<f64> = traj.rho.iter().map(|r| r.map(|z| op.pk(p, z)).integral()).collect();
    let sink: Vec<f64> = traj.rho.iter().map(|r| pk_sink(r, op, p, params)).collect();
    (0..n - 1)
        .map(|j| {
            let dt = traj.times[j + 1] - traj.times[j];
            let div = divergence(&traj.u[j]);
            let flux = |r: &ScalarField| r.map(|z| pow(op.apply(z), p)).dot(&div);
            let f0 = flux(&traj.rho[j]);
            let f1 = flux(&traj.rho[j + 1]);
            let rate = (pk[j + 1] - pk[j]) / dt;
            let s = 0.5 * (sink[j] + sink[j + 1]);
            BalanceRow {
                t: traj.times[j],
                residual: rate + 0.5 * (f0 + f1) + s,
                scale: rate.abs() + 0.5 * (f0.abs() + f1.abs()) + s.abs(),
            }
        })
        .collect()
}
