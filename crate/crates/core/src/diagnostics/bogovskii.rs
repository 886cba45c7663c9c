use crate::constitutive::{pow, ConstitutiveModel, RegularizationParams};
use crate::coupling::{trapezoid, Trajectory};
use crate::error::{Error, Result};
use crate::fields::{
    divergence, gradient, inverse_laplacian_zero_mean, jacobian, laplacian_power, symmetric_gradient, Norm,
    ScalarField, VectorField,
};

/// `ψ = ∇Δ⁻¹(h − {h})`, so that `div ψ = h − {h}`.
pub fn bogovskii_vector(h: &ScalarField) -> VectorField {
    gradient(&inverse_laplacian_zero_mean(h))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BogovskiiLevel {
    pub t: f64,
    /// `‖div ψ − (ρ^θ − {ρ^θ})‖_∞`.
    pub div_residual: f64,
    /// `∫ρ^{γ+θ}`.
    pub pressure_integral: f64,
    /// Relative mismatch of the identity obtained by testing the momentum
    /// equation with `ψ`.
    pub identity_residual: f64,
    /// `{ρ^θ}∫ρ^γ + C(‖∇ψ‖₁ + ‖h‖₁) + 2‖div u‖₂‖h‖₂ + ε‖Δ^m u‖₂‖Δ^m ψ‖₂`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BogovskiiReport {
    pub theta: f64,
    pub levels: Vec<BogovskiiLevel>,
    pub max_div_residual: f64,
    pub max_identity_residual: f64,
    /// `∫₀^T∫ρ^{γ+θ}`.
    pub integrated_pressure: f64,
    pub integrated_bound: f64,
    /// `integrated_pressure / integrated_bound`.
    pub empirical_constant: f64,
}

pub fn bogovskii_pressure_test(
    traj: &Trajectory,
    model: &ConstitutiveModel,
    params: &RegularizationParams,
    theta: f64,
) -> Result<BogovskiiReport> {
    if !(theta > 1.0) {
        return Err(Error::param("theta", format!("must exceed 1, got {theta}")));
    }
    let gamma = model.gamma();
    let c = model.bound_constant();
    let mut levels = Vec::with_capacity(traj.rho.len());
    for ((&t, rho), u) in traj.times.iter().zip(&traj.rho).zip(&traj.u) {
        let rt = rho.map(|r| pow(r, theta));
        let mean_rt = rt.mean();
        let h = rt.zero_mean();
        let psi = bogovskii_vector(&h);
        let div_residual = divergence(&psi).sub(&h).max_abs();

        let p = model.pressure(rho)?;
        let div = divergence(u);
        let stress = model.stress(&symmetric_gradient(u));
        let jpsi = jacobian(&psi);
        let s_grad: f64 = stress
            .components()
            .iter()
            .zip(jpsi.components())
            .map(|(a, b)| a.dot(b))
            .sum();
        let lam_div = div.map(|s| model.lambda_at(s.abs()) * s);
        let (eps_term, eps_bound) = if params.epsilon > 0.0 {
            let lu = laplacian_power(u, params.m);
            let lp = laplacian_power(&psi, params.m);
            (params.epsilon * lu.dot(&lp), params.epsilon * lu.l2_norm() * lp.l2_norm())
        } else {
            (0.0, 0.0)
        };
        let pressure_integral = rho.map(|r| pow(r, gamma + theta)).integral();
        let lhs = pressure_integral - 2.0 * rt.dot(&div);
        let rhs = s_grad + lam_div.dot(&rt) - mean_rt * lam_div.integral() + mean_rt * p.integral() + eps_term;
        let identity_residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        let bound = mean_rt * p.integral()
            + c * (jpsi.frobenius().lp_norm(Norm::L(1.0))? + h.lp_norm(Norm::L(1.0))?)
            + 2.0 * div.l2_norm() * h.l2_norm()
            + eps_bound;
        levels.push(BogovskiiLevel {
            t,
            div_residual,
            pressure_integral,
            identity_residual,
            bound,
        });
    }
    let dt = if traj.times.len() > 1 { traj.dt() } else { 0.0 };
    let pressures: Vec<f64> = levels.iter().map(|l| l.pressure_integral).collect();
    let bounds: Vec<f64> = levels.iter().map(|l| l.bound).collect();
    let (ip, ib) = if levels.len() > 1 {
        (trapezoid(&pressures, dt), trapezoid(&bounds, dt))
    } else {
        (pressures[0], bounds[0])
    };
    Ok(BogovskiiReport {
        theta,
        max_div_residual: levels.iter().map(|l| l.div_residual).fold(0.0, f64::max),
        max_identity_residual: levels.iter().map(|l| l.identity_residual).fold(0.0, f64::max),
        integrated_pressure: ip,
        integrated_bound: ib,
        empirical_constant: ip / ib,
        levels,
    })
}
