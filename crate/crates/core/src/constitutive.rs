//! Viscosity laws, their convex potentials and the pressure law.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{ScalarField, TensorField};
use crate::quadrature::adaptive_simpson;

/// The Newtonian shear coefficient.
pub const MU1: f64 = 1.0;

/// A scalar viscosity coefficient `z ↦ μ(z)` on `z ≥ 0`.
pub trait ViscosityLaw: Send + Sync + fmt::Debug {
    fn value(&self, z: f64) -> f64;

    /// Smallest `C` with `z μ(z) ≤ C`.
    fn bound(&self) -> f64;

    /// `Φ(r) = ∫₀^r μ(s) s ds`.
    fn potential(&self, r: f64) -> f64 {
        adaptive_simpson(&|s| self.value(s) * s, 0.0, r, 1e-10)
    }
}

/// `μ(z) = τ / (a + z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rational {
    pub tau: f64,
    pub a: f64,
}

impl Rational {
    pub fn new(tau: f64, a: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("tau", format!("must be positive and finite, got {tau}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::param("a", format!("must be positive and finite, got {a}")));
        }
        Ok(Rational { tau, a })
    }
}

impl ViscosityLaw for Rational {
    fn value(&self, z: f64) -> f64 {
        self.tau / (self.a + z)
    }

    fn bound(&self) -> f64 {
        self.tau
    }

    fn potential(&self, r: f64) -> f64 {
        self.tau * (r - self.a * (r / self.a).ln_1p())
    }
}

/// Herschel–Bulkley with flow index one, `μ(z) = τ0 / max(z, z0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HerschelBulkley {
    pub tau0: f64,
    pub threshold: f64,
}

impl HerschelBulkley {
    pub fn new(tau0: f64, threshold: f64) -> Result<Self> {
        if !(tau0 > 0.0 && tau0.is_finite()) {
            return Err(Error::param("tau", format!("must be positive and finite, got {tau0}")));
        }
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::param(
                "hb_threshold",
                format!("must be positive and finite, got {threshold}"),
            ));
        }
        Ok(HerschelBulkley { tau0, threshold })
    }

    /// Flow indices above one grow faster than `C/z` allows.
    pub fn check_flow_index(n: f64) -> Result<()> {
        if n > 1.0 {
            return Err(Error::param(
                "hb_index",
                format!("flow index {n} > 1 violates the C/z viscosity bound"),
            ));
        }
        Ok(())
    }
}

impl ViscosityLaw for HerschelBulkley {
    fn value(&self, z: f64) -> f64 {
        self.tau0 / z.max(self.threshold)
    }

    fn bound(&self) -> f64 {
        self.tau0
    }

    fn potential(&self, r: f64) -> f64 {
        let d = self.threshold;
        if r <= d {
            0.5 * self.tau0 * r * r / d
        } else {
            self.tau0 * (0.5 * d + (r - d))
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstitutiveModel {
    mu0: Arc<dyn ViscosityLaw>,
    lambda: Arc<dyn ViscosityLaw>,
    gamma: f64,
    bound: f64,
}

impl ConstitutiveModel {
    pub fn from_laws(
        mu0: Arc<dyn ViscosityLaw>,
        lambda: Arc<dyn ViscosityLaw>,
        gamma: f64,
    ) -> Result<Self> {
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be ≥ 1, got {gamma}")));
        }
        let bound = mu0.bound().max(lambda.bound());
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::param("bound_constant", format!("must be positive, got {bound}")));
        }
        Ok(ConstitutiveModel {
            mu0,
            lambda,
            gamma,
            bound,
        })
    }

    /// `μ0 = λ = τ/(a+z)`.
    pub fn rational(tau: f64, a: f64, gamma: f64) -> Result<Self> {
        let law = Arc::new(Rational::new(tau, a)?);
        Self::from_laws(law.clone(), law, gamma)
    }

    pub fn herschel_bulkley(tau0: f64, threshold: f64, gamma: f64) -> Result<Self> {
        let law = Arc::new(HerschelBulkley::new(tau0, threshold)?);
        Self::from_laws(law.clone(), law, gamma)
    }

    /// `τ = a = 1`.
    pub fn default_with_gamma(gamma: f64) -> Result<Self> {
        Self::rational(1.0, 1.0, gamma)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn bound_constant(&self) -> f64 {
        self.bound
    }

    pub fn mu1(&self) -> f64 {
        MU1
    }

    pub fn mu0_eval(&self, z: f64) -> Result<f64> {
        check_nonneg("mu0", z)?;
        Ok(self.mu0.value(z))
    }

    pub fn lambda_eval(&self, z: f64) -> Result<f64> {
        check_nonneg("lambda", z)?;
        Ok(self.lambda.value(z))
    }

    pub(crate) fn mu0_at(&self, z: f64) -> f64 {
        self.mu0.value(z)
    }

    pub(crate) fn lambda_at(&self, z: f64) -> f64 {
        self.lambda.value(z)
    }

    /// Pointwise `μ0(|D|) D` with the Frobenius norm.
    pub fn stress(&self, d: &TensorField) -> TensorField {
        let factor = d.frobenius().map(|z| self.mu0.value(z));
        d.map_components(|c| c.zip_map(&factor, |x, m| m * x))
    }

    pub fn potential_f(&self, r: f64) -> Result<f64> {
        check_nonneg("potential_F", r)?;
        Ok(self.mu0.potential(r))
    }

    pub(crate) fn potential_f_at(&self, r: f64) -> f64 {
        self.mu0.potential(r)
    }

    /// `Λ(s) = s²/2 + ∫₀^{|s|} λ(t) t dt`.
    pub fn potential_lambda(&self, s: f64) -> f64 {
        0.5 * s * s + self.lambda.potential(s.abs())
    }

    /// `Λ'(s) = s + λ(|s|) s`.
    pub fn lambda_flux(&self, s: f64) -> f64 {
        s + self.lambda.value(s.abs()) * s
    }

    pub fn pressure(&self, rho: &ScalarField) -> Result<ScalarField> {
        let (index, min) = rho.argmin();
        if min < 0.0 {
            return Err(Error::NegativeDensity { min, index });
        }
        Ok(rho.map(|r| pow(r, self.gamma)))
    }

    /// `b(ρ) = ρ^γ/(γ−1)`, or `ρ ln ρ` when `γ = 1`.
    pub fn pressure_potential(&self, rho: f64) -> f64 {
        if self.gamma == 1.0 {
            if rho > 0.0 {
                rho * rho.ln()
            } else {
                0.0
            }
        } else {
            pow(rho, self.gamma) / (self.gamma - 1.0)
        }
    }

    /// `b'(ρ)`.
    pub fn pressure_potential_slope(&self, rho: f64) -> f64 {
        if self.gamma == 1.0 {
            rho.ln() + 1.0
        } else {
            self.gamma / (self.gamma - 1.0) * pow(rho, self.gamma - 1.0)
        }
    }

    /// `b''(ρ) = γ ρ^{γ−2}`, which is `1/ρ` when `γ = 1`.
    pub fn pressure_potential_curvature(&self, rho: f64) -> f64 {
        self.gamma * pow(rho, self.gamma - 2.0)
    }

    /// `∫ b(ρ) dx`.
    pub fn internal_energy(&self, rho: &ScalarField) -> f64 {
        rho.map(|r| self.pressure_potential(r)).integral()
    }

    /// `(μ0(|B1|)B1 − μ0(|B2|)B2) : (B1 − B2)` for flattened matrices.
    pub fn monotonicity_gap(&self, b1: &[f64], b2: &[f64]) -> f64 {
        assert_eq!(b1.len(), b2.len());
        let m1 = self.mu0.value(frob(b1));
        let m2 = self.mu0.value(frob(b2));
        b1.iter()
            .zip(b2)
            .map(|(x, y)| (m1 * x - m2 * y) * (x - y))
            .sum()
    }

    /// Largest `z μ0(z)` and `z λ(z)` over `count` log-spaced samples.
    pub fn certify_bound(&self, z_min: f64, z_max: f64, count: usize) -> f64 {
        let (lo, hi) = (z_min.ln(), z_max.ln());
        (0..count)
            .map(|i| {
                let z = (lo + (hi - lo) * i as f64 / (count - 1).max(1) as f64).exp();
                (z * self.mu0.value(z)).max(z * self.lambda.value(z))
            })
            .fold(0.0, f64::max)
    }
}

fn check_nonneg(what: &'static str, z: f64) -> Result<()> {
    if z < 0.0 || z.is_nan() {
        return Err(Error::NegativeArgument { what, value: z });
    }
    Ok(())
}

fn frob(b: &[f64]) -> f64 {
    b.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `x^p` with an exact path for small integer powers.
pub(crate) fn pow(x: f64, p: f64) -> f64 {
    if p == p.trunc() && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

/// Parameters of the regularized system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationParams {
    pub delta: f64,
    pub epsilon: f64,
    pub m: u32,
    pub beta: u32,
}

impl RegularizationParams {
    pub fn new(delta: f64, epsilon: f64, m: u32, beta: u32) -> Self {
        RegularizationParams {
            delta,
            epsilon,
            m,
            beta,
        }
    }

    /// Checks the parameter constraints for a given pressure exponent and dimension.
    /// `δ = 0` is accepted as the unregularized limit.
    pub fn validate(&self, gamma: f64, dim: usize) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::param("delta", format!("must be ≥ 0, got {}", self.delta)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("must be ≥ 0, got {}", self.epsilon)));
        }
        if self.m == 0 {
            return Err(Error::param("m", "must be a positive integer"));
        }
        if self.beta % 2 != 0 {
            return Err(Error::param("beta", format!("must be even, got {}", self.beta)));
        }
        let beta_min = (gamma + 1.0).max(4.0);
        if (self.beta as f64) < beta_min {
            return Err(Error::param(
                "beta",
                format!("must be ≥ max(γ+1, 4) = {beta_min}, got {}", self.beta),
            ));
        }
        if self.epsilon > 0.0 && (2 * self.m - 1) as f64 <= dim as f64 / 2.0 {
            return Err(Error::param(
                "m",
                format!("2m − 1 = {} must exceed d/2 = {}", 2 * self.m - 1, dim as f64 / 2.0),
            ));
        }
        Ok(())
    }
}
