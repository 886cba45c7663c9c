use std::sync::OnceLock;

use crate::constitutive::pow;
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::quadrature::GaussLegendre;

/// Smooth truncation `T_k`: identity below `k`, the constant `k + 1` from
/// `k + 2` on, and a quintic blend in between with `0 ≤ T_k' ≤ 1`. For
/// `k ≥ 2` this gives `T_k(z) = k + 1` for every `z > 2k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationOperator {
    k: f64,
}

const WIDTH: f64 = 2.0;

fn gauss() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(20))
}

impl TruncationOperator {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::param("k", format!("must be positive, got {k}")));
        }
        Ok(TruncationOperator { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn apply(&self, z: f64) -> f64 {
        let k = self.k;
        if z <= k {
            z
        } else if z >= k + WIDTH {
            k + 1.0
        } else {
            let s = (z - k) / WIDTH;
            let s2 = s * s;
            let s3 = s2 * s;
            let s4 = s3 * s;
            let s5 = s4 * s;
            k + (10.0 * s3 - 15.0 * s4 + 6.0 * s5) + 2.0 * (s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5)
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let k = self.k;
        if z <= k {
            1.0
        } else if z >= k + WIDTH {
            0.0
        } else {
            let s = (z - k) / WIDTH;
            let h = 30.0 * s * s * (1.0 - s) * (1.0 - s)
                + 2.0 * (1.0 - 18.0 * s * s + 32.0 * s * s * s - 15.0 * s.powi(4));
            h / WIDTH
        }
    }

    /// `P_k(ρ) = ρ ∫₀^ρ T_k(z)^p / z² dz`.
    pub fn pk(&self, p: f64, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        rho * self.pk_inner(p, rho)
    }

    /// `∫₀^ρ T_k(z)^p / z² dz`.
    fn pk_inner(&self, p: f64, rho: f64) -> f64 {
        let k = self.k;
        if rho <= k {
            return pow(rho, p - 1.0) / (p - 1.0);
        }
        let top = rho.min(k + WIDTH);
        let mut v = pow(k, p - 1.0) / (p - 1.0)
            + gauss().integrate(|z| pow(self.apply(z), p) / (z * z), k, top);
        if rho > k + WIDTH {
            v += pow(k + 1.0, p) * (1.0 / (k + WIDTH) - 1.0 / rho);
        }
        v
    }

    /// `P_k'(ρ) = ∫₀^ρ T^p/z² + T(ρ)^p/ρ`.
    pub fn pk_prime(&self, p: f64, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        self.pk_inner(p, rho) + pow(self.apply(rho), p) / rho
    }

    /// `P_k''(ρ) = p T^{p−1} T' / ρ`.
    pub fn pk_second(&self, p: f64, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        p * pow(self.apply(rho), p - 1.0) * self.derivative(rho) / rho
    }
}

pub fn truncation_apply(op: &TruncationOperator, rho: &ScalarField) -> ScalarField {
    rho.map(|z| op.apply(z))
}

pub fn pk_apply(op: &TruncationOperator, p: f64, rho: &ScalarField) -> Result<ScalarField> {
    if !(p > 1.0) {
        return Err(Error::param("p", format!("must exceed 1, got {p}")));
    }
    Ok(rho.map(|z| op.pk(p, z)))
}
