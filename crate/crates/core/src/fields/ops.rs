//! Spectral differential and integral operators.

use rustfft::num_complex::Complex64;

use super::spectral::k_squared;
use super::{Grid, ScalarField, Spectrum, TensorField, VectorField};

/// Fields whose components can be pushed through a Fourier multiplier.
pub trait SpectralField: Sized {
    fn map_scalar_components(&self, f: &dyn Fn(&ScalarField) -> ScalarField) -> Self;
}

impl SpectralField for ScalarField {
    fn map_scalar_components(&self, f: &dyn Fn(&ScalarField) -> ScalarField) -> Self {
        f(self)
    }
}

impl SpectralField for VectorField {
    fn map_scalar_components(&self, f: &dyn Fn(&ScalarField) -> ScalarField) -> Self {
        self.map_components(f)
    }
}

impl SpectralField for TensorField {
    fn map_scalar_components(&self, f: &dyn Fn(&ScalarField) -> ScalarField) -> Self {
        self.map_components(f)
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let spec = Spectrum::forward(f);
    let comps = (0..f.grid().dim())
        .map(|axis| spec.derivative(axis).inverse())
        .collect();
    VectorField::from_components_unchecked(comps)
}

/// `J_ij = ∂_j u_i`.
pub fn jacobian(u: &VectorField) -> TensorField {
    let d = u.grid().dim();
    let mut comps = Vec::with_capacity(d * d);
    for c in u.components() {
        let spec = Spectrum::forward(c);
        for axis in 0..d {
            comps.push(spec.derivative(axis).inverse());
        }
    }
    TensorField::from_components_unchecked(comps)
}

/// `𝔻u = (∇u + ∇uᵀ)/2`, symmetric by construction.
pub fn symmetric_gradient(u: &VectorField) -> TensorField {
    symmetrize(&jacobian(u))
}

pub(crate) fn symmetrize(j: &TensorField) -> TensorField {
    let d = j.dim();
    let mut comps = Vec::with_capacity(d * d);
    for i in 0..d {
        for k in 0..d {
            if i == k {
                comps.push(j.entry(i, i).clone());
            } else if k < i {
                let mirrored: ScalarField = comps[k * d + i].clone();
                comps.push(mirrored);
            } else {
                comps.push(j.entry(i, k).zip_map(j.entry(k, i), |a, b| 0.5 * (a + b)));
            }
        }
    }
    TensorField::from_components_unchecked(comps)
}

pub fn divergence(u: &VectorField) -> ScalarField {
    let grid = u.grid();
    let mut acc = Spectrum::zeros(grid);
    for (axis, c) in u.components().iter().enumerate() {
        acc.add_scaled(Complex64::new(1.0, 0.0), &Spectrum::forward(c).derivative(axis));
    }
    acc.inverse()
}

/// Row-wise divergence `(div S)_i = Σ_j ∂_j S_ij`.
pub fn divergence_tensor(s: &TensorField) -> VectorField {
    let d = s.dim();
    let comps = (0..d)
        .map(|i| {
            let mut acc = Spectrum::zeros(s.grid());
            for j in 0..d {
                acc.add_scaled(
                    Complex64::new(1.0, 0.0),
                    &Spectrum::forward(s.entry(i, j)).derivative(j),
                );
            }
            acc.inverse()
        })
        .collect();
    VectorField::from_components_unchecked(comps)
}

/// `Δ^k` as the multiplier `(-|ξ|^2)^k`, componentwise.
pub fn laplacian_power<F: SpectralField>(f: &F, k: u32) -> F {
    assert!(k >= 1, "laplacian power must be positive");
    f.map_scalar_components(&|c| {
        let mut spec = Spectrum::forward(c);
        spec.apply_real(|kv| (-k_squared(kv)).powi(k as i32));
        spec.inverse()
    })
}

/// Zero-mean `ψ` with `Δψ = f - {f}`.
pub fn inverse_laplacian_zero_mean(f: &ScalarField) -> ScalarField {
    let mut spec = Spectrum::forward(f);
    spec.apply_real(|kv| {
        let k2 = k_squared(kv);
        if k2 == 0.0 {
            0.0
        } else {
            -1.0 / k2
        }
    });
    spec.inverse()
}

/// 2/3-rule truncation, componentwise.
pub fn dealias<F: SpectralField>(f: &F) -> F {
    f.map_scalar_components(&|c| {
        let mut spec = Spectrum::forward(c);
        spec.dealias();
        spec.inverse()
    })
}

/// Random real trigonometric polynomial with twelve modes `|k_a| ≤ kmax`,
/// reproducible from `seed`.
pub fn random_trigonometric(grid: &Grid, kmax: i64, seed: u64) -> ScalarField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<([f64; 3], f64, f64)> = (0..12)
        .map(|_| {
            let mut k = [0.0; 3];
            for ka in k.iter_mut().take(grid.dim()) {
                *ka = rng.gen_range(-kmax..=kmax) as f64;
            }
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    ScalarField::from_fn(grid, |x| {
        terms
            .iter()
            .map(|(k, a, ph)| a * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos())
            .sum()
    })
}
