//! Discrete periodic fields on the d-torus `[0, 2π)^d`.
//!
//! Fields are stored as physical-space samples on a uniform grid with the
//! last axis varying fastest. Vector and tensor fields keep one contiguous
//! [`ScalarField`] per component so every component can be transformed
//! independently; the interleaved layout only appears in the snapshot format
//! (see [`io`]).

pub mod io;
mod ops;
pub(crate) mod spectral;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub use ops::{
    dealias, divergence, divergence_tensor, gradient, inverse_laplacian_zero_mean, jacobian,
    laplacian_power, random_trigonometric, symmetric_gradient, SpectralField,
};
pub use spectral::Spectrum;

use crate::error::{Error, Result};
use spectral::FftPlans;

/// Uniform grid on the torus of side 2π.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    plans: Arc<FftPlans>,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{n} points per axis; need a power of two >= 8"
            )));
        }
        let total = (n as u64)
            .checked_pow(dim as u32)
            .filter(|&t| t <= isize::MAX as u64 / 16)
            .ok_or_else(|| Error::InvalidGrid(format!("{n}^{dim} points overflow")))?;
        debug_assert!(total > 0);
        Ok(Grid {
            dim,
            n,
            plans: Arc::new(FftPlans::new(n)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// `|T^d| = (2π)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Largest retained wavenumber under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Axis indices of a flat index; unused axes are zero.
    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        (0..self.dim).fold(0, |acc, axis| acc * self.n + idx[axis])
    }

    /// Physical coordinates of a grid point; unused axes are zero.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let h = self.spacing();
        [idx[0] as f64 * h, idx[1] as f64 * h, idx[2] as f64 * h]
    }

    pub(crate) fn plans(&self) -> &FftPlans {
        &self.plans
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: format!("{self:?}"),
                right: format!("{other:?}"),
            })
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl Eq for Grid {}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid(d={}, n={})", self.dim, self.n)
    }
}

/// Exponent of an `L^p` norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Norm {
    L(f64),
    Inf,
}

/// One real sample per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let field = ScalarField {
            grid: grid.clone(),
            values,
        };
        field.ensure_finite("scalar field")?;
        Ok(field)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at every grid point. `f` receives `[x1, x2, x3]` with unused
    /// coordinates set to zero.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { what, index }),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "zip_map across grids");
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `{f} = |T^d|^{-1} ∫ f`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `∫_{T^d} f dx` by the trapezoidal (grid-average) rule.
    pub fn integral(&self) -> f64 {
        self.mean() * self.grid.volume()
    }

    pub fn lp_norm(&self, p: Norm) -> Result<f64> {
        match p {
            Norm::Inf => Ok(self.max_abs()),
            Norm::L(p) if p >= 1.0 => {
                let mean = self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()
                    / self.values.len() as f64;
                Ok((mean * self.grid.volume()).powf(1.0 / p))
            }
            Norm::L(p) => Err(Error::param("p", format!("L^p norm needs p >= 1, got {p}"))),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(Norm::L(2.0)).expect("p = 2")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum value and the first index attaining it.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
    }

    pub fn min(&self) -> f64 {
        self.argmin().1
    }

    /// `f - {f}`.
    pub fn zero_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// `∫ f g dx`.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid, "dot across grids");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &ScalarField) -> Self {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |x, y| x - y)
    }
}

/// `d` components per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn from_components(comps: Vec<ScalarField>) -> Result<Self> {
        let grid = comps
            .first()
            .ok_or_else(|| Error::InvalidGrid("vector field without components".into()))?
            .grid()
            .clone();
        if comps.len() != grid.dim() {
            return Err(Error::InvalidGrid(format!(
                "{} components on a {}-dimensional grid",
                comps.len(),
                grid.dim()
            )));
        }
        for c in &comps {
            grid.check_same(c.grid())?;
        }
        Ok(VectorField { comps })
    }

    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            comps: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    /// `f(x)[i]` is the i-th component at `x`.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let samples: Vec<[f64; 3]> = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        VectorField {
            comps: (0..grid.dim())
                .map(|c| {
                    ScalarField::from_vec_unchecked(grid, samples.iter().map(|s| s[c]).collect())
                })
                .collect(),
        }
    }

    pub(crate) fn from_components_unchecked(comps: Vec<ScalarField>) -> Self {
        debug_assert_eq!(comps.len(), comps[0].grid().dim());
        VectorField { comps }
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.comps
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        self.comps.iter().try_for_each(|c| c.ensure_finite(what))
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        VectorField {
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn zip_components(
        &self,
        other: &VectorField,
        f: impl Fn(&ScalarField, &ScalarField) -> ScalarField,
    ) -> Self {
        VectorField {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// Componentwise means `{u_i}`.
    pub fn means(&self) -> Vec<f64> {
        self.comps.iter().map(ScalarField::mean).collect()
    }

    /// Subtracts the component means.
    pub fn project_zero_mean(&self) -> Self {
        self.map_components(ScalarField::zero_mean)
    }

    /// `∫ u·v dx`.
    pub fn dot(&self, other: &VectorField) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let grid = self.grid();
        let values = (0..grid.len())
            .map(|p| self.comps.iter().map(|c| c.values[p].powi(2)).sum::<f64>().sqrt())
            .collect();
        ScalarField::from_vec_unchecked(grid, values)
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_components(|c| c.scaled(a))
    }

    pub fn axpy(&self, a: f64, other: &VectorField) -> Self {
        self.zip_components(other, |x, y| x.axpy(a, y))
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        self.zip_components(other, ScalarField::sub)
    }

    /// `ρ u` for a scalar weight.
    pub fn weighted(&self, weight: &ScalarField) -> Self {
        self.map_components(|c| c.zip_map(weight, |a, w| a * w))
    }
}

/// `d × d` components per grid point, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    comps: Vec<ScalarField>,
}

impl TensorField {
    pub fn from_components(comps: Vec<ScalarField>) -> Result<Self> {
        let grid = comps
            .first()
            .ok_or_else(|| Error::InvalidGrid("tensor field without components".into()))?
            .grid()
            .clone();
        if comps.len() != grid.dim() * grid.dim() {
            return Err(Error::InvalidGrid(format!(
                "{} components on a {}-dimensional grid",
                comps.len(),
                grid.dim()
            )));
        }
        for c in &comps {
            grid.check_same(c.grid())?;
        }
        Ok(TensorField { comps })
    }

    pub fn zeros(grid: &Grid) -> Self {
        TensorField {
            comps: (0..grid.dim() * grid.dim())
                .map(|_| ScalarField::zeros(grid))
                .collect(),
        }
    }

    /// `f(x)[i][j]` is entry `(i, j)` at `x`.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [[f64; 3]; 3]) -> Self {
        let d = grid.dim();
        let samples: Vec<[[f64; 3]; 3]> = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        TensorField {
            comps: (0..d * d)
                .map(|c| {
                    let (i, j) = (c / d, c % d);
                    ScalarField::from_vec_unchecked(grid, samples.iter().map(|s| s[i][j]).collect())
                })
                .collect(),
        }
    }

    pub(crate) fn from_components_unchecked(comps: Vec<ScalarField>) -> Self {
        TensorField { comps }
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.grid().dim()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[i * self.dim() + j]
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        self.comps.iter().try_for_each(|c| c.ensure_finite(what))
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        TensorField {
            comps: self.comps.iter().map(f).collect(),
        }
    }

    /// The `d × d` matrix at one grid point, row-major.
    pub fn at(&self, point: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c.values[point]).collect()
    }

    /// Pointwise Frobenius norm `|B| = (B:B)^{1/2}`.
    pub fn frobenius(&self) -> ScalarField {
        let grid = self.grid();
        let values = (0..grid.len())
            .map(|p| self.comps.iter().map(|c| c.values[p].powi(2)).sum::<f64>().sqrt())
            .collect();
        ScalarField::from_vec_unchecked(grid, values)
    }

    pub fn trace(&self) -> ScalarField {
        let d = self.dim();
        let mut out = self.comps[0].clone();
        for i in 1..d {
            out = out.zip_map(&self.comps[i * d + i], |a, b| a + b);
        }
        out
    }

    /// Largest pointwise asymmetry `max |B_ij - B_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                let a = self.entry(i, j);
                let b = self.entry(j, i);
                for (x, y) in a.values.iter().zip(&b.values) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        worst
    }

    /// `max_x |B(x)|` in the Frobenius norm.
    pub fn max_norm(&self) -> f64 {
        self.frobenius().max_abs()
    }
}
