use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Grid, ScalarField};

pub(crate) struct FftPlans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPlans {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftPlans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Fourier coefficients `c_k = N^{-1} Σ_x f(x) e^{-i k·x}` of a real field,
/// stored in the same index order as the physical samples.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn forward(f: &ScalarField) -> Self {
        let grid = f.grid().clone();
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        transform(&grid, &mut data, false);
        let scale = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        Spectrum { grid, data }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Spectrum {
            grid: grid.clone(),
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Back to physical space, keeping the real part.
    pub fn inverse(&self) -> ScalarField {
        let mut data = self.data.clone();
        transform(&self.grid, &mut data, true);
        ScalarField::from_vec_unchecked(&self.grid, data.into_iter().map(|c| c.re).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.data
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Signed wavevector of a flat index; unused axes are zero. The Nyquist
    /// index `n/2` is reported as `+n/2`.
    pub fn wavevector(&self, flat: usize) -> [i64; 3] {
        wavevector(&self.grid, flat)
    }

    /// Multiplies every coefficient by `m(k)`.
    pub fn apply(&mut self, m: impl Fn([i64; 3]) -> Complex64) {
        let grid = self.grid.clone();
        for (i, c) in self.data.iter_mut().enumerate() {
            *c *= m(wavevector(&grid, i));
        }
    }

    /// Multiplies every coefficient by a real `m(k)`.
    pub fn apply_real(&mut self, m: impl Fn([i64; 3]) -> f64) {
        let grid = self.grid.clone();
        for (i, c) in self.data.iter_mut().enumerate() {
            *c *= m(wavevector(&grid, i));
        }
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: Complex64, other: &Spectrum) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    /// Zeroes every mode with some `|k_a| > n/3`.
    pub fn dealias(&mut self) {
        let cutoff = self.grid.dealias_cutoff();
        self.apply_real(|k| if in_band(k, cutoff) { 1.0 } else { 0.0 });
    }

    pub fn zero_mean_mode(&mut self) {
        self.data[0] = Complex64::new(0.0, 0.0);
    }

    /// Spectral derivative along `axis`; the Nyquist mode of that axis is dropped.
    pub fn derivative(&self, axis: usize) -> Spectrum {
        let mut out = self.clone();
        let nyquist = (self.grid.n() / 2) as i64;
        out.apply(|k| {
            let ka = k[axis];
            if ka == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, ka as f64)
            }
        });
        out
    }

    /// `Σ |c_k|^2 w(k)`; with `w ≡ 1` this is the grid mean of `f^2`.
    pub fn weighted_energy(&self, w: impl Fn([i64; 3]) -> f64) -> f64 {
        self.data
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm_sqr() * w(wavevector(&self.grid, i)))
            .sum()
    }
}

pub(crate) fn in_band(k: [i64; 3], cutoff: i64) -> bool {
    k.iter().all(|ka| ka.abs() <= cutoff)
}

/// `|k|^2` including the Nyquist mode.
pub(crate) fn k_squared(k: [i64; 3]) -> f64 {
    k.iter().map(|&ka| (ka * ka) as f64).sum()
}

pub(crate) fn wavevector(grid: &Grid, flat: usize) -> [i64; 3] {
    let n = grid.n();
    let idx = grid.multi_index(flat);
    let mut k = [0i64; 3];
    for axis in 0..grid.dim() {
        let i = idx[axis];
        k[axis] = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
    }
    k
}

/// In-place unnormalized d-dimensional DFT.
fn transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let plans = grid.plans();
    let fft = if inverse { &plans.inverse } else { &plans.forward };
    let n = grid.n();
    let dim = grid.dim();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // Last axis is contiguous: every chunk of n is one line.
    fft.process_with_scratch(data, &mut scratch);

    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim.saturating_sub(1) {
        let stride = n.pow((dim - 1 - axis) as u32);
        let outer = n.pow(axis as u32);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, value) in line.iter().enumerate() {
                    data[base + j * stride] = *value;
                }
            }
        }
    }
}
