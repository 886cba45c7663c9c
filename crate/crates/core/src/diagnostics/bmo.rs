use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Grid, Norm, ScalarField};

/// Shifted dyadic cube families of side `2π/2^j`, `j = 0..=max_depth`. The
/// lattice with shift index `s` is offset by `s/shift_count` of a cube side
/// along every axis, wrapping periodically.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicCubeSet {
    grid: Grid,
    max_depth: u32,
    shift_count: usize,
}

impl DyadicCubeSet {
    pub fn new(grid: &Grid, max_depth: u32, shift_count: usize) -> Result<Self> {
        let limit = Self::deepest(grid);
        if max_depth > limit {
            return Err(Error::param(
                "max_depth",
                format!("depth {max_depth} leaves fewer than 4 points per cube side (max {limit})"),
            ));
        }
        if shift_count == 0 {
            return Err(Error::param("shift_count", "must be ≥ 1"));
        }
        Ok(DyadicCubeSet {
            grid: grid.clone(),
            max_depth,
            shift_count,
        })
    }

    /// `log₂(n) − 2` levels with `shift_count` lattices.
    pub fn full(grid: &Grid, shift_count: usize) -> Result<Self> {
        Self::new(grid, Self::deepest(grid), shift_count)
    }

    /// Deepest level keeping at least 4 points per cube side.
    pub fn deepest(grid: &Grid) -> u32 {
        grid.n().trailing_zeros() - 2
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn shift_count(&self) -> usize {
        self.shift_count
    }

    /// `(level, shift, corner)` of every cube.
    fn cubes(&self) -> Vec<(u32, usize, [usize; 3])> {
        let d = self.grid.dim();
        let mut out = Vec::new();
        for level in 0..=self.max_depth {
            let per_axis = 1usize << level;
            let side = self.grid.n() / per_axis;
            let shifts = if level == 0 { 1 } else { self.shift_count };
            for s in 0..shifts {
                let offset = s * side / self.shift_count;
                for c in 0..per_axis.pow(d as u32) {
                    let mut corner = [0usize; 3];
                    let mut rest = c;
                    for a in (0..d).rev() {
                        corner[a] = (rest % per_axis) * side + offset;
                        rest /= per_axis;
                    }
                    out.push((level, s, corner));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeOscillation {
    pub level: u32,
    pub shift: usize,
    pub corner: [usize; 3],
    pub oscillation: f64,
}

fn cube_points(grid: &Grid, corner: [usize; 3], side: usize) -> Vec<usize> {
    let n = grid.n();
    let d = grid.dim();
    let count = side.pow(d as u32);
    (0..count)
        .map(|c| {
            let mut idx = [0usize; 3];
            let mut rest = c;
            for a in (0..d).rev() {
                idx[a] = (corner[a] + rest % side) % n;
                rest /= side;
            }
            grid.flat_index(idx)
        })
        .collect()
}

/// Mean oscillation `|Q|⁻¹∫_Q |f − {f}_Q|` of every cube in the set.
pub fn cube_oscillations(f: &ScalarField, cubes: &DyadicCubeSet) -> Result<Vec<CubeOscillation>> {
    f.grid().check_same(&cubes.grid)?;
    let vals = f.values();
    Ok(cubes
        .cubes()
        .into_par_iter()
        .map(|(level, shift, corner)| {
            let side = cubes.grid.n() >> level;
            let pts = cube_points(&cubes.grid, corner, side);
            let mean = pts.iter().map(|&p| vals[p]).sum::<f64>() / pts.len() as f64;
            let osc = pts.iter().map(|&p| (vals[p] - mean).abs()).sum::<f64>() / pts.len() as f64;
            CubeOscillation {
                level,
                shift,
                corner,
                oscillation: osc,
            }
        })
        .collect())
}

/// Dyadic-BMO lower bound: the largest mean oscillation over the cube set.
pub fn bmo_norm(f: &ScalarField, cubes: &DyadicCubeSet) -> Result<f64> {
    Ok(cube_oscillations(f, cubes)?
        .iter()
        .map(|c| c.oscillation)
        .fold(0.0, f64::max))
}

/// The bracketed right-hand side of the logarithmic inequality with `C = 1`:
/// `‖f‖_BMO ‖g‖₁ (|ln‖g‖₁| + ln(e + ‖g‖_q) + (1 + |ln‖g‖₁|)‖g‖_q^{(q−2)/2})`.
pub fn log_inequality_rhs(f: &ScalarField, g: &ScalarField, q: f64, cubes: &DyadicCubeSet) -> Result<f64> {
    if !(q > 2.0) {
        return Err(Error::param("q", format!("must exceed 2, got {q}")));
    }
    let g1 = g.lp_norm(Norm::L(1.0))?;
    let gq = g.lp_norm(Norm::L(q))?;
    let lg = g1.ln().abs();
    let bracket = lg + (std::f64::consts::E + gq).ln() + (1.0 + lg) * gq.powf((q - 2.0) / 2.0);
    Ok(bmo_norm(f, cubes)? * g1 * bracket)
}

/// `|∫fg| / rhs`; defined as 0 when `‖g‖₁ = 0`.
pub fn log_inequality_ratio(f: &ScalarField, g: &ScalarField, q: f64, cubes: &DyadicCubeSet) -> Result<f64> {
    f.grid().check_same(g.grid())?;
    if !(q > 2.0) {
        return Err(Error::param("q", format!("must exceed 2, got {q}")));
    }
    if g.lp_norm(Norm::L(1.0))? == 0.0 {
        return Ok(0.0);
    }
    let num = f.dot(g).abs();
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok(num / log_inequality_rhs(f, g, q, cubes)?)
}
