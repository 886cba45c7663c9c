//! Minimization of the convex momentum functional
//!
//! ```text
//! I[v] = ∫ F(𝔻v) + ½|∇v|² + Λ(div v) + ε/2 |Δ^m v|² − ρ̃^γ div v − f·v
//! ```
//!
//! over mean-zero velocities whose modes lie in the 2/3 band.

use rustfft::num_complex::Complex64;

use crate::constitutive::{ConstitutiveModel, RegularizationParams};
use crate::error::{Error, Result};
use crate::fields::spectral::in_band;
use crate::fields::{jacobian, Grid, ScalarField, Spectrum, VectorField};

#[derive(Clone, Debug)]
pub struct MomentumProblem {
    pub model: ConstitutiveModel,
    pub params: RegularizationParams,
    pub rho_gamma: ScalarField,
    /// Extra body force, used for manufactured solutions.
    pub forcing: Option<VectorField>,
}

impl MomentumProblem {
    pub fn new(
        model: ConstitutiveModel,
        params: RegularizationParams,
        rho_gamma: ScalarField,
    ) -> Result<Self> {
        params.validate(model.gamma(), rho_gamma.grid().dim())?;
        rho_gamma.ensure_finite("rho_gamma")?;
        let (index, min) = rho_gamma.argmin();
        if min < 0.0 {
            return Err(Error::NegativeDensity { min, index });
        }
        Ok(MomentumProblem {
            model,
            params,
            rho_gamma,
            forcing: None,
        })
    }

    /// Datum `ρ^γ` from a density.
    pub fn from_density(
        model: ConstitutiveModel,
        params: RegularizationParams,
        rho: &ScalarField,
    ) -> Result<Self> {
        let rho_gamma = model.pressure(rho)?;
        Self::new(model, params, rho_gamma)
    }

    pub fn with_forcing(mut self, forcing: VectorField) -> Result<Self> {
        self.rho_gamma.grid().check_same(forcing.grid())?;
        forcing.ensure_finite("forcing")?;
        self.forcing = Some(forcing);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        self.rho_gamma.grid()
    }

    /// `ε = 0`: the W^{1,∞} certificate is not reported.
    pub fn formal_limit(&self) -> bool {
        self.params.epsilon == 0.0
    }
}

#[derive(Clone, Debug)]
pub struct MomentumOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub initial_guess: Option<VectorField>,
}

impl Default for MomentumOptions {
    fn default() -> Self {
        MomentumOptions {
            tol: 1e-9,
            max_iter: 500,
            initial_guess: None,
        }
    }
}

/// One row of the per-solve log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct MomentumSolution {
    pub u: VectorField,
    /// `‖M⁻¹G(u)‖_{L²}` with `M` the quadratic-part preconditioner.
    pub residual_norm: f64,
    pub energy_value: f64,
    pub iterations: usize,
    pub history: Vec<IterRecord>,
}

/// Norms entering the a priori velocity estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumCertificate {
    pub grad_l2: f64,
    /// `√ε ‖Δ^m u‖_{L²}`.
    pub eps_lap_l2: f64,
    /// `‖u‖_{W^{1,∞}}` as in [`crate::continuity::w1inf_norm`]; absent when `ε = 0`.
    pub w1inf: Option<f64>,
    pub datum_l2: f64,
}

type Coeffs = Vec<Vec<Complex64>>;

/// Spectral evaluation of `I` and its band-projected gradient.
struct Evaluator<'a> {
    problem: &'a MomentumProblem,
    grid: Grid,
    k: Vec<[f64; 3]>,
    k2: Vec<f64>,
    active: Vec<bool>,
    precond: Vec<f64>,
    rho_hat: Vec<Complex64>,
    force_hat: Option<Coeffs>,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a MomentumProblem) -> Self {
        let grid = problem.grid().clone();
        let cutoff = grid.dealias_cutoff();
        let eps = problem.params.epsilon;
        let m = problem.params.m as i32;
        let mut k = Vec::with_capacity(grid.len());
        let mut k2 = Vec::with_capacity(grid.len());
        let mut active = Vec::with_capacity(grid.len());
        let mut precond = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            let kv = crate::fields::spectral::wavevector(&grid, flat);
            let kk = [kv[0] as f64, kv[1] as f64, kv[2] as f64];
            let q = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
            let on = flat != 0 && in_band(kv, cutoff);
            k.push(kk);
            k2.push(q);
            active.push(on);
            precond.push(if on { 1.0 / (q + eps * q.powi(2 * m)) } else { 0.0 });
        }
        let rho_hat = Spectrum::forward(&problem.rho_gamma).coefficients().to_vec();
        let force_hat = problem.forcing.as_ref().map(|f| {
            f.components()
                .iter()
                .map(|c| Spectrum::forward(c).coefficients().to_vec())
                .collect()
        });
        Evaluator {
            problem,
            grid,
            k,
            k2,
            active,
            precond,
            rho_hat,
            force_hat,
        }
    }

    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn to_coeffs(&self, v: &VectorField) -> Coeffs {
        v.components()
            .iter()
            .map(|c| {
                let mut data = Spectrum::forward(c).coefficients().to_vec();
                for (x, &on) in data.iter_mut().zip(&self.active) {
                    if !on {
                        *x = Complex64::new(0.0, 0.0);
                    }
                }
                data
            })
            .collect()
    }

    fn to_field(&self, c: &Coeffs) -> VectorField {
        VectorField::from_components_unchecked(c.iter().map(|d| self.inverse(d.clone())).collect())
    }

    fn inverse(&self, data: Vec<Complex64>) -> ScalarField {
        let mut spec = Spectrum::zeros(&self.grid);
        spec.coefficients_mut().copy_from_slice(&data);
        spec.inverse()
    }

    fn forward(&self, f: &ScalarField) -> Vec<Complex64> {
        Spectrum::forward(f).coefficients().to_vec()
    }

    /// `∫ a·b` of two band-limited fields.
    fn dot(&self, a: &Coeffs, b: &Coeffs) -> f64 {
        let s: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p * q.conj()).re).sum::<f64>())
            .sum();
        s * self.grid.volume()
    }

    fn precondition(&self, g: &Coeffs) -> Coeffs {
        g.iter()
            .map(|c| c.iter().zip(&self.precond).map(|(x, w)| x * w).collect())
            .collect()
    }

    /// `I[v]` and `∇I[v]`.
    fn eval(&self, v: &Coeffs) -> Result<(f64, Coeffs)> {
        let d = self.dim();
        let n = self.grid.len();
        let model = &self.problem.model;
        let eps = self.problem.params.epsilon;
        let m = self.problem.params.m as i32;
        let im = Complex64::new(0.0, 1.0);

        // Physical 𝔻v, upper triangle only.
        let mut dv: Vec<Vec<f64>> = Vec::new();
        let mut pairs = Vec::new();
        for i in 0..d {
            for j in i..d {
                let data: Vec<Complex64> = (0..n)
                    .map(|p| 0.5 * im * (self.k[p][j] * v[i][p] + self.k[p][i] * v[j][p]))
                    .collect();
                dv.push(self.inverse(data).into_values());
                pairs.push((i, j));
            }
        }

        let mut pointwise = 0.0;
        let mut stress = vec![vec![0.0; n]; pairs.len()];
        let mut q = vec![0.0; n];
        for p in 0..n {
            let mut norm2 = 0.0;
            let mut div = 0.0;
            for (c, &(i, j)) in pairs.iter().enumerate() {
                let x = dv[c][p];
                if i == j {
                    norm2 += x * x;
                    div += x;
                } else {
                    norm2 += 2.0 * x * x;
                }
            }
            let z = norm2.sqrt();
            let mu = model.mu0_at(z);
            for c in 0..pairs.len() {
                stress[c][p] = mu * dv[c][p];
            }
            pointwise += model.potential_f_at(z) + model.potential_lambda(div);
            q[p] = model.lambda_flux(div);
        }
        let mut energy = pointwise / n as f64;

        let s_hat: Vec<Vec<Complex64>> = stress
            .into_iter()
            .map(|s| self.forward(&ScalarField::from_vec_unchecked(&self.grid, s)))
            .collect();
        let mut q_hat = self.forward(&ScalarField::from_vec_unchecked(&self.grid, q));
        for (x, r) in q_hat.iter_mut().zip(&self.rho_hat) {
            *x -= r;
        }
        let pair_index = |i: usize, j: usize| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            pairs.iter().position(|&pr| pr == (a, b)).unwrap()
        };

        let mut grad: Coeffs = vec![vec![Complex64::new(0.0, 0.0); n]; d];
        for p in 0..n {
            if !self.active[p] {
                continue;
            }
            let k = self.k[p];
            let q2 = self.k2[p];
            let bi = eps * q2.powi(2 * m);
            let mut kv = Complex64::new(0.0, 0.0);
            for i in 0..d {
                let vi = v[i][p];
                energy += 0.5 * (q2 + bi) * vi.norm_sqr();
                kv += k[i] * vi;
                let mut g = (q2 + bi) * vi - im * k[i] * q_hat[p];
                for j in 0..d {
                    g -= im * k[j] * s_hat[pair_index(i, j)][p];
                }
                if let Some(f) = &self.force_hat {
                    g -= f[i][p];
                    energy -= (f[i][p].conj() * vi).re;
                }
                grad[i][p] = g;
            }
            energy -= (self.rho_hat[p].conj() * im * kv).re;
        }
        let energy = energy * self.grid.volume();
        if !energy.is_finite() {
            return Err(Error::NonFiniteEnergy);
        }
        Ok((energy, grad))
    }
}

fn axpy(a: f64, x: &Coeffs, y: &Coeffs) -> Coeffs {
    x.iter()
        .zip(y)
        .map(|(xc, yc)| xc.iter().zip(yc).map(|(p, q)| a * p + q).collect())
        .collect()
}

fn scale(a: f64, x: &Coeffs) -> Coeffs {
    x.iter().map(|c| c.iter().map(|p| a * p).collect()).collect()
}

/// `I[v]`.
pub fn energy(problem: &MomentumProblem, v: &VectorField) -> Result<f64> {
    let ev = Evaluator::new(problem);
    ev.eval(&ev.to_coeffs(v)).map(|(e, _)| e)
}

/// Euler–Lagrange residual `G(v)`, restricted to the band and to zero mean.
pub fn energy_gradient(problem: &MomentumProblem, v: &VectorField) -> Result<VectorField> {
    let ev = Evaluator::new(problem);
    let (_, g) = ev.eval(&ev.to_coeffs(v))?;
    Ok(ev.to_field(&g))
}

/// Preconditioned residual `‖M⁻¹G(v)‖_{L²}`, the quantity the solver drives below `tol`.
pub fn residual_norm(problem: &MomentumProblem, v: &VectorField) -> Result<f64> {
    let ev = Evaluator::new(problem);
    let (_, g) = ev.eval(&ev.to_coeffs(v))?;
    let z = ev.precondition(&g);
    Ok(ev.dot(&z, &z).sqrt())
}

pub fn solve_momentum(problem: &MomentumProblem, tol: f64, max_iter: usize) -> Result<MomentumSolution> {
    solve_momentum_with(
        problem,
        &MomentumOptions {
            tol,
            max_iter,
            initial_guess: None,
        },
    )
}

const C1: f64 = 1e-4;
const C2: f64 = 0.1;

struct Point {
    alpha: f64,
    energy: f64,
    slope: f64,
    grad: Coeffs,
}

/// Preconditioned Polak–Ribière+ nonlinear conjugate gradients.
pub fn solve_momentum_with(problem: &MomentumProblem, opts: &MomentumOptions) -> Result<MomentumSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::param("momentum.tol", format!("must be positive, got {}", opts.tol)));
    }
    let ev = Evaluator::new(problem);
    let mut v = match &opts.initial_guess {
        Some(u0) => {
            problem.grid().check_same(u0.grid())?;
            u0.ensure_finite("initial guess")?;
            ev.to_coeffs(u0)
        }
        None => vec![vec![Complex64::new(0.0, 0.0); ev.grid.len()]; ev.dim()],
    };
    let (mut e, mut g) = ev.eval(&v)?;
    let mut z = ev.precondition(&g);
    let mut gz = ev.dot(&g, &z);
    let mut res = ev.dot(&z, &z).sqrt();
    let mut history = vec![IterRecord {
        iter: 0,
        energy: e,
        residual: res,
    }];
    let mut p = scale(-1.0, &z);
    let mut iterations = 0;
    let finish = |v: &Coeffs, e: f64, res: f64, iterations: usize, history: Vec<IterRecord>| MomentumSolution {
        u: ev.to_field(v),
        residual_norm: res,
        energy_value: e,
        iterations,
        history,
    };

    while res > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::MaxIterExceeded {
                max_iter: opts.max_iter,
                best: Box::new(finish(&v, e, res, iterations, history)),
            });
        }
        iterations += 1;
        let mut slope = ev.dot(&g, &p);
        if slope >= 0.0 {
            p = scale(-1.0, &z);
            slope = -gz;
        }
        let found = match line_search(&ev, &v, &p, e, slope)? {
            Some(pt) => Some(pt),
            None => {
                // restart along the preconditioned steepest descent
                p = scale(-1.0, &z);
                line_search(&ev, &v, &p, e, -gz)?
            }
        };
        let Some(pt) = found else {
            return Err(Error::MaxIterExceeded {
                max_iter: iterations,
                best: Box::new(finish(&v, e, res, iterations, history)),
            });
        };
        v = axpy(pt.alpha, &p, &v);
        e = pt.energy;
        let g_new = pt.grad;
        let z_new = ev.precondition(&g_new);
        let gz_new = ev.dot(&g_new, &z_new);
        let beta = ((gz_new - ev.dot(&g, &z_new)) / gz).max(0.0);
        p = axpy(beta, &p, &scale(-1.0, &z_new));
        g = g_new;
        z = z_new;
        gz = gz_new;
        res = ev.dot(&z, &z).sqrt();
        history.push(IterRecord {
            iter: iterations,
            energy: e,
            residual: res,
        });
    }
    Ok(finish(&v, e, res, iterations, history))
}

/// Strong-Wolfe line search with secant interpolation on `φ'`.
fn line_search(ev: &Evaluator, v: &Coeffs, p: &Coeffs, e0: f64, d0: f64) -> Result<Option<Point>> {
    let slack = 1e-14 * (1.0 + e0.abs());
    let probe = |alpha: f64| -> Result<Point> {
        let (energy, grad) = ev.eval(&axpy(alpha, p, v))?;
        let slope = ev.dot(&grad, p);
        Ok(Point {
            alpha,
            energy,
            slope,
            grad,
        })
    };
    let armijo = |pt: &Point| pt.energy <= e0 + C1 * pt.alpha * d0 + slack;
    let curvature = |pt: &Point| pt.slope.abs() <= -C2 * d0;

    let mut prev = Point {
        alpha: 0.0,
        energy: e0,
        slope: d0,
        grad: Vec::new(),
    };
    let mut alpha = 1.0;
    for i in 0..40 {
        let pt = match probe(alpha) {
            Ok(pt) => pt,
            Err(Error::NonFiniteEnergy) => {
                alpha = prev.alpha + 0.1 * (alpha - prev.alpha);
                continue;
            }
            Err(e) => return Err(e),
        };
        if !armijo(&pt) || (i > 0 && pt.energy >= prev.energy + slack) {
            return zoom(prev, pt, &probe, &armijo, &curvature, slack);
        }
        if curvature(&pt) {
            return Ok(Some(pt));
        }
        if pt.slope >= 0.0 {
            return zoom(pt, prev, &probe, &armijo, &curvature, slack);
        }
        let secant = secant_root(&prev, &pt);
        alpha = match secant {
            Some(a) if a > 1.1 * pt.alpha && a < 10.0 * pt.alpha => a,
            _ => 4.0 * pt.alpha,
        };
        prev = pt;
    }
    Ok(None)
}

fn secant_root(a: &Point, b: &Point) -> Option<f64> {
    let ds = b.slope - a.slope;
    if ds == 0.0 {
        return None;
    }
    let x = b.alpha - b.slope * (b.alpha - a.alpha) / ds;
    x.is_finite().then_some(x)
}

fn zoom(
    mut lo: Point,
    mut hi: Point,
    probe: &dyn Fn(f64) -> Result<Point>,
    armijo: &dyn Fn(&Point) -> bool,
    curvature: &dyn Fn(&Point) -> bool,
    slack: f64,
) -> Result<Option<Point>> {
    for _ in 0..60 {
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        if width <= 1e-16 * b.max(1e-300) {
            break;
        }
        let guard = 0.1 * width;
        let trial = match secant_root(&lo, &hi) {
            Some(x) if hi.slope.is_finite() && x > a + guard && x < b - guard => x,
            _ => 0.5 * (a + b),
        };
        let pt = match probe(trial) {
            Ok(pt) => pt,
            Err(Error::NonFiniteEnergy) => {
                hi = Point {
                    alpha: trial,
                    energy: f64::INFINITY,
                    slope: f64::NAN,
                    grad: Vec::new(),
                };
                continue;
            }
            Err(e) => return Err(e),
        };
        if !armijo(&pt) || pt.energy >= lo.energy + slack {
            hi = pt;
        } else {
            if curvature(&pt) {
                return Ok(Some(pt));
            }
            if pt.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = pt;
        }
    }
    // Accept the best decrease found if the bracket collapsed.
    if lo.alpha > 0.0 && !lo.grad.is_empty() {
        return Ok(Some(lo));
    }
    Ok(None)
}

/// `(lhs, rhs)` of the identity obtained by testing the momentum equation with `u`:
/// `∫ μ0|𝔻u|² + |∇u|² + (1+λ)(div u)² + ε|Δ^m u|² = ∫ ρ̃^γ div u + ∫ f·u`.
pub fn energy_identity(problem: &MomentumProblem, u: &VectorField) -> (f64, f64) {
    use crate::fields::{divergence, laplacian_power, symmetric_gradient};
    let model = &problem.model;
    let du = symmetric_gradient(u);
    let norm = du.frobenius();
    let div = divergence(u);
    let grad = jacobian(u);
    let mut lhs = norm.map(|z| model.mu0_at(z) * z * z).integral();
    lhs += grad.frobenius().map(|x| x * x).integral();
    lhs += div.map(|s| (1.0 + model.lambda_at(s.abs())) * s * s).integral();
    if problem.params.epsilon > 0.0 {
        let lap = laplacian_power(u, problem.params.m);
        lhs += problem.params.epsilon * lap.dot(&lap);
    }
    let mut rhs = problem.rho_gamma.dot(&div);
    if let Some(f) = &problem.forcing {
        rhs += f.dot(u);
    }
    (lhs, rhs)
}

pub fn certificate(problem: &MomentumProblem, u: &VectorField) -> MomentumCertificate {
    use crate::fields::laplacian_power;
    let grad = jacobian(u);
    let grad_l2 = grad.frobenius().l2_norm();
    let eps = problem.params.epsilon;
    let eps_lap_l2 = if eps > 0.0 {
        eps.sqrt() * laplacian_power(u, problem.params.m).l2_norm()
    } else {
        0.0
    };
    let w1inf = (!problem.formal_limit()).then(|| crate::continuity::w1inf_norm(u));
    MomentumCertificate {
        grad_l2,
        eps_lap_l2,
        w1inf,
        datum_l2: problem.rho_gamma.l2_norm(),
    }
}

/// Band-limited, mean-zero random velocity reproducible from `seed`.
pub fn random_velocity(grid: &Grid, amplitude: f64, seed: u64) -> VectorField {
    let kmax = (grid.dealias_cutoff()).min(4);
    let comps = (0..grid.dim())
        .map(|i| {
            crate::fields::random_trigonometric(grid, kmax, seed.wrapping_mul(31).wrapping_add(i as u64))
                .scaled(amplitude)
        })
        .collect();
    VectorField::from_components_unchecked(comps).project_zero_mean()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{dealias, divergence_tensor, gradient, laplacian_power, symmetric_gradient};

    fn setup(n: usize, datum: impl Fn([f64; 3]) -> f64) -> MomentumProblem {
        let g = Grid::new(2, n).unwrap();
        let model = ConstitutiveModel::default_with_gamma(2.0).unwrap();
        let params = RegularizationParams::new(1e-3, 1e-4, 2, 4);
        MomentumProblem::new(model, params, ScalarField::from_fn(&g, datum)).unwrap()
    }

    #[test]
    fn zero_velocity_has_zero_energy() {
        let pb = setup(16, |x| 1.0 + x[0].cos());
        assert_eq!(energy(&pb, &VectorField::zeros(pb.grid())).unwrap(), 0.0);
    }

    #[test]
    fn constant_datum_is_solved_immediately() {
        let pb = setup(16, |_| 2.5);
        let g = energy_gradient(&pb, &VectorField::zeros(pb.grid())).unwrap();
        assert!(g.max_abs() < 1e-15);
        let sol = solve_momentum(&pb, 1e-9, 500).unwrap();
        assert!(sol.iterations <= 1);
        assert!(sol.u.max_abs() < 1e-15);
    }

    #[test]
    fn gradient_at_zero_is_pressure_gradient() {
        let pb = setup(16, |x| 1.0 + x[0].cos());
        let g = energy_gradient(&pb, &VectorField::zeros(pb.grid())).unwrap();
        let expected = VectorField::from_fn(pb.grid(), |x| [-x[0].sin(), 0.0, 0.0]);
        assert!(g.sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn energy_dominates_quadratic_part() {
        let pb = setup(16, |x| 1.0 + 0.5 * x[0].cos());
        for seed in 0..4 {
            let v = random_velocity(pb.grid(), 0.5, seed);
            let grad = jacobian(&v).frobenius();
            let lap = laplacian_power(&v, 2);
            let div = crate::fields::divergence(&v);
            let lower = 0.5e-4 * lap.dot(&lap) + 0.5 * grad.dot(&grad) - pb.rho_gamma.dot(&div);
            assert!(energy(&pb, &v).unwrap() >= lower - 1e-12);
        }
    }

    #[test]
    fn directional_derivative_matches_gradient() {
        let pb = setup(16, |x| 1.0 + 0.5 * x[0].cos() * x[1].sin());
        let v = random_velocity(pb.grid(), 0.3, 7);
        let w = random_velocity(pb.grid(), 1.0, 8);
        let g = energy_gradient(&pb, &v).unwrap();
        let exact = g.dot(&w);
        let fd = |h: f64| {
            (energy(&pb, &v.axpy(h, &w)).unwrap() - energy(&pb, &v.axpy(-h, &w)).unwrap()) / (2.0 * h)
        };
        let rich = (4.0 * fd(1e-5) - fd(2e-5)) / 3.0;
        assert!((rich - exact).abs() <= 1e-6 * exact.abs(), "{rich} vs {exact}");
    }

    #[test]
    fn solution_is_critical_and_closes_identity() {
        let pb = setup(32, |x| 1.0 + 0.5 * x[0].cos());
        let sol = solve_momentum(&pb, 1e-10, 500).unwrap();
        assert!(sol.residual_norm <= 1e-10);
        for m in sol.u.means() {
            assert!(m.abs() <= 1e-12);
        }
        for pair in sol.history.windows(2) {
            assert!(pair[1].energy <= pair[0].energy + 1e-14 * (1.0 + pair[0].energy.abs()));
        }
        let (lhs, rhs) = energy_identity(&pb, &sol.u);
        assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs());
        let cert = certificate(&pb, &sol.u);
        assert!(cert.w1inf.is_some() && cert.grad_l2 > 0.0);
    }

    #[test]
    fn manufactured_solution_small() {
        let g = Grid::new(2, 32).unwrap();
        let model = ConstitutiveModel::default_with_gamma(2.0).unwrap();
        let params = RegularizationParams::new(1e-3, 1e-4, 2, 4);
        let exact = VectorField::from_fn(&g, |x| [x[1].sin(), x[0].sin(), 0.0]);
        let s = model.stress(&symmetric_gradient(&exact));
        let div = crate::fields::divergence(&exact);
        let bulk = div.map(|t| model.lambda_flux(t));
        let lap2 = laplacian_power(&exact, 4);
        let f = divergence_tensor(&s)
            .scaled(-1.0)
            .sub(&laplacian_power(&exact, 1))
            .sub(&gradient(&bulk))
            .axpy(1e-4, &lap2);
        let pb = MomentumProblem::new(model, params, ScalarField::zeros(&g))
            .unwrap()
            .with_forcing(dealias(&f))
            .unwrap();
        let sol = solve_momentum(&pb, 1e-12, 500).unwrap();
        assert!(sol.u.sub(&exact).max_abs() < 1e-8);
    }
}
