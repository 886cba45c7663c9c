use crate::constitutive::{pow, ConstitutiveModel, RegularizationParams};
use crate::coupling::Trajectory;
use crate::error::{Error, Result};
use crate::fields::{gradient, ScalarField};

/// Settings for [`gronwall_compare`].
#[derive(Clone, Debug, PartialEq)]
pub struct GronwallOptions {
    /// Initial values `η` of the comparison solutions, decreasing toward 0.
    pub etas: Vec<f64>,
    /// Absolute slack added to every envelope.
    pub abs_tol: f64,
    /// Optional per-sample slack (same length as the series).
    pub budget: Option<Vec<f64>>,
}

impl Default for GronwallOptions {
    fn default() -> Self {
        GronwallOptions {
            etas: (1..=8).map(|i| 10f64.powi(-2 * i)).collect(),
            abs_tol: 1e-12,
            budget: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallReport {
    pub pass: bool,
    /// `(η, max_t (y(t) − z_η(t) − slack(t)))`; nonpositive means below the envelope.
    pub margins: Vec<(f64, f64)>,
}

/// `s' = C(|s| + 1)` for `s = ln z`, advanced with RK4.
fn rk4_log(s: f64, c: f64, h: f64) -> f64 {
    let f = |s: f64| c * (s.abs() + 1.0);
    let k1 = f(s);
    let k2 = f(s + 0.5 * h * k1);
    let k3 = f(s + 0.5 * h * k2);
    let k4 = f(s + h * k3);
    s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Solution of `z' = Cz(|ln z| + 1)`, `z(0) = η`, sampled at `times` (which start at 0).
pub fn comparison_solution(eta: f64, c: f64, times: &[f64]) -> Vec<f64> {
    if eta == 0.0 {
        return vec![0.0; times.len()];
    }
    let mut s = eta.ln();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / 1e-3).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                s = rk4_log(s, c, h);
            }
            t = target;
        }
        out.push(s.exp());
    }
    out
}

/// PASS when the series `y` (pairs `(t, y)`, `y(0) = 0`) lies below the
/// comparison solution from every `η` in the ladder, up to the slack.
pub fn gronwall_compare(y: &[(f64, f64)], c: f64, opts: &GronwallOptions) -> GronwallReport {
    let times: Vec<f64> = y.iter().map(|p| p.0).collect();
    let margins: Vec<(f64, f64)> = opts
        .etas
        .iter()
        .map(|&eta| {
            let z = comparison_solution(eta, c, &times);
            let worst = y
                .iter()
                .enumerate()
                .map(|(i, &(_, yi))| {
                    let slack = opts.abs_tol + opts.budget.as_ref().map_or(0.0, |b| b[i]);
                    yi - z[i] - slack
                })
                .fold(f64::NEG_INFINITY, f64::max);
            (eta, worst)
        })
        .collect();
    GronwallReport {
        pass: margins.iter().all(|m| m.1 <= 0.0),
        margins,
    }
}

/// `y(t) = |∫ρ_a^γ − ∫ρ_b^γ|` between two ladder rungs, plus the budget
/// `Σ_r ∫_0^t δ_r(γ∫ρ_r^{γ−1+β} + γ(γ−1)∫ρ_r^{γ−2}|∇ρ_r|²)` accumulated by
/// the δ-terms of each rung.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderDefect {
    pub series: Vec<(f64, f64)>,
    pub budget: Vec<f64>,
}

fn delta_rate(rho: &ScalarField, gamma: f64, params: &RegularizationParams) -> f64 {
    if params.delta == 0.0 {
        return 0.0;
    }
    let beta = params.beta as f64;
    let sink = rho.map(|r| gamma * pow(r, gamma - 1.0 + beta)).integral();
    let diffusion = if gamma == 1.0 {
        0.0
    } else {
        let g = gradient(rho);
        let mut sq = ScalarField::zeros(rho.grid());
        for c in g.components() {
            sq = sq.zip_map(c, |a, b| a + b * b);
        }
        sq.zip_map(rho, |s, r| gamma * (gamma - 1.0) * pow(r, gamma - 2.0) * s).integral()
    };
    params.delta * (sink + diffusion)
}

pub fn ladder_defect(
    model: &ConstitutiveModel,
    a: (&Trajectory, &RegularizationParams),
    b: (&Trajectory, &RegularizationParams),
) -> Result<LadderDefect> {
    let (ta, pa) = a;
    let (tb, pb) = b;
    if ta.times.len() != tb.times.len() || ta.times.iter().zip(&tb.times).any(|(x, y)| (x - y).abs() > 1e-12) {
        return Err(Error::param("ladder_defect", "rungs use different time grids"));
    }
    let gamma = model.gamma();
    let mut series = Vec::with_capacity(ta.times.len());
    let mut rates = Vec::with_capacity(ta.times.len());
    for ((t, ra), rb) in ta.times.iter().zip(&ta.rho).zip(&tb.rho) {
        let y = (model.pressure(ra)?.integral() - model.pressure(rb)?.integral()).abs();
        series.push((*t, y));
        rates.push(delta_rate(ra, gamma, pa) + delta_rate(rb, gamma, pb));
    }
    let dt = ta.dt();
    let mut acc = 0.0;
    let budget = std::iter::once(0.0)
        .chain(rates.windows(2).map(|w| {
            acc += 0.5 * dt * (w[0] + w[1]);
            acc
        }))
        .collect();
    Ok(LadderDefect { series, budget })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_closed_form_below_one() {
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        for &(eta, c) in &[(1e-6, 1.0), (1e-3, 0.5), (0.1, 2.0)] {
            let z = comparison_solution(eta, c, &times);
            for (t, zi) in times.iter().zip(&z) {
                let exact = (1.0 - (1.0 - f64::ln(eta)) * (-c * t).exp()).exp();
                if exact <= 1.0 {
                    assert!((zi - exact).abs() <= 1e-10 * exact, "eta={eta} t={t}");
                }
            }
        }
    }

    #[test]
    fn zero_series_passes() {
        let y: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 * 0.1, 0.0)).collect();
        assert!(gronwall_compare(&y, 1.0, &GronwallOptions::default()).pass);
    }

    #[test]
    fn linear_series_fails_for_small_constant() {
        let y: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 * 0.1, i as f64 * 0.1)).collect();
        let r = gronwall_compare(&y, 1.0, &GronwallOptions::default());
        assert!(!r.pass);
        assert!(r.margins.last().unwrap().1 > 0.0);
    }

    #[test]
    fn identical_rungs_have_zero_defect() {
        use crate::coupling::{solve_fixed_point, CoupledConfig};
        use crate::fields::Grid;
        let g = Grid::new(2, 16).unwrap();
        let model = ConstitutiveModel::default_with_gamma(2.0).unwrap();
        let params = RegularizationParams::new(1e-2, 1e-3, 2, 4);
        let cfg = CoupledConfig::new(model.clone(), params, g.clone(), 1e-2, 0.05);
        let rho0 = ScalarField::from_fn(&g, |x| 1.0 + 0.3 * x[0].cos());
        let t = solve_fixed_point(&cfg, &rho0).unwrap();
        let d = ladder_defect(&model, (&t, &params), (&t, &params)).unwrap();
        assert!(d.series.iter().all(|p| p.1 == 0.0));
        assert_eq!(d.budget[0], 0.0);
        assert!(d.budget.windows(2).all(|w| w[1] > w[0]));
        assert!(gronwall_compare(&d.series, 1.0, &GronwallOptions::default()).pass);
    }
}
