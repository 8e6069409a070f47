//! Least squares and componentwise-tuned Lasso via cyclic coordinate
//! descent, plus the generic penalized-quadratic minimizer shared with the
//! limiting objectives.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinearModel, Regime, TuningVector};

pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// Per-coordinate penalty shape `pen_j(u_j)` in
/// `u'Gu - 2 b'u + 2 sum_j w_j pen_j(u_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyKind {
    /// `|u + t| - |t|`.
    Shifted(f64),
    /// `s * u` with `s = +-1`.
    Tilt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyTerm {
    pub weight: f64,
    pub kind: PenaltyKind,
}

impl PenaltyTerm {
    pub fn absolute(weight: f64) -> Self {
        Self {
            weight,
            kind: PenaltyKind::Shifted(0.0),
        }
    }

    fn value(&self, u: f64) -> f64 {
        match self.kind {
            PenaltyKind::Shifted(t) => self.weight * ((u + t).abs() - t.abs()),
            PenaltyKind::Tilt(s) => self.weight * s * u,
        }
    }

    /// Violation of the optimality condition at coordinate value `u` given
    /// the half-gradient residual `r = b_j - (G u)_j`.
    fn kkt_gap(&self, u: f64, r: f64) -> f64 {
        match self.kind {
            PenaltyKind::Shifted(t) => {
                let v = u + t;
                if v == 0.0 {
                    (r.abs() - self.weight).max(0.0)
                } else {
                    (r - self.weight * v.signum()).abs()
                }
            }
            PenaltyKind::Tilt(s) => (r - self.weight * s).abs(),
        }
    }

    /// Exact minimizer of `a u^2 - 2 c u + 2 w pen(u)` with `a > 0`.
    fn coordinate_update(&self, a: f64, c: f64) -> f64 {
        match self.kind {
            PenaltyKind::Shifted(t) => {
                let z = a * t + c;
                let v = soft_threshold(z, self.weight) / a;
                if v == 0.0 {
                    0.0 - t
                } else {
                    v - t
                }
            }
            PenaltyKind::Tilt(s) => (c - self.weight * s) / a,
        }
    }
}

/// `sgn(z) max(|z| - w, 0)`, returning an exact zero inside the threshold.
pub fn soft_threshold(z: f64, w: f64) -> f64 {
    if z > w {
        z - w
    } else if z < -w {
        z + w
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct Minimizer {
    pub point: DVector<f64>,
    pub kkt_gap: Vec<f64>,
    pub sweeps: usize,
}

/// Minimizes `u'Gu - 2 b'u + 2 sum_j w_j pen_j(u_j)` by cyclic coordinate
/// descent until every coordinate's subgradient violation is at most `tol`.
pub fn minimize_penalized_quadratic(
    g: &DMatrix<f64>,
    b: &DVector<f64>,
    terms: &[PenaltyTerm],
    start: DVector<f64>,
    max_sweeps: usize,
    tol: f64,
) -> Result<Minimizer> {
    let p = b.len();
    if g.shape() != (p, p) || terms.len() != p || start.len() != p {
        return Err(Error::Dimension("quadratic, linear and penalty terms must agree".into()));
    }
    if (0..p).any(|j| !(g[(j, j)] > 0.0)) {
        return Err(Error::InvalidInput("quadratic term needs a positive diagonal".into()));
    }
    let mut u = start;
    let mut r = b - g * &u;
    let mut gap = vec![0.0; p];
    for sweep in 0..=max_sweeps {
        r.copy_from(b);
        r.gemv(-1.0, g, &u, 1.0);
        let mut worst = 0.0f64;
        for j in 0..p {
            gap[j] = terms[j].kkt_gap(u[j], r[j]);
            worst = worst.max(gap[j]);
        }
        if worst <= tol {
            return Ok(Minimizer {
                point: u,
                kkt_gap: gap,
                sweeps: sweep,
            });
        }
        if sweep == max_sweeps {
            return Err(Error::NonConvergence {
                iterations: max_sweeps,
                violation: worst,
            });
        }
        for j in 0..p {
            let a = g[(j, j)];
            let c = r[j] + a * u[j];
            let new = terms[j].coordinate_update(a, c);
            let delta = new - u[j];
            if delta != 0.0 {
                u[j] = new;
                r.axpy(-delta, &g.column(j), 1.0);
            }
        }
    }
    unreachable!()
}

/// Lasso fit together with its optimality certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoSolution {
    #[serde(rename = "beta", with = "crate::io::vector")]
    pub beta_hat: DVector<f64>,
    pub active_set: Vec<bool>,
    pub kkt_gap: Vec<f64>,
    pub iterations: usize,
    pub objective_value: f64,
}

/// Ordinary least squares `argmin |y - X b|^2`.
pub fn solve_ls(model: &LinearModel) -> Result<DVector<f64>> {
    let svd = model.x().clone().svd(true, true);
    svd.solve(model.y(), 0.0).map_err(|e| Error::InvalidInput(e.into()))
}

/// Precomputed Gram form of a design, for repeated fits with different
/// responses.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    xtx: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    penalties: Vec<PenaltyTerm>,
    lambda: Vec<f64>,
    max_sweeps: usize,
}

impl LassoProblem {
    pub fn new(x: &DMatrix<f64>, lambda: &[f64]) -> Result<Self> {
        if x.ncols() != lambda.len() {
            return Err(Error::Dimension(format!(
                "{} penalties for {} coefficients",
                lambda.len(),
                x.ncols()
            )));
        }
        if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidTuning("penalties must be finite and non-negative".into()));
        }
        let xtx = x.tr_mul(x);
        let chol = Cholesky::new(xtx.clone()).ok_or(Error::Singular { ratio: 0.0 })?;
        Ok(Self {
            xtx,
            chol,
            penalties: lambda.iter().map(|l| PenaltyTerm::absolute(*l)).collect(),
            lambda: lambda.to_vec(),
            max_sweeps: DEFAULT_MAX_SWEEPS,
        })
    }

    pub fn with_max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn xtx(&self) -> &DMatrix<f64> {
        &self.xtx
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// LS estimate from `X'y`.
    pub fn ls_from_xty(&self, xty: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(xty)
    }

    /// Lasso coefficients from `X'y` alone.
    pub fn fit_xty(&self, xty: &DVector<f64>) -> Result<DVector<f64>> {
        let tol = 1e-8 * xty.amax().max(1.0);
        let start = self.ls_from_xty(xty);
        Ok(minimize_penalized_quadratic(&self.xtx, xty, &self.penalties, start, self.max_sweeps, tol)?.point)
    }

    /// Lasso fit from the sufficient statistics `X'y` and `y'y`, warm
    /// started at the LS estimate.
    pub fn solve_xty(&self, xty: &DVector<f64>, yty: f64) -> Result<LassoSolution> {
        let tol = 1e-8 * xty.amax().max(1.0);
        let start = self.ls_from_xty(xty);
        let fit = minimize_penalized_quadratic(&self.xtx, xty, &self.penalties, start, self.max_sweeps, tol)?;
        let beta = fit.point;
        let penalty: f64 = self
            .penalties
            .iter()
            .zip(beta.iter())
            .map(|(t, b)| t.value(*b))
            .sum();
        let objective_value = yty - 2.0 * xty.dot(&beta) + beta.dot(&(&self.xtx * &beta)) + 2.0 * penalty;
        Ok(LassoSolution {
            active_set: beta.iter().map(|b| *b != 0.0).collect(),
            kkt_gap: fit.kkt_gap,
            iterations: fit.sweeps,
            objective_value,
            beta_hat: beta,
        })
    }
}

/// Minimizer of `|y - X b|^2 + 2 sum_j lambda_j |b_j|` for raw penalties.
pub fn solve_lasso_penalties(model: &LinearModel, lambda: &[f64]) -> Result<LassoSolution> {
    let problem = LassoProblem::new(model.x(), lambda)?;
    problem.solve_xty(&model.x().tr_mul(model.y()), model.y().norm_squared())
}

/// Componentwise-tuned Lasso for a finite-sample tuning vector.
pub fn solve_lasso(model: &LinearModel, tuning: &TuningVector) -> Result<LassoSolution> {
    match tuning.regime() {
        Regime::FiniteSample { n } if *n == model.n() => solve_lasso_penalties(model, tuning.lambda()),
        Regime::FiniteSample { n } => Err(Error::Dimension(format!(
            "tuning refers to n = {n}, model has n = {}",
            model.n()
        ))),
        other => Err(Error::WrongRegime(other.name())),
    }
}

/// `|(X'X (b_L - b_LS))_j|`, bounded by `lambda_j` at any Lasso solution.
pub fn ls_lasso_gap(model: &LinearModel, tuning: &TuningVector, sol: &LassoSolution) -> Result<Vec<f64>> {
    if tuning.dim() != model.p() || sol.beta_hat.len() != model.p() {
        return Err(Error::Dimension("solution, tuning and model must agree".into()));
    }
    let ls = solve_ls(model)?;
    let diff = &sol.beta_hat - ls;
    Ok((model.x().tr_mul(model.x()) * diff).iter().map(|v| v.abs()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assert_close;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_model(rng: &mut ChaCha8Rng, n: usize, p: usize) -> LinearModel {
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal) * 2.0);
        LinearModel::new(x, y, 1.0).unwrap()
    }

    #[test]
    fn soft_threshold_is_exact_zero() {
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-1.0, 1.0), 0.0);
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    }

    #[test]
    fn ls_interpolates_noise_free_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(30, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let model = LinearModel::new(x.clone(), &x * &beta, 1.0).unwrap();
        let ls = solve_ls(&model).unwrap();
        assert!((ls - beta).amax() < 1e-10);

        let ident = LinearModel::new(DMatrix::identity(3, 3), DVector::from_vec(vec![3.0, -1.0, 2.0]), 1.0).unwrap();
        assert!((solve_ls(&ident).unwrap() - ident.y()).amax() < 1e-14);
    }

    #[test]
    fn ls_satisfies_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let model = random_model(&mut rng, 25, 4);
            let ls = solve_ls(&model).unwrap();
            let xty = model.x().tr_mul(model.y());
            let normal = model.x().tr_mul(&(model.y() - model.x() * ls));
            assert!(normal.amax() <= 1e-8 * xty.norm());
        }
    }

    #[test]
    fn zero_penalty_matches_ls() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = random_model(&mut rng, 40, 5);
        let t = TuningVector::finite_sample(vec![0.0; 5], 40).unwrap();
        let sol = solve_lasso(&model, &t).unwrap();
        assert!((&sol.beta_hat - solve_ls(&model).unwrap()).amax() < 1e-8);
        assert!(sol.active_set.iter().all(|a| *a));
        let gap = ls_lasso_gap(&model, &t, &sol).unwrap();
        assert!(gap.iter().all(|g| *g < 1e-8));
    }

    #[test]
    fn orthogonal_design_soft_thresholds() {
        // X'X = n I with n = 4
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![10.0, 2.0, -1.0, 0.5]);
        let model = LinearModel::new(x, y, 1.0).unwrap();
        let lambda = vec![3.0, 20.0];
        let t = TuningVector::finite_sample(lambda.clone(), 4).unwrap();
        let sol = solve_lasso(&model, &t).unwrap();
        let ls = solve_ls(&model).unwrap();
        for j in 0..2 {
            let expected = ls[j].signum() * (ls[j].abs() - lambda[j] / 4.0).max(0.0);
            assert_close!(sol.beta_hat[j], expected, 1e-12);
        }
        assert_eq!(sol.beta_hat[1], 0.0);
        assert_eq!(sol.active_set, vec![true, false]);
        let gap = ls_lasso_gap(&model, &t, &sol).unwrap();
        assert_close!(gap[0], lambda[0], 1e-9);
        assert!(gap[1] <= lambda[1]);
    }

    #[test]
    fn matches_grid_search_on_example_design() {
        // X = [sqrt(2) C^{1/2}; -sqrt(2) C^{1/2}] gives X'X / 4 = C exactly
        let c = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]);
        let root = crate::model::GramData::from_matrix(c.clone()).unwrap().c_sqrt().clone() * 2f64.sqrt();
        let x = DMatrix::from_fn(4, 2, |i, j| if i < 2 { root[(i, j)] } else { -root[(i - 2, j)] });
        let model = LinearModel::new(x.clone(), DVector::from_vec(vec![1.3, 0.2, -0.4, 0.9]), 1.0).unwrap();
        assert!((x.tr_mul(&x) / 4.0 - c).amax() < 1e-12);
        let lambda = [0.8, 0.3];
        let sol = solve_lasso_penalties(&model, &lambda).unwrap();
        let g = x.tr_mul(&x);
        let xty = x.tr_mul(model.y());
        let yty = model.y().norm_squared();
        let objective = |b0: f64, b1: f64| {
            yty - 2.0 * (b0 * xty[0] + b1 * xty[1])
                + g[(0, 0)] * b0 * b0
                + 2.0 * g[(0, 1)] * b0 * b1
                + g[(1, 1)] * b1 * b1
                + 2.0 * (lambda[0] * b0.abs() + lambda[1] * b1.abs())
        };
        let ls = solve_ls(&model).unwrap();
        let h = 1e-3;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in -1500..=1500 {
            for k in -1500..=1500 {
                let (b0, b1) = (ls[0] + i as f64 * h, ls[1] + k as f64 * h);
                let v = objective(b0, b1);
                if v < best.0 {
                    best = (v, b0, b1);
                }
            }
        }
        assert!((sol.beta_hat[0] - best.1).abs() <= h);
        assert!((sol.beta_hat[1] - best.2).abs() <= h);
        assert!(sol.objective_value <= best.0 + 1e-12);
        assert_close!(sol.objective_value, objective(sol.beta_hat[0], sol.beta_hat[1]), 1e-10);
    }

    #[test]
    fn rejects_wrong_regime_and_size() {
        let model = LinearModel::new(DMatrix::identity(2, 2), DVector::zeros(2), 1.0).unwrap();
        let t = TuningVector::conservative(vec![1.0, 1.0]).unwrap();
        assert!(matches!(solve_lasso(&model, &t), Err(Error::WrongRegime(_))));
        let t = TuningVector::finite_sample(vec![1.0, 1.0], 3).unwrap();
        assert!(matches!(solve_lasso(&model, &t), Err(Error::Dimension(_))));
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_model(&mut rng, 30, 4);
        let problem = LassoProblem::new(model.x(), &[0.5; 4]).unwrap().with_max_sweeps(0);
        let xty = model.x().tr_mul(model.y());
        // LS warm start violates the KKT conditions whenever a penalty is active
        match problem.solve_xty(&xty, 0.0) {
            Err(Error::NonConvergence { iterations, .. }) => assert_eq!(iterations, 0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn tilted_quadratic_has_closed_form() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let b = DVector::from_vec(vec![0.4, -1.0]);
        let terms = [
            PenaltyTerm { weight: 0.7, kind: PenaltyKind::Tilt(1.0) },
            PenaltyTerm { weight: 0.2, kind: PenaltyKind::Tilt(-1.0) },
        ];
        let m = minimize_penalized_quadratic(&g, &b, &terms, DVector::zeros(2), 1000, 1e-12).unwrap();
        let expected = g.clone().try_inverse().unwrap() * (b - DVector::from_vec(vec![0.7, -0.2]));
        assert!((m.point - expected).amax() < 1e-10);
    }
}
