//! Simulation checks: empirical coverage over grids of true parameters,
//! zero-selection frequencies, the consistent-tuning experiment and direct
//! minimizers of the limiting objectives.
//!
//! Every replication draws one noise vector and reuses it for all grid
//! points, so differences across the grid are low-variance. With Gaussian
//! noise only `X'eps ~ N(0, sigma^2 X'X)` enters the Lasso, and that vector
//! is drawn directly from `p` standard normals.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibrate::consistent_set;
use crate::error::{Error, Result};
use crate::io::{self, SCHEMA};
use crate::lasso::{minimize_penalized_quadratic, LassoProblem, PenaltyKind, PenaltyTerm, DEFAULT_MAX_SWEEPS};
use crate::model::{check_dim, ExtendedReal, ExtendedVector, GramData, LinearModel, Regime, SignVector, TuningVector};
use crate::rng::{fill_normals, try_par_count_chunks};
use crate::shapes::{parallelogram_vertices, ConfidenceShape};

const TAG_PROFILE: u64 = 0x7072_6f66;
const TAG_SELECTION: u64 = 0x7365_6c65;
const TAG_CONSISTENT: u64 = 0x636f_6e73;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// `eps_i = +-sigma` with equal probability.
    TwoPoint,
}

/// Draws `X'eps` for one replication.
struct NoiseSource {
    p: usize,
    kind: NoiseKind,
    sigma: f64,
    /// `sigma` times the Cholesky factor of `X'X`
    factor: DMatrix<f64>,
    x: DMatrix<f64>,
}

impl NoiseSource {
    fn new(x: &DMatrix<f64>, sigma: f64, kind: NoiseKind) -> Result<Self> {
        let xtx = x.tr_mul(x);
        let factor = xtx.cholesky().ok_or(Error::Singular { ratio: 0.0 })?.l() * sigma;
        Ok(Self {
            p: x.ncols(),
            kind,
            sigma,
            factor,
            x: if kind == NoiseKind::TwoPoint { x.clone() } else { DMatrix::zeros(0, 0) },
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, xi: &mut DVector<f64>) -> DVector<f64> {
        match self.kind {
            NoiseKind::Gaussian => {
                fill_normals(rng, xi.as_mut_slice());
                &self.factor * &*xi
            }
            NoiseKind::TwoPoint => {
                let mut out = DVector::zeros(self.p);
                for i in 0..self.x.nrows() {
                    let e = if rng.random::<bool>() { self.sigma } else { -self.sigma };
                    for j in 0..self.p {
                        out[j] += e * self.x[(i, j)];
                    }
                }
                out
            }
        }
    }
}

/// Counts, per grid point, replications whose `scale (b_L - beta)` falls
/// in `shape`.
fn count_hits(
    x: &DMatrix<f64>,
    sigma: f64,
    noise: NoiseKind,
    lambda: &[f64],
    betas: &[DVector<f64>],
    scale: f64,
    shape: &ConfidenceShape,
    reps: usize,
    seed: u64,
    tag: u64,
) -> Result<Vec<u64>> {
    let problem = LassoProblem::new(x, lambda)?;
    let source = NoiseSource::new(x, sigma, noise)?;
    let signal: Vec<DVector<f64>> = betas.iter().map(|b| problem.xtx() * b).collect();
    let p = x.ncols();
    try_par_count_chunks(reps, seed, tag, betas.len(), |_, rng, len| -> Result<Vec<u64>> {
        let mut hits = vec![0u64; betas.len()];
        let mut xi = DVector::zeros(p);
        for _ in 0..len {
            let xte = source.draw(rng, &mut xi);
            for (i, beta) in betas.iter().enumerate() {
                let fit = problem.fit_xty(&(&signal[i] + &xte))?;
                hits[i] += u64::from(shape.contains(&((fit - beta) * scale)));
            }
        }
        Ok(hits)
    })
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        return Err(Error::InvalidInput("need at least two replications".into()));
    }
    Ok(())
}

fn finite_sample_n(model: &LinearModel, tuning: &TuningVector) -> Result<usize> {
    match tuning.regime() {
        Regime::FiniteSample { n } if *n == model.n() => Ok(*n),
        Regime::FiniteSample { n } => Err(Error::Dimension(format!(
            "tuning refers to n = {n}, model has n = {}",
            model.n()
        ))),
        other => Err(Error::WrongRegime(other.name())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub coverage: f64,
    pub std_error: f64,
    pub reps: usize,
}

impl CoverageEstimate {
    fn from_count(hits: u64, reps: usize) -> Self {
        let c = hits as f64 / reps as f64;
        Self {
            coverage: c,
            std_error: (c * (1.0 - c) / reps as f64).sqrt(),
            reps,
        }
    }
}

/// Fraction of replications with `sqrt(n) (b_L - beta)` in `shape`, i.e.
/// with `beta` in the confidence set `b_L - n^{-1/2} shape`.
pub fn empirical_coverage(
    model: &LinearModel,
    beta: &DVector<f64>,
    tuning: &TuningVector,
    shape: &ConfidenceShape,
    reps: usize,
    seed: u64,
) -> Result<CoverageEstimate> {
    let profile = coverage_profile(model, tuning, shape, &GridSpec::explicit(vec![beta.clone()]), reps, seed)?;
    Ok(profile.points[0].estimate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridLayout {
    /// Product grid for `p <= 2`, sign-pattern diagonals otherwise.
    #[default]
    Auto,
    /// Every coordinate ranges over `{0, +-m}` independently.
    Product,
    /// `m d` for every magnitude `m` and sign vector `d`.
    Diagonal,
}

/// True parameters to evaluate. Magnitudes are in units that the caller
/// supplies (`n^{-1/2}` for finite samples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default = "default_magnitudes")]
    pub magnitudes: Vec<f64>,
    #[serde(default)]
    pub layout: GridLayout,
    /// Extra points, used as given (no unit scaling).
    #[serde(default, with = "io::vector_list")]
    pub points: Vec<DVector<f64>>,
}

fn default_magnitudes() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0]
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            magnitudes: default_magnitudes(),
            layout: GridLayout::Auto,
            points: Vec::new(),
        }
    }
}

impl GridSpec {
    /// Only the given points.
    pub fn explicit(points: Vec<DVector<f64>>) -> Self {
        Self {
            magnitudes: Vec::new(),
            layout: GridLayout::Auto,
            points,
        }
    }

    pub fn points(&self, p: usize, unit: f64) -> Result<Vec<DVector<f64>>> {
        if self.magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidInput("grid magnitudes must be finite and non-negative".into()));
        }
        if self.points.iter().any(|b| b.len() != p) {
            return Err(Error::Dimension("explicit grid point".into()));
        }
        let mut mags: Vec<f64> = self.magnitudes.clone();
        mags.sort_by(f64::total_cmp);
        mags.dedup();
        let mut out = Vec::new();
        if !mags.is_empty() {
            let layout = match self.layout {
                GridLayout::Auto if p <= 2 => GridLayout::Product,
                GridLayout::Auto => GridLayout::Diagonal,
                other => other,
            };
            match layout {
                GridLayout::Product => {
                    let mut values = Vec::new();
                    for m in &mags {
                        values.push(m * unit);
                        if *m > 0.0 {
                            values.push(-m * unit);
                        }
                    }
                    let total = values.len().checked_pow(p as u32).filter(|t| *t <= 1_000_000).ok_or_else(|| {
                        Error::InvalidInput("product grid too large; use the diagonal layout".into())
                    })?;
                    for idx in 0..total {
                        let mut rest = idx;
                        let mut b = DVector::zeros(p);
                        for j in (0..p).rev() {
                            b[j] = values[rest % values.len()];
                            rest /= values.len();
                        }
                        out.push(b);
                    }
                }
                _ => {
                    if mags[0] == 0.0 {
                        out.push(DVector::zeros(p));
                    }
                    for m in mags.iter().filter(|m| **m > 0.0) {
                        for d in SignVector::enumerate(p) {
                            out.push(d.to_vector() * (m * unit));
                        }
                    }
                }
            }
        }
        out.extend(self.points.iter().cloned());
        if out.is_empty() {
            return Err(Error::InvalidInput("empty grid".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    #[serde(with = "io::vector")]
    pub beta: DVector<f64>,
    #[serde(flatten)]
    pub estimate: CoverageEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageProfile {
    pub schema: String,
    pub points: Vec<ProfilePoint>,
    pub reps: usize,
    pub seed: u64,
    pub min_index: usize,
    #[serde(with = "io::vector")]
    pub min_point: DVector<f64>,
    pub min_value: f64,
    pub min_std_error: f64,
}

impl CoverageProfile {
    fn from_counts(betas: Vec<DVector<f64>>, counts: Vec<u64>, reps: usize, seed: u64) -> Self {
        let points: Vec<ProfilePoint> = betas
            .into_iter()
            .zip(counts)
            .map(|(beta, c)| ProfilePoint {
                beta,
                estimate: CoverageEstimate::from_count(c, reps),
            })
            .collect();
        let mut min_index = 0;
        for (i, pt) in points.iter().enumerate() {
            if pt.estimate.coverage < points[min_index].estimate.coverage {
                min_index = i;
            }
        }
        Self {
            schema: SCHEMA.to_string(),
            min_point: points[min_index].beta.clone(),
            min_value: points[min_index].estimate.coverage,
            min_std_error: points[min_index].estimate.std_error,
            min_index,
            points,
            reps,
            seed,
        }
    }

    /// One row per grid point: `beta_1..beta_p,coverage,stderr`.
    pub fn to_csv(&self) -> String {
        let p = self.min_point.len();
        let mut out = String::new();
        for j in 1..=p {
            out.push_str(&format!("beta_{j},"));
        }
        out.push_str("coverage,stderr\n");
        for pt in &self.points {
            for b in pt.beta.iter() {
                out.push_str(&format!("{b},"));
            }
            out.push_str(&format!("{},{}\n", pt.estimate.coverage, pt.estimate.std_error));
        }
        out
    }
}

/// Empirical coverage of `b_L - n^{-1/2} shape` at every grid point, with
/// grid magnitudes in units of `n^{-1/2}`.
pub fn coverage_profile(
    model: &LinearModel,
    tuning: &TuningVector,
    shape: &ConfidenceShape,
    grid: &GridSpec,
    reps: usize,
    seed: u64,
) -> Result<CoverageProfile> {
    check_reps(reps)?;
    let n = finite_sample_n(model, tuning)?;
    let p = model.p();
    if shape.dim() != p || tuning.dim() != p {
        return Err(Error::Dimension("shape, tuning and model must agree".into()));
    }
    let root_n = (n as f64).sqrt();
    let betas = grid.points(p, 1.0 / root_n)?;
    let counts = count_hits(
        model.x(),
        model.sigma(),
        NoiseKind::Gaussian,
        tuning.lambda(),
        &betas,
        root_n,
        shape,
        reps,
        seed,
        TAG_PROFILE,
    )?;
    Ok(CoverageProfile::from_counts(betas, counts, reps, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    #[serde(with = "io::vector")]
    pub beta: DVector<f64>,
    /// Per coordinate, fraction of replications with an exact zero.
    pub zero_frequency: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema: String,
    pub rows: Vec<SelectionRow>,
    pub reps: usize,
    pub seed: u64,
    /// Largest zero frequency over grid points and coordinates.
    pub max_frequency: f64,
}

/// How often each Lasso coordinate is exactly zero at each true parameter.
pub fn selection_frequency(
    model: &LinearModel,
    tuning: &TuningVector,
    beta_grid: &[DVector<f64>],
    reps: usize,
    seed: u64,
) -> Result<SelectionReport> {
    check_reps(reps)?;
    finite_sample_n(model, tuning)?;
    let p = model.p();
    if beta_grid.is_empty() || beta_grid.iter().any(|b| b.len() != p) {
        return Err(Error::Dimension("selection grid".into()));
    }
    let problem = LassoProblem::new(model.x(), tuning.lambda())?;
    let source = NoiseSource::new(model.x(), model.sigma(), NoiseKind::Gaussian)?;
    let signal: Vec<DVector<f64>> = beta_grid.iter().map(|b| problem.xtx() * b).collect();
    let width = beta_grid.len() * p;
    let counts = try_par_count_chunks(reps, seed, TAG_SELECTION, width, |_, rng, len| -> Result<Vec<u64>> {
        let mut zeros = vec![0u64; width];
        let mut xi = DVector::zeros(p);
        for _ in 0..len {
            let xte = source.draw(rng, &mut xi);
            for (i, s) in signal.iter().enumerate() {
                let fit = problem.fit_xty(&(s + &xte))?;
                for j in 0..p {
                    zeros[i * p + j] += u64::from(fit[j] == 0.0);
                }
            }
        }
        Ok(zeros)
    })?;
    let rows: Vec<SelectionRow> = beta_grid
        .iter()
        .enumerate()
        .map(|(i, b)| SelectionRow {
            beta: b.clone(),
            zero_frequency: (0..p).map(|j| counts[i * p + j] as f64 / reps as f64).collect(),
        })
        .collect();
    let max_frequency = rows
        .iter()
        .flat_map(|r| r.zero_frequency.iter().copied())
        .fold(0.0, f64::max);
    Ok(SelectionReport {
        schema: SCHEMA.to_string(),
        rows,
        reps,
        seed,
        max_frequency,
    })
}

fn extended_terms(t: &ExtendedVector, weights: &[f64]) -> Vec<PenaltyTerm> {
    t.0.iter()
        .zip(weights)
        .map(|(tj, w)| PenaltyTerm {
            weight: *w,
            kind: match tj {
                ExtendedReal::Finite(v) => PenaltyKind::Shifted(*v),
                ExtendedReal::PosInf => PenaltyKind::Tilt(1.0),
                ExtendedReal::NegInf => PenaltyKind::Tilt(-1.0),
            },
        })
        .collect()
}

fn minimize_extended(
    g: &DMatrix<f64>,
    b: &DVector<f64>,
    t: &ExtendedVector,
    weights: &[f64],
) -> Result<DVector<f64>> {
    let p = g.nrows();
    check_dim(p)?;
    if t.dim() != p || weights.len() != p || b.len() != p {
        return Err(Error::Dimension("limit objective inputs".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidTuning("penalty weights must be finite and non-negative".into()));
    }
    let terms = extended_terms(t, weights);
    let finite_scale = t.0.iter().fold(0.0f64, |acc, v| match v {
        ExtendedReal::Finite(x) => acc.max(x.abs()),
        _ => acc,
    });
    let scale = b.amax().max(weights.iter().copied().fold(0.0, f64::max)).max(1.0);
    // huge finite shifts cost precision in the coordinate update
    let tol = 1e-12 * scale + 8.0 * f64::EPSILON * finite_scale * g.amax();
    let start = g.clone().cholesky().ok_or(Error::Singular { ratio: 0.0 })?.solve(b);
    Ok(minimize_penalized_quadratic(g, b, &terms, start, DEFAULT_MAX_SWEEPS, tol)?.point)
}

/// Minimizer of `u'Cu - 2 W'u + 2 sum_j lambda_j pen_j(u_j)` where the
/// penalty is `|t_j + u_j| - |t_j|` for finite `t_j` and `sgn(t_j) u_j`
/// for infinite `t_j`.
pub fn minimize_limit_objective_q(
    t: &ExtendedVector,
    w: &DVector<f64>,
    gram: &GramData,
    lambda: &[f64],
) -> Result<DVector<f64>> {
    minimize_extended(gram.c(), w, t, lambda)
}

/// Minimizer of `u'Cu + 2 sum_j lambda0_j pen_j(u_j)` with the penalty
/// `|u_j + zeta_j| - |zeta_j|`, or `sgn(zeta_j) u_j` at infinity.
pub fn minimize_v_zeta(zeta: &ExtendedVector, gram_limit: &GramData, lambda0: &[f64]) -> Result<DVector<f64>> {
    minimize_extended(gram_limit.c(), &DVector::zeros(gram_limit.dim()), zeta, lambda0)
}

/// `n x p` design with `X'X = n C` exactly: copies of the block
/// `[sqrt(p) C^{1/2}; -sqrt(p) C^{1/2}]`. Needs `n` divisible by `2p`.
pub fn block_design(gram: &GramData, n: usize) -> Result<DMatrix<f64>> {
    let p = gram.dim();
    if n == 0 || n % (2 * p) != 0 {
        return Err(Error::InvalidInput(format!("block design needs n divisible by {}, got {n}", 2 * p)));
    }
    let root = gram.c_sqrt() * (p as f64).sqrt();
    Ok(DMatrix::from_fn(n, p, |i, j| {
        let r = i % (2 * p);
        if r < p {
            root[(r, j)]
        } else {
            -root[(r - p, j)]
        }
    }))
}

/// Gaussian `n x p` design transformed so that `X'X / n = C` exactly.
pub fn whitened_design(gram: &GramData, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let p = gram.dim();
    if n < p {
        return Err(Error::InvalidInput("whitened design needs n >= p".into()));
    }
    let mut rng = crate::rng::chunk_rng(seed, 0x6465_7369, 0);
    let mut z = DMatrix::zeros(n, p);
    fill_normals(&mut rng, z.as_mut_slice());
    let sample = GramData::from_matrix(z.tr_mul(&z) / n as f64)?;
    Ok(z * sample.c_sqrt_inv() * gram.c_sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignFamily {
    #[default]
    Block,
    Whitened,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistentConfig {
    #[serde(with = "io::matrix_rows")]
    pub c: DMatrix<f64>,
    pub lambda0: Vec<f64>,
    /// `lambda*_n = lambda_scale n^lambda_exponent`.
    #[serde(default = "one")]
    pub lambda_scale: f64,
    pub lambda_exponent: f64,
    pub d_scale: f64,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default)]
    pub design: DesignFamily,
    /// Grid magnitudes in units of `lambda*_n / n`.
    #[serde(default = "consistent_magnitudes")]
    pub magnitudes: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn consistent_magnitudes() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistentRow {
    pub n: usize,
    pub lambda_star: f64,
    /// `lambda*_n / n`.
    pub rate: f64,
    pub worst_coverage: f64,
    pub worst_std_error: f64,
    #[serde(with = "io::vector")]
    pub worst_beta: DVector<f64>,
    /// Minimum over the points `-(lambda*_n / n) C^{-1} Lambda_0 d`.
    pub boundary_coverage: f64,
    pub boundary_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistentReport {
    pub schema: String,
    pub d_scale: f64,
    pub rows: Vec<ConsistentRow>,
    pub worst_nondecreasing: bool,
    pub worst_nonincreasing: bool,
}

/// Worst-grid coverage of `b_L - d_scale (lambda*_n / n) M` for each
/// sample size, with penalties `lambda0_j lambda*_n`.
///
/// The grid holds the magnitudes in units of `lambda*_n / n` (product or
/// diagonal as for profiles) plus the points
/// `-(lambda*_n / n) C^{-1} Lambda_0 d` at which the Lasso sits on the
/// boundary of `M` in the limit.
pub fn consistent_regime_experiment(config: &ConsistentConfig) -> Result<ConsistentReport> {
    let gram = GramData::from_matrix(config.c.clone())?;
    let p = gram.dim();
    check_dim(p)?;
    check_reps(config.reps)?;
    if !(config.lambda_exponent > 0.5 && config.lambda_exponent < 1.0) {
        return Err(Error::InvalidTuning(format!(
            "lambda exponent must lie in (0.5, 1), got {}",
            config.lambda_exponent
        )));
    }
    if !(config.lambda_scale > 0.0 && config.sigma > 0.0) {
        return Err(Error::InvalidInput("lambda_scale and sigma must be positive".into()));
    }
    if config.n_list.is_empty() {
        return Err(Error::InvalidInput("n_list is empty".into()));
    }
    let grid = GridSpec {
        magnitudes: config.magnitudes.clone(),
        ..GridSpec::default()
    };
    let mut rows = Vec::new();
    for (idx, &n) in config.n_list.iter().enumerate() {
        let lambda_star = config.lambda_scale * (n as f64).powf(config.lambda_exponent);
        let set = consistent_set(&gram, &config.lambda0, lambda_star, n, config.d_scale)?;
        let rate = lambda_star / n as f64;
        let mut betas = grid.points(p, rate)?;
        let unit = crate::shapes::Parallelogram::new(gram.c().clone(), config.lambda0.clone(), rate)?;
        let boundary: Vec<DVector<f64>> = parallelogram_vertices(&unit).into_iter().map(|v| -v).collect();
        let first_boundary = betas.len();
        betas.extend(boundary);
        let x = match config.design {
            DesignFamily::Block => block_design(&gram, n)?,
            DesignFamily::Whitened => whitened_design(&gram, n, config.seed ^ n as u64)?,
        };
        let lambda: Vec<f64> = config.lambda0.iter().map(|l| l * lambda_star).collect();
        let shape = ConfidenceShape::Parallelogram(set);
        let counts = count_hits(
            &x,
            config.sigma,
            config.noise,
            &lambda,
            &betas,
            1.0,
            &shape,
            config.reps,
            config.seed,
            TAG_CONSISTENT.wrapping_add(idx as u64),
        )?;
        let profile = CoverageProfile::from_counts(betas, counts, config.reps, config.seed);
        let boundary_min = profile.points[first_boundary..]
            .iter()
            .min_by(|a, b| a.estimate.coverage.total_cmp(&b.estimate.coverage))
            .expect("2^p boundary points");
        rows.push(ConsistentRow {
            n,
            lambda_star,
            rate,
            worst_coverage: profile.min_value,
            worst_std_error: profile.min_std_error,
            worst_beta: profile.min_point.clone(),
            boundary_coverage: boundary_min.estimate.coverage,
            boundary_std_error: boundary_min.estimate.std_error,
        });
    }
    let worst_nondecreasing = rows.windows(2).all(|w| w[0].worst_coverage <= w[1].worst_coverage);
    let worst_nonincreasing = rows.windows(2).all(|w| w[0].worst_coverage >= w[1].worst_coverage);
    Ok(ConsistentReport {
        schema: SCHEMA.to_string(),
        d_scale: config.d_scale,
        rows,
        worst_nondecreasing,
        worst_nonincreasing,
    })
}
