//! Choosing the size of a confidence shape so that its minimal coverage
//! hits `1 - alpha`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::coverage::{ellipse_mass_exact, min_coverage, noncentrality, worst_case_d, McConfig};
use crate::error::{Error, Result};
use crate::io::SCHEMA;
use crate::model::{GramData, SignVector, TuningVector};
use crate::shapes::{ConfidenceShape, Ellipse, HullOfShiftedEllipses, Parallelogram};
use crate::special::chi_square_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub k: f64,
    pub min_coverage: f64,
    pub std_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub schema: String,
    pub shape: ConfidenceShape,
    pub k_star: f64,
    pub target: f64,
    pub achieved: f64,
    pub std_error: f64,
    pub iterations: usize,
    /// Evaluated `(k, coverage)` pairs sorted by `k`.
    pub history: Vec<HistoryPoint>,
    pub worst_case_d: Vec<SignVector>,
    /// Noncentrality of the worst sign vector; set for ellipses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noncentrality: Option<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

fn sorted(mut history: Vec<HistoryPoint>) -> Vec<HistoryPoint> {
    history.sort_by(|a, b| a.k.total_cmp(&b.k));
    history
}

/// Smallest `k` whose centered ellipse `{z : z'Cz <= k}` has minimal
/// coverage `1 - alpha`, found by bisection on the exact mass at the worst
/// sign vector.
pub fn calibrate_ellipse(gram: &GramData, tuning: &TuningVector, sigma: f64, alpha: f64) -> Result<CalibrationResult> {
    check_alpha(alpha)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    let worst = worst_case_d(gram, tuning)?;
    let p = gram.dim();
    let nc = noncentrality(gram, tuning, sigma, &worst[0])?;
    for d in &worst[1..] {
        let other = noncentrality(gram, tuning, sigma, d)?;
        assert!((other - nc).abs() <= 1e-10 * nc.max(1.0), "tied worst signs disagree: {nc} vs {other}");
    }
    let target = 1.0 - alpha;
    let s2 = sigma * sigma;
    let mass = |k: f64| ellipse_mass_exact(k / s2, nc, p);

    let mut history = Vec::new();
    let mut lo = chi_square_quantile(target, p as f64)? * s2;
    let mut hi = lo + 4.0 * s2 * (nc + p as f64);
    let mut f_lo = mass(lo)?;
    let mut f_hi = mass(hi)?;
    history.push(HistoryPoint { k: lo, min_coverage: f_lo, std_error: 0.0, n_samples: None });
    history.push(HistoryPoint { k: hi, min_coverage: f_hi, std_error: 0.0, n_samples: None });
    let mut iterations = 0;
    while f_hi < target {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = mass(hi)?;
        iterations += 1;
        history.push(HistoryPoint { k: hi, min_coverage: f_hi, std_error: 0.0, n_samples: None });
        if iterations > 200 {
            return Err(Error::BudgetExceeded("ellipse bracket expansion".into()));
        }
    }
    if f_lo >= target {
        hi = lo;
        f_hi = f_lo;
    }
    while f_hi - f_lo > 1e-12 && hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        let f_mid = mass(mid)?;
        history.push(HistoryPoint { k: mid, min_coverage: f_mid, std_error: 0.0, n_samples: None });
        if f_mid < target {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        iterations += 1;
        if iterations > 500 {
            return Err(Error::BudgetExceeded("ellipse bisection".into()));
        }
    }
    let k_star = hi;
    Ok(CalibrationResult {
        schema: SCHEMA.to_string(),
        shape: ConfidenceShape::Ellipse(Ellipse::centered(gram.c().clone(), k_star)?),
        k_star,
        target,
        achieved: f_hi,
        std_error: 0.0,
        iterations,
        history: sorted(history),
        worst_case_d: worst,
        noncentrality: Some(nc),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullCalibrationConfig {
    /// Samples and seed for the coarse phase; the fine phase uses ten
    /// times as many samples with the same seed.
    pub mc: McConfig,
    /// Bracket width in coverage at which a phase stops.
    pub tol: f64,
    pub max_iterations: usize,
}

impl HullCalibrationConfig {
    pub fn new(mc: McConfig) -> Self {
        Self {
            mc,
            tol: 0.002,
            max_iterations: 60,
        }
    }
}

struct Eval {
    k: f64,
    coverage: f64,
    std_error: f64,
}

/// Size `k` of the hull of the `2^p` shifted ellipses whose Monte Carlo
/// minimal coverage is `1 - alpha`.
///
/// Starts from the least-squares size, where the hull already has coverage
/// at least `1 - alpha`, finds a lower bracket by halving and then bisects.
/// All evaluations in a phase reuse one sample, so the estimated coverage
/// is monotone in `k`. When the bracket's coverage gap falls below
/// `max(tol, 2 se)` the sample is enlarged tenfold once and bisection
/// continues; the returned `k` interpolates the final bracket.
pub fn calibrate_hull(
    gram: &GramData,
    tuning: &TuningVector,
    sigma: f64,
    alpha: f64,
    config: &HullCalibrationConfig,
) -> Result<CalibrationResult> {
    check_alpha(alpha)?;
    let p = gram.dim();
    if p > 8 {
        return Err(Error::InvalidInput(format!("hull calibration supports p <= 8, got {p}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    let worst = worst_case_d(gram, tuning)?;
    let target = 1.0 - alpha;
    let k0 = chi_square_quantile(target, p as f64)? * sigma * sigma;
    let template = HullOfShiftedEllipses::from_tuning(gram, tuning, k0)?;

    let mut history = Vec::new();
    let mut iterations = 0;
    let evaluate = |k: f64, mc: &McConfig, history: &mut Vec<HistoryPoint>| -> Result<Eval> {
        let shape = ConfidenceShape::Hull(template.with_k(k)?);
        let r = min_coverage(&shape, gram, tuning, sigma, mc)?;
        let se = r.std_error_at_min();
        history.push(HistoryPoint { k, min_coverage: r.min_coverage, std_error: se, n_samples: Some(mc.n_samples) });
        Ok(Eval { k, coverage: r.min_coverage, std_error: se })
    };

    let phases = [config.mc, McConfig::new(config.mc.n_samples * 10, config.mc.seed)];
    let mut hi = Eval { k: k0, coverage: f64::NAN, std_error: 0.0 };
    let mut lo: Option<Eval> = None;
    for mc in &phases {
        // (re)evaluate the upper end on this phase's sample and widen it if
        // noise puts it below the target
        let first_lower = lo.as_ref().map_or(hi.k * 0.5, |e| e.k.min(hi.k));
        hi = evaluate(hi.k, mc, &mut history)?;
        while hi.coverage < target {
            iterations += 1;
            if iterations > config.max_iterations {
                return Err(Error::BudgetExceeded("hull upper bracket".into()));
            }
            hi = evaluate(hi.k * 1.25, mc, &mut history)?;
        }
        let mut candidate = first_lower;
        let mut l = loop {
            iterations += 1;
            if iterations > config.max_iterations {
                return Err(Error::BudgetExceeded("hull lower bracket".into()));
            }
            let e = evaluate(candidate, mc, &mut history)?;
            if e.coverage < target {
                break e;
            }
            hi = e;
            candidate *= 0.5;
        };
        while hi.coverage - l.coverage >= config.tol.max(2.0 * l.std_error.max(hi.std_error)) {
            iterations += 1;
            if iterations > config.max_iterations {
                return Err(Error::BudgetExceeded(format!(
                    "hull bisection did not separate from Monte Carlo noise after {} evaluations",
                    config.max_iterations
                )));
            }
            let mid = evaluate(0.5 * (l.k + hi.k), mc, &mut history)?;
            if mid.coverage < target {
                l = mid;
            } else {
                hi = mid;
            }
        }
        lo = Some(l);
    }

    let l = lo.expect("bracket set");
    let gap = hi.coverage - l.coverage;
    let k_star = if gap > 0.0 {
        l.k + (target - l.coverage) / gap * (hi.k - l.k)
    } else {
        hi.k
    };
    let fine = &phases[1];
    let last = evaluate(k_star, fine, &mut history)?;
    Ok(CalibrationResult {
        schema: SCHEMA.to_string(),
        shape: ConfidenceShape::Hull(template.with_k(k_star)?),
        k_star,
        target,
        achieved: last.coverage,
        std_error: last.std_error,
        iterations,
        history: sorted(history),
        worst_case_d: worst,
        noncentrality: None,
    })
}

/// The parallelogram `d_scale (lambda*_n / n) M` used under consistent
/// tuning, with `M = {m : |(C m)_j| <= lambda_{0,j}}`.
pub fn consistent_set(
    gram_limit: &GramData,
    lambda0: &[f64],
    lambda_star_n: f64,
    n: usize,
    d_scale: f64,
) -> Result<Parallelogram> {
    if lambda0.len() != gram_limit.dim() {
        return Err(Error::Dimension("lambda0 and Gram matrix".into()));
    }
    let max = lambda0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if (max - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidTuning(format!("lambda0 must have maximum 1, got {max}")));
    }
    if !(d_scale.is_finite() && d_scale > 0.0) {
        return Err(Error::InvalidInput(format!("d_scale must be positive, got {d_scale}")));
    }
    if !(lambda_star_n.is_finite() && lambda_star_n > 0.0) || n == 0 {
        return Err(Error::InvalidInput("lambda*_n and n must be positive".into()));
    }
    if d_scale == 1.0 {
        log::warn!("d_scale = 1 is the boundary case; no coverage limit is known there");
    }
    let rate = lambda_star_n / n as f64;
    Ok(Parallelogram::new(gram_limit.c().clone(), lambda0.to_vec(), d_scale * rate)?.with_rate(rate))
}

/// Volume of `shape` by hit counting in its bounding box.
pub fn mc_volume(shape: &ConfidenceShape, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    use crate::rng::par_count_chunks;
    use rand::Rng;
    if n_samples == 0 {
        return Err(Error::InvalidInput("volume needs samples".into()));
    }
    let bbox = shape.bounding_box();
    let p = bbox.dim();
    let counts = par_count_chunks(n_samples, seed, 0x766f_6c75, 1, |_, rng, len| {
        let mut hits = 0;
        let mut z = DVector::zeros(p);
        for _ in 0..len {
            for j in 0..p {
                z[j] = rng.random_range(bbox.lower[j]..=bbox.upper[j]);
            }
            hits += u64::from(shape.contains(&z));
        }
        vec![hits]
    });
    let frac = counts[0] as f64 / n_samples as f64;
    let vol = bbox.volume();
    Ok((frac * vol, vol * (frac * (1.0 - frac) / n_samples as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assert_close;
    use nalgebra::DMatrix;

    fn example_gram() -> GramData {
        GramData::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0])).unwrap()
    }

    fn example_tuning(scale: f64) -> TuningVector {
        let l = scale * 20f64.sqrt() / 2.0;
        TuningVector::finite_sample(vec![l, l], 20).unwrap()
    }

    #[test]
    fn ellipse_example_values() {
        let ls = calibrate_ellipse(&example_gram(), &example_tuning(0.0), 1.0, 0.05).unwrap();
        assert_close!(ls.k_star, 5.991464547107979, 1e-9);
        let lasso = calibrate_ellipse(&example_gram(), &example_tuning(1.0), 1.0, 0.05).unwrap();
        assert_close!(lasso.noncentrality.unwrap(), 1.0, 1e-12);
        assert_close!(lasso.k_star, 8.6422038700459, 1e-8);
        assert_close!(lasso.achieved, 0.95, 1e-9);
        assert!(lasso.history.windows(2).all(|w| w[0].k <= w[1].k && w[0].min_coverage <= w[1].min_coverage));
        let wide = calibrate_ellipse(&example_gram(), &example_tuning(1.0), 1.0, 0.5).unwrap();
        assert!(wide.k_star < lasso.k_star);
        let noisy = calibrate_ellipse(&example_gram(), &example_tuning(1.0), 2.0, 0.05).unwrap();
        // k scales with sigma^2 at fixed noncentrality only; here nc shrinks
        assert!(noisy.k_star < 4.0 * lasso.k_star);
        assert!(matches!(calibrate_ellipse(&example_gram(), &example_tuning(1.0), 1.0, 1.0), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn hull_with_zero_lambda_matches_ellipse() {
        let cfg = HullCalibrationConfig::new(McConfig::new(20_000, 3));
        let r = calibrate_hull(&example_gram(), &example_tuning(0.0), 1.0, 0.05, &cfg).unwrap();
        assert!((r.k_star - 5.9915).abs() < 0.35, "{}", r.k_star);
        assert!((r.achieved - 0.95).abs() < 4.0 * r.std_error.max(1e-3));
    }

    #[test]
    fn consistent_set_scaling() {
        let gram = GramData::from_matrix(DMatrix::identity(2, 2)).unwrap();
        let par = consistent_set(&gram, &[1.0, 1.0], 10.0, 100, 1.0).unwrap();
        assert_close!(par.scale(), 0.1, 1e-15);
        assert_eq!(par.rate(), Some(0.1));
        let big = consistent_set(&gram, &[1.0, 1.0], 10.0, 100, 2.0).unwrap();
        for z in [[0.1, 0.1], [0.05, -0.1], [0.0, 0.0]] {
            let z = DVector::from_row_slice(&z);
            assert!(par.contains(&z) && big.contains(&z));
        }
        assert!(big.contains(&DVector::from_vec(vec![0.15, 0.0])));
        assert!(!par.contains(&DVector::from_vec(vec![0.15, 0.0])));
        assert!(consistent_set(&gram, &[0.5, 0.5], 10.0, 100, 1.0).is_err());
    }
}
