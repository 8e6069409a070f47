//! Coverage probabilities of the limiting normals `u^d`, one per sign
//! vector, and their minimum.
//!
//! `u^d ~ N(mean_d, sigma^2 C^{-1})`. For a centered ellipse with the same
//! matrix as the Gram matrix the mass is a noncentral chi-square CDF;
//! every other shape goes through Monte Carlo with common random numbers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::SCHEMA;
use crate::model::{check_dim, lambda_quadratic_form, shifted_mean, GramData, SignVector, TuningVector};
use crate::rng::{fill_normals, par_count_chunks};
use crate::shapes::ConfidenceShape;
use crate::special::noncentral_chi_square_cdf;

const TAG_MASS: u64 = 0x6d61_7373;
const TAG_MIN_COVERAGE: u64 = 0x6d69_6e63;

/// Ties in probabilities or noncentralities closer than this are kept.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Mc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub probability: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
}

impl McConfig {
    pub const DEFAULT_SAMPLES: usize = 1_000_000;

    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self { n_samples, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples < 1000 {
            return Err(Error::InvalidInput(format!(
                "Monte Carlo needs at least 1000 samples, got {}",
                self.n_samples
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignCoverage {
    pub d: SignVector,
    pub probability: f64,
    pub std_error: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub schema: String,
    pub shape: String,
    pub mean_convention: String,
    pub per_d: Vec<SignCoverage>,
    pub min_coverage: f64,
    pub argmin_d: Vec<SignVector>,
    /// Monte Carlo provenance; absent on the exact path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    /// Whether each draw was also used with its sign flipped.
    #[serde(default)]
    pub antithetic: bool,
}

impl CoverageReport {
    pub fn std_error_at_min(&self) -> f64 {
        self.per_d
            .iter()
            .find(|e| Some(&e.d) == self.argmin_d.first())
            .map_or(0.0, |e| e.std_error)
    }

    pub fn method(&self) -> Method {
        self.per_d.first().map_or(Method::Exact, |e| e.method)
    }

    /// Per-sign table with columns `d_1..d_p,prob,stderr,method`.
    pub fn to_csv(&self) -> String {
        let p = self.per_d.first().map_or(0, |e| e.d.dim());
        let mut out = String::new();
        for j in 1..=p {
            out.push_str(&format!("d_{j},"));
        }
        out.push_str("prob,stderr,method\n");
        for e in &self.per_d {
            for s in e.d.signs() {
                out.push_str(&format!("{s},"));
            }
            out.push_str(&format!("{},{},{}\n", e.probability, e.std_error, e.method.as_str()));
        }
        out
    }
}

/// `P(||Z + mu||^2 <= k)` with `Z ~ N(0, I_p)` and `||mu||^2 = noncentrality`.
pub fn ellipse_mass_exact(k: f64, noncentrality: f64, p: usize) -> Result<f64> {
    if !(k >= 0.0) || !(noncentrality >= 0.0) || p == 0 {
        return Err(Error::Domain(format!(
            "ellipse mass needs k >= 0, noncentrality >= 0 and p >= 1 (k = {k}, nc = {noncentrality})"
        )));
    }
    noncentral_chi_square_cdf(k, p as f64, noncentrality)
}

/// `||C^{1/2} mean_d||^2 / sigma^2` for the limiting normal of sign `d`.
pub fn noncentrality(gram: &GramData, tuning: &TuningVector, sigma: f64, d: &SignVector) -> Result<f64> {
    let scale = tuning.mean_scale()?;
    Ok(scale * scale * lambda_quadratic_form(gram, tuning.lambda(), d) / (sigma * sigma))
}

/// All maximizers of `||C^{-1/2} Lambda d||` in sign enumeration order.
pub fn worst_case_d(gram: &GramData, tuning: &TuningVector) -> Result<Vec<SignVector>> {
    check_inputs(gram, tuning)?;
    tuning.mean_scale()?;
    let p = gram.dim();
    let values: Vec<(SignVector, f64)> = SignVector::enumerate(p)
        .map(|d| {
            let q = lambda_quadratic_form(gram, tuning.lambda(), &d);
            (d, q)
        })
        .collect();
    let best = values.iter().map(|(_, q)| *q).fold(f64::NEG_INFINITY, f64::max);
    let cut = best - TIE_TOL * best.abs().max(1.0);
    Ok(values.into_iter().filter(|(_, q)| *q >= cut).map(|(d, _)| d).collect())
}

fn check_inputs(gram: &GramData, tuning: &TuningVector) -> Result<()> {
    check_dim(gram.dim())?;
    if gram.dim() != tuning.dim() {
        return Err(Error::Dimension(format!(
            "Gram matrix has dimension {}, tuning vector {}",
            gram.dim(),
            tuning.dim()
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Lower Cholesky factor `A` with `A A' = C^{-1}`.
fn covariance_factor(gram: &GramData) -> Result<DMatrix<f64>> {
    Ok(gram
        .c_inv()
        .clone()
        .cholesky()
        .ok_or(Error::Singular { ratio: 0.0 })?
        .l())
}

/// Monte Carlo estimate of `P(mean + sigma A xi in shape)` with `A A' = C^{-1}`.
pub fn gaussian_mass_mc(
    shape: &ConfidenceShape,
    mean: &DVector<f64>,
    gram: &GramData,
    sigma: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MassEstimate> {
    McConfig::new(n_samples, seed).validate()?;
    check_sigma(sigma)?;
    let p = gram.dim();
    if shape.dim() != p || mean.len() != p {
        return Err(Error::Dimension("shape, mean and Gram matrix must agree".into()));
    }
    let a = covariance_factor(gram)? * sigma;
    let counts = par_count_chunks(n_samples, seed, TAG_MASS, 1, |_, rng, len| {
        let mut xi = DVector::zeros(p);
        let mut hits = 0;
        for _ in 0..len {
            fill_normals(rng, xi.as_mut_slice());
            let z = mean + &a * &xi;
            hits += u64::from(shape.contains(&z));
        }
        vec![hits]
    });
    let prob = counts[0] as f64 / n_samples as f64;
    Ok(MassEstimate {
        probability: prob,
        std_error: (prob * (1.0 - prob) / n_samples as f64).sqrt(),
    })
}

fn uses_exact_path(shape: &ConfidenceShape, gram: &GramData) -> bool {
    match shape {
        ConfidenceShape::Ellipse(e) => {
            let scale = gram.c().amax().max(1.0);
            e.is_centered() && (e.c_shape() - gram.c()).amax() <= 1e-12 * scale
        }
        _ => false,
    }
}

/// Minimal coverage `min_d P(u^d in shape)` over all `2^p` sign vectors.
///
/// On the Monte Carlo path every sign vector sees the same draws. For
/// centrally symmetric shapes each draw is also used negated, which makes
/// the estimates for `d` and `-d` identical; the reported standard error
/// then comes from the antithetic pair averages.
pub fn min_coverage(
    shape: &ConfidenceShape,
    gram: &GramData,
    tuning: &TuningVector,
    sigma: f64,
    mc: &McConfig,
) -> Result<CoverageReport> {
    check_inputs(gram, tuning)?;
    check_sigma(sigma)?;
    let p = gram.dim();
    if shape.dim() != p {
        return Err(Error::Dimension(format!("shape has dimension {}, model {p}", shape.dim())));
    }
    tuning.mean_scale()?;
    let signs: Vec<SignVector> = SignVector::enumerate(p).collect();

    let (per_d, seed, n_samples, antithetic) = if uses_exact_path(shape, gram) {
        let ConfidenceShape::Ellipse(e) = shape else { unreachable!() };
        let x = e.k() / (sigma * sigma);
        let per_d = signs
            .iter()
            .map(|d| {
                let nc = noncentrality(gram, tuning, sigma, d)?;
                Ok(SignCoverage {
                    d: d.clone(),
                    probability: ellipse_mass_exact(x, nc, p)?,
                    std_error: 0.0,
                    method: Method::Exact,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (per_d, None, None, false)
    } else {
        mc.validate()?;
        let means = signs
            .iter()
            .map(|d| shifted_mean(gram, tuning, d))
            .collect::<Result<Vec<_>>>()?;
        let a = covariance_factor(gram)? * sigma;
        let per_d = if shape.is_centrally_symmetric() {
            antithetic_coverage(shape, &signs, &means, &a, mc)
        } else {
            plain_coverage(shape, &signs, &means, &a, mc)
        };
        (per_d, Some(mc.seed), Some(mc.n_samples), shape.is_centrally_symmetric())
    };

    let min = per_d.iter().map(|e| e.probability).fold(f64::INFINITY, f64::min);
    let argmin_d = per_d
        .iter()
        .filter(|e| e.probability <= min + TIE_TOL)
        .map(|e| e.d.clone())
        .collect();
    Ok(CoverageReport {
        schema: SCHEMA.to_string(),
        shape: shape.kind().to_string(),
        mean_convention: tuning.mean_convention().to_string(),
        per_d,
        min_coverage: min,
        argmin_d,
        seed,
        n_samples,
        antithetic,
    })
}

fn plain_coverage(
    shape: &ConfidenceShape,
    signs: &[SignVector],
    means: &[DVector<f64>],
    a: &DMatrix<f64>,
    mc: &McConfig,
) -> Vec<SignCoverage> {
    let p = a.nrows();
    let m = means.len();
    let counts = par_count_chunks(mc.n_samples, mc.seed, TAG_MIN_COVERAGE, m, |_, rng, len| {
        let mut xi = DVector::zeros(p);
        let mut hits = vec![0u64; m];
        for _ in 0..len {
            fill_normals(rng, xi.as_mut_slice());
            let w = a * &xi;
            for (h, mean) in hits.iter_mut().zip(means) {
                *h += u64::from(shape.contains(&(mean + &w)));
            }
        }
        hits
    });
    let n = mc.n_samples as f64;
    signs
        .iter()
        .zip(counts)
        .map(|(d, c)| {
            let prob = c as f64 / n;
            SignCoverage {
                d: d.clone(),
                probability: prob,
                std_error: (prob * (1.0 - prob) / n).sqrt(),
                method: Method::Mc,
            }
        })
        .collect()
}

/// Uses `mean_d + w` and `mean_d - w` for every draw `w`. Only the first
/// half of the sign vectors (those starting with +1) is evaluated; by
/// central symmetry `-d` gets the same estimate.
fn antithetic_coverage(
    shape: &ConfidenceShape,
    signs: &[SignVector],
    means: &[DVector<f64>],
    a: &DMatrix<f64>,
    mc: &McConfig,
) -> Vec<SignCoverage> {
    let p = a.nrows();
    let half = signs.len() / 2;
    // per sign: pairs with exactly one hit, pairs with two hits
    let counts = par_count_chunks(mc.n_samples, mc.seed, TAG_MIN_COVERAGE, 2 * half, |_, rng, len| {
        let mut xi = DVector::zeros(p);
        let mut hits = vec![0u64; 2 * half];
        for _ in 0..len {
            fill_normals(rng, xi.as_mut_slice());
            let w = a * &xi;
            for (i, mean) in means[..half].iter().enumerate() {
                let h = u8::from(shape.contains(&(mean + &w))) + u8::from(shape.contains(&(mean - &w)));
                match h {
                    1 => hits[2 * i] += 1,
                    2 => hits[2 * i + 1] += 1,
                    _ => {}
                }
            }
        }
        hits
    });
    let n = mc.n_samples as f64;
    let estimates: Vec<(f64, f64)> = (0..half)
        .map(|i| {
            let (single, double) = (counts[2 * i] as f64, counts[2 * i + 1] as f64);
            let mean = (0.5 * single + double) / n;
            let second = (0.25 * single + double) / n;
            let var = (second - mean * mean).max(0.0) * n / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .collect();
    signs
        .iter()
        .map(|d| {
            let idx = d.index();
            let (prob, se) = estimates[if idx < half { idx } else { d.negated().index() }];
            SignCoverage {
                d: d.clone(),
                probability: prob,
                std_error: se,
                method: Method::Mc,
            }
        })
        .collect()
}
