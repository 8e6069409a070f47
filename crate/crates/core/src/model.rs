//! Regression instance, tuning configuration, sign vectors and the shared
//! Gram-matrix primitives.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Largest supported number of coefficients; coverage formulas enumerate
/// all `2^p` sign vectors.
pub const MAX_DIM: usize = 20;

const SYMMETRY_TOL: f64 = 1e-10;
const SINGULAR_RATIO: f64 = 1e-12;

pub(crate) fn check_dim(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::Dimension("p must be at least 1".into()));
    }
    if p > MAX_DIM {
        return Err(Error::TooManyCoordinates(p));
    }
    Ok(())
}

/// A fixed-design linear model `y = X beta + eps` with known noise level.
#[derive(Debug, Clone)]
pub struct LinearModel {
    x: DMatrix<f64>,
    y: DVector<f64>,
    sigma: f64,
    condition_number: f64,
}

impl LinearModel {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, sigma: f64) -> Result<Self> {
        let (n, p) = x.shape();
        check_dim(p)?;
        if n < p {
            return Err(Error::Dimension(format!("need n >= p, got n = {n}, p = {p}")));
        }
        if y.len() != n {
            return Err(Error::Dimension(format!(
                "response has length {}, design has {n} rows",
                y.len()
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in X or y".into()));
        }
        let sv = x.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let rank_tol = (n.max(p) as f64) * f64::EPSILON * smax;
        if smin <= rank_tol {
            return Err(Error::Singular {
                ratio: if smax > 0.0 { smin / smax } else { 0.0 },
            });
        }
        Ok(Self {
            x,
            y,
            sigma,
            condition_number: smax / smin,
        })
    }

    /// Same design and noise level, new response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::Dimension("response length".into()));
        }
        Ok(Self {
            y,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Ratio of the extreme singular values of `X`.
    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    /// Residual variance estimate `|y - X b_LS|^2 / (n - p)`. Only an
    /// approximation of the known-sigma theory; callers should flag reports
    /// that use it.
    pub fn estimate_sigma2(&self) -> Result<f64> {
        let dof = self.n() - self.p();
        if dof == 0 {
            return Err(Error::Dimension("n = p leaves no residual degrees of freedom".into()));
        }
        let beta = crate::lasso::solve_ls(self)?;
        let resid = &self.y - &self.x * beta;
        Ok(resid.norm_squared() / dof as f64)
    }
}

/// `C = X'X/n` together with its inverse and symmetric square roots.
#[derive(Debug, Clone, PartialEq)]
pub struct GramData {
    c: DMatrix<f64>,
    c_inv: DMatrix<f64>,
    c_sqrt: DMatrix<f64>,
    c_sqrt_inv: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl GramData {
    /// Builds the Gram data from a user-supplied matrix (e.g. the limit `C`
    /// in the asymptotic regimes). The matrix is symmetrized after checking
    /// it is symmetric to within `1e-10` relative to its largest entry.
    pub fn from_matrix(c: DMatrix<f64>) -> Result<Self> {
        let p = c.nrows();
        if c.ncols() != p {
            return Err(Error::Dimension(format!("{}x{} is not square", p, c.ncols())));
        }
        check_dim(p)?;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in C".into()));
        }
        let scale = c.amax().max(1.0);
        let asymmetry = (&c - c.transpose()).amax();
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c.clone());
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        if !(lmax > 0.0) || lmin < SINGULAR_RATIO * lmax {
            return Err(Error::Singular {
                ratio: if lmax > 0.0 { lmin / lmax } else { 0.0 },
            });
        }
        let v = &eig.eigenvectors;
        let from_spectrum = |f: fn(f64) -> f64| {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
            let m = v * d * v.transpose();
            (&m + m.transpose()) * 0.5
        };
        Ok(Self {
            c_inv: from_spectrum(|l| 1.0 / l),
            c_sqrt: from_spectrum(f64::sqrt),
            c_sqrt_inv: from_spectrum(|l| 1.0 / l.sqrt()),
            eigenvalues: eig.eigenvalues.clone(),
            c,
        })
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn c_inv(&self) -> &DMatrix<f64> {
        &self.c_inv
    }

    pub fn c_sqrt(&self) -> &DMatrix<f64> {
        &self.c_sqrt
    }

    pub fn c_sqrt_inv(&self) -> &DMatrix<f64> {
        &self.c_sqrt_inv
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn condition_number(&self) -> f64 {
        self.eigenvalues.max() / self.eigenvalues.min()
    }
}

/// `C_n = X'X / n`.
pub fn gram_from_design(model: &LinearModel) -> Result<GramData> {
    let n = model.n() as f64;
    GramData::from_matrix(model.x().tr_mul(model.x()) / n)
}

#[derive(Serialize, Deserialize)]
struct GramRepr {
    schema: String,
    #[serde(with = "io::matrix_rows")]
    c: DMatrix<f64>,
    #[serde(with = "io::matrix_rows")]
    c_inv: DMatrix<f64>,
    #[serde(with = "io::matrix_rows")]
    c_sqrt_inv: DMatrix<f64>,
}

impl Serialize for GramData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GramRepr {
            schema: io::SCHEMA.into(),
            c: self.c.clone(),
            c_inv: self.c_inv.clone(),
            c_sqrt_inv: self.c_sqrt_inv.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GramData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = GramRepr::deserialize(d)?;
        GramData::from_matrix(repr.c).map_err(serde::de::Error::custom)
    }
}

/// Growth of the largest tuning parameter in the consistent regime,
/// `lambda*_n = scale * n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaRate {
    pub scale: f64,
    pub exponent: f64,
}

impl LambdaRate {
    pub fn at(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// Penalties `lambda_{n,j}` at a fixed sample size.
    FiniteSample { n: usize },
    /// `lambda` holds the limits of `lambda_{n,j} / sqrt(n)`.
    ConservativeLimit,
    /// `lambda` holds the normalized limits `lambda_0` (max entry 1).
    ConsistentLimit { lambda_star: LambdaRate },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::FiniteSample { .. } => "finite-sample",
            Regime::ConservativeLimit => "conservative",
            Regime::ConsistentLimit { .. } => "consistent",
        }
    }
}

/// Componentwise penalties plus the asymptotic regime they refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningVector {
    lambda: Vec<f64>,
    regime: Regime,
}

impl TuningVector {
    pub fn new(lambda: Vec<f64>, regime: Regime) -> Result<Self> {
        check_dim(lambda.len())?;
        if let Some(bad) = lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidTuning(format!(
                "penalties must be finite and non-negative, got {bad}"
            )));
        }
        match &regime {
            Regime::FiniteSample { n } if *n == 0 => {
                return Err(Error::InvalidTuning("sample size must be positive".into()));
            }
            Regime::ConsistentLimit { lambda_star } => {
                let max = lambda.iter().copied().fold(0.0, f64::max);
                if (max - 1.0).abs() > 1e-12 || lambda.iter().any(|l| *l > 1.0 + 1e-12) {
                    return Err(Error::InvalidTuning(
                        "lambda_0 must lie in [0, 1]^p with maximum 1".into(),
                    ));
                }
                if !(lambda_star.scale > 0.0 && lambda_star.exponent.is_finite()) {
                    return Err(Error::InvalidTuning("lambda* rate must be positive".into()));
                }
            }
            _ => {}
        }
        Ok(Self { lambda, regime })
    }

    pub fn finite_sample(lambda: Vec<f64>, n: usize) -> Result<Self> {
        Self::new(lambda, Regime::FiniteSample { n })
    }

    pub fn conservative(lambda: Vec<f64>) -> Result<Self> {
        Self::new(lambda, Regime::ConservativeLimit)
    }

    pub fn consistent(lambda0: Vec<f64>, lambda_star: LambdaRate) -> Result<Self> {
        Self::new(lambda0, Regime::ConsistentLimit { lambda_star })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn regime(&self) -> &Regime {
        &self.regime
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Finite-sample penalties `lambda_{n,j} = lambda_{0,j} lambda*_n` for
    /// a consistent tuning at sample size `n`.
    pub fn at_sample_size(&self, n: usize) -> Result<Self> {
        match &self.regime {
            Regime::ConsistentLimit { lambda_star } => {
                let ls = lambda_star.at(n);
                Self::finite_sample(self.lambda.iter().map(|l| l * ls).collect(), n)
            }
            Regime::ConservativeLimit => {
                let rn = (n as f64).sqrt();
                Self::finite_sample(self.lambda.iter().map(|l| l * rn).collect(), n)
            }
            Regime::FiniteSample { .. } => Ok(self.clone()),
        }
    }

    /// Signed scale `s` such that the mean of the limiting distribution for
    /// sign vector `d` is `s * C^{-1} Lambda d`.
    pub(crate) fn mean_scale(&self) -> Result<f64> {
        match self.regime {
            Regime::FiniteSample { n } => Ok(-1.0 / (n as f64).sqrt()),
            Regime::ConservativeLimit => Ok(1.0),
            Regime::ConsistentLimit { .. } => Err(Error::WrongRegime("consistent")),
        }
    }

    /// Text label of the mean convention used for the limiting normals.
    pub fn mean_convention(&self) -> &'static str {
        match self.regime {
            Regime::FiniteSample { .. } => "-n^(-1/2) C^(-1) Lambda d",
            Regime::ConservativeLimit => "+C^(-1) Lambda d",
            Regime::ConsistentLimit { .. } => "C^(-1) Lambda_0 d (deterministic)",
        }
    }
}

/// An element of `{-1, 1}^p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::InvalidInput(format!("sign entries must be +1 or -1, got {bad}")));
        }
        check_dim(signs.len())?;
        Ok(Self(signs))
    }

    pub fn ones(p: usize) -> Self {
        Self(vec![1; p])
    }

    /// The sign vector with index `idx` in the enumeration order where `+1`
    /// precedes `-1` and the first coordinate varies slowest.
    pub fn from_index(idx: usize, p: usize) -> Self {
        Self(
            (0..p)
                .map(|j| if (idx >> (p - 1 - j)) & 1 == 0 { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, s| (acc << 1) | usize::from(*s < 0))
    }

    /// All `2^p` sign vectors in enumeration order.
    pub fn enumerate(p: usize) -> impl Iterator<Item = SignVector> {
        (0..1usize << p).map(move |i| SignVector::from_index(i, p))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, j: usize) -> f64 {
        f64::from(self.0[j])
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.0.len(), self.0.iter().map(|s| f64::from(*s)))
    }
}

impl TryFrom<Vec<i8>> for SignVector {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        SignVector::new(v)
    }
}

impl From<SignVector> for Vec<i8> {
    fn from(d: SignVector) -> Self {
        d.0
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", if *s > 0 { "+1" } else { "-1" })?;
        }
        write!(f, ")")
    }
}

/// A coordinate of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInf,
    NegInf,
}

impl ExtendedReal {
    pub fn finite(v: f64) -> Result<Self> {
        if v.is_finite() {
            Ok(Self::Finite(v))
        } else {
            Err(Error::InvalidInput("finite extended-real entry must be finite".into()))
        }
    }
}

impl From<f64> for ExtendedReal {
    /// Maps `+-inf` floats to the symbolic infinities.
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            Self::PosInf
        } else if v == f64::NEG_INFINITY {
            Self::NegInf
        } else {
            Self::Finite(v)
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => s.serialize_f64(*v),
            Self::PosInf => s.serialize_str("inf"),
            Self::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => ExtendedReal::finite(v).map_err(serde::de::Error::custom),
            Raw::Tag(t) => match t.as_str() {
                "inf" | "+inf" => Ok(Self::PosInf),
                "-inf" => Ok(Self::NegInf),
                other => Err(serde::de::Error::custom(format!("bad extended real {other:?}"))),
            },
        }
    }
}

/// A point of the extended space `[-inf, inf]^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedVector(pub Vec<ExtendedReal>);

impl ExtendedVector {
    pub fn finite(v: &DVector<f64>) -> Self {
        Self(v.iter().map(|x| ExtendedReal::Finite(*x)).collect())
    }

    pub fn infinite(d: &SignVector) -> Self {
        Self(
            d.signs()
                .iter()
                .map(|s| if *s > 0 { ExtendedReal::PosInf } else { ExtendedReal::NegInf })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `C^{-1} Lambda d`, the direction of every limiting mean.
pub(crate) fn c_inv_lambda_d(gram: &GramData, lambda: &[f64], d: &SignVector) -> DVector<f64> {
    let v = DVector::from_iterator(lambda.len(), lambda.iter().zip(d.signs()).map(|(l, s)| l * f64::from(*s)));
    gram.c_inv() * v
}

/// Mean of the limiting normal distribution for sign vector `d`:
/// `-n^{-1/2} C^{-1} Lambda d` for finite samples and `+C^{-1} Lambda d` in
/// the conservative limit. The two conventions produce the same set of means
/// because `d` and `-d` are both enumerated.
pub fn shifted_mean(gram: &GramData, tuning: &TuningVector, d: &SignVector) -> Result<DVector<f64>> {
    if gram.dim() != tuning.dim() || d.dim() != gram.dim() {
        return Err(Error::Dimension("gram, tuning and sign vector must agree".into()));
    }
    let scale = tuning.mean_scale()?;
    Ok(c_inv_lambda_d(gram, tuning.lambda(), d) * scale)
}

/// `d' Lambda C^{-1} Lambda d`, evaluated so that `d` and `-d` give
/// bit-identical results.
pub(crate) fn lambda_quadratic_form(gram: &GramData, lambda: &[f64], d: &SignVector) -> f64 {
    let p = lambda.len();
    let ci = gram.c_inv();
    let mut total = 0.0;
    for i in 0..p {
        let mut row = 0.0;
        for j in 0..p {
            row += (d.get(i) * d.get(j)) * (lambda[i] * ci[(i, j)] * lambda[j]);
        }
        total += row;
    }
    total
}
