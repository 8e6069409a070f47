//! Candidate confidence-set shapes, the orthant cones `A^d_C(m)`, sampled
//! checks of the cone-closure shape condition and the closure operator.
//!
//! A set `M` satisfies the shape condition with matrix `C` when it contains
//! the cone `A^d_C(m) = {z : d_j (C m)_j <= d_j (C z)_j, d_j z_j <= 0}` for
//! every `m` in `M` and every sign vector `d`. All inequalities are weak, so
//! boundary points are members.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{check_dim, shifted_mean, GramData, SignVector, TuningVector};
use crate::special::{ln_gamma, normal_quantile};

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl BoundingBox {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn half_widths(&self) -> DVector<f64> {
        (&self.upper - &self.lower) * 0.5
    }

    pub fn volume(&self) -> f64 {
        (&self.upper - &self.lower).iter().product()
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Same center, half-widths multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = self.center();
        let h = self.half_widths() * factor;
        Self {
            lower: &c - &h,
            upper: &c + &h,
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            lower: self.lower.zip_map(&other.lower, f64::min),
            upper: self.upper.zip_map(&other.upper, f64::max),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| rng.random_range(self.lower[j]..=self.upper[j]))
    }
}

/// `A^d_C(m)`: intersection of the orthant `{d_j z_j <= 0}` with the
/// translated simplicial cone `{d_j (C z)_j >= d_j (C m)_j}`.
#[derive(Debug, Clone)]
pub struct OrthantCone {
    c_bar: DMatrix<f64>,
    d: SignVector,
    apex: DVector<f64>,
    c_bar_apex: DVector<f64>,
}

impl OrthantCone {
    pub fn new(c_bar: DMatrix<f64>, d: SignVector, apex: DVector<f64>) -> Result<Self> {
        let p = apex.len();
        if c_bar.shape() != (p, p) || d.dim() != p {
            return Err(Error::Dimension("cone matrix, sign vector and apex must agree".into()));
        }
        let c_bar_apex = &c_bar * &apex;
        Ok(Self {
            c_bar,
            d,
            apex,
            c_bar_apex,
        })
    }

    pub fn apex(&self) -> &DVector<f64> {
        &self.apex
    }

    pub fn sign(&self) -> &SignVector {
        &self.d
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        let cz = &self.c_bar * z;
        (0..z.len()).all(|j| {
            let s = self.d.get(j);
            s * z[j] <= 0.0 && s * cz[j] >= s * self.c_bar_apex[j]
        })
    }

    /// Unit edge directions `C^{-1} D e_j` of the translated cone.
    pub fn edge_directions(&self) -> Result<Vec<DVector<f64>>> {
        let inv = self
            .c_bar
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { ratio: 0.0 })?;
        Ok((0..self.apex.len())
            .map(|j| {
                let e = inv.column(j) * self.d.get(j);
                let norm = e.norm();
                e / norm
            })
            .collect())
    }
}

/// Membership in `A^d_C(m)`.
pub fn cone_contains(cone: &OrthantCone, z: &DVector<f64>) -> bool {
    cone.contains(z)
}

/// `{z : (z - center)' C (z - center) <= k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipse {
    metric: GramData,
    k: f64,
    center: DVector<f64>,
}

impl Ellipse {
    pub fn new(c_shape: DMatrix<f64>, k: f64, center: DVector<f64>) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidInput(format!("ellipse size k must be positive, got {k}")));
        }
        if center.len() != c_shape.nrows() {
            return Err(Error::Dimension("ellipse center".into()));
        }
        Ok(Self {
            metric: GramData::from_matrix(c_shape)?,
            k,
            center,
        })
    }

    /// `E_C(k) = {z : z' C z <= k}`.
    pub fn centered(c_shape: DMatrix<f64>, k: f64) -> Result<Self> {
        let p = c_shape.nrows();
        Self::new(c_shape, k, DVector::zeros(p))
    }

    pub fn c_shape(&self) -> &DMatrix<f64> {
        self.metric.c()
    }

    pub fn metric(&self) -> &GramData {
        &self.metric
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn quadratic_form(&self, z: &DVector<f64>) -> f64 {
        let r = z - &self.center;
        r.dot(&(self.metric.c() * &r))
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        self.quadratic_form(z) <= self.k
    }

    /// Support function `h(v) = v'center + sqrt(k v' C^{-1} v)`.
    pub fn support(&self, v: &DVector<f64>) -> f64 {
        v.dot(&self.center) + (self.k * v.dot(&(self.metric.c_inv() * v))).sqrt()
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let h = DVector::from_fn(self.dim(), |j, _| (self.k * self.metric.c_inv()[(j, j)]).sqrt());
        BoundingBox {
            lower: &self.center - &h,
            upper: &self.center + &h,
        }
    }

    pub fn volume(&self) -> f64 {
        let p = self.dim() as f64;
        let unit_ball = (0.5 * p * PI.ln() - ln_gamma(0.5 * p + 1.0)).exp();
        let det: f64 = self.metric.eigenvalues().iter().product();
        unit_ball * self.k.powf(0.5 * p) / det.sqrt()
    }

    pub fn is_centered(&self) -> bool {
        self.center.iter().all(|v| *v == 0.0)
    }

    fn boundary(&self, points: usize) -> Vec<[f64; 2]> {
        let root = self.metric.c_sqrt_inv() * self.k.sqrt();
        (0..=points)
            .map(|i| {
                let t = 2.0 * PI * (i % points) as f64 / points as f64;
                let u = DVector::from_vec(vec![t.cos(), t.sin()]);
                let z = &self.center + &root * u;
                [z[0], z[1]]
            })
            .collect()
    }
}

/// Direction set used by the discretized support-function test.
pub fn default_directions(p: usize) -> Vec<DVector<f64>> {
    match p {
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => (0..720)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 720.0;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        _ => quasi_random_sphere(p, 10_000),
    }
}

/// Kronecker low-discrepancy points pushed through the normal quantile and
/// projected to the sphere, plus the coordinate axes.
fn quasi_random_sphere(p: usize, count: usize) -> Vec<DVector<f64>> {
    // generalized golden ratio: root of x^(p+1) = x + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (p as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=p).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
    let mut dirs = Vec::with_capacity(count + 2 * p);
    for j in 0..p {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(p);
            e[j] = s;
            dirs.push(e);
        }
    }
    for i in 1..=count {
        let v = DVector::from_fn(p, |j, _| normal_quantile((0.5 + alpha[j] * i as f64).fract()));
        let norm = v.norm();
        if norm > 0.0 && norm.is_finite() {
            dirs.push(v / norm);
        }
    }
    dirs
}

/// Convex hull of the `2^p` translates `E_C(k) + s_d` of a centered ellipse.
///
/// Membership is decided exactly when a point lies in one of the translates
/// and otherwise by comparing `v'z` with the hull's support function on a
/// fixed direction grid. The test is one-sided: points outside the hull but
/// within `tol` of it, or cut off only between grid directions, may be
/// reported as members.
#[derive(Debug, Clone)]
pub struct HullOfShiftedEllipses {
    base: Ellipse,
    shifts: Vec<DVector<f64>>,
    directions: Vec<DVector<f64>>,
    tol: f64,
    shift_support: Vec<f64>,
    ellipse_width: Vec<f64>,
}

impl HullOfShiftedEllipses {
    pub fn new(c_shape: DMatrix<f64>, k: f64, shifts: Vec<DVector<f64>>) -> Result<Self> {
        let p = c_shape.nrows();
        Self::with_directions(c_shape, k, shifts, default_directions(p), None)
    }

    pub fn with_directions(
        c_shape: DMatrix<f64>,
        k: f64,
        shifts: Vec<DVector<f64>>,
        directions: Vec<DVector<f64>>,
        tol: Option<f64>,
    ) -> Result<Self> {
        let base = Ellipse::centered(c_shape, k)?;
        let p = base.dim();
        if shifts.is_empty() || shifts.iter().any(|s| s.len() != p) {
            return Err(Error::Dimension("hull shifts".into()));
        }
        if directions.is_empty() || directions.iter().any(|v| v.len() != p) {
            return Err(Error::Dimension("hull directions".into()));
        }
        let shift_support = directions
            .iter()
            .map(|v| shifts.iter().map(|s| v.dot(s)).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let ellipse_width = directions
            .iter()
            .map(|v| v.dot(&(base.metric().c_inv() * v)).sqrt())
            .collect();
        let mut hull = Self {
            base,
            shifts,
            directions,
            tol: 0.0,
            shift_support,
            ellipse_width,
        };
        hull.tol = match tol {
            Some(t) => t,
            None => 1e-6 * hull.diameter(),
        };
        Ok(hull)
    }

    /// Hull of the ellipses centered at the limiting means for every sign
    /// vector.
    pub fn from_tuning(gram: &GramData, tuning: &TuningVector, k: f64) -> Result<Self> {
        let shifts = SignVector::enumerate(gram.dim())
            .map(|d| shifted_mean(gram, tuning, &d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(gram.c().clone(), k, shifts)
    }

    /// Same centers and directions with a new ellipse size.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        let base = Ellipse::centered(self.base.c_shape().clone(), k)?;
        let mut hull = Self {
            base,
            ..self.clone()
        };
        hull.tol = 1e-6 * hull.diameter();
        Ok(hull)
    }

    pub fn base(&self) -> &Ellipse {
        &self.base
    }

    pub fn k(&self) -> f64 {
        self.base.k
    }

    pub fn shifts(&self) -> &[DVector<f64>] {
        &self.shifts
    }

    pub fn directions(&self) -> &[DVector<f64>] {
        &self.directions
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    fn diameter(&self) -> f64 {
        let b = self.bounding_box();
        2.0 * b.half_widths().amax()
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let p = self.dim();
        let h = DVector::from_fn(p, |j, _| (self.base.k * self.base.metric().c_inv()[(j, j)]).sqrt());
        let lower = DVector::from_fn(p, |j, _| {
            self.shifts.iter().map(|s| s[j]).fold(f64::INFINITY, f64::min) - h[j]
        });
        let upper = DVector::from_fn(p, |j, _| {
            self.shifts.iter().map(|s| s[j]).fold(f64::NEG_INFINITY, f64::max) + h[j]
        });
        BoundingBox { lower, upper }
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        let c = self.base.c_shape();
        for s in &self.shifts {
            let r = z - s;
            if r.dot(&(c * &r)) <= self.base.k {
                return true;
            }
        }
        let root_k = self.base.k.sqrt();
        self.directions
            .iter()
            .zip(self.shift_support.iter().zip(&self.ellipse_width))
            .all(|(v, (a, w))| v.dot(z) <= a + root_k * w + self.tol)
    }

    pub fn is_centrally_symmetric(&self) -> bool {
        self.shifts
            .iter()
            .all(|s| self.shifts.iter().any(|t| (s + t).amax() <= 1e-12 * (1.0 + s.amax())))
    }

    fn boundary(&self, points: usize) -> Vec<[f64; 2]> {
        let ci = self.base.metric().c_inv();
        (0..=points)
            .map(|i| {
                let t = 2.0 * PI * (i % points) as f64 / points as f64;
                let v = DVector::from_vec(vec![t.cos(), t.sin()]);
                let s = self
                    .shifts
                    .iter()
                    .max_by(|a, b| v.dot(a).total_cmp(&v.dot(b)))
                    .expect("non-empty shifts");
                let civ = ci * &v;
                let z = s + &civ * (self.base.k / v.dot(&civ)).sqrt();
                [z[0], z[1]]
            })
            .collect()
    }
}

/// `{m : |(C m)_j| <= scale * bounds_j}` with corners `scale C^{-1} Lambda_0 d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parallelogram {
    metric: GramData,
    bounds: Vec<f64>,
    scale: f64,
    rate: Option<f64>,
}

/// Relative slack on the parallelogram's defining inequalities, so that
/// computed vertices test as boundary members.
const PARALLELOGRAM_SLACK: f64 = 1e-12;

impl Parallelogram {
    pub fn new(c_shape: DMatrix<f64>, bounds: Vec<f64>, scale: f64) -> Result<Self> {
        if bounds.len() != c_shape.nrows() {
            return Err(Error::Dimension("parallelogram bounds".into()));
        }
        if bounds.iter().any(|b| !(b.is_finite() && *b >= 0.0 && *b <= 1.0 + 1e-12)) {
            return Err(Error::InvalidInput("parallelogram bounds must lie in [0, 1]".into()));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput("parallelogram scale must be positive".into()));
        }
        Ok(Self {
            metric: GramData::from_matrix(c_shape)?,
            bounds,
            scale,
            rate: None,
        })
    }

    /// Records the rate `lambda*_n / n` already folded into `scale`.
    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = Some(rate);
        self
    }

    pub fn c_shape(&self) -> &DMatrix<f64> {
        self.metric.c()
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rate(&self) -> Option<f64> {
        self.rate
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        let cz = self.metric.c() * z;
        cz.iter()
            .zip(&self.bounds)
            .all(|(v, b)| v.abs() <= self.scale * b * (1.0 + PARALLELOGRAM_SLACK))
    }

    /// Same shape with the scale multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidInput("scale factor must be positive".into()));
        }
        Ok(Self {
            scale: self.scale * factor,
            ..self.clone()
        })
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let verts = parallelogram_vertices(self);
        let p = self.dim();
        BoundingBox {
            lower: DVector::from_fn(p, |j, _| verts.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min)),
            upper: DVector::from_fn(p, |j, _| verts.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max)),
        }
    }

    fn boundary(&self) -> Vec<[f64; 2]> {
        let ci = self.metric.c_inv();
        [[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]]
            .iter()
            .map(|d| {
                let w = DVector::from_vec(vec![
                    self.scale * self.bounds[0] * d[0],
                    self.scale * self.bounds[1] * d[1],
                ]);
                let z = ci * w;
                [z[0], z[1]]
            })
            .collect()
    }
}

/// Corner points `scale C^{-1} Lambda_0 d` over all sign vectors, in sign
/// enumeration order.
pub fn parallelogram_vertices(par: &Parallelogram) -> Vec<DVector<f64>> {
    let p = par.dim();
    SignVector::enumerate(p)
        .map(|d| {
            let w = DVector::from_fn(p, |j, _| par.scale * par.bounds[j] * d.get(j));
            par.metric.c_inv() * w
        })
        .collect()
}

/// `[lower, upper]` as a shape (an interval when `p = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    #[serde(with = "io::vector")]
    pub lower: DVector<f64>,
    #[serde(with = "io::vector")]
    pub upper: DVector<f64>,
}

impl AxisBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Dimension("box bounds".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidInput("box needs lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `[-a, a]^p`.
    pub fn symmetric(half_widths: DVector<f64>) -> Result<Self> {
        Self::new(-half_widths.clone(), half_widths)
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        self.bounding_box().contains(z)
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }
}

/// Membership predicate of the smallest superset of a finite point set that
/// satisfies the cone-closure condition: the union of `A^d_C(m)` over all
/// points `m` and sign vectors `d`.
#[derive(Debug, Clone)]
pub struct ClosurePredicate {
    c_bar: DMatrix<f64>,
    points: Vec<DVector<f64>>,
    c_bar_points: Vec<DVector<f64>>,
}

impl ClosurePredicate {
    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn c_bar(&self) -> &DMatrix<f64> {
        &self.c_bar
    }

    /// Only sign vectors compatible with `z` are enumerated:
    /// `d_j = -sgn(z_j)` for nonzero coordinates, both signs for zeros.
    pub fn contains(&self, z: &DVector<f64>) -> bool {
        let p = z.len();
        let cz = &self.c_bar * z;
        let free: Vec<usize> = (0..p).filter(|&j| z[j] == 0.0).collect();
        let base: Vec<f64> = z.iter().map(|v| if *v > 0.0 { -1.0 } else { 1.0 }).collect();
        for mask in 0..(1usize << free.len()) {
            let mut d = base.clone();
            for (bit, &j) in free.iter().enumerate() {
                if (mask >> bit) & 1 == 1 {
                    d[j] = -1.0;
                }
            }
            let hit = self
                .c_bar_points
                .iter()
                .any(|cm| (0..p).all(|j| d[j] * cz[j] >= d[j] * cm[j]));
            if hit {
                return true;
            }
        }
        false
    }

    fn bounding_box(&self) -> BoundingBox {
        let p = self.c_bar.nrows();
        let lo = DVector::from_fn(p, |j, _| self.points.iter().map(|m| m[j]).fold(f64::INFINITY, f64::min));
        let hi = DVector::from_fn(p, |j, _| self.points.iter().map(|m| m[j]).fold(f64::NEG_INFINITY, f64::max));
        // cones from points reach toward the origin, so the box must hold 0
        BoundingBox {
            lower: lo.map(|v| v.min(0.0)),
            upper: hi.map(|v| v.max(0.0)),
        }
    }
}

pub fn closure_condition_a(points: Vec<DVector<f64>>, c_bar: DMatrix<f64>) -> Result<ClosurePredicate> {
    let p = c_bar.nrows();
    if points.is_empty() {
        return Err(Error::InvalidInput("closure needs at least one point".into()));
    }
    if c_bar.ncols() != p || points.iter().any(|m| m.len() != p) {
        return Err(Error::Dimension("closure points and matrix must agree".into()));
    }
    let c_bar_points = points.iter().map(|m| &c_bar * m).collect();
    Ok(ClosurePredicate {
        c_bar,
        points,
        c_bar_points,
    })
}

/// The shape `M` in a confidence set `beta_hat_L - n^{-1/2} M`.
#[derive(Debug, Clone)]
pub enum ConfidenceShape {
    Ellipse(Ellipse),
    Hull(HullOfShiftedEllipses),
    Parallelogram(Parallelogram),
    Box(AxisBox),
    PointCloud(ClosurePredicate),
}

impl ConfidenceShape {
    pub fn dim(&self) -> usize {
        match self {
            Self::Ellipse(e) => e.dim(),
            Self::Hull(h) => h.dim(),
            Self::Parallelogram(p) => p.dim(),
            Self::Box(b) => b.lower.len(),
            Self::PointCloud(c) => c.c_bar.nrows(),
        }
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        match self {
            Self::Ellipse(e) => e.contains(z),
            Self::Hull(h) => h.contains(z),
            Self::Parallelogram(p) => p.contains(z),
            Self::Box(b) => b.contains(z),
            Self::PointCloud(c) => c.contains(z),
        }
    }

    pub fn bounding_box(&self) -> BoundingBox {
        match self {
            Self::Ellipse(e) => e.bounding_box(),
            Self::Hull(h) => h.bounding_box(),
            Self::Parallelogram(p) => p.bounding_box(),
            Self::Box(b) => b.bounding_box(),
            Self::PointCloud(c) => c.bounding_box(),
        }
    }

    /// `z in M` iff `-z in M`.
    pub fn is_centrally_symmetric(&self) -> bool {
        match self {
            Self::Ellipse(e) => e.is_centered(),
            Self::Hull(h) => h.is_centrally_symmetric(),
            Self::Parallelogram(_) => true,
            Self::Box(b) => b.lower.iter().zip(b.upper.iter()).all(|(l, u)| *l == -*u),
            Self::PointCloud(_) => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Ellipse(_) => "ellipse",
            Self::Hull(_) => "hull",
            Self::Parallelogram(_) => "parallelogram",
            Self::Box(_) => "box",
            Self::PointCloud(_) => "point_cloud",
        }
    }

    /// Closed boundary polyline for two-dimensional shapes.
    pub fn boundary_polyline(&self, points: usize) -> Result<Vec<[f64; 2]>> {
        if self.dim() != 2 {
            return Err(Error::Dimension("boundary polylines need p = 2".into()));
        }
        let points = points.max(3);
        match self {
            Self::Ellipse(e) => Ok(e.boundary(points)),
            Self::Hull(h) => Ok(h.boundary(points)),
            Self::Parallelogram(p) => Ok(p.boundary()),
            Self::Box(b) => Ok(vec![
                [b.lower[0], b.lower[1]],
                [b.upper[0], b.lower[1]],
                [b.upper[0], b.upper[1]],
                [b.lower[0], b.upper[1]],
                [b.lower[0], b.lower[1]],
            ]),
            Self::PointCloud(_) => Err(Error::InvalidInput("point-cloud closures have no polyline boundary".into())),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ShapeRepr {
    Ellipse {
        #[serde(with = "io::matrix_rows")]
        c_shape: DMatrix<f64>,
        k: f64,
        #[serde(with = "io::vector")]
        center: DVector<f64>,
    },
    Hull {
        #[serde(with = "io::matrix_rows")]
        c_shape: DMatrix<f64>,
        k: f64,
        #[serde(with = "io::vector_list")]
        shifts: Vec<DVector<f64>>,
        directions: usize,
        tol: f64,
    },
    Parallelogram {
        #[serde(with = "io::matrix_rows")]
        c_shape: DMatrix<f64>,
        bounds: Vec<f64>,
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
    },
    Box {
        #[serde(with = "io::vector")]
        lower: DVector<f64>,
        #[serde(with = "io::vector")]
        upper: DVector<f64>,
    },
    PointCloud {
        #[serde(with = "io::matrix_rows")]
        c_bar: DMatrix<f64>,
        #[serde(with = "io::vector_list")]
        points: Vec<DVector<f64>>,
    },
}

impl From<&ConfidenceShape> for ShapeRepr {
    fn from(shape: &ConfidenceShape) -> Self {
        match shape {
            ConfidenceShape::Ellipse(e) => ShapeRepr::Ellipse {
                c_shape: e.c_shape().clone(),
                k: e.k,
                center: e.center.clone(),
            },
            ConfidenceShape::Hull(h) => ShapeRepr::Hull {
                c_shape: h.base.c_shape().clone(),
                k: h.base.k,
                shifts: h.shifts.clone(),
                directions: h.directions.len(),
                tol: h.tol,
            },
            ConfidenceShape::Parallelogram(p) => ShapeRepr::Parallelogram {
                c_shape: p.c_shape().clone(),
                bounds: p.bounds.clone(),
                scale: p.scale,
                rate: p.rate,
            },
            ConfidenceShape::Box(b) => ShapeRepr::Box {
                lower: b.lower.clone(),
                upper: b.upper.clone(),
            },
            ConfidenceShape::PointCloud(c) => ShapeRepr::PointCloud {
                c_bar: c.c_bar.clone(),
                points: c.points.clone(),
            },
        }
    }
}

impl TryFrom<ShapeRepr> for ConfidenceShape {
    type Error = Error;

    fn try_from(repr: ShapeRepr) -> Result<Self> {
        Ok(match repr {
            ShapeRepr::Ellipse { c_shape, k, center } => ConfidenceShape::Ellipse(Ellipse::new(c_shape, k, center)?),
            ShapeRepr::Hull {
                c_shape,
                k,
                shifts,
                directions,
                tol,
            } => {
                let p = c_shape.nrows();
                let dirs = default_directions(p);
                if directions != dirs.len() {
                    return Err(Error::InvalidInput(format!(
                        "hull was built with {directions} directions, default grid has {}",
                        dirs.len()
                    )));
                }
                ConfidenceShape::Hull(HullOfShiftedEllipses::with_directions(c_shape, k, shifts, dirs, Some(tol))?)
            }
            ShapeRepr::Parallelogram {
                c_shape,
                bounds,
                scale,
                rate,
            } => {
                let mut par = Parallelogram::new(c_shape, bounds, scale)?;
                par.rate = rate;
                ConfidenceShape::Parallelogram(par)
            }
            ShapeRepr::Box { lower, upper } => ConfidenceShape::Box(AxisBox::new(lower, upper)?),
            ShapeRepr::PointCloud { c_bar, points } => ConfidenceShape::PointCloud(closure_condition_a(points, c_bar)?),
        })
    }
}

impl Serialize for ConfidenceShape {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ShapeRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConfidenceShape {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ShapeRepr::deserialize(d)?;
        ConfidenceShape::try_from(repr).map_err(serde::de::Error::custom)
    }
}

/// Sampling budget for [`check_condition_a`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionCheckConfig {
    /// Apex points `m` drawn uniformly from the shape.
    pub apex_samples: usize,
    /// Random interior points per cone, on top of the apex and edge rays.
    pub points_per_cone: usize,
    pub seed: u64,
}

impl Default for ConditionCheckConfig {
    fn default() -> Self {
        Self {
            apex_samples: 200,
            points_per_cone: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConditionVerdict {
    HoldsOnSample,
    Counterexample {
        #[serde(with = "io::vector")]
        m: DVector<f64>,
        d: SignVector,
        #[serde(with = "io::vector")]
        z: DVector<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub verdict: ConditionVerdict,
    pub apexes: usize,
    pub cone_points: usize,
    #[serde(with = "io::vector")]
    pub clip_lower: DVector<f64>,
    #[serde(with = "io::vector")]
    pub clip_upper: DVector<f64>,
}

const MAX_REJECTION_DRAWS: usize = 1_000_000;
const RAY_FRACTIONS: [f64; 6] = [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0];

/// Draws `count` points uniformly from `shape` by rejection in its bounding
/// box.
pub fn sample_uniform_in_shape<R: Rng>(shape: &ConfidenceShape, count: usize, rng: &mut R) -> Result<Vec<DVector<f64>>> {
    let bbox = shape.bounding_box();
    let mut out = Vec::with_capacity(count);
    let budget = MAX_REJECTION_DRAWS.max(1000 * count);
    let mut draws = 0;
    while out.len() < count {
        if draws >= budget {
            if out.is_empty() {
                return Err(Error::EmptyShape(draws));
            }
            break;
        }
        draws += 1;
        let z = bbox.sample(rng);
        if shape.contains(&z) {
            out.push(z);
        }
    }
    Ok(out)
}

/// Points of `A^d_C(m)` inside `clip`: the apex, points along each edge ray
/// and random nonnegative combinations of the edges. Only points that pass
/// the exact cone test are returned.
pub fn sample_cone_points<R: Rng>(
    cone: &OrthantCone,
    clip: &BoundingBox,
    random_points: usize,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let edges = cone.edge_directions()?;
    let diam = 2.0 * clip.half_widths().amax();
    let m = cone.apex();
    let mut candidates = Vec::with_capacity(1 + edges.len() * RAY_FRACTIONS.len() + random_points);
    candidates.push(m.clone());
    for e in &edges {
        for f in RAY_FRACTIONS {
            candidates.push(m + e * (f * diam));
        }
    }
    for _ in 0..random_points {
        // log-uniform overall scale so both the apex region and the far
        // field are explored
        let scale = diam * 10f64.powf(rng.random_range(-3.0..0.5));
        let mut z = m.clone();
        for e in &edges {
            let w: f64 = rng.sample(Exp1);
            z += e * (scale * w);
        }
        candidates.push(z);
    }
    Ok(candidates
        .into_iter()
        .filter(|z| clip.contains(z) && cone.contains(z))
        .collect())
}

/// Sampled check of the cone-closure condition. Returns the first
/// `(m, d, z)` with `z` in `A^d_C(m)` but outside the shape. A clean pass
/// is evidence, not proof.
pub fn check_condition_a(
    shape: &ConfidenceShape,
    c_bar: &DMatrix<f64>,
    config: &ConditionCheckConfig,
) -> Result<ConditionReport> {
    let p = shape.dim();
    check_dim(p)?;
    if c_bar.shape() != (p, p) {
        return Err(Error::Dimension("condition matrix".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let apexes = sample_uniform_in_shape(shape, config.apex_samples, &mut rng)?;
    let clip = shape.bounding_box().scaled(2.0);
    let mut cone_points = 0;
    for m in &apexes {
        for d in SignVector::enumerate(p) {
            let cone = OrthantCone::new(c_bar.clone(), d.clone(), m.clone())?;
            for z in sample_cone_points(&cone, &clip, config.points_per_cone, &mut rng)? {
                cone_points += 1;
                if !shape.contains(&z) {
                    return Ok(ConditionReport {
                        verdict: ConditionVerdict::Counterexample { m: m.clone(), d, z },
                        apexes: apexes.len(),
                        cone_points,
                        clip_lower: clip.lower.clone(),
                        clip_upper: clip.upper.clone(),
                    });
                }
            }
        }
    }
    Ok(ConditionReport {
        verdict: ConditionVerdict::HoldsOnSample,
        apexes: apexes.len(),
        cone_points,
        clip_lower: clip.lower,
        clip_upper: clip.upper,
    })
}
