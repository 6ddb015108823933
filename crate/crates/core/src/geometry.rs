//! Norms, product metrics, dual norms, duality mappings and point-to-set
//! distances.
//!
//! Vectors are plain `f64` slices; every norm here is finite dimensional and
//! its dual norm and duality mapping are available in closed form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_order, check_rho, Error, Result};
use crate::extended::Extended;
use crate::sampling::{mix_seed, unit_directions, Halton};

/// Default tolerance for closed-form algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    Euclidean,
    /// `p ∈ [1, ∞]`; `f64::INFINITY` encodes the max-norm.
    P(f64),
    /// `max_i w_i |v_i|` with positive weights.
    WeightedMax(Vec<f64>),
}

/// A norm on `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    kind: NormKind,
    dim: usize,
}

impl NormSpec {
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        NormSpec {
            kind: NormKind::Euclidean,
            dim,
        }
    }

    pub fn p_norm(p: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNorm("dimension must be positive".into()));
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidNorm(format!("p must be >= 1, got {p}")));
        }
        if p == 2.0 {
            return Ok(Self::euclidean(dim));
        }
        Ok(NormSpec { kind: NormKind::P(p), dim })
    }

    pub fn weighted_max(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidNorm("dimension must be positive".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidNorm("weights must be positive and finite".into()));
        }
        let dim = weights.len();
        Ok(NormSpec {
            kind: NormKind::WeightedMax(weights),
            dim,
        })
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exponent of the equivalent p-norm, if this is one.
    fn exponent(&self) -> Option<f64> {
        match self.kind {
            NormKind::Euclidean => Some(2.0),
            NormKind::P(p) => Some(p),
            NormKind::WeightedMax(_) => None,
        }
    }

    /// Euclidean norm and `p ∈ (1, ∞)` are differentiable away from the origin.
    pub fn is_smooth(&self) -> bool {
        matches!(self.exponent(), Some(p) if p > 1.0 && p.is_finite())
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Euclidean => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
            NormKind::P(p) => p_norm(v, *p),
            NormKind::WeightedMax(w) => v.iter().zip(w).map(|(a, w)| w * a.abs()).fold(0.0, f64::max),
        }
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        if a.len() == 1 {
            let d = (a[0] - b[0]).abs();
            return match &self.kind {
                NormKind::WeightedMax(w) => w[0] * d,
                _ => d,
            };
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
        self.norm(&diff)
    }

    /// Norm of a functional in the dual space.
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Euclidean => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
            NormKind::P(p) => p_norm(v, conjugate_exponent(*p)),
            NormKind::WeightedMax(w) => v.iter().zip(w).map(|(a, w)| a.abs() / w).sum(),
        }
    }

    /// Coordinate half-widths of a box containing the ball of radius `r`.
    pub fn box_half_widths(&self, r: f64) -> Vec<f64> {
        match &self.kind {
            NormKind::WeightedMax(w) => w.iter().map(|w| r / w).collect(),
            _ => vec![r; self.dim],
        }
    }
}

fn p_norm(v: &[f64], p: f64) -> f64 {
    if p == f64::INFINITY {
        v.iter().fold(0.0, |m, a| m.max(a.abs()))
    } else if p == 1.0 {
        v.iter().map(|a| a.abs()).sum()
    } else {
        let m = v.iter().fold(0.0, |m: f64, a| m.max(a.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|a| (a.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `p / (p - 1)` with `1 ↔ ∞`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p == f64::INFINITY {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// A point `(x, y)` of the product space `X × Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ProductPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        ProductPoint { x, y }
    }

    pub fn scalar(x: f64, y: f64) -> Self {
        ProductPoint { x: vec![x], y: vec![y] }
    }
}

/// Which admissible ρ-metric to use on `X × Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductMetric {
    /// `max{d(x₁,x₂), ρ·d(y₁,y₂)}`
    Max,
    /// `d(x₁,x₂) + ρ·d(y₁,y₂)`
    Sum,
}

impl ProductMetric {
    #[inline]
    pub fn combine(self, dx: f64, dy: f64, rho: f64) -> f64 {
        match self {
            ProductMetric::Max => dx.max(rho * dy),
            ProductMetric::Sum => dx + rho * dy,
        }
    }
}

/// The normed product `X × Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpace {
    pub x: NormSpec,
    pub y: NormSpec,
}

impl ProductSpace {
    pub fn new(x: NormSpec, y: NormSpec) -> Self {
        ProductSpace { x, y }
    }

    pub fn euclidean(dim_x: usize, dim_y: usize) -> Self {
        ProductSpace {
            x: NormSpec::euclidean(dim_x),
            y: NormSpec::euclidean(dim_y),
        }
    }

    pub fn check_point(&self, p: &ProductPoint) -> Result<()> {
        check_dim(self.x.dim(), p.x.len())?;
        check_dim(self.y.dim(), p.y.len())
    }

    /// Parametric product distance `d_ρ` (max variant) or `d¹_ρ` (sum variant).
    pub fn prod_dist(&self, p1: &ProductPoint, p2: &ProductPoint, rho: f64, variant: ProductMetric) -> Result<f64> {
        check_rho(rho)?;
        self.check_point(p1)?;
        self.check_point(p2)?;
        Ok(variant.combine(self.x.dist(&p1.x, &p2.x), self.y.dist(&p1.y, &p2.y), rho))
    }

    /// Dual norm of the ρ-norm: `‖x*‖ + ρ⁻¹‖y*‖`.
    pub fn dual_norm_rho(&self, xstar: &[f64], ystar: &[f64], rho: f64) -> Result<f64> {
        check_rho(rho)?;
        check_dim(self.x.dim(), xstar.len())?;
        check_dim(self.y.dim(), ystar.len())?;
        Ok(self.x.dual_norm(xstar) + self.y.dual_norm(ystar) / rho)
    }
}

/// A finite description of a set of dual vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DualVectorSet {
    Singleton(Vec<f64>),
    /// Convex hull of the listed vertices.
    Polytope(Vec<Vec<f64>>),
    /// Closed ball in the dual norm.
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// A finite sample of a set without a finite exact description.
    Sampled(Vec<Vec<f64>>),
}

impl DualVectorSet {
    /// Finite representatives: the point, the vertices plus the barycenter,
    /// the center, or the samples.
    pub fn representatives(&self) -> Vec<Vec<f64>> {
        match self {
            DualVectorSet::Singleton(v) => vec![v.clone()],
            DualVectorSet::Polytope(vs) => {
                let mut out = vs.clone();
                if vs.len() > 1 {
                    let dim = vs[0].len();
                    let mut c = vec![0.0; dim];
                    for v in vs {
                        for (ci, vi) in c.iter_mut().zip(v) {
                            *ci += vi / vs.len() as f64;
                        }
                    }
                    out.push(c);
                }
                out
            }
            DualVectorSet::Ball { center, .. } => vec![center.clone()],
            DualVectorSet::Sampled(vs) => vs.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DualVectorSet::Singleton(_) | DualVectorSet::Ball { .. } => 1,
            DualVectorSet::Polytope(v) | DualVectorSet::Sampled(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self, DualVectorSet::Singleton(_))
    }

    fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> DualVectorSet {
        match self {
            DualVectorSet::Singleton(v) => DualVectorSet::Singleton(f(v)),
            DualVectorSet::Polytope(vs) => DualVectorSet::Polytope(vs.iter().map(|v| f(v)).collect()),
            DualVectorSet::Ball { center, radius } => {
                let c = f(center);
                // radius scales with the same positive factor as the center
                let scale = if dot(center, center) > 0.0 {
                    (dot(&c, &c) / dot(center, center)).sqrt()
                } else {
                    1.0
                };
                DualVectorSet::Ball {
                    center: c,
                    radius: radius * scale,
                }
            }
            DualVectorSet::Sampled(vs) => DualVectorSet::Sampled(vs.iter().map(|v| f(v)).collect()),
        }
    }

    pub fn scaled(&self, s: f64) -> DualVectorSet {
        self.map(|v| v.iter().map(|a| a * s).collect())
    }

    pub fn negated(&self) -> DualVectorSet {
        self.map(|v| v.iter().map(|a| -a).collect())
    }

    /// Membership test; `norm` is the primal norm whose dual measures balls.
    ///
    /// Polytope membership is a convex-combination feasibility test solved as
    /// a minimum-norm-point problem.
    pub fn contains(&self, z: &[f64], norm: &NormSpec, tol: f64) -> bool {
        let close = |v: &[f64]| v.iter().zip(z).all(|(a, b)| (a - b).abs() <= tol);
        match self {
            DualVectorSet::Singleton(v) => close(v),
            DualVectorSet::Sampled(vs) => vs.iter().any(|v| close(v)),
            DualVectorSet::Ball { center, radius } => {
                let d: Vec<f64> = z.iter().zip(center).map(|(a, b)| a - b).collect();
                norm.dual_norm(&d) <= radius + tol
            }
            DualVectorSet::Polytope(vs) => {
                let shifted: Vec<Vec<f64>> = vs.iter().map(|v| v.iter().zip(z).map(|(a, b)| a - b).collect()).collect();
                let p = min_norm_point(&shifted);
                dot(&p, &p).sqrt() <= tol
            }
        }
    }
}

/// Normalized duality mapping `J(y) = {y* : ‖y*‖ = 1, ⟨y*, y⟩ = ‖y‖}`, `y ≠ 0`.
///
/// Smooth norms give a singleton (the gradient of the norm). For `p ∈ {1, ∞}`
/// and weighted-max norms the result is the exposed face of the dual unit
/// ball, listed by its vertices; coordinates within `tol` of a tie or of zero
/// are treated as active.
pub fn duality_map(y: &[f64], norm: &NormSpec, tol: f64) -> Result<DualVectorSet> {
    check_dim(norm.dim(), y.len())?;
    let ny = norm.norm(y);
    if ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    let sign = |v: f64| if v >= 0.0 { 1.0 } else { -1.0 };
    match norm.kind() {
        NormKind::Euclidean => Ok(DualVectorSet::Singleton(y.iter().map(|v| v / ny).collect())),
        NormKind::P(p) if *p == 1.0 => {
            let zeros: Vec<usize> = (0..y.len()).filter(|&i| y[i].abs() <= tol * ny).collect();
            if zeros.len() > 16 {
                return Err(Error::InvalidNorm("too many zero coordinates for an l1 face".into()));
            }
            let base: Vec<f64> = y.iter().map(|&v| if v.abs() <= tol * ny { 0.0 } else { sign(v) }).collect();
            if zeros.is_empty() {
                return Ok(DualVectorSet::Singleton(base));
            }
            let vertices = (0..1usize << zeros.len())
                .map(|mask| {
                    let mut v = base.clone();
                    for (bit, &i) in zeros.iter().enumerate() {
                        v[i] = if mask & (1 << bit) != 0 { 1.0 } else { -1.0 };
                    }
                    v
                })
                .collect();
            Ok(DualVectorSet::Polytope(vertices))
        }
        NormKind::P(p) if *p == f64::INFINITY => face_of_max(y, &vec![1.0; y.len()], ny, tol),
        NormKind::P(p) => {
            let p = *p;
            let scale = ny.powf(p - 1.0);
            Ok(DualVectorSet::Singleton(
                y.iter().map(|&v| sign(v) * v.abs().powf(p - 1.0) / scale).collect(),
            ))
        }
        NormKind::WeightedMax(w) => face_of_max(y, w, ny, tol),
    }
}

fn face_of_max(y: &[f64], w: &[f64], ny: f64, tol: f64) -> Result<DualVectorSet> {
    let sign = |v: f64| if v >= 0.0 { 1.0 } else { -1.0 };
    let vertices: Vec<Vec<f64>> = (0..y.len())
        .filter(|&i| w[i] * y[i].abs() >= ny * (1.0 - tol))
        .map(|i| {
            let mut v = vec![0.0; y.len()];
            v[i] = sign(y[i]) * w[i];
            v
        })
        .collect();
    if vertices.len() == 1 {
        Ok(DualVectorSet::Singleton(vertices.into_iter().next().unwrap()))
    } else {
        Ok(DualVectorSet::Polytope(vertices))
    }
}

/// `J^q(y) = q‖y‖^{q-1} J(y)`.
pub fn q_duality(y: &[f64], norm: &NormSpec, q: f64) -> Result<DualVectorSet> {
    check_order(q)?;
    let j = duality_map(y, norm, ALGEBRAIC_TOL)?;
    Ok(j.scaled(q * norm.norm(y).powf(q - 1.0)))
}

/// Deterministic sample of the dual unit ball: the origin, points on the
/// dual sphere, and interior points. One dimension is exact: `{-1, 0, 1}`.
pub fn dual_ball_samples(norm: &NormSpec, budget: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = norm.dim();
    let mut out = vec![vec![0.0; dim]];
    if budget == 0 {
        return out;
    }
    if dim == 1 {
        let w = match norm.kind() {
            NormKind::WeightedMax(w) => w[0],
            _ => 1.0,
        };
        out.push(vec![-w]);
        out.push(vec![w]);
        return out;
    }
    let sphere = dual_sphere_samples(norm, budget, seed);
    let radial = Halton::new(1, mix_seed(seed, 17));
    for (i, d) in sphere.into_iter().enumerate() {
        // every other sample is interior
        let r = if i % 2 == 0 { 1.0 } else { radial.point(i)[0] };
        out.push(d.iter().map(|v| v * r).collect());
    }
    out
}

/// Vectors of dual norm exactly one, evenly spread.
pub fn dual_sphere_samples(norm: &NormSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    unit_directions(norm.dim(), count, seed)
        .into_iter()
        .map(|d| {
            let n = norm.dual_norm(&d);
            d.iter().map(|v| v / n).collect()
        })
        .collect()
}

/// Normalized ε-enlargement `J^q_ε(y)`: normalizations of `y* + εv*` with
/// `y* ∈ J^q(y)`, `‖v*‖ ≤ 1`, skipping `y* + εv* = 0`. With `eps = 0` this is
/// the normalization of `J^q(y)`, i.e. `J(y)`.
pub fn normalized_enlargement(y: &[f64], norm: &NormSpec, q: f64, eps: f64, budget: usize, seed: u64) -> Result<DualVectorSet> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidProblem(format!("enlargement eps must be nonnegative, got {eps}")));
    }
    let jq = q_duality(y, norm, q)?;
    let perturbations = if eps == 0.0 {
        vec![vec![0.0; norm.dim()]]
    } else {
        dual_ball_samples(norm, budget, seed)
    };
    let mut out: Vec<Vec<f64>> = Vec::new();
    for ys in jq.representatives() {
        for v in &perturbations {
            let w: Vec<f64> = ys.iter().zip(v).map(|(a, b)| a + eps * b).collect();
            let n = norm.dual_norm(&w);
            if n <= 1e-300 {
                continue;
            }
            let u: Vec<f64> = w.iter().map(|a| a / n).collect();
            if !out.iter().any(|o| o.iter().zip(&u).all(|(a, b)| (a - b).abs() <= 1e-15)) {
                out.push(u);
            }
        }
    }
    if out.len() == 1 {
        Ok(DualVectorSet::Singleton(out.pop().unwrap()))
    } else {
        Ok(DualVectorSet::Sampled(out))
    }
}

/// `J^q(y)` when `eps = 0`, otherwise a deterministic sample of `J^q_ε(y)`.
pub fn q_duality_enlargement(y: &[f64], norm: &NormSpec, q: f64, eps: f64, budget: usize, seed: u64) -> Result<DualVectorSet> {
    check_order(q)?;
    if eps == 0.0 {
        q_duality(y, norm, q)
    } else {
        normalized_enlargement(y, norm, q, eps, budget, seed)
    }
}

/// `ξ_q(y) = ‖y − ȳ‖^{1−q} / q`.
pub fn xi_q(y: &[f64], ybar: &[f64], q: f64, norm: &NormSpec) -> Result<f64> {
    check_order(q)?;
    check_dim(norm.dim(), y.len())?;
    check_dim(norm.dim(), ybar.len())?;
    let d = norm.dist(y, ybar);
    if d == 0.0 {
        return Err(Error::AtReferenceValue);
    }
    Ok(d.powf(1.0 - q) / q)
}

/// Exact distance from `x` to a finite point list; `+∞` for an empty list.
pub fn point_to_set_distance(x: &[f64], points: &[Vec<f64>], norm: &NormSpec) -> Extended {
    points
        .iter()
        .map(|p| Extended::Finite(norm.dist(x, p)))
        .fold(Extended::Infinite, Extended::min)
}

/// Euclidean minimum-norm point of the convex hull of `points` (Wolfe's
/// algorithm).
pub fn min_norm_point(points: &[Vec<f64>]) -> Vec<f64> {
    assert!(!points.is_empty(), "min_norm_point of an empty set");
    let dim = points[0].len();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1e-300);
    let combo = |s: &[usize], w: &[f64]| {
        let mut x = vec![0.0; dim];
        for (&i, &wi) in s.iter().zip(w) {
            for (xk, pk) in x.iter_mut().zip(&points[i]) {
                *xk += wi * pk;
            }
        }
        x
    };
    let first = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap();
    let mut support = vec![first];
    let mut weights = vec![1.0];
    let mut x = points[first].clone();

    for _ in 0..(50 * points.len() + 50) {
        let xx = dot(&x, &x);
        let (j, xpj) = (0..points.len())
            .map(|i| (i, dot(&x, &points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xpj >= xx - 1e-13 * scale || support.contains(&j) {
            break;
        }
        support.push(j);
        weights.push(0.0);
        loop {
            let alpha = affine_minimizer(points, &support);
            if alpha.iter().all(|&a| a > 1e-14) {
                weights = alpha;
                x = combo(&support, &weights);
                break;
            }
            let mut theta: f64 = 1.0;
            for (l, a) in weights.iter().zip(&alpha) {
                if *a <= 1e-14 {
                    let denom = l - a;
                    if denom > 0.0 {
                        theta = theta.min(l / denom);
                    }
                }
            }
            for (l, a) in weights.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            let mut k = 0;
            while k < support.len() {
                if weights[k] <= 1e-14 && support.len() > 1 {
                    support.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            x = combo(&support, &weights);
            if support.len() == 1 {
                break;
            }
        }
    }
    x
}

/// Minimizer of `‖Σ α_i p_i‖` over the affine hull (`Σ α_i = 1`).
fn affine_minimizer(points: &[Vec<f64>], support: &[usize]) -> Vec<f64> {
    let k = support.len();
    let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            kkt[(a, b)] = dot(&points[support[a]], &points[support[b]]);
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = kkt
        .clone()
        .lu()
        .solve(&rhs)
        .or_else(|| kkt.svd(true, true).solve(&rhs, 1e-14).ok())
        .unwrap_or_else(|| {
            let mut v = DVector::zeros(k + 1);
            v[0] = 1.0;
            v
        });
    sol.iter().take(k).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r1() -> ProductSpace {
        ProductSpace::euclidean(1, 1)
    }

    #[test]
    fn prod_dist_examples() {
        let s = r1();
        let a = ProductPoint::scalar(0.0, 0.0);
        let b = ProductPoint::scalar(1.0, 2.0);
        assert_eq!(s.prod_dist(&a, &a, 0.3, ProductMetric::Max).unwrap(), 0.0);
        assert_eq!(s.prod_dist(&a, &a, 0.3, ProductMetric::Sum).unwrap(), 0.0);
        assert_eq!(s.prod_dist(&a, &b, 0.5, ProductMetric::Max).unwrap(), 1.0);
        assert_eq!(s.prod_dist(&a, &b, 0.5, ProductMetric::Sum).unwrap(), 2.0);
    }

    #[test]
    fn prod_dist_errors() {
        let s = r1();
        let a = ProductPoint::scalar(0.0, 0.0);
        assert_eq!(s.prod_dist(&a, &a, 0.0, ProductMetric::Max), Err(Error::NonPositiveRho(0.0)));
        let bad = ProductPoint::new(vec![0.0, 1.0], vec![0.0]);
        assert!(matches!(
            s.prod_dist(&a, &bad, 1.0, ProductMetric::Max),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dual_norm_rho_examples() {
        let s = r1();
        assert_eq!(s.dual_norm_rho(&[0.0], &[0.0], 0.7).unwrap(), 0.0);
        assert_eq!(s.dual_norm_rho(&[1.0], &[2.0], 0.5).unwrap(), 5.0);
        let s2 = ProductSpace::euclidean(2, 2);
        let v = s2.dual_norm_rho(&[3.0, 4.0], &[0.0, 2.0], 1.0).unwrap();
        assert!((v - 7.0).abs() < 1e-15);
        assert!(s.dual_norm_rho(&[1.0], &[1.0], -1.0).is_err());
    }

    #[test]
    fn duality_map_examples() {
        let e2 = NormSpec::euclidean(2);
        let j = duality_map(&[3.0, 4.0], &e2, 1e-9).unwrap();
        match j {
            DualVectorSet::Singleton(v) => {
                assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15)
            }
            other => panic!("expected singleton, got {other:?}"),
        }
        let e1 = NormSpec::euclidean(1);
        assert_eq!(duality_map(&[-2.0], &e1, 1e-9).unwrap(), DualVectorSet::Singleton(vec![-1.0]));
        assert_eq!(duality_map(&[0.0, 0.0], &e2, 1e-9), Err(Error::ZeroVector));
    }

    /// Extreme points of `{y* : ‖y*‖₁ = 1, ⟨y*, y⟩ = 1}` for `y = (1, 1)`,
    /// enumerated over a fine grid of the l1 sphere.
    #[test]
    fn max_norm_face_matches_enumeration() {
        let inf = NormSpec::p_norm(f64::INFINITY, 2).unwrap();
        let j = duality_map(&[1.0, 1.0], &inf, 1e-9).unwrap();
        let n = 4000;
        let mut on_face = Vec::new();
        for k in 0..4 * n {
            let t = k as f64 / n as f64;
            // walk the l1 sphere
            let (a, b) = match k / n {
                0 => (1.0 - t, t),
                1 => (-(t - 1.0), 1.0 - (t - 1.0)),
                2 => (-(1.0 - (t - 2.0)), -(t - 2.0)),
                _ => (t - 3.0, -(1.0 - (t - 3.0))),
            };
            if (a + b - 1.0_f64).abs() < 1e-12 {
                on_face.push((a, b));
            }
        }
        // the face is the segment from (1,0) to (0,1): its extreme points
        let min_a = on_face.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let max_a = on_face.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        assert!(min_a.abs() < 1e-12 && (max_a - 1.0).abs() < 1e-12);
        assert_eq!(j, DualVectorSet::Polytope(vec![vec![1.0, 0.0], vec![0.0, 1.0]]));
        assert!(j.contains(&[0.25, 0.75], &inf, 1e-9));
        assert!(!j.contains(&[0.5, 0.6], &inf, 1e-9));
    }

    #[test]
    fn l1_face_on_zero_coordinates() {
        let l1 = NormSpec::p_norm(1.0, 2).unwrap();
        let j = duality_map(&[2.0, 0.0], &l1, 1e-9).unwrap();
        assert_eq!(j, DualVectorSet::Polytope(vec![vec![1.0, -1.0], vec![1.0, 1.0]]));
        assert!(j.contains(&[1.0, 0.3], &l1, 1e-9));
    }

    #[test]
    fn q_duality_examples() {
        let e1 = NormSpec::euclidean(1);
        let a = q_duality_enlargement(&[4.0], &e1, 0.5, 0.0, 8, 0).unwrap();
        assert_eq!(a, DualVectorSet::Singleton(vec![0.25]));
        let b = normalized_enlargement(&[4.0], &e1, 0.5, 0.0, 8, 0).unwrap();
        assert_eq!(b, DualVectorSet::Singleton(vec![1.0]));
        let c = q_duality_enlargement(&[-3.0], &e1, 1.0, 0.0, 8, 0).unwrap();
        assert_eq!(c, DualVectorSet::Singleton(vec![-1.0]));
        assert!(q_duality_enlargement(&[0.0], &e1, 0.5, 0.0, 8, 0).is_err());
        assert!(q_duality_enlargement(&[1.0], &e1, 1.5, 0.0, 8, 0).is_err());
    }

    #[test]
    fn enlargement_in_one_dimension_is_exact() {
        let e1 = NormSpec::euclidean(1);
        // J^q(4) = 0.25; eps = 0.1 cannot flip the sign
        let a = normalized_enlargement(&[4.0], &e1, 0.5, 0.1, 8, 0).unwrap();
        assert_eq!(a, DualVectorSet::Singleton(vec![1.0]));
        // eps = 0.5 > 0.25 reaches the opposite sign
        let b = normalized_enlargement(&[4.0], &e1, 0.5, 0.5, 8, 0).unwrap();
        let mut reps = b.representatives();
        reps.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(reps, vec![vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn xi_q_examples() {
        let e1 = NormSpec::euclidean(1);
        assert_eq!(xi_q(&[3.0], &[1.0], 1.0, &e1).unwrap(), 1.0);
        assert_eq!(xi_q(&[4.0], &[0.0], 0.5, &e1).unwrap(), 4.0);
        let x: f64 = 0.3;
        assert!((xi_q(&[x * x], &[0.0], 0.5, &e1).unwrap() - 2.0 * x).abs() < 1e-15);
        assert_eq!(xi_q(&[1.0], &[1.0], 0.5, &e1), Err(Error::AtReferenceValue));
    }

    #[test]
    fn point_to_set_examples() {
        let e1 = NormSpec::euclidean(1);
        let pts = vec![vec![-1.0], vec![0.5], vec![2.0]];
        assert_eq!(point_to_set_distance(&[0.5], &pts, &e1), Extended::Finite(0.0));
        let halfline: Vec<Vec<f64>> = (0..100).map(|k| vec![-(k as f64) * 0.01]).collect();
        assert_eq!(point_to_set_distance(&[0.5], &halfline, &e1), Extended::Finite(0.5));
        assert_eq!(point_to_set_distance(&[0.5], &[vec![2.0]], &e1), Extended::Finite(1.5));
        assert_eq!(point_to_set_distance(&[0.5], &[], &e1), Extended::Infinite);
    }

    #[test]
    fn min_norm_point_of_segment_and_triangle() {
        let p = min_norm_point(&[vec![1.0, -1.0], vec![1.0, 1.0]]);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let p = min_norm_point(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]]);
        assert!(dot(&p, &p).sqrt() < 1e-12);
        let p = min_norm_point(&[vec![2.0, 1.0], vec![2.0, 3.0], vec![5.0, 0.0]]);
        assert!((p[0] - 2.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_norm_duality_is_consistent() {
        for &p in &[1.5, 3.0, 7.0] {
            let n = NormSpec::p_norm(p, 3).unwrap();
            let y = [0.3, -1.2, 2.0];
            let j = match duality_map(&y, &n, 1e-9).unwrap() {
                DualVectorSet::Singleton(v) => v,
                other => panic!("{other:?}"),
            };
            assert!((n.dual_norm(&j) - 1.0).abs() < 1e-9);
            assert!((dot(&j, &y) - n.norm(&y)).abs() < 1e-9 * n.norm(&y));
        }
    }
}
