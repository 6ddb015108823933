//! Graph oracles: membership, deterministic sampling, fibers and
//! coderivatives of set-valued mappings given by their graphs.

use std::fmt;
use std::sync::Arc;

use crate::extended::Extended;
use crate::geometry::{DualVectorSet, NormSpec, ProductPoint, ProductSpace};
use crate::sampling::{lattice, mix_seed, unit_directions, Halton};

pub type VectorMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Rows are the gradients (with respect to `x`) of the output components.
pub type JacobianMap = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// Value of the Fréchet coderivative `D*F(x,y)(y*)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoderivativeValue {
    Empty,
    Set(DualVectorSet),
}

impl CoderivativeValue {
    /// Smallest norm of an element; `+∞` for the empty set.
    pub fn min_norm(&self, norm: &NormSpec) -> Extended {
        match self {
            CoderivativeValue::Empty => Extended::Infinite,
            CoderivativeValue::Set(DualVectorSet::Polytope(vs)) => {
                let mut best = vs.iter().map(|v| norm.dual_norm(v)).fold(f64::INFINITY, f64::min);
                let p = crate::geometry::min_norm_point(vs);
                best = best.min(norm.dual_norm(&p));
                Extended::Finite(best)
            }
            CoderivativeValue::Set(set) => set
                .representatives()
                .iter()
                .map(|v| Extended::Finite(norm.dual_norm(v)))
                .fold(Extended::Infinite, Extended::min),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, CoderivativeValue::Empty)
    }
}

/// A rectangular region `‖u − x‖ ≤ radius_x`, `‖v − y‖ ≤ radius_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region<'a> {
    pub center: &'a ProductPoint,
    pub radius_x: f64,
    pub radius_y: f64,
}

impl<'a> Region<'a> {
    pub fn ball(center: &'a ProductPoint, radius: f64) -> Self {
        Region {
            center,
            radius_x: radius,
            radius_y: radius,
        }
    }

    pub fn contains(&self, space: &ProductSpace, p: &ProductPoint) -> bool {
        space.x.dist(&p.x, &self.center.x) <= self.radius_x && space.y.dist(&p.y, &self.center.y) <= self.radius_y
    }
}

pub trait GraphOracle: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;

    fn contains(&self, p: &ProductPoint, tol: f64) -> bool;

    /// Deterministic graph points inside `region`.
    fn sample(&self, space: &ProductSpace, region: &Region, budget: usize, seed: u64) -> Vec<ProductPoint>;

    /// Graph points close to `at`, arranged along rays so that every
    /// direction of approach is represented.
    fn neighborhood(&self, space: &ProductSpace, at: &ProductPoint, radius: f64, budget: usize, seed: u64) -> Vec<ProductPoint>;

    /// `d(target, F(x))`; `+∞` when `F(x)` is empty.
    fn fiber_distance(&self, x: &[f64], target: &[f64], norm: &NormSpec) -> Extended;

    /// Deterministic points of `F⁻¹(target)` within `radius` of `center`.
    #[allow(clippy::too_many_arguments)]
    fn preimage_sample(
        &self,
        space: &ProductSpace,
        target: &[f64],
        center: &[f64],
        radius: f64,
        budget: usize,
        seed: u64,
        tol: f64,
    ) -> Vec<Vec<f64>>;

    /// All graph points, for finite graphs.
    fn enumerate(&self) -> Option<&[ProductPoint]> {
        None
    }

    /// Fréchet coderivative derived from the graph description, if available.
    fn coderivative(&self, _p: &ProductPoint, _ystar: &[f64], _tol: f64) -> Option<CoderivativeValue> {
        None
    }
}

/// One piece `{(x, y) : x ∈ box, lower(x) ≤ y ≤ upper(x)}` (componentwise).
///
/// Without an upper map the piece is the graph of `lower`. Upper components
/// may be `+∞`.
#[derive(Clone)]
pub struct Piece {
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    pub lower: VectorMap,
    pub upper: Option<VectorMap>,
    pub lower_jacobian: Option<JacobianMap>,
    pub upper_jacobian: Option<JacobianMap>,
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Piece")
            .field("domain_lo", &self.domain_lo)
            .field("domain_hi", &self.domain_hi)
            .field("set_valued", &self.upper.is_some())
            .finish()
    }
}

impl Piece {
    pub fn single(domain_lo: Vec<f64>, domain_hi: Vec<f64>, map: VectorMap, jacobian: Option<JacobianMap>) -> Self {
        Piece {
            domain_lo,
            domain_hi,
            lower: map,
            upper: None,
            lower_jacobian: jacobian,
            upper_jacobian: None,
        }
    }

    pub fn interval(
        domain_lo: Vec<f64>,
        domain_hi: Vec<f64>,
        lower: VectorMap,
        upper: VectorMap,
        lower_jacobian: Option<JacobianMap>,
        upper_jacobian: Option<JacobianMap>,
    ) -> Self {
        Piece {
            domain_lo,
            domain_hi,
            lower,
            upper: Some(upper),
            lower_jacobian,
            upper_jacobian,
        }
    }

    fn in_domain(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.domain_lo.iter().zip(&self.domain_hi))
            .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
    }

    fn bounds(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lo = (self.lower)(x);
        let hi = match &self.upper {
            Some(u) => u(x),
            None => lo.clone(),
        };
        (lo, hi)
    }

    /// Intersection of the domain with a box; `None` when empty.
    fn clip(&self, lo: &[f64], hi: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let a: Vec<f64> = lo.iter().zip(&self.domain_lo).map(|(p, q)| p.max(*q)).collect();
        let b: Vec<f64> = hi.iter().zip(&self.domain_hi).map(|(p, q)| p.min(*q)).collect();
        if a.iter().zip(&b).any(|(p, q)| p > q) {
            None
        } else {
            Some((a, b))
        }
    }
}

/// A graph made of finitely many pieces.
#[derive(Debug, Clone)]
pub struct PiecewiseGraph {
    dim_x: usize,
    dim_y: usize,
    pieces: Vec<Piece>,
}

impl PiecewiseGraph {
    pub fn new(dim_x: usize, dim_y: usize, pieces: Vec<Piece>) -> Self {
        PiecewiseGraph { dim_x, dim_y, pieces }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Splits `budget` across pieces in proportion to the clipped box volume.
    fn allocate(&self, clipped: &[Option<(Vec<f64>, Vec<f64>)>], budget: usize) -> Vec<usize> {
        let volumes: Vec<f64> = clipped
            .iter()
            .map(|c| match c {
                Some((a, b)) => a.iter().zip(b).map(|(p, q)| (q - p).max(0.0)).product::<f64>(),
                None => 0.0,
            })
            .collect();
        let live = clipped.iter().filter(|c| c.is_some()).count();
        if live == 0 {
            return vec![0; clipped.len()];
        }
        let total: f64 = volumes.iter().sum();
        let mut shares: Vec<usize> = if total > 0.0 {
            volumes.iter().map(|v| ((v / total) * budget as f64).floor() as usize).collect()
        } else {
            clipped.iter().map(|c| if c.is_some() { budget / live } else { 0 }).collect()
        };
        let mut rest = budget.saturating_sub(shares.iter().sum());
        for (i, c) in clipped.iter().enumerate() {
            if rest == 0 {
                break;
            }
            if c.is_some() {
                shares[i] += 1;
                rest -= 1;
            }
        }
        shares
    }
}

fn clamp_window(lo: f64, hi: f64, center: f64, half: f64) -> Option<(f64, f64)> {
    let a = lo.max(center - half);
    let b = hi.min(center + half);
    if a <= b {
        Some((a, b))
    } else {
        None
    }
}

impl GraphOracle for PiecewiseGraph {
    fn dim_x(&self) -> usize {
        self.dim_x
    }

    fn dim_y(&self) -> usize {
        self.dim_y
    }

    fn contains(&self, p: &ProductPoint, tol: f64) -> bool {
        self.pieces.iter().any(|piece| {
            if !piece.in_domain(&p.x, 0.0) {
                return false;
            }
            let (lo, hi) = piece.bounds(&p.x);
            p.y.iter().zip(lo.iter().zip(&hi)).all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
        })
    }

    fn sample(&self, space: &ProductSpace, region: &Region, budget: usize, seed: u64) -> Vec<ProductPoint> {
        let c = region.center;
        let hx = space.x.box_half_widths(region.radius_x);
        let hy = space.y.box_half_widths(region.radius_y);
        let blo: Vec<f64> = c.x.iter().zip(&hx).map(|(v, h)| v - h).collect();
        let bhi: Vec<f64> = c.x.iter().zip(&hx).map(|(v, h)| v + h).collect();
        let clipped: Vec<_> = self.pieces.iter().map(|p| p.clip(&blo, &bhi)).collect();
        let shares = self.allocate(&clipped, budget);
        let mut out = Vec::with_capacity(budget);
        for (k, (piece, clip)) in self.pieces.iter().zip(&clipped).enumerate() {
            let Some((a, b)) = clip else { continue };
            let n = shares[k];
            if n == 0 {
                continue;
            }
            let set_valued = piece.upper.is_some();
            let extra = if set_valued { self.dim_y } else { 0 };
            let halton = Halton::new(self.dim_x + extra, mix_seed(seed, k as u64));
            for i in 0..n {
                let h = halton.point(i);
                let u: Vec<f64> = (0..self.dim_x).map(|d| a[d] + h[d] * (b[d] - a[d])).collect();
                if space.x.dist(&u, &c.x) > region.radius_x {
                    continue;
                }
                let (lo, hi) = piece.bounds(&u);
                // interior, lower boundary and upper boundary in the ratio 2:1:1
                let mode = if set_valued { i % 4 } else { 0 };
                let mut v = Vec::with_capacity(self.dim_y);
                let mut ok = true;
                for d in 0..self.dim_y {
                    let Some((wa, wb)) = clamp_window(lo[d], hi[d], c.y[d], hy[d]) else {
                        ok = false;
                        break;
                    };
                    let val = match mode {
                        2 if lo[d] >= wa => lo[d],
                        3 if hi[d] <= wb => hi[d],
                        2 | 3 => {
                            ok = false;
                            break;
                        }
                        _ if set_valued => wa + h[self.dim_x + d] * (wb - wa),
                        _ => lo[d],
                    };
                    v.push(val);
                }
                if ok && space.y.dist(&v, &c.y) <= region.radius_y {
                    out.push(ProductPoint::new(u, v));
                }
            }
        }
        out
    }

    fn neighborhood(&self, space: &ProductSpace, at: &ProductPoint, radius: f64, budget: usize, seed: u64) -> Vec<ProductPoint> {
        let n_dirs = if self.dim_x == 1 { 2 } else { (budget / 2).max(8) };
        let dirs = unit_directions(self.dim_x, n_dirs, seed);
        let n_t = (budget / dirs.len()).max(1);
        let ts = lattice(n_t, mix_seed(seed, 1));
        let hy = space.y.box_half_widths(radius);
        // window ends lie on the sphere; tolerate rounding in their distances
        let reach = radius * (1.0 + 1e-9) + 4.0 * f64::EPSILON * space.y.norm(&at.y);
        let mut out = Vec::with_capacity(budget + 8);
        let push = |u: Vec<f64>, out: &mut Vec<ProductPoint>| {
            for piece in &self.pieces {
                if !piece.in_domain(&u, 0.0) {
                    continue;
                }
                let (lo, hi) = piece.bounds(&u);
                if piece.upper.is_none() {
                    let dy = space.y.dist(&lo, &at.y);
                    if dy <= reach {
                        out.push(ProductPoint::new(u.clone(), lo));
                    } else if dy.is_finite() {
                        // steep direction: pull the step back so that y stays in the ball
                        let s = radius / dy * (1.0 - 1e-6);
                        let w: Vec<f64> = at.x.iter().zip(&u).map(|(a, b)| a + s * (b - a)).collect();
                        if piece.in_domain(&w, 0.0) {
                            let v = (piece.lower)(&w);
                            if space.y.dist(&v, &at.y) <= reach {
                                out.push(ProductPoint::new(w, v));
                            }
                        }
                    }
                    continue;
                }
                // closest fiber point to y, both ends and the midpoint of the window
                let mut cands: Vec<Vec<f64>> = vec![Vec::new(); 4];
                let mut ok = true;
                for d in 0..self.dim_y {
                    let Some((wa, wb)) = clamp_window(lo[d], hi[d], at.y[d], hy[d]) else {
                        ok = false;
                        break;
                    };
                    cands[0].push(at.y[d].clamp(wa, wb));
                    cands[1].push(wa);
                    cands[2].push(wb);
                    cands[3].push(0.5 * (wa + wb));
                }
                if !ok {
                    continue;
                }
                for v in cands {
                    if space.y.dist(&v, &at.y) <= reach {
                        out.push(ProductPoint::new(u.clone(), v));
                    }
                }
            }
        };
        // vertical moves inside the fiber of x itself
        push(at.x.clone(), &mut out);
        for d in &dirs {
            let n = space.x.norm(d);
            for t in &ts {
                let u: Vec<f64> = at.x.iter().zip(d).map(|(x, e)| x + radius * t * e / n).collect();
                push(u, &mut out);
            }
        }
        out.retain(|p| p.x != at.x || p.y != at.y);
        out
    }

    fn fiber_distance(&self, x: &[f64], target: &[f64], norm: &NormSpec) -> Extended {
        let mut best = Extended::Infinite;
        for piece in &self.pieces {
            if !piece.in_domain(x, 0.0) {
                continue;
            }
            let (lo, hi) = piece.bounds(x);
            // monotone norms: the nearest point of a box is the clamp
            let v: Vec<f64> = target.iter().zip(lo.iter().zip(&hi)).map(|(t, (a, b))| t.clamp(*a, *b)).collect();
            best = best.min(Extended::Finite(norm.dist(&v, target)));
        }
        best
    }

    fn preimage_sample(
        &self,
        space: &ProductSpace,
        target: &[f64],
        center: &[f64],
        radius: f64,
        budget: usize,
        seed: u64,
        tol: f64,
    ) -> Vec<Vec<f64>> {
        let hx = space.x.box_half_widths(radius);
        let blo: Vec<f64> = center.iter().zip(&hx).map(|(v, h)| v - h).collect();
        let bhi: Vec<f64> = center.iter().zip(&hx).map(|(v, h)| v + h).collect();
        let mut out = Vec::new();
        let keep = |u: Vec<f64>, out: &mut Vec<Vec<f64>>| {
            if space.x.dist(&u, center) <= radius && self.fiber_distance(&u, target, &space.y).to_f64() <= tol {
                out.push(u);
            }
        };
        for (k, piece) in self.pieces.iter().enumerate() {
            let Some((a, b)) = piece.clip(&blo, &bhi) else { continue };
            // box corners catch solution sets that are faces of piece domains
            if self.dim_x <= 8 {
                for mask in 0..(1usize << self.dim_x) {
                    let u = (0..self.dim_x).map(|d| if mask & (1 << d) != 0 { b[d] } else { a[d] }).collect();
                    keep(u, &mut out);
                }
            }
            let halton = Halton::new(self.dim_x, mix_seed(seed, 100 + k as u64));
            for i in 0..budget / self.pieces.len().max(1) {
                let h = halton.point(i);
                keep((0..self.dim_x).map(|d| a[d] + h[d] * (b[d] - a[d])).collect(), &mut out);
            }
        }
        out
    }

    /// Coderivative of a piece with smooth bounds, `x` in the interior of its
    /// domain: each `y*_i` must be free (equality), nonnegative (lower bound
    /// active), nonpositive (upper bound active) or zero (inactive), and
    /// `x* = Σ y*_i ∇bound_i(x)`. Overlapping pieces must agree.
    fn coderivative(&self, p: &ProductPoint, ystar: &[f64], tol: f64) -> Option<CoderivativeValue> {
        let mut result: Option<CoderivativeValue> = None;
        for piece in &self.pieces {
            if !piece.in_domain(&p.x, 0.0) {
                continue;
            }
            let (lo, hi) = piece.bounds(&p.x);
            if !p.y.iter().zip(lo.iter().zip(&hi)).all(|(v, (a, b))| *v >= a - tol && *v <= b + tol) {
                continue;
            }
            let jl = piece.lower_jacobian.as_ref()?(&p.x);
            let ju = match (&piece.upper, &piece.upper_jacobian) {
                (None, _) => jl.clone(),
                (Some(_), Some(j)) => j(&p.x),
                (Some(_), None) => return None,
            };
            let mut xstar = vec![0.0; self.dim_x];
            let mut empty = false;
            for i in 0..self.dim_y {
                let at_lo = (p.y[i] - lo[i]).abs() <= tol;
                let at_hi = hi[i].is_finite() && (p.y[i] - hi[i]).abs() <= tol;
                let row = match (at_lo, at_hi) {
                    (true, true) => &jl[i],
                    (true, false) if ystar[i] >= 0.0 => &jl[i],
                    (false, true) if ystar[i] <= 0.0 => &ju[i],
                    (false, false) if ystar[i] == 0.0 => continue,
                    _ => {
                        empty = true;
                        break;
                    }
                };
                for (xs, g) in xstar.iter_mut().zip(row) {
                    *xs += ystar[i] * g;
                }
            }
            let value = if empty {
                CoderivativeValue::Empty
            } else {
                CoderivativeValue::Set(DualVectorSet::Singleton(xstar))
            };
            result = Some(match result {
                None => value,
                Some(prev) if prev == value => prev,
                Some(_) => CoderivativeValue::Empty,
            });
        }
        Some(result.unwrap_or(CoderivativeValue::Empty))
    }
}

/// A graph given by an explicit list of points.
#[derive(Debug, Clone)]
pub struct FiniteGraph {
    dim_x: usize,
    dim_y: usize,
    points: Vec<ProductPoint>,
}

impl FiniteGraph {
    pub fn new(points: Vec<ProductPoint>) -> Self {
        let dim_x = points.first().map_or(1, |p| p.x.len());
        let dim_y = points.first().map_or(1, |p| p.y.len());
        FiniteGraph { dim_x, dim_y, points }
    }

    pub fn points(&self) -> &[ProductPoint] {
        &self.points
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol)
}

impl GraphOracle for FiniteGraph {
    fn dim_x(&self) -> usize {
        self.dim_x
    }

    fn dim_y(&self) -> usize {
        self.dim_y
    }

    fn contains(&self, p: &ProductPoint, tol: f64) -> bool {
        self.points.iter().any(|q| close(&q.x, &p.x, tol) && close(&q.y, &p.y, tol))
    }

    fn sample(&self, space: &ProductSpace, region: &Region, budget: usize, _seed: u64) -> Vec<ProductPoint> {
        self.points
            .iter()
            .filter(|p| region.contains(space, p))
            .take(budget)
            .cloned()
            .collect()
    }

    fn neighborhood(&self, space: &ProductSpace, at: &ProductPoint, radius: f64, budget: usize, seed: u64) -> Vec<ProductPoint> {
        let mut out = self.sample(space, &Region::ball(at, radius), budget, seed);
        out.retain(|p| p != at);
        out
    }

    fn fiber_distance(&self, x: &[f64], target: &[f64], norm: &NormSpec) -> Extended {
        self.points
            .iter()
            .filter(|p| close(&p.x, x, 1e-12))
            .map(|p| Extended::Finite(norm.dist(&p.y, target)))
            .fold(Extended::Infinite, Extended::min)
    }

    fn preimage_sample(
        &self,
        space: &ProductSpace,
        target: &[f64],
        center: &[f64],
        radius: f64,
        _budget: usize,
        _seed: u64,
        tol: f64,
    ) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .filter(|p| space.y.dist(&p.y, target) <= tol && space.x.dist(&p.x, center) <= radius)
            .map(|p| p.x.clone())
            .collect()
    }

    fn enumerate(&self) -> Option<&[ProductPoint]> {
        Some(&self.points)
    }
}
