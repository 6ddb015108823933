//! Two-variable extended-real functions `f : X × Y → R∞` with `f(x̄,ȳ) = 0`:
//! the error function induced by a mapping, the single-variable extension,
//! finite tables and custom functions on a graph.

use std::sync::Arc;

use serde::Serialize;

use super::graph::Region;
use super::{solution_set_distance, DistanceOracle, MappingProblem, Schedule};
use crate::error::{check_dim, check_order, Result};
use crate::estimate::{classify, TraceEntry, Trend};
use crate::extended::Extended;
use crate::geometry::{point_to_set_distance, ProductPoint, ProductSpace};
use crate::sampling::{lattice, mix_seed, unit_directions, Halton};

pub trait LevelFunction: Send + Sync {
    fn space(&self) -> &ProductSpace;
    fn anchor(&self) -> &ProductPoint;
    fn value(&self, p: &ProductPoint) -> Extended;
    /// Points of the effective domain inside `region`.
    fn sample(&self, region: &Region, budget: usize, seed: u64) -> Vec<ProductPoint>;
    /// Domain points near `at`, spread over directions of approach.
    fn neighborhood(&self, at: &ProductPoint, radius: f64, budget: usize, seed: u64) -> Vec<ProductPoint>;
    /// The whole effective domain, when it is finite.
    fn enumerate(&self) -> Option<Vec<ProductPoint>> {
        None
    }
    /// `d(x, S(f))`.
    fn solution_distance(&self, x: &[f64]) -> Extended;
}

/// `f(x,y) = d(y,ȳ)^q` on `gph F`, `+∞` elsewhere.
#[derive(Debug, Clone)]
pub struct ErrorFunction {
    problem: MappingProblem,
    q: f64,
}

impl ErrorFunction {
    pub fn new(problem: MappingProblem, q: f64) -> Result<Self> {
        check_order(q)?;
        Ok(ErrorFunction { problem, q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn problem(&self) -> &MappingProblem {
        &self.problem
    }
}

/// Value of the induced error function at `(x, y)`.
pub fn error_function_value(ef: &ErrorFunction, x: &[f64], y: &[f64]) -> Result<Extended> {
    let space = ef.problem.space();
    check_dim(space.x.dim(), x.len())?;
    check_dim(space.y.dim(), y.len())?;
    Ok(ef.value(&ProductPoint::new(x.to_vec(), y.to_vec())))
}

impl LevelFunction for ErrorFunction {
    fn space(&self) -> &ProductSpace {
        self.problem.space()
    }

    fn anchor(&self) -> &ProductPoint {
        self.problem.anchor()
    }

    fn value(&self, p: &ProductPoint) -> Extended {
        if self.problem.contains(p) {
            let d = self.problem.dist_y(&p.y);
            Extended::Finite(if self.q == 1.0 { d } else { d.powf(self.q) })
        } else {
            Extended::Infinite
        }
    }

    fn sample(&self, region: &Region, budget: usize, seed: u64) -> Vec<ProductPoint> {
        self.problem.graph().sample(self.problem.space(), region, budget, seed)
    }

    fn neighborhood(&self, at: &ProductPoint, radius: f64, budget: usize, seed: u64) -> Vec<ProductPoint> {
        self.problem.graph().neighborhood(self.problem.space(), at, radius, budget, seed)
    }

    fn enumerate(&self) -> Option<Vec<ProductPoint>> {
        self.problem.graph().enumerate().map(|p| p.to_vec())
    }

    fn solution_distance(&self, x: &[f64]) -> Extended {
        match self.problem.exact_solution_distance(x) {
            Some(d) => Extended::Finite(d),
            None => solution_set_distance(&self.problem, x, &Schedule::default())
                .map(|d| d.value)
                .unwrap_or(Extended::Infinite),
        }
    }
}

pub type ScalarFunction = Arc<dyn Fn(&[f64]) -> Extended + Send + Sync>;

/// Embedding of `f : X → R∞` as `f̃(x, ȳ) = f(x)`, `f̃ = +∞` for `y ≠ ȳ`,
/// with `Y = R` and `ȳ = 0`.
#[derive(Clone)]
pub struct SingleVariableExtension {
    space: ProductSpace,
    anchor: ProductPoint,
    f: ScalarFunction,
    solution_distance: DistanceOracle,
}

impl SingleVariableExtension {
    pub fn new(xbar: Vec<f64>, f: ScalarFunction, solution_distance: DistanceOracle) -> Self {
        let space = ProductSpace::euclidean(xbar.len(), 1);
        SingleVariableExtension {
            space,
            anchor: ProductPoint::new(xbar, vec![0.0]),
            f,
            solution_distance,
        }
    }
}

impl LevelFunction for SingleVariableExtension {
    fn space(&self) -> &ProductSpace {
        &self.space
    }

    fn anchor(&self) -> &ProductPoint {
        &self.anchor
    }

    fn value(&self, p: &ProductPoint) -> Extended {
        if p.y == self.anchor.y {
            (self.f)(&p.x)
        } else {
            Extended::Infinite
        }
    }

    fn sample(&self, region: &Region, budget: usize, seed: u64) -> Vec<ProductPoint> {
        if self.space.y.dist(&self.anchor.y, &region.center.y) > region.radius_y {
            return Vec::new();
        }
        let dim = self.space.x.dim();
        let halton = Halton::new(dim, seed);
        (0..budget)
            .map(|i| {
                let h = halton.point(i);
                let x: Vec<f64> = region
                    .center
                    .x
                    .iter()
                    .zip(&h)
                    .map(|(c, t)| c + region.radius_x * (2.0 * t - 1.0))
                    .collect();
                ProductPoint::new(x, self.anchor.y.clone())
            })
            .filter(|p| self.space.x.dist(&p.x, &region.center.x) <= region.radius_x && (self.f)(&p.x).is_finite())
            .collect()
    }

    fn neighborhood(&self, at: &ProductPoint, radius: f64, budget: usize, seed: u64) -> Vec<ProductPoint> {
        let dim = self.space.x.dim();
        let dirs = unit_directions(dim, if dim == 1 { 2 } else { (budget / 8).max(8) }, seed);
        let ts = lattice((budget / dirs.len()).max(1), mix_seed(seed, 1));
        let mut out = Vec::new();
        for d in &dirs {
            for t in &ts {
                let x: Vec<f64> = at.x.iter().zip(d).map(|(a, e)| a + radius * t * e).collect();
                if (self.f)(&x).is_finite() {
                    out.push(ProductPoint::new(x, self.anchor.y.clone()));
                }
            }
        }
        out
    }

    fn solution_distance(&self, x: &[f64]) -> Extended {
        Extended::Finite((self.solution_distance)(x))
    }
}

/// A function on a finite set of points, `+∞` elsewhere.
#[derive(Debug, Clone)]
pub struct FiniteLevelFunction {
    space: ProductSpace,
    anchor: ProductPoint,
    entries: Vec<(ProductPoint, f64)>,
}

impl FiniteLevelFunction {
    pub fn new(anchor: ProductPoint, entries: Vec<(ProductPoint, f64)>) -> Self {
        let space = ProductSpace::euclidean(anchor.x.len(), anchor.y.len());
        FiniteLevelFunction { space, anchor, entries }
    }
}

impl LevelFunction for FiniteLevelFunction {
    fn space(&self) -> &ProductSpace {
        &self.space
    }

    fn anchor(&self) -> &ProductPoint {
        &self.anchor
    }

    fn value(&self, p: &ProductPoint) -> Extended {
        if *p == self.anchor {
            return Extended::ZERO;
        }
        self.entries
            .iter()
            .find(|(q, _)| q == p)
            .map_or(Extended::Infinite, |(_, v)| Extended::Finite(*v))
    }

    fn sample(&self, region: &Region, budget: usize, _seed: u64) -> Vec<ProductPoint> {
        self.entries
            .iter()
            .map(|(p, _)| p)
            .filter(|p| region.contains(&self.space, p))
            .take(budget)
            .cloned()
            .collect()
    }

    fn neighborhood(&self, at: &ProductPoint, radius: f64, budget: usize, seed: u64) -> Vec<ProductPoint> {
        let mut out = self.sample(&Region::ball(at, radius), budget, seed);
        out.retain(|p| p != at);
        out
    }

    fn enumerate(&self) -> Option<Vec<ProductPoint>> {
        let mut all: Vec<ProductPoint> = self.entries.iter().map(|(p, _)| p.clone()).collect();
        if !all.contains(&self.anchor) {
            all.push(self.anchor.clone());
        }
        Some(all)
    }

    fn solution_distance(&self, x: &[f64]) -> Extended {
        let mut zeros: Vec<Vec<f64>> = self.entries.iter().filter(|(_, v)| *v <= 0.0).map(|(p, _)| p.x.clone()).collect();
        zeros.push(self.anchor.x.clone());
        point_to_set_distance(x, &zeros, &self.space.x)
    }
}

pub type PointFunction = Arc<dyn Fn(&ProductPoint) -> f64 + Send + Sync>;

/// An arbitrary finite function on the graph of a mapping.
#[derive(Clone)]
pub struct CustomLevelFunction {
    base: ErrorFunction,
    f: PointFunction,
}

impl CustomLevelFunction {
    pub fn on_graph(problem: MappingProblem, f: PointFunction) -> Self {
        CustomLevelFunction {
            base: ErrorFunction { problem, q: 1.0 },
            f,
        }
    }
}

impl LevelFunction for CustomLevelFunction {
    fn space(&self) -> &ProductSpace {
        self.base.space()
    }

    fn anchor(&self) -> &ProductPoint {
        self.base.anchor()
    }

    fn value(&self, p: &ProductPoint) -> Extended {
        if self.base.problem.contains(p) {
            Extended::Finite((self.f)(p))
        } else {
            Extended::Infinite
        }
    }

    fn sample(&self, region: &Region, budget: usize, seed: u64) -> Vec<ProductPoint> {
        self.base.sample(region, budget, seed)
    }

    fn neighborhood(&self, at: &ProductPoint, radius: f64, budget: usize, seed: u64) -> Vec<ProductPoint> {
        self.base.neighborhood(at, radius, budget, seed)
    }

    fn enumerate(&self) -> Option<Vec<ProductPoint>> {
        self.base.enumerate()
    }

    fn solution_distance(&self, x: &[f64]) -> Extended {
        self.base.solution_distance(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum P2Status {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of checking (P1) and (P2) for a level function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P1P2Diagnostic {
    /// (P1) holds by construction for every function handled here.
    pub p1_structural: bool,
    pub p2: P2Status,
    /// Infimum of `f/d(y,ȳ)` over `ρ_{k+1} <= f < ρ_k`, for each non-empty band.
    pub trace: Vec<TraceEntry>,
}

impl P1P2Diagnostic {
    pub fn final_infimum(&self) -> Extended {
        self.trace.last().map_or(Extended::Infinite, |e| e.value)
    }
}

/// Checks (P2): `liminf_{f↓0} f(x,y)/d(y,ȳ) > 0`, on samples near the
/// anchor and in the truncation box, nested across the ρ-schedule.
pub fn validate_p1_p2(f: &dyn LevelFunction, schedule: &Schedule) -> Result<P1P2Diagnostic> {
    schedule.validate()?;
    let anchor = f.anchor();
    let space = f.space();
    let wide = schedule.truncation_for(0.0);
    let rhos = schedule.rhos();
    let mut pts = Vec::new();
    for (k, rho) in rhos.iter().enumerate() {
        pts.extend(f.sample(
            &Region::ball(anchor, *rho),
            schedule.sample_budget,
            mix_seed(schedule.seed, 0x9000 + k as u64),
        ));
        let region = Region {
            center: anchor,
            radius_x: wide,
            radius_y: *rho,
        };
        pts.extend(f.sample(&region, schedule.sample_budget / 4, mix_seed(schedule.seed, 0x9100 + k as u64)));
    }
    if let Some(all) = f.enumerate() {
        pts.extend(all);
    }
    let mut band_inf = vec![f64::INFINITY; rhos.len()];
    for p in &pts {
        let Some(v) = f.value(p).finite() else { continue };
        if !(v > 0.0 && v < rhos[0]) {
            continue;
        }
        let Some(k) = (0..rhos.len()).rev().find(|&k| v < rhos[k]) else {
            continue;
        };
        if k + 1 < rhos.len() && v < rhos[k + 1] {
            continue;
        }
        let dy = space.y.dist(&p.y, &anchor.y);
        let ratio = if dy > 0.0 { v / dy } else { f64::INFINITY };
        band_inf[k] = band_inf[k].min(ratio);
    }
    let trace: Vec<TraceEntry> = rhos
        .iter()
        .zip(&band_inf)
        .filter(|(_, m)| m.is_finite())
        .map(|(rho, m)| TraceEntry {
            param: *rho,
            value: Extended::from(*m),
        })
        .collect();
    let p2 = if trace.len() < 3 {
        P2Status::Inconclusive
    } else {
        match classify(&trace) {
            Trend::Vanishing => P2Status::Fail,
            _ if trace.last().unwrap().value.to_f64() > 1e-9 => P2Status::Pass,
            _ => P2Status::Fail,
        }
    };
    Ok(P1P2Diagnostic {
        p1_structural: true,
        p2,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::catalog_problem;

    #[test]
    fn error_function_values() {
        let ef = ErrorFunction::new(catalog_problem("half-square").unwrap(), 0.5).unwrap();
        let v = error_function_value(&ef, &[0.2], &[0.04]).unwrap().to_f64();
        assert!((v - 0.2).abs() < 1e-15);
        assert_eq!(error_function_value(&ef, &[0.0], &[0.0]).unwrap(), Extended::ZERO);
        assert_eq!(error_function_value(&ef, &[0.2], &[0.05]).unwrap(), Extended::Infinite);
        assert!(error_function_value(&ef, &[0.2, 1.0], &[0.05]).is_err());
        assert!(ErrorFunction::new(catalog_problem("identity").unwrap(), 1.5).is_err());
    }

    #[test]
    fn p1_holds_on_graph_samples() {
        let ef = ErrorFunction::new(catalog_problem("square").unwrap(), 0.5).unwrap();
        let anchor = ef.anchor().clone();
        for p in ef.sample(&Region::ball(&anchor, 0.5), 200, 1) {
            if p.y != anchor.y {
                assert!(ef.value(&p).to_f64() > 0.0);
            }
        }
    }

    #[test]
    fn p2_examples() {
        let s = Schedule::quick();
        let hs = ErrorFunction::new(catalog_problem("half-square").unwrap(), 0.5).unwrap();
        let d = validate_p1_p2(&hs, &s).unwrap();
        assert!(d.p1_structural);
        assert_eq!(d.p2, P2Status::Pass);
        let id = ErrorFunction::new(catalog_problem("identity").unwrap(), 1.0).unwrap();
        let d = validate_p1_p2(&id, &s).unwrap();
        assert_eq!(d.p2, P2Status::Pass);
        assert!(d.trace.iter().all(|e| (e.value.to_f64() - 1.0).abs() < 1e-12));
        let broken = CustomLevelFunction::on_graph(catalog_problem("identity").unwrap(), Arc::new(|p: &ProductPoint| p.y[0] * p.y[0]));
        assert_eq!(validate_p1_p2(&broken, &s).unwrap().p2, P2Status::Fail);
    }
}
