//! Primal slopes: nonlocal and local ρ-slopes at a point, and the strict
//! slopes obtained as limits of their infima over shrinking windows.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_order, Error, Result};
use crate::estimate::{SlopeEstimate, SlopeKind, TraceEntry};
use crate::extended::Extended;
use crate::geometry::ProductPoint;
use crate::pool::{Pool, PoolPoint};
use crate::probe::{
    anchor_scale, global_candidates, local_candidates, local_radius, near_candidates, reach, sup_ratio, value_rays, Ray, TRUNCATION_BAND,
};
use crate::problems::{validate_p1_p2, ErrorFunction, LevelFunction, MappingProblem, P2Status, Schedule};

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveRho(rho))
    }
}

fn on_graph(problem: &MappingProblem, at: &ProductPoint) -> Result<()> {
    problem.space().check_point(at)?;
    if problem.contains(at) {
        Ok(())
    } else {
        Err(Error::OffGraph)
    }
}

fn nonlocal_estimate(f: &dyn LevelFunction, rho: f64, at: &ProductPoint, schedule: &Schedule, kind: SlopeKind) -> Result<SlopeEstimate> {
    let entry = |value| vec![TraceEntry { param: rho, value }];
    let Some(f_at) = f.value(at).finite() else {
        return Ok(SlopeEstimate::from_trace(kind, entry(Extended::Infinite), false, 0));
    };
    let d = reach(f.space(), f.anchor(), at);
    let truncation = schedule.truncation_for(d);
    let mut cands = global_candidates(f, truncation, schedule);
    cands.extend(near_candidates(f, anchor_scale(f.space(), f.anchor(), at), 0, schedule));
    for i in 0..schedule.neighborhood_radii.len() {
        cands.extend(local_candidates(f, at, i, schedule));
    }
    if cands.is_empty() {
        return Err(Error::EmptySample);
    }
    let rays = value_rays(f, at, f_at, &cands, true);
    let (value, arg) = sup_ratio(&rays, rho, schedule.metric);
    let truncated = arg.is_some_and(|i| rays[i].reach() + d >= TRUNCATION_BAND * truncation);
    Ok(SlopeEstimate::from_trace(
        kind,
        entry(Extended::Finite(value)),
        truncated,
        cands.len(),
    ))
}

fn local_estimate(f: &dyn LevelFunction, rho: f64, at: &ProductPoint, schedule: &Schedule, kind: SlopeKind) -> Result<SlopeEstimate> {
    let f_at = f.value(at).finite().ok_or(Error::OffGraph)?;
    let radii = &schedule.neighborhood_radii;
    let cands: Vec<ProductPoint> = (0..radii.len()).flat_map(|i| local_candidates(f, at, i, schedule)).collect();
    let rays = value_rays(f, at, f_at, &cands, false);
    let magnitude = f.space().x.norm(&at.x).max(f.space().y.norm(&at.y));
    let trace = radii
        .iter()
        .enumerate()
        .map(|(i, r)| {
            // candidates sit on the sphere; allow for rounding in their distances
            let limit = local_radius(f, at, i, schedule) * (1.0 + 1e-9) + 4.0 * f64::EPSILON * magnitude;
            let inside: Vec<Ray> = rays.iter().filter(|ray| ray.reach() <= limit).copied().collect();
            TraceEntry {
                param: *r,
                value: Extended::Finite(sup_ratio(&inside, rho, schedule.metric).0),
            }
        })
        .collect();
    Ok(SlopeEstimate::from_trace(kind, trace, false, cands.len()))
}

/// Nonlocal (q,ρ)-slope at a graph point: the sup of
/// `[d(y,ȳ)^q − d(v,ȳ)^q]₊ / d_ρ((u,v),(x,y))` over sampled graph points.
pub fn nonlocal_q_rho_slope(problem: &MappingProblem, q: f64, rho: f64, at: &ProductPoint, schedule: &Schedule) -> Result<SlopeEstimate> {
    check_order(q)?;
    check_rho(rho)?;
    schedule.validate()?;
    on_graph(problem, at)?;
    let f = ErrorFunction::new(problem.clone(), q)?;
    nonlocal_estimate(&f, rho, at, schedule, SlopeKind::Nonlocal)
}

/// ρ-slope at a graph point, traced over the neighborhood radii.
pub fn local_rho_slope(problem: &MappingProblem, rho: f64, at: &ProductPoint, schedule: &Schedule) -> Result<SlopeEstimate> {
    check_rho(rho)?;
    schedule.validate()?;
    on_graph(problem, at)?;
    let f = ErrorFunction::new(problem.clone(), 1.0)?;
    local_estimate(&f, rho, at, schedule, SlopeKind::Local)
}

/// Per-level slopes of one pool point, for levels `0..=shell`.
struct PointSlopes {
    local: Vec<f64>,
    nonlocal: Vec<f64>,
    /// Whether the nonlocal sup at that level was attained near the
    /// truncation boundary.
    boundary: Vec<bool>,
}

/// Candidates shared by every pool point, with their nonlocal values.
struct SharedCandidates {
    global: Vec<(ProductPoint, f64)>,
    near: Vec<Vec<(ProductPoint, f64)>>,
    truncation: f64,
}

/// Evaluates both slopes of a function whose nonlocal numerator uses
/// `value^power` (the mapping case, `f = d(y,ȳ)`) or `value` itself.
struct PrimalEvaluator<'a> {
    f: &'a dyn LevelFunction,
    power: f64,
    schedule: &'a Schedule,
}

impl PrimalEvaluator<'_> {
    fn nonlocal_value(&self, v: f64) -> f64 {
        let v = v.max(0.0);
        if self.power == 1.0 {
            v
        } else {
            v.powf(self.power)
        }
    }

    fn shared(&self, pool: &Pool) -> SharedCandidates {
        let truncation = self.schedule.truncation_for(pool.rhos[0]);
        let with_values = |pts: Vec<ProductPoint>| {
            pts.into_iter()
                .filter_map(|p| {
                    let v = self.f.value(&p).finite()?;
                    Some((p, self.nonlocal_value(v)))
                })
                .collect::<Vec<_>>()
        };
        let global = with_values(global_candidates(self.f, truncation, self.schedule));
        let near = pool
            .rhos
            .iter()
            .enumerate()
            .map(|(j, r)| with_values(near_candidates(self.f, *r, j as u64, self.schedule)))
            .collect();
        SharedCandidates { global, near, truncation }
    }

    fn evaluate(&self, pp: &PoolPoint, rhos: &[f64], shared: &SharedCandidates) -> PointSlopes {
        let levels = pp.shell + 1;
        let at = &pp.point;
        let space = self.f.space();
        let metric = self.schedule.metric;
        let at_nonlocal = self.nonlocal_value(pp.value);
        let mut local = vec![0.0f64; levels];
        let mut nonlocal = vec![0.0; levels];
        let mut boundary = vec![false; levels];
        let mut offer_nonlocal = |num: f64, dx: f64, dy: f64, far: bool| {
            if num <= 0.0 {
                return;
            }
            let ray = Ray { num, dx, dy };
            for (k, rho) in rhos[..levels].iter().enumerate() {
                if let Some(v) = ray.ratio(*rho, metric) {
                    if v > nonlocal[k] {
                        nonlocal[k] = v;
                        boundary[k] = far;
                    }
                }
            }
        };
        let edge = TRUNCATION_BAND * shared.truncation;
        for (c, vc) in shared.global.iter().chain(&shared.near[pp.shell]) {
            if c == at {
                continue;
            }
            let dx = space.x.dist(&c.x, &at.x);
            let dy = space.y.dist(&c.y, &at.y);
            offer_nonlocal(at_nonlocal - vc, dx, dy, dx.max(dy) + pp.dx.max(pp.dy) >= edge);
        }
        let last = self.schedule.neighborhood_radii.len() - 1;
        for c in local_candidates(self.f, at, last, self.schedule) {
            let Some(vc) = self.f.value(&c).finite() else { continue };
            if c == *at {
                continue;
            }
            let dx = space.x.dist(&c.x, &at.x);
            let dy = space.y.dist(&c.y, &at.y);
            offer_nonlocal(at_nonlocal - self.nonlocal_value(vc), dx, dy, false);
            let num = pp.value - vc;
            if num > 0.0 {
                let ray = Ray { num, dx, dy };
                for (k, rho) in rhos[..levels].iter().enumerate() {
                    if let Some(v) = ray.ratio(*rho, metric) {
                        local[k] = local[k].max(v);
                    }
                }
            }
        }
        PointSlopes { local, nonlocal, boundary }
    }

    fn run(&self, pool: &Pool) -> Vec<PointSlopes> {
        let shared = self.shared(pool);
        pool.points.par_iter().map(|pp| self.evaluate(pp, &pool.rhos, &shared)).collect()
    }
}

/// Uniform, plain and modified strict slopes plus the liminf of
/// `d(y,ȳ)^q / d(x,x̄)`, all computed on one pool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrictPrimalSlopes {
    pub uniform: SlopeEstimate,
    pub plain: SlopeEstimate,
    pub modified: SlopeEstimate,
    pub liminf_ratio: SlopeEstimate,
}

pub fn strict_primal_slopes(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<StrictPrimalSlopes> {
    check_order(q)?;
    let pool = Pool::for_mapping(problem, schedule)?;
    let f = ErrorFunction::new(problem.clone(), 1.0)?;
    let eval = PrimalEvaluator { f: &f, power: q, schedule };
    let slopes = eval.run(&pool);

    let weight = |d: f64| q * d.powf(q - 1.0);
    let mut uniform = Vec::with_capacity(slopes.len());
    let mut plain = Vec::with_capacity(slopes.len());
    let mut modified = Vec::with_capacity(slopes.len());
    let mut ratio = Vec::with_capacity(slopes.len());
    for (pp, s) in pool.points.iter().zip(&slopes) {
        let w = weight(pp.dy);
        let tail = pp.dy.powf(q) / pp.dx;
        let p: Vec<f64> = s.local.iter().map(|l| w * l).collect();
        modified.push(p.iter().map(|v| v.max(tail)).collect());
        plain.push(p);
        uniform.push(s.nonlocal.clone());
        ratio.push(vec![tail; pp.shell + 1]);
    }
    let budget = pool.drawn;
    let uni = pool.level_minima(&uniform);
    let truncated = uni
        .final_witness()
        .is_some_and(|i| slopes[i].boundary.last().copied().unwrap_or(false));
    let estimate = |kind, m: crate::pool::LevelMinima, truncated| SlopeEstimate::from_trace(kind, m.trace, truncated, budget);
    Ok(StrictPrimalSlopes {
        uniform: estimate(SlopeKind::UniformStrict, uni, truncated),
        plain: estimate(SlopeKind::Strict, pool.level_minima(&plain), false),
        modified: estimate(SlopeKind::ModifiedStrict, pool.level_minima(&modified), false),
        liminf_ratio: estimate(SlopeKind::LiminfRatio, pool.level_minima(&ratio), false),
    })
}

/// Limit over the schedule of the infimum of nonlocal (q,ρ)-slopes over
/// outer points in the shrinking windows.
pub fn uniform_strict_q_slope(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<SlopeEstimate> {
    Ok(strict_primal_slopes(problem, q, schedule)?.uniform)
}

/// Plain and modified strict q-slopes, sharing one pool.
pub fn strict_q_slopes(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<(SlopeEstimate, SlopeEstimate)> {
    let s = strict_primal_slopes(problem, q, schedule)?;
    Ok((s.plain, s.modified))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSlope {
    Nonlocal,
    Local,
    UniformStrict,
    StrictOuter,
    ModifiedStrictOuter,
}

impl LevelSlope {
    pub const ALL: [LevelSlope; 5] = [
        LevelSlope::Nonlocal,
        LevelSlope::Local,
        LevelSlope::UniformStrict,
        LevelSlope::StrictOuter,
        LevelSlope::ModifiedStrictOuter,
    ];

    fn kind(self) -> SlopeKind {
        match self {
            LevelSlope::Nonlocal => SlopeKind::LevelNonlocal,
            LevelSlope::Local => SlopeKind::LevelLocal,
            LevelSlope::UniformStrict => SlopeKind::LevelUniformStrict,
            LevelSlope::StrictOuter => SlopeKind::LevelStrictOuter,
            LevelSlope::ModifiedStrictOuter => SlopeKind::LevelModifiedStrictOuter,
        }
    }
}

/// Slopes of a two-variable function `f` with `f(x̄,ȳ) = 0`.
///
/// `rho` and `at` are used by the pointwise variants only. Unless
/// `waive_p2` is set, condition (P2) is checked first; a failing check is an
/// error and an inconclusive one adds a flag to every estimate.
pub fn f_level_slopes(
    f: &dyn LevelFunction,
    rho: f64,
    at: &ProductPoint,
    schedule: &Schedule,
    variants: &[LevelSlope],
    waive_p2: bool,
) -> Result<BTreeMap<LevelSlope, SlopeEstimate>> {
    check_rho(rho)?;
    schedule.validate()?;
    f.space().check_point(at)?;
    let mut flag = None;
    if !waive_p2 {
        let diag = validate_p1_p2(f, schedule)?;
        match diag.p2 {
            P2Status::Fail => return Err(Error::P2Violated(diag.final_infimum().to_f64())),
            P2Status::Inconclusive => flag = Some("p2_inconclusive"),
            P2Status::Pass => {}
        }
    }
    let mut out = BTreeMap::new();
    let strict = variants.iter().any(|v| {
        matches!(
            v,
            LevelSlope::UniformStrict | LevelSlope::StrictOuter | LevelSlope::ModifiedStrictOuter
        )
    });
    let mut strict_estimates = BTreeMap::new();
    if strict {
        let pool = Pool::for_level(f, schedule)?;
        let slopes = PrimalEvaluator { f, power: 1.0, schedule }.run(&pool);
        let local: Vec<Vec<f64>> = slopes.iter().map(|s| s.local.clone()).collect();
        let modified: Vec<Vec<f64>> = pool
            .points
            .iter()
            .zip(&slopes)
            .map(|(pp, s)| s.local.iter().map(|l| l.max(pp.value / pp.dx)).collect())
            .collect();
        let nonlocal: Vec<Vec<f64>> = slopes.iter().map(|s| s.nonlocal.clone()).collect();
        let uni = pool.level_minima(&nonlocal);
        let truncated = uni
            .final_witness()
            .is_some_and(|i| slopes[i].boundary.last().copied().unwrap_or(false));
        let budget = pool.drawn;
        strict_estimates.insert(
            LevelSlope::UniformStrict,
            SlopeEstimate::from_trace(SlopeKind::LevelUniformStrict, uni.trace, truncated, budget),
        );
        for (variant, values) in [(LevelSlope::StrictOuter, local), (LevelSlope::ModifiedStrictOuter, modified)] {
            strict_estimates.insert(
                variant,
                SlopeEstimate::from_trace(variant.kind(), pool.level_minima(&values).trace, false, budget),
            );
        }
    }
    for v in variants {
        let est = match v {
            LevelSlope::Nonlocal => nonlocal_estimate(f, rho, at, schedule, v.kind())?,
            LevelSlope::Local => local_estimate(f, rho, at, schedule, v.kind())?,
            other => strict_estimates[other].clone(),
        };
        let est = match flag {
            Some(flag) => est.with_flag(flag),
            None => est,
        };
        out.insert(*v, est);
    }
    Ok(out)
}
