//! Nested sample pools for the strict slopes.
//!
//! One pool serves a whole ρ-schedule: every point is tagged with the
//! deepest level whose window contains it, so the candidate set of level `k`
//! is every point with `shell >= k` and the sets shrink as `ρ_k` decreases.

use crate::error::Result;
use crate::estimate::TraceEntry;
use crate::extended::Extended;
use crate::geometry::ProductPoint;
use crate::problems::{LevelFunction, MappingProblem, Region, Schedule};
use crate::sampling::mix_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolPoint {
    pub point: ProductPoint,
    /// Deepest schedule level whose window contains the point.
    pub shell: usize,
    pub dx: f64,
    pub dy: f64,
    /// `d(y,ȳ)` for mapping pools, `f(x,y)` for level pools.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Pool {
    pub rhos: Vec<f64>,
    pub points: Vec<PoolPoint>,
    /// Number of sampled points before window filtering.
    pub drawn: usize,
}

/// `x ∉ F⁻¹(ȳ)`, decided by the solution-distance oracle when present and by
/// the fiber distance otherwise.
pub fn is_outer(problem: &MappingProblem, x: &[f64]) -> bool {
    match problem.exact_solution_distance(x) {
        Some(d) => d > problem.eps_mem(),
        None => problem.fiber_distance(x).exceeds(problem.membership_tol()),
    }
}

/// Number of leading levels `k` with `inside(ρ_k)`, minus one.
fn deepest(rhos: &[f64], inside: impl Fn(f64) -> bool) -> Option<usize> {
    rhos.iter().take_while(|r| inside(**r)).count().checked_sub(1)
}

fn draw(
    rhos: &[f64],
    schedule: &Schedule,
    anchor: &ProductPoint,
    sample: impl Fn(&Region, usize, u64) -> Vec<ProductPoint>,
) -> Vec<ProductPoint> {
    let mut out = Vec::new();
    for (j, rho) in rhos.iter().enumerate() {
        out.extend(sample(
            &Region::ball(anchor, *rho),
            schedule.sample_budget,
            mix_seed(schedule.seed, 1000 + j as u64),
        ));
        // thin slab: small d(y,ȳ) relative to d(x,x̄)
        let thin = Region {
            center: anchor,
            radius_x: *rho,
            radius_y: rho * rho,
        };
        out.extend(sample(
            &thin,
            (schedule.sample_budget / 4).max(1),
            mix_seed(schedule.seed, 2000 + j as u64),
        ));
    }
    out
}

impl Pool {
    /// Graph points with `d(x,x̄) < ρ`, `d(y,ȳ) < ρ` that are outer points
    /// (or merely have `y ≠ ȳ` when `schedule.outer_points_only` is off).
    pub fn for_mapping(problem: &MappingProblem, schedule: &Schedule) -> Result<Pool> {
        schedule.validate()?;
        let rhos = schedule.rhos();
        let raw = match problem.graph().enumerate() {
            Some(all) => all.to_vec(),
            None => draw(&rhos, schedule, problem.anchor(), |region, budget, seed| {
                problem.graph().sample(problem.space(), region, budget, seed)
            }),
        };
        let drawn = raw.len();
        let points = raw
            .into_iter()
            .filter_map(|point| {
                let dx = problem.dist_x(&point.x);
                let dy = problem.dist_y(&point.y);
                let shell = deepest(&rhos, |r| dx < r && dy < r)?;
                let keep = if schedule.outer_points_only {
                    is_outer(problem, &point.x)
                } else {
                    dy > 0.0
                };
                keep.then_some(PoolPoint {
                    point,
                    shell,
                    dx,
                    dy,
                    value: dy,
                })
            })
            .collect();
        Ok(Pool { rhos, points, drawn })
    }

    /// Points with `d(x,x̄) < ρ` and `0 < f(x,y) < ρ`.
    pub fn for_level(f: &dyn LevelFunction, schedule: &Schedule) -> Result<Pool> {
        schedule.validate()?;
        let rhos = schedule.rhos();
        let raw = match f.enumerate() {
            Some(all) => all,
            None => draw(&rhos, schedule, f.anchor(), |region, budget, seed| f.sample(region, budget, seed)),
        };
        let drawn = raw.len();
        let space = f.space();
        let anchor = f.anchor();
        let points = raw
            .into_iter()
            .filter_map(|point| {
                let value = f.value(&point).finite()?;
                let dx = space.x.dist(&point.x, &anchor.x);
                let shell = deepest(&rhos, |r| dx < r && value > 0.0 && value < r)?;
                let dy = space.y.dist(&point.y, &anchor.y);
                Some(PoolPoint {
                    point,
                    shell,
                    dx,
                    dy,
                    value,
                })
            })
            .collect();
        Ok(Pool { rhos, points, drawn })
    }

    pub fn levels(&self) -> usize {
        self.rhos.len()
    }

    /// Per-level minima of `values[i][k]` (`k ≤ shell_i`) with the index of
    /// the minimizing point. Ties keep the first point; an empty level is `+∞`.
    pub fn level_minima(&self, values: &[Vec<f64>]) -> LevelMinima {
        let mut best = vec![f64::INFINITY; self.levels()];
        let mut arg = vec![None; self.levels()];
        for (i, per_level) in values.iter().enumerate() {
            for (k, v) in per_level.iter().enumerate() {
                if *v < best[k] || (arg[k].is_none() && *v == best[k]) {
                    best[k] = *v;
                    arg[k] = Some(i);
                }
            }
        }
        let trace = self
            .rhos
            .iter()
            .zip(&best)
            .map(|(r, v)| TraceEntry {
                param: *r,
                value: Extended::from(*v),
            })
            .collect();
        LevelMinima { trace, witnesses: arg }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelMinima {
    pub trace: Vec<TraceEntry>,
    /// Minimizing pool index per level; `None` when the level is empty.
    pub witnesses: Vec<Option<usize>>,
}

impl LevelMinima {
    pub fn final_witness(&self) -> Option<usize> {
        self.witnesses.last().copied().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{catalog_problem, ErrorFunction};

    #[test]
    fn shells_are_nested_windows() {
        let p = catalog_problem("half-square").unwrap();
        let s = Schedule::quick();
        let pool = Pool::for_mapping(&p, &s).unwrap();
        assert!(!pool.points.is_empty());
        for pp in &pool.points {
            let r = pool.rhos[pp.shell];
            assert!(pp.dx < r && pp.dy < r && pp.point.x[0] > 0.0);
            if pp.shell + 1 < pool.levels() {
                let next = pool.rhos[pp.shell + 1];
                assert!(pp.dx >= next || pp.dy >= next);
            }
        }
        for k in 0..pool.levels() {
            assert!(pool.points.iter().any(|pp| pp.shell == k), "level {k} empty");
        }
    }

    #[test]
    fn level_pool_uses_the_value_window() {
        let p = catalog_problem("half-square").unwrap();
        let f = ErrorFunction::new(p, 0.5).unwrap();
        let pool = Pool::for_level(&f, &Schedule::quick()).unwrap();
        for pp in &pool.points {
            assert!(pp.value > 0.0 && pp.value < pool.rhos[pp.shell]);
        }
    }

    #[test]
    fn minima_follow_shells() {
        let pool = Pool {
            rhos: vec![1.0, 0.5, 0.25],
            points: Vec::new(),
            drawn: 0,
        };
        let m = pool.level_minima(&[vec![3.0], vec![5.0, 4.0, 2.0], vec![1.0, 6.0]]);
        let vals: Vec<f64> = m.trace.iter().map(|e| e.value.to_f64()).collect();
        assert_eq!(vals, vec![1.0, 4.0, 2.0]);
        assert_eq!(m.witnesses, vec![Some(2), Some(1), Some(1)]);
        let empty = pool.level_minima(&[vec![1.0]]);
        assert_eq!(empty.trace[2].value, Extended::Infinite);
        assert_eq!(empty.final_witness(), None);
    }
}
