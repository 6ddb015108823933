//! Candidate sets and ratio evaluation shared by the primal slope estimators.

use crate::geometry::{ProductMetric, ProductPoint, ProductSpace};
use crate::problems::{LevelFunction, Region, Schedule};
use crate::sampling::mix_seed;

/// Candidates within this distance of the base point, in both
/// coordinates, are ignored.
pub const EXCLUSION: f64 = 1e-12;
/// Lower bound for the scale that relative neighborhood radii refer to.
pub const SCALE_FLOOR: f64 = 1e-9;
/// Smallest absolute neighborhood radius, kept well above [`EXCLUSION`].
pub const RADIUS_FLOOR: f64 = 1e-10;
/// The argmax of a nonlocal sup counts as truncated beyond this fraction of
/// the truncation radius.
pub const TRUNCATION_BAND: f64 = 0.99;

/// A candidate `c` seen from a base point: numerator and both distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub num: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Ray {
    #[inline]
    pub fn ratio(&self, rho: f64, metric: ProductMetric) -> Option<f64> {
        (self.reach() >= EXCLUSION).then(|| self.num / metric.combine(self.dx, self.dy, rho))
    }

    #[inline]
    pub fn reach(&self) -> f64 {
        self.dx.max(self.dy)
    }
}

/// Largest ratio over `rays` and the index attaining it; `0` for no rays.
pub fn sup_ratio(rays: &[Ray], rho: f64, metric: ProductMetric) -> (f64, Option<usize>) {
    let mut best = 0.0;
    let mut arg = None;
    for (i, r) in rays.iter().enumerate() {
        if let Some(v) = r.ratio(rho, metric) {
            if v > best {
                best = v;
                arg = Some(i);
            }
        }
    }
    (best, arg)
}

/// `max{d(x,x̄), d(y,ȳ)}`, floored.
pub fn anchor_scale(space: &ProductSpace, anchor: &ProductPoint, at: &ProductPoint) -> f64 {
    reach(space, anchor, at).max(SCALE_FLOOR)
}

pub fn reach(space: &ProductSpace, a: &ProductPoint, b: &ProductPoint) -> f64 {
    space.x.dist(&a.x, &b.x).max(space.y.dist(&a.y, &b.y))
}

/// Absolute radius of neighborhood number `index` around `at`.
pub fn local_radius(f: &dyn LevelFunction, at: &ProductPoint, index: usize, schedule: &Schedule) -> f64 {
    (schedule.neighborhood_radii[index] * anchor_scale(f.space(), f.anchor(), at)).max(RADIUS_FLOOR)
}

/// Neighborhood of `at` for radius number `index` of the schedule.
pub fn local_candidates(f: &dyn LevelFunction, at: &ProductPoint, index: usize, schedule: &Schedule) -> Vec<ProductPoint> {
    let radius = local_radius(f, at, index, schedule);
    f.neighborhood(at, radius, schedule.probe_budget, mix_seed(schedule.seed, 0x4C00 + index as u64))
}

/// Rays with numerator `[f(at) − f(c)]₊` (or `f₊(c)` when `positive_part`).
/// Candidates with `f(c) = +∞`, zero numerators and `c = at` are dropped.
pub fn value_rays<'a>(
    f: &dyn LevelFunction,
    at: &ProductPoint,
    f_at: f64,
    cands: impl IntoIterator<Item = &'a ProductPoint>,
    positive_part: bool,
) -> Vec<Ray> {
    let space = f.space();
    cands
        .into_iter()
        .filter_map(|c| {
            let mut fc = f.value(c).finite()?;
            if positive_part {
                fc = fc.max(0.0);
            }
            let num = f_at - fc;
            if !(num > 0.0) || c == at {
                return None;
            }
            Some(Ray {
                num,
                dx: space.x.dist(&c.x, &at.x),
                dy: space.y.dist(&c.y, &at.y),
            })
        })
        .collect()
}

/// Points shared by every nonlocal sup: the anchor and a sample of the
/// truncation ball around it.
pub fn global_candidates(f: &dyn LevelFunction, radius: f64, schedule: &Schedule) -> Vec<ProductPoint> {
    if let Some(all) = f.enumerate() {
        return all;
    }
    let anchor = f.anchor();
    let mut out = vec![anchor.clone()];
    out.extend(f.sample(
        &Region::ball(anchor, radius),
        (schedule.sample_budget / 8).max(1),
        mix_seed(schedule.seed, 0x6100),
    ));
    out
}

/// Points between the anchor and a base point at distance `scale`.
pub fn near_candidates(f: &dyn LevelFunction, scale: f64, stream: u64, schedule: &Schedule) -> Vec<ProductPoint> {
    if f.enumerate().is_some() {
        return Vec::new();
    }
    f.sample(
        &Region::ball(f.anchor(), 2.0 * scale),
        (schedule.sample_budget / 8).max(1),
        mix_seed(schedule.seed, 0x6200 + stream),
    )
}
