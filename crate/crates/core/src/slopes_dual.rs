//! Subdifferential slopes built on coderivatives: ρ-slopes at a point,
//! strict subdifferential q-slopes, the limiting outer q-coderivative and
//! the constants α, β.

use rayon::prelude::*;
use serde::Serialize;

use crate::dual_point::DualPoint;
use crate::error::{check_order, Error, Result};
use crate::estimate::{SlopeEstimate, SlopeKind, TraceEntry};
use crate::extended::Extended;
use crate::geometry::{dual_ball_samples, duality_map, q_duality, DualVectorSet, NormSpec, ProductPoint, ALGEBRAIC_TOL};
use crate::pool::Pool;
use crate::problems::{MappingProblem, Schedule};
use crate::sampling::{mix_seed, unit_directions};

/// Multipliers `q‖y−ȳ‖^{q−1}` above this are not explored by the limiting
/// coderivative estimator.
pub const MULTIPLIER_CAP: f64 = 1e6;
/// Directions around `y − ȳ` used for the approximate slopes inside pools.
const APPROX_DIRECTIONS: usize = 16;
/// Perturbation samples for `J^q_ε` when `Y` is not one-dimensional.
const ENLARGEMENT_BUDGET: usize = 16;
/// Directions of `y'` for α when `Y` is not one-dimensional.
const ALPHA_DIRECTIONS: usize = 8;

/// Relative slack for comparing an estimate built from [`ENLARGEMENT_BUDGET`]
/// sampled dual directions with one computed independently.
pub fn direction_rel() -> f64 {
    1.0 - (std::f64::consts::PI / ENLARGEMENT_BUDGET as f64).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualVariant {
    Plain,
    Approximate,
}

fn require_oracle(problem: &MappingProblem) -> Result<()> {
    if problem.has_coderivative() {
        Ok(())
    } else {
        Err(Error::MissingCoderivative)
    }
}

fn offset(problem: &MappingProblem, y: &[f64]) -> Vec<f64> {
    y.iter().zip(problem.ybar()).map(|(a, b)| a - b).collect()
}

/// Points `c + s·t·b` around `c` in the `Y` norm, with `c` itself first.
fn v_neighborhood(norm: &NormSpec, c: &[f64], s: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = vec![c.to_vec()];
    for b in unit_directions(norm.dim(), count, seed) {
        let n = norm.norm(&b);
        for t in [1.0, 0.5] {
            out.push(c.iter().zip(&b).map(|(ci, bi)| ci + s * t * bi / n).collect());
        }
    }
    out
}

fn duality(norm: &NormSpec, v: &[f64]) -> Option<DualVectorSet> {
    duality_map(v, norm, ALGEBRAIC_TOL).ok()
}

/// Subdifferential ρ-slope at a graph point with `y ≠ ȳ`; `rho = 0` is
/// allowed. The approximate variant is traced over the neighborhood radii,
/// each shrunk tenfold and taken relative to `‖y−ȳ‖`.
pub fn subdiff_rho_slope(
    problem: &MappingProblem,
    rho: f64,
    at: &ProductPoint,
    variant: DualVariant,
    schedule: &Schedule,
) -> Result<SlopeEstimate> {
    require_oracle(problem)?;
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveRho(rho));
    }
    schedule.validate()?;
    problem.space().check_point(at)?;
    if !problem.contains(at) {
        return Err(Error::OffGraph);
    }
    let ynorm = &problem.space().y;
    let c = offset(problem, &at.y);
    let d = ynorm.norm(&c);
    if d == 0.0 {
        return Err(Error::AtReferenceValue);
    }
    let dp = DualPoint::new(problem, at, schedule.probe_budget, mix_seed(schedule.seed, 0x5100))?;
    let j = duality_map(&c, ynorm, ALGEBRAIC_TOL)?;
    let plain = dp.min_norm_balls(&j, rho);
    let (kind, trace) = match variant {
        DualVariant::Plain => (SlopeKind::SubdiffPlain, vec![TraceEntry { param: rho, value: plain }]),
        DualVariant::Approximate => {
            let mut best = plain;
            let trace = schedule
                .neighborhood_radii
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let s = r / 10.0 * d;
                    let vs = v_neighborhood(ynorm, &c, s, schedule.probe_budget, mix_seed(schedule.seed, 0x5200 + i as u64));
                    for v in &vs[1..] {
                        if let Some(jv) = duality(ynorm, v) {
                            best = best.min(dp.min_norm_balls(&jv, rho));
                        }
                    }
                    TraceEntry { param: *r, value: best }
                })
                .collect();
            (SlopeKind::SubdiffApproximate, trace)
        }
    };
    let est = SlopeEstimate::from_trace(kind, trace, false, schedule.probe_budget);
    Ok(if dp.is_exact() { est } else { est.with_flag("sampled_dual_ball") })
}

/// The four strict subdifferential q-slopes, computed on one pool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrictDualSlopes {
    pub plain: SlopeEstimate,
    pub approximate: SlopeEstimate,
    pub modified: SlopeEstimate,
    pub modified_approximate: SlopeEstimate,
}

/// Strict dual slopes together with the limiting coderivative minimum norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualAnalysis {
    pub slopes: StrictDualSlopes,
    pub limiting: SlopeEstimate,
}

/// Perturbation radius at level `ρ`: `ξ_q(y)·ρ`, or `ρ` itself in the
/// simplified representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RadiusRule {
    Scaled,
    Unscaled,
}

struct PointDual {
    plain: Vec<f64>,
    approximate: Vec<f64>,
    limiting: Vec<f64>,
    capped: bool,
    exact: bool,
}

struct DualPass {
    strict: Option<StrictDualSlopes>,
    limiting: Option<SlopeEstimate>,
}

fn dual_pass(problem: &MappingProblem, q: f64, schedule: &Schedule, rule: RadiusRule, slopes: bool, limiting: bool) -> Result<DualPass> {
    check_order(q)?;
    require_oracle(problem)?;
    let pool = Pool::for_mapping(problem, schedule)?;
    let ynorm = &problem.space().y;
    let last_radius = *schedule.neighborhood_radii.last().expect("validated schedule");
    let evaluate = |pp: &crate::pool::PoolPoint| -> Result<PointDual> {
        let levels = pp.shell + 1;
        let dp = DualPoint::new(problem, &pp.point, schedule.probe_budget, mix_seed(schedule.seed, 0x5100))?;
        let c = offset(problem, &pp.point.y);
        let d = pp.dy;
        let w = q * d.powf(q - 1.0);
        let xi = d.powf(1.0 - q) / q;
        let j = duality_map(&c, ynorm, ALGEBRAIC_TOL)?;
        let nearby: Vec<DualVectorSet> = if slopes && !dp.is_scalar() {
            let s = last_radius / 10.0 * d;
            v_neighborhood(ynorm, &c, s, APPROX_DIRECTIONS, mix_seed(schedule.seed, 0x5300))[1..]
                .iter()
                .filter_map(|v| duality(ynorm, v))
                .collect()
        } else {
            Vec::new()
        };
        let mut out = PointDual {
            plain: Vec::with_capacity(levels),
            approximate: Vec::with_capacity(levels),
            limiting: Vec::with_capacity(levels),
            capped: false,
            exact: dp.is_exact(),
        };
        let scaled_j = j.scaled(w);
        for rho in &pool.rhos[..levels] {
            if slopes {
                let r = match rule {
                    RadiusRule::Scaled => xi * rho,
                    RadiusRule::Unscaled => *rho,
                };
                let plain = dp.min_norm_balls(&j, r);
                // in one dimension J is constant near y − ȳ
                let approx = nearby.iter().map(|jv| dp.min_norm_balls(jv, r)).fold(plain, Extended::min);
                out.plain.push(plain.scale(w).to_f64());
                out.approximate.push(approx.scale(w).to_f64());
            }
            if limiting {
                if w > MULTIPLIER_CAP {
                    out.capped = true;
                    out.limiting.push(f64::INFINITY);
                } else {
                    out.limiting.push(dp.min_norm_balls(&scaled_j, *rho).to_f64());
                }
            }
        }
        Ok(out)
    };
    let per_point: Vec<PointDual> = pool.points.par_iter().map(evaluate).collect::<Result<_>>()?;
    let exact = per_point.iter().all(|p| p.exact);
    let budget = pool.drawn;
    let finish = |kind, values: Vec<Vec<f64>>| {
        let est = SlopeEstimate::from_trace(kind, pool.level_minima(&values).trace, false, budget);
        if exact {
            est
        } else {
            est.with_flag("sampled_dual_ball")
        }
    };
    let strict = slopes.then(|| {
        let tails: Vec<f64> = pool.points.iter().map(|pp| pp.dy.powf(q) / pp.dx).collect();
        let modify = |rows: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            rows.into_iter()
                .zip(&tails)
                .map(|(row, t)| row.into_iter().map(|v| v.max(*t)).collect())
                .collect()
        };
        let plain: Vec<Vec<f64>> = per_point.iter().map(|p| p.plain.clone()).collect();
        let approx: Vec<Vec<f64>> = per_point.iter().map(|p| p.approximate.clone()).collect();
        StrictDualSlopes {
            modified: finish(SlopeKind::StrictSubdiffModified, modify(plain.clone())),
            modified_approximate: finish(SlopeKind::StrictSubdiffModifiedApproximate, modify(approx.clone())),
            plain: finish(SlopeKind::StrictSubdiffPlain, plain),
            approximate: finish(SlopeKind::StrictSubdiffApproximate, approx),
        }
    });
    let limiting = limiting.then(|| {
        let values: Vec<Vec<f64>> = per_point.iter().map(|p| p.limiting.clone()).collect();
        let est = finish(SlopeKind::LimitingCoderivative, values);
        if per_point.iter().any(|p| p.capped) {
            est.with_flag("multiplier_cap_reached")
        } else {
            est
        }
    });
    Ok(DualPass { strict, limiting })
}

/// Plain, approximate and modified strict subdifferential q-slopes, with
/// perturbation radius `ξ_q(y)·ρ_k` at level `k`.
pub fn strict_subdiff_q_slopes(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<StrictDualSlopes> {
    Ok(dual_pass(problem, q, schedule, RadiusRule::Scaled, true, false)?
        .strict
        .expect("requested"))
}

/// The same slopes with perturbation radius `ρ_k`: lower bounds in general,
/// equal to [`strict_subdiff_q_slopes`] when `q = 1`.
pub fn simplified_strict_subdiff_q_slopes(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<StrictDualSlopes> {
    Ok(dual_pass(problem, q, schedule, RadiusRule::Unscaled, true, false)?
        .strict
        .expect("requested"))
}

/// Smallest `‖x*_k‖` with `x*_k ∈ D*F(x_k,y_k)(y*_k)`,
/// `y*_k ∈ q‖y_k−ȳ‖^{q−1}J(y_k−ȳ) + ρ_k B*`, over outer points in the
/// shrinking windows. Points whose multiplier exceeds [`MULTIPLIER_CAP`] are
/// skipped and flagged.
pub fn limiting_coderivative_min_norm(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<SlopeEstimate> {
    Ok(dual_pass(problem, q, schedule, RadiusRule::Scaled, false, true)?
        .limiting
        .expect("requested"))
}

/// Strict dual slopes and the limiting coderivative in one pass.
pub fn dual_analysis(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<DualAnalysis> {
    let pass = dual_pass(problem, q, schedule, RadiusRule::Scaled, true, true)?;
    Ok(DualAnalysis {
        slopes: pass.strict.expect("requested"),
        limiting: pass.limiting.expect("requested"),
    })
}

/// `min ‖D*F(x,y)(J^q_ε(c))‖` for `Y = R`, as a function of the weight
/// `q‖c‖^{q−1}`: the enlargement reaches the opposite sign once `ε` exceeds it.
fn scalar_enlarged(side: f64, weight: f64, eps: f64, plus: Extended, minus: Extended) -> Extended {
    let same = if side > 0.0 { plus } else { minus };
    if eps > weight {
        plus.min(minus)
    } else {
        same
    }
}

struct LmPoint {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

fn lm_point(
    problem: &MappingProblem,
    pp: &crate::pool::PoolPoint,
    q: f64,
    eps_list: &[f64],
    perturbations: &[Vec<Vec<f64>>],
    schedule: &Schedule,
) -> Result<LmPoint> {
    let ynorm = &problem.space().y;
    let dp = DualPoint::new(problem, &pp.point, schedule.probe_budget, mix_seed(schedule.seed, 0x5100))?;
    let c = offset(problem, &pp.point.y);
    let d = pp.dy;
    let weight = |t: f64| q * t.powf(q - 1.0);
    let reach = pp.dx.powf(1.0 / q);
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for (k, eps) in eps_list[..=pp.shell].iter().enumerate() {
        let inside = pp.dx < *eps && d < eps.min(pp.dx.sqrt());
        if !inside {
            alpha.push(f64::INFINITY);
            beta.push(f64::INFINITY);
            continue;
        }
        if let Some((_, plus, minus)) = dp.scalar_norms() {
            let side = c[0].signum();
            beta.push(scalar_enlarged(side, weight(d), *eps, plus, minus).scale(weight(d)).to_f64());
            // both factors are nonincreasing in |y' − ȳ|, so the infimum over
            // each side of the open interval is the limit at its far end
            let far = d + reach;
            let mut a = scalar_enlarged(side, weight(far), *eps, plus, minus).scale(weight(far));
            if reach > d {
                let far = reach - d;
                a = a.min(scalar_enlarged(-side, weight(far), *eps, plus, minus).scale(weight(far)));
            }
            alpha.push(a.to_f64());
        } else {
            // min over the normalizations of y* + εv*, y* ∈ J^q(v), v* in the dual ball
            let enlarged = |v: &[f64]| -> Result<Extended> {
                let mut best = Extended::Infinite;
                for ys in q_duality(v, ynorm, q)?.representatives() {
                    for pert in &perturbations[k] {
                        let w: Vec<f64> = ys.iter().zip(pert).map(|(a, b)| a + eps * b).collect();
                        let n = ynorm.dual_norm(&w);
                        if n > 1e-300 {
                            let u: Vec<f64> = w.iter().map(|a| a / n).collect();
                            best = best.min(dp.min_norm_at(&u));
                        }
                    }
                }
                Ok(best)
            };
            beta.push(enlarged(&c)?.scale(weight(d)).to_f64());
            let mut a = Extended::Infinite;
            let ladder: Vec<f64> = std::iter::once(0.0).chain((1..=6).map(|m| 1.0 - 0.5f64.powi(m))).collect();
            for b in unit_directions(ynorm.dim(), ALPHA_DIRECTIONS, mix_seed(schedule.seed, 0x5500)) {
                let n = ynorm.norm(&b);
                for t in &ladder {
                    let v: Vec<f64> = c.iter().zip(&b).map(|(ci, bi)| ci + reach * t * bi / n).collect();
                    let dv = ynorm.norm(&v);
                    if dv == 0.0 {
                        continue;
                    }
                    a = a.min(enlarged(&v)?.scale(weight(dv)));
                }
            }
            alpha.push(a.to_f64());
        }
    }
    Ok(LmPoint { alpha, beta })
}

/// The constants α and β for `ε_k = ρ_k / 2`: per-ε infima over the
/// windows, then the running supremum over the ε-list.
pub fn lm_constants(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<(SlopeEstimate, SlopeEstimate)> {
    check_order(q)?;
    require_oracle(problem)?;
    let outer = Schedule {
        outer_points_only: true,
        ..schedule.clone()
    };
    let pool = Pool::for_mapping(problem, &outer)?;
    let eps_list: Vec<f64> = pool.rhos.iter().map(|r| r / 2.0).collect();
    let ynorm = &problem.space().y;
    let perturbations: Vec<Vec<Vec<f64>>> = (0..eps_list.len())
        .map(|k| dual_ball_samples(ynorm, ENLARGEMENT_BUDGET, mix_seed(schedule.seed, 0x5400 + k as u64)))
        .collect();
    let per_point: Vec<LmPoint> = pool
        .points
        .par_iter()
        .map(|pp| lm_point(problem, pp, q, &eps_list, &perturbations, schedule))
        .collect::<Result<_>>()?;
    let running_sup = |values: Vec<Vec<f64>>, kind| {
        let minima = pool.level_minima(&values);
        let mut best = Extended::ZERO;
        let trace = minima
            .trace
            .iter()
            .zip(&eps_list)
            .map(|(e, eps)| {
                best = best.max(e.value);
                TraceEntry { param: *eps, value: best }
            })
            .collect();
        let est = SlopeEstimate::from_trace(kind, trace, false, pool.drawn);
        if ynorm.dim() > 1 {
            est.with_flag("sampled_enlargement")
        } else {
            est
        }
    };
    let alpha = running_sup(per_point.iter().map(|p| p.alpha.clone()).collect(), SlopeKind::LmAlpha);
    let beta = running_sup(per_point.iter().map(|p| p.beta.clone()).collect(), SlopeKind::LmBeta);
    Ok((alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{catalog_problem, linear_problem};

    #[test]
    fn half_square_rho_slope_is_exact() {
        let p = catalog_problem("half-square").unwrap();
        let s = Schedule::quick();
        for x in [0.1, 0.3, 0.5] {
            let at = ProductPoint::scalar(x, x * x);
            for rho in [0.0, 0.2, 0.7] {
                for variant in [DualVariant::Plain, DualVariant::Approximate] {
                    let v = subdiff_rho_slope(&p, rho, &at, variant, &s).unwrap().value.to_f64();
                    assert!((v - 2.0 * x * (1.0 - rho)).abs() < 1e-9, "{x} {rho} {variant:?} {v}");
                }
            }
        }
        let err = subdiff_rho_slope(&p, 0.1, &ProductPoint::scalar(-1.0, 0.0), DualVariant::Plain, &s).unwrap_err();
        assert_eq!(err, Error::AtReferenceValue);
    }

    #[test]
    fn linear_map_at_zero_radius() {
        let p = linear_problem(vec![vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let at = ProductPoint::new(vec![0.5, 0.0], vec![1.0, 0.0]);
        let v = subdiff_rho_slope(&p, 0.0, &at, DualVariant::Plain, &Schedule::quick()).unwrap();
        assert!((v.value.to_f64() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn half_square_strict_dual_slopes() {
        let p = catalog_problem("half-square").unwrap();
        let a = dual_analysis(&p, 0.5, &Schedule::quick()).unwrap();
        for e in [
            &a.slopes.plain,
            &a.slopes.approximate,
            &a.slopes.modified,
            &a.slopes.modified_approximate,
            &a.limiting,
        ] {
            assert!((e.value.to_f64() - 1.0).abs() < 0.05, "{:?} {:?}", e.kind, e.value);
        }
    }

    #[test]
    fn simplified_matches_at_order_one() {
        let p = catalog_problem("identity").unwrap();
        let s = Schedule::quick();
        let a = strict_subdiff_q_slopes(&p, 1.0, &s).unwrap();
        let b = simplified_strict_subdiff_q_slopes(&p, 1.0, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_square_lm_constants() {
        let p = catalog_problem("half-square").unwrap();
        let (alpha, beta) = lm_constants(&p, 0.5, &Schedule::quick()).unwrap();
        assert!((beta.value.to_f64() - 1.0).abs() < 1e-6, "{:?}", beta.value);
        assert!(
            (alpha.value.to_f64() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6,
            "{:?}",
            alpha.value
        );
        for w in beta.trace.windows(2) {
            assert!(w[1].value.to_f64() >= w[0].value.to_f64());
        }
    }

    #[test]
    fn missing_oracle_is_reported() {
        let pts = vec![ProductPoint::scalar(0.0, 0.0), ProductPoint::scalar(0.1, 0.2)];
        let p = crate::problems::finite_problem("pair", pts, ProductPoint::scalar(0.0, 0.0)).unwrap();
        assert_eq!(
            strict_subdiff_q_slopes(&p, 1.0, &Schedule::quick()).unwrap_err(),
            Error::MissingCoderivative
        );
    }
}
