//! Error-bound and subregularity moduli, direct verification of the
//! subregularity inequality, and the criteria evaluator.

pub mod criteria;

use serde::Serialize;

use crate::error::{check_order, Error, Result};
use crate::estimate::TraceEntry;
use crate::extended::Extended;
use crate::geometry::{NormSpec, ProductPoint};
use crate::pool::is_outer;
use crate::problems::{solution_set_distance, LevelFunction, MappingProblem, Region, Schedule};
use crate::sampling::{mix_seed, Halton};

pub use criteria::{
    characterization_check, convexity_necessity_check, criteria_inputs, criteria_report, evaluate_criteria, CharacterizationCheck,
    CheckStatus, ConditionResult, ConditionStatus, CriteriaInputs, CriteriaReport, ImplicationViolation, NecessityCheck,
};

/// Relative tolerance for comparing two sampled estimates.
pub const SAMPLED_REL: f64 = 0.05;
/// Relative tolerance for comparing a modulus with a slope.
pub const INDEPENDENT_REL: f64 = 0.10;
/// Values this close to zero count as zero in equality comparisons.
pub const ZERO_BAND: f64 = 0.02;

/// `a` and `b` agree up to `rel` relative error, or both lie in the zero
/// band, or both are infinite.
pub fn agree(a: Extended, b: Extended, rel: f64) -> bool {
    match (a, b) {
        (Extended::Infinite, Extended::Infinite) => true,
        (Extended::Finite(a), Extended::Finite(b)) => {
            (a.abs() <= ZERO_BAND && b.abs() <= ZERO_BAND) || (a - b).abs() <= rel * a.abs().max(b.abs())
        }
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusKind {
    ErrorBound,
    Subregularity,
}

/// A sample attaining the smallest ratio at the tightest shell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    /// The graph value used, when the ratio depends on one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusReport {
    pub kind: ModulusKind,
    pub value: Extended,
    /// Per-shell minima, outermost shell first.
    pub trace: Vec<TraceEntry>,
    pub witnesses: Vec<Witness>,
    /// No sample qualified for the tightest shell.
    pub inconclusive: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl ModulusReport {
    fn from_minima(kind: ModulusKind, rhos: &[f64], best: &[(f64, Option<Witness>)]) -> Self {
        let trace: Vec<TraceEntry> = rhos
            .iter()
            .zip(best)
            .map(|(r, (v, _))| TraceEntry {
                param: *r,
                value: Extended::from(*v),
            })
            .collect();
        let last = best.last();
        let witnesses = last.and_then(|(_, w)| w.clone()).into_iter().collect::<Vec<_>>();
        let inconclusive = witnesses.is_empty();
        let mut report = ModulusReport {
            kind,
            value: trace.last().map_or(Extended::Infinite, |e| e.value),
            trace,
            witnesses,
            inconclusive,
            flags: Vec::new(),
        };
        if inconclusive {
            report.flags.push("no_qualifying_samples".into());
        }
        report
    }

    pub fn trend(&self) -> crate::estimate::Trend {
        crate::estimate::classify(&self.trace)
    }
}

/// Per-shell minima of ratios: a sample with shell `s` feeds levels `0..=s`.
struct ShellMinima {
    best: Vec<(f64, Option<Witness>)>,
}

impl ShellMinima {
    fn new(levels: usize) -> Self {
        ShellMinima {
            best: vec![(f64::INFINITY, None); levels],
        }
    }

    fn push(&mut self, shell: usize, witness: impl Fn() -> Witness, ratio: f64) {
        for slot in &mut self.best[..=shell] {
            if slot.1.is_none() || ratio < slot.0 {
                *slot = (ratio, Some(witness()));
            }
        }
    }
}

fn deepest(rhos: &[f64], inside: impl Fn(f64) -> bool) -> Option<usize> {
    rhos.iter().take_while(|r| inside(**r)).count().checked_sub(1)
}

/// Points of the ball `‖x − center‖ < radius`, drawn from a rotated Halton
/// sequence on the enclosing cube.
fn ball_points(norm: &NormSpec, center: &[f64], radius: f64, budget: usize, seed: u64) -> Vec<Vec<f64>> {
    let halton = Halton::new(norm.dim(), seed);
    let widths = norm.box_half_widths(radius);
    halton
        .points(budget)
        .map(|h| {
            center
                .iter()
                .zip(&h)
                .zip(&widths)
                .map(|((c, t), w)| c + w * (2.0 * t - 1.0))
                .collect::<Vec<f64>>()
        })
        .filter(|x| norm.dist(x, center) < radius)
        .collect()
}

/// The three equivalent forms of the error-bound modulus, each traced over
/// shells `d(x,x̄) < r_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBoundReport {
    /// `x → x̄` with `f > 0`.
    pub modulus: ModulusReport,
    /// `x → x̄`, `y → ȳ` with `f > 0`.
    pub joint: ModulusReport,
    /// `x → x̄`, `f ↓ 0`.
    pub level: ModulusReport,
    /// The three values agree within the sampled tolerance.
    pub forms_agree: bool,
}

/// `f(x,y)/d(x,S(f))` at a point with `f > 0`; `None` otherwise.
pub fn error_bound_ratio(f: &dyn LevelFunction, point: &ProductPoint) -> Option<f64> {
    let v = f.value(point).finite()?;
    if !(v > 0.0) {
        return None;
    }
    Some(match f.solution_distance(&point.x) {
        Extended::Finite(d) if d > 0.0 => v / d,
        Extended::Finite(_) => f64::INFINITY,
        Extended::Infinite => 0.0,
    })
}

pub fn error_bound_modulus(f: &dyn LevelFunction, schedule: &Schedule) -> Result<ErrorBoundReport> {
    schedule.validate()?;
    let rhos = schedule.rhos();
    let anchor = f.anchor();
    let space = f.space();
    let wide = schedule.truncation_for(0.0);
    let mut pts = match f.enumerate() {
        Some(all) => all,
        None => {
            let mut pts = Vec::new();
            for (k, r) in rhos.iter().enumerate() {
                pts.extend(f.sample(
                    &Region::ball(anchor, *r),
                    schedule.sample_budget,
                    mix_seed(schedule.seed, 0x7100 + k as u64),
                ));
                let slab = Region {
                    center: anchor,
                    radius_x: *r,
                    radius_y: wide,
                };
                pts.extend(f.sample(&slab, schedule.sample_budget / 4, mix_seed(schedule.seed, 0x7200 + k as u64)));
            }
            pts
        }
    };
    pts.retain(|p| p != anchor);
    let levels = rhos.len();
    let (mut x_only, mut joint, mut level) = (ShellMinima::new(levels), ShellMinima::new(levels), ShellMinima::new(levels));
    for p in &pts {
        let Some(ratio) = error_bound_ratio(f, p) else { continue };
        let value = f.value(p).to_f64();
        let dx = space.x.dist(&p.x, &anchor.x);
        let dy = space.y.dist(&p.y, &anchor.y);
        let witness = || Witness {
            x: p.x.clone(),
            y: Some(p.y.clone()),
            ratio,
        };
        if let Some(s) = deepest(&rhos, |r| dx < r) {
            x_only.push(s, witness, ratio);
        }
        if let Some(s) = deepest(&rhos, |r| dx < r && dy < r) {
            joint.push(s, witness, ratio);
        }
        if let Some(s) = deepest(&rhos, |r| dx < r && value < r) {
            level.push(s, witness, ratio);
        }
    }
    let build = |m: ShellMinima| ModulusReport::from_minima(ModulusKind::ErrorBound, &rhos, &m.best);
    let (modulus, joint, level) = (build(x_only), build(joint), build(level));
    let forms_agree = agree(modulus.value, joint.value, SAMPLED_REL) && agree(modulus.value, level.value, SAMPLED_REL);
    Ok(ErrorBoundReport {
        modulus,
        joint,
        level,
        forms_agree,
    })
}

/// `d(ȳ,F(x))^q / d(x,F⁻¹(ȳ))` at an outer point `x`; `None` when `x` lies
/// in the solution set.
pub fn subregularity_ratio(problem: &MappingProblem, q: f64, x: &[f64], schedule: &Schedule) -> Result<Option<f64>> {
    check_order(q)?;
    if !is_outer(problem, x) {
        return Ok(None);
    }
    let num = match problem.fiber_distance(x) {
        Extended::Finite(d) => d.powf(q),
        Extended::Infinite => f64::INFINITY,
    };
    Ok(Some(match solution_set_distance(problem, x, schedule)?.value {
        Extended::Finite(d) if d > 0.0 => num / d,
        Extended::Finite(_) => f64::INFINITY,
        Extended::Infinite => 0.0,
    }))
}

fn x_samples(problem: &MappingProblem, schedule: &Schedule) -> Vec<Vec<f64>> {
    if let Some(all) = problem.graph().enumerate() {
        let mut xs: Vec<Vec<f64>> = all.iter().map(|p| p.x.clone()).collect();
        xs.dedup();
        return xs;
    }
    let norm = &problem.space().x;
    schedule
        .rhos()
        .iter()
        .enumerate()
        .flat_map(|(k, r)| {
            ball_points(
                norm,
                problem.xbar(),
                *r,
                schedule.sample_budget,
                mix_seed(schedule.seed, 0x7300 + k as u64),
            )
        })
        .collect()
}

pub fn subregularity_modulus(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<ModulusReport> {
    check_order(q)?;
    schedule.validate()?;
    let rhos = schedule.rhos();
    let mut minima = ShellMinima::new(rhos.len());
    for x in x_samples(problem, schedule) {
        let dx = problem.dist_x(&x);
        let Some(shell) = deepest(&rhos, |r| dx < r) else { continue };
        if let Some(ratio) = subregularity_ratio(problem, q, &x, schedule)? {
            minima.push(
                shell,
                || Witness {
                    x: x.clone(),
                    y: None,
                    ratio,
                },
                ratio,
            );
        }
    }
    let report = ModulusReport::from_minima(ModulusKind::Subregularity, &rhos, &minima.best);
    Ok(if report.trend() == crate::estimate::Trend::Diverging {
        ModulusReport {
            flags: [report.flags.clone(), vec!["diverging".into()]].concat(),
            ..report
        }
    } else {
        report
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum InequalityVerdict {
    Holds {
        checked: usize,
    },
    /// The worst violation found: `lhs = τ·d(x,F⁻¹(ȳ))`, `rhs = d(ȳ,F(x))^q`.
    Fails {
        x: Vec<f64>,
        lhs: f64,
        rhs: f64,
    },
}

/// Checks `τ·d(x,F⁻¹(ȳ)) ≤ d(ȳ,F(x))^q` on a grid of the ball of radius
/// `u_radius` around `x̄`.
pub fn check_subregularity_inequality(
    problem: &MappingProblem,
    q: f64,
    tau: f64,
    u_radius: f64,
    grid_budget: usize,
) -> Result<InequalityVerdict> {
    check_order(q)?;
    for (name, value) in [("tau", tau), ("u_radius", u_radius)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositive { name, value });
        }
    }
    let schedule = Schedule::default();
    let xs = ball_points(&problem.space().x, problem.xbar(), u_radius, grid_budget.max(1), 0x7400);
    let mut worst: Option<(f64, Vec<f64>, f64, f64)> = None;
    for x in &xs {
        let lhs = tau * solution_set_distance(problem, x, &schedule)?.value.to_f64();
        let rhs = problem.fiber_distance(x).to_f64().powf(q);
        let excess = lhs - rhs;
        if excess > 1e-12 * rhs.max(1e-300) && worst.as_ref().is_none_or(|w| excess / lhs > w.0) {
            worst = Some((excess / lhs, x.clone(), lhs, rhs));
        }
    }
    Ok(match worst {
        None => InequalityVerdict::Holds { checked: xs.len() },
        Some((_, x, lhs, rhs)) => InequalityVerdict::Fails { x, lhs, rhs },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{catalog_problem, ErrorFunction, SingleVariableExtension};
    use std::sync::Arc;

    fn extension(f: fn(f64) -> f64, dist: fn(f64) -> f64) -> SingleVariableExtension {
        SingleVariableExtension::new(
            vec![0.0],
            Arc::new(move |x: &[f64]| Extended::Finite(f(x[0]))),
            Arc::new(move |x: &[f64]| dist(x[0])),
        )
    }

    #[test]
    fn error_bound_examples() {
        let s = Schedule::quick();
        let abs_ok = error_bound_modulus(&extension(f64::abs, f64::abs), &s).unwrap();
        assert!((abs_ok.modulus.value.to_f64() - 1.0).abs() < 1e-12);
        assert!(abs_ok.forms_agree);
        let sq = error_bound_modulus(&extension(|x| x * x, f64::abs), &s).unwrap();
        assert!(sq.modulus.value.to_f64() < 1e-2);
        let hs = ErrorFunction::new(catalog_problem("half-square").unwrap(), 0.5).unwrap();
        let r = error_bound_modulus(&hs, &s).unwrap();
        assert!((r.modulus.value.to_f64() - 1.0).abs() < 0.05, "{:?}", r.modulus.value);
        assert!(r.forms_agree);
    }

    #[test]
    fn subregularity_examples() {
        let s = Schedule::quick();
        let hs = subregularity_modulus(&catalog_problem("half-square").unwrap(), 0.5, &s).unwrap();
        assert!((hs.value.to_f64() - 1.0).abs() < 0.05);
        let id = subregularity_modulus(&catalog_problem("identity").unwrap(), 1.0, &s).unwrap();
        assert!((id.value.to_f64() - 1.0).abs() < 1e-12);
        let sq = subregularity_modulus(&catalog_problem("square").unwrap(), 1.0, &s).unwrap();
        assert!(sq.value.to_f64() < 0.02);
        let constant = subregularity_modulus(&catalog_problem("constant").unwrap(), 1.0, &s).unwrap();
        assert!(constant.inconclusive && constant.value.is_infinite());
    }

    #[test]
    fn witnesses_reproduce() {
        let s = Schedule::quick();
        let p = catalog_problem("linear-A").unwrap();
        let r = subregularity_modulus(&p, 1.0, &s).unwrap();
        for w in &r.witnesses {
            let again = subregularity_ratio(&p, 1.0, &w.x, &s).unwrap().unwrap();
            assert!((again - w.ratio).abs() <= 1e-9 * w.ratio.max(1.0));
        }
    }

    #[test]
    fn inequality_examples() {
        let hs = catalog_problem("half-square").unwrap();
        assert!(matches!(
            check_subregularity_inequality(&hs, 0.5, 0.9, 0.1, 200).unwrap(),
            InequalityVerdict::Holds { .. }
        ));
        match check_subregularity_inequality(&hs, 0.5, 1.5, 0.1, 200).unwrap() {
            InequalityVerdict::Fails { x, lhs, rhs } => {
                assert!(x[0] > 0.0 && lhs > rhs);
                assert!((rhs / (lhs / 1.5) - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            check_subregularity_inequality(&hs, 1.0, 0.01, 0.005, 200).unwrap(),
            InequalityVerdict::Fails { .. }
        ));
        assert!(check_subregularity_inequality(&hs, 1.0, 0.0, 0.1, 10).is_err());
    }
}
