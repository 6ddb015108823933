//! Quantitative and qualitative subregularity criteria with consistency
//! checks of the implications between them.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{agree, subregularity_modulus, ModulusReport, INDEPENDENT_REL, SAMPLED_REL};
use crate::error::{check_order, Error, Result};
use crate::estimate::{classify, SlopeEstimate, TraceEntry, Trend, POSITIVE_FLOOR};
use crate::extended::Extended;
use crate::geometry::ProductMetric;
use crate::problems::{MappingProblem, Schedule};
use crate::slopes_dual::{dual_analysis, strict_subdiff_q_slopes, DualAnalysis};
use crate::slopes_primal::{strict_primal_slopes, uniform_strict_q_slope, StrictPrimalSlopes};

/// Thresholds are widened by this much before an implication is judged.
const THRESHOLD_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub status: ConditionStatus,
    /// Name of the estimate the condition was read from.
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Extended>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicationViolation {
    pub family: String,
    pub arrow: String,
    pub premise: Extended,
    pub conclusion: Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaReport {
    pub gamma: f64,
    pub q: f64,
    pub quantitative: BTreeMap<String, ConditionResult>,
    pub qualitative: BTreeMap<String, ConditionResult>,
    pub implication_violations: Vec<ImplicationViolation>,
}

/// Everything the criteria are read from, computed once per problem and
/// order so that a sweep over γ reuses it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaInputs {
    pub q: f64,
    pub convex: bool,
    pub closed: bool,
    pub smooth_y: bool,
    pub sr: ModulusReport,
    pub primal: StrictPrimalSlopes,
    pub dual: Option<DualAnalysis>,
}

pub fn criteria_inputs(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<CriteriaInputs> {
    check_order(q)?;
    let dual = match dual_analysis(problem, q, schedule) {
        Ok(d) => Some(d),
        Err(Error::MissingCoderivative) => None,
        Err(e) => return Err(e),
    };
    let flags = problem.flags();
    Ok(CriteriaInputs {
        q,
        convex: flags.convex,
        closed: flags.graph_locally_closed,
        smooth_y: problem.space().y.is_smooth(),
        sr: subregularity_modulus(problem, q, schedule)?,
        primal: strict_primal_slopes(problem, q, schedule)?,
        dual,
    })
}

pub fn criteria_report(problem: &MappingProblem, q: f64, gamma: f64, schedule: &Schedule) -> Result<CriteriaReport> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::NonPositive {
            name: "gamma",
            value: gamma,
        });
    }
    Ok(evaluate_criteria(&criteria_inputs(problem, q, schedule)?, gamma))
}

/// One estimate feeding a condition: its value and trace, or nothing when
/// it could not be computed.
#[derive(Clone, Copy)]
struct Reading<'a> {
    source: &'a str,
    value: Option<Extended>,
    trace: &'a [TraceEntry],
}

impl<'a> Reading<'a> {
    fn slope(source: &'a str, e: &'a SlopeEstimate) -> Self {
        Reading {
            source,
            value: Some(e.value),
            trace: &e.trace,
        }
    }

    fn dual(source: &'a str, d: Option<&'a SlopeEstimate>) -> Self {
        match d {
            Some(e) => Reading::slope(source, e),
            None => Reading {
                source,
                value: None,
                trace: &[],
            },
        }
    }

    fn positive(&self) -> Option<bool> {
        let v = self.value?;
        Some(match v {
            Extended::Infinite => true,
            Extended::Finite(x) => x > POSITIVE_FLOOR && classify(self.trace) != Trend::Vanishing,
        })
    }

    fn result(&self, status: Option<bool>) -> ConditionResult {
        let mut flags = Vec::new();
        if self.value == Some(Extended::Infinite) {
            flags.push("empty_infimum".to_string());
        }
        let status = match status {
            Some(true) => ConditionStatus::Holds,
            Some(false) => ConditionStatus::Fails,
            None => {
                flags.push("missing_estimate".to_string());
                ConditionStatus::Inconclusive
            }
        };
        ConditionResult {
            status,
            source: self.source.to_string(),
            value: self.value,
            flags,
        }
    }
}

/// `premise ⇒ conclusion` with both read as `value > γ`; violated only when
/// the premise clears `γ` and the conclusion misses it by more than the
/// relative slack.
struct Arrow {
    from: &'static str,
    to: &'static str,
    rel: f64,
}

const fn arrow(from: &'static str, to: &'static str, rel: f64) -> Arrow {
    Arrow { from, to, rel }
}

fn both_ways(a: &'static str, b: &'static str, rel: f64) -> [Arrow; 2] {
    [arrow(a, b, rel), arrow(b, a, rel)]
}

/// Quantitative arrows that apply to the given structure. Labels `a`–`j`
/// are the conditions; `sr>g` and `q*sr>g` are the modulus readings used
/// by the τ-dependent implications.
fn quantitative_arrows(inputs: &CriteriaInputs) -> Vec<Arrow> {
    let mut out = vec![
        arrow("c", "e", 0.0),
        arrow("d", "e", 0.0),
        arrow("e", "b", SAMPLED_REL),
        arrow("f", "g", 0.0),
        arrow("g", "i", 0.0),
        arrow("f", "h", 0.0),
        arrow("h", "i", 0.0),
        arrow("sr>g", "b", INDEPENDENT_REL),
    ];
    if inputs.closed {
        out.push(arrow("b", "sr>g", INDEPENDENT_REL));
        out.push(arrow("f", "d", SAMPLED_REL));
        out.push(arrow("g", "e", SAMPLED_REL));
    }
    if inputs.convex {
        out.push(arrow("q*sr>g", "h", INDEPENDENT_REL));
    }
    if inputs.smooth_y && (inputs.closed || inputs.convex) {
        out.extend(both_ways("h", "d", SAMPLED_REL));
        out.extend(both_ways("i", "e", SAMPLED_REL));
    }
    if inputs.convex && inputs.q == 1.0 {
        for pair in ["b", "d", "e", "h", "i"].windows(2) {
            out.extend(both_ways(pair[0], pair[1], SAMPLED_REL));
        }
    }
    out.extend(both_ways("f", "h", SAMPLED_REL));
    out.extend(both_ways("h", "j", SAMPLED_REL));
    out
}

/// Qualitative arrows; `sub` is subregularity itself (`sr_q > 0`).
fn qualitative_arrows(inputs: &CriteriaInputs) -> Vec<(&'static str, &'static str)> {
    let mut out = vec![("sub", "a"), ("b", "d"), ("c", "d"), ("d", "a"), ("e", "f"), ("g", "h")];
    if inputs.closed {
        out.extend([("a", "sub"), ("e", "c"), ("f", "d")]);
    }
    if inputs.smooth_y {
        out.extend([("c", "e"), ("d", "f")]);
    }
    if inputs.convex {
        out.push(("sub", "g"));
        if inputs.q == 1.0 {
            for pair in ["sub", "a", "c", "d", "g", "h"].windows(2) {
                out.extend([(pair[0], pair[1]), (pair[1], pair[0])]);
            }
        }
    }
    out.extend([("e", "g"), ("g", "e"), ("g", "i"), ("i", "g")]);
    out
}

pub fn evaluate_criteria(inputs: &CriteriaInputs, gamma: f64) -> CriteriaReport {
    let p = &inputs.primal;
    let d = inputs.dual.as_ref();
    let sr = Reading {
        source: "sr_q",
        value: Some(inputs.sr.value),
        trace: &inputs.sr.trace,
    };
    let approx = Reading::dual("subdiff_strict_q_slope_approx", d.map(|d| &d.slopes.approximate));
    let mod_approx = Reading::dual("subdiff_strict_q_slope_modified_approx", d.map(|d| &d.slopes.modified_approximate));
    let plain = Reading::dual("subdiff_strict_q_slope_plain", d.map(|d| &d.slopes.plain));
    let modified = Reading::dual("subdiff_strict_q_slope_modified", d.map(|d| &d.slopes.modified));
    let limiting = Reading::dual("limiting_coderivative_min_norm", d.map(|d| &d.limiting));
    let uniform = Reading::slope("uniform_strict_q_slope", &p.uniform);
    let ratio = Reading::slope("liminf_ratio", &p.liminf_ratio);
    let strict = Reading::slope("strict_q_slope", &p.plain);
    let strict_mod = Reading::slope("modified_strict_q_slope", &p.modified);

    let quantitative: BTreeMap<&str, Reading> = [
        ("a", sr),
        ("b", uniform),
        ("c", ratio),
        ("d", strict),
        ("e", strict_mod),
        ("f", approx),
        ("g", mod_approx),
        ("h", plain),
        ("i", modified),
        ("j", limiting),
    ]
    .into();
    let above = |r: &Reading| r.value.map(|v| v.exceeds(gamma));
    let mut quant_out: BTreeMap<String, ConditionResult> = quantitative
        .iter()
        .map(|(k, r)| (k.to_string(), r.result(if *k == "a" { r.positive() } else { above(r) })))
        .collect();
    if let Some(a) = quant_out.get_mut("a") {
        a.flags.push("reads_modulus_positivity".into());
    }

    let value_of = |label: &str| -> Option<Extended> {
        match label {
            "sr>g" => Some(inputs.sr.value),
            "q*sr>g" => Some(inputs.sr.value.scale(inputs.q)),
            other => quantitative[other].value,
        }
    };
    let mut violations = Vec::new();
    for a in quantitative_arrows(inputs) {
        let (Some(from), Some(to)) = (value_of(a.from), value_of(a.to)) else {
            continue;
        };
        let premise = from.exceeds(gamma * (1.0 + a.rel) + THRESHOLD_SLACK);
        let conclusion_misses = !to.exceeds(gamma * (1.0 - a.rel) - THRESHOLD_SLACK);
        if premise && conclusion_misses {
            violations.push(ImplicationViolation {
                family: "quantitative".into(),
                arrow: format!("{} => {}", a.from, a.to),
                premise: from,
                conclusion: to,
            });
        }
    }

    let qualitative: BTreeMap<&str, Reading> = [
        ("sub", sr),
        ("a", uniform),
        ("b", ratio),
        ("c", strict),
        ("d", strict_mod),
        ("e", approx),
        ("f", mod_approx),
        ("g", plain),
        ("h", modified),
        ("i", limiting),
    ]
    .into();
    let qual_out = qualitative.iter().map(|(k, r)| (k.to_string(), r.result(r.positive()))).collect();
    for (from, to) in qualitative_arrows(inputs) {
        let (f, t) = (&qualitative[from], &qualitative[to]);
        if let (Some(true), Some(false)) = (f.positive(), t.positive()) {
            violations.push(ImplicationViolation {
                family: "qualitative".into(),
                arrow: format!("{from} => {to}"),
                premise: f.value.unwrap_or(Extended::ZERO),
                conclusion: t.value.unwrap_or(Extended::ZERO),
            });
        }
    }

    CriteriaReport {
        gamma,
        q: inputs.q,
        quantitative: quant_out,
        qualitative: qual_out,
        implication_violations: violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// `q·sr_q ≤` plain strict subdifferential q-slope for convex mappings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessityCheck {
    pub status: CheckStatus,
    pub lhs: Option<Extended>,
    pub rhs: Option<Extended>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

fn unbounded(value: Extended, trace: &[TraceEntry]) -> bool {
    value.is_infinite() || classify(trace) == Trend::Diverging
}

/// `lhs ≤ rhs` up to relative slack, with both near zero counting as equal.
fn at_most(lhs: Extended, rhs: Extended, rel: f64) -> bool {
    match (lhs, rhs) {
        (_, Extended::Infinite) => true,
        (Extended::Infinite, _) => false,
        (Extended::Finite(l), Extended::Finite(r)) => l <= r * (1.0 + rel) + THRESHOLD_SLACK || agree(lhs, rhs, rel),
    }
}

pub fn convexity_necessity_check(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<NecessityCheck> {
    check_order(q)?;
    let skipped = |flag: &str| NecessityCheck {
        status: CheckStatus::Skipped,
        lhs: None,
        rhs: None,
        flags: vec![flag.into()],
    };
    if !problem.flags().convex {
        return Ok(skipped("not_convex"));
    }
    let dual = match strict_subdiff_q_slopes(problem, q, schedule) {
        Ok(d) => d.plain,
        Err(Error::MissingCoderivative) => return Ok(skipped("missing_coderivative")),
        Err(e) => return Err(e),
    };
    let sr = subregularity_modulus(problem, q, schedule)?;
    let lhs = sr.value.scale(q);
    let mut flags = Vec::new();
    let pass = if unbounded(sr.value, &sr.trace) {
        flags.push("unbounded_lhs".to_string());
        if !unbounded(dual.value, &dual.trace) {
            flags.push("rhs_bounded".to_string());
        }
        true
    } else {
        at_most(lhs, dual.value, INDEPENDENT_REL)
    };
    Ok(NecessityCheck {
        status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
        lhs: Some(lhs),
        rhs: Some(dual.value),
        flags,
    })
}

/// `sr_q` against the uniform strict q-slope under both admissible metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacterizationCheck {
    pub status: CheckStatus,
    pub sr: Extended,
    pub uniform: Extended,
    pub uniform_sum_metric: Extended,
    /// `sr_q ≤ uniform` up to slack.
    pub inequality: bool,
    /// Equality within tolerance; checked only for locally closed graphs.
    pub equality: Option<bool>,
    pub equality_sum_metric: Option<bool>,
}

pub fn characterization_check(problem: &MappingProblem, q: f64, schedule: &Schedule) -> Result<CharacterizationCheck> {
    check_order(q)?;
    let sr = subregularity_modulus(problem, q, schedule)?;
    let max_schedule = Schedule {
        metric: ProductMetric::Max,
        ..schedule.clone()
    };
    let sum_schedule = Schedule {
        metric: ProductMetric::Sum,
        ..schedule.clone()
    };
    let uniform = uniform_strict_q_slope(problem, q, &max_schedule)?;
    let uniform_sum = uniform_strict_q_slope(problem, q, &sum_schedule)?;
    let sr_unbounded = unbounded(sr.value, &sr.trace);
    // two divergent traces both estimate +∞
    let equal = |u: &SlopeEstimate| agree(sr.value, u.value, INDEPENDENT_REL) || (sr_unbounded && unbounded(u.value, &u.trace));
    let inequality = at_most(sr.value, uniform.value, INDEPENDENT_REL) || equal(&uniform);
    let closed = problem.flags().graph_locally_closed;
    let equality = closed.then(|| equal(&uniform));
    let equality_sum = closed.then(|| equal(&uniform_sum));
    let pass = inequality && equality != Some(false) && equality == equality_sum;
    Ok(CharacterizationCheck {
        status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
        sr: sr.value,
        uniform: uniform.value,
        uniform_sum_metric: uniform_sum.value,
        inequality,
        equality,
        equality_sum_metric: equality_sum,
    })
}
