//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any of them fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::{catalog_with_orders, error_values, finite_graphs, probes, rel_diff, scan_nonlocal};
use subreg::cli_report::{emit_report, run_config, Format, RunConfig, Severity};
use subreg::extended::Extended;
use subreg::geometry::{ProductMetric, ProductPoint};
use subreg::moduli::{
    agree, characterization_check, convexity_necessity_check, criteria_inputs, evaluate_criteria, subregularity_modulus, CheckStatus,
};
use subreg::problems::{catalog_names, catalog_problem, finite_problem, ErrorFunction, FiniteLevelFunction, Schedule};
use subreg::slopes_dual::{dual_analysis, strict_subdiff_q_slopes, subdiff_rho_slope, DualVariant};
use subreg::slopes_primal::{f_level_slopes, local_rho_slope, nonlocal_q_rho_slope, strict_primal_slopes, LevelSlope};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(failures: &[String], summary: impl Into<String>) -> Self {
        let detail = match failures.first() {
            None => summary.into(),
            Some(first) => format!("{} failure(s), first: {first}", failures.len()),
        };
        Outcome {
            pass: failures.is_empty(),
            detail,
        }
    }
}

fn within(v: Extended, lo: f64, hi: f64) -> bool {
    matches!(v, Extended::Finite(x) if (lo..=hi).contains(&x))
}

fn half_square_reproduction() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
    let start = Instant::now();
    let failures = pool.install(|| {
        let p = catalog_problem("half-square").unwrap();
        let s = Schedule::default();
        let mut failures = Vec::new();
        let mut range = |name: &str, v: Extended| {
            if !within(v, 0.95, 1.05) {
                failures.push(format!("{name} = {v}"));
            }
        };
        range("sr", subregularity_modulus(&p, 0.5, &s).unwrap().value);
        let primal = strict_primal_slopes(&p, 0.5, &s).unwrap();
        range("uniform", primal.uniform.value);
        range("strict", primal.plain.value);
        range("modified", primal.modified.value);
        let dual = strict_subdiff_q_slopes(&p, 0.5, &s).unwrap();
        range("dual plain", dual.plain.value);
        range("dual approx", dual.approximate.value);
        range("dual modified", dual.modified.value);
        range("dual modified approx", dual.modified_approximate.value);
        for x in [0.1, 0.5, 1.0, 2.0] {
            for rho in [0.0, 0.25, 0.5, 0.9] {
                let at = ProductPoint::scalar(x, x * x);
                let v = subdiff_rho_slope(&p, rho, &at, DualVariant::Plain, &s).unwrap().value.to_f64();
                let expected = 2.0 * x * (1.0 - rho);
                if (v - expected).abs() > 1e-9 {
                    failures.push(format!("subdiff slope at x={x}, rho={rho}: {v} vs {expected}"));
                }
            }
        }
        let local = local_rho_slope(&p, 0.5, &ProductPoint::scalar(0.5, 0.25), &s)
            .unwrap()
            .value
            .to_f64();
        if rel_diff(local, 1.0) > 0.02 {
            failures.push(format!("local slope {local}"));
        }
        failures
    });
    let elapsed = start.elapsed();
    let mut failures = failures;
    if elapsed > Duration::from_secs(10) {
        failures.push(format!("runtime {elapsed:.1?}"));
    }
    Outcome::new(
        &failures,
        format!("all values in [0.95, 1.05], runtime {elapsed:.1?} on one thread"),
    )
}

fn brute_force_equivalence() -> Outcome {
    let s = Schedule::quick();
    let mut failures = Vec::new();
    let mut compared = 0;
    for (name, points) in finite_graphs() {
        let anchor = ProductPoint::new(vec![0.0; points[0].x.len()], vec![0.0; points[0].y.len()]);
        let problem = finite_problem(&name, points.clone(), anchor.clone()).unwrap();
        // an arbitrary function on the same points, negative in places
        let level: Vec<(ProductPoint, f64)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), if *p == anchor { 0.0 } else { ((i * 7) % 11) as f64 / 4.0 - 0.5 }))
            .collect();
        let level_fn = FiniteLevelFunction::new(anchor.clone(), level.clone());
        for metric in [ProductMetric::Max, ProductMetric::Sum] {
            let sched = Schedule { metric, ..s.clone() };
            for rho in [0.125, 0.5, 1.0, 4.0] {
                for q in [1.0, 0.5] {
                    let values = error_values(&points, &anchor.y, q);
                    for (at, f_at) in &values {
                        let got = nonlocal_q_rho_slope(&problem, q, rho, at, &sched).unwrap().value.to_f64();
                        let want = scan_nonlocal(&values, at, *f_at, rho, metric);
                        compared += 1;
                        if got.to_bits() != want.to_bits() {
                            failures.push(format!("{name} q={q} rho={rho} {metric:?} at {at:?}: {got} vs {want}"));
                        }
                    }
                }
                for (at, f_at) in &level {
                    let got = f_level_slopes(&level_fn, rho, at, &sched, &[LevelSlope::Nonlocal], true).unwrap();
                    let got = got[&LevelSlope::Nonlocal].value.to_f64();
                    let want = scan_nonlocal(&level, at, *f_at, rho, metric);
                    compared += 1;
                    if got.to_bits() != want.to_bits() {
                        failures.push(format!("{name} level rho={rho} {metric:?} at {at:?}: {got} vs {want}"));
                    }
                }
            }
        }
    }
    Outcome::new(&failures, format!("{compared} sups bitwise equal on five graphs"))
}

/// Slope values at decreasing ρ must not decrease.
fn nondecreasing(values: &[Extended]) -> Option<(usize, f64, f64)> {
    values.windows(2).enumerate().find_map(|(k, w)| match (w[0], w[1]) {
        (Extended::Infinite, Extended::Finite(b)) => Some((k, f64::INFINITY, b)),
        (Extended::Finite(a), Extended::Finite(b)) if b < a - 1e-12 * a.abs().max(1.0) => Some((k, a, b)),
        _ => None,
    })
}

fn monotonicity() -> Outcome {
    let s = Schedule::quick();
    let rhos = Schedule::default().rhos();
    let mut failures = Vec::new();
    let mut series = 0;
    for name in catalog_names() {
        let p = catalog_problem(name).unwrap();
        for (i, at) in probes(&p, 100, 0x3300).iter().enumerate() {
            let q = if i % 2 == 0 { 1.0 } else { 0.5 };
            let mut families: Vec<(&str, Vec<Extended>)> = vec![
                (
                    "nonlocal",
                    rhos.iter()
                        .map(|r| nonlocal_q_rho_slope(&p, q, *r, at, &s).unwrap().value)
                        .collect(),
                ),
                (
                    "local",
                    rhos.iter().map(|r| local_rho_slope(&p, *r, at, &s).unwrap().value).collect(),
                ),
            ];
            if p.has_coderivative() && p.dist_y(&at.y) > 0.0 {
                for variant in [DualVariant::Plain, DualVariant::Approximate] {
                    let vals = rhos
                        .iter()
                        .map(|r| subdiff_rho_slope(&p, *r, at, variant, &s).unwrap().value)
                        .collect();
                    families.push(("subdifferential", vals));
                }
            }
            for (family, vals) in families {
                series += 1;
                if let Some((k, a, b)) = nondecreasing(&vals) {
                    failures.push(format!("{name} {family} at {at:?}, level {k}: {a} then {b}"));
                }
            }
        }
    }
    Outcome::new(&failures, format!("{series} series over {} levels, no decrease", rhos.len()))
}

fn chain_invariant(name: &str) -> bool {
    !(name.starts_with("limiting") || name.starts_with("sr_q") || name.starts_with("error"))
}

fn inequality_chains() -> Outcome {
    let s = Schedule::quick();
    let mut failures = Vec::new();
    let mut checked = 0;
    for (p, q) in catalog_with_orders() {
        let name = p.name().to_string();
        let config = RunConfig::from_toml(&format!(
            "problem = \"{name}\"\nq = {q}\nchecks = [\"invariants\"]\n[schedule]\nsteps = 8\nsample_budget = 512\nprobe_budget = 32\n"
        ))
        .unwrap();
        let report = run_config(&config).unwrap();
        for r in report.invariant_results.iter().filter(|r| chain_invariant(&r.name)) {
            checked += 1;
            if !r.pass {
                failures.push(format!("{name} q={q}: {} ({} vs {}, {:?})", r.name, r.lhs, r.rhs, r.severity));
            }
        }
        let ef = ErrorFunction::new(p.clone(), q).unwrap();
        for at in probes(&p, 20, 0x3400) {
            for rho in [0.5, 0.0625] {
                let d = p.dist_y(&at.y);
                let to_anchor = s.metric.combine(p.space().x.dist(&at.x, p.xbar()), d, rho);
                let nonlocal = nonlocal_q_rho_slope(&p, q, rho, &at, &s).unwrap().value;
                let local = local_rho_slope(&p, rho, &at, &s).unwrap().value;
                let weighted = if d > 0.0 {
                    local.scale(q * d.powf(q - 1.0))
                } else {
                    Extended::ZERO
                };
                let floor = weighted.max(Extended::Finite(d.powf(q) / to_anchor));
                let levels = f_level_slopes(&ef, rho, &at, &s, &[LevelSlope::Nonlocal, LevelSlope::Local], true).unwrap();
                let f_floor = levels[&LevelSlope::Local].value.max(Extended::Finite(d.powf(q) / to_anchor));
                checked += 2;
                for (label, upper, lower) in [
                    ("mapping", nonlocal, floor),
                    ("level", levels[&LevelSlope::Nonlocal].value, f_floor),
                ] {
                    if upper.to_f64() < lower.to_f64() - 1e-6 {
                        failures.push(format!(
                            "{name} q={q} {label} nonlocal below floor at {at:?}, rho={rho}: {upper} < {lower}"
                        ));
                    }
                }
            }
        }
        let strict = f_level_slopes(
            &ef,
            1.0,
            p.anchor(),
            &s,
            &[LevelSlope::UniformStrict, LevelSlope::ModifiedStrictOuter, LevelSlope::StrictOuter],
            true,
        )
        .unwrap();
        let chain = [LevelSlope::StrictOuter, LevelSlope::ModifiedStrictOuter, LevelSlope::UniformStrict].map(|v| strict[&v].value);
        checked += 1;
        let slack = 1e-6 + 1e-3 * chain[2].to_f64().abs().min(chain[1].to_f64().abs());
        let chain_ok = (chain[0].to_f64() <= chain[1].to_f64() + 1e-6 || chain[1].is_infinite())
            && (chain[1].to_f64() <= chain[2].to_f64() + slack || chain[2].is_infinite());
        if !chain_ok {
            failures.push(format!("{name} q={q} level strict chain {chain:?}"));
        }
    }
    Outcome::new(&failures, format!("{checked} comparisons hold"))
}

fn bridge() -> Outcome {
    let s = Schedule::quick();
    let mut failures = Vec::new();
    let mut compared = 0;
    for name in catalog_names() {
        let p = catalog_problem(name).unwrap();
        for q in [1.0, 0.5] {
            let ef = ErrorFunction::new(p.clone(), q).unwrap();
            let tol = if q == 1.0 { 1e-12 } else { 1e-6 };
            for at in probes(&p, 50, 0x3500) {
                let d = p.dist_y(&at.y);
                if d == 0.0 {
                    continue;
                }
                let rho = 0.5;
                let mapping = local_rho_slope(&p, rho, &at, &s).unwrap().value.to_f64() * q * d.powf(q - 1.0);
                let level = f_level_slopes(&ef, rho, &at, &s, &[LevelSlope::Local], true).unwrap();
                let level = level[&LevelSlope::Local].value.to_f64();
                compared += 1;
                if rel_diff(mapping, level) > tol {
                    failures.push(format!("{name} q={q} at {at:?}: {level} vs {mapping}"));
                }
            }
        }
    }
    Outcome::new(&failures, format!("{compared} probes agree"))
}

fn characterization() -> Outcome {
    let s = Schedule::default();
    let equality_cases = [("half-square", 0.5), ("identity", 1.0), ("square", 1.0), ("halfline-convex", 1.0)];
    let mut failures = Vec::new();
    let mut cases: Vec<(&str, f64)> = catalog_names().iter().map(|n| (*n, 1.0)).collect();
    cases.push(("half-square", 0.5));
    for (name, q) in cases {
        let c = characterization_check(&catalog_problem(name).unwrap(), q, &s).unwrap();
        if !c.inequality {
            failures.push(format!("{name} q={q}: sr {} above uniform {}", c.sr, c.uniform));
        }
        if c.equality != c.equality_sum_metric {
            failures.push(format!("{name} q={q}: verdict changes with the metric"));
        }
        if equality_cases.contains(&(name, q)) && (c.status != CheckStatus::Pass || c.equality != Some(true)) {
            failures.push(format!(
                "{name} q={q}: sr {} vs uniform {} / {}",
                c.sr, c.uniform, c.uniform_sum_metric
            ));
        }
    }
    Outcome::new(
        &failures,
        "inequality everywhere, equality on the four closed cases under both metrics",
    )
}

fn limiting_agreement() -> Outcome {
    let s = Schedule::default();
    let mut failures = Vec::new();
    let mut values = Vec::new();
    for (name, q) in [("half-square", 0.5), ("identity", 1.0)] {
        let d = dual_analysis(&catalog_problem(name).unwrap(), q, &s).unwrap();
        for (label, other) in [("plain", d.slopes.plain.value), ("approximate", d.slopes.approximate.value)] {
            if !agree(d.limiting.value, other, 0.05) {
                failures.push(format!("{name}: limiting {} vs {label} {other}", d.limiting.value));
            }
        }
        values.push(format!("{name} {:.4}", d.limiting.value.to_f64()));
    }
    Outcome::new(&failures, format!("limiting values {}", values.join(", ")))
}

fn necessity() -> Outcome {
    let s = Schedule::default();
    let p = catalog_problem("halfline-convex").unwrap();
    let mut failures = Vec::new();
    let one = convexity_necessity_check(&p, 1.0, &s).unwrap();
    if one.status != CheckStatus::Pass {
        failures.push(format!("q=1: {:?} ({:?} vs {:?})", one.status, one.lhs, one.rhs));
    }
    let half = convexity_necessity_check(&p, 0.5, &s).unwrap();
    if half.status == CheckStatus::Fail || !half.flags.iter().any(|f| f == "unbounded_lhs") {
        failures.push(format!("q=1/2: {:?} with flags {:?}", half.status, half.flags));
    }
    Outcome::new(&failures, "passes at q=1, flags the unbounded modulus at q=1/2")
}

fn criteria_sweep() -> Outcome {
    let s = Schedule::quick();
    let mut failures = Vec::new();
    let mut reports = 0;
    let mut statuses: BTreeMap<String, usize> = BTreeMap::new();
    for (p, q) in catalog_with_orders() {
        let inputs = criteria_inputs(&p, q, &s).unwrap();
        for gamma in [0.1, 0.5, 0.9, 1.1, 2.0] {
            let r = evaluate_criteria(&inputs, gamma);
            reports += 1;
            for c in r.quantitative.values().chain(r.qualitative.values()) {
                *statuses.entry(format!("{:?}", c.status)).or_default() += 1;
            }
            for v in &r.implication_violations {
                failures.push(format!("{} q={q} gamma={gamma}: {} {}", p.name(), v.family, v.arrow));
            }
        }
    }
    Outcome::new(
        &failures,
        format!("{reports} reports without violations, condition statuses {statuses:?}"),
    )
}

const FULL_CONFIG: &str = "problem = \"half-square\"\nq = 0.5\ngamma = 0.5\nchecks = \"all\"\n";

fn determinism() -> Outcome {
    let config = RunConfig::from_toml(FULL_CONFIG).unwrap();
    let report = run_config(&config).unwrap();
    let first = emit_report(&report, Format::Json);
    let second = emit_report(&run_config(&config).unwrap(), Format::Json);
    let mut failures = Vec::new();
    if first != second {
        failures.push("reports differ".to_string());
    }
    if report.invariant_results.iter().any(|r| !r.pass && r.severity == Severity::Hard) {
        failures.push("hard invariant failed".to_string());
    }
    Outcome::new(&failures, format!("{} identical bytes", first.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [Criterion; 10] = [
        ("half-square reproduction", half_square_reproduction),
        ("brute-force equivalence", brute_force_equivalence),
        ("rho monotonicity", monotonicity),
        ("inequality chains", inequality_chains),
        ("level/mapping bridge", bridge),
        ("characterization", characterization),
        ("limiting agreement", limiting_agreement),
        ("convexity necessity", necessity),
        ("criteria consistency", criteria_sweep),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {:>2} {name}: {} [{:.1?}]",
            i + 1,
            outcome.detail,
            start.elapsed()
        );
        failed += usize::from(!outcome.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
