//! Run configurations, the estimation pipeline behind the command line and
//! report serialization.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{check_order, Error, Result};
use crate::estimate::{classify, SlopeEstimate, TraceEntry, Trend};
use crate::extended::Extended;
use crate::moduli::{
    agree, characterization_check, convexity_necessity_check, error_bound_modulus, evaluate_criteria, subregularity_modulus,
    CharacterizationCheck, CheckStatus, CriteriaInputs, CriteriaReport, ModulusReport, NecessityCheck, Witness, INDEPENDENT_REL,
    SAMPLED_REL,
};
use crate::problems::polynomial::GraphSpec;
use crate::problems::{catalog_problem, ErrorFunction, MappingProblem, Schedule};
use crate::slopes_dual::{direction_rel, dual_analysis, lm_constants, DualAnalysis};
use crate::slopes_primal::{strict_primal_slopes, StrictPrimalSlopes};

/// Slack for orderings that hold sample by sample.
const SHARED_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Catalog(String),
    Inline(GraphSpec),
}

impl ProblemSpec {
    pub fn build(&self) -> Result<MappingProblem> {
        match self {
            ProblemSpec::Catalog(name) => catalog_problem(name),
            ProblemSpec::Inline(spec) => spec.build(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Slopes,
    Moduli,
    Criteria,
    Invariants,
    Characterization,
    LmConstants,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Slopes,
        Check::Moduli,
        Check::Criteria,
        Check::Invariants,
        Check::Characterization,
        Check::LmConstants,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AllKeyword {
    All,
}

/// `checks = "all"` or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckList {
    Keyword(#[serde(with = "all_keyword")] ()),
    List(Vec<Check>),
}

mod all_keyword {
    use super::AllKeyword;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(_: &(), s: S) -> Result<S::Ok, S::Error> {
        AllKeyword::All.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        AllKeyword::deserialize(d).map(|_| ())
    }
}

impl Default for CheckList {
    fn default() -> Self {
        CheckList::Keyword(())
    }
}

impl CheckList {
    pub fn resolve(&self) -> Vec<Check> {
        let mut checks = match self {
            CheckList::Keyword(()) => Check::ALL.to_vec(),
            CheckList::List(list) => list.clone(),
        };
        checks.sort();
        checks.dedup();
        checks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub q: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub checks: CheckList,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.q)?;
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::NonPositive { name: "gamma", value: g });
            }
        }
        self.schedule.validate()
    }

    /// Hex SHA-256 of the canonical JSON form of the configuration.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configurations serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub problem: String,
    pub q: f64,
}

/// One estimated constant as it appears in the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEntry {
    pub name: String,
    /// Absent when the estimate could not be computed.
    pub value: Option<Extended>,
    pub trace: Vec<TraceEntry>,
    pub truncated: bool,
    pub budget: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
}

impl ConstantEntry {
    fn slope(name: &str, e: &SlopeEstimate) -> Self {
        ConstantEntry {
            name: name.into(),
            value: Some(e.value),
            trace: e.trace.clone(),
            truncated: e.truncated,
            budget: e.budget_used,
            flags: e.flags.clone(),
            witnesses: Vec::new(),
        }
    }

    fn modulus(name: &str, m: &ModulusReport, budget: usize) -> Self {
        ConstantEntry {
            name: name.into(),
            value: Some(m.value),
            trace: m.trace.clone(),
            truncated: false,
            budget,
            flags: m.flags.clone(),
            witnesses: m.witnesses.clone(),
        }
    }

    fn missing(name: &str, reason: &str) -> Self {
        ConstantEntry {
            name: name.into(),
            value: None,
            trace: Vec::new(),
            truncated: false,
            budget: 0,
            flags: vec![reason.into(), "inconclusive".into()],
            witnesses: Vec::new(),
        }
    }
}

/// `Hard` results are orderings every run must satisfy; `Check` results
/// compare independently discretized limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Hard,
    Check,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub pass: bool,
    pub severity: Severity,
    pub lhs: Extended,
    pub rhs: Extended,
    pub slack: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<ConstantEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criteria: Option<CriteriaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub characterization: Option<CharacterizationCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convexity_necessity: Option<NecessityCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub invariant_results: Vec<InvariantResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn constant(&self, name: &str) -> Option<&ConstantEntry> {
        self.constants.iter().find(|c| c.name == name)
    }

    /// 3 on a failed hard invariant or implication violation, 1 on any
    /// other failed check, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        let violated = self.criteria.as_ref().is_some_and(|c| !c.implication_violations.is_empty());
        if violated || self.invariant_results.iter().any(|r| !r.pass && r.severity == Severity::Hard) {
            return 3;
        }
        let failed_check = self.invariant_results.iter().any(|r| !r.pass)
            || self.characterization.as_ref().is_some_and(|c| c.status == CheckStatus::Fail)
            || self.convexity_necessity.as_ref().is_some_and(|c| c.status == CheckStatus::Fail);
        i32::from(failed_check)
    }
}

/// Estimates gathered while running the requested checks.
#[derive(Default)]
struct Results {
    primal: Option<StrictPrimalSlopes>,
    dual: Option<std::result::Result<DualAnalysis, Error>>,
    lm: Option<std::result::Result<(SlopeEstimate, SlopeEstimate), Error>>,
    sr: Option<ModulusReport>,
    er: Option<crate::moduli::ErrorBoundReport>,
}

fn degrade<T>(r: Result<T>) -> Result<std::result::Result<T, Error>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(Error::MissingCoderivative) => Ok(Err(Error::MissingCoderivative)),
        Err(e) => Err(e),
    }
}

pub fn run_config(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let problem = config.problem.build()?;
    let q = config.q;
    let schedule = &config.schedule;
    let checks = config.checks.resolve();
    let wants = |c: Check| checks.contains(&c);
    let everything = wants(Check::Invariants);
    let mut notes = Vec::new();
    let mut res = Results::default();

    let criteria_due = wants(Check::Criteria) && config.gamma.is_some();
    if wants(Check::Criteria) && config.gamma.is_none() {
        notes.push("criteria skipped: no gamma given".to_string());
    }
    if wants(Check::Slopes) || everything || criteria_due {
        res.primal = Some(strict_primal_slopes(&problem, q, schedule)?);
        res.dual = Some(degrade(dual_analysis(&problem, q, schedule))?);
    }
    if wants(Check::LmConstants) || everything {
        res.lm = Some(degrade(lm_constants(&problem, q, schedule))?);
    }
    if wants(Check::Moduli) || everything || criteria_due {
        res.sr = Some(subregularity_modulus(&problem, q, schedule)?);
    }
    if wants(Check::Moduli) || everything {
        res.er = Some(error_bound_modulus(&ErrorFunction::new(problem.clone(), q)?, schedule)?);
    }
    let criteria = match (criteria_due, &res.primal, &res.sr) {
        (true, Some(primal), Some(sr)) => {
            let flags = problem.flags();
            let inputs = CriteriaInputs {
                q,
                convex: flags.convex,
                closed: flags.graph_locally_closed,
                smooth_y: problem.space().y.is_smooth(),
                sr: sr.clone(),
                primal: primal.clone(),
                dual: res.dual.as_ref().and_then(|d| d.as_ref().ok().cloned()),
            };
            config.gamma.map(|g| evaluate_criteria(&inputs, g))
        }
        _ => None,
    };
    let (characterization, convexity_necessity) = if wants(Check::Characterization) {
        (
            Some(characterization_check(&problem, q, schedule)?),
            Some(convexity_necessity_check(&problem, q, schedule)?),
        )
    } else {
        (None, None)
    };

    let constants = constant_entries(&checks, &res, schedule);
    let invariant_results = if everything { invariant_suite(&res) } else { Vec::new() };
    Ok(RunReport {
        provenance: Provenance {
            config_hash: config.digest(),
            seed: schedule.seed,
            problem: problem.name().to_string(),
            q,
        },
        constants,
        criteria,
        characterization,
        convexity_necessity,
        invariant_results,
        notes,
    })
}

fn constant_entries(checks: &[Check], res: &Results, schedule: &Schedule) -> Vec<ConstantEntry> {
    let mut out = Vec::new();
    if checks.contains(&Check::Slopes) {
        if let Some(p) = &res.primal {
            out.push(ConstantEntry::slope("uniform_strict_q_slope", &p.uniform));
            out.push(ConstantEntry::slope("strict_q_slope", &p.plain));
            out.push(ConstantEntry::slope("modified_strict_q_slope", &p.modified));
            out.push(ConstantEntry::slope("liminf_ratio", &p.liminf_ratio));
        }
        let dual_names = [
            "subdiff_strict_q_slope_plain",
            "subdiff_strict_q_slope_approx",
            "subdiff_strict_q_slope_modified",
            "subdiff_strict_q_slope_modified_approx",
            "limiting_coderivative_min_norm",
        ];
        match &res.dual {
            Some(Ok(d)) => {
                let s = &d.slopes;
                for (name, e) in dual_names
                    .iter()
                    .zip([&s.plain, &s.approximate, &s.modified, &s.modified_approximate, &d.limiting])
                {
                    out.push(ConstantEntry::slope(name, e));
                }
            }
            Some(Err(e)) => out.extend(dual_names.iter().map(|n| ConstantEntry::missing(n, &e.to_string()))),
            None => {}
        }
    }
    if checks.contains(&Check::LmConstants) {
        match &res.lm {
            Some(Ok((alpha, beta))) => {
                out.push(ConstantEntry::slope("lm_alpha", alpha));
                out.push(ConstantEntry::slope("lm_beta", beta));
            }
            Some(Err(e)) => out.extend(["lm_alpha", "lm_beta"].iter().map(|n| ConstantEntry::missing(n, &e.to_string()))),
            None => {}
        }
    }
    if checks.contains(&Check::Moduli) {
        let budget = schedule.sample_budget * schedule.steps;
        if let Some(sr) = &res.sr {
            out.push(ConstantEntry::modulus("sr_q", sr, budget));
        }
        if let Some(er) = &res.er {
            out.push(ConstantEntry::modulus("error_bound_modulus", &er.modulus, budget));
        }
    }
    out
}

fn unbounded(e: &SlopeEstimate) -> bool {
    e.value.is_infinite() || classify(&e.trace) == Trend::Diverging
}

/// `lhs ≤ rhs + slack` where `slack = abs + rel·max(|lhs|,|rhs|)`.
fn ordering(name: &str, severity: Severity, lhs: Extended, rhs: Extended, rel: f64, abs: f64) -> InvariantResult {
    let (pass, slack, flags) = match (lhs, rhs) {
        (_, Extended::Infinite) => (true, abs, vec!["infinite_rhs".to_string()]),
        (Extended::Infinite, Extended::Finite(_)) => (false, abs, Vec::new()),
        (Extended::Finite(l), Extended::Finite(r)) => {
            let slack = abs + rel * l.abs().max(r.abs());
            (l <= r + slack, slack, Vec::new())
        }
    };
    InvariantResult {
        name: name.into(),
        pass,
        severity,
        lhs,
        rhs,
        slack,
        flags,
    }
}

fn equality(name: &str, lhs: &SlopeEstimate, rhs: &SlopeEstimate, rel: f64) -> InvariantResult {
    let both_unbounded = unbounded(lhs) && unbounded(rhs);
    let pass = agree(lhs.value, rhs.value, rel) || both_unbounded;
    let flags = if both_unbounded {
        vec!["both_unbounded".to_string()]
    } else {
        Vec::new()
    };
    InvariantResult {
        name: name.into(),
        pass,
        severity: Severity::Check,
        lhs: lhs.value,
        rhs: rhs.value,
        slack: rel,
        flags,
    }
}

fn invariant_suite(res: &Results) -> Vec<InvariantResult> {
    use Severity::{Check as Soft, Hard};
    let mut out = Vec::new();
    if let Some(p) = &res.primal {
        out.push(ordering(
            "strict <= modified_strict",
            Hard,
            p.plain.value,
            p.modified.value,
            0.0,
            SHARED_SLACK,
        ));
        out.push(ordering(
            "liminf_ratio <= modified_strict",
            Hard,
            p.liminf_ratio.value,
            p.modified.value,
            0.0,
            SHARED_SLACK,
        ));
        out.push(ordering(
            "modified_strict <= uniform_strict",
            Soft,
            p.modified.value,
            p.uniform.value,
            1e-3,
            SHARED_SLACK,
        ));
    }
    if let Some(Ok(d)) = &res.dual {
        let s = &d.slopes;
        out.push(ordering(
            "dual approx <= dual plain",
            Hard,
            s.approximate.value,
            s.plain.value,
            0.0,
            SHARED_SLACK,
        ));
        out.push(ordering(
            "dual plain <= dual modified",
            Hard,
            s.plain.value,
            s.modified.value,
            0.0,
            SHARED_SLACK,
        ));
        out.push(ordering(
            "dual approx <= dual modified approx",
            Hard,
            s.approximate.value,
            s.modified_approximate.value,
            0.0,
            SHARED_SLACK,
        ));
        out.push(ordering(
            "dual modified approx <= dual modified",
            Hard,
            s.modified_approximate.value,
            s.modified.value,
            0.0,
            SHARED_SLACK,
        ));
        out.push(equality("limiting = dual plain", &d.limiting, &s.plain, SAMPLED_REL));
        out.push(equality("limiting = dual approx", &d.limiting, &s.approximate, SAMPLED_REL));
        if let Some(p) = &res.primal {
            out.push(ordering(
                "dual approx <= strict",
                Soft,
                s.approximate.value,
                p.plain.value,
                SAMPLED_REL,
                SHARED_SLACK,
            ));
            out.push(ordering(
                "dual modified approx <= modified_strict",
                Soft,
                s.modified_approximate.value,
                p.modified.value,
                SAMPLED_REL,
                SHARED_SLACK,
            ));
            out.push(equality("dual plain = strict", &s.plain, &p.plain, SAMPLED_REL));
        }
        if let Some(Ok((alpha, beta))) = &res.lm {
            let rel = if beta.flags.iter().any(|f| f == "sampled_enlargement") {
                direction_rel()
            } else {
                0.0
            };
            out.push(ordering(
                "dual plain <= lm_beta",
                Soft,
                s.plain.value,
                beta.value,
                rel,
                SHARED_SLACK,
            ));
            out.push(ordering(
                "lm_beta <= dual modified",
                Soft,
                beta.value,
                s.modified.value,
                rel,
                SHARED_SLACK,
            ));
            out.push(ordering(
                "lm_alpha <= dual modified approx",
                Soft,
                alpha.value,
                s.modified_approximate.value,
                rel,
                SHARED_SLACK,
            ));
        }
    }
    if let Some(sr) = &res.sr {
        if let Some(p) = &res.primal {
            let sr_est = SlopeEstimate::from_trace(crate::estimate::SlopeKind::Subregularity, sr.trace.clone(), false, 0);
            let mut r = ordering(
                "sr_q <= uniform_strict",
                Soft,
                sr.value,
                p.uniform.value,
                INDEPENDENT_REL,
                SHARED_SLACK,
            );
            if !r.pass && unbounded(&sr_est) && unbounded(&p.uniform) {
                r.pass = true;
                r.flags.push("both_unbounded".into());
            }
            out.push(r);
        }
        if let Some(er) = &res.er {
            let forms = [("error bound x-only = joint", &er.joint), ("error bound x-only = level", &er.level)];
            for (name, other) in forms {
                let mut r = ordering(name, Soft, er.modulus.value, other.value, SAMPLED_REL, 0.0);
                r.pass = agree(er.modulus.value, other.value, SAMPLED_REL);
                out.push(r);
            }
            let mut r = ordering("error_bound_modulus = sr_q", Soft, er.modulus.value, sr.value, SAMPLED_REL, 0.0);
            r.pass = agree(er.modulus.value, sr.value, SAMPLED_REL)
                || (classify(&er.modulus.trace) == Trend::Diverging && classify(&sr.trace) == Trend::Diverging);
            out.push(r);
        }
    }
    out
}

/// Machine format: JSON with every float written at 17 significant digits
/// and `+∞` as the string `"inf"`. Table format: aligned summary lines.
pub fn emit_report(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => {
            let value = serde_json::to_value(report).expect("reports serialize");
            let mut out = String::new();
            write_json(&value, 0, &mut out);
            out.push('\n');
            out
        }
        Format::Table => table(report),
    }
}

pub fn write_report(report: &RunReport, format: Format, path: Option<&Path>) -> Result<()> {
    let text = emit_report(report, format);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else {
                write!(out, "{:.16e}", n.as_f64().unwrap_or(f64::NAN)).unwrap();
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                out.push_str(": ");
                write_json(item, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

fn table(report: &RunReport) -> String {
    let mut out = String::new();
    let p = &report.provenance;
    writeln!(
        out,
        "problem {}  q = {}  seed = {}  config {}",
        p.problem,
        p.q,
        p.seed,
        &p.config_hash[..12]
    )
    .unwrap();
    if !report.constants.is_empty() {
        let width = report.constants.iter().map(|c| c.name.len()).max().unwrap_or(0);
        writeln!(out, "\n{:<width$}  {:>24}  {:>5}  flags", "constant", "value", "trace").unwrap();
        for c in &report.constants {
            let value = c.value.map_or("n/a".to_string(), |v| v.to_string());
            writeln!(
                out,
                "{:<width$}  {:>24}  {:>5}  {}",
                c.name,
                value,
                c.trace.len(),
                c.flags.join(",")
            )
            .unwrap();
        }
    }
    if let Some(c) = &report.criteria {
        writeln!(out, "\ncriteria at gamma = {}", c.gamma).unwrap();
        for (letter, r) in &c.quantitative {
            writeln!(out, "  ({letter}) {:<40} {:?}", r.source, r.status).unwrap();
        }
        writeln!(out, "  implication violations: {}", c.implication_violations.len()).unwrap();
    }
    if let Some(c) = &report.characterization {
        writeln!(
            out,
            "\ncharacterization: {:?} (sr_q = {}, uniform = {}, sum metric = {})",
            c.status, c.sr, c.uniform, c.uniform_sum_metric
        )
        .unwrap();
    }
    if let Some(c) = &report.convexity_necessity {
        writeln!(out, "convexity necessity: {:?} {}", c.status, c.flags.join(",")).unwrap();
    }
    if !report.invariant_results.is_empty() {
        let width = report.invariant_results.iter().map(|r| r.name.len()).max().unwrap_or(0);
        writeln!(out, "\n{:<width$}  result  lhs / rhs", "invariant").unwrap();
        for r in &report.invariant_results {
            let verdict = if r.pass { "pass" } else { "FAIL" };
            writeln!(out, "{:<width$}  {verdict:<6}  {} / {}", r.name, r.lhs, r.rhs).unwrap();
        }
    }
    for n in &report.notes {
        writeln!(out, "note: {n}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> String {
        format!("problem = \"half-square\"\nq = 0.5\n{extra}\n[schedule]\nsteps = 6\nsample_budget = 256\nprobe_budget = 16\n")
    }

    #[test]
    fn parses_and_validates() {
        let c = RunConfig::from_toml(&config("checks = \"all\"")).unwrap();
        assert_eq!(c.checks.resolve(), Check::ALL.to_vec());
        let c = RunConfig::from_toml(&config("checks = [\"moduli\", \"slopes\", \"moduli\"]")).unwrap();
        assert_eq!(c.checks.resolve(), vec![Check::Slopes, Check::Moduli]);
        assert!(matches!(
            RunConfig::from_toml("problem = \"identity\"\nq = 1.5\n"),
            Err(Error::InvalidOrder(_))
        ));
        assert!(matches!(
            RunConfig::from_toml("problem = \"identity\"\nq = 1\nbogus = 2\n"),
            Err(Error::InvalidConfig(_))
        ));
        assert!(RunConfig::from_toml(&config("gamma = -1.0")).is_err());
    }

    #[test]
    fn empty_checks_give_provenance_only() {
        let c = RunConfig::from_toml(&config("checks = []")).unwrap();
        let r = run_config(&c).unwrap();
        let text = emit_report(&r, Format::Json);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v.as_object().unwrap().keys().collect::<Vec<_>>(), vec!["provenance"]);
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn infinity_and_precision() {
        let c = RunConfig::from_toml("problem = \"constant\"\nq = 1\nchecks = [\"slopes\"]\n[schedule]\nsteps = 4\nsample_budget = 64\n")
            .unwrap();
        let text = emit_report(&run_config(&c).unwrap(), Format::Json);
        assert!(text.contains("\"value\": \"inf\""));
        let mut out = String::new();
        write_json(&serde_json::json!(0.1), 0, &mut out);
        assert_eq!(out, "1.0000000000000001e-1");
        assert_eq!(out.parse::<f64>().unwrap(), 0.1);
    }
}
