//! Set-valued mappings given by graph oracles, the run schedule, the induced
//! error function and the fixture catalog.

pub mod catalog;
pub mod graph;
pub mod level;
pub mod polynomial;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::extended::Extended;
use crate::geometry::{point_to_set_distance, ProductMetric, ProductPoint, ProductSpace};
use crate::sampling::mix_seed;

pub use catalog::{catalog_names, catalog_problem, finite_problem, linear_problem};
pub use graph::{CoderivativeValue, FiniteGraph, GraphOracle, Piece, PiecewiseGraph, Region};
pub use level::{
    error_function_value, validate_p1_p2, CustomLevelFunction, ErrorFunction, FiniteLevelFunction, LevelFunction, P1P2Diagnostic, P2Status,
    PointFunction, ScalarFunction, SingleVariableExtension,
};

pub type DistanceOracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type CoderivativeOracle = Arc<dyn Fn(&ProductPoint, &[f64]) -> CoderivativeValue + Send + Sync>;

/// Structural flags of a mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemFlags {
    pub convex: bool,
    pub smooth: bool,
    pub graph_locally_closed: bool,
}

/// A set-valued mapping `F : X ⇉ Y` with a reference point on its graph.
#[derive(Clone)]
pub struct MappingProblem {
    name: String,
    space: ProductSpace,
    anchor: ProductPoint,
    graph: Arc<dyn GraphOracle>,
    solution_distance: Option<DistanceOracle>,
    coderivative: Option<CoderivativeOracle>,
    flags: ProblemFlags,
    membership_tol: f64,
    eps_mem: f64,
    notes: Vec<String>,
}

impl fmt::Debug for MappingProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MappingProblem")
            .field("name", &self.name)
            .field("anchor", &self.anchor)
            .field("flags", &self.flags)
            .field("has_solution_distance", &self.solution_distance.is_some())
            .field("has_coderivative", &self.coderivative.is_some())
            .finish()
    }
}

impl MappingProblem {
    pub fn new(name: impl Into<String>, space: ProductSpace, anchor: ProductPoint, graph: Arc<dyn GraphOracle>) -> Self {
        MappingProblem {
            name: name.into(),
            space,
            anchor,
            graph,
            solution_distance: None,
            coderivative: None,
            flags: ProblemFlags {
                graph_locally_closed: true,
                ..Default::default()
            },
            membership_tol: 1e-9,
            eps_mem: 1e-7,
            notes: Vec::new(),
        }
    }

    pub fn with_solution_distance(mut self, oracle: DistanceOracle) -> Self {
        self.solution_distance = Some(oracle);
        self
    }

    pub fn with_coderivative(mut self, oracle: CoderivativeOracle) -> Self {
        self.coderivative = Some(oracle);
        self
    }

    /// Uses the coderivative derived from the graph description.
    pub fn with_graph_coderivative(self) -> Self {
        let graph = Arc::clone(&self.graph);
        let tol = self.membership_tol;
        self.with_coderivative(Arc::new(move |p, ystar| {
            graph.coderivative(p, ystar, tol).unwrap_or(CoderivativeValue::Empty)
        }))
    }

    pub fn with_flags(mut self, flags: ProblemFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Checks the construction invariants: the anchor lies on the graph,
    /// the solution distance vanishes at `x̄`, samples pass membership and,
    /// for convex problems, sampled midpoints stay on the graph.
    pub fn validated(self) -> Result<Self> {
        self.space.check_point(&self.anchor)?;
        check_dim(self.space.x.dim(), self.graph.dim_x())?;
        check_dim(self.space.y.dim(), self.graph.dim_y())?;
        if !self.contains(&self.anchor) {
            return Err(Error::InvalidProblem(format!("{}: anchor is not on the graph", self.name)));
        }
        if let Some(d) = &self.solution_distance {
            let at_anchor = d(&self.anchor.x);
            if at_anchor.abs() > self.membership_tol {
                return Err(Error::InvalidProblem(format!(
                    "{}: solution distance at the anchor is {at_anchor}",
                    self.name
                )));
            }
        }
        let pts = self.graph.sample(&self.space, &Region::ball(&self.anchor, 1.0), 64, 7);
        if let Some(p) = pts.iter().find(|p| !self.contains(p)) {
            return Err(Error::InvalidProblem(format!("{}: sampler left the graph at {p:?}", self.name)));
        }
        if self.flags.convex {
            for pair in pts.windows(2) {
                let mid = ProductPoint::new(
                    pair[0].x.iter().zip(&pair[1].x).map(|(a, b)| 0.5 * (a + b)).collect(),
                    pair[0].y.iter().zip(&pair[1].y).map(|(a, b)| 0.5 * (a + b)).collect(),
                );
                if !self.graph.contains(&mid, 1e-6) {
                    return Err(Error::InvalidProblem(format!(
                        "{}: convex flag set but graph is not convex",
                        self.name
                    )));
                }
            }
        }
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn anchor(&self) -> &ProductPoint {
        &self.anchor
    }

    pub fn xbar(&self) -> &[f64] {
        &self.anchor.x
    }

    pub fn ybar(&self) -> &[f64] {
        &self.anchor.y
    }

    pub fn flags(&self) -> ProblemFlags {
        self.flags
    }

    pub fn membership_tol(&self) -> f64 {
        self.membership_tol
    }

    pub fn eps_mem(&self) -> f64 {
        self.eps_mem
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn graph(&self) -> &dyn GraphOracle {
        self.graph.as_ref()
    }

    pub fn contains(&self, p: &ProductPoint) -> bool {
        p.x.len() == self.space.x.dim() && p.y.len() == self.space.y.dim() && self.graph.contains(p, self.membership_tol)
    }

    pub fn has_coderivative(&self) -> bool {
        self.coderivative.is_some()
    }

    pub fn has_solution_distance(&self) -> bool {
        self.solution_distance.is_some()
    }

    /// `D*F(x,y)(y*)`.
    pub fn coderivative(&self, p: &ProductPoint, ystar: &[f64]) -> Result<CoderivativeValue> {
        let oracle = self.coderivative.as_ref().ok_or(Error::MissingCoderivative)?;
        Ok(oracle(p, ystar))
    }

    /// `d(ȳ, F(x))`.
    pub fn fiber_distance(&self, x: &[f64]) -> Extended {
        self.graph.fiber_distance(x, &self.anchor.y, &self.space.y)
    }

    pub fn exact_solution_distance(&self, x: &[f64]) -> Option<f64> {
        self.solution_distance.as_ref().map(|d| d(x))
    }

    /// `d(y, ȳ)`.
    pub fn dist_y(&self, y: &[f64]) -> f64 {
        self.space.y.dist(y, &self.anchor.y)
    }

    /// `d(x, x̄)`.
    pub fn dist_x(&self, x: &[f64]) -> f64 {
        self.space.x.dist(x, &self.anchor.x)
    }
}

/// Discretization of the limits: a geometric ρ-sequence, shrinking
/// neighborhood radii and sample budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    pub rho0: f64,
    pub factor: f64,
    pub steps: usize,
    /// Fractions of `max{d(x,x̄), d(y,ȳ)}`, strictly decreasing.
    pub neighborhood_radii: Vec<f64>,
    /// Graph samples per ρ-level.
    pub sample_budget: usize,
    /// Neighborhood samples per radius.
    pub probe_budget: usize,
    /// Cut-off for nonlocal sups; `None` means `10·max{1, d(at, anchor)}`.
    pub truncation_radius: Option<f64>,
    pub metric: ProductMetric,
    pub seed: u64,
    /// Restrict strict slopes to points outside the solution set.
    pub outer_points_only: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            rho0: 0.5,
            factor: 0.5,
            steps: 12,
            neighborhood_radii: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
            sample_budget: 4096,
            probe_budget: 64,
            truncation_radius: None,
            metric: ProductMetric::Max,
            seed: 0,
            outer_points_only: true,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return bad(format!("rho0 must be positive, got {}", self.rho0));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return bad(format!("factor must lie in (0,1), got {}", self.factor));
        }
        if self.steps == 0 {
            return bad("steps must be positive".into());
        }
        if self.neighborhood_radii.is_empty() || self.neighborhood_radii.iter().any(|r| !(*r > 0.0)) {
            return bad("neighborhood_radii must be a nonempty list of positive numbers".into());
        }
        if self.neighborhood_radii.windows(2).any(|w| w[1] >= w[0]) {
            return bad("neighborhood_radii must be strictly decreasing".into());
        }
        if self.sample_budget == 0 || self.probe_budget == 0 {
            return bad("sample budgets must be positive".into());
        }
        if let Some(t) = self.truncation_radius {
            if !(t > 0.0) {
                return bad(format!("truncation_radius must be positive, got {t}"));
            }
        }
        Ok(())
    }

    pub fn rho(&self, k: usize) -> f64 {
        self.rho0 * self.factor.powi(k as i32)
    }

    pub fn rhos(&self) -> Vec<f64> {
        (0..self.steps).map(|k| self.rho(k)).collect()
    }

    /// Truncation radius for a nonlocal sup at distance `d` from the anchor.
    pub fn truncation_for(&self, d: f64) -> f64 {
        self.truncation_radius.unwrap_or(10.0 * d.max(1.0))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// A cheaper schedule for unit tests and probes.
    pub fn quick() -> Self {
        Schedule {
            steps: 8,
            sample_budget: 512,
            probe_budget: 32,
            ..Schedule::default()
        }
    }
}

/// A solution-set distance with provenance flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub value: Extended,
    pub approximate: bool,
    pub truncated: bool,
}

/// `d(x, F⁻¹(ȳ))`: exact with an oracle, otherwise the distance to sampled
/// points of `F⁻¹(ȳ)` within the truncation radius (an upper estimate).
pub fn solution_set_distance(problem: &MappingProblem, x: &[f64], schedule: &Schedule) -> Result<DistanceEstimate> {
    check_dim(problem.space().x.dim(), x.len())?;
    if let Some(d) = problem.exact_solution_distance(x) {
        return Ok(DistanceEstimate {
            value: Extended::Finite(d),
            approximate: false,
            truncated: false,
        });
    }
    let radius = schedule.truncation_for(problem.dist_x(x));
    let mut pts = problem.graph().preimage_sample(
        problem.space(),
        problem.ybar(),
        x,
        radius,
        schedule.sample_budget,
        mix_seed(schedule.seed, 0x50),
        problem.membership_tol(),
    );
    if problem.dist_x(x) <= radius {
        pts.push(problem.xbar().to_vec());
    }
    if problem.fiber_distance(x).to_f64() <= problem.membership_tol() {
        return Ok(DistanceEstimate {
            value: Extended::ZERO,
            approximate: false,
            truncated: false,
        });
    }
    let value = point_to_set_distance(x, &pts, &problem.space().x);
    Ok(DistanceEstimate {
        value,
        approximate: true,
        truncated: value.is_infinite(),
    })
}

/// Graph points within `radius` of `center` in the max product metric.
pub fn graph_sample(problem: &MappingProblem, center: &ProductPoint, radius: f64, budget: usize, seed: u64) -> Result<Vec<ProductPoint>> {
    problem.space().check_point(center)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidSchedule(format!("sample radius must be positive, got {radius}")));
    }
    let pts = problem.graph().sample(problem.space(), &Region::ball(center, radius), budget, seed);
    Ok(pts.into_iter().filter(|p| problem.contains(p)).collect())
}
