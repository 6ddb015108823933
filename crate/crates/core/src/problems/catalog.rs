//! Named fixture problems.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::graph::{CoderivativeValue, FiniteGraph, JacobianMap, Piece, PiecewiseGraph, VectorMap};
use super::{MappingProblem, ProblemFlags};
use crate::error::{Error, Result};
use crate::geometry::{DualVectorSet, ProductPoint, ProductSpace};

const NAMES: [&str; 6] = ["half-square", "identity", "square", "linear-A", "halfline-convex", "constant"];

pub fn catalog_names() -> &'static [&'static str] {
    &NAMES
}

fn scalar_map(f: fn(f64) -> f64) -> VectorMap {
    Arc::new(move |x: &[f64]| vec![f(x[0])])
}

fn scalar_jacobian(f: fn(f64) -> f64) -> JacobianMap {
    Arc::new(move |x: &[f64]| vec![vec![f(x[0])]])
}

fn whole_line() -> (Vec<f64>, Vec<f64>) {
    (vec![f64::NEG_INFINITY], vec![f64::INFINITY])
}

fn origin() -> ProductPoint {
    ProductPoint::scalar(0.0, 0.0)
}

/// Scalar single-valued map on the whole line with derivative `df`.
fn smooth_scalar(name: &str, f: fn(f64) -> f64, df: fn(f64) -> f64, flags: ProblemFlags) -> MappingProblem {
    let (lo, hi) = whole_line();
    let graph = PiecewiseGraph::new(1, 1, vec![Piece::single(lo, hi, scalar_map(f), Some(scalar_jacobian(df)))]);
    let tol = 1e-9;
    MappingProblem::new(name, ProductSpace::euclidean(1, 1), origin(), Arc::new(graph))
        .with_flags(flags)
        .with_coderivative(Arc::new(move |p, ystar| {
            if (p.y[0] - f(p.x[0])).abs() > tol {
                return CoderivativeValue::Empty;
            }
            CoderivativeValue::Set(DualVectorSet::Singleton(vec![df(p.x[0]) * ystar[0]]))
        }))
}

pub fn catalog_problem(name: &str) -> Result<MappingProblem> {
    let smooth = ProblemFlags {
        convex: false,
        smooth: true,
        graph_locally_closed: true,
    };
    let convex_smooth = ProblemFlags { convex: true, ..smooth };
    let problem = match name {
        "half-square" => {
            let pieces = vec![
                Piece::single(
                    vec![f64::NEG_INFINITY],
                    vec![0.0],
                    scalar_map(|_| 0.0),
                    Some(scalar_jacobian(|_| 0.0)),
                ),
                Piece::single(
                    vec![0.0],
                    vec![f64::INFINITY],
                    scalar_map(|x| x * x),
                    Some(scalar_jacobian(|x| 2.0 * x)),
                ),
            ];
            let graph = PiecewiseGraph::new(1, 1, pieces);
            MappingProblem::new(name, ProductSpace::euclidean(1, 1), origin(), Arc::new(graph))
                .with_flags(smooth)
                .with_solution_distance(Arc::new(|x: &[f64]| x[0].max(0.0)))
                .with_coderivative(Arc::new(|p, ystar| {
                    let xp = p.x[0].max(0.0);
                    if (p.y[0] - xp * xp).abs() > 1e-9 {
                        return CoderivativeValue::Empty;
                    }
                    CoderivativeValue::Set(DualVectorSet::Singleton(vec![2.0 * xp * ystar[0]]))
                }))
        }
        "identity" => smooth_scalar(name, |x| x, |_| 1.0, convex_smooth).with_solution_distance(Arc::new(|x: &[f64]| x[0].abs())),
        "square" => smooth_scalar(name, |x| x * x, |x| 2.0 * x, smooth).with_solution_distance(Arc::new(|x: &[f64]| x[0].abs())),
        "constant" => smooth_scalar(name, |_| 0.0, |_| 0.0, convex_smooth).with_solution_distance(Arc::new(|_x: &[f64]| 0.0)),
        "linear-A" => return linear_problem(vec![vec![2.0, 0.0], vec![0.0, 3.0]]),
        "halfline-convex" => {
            let (lo, hi) = whole_line();
            let piece = Piece::interval(
                lo,
                hi,
                scalar_map(|x| x),
                scalar_map(|_| f64::INFINITY),
                Some(scalar_jacobian(|_| 1.0)),
                Some(scalar_jacobian(|_| 0.0)),
            );
            let graph = PiecewiseGraph::new(1, 1, vec![piece]);
            MappingProblem::new(name, ProductSpace::euclidean(1, 1), origin(), Arc::new(graph))
                .with_flags(ProblemFlags {
                    convex: true,
                    smooth: false,
                    graph_locally_closed: true,
                })
                .with_solution_distance(Arc::new(|x: &[f64]| x[0].max(0.0)))
                .with_graph_coderivative()
                .with_note("coderivative from the normal cone of the epigraph of the identity")
        }
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    problem.validated()
}

/// `F(x) = {Ax}` at the origin with euclidean norms.
pub fn linear_problem(matrix: Vec<Vec<f64>>) -> Result<MappingProblem> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 || matrix.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidProblem("matrix must be a nonempty rectangular array".into()));
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidProblem("matrix entries must be finite".into()));
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| matrix[i][j]);
    // orthogonal projector onto the row space; d(x, ker A) = ‖Px‖
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let cutoff = 1e-12 * svd.singular_values.max().max(1.0);
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    let basis = vt.rows(0, rank).into_owned();
    let projector = basis.transpose() * basis;

    let a_map = a.clone();
    let map: VectorMap = Arc::new(move |x: &[f64]| (&a_map * nalgebra::DVector::from_column_slice(x)).iter().cloned().collect());
    let jac_rows = matrix.clone();
    let jacobian: JacobianMap = Arc::new(move |_x: &[f64]| jac_rows.clone());
    let lo = vec![f64::NEG_INFINITY; cols];
    let hi = vec![f64::INFINITY; cols];
    let graph = PiecewiseGraph::new(cols, rows, vec![Piece::single(lo, hi, map, Some(jacobian))]);
    let anchor = ProductPoint::new(vec![0.0; cols], vec![0.0; rows]);
    let a_check = a.clone();
    let at = a.transpose();
    MappingProblem::new("linear-A", ProductSpace::euclidean(cols, rows), anchor, Arc::new(graph))
        .with_flags(ProblemFlags {
            convex: true,
            smooth: true,
            graph_locally_closed: true,
        })
        .with_solution_distance(Arc::new(move |x: &[f64]| {
            (&projector * nalgebra::DVector::from_column_slice(x)).norm()
        }))
        .with_coderivative(Arc::new(move |p, ystar| {
            let y = &a_check * nalgebra::DVector::from_column_slice(&p.x);
            if y.iter().zip(&p.y).any(|(u, v)| (u - v).abs() > 1e-9) {
                return CoderivativeValue::Empty;
            }
            let xs = &at * nalgebra::DVector::from_column_slice(ystar);
            CoderivativeValue::Set(DualVectorSet::Singleton(xs.iter().cloned().collect()))
        }))
        .validated()
}

/// A mapping whose graph is an explicit point list containing the anchor.
pub fn finite_problem(name: &str, points: Vec<ProductPoint>, anchor: ProductPoint) -> Result<MappingProblem> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let dx = anchor.x.len();
    let dy = anchor.y.len();
    if points.iter().any(|p| p.x.len() != dx || p.y.len() != dy) {
        return Err(Error::DimensionMismatch {
            expected: dx,
            got: points.iter().map(|p| p.x.len()).max().unwrap_or(0),
        });
    }
    let space = ProductSpace::euclidean(dx, dy);
    let solutions: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| space.y.dist(&p.y, &anchor.y) <= 1e-12)
        .map(|p| p.x.clone())
        .collect();
    let norm = space.x.clone();
    let graph = FiniteGraph::new(points);
    MappingProblem::new(name, space, anchor, Arc::new(graph))
        .with_flags(ProblemFlags {
            convex: false,
            smooth: false,
            graph_locally_closed: true,
        })
        .with_solution_distance(Arc::new(move |x: &[f64]| {
            crate::geometry::point_to_set_distance(x, &solutions, &norm).to_f64()
        }))
        .validated()
}
