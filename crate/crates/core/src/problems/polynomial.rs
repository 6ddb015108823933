//! Piecewise-polynomial graphs described in run configurations.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::graph::{JacobianMap, Piece, PiecewiseGraph, VectorMap};
use super::{MappingProblem, ProblemFlags};
use crate::error::{Error, Result};
use crate::geometry::{ProductPoint, ProductSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// A real polynomial on `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Polynomial {
    /// `c₀ + c₁x + c₂x² + …` in one variable. A single entry may be `±∞`.
    Coefficients(Vec<f64>),
    Terms {
        terms: Vec<Monomial>,
    },
}

impl Polynomial {
    fn validate(&self, dim_x: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProblem(m.to_string()));
        match self {
            Polynomial::Coefficients(c) => {
                if dim_x != 1 {
                    return bad("coefficient lists describe polynomials of one variable");
                }
                if c.is_empty() {
                    return bad("empty coefficient list");
                }
                if c.len() > 1 && c.iter().any(|v| !v.is_finite()) {
                    return bad("infinite coefficients are only allowed for constant bounds");
                }
                if c.iter().any(|v| v.is_nan()) {
                    return bad("NaN coefficient");
                }
            }
            Polynomial::Terms { terms } => {
                if terms.iter().any(|t| t.powers.len() != dim_x) {
                    return bad("monomial powers must have one entry per x coordinate");
                }
                if terms.iter().any(|t| !t.coef.is_finite()) {
                    return bad("monomial coefficients must be finite");
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Polynomial::Coefficients(c) if c.len() == 1 => c[0],
            Polynomial::Coefficients(c) => c.iter().rev().fold(0.0, |acc, v| acc * x[0] + v),
            Polynomial::Terms { terms } => terms
                .iter()
                .map(|t| t.coef * t.powers.iter().zip(x).map(|(p, v)| v.powi(*p as i32)).product::<f64>())
                .sum(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Polynomial::Coefficients(c) => {
                let d = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, v)| acc * x[0] + k as f64 * v);
                vec![if c.len() == 1 { 0.0 } else { d }]
            }
            Polynomial::Terms { terms } => (0..x.len())
                .map(|i| {
                    terms
                        .iter()
                        .filter(|t| t.powers[i] > 0)
                        .map(|t| {
                            let rest: f64 = t
                                .powers
                                .iter()
                                .zip(x)
                                .enumerate()
                                .map(|(j, (p, v))| if j == i { v.powi(*p as i32 - 1) } else { v.powi(*p as i32) })
                                .product();
                            t.coef * t.powers[i] as f64 * rest
                        })
                        .sum()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    /// One `[lo, hi]` interval per x coordinate.
    pub domain: Vec<[f64; 2]>,
    /// One polynomial per y coordinate.
    pub lower: Vec<Polynomial>,
    /// Upper bounds for set-valued pieces.
    #[serde(default)]
    pub upper: Option<Vec<Polynomial>>,
}

/// A mapping given by polynomial pieces, with euclidean norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default = "default_graph_name")]
    pub name: String,
    pub dim_x: usize,
    pub dim_y: usize,
    pub anchor_x: Vec<f64>,
    pub anchor_y: Vec<f64>,
    #[serde(default)]
    pub flags: ProblemFlags,
    pub pieces: Vec<PieceSpec>,
}

fn default_graph_name() -> String {
    "inline".to_string()
}

fn bound_maps(polys: &[Polynomial]) -> (VectorMap, JacobianMap) {
    let p1 = polys.to_vec();
    let p2 = polys.to_vec();
    let map: VectorMap = Arc::new(move |x: &[f64]| p1.iter().map(|p| p.eval(x)).collect());
    let jac: JacobianMap = Arc::new(move |x: &[f64]| p2.iter().map(|p| p.gradient(x)).collect());
    (map, jac)
}

impl GraphSpec {
    pub fn build(&self) -> Result<MappingProblem> {
        let bad = |m: String| Err(Error::InvalidProblem(m));
        if self.dim_x == 0 || self.dim_y == 0 {
            return bad("dimensions must be positive".into());
        }
        if self.anchor_x.len() != self.dim_x || self.anchor_y.len() != self.dim_y {
            return bad("anchor dimensions do not match dim_x/dim_y".into());
        }
        if self.pieces.is_empty() {
            return bad("at least one piece is required".into());
        }
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for (i, spec) in self.pieces.iter().enumerate() {
            if spec.domain.len() != self.dim_x {
                return bad(format!("piece {i}: domain needs {} intervals", self.dim_x));
            }
            if spec.domain.iter().any(|[a, b]| a.is_nan() || b.is_nan() || a > b) {
                return bad(format!("piece {i}: domain intervals must satisfy lo <= hi"));
            }
            if spec.lower.len() != self.dim_y || spec.upper.as_ref().is_some_and(|u| u.len() != self.dim_y) {
                return bad(format!("piece {i}: bounds need {} polynomials", self.dim_y));
            }
            for p in spec.lower.iter().chain(spec.upper.iter().flatten()) {
                p.validate(self.dim_x)?;
            }
            let lo: Vec<f64> = spec.domain.iter().map(|d| d[0]).collect();
            let hi: Vec<f64> = spec.domain.iter().map(|d| d[1]).collect();
            let (lower, lower_jac) = bound_maps(&spec.lower);
            let piece = match &spec.upper {
                None => Piece::single(lo, hi, lower, Some(lower_jac)),
                Some(upper) => {
                    let (upper, upper_jac) = bound_maps(upper);
                    Piece::interval(lo, hi, lower, upper, Some(lower_jac), Some(upper_jac))
                }
            };
            pieces.push(piece);
        }
        let graph = PiecewiseGraph::new(self.dim_x, self.dim_y, pieces);
        let anchor = ProductPoint::new(self.anchor_x.clone(), self.anchor_y.clone());
        MappingProblem::new(
            self.name.clone(),
            ProductSpace::euclidean(self.dim_x, self.dim_y),
            anchor,
            Arc::new(graph),
        )
        .with_flags(self.flags)
        .with_graph_coderivative()
        .validated()
    }
}
