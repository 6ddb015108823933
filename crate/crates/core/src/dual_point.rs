//! Coderivative norms at one graph point, minimized over sets of dual vectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::Result;
use crate::extended::Extended;
use crate::geometry::{dual_sphere_samples, DualVectorSet, NormKind, ProductPoint};
use crate::problems::{CoderivativeValue, MappingProblem};

/// How `y* ↦ D*F(x,y)(y*)` is evaluated at a fixed point.
#[derive(Debug, Clone)]
enum Structure {
    /// `Y = R`: by positive homogeneity only the norms at `±u` matter,
    /// `u` being the unit dual vector.
    Scalar {
        unit: f64,
        plus: Extended,
        minus: Extended,
    },
    /// Euclidean spaces and `D*F(x,y)(y*) = {Mᵀy*}`; the spectrum of `MMᵀ`
    /// gives exact minima over balls.
    Linear {
        m: DMatrix<f64>,
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
    },
    General,
}

pub struct DualPoint<'a> {
    problem: &'a MappingProblem,
    point: &'a ProductPoint,
    structure: Structure,
    budget: usize,
    seed: u64,
}

fn singleton(v: CoderivativeValue) -> Option<Vec<f64>> {
    match v {
        CoderivativeValue::Set(DualVectorSet::Singleton(s)) => Some(s),
        _ => None,
    }
}

impl<'a> DualPoint<'a> {
    pub fn new(problem: &'a MappingProblem, point: &'a ProductPoint, budget: usize, seed: u64) -> Result<Self> {
        let space = problem.space();
        let structure = if space.y.dim() == 1 {
            let unit = 1.0 / space.y.dual_norm(&[1.0]);
            let plus = problem.coderivative(point, &[unit])?.min_norm(&space.x);
            let minus = problem.coderivative(point, &[-unit])?.min_norm(&space.x);
            Structure::Scalar { unit, plus, minus }
        } else {
            Self::linear(problem, point)?.unwrap_or(Structure::General)
        };
        Ok(DualPoint {
            problem,
            point,
            structure,
            budget: budget.max(4),
            seed,
        })
    }

    fn linear(problem: &MappingProblem, point: &ProductPoint) -> Result<Option<Structure>> {
        let space = problem.space();
        if !matches!(space.x.kind(), NormKind::Euclidean) || !matches!(space.y.kind(), NormKind::Euclidean) {
            return Ok(None);
        }
        let (dx, dy) = (space.x.dim(), space.y.dim());
        let mut m = DMatrix::zeros(dy, dx);
        for i in 0..dy {
            let mut e = vec![0.0; dy];
            e[i] = 1.0;
            let Some(plus) = singleton(problem.coderivative(point, &e)?) else {
                return Ok(None);
            };
            e[i] = -1.0;
            let Some(minus) = singleton(problem.coderivative(point, &e)?) else {
                return Ok(None);
            };
            let scale = plus.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if plus.iter().zip(&minus).any(|(a, b)| (a + b).abs() > 1e-9 * scale) {
                return Ok(None);
            }
            for (j, v) in plus.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        let eig = SymmetricEigen::new(&m * m.transpose());
        Ok(Some(Structure::Linear {
            m,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }))
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.structure, Structure::Scalar { .. })
    }

    /// Whether minima over balls are computed exactly.
    pub fn is_exact(&self) -> bool {
        !matches!(self.structure, Structure::General)
    }

    /// `inf ‖x*‖` over `x* ∈ D*F(x,y)(y*)`.
    pub fn min_norm_at(&self, ystar: &[f64]) -> Extended {
        match &self.structure {
            Structure::Scalar { unit, plus, minus } => {
                let s = ystar[0];
                if s > 0.0 {
                    plus.scale(s / unit)
                } else if s < 0.0 {
                    minus.scale(-s / unit)
                } else {
                    Extended::ZERO
                }
            }
            Structure::Linear { m, .. } => {
                let z = DVector::from_column_slice(ystar);
                Extended::Finite((m.transpose() * z).norm())
            }
            Structure::General => match self.problem.coderivative(self.point, ystar) {
                Ok(v) => v.min_norm(&self.problem.space().x),
                Err(_) => Extended::Infinite,
            },
        }
    }

    pub fn min_norm_over(&self, ystars: &[Vec<f64>]) -> Extended {
        ystars.iter().map(|z| self.min_norm_at(z)).fold(Extended::Infinite, Extended::min)
    }

    /// `inf ‖x*‖` over `x* ∈ D*F(x,y)(c + rB*)`.
    pub fn min_norm_ball(&self, center: &[f64], r: f64) -> Extended {
        let ynorm = &self.problem.space().y;
        if ynorm.dual_norm(center) <= r {
            // the ball contains y* = 0 and D*F(x,y)(0) ∋ 0
            return Extended::ZERO;
        }
        match &self.structure {
            Structure::Scalar { unit, .. } => {
                let (lo, hi) = (center[0] - r * unit, center[0] + r * unit);
                // the endpoint nearest to zero; zero itself is handled above
                let s = if lo > 0.0 { lo } else { hi };
                self.min_norm_at(&[s])
            }
            Structure::Linear {
                eigenvalues, eigenvectors, ..
            } => Extended::Finite(ball_minimum(eigenvalues, eigenvectors, center, r)),
            Structure::General => {
                let mut best = self.min_norm_at(center);
                if r > 0.0 {
                    for b in dual_sphere_samples(ynorm, self.budget, self.seed) {
                        for t in [1.0, 0.5, 0.25] {
                            let z: Vec<f64> = center.iter().zip(&b).map(|(c, v)| c + r * t * v).collect();
                            best = best.min(self.min_norm_at(&z));
                        }
                    }
                }
                best
            }
        }
    }

    /// Minimum of [`Self::min_norm_ball`] over the representatives of `centers`.
    pub fn min_norm_balls(&self, centers: &DualVectorSet, r: f64) -> Extended {
        centers
            .representatives()
            .iter()
            .map(|c| self.min_norm_ball(c, r))
            .fold(Extended::Infinite, Extended::min)
    }

    /// Norms of `D*F(x,y)(±u)` for `Y = R`.
    pub fn scalar_norms(&self) -> Option<(f64, Extended, Extended)> {
        match self.structure {
            Structure::Scalar { unit, plus, minus } => Some((unit, plus, minus)),
            _ => None,
        }
    }
}

/// `min ‖Mᵀz‖₂` over `‖z − c‖₂ ≤ r`, from the spectrum `(μ, V)` of `MMᵀ`.
fn ball_minimum(mu: &DVector<f64>, v: &DMatrix<f64>, c: &[f64], r: f64) -> f64 {
    let cc = v.transpose() * DVector::from_column_slice(c);
    let mu_max = mu.iter().fold(0.0f64, |a, b| a.max(*b));
    let tol = 1e-14 * mu_max.max(f64::MIN_POSITIVE);
    let range: Vec<(f64, f64)> = mu.iter().zip(cc.iter()).filter(|(m, _)| **m > tol).map(|(m, c)| (*m, *c)).collect();
    let value = |lambda: f64| {
        range
            .iter()
            .map(|(m, c)| {
                let z = lambda * c / (m + lambda);
                m * z * z
            })
            .sum::<f64>()
            .sqrt()
    };
    let d0 = range.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    if d0 <= r {
        return 0.0;
    }
    if r == 0.0 {
        return range.iter().map(|(m, c)| m * c * c).sum::<f64>().sqrt();
    }
    // distance from c of the stationary point for multiplier λ, decreasing in λ
    let shift = |lambda: f64| range.iter().map(|(m, c)| (m * c / (m + lambda)).powi(2)).sum::<f64>().sqrt();
    let (mut lo, mut hi) = (0.0, mu_max * d0 / r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shift(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    value(hi)
}
