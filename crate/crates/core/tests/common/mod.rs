//! Test-only oracles, written without the library's candidate machinery.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subreg::geometry::{ProductMetric, ProductPoint};
use subreg::problems::{catalog_problem, graph_sample, MappingProblem};

/// Euclidean distance, with the one-dimensional case taken as `|a − b|`.
pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

pub fn product_dist(metric: ProductMetric, a: &ProductPoint, b: &ProductPoint, rho: f64) -> f64 {
    let dx = euclid(&a.x, &b.x);
    let dy = euclid(&a.y, &b.y);
    match metric {
        ProductMetric::Max => dx.max(rho * dy),
        ProductMetric::Sum => dx + rho * dy,
    }
}

/// Exhaustive `sup [f(at) − f₊(c)]₊ / d_ρ(c, at)` over a finite domain.
pub fn scan_nonlocal(points: &[(ProductPoint, f64)], at: &ProductPoint, f_at: f64, rho: f64, metric: ProductMetric) -> f64 {
    let mut best = 0.0_f64;
    for (c, fc) in points {
        if c == at {
            continue;
        }
        let num = f_at - fc.max(0.0);
        if num > 0.0 {
            best = best.max(num / product_dist(metric, c, at, rho));
        }
    }
    best
}

/// Values `d(y, ȳ)^q` at every graph point.
pub fn error_values(points: &[ProductPoint], ybar: &[f64], q: f64) -> Vec<(ProductPoint, f64)> {
    points.iter().map(|p| (p.clone(), euclid(&p.y, ybar).powf(q))).collect()
}

fn grid_point(rng: &mut ChaCha8Rng, dim: usize, step: f64) -> Vec<f64> {
    (0..dim).map(|_| f64::from(rng.gen_range(-6_i32..=6)) * step).collect()
}

/// Five small graphs, each listed point by point, with the origin as anchor.
pub fn finite_graphs() -> Vec<(String, Vec<ProductPoint>)> {
    let mut out = Vec::new();
    let parabola: Vec<ProductPoint> = (-6..=6)
        .map(|i| f64::from(i) / 6.0)
        .map(|x| ProductPoint::scalar(x, x * x))
        .collect();
    out.push(("parabola".to_string(), parabola));

    let mut multivalued = Vec::new();
    for i in -2_i32..=2 {
        for j in 0..4 {
            multivalued.push(ProductPoint::scalar(f64::from(i) * 0.5, f64::from(j) * 0.25 * f64::from(i.abs())));
        }
    }
    out.push(("multivalued".to_string(), multivalued));

    for (name, dx, dy, count, seed) in [
        ("plane-to-line", 2, 1, 30, 11),
        ("plane-to-plane", 2, 2, 50, 12),
        ("line-to-plane", 1, 2, 40, 13),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = vec![ProductPoint::new(vec![0.0; dx], vec![0.0; dy])];
        while pts.len() < count {
            let p = ProductPoint::new(grid_point(&mut rng, dx, 0.25), grid_point(&mut rng, dy, 0.5));
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
        out.push((name.to_string(), pts));
    }
    out
}

/// Problems paired with the order used for them in sweeps.
pub fn catalog_with_orders() -> Vec<(MappingProblem, f64)> {
    let mut out = Vec::new();
    for name in subreg::problems::catalog_names() {
        for q in [1.0, 0.5] {
            out.push((catalog_problem(name).expect("catalog entry"), q));
        }
    }
    out
}

/// Seeded graph points around the anchor.
pub fn probes(problem: &MappingProblem, count: usize, seed: u64) -> Vec<ProductPoint> {
    let mut pts = graph_sample(problem, problem.anchor(), 1.0, count, seed).expect("graph sample");
    pts.truncate(count);
    pts
}

/// Relative difference, zero for equal values.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
