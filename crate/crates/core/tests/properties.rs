mod common;

use proptest::prelude::*;

use common::{error_values, scan_nonlocal};
use subreg::geometry::{dot, duality_map, NormSpec, ProductMetric, ProductPoint};
use subreg::problems::{catalog_problem, finite_problem, Schedule};
use subreg::slopes_dual::{subdiff_rho_slope, DualVariant};
use subreg::slopes_primal::nonlocal_q_rho_slope;

fn scalar_graph() -> impl Strategy<Value = Vec<ProductPoint>> {
    prop::collection::btree_set((-8_i32..=8, -8_i32..=8), 2..20).prop_map(|cells| {
        let mut pts = vec![ProductPoint::scalar(0.0, 0.0)];
        pts.extend(
            cells
                .into_iter()
                .filter(|c| *c != (0, 0))
                .map(|(x, y)| ProductPoint::scalar(f64::from(x) / 8.0, f64::from(y) / 8.0)),
        );
        pts
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nonlocal_slope_matches_scan(points in scalar_graph(), rho in 0.05_f64..4.0, half in any::<bool>(), sum in any::<bool>()) {
        let q = if half { 0.5 } else { 1.0 };
        let metric = if sum { ProductMetric::Sum } else { ProductMetric::Max };
        let schedule = Schedule { metric, ..Schedule::quick() };
        let problem = finite_problem("random", points.clone(), ProductPoint::scalar(0.0, 0.0)).unwrap();
        let values = error_values(&points, &[0.0], q);
        for (at, f_at) in &values {
            let got = nonlocal_q_rho_slope(&problem, q, rho, at, &schedule).unwrap().value.to_f64();
            prop_assert_eq!(got.to_bits(), scan_nonlocal(&values, at, *f_at, rho, metric).to_bits());
        }
    }

    #[test]
    fn product_metrics_are_ordered(dx in 0.0_f64..10.0, dy in 0.0_f64..10.0, r1 in 0.01_f64..5.0, r2 in 0.01_f64..5.0) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        for metric in [ProductMetric::Max, ProductMetric::Sum] {
            prop_assert!(metric.combine(dx, dy, lo) <= metric.combine(dx, dy, hi));
        }
        let max = ProductMetric::Max.combine(dx, dy, r1);
        let sum = ProductMetric::Sum.combine(dx, dy, r1);
        prop_assert!(max <= sum && sum <= 2.0 * max);
    }

    #[test]
    fn duality_map_is_norming(y in prop::collection::vec(-5.0_f64..5.0, 3), p in 1.2_f64..6.0) {
        let norm = NormSpec::p_norm(p, 3).unwrap();
        let n = norm.norm(&y);
        prop_assume!(n > 1e-3);
        for z in duality_map(&y, &norm, 1e-9).unwrap().representatives() {
            prop_assert!((norm.dual_norm(&z) - 1.0).abs() < 1e-9);
            prop_assert!((dot(&z, &y) - n).abs() < 1e-9 * n.max(1.0));
        }
    }

    #[test]
    fn half_square_subdifferential_slope(x in 0.01_f64..3.0, rho in 0.0_f64..0.99) {
        let p = catalog_problem("half-square").unwrap();
        let at = ProductPoint::scalar(x, x * x);
        let v = subdiff_rho_slope(&p, rho, &at, DualVariant::Plain, &Schedule::quick()).unwrap().value.to_f64();
        prop_assert!((v - 2.0 * x * (1.0 - rho)).abs() < 1e-9);
    }
}
