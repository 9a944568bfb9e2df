use num_complex::Complex64;
use proptest::prelude::*;

use valdist::criteria::bound_cascade;
use valdist::expr::Expr;
use valdist::locate::locate_apoints;
use valdist::nevanlinna::characteristic;
use valdist::sphere::{chordal_distance, spherical_derivative, Region};

fn point(lim: f64) -> impl Strategy<Value = Complex64> {
    (-lim..lim, -lim..lim).prop_map(|(re, im)| Complex64::new(re, im))
}

/// `(z - a)^2 / (z - b)` with a double zero and a simple pole.
fn rational(a: Complex64, b: Complex64) -> Expr {
    (Expr::var() - Expr::Const(a)).powi(2) / (Expr::var() - Expr::Const(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn characteristic_is_sum_and_nondecreasing(a in point(1.5), b in point(1.5)) {
        prop_assume!((a - b).norm() > 0.2 && b.norm() > 0.05);
        let f = rational(a, b);
        let rep = characteristic(&f, &[2.0, 3.0, 5.0, 8.0]).unwrap();
        for row in &rep.rows {
            prop_assert!((row.t - (row.m + row.n)).abs() <= 1e-12 * row.t.abs().max(1.0));
            prop_assert!(row.nbar <= row.n + 1e-12);
        }
        for w in rep.rows.windows(2) {
            prop_assert!(w[1].t >= w[0].t - 1e-8, "T({}) = {} < T({}) = {}", w[1].r, w[1].t, w[0].r, w[0].t);
        }
    }

    #[test]
    fn reciprocal_has_same_spherical_derivative(a in point(1.0), b in point(1.0), z in point(2.0)) {
        prop_assume!((a - b).norm() > 0.2 && (z - a).norm() > 0.05 && (z - b).norm() > 0.05);
        let f = rational(a, b);
        let g = Expr::constant(1.0) / rational(a, b);
        let x = spherical_derivative(&f, z, 0).unwrap();
        let y = spherical_derivative(&g, z, 0).unwrap();
        prop_assert!((x - y).abs() <= 1e-10 * x.max(1e-300));
    }

    #[test]
    fn chordal_distance_is_a_metric(a in point(5.0), b in point(5.0), c in point(5.0)) {
        let ab = chordal_distance(a, b);
        prop_assert!((ab - chordal_distance(b, a)).abs() <= 1e-15);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&ab));
        prop_assert!(ab <= chordal_distance(a, c) + chordal_distance(c, b) + 1e-12);
    }

    #[test]
    fn cascade_grows_when_bound_at_least_one(m in 1.0..4.0f64, b in point(2.0), k in 2usize..7) {
        let bounds = bound_cascade(m, &[b], k);
        prop_assert_eq!(bounds.len(), k - 1);
        for w in bounds.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn roots_stable_under_tighter_tolerance(r1 in point(0.8), r2 in point(0.8)) {
        prop_assume!((r1 - r2).norm() > 0.1 && r1.norm() < 0.9 && r2.norm() < 0.9);
        let p = (Expr::var() - Expr::Const(r1)) * (Expr::var() - Expr::Const(r2)).powi(2);
        let disk = Region::disk(Complex64::new(0.0, 0.0), 1.0);
        let coarse = locate_apoints(&p, Complex64::new(0.0, 0.0), &disk, 1e-8).unwrap();
        let fine = locate_apoints(&p, Complex64::new(0.0, 0.0), &disk, 1e-12).unwrap();
        prop_assert_eq!(coarse.total_multiplicity(), 3);
        prop_assert_eq!(fine.total_multiplicity(), 3);
        for root in &coarse.entries {
            let near = fine.entries.iter().any(|f| f.multiplicity == root.multiplicity
                && (f.location - root.location).norm() <= 1e-6);
            prop_assert!(near, "root {} (mult {}) moved", root.location, root.multiplicity);
        }
    }
}
