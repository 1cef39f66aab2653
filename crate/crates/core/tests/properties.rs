use proptest::prelude::*;

use izo_core::complex::norm2;
use izo_core::tau::{smat, svec, sym_outer};
use izo_core::{make_schedule, FeasibleSet, Matrix, Regime};

fn vec_in(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, n)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

proptest! {
    #[test]
    fn ball_projection_is_idempotent_and_nonexpansive(
        x in vec_in(4, 10.0), c in vec_in(4, 2.0), radius in 0.1f64..5.0, y0 in vec_in(4, 1.0)
    ) {
        let set = FeasibleSet::ball(c.clone(), radius).unwrap();
        let p = set.project(&x).unwrap();
        prop_assert!(set.contains(&p));
        prop_assert_eq!(set.project(&p).unwrap(), p.clone());
        let y = set.project(&c.iter().zip(&y0).map(|(a, b)| a + b * radius).collect::<Vec<_>>()).unwrap();
        prop_assert!(dist(&p, &y) <= dist(&x, &y) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn box_projection_is_idempotent_and_nonexpansive(
        x in vec_in(3, 10.0), lo in vec_in(3, 1.0), width in vec_in(3, 2.0), t in vec_in(3, 1.0)
    ) {
        let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w.abs()).collect();
        let set = FeasibleSet::boxed(lo.clone(), hi.clone()).unwrap();
        let p = set.project(&x).unwrap();
        prop_assert!(set.contains(&p));
        prop_assert_eq!(set.project(&p).unwrap(), p.clone());
        let y: Vec<f64> = lo.iter().zip(&hi).zip(&t).map(|((l, h), s)| l + (h - l) * 0.5 * (s + 1.0)).collect();
        prop_assert!(dist(&p, &y) <= dist(&x, &y) + 1e-12);
    }

    #[test]
    fn custom_projection_by_sampling(x in vec_in(2, 5.0), y in vec_in(2, 1.0)) {
        // the nonnegative orthant as a custom set
        let set = FeasibleSet::custom(
            |v| v.iter().map(|a| a.max(0.0)).collect(),
            Some(Box::new(|v: &[f64]| v.iter().all(|a| *a >= 0.0))),
        );
        let y: Vec<f64> = y.iter().map(|v| v.abs()).collect();
        let p = set.project(&x).unwrap();
        prop_assert!(dist(&p, &y) <= dist(&x, &y) + 1e-12);
    }

    #[test]
    fn svec_identity(entries in prop::collection::vec(-3.0f64..3.0, 21), x in vec_in(6, 3.0)) {
        let mut p = Matrix::from_fn(6, 6, |i, j| entries[(i * 7 + j * 3) % 21]);
        p.symmetrize();
        let lhs: f64 = svec(&p).unwrap().iter().zip(sym_outer(&x, &x).unwrap()).map(|(a, b)| a * b).sum();
        let rhs = p.quad_form(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs() + p.max_abs() * norm2(&x).powi(2)));
        prop_assert!(smat(&svec(&p).unwrap()).unwrap().sub(&p).unwrap().max_abs() <= 1e-15 * (1.0 + p.max_abs()));
    }

    #[test]
    fn schedules_stay_positive_and_bounded(
        tau in 0.01f64..10.0, l1 in 0.01f64..10.0, n in 1usize..20, delta in 1e-12f64..1.0, k in 1usize..100_000
    ) {
        for regime in Regime::ALL {
            let k_total = 2 * (8.0 * (n * n) as f64 * l1 * l1 / (tau * tau)).floor() as usize + 10;
            if k_total > 100_000_000 {
                continue;
            }
            let s = make_schedule(regime, tau, l1, n, delta, k_total).unwrap();
            prop_assert!(s.mu(k) > 0.0);
            prop_assert!(s.delta(k) > 0.0 && s.delta(k) <= delta);
        }
    }
}
