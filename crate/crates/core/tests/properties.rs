use isac_core::conic::{embed_hermitian, extract_hermitian};
use isac_core::linalg::{self, CMat, CVec, C64};
use isac_core::model::{self, Scenario};
use isac_core::trajectory::{eta_series, linearize_collision};
use isac_core::Point;
use proptest::prelude::*;

fn hermitian(n: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(-10.0f64..10.0, 2 * n * n).prop_map(move |v| {
        let a = CMat::from_fn(n, n, |i, j| C64::new(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
        linalg::hermitian_part(&a)
    })
}

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Point> {
    (lo..hi, lo..hi).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #[test]
    fn embedding_round_trips(x in (1usize..6).prop_flat_map(hermitian)) {
        let back = extract_hermitian(&embed_hermitian(&x).unwrap()).unwrap();
        prop_assert!(linalg::frobenius(&(back - &x)) <= 1e-14 * (1.0 + linalg::frobenius(&x)));
    }

    #[test]
    fn embedding_is_symmetric_with_doubled_trace(x in (1usize..6).prop_flat_map(hermitian)) {
        let y = embed_hermitian(&x).unwrap();
        prop_assert_eq!(&y, &y.transpose());
        prop_assert!((y.trace() - 2.0 * linalg::trace_re(&x)).abs() <= 1e-12 * (1.0 + y.trace().abs()));
    }

    #[test]
    fn steering_vectors_have_unit_modulus(c in -1.0f64..1.0, n in 1usize..9) {
        let a = model::steering_vector(c, n, 0.5);
        prop_assert_eq!(a.len(), n);
        for z in a.iter() {
            prop_assert!((linalg::cabs(*z) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_is_bounded_by_trace_times_na(
        x in hermitian(4), q in point(0.0, 400.0), u in point(0.0, 400.0), h in 10.0f64..200.0,
    ) {
        let p = linalg::project_psd(&x);
        let e = eta_series(&p, &q, &u, h, 0.5);
        let t = linalg::trace_re(&p);
        prop_assert!(e >= -1e-9 * (1.0 + t));
        prop_assert!(e <= 4.0 * t + 1e-9 * (1.0 + t));
    }

    #[test]
    fn collision_cut_implies_separation(
        qk0 in point(-50.0, 50.0), qi0 in point(-50.0, 50.0),
        qk in point(-50.0, 50.0), qi in point(-50.0, 50.0),
        dh in 0.0f64..20.0,
    ) {
        let d_min = 10.0;
        if let Some(cut) = linearize_collision(&qk0, &qi0, 80.0 + dh, 80.0, d_min) {
            if cut.slack(&qk, &qi) >= 0.0 {
                prop_assert!((qk - qi).norm_squared() + dh * dh >= d_min * d_min - 1e-9);
            }
        }
    }

    #[test]
    fn rate_is_monotone_in_serving_power(scale in 1.0f64..10.0, x in 0.0f64..400.0, y in 0.0f64..400.0) {
        let s = Scenario::paper().with_num_slots(3);
        let traj: Vec<Vec<Point>> = (0..s.num_uavs()).map(|_| vec![Point::new(x, y); 3]).collect();
        let mut d = isac_core::Design::new(&s, traj, isac_core::Association::uniform(s.num_uavs(), 3, 0));
        let h: CVec = s.channel(0, &Point::new(x, y), s.uav_altitudes[0]);
        *d.w_mut(0, 0, 1) = linalg::outer(&h).scale(1e-3 / h.norm_squared());
        let r1 = model::rate(&d, &s, 0, 0, 1).unwrap();
        d.w_mut(0, 0, 1).scale_mut(scale);
        let r2 = model::rate(&d, &s, 0, 0, 1).unwrap();
        prop_assert!(r2 >= r1 - 1e-12);
    }
}
