use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use swimkit::cover::{lift, lift_length, lift_samples, project, verdict, VerdictOptions};
use swimkit::engine::{integrate, ShapePath};
use swimkit::geometry::{build_scallop, ScallopGeometry};
use swimkit::highre::{solve_neumann, PanelSystem};
use swimkit::lowre::{grand_resistance, scallop_field, scallop_links, three_link_links, STROKE_LIMIT};
use swimkit::paths::{CosineStroke, DampedStroke};
use swimkit::se2::{world_map, BodyTwist};
use swimkit::Pose;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn resistance_is_spd_and_viscosity_linear(s in -STROKE_LIMIT..STROKE_LIMIT, mu in 0.01f64..50.0) {
        let links = scallop_links(&ScallopGeometry::default(), FRAC_PI_2, 2.0);
        let g1 = grand_resistance(&[s], &links, 1.0).unwrap();
        let gm = grand_resistance(&[s], &links, mu).unwrap();
        prop_assert!((g1.mr - g1.mr.transpose()).norm() <= 1e-12 * g1.mr.norm());
        prop_assert!(g1.min_eigenvalue() > 0.0);
        prop_assert!((gm.mr - g1.mr * mu).norm() <= 1e-13 * gm.mr.norm());
        let (a, b) = (g1.connection(&[1.0]).unwrap(), gm.connection(&[1.0]).unwrap());
        prop_assert!((a.to_vector() - b.to_vector()).norm() <= 1e-13 * (1.0 + a.to_vector().norm()));
    }

    #[test]
    fn resistance_ignores_link_order(s0 in -1.5f64..1.5, s1 in -1.5f64..1.5) {
        let links = three_link_links(1.0, 2.0);
        let reversed: Vec<_> = links.iter().rev().cloned().collect();
        let a = grand_resistance(&[s0, s1], &links, 1.0).unwrap();
        let b = grand_resistance(&[s0, s1], &reversed, 1.0).unwrap();
        prop_assert!((a.mr - b.mr).norm() <= 1e-14 * a.mr.norm());
        prop_assert!((&a.n - &b.n).norm() <= 1e-14 * (1.0 + a.n.norm()));
    }

    #[test]
    fn field_is_linear_in_rate(s in -STROKE_LIMIT..STROKE_LIMIT, r1 in -3.0f64..3.0, r2 in -3.0f64..3.0, th in -PI..PI) {
        let f = scallop_field(&ScallopGeometry::default(), FRAC_PI_2, 1.0, 2.0).unwrap();
        let q = Pose::new(th, 0.3, -0.7);
        use swimkit::engine::SwimmerField;
        let sum = f.velocity(&q, &[s], &[r1 + r2]).unwrap();
        let parts = f.velocity(&q, &[s], &[r1]).unwrap() + f.velocity(&q, &[s], &[r2]).unwrap();
        prop_assert!((sum - parts).norm() <= 1e-12 * (1.0 + sum.norm()));
    }

    #[test]
    fn world_map_preserves_speed(th in -10.0f64..10.0, w in -2.0f64..2.0, vx in -2.0f64..2.0, vy in -2.0f64..2.0) {
        let v = world_map(&Pose::new(th, 1.0, 2.0), &BodyTwist::new(w, vx, vy));
        prop_assert!((v.norm() - (w * w + vx * vx + vy * vy).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn base_point_shift_shifts_lift(k in -3i32..4, amp in 0.1f64..6.0, rate in 0.2f64..3.0) {
        let t: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
        let s: Vec<f64> = t.iter().map(|x| project(amp * (rate * x).sin() + rate * x, true)).collect();
        let a = lift_samples(&t, &s, true, s[0]).unwrap();
        let b = lift_samples(&t, &s, true, s[0] + TAU * k as f64).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((y - x - TAU * k as f64).abs() < 1e-9);
        }
        prop_assert!((lift_length(&a) - lift_length(&b)).abs() < 1e-9);
        let opts = VerdictOptions::default();
        prop_assert_eq!(verdict(&a, &opts).kind, verdict(&b, &opts).kind);
        // Projection round trip and unwrapping validity.
        for (x, v) in a.values.iter().zip(&s) {
            let d = (project(*x, true) - v).abs();
            prop_assert!(d < 1e-9 || (TAU - d).abs() < 1e-9);
        }
        prop_assert!(a.values.windows(2).all(|w| (w[1] - w[0]).abs() < PI));
    }

    #[test]
    fn lift_length_grows_with_horizon(n in 10usize..400, extra in 1usize..100) {
        let v: Vec<f64> = (0..n + extra).map(|i| (0.37 * i as f64).sin() * 2.0).collect();
        let short = lift(&v[..n], false, v[0]).unwrap();
        let long = lift(&v, false, v[0]).unwrap();
        prop_assert!(lift_length(&long) >= lift_length(&short));
    }

    #[test]
    fn shape_rates_match_differences(t in 0.0f64..30.0, amp in 0.1f64..1.0, freq in 0.1f64..3.0, decay in 0.0f64..1.0) {
        let paths: [Box<dyn ShapePath>; 2] = [
            Box::new(CosineStroke { amplitude: amp, frequency: freq, phase: 0.3, offset: 0.0, horizon: 40.0 }),
            Box::new(DampedStroke { amplitude: amp, decay, frequency: freq, horizon: 40.0 }),
        ];
        for p in &paths {
            let h = 1e-5;
            let fd = (p.sample(t + h).s[0] - p.sample(t - h).s[0]) / (2.0 * h);
            prop_assert!((fd - p.sample(t).rate[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn trajectories_start_at_q0_with_increasing_time(th in -PI..PI, x in -5.0f64..5.0, h in 0.005f64..0.1) {
        let f = scallop_field(&ScallopGeometry::default(), FRAC_PI_2, 1.0, 2.0).unwrap();
        let q0 = Pose::new(th, x, -x);
        let tr = integrate(&f, &CosineStroke::new(1.0, 1.0, 1.0), q0, h).unwrap();
        prop_assert_eq!(tr.samples[0].pose, q0);
        prop_assert_eq!(tr.samples[0].t, 0.0);
        prop_assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn panel_solutions_meet_their_data(s in -STROKE_LIMIT..STROKE_LIMIT) {
        let geom = ScallopGeometry { panel_count: 24, ..Default::default() }.with_alpha(FRAC_PI_2 + s);
        let body = build_scallop(&geom).unwrap();
        let data = body.mode_data(0);
        let sys = PanelSystem::new(&body).unwrap();
        let sol = sys.solve(&data).unwrap();
        prop_assert!(sys.collocation_residual(&sol, &data) < 1e-8);
        prop_assert_eq!(&sol, &solve_neumann(&body, &data).unwrap());
    }
}
