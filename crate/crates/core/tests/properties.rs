use lloyd_adversary::construction::{validate_construction, GadgetWeights};
use lloyd_adversary::io::{read_instance, write_instance};
use lloyd_adversary::{analyze, build_chain, run, ConstructionParams, Point, RunOptions};
use proptest::prelude::*;

fn params(t: usize, r0: f64, fx: f64, fy: f64) -> ConstructionParams {
    ConstructionParams::new(
        0.025,
        1e-5,
        GadgetWeights::reference(),
        r0,
        Point::new(fx, fy),
        t,
        None,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iteration_count_ignores_scale_and_placement(
        t in 2usize..=5,
        r0_exp in -3.0f64..3.0,
        fx in -1e3f64..1e3,
        fy in -1e3f64..1e3,
    ) {
        let inst = build_chain(&params(t, 10f64.powf(r0_exp), fx, fy)).unwrap();
        prop_assert!(validate_construction(&inst).passed());
        let res = run(&inst, &RunOptions::default()).unwrap();
        prop_assert!(res.converged);
        prop_assert_eq!(res.iterations, (1 << (t + 2)) - 10);
        prop_assert_eq!(res.degeneracy_count(), 0);
        let tl = analyze(res.trace.as_ref().unwrap(), &inst).unwrap();
        prop_assert_eq!(tl.leaf_wake_count, (1 << t) - 2);
        prop_assert!(tl.all_asleep());
    }

    #[test]
    fn potential_is_monotone(t in 2usize..=4, fx in -10.0f64..10.0) {
        let inst = build_chain(&params(t, 1.0, fx, 0.0)).unwrap();
        let trace = run(&inst, &RunOptions::default()).unwrap().trace.unwrap();
        for row in &trace.rows {
            prop_assert!(row.potential <= row.potential_after_update);
        }
        for w in trace.potentials().windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn file_round_trip_is_exact(t in 1usize..=6, r0_exp in -2.0f64..2.0, fx in -5.0f64..5.0) {
        let inst = build_chain(&params(t, 10f64.powf(r0_exp), fx, -fx)).unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &inst).unwrap();
        let back = read_instance(buf.as_slice()).unwrap();
        prop_assert_eq!(&back.points, &inst.points);
        prop_assert_eq!(back.center_positions(), inst.center_positions());
    }

    #[test]
    fn admissible_epsilons_all_work(frac in 0.05f64..0.95) {
        let base = ConstructionParams::reference(3).unwrap();
        let eps = 2.0 * base.epsilon * frac;
        let p = ConstructionParams::new(0.025, 1e-5, GadgetWeights::reference(), 1.0, Point::new(0.0, 0.0), 3, Some(eps))
            .unwrap();
        let inst = build_chain(&p).unwrap();
        prop_assert!(validate_construction(&inst).passed());
        let res = run(&inst, &RunOptions::default()).unwrap();
        prop_assert_eq!(res.iterations, 22);
        prop_assert!(analyze(res.trace.as_ref().unwrap(), &inst).is_ok());
    }
}
