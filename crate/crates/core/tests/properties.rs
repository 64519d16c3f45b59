mod common;

use proptest::prelude::*;
use selfcont::zoo;
use selfcont::{
    apriori_bound_check, check_integrability, classify, error_functional, integrate,
    minimize_fixed_start, parse_field_expr, probe_ray, FnField, GradientProvider, OptConfig, Path,
    ProbeSchedule, QuadratureSpec, SobolevConfig, StepConfig, VectorField,
};

/// Zoo fields that carry a growth bound, with a sensible sampling box.
const BOUNDED: &[&str] = &[
    "intro-pair",
    "diverge-intro",
    "radial-unit",
    "rot-unit",
    "spiral-sin",
    "converge-axis",
    "diverge-axis",
    "cross-axis",
    "cross-axis-swapped",
    "cross-axis-vertical",
];

fn coord() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn polyline(nodes: usize) -> impl Strategy<Value = Path> {
    (
        prop::collection::vec((0.05..0.5f64, coord(), coord()), nodes - 1),
        coord(),
        coord(),
    )
        .prop_map(|(steps, a, b)| {
            let mut times = vec![0.0];
            let mut pts = vec![vec![a, b]];
            for (dt, x, y) in steps {
                times.push(times.last().unwrap() + dt);
                pts.push(vec![x, y]);
            }
            Path::new(times, pts).unwrap()
        })
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_evaluation_is_pure(k in 0..BOUNDED.len(), x in coord(), y in coord()) {
        let f = zoo::entry(BOUNDED[k]).unwrap().field;
        let a = f.eval(&[x, y]);
        let b = f.eval(&[x, y]);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn field_text_round_trips(k in 0..BOUNDED.len(), x in coord(), y in coord()) {
        let f = zoo::entry(BOUNDED[k]).unwrap().field;
        let g = parse_field_expr(&f.to_text()).unwrap();
        prop_assert_eq!(f.eval(&[x, y]), g.eval(&[x, y]));
    }

    #[test]
    fn csv_round_trip_is_exact(p in polyline(6)) {
        let q = Path::from_csv(&p.to_csv()).unwrap();
        prop_assert_eq!(p, q);
    }

    #[test]
    fn error_is_additive_across_a_junction(k in 0..BOUNDED.len(), p in polyline(4), q in polyline(4)) {
        let f = zoo::entry(BOUNDED[k]).unwrap().field;
        // Shift q so that it starts where p ends.
        let shift_t = p.t_end() - q.t0();
        let times: Vec<f64> = q.times().iter().map(|t| t + shift_t).collect();
        let mut pts: Vec<Vec<f64>> = q.points().map(<[f64]>::to_vec).collect();
        let dx: Vec<f64> = p.end().iter().zip(q.start()).map(|(a, b)| a - b).collect();
        for pt in pts.iter_mut() {
            for (c, d) in pt.iter_mut().zip(&dx) {
                *c += d;
            }
        }
        pts[0] = p.end().to_vec();
        let mut times = times;
        times[0] = p.t_end();
        let q = Path::new(times, pts).unwrap();
        let joined = p.concat(&q).unwrap();
        let (ep, eq, ej) = (
            error_functional(&f, &p, &quad()).unwrap().value,
            error_functional(&f, &q, &quad()).unwrap().value,
            error_functional(&f, &joined, &quad()).unwrap().value,
        );
        prop_assert!((ej - (ep + eq)).abs() <= 1e-12 * (1.0 + ej), "{} vs {}", ej, ep + eq);
    }

    #[test]
    fn appending_a_segment_obeys_the_triangle_bound(
        k in 0..BOUNDED.len(),
        p in polyline(5),
        z in (coord(), coord()),
        delta in 0.01..1.0f64,
    ) {
        let e = zoo::entry(BOUNDED[k]).unwrap();
        let b = e.growth.unwrap();
        let seg = Path::linear(p.t_end(), p.end(), p.t_end() + delta, &[z.0, z.1]).unwrap();
        let joined = p.concat(&seg).unwrap();
        let ej = error_functional(&e.field, &joined, &quad()).unwrap().value;
        let ep = error_functional(&e.field, &p, &quad()).unwrap().value;
        let rhs = ep + common::dist(p.end(), &[z.0, z.1]) + delta * b.at(seg.max_norm());
        prop_assert!(ej <= rhs, "{} > {}", ej, rhs);
    }

    #[test]
    fn rescaling_matches_the_scaled_field(k in 0..BOUNDED.len(), p in polyline(5), s in 0.2..3.0f64) {
        let f = zoo::entry(BOUNDED[k]).unwrap().field;
        let r = p.t_end();
        let shifted = Path::new(p.times().iter().map(|t| t - p.t0()).collect(), p.points().map(<[f64]>::to_vec).collect()).unwrap();
        let y = shifted.rescale(s).unwrap();
        let lhs = error_functional(&f, &y, &QuadratureSpec::fixed(16)).unwrap().value;
        let scaled = FnField::new(2, |x: &[f64], out: &mut [f64]| {
            let v = f.eval(x)?;
            for (o, c) in out.iter_mut().zip(v) {
                *o = s / (r - p.t0()) * c;
            }
            Ok(())
        });
        let rhs = error_functional(&scaled, &shifted, &QuadratureSpec::fixed(16)).unwrap().value;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn node_insertion_keeps_the_path_and_its_error(
        p in polyline(4),
        frac in 0.01..0.99f64,
        probe in 0.0..1.0f64,
        c in (coord(), coord()),
    ) {
        let f = parse_field_expr(&format!("dim 2; f = ({}, {})", c.0, c.1)).unwrap();
        let t = p.t0() + frac * p.horizon();
        prop_assume!(!p.times().contains(&t));
        let q = p.insert_node(t).unwrap();
        let s = p.t0() + probe * p.horizon();
        let (a, b) = (p.eval_at(s).unwrap(), q.eval_at(s).unwrap());
        prop_assert!(common::dist(&a, &b) <= 1e-12);
        let (ep, eq) = (
            error_functional(&f, &p, &quad()).unwrap().value,
            error_functional(&f, &q, &quad()).unwrap().value,
        );
        prop_assert!((ep - eq).abs() <= 1e-10, "{} vs {}", ep, eq);
    }

    #[test]
    fn verdicts_are_pure_functions_of_residuals(res in prop::collection::vec(0.0..2.0f64, 4..40)) {
        let sched = ProbeSchedule::default();
        prop_assert_eq!(classify(&res, &sched), classify(&res.clone(), &sched));
    }

    #[test]
    fn ray_probes_repeat_exactly(k in 0..BOUNDED.len(), x in coord(), y in coord()) {
        let f = zoo::entry(BOUNDED[k]).unwrap().field;
        let sched = ProbeSchedule::default();
        let a = probe_ray(&f, &[x, y], &sched);
        let b = probe_ray(&f, &[x, y], &sched);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn germ_paths_respect_the_a_priori_bound(k in 0..BOUNDED.len(), x in coord(), y in coord(), h in 0.01..0.2f64) {
        let e = zoo::entry(BOUNDED[k]).unwrap();
        let (p, rep) = integrate(&e.field, &[x, y], &StepConfig::plain(h, 1.0)).unwrap();
        prop_assert!(apriori_bound_check(&p, e.growth.unwrap(), rep.e_total).holds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn optimizer_is_deterministic_and_monotone(k in 0..BOUNDED.len(), x in coord(), y in coord(), seed in 0u64..1000) {
        let f = zoo::entry(BOUNDED[k]).unwrap().field;
        let cfg = OptConfig { n_nodes: 12, budget: 20_000, restarts: 3, seed, ..OptConfig::default() };
        let a = minimize_fixed_start(&f, &[x, y], 0.5, &cfg).unwrap();
        let b = minimize_fixed_start(&f, &[x, y], 0.5, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.trace.windows(2).all(|w| w[1].1 <= w[0].1));
        let again = error_functional(&f, &a.path, &cfg.quad).unwrap().value;
        prop_assert!((again - a.e_value).abs() <= 1e-12 * (1.0 + again));
    }

    #[test]
    fn sobolev_partials_grow_inward(alpha in -1.9..-1.0f64, seed in 0u64..100) {
        let e = zoo::instantiate(
            "power-radial",
            &[("alpha".into(), format!("{alpha}")), ("N".into(), "4".into())],
        ).unwrap();
        let cfg = SobolevConfig { n_shells: 9, n_angular: 32, seed, ..SobolevConfig::default() };
        let a = check_integrability(&e.field, &GradientProvider::default(), &[0.0; 4], &cfg).unwrap();
        let b = check_integrability(&e.field, &GradientProvider::default(), &[0.0; 4], &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.shells.windows(2).all(|w| w[1].1 >= w[0].1));
    }
}
