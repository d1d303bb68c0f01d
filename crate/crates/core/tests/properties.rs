mod common;

use dcslab::brownian::sample_path;
use dcslab::config::RunConfig;
use dcslab::coupling::{run_on_strip, CosineMarkov, CouplingOptions, PoissonStrip, StripPoint, Uniform};
use dcslab::duality::{max_mass, min_cover, parse_rational, q, BlockSet, FiniteMeasure};
use dcslab::enumeration::{enumerate_minimizers, level_argmins};
use dcslab::joining::{greedy_join, plan_marginals, shift_range, GridDensity};
use dcslab::stats::{ks_test, uniform_cdf};
use proptest::prelude::*;

fn measure(ws: &[(i64, i64)]) -> FiniteMeasure {
    FiniteMeasure::new(ws.iter().map(|&(p, d)| q(p, d)).collect()).unwrap()
}

type Weights = Vec<(i64, i64)>;

fn instance() -> impl Strategy<Value = (Weights, Weights, Vec<(usize, usize)>)> {
    (1usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec((0i64..10, 1i64..10), n),
            prop::collection::vec((0i64..10, 1i64..10), n),
            prop::collection::vec((0..n, 0..n), 0..=n * n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_equals_cut_equals_lp((mu, nu, cells) in instance()) {
        let (mu, nu) = (measure(&mu), measure(&nu));
        let w = BlockSet::from_cells(mu.len(), &cells).unwrap();
        let m = max_mass(&mu, &nu, &w).unwrap();
        let c = min_cover(&mu, &nu, &w).unwrap();
        prop_assert_eq!(&m.value, &c.value);
        prop_assert!(c.covers(&w));
        prop_assert!(m.plan.supported_on(&w));
        prop_assert_eq!(common::lp_max_mass(mu.weights(), nu.weights(), &w.cells()), m.value);
    }

    #[test]
    fn rationals_roundtrip(p in -1000i64..1000, d in 1i64..1000) {
        prop_assert_eq!(parse_rational(&q(p, d).to_string()).unwrap(), q(p, d));
        prop_assert_eq!(parse_rational(&format!("{p}/{d}")).unwrap(), q(p, d));
    }

    #[test]
    fn joining_reconstructs_both_marginals(
        f in prop::collection::vec(0.0f64..2.0, 1..24),
        g in prop::collection::vec(0.0f64..2.0, 1..24),
        offset in -8i64..8,
    ) {
        let l = 8;
        let (sf, sg): (f64, f64) = (f.iter().sum(), g.iter().sum());
        prop_assume!(sf > 0.1 && sg > 0.1);
        let g: Vec<f64> = g.iter().map(|v| v * sf / sg).collect();
        let fd = GridDensity::new(l, 0, f).unwrap();
        let gd = GridDensity::new(l, offset, g).unwrap();
        let plan = greedy_join(&fd, &gd, &shift_range(l, -4, 4), 20).unwrap();
        let (a, b) = plan_marginals(&plan);
        for (i, v) in fd.values.iter().enumerate() {
            prop_assert!((a.values[i] + plan.f_res.values[i] - v).abs() < 1e-12);
            prop_assert!(plan.f_res.values[i] >= 0.0);
        }
        for (i, v) in gd.values.iter().enumerate() {
            prop_assert!((b.values[i] + plan.g_res.values[i] - v).abs() < 1e-12);
            prop_assert!(plan.g_res.values[i] >= 0.0);
        }
        prop_assert!(plan.sweep_log.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn uniform_race_consumes_in_height_order(pts in prop::collection::vec((0.001f64..0.999, 0.001f64..9.99), 1..40)) {
        let strip = PoissonStrip::from_points(10.0, pts.iter().map(|&(y, h)| StripPoint { y, h }).collect()).unwrap();
        let tr = run_on_strip(strip, &Uniform, CouplingOptions::for_height(10.0)).unwrap();
        prop_assert_eq!(tr.steps.len(), pts.len());
        prop_assert!(tr.steps.windows(2).all(|w| w[0].h <= w[1].h));
        let total: f64 = tr.ts().iter().sum();
        prop_assert!((total - tr.steps.last().unwrap().h).abs() < 1e-9);
    }

    #[test]
    fn markov_race_stays_on_the_graph(pts in prop::collection::vec((0.001f64..0.999, 0.001f64..9.99), 1..40)) {
        let strip = PoissonStrip::from_points(10.0, pts.iter().map(|&(y, h)| StripPoint { y, h }).collect()).unwrap();
        let o = CosineMarkov::new(0.9).unwrap();
        let tr = run_on_strip(strip, &o, CouplingOptions::for_height(10.0)).unwrap();
        prop_assert!(tr.on_graph_violations(&o, 1e-9).is_empty());
        prop_assert!(tr.unconsumed.iter().all(|p| p.h >= tr.l_star));
    }

    #[test]
    fn config_text_roundtrip(seed in any::<u64>(), h in 0.5f64..100.0, reps in prop::option::of(1usize..10_000)) {
        let mut c = RunConfig { seed, height: h, replicas: reps, ..RunConfig::default() };
        c.oracle2 = "markov-cosine".into();
        prop_assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn ks_reports_are_probabilities(xs in prop::collection::vec(0.0f64..1.0, 1..200)) {
        let r = ks_test(&xs, uniform_cdf).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.statistic));
        prop_assert!((0.0..=1.0).contains(&r.p_value));
        prop_assert!((r.statistic - common::ks_distance(&xs, uniform_cdf)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn minimizers_fill_levels(seed in any::<u64>()) {
        let path = sample_path(12, seed).unwrap();
        let e = enumerate_minimizers(&path, 16).unwrap();
        for k in 0..=4u32 {
            let mut a = e.xs[..1 << k].to_vec();
            let mut b = level_argmins(&path, k).unwrap();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a, common::scan_level_argmins(path.values(), 12, k));
        }
        prop_assert!(e.pairwise_distinct(path.step()));
    }
}
