use proptest::prelude::*;

use tvprox_core::graph::{generate_small_world, left_eigen_residual, left_pf_eigenvector, validate_adjacency};
use tvprox_core::io::{scenario_from_json, scenario_to_json, ScenarioFile};
use tvprox_core::prox::{project_box, project_nonneg, prox_local, subgradient_violation};
use tvprox_core::scenarios::{random_instance, RandomInstanceConfig};
use tvprox_core::{BoxSet, LocalCost};

const SLACK: f64 = 1e-12;

/// `‖Px − Py‖² ≤ ⟨Px − Py, x − y⟩`, returned as the excess of the left side.
fn firm_excess(px: &[f64], py: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut sq = 0.0;
    let mut inner = 0.0;
    for i in 0..x.len() {
        let d = px[i] - py[i];
        sq += d * d;
        inner += d * (x[i] - y[i]);
    }
    sq - inner
}

fn boxes(n: usize) -> impl Strategy<Value = BoxSet> {
    (
        prop::collection::vec(-20.0..5.0f64, n),
        prop::collection::vec(0.0..15.0f64, n),
    )
        .prop_map(|(lo, width)| {
            let hi = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
            BoxSet::new(lo, hi).unwrap()
        })
}

fn cost(n: usize) -> impl Strategy<Value = LocalCost> {
    prop_oneof![
        Just(LocalCost::Zero),
        (prop::collection::vec(-10.0..10.0f64, n), 0.0..5.0f64)
            .prop_map(|(target, weight)| LocalCost::Quadratic { target, weight }),
    ]
}

/// A box, a cost, a prox scale and two points in the same dimension.
fn prox_case() -> impl Strategy<Value = (BoxSet, LocalCost, f64, Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            boxes(n),
            cost(n),
            1e-3..50.0f64,
            prop::collection::vec(-40.0..40.0f64, n),
            prop::collection::vec(-40.0..40.0f64, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn prox_is_firmly_nonexpansive((bx, c, scale, x, y) in prox_case()) {
        let px = prox_local(scale, &x, &c, &bx).unwrap();
        let py = prox_local(scale, &y, &c, &bx).unwrap();
        prop_assert!(firm_excess(&px, &py, &x, &y) <= SLACK);
    }

    #[test]
    fn box_projection_is_firmly_nonexpansive((bx, _c, _s, x, y) in prox_case()) {
        let px = project_box(&x, &bx.lo, &bx.hi).unwrap();
        let py = project_box(&y, &bx.lo, &bx.hi).unwrap();
        prop_assert!(firm_excess(&px, &py, &x, &y) <= SLACK);
    }

    #[test]
    fn orthant_projection_is_firmly_nonexpansive(
        (x, y) in (1usize..20).prop_flat_map(|n| (
            prop::collection::vec(-40.0..40.0f64, n),
            prop::collection::vec(-40.0..40.0f64, n),
        ))
    ) {
        let (px, py) = (project_nonneg(&x), project_nonneg(&y));
        prop_assert!(firm_excess(&px, &py, &x, &y) <= SLACK);
    }

    #[test]
    fn projections_are_idempotent((bx, _c, _s, x, _y) in prox_case()) {
        let p = project_box(&x, &bx.lo, &bx.hi).unwrap();
        prop_assert_eq!(project_box(&p, &bx.lo, &bx.hi).unwrap(), p.clone());
        prop_assert!(bx.contains(&p, 0.0));
        let o = project_nonneg(&x);
        prop_assert_eq!(project_nonneg(&o), o);
    }

    // y = prox_λ(v)  ⇔  (v − y)/λ ∈ ∂(f + ι_box)(y)
    #[test]
    fn prox_output_satisfies_subgradient_condition((bx, c, scale, x, _y) in prox_case()) {
        let p = prox_local(scale, &x, &c, &bx).unwrap();
        let g: Vec<f64> = x.iter().zip(&p).map(|(a, b)| (a - b) / scale).collect();
        let tol = 1e-9 * (1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        prop_assert!(subgradient_violation(&p, &g, &c, &bx) <= tol);
    }

    #[test]
    fn small_world_networks_have_accurate_pf_vectors(
        agents in 3usize..25,
        m in 1usize..4,
        p in 0.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let m = m.min((agents - 1) / 2);
        let a = generate_small_world(agents, m, p, 0.05, seed).unwrap();
        prop_assert!(validate_adjacency(&a, 0.05, 1e-12).ok());
        let pf = left_pf_eigenvector(&a, 1e-13, 1_000_000).unwrap();
        prop_assert!(left_eigen_residual(&a, &pf.q) <= 1e-10);
        prop_assert!(pf.q.iter().all(|&v| v > 0.0));
        prop_assert!((pf.q.sum() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_scenarios_roundtrip_through_json(seed in any::<u64>()) {
        let game = random_instance(&RandomInstanceConfig { seed, ..Default::default() }).unwrap();
        let x0: Vec<f64> = (0..game.size()).map(|i| (i as f64 * 0.37).sin()).collect();
        let text = scenario_to_json(&game, Some(&x0)).unwrap();
        let (back, back_x0) = scenario_from_json(&text).unwrap();
        prop_assert_eq!(back_x0.as_deref(), Some(&x0[..]));
        prop_assert_eq!(
            ScenarioFile::from_game(&back, None).unwrap(),
            ScenarioFile::from_game(&game, None).unwrap()
        );
        prop_assert_eq!(scenario_to_json(&back, Some(&x0)).unwrap(), text);
        for k in [0, 3, 17] {
            prop_assert_eq!(back.network.at(k).unwrap(), game.network.at(k).unwrap());
        }
    }
}
