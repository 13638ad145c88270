//! Optimizer-level properties: exact temperature laws, the two-node spring
//! equilibrium across four orders of magnitude of starting separations, and
//! seed purity of the full pipeline.

mod common;

use graphforce::forces::{stress_energy, theorem2_residual, ForceConfig, ForceRule};
use graphforce::gen;
use graphforce::graph::{shortest_path_distances, DistanceMode};
use graphforce::optimizer::*;
use graphforce::{Layout, OptimizerSettings, OptimizerState, Vec2};
use proptest::prelude::*;

/// After `5k` consecutive energy decreases the temperature has been divided
/// by `t` exactly `k` times.
#[test]
fn temperature_five_k_decreases_law() {
    let mut st = OptimizerState::new(1, 1.0, OptimizerSettings::default());
    st.temperature = 2.0;
    let mut oracle = 2.0f64;
    let mut energy = 1000.0;
    for step in 1..=25 {
        st.update_temperature(energy - 1.0, energy);
        energy -= 1.0;
        if step % 5 == 0 {
            oracle /= 0.9;
        }
        assert_eq!(st.temperature.to_bits(), oracle.to_bits(), "step {step}");
    }
}

// Heat never leaves the clamp band whatever the displacement history.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heat_respects_clamp(seq in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..300)) {
        let k = 1.0;
        let mut st = OptimizerState::new(1, k, OptimizerSettings::default());
        for (dx, dy) in seq {
            st.old_displace[0] = st.displace[0];
            st.displace[0] = Vec2::new(dx, dy);
            st.update_local_temperature(0);
            prop_assert!(st.heat[0] >= 1e-4 * k - 1e-18);
            prop_assert!(st.heat[0] <= 1e2 * k + 1e-12);
        }
    }

    /// Two nodes joined by one spring end up at separation K*d within
    /// 1e-3*K from any start in [1e-2 K, 1e2 K]. The descent phase can be
    /// thrown into a leapfrog chase by unlucky geometry, so the budget is
    /// generous enough for the gradient phase to finish the job from any
    /// state it is handed.
    #[test]
    fn two_node_spring_equilibrium(log_sep in -2.0f64..2.0) {
        let sep = 10f64.powf(log_sep);
        let g = gen::path(2);
        let cfg = ForceConfig::with_rules([ForceRule::Spring]);
        let mut st = OptimizerState::new(2, cfg.k, OptimizerSettings::with_iterations(1000));
        let x0 = Layout::new(vec![Vec2::ZERO, Vec2::new(sep, 0.0)]);
        let out = force_directed_layout(&g, &cfg, &mut st, x0).unwrap();
        let dist = (out.pos(0) - out.pos(1)).norm();
        prop_assert!(
            (dist - cfg.k).abs() <= 1e-3 * cfg.k,
            "start {sep}: final {dist}"
        );
    }
}

/// Weighted edges set the equilibrium length K*d.
#[test]
fn two_node_weighted_spring() {
    let g = graphforce::Graph::from_edges(2, vec![(0, 1, 2.5)]).unwrap();
    let cfg = ForceConfig::with_rules([ForceRule::Spring]);
    let mut st = OptimizerState::new(2, cfg.k, OptimizerSettings::with_iterations(800));
    let x0 = Layout::new(vec![Vec2::ZERO, Vec2::new(0.3, 0.4)]);
    let out = force_directed_layout(&g, &cfg, &mut st, x0).unwrap();
    let dist = (out.pos(0) - out.pos(1)).norm();
    assert!((dist - 2.5).abs() <= 1e-3, "final {dist}");
}

/// Equilibrium identity of stress minimizers on small graphs: the quadratic
/// and cross terms agree to within 1% after a stress-only run.
#[test]
fn theorem2_residual_small_graphs() {
    let cfg = ForceConfig::with_rules([ForceRule::Stress]);
    for (name, g) in [
        ("path", gen::path(12)),
        ("cycle", gen::cycle(14)),
        ("grid", gen::grid(4, 5)),
        ("star", gen::star(13)),
    ] {
        let d = shortest_path_distances(&g, DistanceMode::Weighted).unwrap();
        let mut residuals: Vec<f64> = (0..5u64)
            .map(|s| {
                let mut st =
                    OptimizerState::new(g.node_count(), cfg.k, OptimizerSettings::with_iterations(400));
                let x0 = random_layout(g.node_count(), cfg.k, 91 + s);
                let out = force_directed_layout(&g, &cfg, &mut st, x0).unwrap();
                theorem2_residual(&g, &d, &out, &cfg).unwrap()
            })
            .collect();
        residuals.sort_by(f64::total_cmp);
        let median = residuals[2];
        assert!(median <= 1e-2, "{name}: residuals {residuals:?}");
    }
}

/// The pipeline is a pure function of (graph, config, seed): rebuilding the
/// graph from its serialized bytes and rerunning gives identical bits.
#[test]
fn pipeline_pure_in_graph_bytes_and_seed() {
    let g = gen::random_connected(18, 12, 5);
    let text = g.to_edge_list();
    let g2 = graphforce::graph::load_graph(&text).unwrap().graph;
    let cfg = ForceConfig::with_rules([ForceRule::Stress]);

    let run = |g: &graphforce::Graph| {
        let mut st = OptimizerState::new(g.node_count(), cfg.k, OptimizerSettings::with_iterations(80));
        let x0 = random_layout(g.node_count(), cfg.k, 31);
        force_directed_layout(g, &cfg, &mut st, x0).unwrap()
    };
    let a = run(&g);
    let b = run(&g2);
    for v in 0..g.node_count() {
        assert_eq!(a.pos(v).x.to_bits(), b.pos(v).x.to_bits());
        assert_eq!(a.pos(v).y.to_bits(), b.pos(v).y.to_bits());
    }
}

/// Final stress falls by three orders of magnitude on the path of three
/// (median over ten seeds), and the energy trace records both phases.
#[test]
fn trace_records_phases_and_descent() {
    let g = gen::path(3);
    let cfg = ForceConfig::with_rules([ForceRule::Spring]);
    let d = shortest_path_distances(&g, DistanceMode::Weighted).unwrap();
    let mut st =
        OptimizerState::new(3, cfg.k, OptimizerSettings::with_iterations(60)).with_trace();
    let x0 = random_layout(3, cfg.k, 17);
    let e0 = stress_energy(&g, &d, &x0, &cfg);
    let out = force_directed_layout(&g, &cfg, &mut st, x0).unwrap();
    let e1 = stress_energy(&g, &d, &out, &cfg);
    assert!(e1 < e0);
    let trace = st.trace.as_ref().unwrap();
    assert_eq!(trace.len(), 60);
    assert!(trace.iter().take(30).all(|r| r.phase == Phase::SteepestDescent));
    assert!(trace.iter().skip(30).all(|r| r.phase == Phase::ConjugateGradient));
    assert!(trace.iter().all(|r| r.energy.is_finite() && r.temperature > 0.0));
}
