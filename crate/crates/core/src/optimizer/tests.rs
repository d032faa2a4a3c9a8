use super::*;
use crate::net::{LinecardSpec, PortId};
use crate::synth::{gravity_matrix, random_network, scale_to_spr_mlu, seeded, TopologyParams};

fn fig1() -> (Network, TrafficMatrix) {
    let mut b = Network::builder();
    let ids: Vec<NodeId> = ["A", "B", "C", "D", "E", "F"].iter().map(|n| b.add_node(*n)).collect();
    let one = [(1.0, PortRole::Backbone)];
    for (u, v, w) in [
        (0, 1, 1.0),
        (0, 2, 1.0),
        (1, 4, 1.0),
        (1, 2, 1.0),
        (2, 3, 1.0),
        (3, 5, 1.5),
        (3, 4, 2.0),
        (4, 5, 1.0),
    ] {
        b.add_link(ids[u], ids[v], w, w, &one).unwrap();
    }
    let net = b.build(LinecardSpec::default()).unwrap();
    let mut m = TrafficMatrix::zeros(6);
    for (u, v, t) in [(0, 5, 0.3), (1, 5, 0.3), (0, 2, 0.3), (3, 4, 0.7), (1, 3, 0.1), (3, 5, 0.1)] {
        m.set(ids[u], ids[v], t).unwrap();
    }
    (net, m)
}

fn single_link(ports: usize, cap: f64, demand: f64) -> (Network, TrafficMatrix) {
    let mut b = Network::builder();
    let (u, v) = (b.add_node("u"), b.add_node("v"));
    b.add_link(u, v, 1.0, 1.0, &vec![(cap, PortRole::Backbone); ports]).unwrap();
    let net = b.build(LinecardSpec::default()).unwrap();
    let mut m = TrafficMatrix::zeros(2);
    m.set(u, v, demand).unwrap();
    (net, m)
}

fn lu(net: &Network, cfg: &SrConfiguration, from: &str, to: &str) -> f64 {
    let (f, t) = (net.node_by_name(from).unwrap(), net.node_by_name(to).unwrap());
    let a = net.arcs().iter().position(|a| a.from == f && a.to == t).unwrap();
    cfg.utilization[a]
}

#[test]
fn fig1_needs_five_ports() {
    let (net, m) = fig1();
    let cfg = optimize(&net, &m, &OptimizationParams::default()).unwrap();
    assert_eq!(cfg.active_backbone_ports(&net), 5);
    assert_eq!(cfg.status, SearchStatus::Complete);
    assert_eq!(cfg.lower_bound, Some(5.0));
    for (u, v) in [("A", "B"), ("B", "E"), ("E", "F")] {
        assert_eq!(lu(&net, &cfg, u, v), 0.0);
        assert_eq!(lu(&net, &cfg, v, u), 0.0);
    }
    for (u, v, x) in [("A", "C", 0.6), ("B", "C", 0.4), ("C", "D", 0.7), ("D", "E", 0.7), ("D", "F", 0.7)] {
        assert!((lu(&net, &cfg, u, v) - x).abs() < 1e-6, "{u}{v}");
    }
}

#[test]
fn fig1_shortest_paths_light_every_link() {
    let (net, m) = fig1();
    let p = OptimizationParams::default();
    let t = compute_fractions(&net, None, p.ecmp, p.exec).unwrap();
    let spr = round_ports(&net, &Routing::shortest_path(&m), &m, &t, &p).unwrap();
    assert_eq!(spr.active_backbone_ports(&net), 8);
}

#[test]
fn fig1_agrees_with_exhaustive_search() {
    let (net, m) = fig1();
    let p = OptimizationParams::default();
    let exact = exact_oracle(&net, &m, &p, OracleObjective::Ports).unwrap();
    assert_eq!(exact.active_backbone_ports(&net), 5);
    assert!(exact.mlu <= p.theta + 1e-6);
}

#[test]
fn single_link_uses_just_enough_ports() {
    let (net, m) = single_link(4, 25.0, 30.0);
    let cfg = optimize(&net, &m, &OptimizationParams::default()).unwrap();
    assert_eq!(cfg.plan.active_ports(), 2);
    assert!((cfg.mlu - 0.6).abs() < 1e-12);
    // demand of exactly theta times one port
    let (net, m) = single_link(2, 10.0, 7.0);
    let cfg = optimize(&net, &m, &OptimizationParams::default()).unwrap();
    assert_eq!(cfg.plan.active_ports(), 1);
}

#[test]
fn empty_matrix_turns_everything_off() {
    let (net, _) = fig1();
    let cfg = optimize(&net, &TrafficMatrix::zeros(6), &OptimizationParams::default()).unwrap();
    assert_eq!(cfg.plan.active_ports(), 0);
    assert_eq!(cfg.lower_bound, Some(0.0));
    assert_eq!(cfg.mlu, 0.0);
}

#[test]
fn saturated_link_keeps_every_port() {
    let (net, m) = single_link(3, 10.0, 21.0);
    let cfg = optimize(&net, &m, &OptimizationParams::default()).unwrap();
    assert_eq!(cfg.plan.active_ports(), 3);
    let (net, m) = single_link(3, 10.0, 21.5);
    assert!(matches!(
        optimize(&net, &m, &OptimizationParams::default()),
        Err(Error::Infeasible { .. })
    ));
}

#[test]
fn access_ports_stay_on() {
    let mut b = Network::builder();
    let (u, v) = (b.add_node("u"), b.add_node("v"));
    b.add_link(u, v, 1.0, 1.0, &[(10.0, PortRole::Access), (10.0, PortRole::Backbone)])
        .unwrap();
    let net = b.build(LinecardSpec::default()).unwrap();
    let cfg = optimize(&net, &TrafficMatrix::zeros(2), &OptimizationParams::default()).unwrap();
    assert!(cfg.plan.port_active[0]);
    assert!(!cfg.plan.port_active[1]);
}

#[test]
fn rounding_takes_the_ceiling() {
    let (net, m) = single_link(4, 10.0, 14.1);
    let p = OptimizationParams::default();
    let t = compute_fractions(&net, None, p.ecmp, p.exec).unwrap();
    let cfg = round_ports(&net, &Routing::shortest_path(&m), &m, &t, &p).unwrap();
    assert_eq!(cfg.plan.active_ports(), 3);
    assert!(cfg.plan.port_active[..3].iter().all(|&a| a));
    assert!(!cfg.plan.port_active[3]);
    assert!(net.ports()[3].linecards.iter().all(|&lc| lc.0 < net.linecards().len()));
    let _ = PortId(0);
}

fn small_instance(seed: u64) -> (Network, TrafficMatrix) {
    let mut rng = seeded(seed);
    let p = TopologyParams {
        nodes: 4,
        mean_degree: 2.5,
        ports_per_link: 2,
        port_capacities: vec![10.0],
        ..TopologyParams::default()
    };
    let net = random_network(&mut rng, &p).unwrap();
    let m = gravity_matrix(&mut rng, 4);
    let t = compute_fractions(&net, None, EcmpMode::EvenSplit, Exec::Sequential).unwrap();
    let m = scale_to_spr_mlu(&net, &m, &t, 0.6).unwrap();
    (net, m)
}

#[test]
fn search_matches_exhaustive_optimum() {
    for seed in 0..6 {
        let (net, m) = small_instance(seed);
        let p = OptimizationParams::default();
        let exact = exact_oracle(&net, &m, &p, OracleObjective::Ports).unwrap();
        let cfg = optimize(&net, &m, &p).unwrap();
        assert_eq!(cfg.status, SearchStatus::Complete);
        assert_eq!(
            cfg.active_backbone_ports(&net),
            exact.active_backbone_ports(&net),
            "seed {seed}"
        );
    }
}

#[test]
fn unsplit_mode_uses_one_intermediate() {
    let (net, m) = fig1();
    let p = OptimizationParams {
        mode: Mode::NoSplitting,
        ..OptimizationParams::default()
    };
    let cfg = optimize(&net, &m, &p).unwrap();
    assert!(cfg.routing.is_unsplit());
    assert_eq!(cfg.method, Method::NoSplitting);
    assert_eq!(cfg.active_backbone_ports(&net), 5);
}

#[test]
fn unsplit_never_beats_split() {
    for seed in 0..4 {
        let (net, m) = small_instance(seed);
        let split = optimize(&net, &m, &OptimizationParams::default()).unwrap();
        let ns = optimize(
            &net,
            &m,
            &OptimizationParams {
                mode: Mode::NoSplitting,
                ..OptimizationParams::default()
            },
        )
        .unwrap();
        assert!(ns.active_backbone_ports(&net) >= split.active_backbone_ports(&net));
    }
}

#[test]
fn min_mlu_does_not_exceed_shortest_paths() {
    let (net, m) = fig1();
    let t = compute_fractions(&net, None, EcmpMode::EvenSplit, Exec::Sequential).unwrap();
    let best = min_mlu(&net, &m, &t, None, Exec::Sequential, Duration::from_secs(60)).unwrap();
    let spr = crate::synth::spr_mlu(&net, &m, &t).unwrap();
    assert!(best.mlu <= spr + 1e-9);
    // D sends 0.8 over its three unit links
    assert!(best.mlu >= 0.8 / 3.0 - 1e-9);
    assert!(best.mlu < spr);
}

#[test]
fn no_node_budget_still_returns_a_valid_plan() {
    let (net, m) = fig1();
    let p = OptimizationParams {
        limits: SearchLimits {
            max_nodes: 0,
            ..SearchLimits::default()
        },
        ..OptimizationParams::default()
    };
    let cfg = optimize(&net, &m, &p).unwrap();
    assert!(cfg.mlu <= p.theta + 1e-6);
    assert!(cfg.active_backbone_ports(&net) <= 8);
    assert!(cfg.lower_bound.unwrap() <= cfg.active_backbone_ports(&net) as f64);
}

#[test]
fn candidates_restrict_intermediates() {
    let (net, m) = fig1();
    let p = OptimizationParams {
        candidates: Some(vec![]),
        ..OptimizationParams::default()
    };
    let cfg = optimize(&net, &m, &p).unwrap();
    assert_eq!(cfg.routing.num_steered(), 0);
    assert_eq!(cfg.active_backbone_ports(&net), 8);
}

#[test]
fn bad_theta_is_rejected() {
    let (net, m) = fig1();
    for theta in [0.0, -0.1, 1.5, f64::NAN] {
        let p = OptimizationParams {
            theta,
            ..OptimizationParams::default()
        };
        assert!(matches!(optimize(&net, &m, &p), Err(Error::InvalidInput(_))));
    }
}
