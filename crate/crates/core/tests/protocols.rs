use radio_gather_core::engine::{RumorSet, Simulation};
use radio_gather_core::protocols::{
    bnd_dtree, by_id, mls_dtree, rtree, unb_dtree1, unb_dtree2, ProtocolParams, PROTOCOL_IDS,
};
use radio_gather_core::trees::{gamma_heights, make_caterpillar, make_path, make_star, TreeFamily};
use radio_gather_core::verify::{delivery_oracle, extract_schedule};
use radio_gather_core::{run, DuplexMode, Phase, Protocol, RunConfig, Tree};

fn delivered(protocol: &dyn Protocol, tree: &Tree, mode: DuplexMode) -> RumorSet {
    let trace = run(protocol, tree, RunConfig::new(mode, protocol.horizon(tree.n()), 7)).unwrap();
    trace.delivered().into_iter().collect()
}

#[test]
fn every_protocol_matches_the_oracle_on_small_trees() {
    for mode in [DuplexMode::Full, DuplexMode::Half] {
        for fam in TreeFamily::SWEEP {
            for n in [1, 2, 3, 16, 33] {
                let tree = fam.generate(n, n as u64);
                let oracle = delivery_oracle(&tree);
                for id in PROTOCOL_IDS {
                    let p = by_id(id, n, ProtocolParams { mode, ..ProtocolParams::default() }).unwrap();
                    assert_eq!(delivered(p.as_ref(), &tree, mode), oracle, "{id} on {fam} n={n} {mode:?}");
                }
            }
        }
    }
}

#[test]
fn single_node_completes_at_zero() {
    let tree = make_path(1);
    for id in PROTOCOL_IDS {
        let p = by_id(id, 1, ProtocolParams::default()).unwrap();
        let trace = run(p.as_ref(), &tree, RunConfig::new(DuplexMode::Half, 10, 0)).unwrap();
        assert_eq!(trace.completion, Some(0), "{id}");
    }
}

#[test]
fn round_robin_on_eight_nodes_within_64() {
    let p = by_id("rr-unb", 8, ProtocolParams::default()).unwrap();
    for seed in 0..20 {
        let tree = TreeFamily::Random.generate(8, seed);
        let trace = run(p.as_ref(), &tree, RunConfig::new(DuplexMode::Half, 64, seed)).unwrap();
        assert!(trace.completion.unwrap() <= 64);
    }
}

#[test]
fn bounded_round_robin_never_collides() {
    let p = by_id("rr-bnd", 40, ProtocolParams::default()).unwrap();
    let tree = TreeFamily::Random.generate(40, 3);
    let trace = run(p.as_ref(), &tree, RunConfig::new(DuplexMode::Half, 1600, 0)).unwrap();
    assert_eq!(trace.collisions_total, 0);
}

/// Steps `sim` to the start of every round and hands the phases to `check`.
fn at_round_starts(
    sim: &mut Simulation<'_>,
    preprocessing: u64,
    steps_per_round: u64,
    mut check: impl FnMut(u64, &[Phase]),
) {
    while !sim.finished() {
        let t = sim.time();
        if t >= preprocessing && (t - preprocessing).is_multiple_of(steps_per_round) {
            let phases: Vec<Phase> = sim.states().iter().map(|s| s.snapshot().phase.unwrap()).collect();
            check((t - preprocessing) / steps_per_round, &phases);
        }
        sim.advance().unwrap();
    }
}

#[test]
fn aggregation_phase_invariants() {
    for (p, n) in [(unb_dtree1(48), 48), (unb_dtree2(48, None, 1).unwrap(), 48), (unb_dtree2(48, Some(2), 1).unwrap(), 48)]
    {
        for fam in TreeFamily::SWEEP {
            let tree = fam.generate(n, 11);
            let mut sim = Simulation::new(&p, &tree, RunConfig::new(DuplexMode::Half, p.horizon(n), 0));
            at_round_starts(&mut sim, p.preprocessing_steps(), p.steps_per_round(), |round, phases| {
                for v in 0..n {
                    if v == tree.root() {
                        continue;
                    }
                    // leaf-to-root paths read retired*, active*, dormant*
                    assert!(phases[v] >= phases[tree.parent(v)], "round {round}: {v} behind its parent");
                }
                // every dormant node has a transmitting descendant
                let mut busy_below = vec![false; n];
                for v in tree.bottom_up() {
                    if v != tree.root() {
                        let b = busy_below[v] || matches!(phases[v], Phase::Active | Phase::SemiRetired);
                        busy_below[tree.parent(v)] |= b;
                    }
                }
                for v in 0..n {
                    assert!(phases[v] != Phase::Dormant || busy_below[v], "round {round}: {v} stuck");
                }
            });
            assert!(sim.all_delivered());
        }
    }
}

#[test]
fn unb1_activation_bound() {
    let n = 64;
    let p = unb_dtree1(n);
    for fam in TreeFamily::SWEEP {
        let tree = fam.generate(n, 5);
        let heights = gamma_heights(&tree, 2).heights;
        let mut sim = Simulation::new(&p, &tree, RunConfig::new(DuplexMode::Half, p.horizon(n), 0).to_max());
        while !sim.finished() {
            sim.advance().unwrap();
        }
        for (v, state) in sim.states().iter().enumerate() {
            let alpha = state.snapshot().activation_round.unwrap();
            assert!(alpha <= (2 * n * heights[v] + n) as u64, "{fam}: α={alpha} at height {}", heights[v]);
        }
    }
}

#[test]
fn unb2_walks_a_path_one_node_per_round() {
    // on a path every node's only child activates the round before it does
    let n = 20;
    let p = unb_dtree2(n, None, 0).unwrap();
    let tree = make_path(n);
    let mut sim = Simulation::new(&p, &tree, RunConfig::new(DuplexMode::Half, p.horizon(n), 0).to_max());
    while !sim.finished() {
        sim.advance().unwrap();
    }
    let alpha: Vec<u64> = sim.states().iter().map(|s| s.snapshot().activation_round.unwrap()).collect();
    for v in 0..n - 1 {
        assert_eq!(alpha[v], alpha[v + 1] + 1);
    }
    assert_eq!(alpha[n - 1], 0);
}

/// Φ over every maximal path of 2-height `h` during stage All of phase `h`.
fn bnd_potentials(mode: DuplexMode, tree: &Tree) {
    let n = tree.n();
    let p = bnd_dtree(n, mode, None, 0).unwrap();
    let heights = gamma_heights(tree, 2).heights;
    // paths listed from the initial node up to the head
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let starts = tree.children(v).iter().all(|&c| heights[c] != heights[v]);
        if starts {
            let mut path = vec![v];
            let mut u = v;
            while u != tree.root() && heights[tree.parent(u)] == heights[u] {
                u = tree.parent(u);
                path.push(u);
            }
            paths.push(path);
        }
    }
    let (all_start, stride) = match mode {
        DuplexMode::Full => (0, 1),
        DuplexMode::Half => (n as u64, 2),
    };
    let all_len = 2 * n as u64 * stride;
    let mut sim = Simulation::new(&p, tree, RunConfig::new(mode, p.horizon(n), 0).to_max());
    let mut last: Vec<Option<usize>> = vec![None; paths.len()];
    while !sim.finished() {
        let t = sim.time();
        if t >= p.preprocessing_steps() {
            let r = t - p.preprocessing_steps();
            let (h, k) = (r / p.phase_len(), r % p.phase_len());
            let in_all = k >= all_start && k <= all_start + all_len;
            if in_all && (k - all_start) % stride == 0 {
                let pending: Vec<usize> = sim.states().iter().map(|s| s.snapshot().pending.unwrap()).collect();
                for (i, path) in paths.iter().enumerate() {
                    if heights[path[0]] as u64 != h {
                        continue;
                    }
                    let below_head = &path[..path.len() - 1];
                    let phi = match below_head.iter().position(|&u| pending[u] > 0) {
                        Some(a) => below_head[a..].iter().map(|&u| pending[u].max(1)).sum(),
                        None => 0,
                    };
                    if k == all_start {
                        assert!(phi <= 2 * n, "initial potential {phi} above 2n");
                    } else if let Some(prev) = last[i] {
                        assert!(prev == 0 || phi < prev, "Φ did not drop: {prev} -> {phi} at step {t}");
                        assert!(prev != 0 || phi == 0);
                    }
                    last[i] = Some(phi);
                }
            }
        }
        sim.advance().unwrap();
    }
    assert!(sim.all_delivered());
}

#[test]
fn bnd_potential_decreases() {
    for mode in [DuplexMode::Full, DuplexMode::Half] {
        for fam in TreeFamily::SWEEP {
            bnd_potentials(mode, &fam.generate(40, 2));
        }
        bnd_potentials(mode, &make_path(30));
    }
}

#[test]
fn bnd_path_head_collects_within_stage_all() {
    // every node of a path is the single height-0 path; phase 0 finishes it
    for mode in [DuplexMode::Full, DuplexMode::Half] {
        let n = 24;
        let p = bnd_dtree(n, mode, None, 0).unwrap();
        let tree = make_path(n).with_random_labels(3);
        let trace = run(&p, &tree, RunConfig::new(mode, p.horizon(n), 0)).unwrap();
        let all_end = p.phase_start(0) + if mode == DuplexMode::Full { 2 * n as u64 } else { 5 * n as u64 };
        assert!(trace.completion.unwrap() <= all_end);
    }
}

#[test]
fn bnd_star_completes_in_first_phase_rr() {
    for mode in [DuplexMode::Full, DuplexMode::Half] {
        let n = 30;
        let p = bnd_dtree(n, mode, None, 0).unwrap();
        let trace = run(&p, &make_star(n), RunConfig::new(mode, p.horizon(n), 0)).unwrap();
        assert!(trace.completion.unwrap() <= p.phase_start(1));
    }
}

#[test]
fn bnd_parity_alternates_along_paths() {
    let n = 30;
    let p = bnd_dtree(n, DuplexMode::Half, None, 0).unwrap();
    let tree = make_path(n).with_random_labels(9);
    let mut sim = Simulation::new(&p, &tree, RunConfig::new(DuplexMode::Half, p.phase_start(0) + n as u64, 0).to_max());
    while !sim.finished() {
        sim.advance().unwrap();
    }
    // node n−1 is the deepest, so it starts with even parity
    for v in 0..n {
        assert_eq!(sim.states()[v].snapshot().parity, Some((n - 1 - v) % 2 == 1));
        assert_eq!(sim.states()[v].snapshot().height, Some(0));
    }
}

#[test]
fn mls_fires_only_on_schedule_whatever_the_tree() {
    let n = 25;
    let p = mls_dtree(n, DuplexMode::Half);
    let horizon = p.completion_bound();
    let sched = extract_schedule(&p, n, horizon).unwrap();
    for tree in [TreeFamily::Random.generate(n, 1), TreeFamily::Caterpillar.generate(n, 2)] {
        let trace = run(&p, &tree, RunConfig::new(DuplexMode::Half, horizon, 0).to_max().recording()).unwrap();
        for rec in &trace.steps {
            for &v in &rec.transmitters {
                let label = tree.label(v);
                let fires = sched.fires_at(label, rec.step);
                let forwards = trace.steps[..rec.step as usize]
                    .last()
                    .is_some_and(|prev| prev.receptions.iter().any(|r| r.node == v));
                assert!(fires != forwards, "label {label} at step {}", rec.step);
            }
        }
        // the last n steps of every phase are free of firings
        for label in 0..n {
            for &t in sched.fires(label) {
                assert!(t % p.phase_len() < p.phase_len() - n as u64);
            }
        }
    }
}

#[test]
fn mls_survives_adversarial_caterpillars() {
    let n = 16;
    let p = mls_dtree(n, DuplexMode::Full);
    for seed in 0..30u64 {
        let offsets: Vec<usize> = (0..n / 2).map(|i| ((seed as usize + 1) * (i * i + 3)) % (n / 2)).collect();
        let tree = make_caterpillar(n / 2, &offsets).unwrap().with_random_labels(seed);
        let trace = run(&p, &tree, RunConfig::new(DuplexMode::Full, p.completion_bound(), 0)).unwrap();
        assert_eq!(trace.delivered().len(), n);
        assert!(trace.completion.unwrap() <= p.completion_bound());
    }
}

#[test]
fn rtree_ignores_labels() {
    let n = 20;
    let shape = TreeFamily::Random.generate(n, 4);
    let a = run(&rtree(), &shape, RunConfig::new(DuplexMode::Full, 2000, 9).recording()).unwrap();
    for seed in 0..5 {
        let relabeled = shape.with_random_labels(100 + seed);
        let b = run(&rtree(), &relabeled, RunConfig::new(DuplexMode::Full, 2000, 9).recording()).unwrap();
        assert_eq!(a.steps.len(), b.steps.len());
        for (x, y) in a.steps.iter().zip(&b.steps) {
            assert_eq!(x.transmitters, y.transmitters);
            assert_eq!(x.collisions, y.collisions);
            let from = |r: &radio_gather_core::engine::StepRecord| -> Vec<(usize, usize)> {
                r.receptions.iter().map(|e| (e.node, e.from)).collect()
            };
            assert_eq!(from(x), from(y));
        }
    }
}
