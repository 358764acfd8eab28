use std::sync::{Arc, Mutex};

use radio_gather_core::engine::{step, Aux, Outcome, Simulation};
use radio_gather_core::protocols::{by_id, unb_dtree1, NodeInit, NodeProtocol, ProtocolParams, PROTOCOL_IDS};
use radio_gather_core::trees::{make_path, make_star, TreeFamily};
use radio_gather_core::{
    run, Action, DuplexMode, EngineError, Message, MessageModel, NodeView, Protocol, RumorSet, RunConfig, Tree,
};

fn fnf(rumor: usize) -> Action {
    Action::Transmit(Message::Fnf { rumor })
}

#[test]
fn two_leaves_collide_at_the_root() {
    let star = make_star(3);
    let r = step(&star, DuplexMode::Full, &[Action::Listen, fnf(1), fnf(2)]);
    assert_eq!(r.outcomes[0], Outcome::Silence);
    assert_eq!(r.collisions, [0]);
    let r = step(&star, DuplexMode::Full, &[Action::Listen, fnf(1), Action::Listen]);
    assert_eq!(r.outcomes[0], Outcome::Received { from: 1 });
    assert!(r.collisions.is_empty());
}

#[test]
fn duplex_decides_reception_while_transmitting() {
    // 2 → 1 → 0
    let path = make_path(3);
    let actions = [Action::Listen, fnf(1), fnf(2)];
    assert_eq!(step(&path, DuplexMode::Half, &actions).outcomes[1], Outcome::Silence);
    assert_eq!(step(&path, DuplexMode::Full, &actions).outcomes[1], Outcome::Received { from: 2 });
    let muted = [Action::Listen, Action::Mute, fnf(2)];
    assert_eq!(step(&path, DuplexMode::Half, &muted).outcomes[1], Outcome::Silence);
    assert_eq!(step(&path, DuplexMode::Full, &muted).outcomes[1], Outcome::Received { from: 2 });
}

#[test]
fn root_never_transmits() {
    let path = make_path(2);
    let r = step(&path, DuplexMode::Full, &[fnf(0), Action::Listen]);
    assert!(r.outcomes.iter().all(|o| *o == Outcome::Silence));
}

type Log = Arc<Mutex<Vec<String>>>;

/// Leaves transmit at the steps in `script`; every node logs what it sees.
struct Scripted {
    script: Vec<u64>,
    log: Log,
}

struct ScriptedNode {
    script: Vec<u64>,
    label: usize,
    log: Log,
}

impl Protocol for Scripted {
    fn id(&self) -> &str {
        "scripted"
    }
    fn message_model(&self) -> MessageModel {
        MessageModel::FireAndForward
    }
    fn instantiate(&self, init: NodeInit) -> Box<dyn NodeProtocol> {
        Box::new(ScriptedNode { script: self.script.clone(), label: init.label, log: self.log.clone() })
    }
    fn horizon(&self, _n: usize) -> u64 {
        10
    }
}

impl NodeProtocol for ScriptedNode {
    fn act(&mut self, view: &NodeView) -> Action {
        self.log.lock().unwrap().push(format!("{view:?}"));
        if self.label >= 2 && self.script.contains(&view.time) {
            fnf(self.label)
        } else {
            Action::Listen
        }
    }
    fn on_receive(&mut self, step: u64, message: &Message) {
        self.log.lock().unwrap().push(format!("{} got {message:?} at {step}", self.label));
    }
}

#[test]
fn collision_looks_like_silence() {
    // 0 ← 1 ← {2, 3}: node 1 either sees both leaves collide or nothing
    let tree = Tree::with_identity_labels(vec![0, 0, 1, 1]).unwrap();
    let logs: Vec<Vec<String>> = [vec![0, 3], vec![]]
        .into_iter()
        .map(|script| {
            let log = Log::default();
            let p = Scripted { script, log: log.clone() };
            let mut sim = Simulation::new(&p, &tree, RunConfig::new(DuplexMode::Half, 5, 0).to_max());
            while !sim.finished() {
                sim.advance().unwrap();
            }
            let entries = log.lock().unwrap().clone();
            entries.into_iter().filter(|e| e.contains("label: 1,") || e.starts_with("1 got")).collect()
        })
        .collect();
    assert!(!logs[0].is_empty());
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn a_leaf_acts_the_same_in_any_tree() {
    // a leaf hears nothing, so its actions depend on its label alone
    let n = 24;
    let p = unb_dtree1(n);
    let a = TreeFamily::Star.generate(n, 1);
    let b = TreeFamily::Random.generate(n, 2);
    let times = |tree: &Tree, v: usize| -> Vec<u64> {
        let trace = run(&p, tree, RunConfig::new(DuplexMode::Half, p.horizon(n), 0).to_max().recording()).unwrap();
        trace.steps.iter().filter(|s| s.transmitters.contains(&v)).map(|s| s.step).collect()
    };
    for v in (0..n).filter(|&v| b.is_leaf(v) && a.node_of_label(b.label(v)) != a.root()) {
        let label = b.label(v);
        assert_eq!(times(&a, a.node_of_label(label)), times(&b, v), "label {label}");
    }
}

#[test]
fn same_seed_same_trace() {
    for id in PROTOCOL_IDS {
        let p = by_id(id, 40, ProtocolParams::default()).unwrap();
        let tree = TreeFamily::Random.generate(40, 8);
        let cfg = RunConfig::new(DuplexMode::Half, p.horizon(40), 3).recording();
        let first = run(p.as_ref(), &tree, cfg).unwrap();
        assert_eq!(first, run(p.as_ref(), &tree, cfg).unwrap(), "{id}");
    }
    let tree = TreeFamily::Random.generate(40, 8);
    let rt = by_id("rtree", 40, ProtocolParams::default()).unwrap();
    let a = run(rt.as_ref(), &tree, RunConfig::new(DuplexMode::Full, 4000, 1).recording()).unwrap();
    let b = run(rt.as_ref(), &tree, RunConfig::new(DuplexMode::Full, 4000, 2).recording()).unwrap();
    assert_ne!(a.steps, b.steps);
}

#[test]
fn every_delivery_has_a_chain_of_receptions() {
    for mode in [DuplexMode::Full, DuplexMode::Half] {
        for id in PROTOCOL_IDS {
            let n = 30;
            let p = by_id(id, n, ProtocolParams { mode, ..ProtocolParams::default() }).unwrap();
            let tree = TreeFamily::Caterpillar.generate(n, 5);
            let trace = run(p.as_ref(), &tree, RunConfig::new(mode, p.horizon(n), 0).recording()).unwrap();
            for r in trace.delivered() {
                let chain = trace.delivery_chain(&tree, r).unwrap_or_else(|| panic!("{id}: no chain for {r}"));
                if let Some(&(step, node)) = chain.last() {
                    assert_eq!(node, tree.root());
                    assert_eq!(Some(step + 1), trace.delivery[r]);
                }
            }
            assert_eq!(trace.completion, trace.delivery.iter().copied().max().flatten());
        }
    }
}

#[test]
fn inbox_is_what_was_received() {
    let tree = make_path(3);
    let p = by_id("rr-bnd", 3, ProtocolParams::default()).unwrap();
    let trace = run(p.as_ref(), &tree, RunConfig::new(DuplexMode::Half, 9, 0).recording()).unwrap();
    let inbox: Vec<_> = trace.inbox(1).into_iter().map(|(s, m)| (s, m.clone())).collect();
    let bounded = |rumor| Message::Bounded { rumor, aux: Aux::default() };
    assert_eq!(inbox, [(2, bounded(2))]);
    assert_eq!(trace.delivery, [Some(0), Some(2), Some(6)]);
}

struct Cheater(Message);

struct CheaterNode(Message);

impl Protocol for Cheater {
    fn id(&self) -> &str {
        "cheater"
    }
    fn message_model(&self) -> MessageModel {
        match self.0 {
            Message::Unbounded { .. } => MessageModel::Bounded,
            _ => MessageModel::FireAndForward,
        }
    }
    fn instantiate(&self, _init: NodeInit) -> Box<dyn NodeProtocol> {
        Box::new(CheaterNode(self.0.clone()))
    }
    fn horizon(&self, _n: usize) -> u64 {
        1
    }
}

impl NodeProtocol for CheaterNode {
    fn act(&mut self, _view: &NodeView) -> Action {
        Action::Transmit(self.0.clone())
    }
    fn on_receive(&mut self, _step: u64, _message: &Message) {}
}

#[test]
fn message_guards() {
    let tree = make_path(2);
    let cfg = RunConfig::new(DuplexMode::Half, 3, 0);
    let big = Message::Unbounded { rumors: RumorSet::singleton(2, 0), aux: Aux::default() };
    assert!(matches!(
        run(&Cheater(big), &tree, cfg),
        Err(EngineError::ProtocolViolatedMessageBound { node: 1, step: 0, .. })
    ));
    assert_eq!(
        run(&Cheater(Message::Fnf { rumor: 0 }), &tree, cfg),
        Err(EngineError::FireAndForwardViolation { node: 1, step: 0, rumor: 0 })
    );
    assert_eq!(run(&Cheater(Message::Fnf { rumor: 0 }), &tree, RunConfig::new(DuplexMode::Half, 0, 0)), Err(EngineError::NoSteps));
}

#[test]
fn incomplete_runs_have_no_completion() {
    let tree = make_path(5);
    let p = by_id("rr-unb", 5, ProtocolParams::default()).unwrap();
    let trace = run(p.as_ref(), &tree, RunConfig::new(DuplexMode::Half, 3, 0)).unwrap();
    assert_eq!(trace.completion, None);
    assert_eq!(trace.steps_run, 3);
}
