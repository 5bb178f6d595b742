//! Reproducibility and safety rails: bit-identical reruns, seed isolation,
//! the event-count circuit breaker, and bounded behavior on hostile
//! (sparse, lossy, tiny-TTL) networks.

use rrsim::engine::SimError;
use rrsim::harness::scenario::{Mode, ProtocolKind};
use rrsim::{ScenarioConfig, Sim};

fn report_text(cfg: ScenarioConfig) -> String {
    let mut sim = Sim::new(cfg).expect("valid config");
    sim.run().expect("run completes").to_text()
}

#[test]
fn same_seed_reproduces_the_run_bit_for_bit() {
    let mut cfg = ScenarioConfig::default();
    cfg.dynamics.max_speed = 5.0;
    cfg.dynamics.failure_fraction = 0.2;
    cfg.radio.loss = 0.05;
    let a = report_text(cfg.clone());
    let b = report_text(cfg);
    assert_eq!(a, b, "identical seeds must replay identically");

    let mut hl = ScenarioConfig::default();
    hl.mode = Mode::HighLevel;
    hl.protocol = ProtocolKind::GhtStar;
    let a = report_text(hl.clone());
    let b = report_text(hl);
    assert_eq!(a, b);
}

#[test]
fn master_seed_and_topology_seed_are_independent_streams() {
    // Changing only the placement seed must not perturb the workload
    // schedule: operation issue times are drawn from the master seed.
    // Records land in completion order (topology-dependent), so compare
    // the issue schedules as sorted multisets.
    let times = |topo_seed: u64| -> (Vec<f64>, Vec<f64>, String) {
        let mut cfg = ScenarioConfig::default();
        cfg.topology.seed = topo_seed;
        let mut sim = Sim::new(cfg).unwrap();
        let script = format!("{:?}", rrsim::harness::workload::gen_workload(&sim.cfg));
        let rep = sim.run().unwrap();
        let mut ins: Vec<f64> = rep.inserts.iter().map(|i| i.issued_at).collect();
        let mut look: Vec<f64> = rep.lookups.iter().map(|l| l.issued_at).collect();
        ins.sort_by(f64::total_cmp);
        look.sort_by(f64::total_cmp);
        (ins, look, script)
    };
    let (ins_a, look_a, script_a) = times(1);
    let (ins_b, look_b, script_b) = times(2);
    assert_eq!(ins_a, ins_b, "insert schedule shifted with the placement seed");
    assert_eq!(look_a, look_b, "lookup schedule shifted with the placement seed");
    assert_eq!(script_a, script_b, "keys/origins shifted with the placement seed");

    // And the converse: a different master seed on the same placement
    // produces a different run.
    let mut cfg = ScenarioConfig::default();
    cfg.seed = 999;
    let changed = report_text(cfg);
    let mut base = ScenarioConfig::default();
    base.seed = 11; // match nothing in particular, just != 999
    let baseline = report_text(base);
    assert_ne!(changed, baseline);
}

#[test]
fn event_cap_aborts_runaway_runs() {
    let cfg = ScenarioConfig::default();
    let mut sim = Sim::new(cfg).unwrap();
    sim.set_event_cap(1_000);
    match sim.run() {
        Err(SimError::EventCapExceeded { fired }) => assert!(fired >= 1_000),
        other => panic!("expected the event-cap breaker, got {other:?}"),
    }
}

#[test]
fn sparse_disconnected_network_terminates_cleanly() {
    // Range 40 m at this density leaves the graph partitioned; every
    // operation must still resolve (success, miss, or failure) and every
    // perimeter walk must respect the TTL budget.
    let mut cfg = ScenarioConfig::default();
    cfg.radio.range = 40.0;
    cfg.protocol = ProtocolKind::Ght;
    let issued_lookups = cfg.workload.lookups as usize;
    let issued_inserts = cfg.workload.insertions as usize;
    let ttl = cfg.net.ttl;
    let mut sim = Sim::new(cfg).unwrap();
    let rep = sim.run().unwrap();
    assert_eq!(rep.lookups.len(), issued_lookups, "every lookup resolved");
    assert_eq!(rep.inserts.len(), issued_inserts, "every insert resolved");
    assert!(rep.conservation_holds());
    assert!(rep.perimeter_walk_lengths.iter().all(|&l| l <= ttl));
}

#[test]
fn tiny_ttl_cannot_hang_the_simulator() {
    let mut cfg = ScenarioConfig::default();
    cfg.net.ttl = 8;
    cfg.protocol = ProtocolKind::Ght;
    let issued = cfg.workload.lookups as usize;
    let mut sim = Sim::new(cfg).unwrap();
    let rep = sim.run().unwrap();
    assert_eq!(rep.lookups.len(), issued);
    assert!(rep.ttl_drops > 0, "an 8-hop budget must bite at this scale");
}
