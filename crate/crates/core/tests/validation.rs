mod common;

use common::{fixture, random_model, Options};
use mixsys_core::graph::{reachable_components, validate_system, ConnectorKind, SchedulingConnector};
use mixsys_core::model::validate_component;
use mixsys_core::sysdesc::parse_system;
use mixsys_core::{BehaviorRegistry, ComponentSpec, Decimal, SystemModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn categories(m: &SystemModel) -> Vec<&'static str> {
    match validate_system(m, &BehaviorRegistry::with_builtins()) {
        Ok(_) => vec![],
        Err(errors) => errors.iter().map(|e| e.category()).collect(),
    }
}

fn fork_join() -> SystemModel {
    parse_system("fj", &fixture("fork_join.f4ms"), &BehaviorRegistry::with_builtins()).unwrap()
}

#[test]
fn deleting_a_feeding_edge_leaves_input_unfed() {
    let mut m = fork_join();
    m.ig.edges.retain(|e| e.to.port != "left");
    assert_eq!(categories(&m), ["UnfedInput"]);
}

#[test]
fn renaming_a_port_breaks_its_edges() {
    let mut m = fork_join();
    let b = m.components.get_mut("b").unwrap();
    b.ports.iter_mut().find(|p| p.name == "in").unwrap().name = "input".into();
    // b's new port is unfed and the old edge dangles.
    let cats = categories(&m);
    assert!(cats.contains(&"UnknownPort"), "{cats:?}");
    assert!(cats.contains(&"UnfedInput"), "{cats:?}");
}

#[test]
fn dropping_a_sync_source_breaks_arity() {
    let mut m = fork_join();
    let join = m.spg.connectors.iter_mut().find(|c| c.kind == ConnectorKind::Synchronization).unwrap();
    join.sources.pop();
    assert!(categories(&m).contains(&"ArityViolation"));
}

#[test]
fn sync_with_unreachable_source_is_not_reached() {
    let mut m = fork_join();
    m.spg.connectors = vec![
        SchedulingConnector::seq("ab", "a", "b"),
        SchedulingConnector::sync("j", &["b", "c"], "d"),
    ];
    let reached = reachable_components(&m.spg);
    assert!(reached.contains("b"));
    assert!(!reached.contains("c"));
    assert!(!reached.contains("d"));
}

#[test]
fn component_validation_collects_everything() {
    let reg = BehaviorRegistry::with_builtins();
    let m = fork_join();
    let good = m.components["b"].clone();
    assert_eq!(validate_component(&good, &reg).unwrap(), good);
    let again = validate_component(&good, &reg).unwrap();
    assert_eq!(validate_component(&again, &reg).unwrap(), again);

    let mut bad: ComponentSpec = good.clone();
    bad.allowed_kinds.clear();
    bad.ports.push(bad.ports[1].clone());
    bad.costs.sw_time = Decimal::from_int(-1);
    bad.behavior = "missing".into();
    let errs = validate_component(&bad, &reg).unwrap_err();
    let mut cats: Vec<_> = errs.iter().map(|e| e.category()).collect();
    cats.sort();
    assert_eq!(cats, ["DuplicatePort", "EmptyKinds", "NegativeCost", "UnknownBehavior"]);
}

fn gen(seed: u64) -> SystemModel {
    random_model(seed, Options { max_components: 12, choices: true, ports: true })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn valid_models_reach_everything(seed in any::<u64>()) {
        let m = gen(seed);
        prop_assert!(categories(&m).is_empty());
        prop_assert_eq!(reachable_components(&m.spg), m.spg.fsc.clone());
        for c in &m.spg.connectors {
            let (s, t) = (c.sources.len(), c.targets.len());
            let ok = match c.kind {
                ConnectorKind::Sequence => s == 1 && t == 1,
                ConnectorKind::Parallel | ConnectorKind::ExclusiveChoice => s == 1 && t >= 2,
                ConnectorKind::Synchronization => s >= 2 && t == 1,
            };
            prop_assert!(ok);
        }
    }

    #[test]
    fn adding_a_connector_never_shrinks_reach(seed in any::<u64>(), pick in any::<u64>()) {
        let mut m = gen(seed);
        let before = reachable_components(&m.spg);
        let ids: Vec<String> = m.components.keys().cloned().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(pick);
        let a = &ids[rng.gen_range(0..ids.len())];
        let b = &ids[rng.gen_range(0..ids.len())];
        m.spg.connectors.push(SchedulingConnector::seq("extra", a, b));
        prop_assert!(reachable_components(&m.spg).is_superset(&before));
    }

    #[test]
    fn one_broken_clause_is_reported(seed in any::<u64>(), which in 0usize..4) {
        let mut m = gen(seed);
        let expected = match which {
            0 => {
                let Some(c) = m.spg.connectors.first_mut() else { return Ok(()) };
                c.targets.push("ghost".into());
                "UnknownComponent"
            }
            1 => {
                let Some(e) = m.ig.edges.first_mut() else { return Ok(()) };
                e.to.port = "nope".into();
                "UnknownPort"
            }
            2 => {
                let Some(c) = m.spg.connectors.iter_mut().find(|c| c.kind == ConnectorKind::Synchronization) else {
                    return Ok(());
                };
                c.sources.truncate(1);
                "ArityViolation"
            }
            _ => {
                let Some(c) = m.spg.connectors.iter_mut().find(|c| c.kind == ConnectorKind::ExclusiveChoice) else {
                    return Ok(());
                };
                let t = c.targets[0].clone();
                c.labels.remove(&t);
                "MissingLabel"
            }
        };
        let cats = categories(&m);
        prop_assert!(cats.contains(&expected), "{expected} not in {cats:?}");
    }
}
