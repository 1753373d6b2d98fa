mod common;

use std::sync::Arc;

use mixsys_core::engine::{parse_trace_lines, trace_export, EventKind, Mapping, TraceFormat};
use mixsys_core::graph::{compatibility_report, EdgeStatus};
use mixsys_core::partition::{evaluate_mapping, Constraints, PartitionObjective, Scenario};
use mixsys_core::sysdesc::{parse_system, serialize_system};
use mixsys_core::{Decimal, Kind};
use mixsys_drm::behaviors::BEHAVIOR_NAMES;
use mixsys_drm::demo;
use mixsys_drm::system::{fixture_model, protocol_transfers, FIXTURE, PROTOCOL_TAGS};
use mixsys_drm::{DeviceClass, DrmError, ProductionSuite, TestSuite, UsageRules};

fn rules() -> UsageRules {
    UsageRules { expires_at: Some(50), max_plays: Some(3), device_class: None }
}

#[test]
fn fixture_is_valid_and_complete() {
    let model = fixture_model();
    assert_eq!(model.components.len(), 10);
    let mut behaviors: Vec<&str> = model.components.values().map(|c| c.behavior.as_str()).collect();
    behaviors.sort();
    let mut names = BEHAVIOR_NAMES.to_vec();
    names.sort();
    assert_eq!(behaviors, names);
    let report = compatibility_report(&model);
    assert_eq!(report.len(), 14);
    for (edge, status) in report {
        assert_eq!(status, EdgeStatus::TagOk, "{edge:?}");
    }
    let reparsed = parse_system("again", &serialize_system(&model), &demo::demo_registry()).unwrap();
    assert_eq!(reparsed, model);
    let _ = FIXTURE;
}

#[test]
fn six_protocol_steps_in_order() {
    for suite in [Arc::new(TestSuite) as Arc<_>, Arc::new(ProductionSuite) as Arc<_>] {
        let (mut sys, _, _) = common::world(suite, rules());
        let issued = sys.run_issuance_protocol("alice", "track").unwrap();
        let steps = protocol_transfers(&issued.trace);
        let tags: Vec<&str> = steps.iter().map(|e| e.detail_str("tag").unwrap()).collect();
        assert_eq!(tags, PROTOCOL_TAGS);
        let route: Vec<(&str, &str)> =
            steps.iter().map(|e| (e.detail_str("from").unwrap(), e.detail_str("to").unwrap())).collect();
        assert_eq!(
            route,
            [
                ("browser.request", "webapp.request"),
                ("webapp.info_demand", "browser.info_demand"),
                ("browser.info", "webapp.info"),
                ("webapp.license_request", "license_srv.request"),
                ("license_enc.license", "webapp.license"),
                ("webapp.authorization", "browser.authorization"),
            ]
        );
        assert!(steps.windows(2).all(|w| w[0].time <= w[1].time));
        assert!(issued.license.verify(sys.suite().as_ref(), sys.verifying_key()));
        assert_eq!(issued.license.user_id, "alice");
        assert_eq!(issued.license.rules, rules());
    }
}

#[test]
fn license_generator_and_encryptor_both_fire() {
    let (mut sys, _, _) = common::world(Arc::new(TestSuite), rules());
    let issued = sys.run_issuance_protocol("alice", "track").unwrap();
    let counts = issued.trace.firing_counts();
    for c in ["license_srv", "license_gen", "license_enc", "database", "adapter", "drm_reader"] {
        assert_eq!(counts[c], 1, "{c}");
    }
    assert_eq!(counts["webapp"], 4);
    assert_eq!(counts["browser"], 3);
}

#[test]
fn precondition_errors() {
    let (mut sys, _, _) = common::world(Arc::new(TestSuite), rules());
    assert!(matches!(sys.run_issuance_protocol("alice", "nope"), Err(DrmError::UnknownContent(_))));
    assert!(matches!(sys.run_issuance_protocol("carol", "track"), Err(DrmError::UnknownUser(_))));
    assert_eq!(sys.usage_report("track").unwrap().downloads, 0);
}

#[test]
fn adapter_delivers_device_rendition() {
    let (mut sys, mut alice, mut bob) = common::world(Arc::new(TestSuite), rules());
    let mobile = sys.run_issuance_protocol("alice", "track").unwrap();
    assert_eq!(sys.consume(&mut alice, &mobile.license, &mobile.ciphertext, 0, DeviceClass::Mobile).unwrap(), b"track mobile");
    // bob's desktop has no rendition and gets the master.
    let desktop = sys.run_issuance_protocol("bob", "track").unwrap();
    assert_eq!(sys.consume(&mut bob, &desktop.license, &desktop.ciphertext, 0, DeviceClass::Desktop).unwrap(), b"track master");
    assert_ne!(mobile.license.license_id, desktop.license.license_id);
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

#[test]
fn content_key_stays_confined() {
    let dir = tempfile::tempdir().unwrap();
    let mut sys = mixsys_drm::DrmSystem::open(dir.path(), Arc::new(ProductionSuite), 3).unwrap();
    sys.submit_content(common::item("track"), rules()).unwrap();
    sys.register_user(common::profile("alice", DeviceClass::Mobile)).unwrap();
    let issued = sys.run_issuance_protocol("alice", "track").unwrap();
    let key = sys.license_server().keys["track"].clone();
    let key_hex = hex::encode(&key);

    let content_file = std::fs::read(dir.path().join(mixsys_drm::store::CONTENT_SERVER_FILE)).unwrap();
    let content_state = sys.content_server().to_value().to_pretty();
    let mut trace_text = trace_export(&issued.trace, TraceFormat::Lines);
    trace_text += &trace_export(&issued.trace, TraceFormat::Structured);
    let mut blobs = vec![content_file, content_state.into_bytes(), trace_text.into_bytes()];
    blobs.extend(issued.trace.outputs.values().map(|m| m.payload.clone()));
    for blob in &blobs {
        assert!(!contains(blob, &key));
        assert!(!contains(blob, key_hex.as_bytes()));
        assert!(!contains(blob, b"track master"));
    }
}

#[test]
fn issuance_trace_roundtrips_and_is_deterministic() {
    let run = || {
        let (mut sys, _) = demo::demo_system();
        trace_export(&sys.run_issuance_protocol(demo::DEMO_USER, demo::DEMO_CONTENT).unwrap().trace, TraceFormat::Lines)
    };
    let text = run();
    assert_eq!(run(), text);
    let events = parse_trace_lines(&text).unwrap();
    let again: String = events.iter().map(|e| e.to_line() + "\n").collect();
    assert_eq!(again, text);
    assert_eq!(events.iter().filter(|e| e.kind == EventKind::MessageTransfer).count(), 12);
}

fn costs_micros(model: &mixsys_core::graph::SystemModel, mapping: &Mapping, counts: &std::collections::BTreeMap<String, u64>) -> (i64, i64, i64) {
    let (mut area, mut energy, mut security) = (0, 0, 5);
    for (id, c) in &model.components {
        let hw = mapping.kind_of(id) == Some(Kind::Hardware);
        let n = counts.get(id).copied().unwrap_or(0) as i64;
        if hw {
            area += c.costs.hw_area.micros();
            energy += n * c.costs.hw_energy.micros();
            security = security.min(c.costs.hw_security);
        } else {
            energy += n * c.costs.sw_energy.micros();
            security = security.min(c.costs.sw_security);
        }
    }
    (area, energy, security)
}

#[test]
fn objective_matches_recomputation_from_trace() {
    let (sys, _) = demo::demo_system();
    let registry = demo::demo_registry();
    let scenario = Scenario { inputs: demo::demo_inputs(), ..Default::default() };
    let objective = PartitionObjective::new("1,1,1,1".parse().unwrap(), "1,1,1,1".parse().unwrap()).unwrap();
    let model = sys.model();
    for mapping in [Mapping::all_software(model), Mapping::all_hardware_where_allowed(model)] {
        let result =
            evaluate_mapping(model, &registry, &scenario, &mapping, &objective, &Constraints::unconstrained()).unwrap();
        // Re-derive everything from the exported trace text and the cost table.
        let config = mixsys_core::engine::SimConfig::new(mapping.clone());
        let trace = mixsys_core::engine::run(model, &registry, config, &scenario.inputs).unwrap();
        let events = parse_trace_lines(&trace_export(&trace, TraceFormat::Lines)).unwrap();
        let time = events.iter().map(|e| e.time.micros()).max().unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for e in events.iter().filter(|e| e.kind == EventKind::ComponentStart) {
            *counts.entry(e.subject.clone()).or_insert(0u64) += 1;
        }
        let (area, energy, security) = costs_micros(model, &mapping, &counts);
        let total = time + area + energy - security * 1_000_000;
        assert_eq!(result.objective_text(), Decimal::from_micros(total).to_fixed6());
        if mapping == Mapping::all_software(model) {
            assert_eq!(result.total_area, Decimal::ZERO);
            assert!(result.feasible);
        }
    }
}
