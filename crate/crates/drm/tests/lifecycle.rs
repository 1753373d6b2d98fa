mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use mixsys_drm::license::LicenseError;
use mixsys_drm::store::{CONTENT_SERVER_FILE, LICENSE_SERVER_FILE};
use mixsys_drm::{ContentItem, Denial, DeviceClass, DrmError, DrmSystem, ProductionSuite, TestSuite, UsageRules};

fn rules() -> UsageRules {
    UsageRules { expires_at: Some(10), max_plays: None, device_class: None }
}

#[test]
fn submit_persists_ciphertext_only() {
    let mut sys = DrmSystem::new(Arc::new(TestSuite), 1);
    let entry = sys.submit_content(common::item("a"), rules()).unwrap().clone();
    assert_eq!(entry.rules, rules());
    assert!(!entry.body.windows(8).any(|w| w == b"a master"));
    assert!(sys.license_server().keys.contains_key("a"));
    let err = sys.submit_content(common::item("a"), rules()).unwrap_err();
    assert!(matches!(err, DrmError::DuplicateContent(id) if id == "a"));
}

#[test]
fn empty_plaintext_still_authenticated() {
    let mut sys = DrmSystem::new(Arc::new(ProductionSuite), 1);
    let item = ContentItem { content_id: "empty".into(), plaintext: Vec::new(), renditions: BTreeMap::new() };
    let body = sys.submit_content(item, rules()).unwrap().body.clone();
    // nonce + tag, no payload bytes
    assert_eq!(body.len(), 12 + 16);
}

#[test]
fn submit_rejects_invalid_rules() {
    let mut sys = DrmSystem::new(Arc::new(TestSuite), 1);
    let err = sys.submit_content(common::item("a"), UsageRules::default()).unwrap_err();
    assert!(matches!(err, DrmError::InvalidRules(LicenseError::EmptyRules)));
    assert!(sys.content_server().catalog.is_empty());
}

#[test]
fn duplicate_user() {
    let mut sys = DrmSystem::new(Arc::new(TestSuite), 1);
    sys.register_user(common::profile("alice", DeviceClass::Mobile)).unwrap();
    let err = sys.register_user(common::profile("alice", DeviceClass::Desktop)).unwrap_err();
    assert_eq!(err.category(), "DuplicateUser");
}

#[test]
fn renew_replaces_and_revokes() {
    let (mut sys, mut alice, _) = common::world(Arc::new(TestSuite), rules());
    let issued = sys.run_issuance_protocol("alice", "track").unwrap();
    let late = 20;
    assert_eq!(sys.consume(&mut alice, &issued.license, &issued.ciphertext, late, DeviceClass::Mobile), Err(Denial::Expired));

    let renewed = sys.renew_license(&issued.license, UsageRules { expires_at: Some(30), ..rules() }).unwrap();
    assert_ne!(renewed.license_id, issued.license.license_id);
    assert_eq!((renewed.content_id.as_str(), renewed.user_id.as_str()), ("track", "alice"));
    assert!(renewed.verify(sys.suite().as_ref(), sys.verifying_key()));
    assert!(sys.license_server().revoked.contains(&issued.license.license_id));

    assert!(sys.consume(&mut alice, &renewed, &issued.ciphertext, late, DeviceClass::Mobile).is_ok());
    assert_eq!(sys.consume(&mut alice, &issued.license, &issued.ciphertext, 0, DeviceClass::Mobile), Err(Denial::Revoked));
    assert!(matches!(sys.renew_license(&issued.license, rules()), Err(DrmError::Revoked(_))));
}

#[test]
fn renew_error_cases() {
    let (mut sys, _, _) = common::world(Arc::new(TestSuite), rules());
    let issued = sys.run_issuance_protocol("alice", "track").unwrap();
    let err = sys.renew_license(&issued.license, UsageRules::default()).unwrap_err();
    assert_eq!(err.category(), "InvalidRules");

    let mut tampered = issued.license.clone();
    tampered.rules.expires_at = Some(1_000);
    assert_eq!(sys.renew_license(&tampered, rules()).unwrap_err().category(), "BadSignature");

    // Signed by a different server.
    let (mut other, _, _) = common::world_seeded(Arc::new(TestSuite), rules(), 12);
    let foreign = other.run_issuance_protocol("alice", "track").unwrap().license;
    assert_eq!(sys.renew_license(&foreign, rules()).unwrap_err().category(), "BadSignature");

    // Correctly signed but never recorded as issued.
    let mut forged = issued.license.clone();
    forged.license_id = "lic-999999".into();
    forged.sign(sys.suite().as_ref(), &sys.license_server().signing.private).unwrap();
    assert_eq!(sys.renew_license(&forged, rules()).unwrap_err().category(), "UnknownLicense");
}

#[test]
fn usage_report_counts_events() {
    let (mut sys, mut alice, _) = common::world(Arc::new(TestSuite), UsageRules { max_plays: Some(2), ..Default::default() });
    let zero = sys.usage_report("track").unwrap();
    assert_eq!((zero.downloads, zero.consumptions, zero.total_denials()), (0, 0, 0));

    let issued = sys.run_issuance_protocol("alice", "track").unwrap();
    for _ in 0..3 {
        let _ = sys.consume(&mut alice, &issued.license, &issued.ciphertext, 0, DeviceClass::Mobile);
    }
    let report = sys.usage_report("track").unwrap();
    assert_eq!(report.downloads, 1);
    assert_eq!(report.consumptions, 2);
    assert_eq!(report.denials, BTreeMap::from([(Denial::PlaysExhausted, 1)]));
    assert_eq!(report.total_denials(), 1);
    assert_eq!(sys.usage_report("nope").unwrap_err().category(), "UnknownContent");
}

#[test]
fn state_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let (license, ciphertext) = {
        let mut sys = DrmSystem::open(dir.path(), Arc::new(ProductionSuite), 5).unwrap();
        sys.submit_content(common::item("track"), rules()).unwrap();
        let mut alice = sys.register_user(common::profile("alice", DeviceClass::Mobile)).unwrap();
        let issued = sys.run_issuance_protocol("alice", "track").unwrap();
        sys.consume(&mut alice, &issued.license, &issued.ciphertext, 0, DeviceClass::Mobile).unwrap();
        (issued.license, issued.ciphertext)
    };
    assert!(dir.path().join(CONTENT_SERVER_FILE).exists());
    assert!(dir.path().join(LICENSE_SERVER_FILE).exists());

    let mut sys = DrmSystem::open(dir.path(), Arc::new(ProductionSuite), 99).unwrap();
    assert!(license.verify(sys.suite().as_ref(), sys.verifying_key()));
    let report = sys.usage_report("track").unwrap();
    assert_eq!((report.downloads, report.consumptions), (1, 1));
    assert!(matches!(sys.register_user(common::profile("alice", DeviceClass::Mobile)), Err(DrmError::DuplicateUser(_))));
    let renewed = sys.renew_license(&license, UsageRules { expires_at: Some(50), ..rules() }).unwrap();
    assert_eq!(renewed.license_id, "lic-000002");
    let _ = ciphertext;
}
