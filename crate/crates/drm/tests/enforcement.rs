mod common;

use std::sync::Arc;

use mixsys_drm::{DeviceClass, Denial, TestSuite, UsageRules};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
enum Tamper {
    Clean,
    Signature,
    WrongUser,
}

/// Oracle: the first failing predicate in check order, if any.
fn expected(tamper: Tamper, expired: bool, exhausted: bool, wrong_device: bool) -> Option<Denial> {
    match tamper {
        Tamper::Signature => Some(Denial::BadSignature),
        Tamper::WrongUser => Some(Denial::WrongUser),
        Tamper::Clean if expired => Some(Denial::Expired),
        Tamper::Clean if exhausted => Some(Denial::PlaysExhausted),
        Tamper::Clean if wrong_device => Some(Denial::WrongDevice),
        Tamper::Clean => None,
    }
}

#[test]
fn rule_matrix() {
    let mut cases = 0;
    for expired in [false, true] {
        for exhausted in [false, true] {
            for wrong_device in [false, true] {
                for tamper in [Tamper::Clean, Tamper::Signature, Tamper::WrongUser] {
                    let rules = UsageRules {
                        expires_at: Some(100),
                        max_plays: Some(if exhausted { 1 } else { 2 }),
                        device_class: Some(DeviceClass::Mobile),
                    };
                    let (mut sys, mut alice, mut bob) = common::world(Arc::new(TestSuite), rules);
                    let issued = sys.run_issuance_protocol("alice", "track").unwrap();
                    let mut license = issued.license.clone();
                    sys.consume(&mut alice, &license, &issued.ciphertext, 10, DeviceClass::Mobile).unwrap();
                    if let Tamper::Signature = tamper {
                        license.signature[0] ^= 0x01;
                    }
                    let reader = if let Tamper::WrongUser = tamper { &mut bob } else { &mut alice };
                    let now = if expired { 101 } else { 100 };
                    let device = if wrong_device { DeviceClass::Desktop } else { DeviceClass::Mobile };
                    let before = reader.state_value();
                    let verdict = sys.consume(reader, &license, &issued.ciphertext, now, device);
                    let want = expected(tamper, expired, exhausted, wrong_device);
                    match want {
                        None => {
                            assert_eq!(verdict.unwrap(), b"track mobile");
                            assert_eq!(reader.plays_used(&license.license_id), 2);
                        }
                        Some(d) => {
                            assert_eq!(verdict, Err(d), "{expired} {exhausted} {wrong_device} {tamper:?}");
                            assert_eq!(reader.state_value(), before);
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    assert_eq!(cases, 24);
}

#[test]
fn plays_are_bounded() {
    let rules = UsageRules { max_plays: Some(2), ..Default::default() };
    let (mut sys, mut alice, _) = common::world(Arc::new(TestSuite), rules);
    let issued = sys.run_issuance_protocol("alice", "track").unwrap();
    for _ in 0..2 {
        sys.consume(&mut alice, &issued.license, &issued.ciphertext, 0, DeviceClass::Desktop).unwrap();
    }
    let third = sys.consume(&mut alice, &issued.license, &issued.ciphertext, 0, DeviceClass::Desktop);
    assert_eq!(third, Err(Denial::PlaysExhausted));
    assert_eq!(alice.plays_used(&issued.license.license_id), 2);
}

#[test]
fn corrupted_content_is_a_decrypt_failure() {
    let rules = UsageRules { max_plays: Some(5), ..Default::default() };
    let (mut sys, mut alice, _) = common::world(Arc::new(TestSuite), rules);
    let issued = sys.run_issuance_protocol("alice", "track").unwrap();
    let mut ct = issued.ciphertext.clone();
    let last = ct.len() - 1;
    ct[last] ^= 0x80;
    assert_eq!(sys.consume(&mut alice, &issued.license, &ct, 0, DeviceClass::Mobile), Err(Denial::DecryptFailure));
    assert_eq!(alice.plays_used(&issued.license.license_id), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Consumption succeeds iff every rule predicate holds, probed around
    /// each boundary.
    #[test]
    fn verdict_matches_rule_predicates(
        expires in proptest::option::of(0i64..20),
        max_plays in proptest::option::of(1u32..4),
        device_rule in proptest::option::of(0usize..3),
        now_offset in -2i64..3,
        prior in 0u32..4,
        device in 0usize..3,
    ) {
        let device_rule = device_rule.map(|i| DeviceClass::ALL[i]);
        let device = DeviceClass::ALL[device];
        let rules = UsageRules { expires_at: expires, max_plays, device_class: device_rule };
        prop_assume!(rules.validate().is_ok());
        let (mut sys, mut alice, _) = common::world(Arc::new(TestSuite), rules);
        let issued = sys.run_issuance_protocol("alice", "track").unwrap();
        let now = expires.unwrap_or(10) + now_offset;
        // Earlier plays happen at time 0 on an allowed device.
        let allowed = device_rule.unwrap_or(DeviceClass::Desktop);
        let mut used = 0;
        for _ in 0..prior {
            if sys.consume(&mut alice, &issued.license, &issued.ciphertext, 0, allowed).is_ok() {
                used += 1;
            }
        }
        let ok = expires.is_none_or(|t| now <= t)
            && max_plays.is_none_or(|m| used < m)
            && device_rule.is_none_or(|d| d == device);
        let before = alice.state_value();
        let verdict = sys.consume(&mut alice, &issued.license, &issued.ciphertext, now, device);
        prop_assert_eq!(verdict.is_ok(), ok);
        if ok {
            prop_assert_eq!(alice.plays_used(&issued.license.license_id), used + 1);
        } else {
            prop_assert_eq!(alice.state_value(), before);
        }
    }
}
