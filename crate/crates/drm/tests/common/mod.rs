#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use mixsys_drm::crypto::CryptoSuite;
use mixsys_drm::{ContentItem, DeviceClass, DrmSystem, Reader, UsageRules, UserProfile};

pub fn profile(user_id: &str, device: DeviceClass) -> UserProfile {
    UserProfile {
        user_id: user_id.into(),
        name: user_id.to_uppercase(),
        device,
        payment_token: format!("token-{user_id}"),
    }
}

pub fn item(content_id: &str) -> ContentItem {
    ContentItem {
        content_id: content_id.into(),
        plaintext: format!("{content_id} master").into_bytes(),
        renditions: BTreeMap::from([(DeviceClass::Mobile, format!("{content_id} mobile").into_bytes())]),
    }
}

/// System with one content item under `rules`, plus alice (mobile) and bob
/// (desktop).
pub fn world(suite: Arc<dyn CryptoSuite>, rules: UsageRules) -> (DrmSystem, Reader, Reader) {
    world_seeded(suite, rules, 11)
}

pub fn world_seeded(suite: Arc<dyn CryptoSuite>, rules: UsageRules, seed: u64) -> (DrmSystem, Reader, Reader) {
    let mut sys = DrmSystem::new(suite, seed);
    sys.submit_content(item("track"), rules).unwrap();
    let alice = sys.register_user(profile("alice", DeviceClass::Mobile)).unwrap();
    let bob = sys.register_user(profile("bob", DeviceClass::Desktop)).unwrap();
    (sys, alice, bob)
}
