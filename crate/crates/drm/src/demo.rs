//! Bundled demonstration data and the scripted scenarios behind
//! `mixsys demo-drm`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use mixsys_core::engine::InitialInputs;
use mixsys_core::BehaviorRegistry;

use crate::behaviors;
use crate::crypto::ProductionSuite;
use crate::license::{DeviceClass, UsageRules};
use crate::reader::{Denial, Reader};
use crate::store::{ContentItem, UserProfile};
use crate::system::{issuance_inputs, protocol_transfers, DrmError, DrmSystem, Issued};

pub const DEMO_CONTENT: &str = "song-001";
pub const DEMO_USER: &str = "alice";
pub const DEMO_DEVICE: DeviceClass = DeviceClass::Mobile;
pub const DEMO_SEED: u64 = 7;

pub fn demo_rules() -> UsageRules {
    UsageRules { expires_at: Some(100), max_plays: Some(3), device_class: None }
}

pub fn demo_item() -> ContentItem {
    ContentItem {
        content_id: DEMO_CONTENT.into(),
        plaintext: b"song-001 master recording".to_vec(),
        renditions: BTreeMap::from([
            (DeviceClass::Mobile, b"song-001 mobile cut".to_vec()),
            (DeviceClass::ReaderDevice, b"song-001 reader edition".to_vec()),
        ]),
    }
}

pub fn demo_profile() -> UserProfile {
    UserProfile {
        user_id: DEMO_USER.into(),
        name: "Alice".into(),
        device: DEMO_DEVICE,
        payment_token: "token-0000".into(),
    }
}

/// A system with the demo content submitted and the demo user registered.
pub fn demo_system() -> (DrmSystem, Reader) {
    let mut sys = DrmSystem::new(Arc::new(ProductionSuite), DEMO_SEED);
    sys.submit_content(demo_item(), demo_rules()).expect("fresh system accepts demo content");
    let reader = sys.register_user(demo_profile()).expect("fresh system accepts demo user");
    (sys, reader)
}

/// Built-in behaviors plus the DRM behaviors bound to the demo system.
pub fn demo_registry() -> BehaviorRegistry {
    let (sys, _) = demo_system();
    behaviors::drm_registry(sys.env())
}

/// Initial inputs for a run of the bundled fixture.
pub fn demo_inputs() -> InitialInputs {
    issuance_inputs(&demo_profile(), DEMO_CONTENT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Issue,
    Consume,
    Renew,
    Report,
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "issue" => Ok(Scenario::Issue),
            "consume" => Ok(Scenario::Consume),
            "renew" => Ok(Scenario::Renew),
            "report" => Ok(Scenario::Report),
            other => Err(format!("unknown scenario `{other}` (expected issue, consume, renew or report)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Denied(Denial),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Ok => f.write_str("result=ok"),
            Verdict::Denied(d) => write!(f, "result=denied:{d}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub narrative: Vec<String>,
    pub verdict: Verdict,
}

fn issue(sys: &mut DrmSystem, out: &mut Vec<String>) -> Result<Issued, DrmError> {
    let issued = sys.run_issuance_protocol(DEMO_USER, DEMO_CONTENT)?;
    for (i, e) in protocol_transfers(&issued.trace).into_iter().enumerate() {
        out.push(format!(
            "step {}: {} -> {} {} ({} bytes) at t={}",
            i + 1,
            e.detail_str("from").unwrap_or("?"),
            e.detail_str("to").unwrap_or("?"),
            e.detail_str("tag").unwrap_or("?"),
            e.detail.get("bytes").and_then(|b| b.as_num()).unwrap_or("?"),
            e.time.to_fixed6(),
        ));
    }
    out.push(format!("issued {} for {} on {}", issued.license.license_id, DEMO_USER, DEMO_CONTENT));
    Ok(issued)
}

fn play(
    sys: &mut DrmSystem,
    reader: &mut Reader,
    issued_license: &crate::license::License,
    ciphertext: &[u8],
    now: i64,
    out: &mut Vec<String>,
) -> Verdict {
    match sys.consume(reader, issued_license, ciphertext, now, DEMO_DEVICE) {
        Ok(plain) => {
            out.push(format!(
                "consume {} at now={now}: ok, {} bytes, plays_used={}",
                issued_license.license_id,
                plain.len(),
                reader.plays_used(&issued_license.license_id)
            ));
            Verdict::Ok
        }
        Err(d) => {
            out.push(format!("consume {} at now={now}: denied {d}", issued_license.license_id));
            Verdict::Denied(d)
        }
    }
}

/// Runs a scripted scenario on a fresh demo system. Errors are reported for
/// scenarios whose success is expected; a consumption denial in the
/// `consume` scenario is a verdict, not an error.
pub fn run_scenario(scenario: Scenario, now: i64) -> Result<ScenarioOutput, DrmError> {
    let (mut sys, mut reader) = demo_system();
    let mut out = vec![format!("catalog: {DEMO_CONTENT} rules {}", demo_rules().to_value().to_compact())];
    let issued = issue(&mut sys, &mut out)?;
    let verdict = match scenario {
        Scenario::Issue => Verdict::Ok,
        Scenario::Consume => play(&mut sys, &mut reader, &issued.license, &issued.ciphertext, now, &mut out),
        Scenario::Renew => {
            let rules = UsageRules { expires_at: Some(now.saturating_add(100)), ..demo_rules() };
            let renewed = sys.renew_license(&issued.license, rules)?;
            out.push(format!(
                "renewed {} as {} with rules {}",
                issued.license.license_id,
                renewed.license_id,
                renewed.rules.to_value().to_compact()
            ));
            play(&mut sys, &mut reader, &issued.license, &issued.ciphertext, now, &mut out);
            match play(&mut sys, &mut reader, &renewed, &issued.ciphertext, now, &mut out) {
                Verdict::Ok => Verdict::Ok,
                Verdict::Denied(d) => return Err(DrmError::Denied(d)),
            }
        }
        Scenario::Report => {
            for _ in 0..2 {
                play(&mut sys, &mut reader, &issued.license, &issued.ciphertext, now, &mut out);
            }
            let report = sys.usage_report(DEMO_CONTENT)?;
            out.push(format!("usage {DEMO_CONTENT}: {}", report.to_value().to_compact()));
            Verdict::Ok
        }
    };
    Ok(ScenarioOutput { narrative: out, verdict })
}
