//! The ten DRMS components as engine behaviors.
//!
//! Payloads are compact tree text. Every behavior reads server state from a
//! shared snapshot ([`Env`]) taken when the scenario starts; nothing here
//! mutates server state; the caller commits results afterwards.

use std::sync::Arc;

use mixsys_core::tree::{self, Value};
use mixsys_core::{Behavior, BehaviorError, BehaviorRegistry, Invocation, Outcome};
use mixsys_core::model::PortSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::crypto::CryptoSuite;
use crate::license::{DeviceClass, License};
use crate::store::{ContentServer, LicenseServer, UserProfile};

pub const BEHAVIOR_NAMES: [&str; 10] = [
    "drm.keygen",
    "drm.content_enc",
    "drm.browser",
    "drm.webapp",
    "drm.database",
    "drm.adapter",
    "drm.license_srv",
    "drm.license_gen",
    "drm.license_enc",
    "drm.reader",
];

/// Server state visible to the behaviors during one scenario.
pub struct Env {
    pub suite: Arc<dyn CryptoSuite>,
    pub content: ContentServer,
    pub license: LicenseServer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Keygen,
    ContentEnc,
    Browser,
    Webapp,
    Database,
    Adapter,
    LicenseSrv,
    LicenseGen,
    LicenseEnc,
    Reader,
}

impl Role {
    const ALL: [Role; 10] = [
        Role::Keygen,
        Role::ContentEnc,
        Role::Browser,
        Role::Webapp,
        Role::Database,
        Role::Adapter,
        Role::LicenseSrv,
        Role::LicenseGen,
        Role::LicenseEnc,
        Role::Reader,
    ];

    fn required(self) -> &'static [&'static str] {
        match self {
            Role::Database => &["query"],
            Role::Adapter => &["record"],
            Role::LicenseSrv => &["request"],
            Role::LicenseGen => &["order"],
            Role::LicenseEnc => &["draft"],
            Role::Reader => &["package"],
            _ => &[],
        }
    }
}

pub struct DrmBehavior {
    role: Role,
    env: Arc<Env>,
}

pub fn drm_registry(env: Arc<Env>) -> BehaviorRegistry {
    let mut reg = BehaviorRegistry::with_builtins();
    register_drm(&mut reg, env);
    reg
}

pub fn register_drm(reg: &mut BehaviorRegistry, env: Arc<Env>) {
    for (role, name) in Role::ALL.into_iter().zip(BEHAVIOR_NAMES) {
        reg.register(name, Arc::new(DrmBehavior { role, env: env.clone() }))
            .expect("drm behavior names are unique");
    }
}

pub fn encode(v: &Value) -> Vec<u8> {
    v.to_compact().into_bytes()
}

pub fn decode(bytes: &[u8]) -> Result<Value, BehaviorError> {
    let text = std::str::from_utf8(bytes).map_err(|_| fail("payload is not UTF-8"))?;
    let (root, errors) = tree::parse(text);
    if let Some(e) = errors.first() {
        return Err(fail(format!("bad payload: {}", e.message)));
    }
    root.map(|r| r.to_value()).ok_or_else(|| fail("empty payload"))
}

fn fail(msg: impl Into<String>) -> BehaviorError {
    BehaviorError::Failed(msg.into())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a str, BehaviorError> {
    v.get(key).and_then(Value::as_str).ok_or_else(|| fail(format!("payload lacks `{key}`")))
}

fn device(v: &Value) -> Result<DeviceClass, BehaviorError> {
    field(v, "device")?.parse().map_err(|e: crate::license::LicenseError| fail(e.to_string()))
}

/// Fields the web application asks for before issuing a license.
pub const INFO_FIELDS: [&str; 3] = ["name", "device", "payment_token"];

impl Behavior for DrmBehavior {
    fn requires(&self, port: &PortSpec) -> bool {
        self.role.required().contains(&port.name.as_str())
    }

    fn invoke(&self, call: &Invocation<'_>) -> Result<Outcome, BehaviorError> {
        let env = &self.env;
        let mut rng = ChaCha20Rng::seed_from_u64(call.seed);
        let keep = || Outcome::with_state(call.state.to_vec());
        match self.role {
            Role::Keygen => match call.input("submission") {
                Some(_) => Ok(keep().emit("key", hex::encode(env.suite.gen_content_key(&mut rng)))),
                None => Ok(keep()),
            },
            Role::ContentEnc => match (call.input("plaintext"), call.input("key")) {
                (Some(pt), Some(key)) => {
                    let key = hex::decode(key).map_err(|_| fail("content key is not hex"))?;
                    let ct = env.suite.sym_encrypt(&key, pt, &mut rng).map_err(|e| fail(e.to_string()))?;
                    Ok(keep().emit("ciphertext", ct))
                }
                _ => Ok(keep()),
            },
            Role::Browser => {
                if let Some(auth) = call.input("authorization") {
                    return Ok(keep().emit("package", auth).emit("next", "reader"));
                }
                if let Some(demand) = call.input("info_demand") {
                    decode(demand)?;
                    let profile = match call.input("profile") {
                        Some(p) => p.to_vec(),
                        None if !call.state.is_empty() => call.state.to_vec(),
                        None => return Err(BehaviorError::MissingInput("profile".into())),
                    };
                    return Ok(Outcome::with_state(profile.clone()).emit("info", profile).emit("next", "server"));
                }
                let profile = call.require("profile")?;
                let selection = decode(call.require("selection")?)?;
                let user = decode(profile)?;
                let request = Value::object([
                    ("user_id", Value::str(field(&user, "user_id")?)),
                    ("content_id", Value::str(field(&selection, "content_id")?)),
                ]);
                Ok(Outcome::with_state(profile.to_vec()).emit("request", encode(&request)).emit("next", "server"))
            }
            Role::Webapp => self.webapp(call),
            Role::Database => {
                let query = decode(call.require("query")?)?;
                let content_id = field(&query, "content_id")?;
                let entry = env.content.catalog.get(content_id).ok_or_else(|| fail(format!("UnknownContent: {content_id}")))?;
                let renditions =
                    entry.renditions.iter().map(|(d, b)| (d.name().to_string(), Value::str(hex::encode(b)))).collect();
                let record = Value::object([
                    ("content_id", Value::str(content_id)),
                    ("device", Value::str(device(&query)?.name())),
                    ("body", Value::str(hex::encode(&entry.body))),
                    ("renditions", Value::Object(renditions)),
                ]);
                Ok(keep().emit("record", encode(&record)))
            }
            Role::Adapter => {
                let record = decode(call.require("record")?)?;
                let device = device(&record)?;
                let body = match record.get("renditions").and_then(|r| r.get(device.name())) {
                    Some(r) => r.as_str().ok_or_else(|| fail("rendition is not a string"))?.to_string(),
                    None => field(&record, "body")?.to_string(),
                };
                let adapted = Value::object([
                    ("content_id", Value::str(field(&record, "content_id")?)),
                    ("device", Value::str(device.name())),
                    ("body", Value::str(body)),
                ]);
                Ok(keep().emit("adapted", encode(&adapted)))
            }
            Role::LicenseSrv => {
                let request = decode(call.require("request")?)?;
                let user_id = field(&request, "user_id")?;
                let content_id = field(&request, "content_id")?;
                if !env.license.keys.contains_key(content_id) {
                    return Err(fail(format!("UnknownContent: {content_id}")));
                }
                // Serials stay unique if the server is asked twice in one run.
                let issued_here: u64 = std::str::from_utf8(call.state).ok().and_then(|s| s.parse().ok()).unwrap_or(0);
                let order = Value::object([
                    ("license_id", Value::str(LicenseServer::license_id(env.license.next_serial + issued_here))),
                    ("user_id", Value::str(user_id)),
                    ("content_id", Value::str(content_id)),
                ]);
                Ok(Outcome::with_state((issued_here + 1).to_string().into_bytes()).emit("order", encode(&order)))
            }
            Role::LicenseGen => {
                let order = decode(call.require("order")?)?;
                let content_id = field(&order, "content_id")?;
                let entry = env.content.catalog.get(content_id).ok_or_else(|| fail(format!("UnknownContent: {content_id}")))?;
                let draft = Value::object([
                    ("license_id", Value::str(field(&order, "license_id")?)),
                    ("content_id", Value::str(content_id)),
                    ("user_id", Value::str(field(&order, "user_id")?)),
                    ("rules", entry.rules.to_value()),
                ]);
                Ok(keep().emit("draft", encode(&draft)))
            }
            Role::LicenseEnc => {
                let draft = decode(call.require("draft")?)?;
                let content_id = field(&draft, "content_id")?;
                let user_id = field(&draft, "user_id")?;
                let key = env.license.keys.get(content_id).ok_or_else(|| fail(format!("UnknownContent: {content_id}")))?;
                let user = env.content.users.get(user_id).ok_or_else(|| fail(format!("UnknownUser: {user_id}")))?;
                let rules = crate::license::UsageRules::from_value(draft.get("rules").ok_or_else(|| fail("draft lacks rules"))?)
                    .map_err(|e| fail(e.to_string()))?;
                let wrapped_key = env.suite.wrap_key(key, &user.public_key, &mut rng).map_err(|e| fail(e.to_string()))?;
                let mut license = License {
                    license_id: field(&draft, "license_id")?.to_string(),
                    content_id: content_id.to_string(),
                    user_id: user_id.to_string(),
                    rules,
                    wrapped_key,
                    signature: Vec::new(),
                };
                license.sign(env.suite.as_ref(), &env.license.signing.private).map_err(|e| fail(e.to_string()))?;
                Ok(keep().emit("license", license.to_text()))
            }
            Role::Reader => {
                let package = call.require("package")?;
                Ok(Outcome::with_state(call.state.to_vec()).emit("package", package))
            }
        }
    }
}

impl DrmBehavior {
    /// Session state: the pending request plus what has been learned so far.
    fn webapp(&self, call: &Invocation<'_>) -> Result<Outcome, BehaviorError> {
        let env = &self.env;
        let mut state = if call.state.is_empty() { Value::Object(Vec::new()) } else { decode(call.state)? };
        let set = |state: &mut Value, key: &str, v: Value| {
            if let Value::Object(entries) = state {
                entries.retain(|(k, _)| k != key);
                entries.push((key.to_string(), v));
            }
        };
        if let Some(content) = call.input("content") {
            let adapted = decode(content)?;
            let license = field(&state, "license")?;
            let auth = Value::object([("license", Value::str(license)), ("content", Value::str(field(&adapted, "body")?))]);
            return Ok(Outcome::with_state(encode(&state)).emit("authorization", encode(&auth)).emit("next", "browser"));
        }
        if let Some(license) = call.input("license") {
            let text = std::str::from_utf8(license).map_err(|_| fail("license is not UTF-8"))?;
            let license = License::parse(text).map_err(|e| fail(e.to_string()))?;
            set(&mut state, "license", Value::str(text));
            let query = Value::object([
                ("content_id", Value::str(&license.content_id)),
                ("device", Value::str(field(&state, "device")?)),
            ]);
            return Ok(Outcome::with_state(encode(&state)).emit("fetch", encode(&query)).emit("next", "fetch"));
        }
        if let Some(info) = call.input("info") {
            let profile = UserProfile::from_value(&decode(info)?).map_err(|e| fail(e.to_string()))?;
            if !env.content.users.contains_key(&profile.user_id) {
                return Err(fail(format!("UnknownUser: {}", profile.user_id)));
            }
            let content_id = field(&state, "content_id")?.to_string();
            if !env.content.catalog.contains_key(&content_id) {
                return Err(fail(format!("UnknownContent: {content_id}")));
            }
            set(&mut state, "device", Value::str(profile.device.name()));
            let request = Value::object([
                ("user_id", Value::str(&profile.user_id)),
                ("content_id", Value::str(content_id)),
                ("device", Value::str(profile.device.name())),
            ]);
            return Ok(Outcome::with_state(encode(&state))
                .emit("license_request", encode(&request))
                .emit("next", "license"));
        }
        if let Some(request) = call.input("request") {
            let request = decode(request)?;
            set(&mut state, "user_id", Value::str(field(&request, "user_id")?));
            set(&mut state, "content_id", Value::str(field(&request, "content_id")?));
            let demand = Value::object([("fields", Value::List(INFO_FIELDS.iter().map(|f| Value::str(*f)).collect()))]);
            return Ok(Outcome::with_state(encode(&state)).emit("info_demand", encode(&demand)).emit("next", "browser"));
        }
        Err(fail("web application fired without a message"))
    }
}
