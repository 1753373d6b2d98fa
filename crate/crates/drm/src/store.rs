//! Server-side state of the content server and the license server, with
//! canonical-text persistence (one file per server).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use mixsys_core::tree::{self, Value};

use crate::crypto::KeyPair;
use crate::license::{DeviceClass, License, LicenseError, UsageRules};
use crate::reader::Denial;

pub const CONTENT_SERVER_FILE: &str = "content_server.store";
pub const LICENSE_SERVER_FILE: &str = "license_server.store";

/// Content as submitted by a producer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentItem {
    pub content_id: String,
    pub plaintext: Vec<u8>,
    /// Device-specific versions; devices without one get `plaintext`.
    pub renditions: BTreeMap<DeviceClass, Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserProfile {
    pub user_id: String,
    pub name: String,
    pub device: DeviceClass,
    /// Placeholder; no payment is processed.
    pub payment_token: String,
}

impl UserProfile {
    pub fn to_value(&self) -> Value {
        Value::object([
            ("user_id", Value::str(&self.user_id)),
            ("name", Value::str(&self.name)),
            ("device", Value::str(self.device.name())),
            ("payment_token", Value::str(&self.payment_token)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<UserProfile, LicenseError> {
        Ok(UserProfile {
            user_id: text(v, "user_id")?,
            name: text(v, "name")?,
            device: text(v, "device")?.parse()?,
            payment_token: text(v, "payment_token")?,
        })
    }
}

fn text(v: &Value, key: &str) -> Result<String, LicenseError> {
    v.get(key).and_then(Value::as_str).map(str::to_string).ok_or_else(|| LicenseError::Malformed(format!("missing `{key}`")))
}

fn bytes(v: &Value, key: &str) -> Result<Vec<u8>, LicenseError> {
    hex::decode(text(v, key)?).map_err(|_| LicenseError::Malformed(format!("`{key}` is not hex")))
}

fn number<T: std::str::FromStr>(v: &Value, key: &str) -> Result<T, LicenseError> {
    v.get(key)
        .and_then(Value::as_num)
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| LicenseError::Malformed(format!("`{key}` must be a number")))
}

fn entries<'a>(v: &'a Value, key: &str) -> Result<&'a [(String, Value)], LicenseError> {
    match v.get(key) {
        Some(Value::Object(e)) => Ok(e),
        _ => Err(LicenseError::Malformed(format!("`{key}` must be an object"))),
    }
}

fn list<'a>(v: &'a Value, key: &str) -> Result<&'a [Value], LicenseError> {
    v.get(key).and_then(Value::as_list).ok_or_else(|| LicenseError::Malformed(format!("`{key}` must be a list")))
}

/// Catalog entry: ciphertexts only, never the key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub content_id: String,
    pub rules: UsageRules,
    pub body: Vec<u8>,
    pub renditions: BTreeMap<DeviceClass, Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub profile: UserProfile,
    pub public_key: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UsageReport {
    pub downloads: u64,
    pub consumptions: u64,
    pub denials: BTreeMap<Denial, u64>,
}

impl UsageReport {
    pub fn total_denials(&self) -> u64 {
        self.denials.values().sum()
    }

    pub fn to_value(&self) -> Value {
        Value::object([
            ("downloads", Value::num(self.downloads)),
            ("consumptions", Value::num(self.consumptions)),
            ("denials", Value::Object(self.denials.iter().map(|(d, n)| (d.name().to_string(), Value::num(n))).collect())),
        ])
    }

    fn from_value(v: &Value) -> Result<UsageReport, LicenseError> {
        let mut denials = BTreeMap::new();
        for (name, n) in entries(v, "denials")? {
            let d = Denial::ALL
                .into_iter()
                .find(|d| d.name() == name)
                .ok_or_else(|| LicenseError::Malformed(format!("unknown denial `{name}`")))?;
            let n = n.as_num().and_then(|n| n.parse().ok()).ok_or_else(|| LicenseError::Malformed(name.clone()))?;
            denials.insert(d, n);
        }
        Ok(UsageReport { downloads: number(v, "downloads")?, consumptions: number(v, "consumptions")?, denials })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContentServer {
    pub catalog: BTreeMap<String, CatalogEntry>,
    pub users: BTreeMap<String, UserRecord>,
    pub stats: BTreeMap<String, UsageReport>,
}

impl ContentServer {
    pub fn to_value(&self) -> Value {
        let catalog = self
            .catalog
            .values()
            .map(|e| {
                Value::object([
                    ("content_id", Value::str(&e.content_id)),
                    ("rules", e.rules.to_value()),
                    ("body", Value::str(hex::encode(&e.body))),
                    (
                        "renditions",
                        Value::Object(
                            e.renditions.iter().map(|(d, b)| (d.name().to_string(), Value::str(hex::encode(b)))).collect(),
                        ),
                    ),
                ])
            })
            .collect();
        let users = self
            .users
            .values()
            .map(|u| Value::object([("profile", u.profile.to_value()), ("public_key", Value::str(hex::encode(&u.public_key)))]))
            .collect();
        let stats = self.stats.iter().map(|(id, r)| (id.clone(), r.to_value())).collect();
        Value::object([("catalog", Value::List(catalog)), ("users", Value::List(users)), ("stats", Value::Object(stats))])
    }

    pub fn from_value(v: &Value) -> Result<ContentServer, LicenseError> {
        let mut server = ContentServer::default();
        for e in list(v, "catalog")? {
            let mut renditions = BTreeMap::new();
            for (device, body) in entries(e, "renditions")? {
                let body = body.as_str().and_then(|b| hex::decode(b).ok()).ok_or_else(|| LicenseError::Malformed(device.clone()))?;
                renditions.insert(device.parse()?, body);
            }
            let rules = UsageRules::from_value(e.get("rules").ok_or_else(|| LicenseError::Malformed("rules".into()))?)?;
            let entry = CatalogEntry { content_id: text(e, "content_id")?, rules, body: bytes(e, "body")?, renditions };
            server.catalog.insert(entry.content_id.clone(), entry);
        }
        for u in list(v, "users")? {
            let profile = UserProfile::from_value(u.get("profile").ok_or_else(|| LicenseError::Malformed("profile".into()))?)?;
            server.users.insert(profile.user_id.clone(), UserRecord { profile, public_key: bytes(u, "public_key")? });
        }
        for (id, r) in entries(v, "stats")? {
            server.stats.insert(id.clone(), UsageReport::from_value(r)?);
        }
        Ok(server)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LicenseServer {
    /// Content keys in clear, by content id.
    pub keys: BTreeMap<String, Vec<u8>>,
    pub signing: KeyPair,
    pub issued: BTreeMap<String, License>,
    pub revoked: BTreeSet<String>,
    pub next_serial: u64,
}

impl LicenseServer {
    pub fn new(signing: KeyPair) -> Self {
        LicenseServer { keys: BTreeMap::new(), signing, issued: BTreeMap::new(), revoked: BTreeSet::new(), next_serial: 1 }
    }

    pub fn license_id(serial: u64) -> String {
        format!("lic-{serial:06}")
    }

    pub fn to_value(&self) -> Value {
        Value::object([
            ("next_serial", Value::num(self.next_serial)),
            ("signing_public", Value::str(hex::encode(&self.signing.public))),
            ("signing_private", Value::str(hex::encode(&self.signing.private))),
            ("keys", Value::Object(self.keys.iter().map(|(id, k)| (id.clone(), Value::str(hex::encode(k)))).collect())),
            ("issued", Value::List(self.issued.values().map(|l| Value::str(l.to_text())).collect())),
            ("revoked", Value::List(self.revoked.iter().map(Value::str).collect())),
        ])
    }

    pub fn from_value(v: &Value) -> Result<LicenseServer, LicenseError> {
        let mut keys = BTreeMap::new();
        for (id, k) in entries(v, "keys")? {
            let k = k.as_str().and_then(|k| hex::decode(k).ok()).ok_or_else(|| LicenseError::Malformed(id.clone()))?;
            keys.insert(id.clone(), k);
        }
        let mut issued = BTreeMap::new();
        for l in list(v, "issued")? {
            let l = License::parse(l.as_str().ok_or_else(|| LicenseError::Malformed("issued".into()))?)?;
            issued.insert(l.license_id.clone(), l);
        }
        let revoked = list(v, "revoked")?
            .iter()
            .map(|r| r.as_str().map(str::to_string).ok_or_else(|| LicenseError::Malformed("revoked".into())))
            .collect::<Result<_, _>>()?;
        Ok(LicenseServer {
            keys,
            signing: KeyPair { public: bytes(v, "signing_public")?, private: bytes(v, "signing_private")? },
            issued,
            revoked,
            next_serial: number(v, "next_serial")?,
        })
    }
}

pub fn write_value(path: &Path, v: &Value) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, v.to_pretty())?;
    std::fs::rename(tmp, path)
}

pub fn read_value(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (root, errors) = tree::parse(&text);
    if let Some(e) = errors.first() {
        return Err(format!("{}:{}:{}: {}", path.display(), e.pos.line, e.pos.col, e.message));
    }
    root.map(|r| r.to_value()).ok_or_else(|| format!("{}: empty", path.display()))
}
