//! Usage rules and signed licenses.

use std::fmt;
use std::str::FromStr;

use mixsys_core::tree::{self, Value};
use thiserror::Error;

use crate::crypto::{CryptoError, CryptoSuite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceClass {
    Desktop,
    Mobile,
    ReaderDevice,
}

impl DeviceClass {
    pub const ALL: [DeviceClass; 3] = [DeviceClass::Desktop, DeviceClass::Mobile, DeviceClass::ReaderDevice];

    pub fn name(self) -> &'static str {
        match self {
            DeviceClass::Desktop => "desktop",
            DeviceClass::Mobile => "mobile",
            DeviceClass::ReaderDevice => "reader_device",
        }
    }
}

impl fmt::Display for DeviceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DeviceClass {
    type Err = LicenseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DeviceClass::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| LicenseError::Malformed(format!("unknown device class `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LicenseError {
    #[error("usage rules must contain at least one rule")]
    EmptyRules,
    #[error("max_plays must be at least 1")]
    ZeroPlays,
    #[error("malformed license: {0}")]
    Malformed(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Absolute timestamps are in the same units as the `now` passed to
/// consumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UsageRules {
    pub expires_at: Option<i64>,
    pub max_plays: Option<u32>,
    pub device_class: Option<DeviceClass>,
}

impl UsageRules {
    pub fn validate(&self) -> Result<(), LicenseError> {
        if self.expires_at.is_none() && self.max_plays.is_none() && self.device_class.is_none() {
            return Err(LicenseError::EmptyRules);
        }
        if self.max_plays == Some(0) {
            return Err(LicenseError::ZeroPlays);
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        let mut entries = Vec::new();
        if let Some(t) = self.expires_at {
            entries.push(("expires_at", Value::num(t)));
        }
        if let Some(n) = self.max_plays {
            entries.push(("max_plays", Value::num(n)));
        }
        if let Some(d) = self.device_class {
            entries.push(("device_class", Value::str(d.name())));
        }
        Value::object(entries)
    }

    pub fn from_value(v: &Value) -> Result<UsageRules, LicenseError> {
        let Value::Object(entries) = v else { return Err(LicenseError::Malformed("rules must be an object".into())) };
        let mut rules = UsageRules::default();
        for (key, value) in entries {
            let num = || {
                value.as_num().ok_or_else(|| LicenseError::Malformed(format!("`{key}` must be a number")))
            };
            match key.as_str() {
                "expires_at" => {
                    rules.expires_at = Some(num()?.parse().map_err(|_| LicenseError::Malformed("expires_at".into()))?)
                }
                "max_plays" => {
                    rules.max_plays = Some(num()?.parse().map_err(|_| LicenseError::Malformed("max_plays".into()))?)
                }
                "device_class" => {
                    let s = value.as_str().ok_or_else(|| LicenseError::Malformed("device_class".into()))?;
                    rules.device_class = Some(s.parse()?);
                }
                other => return Err(LicenseError::Malformed(format!("unknown rule `{other}`"))),
            }
        }
        Ok(rules)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct License {
    pub license_id: String,
    pub content_id: String,
    pub user_id: String,
    pub rules: UsageRules,
    pub wrapped_key: Vec<u8>,
    pub signature: Vec<u8>,
}

const SIGNATURE_LINE: &str = "\n  signature: ";

impl License {
    fn value(&self) -> Value {
        Value::object([
            ("license_id", Value::str(&self.license_id)),
            ("content_id", Value::str(&self.content_id)),
            ("user_id", Value::str(&self.user_id)),
            ("rules", self.rules.to_value()),
            ("wrapped_key", Value::str(hex::encode(&self.wrapped_key))),
            ("signature", Value::str(hex::encode(&self.signature))),
        ])
    }

    /// Canonical text: fixed key order, hex-encoded binary fields.
    pub fn to_text(&self) -> String {
        self.value().to_pretty()
    }

    /// The canonical text up to, not including, the signature entry.
    pub fn signed_bytes(&self) -> Vec<u8> {
        let text = self.to_text();
        let end = text.find(SIGNATURE_LINE).expect("canonical license text has a signature entry") + 1;
        text.as_bytes()[..end].to_vec()
    }

    pub fn sign(&mut self, suite: &dyn CryptoSuite, signing_key: &[u8]) -> Result<(), LicenseError> {
        self.signature = suite.sign(&self.signed_bytes(), signing_key)?;
        Ok(())
    }

    pub fn verify(&self, suite: &dyn CryptoSuite, verifying_key: &[u8]) -> bool {
        suite.verify(&self.signed_bytes(), &self.signature, verifying_key)
    }

    pub fn parse(text: &str) -> Result<License, LicenseError> {
        let (root, errors) = tree::parse(text);
        if let Some(e) = errors.first() {
            return Err(LicenseError::Malformed(format!("{}:{}: {}", e.pos.line, e.pos.col, e.message)));
        }
        let v = root.map(|r| r.to_value()).ok_or_else(|| LicenseError::Malformed("empty".into()))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<License, LicenseError> {
        let s = |key: &str| {
            v.get(key)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| LicenseError::Malformed(format!("missing `{key}`")))
        };
        let bytes = |key: &str| hex::decode(s(key)?).map_err(|_| LicenseError::Malformed(format!("`{key}` is not hex")));
        let rules = v.get("rules").ok_or_else(|| LicenseError::Malformed("missing `rules`".into()))?;
        Ok(License {
            license_id: s("license_id")?,
            content_id: s("content_id")?,
            user_id: s("user_id")?,
            rules: UsageRules::from_value(rules)?,
            wrapped_key: bytes("wrapped_key")?,
            signature: bytes("signature")?,
        })
    }
}
