//! Client-side license enforcement.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use mixsys_core::tree::Value;

use crate::crypto::CryptoSuite;
use crate::license::{DeviceClass, License};

/// Why a consumption was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Denial {
    BadSignature,
    Revoked,
    WrongUser,
    Expired,
    PlaysExhausted,
    WrongDevice,
    DecryptFailure,
}

impl Denial {
    pub const ALL: [Denial; 7] = [
        Denial::BadSignature,
        Denial::Revoked,
        Denial::WrongUser,
        Denial::Expired,
        Denial::PlaysExhausted,
        Denial::WrongDevice,
        Denial::DecryptFailure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Denial::BadSignature => "BadSignature",
            Denial::Revoked => "Revoked",
            Denial::WrongUser => "WrongUser",
            Denial::Expired => "Expired",
            Denial::PlaysExhausted => "PlaysExhausted",
            Denial::WrongDevice => "WrongDevice",
            Denial::DecryptFailure => "DecryptFailure",
        }
    }
}

impl fmt::Display for Denial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A user's reading application: holds the user's unwrapping key, the
/// license server's verification key, per-license play counters and the
/// revocations it has learned about.
pub struct Reader {
    pub user_id: String,
    suite: Arc<dyn CryptoSuite>,
    private_key: Vec<u8>,
    verifying_key: Vec<u8>,
    plays_used: BTreeMap<String, u32>,
    revoked: BTreeSet<String>,
}

impl fmt::Debug for Reader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reader")
            .field("user_id", &self.user_id)
            .field("plays_used", &self.plays_used)
            .field("revoked", &self.revoked)
            .finish_non_exhaustive()
    }
}

impl Reader {
    pub fn new(
        user_id: impl Into<String>,
        suite: Arc<dyn CryptoSuite>,
        private_key: Vec<u8>,
        verifying_key: Vec<u8>,
    ) -> Self {
        Reader {
            user_id: user_id.into(),
            suite,
            private_key,
            verifying_key,
            plays_used: BTreeMap::new(),
            revoked: BTreeSet::new(),
        }
    }

    pub fn plays_used(&self, license_id: &str) -> u32 {
        self.plays_used.get(license_id).copied().unwrap_or(0)
    }

    pub fn learn_revoked<'a>(&mut self, ids: impl IntoIterator<Item = &'a String>) {
        self.revoked.extend(ids.into_iter().cloned());
    }

    /// Checks, in order: signature, revocation, user, expiry, play count,
    /// device, decryption. Only a successful consumption changes state.
    pub fn consume(
        &mut self,
        license: &License,
        ciphertext: &[u8],
        now: i64,
        device: DeviceClass,
    ) -> Result<Vec<u8>, Denial> {
        if !license.verify(self.suite.as_ref(), &self.verifying_key) {
            return Err(Denial::BadSignature);
        }
        if self.revoked.contains(&license.license_id) {
            return Err(Denial::Revoked);
        }
        if license.user_id != self.user_id {
            return Err(Denial::WrongUser);
        }
        let rules = &license.rules;
        if rules.expires_at.is_some_and(|t| now > t) {
            return Err(Denial::Expired);
        }
        let used = self.plays_used(&license.license_id);
        if rules.max_plays.is_some_and(|max| used >= max) {
            return Err(Denial::PlaysExhausted);
        }
        if rules.device_class.is_some_and(|d| d != device) {
            return Err(Denial::WrongDevice);
        }
        let key = self.suite.unwrap_key(&license.wrapped_key, &self.private_key).map_err(|_| Denial::DecryptFailure)?;
        let plaintext = self.suite.sym_decrypt(&key, ciphertext).map_err(|_| Denial::DecryptFailure)?;
        self.plays_used.insert(license.license_id.clone(), used + 1);
        Ok(plaintext)
    }

    /// Persistent part of the state: counters and revocations.
    pub fn state_value(&self) -> Value {
        Value::object([
            ("user_id", Value::str(&self.user_id)),
            (
                "plays_used",
                Value::Object(self.plays_used.iter().map(|(k, n)| (k.clone(), Value::num(n))).collect()),
            ),
            ("revoked", Value::List(self.revoked.iter().map(Value::str).collect())),
        ])
    }
}
