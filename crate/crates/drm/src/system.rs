//! The DRM service: content submission, user registration, the issuance
//! protocol as an engine scenario, consumption bookkeeping, renewal and
//! usage statistics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mixsys_core::engine::{self, EngineError, Event, EventKind, InitialInputs, Mapping, SimConfig, Trace};
use mixsys_core::graph::SystemModel;
use mixsys_core::model::{DataTag, Message, PortRef};
use mixsys_core::sysdesc;
use mixsys_core::tree::Value;
use mixsys_core::Invocation;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::behaviors::{self, Env};
use crate::crypto::{CryptoError, CryptoSuite, KeyPair};
use crate::license::{DeviceClass, License, LicenseError, UsageRules};
use crate::reader::{Denial, Reader};
use crate::store::{
    read_value, write_value, CatalogEntry, ContentItem, ContentServer, LicenseServer, UsageReport, UserProfile,
    UserRecord, CONTENT_SERVER_FILE, LICENSE_SERVER_FILE,
};

pub const FIXTURE_FILE: &str = "drms_business_model.f4ms";
pub const FIXTURE: &str = include_str!("../fixtures/drms_business_model.f4ms");

/// Tags of the six protocol messages, in protocol order.
pub const PROTOCOL_TAGS: [&str; 6] =
    ["content_request", "info_demand", "user_info", "license_request", "license", "authorization"];

#[derive(Debug, Error)]
pub enum DrmError {
    #[error("content `{0}` already exists")]
    DuplicateContent(String),
    #[error("no content `{0}` in the catalog")]
    UnknownContent(String),
    #[error("no registered user `{0}`")]
    UnknownUser(String),
    #[error("user `{0}` is already registered")]
    DuplicateUser(String),
    #[error("license `{0}` was not issued by this server")]
    UnknownLicense(String),
    #[error("license `{0}` has been revoked")]
    Revoked(String),
    #[error("license `{0}` does not carry a valid signature")]
    BadSignature(String),
    #[error("invalid usage rules: {0}")]
    InvalidRules(LicenseError),
    #[error("denied: {0}")]
    Denied(Denial),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("persistence: {0}")]
    Persistence(String),
    #[error("protocol: {0}")]
    Protocol(String),
}

impl DrmError {
    pub fn category(&self) -> &'static str {
        match self {
            DrmError::DuplicateContent(_) => "DuplicateContent",
            DrmError::UnknownContent(_) => "UnknownContent",
            DrmError::UnknownUser(_) => "UnknownUser",
            DrmError::DuplicateUser(_) => "DuplicateUser",
            DrmError::UnknownLicense(_) => "UnknownLicense",
            DrmError::Revoked(_) => "Revoked",
            DrmError::BadSignature(_) => "BadSignature",
            DrmError::InvalidRules(_) => "InvalidRules",
            DrmError::Denied(d) => d.name(),
            DrmError::Engine(e) => e.category(),
            DrmError::Crypto(_) => "CryptoError",
            DrmError::Persistence(_) => "PersistenceError",
            DrmError::Protocol(_) => "ProtocolError",
        }
    }
}

/// Result of one issuance scenario.
#[derive(Debug, Clone)]
pub struct Issued {
    pub license: License,
    /// Adapted ciphertext delivered with the authorization.
    pub ciphertext: Vec<u8>,
    pub trace: Trace,
}

/// The six protocol transfers of a trace, in trace order.
pub fn protocol_transfers(trace: &Trace) -> Vec<&Event> {
    trace
        .of_kind(EventKind::MessageTransfer)
        .filter(|e| e.detail_str("tag").is_some_and(|t| PROTOCOL_TAGS.contains(&t)))
        .collect()
}

/// Parses the bundled fixture.
pub fn fixture_model() -> SystemModel {
    let env = Arc::new(Env {
        suite: Arc::new(crate::crypto::TestSuite),
        content: ContentServer::default(),
        license: LicenseServer::new(KeyPair { public: Vec::new(), private: Vec::new() }),
    });
    sysdesc::parse_system(FIXTURE_FILE, FIXTURE, &behaviors::drm_registry(env)).expect("bundled fixture is valid")
}

/// Initial inputs that start an issuance for `profile` and `content_id`.
pub fn issuance_inputs(profile: &UserProfile, content_id: &str) -> InitialInputs {
    let message = |tag: &str, v: Value, port: &str| Message {
        tag: DataTag::new(tag),
        payload: behaviors::encode(&v),
        origin: PortRef::new("browser", port),
    };
    let selection = Value::object([("content_id", Value::str(content_id))]);
    InitialInputs::from([
        (PortRef::new("browser", "profile"), message("user_profile", profile.to_value(), "profile")),
        (PortRef::new("browser", "selection"), message("content_selection", selection, "selection")),
    ])
}

pub struct DrmSystem {
    suite: Arc<dyn CryptoSuite>,
    model: SystemModel,
    content: ContentServer,
    license: LicenseServer,
    rng: ChaCha20Rng,
    dir: Option<PathBuf>,
}

impl DrmSystem {
    /// In-memory system; all randomness derives from `seed`.
    pub fn new(suite: Arc<dyn CryptoSuite>, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let signing = suite.gen_signing_pair(&mut rng);
        DrmSystem {
            suite,
            model: fixture_model(),
            content: ContentServer::default(),
            license: LicenseServer::new(signing),
            rng,
            dir: None,
        }
    }

    /// Persistent system rooted at `dir`: loads both server files when
    /// present, otherwise starts fresh and writes them.
    pub fn open(dir: &Path, suite: Arc<dyn CryptoSuite>, seed: u64) -> Result<Self, DrmError> {
        let mut sys = DrmSystem::new(suite, seed);
        let content = dir.join(CONTENT_SERVER_FILE);
        let license = dir.join(LICENSE_SERVER_FILE);
        if content.exists() && license.exists() {
            let bad = |e: LicenseError| DrmError::Persistence(e.to_string());
            sys.content = ContentServer::from_value(&read_value(&content).map_err(DrmError::Persistence)?).map_err(bad)?;
            sys.license = LicenseServer::from_value(&read_value(&license).map_err(DrmError::Persistence)?).map_err(bad)?;
        } else {
            std::fs::create_dir_all(dir).map_err(|e| DrmError::Persistence(e.to_string()))?;
        }
        sys.dir = Some(dir.to_path_buf());
        sys.persist()?;
        Ok(sys)
    }

    fn persist(&self) -> Result<(), DrmError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let io = |e: std::io::Error| DrmError::Persistence(e.to_string());
        write_value(&dir.join(CONTENT_SERVER_FILE), &self.content.to_value()).map_err(io)?;
        write_value(&dir.join(LICENSE_SERVER_FILE), &self.license.to_value()).map_err(io)
    }

    pub fn suite(&self) -> &Arc<dyn CryptoSuite> {
        &self.suite
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn content_server(&self) -> &ContentServer {
        &self.content
    }

    pub fn license_server(&self) -> &LicenseServer {
        &self.license
    }

    pub fn verifying_key(&self) -> &[u8] {
        &self.license.signing.public
    }

    /// Snapshot of server state for behaviors.
    pub fn env(&self) -> Arc<Env> {
        Arc::new(Env { suite: self.suite.clone(), content: self.content.clone(), license: self.license.clone() })
    }

    fn invoke(&mut self, env: &Arc<Env>, component: &str, inputs: BTreeMap<String, Vec<u8>>, port: &str) -> Result<Vec<u8>, DrmError> {
        let spec = self.model.components[component].clone();
        let registry = behaviors::drm_registry(env.clone());
        let behavior = registry.resolve(&spec.behavior).map_err(|e| DrmError::Protocol(e.to_string()))?;
        let call = Invocation { component: &spec, inputs: &inputs, state: &[], seed: self.rng.next_u64() };
        let outcome = behavior.invoke(&call).map_err(|e| DrmError::Protocol(format!("{component}: {e}")))?;
        outcome.outputs.get(port).cloned().ok_or_else(|| DrmError::Protocol(format!("{component} produced no `{port}`")))
    }

    /// Generates a content key (keygen component), encrypts the content and
    /// each rendition under it (content encryption component), stores the
    /// ciphertexts in the catalog and the key in the license server.
    pub fn submit_content(&mut self, item: ContentItem, rules: UsageRules) -> Result<&CatalogEntry, DrmError> {
        rules.validate().map_err(DrmError::InvalidRules)?;
        if self.content.catalog.contains_key(&item.content_id) {
            return Err(DrmError::DuplicateContent(item.content_id));
        }
        let env = self.env();
        let submission = behaviors::encode(&Value::object([("content_id", Value::str(&item.content_id))]));
        let key_hex = self.invoke(&env, "keygen", BTreeMap::from([("submission".into(), submission)]), "key")?;
        let encrypt = |sys: &mut Self, plaintext: &[u8]| {
            let inputs = BTreeMap::from([("plaintext".into(), plaintext.to_vec()), ("key".into(), key_hex.clone())]);
            sys.invoke(&env, "content_enc", inputs, "ciphertext")
        };
        let body = encrypt(self, &item.plaintext)?;
        let mut renditions = BTreeMap::new();
        for (device, plaintext) in &item.renditions {
            renditions.insert(*device, encrypt(self, plaintext)?);
        }
        let key = hex::decode(&key_hex).map_err(|_| DrmError::Protocol("content key is not hex".into()))?;
        let id = item.content_id.clone();
        self.license.keys.insert(id.clone(), key);
        self.content.catalog.insert(id.clone(), CatalogEntry { content_id: id.clone(), rules, body, renditions });
        self.content.stats.insert(id.clone(), UsageReport::default());
        self.persist()?;
        Ok(&self.content.catalog[&id])
    }

    /// Registers a user and hands back their reader, which alone holds the
    /// private unwrapping key.
    pub fn register_user(&mut self, profile: UserProfile) -> Result<Reader, DrmError> {
        if self.content.users.contains_key(&profile.user_id) {
            return Err(DrmError::DuplicateUser(profile.user_id));
        }
        let pair = self.suite.gen_wrapping_pair(&mut self.rng);
        let user_id = profile.user_id.clone();
        self.content.users.insert(user_id.clone(), UserRecord { profile, public_key: pair.public });
        self.persist()?;
        Ok(Reader::new(user_id, self.suite.clone(), pair.private, self.license.signing.public.clone()))
    }

    /// Issuance with every component in software.
    pub fn run_issuance_protocol(&mut self, user_id: &str, content_id: &str) -> Result<Issued, DrmError> {
        let mapping = Mapping::all_software(&self.model);
        self.run_issuance_with(user_id, content_id, mapping)
    }

    pub fn run_issuance_with(&mut self, user_id: &str, content_id: &str, mapping: Mapping) -> Result<Issued, DrmError> {
        let profile = self
            .content
            .users
            .get(user_id)
            .map(|u| u.profile.clone())
            .ok_or_else(|| DrmError::UnknownUser(user_id.to_string()))?;
        if !self.content.catalog.contains_key(content_id) {
            return Err(DrmError::UnknownContent(content_id.to_string()));
        }
        let registry = behaviors::drm_registry(self.env());
        let config = SimConfig::new(mapping).with_seed(self.rng.next_u64());
        let trace = engine::run(&self.model, &registry, config, &issuance_inputs(&profile, content_id))?;

        let package = trace
            .outputs
            .get(&PortRef::new("drm_reader", "package"))
            .ok_or_else(|| DrmError::Protocol("the reader received no package".into()))?;
        let package = behaviors::decode(&package.payload).map_err(|e| DrmError::Protocol(e.to_string()))?;
        let text = package.get("license").and_then(Value::as_str).ok_or_else(|| DrmError::Protocol("no license".into()))?;
        let license = License::parse(text).map_err(|e| DrmError::Protocol(e.to_string()))?;
        let ciphertext = package
            .get("content")
            .and_then(Value::as_str)
            .and_then(|c| hex::decode(c).ok())
            .ok_or_else(|| DrmError::Protocol("no content".into()))?;

        self.license.next_serial += 1;
        self.license.issued.insert(license.license_id.clone(), license.clone());
        self.content.stats.entry(content_id.to_string()).or_default().downloads += 1;
        self.persist()?;
        Ok(Issued { license, ciphertext, trace })
    }

    /// Consumption on the user's reader. The reader first learns current
    /// revocations; the outcome is recorded in the usage statistics.
    pub fn consume(
        &mut self,
        reader: &mut Reader,
        license: &License,
        ciphertext: &[u8],
        now: i64,
        device: DeviceClass,
    ) -> Result<Vec<u8>, Denial> {
        reader.learn_revoked(&self.license.revoked);
        let result = reader.consume(license, ciphertext, now, device);
        if let Some(stats) = self.content.stats.get_mut(&license.content_id) {
            match &result {
                Ok(_) => stats.consumptions += 1,
                Err(d) => *stats.denials.entry(*d).or_insert(0) += 1,
            }
            // Statistics are best effort; a write failure does not change the verdict.
            let _ = self.persist();
        }
        result
    }

    /// Issues a replacement license with `new_rules` and revokes the old one.
    pub fn renew_license(&mut self, license: &License, new_rules: UsageRules) -> Result<License, DrmError> {
        new_rules.validate().map_err(DrmError::InvalidRules)?;
        if !license.verify(self.suite.as_ref(), &self.license.signing.public) {
            return Err(DrmError::BadSignature(license.license_id.clone()));
        }
        if self.license.issued.get(&license.license_id) != Some(license) {
            return Err(DrmError::UnknownLicense(license.license_id.clone()));
        }
        if self.license.revoked.contains(&license.license_id) {
            return Err(DrmError::Revoked(license.license_id.clone()));
        }
        let key = self
            .license
            .keys
            .get(&license.content_id)
            .ok_or_else(|| DrmError::UnknownContent(license.content_id.clone()))?;
        let user = self
            .content
            .users
            .get(&license.user_id)
            .ok_or_else(|| DrmError::UnknownUser(license.user_id.clone()))?;
        let wrapped_key = self.suite.wrap_key(key, &user.public_key, &mut self.rng)?;
        let mut renewed = License {
            license_id: LicenseServer::license_id(self.license.next_serial),
            content_id: license.content_id.clone(),
            user_id: license.user_id.clone(),
            rules: new_rules,
            wrapped_key,
            signature: Vec::new(),
        };
        renewed.sign(self.suite.as_ref(), &self.license.signing.private).map_err(|e| DrmError::Protocol(e.to_string()))?;
        self.license.next_serial += 1;
        self.license.revoked.insert(license.license_id.clone());
        self.license.issued.insert(renewed.license_id.clone(), renewed.clone());
        self.persist()?;
        Ok(renewed)
    }

    pub fn usage_report(&self, content_id: &str) -> Result<UsageReport, DrmError> {
        if !self.content.catalog.contains_key(content_id) {
            return Err(DrmError::UnknownContent(content_id.to_string()));
        }
        Ok(self.content.stats.get(content_id).cloned().unwrap_or_default())
    }
}
