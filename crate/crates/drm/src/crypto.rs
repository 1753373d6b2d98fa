//! Pluggable cryptography.
//!
//! [`ProductionSuite`] uses AES-256-GCM, X25519 + HKDF-SHA256 key
//! wrapping and Ed25519 signatures. [`TestSuite`] is a hash-based
//! stand-in with the same interface and failure behavior, cheap enough
//! for exhaustive tests. It offers no secrecy.

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Nonce};
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use hkdf::Hkdf;
use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;
use x25519_dalek::{PublicKey, StaticSecret};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("authentication failed")]
    Authentication,
    #[error("malformed {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub public: Vec<u8>,
    pub private: Vec<u8>,
}

pub trait CryptoSuite: Send + Sync {
    fn name(&self) -> &'static str;

    fn gen_content_key(&self, rng: &mut dyn RngCore) -> Vec<u8>;

    /// Authenticated encryption; the output carries its own nonce and tag.
    fn sym_encrypt(&self, key: &[u8], plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, CryptoError>;

    fn sym_decrypt(&self, key: &[u8], ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError>;

    /// Key pair for wrapping content keys.
    fn gen_wrapping_pair(&self, rng: &mut dyn RngCore) -> KeyPair;

    fn wrap_key(&self, content_key: &[u8], public: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, CryptoError>;

    fn unwrap_key(&self, wrapped: &[u8], private: &[u8]) -> Result<Vec<u8>, CryptoError>;

    /// Key pair for detached signatures.
    fn gen_signing_pair(&self, rng: &mut dyn RngCore) -> KeyPair;

    fn sign(&self, message: &[u8], private: &[u8]) -> Result<Vec<u8>, CryptoError>;

    fn verify(&self, message: &[u8], signature: &[u8], public: &[u8]) -> bool;
}

fn random<const N: usize>(rng: &mut dyn RngCore) -> [u8; N] {
    let mut out = [0u8; N];
    rng.fill_bytes(&mut out);
    out
}

fn array32(bytes: &[u8], what: &'static str) -> Result<[u8; 32], CryptoError> {
    bytes.try_into().map_err(|_| CryptoError::Malformed(what))
}

const GCM_NONCE: usize = 12;
const WRAP_INFO: &[u8] = b"mixsys-drm key wrap v1";

pub struct ProductionSuite;

impl ProductionSuite {
    fn gcm(key: &[u8]) -> Result<Aes256Gcm, CryptoError> {
        Aes256Gcm::new_from_slice(key).map_err(|_| CryptoError::Malformed("key"))
    }

    fn kek(shared: &[u8], ephemeral: &[u8], recipient: &[u8]) -> [u8; 32] {
        let salt = [ephemeral, recipient].concat();
        let mut okm = [0u8; 32];
        Hkdf::<Sha256>::new(Some(&salt), shared).expand(WRAP_INFO, &mut okm).expect("32 bytes is a valid length");
        okm
    }
}

impl CryptoSuite for ProductionSuite {
    fn name(&self) -> &'static str {
        "production"
    }

    fn gen_content_key(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        random::<32>(rng).to_vec()
    }

    fn sym_encrypt(&self, key: &[u8], plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, CryptoError> {
        let nonce = random::<GCM_NONCE>(rng);
        let body = Self::gcm(key)?.encrypt(Nonce::from_slice(&nonce), plaintext).map_err(|_| CryptoError::Authentication)?;
        Ok([nonce.as_slice(), &body].concat())
    }

    fn sym_decrypt(&self, key: &[u8], ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        if ciphertext.len() < GCM_NONCE + 16 {
            return Err(CryptoError::Malformed("ciphertext"));
        }
        let (nonce, body) = ciphertext.split_at(GCM_NONCE);
        Self::gcm(key)?.decrypt(Nonce::from_slice(nonce), body).map_err(|_| CryptoError::Authentication)
    }

    fn gen_wrapping_pair(&self, rng: &mut dyn RngCore) -> KeyPair {
        let secret = StaticSecret::from(random::<32>(rng));
        KeyPair { public: PublicKey::from(&secret).as_bytes().to_vec(), private: secret.to_bytes().to_vec() }
    }

    /// Ephemeral X25519 agreement; output is `ephemeral public || AES-GCM(kek, key)`.
    fn wrap_key(&self, content_key: &[u8], public: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, CryptoError> {
        let recipient = PublicKey::from(array32(public, "public key")?);
        let ephemeral = StaticSecret::from(random::<32>(rng));
        let eph_public = PublicKey::from(&ephemeral);
        let shared = ephemeral.diffie_hellman(&recipient);
        let kek = Self::kek(shared.as_bytes(), eph_public.as_bytes(), recipient.as_bytes());
        // Each kek wraps exactly one key, so a fixed nonce is safe.
        let body = Self::gcm(&kek)?
            .encrypt(Nonce::from_slice(&[0u8; GCM_NONCE]), content_key)
            .map_err(|_| CryptoError::Authentication)?;
        Ok([eph_public.as_bytes().as_slice(), &body].concat())
    }

    fn unwrap_key(&self, wrapped: &[u8], private: &[u8]) -> Result<Vec<u8>, CryptoError> {
        if wrapped.len() < 32 + 16 {
            return Err(CryptoError::Malformed("wrapped key"));
        }
        let secret = StaticSecret::from(array32(private, "private key")?);
        let recipient = PublicKey::from(&secret);
        let (eph, body) = wrapped.split_at(32);
        let eph = PublicKey::from(array32(eph, "wrapped key")?);
        let shared = secret.diffie_hellman(&eph);
        let kek = Self::kek(shared.as_bytes(), eph.as_bytes(), recipient.as_bytes());
        Self::gcm(&kek)?
            .decrypt(Nonce::from_slice(&[0u8; GCM_NONCE]), body)
            .map_err(|_| CryptoError::Authentication)
    }

    fn gen_signing_pair(&self, rng: &mut dyn RngCore) -> KeyPair {
        let key = SigningKey::from_bytes(&random::<32>(rng));
        KeyPair { public: key.verifying_key().to_bytes().to_vec(), private: key.to_bytes().to_vec() }
    }

    fn sign(&self, message: &[u8], private: &[u8]) -> Result<Vec<u8>, CryptoError> {
        let key = SigningKey::from_bytes(&array32(private, "signing key")?);
        Ok(key.sign(message).to_bytes().to_vec())
    }

    fn verify(&self, message: &[u8], signature: &[u8], public: &[u8]) -> bool {
        let Ok(public) = array32(public, "verifying key") else { return false };
        let Ok(key) = VerifyingKey::from_bytes(&public) else { return false };
        let Ok(signature) = Signature::from_slice(signature) else { return false };
        key.verify(message, &signature).is_ok()
    }
}

const TEST_NONCE: usize = 8;
const TEST_TAG: usize = 16;

fn hash(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// SHA-256 keystream XOR with a 16-byte keyed-hash tag; wrapping keys are
/// derived from the public half; signatures are keyed hashes and the
/// "public" verification key equals the private one.
pub struct TestSuite;

impl TestSuite {
    fn keystream_xor(key: &[u8], nonce: &[u8], data: &[u8]) -> Vec<u8> {
        data.chunks(32)
            .enumerate()
            .flat_map(|(i, chunk)| {
                let block = hash(&[b"stream", key, nonce, &(i as u64).to_le_bytes()]);
                chunk.iter().zip(block).map(|(d, k)| d ^ k).collect::<Vec<_>>()
            })
            .collect()
    }

    fn tag(key: &[u8], nonce: &[u8], body: &[u8]) -> [u8; TEST_TAG] {
        hash(&[b"tag", key, nonce, body])[..TEST_TAG].try_into().expect("16 of 32 bytes")
    }

    fn public_of(private: &[u8]) -> Vec<u8> {
        hash(&[b"public", private]).to_vec()
    }
}

impl CryptoSuite for TestSuite {
    fn name(&self) -> &'static str {
        "test"
    }

    fn gen_content_key(&self, rng: &mut dyn RngCore) -> Vec<u8> {
        random::<32>(rng).to_vec()
    }

    fn sym_encrypt(&self, key: &[u8], plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, CryptoError> {
        if key.is_empty() {
            return Err(CryptoError::Malformed("key"));
        }
        let nonce = random::<TEST_NONCE>(rng);
        let body = Self::keystream_xor(key, &nonce, plaintext);
        let tag = Self::tag(key, &nonce, &body);
        Ok([nonce.as_slice(), &body, &tag].concat())
    }

    fn sym_decrypt(&self, key: &[u8], ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        if ciphertext.len() < TEST_NONCE + TEST_TAG {
            return Err(CryptoError::Malformed("ciphertext"));
        }
        let (nonce, rest) = ciphertext.split_at(TEST_NONCE);
        let (body, tag) = rest.split_at(rest.len() - TEST_TAG);
        if Self::tag(key, nonce, body) != tag {
            return Err(CryptoError::Authentication);
        }
        Ok(Self::keystream_xor(key, nonce, body))
    }

    fn gen_wrapping_pair(&self, rng: &mut dyn RngCore) -> KeyPair {
        let private = random::<32>(rng).to_vec();
        KeyPair { public: Self::public_of(&private), private }
    }

    fn wrap_key(&self, content_key: &[u8], public: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, CryptoError> {
        self.sym_encrypt(&hash(&[b"wrap", public]), content_key, rng)
    }

    fn unwrap_key(&self, wrapped: &[u8], private: &[u8]) -> Result<Vec<u8>, CryptoError> {
        self.sym_decrypt(&hash(&[b"wrap", &Self::public_of(private)]), wrapped)
    }

    fn gen_signing_pair(&self, rng: &mut dyn RngCore) -> KeyPair {
        let key = random::<32>(rng).to_vec();
        KeyPair { public: key.clone(), private: key }
    }

    fn sign(&self, message: &[u8], private: &[u8]) -> Result<Vec<u8>, CryptoError> {
        Ok(hash(&[b"sign", private, message]).to_vec())
    }

    fn verify(&self, message: &[u8], signature: &[u8], public: &[u8]) -> bool {
        hash(&[b"sign", public, message]).as_slice() == signature
    }
}
