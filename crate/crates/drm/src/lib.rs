//! Reference DRM system on top of the mixsys engine: content protection,
//! license issuance over the DRMS component model, and usage-rule
//! enforcement at consumption.

pub mod behaviors;
pub mod crypto;
pub mod demo;
pub mod license;
pub mod reader;
pub mod store;
pub mod system;

pub use crypto::{CryptoError, CryptoSuite, KeyPair, ProductionSuite, TestSuite};
pub use license::{DeviceClass, License, LicenseError, UsageRules};
pub use reader::{Denial, Reader};
pub use store::{ContentItem, UsageReport, UserProfile};
pub use system::{DrmError, DrmSystem, Issued};
