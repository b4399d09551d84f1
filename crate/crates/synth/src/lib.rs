//! Deterministic synthetic scene generator standing in for the neural
//! extractors: seeded rectangle layouts with exact text descriptions,
//! prototype-based object and patch features, and coherent anomaly
//! injection with ground-truth masks.

pub mod error;
mod generate;
mod inject;
pub mod spec;
mod world;

pub use error::SynthError;
pub use generate::generate_normal_scene;
pub use inject::{inject_anomaly, AnomalyKind};
pub use spec::{ExtraClassSpec, LayerSpec, LayoutItem, WorldSpec};
pub use world::World;
