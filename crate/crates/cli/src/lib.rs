//! Command-line pipeline around the scoring engine: dataset ingestion, bank
//! persistence, scoring, evaluation, and synthetic dataset generation.

pub mod commands;
pub mod config;
pub mod container;
pub mod dataset;
pub mod error;
pub mod pgm;

pub use commands::{cmd_build_bank, cmd_eval, cmd_score, cmd_synth_gen};
pub use config::{resolve_config, ConfigOverrides, EngineConfig, CONFIG_ENV_VAR};
pub use container::{decode_container, encode_container, read_container, write_container};
pub use dataset::{read_dataset, read_scene, write_dataset, write_scene, Manifest, ManifestEntry};
pub use error::CliError;
