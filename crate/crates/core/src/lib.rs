//! Memory-bank anomaly scoring engine.
//!
//! Three complementary banks built from normal-image descriptors — a
//! class-level text bank, an object-level feature bank, and a patch-level
//! feature bank — score query images into per-pixel anomaly maps that are
//! fused into a single map whose maximum is the image-level score. The crate
//! also carries the AUROC evaluation harness. Neural extractors are out of
//! scope: scenes arrive as pre-extracted descriptor bundles.

pub mod error;
pub mod featbank;
pub mod featscore;
pub mod feature;
pub mod fusion;
pub mod mask;
pub mod scene;
pub mod score;
pub mod text;
pub mod textbank;
pub mod textscore;

pub use error::{Error, Result};
pub use featbank::{build_object_bank, build_patch_bank, kmeans, ObjectBank, PatchBank};
pub use featscore::{object_anomaly_map, patch_anomaly_map};
pub use feature::{cosine_similarity, FeatureVector};
pub use fusion::{
    auroc, build_bank_set, evaluate, fuse, image_score, score_query, BankSet, FusionConfig,
    MetricsReport, PerBankAuroc, QueryRecord, ScoredQuery,
};
pub use mask::Mask;
pub use scene::{
    CategorizedScene, Label, ObjectDescriptor, PatchFeatureMap, PatchLayer, SceneBundle,
};
pub use score::ScoreMap;
pub use text::{CategoryText, ImageText, Position};
pub use textbank::{build_text_bank, serialize_text, TextBank};
pub use textscore::{
    find_most_similar, gestalt_ratio, size_alpha, text_anomaly_map, MatchReport, Violation,
    ViolationKind,
};
