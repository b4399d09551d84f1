//! Weighted fusion of the three anomaly maps, image-level scoring, and the
//! AUROC evaluation harness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featbank::{ObjectBank, PatchBank};
use crate::featscore::{object_anomaly_map, patch_anomaly_map};
use crate::scene::{CategorizedScene, Label};
use crate::score::ScoreMap;
use crate::textbank::TextBank;
use crate::textscore::{text_anomaly_map, MatchReport};

/// Fusion weights for the text, object, and patch maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub lambda_text: f64,
    pub lambda_object: f64,
    pub lambda_patch: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            lambda_text: 0.05,
            lambda_object: 0.3,
            lambda_patch: 0.65,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_text", self.lambda_text),
            ("lambda_object", self.lambda_object),
            ("lambda_patch", self.lambda_patch),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Invalid(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// `S_pixel = clamp01(λ_T·S_T + λ_O·S_O + λ_P·S_P)`.
pub fn fuse(
    text: &ScoreMap,
    object: &ScoreMap,
    patch: &ScoreMap,
    cfg: &FusionConfig,
) -> Result<ScoreMap> {
    cfg.validate()?;
    if !text.same_size(object) || !text.same_size(patch) {
        return Err(Error::SizeMismatch {
            left_w: text.width(),
            left_h: text.height(),
            right_w: if text.same_size(object) {
                patch.width()
            } else {
                object.width()
            },
            right_h: if text.same_size(object) {
                patch.height()
            } else {
                object.height()
            },
        });
    }
    let values: Vec<f64> = text
        .values()
        .iter()
        .zip(object.values())
        .zip(patch.values())
        .map(|((&t, &o), &p)| cfg.lambda_text * t + cfg.lambda_object * o + cfg.lambda_patch * p)
        .collect();
    ScoreMap::from_values(text.width(), text.height(), values)
}

/// Image-level anomaly score: the maximum pixel of the fused map.
pub fn image_score(map: &ScoreMap) -> f64 {
    map.max_value()
}

/// Mann–Whitney AUROC with average-rank tie handling:
/// `P(score_pos > score_neg) + ½·P(equal)`.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Invalid("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based average rank of the tie group [i, j].
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos as f64) * (n_pos as f64 + 1.0) / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// The three banks of one engine instance. Text banks are kept per image
/// category, mirroring the per-category keying of the feature banks.
#[derive(Debug, Clone, PartialEq)]
pub struct BankSet {
    pub text: BTreeMap<String, TextBank>,
    pub object: ObjectBank,
    pub patch: PatchBank,
}

impl BankSet {
    pub fn text_bank(&self, category: &str) -> Result<&TextBank> {
        self.text
            .get(category)
            .ok_or_else(|| Error::UnknownCategory(category.to_string()))
    }
}

/// Builds all three banks from normal scenes grouped by category.
pub fn build_bank_set(
    scenes: &[CategorizedScene],
    k_object: usize,
    k_patch: usize,
    seed: u64,
    bank_resolution: (u32, u32),
) -> Result<BankSet> {
    if scenes.is_empty() {
        return Err(Error::EmptyInput("bank build needs at least one scene"));
    }
    for s in scenes {
        if s.scene.label != Label::Normal {
            return Err(Error::Invalid(format!(
                "bank construction requires normal scenes, {} is anomalous",
                s.scene.image_id
            )));
        }
        s.scene.validate()?;
    }
    let mut by_category: BTreeMap<&str, Vec<&crate::scene::SceneBundle>> = BTreeMap::new();
    for s in scenes {
        by_category.entry(s.category.as_str()).or_default().push(&s.scene);
    }
    let mut text = BTreeMap::new();
    for (category, group) in &by_category {
        let owned: Vec<crate::scene::SceneBundle> = group.iter().map(|s| (*s).clone()).collect();
        text.insert(
            category.to_string(),
            crate::textbank::build_text_bank(&owned, bank_resolution)?,
        );
    }
    let pairs = || scenes.iter().map(|s| (s.category.as_str(), &s.scene));
    let object = crate::featbank::build_object_bank(pairs(), k_object, seed)?;
    let patch = crate::featbank::build_patch_bank(pairs(), k_patch, seed)?;
    Ok(BankSet { text, object, patch })
}

/// Everything scored for one query.
#[derive(Debug, Clone)]
pub struct ScoredQuery {
    pub image_id: String,
    pub label: Label,
    pub text_map: ScoreMap,
    pub object_map: ScoreMap,
    pub patch_map: ScoreMap,
    pub fused_map: ScoreMap,
    pub report: MatchReport,
}

/// Scores one query against the banks of its category.
pub fn score_query(
    banks: &BankSet,
    query: &CategorizedScene,
    cfg: &FusionConfig,
    relaxed: bool,
) -> Result<ScoredQuery> {
    let text_bank = banks.text_bank(&query.category)?;
    let (text_map, report) = text_anomaly_map(&query.scene, text_bank, relaxed)?;
    let object_map = object_anomaly_map(&query.scene, &banks.object, &query.category)?;
    let patch_map = patch_anomaly_map(&query.scene, &banks.patch, &query.category)?;
    let fused_map = fuse(&text_map, &object_map, &patch_map, cfg)?;
    Ok(ScoredQuery {
        image_id: query.scene.image_id.clone(),
        label: query.scene.label,
        text_map,
        object_map,
        patch_map,
        fused_map,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerBankAuroc {
    pub text: f64,
    pub object: f64,
    pub patch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub image_id: String,
    pub label: Label,
    pub image_score: f64,
    pub text_max: f64,
    pub object_max: f64,
    pub patch_max: f64,
}

/// Evaluation output: fused image AUROC, pooled pixel AUROC (when ground
/// truth is present), per-bank image AUROCs, and one record per query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub image_auroc: f64,
    pub pixel_auroc: Option<f64>,
    pub per_bank_image_auroc: PerBankAuroc,
    pub per_query: Vec<QueryRecord>,
}

/// Scores every query, fuses the maps, and computes image-level and pooled
/// pixel-level AUROCs. Normal queries contribute all-negative pixels; an
/// anomalous query contributes pixels only when it carries ground truth.
pub fn evaluate(
    banks: &BankSet,
    queries: &[CategorizedScene],
    cfg: &FusionConfig,
    relaxed: bool,
) -> Result<MetricsReport> {
    if queries.is_empty() {
        return Err(Error::EmptyInput("evaluation needs at least one query"));
    }
    let mut records = Vec::with_capacity(queries.len());
    let mut labels = Vec::with_capacity(queries.len());
    let mut fused_scores = Vec::with_capacity(queries.len());
    let mut text_scores = Vec::with_capacity(queries.len());
    let mut object_scores = Vec::with_capacity(queries.len());
    let mut patch_scores = Vec::with_capacity(queries.len());
    let mut pixel_scores = Vec::new();
    let mut pixel_labels = Vec::new();

    for query in queries {
        let scored = score_query(banks, query, cfg, relaxed)?;
        let record = QueryRecord {
            image_id: scored.image_id.clone(),
            label: scored.label,
            image_score: image_score(&scored.fused_map),
            text_max: scored.text_map.max_value(),
            object_max: scored.object_map.max_value(),
            patch_max: scored.patch_map.max_value(),
        };
        labels.push(scored.label == Label::Anomalous);
        fused_scores.push(record.image_score);
        text_scores.push(record.text_max);
        object_scores.push(record.object_max);
        patch_scores.push(record.patch_max);
        match (scored.label, &query.scene.gt_anomaly) {
            (Label::Normal, _) => {
                pixel_scores.extend_from_slice(scored.fused_map.values());
                pixel_labels.extend(std::iter::repeat_n(false, scored.fused_map.values().len()));
            }
            (Label::Anomalous, Some(gt)) => {
                pixel_scores.extend_from_slice(scored.fused_map.values());
                pixel_labels.extend(gt.bits().iter().copied());
            }
            (Label::Anomalous, None) => {}
        }
        records.push(record);
    }

    let image_auroc = auroc(&fused_scores, &labels)?;
    let per_bank_image_auroc = PerBankAuroc {
        text: auroc(&text_scores, &labels)?,
        object: auroc(&object_scores, &labels)?,
        patch: auroc(&patch_scores, &labels)?,
    };
    let pixel_auroc = if pixel_labels.iter().any(|&l| l) && pixel_labels.iter().any(|&l| !l) {
        Some(auroc(&pixel_scores, &pixel_labels)?)
    } else {
        None
    };

    Ok(MetricsReport {
        image_auroc,
        pixel_auroc,
        per_bank_image_auroc,
        per_query: records,
    })
}
