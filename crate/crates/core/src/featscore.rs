//! Object-level and patch-level anomaly maps: per-item nearest-centroid
//! cosine dissimilarity against the feature banks.

use crate::error::{Error, Result};
use crate::featbank::{ObjectBank, PatchBank};
use crate::feature::{cosine_similarity, FeatureVector};
use crate::scene::SceneBundle;
use crate::score::ScoreMap;

/// `1 − max cosine` against the centroid set, clamped to `[0, 1]`.
fn dissimilarity(centroids: &[FeatureVector], feature: &FeatureVector) -> Result<f64> {
    let mut best = -1.0f64;
    for c in centroids {
        let s = cosine_similarity(c, feature)?;
        if s > best {
            best = s;
        }
    }
    Ok((1.0 - best).clamp(0.0, 1.0))
}

/// Object-level map `S_O`: each query object contributes its dissimilarity
/// over its own mask; overlaps add up and the final map is clamped.
pub fn object_anomaly_map(
    query: &SceneBundle,
    bank: &ObjectBank,
    category: &str,
) -> Result<ScoreMap> {
    let centroids = bank
        .centroids(category)
        .ok_or_else(|| Error::UnknownCategory(category.to_string()))?;
    let mut values = vec![0.0f64; (query.width as usize) * (query.height as usize)];
    for obj in &query.objects {
        let term = dissimilarity(centroids, &obj.feature)?;
        if obj.mask.width() != query.width || obj.mask.height() != query.height {
            return Err(Error::SizeMismatch {
                left_w: obj.mask.width(),
                left_h: obj.mask.height(),
                right_w: query.width,
                right_h: query.height,
            });
        }
        for (v, &b) in values.iter_mut().zip(obj.mask.bits()) {
            if b {
                *v += term;
            }
        }
    }
    ScoreMap::from_values(query.width, query.height, values)
}

/// Patch-level map `S_P`: per layer, each grid cell scores its
/// nearest-centroid dissimilarity; layer maps are averaged with uniform
/// weights (fixed layer-id order) and the average is bilinearly upsampled to
/// the query resolution.
pub fn patch_anomaly_map(
    query: &SceneBundle,
    bank: &PatchBank,
    category: &str,
) -> Result<ScoreMap> {
    let bank_layers = bank
        .category_layers(category)
        .ok_or_else(|| Error::UnknownCategory(category.to_string()))?;
    let query_ids = query.patches.layer_ids_sorted();
    let bank_ids: Vec<&str> = bank_layers.keys().map(|s| s.as_str()).collect();
    if query_ids != bank_ids {
        return Err(Error::LayerMismatch(format!(
            "query layers {query_ids:?} do not match bank layers {bank_ids:?}"
        )));
    }
    let (gw, gh) = query.patches.grid();
    let cells = (gw as usize) * (gh as usize);
    let mut sum = vec![0.0f64; cells];
    // Layers accumulate in sorted-id order so the average is a fixed-order sum.
    for layer_id in &query_ids {
        let layer = query.patches.layer(layer_id).expect("id from this map");
        let centroids = &bank_layers[*layer_id];
        if centroids[0].dim() != layer.dim() as usize {
            return Err(Error::DimensionMismatch {
                expected: centroids[0].dim(),
                actual: layer.dim() as usize,
            });
        }
        for y in 0..gh {
            for x in 0..gw {
                let feature = FeatureVector::new(layer.cell(x, y).to_vec())?;
                let score = dissimilarity(centroids, &feature)?;
                sum[(y as usize) * (gw as usize) + x as usize] += score;
            }
        }
    }
    let n = query_ids.len() as f64;
    for v in &mut sum {
        *v /= n;
    }
    let grid_map = ScoreMap::from_values(gw, gh, sum)?;
    grid_map.upsample_bilinear(query.width, query.height)
}
