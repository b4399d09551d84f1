//! Object-level and patch-level feature memory banks, compressed per
//! category with seeded K-means coresets.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::scene::SceneBundle;

const MAX_ITERATIONS: usize = 100;
const RELATIVE_IMPROVEMENT: f64 = 1e-4;

/// Centroids plus the per-iteration inertia trajectory (assignments are made
/// with the centroids current at the start of each iteration).
#[derive(Debug, Clone)]
pub struct KmeansRun {
    pub centroids: Vec<FeatureVector>,
    pub inertia_history: Vec<f64>,
}

/// Seeded, fully deterministic Lloyd's algorithm with k-means++
/// initialization. With `|points| <= k` the points themselves are returned.
/// Iteration stops after 100 rounds or when the relative inertia improvement
/// drops below 1e-4; empty clusters are reseeded to the point farthest from
/// its assigned centroid.
pub fn kmeans(points: &[FeatureVector], k: usize, seed: u64) -> Result<Vec<FeatureVector>> {
    kmeans_run(points, k, seed).map(|r| r.centroids)
}

pub fn kmeans_run(points: &[FeatureVector], k: usize, seed: u64) -> Result<KmeansRun> {
    if points.is_empty() {
        return Err(Error::EmptyInput("kmeans needs at least one point"));
    }
    if k < 1 {
        return Err(Error::Invalid("kmeans needs k >= 1".into()));
    }
    let dim = points[0].dim();
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.dim(),
            });
        }
    }
    if points.len() <= k {
        return Ok(KmeansRun {
            centroids: points.to_vec(),
            inertia_history: vec![0.0],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut history = Vec::new();
    let mut prev_inertia = f64::INFINITY;

    for _ in 0..MAX_ITERATIONS {
        let (assignments, distances, inertia) = assign(points, &centroids);
        history.push(inertia);
        if prev_inertia.is_finite() {
            let improvement = prev_inertia - inertia;
            if improvement < RELATIVE_IMPROVEMENT * prev_inertia {
                break;
            }
        }
        if inertia == 0.0 {
            break;
        }
        prev_inertia = inertia;
        centroids = update_means(points, &assignments, &distances, k, dim);
    }

    Ok(KmeansRun {
        centroids,
        inertia_history: history,
    })
}

fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

fn plus_plus_init(points: &[FeatureVector], k: usize, rng: &mut ChaCha8Rng) -> Vec<FeatureVector> {
    let first = rng.random_range(0..points.len());
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p.values(), centroids[0].values()))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            // Sample proportional to squared distance via a cumulative scan.
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > r {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All points coincide with some centroid already.
            rng.random_range(0..points.len())
        };
        centroids.push(points[next].clone());
        let new = centroids.last().unwrap();
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p.values(), new.values());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// Nearest-centroid assignment (ties to the lowest centroid index), the
/// point-to-centroid distances, and the total inertia.
fn assign(points: &[FeatureVector], centroids: &[FeatureVector]) -> (Vec<usize>, Vec<f64>, f64) {
    let mut assignments = Vec::with_capacity(points.len());
    let mut distances = Vec::with_capacity(points.len());
    let mut inertia = 0.0;
    for p in points {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_dist(p.values(), centroid.values());
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments.push(best);
        distances.push(best_d);
        inertia += best_d;
    }
    (assignments, distances, inertia)
}

fn update_means(
    points: &[FeatureVector],
    assignments: &[usize],
    distances: &[f64],
    k: usize,
    dim: usize,
) -> Vec<FeatureVector> {
    let mut sums = vec![vec![0.0f64; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (s, &v) in sums[c].iter_mut().zip(p.values()) {
            *s += v as f64;
        }
    }
    // Reseed empty clusters to the farthest unclaimed points, most distant
    // first, lowest point index on ties.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| distances[j].total_cmp(&distances[i]).then(i.cmp(&j)));
    let mut far = order.into_iter();
    let mut centroids = Vec::with_capacity(k);
    for c in 0..k {
        if counts[c] == 0 {
            let idx = far.next().expect("more points than clusters");
            centroids.push(points[idx].clone());
        } else {
            let n = counts[c] as f64;
            let values: Vec<f32> = sums[c].iter().map(|&s| (s / n) as f32).collect();
            centroids.push(FeatureVector::new(values).expect("mean of finite points"));
        }
    }
    centroids
}

fn mix_seed(seed: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, then a splitmix64 finalizer.
    let mut h = 0xcbf29ce484222325u64 ^ seed;
    for b in tag.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = h.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Per-category K-means centroids of segmented-object features.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectBank {
    centroids_by_category: BTreeMap<String, Vec<FeatureVector>>,
    k_object: usize,
    dim: usize,
}

impl ObjectBank {
    pub fn from_parts(
        centroids_by_category: BTreeMap<String, Vec<FeatureVector>>,
        k_object: usize,
        dim: usize,
    ) -> Result<Self> {
        for (cat, centroids) in &centroids_by_category {
            if centroids.is_empty() {
                return Err(Error::Invalid(format!("category {cat} has no centroids")));
            }
            for c in centroids {
                if c.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: c.dim(),
                    });
                }
            }
        }
        Ok(ObjectBank {
            centroids_by_category,
            k_object,
            dim,
        })
    }

    pub fn centroids(&self, category: &str) -> Option<&[FeatureVector]> {
        self.centroids_by_category.get(category).map(|v| v.as_slice())
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.centroids_by_category.keys().map(|s| s.as_str())
    }

    pub fn by_category(&self) -> &BTreeMap<String, Vec<FeatureVector>> {
        &self.centroids_by_category
    }

    pub fn k_object(&self) -> usize {
        self.k_object
    }

    /// Uniform feature dimension; 0 for a bank with no objects at all.
    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Pools every object feature per category across the given normal scenes
/// and stores `kmeans(pool, k_object)`. Categories without any objects are
/// omitted.
pub fn build_object_bank<'a, I>(scenes: I, k_object: usize, seed: u64) -> Result<ObjectBank>
where
    I: IntoIterator<Item = (&'a str, &'a SceneBundle)>,
{
    if k_object < 1 {
        return Err(Error::Invalid("k_object must be >= 1".into()));
    }
    let mut pools: BTreeMap<String, Vec<FeatureVector>> = BTreeMap::new();
    for (category, scene) in scenes {
        let pool = pools.entry(category.to_string()).or_default();
        for obj in &scene.objects {
            pool.push(obj.feature.clone());
        }
    }
    let mut dim = 0usize;
    for pool in pools.values() {
        for f in pool {
            if dim == 0 {
                dim = f.dim();
            } else if f.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: f.dim(),
                });
            }
        }
    }
    let mut centroids_by_category = BTreeMap::new();
    for (category, pool) in pools {
        if pool.is_empty() {
            continue; // category with zero objects is omitted
        }
        let centroids = kmeans(&pool, k_object, mix_seed(seed, &format!("object/{category}")))?;
        centroids_by_category.insert(category, centroids);
    }
    ObjectBank::from_parts(centroids_by_category, k_object, dim)
}

/// Per-category, per-layer K-means centroids of patch features.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchBank {
    centroids: BTreeMap<String, BTreeMap<String, Vec<FeatureVector>>>,
    k_patch: usize,
}

impl PatchBank {
    pub fn from_parts(
        centroids: BTreeMap<String, BTreeMap<String, Vec<FeatureVector>>>,
        k_patch: usize,
    ) -> Result<Self> {
        // The layer set must be identical across categories.
        let mut layer_sets = centroids.values().map(|layers| {
            layers.keys().cloned().collect::<BTreeSet<String>>()
        });
        if let Some(first) = layer_sets.next() {
            for set in layer_sets {
                if set != first {
                    return Err(Error::LayerMismatch(
                        "categories carry different layer sets".into(),
                    ));
                }
            }
        }
        for layers in centroids.values() {
            for (layer_id, cs) in layers {
                if cs.is_empty() {
                    return Err(Error::Invalid(format!("layer {layer_id} has no centroids")));
                }
                let dim = cs[0].dim();
                if cs.iter().any(|c| c.dim() != dim) {
                    return Err(Error::Invalid(format!(
                        "layer {layer_id} mixes centroid dimensions"
                    )));
                }
            }
        }
        Ok(PatchBank { centroids, k_patch })
    }

    pub fn layer_centroids(&self, category: &str, layer_id: &str) -> Option<&[FeatureVector]> {
        self.centroids
            .get(category)
            .and_then(|layers| layers.get(layer_id))
            .map(|v| v.as_slice())
    }

    pub fn category_layers(&self, category: &str) -> Option<&BTreeMap<String, Vec<FeatureVector>>> {
        self.centroids.get(category)
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.centroids.keys().map(|s| s.as_str())
    }

    pub fn by_category(&self) -> &BTreeMap<String, BTreeMap<String, Vec<FeatureVector>>> {
        &self.centroids
    }

    pub fn k_patch(&self) -> usize {
        self.k_patch
    }
}

/// Pools every patch vector per (category, layer), flattening each grid, and
/// stores `kmeans(pool, k_patch)`. Layer sets must agree across the scenes
/// of a category and across categories.
pub fn build_patch_bank<'a, I>(scenes: I, k_patch: usize, seed: u64) -> Result<PatchBank>
where
    I: IntoIterator<Item = (&'a str, &'a SceneBundle)>,
{
    if k_patch < 1 {
        return Err(Error::Invalid("k_patch must be >= 1".into()));
    }
    let mut pools: BTreeMap<String, BTreeMap<String, Vec<FeatureVector>>> = BTreeMap::new();
    let mut layer_sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (category, scene) in scenes {
        let ids: BTreeSet<String> = scene
            .patches
            .layers()
            .iter()
            .map(|l| l.layer_id().to_string())
            .collect();
        match layer_sets.get(category) {
            Some(expected) if *expected != ids => {
                return Err(Error::LayerMismatch(format!(
                    "scene {} of category {category} has layers {:?}, expected {:?}",
                    scene.image_id, ids, expected
                )));
            }
            Some(_) => {}
            None => {
                layer_sets.insert(category.to_string(), ids);
            }
        }
        let per_layer = pools.entry(category.to_string()).or_default();
        for layer in scene.patches.layers() {
            let pool = per_layer.entry(layer.layer_id().to_string()).or_default();
            for y in 0..layer.grid_height() {
                for x in 0..layer.grid_width() {
                    pool.push(FeatureVector::new(layer.cell(x, y).to_vec())?);
                }
            }
        }
    }
    let mut sets = layer_sets.values();
    if let Some(first) = sets.next() {
        for set in sets {
            if set != first {
                return Err(Error::LayerMismatch(
                    "categories carry different layer sets".into(),
                ));
            }
        }
    }
    let mut centroids = BTreeMap::new();
    for (category, per_layer) in pools {
        let mut layers = BTreeMap::new();
        for (layer_id, pool) in per_layer {
            let cs = kmeans(
                &pool,
                k_patch,
                mix_seed(seed, &format!("patch/{category}/{layer_id}")),
            )?;
            layers.insert(layer_id, cs);
        }
        centroids.insert(category, layers);
    }
    PatchBank::from_parts(centroids, k_patch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f32]) -> FeatureVector {
        FeatureVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn k_at_least_pool_returns_points() {
        let points = vec![fv(&[0.0, 1.0]), fv(&[2.0, 3.0]), fv(&[4.0, 5.0])];
        let run = kmeans_run(&points, 3, 42).unwrap();
        assert_eq!(run.centroids, points);
        assert_eq!(run.inertia_history, vec![0.0]);
        assert_eq!(kmeans(&points, 10, 42).unwrap(), points);
    }

    #[test]
    fn k_one_converges_to_mean() {
        let points = vec![fv(&[0.0, 0.0]), fv(&[2.0, 0.0]), fv(&[4.0, 6.0])];
        let got = kmeans(&points, 1, 7).unwrap();
        assert_eq!(got.len(), 1);
        let mean = [2.0f32, 2.0f32];
        for (g, m) in got[0].values().iter().zip(mean) {
            assert!((g - m).abs() < 1e-6);
        }
    }

    #[test]
    fn two_well_separated_pairs() {
        let points = vec![
            fv(&[0.0, 0.0]),
            fv(&[0.0, 1.0]),
            fv(&[10.0, 0.0]),
            fv(&[10.0, 1.0]),
        ];
        // Exhaustive oracle over both balanced bipartitions: the optimal
        // 2-clustering is {(0,0),(0,1)} and {(10,0),(10,1)} with means
        // (0,0.5) and (10,0.5).
        let got = kmeans(&points, 2, 3).unwrap();
        let mut means: Vec<Vec<f32>> = got.iter().map(|c| c.values().to_vec()).collect();
        means.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!((means[0][0] - 0.0).abs() < 1e-6 && (means[0][1] - 0.5).abs() < 1e-6);
        assert!((means[1][0] - 10.0).abs() < 1e-6 && (means[1][1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(kmeans(&[], 2, 0), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn inertia_is_non_increasing() {
        let mut points = Vec::new();
        // Deterministic pseudo-random scatter.
        let mut state = 0x12345678u64;
        for _ in 0..200 {
            let mut coords = Vec::new();
            for _ in 0..4 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                coords.push(((state >> 33) as f32) / (u32::MAX as f32));
            }
            points.push(fv(&coords));
        }
        let run = kmeans_run(&points, 8, 99).unwrap();
        for pair in run.inertia_history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9 * pair[0].max(1.0),
                "inertia went up: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let points: Vec<FeatureVector> = (0..50)
            .map(|i| fv(&[(i % 7) as f32, (i % 13) as f32, (i % 3) as f32]))
            .collect();
        let a = kmeans(&points, 5, 11).unwrap();
        let b = kmeans(&points, 5, 11).unwrap();
        assert_eq!(a, b);
        let c = kmeans(&points, 5, 12).unwrap();
        // A different seed may pick different centroids; equality is not
        // required, but both runs must be valid coresets.
        assert_eq!(c.len(), 5);
    }

    #[test]
    fn identical_points_collapse() {
        let points = vec![fv(&[0.5, 0.25]); 20];
        let got = kmeans(&points, 4, 5).unwrap();
        for c in &got {
            assert_eq!(c.values(), points[0].values());
        }
    }

    use crate::mask::Mask;
    use crate::scene::{Label, ObjectDescriptor, PatchFeatureMap, PatchLayer, SceneBundle};
    use crate::text::ImageText;
    use std::collections::BTreeMap;

    fn scene_with_objects(id: &str, features: Vec<FeatureVector>) -> SceneBundle {
        scene_with(id, features, vec![0.5; 8])
    }

    fn scene_with(id: &str, features: Vec<FeatureVector>, patch_values: Vec<f32>) -> SceneBundle {
        SceneBundle {
            image_id: id.into(),
            width: 4,
            height: 4,
            text: ImageText::new(id.into(), vec![]).unwrap(),
            category_masks: BTreeMap::new(),
            objects: features
                .into_iter()
                .map(|feature| ObjectDescriptor {
                    feature,
                    mask: Mask::new(4, 4),
                })
                .collect(),
            patches: PatchFeatureMap::new(vec![PatchLayer::new(
                "enc".into(),
                2,
                2,
                (patch_values.len() / 4) as u32,
                patch_values,
            )
            .unwrap()])
            .unwrap(),
            gt_anomaly: None,
            label: Label::Normal,
        }
    }

    #[test]
    fn object_bank_stores_raw_features_below_k() {
        let features: Vec<FeatureVector> =
            (0..5).map(|i| fv(&[i as f32, 1.0])).collect();
        let scene = scene_with_objects("a", features.clone());
        let bank = build_object_bank([("cat", &scene)], 1000, 0).unwrap();
        assert_eq!(bank.centroids("cat").unwrap(), features.as_slice());
        assert_eq!(bank.dim(), 2);
    }

    #[test]
    fn object_bank_categories_are_independent() {
        let a = scene_with_objects("a", vec![fv(&[1.0, 0.0])]);
        let b = scene_with_objects("b", vec![fv(&[0.0, 1.0]), fv(&[0.0, 2.0])]);
        let bank = build_object_bank([("cat-a", &a), ("cat-b", &b)], 10, 0).unwrap();
        assert_eq!(bank.centroids("cat-a").unwrap().len(), 1);
        assert_eq!(bank.centroids("cat-b").unwrap().len(), 2);
        assert_eq!(bank.categories().collect::<Vec<_>>(), ["cat-a", "cat-b"]);
    }

    #[test]
    fn object_bank_identical_pool_collapses_to_one_value() {
        // 2000 identical vectors with k = 1000: Lloyd converges to the
        // common point, every centroid carries the same value.
        let point = fv(&[0.25, -0.75, 0.5]);
        let scenes: Vec<SceneBundle> = (0..10)
            .map(|i| scene_with_objects(&format!("s{i}"), vec![point.clone(); 200]))
            .collect();
        let pairs: Vec<(&str, &SceneBundle)> = scenes.iter().map(|s| ("cat", s)).collect();
        let bank = build_object_bank(pairs, 1000, 7).unwrap();
        let centroids = bank.centroids("cat").unwrap();
        assert_eq!(centroids.len(), 1000);
        for c in centroids {
            assert_eq!(c.values(), point.values());
        }
    }

    #[test]
    fn object_bank_omits_empty_categories_and_checks_dim() {
        let empty = scene_with_objects("e", vec![]);
        let full = scene_with_objects("f", vec![fv(&[1.0, 2.0])]);
        let bank = build_object_bank([("empty", &empty), ("full", &full)], 10, 0).unwrap();
        assert!(bank.centroids("empty").is_none());
        assert!(bank.centroids("full").is_some());

        let odd = scene_with_objects("o", vec![fv(&[1.0, 2.0, 3.0])]);
        assert!(matches!(
            build_object_bank([("full", &full), ("odd", &odd)], 10, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn patch_bank_pools_grid_cells() {
        // One 2x2xD layer pools 4 vectors; k above the pool keeps them raw.
        let scene = scene_with("a", vec![], vec![1.0, 2.0, 3.0, 4.0]); // dim 1
        let bank = build_patch_bank([("cat", &scene)], 100, 0).unwrap();
        let centroids = bank.layer_centroids("cat", "enc").unwrap();
        assert_eq!(centroids.len(), 4);
        let values: Vec<f32> = centroids.iter().map(|c| c.values()[0]).collect();
        assert_eq!(values, [1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn patch_bank_rejects_inconsistent_layer_sets() {
        let a = scene_with("a", vec![], vec![0.0; 8]);
        let mut b = scene_with("b", vec![], vec![0.0; 8]);
        b.patches = PatchFeatureMap::new(vec![PatchLayer::new(
            "other".into(),
            2,
            2,
            2,
            vec![0.0; 8],
        )
        .unwrap()])
        .unwrap();
        assert!(matches!(
            build_patch_bank([("cat", &a), ("cat", &b)], 10, 0),
            Err(Error::LayerMismatch(_))
        ));
        // Across categories the layer sets must agree too.
        assert!(matches!(
            build_patch_bank([("cat-a", &a), ("cat-b", &b)], 10, 0),
            Err(Error::LayerMismatch(_))
        ));
    }

    #[test]
    fn patch_bank_two_blob_bipartition_oracle() {
        // Two well-separated blobs of 2-d cells; k = 2 centroids must land
        // within 1e-6 of the blob means found by exhaustive bipartition.
        let mut cells = Vec::new();
        for i in 0..6 {
            cells.extend_from_slice(&[0.1 * i as f32, 1.0 + 0.05 * i as f32]);
        }
        for i in 0..6 {
            cells.extend_from_slice(&[10.0 + 0.1 * i as f32, -3.0 - 0.05 * i as f32]);
        }
        // Split the 12 cells over three scenes (grid 2x2, dim 2).
        let scenes: Vec<SceneBundle> = (0..3)
            .map(|s| scene_with(&format!("s{s}"), vec![], cells[s * 8..(s + 1) * 8].to_vec()))
            .collect();
        let pairs: Vec<(&str, &SceneBundle)> = scenes.iter().map(|s| ("cat", s)).collect();
        let bank = build_patch_bank(pairs, 2, 123).unwrap();
        let got = bank.layer_centroids("cat", "enc").unwrap();
        assert_eq!(got.len(), 2);

        // Exhaustive oracle over all 2^12 bipartitions.
        let points: Vec<[f64; 2]> = cells
            .chunks_exact(2)
            .map(|c| [c[0] as f64, c[1] as f64])
            .collect();
        let mut best: Option<(f64, [f64; 2], [f64; 2])> = None;
        for split in 1u32..(1 << 12) - 1 {
            let mut sums = [[0.0f64; 2]; 2];
            let mut counts = [0usize; 2];
            for (i, p) in points.iter().enumerate() {
                let side = ((split >> i) & 1) as usize;
                counts[side] += 1;
                sums[side][0] += p[0];
                sums[side][1] += p[1];
            }
            let means = [
                [sums[0][0] / counts[0] as f64, sums[0][1] / counts[0] as f64],
                [sums[1][0] / counts[1] as f64, sums[1][1] / counts[1] as f64],
            ];
            let mut inertia = 0.0;
            for (i, p) in points.iter().enumerate() {
                let m = means[((split >> i) & 1) as usize];
                inertia += (p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2);
            }
            if best.is_none() || inertia < best.unwrap().0 {
                best = Some((inertia, means[0], means[1]));
            }
        }
        let (_, m0, m1) = best.unwrap();
        let mut want = [m0, m1];
        want.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut got_means: Vec<[f64; 2]> = got
            .iter()
            .map(|c| [c.values()[0] as f64, c.values()[1] as f64])
            .collect();
        got_means.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (g, w) in got_means.iter().zip(want) {
            assert!((g[0] - w[0]).abs() < 1e-6 && (g[1] - w[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn bank_builds_are_bit_deterministic() {
        let scenes: Vec<SceneBundle> = (0..4)
            .map(|i| {
                scene_with_objects(
                    &format!("s{i}"),
                    (0..40).map(|j| fv(&[(i * 40 + j) as f32 % 7.0, j as f32 % 3.0])).collect(),
                )
            })
            .collect();
        let pairs = || scenes.iter().map(|s| ("cat", s));
        let a = build_object_bank(pairs(), 8, 42).unwrap();
        let b = build_object_bank(pairs(), 8, 42).unwrap();
        assert_eq!(a, b);
        let pa = build_patch_bank(pairs(), 3, 42).unwrap();
        let pb = build_patch_bank(pairs(), 3, 42).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn coreset_soundness_under_centroid_removal() {
        let points: Vec<FeatureVector> = (0..60)
            .map(|i| fv(&[(i * i % 17) as f32, (i % 5) as f32]))
            .collect();
        let centroids = kmeans(&points, 6, 21).unwrap();
        let nearest = |cs: &[FeatureVector], p: &FeatureVector| {
            cs.iter()
                .map(|c| sq_dist(c.values(), p.values()))
                .fold(f64::INFINITY, f64::min)
        };
        for drop in 0..centroids.len() {
            let subset: Vec<FeatureVector> = centroids
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, c)| c.clone())
                .collect();
            for p in &points {
                assert!(nearest(&centroids, p) <= nearest(&subset, p) + 1e-12);
            }
        }
    }
}
