//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! 1. Logical separation on the synthetic suite (text bank, AUROC exactly 1).
//! 2. Structural separation (patch pixel AUROC >= 0.95, fused image AUROC 1).
//! 3. Coreset/brute-force equivalence with k >= pool sizes (<= 1e-6).
//! 4. Gestalt ratio against an independent reference implementation.
//! 5. AUROC against the O(n^2) pairwise oracle and monotone invariance.
//! 6. Fusion fidelity: hand arithmetic and bit-exact projection.
//! 7. Full branch coverage of the text comparison with exact masks.
//! 8. Determinism and byte-identical persistence.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use tmuad_cli::{cmd_build_bank, cmd_eval, cmd_synth_gen, encode_container, read_container, EngineConfig};
use tmuad_core::{
    auroc, build_object_bank, build_patch_bank, build_text_bank, fuse, image_score,
    object_anomaly_map, patch_anomaly_map, text_anomaly_map, CategoryText, FusionConfig,
    ImageText, Label, Mask, MatchReport, ObjectDescriptor, PatchFeatureMap, PatchLayer, Position,
    SceneBundle, ScoreMap, TextBank, ViolationKind,
};
use tmuad_synth::{generate_normal_scene, inject_anomaly, AnomalyKind, World, WorldSpec};

const CANVAS: (u32, u32) = (64, 64);

fn viol_kinds(report: &MatchReport) -> Vec<ViolationKind> {
    report.violations.iter().map(|v| v.kind).collect()
}

// ---------------------------------------------------------------------------
// Shared synthetic fixture for criteria 1, 2, and 6.
// ---------------------------------------------------------------------------

struct Fixture {
    world: World,
    normal_queries: Vec<SceneBundle>,
    logical_queries: Vec<(AnomalyKind, Vec<SceneBundle>)>,
    structural_queries: Vec<SceneBundle>,
    text_bank: TextBank,
    object_bank: tmuad_core::ObjectBank,
    patch_bank: tmuad_core::PatchBank,
}

static FIXTURE: OnceLock<Fixture> = OnceLock::new();

fn fixture() -> &'static Fixture {
    FIXTURE.get_or_init(|| {
        let world = World::new(WorldSpec::default()).unwrap();
        let train: Vec<SceneBundle> = (0..200)
            .map(|i| generate_normal_scene(&world, i).unwrap())
            .collect();
        let normal_queries: Vec<SceneBundle> = (300..350)
            .map(|i| generate_normal_scene(&world, i).unwrap())
            .collect();
        let mut logical_queries = Vec::new();
        for (k, kind) in AnomalyKind::LOGICAL.iter().enumerate() {
            let mut queries = Vec::new();
            for i in 0..25u64 {
                let index = 400 + (k as u64) * 25 + i;
                let source = generate_normal_scene(&world, index).unwrap();
                queries.push(inject_anomaly(&world, &source, *kind, index).unwrap());
            }
            logical_queries.push((*kind, queries));
        }
        let structural_queries: Vec<SceneBundle> = (600..625u64)
            .map(|i| {
                let source = generate_normal_scene(&world, i).unwrap();
                inject_anomaly(&world, &source, AnomalyKind::Structural, i).unwrap()
            })
            .collect();

        let text_bank = build_text_bank(&train, CANVAS).unwrap();
        let pairs: Vec<(&str, &SceneBundle)> =
            train.iter().map(|s| (world.category(), s)).collect();
        let object_bank = build_object_bank(pairs.iter().copied(), 1000, 0).unwrap();
        let patch_bank = build_patch_bank(pairs.iter().copied(), 100, 0).unwrap();

        Fixture {
            world,
            normal_queries,
            logical_queries,
            structural_queries,
            text_bank,
            object_bank,
            patch_bank,
        }
    })
}

#[test]
fn criterion_1_logical_separation_and_runtime() {
    let start = Instant::now();
    let world = World::new(WorldSpec::default()).unwrap();
    let train: Vec<SceneBundle> = (0..200)
        .map(|i| generate_normal_scene(&world, i).unwrap())
        .collect();
    let bank = build_text_bank(&train, CANVAS).unwrap();

    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for i in 300..350u64 {
        let query = generate_normal_scene(&world, i).unwrap();
        let (map, report) = text_anomaly_map(&query, &bank, false).unwrap();
        assert!(
            map.values().iter().all(|&v| v == 0.0),
            "normal query {i} has nonzero text map"
        );
        assert!(report.violations.is_empty());
        scores.push(map.max_value());
        labels.push(false);
    }
    for (k, kind) in AnomalyKind::LOGICAL.iter().enumerate() {
        for i in 0..25u64 {
            let index = 400 + (k as u64) * 25 + i;
            let source = generate_normal_scene(&world, index).unwrap();
            let query = inject_anomaly(&world, &source, *kind, index).unwrap();
            let (map, _) = text_anomaly_map(&query, &bank, false).unwrap();
            let score = map.max_value();
            assert!(score > 0.0, "{kind} query {index} has zero text score");
            scores.push(score);
            labels.push(true);
        }
    }
    let text_auroc = auroc(&scores, &labels).unwrap();
    assert_eq!(text_auroc, 1.0, "text-bank image AUROC must be exactly 1");

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "criterion 1 took {elapsed:?}, budget is 10 s"
    );
    println!(
        "[PASS] criterion 1: 50 normals S_T == 0, 125 logical anomalies > 0, \
         text AUROC = 1.0, runtime {elapsed:?} < 10 s"
    );
}

#[test]
fn criterion_2_structural_separation() {
    let fx = fixture();
    let category = fx.world.category();
    let cfg = FusionConfig::default();

    let mut pixel_scores = Vec::new();
    let mut pixel_labels = Vec::new();
    let mut image_scores = Vec::new();
    let mut image_labels = Vec::new();

    for query in &fx.normal_queries {
        let (text_map, _) = text_anomaly_map(query, &fx.text_bank, false).unwrap();
        let object_map = object_anomaly_map(query, &fx.object_bank, category).unwrap();
        let patch_map = patch_anomaly_map(query, &fx.patch_bank, category).unwrap();
        pixel_scores.extend_from_slice(patch_map.values());
        pixel_labels.extend(std::iter::repeat_n(false, patch_map.values().len()));
        let fused = fuse(&text_map, &object_map, &patch_map, &cfg).unwrap();
        image_scores.push(image_score(&fused));
        image_labels.push(false);
    }
    for query in &fx.structural_queries {
        let (text_map, _) = text_anomaly_map(query, &fx.text_bank, false).unwrap();
        let object_map = object_anomaly_map(query, &fx.object_bank, category).unwrap();
        let patch_map = patch_anomaly_map(query, &fx.patch_bank, category).unwrap();
        let gt = query.gt_anomaly.as_ref().unwrap();
        pixel_scores.extend_from_slice(patch_map.values());
        pixel_labels.extend(gt.bits().iter().copied());
        let fused = fuse(&text_map, &object_map, &patch_map, &cfg).unwrap();
        image_scores.push(image_score(&fused));
        image_labels.push(true);
    }

    let pixel_auroc = auroc(&pixel_scores, &pixel_labels).unwrap();
    assert!(
        pixel_auroc >= 0.95,
        "patch-bank pixel AUROC {pixel_auroc} below 0.95"
    );
    let fused_auroc = auroc(&image_scores, &image_labels).unwrap();
    assert_eq!(fused_auroc, 1.0, "fused image AUROC must be exactly 1");
    println!(
        "[PASS] criterion 2: patch pixel AUROC {pixel_auroc:.4} >= 0.95, \
         fused image AUROC = 1.0 (25 structural vs 50 normals)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: coreset/brute-force equivalence.
// ---------------------------------------------------------------------------

fn brute_max_cosine(pool: &[Vec<f32>], query: &[f32]) -> f64 {
    let qn = query.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
    let mut best = -1.0f64;
    for p in pool {
        let mut dot = 0.0;
        let mut pn = 0.0;
        for (&a, &b) in p.iter().zip(query) {
            dot += a as f64 * b as f64;
            pn += a as f64 * a as f64;
        }
        let cos = (dot / (pn.sqrt() * qn)).clamp(-1.0, 1.0);
        if cos > best {
            best = cos;
        }
    }
    best
}

#[test]
fn criterion_3_coreset_equals_brute_force_with_full_k() {
    let world = World::new(WorldSpec::default()).unwrap();
    let category = world.category();
    let train: Vec<SceneBundle> = (0..10)
        .map(|i| generate_normal_scene(&world, i).unwrap())
        .collect();
    let pairs: Vec<(&str, &SceneBundle)> = train.iter().map(|s| (category, s)).collect();
    // k far above every pool size: banks memorize the raw features.
    let object_bank = build_object_bank(pairs.iter().copied(), 1_000_000, 9).unwrap();
    let patch_bank = build_patch_bank(pairs.iter().copied(), 1_000_000, 9).unwrap();

    // Independent pools straight from the scenes.
    let object_pool: Vec<Vec<f32>> = train
        .iter()
        .flat_map(|s| s.objects.iter().map(|o| o.feature.values().to_vec()))
        .collect();
    let mut patch_pools: BTreeMap<String, Vec<Vec<f32>>> = BTreeMap::new();
    for scene in &train {
        for layer in scene.patches.layers() {
            let pool = patch_pools.entry(layer.layer_id().to_string()).or_default();
            for y in 0..layer.grid_height() {
                for x in 0..layer.grid_width() {
                    pool.push(layer.cell(x, y).to_vec());
                }
            }
        }
    }

    let mut queries = Vec::new();
    for i in 50..60u64 {
        queries.push(generate_normal_scene(&world, i).unwrap());
    }
    for i in 0..10u64 {
        let source = generate_normal_scene(&world, 70 + i).unwrap();
        let kind = AnomalyKind::ALL[(i % 6) as usize];
        queries.push(inject_anomaly(&world, &source, kind, i).unwrap());
    }
    assert_eq!(queries.len(), 20);

    for (qi, query) in queries.iter().enumerate() {
        // Object map against the raw pool.
        let got = object_anomaly_map(query, &object_bank, category).unwrap();
        let mut want = vec![0.0f64; (query.width * query.height) as usize];
        for obj in &query.objects {
            let term = (1.0 - brute_max_cosine(&object_pool, obj.feature.values()))
                .clamp(0.0, 1.0);
            for (v, &b) in want.iter_mut().zip(obj.mask.bits()) {
                if b {
                    *v += term;
                }
            }
        }
        for (g, w) in got.values().iter().zip(&want) {
            assert!((g - w.clamp(0.0, 1.0)).abs() <= 1e-6, "query {qi} object map");
        }

        // Patch map against the raw pools (same fixed layer order).
        let got = patch_anomaly_map(query, &patch_bank, category).unwrap();
        let (gw, gh) = query.patches.grid();
        let mut sum = vec![0.0f64; (gw * gh) as usize];
        let mut layer_ids: Vec<&str> =
            query.patches.layers().iter().map(|l| l.layer_id()).collect();
        layer_ids.sort_unstable();
        for layer_id in &layer_ids {
            let layer = query.patches.layer(layer_id).unwrap();
            let pool = &patch_pools[*layer_id];
            for y in 0..gh {
                for x in 0..gw {
                    let term =
                        (1.0 - brute_max_cosine(pool, layer.cell(x, y))).clamp(0.0, 1.0);
                    sum[(y * gw + x) as usize] += term;
                }
            }
        }
        let n = layer_ids.len() as f64;
        for v in &mut sum {
            *v /= n;
        }
        let want = ScoreMap::from_values(gw, gh, sum)
            .unwrap()
            .upsample_bilinear(query.width, query.height)
            .unwrap();
        for (g, w) in got.values().iter().zip(want.values()) {
            assert!((g - w).abs() <= 1e-6, "query {qi} patch map");
        }
    }
    println!(
        "[PASS] criterion 3: coreset maps equal brute-force maps within 1e-6 \
         on 20 queries (k >= pool sizes)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: gestalt reference oracle.
// ---------------------------------------------------------------------------

/// Independent reference: O(n^3) longest-common-block scan (maximal length,
/// then smallest start in a, then in b) with recursive decomposition.
fn ref_longest_block(a: &[u8], b: &[u8]) -> (usize, usize, usize) {
    let (mut bi, mut bj, mut best) = (0usize, 0usize, 0usize);
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut l = 0;
            while i + l < a.len() && j + l < b.len() && a[i + l] == b[j + l] {
                l += 1;
            }
            if l > best {
                best = l;
                bi = i;
                bj = j;
            }
        }
    }
    (bi, bj, best)
}

fn ref_matched(a: &[u8], b: &[u8]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let (i, j, l) = ref_longest_block(a, b);
    if l == 0 {
        return 0;
    }
    l + ref_matched(&a[..i], &b[..j]) + ref_matched(&a[i + l..], &b[j + l..])
}

fn ref_gestalt(a: &str, b: &str) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * ref_matched(a.as_bytes(), b.as_bytes()) as f64 / total as f64
}

/// Small deterministic PRNG (splitmix64) for the oracle inputs.
struct TestRng(u64);

impl TestRng {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

#[test]
fn criterion_4_gestalt_matches_reference_oracle() {
    assert_eq!(tmuad_core::gestalt_ratio("abcd", "bcde"), 0.75);
    assert_eq!(ref_gestalt("abcd", "bcde"), 0.75);

    let mut rng = TestRng(0xACCE5501);
    let random_string = |rng: &mut TestRng| {
        let len = rng.below(65) as usize;
        (0..len)
            .map(|_| (b'a' + rng.below(6) as u8) as char)
            .collect::<String>()
    };
    for case in 0..1000 {
        let a = random_string(&mut rng);
        let b = random_string(&mut rng);
        let got = tmuad_core::gestalt_ratio(&a, &b);
        let want = ref_gestalt(&a, &b);
        assert_eq!(got, want, "case {case}: {a:?} vs {b:?}");
    }
    println!(
        "[PASS] criterion 4: gestalt ratio equals the reference implementation \
         on 1000 seeded pairs (lengths 0-64), including abcd/bcde = 0.75"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: AUROC pairwise oracle and monotone invariance.
// ---------------------------------------------------------------------------

fn pairwise_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            den += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / den
}

#[test]
fn criterion_5_auroc_oracle_and_invariance() {
    let mut rng = TestRng(0xA0C0C0DE);
    for case in 0..1000 {
        let n = 2 + rng.below(38) as usize;
        // Quantized scores force plenty of ties.
        let scores: Vec<f64> = (0..n).map(|_| rng.below(9) as f64 / 8.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.below(2) == 1).collect();
        labels[0] = false;
        labels[1] = true;
        let got = auroc(&scores, &labels).unwrap();
        let want = pairwise_auroc(&scores, &labels);
        assert!((got - want).abs() < 1e-12, "case {case}: {got} vs {want}");

        if case < 10 {
            // Strictly increasing transform: a*x + b*x^3 + c with a > 0.
            let a = 0.1 + rng.below(100) as f64 / 25.0;
            let b = rng.below(100) as f64 / 50.0;
            let c = rng.below(7) as f64 - 3.0;
            let transformed: Vec<f64> =
                scores.iter().map(|&s| a * s + b * s * s * s + c).collect();
            let after = auroc(&transformed, &labels).unwrap();
            assert!(
                (got - after).abs() < 1e-12,
                "transform {case} changed AUROC: {got} vs {after}"
            );
        }
    }
    println!(
        "[PASS] criterion 5: AUROC equals the O(n^2) pairwise oracle within 1e-12 \
         on 1000 seeded sets and is invariant under 10 monotone transforms"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: fusion fidelity.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_fusion_fidelity() {
    // Hand arithmetic on constant maps with the default weights.
    let constant = |v: f64| ScoreMap::from_values(4, 4, vec![v; 16]).unwrap();
    let fused = fuse(
        &constant(0.2),
        &constant(0.4),
        &constant(0.8),
        &FusionConfig::default(),
    )
    .unwrap();
    for &v in fused.values() {
        assert!((v - 0.65).abs() < 1e-9);
    }
    let ones = constant(1.0);
    let fused = fuse(&ones, &ones, &ones, &FusionConfig::default()).unwrap();
    assert!(fused.values().iter().all(|&v| v == 1.0));

    // Projection (1,0,0) is bit-identical to S_T on a real query.
    let fx = fixture();
    let query = &fx.logical_queries[1].1[0]; // an extra-count query
    let (text_map, _) = text_anomaly_map(query, &fx.text_bank, false).unwrap();
    assert!(text_map.max_value() > 0.0);
    let object_map = object_anomaly_map(query, &fx.object_bank, fx.world.category()).unwrap();
    let patch_map = patch_anomaly_map(query, &fx.patch_bank, fx.world.category()).unwrap();
    let projection = FusionConfig {
        lambda_text: 1.0,
        lambda_object: 0.0,
        lambda_patch: 0.0,
    };
    let fused = fuse(&text_map, &object_map, &patch_map, &projection).unwrap();
    for (f, t) in fused.values().iter().zip(text_map.values()) {
        assert_eq!(f.to_bits(), t.to_bits());
    }
    println!(
        "[PASS] criterion 6: default-weight fusion matches hand arithmetic within 1e-9; \
         (1,0,0) projection is bit-identical to S_T"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: full branch coverage with exact masks.
// ---------------------------------------------------------------------------

/// 10x10 fixture scene: each class covers exactly `pixels` pixels starting
/// at a fixed per-class row, so sizes are exact hundredths.
fn fixture_scene(id: &str, classes: &[(&str, u32, Position, u32, u32)]) -> SceneBundle {
    let mut entries = Vec::new();
    let mut masks = BTreeMap::new();
    for &(class, count, position, pixels, start_row) in classes {
        let mut mask = Mask::new(10, 10);
        for i in 0..pixels {
            mask.set(i % 10, start_row + i / 10, true);
        }
        entries.push(
            CategoryText::new(class.into(), count, position, mask.area_fraction()).unwrap(),
        );
        masks.insert(class.to_string(), mask);
    }
    SceneBundle {
        image_id: id.into(),
        width: 10,
        height: 10,
        text: ImageText::new(id.into(), entries).unwrap(),
        category_masks: masks,
        objects: vec![ObjectDescriptor {
            feature: tmuad_core::FeatureVector::new(vec![1.0, 0.0]).unwrap(),
            mask: Mask::new(10, 10),
        }],
        patches: PatchFeatureMap::new(vec![
            PatchLayer::new("enc".into(), 2, 2, 2, vec![0.5; 8]).unwrap()
        ])
        .unwrap(),
        gt_anomaly: None,
        label: Label::Normal,
    }
}

fn assert_map_equals_mask(map: &ScoreMap, mask: &Mask, value: f64, ctx: &str) {
    for y in 0..map.height() {
        for x in 0..map.width() {
            let want = if mask.get(x, y) { value } else { 0.0 };
            assert_eq!(map.get(x, y), want, "{ctx}: pixel ({x},{y})");
        }
    }
}

#[test]
fn criterion_7_branch_coverage_with_exact_masks() {
    // Bank: bolt sizes 0.10 and 0.20 (bank-global range), banana fixed 0.05.
    let bank_scenes = vec![
        fixture_scene(
            "bank-a",
            &[
                ("banana", 1, Position::Top, 5, 8),
                ("bolt", 2, Position::Center, 10, 0),
            ],
        ),
        fixture_scene(
            "bank-b",
            &[
                ("banana", 1, Position::Top, 5, 8),
                ("bolt", 2, Position::Center, 20, 0),
            ],
        ),
    ];
    let bank = build_text_bank(&bank_scenes, (10, 10)).unwrap();
    assert_eq!(bank.size_range("bolt").unwrap(), (0.10, 0.20));

    // extra-class: cashew is unknown to the bank.
    let q = fixture_scene(
        "q-extra",
        &[
            ("banana", 1, Position::Top, 5, 8),
            ("bolt", 2, Position::Center, 15, 0),
            ("cashew", 1, Position::Bottom, 8, 9),
        ],
    );
    let (map, report) = text_anomaly_map(&q, &bank, false).unwrap();
    assert_eq!(viol_kinds(&report), vec![ViolationKind::ExtraClass]);
    assert_map_equals_mask(&map, &q.category_masks["cashew"], 1.0, "extra-class");

    // count: bolt 3 instead of 2; full mask scores 1.
    let q = fixture_scene(
        "q-count",
        &[
            ("banana", 1, Position::Top, 5, 8),
            ("bolt", 3, Position::Center, 10, 0),
        ],
    );
    let (map, report) = text_anomaly_map(&q, &bank, false).unwrap();
    assert_eq!(viol_kinds(&report), vec![ViolationKind::Count]);
    assert_map_equals_mask(&map, &q.category_masks["bolt"], 1.0, "count");

    // position: bolt moved to top-right.
    let q = fixture_scene(
        "q-position",
        &[
            ("banana", 1, Position::Top, 5, 8),
            ("bolt", 2, Position::TopRight, 10, 0),
        ],
    );
    let (map, report) = text_anomaly_map(&q, &bank, false).unwrap();
    assert_eq!(viol_kinds(&report), vec![ViolationKind::Position]);
    assert_map_equals_mask(&map, &q.category_masks["bolt"], 1.0, "position");

    // size-over: 0.25 against (0.10, 0.20) gives alpha = 0.5.
    let q = fixture_scene(
        "q-size-over",
        &[
            ("banana", 1, Position::Top, 5, 8),
            ("bolt", 2, Position::Center, 25, 0),
        ],
    );
    let (map, report) = text_anomaly_map(&q, &bank, false).unwrap();
    assert_eq!(viol_kinds(&report), vec![ViolationKind::SizeOver]);
    let alpha = report.violations[0].alpha;
    assert!((alpha - 0.5).abs() < 1e-12, "alpha {alpha}");
    assert_map_equals_mask(&map, &q.category_masks["bolt"], alpha, "size-over");

    // size-under: 0.05 against (0.10, 0.20) gives alpha = 0.5.
    let q = fixture_scene(
        "q-size-under",
        &[
            ("banana", 1, Position::Top, 5, 8),
            ("bolt", 2, Position::Center, 5, 0),
        ],
    );
    let (map, report) = text_anomaly_map(&q, &bank, false).unwrap();
    assert_eq!(viol_kinds(&report), vec![ViolationKind::SizeUnder]);
    let alpha = report.violations[0].alpha;
    assert!((alpha - 0.5).abs() < 1e-12, "alpha {alpha}");
    assert_map_equals_mask(&map, &q.category_masks["bolt"], alpha, "size-under");

    // missing-class: banana absent; its occurrence region scores 1.
    let q = fixture_scene("q-missing", &[("bolt", 2, Position::Center, 10, 0)]);
    let (map, report) = text_anomaly_map(&q, &bank, false).unwrap();
    assert_eq!(viol_kinds(&report), vec![ViolationKind::MissingClass]);
    let occurrence = bank
        .occurrence("banana")
        .unwrap()
        .resize_nearest(10, 10)
        .unwrap();
    assert_map_equals_mask(&map, &occurrence, 1.0, "missing-class");

    // relaxed mode: count/position/size branches are skipped, class
    // presence still matters.
    let q = fixture_scene(
        "q-relaxed",
        &[
            ("banana", 1, Position::Top, 5, 8),
            ("bolt", 3, Position::TopRight, 25, 0),
        ],
    );
    let (map, report) = text_anomaly_map(&q, &bank, true).unwrap();
    assert!(report.violations.is_empty());
    assert!(map.values().iter().all(|&v| v == 0.0));
    let q = fixture_scene("q-relaxed-missing", &[("bolt", 2, Position::Center, 10, 0)]);
    let (_, report) = text_anomaly_map(&q, &bank, true).unwrap();
    assert_eq!(viol_kinds(&report), vec![ViolationKind::MissingClass]);

    println!(
        "[PASS] criterion 7: all comparison branches produce the exact stated masks \
         (alpha = 0.5 size cases included) and relaxed mode skips the strict branches"
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: determinism and persistence.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_determinism_and_persistence() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    let test = dir.path().join("test");
    cmd_synth_gen(None, Some(11), 10, 0, 0, &train).unwrap();
    cmd_synth_gen(None, Some(11), 4, 1, 500, &test).unwrap();

    let cfg = EngineConfig {
        k_object: 40,
        k_patch: 16,
        seed: 5,
        bank_resolution: (64, 64),
        ..EngineConfig::default()
    };

    let bank1 = dir.path().join("bank1.tmb");
    let bank2 = dir.path().join("bank2.tmb");
    cmd_build_bank(&train, &bank1, &cfg).unwrap();
    cmd_build_bank(&train, &bank2, &cfg).unwrap();
    let bytes1 = std::fs::read(&bank1).unwrap();
    let bytes2 = std::fs::read(&bank2).unwrap();
    assert_eq!(bytes1, bytes2, "bank containers differ between runs");

    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    let r1 = cmd_eval(&bank1, &test, &out1, None, &Default::default()).unwrap();
    let r2 = cmd_eval(&bank2, &test, &out2, None, &Default::default()).unwrap();
    assert_eq!(r1, r2);
    let m1 = std::fs::read(out1.join("metrics.json")).unwrap();
    let m2 = std::fs::read(out2.join("metrics.json")).unwrap();
    assert_eq!(m1, m2, "metrics reports differ between runs");
    let c1 = std::fs::read(out1.join("per_query.csv")).unwrap();
    let c2 = std::fs::read(out2.join("per_query.csv")).unwrap();
    assert_eq!(c1, c2);

    // Container round trip: decode + re-encode reproduces the bytes.
    let (banks, loaded_cfg) = read_container(&bank1).unwrap();
    assert_eq!(loaded_cfg, cfg);
    assert_eq!(encode_container(&banks, &loaded_cfg), bytes1);

    println!(
        "[PASS] criterion 8: two build->eval runs are bit-identical \
         (bank container, metrics.json, per_query.csv) and the container \
         round-trips byte-exactly"
    );
}
