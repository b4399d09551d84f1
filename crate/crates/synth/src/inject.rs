//! Anomaly injection: applies exactly one coherent edit to a generated
//! normal scene, keeps every untouched field bit-identical, and records the
//! edited region as ground truth.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tmuad_core::{CategoryText, ImageText, Label, Mask, ObjectDescriptor, Position, SceneBundle};

use crate::error::{Result, SynthError};
use crate::generate::{apply_blend_delta, cell_footprint};
use crate::world::{cell_bounds, place_rects, position_of_mask, rng_for, standard_normal, Rect, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnomalyKind {
    MissingClass,
    ExtraCount,
    Moved,
    Resized,
    ExtraClass,
    Structural,
}

impl AnomalyKind {
    pub const ALL: [AnomalyKind; 6] = [
        AnomalyKind::MissingClass,
        AnomalyKind::ExtraCount,
        AnomalyKind::Moved,
        AnomalyKind::Resized,
        AnomalyKind::ExtraClass,
        AnomalyKind::Structural,
    ];

    /// The logical kinds, i.e. everything the text bank is expected to catch.
    pub const LOGICAL: [AnomalyKind; 5] = [
        AnomalyKind::MissingClass,
        AnomalyKind::ExtraCount,
        AnomalyKind::Moved,
        AnomalyKind::Resized,
        AnomalyKind::ExtraClass,
    ];

    pub fn token(self) -> &'static str {
        match self {
            AnomalyKind::MissingClass => "missing-class",
            AnomalyKind::ExtraCount => "extra-count",
            AnomalyKind::Moved => "moved",
            AnomalyKind::Resized => "resized",
            AnomalyKind::ExtraClass => "extra-class",
            AnomalyKind::Structural => "structural",
        }
    }
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for AnomalyKind {
    type Err = SynthError;
    fn from_str(s: &str) -> Result<Self> {
        AnomalyKind::ALL
            .iter()
            .copied()
            .find(|k| k.token() == s)
            .ok_or_else(|| SynthError::InvalidSpec(format!("unknown anomaly kind: {s}")))
    }
}

/// Applies one anomaly of the given kind to a scene generated from the same
/// world. The result is labeled anomalous and carries the edited region as
/// ground truth; everything outside the declared edit stays bit-identical.
pub fn inject_anomaly(
    world: &World,
    scene: &SceneBundle,
    kind: AnomalyKind,
    seed: u64,
) -> Result<SceneBundle> {
    let mut rng = rng_for(seed, &format!("inject/{}", kind.token()));
    match kind {
        AnomalyKind::MissingClass => inject_missing_class(world, scene, &mut rng),
        AnomalyKind::ExtraCount => inject_extra_count(world, scene, &mut rng),
        AnomalyKind::Moved => inject_moved(world, scene, &mut rng),
        AnomalyKind::Resized => inject_resized(world, scene, &mut rng),
        AnomalyKind::ExtraClass => inject_extra_class(world, scene, &mut rng),
        AnomalyKind::Structural => inject_structural(world, scene, &mut rng),
    }
}

fn pick_class(scene: &SceneBundle, rng: &mut ChaCha8Rng, kind: &str) -> Result<String> {
    let classes: Vec<&str> = scene.text.class_names().collect();
    if classes.is_empty() {
        return Err(SynthError::Inapplicable(format!(
            "{kind} needs at least one class in the scene"
        )));
    }
    Ok(classes[rng.random_range(0..classes.len())].to_string())
}

/// Indices of the objects belonging to a class, identified by mask overlap
/// with the class's category mask (generator rectangles of different classes
/// are disjoint).
fn class_object_indices(scene: &SceneBundle, class_mask: &Mask) -> Vec<usize> {
    scene
        .objects
        .iter()
        .enumerate()
        .filter(|(_, obj)| obj.mask.intersects(class_mask))
        .map(|(i, _)| i)
        .collect()
}

fn rebuild_text(
    scene: &SceneBundle,
    edit: impl FnOnce(&mut Vec<CategoryText>),
) -> Result<ImageText> {
    let mut entries = scene.text.entries().to_vec();
    edit(&mut entries);
    Ok(ImageText::new(scene.image_id.clone(), entries)?)
}

/// Cells not covered by any placed class (every generator class sits exactly
/// in its text-position cell).
fn free_cells(scene: &SceneBundle) -> Vec<Position> {
    let taken: Vec<Position> = scene.text.entries().iter().map(|e| e.position).collect();
    Position::ALL
        .into_iter()
        .filter(|p| !taken.contains(p))
        .collect()
}

fn inject_missing_class(
    world: &World,
    scene: &SceneBundle,
    rng: &mut ChaCha8Rng,
) -> Result<SceneBundle> {
    let victim = pick_class(scene, rng, "missing-class")?;
    let removed_mask = scene.category_masks[&victim].clone();
    let doomed = class_object_indices(scene, &removed_mask);

    let mut out = scene.clone();
    out.text = rebuild_text(scene, |entries| {
        entries.retain(|e| e.class_name != victim);
    })?;
    out.category_masks.remove(&victim);
    let mut keep = (0..scene.objects.len()).collect::<Vec<_>>();
    keep.retain(|i| !doomed.contains(i));
    out.objects = keep.into_iter().map(|i| scene.objects[i].clone()).collect();
    apply_blend_delta(world, &mut out.patches, &scene.category_masks, &out.category_masks);
    out.gt_anomaly = Some(removed_mask);
    out.label = Label::Anomalous;
    Ok(out)
}

fn inject_extra_count(
    world: &World,
    scene: &SceneBundle,
    rng: &mut ChaCha8Rng,
) -> Result<SceneBundle> {
    let victim = pick_class(scene, rng, "extra-count")?;
    let (w, h) = world.class_dims(&victim).ok_or_else(|| {
        SynthError::Inapplicable(format!("class {victim} has no known dimensions"))
    })?;
    let entry = scene.text.entry(&victim).expect("picked from the text").clone();
    let (x0, y0, x1, y1) = cell_bounds(entry.position, scene.width, scene.height);
    if x1 - x0 < w || y1 - y0 < h {
        return Err(SynthError::Inapplicable(format!(
            "cell too small for another {victim}"
        )));
    }

    // Union of everything already placed; the new rectangle must not overlap.
    let mut occupied = Mask::new(scene.width, scene.height);
    for mask in scene.category_masks.values() {
        occupied.union_in_place(mask)?;
    }
    let xs = x1 - x0 - w + 1;
    let ys = y1 - y0 - h + 1;
    let start = rng.random_range(0..(xs as u64 * ys as u64));
    let mut found = None;
    'search: for step in 0..(xs as u64 * ys as u64) {
        let idx = (start + step) % (xs as u64 * ys as u64);
        let rx = x0 + (idx % xs as u64) as u32;
        let ry = y0 + (idx / xs as u64) as u32;
        for py in ry..ry + h {
            for px in rx..rx + w {
                if occupied.get(px, py) {
                    continue 'search;
                }
            }
        }
        found = Some(Rect { x: rx, y: ry, w, h });
        break;
    }
    let rect = found.ok_or_else(|| {
        SynthError::Inapplicable(format!("no free spot for another {victim}"))
    })?;

    let rect_mask = rect.mask(scene.width, scene.height);
    let mut out = scene.clone();
    let new_class_mask = scene.category_masks[&victim].union(&rect_mask)?;
    out.category_masks.insert(victim.clone(), new_class_mask.clone());
    let position = position_of_mask(&new_class_mask).expect("nonempty");
    debug_assert_eq!(position, entry.position);
    out.text = rebuild_text(scene, |entries| {
        for e in entries.iter_mut() {
            if e.class_name == victim {
                e.count += 1;
                e.position = position;
                e.size = new_class_mask.area_fraction();
            }
        }
    })?;
    let prototype = world.object_prototype(&victim).expect("known class");
    out.objects.push(ObjectDescriptor {
        feature: world.noisy_feature(prototype, rng),
        mask: rect_mask,
    });
    apply_blend_delta(world, &mut out.patches, &scene.category_masks, &out.category_masks);
    // Count anomalies localize over the whole category, so the ground truth
    // covers every instance of the class.
    out.gt_anomaly = Some(new_class_mask);
    out.label = Label::Anomalous;
    Ok(out)
}

fn inject_moved(world: &World, scene: &SceneBundle, rng: &mut ChaCha8Rng) -> Result<SceneBundle> {
    let victim = pick_class(scene, rng, "moved")?;
    let dims = world.class_dims(&victim).ok_or_else(|| {
        SynthError::Inapplicable(format!("class {victim} has no known dimensions"))
    })?;
    let entry = scene.text.entry(&victim).expect("picked from the text").clone();
    let free = free_cells(scene);
    if free.is_empty() {
        return Err(SynthError::Inapplicable("no free cell to move into".into()));
    }
    let target = free[rng.random_range(0..free.len())];
    let bounds = cell_bounds(target, scene.width, scene.height);
    let rects = place_rects(bounds, entry.count, dims, rng)
        .map_err(|e| SynthError::Inapplicable(e.to_string()))?;

    let old_mask = scene.category_masks[&victim].clone();
    let indices = class_object_indices(scene, &old_mask);
    debug_assert_eq!(indices.len(), rects.len());

    let mut out = scene.clone();
    let mut merged = Mask::new(scene.width, scene.height);
    for (slot, rect) in indices.iter().zip(&rects) {
        let mask = rect.mask(scene.width, scene.height);
        merged.union_in_place(&mask)?;
        out.objects[*slot].mask = mask; // feature unchanged: same object, new place
    }
    out.category_masks.insert(victim.clone(), merged.clone());
    let position = position_of_mask(&merged).expect("nonempty");
    debug_assert_eq!(position, target);
    // Translation preserves the rectangle count and dimensions, so the area
    // fraction is bitwise unchanged.
    debug_assert_eq!(merged.area_fraction(), entry.size);
    out.text = rebuild_text(scene, |entries| {
        for e in entries.iter_mut() {
            if e.class_name == victim {
                e.position = position;
                e.size = merged.area_fraction();
            }
        }
    })?;
    apply_blend_delta(world, &mut out.patches, &scene.category_masks, &out.category_masks);
    out.gt_anomaly = Some(old_mask.union(&merged)?);
    out.label = Label::Anomalous;
    Ok(out)
}

fn inject_resized(world: &World, scene: &SceneBundle, rng: &mut ChaCha8Rng) -> Result<SceneBundle> {
    let victim = pick_class(scene, rng, "resized")?;
    let (w, h) = world.class_dims(&victim).ok_or_else(|| {
        SynthError::Inapplicable(format!("class {victim} has no known dimensions"))
    })?;
    let entry = scene.text.entry(&victim).expect("picked from the text").clone();
    let bounds = cell_bounds(entry.position, scene.width, scene.height);

    // Grow by half, or shrink by half when the grown size cannot fit.
    let grown = (w + w.div_ceil(2), h + h.div_ceil(2));
    let shrunk = ((w / 2).max(1), (h / 2).max(1));
    let placed = place_rects(bounds, entry.count, grown, rng)
        .ok()
        .map(|r| (r, grown))
        .or_else(|| {
            if shrunk == (w, h) {
                None
            } else {
                place_rects(bounds, entry.count, shrunk, rng)
                    .ok()
                    .map(|r| (r, shrunk))
            }
        });
    let (rects, _) = placed.ok_or_else(|| {
        SynthError::Inapplicable(format!("cannot change the size of {victim}"))
    })?;

    let old_mask = scene.category_masks[&victim].clone();
    let indices = class_object_indices(scene, &old_mask);
    debug_assert_eq!(indices.len(), rects.len());

    let mut out = scene.clone();
    let mut merged = Mask::new(scene.width, scene.height);
    for (slot, rect) in indices.iter().zip(&rects) {
        let mask = rect.mask(scene.width, scene.height);
        merged.union_in_place(&mask)?;
        out.objects[*slot].mask = mask;
    }
    out.category_masks.insert(victim.clone(), merged.clone());
    let position = position_of_mask(&merged).expect("nonempty");
    debug_assert_eq!(position, entry.position);
    debug_assert_ne!(merged.area_fraction(), entry.size);
    out.text = rebuild_text(scene, |entries| {
        for e in entries.iter_mut() {
            if e.class_name == victim {
                e.position = position;
                e.size = merged.area_fraction();
            }
        }
    })?;
    apply_blend_delta(world, &mut out.patches, &scene.category_masks, &out.category_masks);
    out.gt_anomaly = Some(old_mask.union(&merged)?);
    out.label = Label::Anomalous;
    Ok(out)
}

fn inject_extra_class(
    world: &World,
    scene: &SceneBundle,
    rng: &mut ChaCha8Rng,
) -> Result<SceneBundle> {
    let candidates: Vec<&crate::spec::ExtraClassSpec> = world
        .spec()
        .extra_classes
        .iter()
        .filter(|e| !scene.text.contains_class(&e.class_name))
        .collect();
    if candidates.is_empty() {
        return Err(SynthError::Inapplicable(
            "no extra class left to inject".into(),
        ));
    }
    let extra = candidates[rng.random_range(0..candidates.len())];
    let free = free_cells(scene);
    if free.is_empty() {
        return Err(SynthError::Inapplicable(
            "no free cell for the extra class".into(),
        ));
    }
    let target = free[rng.random_range(0..free.len())];
    let bounds = cell_bounds(target, scene.width, scene.height);
    let rects = place_rects(bounds, 1, (extra.width, extra.height), rng)
        .map_err(|e| SynthError::Inapplicable(e.to_string()))?;
    let mask = rects[0].mask(scene.width, scene.height);

    let mut out = scene.clone();
    let position = position_of_mask(&mask).expect("nonempty");
    debug_assert_eq!(position, target);
    out.text = rebuild_text(scene, |entries| {
        entries.push(
            CategoryText::new(extra.class_name.clone(), 1, position, mask.area_fraction())
                .expect("generated values are valid"),
        );
    })?;
    out.category_masks.insert(extra.class_name.clone(), mask.clone());
    let prototype = world
        .object_prototype(&extra.class_name)
        .expect("extras have prototypes");
    out.objects.push(ObjectDescriptor {
        feature: world.noisy_feature(prototype, rng),
        mask: mask.clone(),
    });
    apply_blend_delta(world, &mut out.patches, &scene.category_masks, &out.category_masks);
    out.gt_anomaly = Some(mask);
    out.label = Label::Anomalous;
    Ok(out)
}

fn inject_structural(
    world: &World,
    scene: &SceneBundle,
    rng: &mut ChaCha8Rng,
) -> Result<SceneBundle> {
    let spec = world.spec();
    let (gw, gh) = scene.patches.grid();
    let bw = rng.random_range(gw.min(2)..=gw.min(4));
    let bh = rng.random_range(gh.min(2)..=gh.min(4));
    let bx = rng.random_range(0..=(gw - bw));
    let by = rng.random_range(0..=(gh - bh));

    let mut out = scene.clone();
    for layer in out.patches.layers_mut() {
        let dim = layer.dim() as usize;
        // The floor keeps the construction separating: at least five noise
        // standard deviations (scaled to vector norm) and at least the
        // vector's own magnitude, giving cosine <= 1/sqrt(2) at every
        // perturbed cell.
        let noise_floor = 5.0 * spec.noise_sigma * (dim as f64).sqrt();
        for cy in by..by + bh {
            for cx in bx..bx + bw {
                let cell: Vec<f64> = layer.cell(cx, cy).iter().map(|&v| v as f64).collect();
                let norm = cell.iter().map(|v| v * v).sum::<f64>().sqrt();
                let magnitude = noise_floor.max(norm).max(1e-6);
                // Orthogonal direction: random vector minus its projection.
                let unit = loop {
                    let raw: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
                    let mut q = raw;
                    if norm > 0.0 {
                        let dot: f64 = q.iter().zip(&cell).map(|(a, b)| a * b).sum();
                        for (qi, ci) in q.iter_mut().zip(&cell) {
                            *qi -= dot / (norm * norm) * ci;
                        }
                    }
                    let qn = q.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if qn > 1e-9 {
                        for qi in q.iter_mut() {
                            *qi /= qn;
                        }
                        break q;
                    }
                };
                let target = layer.cell_mut(cx, cy);
                for (t, (c, u)) in target.iter_mut().zip(cell.iter().zip(&unit)) {
                    *t = (c + magnitude * u) as f32;
                }
            }
        }
    }

    let (px0, py0, px1, py1) = {
        let lo = cell_footprint(bx, by, gw, gh, scene.width, scene.height);
        let hi = cell_footprint(bx + bw - 1, by + bh - 1, gw, gh, scene.width, scene.height);
        (lo.0, lo.1, hi.2, hi.3)
    };
    let mut gt = Mask::new(scene.width, scene.height);
    for y in py0..py1 {
        for x in px0..px1 {
            gt.set(x, y, true);
        }
    }
    out.gt_anomaly = Some(gt);
    out.label = Label::Anomalous;
    Ok(out)
}
