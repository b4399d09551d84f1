//! Normal-scene generation: seeded rectangle placement, exact text
//! descriptions, noisy prototype features, and blended patch grids.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use tmuad_core::{
    CategoryText, ImageText, Label, Mask, ObjectDescriptor, PatchFeatureMap, PatchLayer,
    SceneBundle,
};

use crate::error::Result;
use crate::spec::LayerSpec;
use crate::world::{cell_bounds, place_rects, position_of_mask, rng_for, standard_normal, World};

/// Pixel footprint of one patch-grid cell (integer bounds, consistent with
/// nearest-neighbor index mapping).
pub(crate) fn cell_footprint(
    cx: u32,
    cy: u32,
    grid_w: u32,
    grid_h: u32,
    canvas_w: u32,
    canvas_h: u32,
) -> (u32, u32, u32, u32) {
    let x0 = (cx as u64 * canvas_w as u64 / grid_w as u64) as u32;
    let x1 = ((cx + 1) as u64 * canvas_w as u64 / grid_w as u64) as u32;
    let y0 = (cy as u64 * canvas_h as u64 / grid_h as u64) as u32;
    let y1 = ((cy + 1) as u64 * canvas_h as u64 / grid_h as u64) as u32;
    (x0, y0, x1, y1)
}

/// Noise-free blend of one patch cell: background plus class prototypes
/// weighted by pixel-ownership fractions (first covering class in sorted
/// order owns a pixel).
pub(crate) fn blend_cell(
    world: &World,
    layer: &LayerSpec,
    masks: &BTreeMap<String, Mask>,
    cx: u32,
    cy: u32,
) -> Vec<f64> {
    let spec = world.spec();
    let protos = world.layer_prototypes(&layer.layer_id);
    let (x0, y0, x1, y1) = cell_footprint(
        cx,
        cy,
        layer.grid_width,
        layer.grid_height,
        spec.canvas_width,
        spec.canvas_height,
    );
    let total = ((x1 - x0) as usize) * ((y1 - y0) as usize);
    let mut owned: BTreeMap<&str, usize> = BTreeMap::new();
    let mut covered = 0usize;
    for y in y0..y1 {
        for x in x0..x1 {
            for (class, mask) in masks {
                if mask.get(x, y) {
                    *owned.entry(class.as_str()).or_default() += 1;
                    covered += 1;
                    break;
                }
            }
        }
    }
    let dim = layer.dim as usize;
    let mut value = vec![0.0f64; dim];
    let bg_weight = (total - covered) as f64 / total as f64;
    for (v, &b) in value.iter_mut().zip(protos.background.values()) {
        *v += bg_weight * b as f64;
    }
    for (class, count) in owned {
        let weight = count as f64 / total as f64;
        let proto = &protos.classes[class];
        for (v, &p) in value.iter_mut().zip(proto.values()) {
            *v += weight * p as f64;
        }
    }
    value
}

/// Recomputes the noise-free blend under both mask sets and adds the
/// difference onto the stored grids, preserving each cell's noise term.
/// Cells whose blend is unchanged stay bit-identical.
pub(crate) fn apply_blend_delta(
    world: &World,
    patches: &mut PatchFeatureMap,
    old_masks: &BTreeMap<String, Mask>,
    new_masks: &BTreeMap<String, Mask>,
) {
    for layer_spec in &world.spec().layers {
        let layer = patches
            .layers_mut()
            .iter_mut()
            .find(|l| l.layer_id() == layer_spec.layer_id)
            .expect("scene layers come from this world");
        for cy in 0..layer_spec.grid_height {
            for cx in 0..layer_spec.grid_width {
                let old = blend_cell(world, layer_spec, old_masks, cx, cy);
                let new = blend_cell(world, layer_spec, new_masks, cx, cy);
                if old == new {
                    continue;
                }
                let cell = layer.cell_mut(cx, cy);
                for (v, (o, n)) in cell.iter_mut().zip(old.iter().zip(&new)) {
                    *v = (*v as f64 + (n - o)) as f32;
                }
            }
        }
    }
}

/// Generates one normal scene of the family: rectangles jittered inside
/// their cells, text derived exactly from the masks, object features as
/// noisy prototypes, and patch grids as noisy blends. Fully deterministic
/// in `(spec, index)`.
pub fn generate_normal_scene(world: &World, index: u64) -> Result<SceneBundle> {
    let spec = world.spec();
    let mut rng: ChaCha8Rng = rng_for(spec.seed, &format!("scene/{index}"));
    let image_id = format!("scene-{index:05}");

    let mut items: Vec<&crate::spec::LayoutItem> = spec.layout.iter().collect();
    items.sort_by(|a, b| a.class_name.cmp(&b.class_name));

    let mut category_masks: BTreeMap<String, Mask> = BTreeMap::new();
    let mut objects = Vec::new();
    for item in &items {
        let dims = world.class_dims(&item.class_name).expect("layout class");
        let bounds = cell_bounds(item.cell, spec.canvas_width, spec.canvas_height);
        let rects = place_rects(bounds, item.count, dims, &mut rng)?;
        let mut merged = Mask::new(spec.canvas_width, spec.canvas_height);
        let prototype = world
            .object_prototype(&item.class_name)
            .expect("layout class");
        for rect in rects {
            let mask = rect.mask(spec.canvas_width, spec.canvas_height);
            merged.union_in_place(&mask)?;
            objects.push(ObjectDescriptor {
                feature: world.noisy_feature(prototype, &mut rng),
                mask,
            });
        }
        category_masks.insert(item.class_name.clone(), merged);
    }

    let mut entries = Vec::new();
    for item in &items {
        let mask = &category_masks[&item.class_name];
        let position = position_of_mask(mask).expect("placed at least one rectangle");
        debug_assert_eq!(position, item.cell);
        entries.push(CategoryText::new(
            item.class_name.clone(),
            item.count,
            position,
            mask.area_fraction(),
        )?);
    }
    let text = ImageText::new(image_id.clone(), entries)?;

    let mut layers = Vec::new();
    for layer_spec in &spec.layers {
        let dim = layer_spec.dim as usize;
        let mut values =
            Vec::with_capacity((layer_spec.grid_width as usize) * (layer_spec.grid_height as usize) * dim);
        for cy in 0..layer_spec.grid_height {
            for cx in 0..layer_spec.grid_width {
                let blend = blend_cell(world, layer_spec, &category_masks, cx, cy);
                for b in blend {
                    values.push((b + spec.noise_sigma * standard_normal(&mut rng)) as f32);
                }
            }
        }
        layers.push(PatchLayer::new(
            layer_spec.layer_id.clone(),
            layer_spec.grid_width,
            layer_spec.grid_height,
            layer_spec.dim,
            values,
        )?);
    }

    let scene = SceneBundle {
        image_id,
        width: spec.canvas_width,
        height: spec.canvas_height,
        text,
        category_masks,
        objects,
        patches: PatchFeatureMap::new(layers)?,
        gt_anomaly: None,
        label: Label::Normal,
    };
    scene.validate()?;
    Ok(scene)
}
