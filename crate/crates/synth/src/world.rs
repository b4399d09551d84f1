//! Derived world state: seeded prototypes and per-class rectangle
//! dimensions, plus the geometry helpers shared by generation and injection.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use tmuad_core::{cosine_similarity, FeatureVector, Mask, Position};

use crate::error::{Result, SynthError};
use crate::spec::WorldSpec;

const PROTOTYPE_ATTEMPTS: usize = 10_000;

pub(crate) fn mix_seed(seed: u64, tag: &str) -> u64 {
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

pub(crate) fn rng_for(seed: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, tag))
}

pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn mask(&self, canvas_w: u32, canvas_h: u32) -> Mask {
        let mut m = Mask::new(canvas_w, canvas_h);
        for y in self.y..self.y + self.h {
            for x in self.x..self.x + self.w {
                m.set(x, y, true);
            }
        }
        m
    }
}

/// Inclusive-exclusive pixel bounds of one nine-grid cell. Boundaries use
/// integer thirds so they are exact and consistent with `position_of_point`.
pub(crate) fn cell_bounds(cell: Position, canvas_w: u32, canvas_h: u32) -> (u32, u32, u32, u32) {
    let xs = [0, canvas_w / 3, 2 * canvas_w / 3, canvas_w];
    let ys = [0, canvas_h / 3, 2 * canvas_h / 3, canvas_h];
    let c = cell.col() as usize;
    let r = cell.row() as usize;
    (xs[c], ys[r], xs[c + 1], ys[r + 1])
}

/// Nine-grid token of a point, using the same integer boundaries as
/// `cell_bounds`.
pub(crate) fn position_of_point(x: f64, y: f64, canvas_w: u32, canvas_h: u32) -> Position {
    let col = if x < (canvas_w / 3) as f64 {
        0
    } else if x < (2 * canvas_w / 3) as f64 {
        1
    } else {
        2
    };
    let row = if y < (canvas_h / 3) as f64 {
        0
    } else if y < (2 * canvas_h / 3) as f64 {
        1
    } else {
        2
    };
    Position::from_grid(col, row)
}

/// Grid token of a mask: the nine-grid cell of its bounding-box center.
pub(crate) fn position_of_mask(mask: &Mask) -> Option<Position> {
    let (x0, y0, x1, y1) = mask.bounding_box()?;
    let cx = (x0 + x1) as f64 / 2.0;
    let cy = (y0 + y1) as f64 / 2.0;
    Some(position_of_point(cx, cy, mask.width(), mask.height()))
}

/// Places `count` rectangles of fixed dimensions inside a cell: the cell is
/// divided into a ceil(sqrt(count))² slot grid and each rectangle is
/// jittered uniformly within its slot, which keeps rectangles disjoint and
/// inside the cell.
pub(crate) fn place_rects(
    bounds: (u32, u32, u32, u32),
    count: u32,
    dims: (u32, u32),
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Rect>> {
    let (x0, y0, x1, y1) = bounds;
    let (w, h) = dims;
    let side = (count as f64).sqrt().ceil() as u32;
    let slot_w = (x1 - x0) / side;
    let slot_h = (y1 - y0) / side;
    if slot_w < w || slot_h < h {
        return Err(SynthError::LayoutOverflow(format!(
            "{count} rectangles of {w}x{h} do not fit a {}x{} cell",
            x1 - x0,
            y1 - y0
        )));
    }
    let mut rects = Vec::with_capacity(count as usize);
    for i in 0..count {
        let (row, col) = (i / side, i % side);
        let dx = rng.random_range(0..=(slot_w - w));
        let dy = rng.random_range(0..=(slot_h - h));
        rects.push(Rect {
            x: x0 + col * slot_w + dx,
            y: y0 + row * slot_h + dy,
            w,
            h,
        });
    }
    Ok(rects)
}

/// Per-layer prototype set: a background direction plus one direction per
/// class, all unit length with pairwise cosine below the configured bound.
#[derive(Debug, Clone)]
pub(crate) struct LayerPrototypes {
    pub background: FeatureVector,
    pub classes: BTreeMap<String, FeatureVector>,
}

/// A validated spec plus everything derived from its seed.
#[derive(Debug, Clone)]
pub struct World {
    spec: WorldSpec,
    object_prototypes: BTreeMap<String, FeatureVector>,
    layer_prototypes: BTreeMap<String, LayerPrototypes>,
    class_dims: BTreeMap<String, (u32, u32)>,
}

impl World {
    pub fn new(spec: WorldSpec) -> Result<Self> {
        validate_spec(&spec)?;
        let mut class_names: Vec<&str> =
            spec.layout.iter().map(|i| i.class_name.as_str()).collect();
        class_names.extend(spec.extra_classes.iter().map(|e| e.class_name.as_str()));
        class_names.sort_unstable();

        let mut object_prototypes = BTreeMap::new();
        {
            let mut rng = rng_for(spec.seed, "proto/object");
            let mut accepted: Vec<FeatureVector> = Vec::new();
            for name in &class_names {
                let p = sample_prototype(
                    spec.object_dim as usize,
                    &accepted,
                    spec.max_prototype_cosine,
                    &mut rng,
                )?;
                accepted.push(p.clone());
                object_prototypes.insert(name.to_string(), p);
            }
        }

        let mut layer_prototypes = BTreeMap::new();
        for layer in &spec.layers {
            let mut rng = rng_for(spec.seed, &format!("proto/layer/{}", layer.layer_id));
            let mut accepted: Vec<FeatureVector> = Vec::new();
            let background = sample_prototype(
                layer.dim as usize,
                &accepted,
                spec.max_prototype_cosine,
                &mut rng,
            )?;
            accepted.push(background.clone());
            let mut classes = BTreeMap::new();
            for name in &class_names {
                let p = sample_prototype(
                    layer.dim as usize,
                    &accepted,
                    spec.max_prototype_cosine,
                    &mut rng,
                )?;
                accepted.push(p.clone());
                classes.insert(name.to_string(), p);
            }
            layer_prototypes.insert(
                layer.layer_id.clone(),
                LayerPrototypes {
                    background,
                    classes,
                },
            );
        }

        let mut class_dims = BTreeMap::new();
        for item in &spec.layout {
            let mut rng = rng_for(spec.seed, &format!("dims/{}", item.class_name));
            let w = rng.random_range(item.width_range.0..=item.width_range.1);
            let h = rng.random_range(item.height_range.0..=item.height_range.1);
            class_dims.insert(item.class_name.clone(), (w, h));
        }
        for extra in &spec.extra_classes {
            class_dims.insert(extra.class_name.clone(), (extra.width, extra.height));
        }

        Ok(World {
            spec,
            object_prototypes,
            layer_prototypes,
            class_dims,
        })
    }

    pub fn spec(&self) -> &WorldSpec {
        &self.spec
    }

    pub fn category(&self) -> &str {
        &self.spec.category
    }

    pub fn object_prototype(&self, class_name: &str) -> Option<&FeatureVector> {
        self.object_prototypes.get(class_name)
    }

    pub(crate) fn layer_prototypes(&self, layer_id: &str) -> &LayerPrototypes {
        &self.layer_prototypes[layer_id]
    }

    pub(crate) fn class_dims(&self, class_name: &str) -> Option<(u32, u32)> {
        self.class_dims.get(class_name).copied()
    }

    /// Adds `sigma`-scaled Gaussian noise to a prototype. The draw count is
    /// independent of sigma, so streams stay aligned across noise levels.
    pub(crate) fn noisy_feature(
        &self,
        prototype: &FeatureVector,
        rng: &mut ChaCha8Rng,
    ) -> FeatureVector {
        let sigma = self.spec.noise_sigma;
        let values: Vec<f32> = prototype
            .values()
            .iter()
            .map(|&v| (v as f64 + sigma * standard_normal(rng)) as f32)
            .collect();
        FeatureVector::new(values).expect("prototype dims are nonzero")
    }
}

fn sample_prototype(
    dim: usize,
    accepted: &[FeatureVector],
    max_cos: f64,
    rng: &mut ChaCha8Rng,
) -> Result<FeatureVector> {
    for _ in 0..PROTOTYPE_ATTEMPTS {
        let raw: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let candidate =
            FeatureVector::new(raw.iter().map(|&v| (v / norm) as f32).collect()).unwrap();
        let ok = accepted.iter().all(|p| {
            cosine_similarity(p, &candidate).map(|c| c <= max_cos).unwrap_or(false)
        });
        if ok {
            return Ok(candidate);
        }
    }
    Err(SynthError::InvalidSpec(format!(
        "could not sample a prototype of dim {dim} with pairwise cosine <= {max_cos}"
    )))
}

fn validate_spec(spec: &WorldSpec) -> Result<()> {
    let fail = |msg: String| Err(SynthError::InvalidSpec(msg));
    if spec.canvas_width < 3 || spec.canvas_height < 3 {
        return fail("canvas must be at least 3x3".into());
    }
    if spec.object_dim < 2 {
        return fail("object_dim must be at least 2".into());
    }
    if spec.layers.is_empty() {
        return fail("at least one patch layer is required".into());
    }
    let (gw, gh) = (spec.layers[0].grid_width, spec.layers[0].grid_height);
    for layer in &spec.layers {
        if layer.grid_width != gw || layer.grid_height != gh {
            return fail(format!(
                "layer {} grid differs; all layers must share one grid",
                layer.layer_id
            ));
        }
        if layer.grid_width < 1 || layer.grid_height < 1 || layer.dim < 2 {
            return fail(format!("layer {} has degenerate shape", layer.layer_id));
        }
    }
    if gw > spec.canvas_width || gh > spec.canvas_height {
        return fail("patch grid cannot exceed the canvas".into());
    }
    let mut ids: Vec<&str> = spec.layers.iter().map(|l| l.layer_id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return fail("duplicate layer id".into());
    }
    if spec.layout.is_empty() {
        return fail("layout must contain at least one class".into());
    }
    let mut names: Vec<&str> = spec
        .layout
        .iter()
        .map(|i| i.class_name.as_str())
        .chain(spec.extra_classes.iter().map(|e| e.class_name.as_str()))
        .collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return fail("class names must be unique across layout and extras".into());
    }
    for item in &spec.layout {
        if item.class_name.is_empty() {
            return fail("empty class name".into());
        }
        if item.count < 1 {
            return fail(format!("{} count must be >= 1", item.class_name));
        }
        let ok_range = |r: (u32, u32)| r.0 >= 1 && r.0 <= r.1;
        if !ok_range(item.width_range) || !ok_range(item.height_range) {
            return fail(format!("{} has an invalid size range", item.class_name));
        }
    }
    for extra in &spec.extra_classes {
        if extra.width < 1 || extra.height < 1 || extra.class_name.is_empty() {
            return fail("invalid extra class".into());
        }
    }
    if !spec.noise_sigma.is_finite() || spec.noise_sigma < 0.0 {
        return fail("noise_sigma must be nonnegative".into());
    }
    if !(0.0..=1.0).contains(&spec.max_prototype_cosine) {
        return fail("max_prototype_cosine must lie in [0, 1]".into());
    }
    Ok(())
}
