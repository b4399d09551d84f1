//! Per-image descriptor bundles as produced by upstream extractors: text,
//! segmented-object features with masks, patch feature grids, and optional
//! ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::mask::Mask;
use crate::text::ImageText;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomalous,
}

/// One segmented object: its feature vector and pixel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDescriptor {
    pub feature: FeatureVector,
    pub mask: Mask,
}

/// One layer of a patch feature grid: `grid_height × grid_width` cells of
/// `dim` floats, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchLayer {
    layer_id: String,
    grid_width: u32,
    grid_height: u32,
    dim: u32,
    values: Vec<f32>,
}

impl PatchLayer {
    pub fn new(
        layer_id: String,
        grid_width: u32,
        grid_height: u32,
        dim: u32,
        values: Vec<f32>,
    ) -> Result<Self> {
        if layer_id.is_empty() {
            return Err(Error::Invalid("layer id must be nonempty".into()));
        }
        if grid_width < 1 || grid_height < 1 || dim < 1 {
            return Err(Error::Invalid(format!(
                "layer {layer_id} has degenerate shape {grid_width}x{grid_height}x{dim}"
            )));
        }
        let expected = (grid_width as usize) * (grid_height as usize) * (dim as usize);
        if values.len() != expected {
            return Err(Error::Invalid(format!(
                "layer {layer_id} has {} values, expected {expected}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("layer {layer_id} has non-finite value")));
        }
        Ok(PatchLayer {
            layer_id,
            grid_width,
            grid_height,
            dim,
            values,
        })
    }

    pub fn layer_id(&self) -> &str {
        &self.layer_id
    }

    pub fn grid_width(&self) -> u32 {
        self.grid_width
    }

    pub fn grid_height(&self) -> u32 {
        self.grid_height
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn cell(&self, x: u32, y: u32) -> &[f32] {
        let d = self.dim as usize;
        let start = ((y as usize) * (self.grid_width as usize) + x as usize) * d;
        &self.values[start..start + d]
    }

    #[inline]
    pub fn cell_mut(&mut self, x: u32, y: u32) -> &mut [f32] {
        let d = self.dim as usize;
        let start = ((y as usize) * (self.grid_width as usize) + x as usize) * d;
        &mut self.values[start..start + d]
    }
}

/// Multi-layer patch features of one image. All layers share the grid shape;
/// the per-cell dimension may differ per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFeatureMap {
    layers: Vec<PatchLayer>,
}

impl PatchFeatureMap {
    pub fn new(layers: Vec<PatchLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::EmptyInput("patch feature map needs at least one layer"));
        }
        let (gw, gh) = (layers[0].grid_width, layers[0].grid_height);
        for layer in &layers {
            if layer.grid_width != gw || layer.grid_height != gh {
                return Err(Error::LayerMismatch(format!(
                    "layer {} grid {}x{} differs from {}x{}",
                    layer.layer_id, layer.grid_width, layer.grid_height, gw, gh
                )));
            }
        }
        let mut ids: Vec<&str> = layers.iter().map(|l| l.layer_id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid("duplicate layer id".into()));
        }
        Ok(PatchFeatureMap { layers })
    }

    pub fn layers(&self) -> &[PatchLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [PatchLayer] {
        &mut self.layers
    }

    pub fn layer(&self, layer_id: &str) -> Option<&PatchLayer> {
        self.layers.iter().find(|l| l.layer_id == layer_id)
    }

    pub fn grid(&self) -> (u32, u32) {
        (self.layers[0].grid_width, self.layers[0].grid_height)
    }

    pub fn layer_ids_sorted(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.layers.iter().map(|l| l.layer_id.as_str()).collect();
        ids.sort_unstable();
        ids
    }
}

/// Everything the engine knows about one image.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBundle {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub text: ImageText,
    pub category_masks: BTreeMap<String, Mask>,
    pub objects: Vec<ObjectDescriptor>,
    pub patches: PatchFeatureMap,
    pub gt_anomaly: Option<Mask>,
    pub label: Label,
}

impl SceneBundle {
    /// Checks the structural invariants: mask keys are a subset of the text
    /// classes, and every mask fits the image resolution.
    pub fn validate(&self) -> Result<()> {
        if self.width < 1 || self.height < 1 {
            return Err(Error::Invalid("scene dimensions must be positive".into()));
        }
        for class in self.category_masks.keys() {
            if !self.text.contains_class(class) {
                return Err(Error::Invalid(format!(
                    "category mask {class} has no text entry in {}",
                    self.image_id
                )));
            }
        }
        for (class, mask) in &self.category_masks {
            if mask.width() != self.width || mask.height() != self.height {
                return Err(Error::Invalid(format!(
                    "category mask {class} is {}x{}, scene is {}x{}",
                    mask.width(),
                    mask.height(),
                    self.width,
                    self.height
                )));
            }
        }
        for (i, obj) in self.objects.iter().enumerate() {
            if obj.mask.width() != self.width || obj.mask.height() != self.height {
                return Err(Error::Invalid(format!(
                    "object {i} mask does not fit scene {}",
                    self.image_id
                )));
            }
        }
        if let Some(gt) = &self.gt_anomaly {
            if gt.width() != self.width || gt.height() != self.height {
                return Err(Error::Invalid(format!(
                    "ground-truth mask does not fit scene {}",
                    self.image_id
                )));
            }
        }
        Ok(())
    }

    pub fn with_image_id(mut self, image_id: &str) -> Self {
        let entries = self.text.entries().to_vec();
        self.text = ImageText::new(image_id.to_string(), entries)
            .expect("entries were already valid");
        self.image_id = image_id.to_string();
        self
    }
}

/// A scene plus the dataset category it belongs to (banks are keyed by
/// category).
#[derive(Debug, Clone, PartialEq)]
pub struct CategorizedScene {
    pub category: String,
    pub scene: SceneBundle,
}
