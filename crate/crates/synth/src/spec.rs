//! World specification: a serializable description of the synthetic scene
//! family that stands in for the out-of-scope neural extractors.

use serde::{Deserialize, Serialize};
use tmuad_core::Position;

/// One patch-feature layer emitted per scene. All layers of a world share
/// the same grid shape; per-cell dimensions may differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub layer_id: String,
    pub grid_width: u32,
    pub grid_height: u32,
    pub dim: u32,
}

/// One object class of the nominal layout: `count` rectangles jittered
/// inside one nine-grid cell. Rectangle dimensions are drawn once per class
/// from the inclusive ranges, so every scene of the family shares them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutItem {
    pub class_name: String,
    pub count: u32,
    pub cell: Position,
    pub width_range: (u32, u32),
    pub height_range: (u32, u32),
}

/// A class that never appears in normal scenes but is available to the
/// extra-class injector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraClassSpec {
    pub class_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub category: String,
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub object_dim: u32,
    pub layers: Vec<LayerSpec>,
    pub layout: Vec<LayoutItem>,
    pub extra_classes: Vec<ExtraClassSpec>,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Rejection-sampling bound on the pairwise cosine of prototypes.
    pub max_prototype_cosine: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            category: "tray".to_string(),
            canvas_width: 64,
            canvas_height: 64,
            object_dim: 24,
            layers: vec![
                LayerSpec {
                    layer_id: "enc-a".to_string(),
                    grid_width: 16,
                    grid_height: 16,
                    dim: 16,
                },
                LayerSpec {
                    layer_id: "enc-b".to_string(),
                    grid_width: 16,
                    grid_height: 16,
                    dim: 12,
                },
            ],
            layout: vec![
                LayoutItem {
                    class_name: "bolt".to_string(),
                    count: 3,
                    cell: Position::TopLeft,
                    width_range: (4, 5),
                    height_range: (4, 5),
                },
                LayoutItem {
                    class_name: "nut".to_string(),
                    count: 2,
                    cell: Position::Center,
                    width_range: (5, 6),
                    height_range: (5, 6),
                },
                LayoutItem {
                    class_name: "washer".to_string(),
                    count: 1,
                    cell: Position::BottomRight,
                    width_range: (7, 9),
                    height_range: (7, 9),
                },
            ],
            extra_classes: vec![ExtraClassSpec {
                class_name: "intruder".to_string(),
                width: 6,
                height: 6,
            }],
            noise_sigma: 0.02,
            seed: 7,
            max_prototype_cosine: 0.3,
        }
    }
}
