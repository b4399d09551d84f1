//! Class-level text memory bank: stored descriptions of normal images,
//! per-class size extremes, and per-class occurrence masks.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::scene::{Label, SceneBundle};
use crate::text::ImageText;

#[derive(Debug, Clone, PartialEq)]
pub struct TextBank {
    entries: Vec<ImageText>,
    size_ranges: BTreeMap<String, (f64, f64)>,
    occurrence: BTreeMap<String, Mask>,
    bank_resolution: (u32, u32),
}

impl TextBank {
    /// Rebuilds a bank from stored parts (container loading).
    pub fn from_parts(
        entries: Vec<ImageText>,
        size_ranges: BTreeMap<String, (f64, f64)>,
        occurrence: BTreeMap<String, Mask>,
        bank_resolution: (u32, u32),
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("text bank entries"));
        }
        if bank_resolution.0 < 1 || bank_resolution.1 < 1 {
            return Err(Error::Invalid("bank resolution must be positive".into()));
        }
        for (class, &(lo, hi)) in &size_ranges {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::Invalid(format!("bad size range for {class}")));
            }
        }
        for (class, mask) in &occurrence {
            if mask.width() != bank_resolution.0 || mask.height() != bank_resolution.1 {
                return Err(Error::Invalid(format!(
                    "occurrence mask {class} does not match bank resolution"
                )));
            }
        }
        Ok(TextBank {
            entries,
            size_ranges,
            occurrence,
            bank_resolution,
        })
    }

    pub fn entries(&self) -> &[ImageText] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn size_ranges(&self) -> &BTreeMap<String, (f64, f64)> {
        &self.size_ranges
    }

    /// Stored `(s_min, s_max)` extremes of a class over all bank entries.
    pub fn size_range(&self, class_name: &str) -> Result<(f64, f64)> {
        self.size_ranges
            .get(class_name)
            .copied()
            .ok_or_else(|| Error::UnknownClass(class_name.to_string()))
    }

    pub fn occurrence(&self, class_name: &str) -> Option<&Mask> {
        self.occurrence.get(class_name)
    }

    pub fn occurrence_masks(&self) -> &BTreeMap<String, Mask> {
        &self.occurrence
    }

    pub fn bank_resolution(&self) -> (u32, u32) {
        self.bank_resolution
    }
}

/// Builds the bank from normal scenes: one stored description per scene,
/// per-class size extremes, and per-class occurrence masks (union of that
/// class's masks resampled to the bank resolution).
pub fn build_text_bank(scenes: &[SceneBundle], bank_resolution: (u32, u32)) -> Result<TextBank> {
    if scenes.is_empty() {
        return Err(Error::EmptyInput("text bank build needs at least one scene"));
    }
    if bank_resolution.0 < 1 || bank_resolution.1 < 1 {
        return Err(Error::Invalid("bank resolution must be positive".into()));
    }
    let mut entries = Vec::with_capacity(scenes.len());
    let mut size_ranges: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    let mut occurrence: BTreeMap<String, Mask> = BTreeMap::new();
    for scene in scenes {
        if scene.label != Label::Normal {
            return Err(Error::Invalid(format!(
                "bank construction requires normal scenes, {} is anomalous",
                scene.image_id
            )));
        }
        for entry in scene.text.entries() {
            let mask = scene
                .category_masks
                .get(&entry.class_name)
                .ok_or_else(|| Error::MissingCategoryMask(entry.class_name.clone()))?;
            size_ranges
                .entry(entry.class_name.clone())
                .and_modify(|(lo, hi)| {
                    *lo = lo.min(entry.size);
                    *hi = hi.max(entry.size);
                })
                .or_insert((entry.size, entry.size));
            let resampled = mask.resize_nearest(bank_resolution.0, bank_resolution.1)?;
            match occurrence.get_mut(&entry.class_name) {
                Some(acc) => acc.union_in_place(&resampled)?,
                None => {
                    occurrence.insert(entry.class_name.clone(), resampled);
                }
            }
        }
        entries.push(scene.text.clone());
    }
    TextBank::from_parts(entries, size_ranges, occurrence, bank_resolution)
}

/// Canonical string form of a description, used for similarity search:
/// class-sorted entries rendered as `class:count:position:size` with the
/// size at two decimal places, joined by `;`.
pub fn serialize_text(text: &ImageText) -> String {
    let parts: Vec<String> = text
        .entries()
        .iter()
        .map(|e| format!("{}:{}:{}:{:.2}", e.class_name, e.count, e.position, e.size))
        .collect();
    parts.join(";")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ObjectDescriptor, PatchFeatureMap, PatchLayer};
    use crate::text::{CategoryText, Position};
    use std::collections::BTreeMap;

    fn patches() -> PatchFeatureMap {
        PatchFeatureMap::new(vec![
            PatchLayer::new("enc".into(), 2, 2, 2, vec![0.5; 8]).unwrap()
        ])
        .unwrap()
    }

    /// A 10x10 scene whose single class covers `pixels` pixels, so the text
    /// size is exactly `pixels / 100`.
    pub(crate) fn scene_with_size(id: &str, class: &str, pixels: u32) -> SceneBundle {
        let mut mask = Mask::new(10, 10);
        for i in 0..pixels {
            mask.set(i % 10, i / 10, true);
        }
        let size = mask.area_fraction();
        let text = ImageText::new(
            id.into(),
            vec![CategoryText::new(class.into(), 2, Position::Center, size).unwrap()],
        )
        .unwrap();
        let mut masks = BTreeMap::new();
        masks.insert(class.to_string(), mask.clone());
        SceneBundle {
            image_id: id.into(),
            width: 10,
            height: 10,
            text,
            category_masks: masks,
            objects: vec![ObjectDescriptor {
                feature: crate::feature::FeatureVector::new(vec![1.0, 0.0]).unwrap(),
                mask,
            }],
            patches: patches(),
            gt_anomaly: None,
            label: Label::Normal,
        }
    }

    #[test]
    fn size_range_min_max_oracle() {
        let scenes = vec![
            scene_with_size("a", "cashew", 10),
            scene_with_size("b", "cashew", 12),
            scene_with_size("c", "cashew", 15),
        ];
        let bank = build_text_bank(&scenes, (10, 10)).unwrap();
        assert_eq!(bank.size_range("cashew").unwrap(), (0.10, 0.15));
        assert_eq!(bank.len(), 3);
    }

    #[test]
    fn single_scene_extremes_coincide() {
        let bank = build_text_bank(&[scene_with_size("a", "nut", 40)], (10, 10)).unwrap();
        assert_eq!(bank.size_range("nut").unwrap(), (0.4, 0.4));
    }

    #[test]
    fn absent_class_has_no_keys() {
        let bank = build_text_bank(&[scene_with_size("a", "nut", 40)], (10, 10)).unwrap();
        assert!(bank.occurrence("bolt").is_none());
        assert!(matches!(
            bank.size_range("bolt"),
            Err(Error::UnknownClass(_))
        ));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(build_text_bank(&[], (10, 10)).is_err());
    }

    #[test]
    fn anomalous_scene_is_rejected() {
        let mut scene = scene_with_size("a", "nut", 40);
        scene.label = Label::Anomalous;
        assert!(build_text_bank(&[scene], (10, 10)).is_err());
    }

    #[test]
    fn missing_category_mask_is_an_error() {
        let mut scene = scene_with_size("a", "nut", 40);
        scene.category_masks.clear();
        assert!(matches!(
            build_text_bank(&[scene], (10, 10)),
            Err(Error::MissingCategoryMask(_))
        ));
    }

    #[test]
    fn occurrence_covers_training_masks() {
        let scenes = vec![
            scene_with_size("a", "nut", 10),
            scene_with_size("b", "nut", 30),
        ];
        let bank = build_text_bank(&scenes, (10, 10)).unwrap();
        let occ = bank.occurrence("nut").unwrap();
        for scene in &scenes {
            let m = &scene.category_masks["nut"];
            for y in 0..10 {
                for x in 0..10 {
                    if m.get(x, y) {
                        assert!(occ.get(x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn build_is_input_order_invariant() {
        let a = scene_with_size("a", "nut", 10);
        let b = scene_with_size("b", "nut", 25);
        let bank1 = build_text_bank(&[a.clone(), b.clone()], (10, 10)).unwrap();
        let bank2 = build_text_bank(&[b, a], (10, 10)).unwrap();
        assert_eq!(bank1.size_ranges(), bank2.size_ranges());
        assert_eq!(bank1.occurrence_masks(), bank2.occurrence_masks());
        let mut ids1: Vec<_> = bank1.entries().iter().map(|e| e.image_id()).collect();
        let mut ids2: Vec<_> = bank2.entries().iter().map(|e| e.image_id()).collect();
        ids1.sort_unstable();
        ids2.sort_unstable();
        assert_eq!(ids1, ids2);
    }

    #[test]
    fn every_training_size_lies_within_its_range() {
        let scenes = vec![
            scene_with_size("a", "nut", 12),
            scene_with_size("b", "nut", 31),
            scene_with_size("c", "nut", 7),
        ];
        let bank = build_text_bank(&scenes, (10, 10)).unwrap();
        for scene in &scenes {
            for entry in scene.text.entries() {
                let (lo, hi) = bank.size_range(&entry.class_name).unwrap();
                assert!(lo <= entry.size && entry.size <= hi);
            }
        }
    }

    #[test]
    fn serialize_text_rendering_rule() {
        let empty = ImageText::new("e".into(), vec![]).unwrap();
        assert_eq!(serialize_text(&empty), "");

        let one = ImageText::new(
            "o".into(),
            vec![CategoryText::new("almond".into(), 2, Position::Center, 0.051).unwrap()],
        )
        .unwrap();
        assert_eq!(serialize_text(&one), "almond:2:center:0.05");

        let two = ImageText::new(
            "t".into(),
            vec![
                CategoryText::new("pin".into(), 4, Position::TopRight, 0.2).unwrap(),
                CategoryText::new("almond".into(), 1, Position::Left, 0.1).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(serialize_text(&two), "almond:1:left:0.10;pin:4:top-right:0.20");
    }
}
