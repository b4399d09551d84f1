//! Dataset layout: a `manifest.json` naming images with category and label,
//! and one directory per image carrying `text.json`, `objects.json` +
//! `objects.bin` (packed f32 features, masks as RLE files), `patches.json` +
//! `patches.bin`, and an optional `gt.rle`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use tmuad_core::{
    CategorizedScene, FeatureVector, ImageText, Label, Mask, ObjectDescriptor, PatchFeatureMap,
    PatchLayer, SceneBundle,
};

use crate::config::parse_json;
use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub category: String,
    pub label: Label,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub images: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TextFile {
    image_id: String,
    width: u32,
    height: u32,
    entries: Vec<tmuad_core::CategoryText>,
    category_masks: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectsFile {
    count: u32,
    dim: u32,
    masks: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PatchLayerEntry {
    layer_id: String,
    grid_width: u32,
    grid_height: u32,
    dim: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct PatchesFile {
    layers: Vec<PatchLayerEntry>,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty()
        || id.contains('/')
        || id.contains('\\')
        || id.contains("..")
        || id.starts_with('.')
    {
        return Err(CliError::Input(format!("unsafe image id: {id:?}")));
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_err(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn read_mask(path: &Path) -> Result<Mask> {
    Mask::from_rle_bytes(&read_file(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn f32s_to_bytes(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn bytes_to_f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

/// Writes one scene into `dir` (created if needed).
pub fn write_scene(dir: &Path, scene: &SceneBundle) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let mut category_masks = BTreeMap::new();
    for (class, mask) in &scene.category_masks {
        let file = format!("mask_{}.rle", sanitize(class));
        write_file(&dir.join(&file), &mask.to_rle_bytes())?;
        category_masks.insert(class.clone(), file);
    }
    let text = TextFile {
        image_id: scene.image_id.clone(),
        width: scene.width,
        height: scene.height,
        entries: scene.text.entries().to_vec(),
        category_masks,
    };
    write_file(
        &dir.join("text.json"),
        &serde_json::to_vec_pretty(&text).expect("serializable"),
    )?;

    let dim = scene.objects.first().map(|o| o.feature.dim()).unwrap_or(0);
    let mut mask_files = Vec::new();
    let mut packed = Vec::with_capacity(scene.objects.len() * dim);
    for (i, obj) in scene.objects.iter().enumerate() {
        if obj.feature.dim() != dim {
            return Err(CliError::Input(format!(
                "object {i} of {} has dim {}, expected {dim}",
                scene.image_id,
                obj.feature.dim()
            )));
        }
        let file = format!("obj_{i:04}.rle");
        write_file(&dir.join(&file), &obj.mask.to_rle_bytes())?;
        mask_files.push(file);
        packed.extend_from_slice(obj.feature.values());
    }
    let objects = ObjectsFile {
        count: scene.objects.len() as u32,
        dim: dim as u32,
        masks: mask_files,
    };
    write_file(
        &dir.join("objects.json"),
        &serde_json::to_vec_pretty(&objects).expect("serializable"),
    )?;
    write_file(&dir.join("objects.bin"), &f32s_to_bytes(&packed))?;

    let mut layer_entries = Vec::new();
    let mut patch_bytes = Vec::new();
    for layer in scene.patches.layers() {
        layer_entries.push(PatchLayerEntry {
            layer_id: layer.layer_id().to_string(),
            grid_width: layer.grid_width(),
            grid_height: layer.grid_height(),
            dim: layer.dim(),
        });
        patch_bytes.extend_from_slice(&f32s_to_bytes(layer.values()));
    }
    write_file(
        &dir.join("patches.json"),
        &serde_json::to_vec_pretty(&PatchesFile {
            layers: layer_entries,
        })
        .expect("serializable"),
    )?;
    write_file(&dir.join("patches.bin"), &patch_bytes)?;

    if let Some(gt) = &scene.gt_anomaly {
        write_file(&dir.join("gt.rle"), &gt.to_rle_bytes())?;
    }
    Ok(())
}

/// Reads one scene from `dir`; `id` and `label` come from the manifest.
pub fn read_scene(dir: &Path, id: &str, label: Label) -> Result<SceneBundle> {
    let text_path = dir.join("text.json");
    let text_bytes = read_file(&text_path)?;
    let text_file: TextFile = parse_json(&text_path, &text_bytes)?;
    if text_file.image_id != id {
        return Err(CliError::Input(format!(
            "{}: image_id {:?} does not match manifest id {id:?}",
            text_path.display(),
            text_file.image_id
        )));
    }
    let text = ImageText::new(text_file.image_id, text_file.entries)
        .map_err(|e| CliError::Input(format!("{}: {e}", text_path.display())))?;
    let mut category_masks = BTreeMap::new();
    for (class, file) in &text_file.category_masks {
        category_masks.insert(class.clone(), read_mask(&dir.join(file))?);
    }

    let objects_path = dir.join("objects.json");
    let objects_bytes = read_file(&objects_path)?;
    let objects_file: ObjectsFile = parse_json(&objects_path, &objects_bytes)?;
    if objects_file.masks.len() != objects_file.count as usize {
        return Err(CliError::Input(format!(
            "{}: {} mask files for count {}",
            objects_path.display(),
            objects_file.masks.len(),
            objects_file.count
        )));
    }
    let bin_path = dir.join("objects.bin");
    let bin = read_file(&bin_path)?;
    let expected = objects_file.count as usize * objects_file.dim as usize * 4;
    if bin.len() != expected {
        return Err(CliError::Input(format!(
            "{}: blob is {} bytes, expected {expected}",
            bin_path.display(),
            bin.len()
        )));
    }
    let features = bytes_to_f32s(&bin);
    let mut objects = Vec::with_capacity(objects_file.count as usize);
    for (i, mask_file) in objects_file.masks.iter().enumerate() {
        let dim = objects_file.dim as usize;
        let feature = FeatureVector::new(features[i * dim..(i + 1) * dim].to_vec())
            .map_err(|e| CliError::Input(format!("{}: object {i}: {e}", bin_path.display())))?;
        objects.push(ObjectDescriptor {
            feature,
            mask: read_mask(&dir.join(mask_file))?,
        });
    }

    let patches_path = dir.join("patches.json");
    let patches_bytes = read_file(&patches_path)?;
    let patches_file: PatchesFile = parse_json(&patches_path, &patches_bytes)?;
    let pbin_path = dir.join("patches.bin");
    let pbin = read_file(&pbin_path)?;
    let total: usize = patches_file
        .layers
        .iter()
        .map(|l| l.grid_width as usize * l.grid_height as usize * l.dim as usize * 4)
        .sum();
    if pbin.len() != total {
        return Err(CliError::Input(format!(
            "{}: blob is {} bytes, expected {total}",
            pbin_path.display(),
            pbin.len()
        )));
    }
    let mut offset = 0usize;
    let mut layers = Vec::new();
    for entry in &patches_file.layers {
        let n = entry.grid_width as usize * entry.grid_height as usize * entry.dim as usize * 4;
        let values = bytes_to_f32s(&pbin[offset..offset + n]);
        offset += n;
        layers.push(
            PatchLayer::new(
                entry.layer_id.clone(),
                entry.grid_width,
                entry.grid_height,
                entry.dim,
                values,
            )
            .map_err(|e| CliError::Input(format!("{}: {e}", pbin_path.display())))?,
        );
    }
    let patches = PatchFeatureMap::new(layers)
        .map_err(|e| CliError::Input(format!("{}: {e}", patches_path.display())))?;

    let gt_path = dir.join("gt.rle");
    let gt_anomaly = if gt_path.exists() {
        Some(read_mask(&gt_path)?)
    } else {
        None
    };

    let scene = SceneBundle {
        image_id: id.to_string(),
        width: text_file.width,
        height: text_file.height,
        text,
        category_masks,
        objects,
        patches,
        gt_anomaly,
        label,
    };
    scene
        .validate()
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    Ok(scene)
}

/// Writes a dataset: manifest plus one directory per scene (directory name
/// equals the image id).
pub fn write_dataset(root: &Path, items: &[CategorizedScene]) -> Result<()> {
    std::fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
    let mut images = Vec::with_capacity(items.len());
    for item in items {
        check_id(&item.scene.image_id)?;
        images.push(ManifestEntry {
            id: item.scene.image_id.clone(),
            category: item.category.clone(),
            label: item.scene.label,
        });
        write_scene(&root.join(&item.scene.image_id), &item.scene)?;
    }
    write_file(
        &root.join("manifest.json"),
        &serde_json::to_vec_pretty(&Manifest { images }).expect("serializable"),
    )
}

/// Reads a dataset in manifest order.
pub fn read_dataset(root: &Path) -> Result<Vec<CategorizedScene>> {
    let manifest_path = root.join("manifest.json");
    let bytes = read_file(&manifest_path)?;
    let manifest: Manifest = parse_json(&manifest_path, &bytes)?;
    let mut out = Vec::with_capacity(manifest.images.len());
    for entry in &manifest.images {
        check_id(&entry.id)?;
        let scene = read_scene(&root.join(&entry.id), &entry.id, entry.label)?;
        if scene.label != entry.label {
            unreachable!("label comes from the manifest");
        }
        out.push(CategorizedScene {
            category: entry.category.clone(),
            scene,
        });
    }
    Ok(out)
}
