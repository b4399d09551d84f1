//! Bank container: a single versioned file holding the text banks, the two
//! centroid banks, and the config snapshot.
//!
//! Layout (all integers little-endian, strings length-prefixed u32 UTF-8):
//!
//! ```text
//! "TMUADBNK" | u16 version
//! text section:   u32 n_categories, per category (sorted):
//!                   str name, u32 json_len + JSON{entries,size_ranges,
//!                   bank_resolution}, u32 n_occurrence, per class (sorted):
//!                   str class + u32 len + RLE blob
//! object section: u32 k_object, u32 dim, u32 n_categories, per category:
//!                   str name, u32 n_centroids, n·dim f32
//! patch section:  u32 k_patch, u32 n_categories, per category: str name,
//!                   u32 n_layers, per layer (sorted): str id, u32 dim,
//!                   u32 n_centroids, n·dim f32
//! config section: u32 json_len + JSON(EngineConfig)
//! ```
//!
//! The encoding is canonical (sorted maps, fixed field order), so encoding
//! the decoded value reproduces the input bytes exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use tmuad_core::{BankSet, FeatureVector, ImageText, Mask, ObjectBank, PatchBank, TextBank};

use crate::config::EngineConfig;
use crate::error::{io_err, CliError, Result};

pub const BANK_MAGIC: &[u8; 8] = b"TMUADBNK";
pub const BANK_VERSION: u16 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TextBankJson {
    entries: Vec<ImageText>,
    size_ranges: BTreeMap<String, (f64, f64)>,
    bank_resolution: (u32, u32),
}

struct Writer {
    out: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { out: Vec::new() }
    }

    fn u16(&mut self, v: u16) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.out.extend_from_slice(b);
    }

    fn string(&mut self, s: &str) {
        self.bytes(s.as_bytes());
    }

    fn f32s(&mut self, values: &[f32]) {
        for v in values {
            self.out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(CliError::Input(format!(
                "bank container truncated at byte {}",
                self.pos
            )));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    fn string(&mut self) -> Result<String> {
        let raw = self.bytes()?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| CliError::Input("bank container holds invalid UTF-8".into()))
    }

    fn f32s(&mut self, count: usize) -> Result<Vec<f32>> {
        let raw = self.take(count * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finished(&self) -> bool {
        self.pos == self.data.len()
    }
}

pub fn encode_container(banks: &BankSet, cfg: &EngineConfig) -> Vec<u8> {
    let mut w = Writer::new();
    w.out.extend_from_slice(BANK_MAGIC);
    w.u16(BANK_VERSION);

    // Text banks.
    w.u32(banks.text.len() as u32);
    for (category, bank) in &banks.text {
        w.string(category);
        let json = TextBankJson {
            entries: bank.entries().to_vec(),
            size_ranges: bank.size_ranges().clone(),
            bank_resolution: bank.bank_resolution(),
        };
        w.bytes(&serde_json::to_vec(&json).expect("serializable"));
        w.u32(bank.occurrence_masks().len() as u32);
        for (class, mask) in bank.occurrence_masks() {
            w.string(class);
            w.bytes(&mask.to_rle_bytes());
        }
    }

    // Object bank.
    w.u32(banks.object.k_object() as u32);
    w.u32(banks.object.dim() as u32);
    w.u32(banks.object.by_category().len() as u32);
    for (category, centroids) in banks.object.by_category() {
        w.string(category);
        w.u32(centroids.len() as u32);
        for c in centroids {
            w.f32s(c.values());
        }
    }

    // Patch bank.
    w.u32(banks.patch.k_patch() as u32);
    w.u32(banks.patch.by_category().len() as u32);
    for (category, layers) in banks.patch.by_category() {
        w.string(category);
        w.u32(layers.len() as u32);
        for (layer_id, centroids) in layers {
            w.string(layer_id);
            w.u32(centroids[0].dim() as u32);
            w.u32(centroids.len() as u32);
            for c in centroids {
                w.f32s(c.values());
            }
        }
    }

    // Config snapshot.
    w.bytes(&serde_json::to_vec(cfg).expect("serializable"));
    w.out
}

pub fn decode_container(data: &[u8]) -> Result<(BankSet, EngineConfig)> {
    let mut r = Reader::new(data);
    let magic = r.take(8)?;
    if magic != BANK_MAGIC {
        return Err(CliError::Input(
            "not a bank container (bad magic, expected \"TMUADBNK\")".into(),
        ));
    }
    let version = r.u16()?;
    if version != BANK_VERSION {
        return Err(CliError::Input(format!(
            "unsupported bank container version {version}, expected {BANK_VERSION}"
        )));
    }

    let n_text = r.u32()? as usize;
    let mut text = BTreeMap::new();
    for _ in 0..n_text {
        let category = r.string()?;
        let json_bytes = r.bytes()?;
        let parsed: TextBankJson = serde_json::from_slice(json_bytes)
            .map_err(|e| CliError::Input(format!("text bank JSON: {e}")))?;
        let n_occ = r.u32()? as usize;
        let mut occurrence = BTreeMap::new();
        for _ in 0..n_occ {
            let class = r.string()?;
            let blob = r.bytes()?;
            let mask = Mask::from_rle_bytes(blob)
                .map_err(|e| CliError::Input(format!("occurrence mask {class}: {e}")))?;
            occurrence.insert(class, mask);
        }
        let bank = TextBank::from_parts(
            parsed.entries,
            parsed.size_ranges,
            occurrence,
            parsed.bank_resolution,
        )
        .map_err(|e| CliError::Input(format!("text bank {category}: {e}")))?;
        text.insert(category, bank);
    }

    let k_object = r.u32()? as usize;
    let obj_dim = r.u32()? as usize;
    let n_obj_categories = r.u32()? as usize;
    let mut object_centroids = BTreeMap::new();
    for _ in 0..n_obj_categories {
        let category = r.string()?;
        let n = r.u32()? as usize;
        let mut centroids = Vec::with_capacity(n);
        for _ in 0..n {
            let values = r.f32s(obj_dim)?;
            centroids.push(
                FeatureVector::new(values)
                    .map_err(|e| CliError::Input(format!("object centroid: {e}")))?,
            );
        }
        object_centroids.insert(category, centroids);
    }
    let object = ObjectBank::from_parts(object_centroids, k_object, obj_dim)
        .map_err(|e| CliError::Input(format!("object bank: {e}")))?;

    let k_patch = r.u32()? as usize;
    let n_patch_categories = r.u32()? as usize;
    let mut patch_centroids = BTreeMap::new();
    for _ in 0..n_patch_categories {
        let category = r.string()?;
        let n_layers = r.u32()? as usize;
        let mut layers = BTreeMap::new();
        for _ in 0..n_layers {
            let layer_id = r.string()?;
            let dim = r.u32()? as usize;
            let n = r.u32()? as usize;
            let mut centroids = Vec::with_capacity(n);
            for _ in 0..n {
                let values = r.f32s(dim)?;
                centroids.push(
                    FeatureVector::new(values)
                        .map_err(|e| CliError::Input(format!("patch centroid: {e}")))?,
                );
            }
            layers.insert(layer_id, centroids);
        }
        patch_centroids.insert(category, layers);
    }
    let patch = PatchBank::from_parts(patch_centroids, k_patch)
        .map_err(|e| CliError::Input(format!("patch bank: {e}")))?;

    let cfg_bytes = r.bytes()?;
    let cfg: EngineConfig = serde_json::from_slice(cfg_bytes)
        .map_err(|e| CliError::Input(format!("config snapshot: {e}")))?;
    if !r.finished() {
        return Err(CliError::Input(format!(
            "bank container has {} trailing bytes",
            data.len() - r.pos
        )));
    }

    Ok((BankSet { text, object, patch }, cfg))
}

pub fn write_container(path: &Path, banks: &BankSet, cfg: &EngineConfig) -> Result<()> {
    std::fs::write(path, encode_container(banks, cfg)).map_err(|e| io_err(path, e))
}

pub fn read_container(path: &Path) -> Result<(BankSet, EngineConfig)> {
    let data = std::fs::read(path).map_err(|e| io_err(path, e))?;
    decode_container(&data)
}
