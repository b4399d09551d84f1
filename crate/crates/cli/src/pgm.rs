//! 8-bit binary PGM (P5) previews of score maps, scaled by 255.

use std::path::Path;

use tmuad_core::ScoreMap;

use crate::error::{io_err, Result};

pub fn pgm_bytes(map: &ScoreMap) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", map.width(), map.height());
    let mut out = header.into_bytes();
    out.extend(map.values().iter().map(|&v| (v * 255.0).round() as u8));
    out
}

pub fn write_pgm(path: &Path, map: &ScoreMap) -> Result<()> {
    std::fs::write(path, pgm_bytes(map)).map_err(|e| io_err(path, e))
}
