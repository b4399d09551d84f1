//! Command implementations shared by the binary and the test suites.

use std::fmt::Write as _;
use std::path::Path;

use tmuad_core::{build_bank_set, evaluate, score_query, CategorizedScene, Label, MetricsReport};
use tmuad_synth::{generate_normal_scene, inject_anomaly, AnomalyKind, World, WorldSpec};

use crate::config::{parse_json, ConfigOverrides, EngineConfig};
use crate::container::{read_container, write_container};
use crate::dataset::{read_dataset, write_dataset};
use crate::error::{io_err, CliError, Result};
use crate::pgm::write_pgm;

/// Builds the three banks from a dataset of normal scenes and writes the
/// container. Any anomalous-labeled input is rejected.
pub fn cmd_build_bank(input: &Path, out: &Path, cfg: &EngineConfig) -> Result<()> {
    cfg.validate()?;
    let scenes = read_dataset(input)?;
    if scenes.is_empty() {
        return Err(CliError::Input(format!(
            "{}: dataset has no images",
            input.display()
        )));
    }
    if let Some(bad) = scenes.iter().find(|s| s.scene.label != Label::Normal) {
        return Err(CliError::Input(format!(
            "bank construction accepts only normal images, {} is labeled anomalous",
            bad.scene.image_id
        )));
    }
    let banks = build_bank_set(
        &scenes,
        cfg.k_object,
        cfg.k_patch,
        cfg.seed,
        cfg.bank_resolution,
    )?;
    write_container(out, &banks, cfg)
}

/// Scores every query of a dataset: per-query rasters for the three maps and
/// the fused map, a JSON match report, and optionally a PGM preview.
pub fn cmd_score(
    bank_path: &Path,
    query_dir: &Path,
    out_dir: &Path,
    config_file: Option<&Path>,
    overrides: &ConfigOverrides,
    write_previews: bool,
) -> Result<()> {
    let (banks, snapshot) = read_container(bank_path)?;
    let cfg = crate::config::resolve_config(snapshot, config_file, overrides)?;
    let queries = read_dataset(query_dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    for query in &queries {
        let scored = score_query(&banks, query, &cfg.weights, cfg.relaxed)?;
        let id = &scored.image_id;
        let write = |suffix: &str, bytes: Vec<u8>| -> Result<()> {
            let path = out_dir.join(format!("{id}.{suffix}"));
            std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))
        };
        write("text.tmsf", scored.text_map.to_raster_bytes())?;
        write("object.tmsf", scored.object_map.to_raster_bytes())?;
        write("patch.tmsf", scored.patch_map.to_raster_bytes())?;
        write("fused.tmsf", scored.fused_map.to_raster_bytes())?;
        write(
            "report.json",
            serde_json::to_vec_pretty(&scored.report).expect("serializable"),
        )?;
        if write_previews {
            write_pgm(&out_dir.join(format!("{id}.fused.pgm")), &scored.fused_map)?;
        }
    }
    Ok(())
}

fn metrics_csv(report: &MetricsReport) -> String {
    let mut csv = String::from("image_id,label,image_score,text_max,object_max,patch_max\n");
    for q in &report.per_query {
        let label = match q.label {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
        };
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            q.image_id, label, q.image_score, q.text_max, q.object_max, q.patch_max
        )
        .expect("string write");
    }
    csv
}

/// Evaluates a labeled test set: metrics.json plus per_query.csv.
pub fn cmd_eval(
    bank_path: &Path,
    test_dir: &Path,
    out_dir: &Path,
    config_file: Option<&Path>,
    overrides: &ConfigOverrides,
) -> Result<MetricsReport> {
    let (banks, snapshot) = read_container(bank_path)?;
    let cfg = crate::config::resolve_config(snapshot, config_file, overrides)?;
    let queries = read_dataset(test_dir)?;
    let report = evaluate(&banks, &queries, &cfg.weights, cfg.relaxed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let metrics_path = out_dir.join("metrics.json");
    std::fs::write(
        &metrics_path,
        serde_json::to_vec_pretty(&report).expect("serializable"),
    )
    .map_err(|e| io_err(&metrics_path, e))?;
    let csv_path = out_dir.join("per_query.csv");
    std::fs::write(&csv_path, metrics_csv(&report)).map_err(|e| io_err(&csv_path, e))?;
    Ok(report)
}

/// Generates a synthetic dataset: `n_normal` normal scenes followed by
/// `n_anomalous_per_kind` injected scenes for each anomaly kind. Scene
/// indices start at `start_index` so disjoint train/test sets can be drawn
/// from one family.
pub fn cmd_synth_gen(
    spec_file: Option<&Path>,
    seed: Option<u64>,
    n_normal: u64,
    n_anomalous_per_kind: u64,
    start_index: u64,
    out: &Path,
) -> Result<()> {
    let mut spec = match spec_file {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
            let spec: WorldSpec = parse_json(path, &bytes)
                .map_err(|e| CliError::Config(format!("world spec: {e}")))?;
            spec
        }
        None => WorldSpec::default(),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let world = World::new(spec)?;
    let mut items = Vec::new();
    for i in 0..n_normal {
        let scene = generate_normal_scene(&world, start_index + i)?;
        items.push(CategorizedScene {
            category: world.category().to_string(),
            scene,
        });
    }
    let mut source_index = start_index + n_normal;
    for kind in AnomalyKind::ALL {
        for i in 0..n_anomalous_per_kind {
            let source = generate_normal_scene(&world, source_index)?;
            let injected = inject_anomaly(&world, &source, kind, source_index)?
                .with_image_id(&format!("anom-{}-{i:03}", kind.token()));
            items.push(CategorizedScene {
                category: world.category().to_string(),
                scene: injected,
            });
            source_index += 1;
        }
    }
    write_dataset(out, &items)
}
