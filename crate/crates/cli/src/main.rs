use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tmuad_cli::{
    cmd_build_bank, cmd_eval, cmd_score, cmd_synth_gen, resolve_config, ConfigOverrides,
    EngineConfig,
};

#[derive(Parser)]
#[command(
    name = "tmuad",
    version,
    about = "Memory-bank anomaly scoring: build banks from normal images, score and evaluate queries"
)]
struct Cli {
    /// JSON config file; defaults to $TMUAD_CONFIG when set. Flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct OverrideArgs {
    /// Fusion weight of the text map.
    #[arg(long)]
    lambda_text: Option<f64>,
    /// Fusion weight of the object map.
    #[arg(long)]
    lambda_object: Option<f64>,
    /// Fusion weight of the patch map.
    #[arg(long)]
    lambda_patch: Option<f64>,
    /// Cluster count per object category.
    #[arg(long)]
    k_object: Option<usize>,
    /// Cluster count per (category, layer) patch pool.
    #[arg(long)]
    k_patch: Option<usize>,
    /// Seed for clustering initialization.
    #[arg(long)]
    seed: Option<u64>,
    /// Square resolution for stored occurrence masks.
    #[arg(long)]
    bank_resolution: Option<u32>,
    /// Relaxed matching: compare class presence only.
    #[arg(long)]
    relaxed: Option<bool>,
}

impl From<&OverrideArgs> for ConfigOverrides {
    fn from(a: &OverrideArgs) -> Self {
        ConfigOverrides {
            lambda_text: a.lambda_text,
            lambda_object: a.lambda_object,
            lambda_patch: a.lambda_patch,
            k_object: a.k_object,
            k_patch: a.k_patch,
            seed: a.seed,
            bank_resolution: a.bank_resolution,
            relaxed: a.relaxed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the three memory banks from a dataset of normal images.
    BuildBank {
        /// Dataset root (manifest.json plus per-image directories).
        #[arg(long)]
        input: PathBuf,
        /// Output bank container path.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Score queries: per-query score rasters and match reports.
    Score {
        /// Bank container built by build-bank.
        #[arg(long)]
        bank: PathBuf,
        /// Dataset root holding the queries.
        #[arg(long)]
        query_dir: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write 8-bit PGM previews of the fused maps.
        #[arg(long)]
        pgm: bool,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Evaluate a labeled test set: AUROC metrics as JSON and CSV.
    Eval {
        #[arg(long)]
        bank: PathBuf,
        /// Dataset root holding normal and anomalous queries.
        #[arg(long)]
        test_dir: PathBuf,
        /// Output directory for metrics.json and per_query.csv.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Generate a synthetic dataset with labeled anomalies and ground truth.
    SynthGen {
        /// World spec JSON; defaults to the built-in world.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Seed override for the world spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of normal scenes.
        #[arg(long, default_value_t = 10)]
        n_normal: u64,
        /// Number of injected scenes per anomaly kind.
        #[arg(long, default_value_t = 0)]
        n_anomalous_per_kind: u64,
        /// First scene index; use disjoint ranges for train and test sets.
        #[arg(long, default_value_t = 0)]
        start_index: u64,
        /// Output dataset root.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), tmuad_cli::CliError> {
    match &cli.command {
        Command::BuildBank {
            input,
            out,
            overrides,
        } => {
            let cfg = resolve_config(
                EngineConfig::default(),
                cli.config.as_deref(),
                &overrides.into(),
            )?;
            cmd_build_bank(input, out, &cfg)
        }
        Command::Score {
            bank,
            query_dir,
            out,
            pgm,
            overrides,
        } => cmd_score(
            bank,
            query_dir,
            out,
            cli.config.as_deref(),
            &overrides.into(),
            *pgm,
        ),
        Command::Eval {
            bank,
            test_dir,
            out,
            overrides,
        } => {
            let report = cmd_eval(
                bank,
                test_dir,
                out,
                cli.config.as_deref(),
                &overrides.into(),
            )?;
            println!("image AUROC: {:.6}", report.image_auroc);
            match report.pixel_auroc {
                Some(v) => println!("pixel AUROC: {v:.6}"),
                None => println!("pixel AUROC: undefined (no ground-truth pixels)"),
            }
            println!(
                "per-bank image AUROC: text {:.6}, object {:.6}, patch {:.6}",
                report.per_bank_image_auroc.text,
                report.per_bank_image_auroc.object,
                report.per_bank_image_auroc.patch
            );
            Ok(())
        }
        Command::SynthGen {
            spec,
            seed,
            n_normal,
            n_anomalous_per_kind,
            start_index,
            out,
        } => cmd_synth_gen(
            spec.as_deref(),
            *seed,
            *n_normal,
            *n_anomalous_per_kind,
            *start_index,
            out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
