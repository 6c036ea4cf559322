use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use chromanorm::config::{Emit, PipelineConfig};
use chromanorm::matching::{run_match, write_outputs};
use chromanorm::normalize::run_batch;
use chromanorm::render::render_to_file;
use chromanorm_core::cii::RobustMean;
use chromanorm_core::features::FeatureKind;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "chromanorm",
    version,
    about = "Illumination normalization for RGB images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Feature {
    Lbp,
    Lpq,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeanArg {
    PowerMean,
    Printed,
}

#[derive(Subcommand)]
enum Command {
    /// Remove shadows and illuminant colour casts from a batch of images.
    Normalize(NormalizeArgs),
    /// Rank-1 identification of query images against a gallery.
    Match {
        #[arg(long)]
        gallery: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_enum, default_value = "lbp")]
        feature: Feature,
        /// Distance matrix CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV of every histogram.
        #[arg(long)]
        histograms: Option<PathBuf>,
        #[arg(long)]
        no_decode_gamma: bool,
    },
    /// Render a synthetic scene description (JSON) to a 16-bit image.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the light-boundary mask here.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Store linear values instead of sRGB codes.
        #[arg(long)]
        linear: bool,
    },
}

#[derive(clap::Args)]
struct NormalizeArgs {
    /// Image files or directories.
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    emit: Option<Emit>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    theta_step_deg: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    /// Tail quantile trimmed before entropy binning.
    #[arg(long)]
    trim: Option<f64>,
    /// Exponent of the robust mean in intensity regularization.
    #[arg(long)]
    exponent: Option<f64>,
    #[arg(long, value_enum)]
    robust_mean: Option<MeanArg>,
    #[arg(long)]
    guided_radius: Option<usize>,
    #[arg(long)]
    guided_eps: Option<f64>,
    #[arg(long)]
    dilate_radius: Option<usize>,
    /// Target Hoyer sparsity of the specular coefficients.
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long)]
    poisson_tol: Option<f64>,
    /// Treat input codes as linear light.
    #[arg(long)]
    no_decode_gamma: bool,
}

impl NormalizeArgs {
    fn into_config(self) -> anyhow::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        if !self.input.is_empty() {
            c.inputs = self.input;
        }
        if self.out.is_some() {
            c.out = self.out;
        }
        if let Some(v) = self.emit {
            c.emit = v;
        }
        if let Some(v) = self.jobs {
            c.jobs = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.theta_step_deg {
            c.theta_step_deg = v;
        }
        if let Some(v) = self.tau1 {
            c.tau1 = v;
        }
        if let Some(v) = self.tau2 {
            c.tau2 = v;
        }
        if let Some(v) = self.trim {
            c.trim = v;
        }
        if let Some(v) = self.exponent {
            c.exponent = v;
        }
        if let Some(v) = self.robust_mean {
            c.robust_mean = match v {
                MeanArg::PowerMean => RobustMean::PowerMean,
                MeanArg::Printed => RobustMean::Printed,
            };
        }
        if let Some(v) = self.guided_radius {
            c.guided_radius = v;
        }
        if let Some(v) = self.guided_eps {
            c.guided_eps = v;
        }
        if let Some(v) = self.dilate_radius {
            c.dilate_radius = v;
        }
        if let Some(v) = self.sparsity {
            c.sparsity_target = v;
        }
        if let Some(v) = self.poisson_tol {
            c.poisson_tol = v;
        }
        if self.no_decode_gamma {
            c.decode_gamma = false;
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Normalize(args) => {
            let config = args.into_config()?;
            let batch = run_batch(&config)?;
            eprintln!("{} succeeded, {} failed", batch.succeeded, batch.failed);
            Ok(batch.failed == 0)
        }
        Command::Match {
            gallery,
            query,
            feature,
            out,
            histograms,
            no_decode_gamma,
        } => {
            let kind = match feature {
                Feature::Lbp => FeatureKind::Lbp,
                Feature::Lpq => FeatureKind::Lpq,
            };
            let result = run_match(&gallery, &query, kind, !no_decode_gamma)?;
            write_outputs(&result, &out, histograms.as_deref())?;
            for e in &result.errors {
                eprintln!("FAIL {e}");
            }
            println!(
                "rank-1 accuracy: {:.4} ({} queries, {} gallery)",
                result.accuracy(),
                result.queries.len(),
                result.gallery.len()
            );
            Ok(result.errors.is_empty())
        }
        Command::Render {
            scene,
            out,
            truth,
            linear,
        } => {
            let clamped = render_to_file(&scene, &out, !linear, truth.as_deref())
                .with_context(|| format!("rendering {}", scene.display()))?;
            if clamped > 0 {
                eprintln!("warning: {clamped} pixels clamped to [0, 1]");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
