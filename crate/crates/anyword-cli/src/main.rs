//! Command-line front end: `anyword segment` for single images,
//! `anyword bench` for dataset evaluation, `anyword adapt` for fitting the
//! fast text-encoder adapter.

use anyhow::{bail, Context, Result};
use anyword::embedopt::{fast_adapt_text_encoder, ToyTextEncoder};
use anyword::grid::ImageBuf;
use anyword::pipeline::{
    emit_overlay, encode_rle, read_dataset, run_benchmark, run_pipeline, synthetic, BenchInput,
    BenchTask, EncoderSelection, PipelineConfig,
};
use anyword::promptmine::PromptDumpRecord;
use anyword::textgraph::{parse_expression, ParserBackend};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "anyword",
    version,
    about = "Grounded segmentation from per-word mask prompts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// TOML config file mirroring the pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; every stage derives from it.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonOpts {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                PipelineConfig::load(path).with_context(|| format!("loading config {path:?}"))?
            }
            None => {
                let mut cfg = PipelineConfig::default();
                cfg.apply_env_overrides();
                cfg
            }
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Segment one image against a referring expression.
    Segment {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        text: String,
        /// Skip test-time embedding optimization.
        #[arg(long = "no-pl")]
        no_pl: bool,
        /// Skip positive adjective/attribute clustering.
        #[arg(long = "no-r1")]
        no_r1: bool,
        /// Skip negative mutual-exclusive binding.
        #[arg(long = "no-r2")]
        no_r2: bool,
        /// Emit upscaled thresholded attention instead of running the
        /// promptable segmentor.
        #[arg(long = "no-segmentor")]
        no_segmentor: bool,
        /// Override the optimization step count.
        #[arg(long)]
        steps: Option<usize>,
        /// Use the short optimization schedule.
        #[arg(long)]
        fast: bool,
        /// Override the embedding learning rate.
        #[arg(long)]
        lr: Option<f64>,
        /// Attention cache directory.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Write a qualitative overlay PNG.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Dump mined prompts as JSON records.
        #[arg(long = "dump-prompts")]
        dump_prompts: Option<PathBuf>,
        /// Dump per-entity masks as column-major RLE JSON.
        #[arg(long)]
        masks: Option<PathBuf>,
    },
    /// Evaluate a dataset and write a metric report.
    Bench {
        #[command(flatten)]
        common: CommonOpts,
        /// Dataset file (COCO-style, refs-style, or grounded-caption JSON)
        /// or `synthetic:N` for the built-in benchmark.
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        task: String,
        /// Report JSON output path.
        #[arg(long)]
        report: PathBuf,
        /// Write the per-image stability scatter data as CSV.
        #[arg(long = "per-image")]
        per_image: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Fit a low-rank text-encoder adapter on (image, text) samples.
    Adapt {
        #[command(flatten)]
        common: CommonOpts,
        /// JSON file of [image, text] pairs.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value_t = 16)]
        rank: usize,
        #[arg(long, default_value_t = 1100)]
        steps: usize,
        /// Adapter output path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Segment {
            common,
            image,
            text,
            no_pl,
            no_r1,
            no_r2,
            no_segmentor,
            steps,
            fast,
            lr,
            cache,
            overlay,
            dump_prompts,
            masks,
        } => {
            let mut cfg = common.load()?;
            cfg.flags.use_pl = !no_pl;
            cfg.flags.use_r1 = !no_r1;
            cfg.flags.use_r2 = !no_r2;
            cfg.flags.use_segmentor = !no_segmentor;
            if let Some(steps) = steps {
                cfg.optimizer.steps = steps;
            }
            if fast {
                cfg.optimizer.steps = cfg.optimizer.fast_steps;
            }
            if let Some(lr) = lr {
                cfg.optimizer.learning_rate = lr;
            }
            if let Some(dir) = cache {
                cfg.cache_dir = Some(dir);
            }

            let image_buf =
                ImageBuf::load(&image).map_err(|e| anyhow::anyhow!("loading image: {e}"))?;
            let parsed = parse_expression(&text, &ParserBackend::BuiltinRules)?;
            let denoiser = cfg.denoiser_for(&image_buf, &parsed)?;
            let shared = cfg.shared_backends()?;

            let (grounded, diagnostics) =
                run_pipeline(&image_buf, &text, &cfg, denoiser.as_ref(), &shared)?;

            for record in &grounded.records {
                println!(
                    "{:>3}  {:<28} area {:>6} px  positives {}  negatives {}",
                    record.entity_id,
                    record.label,
                    record.mask.true_count(),
                    record.prompt.positives.len(),
                    record.prompt.negatives.len(),
                );
            }
            for skip in &grounded.skipped {
                println!(
                    "skipped entity {} (token {}): {}",
                    skip.entity_id, skip.token, skip.reason
                );
            }
            log::info!(
                "cache key {} (hit: {}), stage timings: {:?}",
                diagnostics.cache_key,
                diagnostics.cache_hit,
                diagnostics.timings_ms
            );

            if let Some(path) = dump_prompts {
                let records: Vec<PromptDumpRecord> = grounded
                    .records
                    .iter()
                    .map(|r| PromptDumpRecord::from_prompt(&r.prompt, cfg.seed))
                    .collect();
                std::fs::write(&path, serde_json::to_vec_pretty(&records)?)?;
            }
            if let Some(path) = masks {
                let dump: Vec<serde_json::Value> = grounded
                    .records
                    .iter()
                    .map(|r| {
                        serde_json::json!({
                            "entity_id": r.entity_id,
                            "label": r.label,
                            "size": [r.mask.height(), r.mask.width()],
                            "counts": encode_rle(&r.mask),
                        })
                    })
                    .collect();
                std::fs::write(&path, serde_json::to_vec_pretty(&dump)?)?;
            }
            if let Some(path) = overlay {
                emit_overlay(&image_buf, &grounded).save_png(&path)?;
            }
            Ok(())
        }
        Command::Bench {
            common,
            dataset,
            task,
            report,
            per_image,
            workers,
        } => {
            let mut cfg = common.load()?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let task: BenchTask = task.parse().map_err(|e: String| anyhow::anyhow!(e))?;

            let inputs: Vec<BenchInput> = match dataset.strip_prefix("synthetic:") {
                Some(n) => {
                    let count: usize = n.parse().context("synthetic:N needs a count")?;
                    synthetic::benchmark_inputs(count, cfg.seed)
                }
                None => read_dataset(std::path::Path::new(&dataset))?
                    .into_iter()
                    .map(BenchInput::from)
                    .collect(),
            };

            let result = run_benchmark(&inputs, &cfg, task)?;
            std::fs::write(&report, result.to_json())?;
            print!("{}", result.to_table());
            if let Some(path) = per_image {
                std::fs::write(&path, result.stability_csv())?;
            }
            Ok(())
        }
        Command::Adapt {
            common,
            samples,
            rank,
            steps,
            out,
        } => {
            let cfg = common.load()?;
            let text = std::fs::read_to_string(&samples)
                .with_context(|| format!("reading samples {samples:?}"))?;
            let pairs: Vec<(String, String)> = serde_json::from_str(&text)
                .context("samples must be a JSON list of [image, text] pairs")?;
            if pairs.is_empty() {
                bail!("sample set is empty");
            }
            let EncoderSelection::Toy { width } = cfg.encoder;
            let encoder = ToyTextEncoder::open_vocabulary(width);
            let adapter = fast_adapt_text_encoder(&pairs, &encoder, rank, steps, cfg.seed)?;
            adapter.save(&out)?;
            println!(
                "adapter rank {} width {} written to {}",
                adapter.rank(),
                adapter.width(),
                out.display()
            );
            Ok(())
        }
    }
}
