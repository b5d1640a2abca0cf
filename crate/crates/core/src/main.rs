use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use newslide::config::{CohortMode, RunConfig};
use newslide::pipeline::{self, PipelineError};

#[derive(Parser)]
#[command(name = "newslide", version, about = "Foreign landslide coverage pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct ClientOpts {
    /// Chat-completion endpoint base URL.
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent with each request.
    #[arg(long)]
    model: Option<String>,
    /// Maximum concurrent requests.
    #[arg(long)]
    max_inflight: Option<usize>,
    /// Retries per document.
    #[arg(long)]
    retries: Option<u32>,
    /// Response cache directory.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw documents and apply the keyword filter.
    Ingest {
        #[command(flatten)]
        common: CommonOpts,
        /// Input documents file (JSONL); overrides the config.
        #[arg(long)]
        documents: Option<PathBuf>,
    },
    /// Assign countries to documents and explode instances.
    Geolocate {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        client: ClientOpts,
    },
    /// Segment per-country daily counts into news events.
    Segment {
        #[command(flatten)]
        common: CommonOpts,
        /// Maximum run of inactive days bridged inside one event.
        #[arg(long)]
        max_gap: Option<usize>,
    },
    /// Compute salience scores and divergence categories.
    Score {
        #[command(flatten)]
        common: CommonOpts,
        /// Cohort selection: all, nonzero-any or nonzero-both.
        #[arg(long)]
        cohort: Option<String>,
        /// Similar-band half-width as a fraction of the largest divergence.
        #[arg(long)]
        band_fraction: Option<f64>,
    },
    /// Compare predictions against the annotation file.
    Evaluate {
        #[command(flatten)]
        common: CommonOpts,
        /// Annotations file; overrides the config.
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Write distribution tables, rankings and the run manifest.
    Report {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run every stage in order.
    All {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        client: ClientOpts,
    },
}

fn load_config(common: &CommonOpts) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path).map_err(|e| input_error(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(out_dir) = &common.out_dir {
        cfg.paths.out_dir = Some(out_dir.clone());
    }
    Ok(cfg)
}

fn input_error(detail: String) -> PipelineError {
    // reuse pipeline display semantics for config problems
    PipelineError {
        kind: newslide::pipeline::ErrorKind::Input,
        code: "BadConfig",
        detail,
    }
}

fn apply_client_opts(cfg: &mut RunConfig, opts: &ClientOpts) {
    if let Some(endpoint) = &opts.endpoint {
        cfg.client.endpoint = Some(endpoint.clone());
    }
    if let Some(model) = &opts.model {
        cfg.client.model = model.clone();
    }
    if let Some(max_inflight) = opts.max_inflight {
        cfg.client.max_inflight = max_inflight;
    }
    if let Some(retries) = opts.retries {
        cfg.client.max_retries = retries;
    }
    if let Some(cache_dir) = &opts.cache_dir {
        cfg.client.cache_dir = Some(cache_dir.clone());
    }
}

fn parse_cohort(text: &str) -> Result<CohortMode, PipelineError> {
    match text {
        "all" => Ok(CohortMode::All),
        "nonzero-any" => Ok(CohortMode::NonzeroAny),
        "nonzero-both" => Ok(CohortMode::NonzeroBoth),
        other => Err(input_error(format!("unknown cohort mode: {other}"))),
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest { common, documents } => {
            let mut cfg = load_config(&common)?;
            if let Some(documents) = documents {
                cfg.paths.documents = Some(documents);
            }
            pipeline::run_ingest(&cfg)
        }
        Command::Geolocate { common, client } => {
            let mut cfg = load_config(&common)?;
            apply_client_opts(&mut cfg, &client);
            pipeline::run_geolocate(&cfg)
        }
        Command::Segment { common, max_gap } => {
            let mut cfg = load_config(&common)?;
            if let Some(max_gap) = max_gap {
                cfg.max_gap = max_gap;
            }
            pipeline::run_segment(&cfg)
        }
        Command::Score {
            common,
            cohort,
            band_fraction,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(cohort) = cohort {
                cfg.cohort_mode = parse_cohort(&cohort)?;
            }
            if let Some(band_fraction) = band_fraction {
                cfg.band_fraction = band_fraction;
            }
            cfg.validate().map_err(|e| input_error(e.to_string()))?;
            pipeline::run_score(&cfg)
        }
        Command::Evaluate {
            common,
            annotations,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(annotations) = annotations {
                cfg.paths.annotations = Some(annotations);
            }
            pipeline::run_evaluate(&cfg)
        }
        Command::Report { common } => {
            let cfg = load_config(&common)?;
            pipeline::run_report(&cfg)
        }
        Command::All { common, client } => {
            let mut cfg = load_config(&common)?;
            apply_client_opts(&mut cfg, &client);
            pipeline::run_all(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
