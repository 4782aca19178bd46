//! `dba`: generate benchmark data, explain black-box predictions and run
//! evaluations with decision boundary approximation and LIME baselines.

mod commands;
mod config;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dba_core::experiments::{AIRIS_TRAIN, MOONS_N, MOONS_NOISE};
use dba_core::Method;

use crate::commands::Outputs;
use crate::config::{moons_spec, ClassifierSpec, CodecSpec, DatasetSpec, Overrides, RunConfig, OUTPUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "dba", version, about = "Local decision boundary approximation for black-box classifiers")]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a two-moons CSV and its JSON sidecar.
    GenMoons {
        #[arg(long, default_value_t = MOONS_N)]
        n: usize,
        #[arg(long, default_value_t = MOONS_NOISE)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV path; defaults to `moons.csv` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Write a tabular AIris CSV (features, label, attributes) and its sidecar.
    GenAirisTab {
        #[arg(long, default_value_t = AIRIS_TRAIN)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV path; defaults to `airis_tab.csv` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Explain selected test points; one JSON per point and method.
    Explain {
        #[command(flatten)]
        run: RunArgs,
        /// Also dump the DBA-Tab simulation sample as CSV.
        #[arg(long)]
        dump_sample: bool,
    },
    /// Compare methods over selected test points: report, table and curves.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Boundary distance and class balance for every radius of the grid.
    SweepR {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Label and probability stability of the codec round trip.
    Stability {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetKind {
    Airis,
    Moons,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierKind {
    Auto,
    GroundTruth,
    KernelSmoother,
    Knn,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodecKind {
    Identity,
    Affine,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    dataset: Option<DatasetKind>,
    /// Training CSV (implies `--dataset csv`).
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    test: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long)]
    attribute_prefix: Option<String>,
    #[arg(long, value_enum)]
    classifier: Option<ClassifierKind>,
    #[arg(long, default_value_t = config::default_bandwidth())]
    bandwidth: f64,
    #[arg(long, default_value_t = 15)]
    knn_k: usize,
    #[arg(long, value_enum)]
    codec: Option<CodecKind>,
    #[arg(long, default_value_t = 2)]
    latent_dim: usize,
    /// dba-tab, dba-att, lime-tab or lime-att; repeat or separate with commas.
    #[arg(long = "method", value_delimiter = ',', value_parser = parse_method)]
    methods: Vec<Method>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of test points to draw.
    #[arg(long)]
    points: Option<usize>,
    /// Explicit test row indices instead of a random draw.
    #[arg(long = "point", value_delimiter = ',')]
    point_indices: Vec<usize>,
    /// Nearest opposite-class neighbours examined during detection.
    #[arg(long)]
    k: Option<usize>,
    /// DBA simulation sample size.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    r_grid: Vec<f64>,
    #[arg(long)]
    lime_m: Option<usize>,
    #[arg(long)]
    lime_sigma: Option<f64>,
    #[arg(long)]
    annotator_lambda: Option<f64>,
    /// Explain in raw feature units.
    #[arg(long)]
    raw_features: bool,
    /// Skip points whose label changes under the codec round trip.
    #[arg(long)]
    label_stable_only: bool,
    #[arg(long)]
    curve_step: Option<f64>,
    /// Defaults to the config value, then $DBA_OUTPUT_DIR, then ./dba-output.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads for models that allow concurrent queries.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

impl RunArgs {
    fn overrides(&self) -> anyhow::Result<Overrides> {
        let dataset = match (self.dataset, &self.train) {
            (Some(DatasetKind::Airis), None) => Some(DatasetSpec::default()),
            (Some(DatasetKind::Moons), None) => Some(moons_spec()),
            (Some(DatasetKind::Csv) | None, Some(train)) => Some(DatasetSpec::Csv {
                train: train.clone(),
                test: self.test.clone().unwrap_or_else(|| train.clone()),
                label_column: self.label_column.clone(),
                attribute_prefix: self.attribute_prefix.clone(),
            }),
            (Some(DatasetKind::Csv), None) => anyhow::bail!("--dataset csv needs --train"),
            (Some(_), Some(_)) => anyhow::bail!("--train only applies to --dataset csv"),
            (None, None) => None,
        };
        let classifier = self.classifier.map(|c| match c {
            ClassifierKind::Auto => ClassifierSpec::Auto,
            ClassifierKind::GroundTruth => ClassifierSpec::GroundTruth,
            ClassifierKind::KernelSmoother => ClassifierSpec::KernelSmoother {
                bandwidth: self.bandwidth,
            },
            ClassifierKind::Knn => ClassifierSpec::Knn { k: self.knn_k },
        });
        let codec = self.codec.map(|c| match c {
            CodecKind::Identity => CodecSpec::Identity,
            CodecKind::Affine => CodecSpec::Affine {
                latent_dim: self.latent_dim,
            },
        });
        Ok(Overrides {
            dataset,
            classifier,
            codec,
            methods: nonempty(&self.methods),
            seed: self.seed,
            points: self.points,
            point_indices: nonempty(&self.point_indices),
            k: self.k,
            m: self.m,
            r_grid: nonempty(&self.r_grid),
            lime_m: self.lime_m,
            lime_sigma: self.lime_sigma,
            annotator_lambda: self.annotator_lambda,
            raw_features: self.raw_features,
            label_stable_only: self.label_stable_only,
            curve_step: self.curve_step,
            output_dir: self.output_dir.clone(),
            jobs: self.jobs,
        })
    }

    fn prepare(&self) -> anyhow::Result<(RunConfig, Outputs)> {
        let cfg = RunConfig::resolve(self.config.as_deref(), self.overrides()?)?;
        if let Some(j) = cfg.jobs {
            rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
        }
        let out = Outputs::new(cfg.output_dir(), self.force)?;
        Ok((cfg, out))
    }
}

fn nonempty<T: Clone>(v: &[T]) -> Option<Vec<T>> {
    (!v.is_empty()).then(|| v.to_vec())
}

fn default_out(name: &str) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("dba-output"))
        .join(name)
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::GenMoons {
            n,
            noise,
            seed,
            out,
            force,
        } => {
            let out = out.unwrap_or_else(|| default_out("moons.csv"));
            report(&commands::gen_moons_cmd(n, noise, seed, &out, force)?);
        }
        Command::GenAirisTab { n, seed, out, force } => {
            let out = out.unwrap_or_else(|| default_out("airis_tab.csv"));
            report(&commands::gen_airis_cmd(n, seed, &out, force)?);
        }
        Command::Explain { run, dump_sample } => {
            let (cfg, mut out) = run.prepare()?;
            let failures = commands::explain_cmd(&cfg, &mut out, dump_sample)?;
            report(&out.written);
            if failures > 0 {
                log::error!("{failures} explanation(s) failed");
                return Ok(false);
            }
        }
        Command::Evaluate { run } => {
            let (cfg, mut out) = run.prepare()?;
            let rep = commands::evaluate_cmd(&cfg, &mut out)?;
            report(&out.written);
            eprint!("{}", dba_core::evaluation::report_table_csv(&rep));
        }
        Command::SweepR { run } => {
            let (cfg, mut out) = run.prepare()?;
            commands::sweep_cmd(&cfg, &mut out)?;
            report(&out.written);
        }
        Command::Stability { run } => {
            let (cfg, mut out) = run.prepare()?;
            commands::stability_cmd(&cfg, &mut out)?;
            report(&out.written);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
