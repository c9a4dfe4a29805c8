//! The `memfuse` command line: `synth`, `extract-text`, `experiment` and
//! `variance` subcommands sharing one JSON run configuration.
//!
//! Precedence is flag > `MEMFUSE_*` environment variable > config file. Relative
//! paths in a config file are resolved against the file's directory. Every
//! random choice derives from the single seed, so repeated runs write identical
//! bytes. Exit codes: 0 success, 1 runtime failure, 2 invalid config or input.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::av::{AvDims, AvFeatureSet};
use crate::error::{Error, Result};
use crate::eval::{
    render_table, run_experiment, Condition, ExperimentConfig, FixedParams, Grid, SampleSet,
};
use crate::fusion::Strategy;
use crate::model::{memory_subset, Dataset, Dim};
use crate::synth::{self, SynthSpec};
use crate::text::{self, TextResources};
use crate::variance::{self, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FusionChoice {
    Early,
    Late,
    #[default]
    Both,
}

impl FusionChoice {
    pub fn strategies(self) -> Vec<Strategy> {
        match self {
            FusionChoice::Early => vec![Strategy::Early],
            FusionChoice::Late => vec![Strategy::Late],
            FusionChoice::Both => vec![Strategy::Early, Strategy::Late],
        }
    }
}

/// Shared run configuration. Only the fields a subcommand needs are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub av_manifest: Option<PathBuf>,
    pub av_dims: AvDims,
    /// Text resource manifest; the bundled suite when absent.
    pub resources: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub conditions: Vec<Condition>,
    pub fusion: FusionChoice,
    pub dims: Vec<Dim>,
    pub k_outer: usize,
    pub k_inner: usize,
    pub grid: Grid,
    pub fixed: FixedParams,
    pub variance_method: Method,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            av_manifest: None,
            av_dims: AvDims::default(),
            resources: None,
            seed: None,
            out: None,
            workers: None,
            conditions: vec![Condition::M, Condition::AV, Condition::AVM, Condition::AVDagger],
            fusion: FusionChoice::Both,
            dims: Dim::ALL.to_vec(),
            k_outer: 5,
            k_inner: 4,
            grid: Grid::default(),
            fixed: FixedParams::default(),
            variance_method: Method::Reml,
            synth: SynthSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.dataset,
            &mut cfg.av_manifest,
            &mut cfg.resources,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "memfuse", version, about = "Memory-context fusion for video-induced emotion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, env = "MEMFUSE_CONFIG", global = true)]
    config: Option<PathBuf>,
    #[arg(long, env = "MEMFUSE_SEED", global = true)]
    seed: Option<u64>,
    /// Worker threads for fold and grid parallelism (default: all cores).
    #[arg(long, env = "MEMFUSE_WORKERS", global = true)]
    workers: Option<usize>,
    #[arg(long, env = "MEMFUSE_OUT", global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with planted effects.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Write lexical and embedding features of every memory.
    ExtractText {
        #[command(flatten)]
        common: Common,
    },
    /// Nested leave-persons-out evaluation.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of M, AV, AVM, AV†.
        #[arg(long, env = "MEMFUSE_CONDITION", value_delimiter = ',')]
        condition: Option<Vec<String>>,
        #[arg(long, env = "MEMFUSE_FUSION")]
        fusion: Option<FusionChoice>,
    },
    /// Marginal-R² decomposition with nested mixed models.
    Variance {
        #[command(flatten)]
        common: Common,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input data (exit 2).
    Input(Error),
    /// Failure while computing or writing results (exit 1).
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "invalid input: {e}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input<T>(r: Result<T>) -> CliResult<T> {
    r.map_err(CliError::Input)
}

fn runtime<T>(r: Result<T>) -> CliResult<T> {
    r.map_err(CliError::Runtime)
}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(Error::Config(msg.into()))
}

/// Parses `args` (including the program name), runs the subcommand and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(written) => {
            for p in written {
                log::info!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("memfuse: {e}");
            e.exit_code()
        }
    }
}

fn resolve(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => input(RunConfig::load(p))?,
        None => RunConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(input_err("workers must be at least 1"));
        }
        // the global pool can be configured once per process
        if rayon::ThreadPoolBuilder::new().num_threads(w).build_global().is_err() {
            log::debug!("thread pool already initialized");
        }
    }
    Ok(cfg)
}

fn require_seed(cfg: &RunConfig) -> CliResult<u64> {
    cfg.seed
        .ok_or_else(|| input_err("a seed is required (--seed, MEMFUSE_SEED or \"seed\" in the config)"))
}

fn require_path<'a>(p: &'a Option<PathBuf>, what: &str) -> CliResult<&'a Path> {
    let p = p
        .as_deref()
        .ok_or_else(|| input_err(format!("no {what} path configured")))?;
    if !p.exists() {
        return Err(input_err(format!("{what} {} does not exist", p.display())));
    }
    Ok(p)
}

fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    let out = cfg
        .out
        .as_deref()
        .ok_or_else(|| input_err("no output directory (--out, MEMFUSE_OUT or \"out\")"))?;
    runtime(std::fs::create_dir_all(out).map_err(|e| Error::io(out, e)))?;
    Ok(out)
}

fn write(path: PathBuf, contents: &str) -> CliResult<PathBuf> {
    runtime(std::fs::write(&path, contents).map_err(|e| Error::io(&path, e)))?;
    Ok(path)
}

fn load_resources(cfg: &RunConfig) -> CliResult<TextResources> {
    match &cfg.resources {
        Some(_) => input(TextResources::load(require_path(&cfg.resources, "text resource manifest")?)),
        None => Ok(TextResources::bundled().clone()),
    }
}

fn execute(cli: Cli) -> CliResult<Vec<PathBuf>> {
    match cli.command {
        Command::Synth { common } => cmd_synth(&resolve(&common)?),
        Command::ExtractText { common } => cmd_extract_text(&resolve(&common)?),
        Command::Experiment {
            common,
            condition,
            fusion,
        } => {
            let mut cfg = resolve(&common)?;
            if let Some(list) = condition {
                cfg.conditions = list
                    .iter()
                    .map(|s| {
                        Condition::parse(s)
                            .ok_or_else(|| input_err(format!("unknown condition {s:?}")))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
            }
            if let Some(f) = fusion {
                cfg.fusion = f;
            }
            cmd_experiment(&cfg)
        }
        Command::Variance { common } => cmd_variance(&resolve(&common)?),
    }
}

/// Writes the synthetic dataset, audiovisual features, ground truth and a run
/// configuration pointing at them.
pub fn cmd_synth(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let seed = require_seed(cfg)?;
    let spec = SynthSpec {
        seed,
        ..cfg.synth.clone()
    };
    input(spec.validate())?;
    let out = out_dir(cfg)?;
    let generated = runtime(synth::generate(&spec))?;
    log::info!(
        "{} responses, {} with memories, clipping rate {:.4}",
        generated.truth.n_responses,
        generated.truth.n_with_memory,
        generated.truth.clipping_rate
    );
    let paths = runtime(synth::write_outputs(&generated, out))?;
    let run_cfg = RunConfig {
        dataset: Some("dataset.json".into()),
        av_manifest: Some(PathBuf::from("av").join("manifest.json")),
        av_dims: spec.av_dims(),
        seed: Some(seed),
        synth: spec,
        ..RunConfig::default()
    };
    let cfg_path = write(
        out.join("config.json"),
        &(runtime(serde_json::to_string_pretty(&run_cfg).map_err(Error::from))? + "\n"),
    )?;
    Ok(vec![paths.dataset, paths.av_manifest, paths.ground_truth, cfg_path])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextFeatureManifest {
    pub n_rows: usize,
    pub lexical: PathBuf,
    pub embedding: PathBuf,
    pub lexical_dim: usize,
    pub embedding_dim: usize,
}

fn feature_csv(names: &[String], rows: &[(String, String, &[f64])]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["participant_id".to_string(), "video_id".to_string()];
    header.extend(names.iter().cloned());
    let csv_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (p, v, values) in rows {
        let mut rec = vec![p.clone(), v.clone()];
        rec.extend(values.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

/// Per-response lexical and embedding features of the selected memory.
pub fn cmd_extract_text(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let ds = input(Dataset::load(require_path(&cfg.dataset, "dataset")?))?;
    let res = load_resources(cfg)?;
    let out = out_dir(cfg)?;
    let subset = memory_subset(&ds);
    use rayon::prelude::*;
    let feats = runtime(
        subset
            .responses()
            .par_iter()
            .map(|r| text::extract(&r.memories[0].text, &res))
            .collect::<Result<Vec<_>>>(),
    )?;
    let ids: Vec<(String, String)> = subset
        .responses()
        .iter()
        .map(|r| (r.participant_id.to_string(), r.video_id.to_string()))
        .collect();
    let lex_rows: Vec<_> = ids
        .iter()
        .zip(&feats)
        .map(|((p, v), f)| (p.clone(), v.clone(), f.lexical.as_slice()))
        .collect();
    let emb_rows: Vec<_> = ids
        .iter()
        .zip(&feats)
        .map(|((p, v), f)| (p.clone(), v.clone(), f.embedding.as_slice()))
        .collect();
    let emb_names: Vec<String> = (0..res.embedding_dim()).map(|j| format!("emb{j}")).collect();
    let lex = write(
        out.join("lexical.csv"),
        &runtime(feature_csv(&res.lexical_names(), &lex_rows))?,
    )?;
    let emb = write(out.join("embedding.csv"), &runtime(feature_csv(&emb_names, &emb_rows))?)?;
    let manifest = TextFeatureManifest {
        n_rows: feats.len(),
        lexical: "lexical.csv".into(),
        embedding: "embedding.csv".into(),
        lexical_dim: res.lexical_dim(),
        embedding_dim: res.embedding_dim(),
    };
    let m = write(
        out.join("text_manifest.json"),
        &(runtime(serde_json::to_string_pretty(&manifest).map_err(Error::from))? + "\n"),
    )?;
    Ok(vec![lex, emb, m])
}

/// Runs the requested conditions. Memory-based conditions (M, AVM) restrict
/// every condition to responses with memories so all cells share one sample.
pub fn cmd_experiment(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let seed = require_seed(cfg)?;
    if cfg.conditions.is_empty() {
        return Err(input_err("no conditions requested"));
    }
    let ds = input(Dataset::load(require_path(&cfg.dataset, "dataset")?))?;
    let needs_text = cfg
        .conditions
        .iter()
        .any(|c| matches!(c, Condition::M | Condition::AVM));
    let needs_av = cfg
        .conditions
        .iter()
        .any(|c| matches!(c, Condition::AV | Condition::AVM));
    let ds = if needs_text { memory_subset(&ds) } else { ds };
    let res = if needs_text {
        Some(load_resources(cfg)?)
    } else {
        None
    };
    let av = if needs_av {
        let path = require_path(&cfg.av_manifest, "audiovisual feature manifest")?;
        Some(input(AvFeatureSet::load(path, cfg.av_dims))?)
    } else {
        None
    };
    let out = out_dir(cfg)?;
    let samples = input(SampleSet::build(&ds, res.as_ref(), av.as_ref()))?;
    let mut conditions = cfg.conditions.clone();
    conditions.sort();
    conditions.dedup();
    let exp = ExperimentConfig {
        k_outer: cfg.k_outer,
        k_inner: cfg.k_inner,
        grid: cfg.grid.clone(),
        fixed: cfg.fixed,
        conditions,
        strategies: cfg.fusion.strategies(),
        dims: cfg.dims.clone(),
        seed,
    };
    let report = run_experiment(&samples, &exp).map_err(|e| match e {
        Error::Config(_) => CliError::Input(e),
        e => CliError::Runtime(e),
    })?;
    let json = write(out.join("report.json"), &runtime(report.to_json())?)?;
    let table = write(out.join("report.txt"), &render_table(&report))?;
    Ok(vec![json, table])
}

/// Nested mixed-model variance decomposition on responses with memories.
pub fn cmd_variance(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let ds = input(Dataset::load(require_path(&cfg.dataset, "dataset")?))?;
    let out = out_dir(cfg)?;
    let subset = memory_subset(&ds);
    let report = runtime(variance::analyze(&subset, cfg.variance_method))?;
    let json = write(out.join("variance.json"), &runtime(report.to_json())?)?;
    let table = write(
        out.join("variance.txt"),
        &variance::render_variance_table(&report),
    )?;
    Ok(vec![json, table])
}
