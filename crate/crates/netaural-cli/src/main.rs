//! `netaural`: generate graphs, render them as sound, compute centrality
//! ground truth, and train/evaluate the waveform regressor.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use netaural::audio;
use netaural::auralize;
use netaural::centrality::Measure;
use netaural::graph::{self, GraphModel, LoadedGraph};
use netaural::model::ModelCheckpoint;
use netaural::training::{
    self, build_testset, evaluate, full_reproduction, GeneratorFamily, Predictor, ReproduceConfig,
    TestGraph, TestsetConfig, Tier, TrainConfig,
};

use manifest::RunManifest;

const SEED_ENV: &str = "NETAURAL_SEED";

#[derive(Parser)]
#[command(
    name = "netaural",
    version,
    about = "Turn graph nodes into audible waveforms and learn centrality from the sound"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random graph and write it as an edge list
    Gen(GenArgs),
    /// Record node waveforms for a graph (plus optional WAVs and a CSV trace)
    Auralize(AuralizeArgs),
    /// Compute a ground-truth centrality measure as CSV
    Centrality(CentralityArgs),
    /// Train the waveform-to-centrality regressor
    Train(TrainArgs),
    /// Evaluate a trained checkpoint on a test tier
    Eval(EvalArgs),
    /// Full protocol: train every measure, evaluate all tiers (long-running)
    Reproduce(ReproduceArgs),
}

enum AppError {
    Usage(String),
    Runtime(String),
}

impl From<netaural::Error> for AppError {
    fn from(e: netaural::Error) -> AppError {
        match e {
            netaural::Error::InvalidParameter(_)
            | netaural::Error::UnknownDataset { .. }
            | netaural::Error::EdgeList { .. } => AppError::Usage(e.to_string()),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> AppError {
        AppError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> AppError {
        AppError::Runtime(e.to_string())
    }
}

type AppResult<T> = Result<T, AppError>;

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Auralize(args) => cmd_auralize(args),
        Command::Centrality(args) => cmd_centrality(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Reproduce(args) => cmd_reproduce(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var(SEED_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0)
}

/// Accepts a filesystem path or, when no such file exists, the name of a
/// bundled dataset.
fn load_graph(value: &str) -> AppResult<(LoadedGraph, Option<PathBuf>)> {
    let path = Path::new(value);
    if path.exists() {
        let text = fs::read_to_string(path)?;
        let lg = graph::parse_edge_list(&text)?;
        return Ok((lg, Some(path.to_path_buf())));
    }
    if graph::BUNDLED_NAMES.contains(&value) {
        return Ok((graph::bundled_graph(value)?, None));
    }
    Err(usage(format!(
        "{value:?} is neither a readable file nor a bundled graph ({})",
        graph::BUNDLED_NAMES.join(", ")
    )))
}

fn parse_measure(value: &str) -> AppResult<Measure> {
    value.parse::<Measure>().map_err(|e| usage(e.to_string()))
}

// ---------------------------------------------------------------- gen --

#[derive(Args)]
struct GenArgs {
    /// er | ba | ws | caveman | grid
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: Option<usize>,
    /// edge probability (er) or rewire probability (ws)
    #[arg(long)]
    p: Option<f64>,
    /// edges per new node (ba) or ring neighbors (ws)
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    cliques: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// output edge-list path
    #[arg(long)]
    out: PathBuf,
}

fn require<T>(value: Option<T>, name: &str, model: &str) -> AppResult<T> {
    value.ok_or_else(|| usage(format!("--{name} is required for --model {model}")))
}

fn cmd_gen(args: GenArgs) -> AppResult<()> {
    let model = match args.model.as_str() {
        "er" => GraphModel::Er {
            n: require(args.n, "n", "er")?,
            p: require(args.p, "p", "er")?,
        },
        "ba" => GraphModel::Ba {
            n: require(args.n, "n", "ba")?,
            k: require(args.k, "k", "ba")?,
        },
        "ws" => GraphModel::Ws {
            n: require(args.n, "n", "ws")?,
            k: require(args.k, "k", "ws")?,
            p: require(args.p, "p", "ws")?,
        },
        "caveman" => GraphModel::Caveman {
            cliques: require(args.cliques, "cliques", "caveman")?,
            size: require(args.size, "size", "caveman")?,
        },
        "grid" => GraphModel::Grid {
            rows: require(args.rows, "rows", "grid")?,
            cols: require(args.cols, "cols", "grid")?,
        },
        other => return Err(usage(format!("unknown model {other:?}; valid: er, ba, ws, caveman, grid"))),
    };
    let seed = resolve_seed(args.seed);
    let g = model.generate(seed)?;
    let mut m = RunManifest::new("gen", Some(seed), serde_json::to_value(&model)?);
    m.write_output(&args.out, g.to_edge_list_string().as_bytes())?;
    m.save(&manifest_sibling(&args.out))?;
    println!(
        "wrote {} ({} nodes, {} edges)",
        args.out.display(),
        g.node_count(),
        g.edge_count()
    );
    Ok(())
}

fn manifest_sibling(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

// ----------------------------------------------------------- auralize --

#[derive(Args)]
struct AuralizeArgs {
    /// edge-list path or bundled graph name
    #[arg(long)]
    graph: String,
    /// momentum in [0,1]
    #[arg(long, default_value_t = auralize::DEFAULT_MOMENTUM)]
    m: f64,
    /// number of recorded samples per node
    #[arg(long, default_value_t = auralize::DEFAULT_SAMPLES)]
    l: usize,
    /// output waveform file
    #[arg(long)]
    out: PathBuf,
    /// also write a CSV of the raw (pre-DC-removal) potentials
    #[arg(long)]
    trace: Option<PathBuf>,
    /// write one WAV per node plus an all-nodes WAV into this directory
    #[arg(long)]
    wav_dir: Option<PathBuf>,
    #[arg(long, default_value_t = audio::DEFAULT_SAMPLE_RATE)]
    rate: u32,
    /// silence between nodes in the all-nodes WAV, seconds
    #[arg(long, default_value_t = 0.5)]
    gap: f64,
    /// write every node's spectrum (DFT magnitudes) as CSV
    #[arg(long)]
    spectra: Option<PathBuf>,
    /// write one node's spectrogram as CSV
    #[arg(long)]
    spectrogram: Option<PathBuf>,
    /// node whose spectrogram to export
    #[arg(long, default_value_t = 0)]
    spectrogram_node: usize,
}

fn spectra_csv(waves: &netaural::auralize::WaveformMatrix) -> String {
    let spectra: Vec<Vec<f64>> = (0..waves.nodes())
        .map(|v| audio::spectrum(&waves.column(v)))
        .collect();
    let mut out = String::from("bin");
    for v in 0..waves.nodes() {
        out.push_str(&format!(",node_{v}"));
    }
    out.push('\n');
    for bin in 0..spectra[0].len() {
        out.push_str(&bin.to_string());
        for s in &spectra {
            out.push_str(&format!(",{}", s[bin]));
        }
        out.push('\n');
    }
    out
}

fn spectrogram_csv(frames: &[Vec<f64>]) -> String {
    let mut out = String::from("frame");
    for bin in 0..frames[0].len() {
        out.push_str(&format!(",bin_{bin}"));
    }
    out.push('\n');
    for (i, frame) in frames.iter().enumerate() {
        out.push_str(&i.to_string());
        for m in frame {
            out.push_str(&format!(",{m}"));
        }
        out.push('\n');
    }
    out
}

fn cmd_auralize(args: AuralizeArgs) -> AppResult<()> {
    let (lg, input) = load_graph(&args.graph)?;
    let stem = Path::new(&args.graph)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "graph".into());

    let waves = auralize::auralize(&lg.graph, args.m, args.l)?;
    let mut m = RunManifest::new(
        "auralize",
        None,
        json!({
            "graph": args.graph,
            "m": args.m,
            "l": args.l,
            "rate": args.rate,
            "gap": args.gap,
            "labels": lg.labels,
        }),
    );
    if let Some(p) = input {
        m.record_input(&p);
    }
    m.write_output(&args.out, &waves.to_bytes())?;

    if let Some(trace) = &args.trace {
        let raw = auralize::auralize_raw(&lg.graph, args.m, args.l)?;
        m.write_output(trace, raw.to_csv().as_bytes())?;
    }
    if let Some(dir) = &args.wav_dir {
        fs::create_dir_all(dir)?;
        for v in 0..waves.nodes() {
            let clip = audio::waveform_to_clip(&waves.column(v), args.rate, audio::DEFAULT_PEAK)?;
            m.write_output(&dir.join(format!("{stem}_{v}.wav")), &audio::write_wav(&clip))?;
        }
        let all = audio::concat_all_nodes(&waves, args.rate, args.gap)?;
        m.write_output(&dir.join(format!("{stem}_all.wav")), &audio::write_wav(&all))?;
    }
    if let Some(path) = &args.spectra {
        m.write_output(path, spectra_csv(&waves).as_bytes())?;
    }
    if let Some(path) = &args.spectrogram {
        if args.spectrogram_node >= waves.nodes() {
            return Err(usage(format!(
                "--spectrogram-node {} out of range (n={})",
                args.spectrogram_node,
                waves.nodes()
            )));
        }
        let frames = audio::spectrogram(
            &waves.column(args.spectrogram_node),
            audio::DEFAULT_STFT_WINDOW,
            audio::DEFAULT_STFT_HOP,
        )?;
        m.write_output(path, spectrogram_csv(&frames).as_bytes())?;
    }
    m.save(&manifest_sibling(&args.out))?;
    println!(
        "auralized {} nodes for {} steps (m={})",
        waves.nodes(),
        waves.steps(),
        args.m
    );
    Ok(())
}

// --------------------------------------------------------- centrality --

#[derive(Args)]
struct CentralityArgs {
    /// edge-list path or bundled graph name
    #[arg(long)]
    graph: String,
    /// degree | closeness | betweenness | eigenvector
    #[arg(long)]
    measure: String,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_centrality(args: CentralityArgs) -> AppResult<()> {
    let measure = parse_measure(&args.measure)?;
    let (lg, input) = load_graph(&args.graph)?;
    let c = measure.compute(&lg.graph)?;
    let mut csv = String::from("node,label,measure,value\n");
    for (v, value) in c.values.iter().enumerate() {
        csv.push_str(&format!("{v},{},{measure},{value}\n", lg.labels[v]));
    }
    let mut m = RunManifest::new(
        "centrality",
        None,
        json!({ "graph": args.graph, "measure": measure.name(), "labels": lg.labels }),
    );
    if let Some(p) = input {
        m.record_input(&p);
    }
    m.write_output(&args.out, csv.as_bytes())?;
    m.save(&manifest_sibling(&args.out))?;
    println!("wrote {} ({} nodes)", args.out.display(), c.values.len());
    Ok(())
}

// -------------------------------------------------------------- train --

#[derive(Args)]
struct TrainArgs {
    /// target centrality: degree | closeness | betweenness | eigenvector
    #[arg(long)]
    measure: String,
    /// JSON file with a full training configuration (flags override it)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// nominal node count of training graphs
    #[arg(long)]
    n: Option<usize>,
    /// waveform length (model input length follows)
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    inner_batches: Option<usize>,
    #[arg(long)]
    base_graphs: Option<usize>,
    #[arg(long)]
    growth_divisor: Option<usize>,
    /// comma-separated generator families (er,ba,ws,caveman,grid)
    #[arg(long, value_delimiter = ',')]
    generators: Option<Vec<String>>,
    /// model preset: full | small | tiny
    #[arg(long)]
    model_size: Option<String>,
    /// shorthand for --model-size small
    #[arg(long)]
    small_model: bool,
    /// ER edge-probability range for training graphs, e.g. 0.05,0.15
    #[arg(long, value_delimiter = ',', num_args = 2)]
    er_p: Option<Vec<f64>>,
    /// drop the extra 1/10 factor on the batch gradient
    #[arg(long)]
    no_loss_scale: bool,
    /// continue from out-dir/checkpoint.m5cp
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

fn build_train_config(args: &TrainArgs) -> AppResult<TrainConfig> {
    let measure = parse_measure(&args.measure)?;
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<TrainConfig>(&fs::read_to_string(path)?)
            .map_err(|e| usage(format!("bad --config file: {e}")))?,
        None => TrainConfig::new(measure),
    };
    cfg.measure = measure;
    cfg.seed = resolve_seed(args.seed);
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(n) = args.n {
        cfg.train_n = n;
    }
    if let Some(l) = args.l {
        cfg.samples = l;
        cfg.model.input_length = l;
    }
    if let Some(m) = args.momentum {
        cfg.momentum = m;
    }
    if let Some(lr) = args.lr {
        cfg.optimizer.learning_rate = lr;
    }
    if let Some(b) = args.inner_batches {
        cfg.inner_batches = b;
    }
    if let Some(b) = args.base_graphs {
        cfg.base_graphs = b;
    }
    if let Some(d) = args.growth_divisor {
        cfg.growth_divisor = d;
    }
    if let Some(gens) = &args.generators {
        let mut families = Vec::new();
        for g in gens {
            families.push(g.parse::<GeneratorFamily>().map_err(|e| usage(e.to_string()))?);
        }
        cfg.generators = families;
    }
    let size = if args.small_model {
        Some("small".to_string())
    } else {
        args.model_size.clone()
    };
    if let Some(size) = size {
        cfg.model = match size.as_str() {
            "full" => netaural::model::M5Config::full(cfg.samples),
            "small" => netaural::model::M5Config::small(cfg.samples),
            "tiny" => netaural::model::M5Config::tiny(cfg.samples),
            other => return Err(usage(format!("unknown model size {other:?}; valid: full, small, tiny"))),
        };
    }
    if let Some(range) = &args.er_p {
        cfg.sampling.er_p = (range[0], range[1]);
    }
    if args.no_loss_scale {
        cfg.loss_scale = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(args: TrainArgs) -> AppResult<()> {
    let cfg = build_train_config(&args)?;
    fs::create_dir_all(&args.out_dir)?;
    let ckpt_path = args.out_dir.join("checkpoint.m5cp");
    let start = if args.resume && ckpt_path.exists() {
        Some(ModelCheckpoint::from_bytes(&fs::read(&ckpt_path)?)?)
    } else {
        None
    };

    let resumed = start.is_some();
    let result = training::train_with(&cfg, start, |_, summary| {
        println!(
            "epoch {:>4}/{} graphs={:<3} mean_loss={:.4}",
            summary.epoch, cfg.epochs, summary.graphs, summary.mean_loss
        );
    })?;

    let mut m = RunManifest::new("train", Some(cfg.seed), serde_json::to_value(&cfg)?);
    m.write_output(&ckpt_path, &result.checkpoint.to_bytes())?;
    let history_path = args.out_dir.join("history.csv");
    let mut history_csv = training::history_to_csv(&result.history);
    if resumed && history_path.exists() {
        // keep the earlier segments' rows, drop the fresh header
        let mut prior = fs::read_to_string(&history_path)?;
        prior.push_str(history_csv.split_once('\n').map(|x| x.1).unwrap_or(""));
        history_csv = prior;
    }
    m.write_output(&history_path, history_csv.as_bytes())?;
    m.save(&args.out_dir.join("manifest.json"))?;
    if result.skipped_degenerate > 0 {
        println!("regenerated {} degenerate graphs", result.skipped_degenerate);
    }
    println!("checkpoint: {}", ckpt_path.display());
    Ok(())
}

// --------------------------------------------------------------- eval --

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// small | large | real
    #[arg(long)]
    tier: String,
    /// defaults to the measure recorded in the checkpoint
    #[arg(long)]
    measure: Option<String>,
    /// edge list of an extra real network for the real tier
    #[arg(long)]
    internet: Option<PathBuf>,
    #[arg(long)]
    per_generator: Option<usize>,
    #[arg(long)]
    n_small: Option<usize>,
    #[arg(long)]
    n_large: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// debug: use the ground-truth oracle as the predictor
    #[arg(long)]
    oracle_predictor: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

fn cmd_eval(args: EvalArgs) -> AppResult<()> {
    let tier = args.tier.parse::<Tier>().map_err(|e| usage(e.to_string()))?;
    let ckpt = ModelCheckpoint::from_bytes(&fs::read(&args.checkpoint)?)?;
    let measure = match &args.measure {
        Some(m) => parse_measure(m)?,
        None => ckpt
            .meta
            .measure
            .as_deref()
            .ok_or_else(|| usage("checkpoint records no measure; pass --measure"))?
            .parse::<Measure>()
            .map_err(|e| usage(e.to_string()))?,
    };
    let seed = resolve_seed(args.seed);
    let mut testset_cfg = TestsetConfig::default();
    if let Some(p) = args.per_generator {
        testset_cfg.per_generator = p;
    }
    if let Some(n) = args.n_small {
        testset_cfg.n_small = n;
    }
    if let Some(n) = args.n_large {
        testset_cfg.n_large = n;
    }
    let extra = match (&args.internet, tier) {
        (Some(path), Tier::Real) => {
            let lg = graph::parse_edge_list(&fs::read_to_string(path)?)?;
            Some(TestGraph { provenance: "internet".into(), graph: lg.graph })
        }
        (Some(_), _) => {
            eprintln!("note: --internet only applies to --tier real");
            None
        }
        (None, Tier::Real) => {
            eprintln!("warning: no Internet edge list supplied; evaluating 4 bundled graphs");
            None
        }
        (None, _) => None,
    };

    let testset = build_testset(tier, seed, &testset_cfg, extra)?;
    let predictor = if args.oracle_predictor {
        Predictor::GroundTruth
    } else {
        Predictor::Model
    };
    let report = evaluate(&ckpt, &testset, measure, tier.name(), predictor)?;

    fs::create_dir_all(&args.out_dir)?;
    let mut m = RunManifest::new(
        "eval",
        Some(seed),
        json!({
            "checkpoint": args.checkpoint,
            "tier": tier.name(),
            "measure": measure.name(),
            "testset": testset_cfg,
            "oracle_predictor": args.oracle_predictor,
        }),
    );
    m.record_input(&args.checkpoint);
    let mut report_json = serde_json::to_vec_pretty(&report)?;
    report_json.push(b'\n');
    m.write_output(&args.out_dir.join("report.json"), &report_json)?;
    m.write_output(&args.out_dir.join("report.csv"), report.to_csv().as_bytes())?;
    let networks: Vec<String> = report.records.iter().map(|r| r.provenance.clone()).collect();
    let cells: Vec<Vec<Option<f64>>> = report.records.iter().map(|r| vec![r.rho]).collect();
    m.write_output(
        &args.out_dir.join("matrix.csv"),
        training::correlation_matrix_csv(&networks, &[measure], &cells).as_bytes(),
    )?;
    m.save(&args.out_dir.join("manifest.json"))?;

    for r in &report.records {
        match r.rho {
            Some(rho) => println!("{:<24} n={:<6} rho={:+.4}", r.provenance, r.nodes, rho),
            None => println!("{:<24} n={:<6} degenerate", r.provenance, r.nodes),
        }
    }
    match report.mean_rho {
        Some(mean) => println!("mean rho: {mean:+.4} over {} graphs", report.records.len() - report.degenerate),
        None => println!("no non-degenerate records"),
    }
    Ok(())
}

// ---------------------------------------------------------- reproduce --

#[derive(Args)]
struct ReproduceArgs {
    /// acknowledge that this runs for many hours at default settings
    #[arg(long)]
    confirm: bool,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    /// comma-separated subset of degree,closeness,betweenness,eigenvector
    #[arg(long, value_delimiter = ',')]
    measures: Option<Vec<String>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    model_size: Option<String>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eval_seed: Option<u64>,
    #[arg(long)]
    internet: Option<PathBuf>,
    #[arg(long)]
    per_generator: Option<usize>,
    #[arg(long)]
    n_small: Option<usize>,
    #[arg(long)]
    n_large: Option<usize>,
}

fn cmd_reproduce(args: ReproduceArgs) -> AppResult<()> {
    if !args.confirm {
        return Err(usage(
            "reproduce trains every measure at full scale and runs for hours; pass --confirm to proceed",
        ));
    }
    let mut template = TrainConfig::new(Measure::Degree);
    template.seed = resolve_seed(args.seed);
    if let Some(e) = args.epochs {
        template.epochs = e;
    }
    if let Some(n) = args.n {
        template.train_n = n;
    }
    if let Some(l) = args.l {
        template.samples = l;
        template.model.input_length = l;
    }
    if let Some(m) = args.momentum {
        template.momentum = m;
    }
    if let Some(size) = &args.model_size {
        template.model = match size.as_str() {
            "full" => netaural::model::M5Config::full(template.samples),
            "small" => netaural::model::M5Config::small(template.samples),
            "tiny" => netaural::model::M5Config::tiny(template.samples),
            other => return Err(usage(format!("unknown model size {other:?}"))),
        };
    }
    template.validate()?;

    let measures = match &args.measures {
        Some(list) => {
            let mut out = Vec::new();
            for m in list {
                out.push(parse_measure(m)?);
            }
            out
        }
        None => Measure::ALL.to_vec(),
    };
    let mut testset = TestsetConfig {
        n_small: template.train_n,
        ..Default::default()
    };
    if let Some(p) = args.per_generator {
        testset.per_generator = p;
    }
    if let Some(n) = args.n_small {
        testset.n_small = n;
    }
    if let Some(n) = args.n_large {
        testset.n_large = n;
    }

    let cfg = ReproduceConfig {
        template,
        measures,
        testset,
        eval_seed: args.eval_seed.unwrap_or(0xE7A1),
        out_dir: args.out_dir.clone(),
        internet: args.internet,
    };
    let outcome = full_reproduction(&cfg)?;

    let mut m = RunManifest::new(
        "reproduce",
        Some(cfg.template.seed),
        json!({
            "template": cfg.template,
            "measures": cfg.measures,
            "testset": cfg.testset,
            "eval_seed": cfg.eval_seed,
        }),
    );
    m.record_output_file(&outcome.matrix_csv)?;
    m.record_output_file(&outcome.matrix_json)?;
    m.save(&args.out_dir.join("manifest.json"))?;

    println!("completed measures: {:?}", outcome.completed.iter().map(|x| x.name()).collect::<Vec<_>>());
    if !outcome.failures.is_empty() {
        eprintln!("partial results; failures:");
        for f in &outcome.failures {
            eprintln!("  {f}");
        }
        return Err(AppError::Runtime("reproduce finished with failures".into()));
    }
    println!("correlation matrix: {}", outcome.matrix_csv.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_resolution_prefers_flag() {
        assert_eq!(resolve_seed(Some(9)), 9);
    }

    #[test]
    fn manifest_sibling_appends_suffix() {
        assert_eq!(
            manifest_sibling(Path::new("out/g.edges")),
            PathBuf::from("out/g.edges.manifest.json")
        );
    }
}
