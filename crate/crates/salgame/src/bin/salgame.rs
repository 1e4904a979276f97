use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use salgame::config::{ConfigFile, RunConfig};
use salgame::error::{SgError, SgResult};
use salgame::synth::{generate, SceneKind};
use salgame::{io, report, runner};
use salgame_core::InitKind;

#[derive(Parser)]
#[command(name = "salgame", version, about = "Game-theoretic salient object detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a saliency map for one image.
    Detect(DetectArgs),
    /// Score a directory of maps against ground-truth masks.
    Eval(EvalArgs),
    /// Write synthetic images with exact ground truth.
    Synth(SynthArgs),
    /// Time the full pipeline on a synthetic image.
    Bench(BenchArgs),
}

/// Parameter overrides; each wins over the config file.
#[derive(Args, Default)]
struct Overrides {
    /// Superpixel counts, e.g. `--scales 100,150`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    scales: Option<Vec<usize>>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Random-walk rounds.
    #[arg(short = 'T', long = "rounds")]
    rounds: Option<usize>,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    rho2: Option<f64>,
    /// Initial profile: half, bd, pos, obj or prior.
    #[arg(long)]
    init: Option<String>,
    /// Replicator iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct DetectArgs {
    image: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output PNG.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Deep feature tensor (FTNS).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Proposal manifest JSON.
    #[arg(long)]
    proposals: Option<PathBuf>,
    /// Also write the unquantized map as an FTNS tensor.
    #[arg(long)]
    ftns_out: Option<PathBuf>,
    /// Write each scale's segmentation (PNG + JSON) into this directory.
    #[arg(long)]
    dump_segments: Option<PathBuf>,
    /// Run the scales one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct EvalArgs {
    map_dir: PathBuf,
    gt_dir: PathBuf,
    /// Where to write scores.csv and curves.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Images scored concurrently (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene kind or `all`.
    kind: String,
    out_dir: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 400)]
    width: usize,
    #[arg(long, default_value_t = 300)]
    height: usize,
    #[arg(long, default_value = "centered-square")]
    scene: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    sequential: bool,
}

fn resolve(config: Option<&Path>, o: &Overrides) -> SgResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = config {
        let dir = path.parent().unwrap_or(Path::new("."));
        cfg = ConfigFile::load(path)?.apply(cfg, dir)?;
    }
    let p = &mut cfg.pipeline;
    if let Some(v) = &o.scales {
        p.scales = v.clone();
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = o.$field { p.$field = v; })* };
    }
    set!(sigma, epsilon, lambda1, lambda2, alpha, beta, rounds, rho1, rho2, max_iters);
    if let Some(name) = &o.init {
        p.init = name.parse::<InitKind>()?;
    }
    p.validate()?;
    Ok(cfg)
}

fn print_timings(lines: Vec<String>) {
    for l in lines {
        println!("{l}");
    }
}

fn detect(a: DetectArgs) -> SgResult<()> {
    let mut cfg = resolve(a.config.as_deref(), &a.overrides)?;
    if a.features.is_some() {
        cfg.feature_tensor = a.features;
    }
    if a.proposals.is_some() {
        cfg.proposals = a.proposals;
    }
    let d = runner::detect_file(&a.image, &cfg, !a.sequential)?;
    io::write_map_png(&a.out, &d.map)?;
    if let Some(p) = &a.ftns_out {
        io::write_ftns(p, &io::map_tensor(&d.map))?;
    }
    if let Some(dir) = &a.dump_segments {
        for (scale, r) in cfg.pipeline.scales.iter().zip(&d.scales) {
            io::write_segmentation(dir, &format!("scale{scale}"), &r.segmentation)?;
        }
    }
    for (scale, r) in cfg.pipeline.scales.iter().zip(&d.scales) {
        log::info!(
            "scale {scale}: N = {}, color game {} iters, deep game {} iters",
            r.segmentation.len(),
            r.color_game.iterations,
            r.deep_game.iterations
        );
    }
    print_timings(d.timings.lines());
    Ok(())
}

fn eval(a: EvalArgs) -> SgResult<()> {
    let r = report::evaluate_dirs(&a.map_dir, &a.gt_dir, a.jobs)?;
    if let Some(dir) = &a.out_dir {
        report::write_report(&r, dir)?;
    }
    for s in &r.images {
        log::info!("{}: F = {:.4}, AUC = {:.4}", s.image, s.f_adaptive, s.auc);
    }
    println!("images      {}", r.images.len());
    println!("mean F      {:.6}", r.mean_f);
    println!("mean AUC    {:.6}", r.mean_auc);
    Ok(())
}

fn synth(a: SynthArgs) -> SgResult<()> {
    let kinds: Vec<SceneKind> = if a.kind == "all" {
        SceneKind::ALL.to_vec()
    } else {
        vec![a.kind.parse().map_err(SgError::Usage)?]
    };
    if a.width < 8 || a.height < 8 {
        return Err(SgError::Usage("synthetic images must be at least 8x8".into()));
    }
    let (img_dir, gt_dir) = (a.out_dir.join("images"), a.out_dir.join("gt"));
    for d in [&img_dir, &gt_dir] {
        fs::create_dir_all(d).map_err(|e| SgError::io(d, e))?;
    }
    for kind in kinds {
        let s = generate(kind, a.width, a.height, a.seed);
        io::write_rgb_png(&img_dir.join(format!("{kind}.png")), &s.image)?;
        io::write_mask_png(&gt_dir.join(format!("{kind}.png")), &s.truth)?;
        println!("{kind}");
    }
    Ok(())
}

fn bench(a: BenchArgs) -> SgResult<()> {
    let cfg = resolve(a.config.as_deref(), &a.overrides)?;
    let kind: SceneKind = a.scene.parse().map_err(SgError::Usage)?;
    let scene = generate(kind, a.width, a.height, a.seed);
    let mut total = Duration::ZERO;
    for run in 0..a.repeat.max(1) {
        let d = runner::detect(&scene.image, &cfg.pipeline, None, &[], !a.sequential)?;
        println!("run {run}");
        print_timings(d.timings.lines());
        total += d.timings.total;
    }
    println!("mean total  {:.4} s", total.as_secs_f64() / a.repeat.max(1) as f64);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SG_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Detect(a) => detect(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
