use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use csgopt::corpus;
use csgopt::ga::GaConfig;
use csgopt::inflate::{inflate_tree, InflateSpec};
use csgopt::metrics::proximity;
use csgopt::pipeline::{self, ConfigTuple, PipelineConfig, RsoMethod};
use csgopt::sampling::{EmptinessDecider, GridSpec};
use csgopt::Scene;
use log::info;

const EXIT_IO: u8 = 1;
const EXIT_CAPACITY: u8 = 2;
const EXIT_NOT_EQUIVALENT: u8 = 3;

#[derive(Parser)]
#[command(name = "csgopt", version, about = "Optimizes CSG trees for size and operand proximity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the optimization pipeline on one scene.
    Optimize(OptimizeArgs),
    /// Grows a scene's tree with equivalence-preserving rewrites.
    Inflate(InflateArgs),
    /// Prints size, proximity and bounding box of a scene.
    Stats {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
    },
    /// Runs every scene in a directory under several configurations.
    Bench(BenchArgs),
    /// Built-in scenes.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// Writes the built-in scenes as JSON files.
    Export {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Args, Clone)]
struct RunOptions {
    /// Remaining solid optimizer: qmc, setcover, ga or pla:<path>.
    #[arg(long, default_value = "setcover")]
    rso: String,
    /// Sampling step for lattices and octree cells.
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// GA population (default 150).
    #[arg(long)]
    ga_population: Option<usize>,
    /// GA iteration limit (default 1000).
    #[arg(long)]
    ga_iters: Option<usize>,
}

impl RunOptions {
    fn config(&self, tuple: ConfigTuple) -> Result<PipelineConfig> {
        let rso: RsoMethod = self.rso.parse()?;
        let mut ga = GaConfig::default();
        if let Some(p) = self.ga_population {
            ga.population = p;
        }
        if let Some(n) = self.ga_iters {
            ga.max_iters = n;
            ga.stall_iters = ga.stall_iters.min(n);
        }
        let cfg = PipelineConfig {
            grid: GridSpec::with_step(self.step),
            verify_step: self.step,
            seed: self.seed,
            ga,
            ..PipelineConfig::new(tuple, rso)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Binary 3-tuple d,r,i.
    #[arg(long, default_value = "0,0,1")]
    config: String,
    #[command(flatten)]
    run: RunOptions,
    /// Optimized scene JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-stage CSV report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct InflateArgs {
    #[arg(long)]
    scene: PathBuf,
    /// N:pc:pd:pl:pa:pg
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of scene JSON files.
    #[arg(long)]
    scenes: PathBuf,
    /// Semicolon-separated tuples; all six evaluated ones by default.
    #[arg(long)]
    configs: Option<String>,
    #[command(flatten)]
    run: RunOptions,
    /// CSV report.
    #[arg(long)]
    out: PathBuf,
    /// Directory for GA archive CSVs.
    #[arg(long)]
    archives: Option<PathBuf>,
    /// Run the first job once untimed before measuring.
    #[arg(long)]
    warmup: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_IO);
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("CSGOPT_THREADS") {
        let n: usize = value.parse().with_context(|| format!("CSGOPT_THREADS={value:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn load(path: &Path) -> Result<Scene> {
    Scene::load(path).with_context(|| format!("reading scene {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Optimize(args) => optimize(args),
        Command::Inflate(args) => inflate(args),
        Command::Stats { scene, step } => stats(&load(&scene)?, step),
        Command::Bench(args) => bench(args),
        Command::Corpus {
            action: CorpusAction::Export { dir },
        } => export(&dir),
    }
}

fn optimize(args: OptimizeArgs) -> Result<ExitCode> {
    let scene = load(&args.scene)?;
    let cfg = args.run.config(args.config.parse()?)?;
    let (tree, report, code) = match pipeline::optimize(&scene, &cfg) {
        Ok((tree, report)) => {
            let code = if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NOT_EQUIVALENT) };
            (Some(tree), report, code)
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            let code = if failure.error.is_capacity() { EXIT_CAPACITY } else { EXIT_IO };
            (None, *failure.report, ExitCode::from(code))
        }
    };
    if let Some(path) = &args.report {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        pipeline::write_csv(std::slice::from_ref(&report), file)?;
    }
    if let Some(tree) = tree {
        let out = report.output.expect("completed runs have output metrics");
        println!(
            "{} {} {}: size {} -> {}, proximity {:.4} -> {:.4}, chain {}, remaining {} -> {}, {}",
            report.model,
            report.config,
            report.rso,
            report.input.size,
            out.size,
            report.input.proximity,
            out.proximity,
            report.chain_len,
            report.remaining_before,
            report.remaining_after,
            report.verdict()
        );
        println!("{tree}");
        if let Some(path) = &args.out {
            let optimized = Scene::new(scene.name.clone(), scene.halfspaces().to_vec(), tree)?;
            optimized.save(path).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(code)
}

fn inflate(args: InflateArgs) -> Result<ExitCode> {
    let scene = load(&args.scene)?;
    let spec: InflateSpec = args.spec.parse()?;
    let grid = GridSpec::with_step(args.step);
    let inflation = inflate_tree(&scene, &scene.root, &spec.with_seed(args.seed), &grid)?;
    let decider = EmptinessDecider::hierarchical(grid);
    println!(
        "{}: size {} -> {}, proximity {:.4}, {} rewrites",
        scene.name,
        scene.root.size(),
        inflation.tree.size(),
        proximity(&scene, &inflation.tree, &decider),
        inflation.applied.len()
    );
    let out = Scene::new(scene.name.clone(), scene.halfspaces().to_vec(), inflation.tree)?;
    out.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn stats(scene: &Scene, step: f64) -> Result<ExitCode> {
    let decider = EmptinessDecider::hierarchical(GridSpec::with_step(step));
    let bounds = scene.node_aabb(&scene.root);
    let dims = if bounds.is_empty() { [0.0; 3] } else { [0, 1, 2].map(|a| bounds.extent()[a]) };
    println!(
        "{}: size {}, proximity {:.4}, halfspaces {}, dimensions {:.2} x {:.2} x {:.2}",
        scene.name,
        scene.root.size(),
        proximity(scene, &scene.root, &decider),
        scene.halfspaces().len(),
        dims[0],
        dims[1],
        dims[2]
    );
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.scenes)
        .with_context(|| format!("listing {}", args.scenes.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no scene JSON files in {}", args.scenes.display());
    }
    let scenes = paths.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
    let tuples = match &args.configs {
        Some(list) => list.split(';').map(str::parse).collect::<Result<Vec<ConfigTuple>, _>>()?,
        None => ConfigTuple::EVALUATED.to_vec(),
    };
    let base = args.run.config(tuples[0])?;
    info!("benchmarking {} scenes under {} configurations", scenes.len(), tuples.len());
    let reports = pipeline::bench(&scenes, &tuples, &base, args.archives.as_deref(), args.warmup)?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    pipeline::write_csv(&reports, file)?;
    let passed = reports.iter().filter(|r| r.passed()).count();
    println!("{passed}/{} runs passed", reports.len());
    Ok(ExitCode::SUCCESS)
}

fn export(dir: &Path) -> Result<ExitCode> {
    std::fs::create_dir_all(dir)?;
    for scene in corpus::all_models().into_iter().chain([corpus::worked_example()]) {
        let path = dir.join(format!("{}.json", scene.name));
        scene.save(&path).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("wrote {} scenes to {}", corpus::MODEL_COUNT + 1, dir.display());
    Ok(ExitCode::SUCCESS)
}
