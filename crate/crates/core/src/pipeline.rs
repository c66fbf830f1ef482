//! End-to-end optimization: redundancy removal, decomposition, remaining
//! solid optimization, reassembly and a final redundancy pass.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::decompose::{decompose, sort_chain, Decomposition};
use crate::error::{CsgError, Result};
use crate::ga::{evolve, GaArchive, GaConfig};
use crate::metrics::{proximity, Metrics};
use crate::sampling::{grid_agreement, Agreement, EmptinessDecider, GridSpec};
use crate::scene::Scene;
use crate::simplify::remove_redundancies;
use crate::tree::CsgNode;
use crate::twolevel::{minimize, CoverSolver, TwoLevelMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SamplingMode {
    Hierarchical,
    CitBased,
}

impl SamplingMode {
    fn bit(self) -> u8 {
        match self {
            SamplingMode::Hierarchical => 0,
            SamplingMode::CitBased => 1,
        }
    }

    fn decider(self, scene: &Scene, root: &CsgNode, grid: GridSpec) -> EmptinessDecider {
        match self {
            SamplingMode::Hierarchical => EmptinessDecider::hierarchical(grid),
            SamplingMode::CitBased => EmptinessDecider::cit_based(scene, root, grid),
        }
    }
}

/// Binary 3-tuple `(d, r, i)`: decomposition sampling, redundancy sampling
/// (0 hierarchical, 1 CIT-based) and initial redundancy removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConfigTuple {
    pub decomposition: SamplingMode,
    pub redundancy: SamplingMode,
    pub initial_removal: bool,
}

impl ConfigTuple {
    /// The six evaluated combinations.
    pub const EVALUATED: [ConfigTuple; 6] = [
        ConfigTuple::from_bits(0, 0, 0),
        ConfigTuple::from_bits(1, 0, 0),
        ConfigTuple::from_bits(0, 0, 1),
        ConfigTuple::from_bits(0, 1, 1),
        ConfigTuple::from_bits(1, 0, 1),
        ConfigTuple::from_bits(1, 1, 1),
    ];

    pub const fn from_bits(d: u8, r: u8, i: u8) -> Self {
        const fn mode(b: u8) -> SamplingMode {
            if b == 0 {
                SamplingMode::Hierarchical
            } else {
                SamplingMode::CitBased
            }
        }
        ConfigTuple {
            decomposition: mode(d),
            redundancy: mode(r),
            initial_removal: i != 0,
        }
    }

    pub fn bits(&self) -> (u8, u8, u8) {
        (self.decomposition.bit(), self.redundancy.bit(), u8::from(self.initial_removal))
    }
}

impl fmt::Display for ConfigTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (d, r, i) = self.bits();
        write!(f, "({d},{r},{i})")
    }
}

impl FromStr for ConfigTuple {
    type Err = CsgError;

    /// Accepts `d,r,i` with optional parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let bits: Vec<u8> = inner
            .split(',')
            .map(|p| match p.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(CsgError::Parse(format!("config bit must be 0 or 1, got {other:?}"))),
            })
            .collect::<Result<_>>()?;
        match bits[..] {
            [d, r, i] => Ok(ConfigTuple::from_bits(d, r, i)),
            _ => Err(CsgError::Parse(format!("config needs three bits, got {s:?}"))),
        }
    }
}

/// Remaining solid optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum RsoMethod {
    QuineMcCluskey,
    /// A `Qubo` solver takes its seed from [`PipelineConfig::seed`].
    SetCover(CoverSolver),
    Ga,
    ExternalPla(PathBuf),
}

impl RsoMethod {
    pub fn name(&self) -> &'static str {
        match self {
            RsoMethod::QuineMcCluskey => "qmc",
            RsoMethod::SetCover(_) => "setcover",
            RsoMethod::Ga => "ga",
            RsoMethod::ExternalPla(_) => "pla",
        }
    }
}

impl FromStr for RsoMethod {
    type Err = CsgError;

    /// `qmc`, `setcover`, `ga` or `pla:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "qmc" => Ok(RsoMethod::QuineMcCluskey),
            "setcover" => Ok(RsoMethod::SetCover(CoverSolver::qubo(0))),
            "ga" => Ok(RsoMethod::Ga),
            other => match other.strip_prefix("pla:") {
                Some(path) if !path.is_empty() => Ok(RsoMethod::ExternalPla(PathBuf::from(path))),
                _ => Err(CsgError::Parse(format!("unknown RSO method {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub decomposition_sampling: SamplingMode,
    pub redundancy_sampling: SamplingMode,
    pub initial_redundancy_removal: bool,
    pub rso: RsoMethod,
    pub grid: GridSpec,
    pub ga: GaConfig,
    /// Lattice step of the final equivalence check.
    pub verify_step: f64,
    /// Overrides the GA seed and the QUBO annealing seed.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::new(ConfigTuple::from_bits(0, 0, 1), RsoMethod::SetCover(CoverSolver::qubo(0)))
    }
}

impl PipelineConfig {
    pub fn new(tuple: ConfigTuple, rso: RsoMethod) -> Self {
        PipelineConfig {
            decomposition_sampling: tuple.decomposition,
            redundancy_sampling: tuple.redundancy,
            initial_redundancy_removal: tuple.initial_removal,
            rso,
            grid: GridSpec::default(),
            ga: GaConfig::default(),
            verify_step: 0.1,
            seed: 0,
        }
    }

    pub fn tuple(&self) -> ConfigTuple {
        ConfigTuple {
            decomposition: self.decomposition_sampling,
            redundancy: self.redundancy_sampling,
            initial_removal: self.initial_redundancy_removal,
        }
    }

    pub fn with_tuple(mut self, tuple: ConfigTuple) -> Self {
        self.decomposition_sampling = tuple.decomposition;
        self.redundancy_sampling = tuple.redundancy;
        self.initial_redundancy_removal = tuple.initial_removal;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.ga.validate()?;
        if !(self.verify_step > 0.0) {
            return Err(CsgError::InvalidParameter("verification step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    Simplify,
    Decompose,
    Rso,
    Reassemble,
    FinalSimplify,
    Total,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Simplify => "simplify",
            Stage::Decompose => "decompose",
            Stage::Rso => "rso",
            Stage::Reassemble => "reassemble",
            Stage::FinalSimplify => "final_simplify",
            Stage::Total => "total",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub duration: Duration,
    pub size_in: usize,
    pub size_out: usize,
    pub prox_in: f64,
    pub prox_out: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub model: String,
    pub config: ConfigTuple,
    pub rso: String,
    pub seed: u64,
    pub input: Metrics,
    /// `None` when the run failed before producing a tree.
    pub output: Option<Metrics>,
    pub stages: Vec<StageReport>,
    pub chain_len: usize,
    pub remaining_before: usize,
    pub remaining_after: usize,
    pub remaining_halfspaces: usize,
    /// The RSO result was rejected and the remaining solid kept.
    pub rso_kept_input: bool,
    pub equivalence: Option<Agreement>,
    pub error: Option<String>,
    pub ga_archive: Option<GaArchive>,
}

impl RunReport {
    /// Ran to completion and the output matched the input everywhere.
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.equivalence.is_some_and(|a| a.is_equal())
    }

    pub fn verdict(&self) -> &'static str {
        match (&self.error, self.equivalence) {
            (Some(_), _) => "error",
            (None, Some(a)) if a.is_equal() => "pass",
            _ => "fail",
        }
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == stage)
    }
}

/// A run that stopped early; `report` covers the stages that finished.
#[derive(Debug)]
pub struct PipelineFailure {
    pub error: CsgError,
    pub report: Box<RunReport>,
}

impl fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} {}): {}", self.report.model, self.report.config, self.report.rso, self.error)
    }
}

impl std::error::Error for PipelineFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

struct Recorder<'a> {
    scene: &'a Scene,
    metrics: &'a EmptinessDecider,
    stages: Vec<StageReport>,
}

impl Recorder<'_> {
    fn record(&mut self, stage: Stage, duration: Duration, before: &CsgNode, after: &CsgNode) {
        let prox_in = proximity(self.scene, before, self.metrics);
        let prox_out = proximity(self.scene, after, self.metrics);
        debug!("{}: {} -> {} nodes in {:?}", stage.name(), before.size(), after.size(), duration);
        self.stages.push(StageReport {
            stage,
            duration,
            size_in: before.size(),
            size_out: after.size(),
            prox_in,
            prox_out,
        });
    }
}

/// Result of the stages before remaining solid optimization. One prepared
/// run can be completed with several RSO methods.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub input: CsgNode,
    pub input_metrics: Metrics,
    pub decomposition: Decomposition,
    stages: Vec<StageReport>,
    redundancy: EmptinessDecider,
    metrics: EmptinessDecider,
}

/// Stages 1 and 2 on `root`.
pub fn prepare(scene: &Scene, root: &CsgNode, cfg: &PipelineConfig) -> Result<Prepared> {
    cfg.validate()?;
    scene.check_tree(root)?;
    let metrics = EmptinessDecider::hierarchical(cfg.grid);
    let redundancy = cfg.redundancy_sampling.decider(scene, root, cfg.grid);
    let decomposition_decider = if cfg.decomposition_sampling == cfg.redundancy_sampling {
        redundancy.clone()
    } else {
        cfg.decomposition_sampling.decider(scene, root, cfg.grid)
    };
    let mut rec = Recorder {
        scene,
        metrics: &metrics,
        stages: Vec::new(),
    };

    let mut tree = root.clone();
    if cfg.initial_redundancy_removal {
        let t = Instant::now();
        let simplified = remove_redundancies(scene, &tree, &redundancy);
        rec.record(Stage::Simplify, t.elapsed(), &tree, &simplified);
        tree = simplified;
    }

    let t = Instant::now();
    let decomposition = sort_chain(scene, &decompose(scene, &tree, &decomposition_decider), &decomposition_decider);
    let elapsed = t.elapsed();
    rec.record(Stage::Decompose, elapsed, &tree, &decomposition.reassemble());
    let stages = rec.stages;
    Ok(Prepared {
        input: root.clone(),
        input_metrics: Metrics {
            size: root.size(),
            proximity: proximity(scene, root, &metrics),
        },
        decomposition,
        stages,
        redundancy,
        metrics,
    })
}

/// Stages 3 to 5 plus the equivalence check.
pub fn complete(scene: &Scene, prepared: &Prepared, cfg: &PipelineConfig) -> std::result::Result<(CsgNode, RunReport), PipelineFailure> {
    let total = Instant::now();
    let dec = &prepared.decomposition;
    let mut report = RunReport {
        model: scene.name.clone(),
        config: cfg.tuple(),
        rso: cfg.rso.name().to_string(),
        seed: cfg.seed,
        input: prepared.input_metrics,
        output: None,
        stages: prepared.stages.clone(),
        chain_len: dec.chain.len(),
        remaining_before: dec.remaining.size(),
        remaining_after: dec.remaining.size(),
        remaining_halfspaces: dec.remaining_halfspaces.len(),
        rso_kept_input: false,
        equivalence: None,
        error: None,
        ga_archive: None,
    };
    let mut rec = Recorder {
        scene,
        metrics: &prepared.metrics,
        stages: Vec::new(),
    };

    let t = Instant::now();
    let optimized = match optimize_remaining(scene, &dec.remaining, cfg) {
        Ok((tree, archive)) => {
            report.ga_archive = archive;
            tree
        }
        Err(error) => {
            warn!("{}: remaining solid optimization failed: {error}", scene.name);
            report.stages.extend(rec.stages);
            report.error = Some(error.to_string());
            return Err(PipelineFailure {
                error,
                report: Box::new(report),
            });
        }
    };
    let remaining = if optimized.size() <= dec.remaining.size()
        && grid_agreement(scene, &dec.remaining, &optimized, None, cfg.verify_step).is_equal()
    {
        optimized
    } else {
        info!("{}: keeping the remaining solid, RSO result was larger or not equivalent", scene.name);
        report.rso_kept_input = true;
        dec.remaining.clone()
    };
    rec.record(Stage::Rso, t.elapsed(), &dec.remaining, &remaining);
    report.remaining_after = remaining.size();

    let t = Instant::now();
    let reassembled = dec.reassemble_with(&remaining);
    rec.record(Stage::Reassemble, t.elapsed(), &dec.remaining, &reassembled);

    let t = Instant::now();
    let mut output = remove_redundancies(scene, &reassembled, &prepared.redundancy);
    rec.record(Stage::FinalSimplify, t.elapsed(), &reassembled, &output);
    if output.size() > prepared.input.size() {
        info!("{}: output larger than input, keeping the input", scene.name);
        output = prepared.input.clone();
    }
    let total_time = prepared.stages.iter().map(|s| s.duration).sum::<Duration>() + total.elapsed();
    rec.record(Stage::Total, total_time, &prepared.input, &output);

    report.stages.extend(rec.stages);
    report.output = Some(Metrics {
        size: output.size(),
        proximity: proximity(scene, &output, &prepared.metrics),
    });
    report.equivalence = Some(grid_agreement(scene, &prepared.input, &output, None, cfg.verify_step));
    Ok((output, report))
}

fn optimize_remaining(scene: &Scene, remaining: &CsgNode, cfg: &PipelineConfig) -> Result<(CsgNode, Option<GaArchive>)> {
    if remaining.size() <= 1 {
        return Ok((remaining.clone(), None));
    }
    let method = match &cfg.rso {
        RsoMethod::QuineMcCluskey => TwoLevelMethod::Qmc,
        RsoMethod::SetCover(CoverSolver::Qubo { schedule, .. }) => TwoLevelMethod::SetCover(CoverSolver::Qubo {
            schedule: schedule.clone(),
            seed: cfg.seed,
        }),
        RsoMethod::SetCover(solver) => TwoLevelMethod::SetCover(solver.clone()),
        RsoMethod::ExternalPla(path) => TwoLevelMethod::ExternalPla(path.clone()),
        RsoMethod::Ga => {
            let ga = GaConfig { seed: cfg.seed, ..cfg.ga.clone() };
            let result = evolve(scene, remaining, &ga, &cfg.grid)?;
            return Ok((result.best, Some(result.archive)));
        }
    };
    Ok((minimize(scene, remaining, &method, &cfg.grid)?, None))
}

/// Runs every stage on the scene root.
pub fn optimize(scene: &Scene, cfg: &PipelineConfig) -> std::result::Result<(CsgNode, RunReport), PipelineFailure> {
    optimize_tree(scene, &scene.root, cfg)
}

pub fn optimize_tree(scene: &Scene, root: &CsgNode, cfg: &PipelineConfig) -> std::result::Result<(CsgNode, RunReport), PipelineFailure> {
    match prepare(scene, root, cfg) {
        Ok(prepared) => complete(scene, &prepared, cfg),
        Err(error) => Err(PipelineFailure {
            report: Box::new(RunReport {
                model: scene.name.clone(),
                config: cfg.tuple(),
                rso: cfg.rso.name().to_string(),
                seed: cfg.seed,
                input: Metrics {
                    size: root.size(),
                    proximity: f64::NAN,
                },
                output: None,
                stages: Vec::new(),
                chain_len: 0,
                remaining_before: 0,
                remaining_after: 0,
                remaining_halfspaces: 0,
                rso_kept_input: false,
                equivalence: None,
                error: Some(error.to_string()),
                ga_archive: None,
            }),
            error,
        }),
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    model: &'a str,
    config: String,
    stage: &'static str,
    duration_ms: f64,
    size_in: usize,
    size_out: usize,
    prox_in: f64,
    prox_out: f64,
    equiv: &'static str,
}

/// One row per stage and report.
pub fn write_csv<W: Write>(reports: &[RunReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        let config = format!("{}:{}", r.config, r.rso);
        for s in &r.stages {
            w.serialize(CsvRow {
                model: &r.model,
                config: config.clone(),
                stage: s.stage.name(),
                duration_ms: s.duration.as_secs_f64() * 1e3,
                size_in: s.size_in,
                size_out: s.size_out,
                prox_in: s.prox_in,
                prox_out: s.prox_out,
                equiv: r.verdict(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs every scene under every tuple. Failed runs are reported, not
/// propagated. GA archives go to `archive_dir` when given. With `warmup`
/// the first run is repeated and only the repetition is kept.
pub fn bench(scenes: &[Scene], tuples: &[ConfigTuple], base: &PipelineConfig, archive_dir: Option<&Path>, warmup: bool) -> Result<Vec<RunReport>> {
    if warmup {
        if let (Some(scene), Some(&tuple)) = (scenes.first(), tuples.first()) {
            let _ = optimize(scene, &base.clone().with_tuple(tuple));
        }
    }
    let jobs: Vec<(&Scene, ConfigTuple)> = scenes.iter().flat_map(|s| tuples.iter().map(move |&t| (s, t))).collect();
    let reports: Vec<RunReport> = jobs
        .par_iter()
        .map(|&(scene, tuple)| {
            let cfg = base.clone().with_tuple(tuple);
            match optimize(scene, &cfg) {
                Ok((_, report)) => report,
                Err(failure) => *failure.report,
            }
        })
        .collect();
    if let Some(dir) = archive_dir {
        std::fs::create_dir_all(dir)?;
        for r in &reports {
            if let Some(archive) = &r.ga_archive {
                let (d, rr, i) = r.config.bits();
                let file = std::fs::File::create(dir.join(format!("{}_{d}{rr}{i}_archive.csv", r.model)))?;
                archive.write_csv(file)?;
            }
        }
    }
    Ok(reports)
}
