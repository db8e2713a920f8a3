//! Subcommands. Each one loads inputs, calls the library, and writes what it
//! gets back; no numerics live here.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ecolab_core::bounds::{self, BoundInputs, DecoderFamily, ScoredPartition};
use ecolab_core::geometry::{self, Centering};
use ecolab_core::ingest::{self, IngestConfig, VocabMode, WorldSource};
use ecolab_core::lab::{self, SweepOptions};
use ecolab_core::partition::enumerate_partitions;
use ecolab_core::selection::{
    self, EvolutionConfig, FitnessForm, FitnessModel, Genotype, Mode, MutationKernel, Population,
    RecipeRisk, RiskModel,
};
use ecolab_core::{Ecology, Partition};

use crate::output::{fmt_opt, Run};
use crate::parse::{self, usage};

#[derive(Subcommand, Serialize)]
pub enum Command {
    /// Floor, optimal loss and Jensen–Shannon excess of an encoding.
    Decompose(DecomposeArgs),
    /// Threshold report for one split (or merge) of an encoding.
    Split(SplitArgs),
    /// Whether an encoding is a local minimum of the regularized objective at β.
    LocalMin(LocalMinArgs),
    /// Global optima of the regularized objective over a β grid.
    SweepBeta(SweepArgs),
    /// Quotient encoding and pairwise task distances.
    Quotient(QuotientArgs),
    /// Rate–distortion curve over the partition lattice.
    RdCurve(RdArgs),
    /// Largest β at which the quotient encoding stays a local minimum.
    BetaMin(EcologyArg),
    /// Selection dynamics over encodings or recipe traits.
    Evolve(EvolveArgs),
    /// Injection thresholds and rescued sets for a base/auxiliary pair.
    Inject(InjectArgs),
    /// Hilbert kernel, spectrum, rank and embedding.
    Geometry(GeometryArgs),
    /// k-nearest-neighbor graph, margins and stability.
    Knn(KnnArgs),
    /// Certification sample size (and optional mis-certification simulation).
    Bounds(BoundsArgs),
    /// Decoder-family gap and nesting monotonicity.
    Gap(GapArgs),
    /// Whether a realizable encoding set can reach the entropy floor.
    Capacity(CapacityArgs),
    /// Generalist vs specialist excess across tasks.
    Generalist(GeneralistArgs),
    /// Off-ecology excess bound and non-identifiability witness.
    OffEcology(OffEcologyArgs),
    /// Build an empirical ecology from text corpora.
    Ingest(IngestArgs),
    /// Probe a corpus-built ecology with unseen texts.
    Probe(ProbeArgs),
    /// Validate an ecology file (and optionally a partition against it).
    Validate(ValidateArgs),
}

#[derive(Args, Serialize)]
pub struct EcologyArg {
    #[arg(long)]
    pub ecology: PathBuf,
}

#[derive(Args, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    /// Restricted-growth labels, e.g. `0,0,1`.
    #[arg(long)]
    pub partition: String,
}

#[derive(Args, Serialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    #[arg(long)]
    pub partition: String,
    /// Cell to split.
    #[arg(long, requires = "subset", conflicts_with = "merge")]
    pub cell: Option<usize>,
    /// World ids forming one side of the split.
    #[arg(long, value_delimiter = ',')]
    pub subset: Vec<String>,
    /// Two cells `x,y` to merge instead.
    #[arg(long)]
    pub merge: Option<String>,
}

#[derive(Args, Serialize)]
pub struct LocalMinArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    #[arg(long)]
    pub partition: String,
    #[arg(long)]
    pub beta: f64,
}

#[derive(Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    /// `start:stop:step` (inclusive) or a comma list.
    #[arg(long)]
    pub beta: String,
    /// Skip bisection of transition brackets.
    #[arg(long)]
    pub no_refine: bool,
    /// Allow enumeration beyond the default world limit.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Serialize)]
pub struct QuotientArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
}

#[derive(Args, Serialize)]
pub struct RdArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    /// Complexity levels in nats; defaults to 21 points from 0 to H(π).
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Serialize)]
pub struct EvolveArgs {
    /// JSON run description (risk model, fitness, initial population, kernel, …).
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Args, Serialize)]
pub struct InjectArgs {
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub aux: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Report the threshold α* for one pair `a,b`.
    #[arg(long)]
    pub pair: Option<String>,
    /// Report the rescued set at each α (range or list).
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
pub enum CenteringArg {
    Uniform,
    Weighted,
}

#[derive(Args, Serialize)]
pub struct GeometryArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    #[arg(long, value_enum, default_value = "uniform")]
    pub centering: CenteringArg,
    /// Collapse to one world per quotient cell first.
    #[arg(long)]
    pub collapse: bool,
}

#[derive(Args, Serialize)]
pub struct KnnArgs {
    /// Use the task-distance matrix of this ecology.
    #[arg(long, conflicts_with = "distances", required_unless_present = "distances")]
    pub ecology: Option<PathBuf>,
    /// Square distance matrix CSV (header row and first column are ids).
    #[arg(long)]
    pub distances: Option<PathBuf>,
    #[arg(long)]
    pub k: usize,
    /// A perturbed matrix to compare against.
    #[arg(long)]
    pub perturbed: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct BoundsArgs {
    /// JSON bound inputs.
    #[arg(long)]
    pub config: PathBuf,
    /// Ecology scoring the candidate partitions.
    #[arg(long)]
    pub ecology: Option<PathBuf>,
    /// Candidate partitions (repeatable).
    #[arg(long)]
    pub partition: Vec<String>,
    /// Use every partition of the ecology's worlds.
    #[arg(long)]
    pub all_partitions: bool,
    /// Resample this many datasets at the certified n and report the mis-certification rate.
    #[arg(long)]
    pub simulate: Option<usize>,
}

#[derive(Args, Serialize)]
pub struct GapArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    #[arg(long)]
    pub partition: String,
    /// `bayes_full`, `context_pooled`, or a JSON file holding a decoder family.
    #[arg(long)]
    pub family: String,
    /// A larger family to check nesting monotonicity against.
    #[arg(long)]
    pub outer: Option<String>,
}

#[derive(Args, Serialize)]
pub struct CapacityArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    /// Realizable partitions (repeatable).
    #[arg(long, required = true)]
    pub partition: Vec<String>,
}

#[derive(Args, Serialize)]
pub struct GeneralistArgs {
    /// Task ecologies (repeatable), mixed uniformly.
    #[arg(long, required = true)]
    pub ecology: Vec<PathBuf>,
    #[arg(long)]
    pub partition: String,
}

#[derive(Args, Serialize)]
pub struct OffEcologyArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub probe: PathBuf,
    #[arg(long)]
    pub pair: String,
    /// Also construct two decoders that agree on training but not on the probe.
    #[arg(long)]
    pub witness: bool,
}

#[derive(Args, Serialize, Default)]
pub struct IngestFlags {
    /// JSON ingest configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub context_length: Option<usize>,
    #[arg(long)]
    pub max_contexts: Option<usize>,
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Explicit vocabulary characters (default: space and a–z).
    #[arg(long)]
    pub vocab: Option<String>,
    #[arg(long)]
    pub holdout_fraction: Option<f64>,
    #[arg(long)]
    pub allow_unseen_worlds: bool,
}

#[derive(Args, Serialize)]
pub struct IngestArgs {
    /// `id=path[,path…]` (repeatable).
    #[arg(long = "world", required = true)]
    pub worlds: Vec<String>,
    #[command(flatten)]
    pub flags: IngestFlags,
}

#[derive(Args, Serialize)]
pub struct ProbeArgs {
    /// Training worlds `id=path[,path…]` (repeatable).
    #[arg(long = "world", required = true)]
    pub worlds: Vec<String>,
    /// Probe worlds `id=path[,path…]` (repeatable).
    #[arg(long = "probe", required = true)]
    pub probes: Vec<String>,
    #[command(flatten)]
    pub flags: IngestFlags,
}

#[derive(Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub ecology: PathBuf,
    #[arg(long)]
    pub partition: Option<String>,
}

pub fn dispatch(cmd: Command, out: &Path, seed: Option<u64>) -> Result<()> {
    let name = match &cmd {
        Command::Decompose(_) => "decompose",
        Command::Split(_) => "split",
        Command::LocalMin(_) => "local-min",
        Command::SweepBeta(_) => "sweep-beta",
        Command::Quotient(_) => "quotient",
        Command::RdCurve(_) => "rd-curve",
        Command::BetaMin(_) => "beta-min",
        Command::Evolve(_) => "evolve",
        Command::Inject(_) => "inject",
        Command::Geometry(_) => "geometry",
        Command::Knn(_) => "knn",
        Command::Bounds(_) => "bounds",
        Command::Gap(_) => "gap",
        Command::Capacity(_) => "capacity",
        Command::Generalist(_) => "generalist",
        Command::OffEcology(_) => "off-ecology",
        Command::Ingest(_) => "ingest",
        Command::Probe(_) => "probe",
        Command::Validate(_) => "validate",
    };
    let mut run = Run::new(out, name, &cmd)?;
    match &cmd {
        Command::Decompose(a) => decompose(&mut run, a),
        Command::Split(a) => split(&mut run, a),
        Command::LocalMin(a) => local_min(&mut run, a),
        Command::SweepBeta(a) => sweep(&mut run, a),
        Command::Quotient(a) => quotient(&mut run, a),
        Command::RdCurve(a) => rd_curve(&mut run, a),
        Command::BetaMin(a) => beta_min(&mut run, a),
        Command::Evolve(a) => evolve(&mut run, a, seed),
        Command::Inject(a) => inject(&mut run, a),
        Command::Geometry(a) => geometry_cmd(&mut run, a),
        Command::Knn(a) => knn(&mut run, a),
        Command::Bounds(a) => bounds_cmd(&mut run, a, seed),
        Command::Gap(a) => gap(&mut run, a),
        Command::Capacity(a) => capacity(&mut run, a),
        Command::Generalist(a) => generalist(&mut run, a),
        Command::OffEcology(a) => off_ecology(&mut run, a),
        Command::Ingest(a) => ingest_cmd(&mut run, a, seed),
        Command::Probe(a) => probe(&mut run, a, seed),
        Command::Validate(a) => validate(&mut run, a),
    }?;
    run.finish()?;
    println!("outputs written to {}", out.display());
    Ok(())
}

/// `--seed`, then the config file, then `ECOLAB_SEED`, then 0.
fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    Ok(match (flag, config) {
        (Some(s), _) | (None, Some(s)) => s,
        _ => parse::seed_from_env()?.unwrap_or(0),
    })
}

fn partition_for(e: &Ecology, s: &str) -> Result<Partition> {
    let p = parse::partition(s)?;
    if p.len() != e.n_worlds() {
        bail!(ecolab_core::Error::Dimension(format!(
            "partition covers {} worlds, ecology has {}",
            p.len(),
            e.n_worlds()
        )));
    }
    Ok(p)
}

fn ids(e: &Ecology, members: &[usize]) -> String {
    members.iter().map(|&w| e.worlds()[w].as_str()).collect::<Vec<_>>().join(" ")
}

fn labels_of(ps: &[Partition]) -> String {
    ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" | ")
}

fn decompose(run: &mut Run, a: &DecomposeArgs) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let p = partition_for(&e, &a.partition)?;
    let r = e.decompose(&p)?;
    run.csv(
        "decompose.csv",
        &["quantity", "value"],
        [
            ("floor", r.floor),
            ("optimal_loss", r.optimal_loss),
            ("excess", r.excess),
            ("joint_conditional_entropy", r.joint_conditional_entropy),
        ]
        .map(|(k, v)| vec![k.to_string(), v.to_string()]),
    )?;
    run.csv(
        "per_cell.csv",
        &["cell", "members", "mass", "mean_js", "contribution"],
        r.per_cell.iter().map(|c| {
            vec![
                c.cell.to_string(),
                ids(&e, &c.members),
                c.mass.to_string(),
                c.mean_js.to_string(),
                c.contribution.to_string(),
            ]
        }),
    )?;
    run.csv(
        "per_context.csv",
        &["context", "mass", "excess"],
        e.contexts()
            .iter()
            .zip(&r.per_context)
            .map(|(c, x)| vec![c.id.clone(), c.mass.to_string(), x.to_string()]),
    )?;
    run.json("decompose.json", &r)?;
    println!("floor {:.6}  loss {:.6}  excess {:.6}", r.floor, r.optimal_loss, r.excess);
    Ok(())
}

fn split_csv(run: &mut Run, e: &Ecology, reports: &[lab::SplitReport]) -> Result<()> {
    run.csv(
        "split.csv",
        &["cell", "a", "b", "cell_mass", "lambda", "gain", "cost_rate", "beta_star"],
        reports.iter().map(|r| {
            vec![
                r.cell.to_string(),
                ids(e, &r.a),
                ids(e, &r.b),
                r.cell_mass.to_string(),
                r.lambda.to_string(),
                r.gain.to_string(),
                r.cost_rate.to_string(),
                r.beta_star.to_string(),
            ]
        }),
    )
}

fn split(run: &mut Run, a: &SplitArgs) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let p = partition_for(&e, &a.partition)?;
    let r = match (&a.cell, &a.merge) {
        (Some(cell), None) => {
            let subset = a
                .subset
                .iter()
                .map(|id| e.world_index(id))
                .collect::<ecolab_core::Result<Vec<_>>>()?;
            lab::split_report(&e, &p, *cell, &subset)?
        }
        (None, Some(m)) => {
            let (x, y) = parse::pair(m)?;
            let cell = |s: &str| s.parse::<usize>().map_err(|_| usage(format!("cell `{s}` is not an index")));
            lab::merge_report(&e, &p, cell(&x)?, cell(&y)?)?
        }
        _ => return Err(usage("give either --cell with --subset, or --merge x,y")),
    };
    split_csv(run, &e, std::slice::from_ref(&r))?;
    run.json("split.json", &r)?;
    println!("gain {:.6}  h(λ) {:.6}  β* {:.6}", r.gain, r.cost_rate, r.beta_star);
    Ok(())
}

fn local_min(run: &mut Run, a: &LocalMinArgs) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let p = partition_for(&e, &a.partition)?;
    let r = lab::local_min_check(&e, &p, a.beta)?;
    run.json("local_min.json", &r)?;
    println!(
        "{} at β = {} ({} improving moves)",
        if r.is_local_min { "local minimum" } else { "not a local minimum" },
        a.beta,
        r.violating_moves.len()
    );
    Ok(())
}

fn sweep(run: &mut Run, a: &SweepArgs) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let grid = parse::grid(&a.beta)?;
    let path = lab::beta_sweep(
        &e,
        &grid,
        SweepOptions {
            force: a.force,
            refine: !a.no_refine,
        },
    )?;
    run.csv(
        "sweep.csv",
        &["beta", "refined", "optimum", "loss", "complexity", "objective", "optimum_count"],
        path.points.iter().map(|pt| {
            let first = &pt.optima[0];
            let optima: Vec<Partition> = pt.optima.iter().map(|o| o.partition.clone()).collect();
            vec![
                pt.beta.to_string(),
                pt.refined.to_string(),
                labels_of(&optima),
                first.loss.to_string(),
                first.complexity.to_string(),
                pt.objective.to_string(),
                pt.optimum_count.to_string(),
            ]
        }),
    )?;
    run.csv(
        "transitions.csv",
        &["beta_lo", "beta_hi", "beta_cross", "from", "to", "predicted_beta", "kind"],
        path.transitions.iter().map(|t| {
            vec![
                t.beta_lo.to_string(),
                t.beta_hi.to_string(),
                fmt_opt(t.beta_cross),
                labels_of(&t.from),
                labels_of(&t.to),
                fmt_opt(t.predicted_beta),
                serde_json::to_value(&t.kind).expect("enum").as_str().unwrap_or("").to_string(),
            ]
        }),
    )?;
    run.json(
        "sweep_summary.json",
        &serde_json::json!({
            "grid_points": path.grid.len(),
            "points": path.points.len(),
            "transitions": path.transitions,
            "coarsening_violations": path.coarsening_violations,
        }),
    )?;
    println!("{} points, {} transitions", path.points.len(), path.transitions.len());
    for t in &path.transitions {
        println!(
            "  β ∈ [{:.6}, {:.6}]  {} → {}  ({:?})",
            t.beta_lo,
            t.beta_hi,
            labels_of(&t.from),
            labels_of(&t.to),
            t.kind
        );
    }
    Ok(())
}

fn quotient(run: &mut Run, a: &QuotientArgs) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let q = e.quotient_partition(a.tol)?;
    let sep = e.separation_structure(a.tol)?;
    let v = lab::min_complexity_veridical(&e)?;
    run.csv(
        "distances.csv",
        &["a", "b", "sigma2", "separated"],
        sep.pairs.iter().map(|d| {
            vec![
                d.a.clone(),
                d.b.clone(),
                d.sigma2.to_string(),
                (d.sigma2 > a.tol).to_string(),
            ]
        }),
    )?;
    let cells: Vec<Vec<&str>> = q
        .cells()
        .iter()
        .map(|c| c.iter().map(|&w| e.worlds()[w].as_str()).collect())
        .collect();
    run.json(
        "quotient.json",
        &serde_json::json!({
            "tol": a.tol,
            "partition": q,
            "cell_count": q.cell_count(),
            "cells": cells,
            "margin": sep.margin,
            "complexity": ecolab_core::partition::complexity(&q, e.prior())?,
            "veridical_istar": v.istar,
        }),
    )?;
    println!("quotient {} ({} cells)", q, q.cell_count());
    Ok(())
}

fn rd_curve(run: &mut Run, a: &RdArgs) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let levels = match &a.levels {
        Some(s) => parse::grid(s)?,
        None => {
            let h = ecolab_core::info::entropy(e.prior());
            (0..=20).map(|i| h * i as f64 / 20.0).collect()
        }
    };
    let pts = lab::rate_distortion(&e, &levels, a.force)?;
    run.csv(
        "rd_curve.csv",
        &["level", "distortion", "complexity", "partition"],
        pts.iter().map(|p| {
            vec![
                p.level.to_string(),
                p.distortion.to_string(),
                p.complexity.to_string(),
                p.partition.to_string(),
            ]
        }),
    )?;
    println!("{} levels", pts.len());
    Ok(())
}

fn beta_min(run: &mut Run, a: &EcologyArg) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let r = lab::beta_min(&e)?;
    run.json("beta_min.json", &r)?;
    match r {
        Some(b) => println!("β_min = {} (cells {:?}, unique {})", b.beta_min, b.pair, b.unique),
        None => println!("quotient has a single cell; no β_min"),
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RiskConfig {
    Partition {
        ecology: PathBuf,
    },
    Linear {
        intercept: f64,
        slope: f64,
        #[serde(default)]
        offsets: std::collections::BTreeMap<String, f64>,
    },
    Injection {
        base: PathBuf,
        aux: PathBuf,
        eps: f64,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialConfig {
    genotypes: Vec<Genotype>,
    freqs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvolveConfig {
    risk: RiskConfig,
    fitness: FitnessForm,
    initial: InitialConfig,
    generations: u64,
    popsize: usize,
    kernel: MutationKernel,
    mode: Mode,
    #[serde(default)]
    seed: Option<u64>,
}

fn relative(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn load_config<T: for<'de> Deserialize<'de>>(run: &mut Run, path: &Path) -> Result<T> {
    let text = run.read_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| ecolab_core::Error::Parse(format!("{}: {e}", path.display())).into())
}

fn evolve(run: &mut Run, a: &EvolveArgs, seed: Option<u64>) -> Result<()> {
    let cfg: EvolveConfig = load_config(run, &a.config)?;
    let risk = match cfg.risk {
        RiskConfig::Partition { ecology } => RiskModel::Partition(run.ecology(&relative(&a.config, &ecology))?),
        RiskConfig::Linear {
            intercept,
            slope,
            offsets,
        } => RiskModel::Recipe(RecipeRisk::Linear {
            intercept,
            slope,
            offsets,
        }),
        RiskConfig::Injection { base, aux, eps } => RiskModel::Recipe(RecipeRisk::Injection {
            base: run.ecology(&relative(&a.config, &base))?,
            aux: run.ecology(&relative(&a.config, &aux))?,
            eps,
        }),
    };
    let model = FitnessModel::new(risk, cfg.fitness)?;
    let seed = resolve_seed(seed, cfg.seed)?;
    run.set_seed(seed);
    let initial = Population::new(cfg.initial.genotypes, cfg.initial.freqs, seed)?;
    let traj = selection::run_evolution(
        &model,
        &initial,
        &EvolutionConfig {
            generations: cfg.generations,
            popsize: cfg.popsize,
            kernel: cfg.kernel,
            mode: cfg.mode,
            seed,
        },
    )?;
    run.csv(
        "trajectory.csv",
        &["generation", "mean_risk", "mean_trait", "delta_sel", "expected_delta_sel", "z"],
        traj.records.iter().map(|r| {
            vec![
                r.generation.to_string(),
                r.mean_risk.to_string(),
                r.mean_trait.to_string(),
                r.delta_sel.to_string(),
                r.expected_delta_sel.to_string(),
                fmt_opt(r.z),
            ]
        }),
    )?;
    let res = traj.residuals();
    run.json(
        "evolve_summary.json",
        &serde_json::json!({
            "generations": traj.records.len(),
            "residuals": res,
            "cumulative_delta_sel": traj.cumulative_delta_sel(),
            "final_population": traj.final_population,
        }),
    )?;
    println!(
        "{} generations; rms z {:.3}, 95% coverage {:.3} over {} defined residuals",
        traj.records.len(),
        res.rms_z,
        res.coverage95,
        res.defined
    );
    Ok(())
}

fn inject(run: &mut Run, a: &InjectArgs) -> Result<()> {
    let base = run.ecology(&a.base)?;
    let aux = run.ecology(&a.aux)?;
    if a.pair.is_none() && a.alpha.is_none() {
        return Err(usage("give --pair a,b and/or --alpha"));
    }
    let mut report = serde_json::Map::new();
    if let Some(p) = &a.pair {
        let (x, y) = parse::pair(p)?;
        let t = selection::injection_threshold(&base, &aux, (&x, &y), a.eps)?;
        println!("threshold for ({x}, {y}): {t:?}");
        report.insert("threshold".into(), serde_json::to_value(t)?);
    }
    if let Some(s) = &a.alpha {
        let sets = parse::grid(s)?
            .into_iter()
            .map(|alpha| selection::rescued_set(&base, &aux, alpha, a.eps))
            .collect::<ecolab_core::Result<Vec<_>>>()?;
        run.csv(
            "rescued.csv",
            &["alpha", "gap_pairs", "rescued", "rescued_pairs"],
            sets.iter().map(|r| {
                vec![
                    r.alpha.to_string(),
                    r.gap.len().to_string(),
                    r.rescued.len().to_string(),
                    r.rescued.iter().map(|(x, y)| format!("{x}-{y}")).collect::<Vec<_>>().join(" "),
                ]
            }),
        )?;
        report.insert("rescued".into(), serde_json::to_value(&sets)?);
        println!("{} α values", sets.len());
    }
    run.json("inject.json", &report)
}

fn geometry_cmd(run: &mut Run, a: &GeometryArgs) -> Result<()> {
    let mut e = run.ecology(&a.ecology)?;
    if a.collapse {
        e = geometry::collapse_to_quotient(&e)?;
    }
    let centering = match a.centering {
        CenteringArg::Uniform => Centering::Uniform,
        CenteringArg::Weighted => Centering::Weighted,
    };
    let k = geometry::ecology_kernel_with(&e, centering);
    run.matrix("distances.csv", &k.worlds, &k.dsigma)?;
    run.matrix("kernel.csv", &k.worlds, &k.kernel)?;
    run.csv(
        "spectrum.csv",
        &["index", "eigenvalue"],
        k.eigenvalues.iter().enumerate().map(|(i, l)| vec![i.to_string(), l.to_string()]),
    )?;
    let dim = k.embedding.first().map_or(0, Vec::len);
    let header: Vec<String> = std::iter::once("world".to_string())
        .chain((0..dim).map(|i| format!("x{i}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.csv(
        "embedding.csv",
        &header,
        k.worlds.iter().zip(&k.embedding).map(|(w, row)| {
            std::iter::once(w.clone())
                .chain(row.iter().map(|x| x.to_string()))
                .collect::<Vec<_>>()
        }),
    )?;
    run.json(
        "geometry.json",
        &serde_json::json!({
            "worlds": k.worlds,
            "centering": k.centering,
            "rank": k.rank,
            "eigenvalues": k.eigenvalues,
        }),
    )?;
    println!("{} worlds, kernel rank {}", k.worlds.len(), k.rank);
    Ok(())
}

fn read_matrix(run: &mut Run, path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let bytes = run.read(path)?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .skip(1)
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| ecolab_core::Error::Parse(format!("{}: `{t}` is not a number", path.display())))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn knn(run: &mut Run, a: &KnnArgs) -> Result<()> {
    let (ids, d) = match (&a.ecology, &a.distances) {
        (Some(p), _) => {
            let e = run.ecology(p)?;
            (e.worlds().to_vec(), e.distance_matrix())
        }
        (None, Some(p)) => read_matrix(run, p)?,
        (None, None) => return Err(usage("give --ecology or --distances")),
    };
    let graph = geometry::knn_graph(&d, a.k);
    let value = match &a.perturbed {
        Some(p) => {
            let (_, dhat) = read_matrix(run, p)?;
            let c = geometry::knn_stability(&d, &dhat, a.k)?;
            println!(
                "γ_k {}; sup perturbation {}; graphs equal: {}",
                c.report.gamma_k, c.sup_perturbation, c.graphs_equal
            );
            serde_json::to_value(c)?
        }
        None => {
            let r = geometry::knn_report(&d, a.k)?;
            println!("γ_k {} (stable under sup-norm < {})", r.gamma_k, r.stable_under);
            serde_json::to_value(r)?
        }
    };
    run.csv(
        "knn_graph.csv",
        &["world", "neighbors"],
        graph.iter().enumerate().map(|(i, nb)| {
            vec![
                ids.get(i).cloned().unwrap_or_else(|| i.to_string()),
                nb.iter().map(|&j| ids.get(j).cloned().unwrap_or_else(|| j.to_string())).collect::<Vec<_>>().join(" "),
            ]
        }),
    )?;
    run.json("knn.json", &value)
}

fn bounds_cmd(run: &mut Run, a: &BoundsArgs, seed: Option<u64>) -> Result<()> {
    let inputs: BoundInputs = load_config(run, &a.config)?;
    let eco = a.ecology.as_ref().map(|p| run.ecology(p)).transpose()?;
    let family: Option<Vec<Partition>> = match &eco {
        Some(e) if a.all_partitions => Some(enumerate_partitions(e.n_worlds())?.collect()),
        Some(e) if !a.partition.is_empty() => {
            Some(a.partition.iter().map(|s| partition_for(e, s)).collect::<Result<_>>()?)
        }
        Some(_) => return Err(usage("--ecology needs --partition or --all-partitions")),
        None if a.all_partitions || !a.partition.is_empty() || a.simulate.is_some() => {
            return Err(usage("--partition, --all-partitions and --simulate need --ecology"))
        }
        None => None,
    };
    let scored = match (&eco, &family) {
        (Some(e), Some(f)) => Some(
            f.iter()
                .map(|p| ScoredPartition::score(e, p))
                .collect::<ecolab_core::Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    let bound = bounds::sample_bound(&inputs, scored.as_deref())?;
    let mut report = serde_json::json!({ "inputs": inputs, "c_tau": inputs.c_tau(), "bound": bound });
    if let Some(t) = &bound.per_partition {
        run.csv(
            "bound_terms.csv",
            &["partition", "excess", "veridical", "rho", "n_term", "radius"],
            t.iter().map(|t| {
                vec![
                    t.partition.to_string(),
                    t.excess.to_string(),
                    t.veridical.to_string(),
                    t.rho.to_string(),
                    t.n_term.to_string(),
                    t.radius.to_string(),
                ]
            }),
        )?;
    }
    if let (Some(reps), Some(e), Some(f)) = (a.simulate, &eco, &family) {
        let seed = resolve_seed(seed, None)?;
        run.set_seed(seed);
        let sim = bounds::simulate_miscertification(e, f, bound.n as usize, inputs.eps_opt, reps, seed)?;
        println!("mis-certification rate {} over {} resamples", sim.rate, sim.reps);
        report["miscertification"] = serde_json::to_value(sim)?;
    }
    println!("certified sample size n = {}", bound.n);
    run.json("bounds.json", &report)
}

fn family_arg(run: &mut Run, s: &str) -> Result<DecoderFamily> {
    Ok(match s {
        "bayes_full" => DecoderFamily::BayesFull,
        "context_pooled" => DecoderFamily::ContextPooled,
        path => load_config(run, Path::new(path))?,
    })
}

fn gap(run: &mut Run, a: &GapArgs) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let p = partition_for(&e, &a.partition)?;
    let fam = family_arg(run, &a.family)?;
    match &a.outer {
        Some(o) => {
            let outer = family_arg(run, o)?;
            let r = bounds::nesting_check(&e, &p, &fam, &outer)?;
            println!(
                "Γ {} → {}; monotone: {}",
                r.inner.gap, r.outer.gap, r.monotone
            );
            run.json("gap.json", &r)
        }
        None => {
            let r = bounds::decoder_gap(&e, &p, &fam)?;
            println!("loss {:.6} = floor {:.6} + excess {:.6} + gap {:.6}", r.loss, r.floor, r.excess, r.gap);
            run.json("gap.json", &r)
        }
    }
}

fn capacity(run: &mut Run, a: &CapacityArgs) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let set = a.partition.iter().map(|s| partition_for(&e, s)).collect::<Result<Vec<_>>>()?;
    let r = bounds::capacity_check(&e, &set)?;
    println!("feasible: {}; min excess {}", r.feasible, r.min_excess);
    run.json("capacity.json", &r)
}

fn generalist(run: &mut Run, a: &GeneralistArgs) -> Result<()> {
    let tasks = a.ecology.iter().map(|p| run.ecology(p)).collect::<Result<Vec<_>>>()?;
    let p = partition_for(&tasks[0], &a.partition)?;
    let r = bounds::generalist_specialist(&tasks, &p)?;
    run.csv(
        "missed_pairs.csv",
        &["task", "a", "b", "bound", "cell_excess", "task_excess", "holds", "tight"],
        r.missed_pairs.iter().map(|m| {
            vec![
                m.task.to_string(),
                m.a.clone(),
                m.b.clone(),
                m.bound.to_string(),
                m.cell_excess.to_string(),
                m.task_excess.to_string(),
                m.holds.to_string(),
                m.tight.map(|t| t.to_string()).unwrap_or_default(),
            ]
        }),
    )?;
    println!("mixture excess {}; per task {:?}", r.mixture_excess, r.per_task_excess);
    run.json("generalist.json", &r)
}

fn off_ecology(run: &mut Run, a: &OffEcologyArgs) -> Result<()> {
    let train = run.ecology(&a.train)?;
    let probe = run.ecology(&a.probe)?;
    let (x, y) = parse::pair(&a.pair)?;
    if a.witness {
        let w = bounds::nonident_witness(&train, &probe, (&x, &y))?;
        println!("witness on {} context(s); probe divergence {}", w.contexts.len(), w.probe_divergence);
        run.json("witness.json", &w)?;
    }
    let r = bounds::off_ecology_bound(&train, &probe, (&x, &y))?;
    println!("probe excess {} ≥ bound {}", r.actual, r.bound);
    run.json("off_ecology.json", &r)
}

fn ingest_config(run: &mut Run, f: &IngestFlags, seed: Option<u64>) -> Result<IngestConfig> {
    let (mut cfg, file_seed) = match &f.config {
        Some(p) => {
            let raw: serde_json::Value = load_config(run, p)?;
            let file_seed = raw.get("seed").and_then(serde_json::Value::as_u64);
            let cfg: IngestConfig = serde_json::from_value(raw)
                .map_err(|e| ecolab_core::Error::Parse(format!("{}: {e}", p.display())))?;
            (cfg, file_seed)
        }
        None => (IngestConfig::default(), None),
    };
    if let Some(v) = f.context_length {
        cfg.context_length = v;
    }
    if let Some(v) = f.max_contexts {
        cfg.max_contexts = v;
    }
    if let Some(v) = f.smoothing {
        cfg.smoothing = v;
    }
    if let Some(v) = &f.vocab {
        cfg.vocab_mode = VocabMode::Explicit(v.chars().collect());
    }
    if let Some(v) = f.holdout_fraction {
        cfg.holdout_fraction = v;
    }
    cfg.allow_unseen_worlds |= f.allow_unseen_worlds;
    cfg.seed = resolve_seed(seed, file_seed)?;
    run.set_seed(cfg.seed);
    Ok(cfg)
}

fn world_sources(run: &mut Run, specs: &[String]) -> Result<Vec<WorldSource>> {
    specs
        .iter()
        .map(|s| {
            let (id, files) = parse::world_spec(s)?;
            for f in &files {
                run.read(f)?;
            }
            Ok(WorldSource::files(id, files))
        })
        .collect()
}

fn ingest_cmd(run: &mut Run, a: &IngestArgs, seed: Option<u64>) -> Result<()> {
    let cfg = ingest_config(run, &a.flags, seed)?;
    let worlds = world_sources(run, &a.worlds)?;
    let emp = ingest::ingest(&worlds, &cfg)?;
    let mut text = emp.ecology.to_json_string();
    text.push('\n');
    run.text("ecology.json", &text)?;
    run.json("provenance.json", &emp.provenance)?;
    let q = emp.ecology.quotient_partition(0.0)?;
    println!(
        "{} worlds, {} contexts ({:.1}% of transitions retained); quotient has {} cells",
        emp.ecology.n_worlds(),
        emp.ecology.n_contexts(),
        100.0 * emp.provenance.truncation.retained_mass,
        q.cell_count()
    );
    Ok(())
}

fn probe(run: &mut Run, a: &ProbeArgs, seed: Option<u64>) -> Result<()> {
    let cfg = ingest_config(run, &a.flags, seed)?;
    let worlds = world_sources(run, &a.worlds)?;
    let probes = world_sources(run, &a.probes)?;
    let train = ingest::ingest(&worlds, &cfg).context("building the training ecology")?;
    let reports = ingest::off_ecology_probe(&train, &probes, &cfg)?;
    run.csv(
        "probe.csv",
        &["probe", "nearest", "sigma2", "bound", "actual", "holds", "overlap_tokens"],
        reports.iter().map(|r| {
            vec![
                r.probe.clone(),
                r.nearest.clone(),
                r.sigma2.to_string(),
                r.bound.to_string(),
                r.actual.to_string(),
                r.holds.to_string(),
                r.overlap_tokens.to_string(),
            ]
        }),
    )?;
    for r in &reports {
        println!("{:>12}  nearest {:<8} excess {:.6}", r.probe, r.nearest, r.actual);
    }
    run.json("probe.json", &reports)
}

fn validate(run: &mut Run, a: &ValidateArgs) -> Result<()> {
    let e = run.ecology(&a.ecology)?;
    let mut report = serde_json::json!({
        "worlds": e.n_worlds(),
        "contexts": e.n_contexts(),
        "vocab": e.vocab_len(),
        "valid": true,
    });
    if let Some(s) = &a.partition {
        let p = partition_for(&e, s)?;
        report["partition"] = serde_json::to_value(&p)?;
    }
    println!(
        "valid ecology: {} worlds, {} contexts, {} tokens",
        e.n_worlds(),
        e.n_contexts(),
        e.vocab_len()
    );
    run.json("validate.json", &report)
}
