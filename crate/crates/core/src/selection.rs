//! Replicator-mutator and Wright–Fisher dynamics over encodings and recipe
//! traits, with selection-stage diagnostics and two-ecology injection.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ecology::Ecology;
use crate::error::{Error, Result};
use crate::partition::{complexity, Partition};

/// Two-sided 95% normal quantile used for residual coverage.
pub const Z95: f64 = 1.959963984540054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Genotype {
    Partition { labels: Partition },
    Recipe { alpha: f64, zeta: String },
}

impl Genotype {
    pub fn partition(p: Partition) -> Self {
        Genotype::Partition { labels: p }
    }

    pub fn recipe(alpha: f64, zeta: impl Into<String>) -> Self {
        Genotype::Recipe {
            alpha,
            zeta: zeta.into(),
        }
    }
}

impl std::fmt::Display for Genotype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Genotype::Partition { labels } => write!(f, "[{labels}]"),
            Genotype::Recipe { alpha, zeta } => write!(f, "(alpha={alpha}, zeta={zeta})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub genotypes: Vec<Genotype>,
    pub freqs: Vec<f64>,
    pub generation: u64,
    pub seed: u64,
}

impl Population {
    /// Merges duplicate genotypes and checks that `freqs` is a distribution.
    pub fn new(genotypes: Vec<Genotype>, freqs: Vec<f64>, seed: u64) -> Result<Self> {
        if genotypes.is_empty() || genotypes.len() != freqs.len() {
            return Err(Error::Dimension(format!(
                "{} genotypes with {} frequencies",
                genotypes.len(),
                freqs.len()
            )));
        }
        if freqs.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::Validation("frequencies must be nonnegative".into()));
        }
        let s: f64 = freqs.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("frequencies sum to {s}, expected 1")));
        }
        let mut pop = Self {
            genotypes: Vec::new(),
            freqs: Vec::new(),
            generation: 0,
            seed,
        };
        for (g, x) in genotypes.into_iter().zip(freqs) {
            pop.add(g, x / s);
        }
        Ok(pop)
    }

    fn add(&mut self, g: Genotype, x: f64) {
        match self.genotypes.iter().position(|h| *h == g) {
            Some(i) => self.freqs[i] += x,
            None => {
                self.genotypes.push(g);
                self.freqs.push(x);
            }
        }
    }

    fn renormalized(mut self) -> Self {
        let s: f64 = self.freqs.iter().sum();
        self.freqs.iter_mut().for_each(|x| *x /= s);
        self
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.generation);
        rng
    }
}

// ---------------------------------------------------------------------------
// Mutation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MutationKernel {
    /// No mutation.
    Stay,
    /// One-step lattice moves, each uniform over the legal neighbors.
    Partition { split: f64, merge: f64, stay: f64 },
    /// `α ← α + U(−step, step)`, reflected (or clamped) into `[0, 1]`.
    Trait {
        step: f64,
        #[serde(default = "yes")]
        reflect: bool,
    },
}

fn yes() -> bool {
    true
}

impl MutationKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MutationKernel::Stay => Ok(()),
            MutationKernel::Partition { split, merge, stay } => {
                if [split, merge, stay].iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                    return Err(Error::Validation("move probabilities must be nonnegative".into()));
                }
                let s = split + merge + stay;
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::Validation(format!(
                        "move probabilities sum to {s}, expected 1"
                    )));
                }
                Ok(())
            }
            MutationKernel::Trait { step, .. } => {
                if !(step.is_finite() && step > 0.0) {
                    return Err(Error::Validation(format!("trait step {step} must be positive")));
                }
                Ok(())
            }
        }
    }

    /// Exact offspring distribution of a parent, for the expectation mode.
    fn offspring_law(&self, g: &Genotype) -> Result<Vec<(Genotype, f64)>> {
        match (self, g) {
            (MutationKernel::Stay, _) => Ok(vec![(g.clone(), 1.0)]),
            (MutationKernel::Partition { split, merge, stay }, Genotype::Partition { labels }) => {
                let mut out = vec![(g.clone(), *stay)];
                for (prob, nbrs) in [
                    (*split, labels.split_neighbors()),
                    (*merge, labels.merge_neighbors()),
                ] {
                    if nbrs.is_empty() {
                        out[0].1 += prob;
                    } else {
                        let each = prob / nbrs.len() as f64;
                        out.extend(nbrs.into_iter().map(|p| (Genotype::partition(p), each)));
                    }
                }
                Ok(out)
            }
            (MutationKernel::Trait { .. }, _) => Err(Error::InvalidArgument(
                "trait mutation has a continuous law; use the sampled mode".into(),
            )),
            _ => Err(Error::Validation("kernel does not match genotype kind".into())),
        }
    }

    fn mutate<R: Rng + ?Sized>(&self, g: &Genotype, rng: &mut R) -> Result<Genotype> {
        match (self, g) {
            (MutationKernel::Stay, _) => Ok(g.clone()),
            (MutationKernel::Partition { split, merge, .. }, Genotype::Partition { labels }) => {
                let u: f64 = rng.random();
                let nbrs = if u < *split {
                    labels.split_neighbors()
                } else if u < split + merge {
                    labels.merge_neighbors()
                } else {
                    Vec::new()
                };
                if nbrs.is_empty() {
                    Ok(g.clone())
                } else {
                    let i = rng.random_range(0..nbrs.len());
                    Ok(Genotype::partition(nbrs[i].clone()))
                }
            }
            (MutationKernel::Trait { step, reflect }, Genotype::Recipe { alpha, zeta }) => {
                let a = alpha + rng.random_range(-step..=*step);
                let a = if *reflect { reflect_unit(a) } else { a.clamp(0.0, 1.0) };
                Ok(Genotype::recipe(a, zeta.clone()))
            }
            _ => Err(Error::Validation("kernel does not match genotype kind".into())),
        }
    }
}

/// Folds `x` into `[0, 1]` by reflection at both ends.
fn reflect_unit(x: f64) -> f64 {
    let y = x.rem_euclid(2.0);
    if y > 1.0 {
        2.0 - y
    } else {
        y
    }
}

// ---------------------------------------------------------------------------
// Risk and fitness

/// Evaluation risk of a recipe `(α, ζ)`.
#[derive(Clone, Debug)]
pub enum RecipeRisk {
    /// `Δ = intercept + offset(ζ) − slope·α`.
    Linear {
        intercept: f64,
        slope: f64,
        offsets: BTreeMap<String, f64>,
    },
    /// The encoding at `α` merges worlds joined by `σ²_α ≤ eps` edges in the
    /// mixture of `base` and `aux`; the risk is its excess under `aux`.
    Injection {
        base: Ecology,
        aux: Ecology,
        eps: f64,
    },
}

impl RecipeRisk {
    pub fn risk(&self, alpha: f64, zeta: &str) -> Result<f64> {
        match self {
            RecipeRisk::Linear {
                intercept,
                slope,
                offsets,
            } => Ok(intercept + offsets.get(zeta).copied().unwrap_or(0.0) - slope * alpha),
            RecipeRisk::Injection { base, aux, eps } => {
                let p = injected_encoding(base, aux, alpha, *eps)?;
                aux.excess(&p)
            }
        }
    }

    fn max_risk(&self) -> f64 {
        match self {
            RecipeRisk::Linear {
                intercept,
                slope,
                offsets,
            } => {
                let off = offsets.values().copied().fold(0.0, f64::max);
                intercept + off + (-slope).max(0.0)
            }
            RecipeRisk::Injection { aux, .. } => aux
                .excess(&Partition::all_merged(aux.n_worlds()))
                .expect("matching size"),
        }
    }
}

/// Connected components of `σ²_α ≤ eps` in `(1−α)·base + α·aux`.
pub fn injected_encoding(base: &Ecology, aux: &Ecology, alpha: f64, eps: f64) -> Result<Partition> {
    let mixed = base.expand(aux, alpha)?;
    let n = mixed.n_worlds();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while l[r] != r {
            r = l[r];
        }
        l[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if mixed.task_distance_idx(i, j) <= eps {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut label, i)).collect();
    Ok(Partition::canonicalize(&roots))
}

#[derive(Clone, Debug)]
pub enum RiskModel {
    Partition(Ecology),
    Recipe(RecipeRisk),
}

/// Strictly decreasing map from risk to fitness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitnessForm {
    /// `F = C − Δ`; `C` defaults to one plus the largest achievable risk.
    Offset { c: Option<f64> },
    /// `F = exp(−rate·Δ)`.
    NegExp { rate: f64 },
    /// `F = 1 / (1 + Δ)`.
    Reciprocal,
}

#[derive(Clone, Debug)]
pub struct FitnessModel {
    pub risk: RiskModel,
    pub form: FitnessForm,
}

impl FitnessModel {
    pub fn new(risk: RiskModel, form: FitnessForm) -> Result<Self> {
        match &form {
            FitnessForm::NegExp { rate } if !(rate.is_finite() && *rate > 0.0) => {
                return Err(Error::Validation(format!("neg_exp rate {rate} must be positive")))
            }
            FitnessForm::Offset { c: Some(c) } if !c.is_finite() => {
                return Err(Error::Validation("offset must be finite".into()))
            }
            _ => {}
        }
        Ok(Self { risk, form })
    }

    pub fn max_risk(&self) -> f64 {
        match &self.risk {
            // Merging never lowers excess, so the single cell is the worst encoding.
            RiskModel::Partition(e) => e
                .excess(&Partition::all_merged(e.n_worlds()))
                .expect("matching size"),
            RiskModel::Recipe(r) => r.max_risk(),
        }
    }

    pub fn offset(&self) -> Option<f64> {
        match self.form {
            FitnessForm::Offset { c } => Some(c.unwrap_or_else(|| 1.0 + self.max_risk())),
            _ => None,
        }
    }

    pub fn risk(&self, g: &Genotype) -> Result<f64> {
        match (&self.risk, g) {
            (RiskModel::Partition(e), Genotype::Partition { labels }) => e.excess(labels),
            (RiskModel::Recipe(r), Genotype::Recipe { alpha, zeta }) => r.risk(*alpha, zeta),
            _ => Err(Error::Validation(format!(
                "genotype {g} does not match the fitness model"
            ))),
        }
    }

    /// The genotype's trait: complexity `H(p(W))` for encodings, `α` for recipes.
    pub fn trait_value(&self, g: &Genotype) -> Result<f64> {
        match (&self.risk, g) {
            (RiskModel::Partition(e), Genotype::Partition { labels }) => {
                complexity(labels, e.prior())
            }
            (_, Genotype::Recipe { alpha, .. }) => Ok(*alpha),
            _ => Err(Error::Validation(format!(
                "genotype {g} does not match the fitness model"
            ))),
        }
    }

    pub fn fitness(&self, g: &Genotype) -> Result<f64> {
        let r = self.risk(g)?;
        let f = match self.form {
            FitnessForm::Offset { .. } => self.offset().expect("offset form") - r,
            FitnessForm::NegExp { rate } => (-rate * r).exp(),
            FitnessForm::Reciprocal => 1.0 / (1.0 + r),
        };
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::NonpositiveFitness {
                genotype: g.to_string(),
                value: f,
            });
        }
        Ok(f)
    }
}

// ---------------------------------------------------------------------------
// Selection

fn check_lengths(x: &[f64], f: &[f64], t: &[f64]) -> Result<()> {
    if x.len() != f.len() || x.len() != t.len() {
        return Err(Error::Dimension(format!(
            "lengths differ: x {}, f {}, trait {}",
            x.len(),
            f.len(),
            t.len()
        )));
    }
    Ok(())
}

/// Mean trait of the fitness-weighted parents: `Σ x f t / Σ x f`.
pub fn selected_mean(x: &[f64], f: &[f64], t: &[f64]) -> Result<f64> {
    check_lengths(x, f, t)?;
    let fbar: f64 = x.iter().zip(f).map(|(a, b)| a * b).sum();
    if fbar <= 0.0 {
        return Err(Error::ZeroFitness);
    }
    Ok(x.iter().zip(f).zip(t).map(|((a, b), c)| a * b * c).sum::<f64>() / fbar)
}

/// Price selection term `Cov_x(f, t) / f̄`.
pub fn price_delta(x: &[f64], f: &[f64], t: &[f64]) -> Result<f64> {
    check_lengths(x, f, t)?;
    let fbar: f64 = x.iter().zip(f).map(|(a, b)| a * b).sum();
    if fbar <= 0.0 {
        return Err(Error::ZeroFitness);
    }
    let tbar: f64 = x.iter().zip(t).map(|(a, b)| a * b).sum();
    let cov: f64 = x
        .iter()
        .zip(f)
        .zip(t)
        .map(|((a, b), c)| a * (b - fbar) * (c - tbar))
        .sum();
    Ok(cov / fbar)
}

/// Replicator weights `x f / Σ x f`.
pub fn selection_weights(x: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    if x.len() != f.len() {
        return Err(Error::Dimension(format!("{} frequencies, {} fitnesses", x.len(), f.len())));
    }
    let w: Vec<f64> = x.iter().zip(f).map(|(a, b)| a * b).collect();
    let s: f64 = w.iter().sum();
    if !(s > 0.0) {
        return Err(Error::ZeroFitness);
    }
    Ok(w.into_iter().map(|v| v / s).collect())
}

/// Multinomial parent counts: `m` independent draws from `weights`.
pub fn sample_parents<R: Rng + ?Sized>(rng: &mut R, weights: &[f64], m: usize) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(weights).map_err(|_| Error::ZeroFitness)?;
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..m {
        counts[dist.sample(rng)] += 1;
    }
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Infinite population: deterministic replicator-mutator update.
    Expectation,
    /// Finite Wright–Fisher resampling.
    Sampled,
}

/// Selection-stage statistics of one generation.
#[derive(Clone, Debug, Serialize)]
pub struct GenerationRecord {
    pub generation: u64,
    pub mean_risk: f64,
    pub mean_trait: f64,
    pub delta_sel: f64,
    pub expected_delta_sel: f64,
    /// `(Δ − E[Δ]) / sd(Δ)`; absent when the conditional variance is zero.
    pub z: Option<f64>,
}

/// One generation: selection then mutation. Returns the next population and
/// the selection-stage record.
pub fn wf_generation(
    pop: &Population,
    model: &FitnessModel,
    kernel: &MutationKernel,
    popsize: usize,
    mode: Mode,
) -> Result<(Population, GenerationRecord)> {
    kernel.validate()?;
    if popsize == 0 {
        return Err(Error::InvalidArgument("popsize must be at least 1".into()));
    }
    let f = pop
        .genotypes
        .iter()
        .map(|g| model.fitness(g))
        .collect::<Result<Vec<_>>>()?;
    let risk = pop
        .genotypes
        .iter()
        .map(|g| model.risk(g))
        .collect::<Result<Vec<_>>>()?;
    let traits = pop
        .genotypes
        .iter()
        .map(|g| model.trait_value(g))
        .collect::<Result<Vec<_>>>()?;
    let x = &pop.freqs;
    let s = selection_weights(x, &f)?;
    let mean_risk: f64 = x.iter().zip(&risk).map(|(a, b)| a * b).sum();
    let mean_trait: f64 = x.iter().zip(&traits).map(|(a, b)| a * b).sum();
    let sel_risk: f64 = s.iter().zip(&risk).map(|(a, b)| a * b).sum();
    let sel_risk_sq: f64 = s.iter().zip(&risk).map(|(a, b)| a * b * b).sum();
    let expected = sel_risk - mean_risk;

    let mut next = Population {
        genotypes: Vec::new(),
        freqs: Vec::new(),
        generation: pop.generation + 1,
        seed: pop.seed,
    };
    let (delta, z) = match mode {
        Mode::Expectation => {
            for (g, &sg) in pop.genotypes.iter().zip(&s) {
                for (child, q) in kernel.offspring_law(g)? {
                    if q > 0.0 {
                        next.add(child, sg * q);
                    }
                }
            }
            (expected, None)
        }
        Mode::Sampled => {
            let mut rng = pop.rng();
            let counts = sample_parents(&mut rng, &s, popsize)?;
            let m = popsize as f64;
            let parent_risk: f64 = counts
                .iter()
                .zip(&risk)
                .map(|(&n, r)| n as f64 / m * r)
                .sum();
            for (g, &n) in pop.genotypes.iter().zip(&counts) {
                for _ in 0..n {
                    next.add(kernel.mutate(g, &mut rng)?, 1.0 / m);
                }
            }
            let var = ((sel_risk_sq - sel_risk * sel_risk) / m).max(0.0);
            let delta = parent_risk - mean_risk;
            let z = (var > 1e-300).then(|| (delta - expected) / var.sqrt());
            (delta, z)
        }
    };
    Ok((
        next.renormalized(),
        GenerationRecord {
            generation: pop.generation,
            mean_risk,
            mean_trait,
            delta_sel: delta,
            expected_delta_sel: expected,
            z,
        },
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub records: Vec<GenerationRecord>,
    pub final_population: Population,
}

/// Residual calibration over the generations where `z` is defined.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualSummary {
    pub defined: usize,
    pub rms_z: f64,
    pub coverage95: f64,
}

impl Trajectory {
    pub fn residuals(&self) -> ResidualSummary {
        let zs: Vec<f64> = self.records.iter().filter_map(|r| r.z).collect();
        let n = zs.len();
        if n == 0 {
            return ResidualSummary {
                defined: 0,
                rms_z: f64::NAN,
                coverage95: f64::NAN,
            };
        }
        let rms = (zs.iter().map(|z| z * z).sum::<f64>() / n as f64).sqrt();
        let cov = zs.iter().filter(|z| z.abs() <= Z95).count() as f64 / n as f64;
        ResidualSummary {
            defined: n,
            rms_z: rms,
            coverage95: cov,
        }
    }

    /// Sum of the selection-stage changes in mean risk.
    pub fn cumulative_delta_sel(&self) -> f64 {
        self.records.iter().map(|r| r.delta_sel).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub generations: u64,
    pub popsize: usize,
    pub kernel: MutationKernel,
    pub mode: Mode,
    pub seed: u64,
}

pub fn run_evolution(
    model: &FitnessModel,
    initial: &Population,
    cfg: &EvolutionConfig,
) -> Result<Trajectory> {
    let mut pop = initial.clone();
    pop.seed = cfg.seed;
    let mut records = Vec::with_capacity(cfg.generations as usize);
    for _ in 0..cfg.generations {
        let (next, rec) = wf_generation(&pop, model, &cfg.kernel, cfg.popsize, cfg.mode)?;
        records.push(rec);
        pop = next;
    }
    Ok(Trajectory {
        records,
        final_population: pop,
    })
}

// ---------------------------------------------------------------------------
// Injection

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum InjectionThreshold {
    /// Resolved under the mixture exactly when `α > alpha_star`.
    Threshold { alpha_star: f64 },
    /// `σ²` under the base ecology already exceeds `eps`.
    AlreadyResolved,
    /// Even the auxiliary ecology leaves `σ² ≤ eps`.
    NeverResolved,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

/// Threshold from the two endpoint distances of a pair.
pub fn threshold_from_distances(s0: f64, s_nu: f64, eps: f64) -> Result<InjectionThreshold> {
    check_eps(eps)?;
    Ok(if s0 > eps {
        InjectionThreshold::AlreadyResolved
    } else if s_nu <= eps {
        InjectionThreshold::NeverResolved
    } else {
        InjectionThreshold::Threshold {
            alpha_star: (eps - s0) / (s_nu - s0),
        }
    })
}

pub fn injection_threshold(
    e0: &Ecology,
    nu: &Ecology,
    pair: (&str, &str),
    eps: f64,
) -> Result<InjectionThreshold> {
    e0.require_shared(nu, "injection")?;
    let s0 = e0.task_distance(pair.0, pair.1)?;
    let s_nu = nu.task_distance(pair.0, pair.1)?;
    threshold_from_distances(s0, s_nu, eps)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapPair {
    pub a: String,
    pub b: String,
    pub sigma2_base: f64,
    pub sigma2_aux: f64,
    pub sigma2_mixed: f64,
    pub threshold: InjectionThreshold,
}

#[derive(Clone, Debug, Serialize)]
pub struct RescuedSet {
    pub alpha: f64,
    pub eps: f64,
    pub gap: Vec<GapPair>,
    /// Gap pairs with `σ²_α > eps`.
    pub rescued: Vec<(String, String)>,
    /// `σ²_aux ≥ σ²_base` on every gap pair, which makes rescue monotone in α.
    pub dominance: bool,
}

pub fn rescued_set(e0: &Ecology, nu: &Ecology, alpha: f64, eps: f64) -> Result<RescuedSet> {
    check_eps(eps)?;
    let mixed = e0.expand(nu, alpha)?;
    let n = e0.n_worlds();
    let mut gap = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let s0 = e0.task_distance_idx(i, j);
            if s0 > eps {
                continue;
            }
            let s_nu = nu.task_distance_idx(i, j);
            gap.push(GapPair {
                a: e0.worlds()[i].clone(),
                b: e0.worlds()[j].clone(),
                sigma2_base: s0,
                sigma2_aux: s_nu,
                sigma2_mixed: mixed.task_distance_idx(i, j),
                threshold: threshold_from_distances(s0, s_nu, eps)?,
            });
        }
    }
    let rescued = gap
        .iter()
        .filter(|g| g.sigma2_mixed > eps)
        .map(|g| (g.a.clone(), g.b.clone()))
        .collect();
    let dominance = gap.iter().all(|g| g.sigma2_aux >= g.sigma2_base);
    Ok(RescuedSet {
        alpha,
        eps,
        gap,
        rescued,
        dominance,
    })
}
