//! Certification and comparison bounds: finite-class sample sizes, decoder
//! gaps, the capacity criterion, generalist-vs-specialist excess, and
//! off-ecology bounds with non-identifiability witnesses.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ecology::Ecology;
use crate::error::{Error, Result};
use crate::info::{cross_entropy, js2, kl};
use crate::partition::{complexity, Partition};

/// Excess at or below this counts as veridical.
pub const VERIDICAL_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Sample bounds

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertPrior {
    Uniform,
    /// `ρ(p) ∝ exp(−β₀ H(p(W)))`, normalized over the supplied partitions.
    Entropic { beta0: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundInputs {
    pub tau: f64,
    /// `C_τ = ln(1/τ)`; derived from `tau` when omitted.
    #[serde(default)]
    pub c_tau: Option<f64>,
    pub gamma: f64,
    pub eps_opt: f64,
    pub m_theta: u64,
    pub alpha_conf: f64,
    pub prior: CertPrior,
}

impl BoundInputs {
    pub fn c_tau(&self) -> f64 {
        self.c_tau.unwrap_or(-self.tau.ln())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Validation(format!("tau = {} must lie in (0, 1)", self.tau)));
        }
        if let Some(c) = self.c_tau {
            if (c + self.tau.ln()).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "c_tau = {c} does not equal ln(1/tau) = {}",
                    -self.tau.ln()
                )));
            }
        }
        if !(self.alpha_conf > 0.0 && self.alpha_conf < 1.0) {
            return Err(Error::Validation("alpha_conf must lie in (0, 1)".into()));
        }
        if self.m_theta == 0 {
            return Err(Error::Validation("m_theta must be positive".into()));
        }
        if !(self.eps_opt >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Validation("eps_opt must be nonnegative and gamma finite".into()));
        }
        if let CertPrior::Entropic { beta0 } = self.prior {
            if !(beta0.is_finite() && beta0 >= 0.0) {
                return Err(Error::Validation("beta0 must be nonnegative".into()));
            }
        }
        if self.gamma <= self.eps_opt {
            return Err(Error::NoFiniteCertificate {
                gamma: self.gamma,
                eps_opt: self.eps_opt,
            });
        }
        Ok(())
    }
}

/// A candidate encoding with its excess.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScoredPartition {
    pub partition: Partition,
    pub excess: f64,
    /// Complexity `H(p(W))`, needed by the entropic prior.
    pub complexity: f64,
}

impl ScoredPartition {
    pub fn score(e: &Ecology, p: &Partition) -> Result<Self> {
        Ok(Self {
            excess: e.excess(p)?,
            complexity: complexity(p, e.prior())?,
            partition: p.clone(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionTerm {
    pub partition: Partition,
    pub excess: f64,
    pub veridical: bool,
    pub rho: f64,
    /// `N_v` or `N_p`.
    pub n_term: f64,
    /// Concentration radius `η_ρ(p)` at the certified `n`.
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleBound {
    pub n: u64,
    /// The bound before rounding up.
    pub n_exact: f64,
    pub log_term: f64,
    pub per_partition: Option<Vec<PartitionTerm>>,
}

fn radius(c_tau: f64, log_inv_rho: f64, alpha: f64, n: f64) -> f64 {
    c_tau * ((log_inv_rho + (2.0 / alpha).ln()) / (2.0 * n)).sqrt()
}

/// Sample size that certifies veridicality with probability `1 − α`.
pub fn sample_bound(inputs: &BoundInputs, partitions: Option<&[ScoredPartition]>) -> Result<SampleBound> {
    inputs.validate()?;
    let c = inputs.c_tau();
    let alpha = inputs.alpha_conf;
    let scale = 2.0 * c * c / (inputs.gamma - inputs.eps_opt).powi(2);
    let uniform_log = |m: f64| (2.0 * m).ln() + (1.0 / alpha).ln();

    let Some(set) = partitions else {
        if let CertPrior::Entropic { .. } = inputs.prior {
            return Err(Error::Precondition(
                "the entropic prior needs an explicit partition set".into(),
            ));
        }
        let log_term = uniform_log(inputs.m_theta as f64);
        let n_exact = scale * log_term;
        return Ok(SampleBound {
            n: n_exact.ceil() as u64,
            n_exact,
            log_term,
            per_partition: None,
        });
    };
    if set.is_empty() {
        return Err(Error::Precondition("partition set is empty".into()));
    }
    if !set.iter().any(|s| s.excess <= VERIDICAL_TOL) {
        return Err(Error::Precondition("no veridical partition in the supplied set".into()));
    }
    if let Some(s) = set
        .iter()
        .find(|s| s.excess > VERIDICAL_TOL && s.excess < inputs.gamma - 1e-12)
    {
        return Err(Error::Validation(format!(
            "gamma = {} exceeds the excess {} of non-veridical partition {}",
            inputs.gamma, s.excess, s.partition
        )));
    }
    let log_inv_rho: Vec<f64> = match inputs.prior {
        CertPrior::Uniform => vec![(inputs.m_theta as f64).ln(); set.len()],
        CertPrior::Entropic { beta0 } => {
            // log Z via log-sum-exp for stability.
            let a: Vec<f64> = set.iter().map(|s| -beta0 * s.complexity).collect();
            let top = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_z = top + a.iter().map(|x| (x - top).exp()).sum::<f64>().ln();
            a.iter().map(|x| log_z - x).collect()
        }
    };
    let log2a = (2.0 / alpha).ln();
    let terms: Vec<(bool, f64)> = set
        .iter()
        .zip(&log_inv_rho)
        .map(|(s, &l)| {
            let veridical = s.excess <= VERIDICAL_TOL;
            let base = l + log2a;
            let n_term = if veridical {
                base
            } else {
                base * (inputs.gamma / s.excess).powi(2)
            };
            (veridical, n_term)
        })
        .collect();
    let log_term = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let n_exact = scale * log_term;
    let n = n_exact.ceil() as u64;
    let per_partition = set
        .iter()
        .zip(&log_inv_rho)
        .zip(&terms)
        .map(|((s, &l), &(veridical, n_term))| PartitionTerm {
            partition: s.partition.clone(),
            excess: s.excess,
            veridical,
            rho: (-l).exp(),
            n_term,
            radius: radius(c, l, alpha, n as f64),
        })
        .collect();
    Ok(SampleBound {
        n,
        n_exact,
        log_term,
        per_partition: Some(per_partition),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MisCertification {
    pub n: usize,
    pub reps: usize,
    pub failures: usize,
    pub rate: f64,
}

/// Empirical rate at which a worst-case learner certifies a non-veridical
/// encoding: any non-veridical member whose empirical loss under its Bayes
/// decoder is within `eps_opt` of the best counts as a failure.
pub fn simulate_miscertification(
    e: &Ecology,
    family: &[Partition],
    n: usize,
    eps_opt: f64,
    reps: usize,
    seed: u64,
) -> Result<MisCertification> {
    if family.is_empty() || n == 0 {
        return Err(Error::Precondition("need a nonempty family and n ≥ 1".into()));
    }
    let reports = family
        .iter()
        .map(|p| e.decompose(p))
        .collect::<Result<Vec<_>>>()?;
    let veridical: Vec<bool> = reports.iter().map(|r| r.excess <= VERIDICAL_TOL).collect();
    let world = WeightedIndex::new(e.prior()).map_err(|err| Error::Validation(err.to_string()))?;
    let masses: Vec<f64> = e.contexts().iter().map(|c| c.mass).collect();
    let context = WeightedIndex::new(&masses).map_err(|err| Error::Validation(err.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut totals = vec![0.0; family.len()];
    for _ in 0..reps {
        totals.iter_mut().for_each(|t| *t = 0.0);
        for _ in 0..n {
            let w = world.sample(&mut rng);
            let c = context.sample(&mut rng);
            let y = WeightedIndex::new(e.row(w, c))
                .expect("rows are distributions")
                .sample(&mut rng);
            for ((t, p), r) in totals.iter_mut().zip(family).zip(&reports) {
                *t -= r.decoder[p.labels()[w]][c][y].ln();
            }
        }
        let best = totals.iter().copied().fold(f64::INFINITY, f64::min);
        if totals
            .iter()
            .zip(&veridical)
            .any(|(&t, &v)| !v && t / n as f64 <= best / n as f64 + eps_opt)
        {
            failures += 1;
        }
    }
    Ok(MisCertification {
        n,
        reps,
        failures,
        rate: failures as f64 / reps as f64,
    })
}

// ---------------------------------------------------------------------------
// Decoder families

/// `table[cell][context id]` is a distribution over the vocabulary.
pub type DecoderTable = BTreeMap<usize, BTreeMap<String, Vec<f64>>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderFamily {
    /// Any decoder of (cell, context): the Bayes decoder is a member.
    BayesFull,
    /// Decoders of the cell only; the best member pools over contexts.
    ContextPooled,
    /// A single fixed decoder.
    ExplicitTable { table: DecoderTable },
}

impl DecoderFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DecoderFamily::BayesFull => "bayes_full",
            DecoderFamily::ContextPooled => "context_pooled",
            DecoderFamily::ExplicitTable { .. } => "explicit_table",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecoderGapReport {
    pub family: String,
    pub floor: f64,
    pub excess: f64,
    /// Best loss within the family.
    pub loss: f64,
    /// `Γ = Σ_c m(c) Σ_x π_x KL(P̄_x(·|c) ‖ q_x(·|c))`.
    pub gap: f64,
}

/// The best decoder of `fam` for encoding `p`, as `q[cell][context]`.
fn family_decoder(e: &Ecology, p: &Partition, fam: &DecoderFamily, bayes: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<Vec<f64>>>> {
    let n_c = e.n_contexts();
    match fam {
        DecoderFamily::BayesFull => Ok(bayes.to_vec()),
        DecoderFamily::ContextPooled => Ok(bayes
            .iter()
            .map(|rows| {
                let mut pooled = vec![0.0; e.vocab_len()];
                for (c, row) in rows.iter().enumerate() {
                    for (o, &x) in pooled.iter_mut().zip(row) {
                        *o += e.mass(c) * x;
                    }
                }
                vec![pooled; n_c]
            })
            .collect()),
        DecoderFamily::ExplicitTable { table } => {
            let mut out = Vec::with_capacity(p.cell_count());
            for x in 0..p.cell_count() {
                let mut rows = Vec::with_capacity(n_c);
                for (c, ctx) in e.contexts().iter().enumerate() {
                    let q = table.get(&x).and_then(|t| t.get(&ctx.id));
                    let q = match q {
                        Some(q) => q.clone(),
                        None if ctx.mass == 0.0 => bayes[x][c].clone(),
                        None => {
                            return Err(Error::Validation(format!(
                                "decoder table has no row for cell {x}, context `{}`",
                                ctx.id
                            )))
                        }
                    };
                    if q.len() != e.vocab_len()
                        || q.iter().any(|&v| !(v.is_finite() && v >= 0.0))
                        || (q.iter().sum::<f64>() - 1.0).abs() > 1e-9
                    {
                        return Err(Error::Validation(format!(
                            "decoder table row for cell {x}, context `{}` is not a distribution",
                            ctx.id
                        )));
                    }
                    rows.push(q);
                }
                out.push(rows);
            }
            Ok(out)
        }
    }
}

pub fn decoder_gap(e: &Ecology, p: &Partition, fam: &DecoderFamily) -> Result<DecoderGapReport> {
    let rep = e.decompose(p)?;
    let q = family_decoder(e, p, fam, &rep.decoder)?;
    let cells = p.cells();
    let mut loss = 0.0;
    let mut gap = 0.0;
    for (x, members) in cells.iter().enumerate() {
        let pi_x: f64 = members.iter().map(|&w| e.prior()[w]).sum();
        for c in 0..e.n_contexts() {
            let m = e.mass(c);
            if m == 0.0 {
                continue;
            }
            let k = kl(&rep.decoder[x][c], &q[x][c]);
            if !k.is_finite() {
                return Err(Error::Validation(format!(
                    "decoder assigns zero probability to an observed token (cell {x}, context `{}`)",
                    e.contexts()[c].id
                )));
            }
            gap += m * pi_x * k;
            for &w in members {
                loss += m * e.prior()[w] * cross_entropy(e.row(w, c), &q[x][c]);
            }
        }
    }
    Ok(DecoderGapReport {
        family: fam.name().into(),
        floor: rep.floor,
        excess: rep.excess,
        loss,
        gap,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NestingReport {
    pub inner: DecoderGapReport,
    pub outer: DecoderGapReport,
    /// `L_outer ≤ L_inner` and `Γ_outer ≤ Γ_inner`.
    pub monotone: bool,
}

fn context_independent(table: &DecoderTable) -> bool {
    table.values().all(|rows| {
        let mut it = rows.values();
        match it.next() {
            Some(first) => it.all(|r| r == first),
            None => true,
        }
    })
}

/// Checks that enlarging the decoder class from `inner` to `outer` does not
/// raise the loss or the gap. Rejects pairs that are not nested.
pub fn nesting_check(
    e: &Ecology,
    p: &Partition,
    inner: &DecoderFamily,
    outer: &DecoderFamily,
) -> Result<NestingReport> {
    use DecoderFamily::*;
    let nested = match (inner, outer) {
        (_, BayesFull) => true,
        (ContextPooled, ContextPooled) => true,
        (ExplicitTable { table }, ContextPooled) => context_independent(table),
        (ExplicitTable { table: a }, ExplicitTable { table: b }) => a == b,
        _ => false,
    };
    if !nested {
        return Err(Error::Precondition(format!(
            "non-nested families: {} is not contained in {}",
            inner.name(),
            outer.name()
        )));
    }
    let inner = decoder_gap(e, p, inner)?;
    let outer = decoder_gap(e, p, outer)?;
    let monotone = outer.loss <= inner.loss + 1e-12 && outer.gap <= inner.gap + 1e-12;
    Ok(NestingReport {
        inner,
        outer,
        monotone,
    })
}

// ---------------------------------------------------------------------------
// Capacity

#[derive(Clone, Debug, Serialize)]
pub struct CapacityReport {
    /// Some realizable encoding refines the quotient.
    pub feasible: bool,
    pub floor_attainable: bool,
    pub min_excess: f64,
    pub argmin: Partition,
}

pub fn capacity_check(e: &Ecology, realizable: &[Partition]) -> Result<CapacityReport> {
    if realizable.is_empty() {
        return Err(Error::Precondition("realizable set is empty".into()));
    }
    let q = e.quotient_partition(0.0)?;
    let mut best: Option<(f64, &Partition)> = None;
    let mut feasible = false;
    for p in realizable {
        let ex = e.excess(p)?;
        feasible |= p.refines(&q);
        if best.is_none_or(|(b, _)| ex < b) {
            best = Some((ex, p));
        }
    }
    let (min_excess, argmin) = best.expect("nonempty");
    Ok(CapacityReport {
        feasible,
        floor_attainable: min_excess <= VERIDICAL_TOL,
        min_excess,
        argmin: argmin.clone(),
    })
}

// ---------------------------------------------------------------------------
// Generalist vs specialist

/// `(π_i + π_j) · E_c[JS_λ(P_i, P_j)]` with `λ = π_i / (π_i + π_j)`.
pub fn pair_merge_bound(e: &Ecology, i: usize, j: usize) -> f64 {
    let (pi, pj) = (e.prior()[i], e.prior()[j]);
    let lambda = pi / (pi + pj);
    (pi + pj)
        * (0..e.n_contexts())
            .filter(|&c| e.mass(c) > 0.0)
            .map(|c| e.mass(c) * js2(lambda, e.row(i, c), e.row(j, c)))
            .sum::<f64>()
}

#[derive(Clone, Debug, Serialize)]
pub struct MissedPair {
    pub task: usize,
    pub a: String,
    pub b: String,
    pub bound: f64,
    pub task_excess: f64,
    /// Excess of the cell holding the pair, under this task.
    pub cell_excess: f64,
    pub holds: bool,
    /// The cell is exactly the pair and its excess equals the bound.
    pub tight: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneralistReport {
    pub per_task_excess: Vec<f64>,
    pub mixture_excess: f64,
    /// Zero mixture excess forces zero excess on every task.
    pub zero_transfer_holds: bool,
    pub missed_pairs: Vec<MissedPair>,
}

/// Uniform mixture `(1/T) Σ_t D^(t)` built by successive expansion.
pub fn uniform_mixture(ecologies: &[Ecology]) -> Result<Ecology> {
    let (first, rest) = ecologies
        .split_first()
        .ok_or_else(|| Error::Precondition("need at least one task".into()))?;
    let mut mix = first.clone();
    for (t, e) in rest.iter().enumerate() {
        mix = mix.expand(e, 1.0 / (t + 2) as f64)?;
    }
    Ok(mix)
}

pub fn generalist_specialist(ecologies: &[Ecology], p: &Partition) -> Result<GeneralistReport> {
    let mix = uniform_mixture(ecologies)?;
    let per_task_excess = ecologies
        .iter()
        .map(|e| e.excess(p))
        .collect::<Result<Vec<_>>>()?;
    let mixture_excess = mix.excess(p)?;
    let zero_transfer_holds =
        mixture_excess > VERIDICAL_TOL || per_task_excess.iter().all(|&x| x <= 1e-10);
    let cells = p.cells();
    let mut missed_pairs = Vec::new();
    for (t, e) in ecologies.iter().enumerate() {
        for members in &cells {
            let cell_excess = e.set_excess(members);
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    if e.task_distance_idx(i, j) <= 0.0 {
                        continue;
                    }
                    let bound = pair_merge_bound(e, i, j);
                    missed_pairs.push(MissedPair {
                        task: t,
                        a: e.worlds()[i].clone(),
                        b: e.worlds()[j].clone(),
                        bound,
                        task_excess: per_task_excess[t],
                        cell_excess,
                        holds: per_task_excess[t] >= bound - 1e-12 && cell_excess >= bound - 1e-12,
                        tight: (members.len() == 2).then(|| (cell_excess - bound).abs() <= 1e-10),
                    });
                }
            }
        }
    }
    Ok(GeneralistReport {
        per_task_excess,
        mixture_excess,
        zero_transfer_holds,
        missed_pairs,
    })
}

// ---------------------------------------------------------------------------
// Off-ecology

#[derive(Clone, Debug, Serialize)]
pub struct OffEcologyReport {
    pub a: String,
    pub b: String,
    pub train_quotient: Partition,
    pub bound: f64,
    /// Excess of the training quotient under the probe.
    pub actual: f64,
    pub holds: bool,
}

fn pair_indices(e: &Ecology, pair: (&str, &str)) -> Result<(usize, usize)> {
    let (i, j) = (e.world_index(pair.0)?, e.world_index(pair.1)?);
    if i == j {
        return Err(Error::InvalidArgument("pair must name two distinct worlds".into()));
    }
    Ok((i, j))
}

pub fn off_ecology_bound(train: &Ecology, probe: &Ecology, pair: (&str, &str)) -> Result<OffEcologyReport> {
    train.require_shared(probe, "off-ecology bound")?;
    let (i, j) = pair_indices(train, pair)?;
    let q = train.quotient_partition(0.0)?;
    if q.labels()[i] != q.labels()[j] {
        return Err(Error::Precondition(format!(
            "pair ({}, {}) is not merged by the training quotient",
            pair.0, pair.1
        )));
    }
    if probe.task_distance_idx(i, j) <= 0.0 {
        return Err(Error::Precondition(format!(
            "pair ({}, {}) is not separated by the probe",
            pair.0, pair.1
        )));
    }
    let bound = pair_merge_bound(probe, i, j);
    let actual = probe.excess(&q)?;
    Ok(OffEcologyReport {
        a: pair.0.into(),
        b: pair.1.into(),
        train_quotient: q,
        bound,
        actual,
        holds: actual >= bound - 1e-12 && bound > 0.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    /// Probe contexts with zero training mass on which the pair differs.
    pub contexts: Vec<String>,
    pub cell: usize,
    pub q1: DecoderTable,
    pub q2: DecoderTable,
    pub train_loss1: f64,
    pub train_loss2: f64,
    /// `None` when the decoder gives an observed probe token zero probability.
    pub probe_loss1: Option<f64>,
    pub probe_loss2: Option<f64>,
    /// Largest total-variation distance between `q1` and `q2` on a witness context.
    pub probe_divergence: f64,
}

fn table_loss(e: &Ecology, p: &Partition, q: &DecoderTable) -> Option<f64> {
    let mut loss = 0.0;
    for c in 0..e.n_contexts() {
        let m = e.mass(c);
        if m == 0.0 {
            continue;
        }
        let id = &e.contexts()[c].id;
        for w in 0..e.n_worlds() {
            let row = &q[&p.labels()[w]][id];
            let ce = cross_entropy(e.row(w, c), row);
            if !ce.is_finite() {
                return None;
            }
            loss += m * e.prior()[w] * ce;
        }
    }
    Some(loss)
}

/// Two decoders that agree on the training ecology but disagree off it.
pub fn nonident_witness(train: &Ecology, probe: &Ecology, pair: (&str, &str)) -> Result<Witness> {
    train.require_shared(probe, "non-identifiability witness")?;
    let (i, j) = pair_indices(train, pair)?;
    if train.task_distance_idx(i, j) == 0.0 && probe.task_distance_idx(i, j) == 0.0 {
        return Err(Error::Precondition(format!(
            "pair ({}, {}) has identical rows everywhere",
            pair.0, pair.1
        )));
    }
    let q = train.quotient_partition(0.0)?;
    let cell = q.labels()[i];
    if q.labels()[j] != cell {
        return Err(Error::Precondition(format!(
            "pair ({}, {}) is separated by the training ecology",
            pair.0, pair.1
        )));
    }
    let train_mass = |id: &str| train.context_index(id).map_or(0.0, |c| train.mass(c));
    let witness: Vec<usize> = (0..probe.n_contexts())
        .filter(|&c| {
            let id = &probe.contexts()[c].id;
            train_mass(id) < 1e-15 && probe.mass(c) > 0.0 && probe.row(i, c) != probe.row(j, c)
        })
        .collect();
    if witness.is_empty() {
        return Err(Error::Precondition("no zero-mass separating context".into()));
    }

    let mut base = DecoderTable::new();
    for (x, members) in q.cells().iter().enumerate() {
        let rows = base.entry(x).or_default();
        for c in 0..probe.n_contexts() {
            rows.insert(probe.contexts()[c].id.clone(), probe.cell_average(members, c).1);
        }
        for c in 0..train.n_contexts() {
            rows.insert(train.contexts()[c].id.clone(), train.cell_average(members, c).1);
        }
    }
    let (mut q1, mut q2) = (base.clone(), base);
    let mut probe_divergence: f64 = 0.0;
    for &c in &witness {
        let id = probe.contexts()[c].id.clone();
        let (r1, r2) = (probe.row(i, c).to_vec(), probe.row(j, c).to_vec());
        let tv = 0.5 * r1.iter().zip(&r2).map(|(a, b)| (a - b).abs()).sum::<f64>();
        probe_divergence = probe_divergence.max(tv);
        q1.get_mut(&cell).expect("cell").insert(id.clone(), r1);
        q2.get_mut(&cell).expect("cell").insert(id, r2);
    }
    let train_loss1 = table_loss(train, &q, &q1).expect("Bayes decoder on training contexts");
    let train_loss2 = table_loss(train, &q, &q2).expect("Bayes decoder on training contexts");
    Ok(Witness {
        contexts: witness.iter().map(|&c| probe.contexts()[c].id.clone()).collect(),
        cell,
        train_loss1,
        train_loss2,
        probe_loss1: table_loss(probe, &q, &q1),
        probe_loss2: table_loss(probe, &q, &q2),
        q1,
        q2,
        probe_divergence,
    })
}
