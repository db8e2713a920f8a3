//! Acceptance suite. Runs with a custom harness so every criterion prints
//! one PASS/FAIL line even when the run succeeds; exits nonzero on any FAIL.
//!
//! Each check recomputes the quantity of interest with a small independent
//! oracle in this file and compares it to the library.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use ecolab_core::bounds::{self, BoundInputs, CertPrior};
use ecolab_core::geometry;
use ecolab_core::ingest::{self, IngestConfig, WorldSource};
use ecolab_core::lab::{self, SweepOptions, TransitionKind};
use ecolab_core::partition::{bipartitions, enumerate_partitions};
use ecolab_core::selection::{
    self, run_evolution, EvolutionConfig, FitnessForm, FitnessModel, Genotype, Mode,
    MutationKernel, Population, RecipeRisk, RiskModel,
};
use ecolab_core::synth::{self, RandomSpec};
use ecolab_core::{Ecology, Partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Oracles

fn h(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn cell_avg(e: &Ecology, members: &[usize], c: usize) -> Vec<f64> {
    let mass: f64 = members.iter().map(|&w| e.prior()[w]).sum();
    let mut out = vec![0.0; e.vocab_len()];
    for &w in members {
        for (o, &p) in out.iter_mut().zip(e.row(w, c)) {
            *o += e.prior()[w] / mass * p;
        }
    }
    out
}

fn cells_of(p: &Partition) -> Vec<Vec<usize>> {
    let k = p.labels().iter().max().map_or(0, |m| m + 1);
    let mut cells = vec![Vec::new(); k];
    for (w, &l) in p.labels().iter().enumerate() {
        cells[l].push(w);
    }
    cells
}

/// `(floor, L*, Σ_c m Σ_x π_x JS)` from scratch.
fn oracle_decomposition(e: &Ecology, p: &Partition) -> (f64, f64, f64) {
    let (mut floor, mut loss, mut js) = (0.0, 0.0, 0.0);
    for c in 0..e.n_contexts() {
        let m = e.mass(c);
        for cell in cells_of(p) {
            let q = cell_avg(e, &cell, c);
            let pi: f64 = cell.iter().map(|&w| e.prior()[w]).sum();
            let mut inner = 0.0;
            for &w in &cell {
                let row = e.row(w, c);
                floor += e.prior()[w] * m * h(row);
                inner += e.prior()[w] / pi * h(row);
                for (y, &py) in row.iter().enumerate() {
                    if py > 0.0 {
                        loss -= e.prior()[w] * m * py * q[y].ln();
                    }
                }
            }
            js += m * pi * (h(&q) - inner);
        }
    }
    (floor, loss, js)
}

fn oracle_sigma2(e: &Ecology, i: usize, j: usize) -> f64 {
    (0..e.n_contexts())
        .map(|c| {
            e.mass(c) * 0.5
                * e.row(i, c)
                    .iter()
                    .zip(e.row(j, c))
                    .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
                    .sum::<f64>()
        })
        .sum()
}

/// Worlds grouped by identical rows on every positive-mass context.
fn oracle_quotient(e: &Ecology) -> Partition {
    let n = e.n_worlds();
    let same = |i: usize, j: usize| (0..e.n_contexts()).all(|c| e.mass(c) == 0.0 || e.row(i, c) == e.row(j, c));
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if labels[i] != usize::MAX {
            continue;
        }
        for j in i..n {
            if labels[j] == usize::MAX && same(i, j) {
                labels[j] = next;
            }
        }
        next += 1;
    }
    Partition::from_labels(labels).unwrap()
}

fn oracle_complexity(p: &Partition, prior: &[f64]) -> f64 {
    cells_of(p)
        .iter()
        .map(|cell| cell.iter().map(|&w| prior[w]).sum::<f64>())
        .filter(|&m| m > 0.0)
        .map(|m| -m * m.ln())
        .sum()
}

/// `gain / h(λ)` for separating the world sets `a` and `b`.
fn oracle_threshold(e: &Ecology, a: &[usize], b: &[usize]) -> f64 {
    let pa: f64 = a.iter().map(|&w| e.prior()[w]).sum();
    let pb: f64 = b.iter().map(|&w| e.prior()[w]).sum();
    let lambda = pa / (pa + pb);
    let mut gain = 0.0;
    for c in 0..e.n_contexts() {
        let (qa, qb) = (cell_avg(e, a, c), cell_avg(e, b, c));
        let mix: Vec<f64> = qa.iter().zip(&qb).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
        gain += e.mass(c) * (h(&mix) - lambda * h(&qa) - (1.0 - lambda) * h(&qb));
    }
    gain / (-lambda * lambda.ln() - (1.0 - lambda) * (1.0 - lambda).ln())
}

fn random_eco(rng: &mut ChaCha8Rng, max_n: usize, max_c: usize, max_v: usize) -> Ecology {
    let spec = RandomSpec::new(
        rng.random_range(2..=max_n),
        rng.random_range(1..=max_c),
        rng.random_range(2..=max_v),
    )
    .with_duplicates(0.3)
    .with_zeros(0.2);
    synth::random_ecology(rng, &spec)
}

// ---------------------------------------------------------------------------
// Criteria

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn decomposition_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_identity, mut worst_oracle, mut checked) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..120 {
        let e = random_eco(&mut rng, 6, 8, 5);
        for p in enumerate_partitions(e.n_worlds()).unwrap() {
            let r = e.decompose(&p).unwrap();
            let (floor, loss, js) = oracle_decomposition(&e, &p);
            worst_identity = worst_identity.max((r.optimal_loss - r.floor - js).abs());
            worst_oracle = worst_oracle
                .max((r.optimal_loss - loss).abs())
                .max((r.floor - floor).abs())
                .max((r.excess - js).abs());
            checked += 1;
        }
    }
    let worst = worst_identity.max(worst_oracle);
    outcome(
        worst <= 1e-10,
        format!("{checked} (ecology, partition) pairs over 120 ecologies; max |L*-floor-JS| = {worst_identity:.2e}, max deviation from oracle = {worst_oracle:.2e}"),
    )
}

fn zero_excess_iff_refines_quotient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut fp, mut fneg, mut checked) = (0, 0, 0);
    for n in 1..=6 {
        for _ in 0..40 {
            let spec = RandomSpec::new(n, rng.random_range(1..=5), rng.random_range(2..=4))
                .with_duplicates(0.5)
                .with_zeros(0.2);
            let e = synth::random_ecology(&mut rng, &spec);
            let q = oracle_quotient(&e);
            for p in enumerate_partitions(n).unwrap() {
                let zero = e.excess(&p).unwrap() <= 1e-12;
                let refines = p.refines(&q);
                fp += (zero && !refines) as usize;
                fneg += (!zero && refines) as usize;
                checked += 1;
            }
        }
    }
    outcome(
        fp == 0 && fneg == 0,
        format!("{checked} partitions, N = 1..6: {fp} false positives, {fneg} false negatives"),
    )
}

fn min_complexity_is_quotient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..100 {
        let e = random_eco(&mut rng, 6, 5, 4);
        let q = oracle_quotient(&e);
        // Independent argmin by enumeration.
        let mut best: Option<(f64, Partition)> = None;
        for p in enumerate_partitions(e.n_worlds()).unwrap() {
            let (_, _, js) = oracle_decomposition(&e, &p);
            if js > 1e-12 {
                continue;
            }
            let cx = oracle_complexity(&p, e.prior());
            if best.as_ref().is_none_or(|(b, _)| cx < *b - 1e-14) {
                best = Some((cx, p));
            }
        }
        let (_, argmin) = best.unwrap();
        let lib = lab::enumerated_min_complexity_veridical(&e, false).unwrap();
        let closed = lab::min_complexity_veridical(&e).unwrap();
        if argmin != q || lib.partition != q || closed.partition != q {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("100 random ecologies: {mismatches} mismatches with the quotient"))
}

fn split_threshold_crossing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut draws, mut bad, mut worst_oracle) = (0, 0, 0.0f64);
    while draws < 50 {
        let spec = RandomSpec::new(rng.random_range(3..=6), rng.random_range(1..=4), 3);
        let e = synth::random_ecology(&mut rng, &spec);
        let n = e.n_worlds();
        let raw: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let p = Partition::canonicalize(&raw);
        let cells = p.cells();
        let Some(cell) = (0..cells.len()).find(|&x| cells[x].len() >= 2) else { continue };
        let sides = bipartitions(&cells[cell]);
        let a = sides[rng.random_range(0..sides.len())].clone();
        let b: Vec<usize> = cells[cell].iter().copied().filter(|w| !a.contains(w)).collect();
        let r = lab::split_report(&e, &p, cell, &a).unwrap();
        if !(r.beta_star > 1e-3) {
            continue;
        }
        draws += 1;
        worst_oracle = worst_oracle.max((r.beta_star - oracle_threshold(&e, &a, &b)).abs());
        let split = p.split(cell, &a).unwrap();
        let diff = |beta: f64| lab::objective(&e, &p, beta).unwrap() - lab::objective(&e, &split, beta).unwrap();
        let (below, above) = (diff(r.beta_star - 1e-6), diff(r.beta_star + 1e-6));
        if !(below > 0.0 && above < 0.0) {
            bad += 1;
        }
    }
    outcome(
        bad == 0 && worst_oracle <= 1e-10,
        format!("50 splits: {bad} without a sign change within 1e-6 of beta*; max |beta* - oracle| = {worst_oracle:.2e}"),
    )
}

fn sweep_local_vs_global() -> Outcome {
    let grid: Vec<f64> = (0..=300).map(|i| i as f64 / 100.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut total, mut local, mut nonlocal, mut ties, mut inconsistent, mut wrong_opt) = (0, 0, 0, 0, 0, 0);
    let mut check = |e: &Ecology| -> usize {
        let path = lab::beta_sweep(e, &grid, SweepOptions::default()).unwrap();
        // Global optima against brute force at every grid point.
        let all: Vec<Partition> = enumerate_partitions(e.n_worlds()).unwrap().collect();
        let floor = e.entropy_floor();
        for pt in path.points.iter().filter(|p| !p.refined) {
            let best = all
                .iter()
                .map(|p| floor + oracle_decomposition(e, p).2 + pt.beta * oracle_complexity(p, e.prior()))
                .fold(f64::INFINITY, f64::min);
            if (best - pt.objective).abs() > 1e-10 {
                wrong_opt += 1;
            }
        }
        let mut nonlocal_here = 0;
        for t in &path.transitions {
            total += 1;
            // Smallest one-step merge threshold of the preceding optima, from scratch.
            let mut pred = f64::INFINITY;
            let mut merges = Vec::new();
            for p in &t.from {
                let cells = p.cells();
                for x in 0..cells.len() {
                    for y in x + 1..cells.len() {
                        let b = oracle_threshold(e, &cells[x], &cells[y]);
                        let m = p.merge(x, y).unwrap();
                        if b < pred - 1e-9 {
                            pred = b;
                            merges = vec![m];
                        } else if (b - pred).abs() <= 1e-9 {
                            merges.push(m);
                        }
                    }
                }
            }
            let contains = |big: &[Partition], small: &[Partition]| small.iter().all(|p| big.contains(p));
            let tie = contains(&t.from, &t.to) || contains(&t.to, &t.from);
            let matches = pred >= t.beta_lo - 1e-6 && pred <= t.beta_hi + 1e-6 && t.to.iter().any(|p| merges.contains(p));
            let ok = match t.kind {
                TransitionKind::TieResolution => {
                    ties += 1;
                    tie
                }
                TransitionKind::Local => {
                    local += 1;
                    !tie && matches
                }
                TransitionKind::Nonlocal => {
                    nonlocal += 1;
                    nonlocal_here += 1;
                    !tie && !matches
                }
            };
            inconsistent += (!ok) as usize;
        }
        nonlocal_here
    };
    let named_nonlocal = check(&synth::eco_a()) + check(&synth::eco_b());
    for _ in 0..30 {
        let spec = RandomSpec::new(rng.random_range(2..=6), rng.random_range(1..=4), 3);
        let e = synth::random_ecology(&mut rng, &spec);
        check(&e);
    }
    outcome(
        inconsistent == 0 && wrong_opt == 0 && named_nonlocal == 0,
        format!(
            "{total} transitions on ECO-A, ECO-B and 30 random ecologies: {local} local, {nonlocal} flagged nonlocal, {ties} tie resolutions; \
             {inconsistent} misclassified, {wrong_opt} grid points off the brute-force optimum, {named_nonlocal} nonlocal on ECO-A/ECO-B"
        ),
    )
}

fn price_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.random_range(1..=12);
        let x = synth::random_simplex(&mut rng, k, 0.2);
        let f: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..5.0)).collect();
        let t: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let fbar: f64 = x.iter().zip(&f).map(|(a, b)| a * b).sum();
        let tbar: f64 = x.iter().zip(&t).map(|(a, b)| a * b).sum();
        let selected: f64 = x.iter().zip(&f).zip(&t).map(|((a, b), c)| a * b * c).sum::<f64>() / fbar;
        let price = selection::price_delta(&x, &f, &t).unwrap();
        let lib_selected = selection::selected_mean(&x, &f, &t).unwrap();
        worst = worst.max((selected - tbar - price).abs()).max((lib_selected - tbar - price).abs());
    }
    outcome(worst <= 1e-12, format!("1000 draws: max |Δ_sel t̄ - Cov(f,t)/f̄| = {worst:.2e}"))
}

fn wright_fisher_diagnostics() -> Outcome {
    let model = FitnessModel::new(
        RiskModel::Recipe(RecipeRisk::Linear {
            intercept: 1.0,
            slope: 1.0,
            offsets: Default::default(),
        }),
        FitnessForm::Offset { c: Some(2.0) },
    )
    .unwrap();
    let genotypes: Vec<Genotype> = (0..=10).map(|i| Genotype::recipe(i as f64 / 10.0, "base")).collect();
    let pop = Population::new(genotypes, vec![1.0 / 11.0; 11], 0).unwrap();
    let t = run_evolution(
        &model,
        &pop,
        &EvolutionConfig {
            generations: 500,
            popsize: 200,
            kernel: MutationKernel::Trait { step: 0.05, reflect: true },
            mode: Mode::Sampled,
            seed: 2024,
        },
    )
    .unwrap();
    let r = t.residuals();

    let eco_model = FitnessModel::new(RiskModel::Partition(synth::eco_b()), FitnessForm::Offset { c: None }).unwrap();
    let all: Vec<Genotype> = enumerate_partitions(3).unwrap().map(Genotype::partition).collect();
    let k = all.len();
    let ex = run_evolution(
        &eco_model,
        &Population::new(all, vec![1.0 / k as f64; k], 0).unwrap(),
        &EvolutionConfig {
            generations: 200,
            popsize: 200,
            kernel: MutationKernel::Stay,
            mode: Mode::Expectation,
            seed: 0,
        },
    )
    .unwrap();
    let monotone = ex.records.windows(2).all(|w| w[1].mean_risk <= w[0].mean_risk + 1e-15);
    outcome(
        (0.8..=1.2).contains(&r.rms_z) && (0.90..=0.99).contains(&r.coverage95) && monotone && r.defined >= 400,
        format!(
            "500 generations, popsize 200: rms z = {:.3}, 95% coverage = {:.3} over {} defined residuals; expectation-mode mean risk monotone: {monotone}",
            r.rms_z, r.coverage95, r.defined
        ),
    )
}

fn injection_threshold() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut pairs, mut flips_bad, mut monotone_bad, mut worst_oracle) = (0, 0, 0, 0.0f64);
    let alphas: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    while pairs < 100 {
        let spec = RandomSpec::new(rng.random_range(2..=5), rng.random_range(1..=3), 3).with_uniform_prior();
        let e0 = synth::random_ecology(&mut rng, &spec);
        let nu = synth::random_ecology(&mut rng, &spec);
        let n = e0.n_worlds();
        let (i, j) = (0, rng.random_range(1..n));
        let (s0, s_nu) = (oracle_sigma2(&e0, i, j), oracle_sigma2(&nu, i, j));
        if s_nu - s0 < 1e-3 {
            continue;
        }
        pairs += 1;
        let eps = s0 + rng.random_range(0.05..0.95) * (s_nu - s0);
        let (a, b) = (e0.worlds()[i].clone(), e0.worlds()[j].clone());
        let th = selection::injection_threshold(&e0, &nu, (&a, &b), eps).unwrap();
        let selection::InjectionThreshold::Threshold { alpha_star } = th else {
            flips_bad += 1;
            continue;
        };
        worst_oracle = worst_oracle.max((alpha_star - (eps - s0) / (s_nu - s0)).abs());
        let resolved = |alpha: f64| e0.expand(&nu, alpha).unwrap().task_distance_idx(i, j) > eps;
        if resolved(alpha_star - 1e-9) || !resolved(alpha_star + 1e-9) {
            flips_bad += 1;
        }
        // Rescued sets grow with α on the grid, for every gap pair at once.
        let mut prev: Vec<(String, String)> = Vec::new();
        for &alpha in &alphas {
            let r = selection::rescued_set(&e0, &nu, alpha, eps).unwrap();
            if !prev.iter().all(|p| r.rescued.contains(p)) {
                monotone_bad += 1;
            }
            prev = r.rescued;
        }
    }
    outcome(
        flips_bad == 0 && monotone_bad == 0 && worst_oracle <= 1e-12,
        format!("100 gap pairs: {flips_bad} status flips away from alpha* ± 1e-9, {monotone_bad} rescued-set monotonicity violations on a 21-point grid; max |alpha* - oracle| = {worst_oracle:.2e}"),
    )
}

fn kernel_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut min_eig, mut worst_recon, mut rank_bad) = (f64::INFINITY, 0.0f64, 0);
    for _ in 0..100 {
        let e = random_eco(&mut rng, 7, 6, 5);
        let k = geometry::ecology_kernel(&e);
        min_eig = min_eig.min(k.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min));
        let n = e.n_worlds();
        for i in 0..n {
            for j in 0..n {
                let d = k.kernel[i][i] + k.kernel[j][j] - 2.0 * k.kernel[i][j];
                worst_recon = worst_recon.max((d - oracle_sigma2(&e, i, j)).abs());
            }
        }
        let classes = oracle_quotient(&e).cell_count();
        let collapsed = geometry::ecology_kernel(&geometry::collapse_to_quotient(&e).unwrap());
        if collapsed.rank > classes - 1 || k.rank > classes - 1 {
            rank_bad += 1;
        }
    }
    outcome(
        min_eig >= -1e-10 && worst_recon <= 1e-10 && rank_bad == 0,
        format!("100 ecologies: min eigenvalue {min_eig:.2e}, max distance reconstruction error {worst_recon:.2e}, {rank_bad} rank > k-1"),
    )
}

fn knn_stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut trials, mut changed) = (0, 0);
    while trials < 1000 {
        let spec = RandomSpec::new(rng.random_range(4..=9), 3, 4);
        let e = synth::random_ecology(&mut rng, &spec);
        let d = e.distance_matrix();
        let k = rng.random_range(1..=e.n_worlds() - 2);
        let rep = geometry::knn_report(&d, k).unwrap();
        if rep.zero_margin {
            continue;
        }
        let bound = 0.49 * rep.gamma_k;
        for t in 0..20 {
            let n = d.len();
            let mut dh = d.clone();
            for i in 0..n {
                for j in i + 1..n {
                    // Alternate random and adversarial (all entries at the bound) noise.
                    let delta = if t % 2 == 0 {
                        rng.random_range(-bound..bound)
                    } else if rng.random::<bool>() {
                        bound
                    } else {
                        -bound
                    };
                    dh[i][j] += delta;
                    dh[j][i] = dh[i][j];
                }
            }
            let cmp = geometry::knn_stability(&d, &dh, k).unwrap();
            assert!(cmp.sup_perturbation < rep.stable_under);
            changed += (!cmp.graphs_equal) as usize;
            trials += 1;
        }
    }
    outcome(changed == 0, format!("{trials} perturbations below 0.49 gamma_k: {changed} changed kNN graphs"))
}

fn sample_bound_sanity() -> Outcome {
    let inputs = BoundInputs {
        tau: (-1.0f64).exp(),
        c_tau: None,
        gamma: 0.5,
        eps_opt: 0.0,
        m_theta: 2,
        alpha_conf: 0.05,
        prior: CertPrior::Uniform,
    };
    let b = bounds::sample_bound(&inputs, None).unwrap();
    // 2 C² / γ² · ln(2M/α) with C = 1: 8 ln 80.
    let oracle = 8.0 * 80f64.ln();
    let sim = bounds::simulate_miscertification(
        &synth::certification_toy(),
        &[Partition::identity(2), Partition::all_merged(2)],
        b.n as usize,
        0.0,
        2000,
        11,
    )
    .unwrap();
    let limit = 0.05 + 3.0 * (0.05f64 * 0.95 / 2000.0).sqrt();
    outcome(
        b.n == 36 && (b.n_exact - oracle).abs() <= 1e-12 && sim.rate <= limit,
        format!(
            "n = {} (exact {:.6}, oracle {oracle:.6}); simulated mis-certification rate {:.4} over {} resamples (limit {limit:.4})",
            b.n, b.n_exact, sim.rate, sim.reps
        ),
    )
}

fn corpus(name: &str) -> WorldSource {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpora", name].iter().collect();
    let id = name.trim_end_matches(".txt").trim_end_matches("_eva");
    WorldSource::files(id, vec![path])
}

fn off_ecology_ordering() -> Outcome {
    let cfg = IngestConfig::default();
    let train = ingest::ingest(&[corpus("en.txt"), corpus("fr.txt"), corpus("de.txt")], &cfg).unwrap();
    let probes = [corpus("en_heldout.txt"), corpus("it.txt"), corpus("voynich_eva.txt")];
    let reports = ingest::off_ecology_probe(&train, &probes, &cfg).unwrap();
    let ex: Vec<f64> = reports.iter().map(|r| r.actual).collect();
    let bounds_hold = reports.iter().all(|r| r.holds);
    let summary = reports
        .iter()
        .map(|r| format!("{} -> {} excess {:.4}", r.probe, r.nearest, r.actual))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        ex[0] < ex[1] && ex[1] < ex[2] && bounds_hold,
        format!("train en/fr/de; {summary}; pairwise bounds hold: {bounds_hold}"),
    )
}

fn quotient_monotonicity() -> Outcome {
    let cfg = IngestConfig::default();
    let stages: [&[&str]; 4] = [
        &["en.txt"],
        &["en.txt", "fr.txt"],
        &["en.txt", "fr.txt", "de.txt"],
        &["en.txt", "fr.txt", "de.txt", "it.txt", "fi.txt"],
    ];
    let sizes: Vec<usize> = stages
        .iter()
        .map(|names| {
            let worlds: Vec<WorldSource> = names.iter().map(|n| corpus(n)).collect();
            let e = ingest::ingest(&worlds, &cfg).unwrap().ecology;
            e.quotient_partition(0.0).unwrap().cell_count()
        })
        .collect();
    let monotone = sizes.windows(2).all(|w| w[0] <= w[1]);
    outcome(monotone, format!("nested ecologies give quotient sizes {sizes:?}"))
}

fn generalist_advantage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut a_bad, mut b_bad, mut tight_bad, mut tight_checked) = (0, 0, 0, 0);
    let mut worst_linearity = 0.0f64;
    for inst in 0..100 {
        let tasks = rng.random_range(1..=4);
        let spec = RandomSpec::new(rng.random_range(2..=5), rng.random_range(1..=3), 3).with_duplicates(0.4);
        let base = synth::random_ecology(&mut rng, &spec);
        let ecos: Vec<Ecology> = (0..tasks)
            .map(|_| synth::random_ecology(&mut rng, &spec).with_prior(base.prior().to_vec()).unwrap())
            .collect();
        // Every other instance uses the mixture quotient, which has zero mixture excess.
        let mix = bounds::uniform_mixture(&ecos).unwrap();
        let p = if inst % 2 == 0 {
            oracle_quotient(&mix)
        } else {
            let raw: Vec<usize> = (0..base.n_worlds()).map(|_| rng.random_range(0..2)).collect();
            Partition::canonicalize(&raw)
        };
        let r = bounds::generalist_specialist(&ecos, &p).unwrap();
        // (a): the mixture excess is the task average, so zero forces zero everywhere.
        let avg = r.per_task_excess.iter().sum::<f64>() / tasks as f64;
        worst_linearity = worst_linearity.max((r.mixture_excess - avg).abs());
        if r.mixture_excess <= 1e-12 && r.per_task_excess.iter().any(|&x| x > 1e-10) {
            a_bad += 1;
        }
        if !r.zero_transfer_holds {
            a_bad += 1;
        }
        // (b): every merged, separated pair costs at least its two-world bound.
        for m in &r.missed_pairs {
            let e = &ecos[m.task];
            let (i, j) = (e.world_index(&m.a).unwrap(), e.world_index(&m.b).unwrap());
            let two = Partition::from_cells(e.n_worlds(), &{
                let mut cells: Vec<Vec<usize>> = (0..e.n_worlds()).filter(|&w| w != i && w != j).map(|w| vec![w]).collect();
                cells.push(vec![i, j]);
                cells
            })
            .unwrap();
            // Excess of the encoding that merges only this pair.
            let oracle_bound = oracle_decomposition(e, &two).2;
            if (m.bound - oracle_bound).abs() > 1e-10 || m.task_excess < oracle_bound - 1e-12 || !m.holds {
                b_bad += 1;
            }
            if let Some(t) = m.tight {
                tight_checked += 1;
                tight_bad += (!t) as usize;
            }
        }
    }
    outcome(
        a_bad == 0 && b_bad == 0 && tight_bad == 0 && worst_linearity <= 1e-10 && tight_checked > 0,
        format!(
            "100 instances: {a_bad} zero-transfer violations, {b_bad} lower-bound violations, \
             {tight_bad}/{tight_checked} two-world cells not tight; max |mixture - task average| = {worst_linearity:.2e}"
        ),
    )
}

fn decoder_gap() -> Outcome {
    use bounds::DecoderFamily::*;
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (mut worst, mut nest_bad) = (0.0f64, 0);
    for _ in 0..100 {
        let e = random_eco(&mut rng, 6, 5, 4);
        let raw: Vec<usize> = (0..e.n_worlds()).map(|_| rng.random_range(0..3)).collect();
        let p = Partition::canonicalize(&raw);
        let (floor, _, js) = oracle_decomposition(&e, &p);
        // A fixed context-independent decoder: a random distribution per cell.
        let table: bounds::DecoderTable = (0..p.cell_count())
            .map(|x| {
                let row = synth::random_simplex(&mut rng, e.vocab_len(), 0.0);
                (x, e.contexts().iter().map(|c| (c.id.clone(), row.clone())).collect())
            })
            .collect();
        let explicit = ExplicitTable { table: table.clone() };
        for fam in [BayesFull, ContextPooled, explicit.clone()] {
            let r = bounds::decoder_gap(&e, &p, &fam).unwrap();
            // Oracle loss of the family's best member.
            let loss = match &fam {
                BayesFull => floor + js,
                ContextPooled => {
                    let mut l = 0.0;
                    for cell in cells_of(&p) {
                        let mut pooled = vec![0.0; e.vocab_len()];
                        for c in 0..e.n_contexts() {
                            for &w in &cell {
                                for (o, &v) in pooled.iter_mut().zip(e.row(w, c)) {
                                    *o += e.prior()[w] * e.mass(c) * v;
                                }
                            }
                        }
                        let z: f64 = pooled.iter().sum();
                        l += z * h(&pooled.iter().map(|v| v / z).collect::<Vec<_>>());
                    }
                    l
                }
                ExplicitTable { .. } => {
                    let mut l = 0.0;
                    for (w, &x) in p.labels().iter().enumerate() {
                        for (ci, c) in e.contexts().iter().enumerate() {
                            let q = &table[&x][&c.id];
                            for (y, &py) in e.row(w, ci).iter().enumerate() {
                                if py > 0.0 {
                                    l -= e.prior()[w] * c.mass * py * q[y].ln();
                                }
                            }
                        }
                    }
                    l
                }
            };
            worst = worst
                .max((r.loss - (r.floor + r.excess + r.gap)).abs())
                .max((r.loss - loss).abs())
                .max((r.excess - js).abs())
                .max((r.floor - floor).abs());
        }
        for (inner, outer) in [(&ContextPooled, &BayesFull), (&explicit, &ContextPooled), (&explicit, &BayesFull)] {
            let n = bounds::nesting_check(&e, &p, inner, outer).unwrap();
            if !n.monotone || n.outer.loss > n.inner.loss + 1e-12 || n.outer.gap > n.inner.gap + 1e-12 {
                nest_bad += 1;
            }
        }
    }
    outcome(
        worst <= 1e-10 && nest_bad == 0,
        format!("100 instances x 3 families: max identity/oracle deviation {worst:.2e}; {nest_bad} nesting violations"),
    )
}

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 15] = [
        (1, "decomposition identity", 60, decomposition_identity),
        (2, "zero excess iff refines the quotient", 60, zero_excess_iff_refines_quotient),
        (3, "minimum-complexity veridical encoding is the quotient", 120, min_complexity_is_quotient),
        (4, "split-threshold crossing", 30, split_threshold_crossing),
        (5, "local vs global beta sweep", 300, sweep_local_vs_global),
        (6, "Price identity", 5, price_identity),
        (7, "Wright-Fisher residual diagnostics", 120, wright_fisher_diagnostics),
        (8, "injection threshold", 10, injection_threshold),
        (9, "kernel geometry", 30, kernel_geometry),
        (10, "kNN stability", 10, knn_stability),
        (11, "sample-bound sanity", 120, sample_bound_sanity),
        (12, "off-ecology ordering", 300, off_ecology_ordering),
        (13, "empirical quotient monotonicity", 300, quotient_monotonicity),
        (14, "generalist advantage", 60, generalist_advantage),
        (15, "decoder-gap decomposition and nesting", 30, decoder_gap),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = o.pass && in_time;
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.2}s / {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    println!("SKIP criterion 16 (neural two-ecology training): out of scope; criteria 7-8 cover the exact synthetic analogue");
    if failed.is_empty() {
        println!("acceptance: all 15 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
