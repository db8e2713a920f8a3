//! Search over the partition lattice: the regularized objective
//! `J_β(p) = L*(p) + β·H(p(W))`, split/merge thresholds, local minima,
//! exhaustive β-sweeps and the rate-distortion curve.

use serde::Serialize;

use crate::ecology::Ecology;
use crate::error::{Error, Result};
use crate::info::{binary_entropy, entropy, js2};
use crate::partition::{bipartitions, check_enumerable, complexity, Partition};

/// Two objective values closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Transition brackets are bisected down to this width in β.
pub const BISECTION_WIDTH: f64 = 1e-6;

/// Largest cell whose bipartitions are enumerated (2^12 subsets).
pub const MAX_SPLIT_CELL: usize = 13;

/// Optimum sets larger than this are counted but not stored in full.
pub const MAX_STORED_TIES: usize = 10_000;

#[derive(Clone, Debug, Serialize)]
pub struct ObjectiveEvaluation {
    pub partition: Partition,
    pub beta: f64,
    pub loss: f64,
    pub complexity: f64,
    pub objective: f64,
}

/// Evaluates `J_β(p)`.
pub fn evaluate(e: &Ecology, p: &Partition, beta: f64) -> Result<ObjectiveEvaluation> {
    check_beta(beta)?;
    let loss = e.entropy_floor() + e.excess(p)?;
    let complexity = complexity(p, e.prior())?;
    Ok(ObjectiveEvaluation {
        partition: p.clone(),
        beta,
        loss,
        complexity,
        objective: loss + beta * complexity,
    })
}

pub fn objective(e: &Ecology, p: &Partition, beta: f64) -> Result<f64> {
    Ok(evaluate(e, p, beta)?.objective)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be finite and nonnegative")));
    }
    Ok(())
}

/// Split of cell `S = A ⊔ B` and its threshold `β* = gain / h(λ)`.
#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub cell: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    /// `π_S`
    pub cell_mass: f64,
    /// `π_A / π_S`
    pub lambda: f64,
    /// `E_c[JS_λ(P̄_A, P̄_B)]`
    pub gain: f64,
    /// `h(λ)`
    pub cost_rate: f64,
    pub beta_star: f64,
}

impl SplitReport {
    /// `J_β(p) − J_β(p^{A|B}) = π_S (gain − β h(λ))`.
    pub fn objective_drop(&self, beta: f64) -> f64 {
        self.cell_mass * (self.gain - beta * self.cost_rate)
    }
}

/// Gain and cost of separating the disjoint world sets `a` and `b`.
fn pair_report(e: &Ecology, cell: usize, a: Vec<usize>, b: Vec<usize>) -> SplitReport {
    let pi_a: f64 = a.iter().map(|&w| e.prior()[w]).sum();
    let pi_b: f64 = b.iter().map(|&w| e.prior()[w]).sum();
    let cell_mass = pi_a + pi_b;
    let lambda = pi_a / cell_mass;
    let mut gain = 0.0;
    for c in 0..e.n_contexts() {
        let m = e.mass(c);
        if m == 0.0 {
            continue;
        }
        let (_, pa) = e.cell_average(&a, c);
        let (_, pb) = e.cell_average(&b, c);
        gain += m * js2(lambda, &pa, &pb);
    }
    let cost_rate = binary_entropy(lambda);
    SplitReport {
        cell,
        a,
        b,
        cell_mass,
        lambda,
        gain,
        cost_rate,
        beta_star: gain / cost_rate,
    }
}

/// Threshold report for splitting `cell` of `p` into `subset` and the rest.
pub fn split_report(e: &Ecology, p: &Partition, cell: usize, subset: &[usize]) -> Result<SplitReport> {
    if p.len() != e.n_worlds() {
        return Err(Error::Dimension(format!(
            "partition covers {} worlds, ecology has {}",
            p.len(),
            e.n_worlds()
        )));
    }
    // Validates the subset.
    p.split(cell, subset)?;
    let members = &p.cells()[cell];
    let mut a = subset.to_vec();
    a.sort_unstable();
    let b = members.iter().copied().filter(|w| !a.contains(w)).collect();
    Ok(pair_report(e, cell, a, b))
}

/// Threshold report for merging cells `x` and `y` of `p` (the reverse split).
pub fn merge_report(e: &Ecology, p: &Partition, x: usize, y: usize) -> Result<SplitReport> {
    let merged = p.merge(x, y)?;
    let cells = p.cells();
    let cell = merged.labels()[cells[x][0]];
    Ok(pair_report(e, cell, cells[x].clone(), cells[y].clone()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Split,
    Merge,
}

/// A one-step neighbor whose objective is strictly lower.
#[derive(Clone, Debug, Serialize)]
pub struct ViolatingMove {
    pub kind: MoveKind,
    pub neighbor: Partition,
    pub report: SplitReport,
    /// `J_β(p) − J_β(neighbor)`, positive.
    pub improvement: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalMinReport {
    pub beta: f64,
    pub is_local_min: bool,
    pub violating_moves: Vec<ViolatingMove>,
}

/// Checks split stability (`gain ≤ β h`) for every bipartition of every cell
/// and merge stability (`gain ≥ β h`) for every pair of cells. Exact ties
/// count as stable.
pub fn local_min_check(e: &Ecology, p: &Partition, beta: f64) -> Result<LocalMinReport> {
    check_beta(beta)?;
    if p.len() != e.n_worlds() {
        return Err(Error::Dimension(format!(
            "partition covers {} worlds, ecology has {}",
            p.len(),
            e.n_worlds()
        )));
    }
    let cells = p.cells();
    if let Some((i, m)) = cells.iter().enumerate().find(|(_, m)| m.len() > MAX_SPLIT_CELL) {
        return Err(Error::CellTooLarge {
            cell: i,
            size: m.len(),
            limit: MAX_SPLIT_CELL,
        });
    }
    let mut violating_moves = Vec::new();
    for (ci, members) in cells.iter().enumerate() {
        for subset in bipartitions(members) {
            let r = split_report(e, p, ci, &subset)?;
            if r.gain > beta * r.cost_rate {
                violating_moves.push(ViolatingMove {
                    kind: MoveKind::Split,
                    neighbor: p.split(ci, &subset)?,
                    improvement: r.objective_drop(beta),
                    report: r,
                });
            }
        }
    }
    for x in 0..cells.len() {
        for y in x + 1..cells.len() {
            let r = merge_report(e, p, x, y)?;
            if r.gain < beta * r.cost_rate {
                violating_moves.push(ViolatingMove {
                    kind: MoveKind::Merge,
                    neighbor: p.merge(x, y)?,
                    improvement: -r.objective_drop(beta),
                    report: r,
                });
            }
        }
    }
    Ok(LocalMinReport {
        beta,
        is_local_min: violating_moves.is_empty(),
        violating_moves,
    })
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration

/// Per-subset excess and prior mass, indexed by world bit mask.
struct SubsetTables {
    excess: Vec<f64>,
    neg_m_ln_m: Vec<f64>,
}

impl SubsetTables {
    fn new(e: &Ecology) -> Self {
        let n = e.n_worlds();
        let size = 1usize << n;
        let mut excess = vec![0.0; size];
        let mut neg_m_ln_m = vec![0.0; size];
        let mut members = Vec::with_capacity(n);
        for mask in 1..size {
            members.clear();
            members.extend((0..n).filter(|w| mask >> w & 1 == 1));
            let (pi, mean) = e.set_mean_js(&members);
            excess[mask] = pi * mean;
            neg_m_ln_m[mask] = if pi > 0.0 { -pi * pi.ln() } else { 0.0 };
        }
        Self { excess, neg_m_ln_m }
    }
}

fn labels_from_masks(n: usize, masks: &[u64]) -> Partition {
    let mut labels = vec![0; n];
    for (j, &m) in masks.iter().enumerate() {
        for (w, l) in labels.iter_mut().enumerate() {
            if m >> w & 1 == 1 {
                *l = j;
            }
        }
    }
    Partition::from_labels(labels).expect("cells are created in first-occurrence order")
}

/// Visits every partition of `n` worlds as a list of cell masks, in
/// restricted-growth lexicographic order.
fn for_each_partition(n: usize, visit: &mut dyn FnMut(&[u64])) {
    fn rec(w: usize, n: usize, masks: &mut Vec<u64>, visit: &mut dyn FnMut(&[u64])) {
        if w == n {
            visit(masks);
            return;
        }
        let bit = 1u64 << w;
        for j in 0..masks.len() {
            masks[j] |= bit;
            rec(w + 1, n, masks, visit);
            masks[j] &= !bit;
        }
        masks.push(bit);
        rec(w + 1, n, masks, visit);
        masks.pop();
    }
    let mut masks = Vec::with_capacity(n);
    rec(0, n, &mut masks, visit);
}

/// A group of partitions with the same (excess, complexity) up to [`TIE_TOL`].
#[derive(Clone, Debug, Serialize)]
pub struct FrontPoint {
    pub excess: f64,
    pub complexity: f64,
    pub partitions: Vec<Partition>,
    /// Number of tied partitions, including any not stored.
    pub count: u64,
}

impl FrontPoint {
    fn new(excess: f64, complexity: f64, p: Partition) -> Self {
        Self {
            excess,
            complexity,
            partitions: vec![p],
            count: 1,
        }
    }

    fn absorb(&mut self, p: impl FnOnce() -> Partition) {
        self.count += 1;
        if self.partitions.len() < MAX_STORED_TIES {
            self.partitions.push(p());
        }
    }
}

/// Nondominated (excess, complexity) points of the whole lattice plus the
/// minimum-excess tie set.
#[derive(Clone, Debug, Serialize)]
pub struct LatticeFront {
    /// Sorted by increasing complexity (hence decreasing excess).
    pub points: Vec<FrontPoint>,
    /// All partitions within [`TIE_TOL`] of the smallest excess.
    pub min_excess: FrontPoint,
    pub floor: f64,
    pub prior_entropy: f64,
}

fn dominates(q: &FrontPoint, ex: f64, cx: f64) -> bool {
    q.excess <= ex + TIE_TOL
        && q.complexity <= cx + TIE_TOL
        && (q.excess < ex - TIE_TOL || q.complexity < cx - TIE_TOL)
}

fn tied(q: &FrontPoint, ex: f64, cx: f64) -> bool {
    (q.excess - ex).abs() <= TIE_TOL && (q.complexity - cx).abs() <= TIE_TOL
}

/// Enumerates every partition once and keeps the Pareto front.
pub fn lattice_front(e: &Ecology, force: bool) -> Result<LatticeFront> {
    let n = e.n_worlds();
    check_enumerable(n, force)?;
    let tables = SubsetTables::new(e);
    let mut points: Vec<FrontPoint> = Vec::new();
    let mut min_excess: Option<FrontPoint> = None;
    for_each_partition(n, &mut |masks| {
        let mut ex = 0.0;
        let mut cx = 0.0;
        for &m in masks {
            ex += tables.excess[m as usize];
            cx += tables.neg_m_ln_m[m as usize];
        }
        match &mut min_excess {
            Some(best) if ex < best.excess - TIE_TOL => {
                *best = FrontPoint::new(ex, cx, labels_from_masks(n, masks));
            }
            Some(best) if ex <= best.excess + TIE_TOL => {
                best.absorb(|| labels_from_masks(n, masks));
            }
            Some(_) => {}
            None => min_excess = Some(FrontPoint::new(ex, cx, labels_from_masks(n, masks))),
        }
        // Front entries with complexity ≤ cx + tol form a prefix; the best
        // excess among them sits at its end.
        let end = points.partition_point(|q| q.complexity <= cx + TIE_TOL);
        let mut i = end;
        while i > 0 {
            i -= 1;
            let q = &mut points[i];
            if tied(q, ex, cx) {
                q.absorb(|| labels_from_masks(n, masks));
                return;
            }
            if dominates(q, ex, cx) {
                return;
            }
            if q.complexity < cx - TIE_TOL {
                break;
            }
        }
        let fresh = FrontPoint::new(ex, cx, labels_from_masks(n, masks));
        points.retain(|q| !dominates(&fresh, q.excess, q.complexity));
        let at = points.partition_point(|q| q.complexity < cx);
        points.insert(at, fresh);
    });
    Ok(LatticeFront {
        points,
        min_excess: min_excess.expect("at least one partition"),
        floor: e.entropy_floor(),
        prior_entropy: entropy(e.prior()),
    })
}

impl LatticeFront {
    /// Globally optimal partitions of `J_β`, all ties, and the optimal value.
    pub fn optima(&self, beta: f64) -> (f64, Vec<&FrontPoint>) {
        if beta == 0.0 {
            return (self.floor + self.min_excess.excess, vec![&self.min_excess]);
        }
        let j = |q: &FrontPoint| q.excess + beta * q.complexity;
        let best = self.points.iter().map(j).fold(f64::INFINITY, f64::min);
        let set = self
            .points
            .iter()
            .filter(|q| j(q) <= best + TIE_TOL)
            .collect();
        (self.floor + best, set)
    }

    /// `R(I)`: least excess over partitions with complexity ≤ `level`.
    pub fn distortion(&self, level: f64) -> Option<&FrontPoint> {
        self.points
            .iter()
            .filter(|q| q.complexity <= level + TIE_TOL)
            .min_by(|a, b| a.excess.total_cmp(&b.excess))
    }
}

// ---------------------------------------------------------------------------
// β-sweep

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub beta: f64,
    /// True for points added by bisection rather than supplied on the grid.
    pub refined: bool,
    pub objective: f64,
    pub optima: Vec<ObjectiveEvaluation>,
    pub optimum_count: u64,
}

impl SweepPoint {
    fn key(&self) -> Vec<&Partition> {
        self.optima.iter().map(|o| &o.partition).collect()
    }

    fn complexity_range(&self) -> (f64, f64) {
        self.optima.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| {
            (lo.min(o.complexity), hi.max(o.complexity))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    /// One optimum set contains the other: a tie at a grid point resolves.
    TieResolution,
    /// The new optimum is a merge of the old one at its local threshold.
    Local,
    /// Not explained by the preceding optimum's one-step thresholds.
    Nonlocal,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transition {
    pub beta_lo: f64,
    pub beta_hi: f64,
    /// Exact crossing of the two optima's objective lines, when both are unique.
    pub beta_cross: Option<f64>,
    pub from: Vec<Partition>,
    pub to: Vec<Partition>,
    /// Smallest merge threshold of the preceding optimum.
    pub predicted_beta: Option<f64>,
    pub kind: TransitionKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPath {
    pub grid: Vec<f64>,
    pub points: Vec<SweepPoint>,
    pub transitions: Vec<Transition>,
    /// Consecutive points where the optimum's complexity went up.
    pub coarsening_violations: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub force: bool,
    pub refine: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            force: false,
            refine: true,
        }
    }
}

fn sweep_point(e: &Ecology, front: &LatticeFront, beta: f64, refined: bool) -> SweepPoint {
    let (objective, set) = front.optima(beta);
    let mut optima = Vec::new();
    let mut optimum_count = 0;
    for q in set {
        optimum_count += q.count;
        for p in &q.partitions {
            let complexity = complexity(p, e.prior()).expect("lengths match");
            let loss = front.floor + q.excess;
            optima.push(ObjectiveEvaluation {
                partition: p.clone(),
                beta,
                loss,
                complexity,
                objective: loss + beta * complexity,
            });
        }
    }
    optima.sort_by(|a, b| a.partition.cmp(&b.partition));
    SweepPoint {
        beta,
        refined,
        objective,
        optima,
        optimum_count,
    }
}

fn bisect(
    e: &Ecology,
    front: &LatticeFront,
    lo: SweepPoint,
    hi: &SweepPoint,
    out: &mut Vec<SweepPoint>,
) {
    if lo.key() == hi.key() {
        out.push(lo);
        return;
    }
    if hi.beta - lo.beta <= BISECTION_WIDTH {
        out.push(lo);
        return;
    }
    let mid = sweep_point(e, front, 0.5 * (lo.beta + hi.beta), true);
    let mut left = Vec::new();
    bisect(e, front, lo, &mid, &mut left);
    out.extend(left);
    bisect(e, front, mid, hi, out);
}

/// Smallest merge ratio `gain/h` over pairs of cells of `p`, with the merges
/// attaining it.
fn merge_thresholds(e: &Ecology, p: &Partition) -> Option<(f64, Vec<Partition>)> {
    let k = p.cell_count();
    let mut best: Option<(f64, Vec<Partition>)> = None;
    for x in 0..k {
        for y in x + 1..k {
            let r = merge_report(e, p, x, y).expect("distinct cells");
            let merged = p.merge(x, y).expect("distinct cells");
            match &mut best {
                Some((b, set)) if (r.beta_star - *b).abs() <= 1e-12 * b.max(1.0) => {
                    set.push(merged)
                }
                Some((b, _)) if r.beta_star > *b => {}
                _ => best = Some((r.beta_star, vec![merged])),
            }
        }
    }
    best
}

fn classify(e: &Ecology, lo: &SweepPoint, hi: &SweepPoint) -> Transition {
    let from: Vec<Partition> = lo.optima.iter().map(|o| o.partition.clone()).collect();
    let to: Vec<Partition> = hi.optima.iter().map(|o| o.partition.clone()).collect();
    let contains = |big: &[Partition], small: &[Partition]| small.iter().all(|p| big.contains(p));
    let beta_cross = match (lo.optima.as_slice(), hi.optima.as_slice()) {
        ([a], [b]) if (a.complexity - b.complexity).abs() > TIE_TOL => {
            let (ea, eb) = (a.loss, b.loss);
            Some((eb - ea) / (a.complexity - b.complexity))
        }
        _ => None,
    };
    let mut predicted_beta: Option<f64> = None;
    let mut predicted = Vec::new();
    for p in &from {
        if let Some((b, merges)) = merge_thresholds(e, p) {
            match predicted_beta {
                Some(pb) if b > pb => {}
                Some(pb) if b == pb => predicted.extend(merges),
                _ => {
                    predicted_beta = Some(b);
                    predicted = merges;
                }
            }
        }
    }
    let kind = if contains(&from, &to) || contains(&to, &from) {
        TransitionKind::TieResolution
    } else if predicted_beta.is_some_and(|b| {
        b >= lo.beta - BISECTION_WIDTH && b <= hi.beta + BISECTION_WIDTH
    }) && to.iter().any(|p| predicted.contains(p))
    {
        TransitionKind::Local
    } else {
        TransitionKind::Nonlocal
    };
    Transition {
        beta_lo: lo.beta,
        beta_hi: hi.beta,
        beta_cross,
        from,
        to,
        predicted_beta,
        kind,
    }
}

/// Global optima of `J_β` over the whole lattice along a grid of β values.
pub fn beta_sweep(e: &Ecology, grid: &[f64], opts: SweepOptions) -> Result<SweepPath> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("beta grid is empty".into()));
    }
    for &b in grid {
        check_beta(b)?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("beta grid must be strictly increasing".into()));
    }
    let front = lattice_front(e, opts.force)?;
    let base: Vec<SweepPoint> = grid.iter().map(|&b| sweep_point(e, &front, b, false)).collect();
    let mut points = Vec::with_capacity(base.len());
    let mut iter = base.into_iter().peekable();
    while let Some(p) = iter.next() {
        match iter.peek() {
            Some(next) if opts.refine => bisect(e, &front, p, next, &mut points),
            _ => points.push(p),
        }
    }
    let mut transitions = Vec::new();
    let mut coarsening_violations = Vec::new();
    let mut i = 0;
    while i + 1 < points.len() {
        let (a, b) = (&points[i], &points[i + 1]);
        if a.key() != b.key() {
            // An exact tie (on the grid or hit by bisection) between two
            // distinct optima is one transition, reported around the tie.
            if let Some(c) = points.get(i + 2) {
                let tie = b.key();
                let inside = |x: &SweepPoint| x.key().iter().all(|p| tie.contains(p));
                if inside(a) && inside(c) && a.key() != c.key() {
                    transitions.push(classify(e, a, c));
                    i += 2;
                    continue;
                }
            }
            transitions.push(classify(e, a, b));
        }
        i += 1;
    }
    for w in points.windows(2) {
        let (lo0, _) = w[0].complexity_range();
        let (_, hi1) = w[1].complexity_range();
        if hi1 > lo0 + 1e-9 {
            coarsening_violations.push((w[0].beta, w[1].beta));
        }
    }
    Ok(SweepPath {
        grid: grid.to_vec(),
        points,
        transitions,
        coarsening_violations,
    })
}

// ---------------------------------------------------------------------------
// Veridical encodings

#[derive(Clone, Debug, Serialize)]
pub struct Veridical {
    pub partition: Partition,
    pub istar: f64,
}

/// The quotient encoding and its complexity `I*`.
pub fn min_complexity_veridical(e: &Ecology) -> Result<Veridical> {
    let partition = e.quotient_partition(0.0)?;
    let istar = complexity(&partition, e.prior())?;
    Ok(Veridical { partition, istar })
}

/// Least-complexity partition among those with excess ≤ `TIE_TOL`, by enumeration.
pub fn enumerated_min_complexity_veridical(e: &Ecology, force: bool) -> Result<Veridical> {
    let n = e.n_worlds();
    check_enumerable(n, force)?;
    let tables = SubsetTables::new(e);
    let mut best: Option<(f64, Vec<u64>)> = None;
    for_each_partition(n, &mut |masks| {
        let ex: f64 = masks.iter().map(|&m| tables.excess[m as usize]).sum();
        if ex > TIE_TOL {
            return;
        }
        let cx: f64 = masks.iter().map(|&m| tables.neg_m_ln_m[m as usize]).sum();
        if best.as_ref().is_none_or(|(b, _)| cx < *b) {
            best = Some((cx, masks.to_vec()));
        }
    });
    let (istar, masks) = best.expect("the identity partition has zero excess");
    Ok(Veridical {
        partition: labels_from_masks(n, &masks),
        istar,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RdPoint {
    pub level: f64,
    pub distortion: f64,
    pub complexity: f64,
    pub partition: Partition,
}

/// `R(I) = min{excess(p) : H(p(W)) ≤ I}` at each level, by enumeration.
pub fn rate_distortion(e: &Ecology, levels: &[f64], force: bool) -> Result<Vec<RdPoint>> {
    if let Some(l) = levels.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::InvalidArgument(format!("complexity level {l} must be nonnegative")));
    }
    let front = lattice_front(e, force)?;
    Ok(levels
        .iter()
        .map(|&level| {
            let q = front.distortion(level).expect("all-merged has zero complexity");
            RdPoint {
                level,
                distortion: q.excess,
                complexity: q.complexity,
                partition: q.partitions[0].clone(),
            }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct BetaMin {
    pub beta_min: f64,
    /// Quotient cells whose merge attains the minimum.
    pub pair: (usize, usize),
    pub unique: bool,
    pub quotient: Partition,
}

/// Largest β at which the quotient encoding is still a local minimum;
/// `None` when the quotient has a single cell.
pub fn beta_min(e: &Ecology) -> Result<Option<BetaMin>> {
    let q = e.quotient_partition(0.0)?;
    let k = q.cell_count();
    if k < 2 {
        return Ok(None);
    }
    let mut ratios = Vec::with_capacity(k * (k - 1) / 2);
    for x in 0..k {
        for y in x + 1..k {
            ratios.push(((x, y), merge_report(e, &q, x, y)?.beta_star));
        }
    }
    let &(pair, beta_min) = ratios
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("k ≥ 2");
    let unique = ratios
        .iter()
        .filter(|(_, r)| (r - beta_min).abs() <= 1e-12 * beta_min.max(1.0))
        .count()
        == 1;
    Ok(Some(BetaMin {
        beta_min,
        pair,
        unique,
        quotient: q,
    }))
}
