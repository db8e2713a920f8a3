//! Hilbert geometry of an ecology: square-root embedding, double-centered
//! kernel and its spectrum, kNN-margin stability, and the Gaussian-linear
//! proportionality check.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::ecology::Ecology;
use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the largest are counted as zero.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// `J = I − (1/N) 1 1ᵀ`.
    #[default]
    Uniform,
    /// `J_π = I − 1 πᵀ`; not covered by the acceptance invariants.
    Weighted,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub worlds: Vec<String>,
    pub centering: Centering,
    /// `σ²` between every pair of worlds.
    pub dsigma: Vec<Vec<f64>>,
    /// `K = −½ J D_σ Jᵀ`.
    pub kernel: Vec<Vec<f64>>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    /// Row `w` concatenates `√mass(c) · √P_w(·|c)` over contexts.
    pub embedding: Vec<Vec<f64>>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Descending eigenvalues of a symmetric matrix.
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Number of eigenvalues above `RANK_TOL` times the largest.
pub fn numerical_rank(eigenvalues: &[f64]) -> usize {
    let top = eigenvalues.iter().copied().fold(0.0, f64::max);
    if top <= f64::EPSILON * 1e-2 {
        return 0;
    }
    eigenvalues.iter().filter(|&&l| l > RANK_TOL * top).count()
}

fn centering_matrix(n: usize, centering: Centering, prior: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::identity(n, n);
    for r in 0..n {
        for c in 0..n {
            j[(r, c)] -= match centering {
                Centering::Uniform => 1.0 / n as f64,
                Centering::Weighted => prior[c],
            };
        }
    }
    j
}

/// Square-root embedding, one row per world.
pub fn embedding(e: &Ecology) -> DMatrix<f64> {
    let n_v = e.vocab_len();
    let dim = e.n_contexts() * n_v;
    DMatrix::from_fn(e.n_worlds(), dim, |w, k| {
        let (c, v) = (k / n_v, k % n_v);
        (e.mass(c) * e.row(w, c)[v]).sqrt()
    })
}

pub fn ecology_kernel(e: &Ecology) -> KernelReport {
    ecology_kernel_with(e, Centering::Uniform)
}

pub fn ecology_kernel_with(e: &Ecology, centering: Centering) -> KernelReport {
    let n = e.n_worlds();
    let d = DMatrix::from_row_slice(n, n, &e.distance_matrix().concat());
    let j = centering_matrix(n, centering, e.prior());
    let mut k = -0.5 * &j * d * j.transpose();
    // Symmetrize away rounding before the eigensolve.
    k = 0.5 * (&k + k.transpose());
    let eigenvalues = symmetric_spectrum(&k);
    KernelReport {
        worlds: e.worlds().to_vec(),
        centering,
        dsigma: e.distance_matrix(),
        kernel: to_rows(&k),
        rank: numerical_rank(&eigenvalues),
        eigenvalues,
        embedding: to_rows(&embedding(e)),
    }
}

/// The ecology restricted to the first world of each quotient cell.
pub fn collapse_to_quotient(e: &Ecology) -> Result<Ecology> {
    let q = e.quotient_partition(0.0)?;
    let reps: Vec<usize> = q.cells().iter().map(|c| c[0]).collect();
    e.restrict_worlds(&reps)
}

/// Rank of the uniformly centered Gram matrix of a set of code vectors.
pub fn centered_gram_rank(codes: &[Vec<f64>]) -> Result<usize> {
    let n = codes.len();
    if n == 0 {
        return Ok(0);
    }
    let d = codes[0].len();
    if codes.iter().any(|c| c.len() != d) {
        return Err(Error::Dimension("code vectors differ in length".into()));
    }
    let h = DMatrix::from_row_slice(n, d, &codes.concat());
    let j = centering_matrix(n, Centering::Uniform, &[]);
    let g = &j * &h * h.transpose() * &j;
    let g = 0.5 * (&g + g.transpose());
    Ok(numerical_rank(&symmetric_spectrum(&g)))
}

// ---------------------------------------------------------------------------
// kNN stability

#[derive(Clone, Debug, Serialize)]
pub struct KnnReport {
    pub k: usize,
    /// `r_{k+1}(i) − r_k(i)` per point.
    pub margins: Vec<f64>,
    pub gamma_k: f64,
    /// Perturbations with sup-norm strictly below this keep the graph.
    pub stable_under: f64,
    /// `γ_k = 0`: a tie at the k-th neighbor, so no stability guarantee.
    pub zero_margin: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KnnComparison {
    pub report: KnnReport,
    pub graphs_equal: bool,
    pub sup_perturbation: f64,
}

fn check_metric(d: &[Vec<f64>], name: &str) -> Result<()> {
    let n = d.len();
    for (i, row) in d.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension(format!("{name} is not square")));
        }
        if row[i] != 0.0 {
            return Err(Error::Validation(format!("{name} has nonzero diagonal at {i}")));
        }
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() || (x - d[j][i]).abs() > 1e-12 {
                return Err(Error::Validation(format!("{name} is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Neighbors of `i` sorted by distance, ties broken by index.
fn ranked(d: &[Vec<f64>], i: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..d.len()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| d[i][a].total_cmp(&d[i][b]).then(a.cmp(&b)));
    others
}

/// Directed k-nearest-neighbor sets, each sorted by index.
pub fn knn_graph(d: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..d.len())
        .map(|i| {
            let mut nn = ranked(d, i)[..k].to_vec();
            nn.sort_unstable();
            nn
        })
        .collect()
}

pub fn knn_report(d: &[Vec<f64>], k: usize) -> Result<KnnReport> {
    check_metric(d, "d")?;
    let n = d.len();
    if k == 0 || n < k + 2 {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ k and N ≥ k + 2 (got k = {k}, N = {n})"
        )));
    }
    let margins: Vec<f64> = (0..n)
        .map(|i| {
            let r = ranked(d, i);
            d[i][r[k]] - d[i][r[k - 1]]
        })
        .collect();
    let gamma_k = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(KnnReport {
        k,
        margins,
        gamma_k,
        stable_under: gamma_k / 2.0,
        zero_margin: gamma_k == 0.0,
    })
}

pub fn knn_stability(d: &[Vec<f64>], dhat: &[Vec<f64>], k: usize) -> Result<KnnComparison> {
    let report = knn_report(d, k)?;
    check_metric(dhat, "dhat")?;
    if dhat.len() != d.len() {
        return Err(Error::Dimension("d and dhat differ in size".into()));
    }
    let sup = d
        .iter()
        .zip(dhat)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    Ok(KnnComparison {
        graphs_equal: knn_graph(d, k) == knn_graph(dhat, k),
        sup_perturbation: sup,
        report,
    })
}

// ---------------------------------------------------------------------------
// Gaussian-linear proportionality

#[derive(Clone, Debug, Serialize)]
pub struct PairRatio {
    pub i: usize,
    pub j: usize,
    /// `Δφᵀ Σ_c Δφ`
    pub sigma2: f64,
    /// `‖P_V Δφ‖²`
    pub proj_norm_sq: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussianLinearReport {
    pub v_dim: usize,
    /// `Σ_c` restricted to `V` is a positive multiple of the identity.
    pub isotropic: bool,
    /// That multiple, when isotropic.
    pub sigma_c_sq: Option<f64>,
    pub ratios: Vec<PairRatio>,
    /// `max ratio − min ratio`.
    pub spread: f64,
}

pub fn gaussian_linear_check(
    features: &[Vec<f64>],
    sigma_c: &[Vec<f64>],
    pairs: &[(usize, usize)],
) -> Result<GaussianLinearReport> {
    let n = features.len();
    let d = features.first().map_or(0, |f| f.len());
    if features.iter().any(|f| f.len() != d) || d == 0 {
        return Err(Error::Dimension("feature rows must share a positive dimension".into()));
    }
    if sigma_c.len() != d || sigma_c.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension(format!("sigma_c must be {d}×{d}")));
    }
    let sig = DMatrix::from_row_slice(d, d, &sigma_c.concat());
    if (&sig - sig.transpose()).amax() > 1e-12 * sig.amax().max(1.0) {
        return Err(Error::Validation("sigma_c must be symmetric".into()));
    }
    let spec = symmetric_spectrum(&sig);
    if spec.last().is_some_and(|&l| l < -1e-10 * spec[0].abs().max(1.0)) {
        return Err(Error::Validation("sigma_c must be positive semidefinite".into()));
    }
    if pairs.is_empty() {
        return Err(Error::Precondition("degenerate V: no separated pairs".into()));
    }
    let mut diffs = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        if i >= n || j >= n {
            return Err(Error::Dimension(format!("pair ({i}, {j}) out of range")));
        }
        let dv = DVector::from_iterator(d, features[i].iter().zip(&features[j]).map(|(a, b)| a - b));
        if dv.norm() == 0.0 {
            return Err(Error::InvalidArgument(format!("pair ({i}, {j}) has identical features")));
        }
        diffs.push(dv);
    }
    // Orthonormal basis of V from the left singular vectors.
    let m = DMatrix::from_columns(&diffs);
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax)
        .collect();
    if keep.is_empty() {
        return Err(Error::Precondition("degenerate V: difference vectors vanish".into()));
    }
    let basis = u.select_columns(&keep);
    let restricted = basis.transpose() * &sig * &basis;
    let r = keep.len();
    let s = restricted.trace() / r as f64;
    let dev = (&restricted - DMatrix::identity(r, r) * s).amax();
    let isotropic = s > 0.0 && dev <= 1e-8 * s.max(1.0);

    let ratios: Vec<PairRatio> = pairs
        .iter()
        .zip(&diffs)
        .map(|(&(i, j), dv)| {
            let sigma2 = (dv.transpose() * &sig * dv)[(0, 0)];
            let proj_norm_sq = (basis.transpose() * dv).norm_squared();
            PairRatio {
                i,
                j,
                sigma2,
                proj_norm_sq,
                ratio: sigma2 / proj_norm_sq,
            }
        })
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.ratio), hi.max(p.ratio)));
    Ok(GaussianLinearReport {
        v_dim: r,
        isotropic,
        sigma_c_sq: isotropic.then_some(s),
        ratios,
        spread: hi - lo,
    })
}
