use serde::Serialize;

use super::{Context, Ecology};
use crate::error::{Error, Result};
use crate::info::{entropy, hellinger_sq, weighted_js};
use crate::partition::Partition;

/// One cell's share of the excess loss.
#[derive(Clone, Debug, Serialize)]
pub struct CellExcess {
    pub cell: usize,
    pub members: Vec<usize>,
    /// `π_x`
    pub mass: f64,
    /// `E_c[JS_{α_x}]` over the cell's rows.
    pub mean_js: f64,
    /// `π_x · mean_js`
    pub contribution: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub floor: f64,
    pub optimal_loss: f64,
    pub excess: f64,
    /// `H(Y|C,X)` evaluated directly from the joint law, for cross-checking.
    pub joint_conditional_entropy: f64,
    pub per_cell: Vec<CellExcess>,
    /// `mass(c) Σ_x π_x JS_{α_x}(c)` per context.
    pub per_context: Vec<f64>,
    /// `decoder[x][c]` is the cell-average row `P̄_x(·|c)`.
    pub decoder: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    pub a: String,
    pub b: String,
    pub sigma2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationStructure {
    pub pairs: Vec<PairDistance>,
    pub separated: Vec<PairDistance>,
    /// Smallest separated distance; `None` when nothing is separated.
    pub margin: Option<f64>,
}

impl Ecology {
    /// `H(Y|C,W) = E_{w,c} H(P_w(·|c))`.
    pub fn entropy_floor(&self) -> f64 {
        let mut acc = 0.0;
        for (w, &pw) in self.prior.iter().enumerate() {
            for c in 0..self.n_contexts() {
                acc += pw * self.mass(c) * entropy(self.row(w, c));
            }
        }
        acc
    }

    fn check_partition(&self, p: &Partition) -> Result<()> {
        if p.len() != self.n_worlds() {
            return Err(Error::Dimension(format!(
                "partition covers {} worlds, ecology has {}",
                p.len(),
                self.n_worlds()
            )));
        }
        Ok(())
    }

    /// Cell-average row `P̄_S(·|c)` of a set of worlds, and the set's prior mass.
    pub fn cell_average(&self, members: &[usize], c: usize) -> (f64, Vec<f64>) {
        let pi_s: f64 = members.iter().map(|&w| self.prior[w]).sum();
        let mut avg = vec![0.0; self.vocab_len()];
        for &w in members {
            let a = self.prior[w] / pi_s;
            for (o, &x) in avg.iter_mut().zip(self.row(w, c)) {
                *o += a * x;
            }
        }
        (pi_s, avg)
    }

    /// `E_c[JS_α]` within a set of worlds, weights `α(w) = π(w)/π_S`, and `π_S`.
    pub fn set_mean_js(&self, members: &[usize]) -> (f64, f64) {
        let pi_s: f64 = members.iter().map(|&w| self.prior[w]).sum();
        if members.len() < 2 {
            return (pi_s, 0.0);
        }
        let alpha: Vec<f64> = members.iter().map(|&w| self.prior[w] / pi_s).collect();
        let mut mean = 0.0;
        for c in 0..self.n_contexts() {
            let m = self.mass(c);
            if m == 0.0 {
                continue;
            }
            let rows: Vec<&[f64]> = members.iter().map(|&w| self.row(w, c)).collect();
            mean += m * weighted_js(&alpha, &rows);
        }
        (pi_s, mean)
    }

    /// Excess contributed by one cell: `π_S · E_c[JS_α]`.
    pub fn set_excess(&self, members: &[usize]) -> f64 {
        let (pi_s, mean) = self.set_mean_js(members);
        pi_s * mean
    }

    /// Excess `L*_D(p) − H(Y|C,W)` without building a full report.
    pub fn excess(&self, p: &Partition) -> Result<f64> {
        self.check_partition(p)?;
        Ok(p.cells().iter().map(|m| self.set_excess(m)).sum())
    }

    /// Exact decomposition of the Bayes-optimal loss of encoding `p`.
    pub fn decompose(&self, p: &Partition) -> Result<DecompositionReport> {
        self.check_partition(p)?;
        let cells = p.cells();
        let n_c = self.n_contexts();
        let mut per_context = vec![0.0; n_c];
        let mut per_cell = Vec::with_capacity(cells.len());
        let mut decoder = Vec::with_capacity(cells.len());
        for (x, members) in cells.iter().enumerate() {
            let pi_x: f64 = members.iter().map(|&w| self.prior[w]).sum();
            let alpha: Vec<f64> = members.iter().map(|&w| self.prior[w] / pi_x).collect();
            let mut mean_js = 0.0;
            let mut rows_x = Vec::with_capacity(n_c);
            for (c, slot) in per_context.iter_mut().enumerate() {
                let rows: Vec<&[f64]> = members.iter().map(|&w| self.row(w, c)).collect();
                let js = if members.len() > 1 {
                    weighted_js(&alpha, &rows)
                } else {
                    0.0
                };
                mean_js += self.mass(c) * js;
                *slot += self.mass(c) * pi_x * js;
                rows_x.push(self.cell_average(members, c).1);
            }
            per_cell.push(CellExcess {
                cell: x,
                members: members.clone(),
                mass: pi_x,
                mean_js,
                contribution: pi_x * mean_js,
            });
            decoder.push(rows_x);
        }
        let floor = self.entropy_floor();
        let excess: f64 = per_cell.iter().map(|c| c.contribution).sum();
        Ok(DecompositionReport {
            floor,
            optimal_loss: floor + excess,
            excess,
            joint_conditional_entropy: self.joint_conditional_entropy(p)?,
            per_cell,
            per_context,
            decoder,
        })
    }

    /// `H(Y|C,X)` from the joint law `P(c, x, y)`, with no reference to divergences.
    pub fn joint_conditional_entropy(&self, p: &Partition) -> Result<f64> {
        self.check_partition(p)?;
        let k = p.cell_count();
        let n_v = self.vocab_len();
        let mut acc = 0.0;
        for c in 0..self.n_contexts() {
            let mut joint = vec![0.0; k * n_v];
            for (w, &l) in p.labels().iter().enumerate() {
                for (v, &pr) in self.row(w, c).iter().enumerate() {
                    joint[l * n_v + v] += self.prior[w] * pr;
                }
            }
            for cell in joint.chunks(n_v) {
                let px: f64 = cell.iter().sum();
                for &pxy in cell {
                    if pxy > 0.0 {
                        acc -= self.mass(c) * pxy * (pxy / px).ln();
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Task distance `σ²` between worlds by index.
    pub fn task_distance_idx(&self, i: usize, j: usize) -> f64 {
        (0..self.n_contexts())
            .map(|c| self.mass(c) * hellinger_sq(self.row(i, c), self.row(j, c)))
            .sum()
    }

    /// Task distance `σ²` between worlds by id.
    pub fn task_distance(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.task_distance_idx(self.world_index(a)?, self.world_index(b)?))
    }

    /// Symmetric `N × N` matrix of task distances.
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n_worlds();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let s = self.task_distance_idx(i, j);
                d[i][j] = s;
                d[j][i] = s;
            }
        }
        d
    }

    pub fn separation_structure(&self, tol: f64) -> Result<SeparationStructure> {
        check_tol(tol)?;
        let n = self.n_worlds();
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push(PairDistance {
                    i,
                    j,
                    a: self.worlds[i].clone(),
                    b: self.worlds[j].clone(),
                    sigma2: self.task_distance_idx(i, j),
                });
            }
        }
        let separated: Vec<PairDistance> =
            pairs.iter().filter(|p| p.sigma2 > tol).cloned().collect();
        let margin = separated.iter().map(|p| p.sigma2).reduce(f64::min);
        Ok(SeparationStructure {
            pairs,
            separated,
            margin,
        })
    }

    /// Equivalence classes of `σ² ≤ tol`; the relation must be transitive.
    pub fn quotient_partition(&self, tol: f64) -> Result<Partition> {
        check_tol(tol)?;
        let d = self.distance_matrix();
        let n = self.n_worlds();
        for a in 0..n {
            for b in 0..n {
                if b == a || d[a][b] > tol {
                    continue;
                }
                for c in 0..n {
                    if c != a && c != b && d[b][c] <= tol && d[a][c] > tol {
                        return Err(Error::NonTransitive {
                            a: self.worlds[a].clone(),
                            b: self.worlds[b].clone(),
                            c: self.worlds[c].clone(),
                        });
                    }
                }
            }
        }
        let mut raw = vec![usize::MAX; n];
        for i in 0..n {
            if raw[i] == usize::MAX {
                raw[i] = i;
                for j in i + 1..n {
                    if d[i][j] <= tol {
                        raw[j] = i;
                    }
                }
            }
        }
        Ok(Partition::canonicalize(&raw))
    }

    /// The mixed ecology `(1−α)·self + α·nu` over the union of both context lists.
    ///
    /// A context id of `nu` that collides with one of `self` is renamed `id@aux`.
    pub fn expand(&self, nu: &Ecology, alpha: f64) -> Result<Ecology> {
        self.require_shared(nu, "expand")?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} is outside [0, 1]")));
        }
        let mut contexts: Vec<Context> = self
            .contexts
            .iter()
            .map(|c| Context {
                id: c.id.clone(),
                mass: (1.0 - alpha) * c.mass,
            })
            .collect();
        for c in &nu.contexts {
            let mut id = c.id.clone();
            while contexts.iter().any(|x| x.id == id) {
                id.push_str("@aux");
            }
            contexts.push(Context {
                id,
                mass: alpha * c.mass,
            });
        }
        let mut cond = Vec::with_capacity(self.cond.len() + nu.cond.len());
        for w in 0..self.n_worlds() {
            for c in 0..self.n_contexts() {
                cond.extend_from_slice(self.row(w, c));
            }
            for c in 0..nu.n_contexts() {
                cond.extend_from_slice(nu.row(w, c));
            }
        }
        Ecology::from_flat(
            self.worlds.clone(),
            self.prior.clone(),
            self.vocab.clone(),
            contexts,
            cond,
        )
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be nonnegative")));
    }
    Ok(())
}
