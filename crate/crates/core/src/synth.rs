//! Small named ecologies and seeded random generators for tests and demos.

use rand::Rng;

use crate::ecology::{Context, Ecology};

fn ids(prefix: &str, n: usize, from: usize) -> Vec<String> {
    (from..from + n).map(|i| format!("{prefix}{i}")).collect()
}

fn letters(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("t{i}")
            }
        })
        .collect()
}

/// One context of mass one, uniform prior, world `w{i+1}` has row `rows[i]`.
pub fn single_context(rows: &[&[f64]]) -> Ecology {
    let n_v = rows[0].len();
    Ecology::new(
        ids("w", rows.len(), 1),
        vec![1.0 / rows.len() as f64; rows.len()],
        letters(n_v),
        vec![Context {
            id: "c0".into(),
            mass: 1.0,
        }],
        rows.iter().map(|r| vec![r.to_vec()]).collect(),
    )
    .expect("valid single-context ecology")
}

/// Two uniform worlds with mutually singular rows on one context.
pub fn eco_a() -> Ecology {
    single_context(&[&[1.0, 0.0], &[0.0, 1.0]])
}

/// Three uniform worlds; `w1` and `w2` share a row, `w3` is singular to both.
pub fn eco_b() -> Ecology {
    single_context(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]])
}

/// An auxiliary ecology on ECO-B's worlds that separates `w1` from `w2`.
pub fn eco_b_splitter() -> Ecology {
    single_context(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]])
}

/// Two uniform worlds split only by a context of mass `1/(2 ln 2)`, so
/// merging them costs exactly one half nat; the other context is uninformative.
pub fn certification_toy() -> Ecology {
    let m = 0.5 / std::f64::consts::LN_2;
    Ecology::new(
        ids("w", 2, 1),
        vec![0.5, 0.5],
        letters(2),
        vec![
            Context { id: "c1".into(), mass: m },
            Context { id: "c2".into(), mass: 1.0 - m },
        ],
        vec![
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
        ],
    )
    .expect("valid toy ecology")
}

/// `n` uniform worlds, `n_c` uniform contexts, every row equal to `row`.
pub fn constant_rows(n: usize, n_c: usize, row: &[f64]) -> Ecology {
    let contexts = ids("c", n_c, 0)
        .into_iter()
        .map(|id| Context {
            id,
            mass: 1.0 / n_c as f64,
        })
        .collect();
    Ecology::new(
        ids("w", n, 1),
        vec![1.0 / n as f64; n],
        letters(row.len()),
        contexts,
        vec![vec![row.to_vec(); n_c]; n],
    )
    .expect("valid constant ecology")
}

/// Shape and sparsity of a random ecology.
#[derive(Clone, Debug)]
pub struct RandomSpec {
    pub worlds: usize,
    pub contexts: usize,
    pub vocab: usize,
    /// Probability that a world copies all rows of an earlier world.
    pub duplicate_prob: f64,
    /// Probability that an entry is zeroed before normalization.
    pub zero_prob: f64,
    pub uniform_prior: bool,
}

impl RandomSpec {
    pub fn new(worlds: usize, contexts: usize, vocab: usize) -> Self {
        Self {
            worlds,
            contexts,
            vocab,
            duplicate_prob: 0.0,
            zero_prob: 0.0,
            uniform_prior: false,
        }
    }

    pub fn with_duplicates(mut self, p: f64) -> Self {
        self.duplicate_prob = p;
        self
    }

    pub fn with_zeros(mut self, p: f64) -> Self {
        self.zero_prob = p;
        self
    }

    pub fn with_uniform_prior(mut self) -> Self {
        self.uniform_prior = true;
        self
    }
}

/// A random probability vector: exponential weights, optional sparsity,
/// never all-zero.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize, zero_prob: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            if zero_prob > 0.0 && rng.random::<f64>() < zero_prob {
                0.0
            } else {
                -(1.0 - rng.random::<f64>()).ln()
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        let i = rng.random_range(0..n);
        v[i] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// A random ecology; duplicated worlds give nontrivial quotients.
pub fn random_ecology<R: Rng + ?Sized>(rng: &mut R, spec: &RandomSpec) -> Ecology {
    let (n, n_c, n_v) = (spec.worlds, spec.contexts, spec.vocab);
    let prior = if spec.uniform_prior {
        vec![1.0 / n as f64; n]
    } else {
        (0..n).map(|_| 0.2 + rng.random::<f64>()).collect::<Vec<_>>()
    };
    let total: f64 = prior.iter().sum();
    let prior = prior.iter().map(|p| p / total).collect();
    let masses = random_simplex(rng, n_c, 0.0);
    let contexts = ids("c", n_c, 0)
        .into_iter()
        .zip(masses)
        .map(|(id, mass)| Context { id, mass })
        .collect();
    let mut cond: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
    for w in 0..n {
        if w > 0 && spec.duplicate_prob > 0.0 && rng.random::<f64>() < spec.duplicate_prob {
            let src = rng.random_range(0..w);
            cond.push(cond[src].clone());
        } else {
            cond.push((0..n_c).map(|_| random_simplex(rng, n_v, spec.zero_prob)).collect());
        }
    }
    Ecology::new(ids("w", n, 1), prior, letters(n_v), contexts, cond)
        .expect("generator produces valid ecologies")
}
