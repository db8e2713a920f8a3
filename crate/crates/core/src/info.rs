//! Information-theoretic primitives on finite distributions, all in nats.
//!
//! Conventions: `0 · ln(0/q) = 0`. A KL term with `p > 0` and `q = 0` is
//! infinite; inside a mixture this cannot happen, and callers that rely on
//! that assert it.

/// Shannon entropy `H(p)`.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum()
}

/// Binary entropy `h(λ)`.
pub fn binary_entropy(lambda: f64) -> f64 {
    entropy(&[lambda, 1.0 - lambda])
}

/// `KL(p ‖ q)`; `f64::INFINITY` when `p` is not dominated by `q`.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut acc = 0.0;
    for (&pv, &qv) in p.iter().zip(q) {
        if pv > 0.0 {
            if qv <= 0.0 {
                return f64::INFINITY;
            }
            acc += pv * (pv / qv).ln();
        }
    }
    acc
}

/// Cross-entropy `CE(p, q) = H(p) + KL(p ‖ q)`.
pub fn cross_entropy(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pv, &qv) in p.iter().zip(q) {
        if pv > 0.0 {
            if qv <= 0.0 {
                return f64::INFINITY;
            }
            acc -= pv * qv.ln();
        }
    }
    acc
}

/// Weighted mixture `Σ_i w_i p_i`.
pub fn mixture(weights: &[f64], dists: &[&[f64]]) -> Vec<f64> {
    debug_assert_eq!(weights.len(), dists.len());
    let len = dists.first().map_or(0, |d| d.len());
    let mut out = vec![0.0; len];
    for (&w, d) in weights.iter().zip(dists) {
        for (o, &x) in out.iter_mut().zip(d.iter()) {
            *o += w * x;
        }
    }
    out
}

/// Weighted Jensen–Shannon divergence `Σ_i w_i KL(p_i ‖ Σ_j w_j p_j)`.
///
/// Weights must sum to one. Components with zero weight are ignored. The
/// result is clamped at zero: identical rows can otherwise round to `-1e-17`.
pub fn weighted_js(weights: &[f64], dists: &[&[f64]]) -> f64 {
    let mix = mixture(weights, dists);
    let mut acc = 0.0;
    for (&w, d) in weights.iter().zip(dists) {
        if w > 0.0 {
            let term = kl(d, &mix);
            assert!(
                term.is_finite(),
                "mixture must dominate its positive-weight components"
            );
            acc += w * term;
        }
    }
    acc.max(0.0)
}

/// Two-component Jensen–Shannon divergence `JS_λ(p, q)` with weight `λ` on `p`.
pub fn js2(lambda: f64, p: &[f64], q: &[f64]) -> f64 {
    weighted_js(&[lambda, 1.0 - lambda], &[p, q])
}

/// Squared Hellinger distance `½ Σ_v (√p − √q)²`, in `[0, 1]`.
pub fn hellinger_sq(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum::<f64>()
}
