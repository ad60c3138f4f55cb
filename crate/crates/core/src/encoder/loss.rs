//! Similarity-based losses, each with its gradient with respect to the logits.

use super::params::dot;

/// `S_ij = v_i · t_j`.
pub fn cosine_sim_matrix(v: &[Vec<f64>], t: &[Vec<f64>]) -> Vec<Vec<f64>> {
    v.iter().map(|vi| t.iter().map(|tj| dot(vi, tj)).collect()).collect()
}

pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(x);
    x.iter().map(|v| (v - lse).exp()).collect()
}

/// Cross-entropy of `softmax(logits)` against `target`, and its gradient.
pub fn cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let lse = log_sum_exp(logits);
    let mut g: Vec<f64> = logits.iter().map(|v| (v - lse).exp()).collect();
    g[target] -= 1.0;
    (lse - logits[target], g)
}

/// Symmetric contrastive loss ½(CE_rows + CE_cols) over logits `S / τ`.
/// Returns the loss and dL/dlogits.
pub fn clip_from_logits(logits: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
    let n = logits.len();
    let scale = 0.5 / n as f64;
    let mut grad = vec![vec![0.0; n]; n];
    let mut rows = 0.0;
    for (i, row) in logits.iter().enumerate() {
        let (l, g) = cross_entropy(row, i);
        rows += l;
        for (dst, gj) in grad[i].iter_mut().zip(&g) {
            *dst += scale * gj;
        }
    }
    let mut cols = 0.0;
    for j in 0..n {
        let col: Vec<f64> = logits.iter().map(|r| r[j]).collect();
        let (l, g) = cross_entropy(&col, j);
        cols += l;
        for (i, gi) in g.iter().enumerate() {
            grad[i][j] += scale * gi;
        }
    }
    (0.5 * (rows / n as f64 + cols / n as f64), grad)
}

/// Image-to-text cross-entropy over a rectangular logit matrix whose row
/// `i` has its match at column `targets[i]`.
pub fn clip_rows_from_logits(logits: &[Vec<f64>], targets: &[usize]) -> (f64, Vec<Vec<f64>>) {
    let n = logits.len() as f64;
    let mut total = 0.0;
    let grad = logits
        .iter()
        .zip(targets)
        .map(|(row, &t)| {
            let (l, g) = cross_entropy(row, t);
            total += l;
            g.into_iter().map(|v| v / n).collect()
        })
        .collect();
    (total / n, grad)
}

pub fn loss_clip(s: &[Vec<f64>], tau: f64) -> f64 {
    let logits: Vec<Vec<f64>> = s.iter().map(|r| r.iter().map(|v| v / tau).collect()).collect();
    clip_from_logits(&logits).0
}

/// −log softmax(cos(v, t_m)/τ)[pos].
pub fn loss_mc(v: &[f64], options: &[Vec<f64>], pos: usize, tau: f64) -> f64 {
    let logits: Vec<f64> = options.iter().map(|t| dot(v, t) / tau).collect();
    cross_entropy(&logits, pos).0
}

/// ln(1 + eˣ) without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy with logistic link over the scores, and its
/// gradient with respect to the scores.
pub fn logic_from_scores(scores: &[f64], targets: &[f64]) -> (f64, Vec<f64>) {
    let k = scores.len() as f64;
    let mut total = 0.0;
    let grad = scores
        .iter()
        .zip(targets)
        .map(|(&s, &y)| {
            total += softplus(s) - y * s;
            (sigmoid(s) - y) / k
        })
        .collect();
    (total / k, grad)
}

pub fn loss_logic(scores: &[f64], targets: &[f64]) -> f64 {
    logic_from_scores(scores, targets).0
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn clip_oracles() {
        let s = vec![vec![0.3; 2]; 2];
        assert!((loss_clip(&s, 0.07) - 2f64.ln()).abs() < 1e-12);
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let expected = (1.0 + (-1f64).exp()).ln();
        assert!((loss_clip(&id, 1.0) - expected).abs() < 1e-12);
        assert!((expected - 0.313262).abs() < 1e-6);
        assert!(loss_clip(&id, 1e-3) < 1e-12);
    }

    #[test]
    fn mc_oracles() {
        let v = vec![1.0, 0.0];
        let eq = vec![vec![0.5, 0.5]; 4];
        assert!((loss_mc(&v, &eq, 0, 0.07) - 4f64.ln()).abs() < 1e-12);
        let eq5 = vec![vec![0.5, 0.5]; 5];
        assert!((loss_mc(&v, &eq5, 3, 0.07) - 5f64.ln()).abs() < 1e-12);
        let opts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let e = 1f64.exp();
        assert!((loss_mc(&v, &opts, 0, 1.0) - -(e / (e + 3.0)).ln()).abs() < 1e-12);
    }

    #[test]
    fn logic_oracles() {
        let y = [1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert!((loss_logic(&[0.0; 9], &y) - 2f64.ln()).abs() < 1e-15);
        let s: Vec<f64> = y.iter().map(|&t| if t == 1.0 { 20.0 } else { -20.0 }).collect();
        assert!(loss_logic(&s, &y) < 1e-8);
    }

    fn naive_logic(s: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for k in 0..s.len() {
            let p = 1.0 / (1.0 + (-s[k]).exp());
            total += -(y[k] * p.ln() + (1.0 - y[k]) * (1.0 - p).ln());
        }
        total / s.len() as f64
    }

    fn naive_sim(v: &[Vec<f64>], t: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut s = vec![vec![0.0; t.len()]; v.len()];
        for i in 0..v.len() {
            for j in 0..t.len() {
                for k in 0..v[i].len() {
                    s[i][j] += v[i][k] * t[j][k];
                }
            }
        }
        s
    }

    proptest! {
        #[test]
        fn logic_matches_scalar_loop(s in prop::collection::vec(-5.0..5.0f64, 9), bits in prop::collection::vec(any::<bool>(), 9)) {
            let y: Vec<f64> = bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            prop_assert!((loss_logic(&s, &y) - naive_logic(&s, &y)).abs() < 1e-12);
        }

        #[test]
        fn sim_matches_double_loop(v in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 8), 3),
                                   t in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 8), 3)) {
            let a = cosine_sim_matrix(&v, &t);
            let b = naive_sim(&v, &t);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((a[i][j] - b[i][j]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn clip_is_symmetric(s in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 5), 5), tau in 0.05..2.0f64) {
            let st: Vec<Vec<f64>> = (0..5).map(|j| (0..5).map(|i| s[i][j]).collect()).collect();
            prop_assert!((loss_clip(&s, tau) - loss_clip(&st, tau)).abs() < 1e-12);
        }

        #[test]
        fn mc_permutation_invariant(opts in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 4),
                                    v in prop::collection::vec(-1.0..1.0f64, 4), pos in 0usize..4, rot in 0usize..4) {
            let a = loss_mc(&v, &opts, pos, 0.3);
            let mut rotated = opts.clone();
            rotated.rotate_left(rot);
            let new_pos = (pos + 4 - rot) % 4;
            prop_assert!((a - loss_mc(&v, &rotated, new_pos, 0.3)).abs() < 1e-12);
        }

        #[test]
        fn ce_shift_invariant(logits in prop::collection::vec(-10.0..10.0f64, 4), c in -50.0..50.0f64, pos in 0usize..4) {
            let shifted: Vec<f64> = logits.iter().map(|l| l + c).collect();
            prop_assert!((cross_entropy(&logits, pos).0 - cross_entropy(&shifted, pos).0).abs() < 1e-9);
        }
    }
}
