//! Contrastive matching losses over unit embeddings.
//!
//! For child embeddings fc_i and parent embeddings fp_j (all unit rows)
//! with true-parent labels y_i:
//!
//! * plain loss: L = −(1/N_c) Σ_i log( e^{s·cosθ_{i,y_i}} / Σ_j e^{s·cosθ_{i,j}} )
//! * margin loss: the true pair's angle is penalized by m before scaling,
//!   L = −(1/N_c) Σ_i log( e^{s·cos(θ_{i,y_i}+m)} /
//!       (e^{s·cos(θ_{i,y_i}+m)} + Σ_{j≠y_i} e^{s·cosθ_{i,j}}) )
//!
//! cos(θ+m) is evaluated through the angle-addition identity
//! cosθ·cos m − sinθ·sin m with sinθ = √(max(0, 1−cos²θ)), which is exact
//! at the cosθ = ±1 boundary and makes m = 0 reduce to the plain loss
//! bitwise. Both losses use max-subtracted log-sum-exp. The backward pass
//! floors sinθ at 1e-7 to tame the d cos(θ+m)/d cosθ = sin(θ+m)/sinθ
//! chain term near θ ∈ {0, π}.

use crate::error::{Error, Result};
use crate::matcher::model::check_hyperparams;

/// sinθ floor used only in the backward chain term.
pub const SIN_FLOOR: f64 = 1e-7;

/// Unit-row tolerance enforced on batch construction.
pub const UNIT_TOL: f64 = 1e-9;

/// One training batch: N_c children against N_p candidate parents.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchBatch {
    children: Vec<Vec<f64>>,
    parents: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl MatchBatch {
    pub fn new(
        children: Vec<Vec<f64>>,
        parents: Vec<Vec<f64>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if children.is_empty() || parents.is_empty() {
            return Err(Error::Validation("batch needs children and parents".into()));
        }
        if labels.len() != children.len() {
            return Err(Error::Validation(format!(
                "{} labels for {} children",
                labels.len(),
                children.len()
            )));
        }
        let e = children[0].len();
        for row in children.iter().chain(&parents) {
            if row.len() != e {
                return Err(Error::Validation("embedding rows have mixed dimensions".into()));
            }
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::Validation(format!(
                    "embedding row has norm {norm}, expected 1"
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= parents.len()) {
            return Err(Error::Validation(format!(
                "label {bad} out of range for {} parents",
                parents.len()
            )));
        }
        Ok(MatchBatch {
            children,
            parents,
            labels,
        })
    }

    pub fn n_children(&self) -> usize {
        self.children.len()
    }

    pub fn n_parents(&self) -> usize {
        self.parents.len()
    }

    pub fn dim(&self) -> usize {
        self.children[0].len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// cosθ_{i,j} for one child against every parent.
    fn cosines(&self, i: usize) -> Vec<f64> {
        let fc = &self.children[i];
        self.parents
            .iter()
            .map(|fp| fc.iter().zip(fp).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// −log softmax_y of the logits, max-subtracted.
fn nll(logits: &[f64], y: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse: f64 = logits.iter().map(|&a| (a - max).exp()).sum::<f64>().ln();
    lse + max - logits[y]
}

/// Softmax probabilities of the logits, max-subtracted.
fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&a| (a - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// cos(θ+m) from cosθ, plus the sinθ it used.
fn margin_cos(c: f64, cos_m: f64, sin_m: f64) -> (f64, f64) {
    let sin_theta = (1.0 - c * c).max(0.0).sqrt();
    (c * cos_m - sin_theta * sin_m, sin_theta)
}

/// Per-child logit row of the margin loss; position y holds the
/// margin-penalized true-pair logit.
fn margin_logits(cos: &[f64], y: usize, s: f64, cos_m: f64, sin_m: f64) -> (Vec<f64>, f64) {
    let mut logits: Vec<f64> = cos.iter().map(|&c| s * c).collect();
    let (my, sin_theta) = margin_cos(cos[y], cos_m, sin_m);
    logits[y] = s * my;
    (logits, sin_theta)
}

/// Plain contrastive loss (no margin).
pub fn clip_loss(batch: &MatchBatch, s: f64) -> Result<f64> {
    check_hyperparams(s, 0.0)?;
    let total: f64 = (0..batch.n_children())
        .map(|i| {
            let logits: Vec<f64> = batch.cosines(i).iter().map(|&c| s * c).collect();
            nll(&logits, batch.labels[i])
        })
        .sum();
    Ok(total / batch.n_children() as f64)
}

/// Margin loss forward value.
pub fn margin_loss_forward(batch: &MatchBatch, s: f64, m: f64) -> Result<f64> {
    check_hyperparams(s, m)?;
    let (cos_m, sin_m) = (m.cos(), m.sin());
    let total: f64 = (0..batch.n_children())
        .map(|i| {
            let (logits, _) = margin_logits(&batch.cosines(i), batch.labels[i], s, cos_m, sin_m);
            nll(&logits, batch.labels[i])
        })
        .sum();
    Ok(total / batch.n_children() as f64)
}

/// Loss value plus exact gradients w.r.t. both embedding matrices.
pub struct LossGrads {
    pub loss: f64,
    /// N_c × E.
    pub d_children: Vec<Vec<f64>>,
    /// N_p × E.
    pub d_parents: Vec<Vec<f64>>,
}

/// Margin loss with analytic gradients.
///
/// With softmax p over the margin logit row, ∂L_i/∂cosθ_{i,j} is
/// s·p_j for j ≠ y_i and (p_y − 1)·s·(cos m + cosθ·sin m / sinθ) for the
/// true pair; gradients distribute onto fc_i and fp_j through the
/// bilinear cosine.
pub fn margin_loss_backward(batch: &MatchBatch, s: f64, m: f64) -> Result<LossGrads> {
    check_hyperparams(s, m)?;
    let (cos_m, sin_m) = (m.cos(), m.sin());
    let (n_c, e) = (batch.n_children(), batch.dim());
    let n = n_c as f64;
    let mut d_children = vec![vec![0.0; e]; n_c];
    let mut d_parents = vec![vec![0.0; e]; batch.n_parents()];
    let mut total = 0.0;

    for i in 0..n_c {
        let y = batch.labels[i];
        let cos = batch.cosines(i);
        let (logits, sin_theta) = margin_logits(&cos, y, s, cos_m, sin_m);
        total += nll(&logits, y);
        let p = softmax(&logits);
        let chain_y = s * (cos_m + cos[y] * sin_m / sin_theta.max(SIN_FLOOR));
        let fc = &batch.children[i];
        for (j, fp) in batch.parents.iter().enumerate() {
            let d_cos = if j == y {
                (p[y] - 1.0) * chain_y
            } else {
                p[j] * s
            } / n;
            if d_cos == 0.0 {
                continue;
            }
            for k in 0..e {
                d_children[i][k] += d_cos * fp[k];
                d_parents[j][k] += d_cos * fc[k];
            }
        }
    }
    Ok(LossGrads {
        loss: total / n,
        d_children,
        d_parents,
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    pub fn random_unit_rows(rng: &mut ChaCha8Rng, n: usize, e: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                loop {
                    let v: Vec<f64> = (0..e).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 1e-3 {
                        return v.into_iter().map(|x| x / norm).collect();
                    }
                }
            })
            .collect()
    }

    pub fn random_batch(rng: &mut ChaCha8Rng, max_nc: usize, max_np: usize, max_e: usize) -> MatchBatch {
        let n_c = rng.gen_range(1..=max_nc);
        let n_p = rng.gen_range(1..=max_np);
        let e = rng.gen_range(2..=max_e);
        let children = random_unit_rows(rng, n_c, e);
        let parents = random_unit_rows(rng, n_p, e);
        let labels = (0..n_c).map(|_| rng.gen_range(0..n_p)).collect();
        MatchBatch::new(children, parents, labels).unwrap()
    }

    /// Like `random_batch`, but resamples until every true pair sits away
    /// from |cos| = 1, where the margin term sqrt(1 - cos^2) is not
    /// differentiable and finite differences are meaningless.
    pub fn random_smooth_batch(
        rng: &mut ChaCha8Rng,
        max_nc: usize,
        max_np: usize,
        max_e: usize,
        min_sin: f64,
    ) -> MatchBatch {
        loop {
            let b = random_batch(rng, max_nc, max_np, max_e);
            let ok = (0..b.n_children()).all(|i| {
                let c = b.cosines(i)[b.labels()[i]];
                (1.0 - c * c).max(0.0).sqrt() >= min_sin
            });
            if ok {
                return b;
            }
        }
    }

    /// Random orthogonal matrix as a product of Givens rotations.
    pub fn random_rotation(rng: &mut ChaCha8Rng, e: usize) -> Vec<Vec<f64>> {
        let mut q: Vec<Vec<f64>> = (0..e)
            .map(|i| (0..e).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for _ in 0..3 * e {
            let a = rng.gen_range(0..e);
            let b = rng.gen_range(0..e);
            if a == b {
                continue;
            }
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (c, s) = (t.cos(), t.sin());
            for row in &mut q {
                let (ra, rb) = (row[a], row[b]);
                row[a] = c * ra - s * rb;
                row[b] = s * ra + c * rb;
            }
        }
        q
    }

    pub fn rotate_rows(rows: &[Vec<f64>], q: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                (0..q[0].len())
                    .map(|j| (0..r.len()).map(|k| r[k] * q[k][j]).sum())
                    .collect()
            })
            .collect()
    }
}
