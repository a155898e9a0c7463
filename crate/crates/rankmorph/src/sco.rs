//! Soft Condorcet optimization: the scaled logistic relaxation of the
//! pairwise step indicator, direct score-vector optimization, and training
//! of the learned reduced mapping with the soft Kemeny-Young loss.
//!
//! The loss of a candidate scoring `s` against margins `delta` is
//! `sum_ij delta[i][j] * soft_step(s_j - s_i, tau)`. Because `soft_step`
//! decreases, a positive margin (majority says `x_i <= x_j`) pushes `s_i`
//! below `s_j`.

use serde::{Deserialize, Serialize};

use crate::color::{ColorImage, ColorValue};
use crate::error::{Error, Result};
use crate::mlp::{Adam, MlpGrad, MlpParams, HIDDEN_DIM, INPUT_DIM};
use crate::ordering::ReducedMapping;
use crate::vote::MarginMatrix;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Optimization settings shared by the score solver and the trainer.
/// Unspecified fields deserialize to their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoftConfig {
    /// Steepness of the logistic relaxation.
    pub tau: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SoftConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            epochs: 100,
            batch_size: 1024,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            seed: 0,
        }
    }
}

impl SoftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(
                "batch size must be at least 2 so a batch contains a pair".into(),
            ));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Scaled logistic step `1 / (1 + exp(x / tau))`, evaluated through the
/// stable branch so large `|x|` saturates to 0 or 1 instead of overflowing.
pub fn soft_step(x: f64, tau: f64) -> f64 {
    let z = x / tau;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Scores produced by the direct solver, with the order they induce.
#[derive(Debug, Clone)]
pub struct ScoSolution {
    pub scores: Vec<f64>,
    /// Candidates least to greatest by score, ties broken by index.
    pub permutation: Vec<usize>,
}

/// Direct soft Condorcet optimization over one score per candidate.
///
/// Starts from zero scores and runs `cfg.epochs` full-gradient adaptive
/// steps on `sum_ij delta[i][j] * soft_step(s_j - s_i, tau)`.
pub fn sco_scores(delta: &MarginMatrix, cfg: &SoftConfig) -> Result<ScoSolution> {
    cfg.validate()?;
    let n = delta.n();
    if n < 2 {
        return Err(Error::InvalidValue(
            "score optimization needs at least two candidates".into(),
        ));
    }
    let mut s = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    for epoch in 0..cfg.epochs {
        // dL/ds_p = (2/tau) sum_k delta[p][k] w(s_p - s_k), w = sig * (1 - sig).
        let mut grad = vec![0.0; n];
        for p in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                if k == p {
                    continue;
                }
                let a = soft_step(s[p] - s[k], cfg.tau);
                acc += delta.get(p, k) * a * (1.0 - a);
            }
            grad[p] = 2.0 * acc / cfg.tau;
        }
        let t = (epoch + 1) as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for p in 0..n {
            m[p] = cfg.beta1 * m[p] + (1.0 - cfg.beta1) * grad[p];
            v[p] = cfg.beta2 * v[p] + (1.0 - cfg.beta2) * grad[p] * grad[p];
            s[p] -= cfg.learning_rate * (m[p] / bc1) / ((v[p] / bc2).sqrt() + cfg.epsilon);
            if !s[p].is_finite() {
                return Err(Error::Numeric(format!(
                    "score for candidate {p} diverged at epoch {epoch}"
                )));
            }
        }
    }
    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));
    Ok(ScoSolution {
        scores: s,
        permutation,
    })
}

/// One element of the pairwise sweep: the loss row and the slope of the
/// loss in that element's score.
#[derive(Debug, Clone, Copy)]
struct RowPartial {
    loss: f64,
    slope: f64,
}

/// Margins between two batch elements under the family's precomputed
/// scores: `(1/m) sum_k ([hk_i <= hk_j] - [hk_j <= hk_i])`.
#[inline]
fn pair_margin(family_scores: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let mut net = 0i32;
    for hk in family_scores {
        net += (hk[i] <= hk[j]) as i32 - (hk[j] <= hk[i]) as i32;
    }
    net as f64 / family_scores.len() as f64
}

fn pair_row(
    s: &[f64],
    family_scores: &[Vec<f64>],
    tau: f64,
    with_slope: bool,
    p: usize,
) -> RowPartial {
    let mut loss = 0.0;
    let mut slope_acc = 0.0;
    for k in 0..s.len() {
        if k == p {
            continue;
        }
        let d = pair_margin(family_scores, p, k);
        if d == 0.0 {
            continue;
        }
        // a = soft_step(s_k - s_p) is this row's loss factor; by symmetry
        // the slope weight w(s_p - s_k) equals a * (1 - a) as well.
        let a = soft_step(s[k] - s[p], tau);
        loss += d * a;
        if with_slope {
            slope_acc += d * a * (1.0 - a);
        }
    }
    RowPartial {
        loss,
        slope: 2.0 * slope_acc / tau,
    }
}

fn pair_rows_seq(
    s: &[f64],
    family_scores: &[Vec<f64>],
    tau: f64,
    with_slope: bool,
) -> Vec<RowPartial> {
    (0..s.len())
        .map(|p| pair_row(s, family_scores, tau, with_slope, p))
        .collect()
}

#[cfg(feature = "parallel")]
fn pair_rows_par(
    s: &[f64],
    family_scores: &[Vec<f64>],
    tau: f64,
    with_slope: bool,
) -> Vec<RowPartial> {
    use rayon::prelude::*;
    (0..s.len())
        .into_par_iter()
        .map(|p| pair_row(s, family_scores, tau, with_slope, p))
        .collect()
}

fn pair_rows(
    s: &[f64],
    family_scores: &[Vec<f64>],
    tau: f64,
    with_slope: bool,
) -> Vec<RowPartial> {
    #[cfg(feature = "parallel")]
    return pair_rows_par(s, family_scores, tau, with_slope);
    #[cfg(not(feature = "parallel"))]
    pair_rows_seq(s, family_scores, tau, with_slope)
}

/// Flat 3-channel view of a batch plus cached network state.
struct BatchEval {
    scores: Vec<f64>,
    hidden: Vec<f64>,
    family_scores: Vec<Vec<f64>>,
}

fn eval_batch(
    params: &MlpParams,
    batch: &[[f64; 3]],
    family: &[ReducedMapping],
    keep_hidden: bool,
) -> Result<BatchEval> {
    let n = batch.len();
    let mut scores = vec![0.0; n];
    let mut hidden = vec![0.0; if keep_hidden { n * HIDDEN_DIM } else { 0 }];
    for (p, x) in batch.iter().enumerate() {
        scores[p] = if keep_hidden {
            params.forward_with_hidden(x, &mut hidden[p * HIDDEN_DIM..(p + 1) * HIDDEN_DIM])
        } else {
            params.forward_unchecked(x)
        };
    }
    let mut family_scores = Vec::with_capacity(family.len());
    for h in family {
        let mut hs = vec![0.0; n];
        for (p, x) in batch.iter().enumerate() {
            hs[p] = h.score_slice(x)?;
        }
        family_scores.push(hs);
    }
    Ok(BatchEval {
        scores,
        hidden,
        family_scores,
    })
}

fn to_flat_batch(batch: &[ColorValue]) -> Result<Vec<[f64; 3]>> {
    batch
        .iter()
        .map(|c| {
            let ch = c.channels();
            if ch.len() != INPUT_DIM {
                return Err(Error::Dimension {
                    expected: INPUT_DIM,
                    got: ch.len(),
                });
            }
            Ok([ch[0], ch[1], ch[2]])
        })
        .collect()
}

fn check_batch(batch_len: usize, family: &[ReducedMapping], tau: f64) -> Result<()> {
    if batch_len < 2 {
        return Err(Error::Config("a batch must contain at least two values".into()));
    }
    if family.is_empty() {
        return Err(Error::Config("mapping family must be non-empty".into()));
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

/// Soft Kemeny-Young loss of the network on a batch: the sum over all
/// ordered batch pairs of `delta_ij * soft_step(s_j - s_i, tau)`, with the
/// margins computed on the fly from the mapping family. Duplicate batch
/// values are kept; their zero margins contribute nothing.
pub fn batch_soft_loss(
    params: &MlpParams,
    batch: &[ColorValue],
    family: &[ReducedMapping],
    tau: f64,
) -> Result<f64> {
    check_batch(batch.len(), family, tau)?;
    let flat = to_flat_batch(batch)?;
    let eval = eval_batch(params, &flat, family, false)?;
    let rows = pair_rows(&eval.scores, &eval.family_scores, tau, false);
    Ok(rows.iter().map(|r| r.loss).sum())
}

/// Exact analytic gradient of [`batch_soft_loss`] in the network weights.
/// The ReLU subgradient at zero is taken as zero.
pub fn loss_gradient(
    params: &MlpParams,
    batch: &[ColorValue],
    family: &[ReducedMapping],
    tau: f64,
) -> Result<MlpGrad> {
    Ok(loss_and_gradient(params, batch, family, tau)?.1)
}

/// Loss and gradient in one pairwise sweep.
pub fn loss_and_gradient(
    params: &MlpParams,
    batch: &[ColorValue],
    family: &[ReducedMapping],
    tau: f64,
) -> Result<(f64, MlpGrad)> {
    check_batch(batch.len(), family, tau)?;
    let flat = to_flat_batch(batch)?;
    loss_and_gradient_flat(params, &flat, family, tau)
}

fn loss_and_gradient_flat(
    params: &MlpParams,
    batch: &[[f64; 3]],
    family: &[ReducedMapping],
    tau: f64,
) -> Result<(f64, MlpGrad)> {
    let eval = eval_batch(params, batch, family, true)?;
    let rows = pair_rows(&eval.scores, &eval.family_scores, tau, true);
    let loss = rows.iter().map(|r| r.loss).sum();

    // Backpropagate each element's slope through the network.
    let mut grad = MlpGrad::zeros();
    for (p, x) in batch.iter().enumerate() {
        let slope = rows[p].slope;
        if slope == 0.0 {
            continue;
        }
        let hidden = &eval.hidden[p * HIDDEN_DIM..(p + 1) * HIDDEN_DIM];
        for j in 0..HIDDEN_DIM {
            let a = hidden[j];
            grad.w2[j] += slope * a;
            if a > 0.0 {
                let up = slope * params.w2[j];
                grad.b1[j] += up;
                let row = &mut grad.w1[j * INPUT_DIM..(j + 1) * INPUT_DIM];
                row[0] += up * x[0];
                row[1] += up * x[1];
                row[2] += up * x[2];
            }
        }
    }
    Ok((loss, grad))
}

/// Sequential reference path of [`batch_soft_loss`], used by the benches.
pub fn batch_soft_loss_seq(
    params: &MlpParams,
    batch: &[ColorValue],
    family: &[ReducedMapping],
    tau: f64,
) -> Result<f64> {
    check_batch(batch.len(), family, tau)?;
    let flat = to_flat_batch(batch)?;
    let eval = eval_batch(params, &flat, family, false)?;
    let rows = pair_rows_seq(&eval.scores, &eval.family_scores, tau, false);
    Ok(rows.iter().map(|r| r.loss).sum())
}

/// Per-epoch mean per-pair losses recorded during training.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: MlpParams,
    pub train_loss: Vec<f64>,
    /// Empty when no validation images were given.
    pub val_loss: Vec<f64>,
}

/// Trains the 3-64-1 reduced mapping on the pixel pool of the training
/// images.
///
/// The pool keeps every pixel with multiplicity. Each epoch shuffles the
/// pool with the seeded generator, splits it into `batch_size` chunks, and
/// applies one adaptive-gradient step per chunk (a trailing chunk of one
/// value is skipped since it has no pairs). Losses are recorded as mean
/// per ordered pair, counting all `len^2` pairs of a chunk.
pub fn train(
    train_images: &[ColorImage],
    val_images: &[ColorImage],
    family: &[ReducedMapping],
    cfg: &SoftConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    if train_images.is_empty() {
        return Err(Error::Config("training set must be non-empty".into()));
    }
    if family.is_empty() {
        return Err(Error::Config("mapping family must be non-empty".into()));
    }
    let mut pool = pixel_pool(train_images)?;
    let val_pool = pixel_pool(val_images)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = MlpParams::glorot(&mut rng);
    let mut adam = Adam::new(cfg);
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut val_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        pool.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut pair_count = 0u64;
        for (batch_index, chunk) in pool.chunks(cfg.batch_size).enumerate() {
            if chunk.len() < 2 {
                continue;
            }
            let (loss, grad) = loss_and_gradient_flat(&params, chunk, family, cfg.tau)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite training loss at epoch {epoch}, batch {batch_index}"
                )));
            }
            adam.step(&mut params, &grad);
            loss_sum += loss;
            pair_count += (chunk.len() * chunk.len()) as u64;
        }
        if pair_count == 0 {
            return Err(Error::Config("training pool produced no pairs".into()));
        }
        train_loss.push(loss_sum / pair_count as f64);

        if !val_pool.is_empty() {
            let v = mean_pair_loss(&params, &val_pool, family, cfg)?;
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite validation loss at epoch {epoch}"
                )));
            }
            val_loss.push(v);
        }
    }

    Ok(TrainResult {
        params,
        train_loss,
        val_loss,
    })
}

/// Mean per-pair loss over fixed-order chunks of a pool, without updates.
fn mean_pair_loss(
    params: &MlpParams,
    pool: &[[f64; 3]],
    family: &[ReducedMapping],
    cfg: &SoftConfig,
) -> Result<f64> {
    let mut loss_sum = 0.0;
    let mut pair_count = 0u64;
    for chunk in pool.chunks(cfg.batch_size) {
        if chunk.len() < 2 {
            continue;
        }
        let eval = eval_batch(params, chunk, family, false)?;
        let rows = pair_rows(&eval.scores, &eval.family_scores, cfg.tau, false);
        loss_sum += rows.iter().map(|r| r.loss).sum::<f64>();
        pair_count += (chunk.len() * chunk.len()) as u64;
    }
    if pair_count == 0 {
        return Err(Error::Config("pool produced no pairs".into()));
    }
    Ok(loss_sum / pair_count as f64)
}

fn pixel_pool(images: &[ColorImage]) -> Result<Vec<[f64; 3]>> {
    let mut pool = Vec::new();
    for img in images {
        if img.dim() != INPUT_DIM {
            return Err(Error::Dimension {
                expected: INPUT_DIM,
                got: img.dim(),
            });
        }
        for px in img.pixels() {
            pool.push([px[0], px[1], px[2]]);
        }
    }
    Ok(pool)
}

/// Formats loss curves as CSV `epoch,train_loss,val_loss`. The validation
/// field is left empty when no validation set was used.
pub fn loss_curves_to_csv(result: &TrainResult) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for (i, t) in result.train_loss.iter().enumerate() {
        let val = result
            .val_loss
            .get(i)
            .map(|v| format!("{v:.12e}"))
            .unwrap_or_default();
        out.push_str(&format!("{},{:.12e},{}\n", i + 1, t, val));
    }
    out
}
