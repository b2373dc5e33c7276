//! Exact t-SNE projection of utterance embeddings into a 2-D semantic space.
//!
//! This is the exact O(n²) symmetric formulation: per-point Gaussian
//! bandwidths are found by binary search so each conditional distribution's
//! entropy equals log(perplexity); the symmetrized joint P sums to 1; the
//! low-dimensional affinities Q use a Student-t kernel with one degree of
//! freedom; the layout minimizes KL(P‖Q) by gradient descent with momentum
//! and early exaggeration. Corpora here are at most a few thousand points,
//! well within exact range, and exactness keeps the gradient checkable
//! against finite differences.
//!
//! Runs are bit-reproducible: the layout is seeded, all iteration is
//! sequential, and no environment state is read.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::EmbeddingSidecar;
use crate::model::{ActorKind, CognitiveLevel};

/// Hyperparameters of one projection run. The defaults are the method's
/// canonical values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration_factor: f64,
    /// Iterations with exaggerated P; the momentum also switches from
    /// `momentum_initial` to `momentum_final` at this iteration.
    pub early_exaggeration_iters: usize,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration_factor: 12.0,
            early_exaggeration_iters: 250,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum TsneError {
    #[error("perplexity {perplexity} too large for {n} points (needs perplexity < (n-1)/3)")]
    PerplexityTooLarge { perplexity: f64, n: usize },
    #[error("embedding for utterance {index} has length {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("{0} points is too few for a projection (minimum 4)")]
    TooFewPoints(usize),
    #[error("invalid t-SNE configuration: {0}")]
    InvalidConfig(String),
}

/// Level and actor kind attached to one embedded utterance for display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointLabel {
    pub level: CognitiveLevel,
    pub actor_kind: ActorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub utterance_index: usize,
    pub x: f64,
    pub y: f64,
    pub level: CognitiveLevel,
    pub actor_kind: ActorKind,
}

/// 2-D layout plus the KL divergence of the initial and final embeddings
/// (both measured without exaggeration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    pub points: Vec<ProjectedPoint>,
    pub kl_initial: f64,
    pub kl_final: f64,
}

/// Pairwise squared Euclidean distances, row-major n×n.
pub fn pairwise_sq_dists(vectors: &[&[f64]]) -> Vec<f64> {
    let n = vectors.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist: f64 = vectors[i]
                .iter()
                .zip(vectors[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    d
}

const BETA_SEARCH_ITERS: usize = 64;
const ENTROPY_TOLERANCE: f64 = 1e-7;

/// Conditional distribution of row `i` at precision `beta`, written into
/// `row`; returns its entropy in nats. Distances are shifted by the row
/// minimum before exponentiation, which leaves the distribution and its
/// entropy unchanged but avoids underflow.
fn conditional_row(dists: &[f64], n: usize, i: usize, beta: f64, row: &mut [f64]) -> f64 {
    let shift = (0..n)
        .filter(|&j| j != i)
        .map(|j| dists[i * n + j])
        .fold(f64::INFINITY, f64::min);
    let mut sum_p = 0.0;
    let mut sum_dp = 0.0;
    for j in 0..n {
        if j == i {
            row[j] = 0.0;
            continue;
        }
        let d = dists[i * n + j] - shift;
        let p = (-beta * d).exp();
        row[j] = p;
        sum_p += p;
        sum_dp += d * p;
    }
    for j in 0..n {
        row[j] /= sum_p;
    }
    // H = ln(sum_p) + beta * E[d]
    sum_p.ln() + beta * sum_dp / sum_p
}

/// Symmetrized joint distribution P over point pairs: per-point bandwidths
/// chosen so each conditional entropy equals ln(perplexity), then
/// P_ij = (P_{j|i} + P_{i|j}) / 2n. Entries are non-negative, the diagonal
/// is zero and the total sums to 1 (no clamping is applied to P itself).
pub fn joint_probabilities(dists: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let mut conditional = vec![0.0; n * n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let mut beta = 1.0;
        let mut beta_min = f64::NEG_INFINITY;
        let mut beta_max = f64::INFINITY;
        for _ in 0..BETA_SEARCH_ITERS {
            let entropy = conditional_row(dists, n, i, beta, &mut row);
            let diff = entropy - target;
            if diff.abs() < ENTROPY_TOLERANCE {
                break;
            }
            if diff > 0.0 {
                beta_min = beta;
                beta = if beta_max.is_infinite() {
                    beta * 2.0
                } else {
                    (beta + beta_max) / 2.0
                };
            } else {
                beta_max = beta;
                beta = if beta_min.is_infinite() {
                    beta / 2.0
                } else {
                    (beta + beta_min) / 2.0
                };
            }
        }
        conditional_row(dists, n, i, beta, &mut row);
        conditional[i * n..(i + 1) * n].copy_from_slice(&row);
    }

    let mut p = vec![0.0; n * n];
    let norm = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (conditional[i * n + j] + conditional[j * n + i]) / norm;
        }
    }
    p
}

/// Student-t numerators (1 + ||y_i − y_j||²)^{-1} and their total.
fn q_numerators(y: &[f64], n: usize) -> (Vec<f64>, f64) {
    let mut num = vec![0.0; n * n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[2 * i] - y[2 * j];
            let dy = y[2 * i + 1] - y[2 * j + 1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = v;
            num[j * n + i] = v;
            sum += 2.0 * v;
        }
    }
    (num, sum)
}

/// Normalized low-dimensional affinities Q for a 2-D layout `y` (flat
/// `[x0, y0, x1, y1, ...]`).
pub fn q_matrix(y: &[f64], n: usize) -> Vec<f64> {
    let (num, sum) = q_numerators(y, n);
    num.into_iter().map(|v| v / sum).collect()
}

/// KL(P‖Q) for layout `y`. Zero-probability P entries contribute nothing;
/// Q is floored at 1e-12 inside the logarithm only.
pub fn kl_divergence(p: &[f64], y: &[f64], n: usize) -> f64 {
    let (num, sum) = q_numerators(y, n);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                let qij = (num[i * n + j] / sum).max(1e-12);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

/// Analytic gradient of KL(P‖Q) with respect to the 2-D layout:
/// dC/dy_i = 4 Σ_j (p_ij − q_ij)(1 + ||y_i − y_j||²)^{-1}(y_i − y_j).
pub fn kl_gradient(p: &[f64], y: &[f64], n: usize) -> Vec<f64> {
    let (num, sum) = q_numerators(y, n);
    let mut grad = vec![0.0; 2 * n];
    for i in 0..n {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let nij = num[i * n + j];
            let factor = 4.0 * (p[i * n + j] - nij / sum) * nij;
            gx += factor * (y[2 * i] - y[2 * j]);
            gy += factor * (y[2 * i + 1] - y[2 * j + 1]);
        }
        grad[2 * i] = gx;
        grad[2 * i + 1] = gy;
    }
    grad
}

fn check_config(cfg: &TsneConfig) -> Result<(), TsneError> {
    if cfg.perplexity <= 0.0 || !cfg.perplexity.is_finite() {
        return Err(TsneError::InvalidConfig(format!(
            "perplexity must be positive, got {}",
            cfg.perplexity
        )));
    }
    if cfg.iterations == 0 {
        return Err(TsneError::InvalidConfig("iterations must be > 0".into()));
    }
    if cfg.learning_rate <= 0.0 {
        return Err(TsneError::InvalidConfig("learning rate must be > 0".into()));
    }
    if cfg.early_exaggeration_factor < 1.0 {
        return Err(TsneError::InvalidConfig(
            "early exaggeration factor must be >= 1".into(),
        ));
    }
    for (name, m) in [
        ("momentum_initial", cfg.momentum_initial),
        ("momentum_final", cfg.momentum_final),
    ] {
        if !(0.0..1.0).contains(&m) {
            return Err(TsneError::InvalidConfig(format!(
                "{name} must be in [0, 1), got {m}"
            )));
        }
    }
    Ok(())
}

/// Project embedded utterances to 2-D. Points are returned in utterance-index
/// order; labels missing from `labels` fall back to an unclassified teacher
/// point.
pub fn tsne_project(
    embeddings: &EmbeddingSidecar,
    labels: &BTreeMap<usize, PointLabel>,
    cfg: &TsneConfig,
) -> Result<Projection2D, TsneError> {
    check_config(cfg)?;
    let mut entries: Vec<_> = embeddings.entries.iter().collect();
    entries.sort_by_key(|e| e.utterance_index);
    let n = entries.len();
    if n < 4 {
        return Err(TsneError::TooFewPoints(n));
    }
    for e in &entries {
        if e.vector.len() != embeddings.dim {
            return Err(TsneError::DimensionMismatch {
                index: e.utterance_index,
                got: e.vector.len(),
                expected: embeddings.dim,
            });
        }
    }
    if cfg.perplexity >= (n as f64 - 1.0) / 3.0 {
        return Err(TsneError::PerplexityTooLarge {
            perplexity: cfg.perplexity,
            n,
        });
    }

    let vectors: Vec<&[f64]> = entries.iter().map(|e| e.vector.as_slice()).collect();
    let dists = pairwise_sq_dists(&vectors);
    let p = joint_probabilities(&dists, n, cfg.perplexity);
    let p_exaggerated: Vec<f64> = p.iter().map(|v| v * cfg.early_exaggeration_factor).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = Normal::new(0.0, 1e-2).expect("valid normal");
    let mut y: Vec<f64> = (0..2 * n).map(|_| init.sample(&mut rng)).collect();

    let kl_initial = kl_divergence(&p, &y, n);

    let mut velocity = vec![0.0; 2 * n];
    for iter in 0..cfg.iterations {
        let exaggerating = iter < cfg.early_exaggeration_iters;
        let p_eff = if exaggerating { &p_exaggerated } else { &p };
        let momentum = if exaggerating {
            cfg.momentum_initial
        } else {
            cfg.momentum_final
        };
        let grad = kl_gradient(p_eff, &y, n);
        for k in 0..2 * n {
            velocity[k] = momentum * velocity[k] - cfg.learning_rate * grad[k];
            y[k] += velocity[k];
        }
        // recenter; Q depends on pairwise distances only
        let (mut mx, mut my) = (0.0, 0.0);
        for i in 0..n {
            mx += y[2 * i];
            my += y[2 * i + 1];
        }
        mx /= n as f64;
        my /= n as f64;
        for i in 0..n {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }
    }

    let kl_final = kl_divergence(&p, &y, n);

    let fallback = PointLabel {
        level: CognitiveLevel::Unclassified,
        actor_kind: ActorKind::Teacher,
    };
    let points = entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let label = labels.get(&e.utterance_index).copied().unwrap_or(fallback);
            ProjectedPoint {
                utterance_index: e.utterance_index,
                x: y[2 * i],
                y: y[2 * i + 1],
                level: label.level,
                actor_kind: label.actor_kind,
            }
        })
        .collect();

    Ok(Projection2D {
        points,
        kl_initial,
        kl_final,
    })
}
