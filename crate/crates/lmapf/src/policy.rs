//! Per-agent action priors and value estimates over an [`Observation`].
//!
//! [`CostmapPolicy`] is the built-in goal-chasing policy: it scores each
//! action by the renormalized inverted cost-to-go of its destination cell and
//! softmaxes the scores. Its value estimate is the discounted-reward ceiling
//! an agent could collect by shrinking its distance every step. A trained
//! scorer can be dropped in through [`LinearPolicy`], which replaces the
//! per-action scores with a loaded linear map over the two observation
//! matrices; [`RandomPolicy`] keeps only the validity masking.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::costmap::{Observation, UNREACHABLE};
use crate::grid::{Action, ACTIONS};

/// Action distribution and scalar value for one agent in one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyOutput {
    /// Probability per action, ordered as [`ACTIONS`]; sums to 1.
    pub priors: [f64; 5],
    /// Estimated discounted future reward for this agent.
    pub value: f64,
}

impl PolicyOutput {
    /// The most probable action; ties resolve to the lowest action index.
    pub fn argmax(&self) -> Action {
        let mut best = 0;
        for i in 1..5 {
            if self.priors[i] > self.priors[best] {
                best = i;
            }
        }
        ACTIONS[best]
    }
}

/// A policy maps an observation to action priors and a value estimate.
/// Implementations are immutable after construction and safe to call from
/// multiple threads.
pub trait Policy: Send + Sync {
    fn evaluate(&self, obs: &Observation) -> PolicyOutput;
}

/// Per-step improvement reward: `r` when the agent gets strictly closer to
/// its goal than it has ever been since the goal was assigned, else 0.
/// The caller keeps `best_dist` as a running minimum.
pub fn improvement_reward(best_dist_before: u32, dist_after: u32, reward_scale: f64) -> f64 {
    if dist_after < best_dist_before {
        reward_scale
    } else {
        0.0
    }
}

/// Discounted-reward ceiling for an agent `dist` steps from its goal: the
/// return it would collect by earning the improvement reward every step,
/// `r * (1 - gamma^dist) / (1 - gamma)`. Zero on the goal and for agents
/// whose goal is unreachable (no improvement is possible there).
pub fn value_ceiling(dist: u32, gamma: f64, reward_scale: f64) -> f64 {
    if dist == 0 || dist == UNREACHABLE {
        return 0.0;
    }
    reward_scale * (1.0 - gamma.powi(dist.min(i32::MAX as u32) as i32)) / (1.0 - gamma)
}

/// Destination score of each action inside the window: the costmap value of
/// the cell the action leads to (`Wait` scores the ego cell). `None` marks
/// actions leading into cells that read -1 (obstacle, out of bounds, or
/// unreachable); those are masked out of the prior.
fn destination_scores(obs: &Observation) -> [Option<f64>; 5] {
    let mut scores = [None; 5];
    for (i, a) in ACTIONS.iter().enumerate() {
        let (dx, dy) = a.delta();
        if let Some(w) = obs.offset_index(dx, dy) {
            let v = obs.costmap[w];
            if v >= 0.0 {
                scores[i] = Some(v as f64);
            }
        }
    }
    scores
}

/// Softmax over the unmasked scores at temperature `tau`; masked actions get
/// probability 0. When every action is masked (the ego agent cannot reach
/// its goal at all) the prior falls back to uniform over all five actions.
fn masked_softmax(scores: &[Option<f64>; 5], tau: f64) -> [f64; 5] {
    let mut priors = [0.0; 5];
    let max = scores.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return [0.2; 5];
    }
    let mut sum = 0.0;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = s {
            let e = ((s - max) / tau).exp();
            priors[i] = e;
            sum += e;
        }
    }
    for p in &mut priors {
        *p /= sum;
    }
    priors
}

fn uniform_over(scores: &[Option<f64>; 5]) -> [f64; 5] {
    let n = scores.iter().flatten().count();
    if n == 0 {
        return [0.2; 5];
    }
    let mut priors = [0.0; 5];
    for (i, s) in scores.iter().enumerate() {
        if s.is_some() {
            priors[i] = 1.0 / n as f64;
        }
    }
    priors
}

/// Deterministic goal-chasing policy over the costmap matrix.
#[derive(Clone, Debug)]
pub struct CostmapPolicy {
    /// Softmax temperature; small values make the prior near-greedy.
    pub temperature: f64,
    /// Improvement reward magnitude `r`.
    pub reward_scale: f64,
    /// Discount used by the value ceiling.
    pub gamma: f64,
}

impl Default for CostmapPolicy {
    fn default() -> Self {
        CostmapPolicy {
            temperature: 0.1,
            reward_scale: 1.0,
            gamma: 0.96,
        }
    }
}

impl Policy for CostmapPolicy {
    fn evaluate(&self, obs: &Observation) -> PolicyOutput {
        let scores = destination_scores(obs);
        PolicyOutput {
            priors: masked_softmax(&scores, self.temperature),
            value: value_ceiling(obs.ego_dist, self.gamma, self.reward_scale),
        }
    }
}

/// Uniform prior over valid actions, value 0. Used by the ablation that
/// strips the goal-chasing prior out of the search.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn evaluate(&self, obs: &Observation) -> PolicyOutput {
        let scores = destination_scores(obs);
        PolicyOutput {
            priors: uniform_over(&scores),
            value: 0.0,
        }
    }
}

pub const WEIGHTS_MAGIC: &str = "lmapf-linear-v1";

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("weights file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("weights file: bad magic line {0:?}")]
    BadMagic(String),
    #[error("weights file: bad shape line {0:?}")]
    BadShape(String),
    #[error("weights file: shape {want} values, payload holds {got}")]
    LengthMismatch { want: usize, got: usize },
    #[error("weights file: checksum mismatch")]
    ChecksumMismatch,
    #[error("weights shape {0}x{1}x{2}x{3} does not match 5 actions / 2 planes")]
    UnsupportedShape(usize, usize, usize, usize),
}

/// Policy with loaded linear scoring: `score(a) = w[a] . [costmap, agents]`
/// over the flattened window planes. Masking, softmax temperature, and the
/// value estimate are shared with [`CostmapPolicy`], so a file holding the
/// identity weights reproduces it exactly.
#[derive(Clone)]
pub struct LinearPolicy {
    fov: usize,
    /// `5 x (2 * fov * fov)`, row per action; costmap plane first.
    weights: Arc<Vec<f32>>,
    pub temperature: f64,
    pub reward_scale: f64,
    pub gamma: f64,
}

impl LinearPolicy {
    /// Load weights from the flat tensor format described in the module docs
    /// of [`save_weights`].
    pub fn load(path: &Path, base: CostmapPolicy) -> Result<Self, WeightsError> {
        let (fov, weights) = load_weights(path)?;
        Ok(LinearPolicy {
            fov,
            weights: Arc::new(weights),
            temperature: base.temperature,
            reward_scale: base.reward_scale,
            gamma: base.gamma,
        })
    }

    pub fn fov(&self) -> usize {
        self.fov
    }

    /// Weights that reproduce [`CostmapPolicy`]: for each action, 1.0 at the
    /// destination cell inside the costmap plane, 0 elsewhere.
    pub fn identity_weights(fov: usize) -> Vec<f32> {
        assert!(fov % 2 == 1);
        let plane = fov * fov;
        let half = fov / 2;
        let mut w = vec![0.0f32; 5 * 2 * plane];
        for (i, a) in ACTIONS.iter().enumerate() {
            let (dx, dy) = a.delta();
            let wx = (half as i32 + dx) as usize;
            let wy = (half as i32 + dy) as usize;
            w[i * 2 * plane + wy * fov + wx] = 1.0;
        }
        w
    }
}

impl Policy for LinearPolicy {
    fn evaluate(&self, obs: &Observation) -> PolicyOutput {
        assert_eq!(obs.fov, self.fov, "observation fov does not match loaded weights");
        let plane = self.fov * self.fov;
        let masked = destination_scores(obs);
        let mut scores = [None; 5];
        for i in 0..5 {
            if masked[i].is_none() {
                continue;
            }
            let row = &self.weights[i * 2 * plane..(i + 1) * 2 * plane];
            let mut s = 0.0f64;
            for (w, v) in row[..plane].iter().zip(&obs.costmap) {
                s += (*w as f64) * (*v as f64);
            }
            for (w, v) in row[plane..].iter().zip(&obs.agents) {
                s += (*w as f64) * (*v as f64);
            }
            scores[i] = Some(s);
        }
        PolicyOutput {
            priors: masked_softmax(&scores, self.temperature),
            value: value_ceiling(obs.ego_dist, self.gamma, self.reward_scale),
        }
    }
}

/// Write a weights file: three text header lines (magic, shape
/// `actions planes fov fov`, hex SHA-256 of the payload) followed by the
/// row-major little-endian `f32` payload. External trainers export into
/// this format.
pub fn save_weights(path: &Path, fov: usize, weights: &[f32]) -> Result<(), WeightsError> {
    let plane = fov * fov;
    if weights.len() != 5 * 2 * plane {
        return Err(WeightsError::LengthMismatch {
            want: 5 * 2 * plane,
            got: weights.len(),
        });
    }
    let mut payload = Vec::with_capacity(weights.len() * 4);
    for w in weights {
        payload.extend_from_slice(&w.to_le_bytes());
    }
    let digest = hex_digest(&payload);
    let mut out = String::new();
    writeln!(out, "{WEIGHTS_MAGIC}").unwrap();
    writeln!(out, "5 2 {fov} {fov}").unwrap();
    writeln!(out, "{digest}").unwrap();
    let mut bytes = out.into_bytes();
    bytes.extend_from_slice(&payload);
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Read a weights file; returns the window size and the flat weight tensor.
pub fn load_weights(path: &Path) -> Result<(usize, Vec<f32>), WeightsError> {
    let bytes = std::fs::read(path)?;
    let mut rest = &bytes[..];
    let mut lines = Vec::with_capacity(3);
    for _ in 0..3 {
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| WeightsError::BadMagic(String::from_utf8_lossy(rest).into_owned()))?;
        lines.push(String::from_utf8_lossy(&rest[..nl]).into_owned());
        rest = &rest[nl + 1..];
    }
    if lines[0] != WEIGHTS_MAGIC {
        return Err(WeightsError::BadMagic(lines[0].clone()));
    }
    let dims: Vec<usize> = lines[1]
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| WeightsError::BadShape(lines[1].clone()))?;
    let [actions, planes, h, w] = dims[..] else {
        return Err(WeightsError::BadShape(lines[1].clone()));
    };
    if actions != 5 || planes != 2 || h != w || h % 2 == 0 {
        return Err(WeightsError::UnsupportedShape(actions, planes, h, w));
    }
    let want = actions * planes * h * w;
    if rest.len() != want * 4 {
        return Err(WeightsError::LengthMismatch {
            want,
            got: rest.len() / 4,
        });
    }
    if hex_digest(rest) != lines[2] {
        return Err(WeightsError::ChecksumMismatch);
    }
    let weights = rest
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((h, weights))
}

fn hex_digest(payload: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(payload);
    let digest = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").unwrap();
    }
    s
}
