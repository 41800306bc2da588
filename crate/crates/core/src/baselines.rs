//! Head-to-head baselines: a fixed-sample Bonferroni certification and a
//! tuple-indexed sequential leader-tracking certificate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::bounds::unseen_bound;
use crate::counts::LeaderBoard;
use crate::label::Label;
use crate::ModelError;

/// `P(Bin(n, 1/2) >= k)` via the incomplete-beta identity.
fn binomial_upper_tail_half(n: u64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    // P(X >= k) = I_{1/2}(k, n-k+1)
    Beta::new(k as f64, (n - k + 1) as f64)
        .expect("valid beta shapes")
        .cdf(0.5)
}

/// One-sided Clopper-Pearson lower confidence bound for `x` successes out
/// of `n` trials at level `alpha` (coverage `1 - alpha`).
fn clopper_pearson_lower(x: u64, n: u64, alpha: f64) -> f64 {
    if x == 0 {
        return 0.0;
    }
    Beta::new(x as f64, (n - x + 1) as f64)
        .expect("valid beta shapes")
        .inverse_cdf(alpha)
}

/// Fixed-sample certification mirroring the three-component sequential
/// logic with classical finite-sample tests:
///
/// * part (a): for every observed competitor `a`, the conditional sign test
///   on `(N(r), N(a))` (exact binomial tail at success probability 1/2)
///   rejects at level `(epsilon/2) / #competitors`;
/// * part (b): the Clopper-Pearson lower bound on `p_r` at level
///   `epsilon/4` exceeds the fixed-N unseen bound
///   `min{u : u^-1 (1-u)^N <= epsilon/4}`.
///
/// Returns `false` when the target is absent from the sample.
pub fn bonferroni_certify(
    sample: &[Label],
    target: Label,
    epsilon: f64,
) -> Result<bool, ModelError> {
    if sample.is_empty() {
        return Err(ModelError::InvalidParameter(
            "sample must be nonempty".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    let mut counts: HashMap<Label, u64> = HashMap::new();
    for &lab in sample {
        *counts.entry(lab).or_insert(0) += 1;
    }
    let n_total = sample.len() as u64;
    let n_r = match counts.get(&target) {
        Some(&c) => c,
        None => return Ok(false),
    };

    let competitors: Vec<u64> = counts
        .iter()
        .filter(|(&lab, _)| lab != target)
        .map(|(_, &c)| c)
        .collect();
    if !competitors.is_empty() {
        let level = (epsilon / 2.0) / competitors.len() as f64;
        for &n_a in &competitors {
            if binomial_upper_tail_half(n_r + n_a, n_r) > level {
                return Ok(false);
            }
        }
    }

    let cp_lower = clopper_pearson_lower(n_r, n_total, epsilon / 4.0);
    let unseen = unseen_bound(n_total, epsilon / 4.0)?;
    Ok(cp_lower > unseen)
}

/// Verdict of the leader-tracking baseline; certifies the pre-round leader
/// of the tuple whose channels both crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MmcVerdict {
    Continue,
    CertifiedAt { tau: u64, leader: Label },
}

impl MmcVerdict {
    pub fn certified(self) -> Option<(u64, Label)> {
        match self {
            MmcVerdict::Continue => None,
            MmcVerdict::CertifiedAt { tau, leader } => Some((tau, leader)),
        }
    }
}

#[derive(Debug, Clone)]
struct TupleChannels {
    alpha: f64,
    log_pair: f64,
    log_resid: f64,
}

/// Tuple-indexed leader-tracking certifier with m = 2 (leader, runner-up,
/// residual mass) and a fixed bet per channel.
///
/// Each (leader, runner-up) tuple owns two e-process channels that only
/// accumulate on rounds where that tuple is active (multiplicative factor 1
/// otherwise). A tuple instantiated as the `j`-th distinct active tuple
/// receives allocation `alpha_j = epsilon * 2^-j`, so the total allocation
/// never exceeds `epsilon` regardless of how many tuples the stream visits.
/// Certification of the pre-round leader `A` fires when both channels reach
/// `1/alpha_j`:
///
/// * pairwise channel: bet on `1{X=A} - 1{X=B}`;
/// * residual channel: bet on `1{X=A} - 1{X not in {A,B}}`.
#[derive(Debug, Clone)]
pub struct MmcCertifier {
    epsilon: f64,
    lambda: f64,
    board: LeaderBoard,
    registry: HashMap<(Label, Label), usize>,
    channels: Vec<((Label, Label), TupleChannels)>,
    verdict: MmcVerdict,
}

/// Documented fixed bet for both channels.
pub const MMC_LAMBDA: f64 = 0.25;

impl MmcCertifier {
    pub fn new(epsilon: f64) -> Result<Self, ModelError> {
        Self::with_lambda(epsilon, MMC_LAMBDA)
    }

    pub fn with_lambda(epsilon: f64, lambda: f64) -> Result<Self, ModelError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "epsilon must lie in (0,1), got {epsilon}"
            )));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "lambda must lie in (0,1), got {lambda}"
            )));
        }
        Ok(Self {
            epsilon,
            lambda,
            board: LeaderBoard::new(),
            registry: HashMap::new(),
            channels: Vec::new(),
            verdict: MmcVerdict::Continue,
        })
    }

    pub fn t(&self) -> u64 {
        self.board.t()
    }

    pub fn verdict(&self) -> MmcVerdict {
        self.verdict
    }

    /// Sum of allocations over instantiated tuples; always <= epsilon.
    pub fn allocation_sum(&self) -> f64 {
        self.channels.iter().map(|(_, c)| c.alpha).sum()
    }

    /// Log e-values `(pairwise, residual)` of a tuple's channels, if that
    /// tuple has ever been active.
    pub fn channel_logs(&self, tuple: (Label, Label)) -> Option<(f64, f64)> {
        self.registry
            .get(&tuple)
            .map(|&i| (self.channels[i].1.log_pair, self.channels[i].1.log_resid))
    }

    /// Currently active tuple (computed from counts before the next draw).
    pub fn active_tuple(&self) -> Option<(Label, Label)> {
        self.board.top_pair()
    }

    /// Ingests one observation; no-op once certified.
    pub fn step(&mut self, label: Label) -> MmcVerdict {
        if self.verdict != MmcVerdict::Continue {
            return self.verdict;
        }
        // The active tuple is determined by the counts *before* this draw.
        if let Some((leader, runner)) = self.board.top_pair() {
            let idx = match self.registry.get(&(leader, runner)) {
                Some(&i) => i,
                None => {
                    let j = self.channels.len() as i32 + 1;
                    let alpha = self.epsilon * 0.5f64.powi(j);
                    self.channels.push((
                        (leader, runner),
                        TupleChannels {
                            alpha,
                            log_pair: 0.0,
                            log_resid: 0.0,
                        },
                    ));
                    self.registry
                        .insert((leader, runner), self.channels.len() - 1);
                    self.channels.len() - 1
                }
            };
            let up = self.lambda.ln_1p();
            let down = (-self.lambda).ln_1p();
            let ch = &mut self.channels[idx].1;
            if label == leader {
                ch.log_pair += up;
                ch.log_resid += up;
            } else if label == runner {
                ch.log_pair += down;
            } else {
                ch.log_resid += down;
            }
            let threshold = -ch.alpha.ln();
            if ch.log_pair >= threshold && ch.log_resid >= threshold {
                self.verdict = MmcVerdict::CertifiedAt {
                    tau: self.board.t() + 1,
                    leader,
                };
            }
        }
        self.board.observe(label);
        self.verdict
    }
}
