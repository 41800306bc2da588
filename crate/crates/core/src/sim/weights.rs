//! Rank-based confidence-weight model for the weighted-certifier trials.

use rand::Rng;

use super::SimError;

/// Top-rank cutoff: labels ranked deeper than this get the low base weight.
pub const RANK_CUTOFF: usize = 10;
/// Base weight for labels outside the top ranks.
pub const LOW_WEIGHT: f64 = 0.1;

/// Conditional weight sampler: given the mass rank of the drawn label,
/// emits `0.95 * exp(-gamma * rank)` for the top [`RANK_CUTOFF`] ranks and
/// [`LOW_WEIGHT`] otherwise, plus Uniform(-0.05, 0.05) noise, clipped to
/// `[0.01, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct RankWeightModel {
    gamma: f64,
}

impl RankWeightModel {
    pub fn new(gamma: f64) -> Result<Self, SimError> {
        if gamma.is_nan() || gamma < 0.0 {
            return Err(SimError::InvalidParameter(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Noise-free base weight for a 1-based mass rank.
    pub fn base(&self, rank: usize) -> f64 {
        if rank <= RANK_CUTOFF {
            0.95 * (-self.gamma * rank as f64).exp()
        } else {
            LOW_WEIGHT
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rank: usize, rng: &mut R) -> f64 {
        let noise = rng.gen_range(-0.05..0.05);
        (self.base(rank) + noise).clamp(0.01, 1.0)
    }
}
