//! Pairwise e-processes and their grid mixtures, computed in log space.
//!
//! The pairwise e-process for target count `n_r` and competitor count `n_a`
//! at bet `lambda` has the closed form `(1+lambda)^n_r (1-lambda)^n_a`; its
//! log is linear in the counts, so streams never need to be replayed. All
//! values are stored and compared in natural-log space: with counts in the
//! hundreds the raw products overflow or underflow long before any
//! threshold is reached.

use crate::grid::GridSpec;
use crate::ModelError;

/// Numerically stable `log(sum(exp(x)))` over the given terms.
///
/// Returns `-inf` for an empty input or when every term is `-inf` (the
/// mixture of nothing is 0).
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&x| (x - m).exp()).sum();
    m + sum.ln()
}

/// Log of the pairwise e-value `(1+lambda)^n_r (1-lambda)^n_a`.
pub fn pairwise_log_e(lambda: f64, n_r: u64, n_a: u64) -> Result<f64, ModelError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "pairwise lambda must lie in (0,1), got {lambda}"
        )));
    }
    Ok(pairwise_log_e_unchecked(lambda, n_r, n_a))
}

#[inline]
pub(crate) fn pairwise_log_e_unchecked(lambda: f64, n_r: u64, n_a: u64) -> f64 {
    n_r as f64 * lambda.ln_1p() + n_a as f64 * (-lambda).ln_1p()
}

/// Log of the grid-mixture pairwise e-value
/// `sum_lambda w_lambda (1+lambda)^n_r (1-lambda)^n_a`, evaluated with a
/// max shift so nothing overflows for counts up to 1e9.
pub fn mixture_log_e(grid: &GridSpec, n_r: u64, n_a: u64) -> f64 {
    let terms: Vec<f64> = grid
        .iter()
        .map(|(l, w)| w.ln() + pairwise_log_e_unchecked(l, n_r, n_a))
        .collect();
    log_sum_exp(&terms)
}

/// The growth-optimal pairwise bet `(p_r - p2) / (p_r + p2)` for target mass
/// `p_r` and strongest-competitor mass `p2`.
pub fn oracle_lambda(p_r: f64, p2: f64) -> Result<f64, ModelError> {
    if !(p2 > 0.0 && p2 <= p_r && p_r + p2 <= 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "need 0 < p2 <= p_r and p_r + p2 <= 1, got p_r={p_r}, p2={p2}"
        )));
    }
    Ok((p_r - p2) / (p_r + p2))
}

/// Pairwise mixture e-process state: a grid plus the two sufficient counts.
#[derive(Debug, Clone)]
pub struct PairwiseEState<'a> {
    pub grid: &'a GridSpec,
    pub n_target: u64,
    pub n_competitor: u64,
}

impl PairwiseEState<'_> {
    /// Log mixture e-value at the stored counts.
    pub fn log_e(&self) -> f64 {
        mixture_log_e(self.grid, self.n_target, self.n_competitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_examples() {
        // empty product is 1
        assert_eq!(pairwise_log_e(0.3, 0, 0).unwrap(), 0.0);
        // direct evaluation 1.5^2 * 0.5 = 1.125
        assert!((pairwise_log_e(0.5, 2, 1).unwrap() - 1.125f64.ln()).abs() < 1e-12);
        // 3 log 0.5
        assert!((pairwise_log_e(0.5, 0, 3).unwrap() - 3.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn pairwise_rejects_endpoint_lambdas() {
        assert!(pairwise_log_e(0.0, 1, 1).is_err());
        assert!(pairwise_log_e(1.0, 1, 1).is_err());
        assert!(pairwise_log_e(-0.5, 1, 1).is_err());
    }

    #[test]
    fn mixture_examples() {
        let single = GridSpec::pairwise(vec![0.5], vec![1.0]).unwrap();
        assert!((mixture_log_e(&single, 2, 1) - 1.125f64.ln()).abs() < 1e-12);

        let two = GridSpec::pairwise(vec![0.25, 0.5], vec![0.5, 0.5]).unwrap();
        // log(0.5 * 1.25 + 0.5 * 1.5) = log 1.375
        assert!((mixture_log_e(&two, 1, 0) - 1.375f64.ln()).abs() < 1e-12);

        // weights summing to 1 at zero counts give log 1 = 0
        assert!(mixture_log_e(&two, 0, 0).abs() < 1e-12);
    }

    #[test]
    fn mixture_no_overflow_at_huge_counts() {
        let g = GridSpec::pairwise(vec![0.25, 0.5], vec![0.5, 0.5]).unwrap();
        let v = mixture_log_e(&g, 1_000_000_000, 400_000_000);
        assert!(v.is_finite());
        // dominated by the lambda maximizing the linear form
        let best = 1_000_000_000f64 * 1.5f64.ln() + 400_000_000f64 * 0.5f64.ln();
        assert!((v - (best + 0.5f64.ln())).abs() < 1e-6);
    }

    #[test]
    fn oracle_lambda_examples() {
        assert!((oracle_lambda(0.6, 0.3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(oracle_lambda(0.4, 0.4).unwrap(), 0.0);
        assert!((oracle_lambda(0.24, 0.025).unwrap() - 0.215 / 0.265).abs() < 1e-15);
        assert!(oracle_lambda(0.0, 0.0).is_err());
        assert!(oracle_lambda(0.3, 0.4).is_err());
    }

    #[test]
    fn oracle_lambda_maximizes_growth_rate() {
        // grid-search oracle over 10^4 points
        for &(p_r, p2) in &[(0.6, 0.3), (0.24, 0.025), (0.35, 0.2), (0.12, 0.11)] {
            let rho = |l: f64| p_r * l.ln_1p() + p2 * (-l).ln_1p();
            let star = oracle_lambda(p_r, p2).unwrap();
            let mut best = (0.0, f64::NEG_INFINITY);
            for i in 1..10_000 {
                let l = i as f64 / 10_000.0;
                if rho(l) > best.1 {
                    best = (l, rho(l));
                }
            }
            assert!(
                (best.0 - star).abs() <= 2e-4,
                "grid max {} vs closed form {}",
                best.0,
                star
            );
            assert!(rho(star) >= best.1 - 1e-12);
        }
    }

    #[test]
    fn log_sum_exp_empty_is_neg_inf() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn estate_matches_free_function() {
        let g = GridSpec::pairwise(vec![0.25, 0.5], vec![0.5, 0.5]).unwrap();
        let s = PairwiseEState {
            grid: &g,
            n_target: 7,
            n_competitor: 3,
        };
        assert_eq!(s.log_e(), mixture_log_e(&g, 7, 3));
    }
}
