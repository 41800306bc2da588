//! Betting-parameter grids for the mixture e-processes.

use serde::{Deserialize, Serialize};

use crate::ModelError;

/// Absolute tolerance for the weight-sum constraint.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default minimum design gap for the geometric part of the default
/// pairwise grid.
pub const DEFAULT_PAIRWISE_DELTA0: f64 = 0.0625;

/// Extra high-bet point in the default pairwise grid. The geometric ladder
/// tops out at 1/2, which under-bets large-gap distributions whose total
/// contested mass `p_r + p_2` is small (there the growth-optimal bet
/// `(p_r - p_2)/(p_r + p_2)` approaches 1); one point at 3/4 covers that
/// regime.
pub const DEFAULT_PAIRWISE_EXTRA: f64 = 0.75;

/// Per-octave weight taper of the default LCB grid, favoring the smaller,
/// lower-variance bets.
pub const DEFAULT_LCB_DECAY: f64 = 1.15;

/// A finite grid of betting parameters with positive weights summing to at
/// most one.
///
/// Pairwise grids live in `(0,1)`; lower-confidence-bound grids live in
/// `(0,inf)`. Points are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl GridSpec {
    /// Grid for the pairwise e-process; every point must lie in `(0,1)`.
    /// The endpoints are rejected: a bet of 1 makes the e-value vanish on
    /// the first competitor observation.
    pub fn pairwise(points: Vec<f64>, weights: Vec<f64>) -> Result<Self, ModelError> {
        let grid = Self::validate(points, weights)?;
        if !grid.points.iter().all(|&l| l > 0.0 && l < 1.0) {
            return Err(ModelError::InvalidGrid(
                "pairwise grid points must lie in (0,1)".into(),
            ));
        }
        Ok(grid)
    }

    /// Grid for the LCB e-process; every point must lie in `(0,inf)`.
    pub fn lcb(points: Vec<f64>, weights: Vec<f64>) -> Result<Self, ModelError> {
        let grid = Self::validate(points, weights)?;
        if !grid.points.iter().all(|&l| l > 0.0 && l.is_finite()) {
            return Err(ModelError::InvalidGrid(
                "lcb grid points must be positive and finite".into(),
            ));
        }
        Ok(grid)
    }

    /// Geometric pairwise grid `{2^-k : 1 <= k <= K}` with
    /// `K = ceil(log2(8/delta0))` and uniform weights `1/K`.
    ///
    /// For every gap `delta >= delta0` the grid contains a point in
    /// `[delta/8, delta/4]`.
    pub fn geometric_pairwise(delta0: f64) -> Result<Self, ModelError> {
        if !(delta0 > 0.0 && delta0 <= 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "delta0 must lie in (0,1], got {delta0}"
            )));
        }
        let k_max = (8.0 / delta0).log2().ceil() as u32;
        let points: Vec<f64> = (1..=k_max).rev().map(|k| 0.5f64.powi(k as i32)).collect();
        let weights = vec![1.0 / k_max as f64; k_max as usize];
        Self::pairwise(points, weights)
    }

    /// Default pairwise grid: the geometric ladder at
    /// [`DEFAULT_PAIRWISE_DELTA0`] plus [`DEFAULT_PAIRWISE_EXTRA`], with
    /// uniform weights.
    pub fn default_pairwise() -> Self {
        let geo = Self::geometric_pairwise(DEFAULT_PAIRWISE_DELTA0)
            .expect("default pairwise grid is valid");
        let mut points = geo.points.clone();
        points.push(DEFAULT_PAIRWISE_EXTRA);
        let weights = vec![1.0 / points.len() as f64; points.len()];
        Self::pairwise(points, weights).expect("default pairwise grid is valid")
    }

    /// Default LCB grid: `{2^-k : 0 <= k <= 9}` with weights tapering
    /// geometrically toward the aggressive top bet (`w(2^-k)` proportional
    /// to [`DEFAULT_LCB_DECAY`]`^k`). Contains `1/16` and `1/32`, so the
    /// grid-coverage condition for the LCB component holds.
    pub fn default_lcb() -> Self {
        let points: Vec<f64> = (0..10).rev().map(|k| 0.5f64.powi(k)).collect();
        let raw: Vec<f64> = (0..10).map(|k| DEFAULT_LCB_DECAY.powi(k)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = (0..10).map(|i| raw[9 - i] / total).collect();
        Self::lcb(points, weights).expect("default lcb grid is valid")
    }

    fn validate(points: Vec<f64>, weights: Vec<f64>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::InvalidGrid("grid must be nonempty".into()));
        }
        if points.len() != weights.len() {
            return Err(ModelError::InvalidGrid(
                "points and weights must have equal length".into(),
            ));
        }
        if !points.windows(2).all(|w| w[0] < w[1]) {
            return Err(ModelError::InvalidGrid(
                "grid points must be strictly increasing".into(),
            ));
        }
        if !weights.iter().all(|&w| w > 0.0 && w.is_finite()) {
            return Err(ModelError::InvalidGrid(
                "grid weights must be positive".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum > 1.0 + WEIGHT_SUM_TOL {
            return Err(ModelError::InvalidGrid(format!(
                "grid weights sum to {sum} > 1"
            )));
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// (lambda, weight) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }
}
