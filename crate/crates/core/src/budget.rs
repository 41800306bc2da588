//! Error-budget split across the three certification components.

use serde::{Deserialize, Serialize};

use crate::ModelError;

/// Absolute tolerance for the budget-sum constraint.
pub const BUDGET_SUM_TOL: f64 = 1e-12;

/// Split of the certification level `epsilon` into per-component budgets
/// with `alpha_pw + alpha_r + alpha_u <= epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSplit {
    pub epsilon: f64,
    pub alpha_pw: f64,
    pub alpha_r: f64,
    pub alpha_u: f64,
}

impl BudgetSplit {
    /// The equal split `epsilon/3` per component.
    pub fn equal_split(epsilon: f64) -> Result<Self, ModelError> {
        Self::new(epsilon, epsilon / 3.0, epsilon / 3.0, epsilon / 3.0)
    }

    pub fn new(
        epsilon: f64,
        alpha_pw: f64,
        alpha_r: f64,
        alpha_u: f64,
    ) -> Result<Self, ModelError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ModelError::InvalidBudget(format!(
                "epsilon must lie in (0,1), got {epsilon}"
            )));
        }
        for (name, a) in [
            ("alpha_pw", alpha_pw),
            ("alpha_r", alpha_r),
            ("alpha_u", alpha_u),
        ] {
            if !(a > 0.0 && a < 1.0) {
                return Err(ModelError::InvalidBudget(format!(
                    "{name} must lie in (0,1), got {a}"
                )));
            }
        }
        if alpha_pw + alpha_r + alpha_u > epsilon + BUDGET_SUM_TOL {
            return Err(ModelError::InvalidBudget(format!(
                "component budgets sum to {} > epsilon = {epsilon}",
                alpha_pw + alpha_r + alpha_u
            )));
        }
        Ok(Self {
            epsilon,
            alpha_pw,
            alpha_r,
            alpha_u,
        })
    }

    /// Log-threshold for the pairwise component, `log(1/alpha_pw)`.
    pub fn log_threshold_pw(&self) -> f64 {
        -self.alpha_pw.ln()
    }

    /// Log-threshold for the LCB component, `log(1/alpha_r)`.
    pub fn log_threshold_lcb(&self) -> f64 {
        -self.alpha_r.ln()
    }
}
