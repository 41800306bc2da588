//! Time-uniform lower confidence bound on the target mass and the
//! deterministic upper bound on unseen-category masses.
//!
//! The LCB e-process for candidate value `q` collapses for indicator
//! observations: with `n_r` target hits among `t` draws and grid point
//! `lambda < 1/q`,
//!
//! ```text
//! M_t(q, lambda) = (1 + lambda(1-q))^n_r * (1 - lambda q)^(t - n_r),
//! ```
//!
//! so each candidate `q` is evaluated in O(|grid|). `q -> M_t(q)` is
//! nonincreasing, which makes the implicit bound
//! `L_t = sup({0} u {q in (0, p_hat] : M_t(q) >= threshold})` computable by
//! bisection. Both bisections return conservative ends (lower for `L_t`,
//! upper for `U_t`), preserving the Type-I direction of every inequality in
//! the stopping rule.

use crate::grid::GridSpec;
use crate::ModelError;

/// Absolute bisection tolerance for the lower confidence bound.
pub const LCB_TOL: f64 = 1e-9;
/// Absolute bisection tolerance for the unseen bound.
pub const UNSEEN_TOL: f64 = 1e-12;

/// Inputs for one LCB evaluation.
#[derive(Debug, Clone)]
pub struct LcbInputs<'a> {
    /// LCB grid (points in `(0, inf)`).
    pub grid: &'a GridSpec,
    /// Target hits `N_t(r)`.
    pub n_r: u64,
    /// Observations so far; requires `n_r <= t`.
    pub t: u64,
    /// `log(1/alpha_r)`.
    pub threshold_log: f64,
}

/// Log of the LCB mixture e-value at candidate `q`,
/// `sum over lambda < 1/q of v_lambda (1+lambda(1-q))^n_r (1-lambda q)^(t-n_r)`.
/// Returns `-inf` when no grid point survives the `lambda < 1/q` filter.
pub fn lcb_mixture_log(q: f64, inputs: &LcbInputs<'_>) -> Result<f64, ModelError> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "q must lie in (0,1], got {q}"
        )));
    }
    Ok(lcb_mixture_log_unchecked(q, inputs))
}

/// Same as [`lcb_mixture_log`] but also accepts `q = 0`, where every grid
/// point is admissible and the value is the mixture of `(1+lambda)^n_r`.
fn lcb_mixture_log_unchecked(q: f64, inputs: &LcbInputs<'_>) -> f64 {
    let n_r = inputs.n_r as f64;
    let n_miss = (inputs.t - inputs.n_r) as f64;
    let terms: Vec<f64> = inputs
        .grid
        .iter()
        .filter(|&(lambda, _)| lambda * q < 1.0) // strict: factors stay positive
        .map(|(lambda, v)| {
            v.ln() + n_r * (lambda * (1.0 - q)).ln_1p() + n_miss * (-lambda * q).ln_1p()
        })
        .collect();
    crate::eprocess::log_sum_exp(&terms)
}

/// The lower confidence bound `L_t(r)`.
///
/// Returns 0 when `n_r = 0` or when no candidate reaches the threshold;
/// otherwise bisects `q` over `(0, p_hat]` down to [`LCB_TOL`] and returns
/// the lower end of the final bracket.
pub fn lower_conf_bound(inputs: &LcbInputs<'_>) -> f64 {
    debug_assert!(inputs.n_r <= inputs.t && inputs.t >= 1);
    if inputs.n_r == 0 {
        return 0.0;
    }
    let p_hat = inputs.n_r as f64 / inputs.t as f64;
    lcb_sup(
        |q| lcb_mixture_log_unchecked(q, inputs),
        p_hat,
        inputs.threshold_log,
    )
}

/// Exact decision `lower_conf_bound(inputs) > bound` with early exit once
/// the bisection bracket clears `bound`. The bracket updates are identical
/// to [`lower_conf_bound`], so the decision never disagrees with comparing
/// the fully converged value.
pub fn lcb_exceeds(inputs: &LcbInputs<'_>, bound: f64) -> bool {
    debug_assert!(inputs.n_r <= inputs.t && inputs.t >= 1);
    if inputs.n_r == 0 {
        return 0.0 > bound;
    }
    let p_hat = inputs.n_r as f64 / inputs.t as f64;
    lcb_sup_exceeds(
        |q| lcb_mixture_log_unchecked(q, inputs),
        p_hat,
        inputs.threshold_log,
        bound,
    )
}

/// Bisection for `sup({0} u {q in (0, upper] : eval(q) >= threshold})` given
/// a nonincreasing `eval`. Returns the conservative lower end.
pub(crate) fn lcb_sup(eval: impl Fn(f64) -> f64, upper: f64, threshold_log: f64) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    if eval(upper) >= threshold_log {
        return upper;
    }
    if eval(0.0) < threshold_log {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, upper);
    while hi - lo > LCB_TOL {
        let mid = 0.5 * (lo + hi);
        if eval(mid) >= threshold_log {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Early-exit variant of [`lcb_sup`] deciding `lcb_sup(..) > bound` exactly.
pub(crate) fn lcb_sup_exceeds(
    eval: impl Fn(f64) -> f64,
    upper: f64,
    threshold_log: f64,
    bound: f64,
) -> bool {
    if upper <= 0.0 {
        return 0.0 > bound;
    }
    if eval(upper) >= threshold_log {
        return upper > bound;
    }
    if eval(0.0) < threshold_log {
        return 0.0 > bound;
    }
    let (mut lo, mut hi) = (0.0f64, upper);
    while hi - lo > LCB_TOL {
        // The final value lies in [lo, hi): once the bracket clears `bound`
        // the comparison is settled.
        if lo > bound {
            return true;
        }
        if hi <= bound {
            return false;
        }
        let mid = 0.5 * (lo + hi);
        if eval(mid) >= threshold_log {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo > bound
}

/// The unseen upper bound `U_t = min{u in (0,1] : u^-1 (1-u)^t <= alpha_u}`.
///
/// `f_t(u) = u^-1 (1-u)^t` is strictly decreasing on `(0,1]`, so the bound
/// is located by bisection to [`UNSEEN_TOL`], returning the upper end of
/// the bracket.
pub fn unseen_bound(t: u64, alpha_u: f64) -> Result<f64, ModelError> {
    if t < 1 {
        return Err(ModelError::InvalidParameter("t must be >= 1".into()));
    }
    if !(alpha_u > 0.0 && alpha_u < 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "alpha_u must lie in (0,1), got {alpha_u}"
        )));
    }
    let ln_alpha = alpha_u.ln();
    let tf = t as f64;
    let log_f = |u: f64| tf * (-u).ln_1p() - u.ln();
    // f(0+) = +inf and f(1) = 0 <= alpha_u, so the bracket is always valid.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > UNSEEN_TOL {
        let mid = 0.5 * (lo + hi);
        if log_f(mid) <= ln_alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Per-state memo for the deterministic sequence `t -> U_t`.
#[derive(Debug, Clone)]
pub struct UnseenCache {
    alpha_u: f64,
    values: Vec<f64>,
}

impl UnseenCache {
    pub fn new(alpha_u: f64) -> Self {
        Self {
            alpha_u,
            values: Vec::new(),
        }
    }

    /// `U_t` for `t >= 1`, computed once per distinct `t`.
    pub fn get(&mut self, t: u64) -> f64 {
        let idx = t as usize - 1;
        while self.values.len() <= idx {
            let next_t = self.values.len() as u64 + 1;
            let u = unseen_bound(next_t, self.alpha_u).expect("valid cache parameters");
            self.values.push(u);
        }
        self.values[idx]
    }
}
