//! Shared test oracles: independent straight-line reimplementations of the
//! stopping rules, recomputed from scratch at every step. These stay
//! independent of the library's incremental state machines; they share only
//! the documented numeric contracts (log-space evaluation, bisection
//! brackets and tolerances, conservative ends).

#![allow(dead_code)]

use modecert::grid::GridSpec;
use modecert::label::Label;

pub fn lse(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + terms.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Mixture pairwise log e-value from counts.
fn oracle_mixture(grid: &GridSpec, n_r: u64, n_a: u64) -> f64 {
    let terms: Vec<f64> = grid
        .iter()
        .map(|(l, w)| w.ln() + n_r as f64 * l.ln_1p() + n_a as f64 * (-l).ln_1p())
        .collect();
    lse(&terms)
}

/// LCB mixture log at candidate q (q = 0 allowed for the bracket start).
fn oracle_lcb_eval(grid: &GridSpec, n_r: u64, t: u64, q: f64) -> f64 {
    let terms: Vec<f64> = grid
        .iter()
        .filter(|&(l, _)| l * q < 1.0)
        .map(|(l, v)| {
            v.ln() + n_r as f64 * (l * (1.0 - q)).ln_1p() + (t - n_r) as f64 * (-l * q).ln_1p()
        })
        .collect();
    lse(&terms)
}

/// LCB via bisection on [0, p_hat] to 1e-9, returning the lower end.
pub fn oracle_lcb(grid: &GridSpec, n_r: u64, t: u64, threshold_log: f64) -> f64 {
    if n_r == 0 {
        return 0.0;
    }
    let p_hat = n_r as f64 / t as f64;
    if oracle_lcb_eval(grid, n_r, t, p_hat) >= threshold_log {
        return p_hat;
    }
    if oracle_lcb_eval(grid, n_r, t, 0.0) < threshold_log {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, p_hat);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if oracle_lcb_eval(grid, n_r, t, mid) >= threshold_log {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Unseen bound via bisection on (0, 1] to 1e-12, returning the upper end.
pub fn oracle_unseen(t: u64, alpha_u: f64) -> f64 {
    let ln_alpha = alpha_u.ln();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if t as f64 * (-mid).ln_1p() - mid.ln() <= ln_alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Per-step outcome of a straight-line replay.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleStep {
    pub certified: bool,
    pub pw_pass: bool,
    pub lu_pass: bool,
}

/// Straight-line replay of the full stopping rule: at each step, recount
/// everything from the prefix and evaluate both conditions directly.
/// Returns the per-step outcomes and the stopping time.
pub fn cite_oracle(
    stream: &[Label],
    target: Label,
    pairwise: &GridSpec,
    lcb_grid: &GridSpec,
    log_threshold_pw: f64,
    log_threshold_lcb: f64,
    alpha_u: f64,
) -> (Vec<OracleStep>, Option<u64>) {
    let mut steps = Vec::with_capacity(stream.len());
    let mut tau = None;
    for t in 1..=stream.len() {
        let prefix = &stream[..t];
        // counts in first-seen order
        let mut order: Vec<Label> = Vec::new();
        for &x in prefix {
            if !order.contains(&x) {
                order.push(x);
            }
        }
        let count = |lab: Label| prefix.iter().filter(|&&x| x == lab).count() as u64;
        let n_r = count(target);
        // runner-up: maximal count among non-target, first-seen tie-break
        let mut runner: Option<(Label, u64)> = None;
        for &lab in &order {
            if lab == target {
                continue;
            }
            let c = count(lab);
            if runner.is_none() || c > runner.unwrap().1 {
                runner = Some((lab, c));
            }
        }
        let pw_pass = match runner {
            None => true,
            Some((_, n_a)) => oracle_mixture(pairwise, n_r, n_a) >= log_threshold_pw,
        };
        let l = oracle_lcb(lcb_grid, n_r, t as u64, log_threshold_lcb);
        let u = oracle_unseen(t as u64, alpha_u);
        let lu_pass = l > u;
        let certified = pw_pass && lu_pass;
        if certified && tau.is_none() {
            tau = Some(t as u64);
        }
        steps.push(OracleStep {
            certified,
            pw_pass,
            lu_pass,
        });
        if tau.is_some() {
            break;
        }
    }
    (steps, tau)
}

/// Straight-line replay of the top-k stopping rule.
pub fn topk_oracle(
    stream: &[Label],
    targets: &[Label],
    pairwise: &GridSpec,
    lcb_grid: &GridSpec,
    log_threshold_pw: f64,
    log_threshold_lcb: f64,
    alpha_u: f64,
) -> Option<u64> {
    for t in 1..=stream.len() {
        let prefix = &stream[..t];
        let mut order: Vec<Label> = Vec::new();
        for &x in prefix {
            if !order.contains(&x) {
                order.push(x);
            }
        }
        let count = |lab: Label| prefix.iter().filter(|&&x| x == lab).count() as u64;
        // outsider runner-up
        let mut outsider: Option<u64> = None;
        for &lab in &order {
            if targets.contains(&lab) {
                continue;
            }
            let c = count(lab);
            if outsider.is_none() || c > outsider.unwrap() {
                outsider = Some(c);
            }
        }
        let pw_pass = match outsider {
            None => true,
            Some(n_out) => {
                targets
                    .iter()
                    .map(|&s| oracle_mixture(pairwise, count(s), n_out))
                    .fold(f64::INFINITY, f64::min)
                    >= log_threshold_pw
            }
        };
        let min_lcb = targets
            .iter()
            .map(|&s| oracle_lcb(lcb_grid, count(s), t as u64, log_threshold_lcb))
            .fold(f64::INFINITY, f64::min);
        let u = oracle_unseen(t as u64, alpha_u);
        if pw_pass && min_lcb > u {
            return Some(t as u64);
        }
    }
    None
}

/// Straight-line replay of the weighted stopping rule (all-competitors
/// check, weighted LCB over the raw history, shared unseen bound).
pub fn wcite_oracle(
    stream: &[(Label, f64)],
    target: Label,
    pairwise: &GridSpec,
    lcb_grid: &GridSpec,
    log_threshold_pw: f64,
    log_threshold_lcb: f64,
    alpha_u: f64,
) -> Option<u64> {
    for t in 1..=stream.len() {
        let prefix = &stream[..t];
        let mut competitors: Vec<Label> = Vec::new();
        for &(x, _) in prefix {
            if x != target && !competitors.contains(&x) {
                competitors.push(x);
            }
        }
        let pw_pass = competitors.iter().all(|&a| {
            let terms: Vec<f64> = pairwise
                .iter()
                .map(|(l, w)| {
                    let mut s = w.ln();
                    for &(x, wt) in prefix {
                        if x == target {
                            s += (l * wt).ln_1p();
                        } else if x == a {
                            s += (-l * wt).ln_1p();
                        }
                    }
                    s
                })
                .collect();
            lse(&terms) >= log_threshold_pw
        });
        let mu_hat = prefix
            .iter()
            .filter(|&&(x, _)| x == target)
            .map(|&(_, w)| w)
            .sum::<f64>()
            / t as f64;
        let eval = |q: f64| {
            let terms: Vec<f64> = lcb_grid
                .iter()
                .filter(|&(l, _)| l * q < 1.0)
                .map(|(l, v)| {
                    let mut s = v.ln();
                    for &(x, wt) in prefix {
                        if x == target {
                            s += (l * (wt - q)).ln_1p();
                        } else {
                            s += (-l * q).ln_1p();
                        }
                    }
                    s
                })
                .collect();
            lse(&terms)
        };
        let lcb = if mu_hat <= 0.0 {
            0.0
        } else if eval(mu_hat) >= log_threshold_lcb {
            mu_hat
        } else if eval(0.0) < log_threshold_lcb {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0f64, mu_hat);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if eval(mid) >= log_threshold_lcb {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if pw_pass && lcb > oracle_unseen(t as u64, alpha_u) {
            return Some(t as u64);
        }
    }
    None
}
