//! Confidence-weighted certification.
//!
//! Observations arrive as `(label, weight)` pairs with weights in `[0,1]`;
//! the certified quantity is the weighted mass `mu_a = E[W 1{X=a}]`. The
//! pairwise e-process factorizes per competitor,
//!
//! ```text
//! log E_t(r,a)(lambda) = A(lambda) - B(a, lambda),
//! A(lambda)    = sum over target hits of log(1 + lambda W_i),
//! B(a, lambda) = sum over hits of a  of -log(1 - lambda W_i),
//! ```
//!
//! so the state keeps per-lambda running sums and never replays history.
//! Runner-up monotonicity fails under heterogeneous weights, so the
//! stopping rule checks *every* observed competitor (O(|A_t|) per round).
//! The weighted LCB e-value at candidate `q` multiplies `(1 - lambda q)`
//! per non-target round and `(1 + lambda(W_i - q))` per stored target-hit
//! weight, evaluated lazily per bisection probe.

use std::collections::HashMap;

use crate::bounds::{lcb_sup, lcb_sup_exceeds, UnseenCache};
use crate::certifier::{CertifierConfig, Diagnostics, Verdict};
use crate::eprocess::log_sum_exp;
use crate::label::Label;
use crate::ModelError;

/// One weighted observation; weights outside `[0,1]` are rejected, not
/// clipped (clipping would silently change the certified masses).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedObservation {
    pub label: Label,
    pub weight: f64,
}

/// How much per-step work to do.
///
/// `Lazy` skips the LCB bisection on rounds where its outcome cannot change
/// the verdict or the diagnostics; `Full` evaluates everything each step so
/// trace exports carry complete values. Verdict sequences are identical in
/// both modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Lazy,
    Full,
}

#[derive(Debug, Clone)]
struct CompetitorSums {
    label: Label,
    count: u64,
    /// Per-lambda `B(a, lambda)` sums.
    b: Vec<f64>,
}

/// Per-step view of the weighted certifier internals.
#[derive(Debug, Clone, Copy)]
pub struct WStepSnapshot {
    pub t: u64,
    /// Minimum over observed competitors of the log mixture e-value;
    /// evaluated against an empty competitor while vacuous. In `Lazy` mode
    /// this may be the first failing competitor rather than the exact min.
    pub pw_log_e: f64,
    pub pw_vacuous: bool,
    /// Weighted LCB; `NaN` on lazy rounds that skipped the full bisection.
    pub lcb: f64,
    pub unseen: f64,
    pub mu_hat: f64,
}

/// The weighted-mode certifier (all-competitors check, weighted LCB,
/// unchanged unseen bound).
#[derive(Debug, Clone)]
pub struct WCiteCertifier {
    config: CertifierConfig,
    target: Label,
    mode: EvalMode,
    t: u64,
    n_r: u64,
    /// Per-lambda `A(lambda)` sums over target hits.
    a: Vec<f64>,
    competitors: Vec<CompetitorSums>,
    comp_slots: HashMap<Label, usize>,
    target_weights: Vec<f64>,
    target_weight_sum: f64,
    unseen: UnseenCache,
    verdict: Verdict,
    diag: Diagnostics,
    last: Option<WStepSnapshot>,
}

impl WCiteCertifier {
    pub fn new(target: Label, config: CertifierConfig) -> Self {
        Self::with_mode(target, config, EvalMode::Lazy)
    }

    pub fn with_mode(target: Label, config: CertifierConfig, mode: EvalMode) -> Self {
        let alpha_u = config.budget.alpha_u;
        let k = config.pairwise_grid.len();
        Self {
            config,
            target,
            mode,
            t: 0,
            n_r: 0,
            a: vec![0.0; k],
            competitors: Vec::new(),
            comp_slots: HashMap::new(),
            target_weights: Vec::new(),
            target_weight_sum: 0.0,
            unseen: UnseenCache::new(alpha_u),
            verdict: Verdict::Continue,
            diag: Diagnostics::default(),
            last: None,
        }
    }

    pub fn target(&self) -> Label {
        self.target
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diag
    }

    pub fn snapshot(&self) -> Option<&WStepSnapshot> {
        self.last.as_ref()
    }

    /// Weighted empirical target mass `mu_hat_t(r)`.
    pub fn mu_hat(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.target_weight_sum / self.t as f64
        }
    }

    /// Log of the single-lambda weighted LCB e-value
    /// `M_t(q, lambda) = (1-lambda q)^(t-n_r) * prod_W (1+lambda(W-q))`, or
    /// `None` when `lambda >= 1/q` (the point is excluded from the mixture).
    pub fn weighted_lcb_log(&self, q: f64, lambda: f64) -> Option<f64> {
        weighted_lcb_log(q, lambda, &self.target_weights, self.t)
    }

    /// Log mixture e-value against competitor slot.
    fn competitor_mixture(&self, slot: usize) -> f64 {
        let comp = &self.competitors[slot];
        let terms: Vec<f64> = self
            .config
            .pairwise_grid
            .weights()
            .iter()
            .enumerate()
            .map(|(i, &w)| w.ln() + self.a[i] - comp.b[i])
            .collect();
        log_sum_exp(&terms)
    }

    /// Mixture value with no competitor observations (vacuous rounds).
    fn empty_competitor_mixture(&self) -> f64 {
        let terms: Vec<f64> = self
            .config
            .pairwise_grid
            .weights()
            .iter()
            .enumerate()
            .map(|(i, &w)| w.ln() + self.a[i])
            .collect();
        log_sum_exp(&terms)
    }

    fn lcb_eval(&self, q: f64) -> f64 {
        let n_miss = (self.t - self.n_r) as f64;
        let terms: Vec<f64> = self
            .config
            .lcb_grid
            .iter()
            .filter_map(|(lambda, v)| {
                if lambda * q >= 1.0 {
                    return None;
                }
                let mut s = v.ln() + n_miss * (-lambda * q).ln_1p();
                for &w in &self.target_weights {
                    s += (lambda * (w - q)).ln_1p();
                }
                Some(s)
            })
            .collect();
        log_sum_exp(&terms)
    }

    /// Ingests one weighted observation; no-op once certified.
    pub fn step(&mut self, obs: WeightedObservation) -> Result<Verdict, ModelError> {
        if !(obs.weight >= 0.0 && obs.weight <= 1.0) {
            return Err(ModelError::InvalidObservation(format!(
                "weight must lie in [0,1], got {}",
                obs.weight
            )));
        }
        if self.verdict != Verdict::Continue {
            return Ok(self.verdict);
        }
        self.t += 1;
        if obs.label == self.target {
            self.n_r += 1;
            for (i, (lambda, _)) in self.config.pairwise_grid.iter().enumerate() {
                self.a[i] += (lambda * obs.weight).ln_1p();
            }
            self.target_weights.push(obs.weight);
            self.target_weight_sum += obs.weight;
        } else {
            let slot = match self.comp_slots.get(&obs.label) {
                Some(&s) => s,
                None => {
                    let s = self.competitors.len();
                    self.comp_slots.insert(obs.label, s);
                    self.competitors.push(CompetitorSums {
                        label: obs.label,
                        count: 0,
                        b: vec![0.0; self.config.pairwise_grid.len()],
                    });
                    s
                }
            };
            self.competitors[slot].count += 1;
            for (i, (lambda, _)) in self.config.pairwise_grid.iter().enumerate() {
                self.competitors[slot].b[i] -= (-lambda * obs.weight).ln_1p();
            }
        }

        let threshold = self.config.budget.log_threshold_pw();
        let pw_vacuous = self.competitors.is_empty();
        let mut pw_pass = true;
        let mut pw_log_e = f64::INFINITY;
        if pw_vacuous {
            pw_log_e = self.empty_competitor_mixture();
        } else {
            for slot in 0..self.competitors.len() {
                let v = self.competitor_mixture(slot);
                pw_log_e = pw_log_e.min(v);
                if v < threshold {
                    pw_pass = false;
                    if self.mode == EvalMode::Lazy {
                        break;
                    }
                }
            }
        }

        let unseen = self.unseen.get(self.t);
        let mu_hat = self.mu_hat();
        let lcb_threshold = self.config.budget.log_threshold_lcb();

        // The LCB decision only matters for the verdict when the pairwise
        // check passed, and for diagnostics until the first crossing.
        let need_lu = self.mode == EvalMode::Full || pw_pass || self.diag.tau_lu.is_none();
        let mut lcb = f64::NAN;
        let lu_pass = if need_lu {
            if self.mode == EvalMode::Full {
                lcb = lcb_sup(|q| self.lcb_eval(q), mu_hat, lcb_threshold);
                lcb > unseen
            } else {
                lcb_sup_exceeds(|q| self.lcb_eval(q), mu_hat, lcb_threshold, unseen)
            }
        } else {
            false
        };

        if pw_pass && self.diag.tau_pw.is_none() {
            self.diag.tau_pw = Some(self.t);
        }
        if lu_pass && self.diag.tau_lu.is_none() {
            self.diag.tau_lu = Some(self.t);
        }
        if pw_pass && lu_pass {
            self.verdict = Verdict::CertifiedAt(self.t);
        }
        self.last = Some(WStepSnapshot {
            t: self.t,
            pw_log_e,
            pw_vacuous,
            lcb,
            unseen,
            mu_hat,
        });
        Ok(self.verdict)
    }

    /// Exact bookkeeping check: number of stored target-hit weights.
    pub fn stored_target_weights(&self) -> &[f64] {
        &self.target_weights
    }

    /// Observed competitor labels with counts, first-seen order.
    pub fn competitors(&self) -> impl Iterator<Item = (Label, u64)> + '_ {
        self.competitors.iter().map(|c| (c.label, c.count))
    }
}

/// Free-function form of the single-lambda weighted LCB e-value log.
pub fn weighted_lcb_log(q: f64, lambda: f64, target_weights: &[f64], t: u64) -> Option<f64> {
    if lambda * q >= 1.0 {
        return None;
    }
    let n_miss = (t - target_weights.len() as u64) as f64;
    let mut s = n_miss * (-lambda * q).ln_1p();
    for &w in target_weights {
        s += (lambda * (w - q)).ln_1p();
    }
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(i: u32) -> Label {
        Label(i)
    }

    fn config() -> CertifierConfig {
        CertifierConfig::default_at(0.05).unwrap()
    }

    fn obs(i: u32, w: f64) -> WeightedObservation {
        WeightedObservation {
            label: l(i),
            weight: w,
        }
    }

    #[test]
    fn rejects_out_of_range_weights() {
        let mut c = WCiteCertifier::new(l(0), config());
        assert!(c.step(obs(0, 1.2)).is_err());
        assert!(c.step(obs(0, -0.1)).is_err());
        assert!(c.step(obs(0, 1.0)).is_ok());
        assert!(c.step(obs(0, 0.0)).is_ok());
    }

    #[test]
    fn zero_weights_never_certify() {
        let mut c = WCiteCertifier::with_mode(l(0), config(), EvalMode::Full);
        for _ in 0..500 {
            assert_eq!(c.step(obs(0, 0.0)).unwrap(), Verdict::Continue);
        }
        assert_eq!(c.snapshot().unwrap().lcb, 0.0);
        assert_eq!(c.mu_hat(), 0.0);
    }

    #[test]
    fn weighted_lcb_log_examples() {
        // no target hits
        let v = weighted_lcb_log(0.25, 0.5, &[], 6).unwrap();
        assert!((v - 6.0 * (1.0f64 - 0.125).ln()).abs() < 1e-12);

        // one unit-weight hit reduces to the unweighted factor
        let v = weighted_lcb_log(0.25, 0.5, &[1.0], 1).unwrap();
        assert!((v - (1.0f64 + 0.5 * 0.75).ln()).abs() < 1e-12);

        // two half-weight hits at lambda 1/16, q = 0.25
        let v = weighted_lcb_log(0.25, 1.0 / 16.0, &[0.5, 0.5], 2).unwrap();
        assert!((v - 2.0 * 1.015625f64.ln()).abs() < 1e-12);

        // excluded grid point
        assert!(weighted_lcb_log(0.5, 2.0, &[0.5], 1).is_none());
        assert!(weighted_lcb_log(0.5, 4.0, &[0.5], 1).is_none());
    }

    #[test]
    fn mu_hat_is_weight_sum_over_t() {
        let mut c = WCiteCertifier::new(l(0), config());
        let ws = [0.3, 0.9, 0.5];
        for &w in &ws {
            c.step(obs(0, w)).unwrap();
        }
        c.step(obs(1, 0.7)).unwrap();
        let expected = ws.iter().sum::<f64>() / 4.0;
        assert!((c.mu_hat() - expected).abs() < 1e-15);
        assert_eq!(c.stored_target_weights().len(), 3);
    }

    #[test]
    fn unit_weight_stream_matches_unweighted_verdicts() {
        use crate::certifier::CiteCertifier;
        // a concentrated stream where both certify
        let stream: Vec<Label> = (0..200)
            .map(|i| if i % 9 == 0 { l(1) } else { l(0) })
            .collect();
        let mut cite = CiteCertifier::new(l(0), config());
        let mut wcite = WCiteCertifier::with_mode(l(0), config(), EvalMode::Full);
        for &lab in &stream {
            let v1 = cite.step(lab);
            let v2 = wcite
                .step(WeightedObservation {
                    label: lab,
                    weight: 1.0,
                })
                .unwrap();
            assert_eq!(v1, v2);
        }
        assert!(cite.verdict().certified_at().is_some());
    }

    #[test]
    fn lazy_and_full_modes_agree_on_verdicts() {
        let stream: Vec<(u32, f64)> = (0..300)
            .map(|i| {
                let lab = [0u32, 0, 0, 1, 0, 2, 0, 0][i % 8];
                let w = [0.9, 0.8, 1.0, 0.2, 0.7][i % 5];
                (lab, w)
            })
            .collect();
        let mut lazy = WCiteCertifier::new(l(0), config());
        let mut full = WCiteCertifier::with_mode(l(0), config(), EvalMode::Full);
        for &(lab, w) in &stream {
            let v1 = lazy.step(obs(lab, w)).unwrap();
            let v2 = full.step(obs(lab, w)).unwrap();
            assert_eq!(v1, v2);
        }
        assert_eq!(lazy.diagnostics(), full.diagnostics());
    }

    #[test]
    fn weighted_lcb_monotone_in_q() {
        let mut c = WCiteCertifier::with_mode(l(0), config(), EvalMode::Full);
        for i in 0..120 {
            let w = 0.3 + 0.6 * ((i * 37 % 11) as f64 / 11.0);
            let lab = if i % 4 == 0 { 1 } else { 0 };
            c.step(obs(lab, w)).unwrap();
        }
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let q = i as f64 / 100.0;
            let v = c.lcb_eval(q);
            assert!(v <= prev, "weighted LCB mixture not monotone at q={q}");
            prev = v;
        }
    }
}
