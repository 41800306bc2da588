//! The streaming certification state machine and its top-k extension.
//!
//! Each step ingests one label, updates counts, evaluates the pairwise
//! mixture e-process at the empirical runner-up (vacuously true while no
//! competitor has been observed), recomputes `L_t` and `U_t`, and certifies
//! at the first `t` where the pairwise condition and `L_t > U_t` hold
//! simultaneously. Transient crossings at disjoint times do not certify.
//! Once certified the state is absorbing: further steps are no-ops.

use serde::{Deserialize, Serialize};

use crate::bounds::{lower_conf_bound, LcbInputs, UnseenCache};
use crate::budget::BudgetSplit;
use crate::counts::CountTable;
use crate::eprocess::mixture_log_e;
use crate::grid::GridSpec;
use crate::label::Label;
use crate::ModelError;

/// Shared configuration for the sequential certifiers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifierConfig {
    pub budget: BudgetSplit,
    pub pairwise_grid: GridSpec,
    pub lcb_grid: GridSpec,
}

impl CertifierConfig {
    /// Equal-split budget with the default grids.
    pub fn default_at(epsilon: f64) -> Result<Self, ModelError> {
        Ok(Self {
            budget: BudgetSplit::equal_split(epsilon)?,
            pairwise_grid: GridSpec::default_pairwise(),
            lcb_grid: GridSpec::default_lcb(),
        })
    }
}

/// Certification verdict; absorbing once reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Continue,
    CertifiedAt(u64),
}

impl Verdict {
    pub fn certified_at(self) -> Option<u64> {
        match self {
            Verdict::Continue => None,
            Verdict::CertifiedAt(t) => Some(t),
        }
    }
}

/// First-crossing times of the two stopping conditions, recorded separately.
/// Vacuous pairwise rounds count toward `tau_pw` (and are flagged in the
/// step trace).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub tau_pw: Option<u64>,
    pub tau_lu: Option<u64>,
}

/// Per-step view of the certifier internals, consumed by the trace export.
#[derive(Debug, Clone, Copy)]
pub struct StepSnapshot {
    pub t: u64,
    /// Log mixture e-value at the runner-up counts; evaluated against a
    /// zero-count competitor while the pairwise condition is vacuous.
    pub pw_log_e: f64,
    pub pw_vacuous: bool,
    pub lcb: f64,
    pub unseen: f64,
}

/// The unique-mode certifier for a fixed target.
#[derive(Debug, Clone)]
pub struct CiteCertifier {
    config: CertifierConfig,
    table: CountTable,
    unseen: UnseenCache,
    verdict: Verdict,
    diag: Diagnostics,
    last: Option<StepSnapshot>,
}

impl CiteCertifier {
    pub fn new(target: Label, config: CertifierConfig) -> Self {
        let alpha_u = config.budget.alpha_u;
        Self {
            config,
            table: CountTable::new(target),
            unseen: UnseenCache::new(alpha_u),
            verdict: Verdict::Continue,
            diag: Diagnostics::default(),
            last: None,
        }
    }

    pub fn target(&self) -> Label {
        self.table.target()
    }

    pub fn t(&self) -> u64 {
        self.table.t()
    }

    pub fn table(&self) -> &CountTable {
        &self.table
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diag
    }

    /// Internals after the most recent step; `None` before the first step.
    pub fn snapshot(&self) -> Option<&StepSnapshot> {
        self.last.as_ref()
    }

    /// Ingests one observation. Stepping an absorbed state is a no-op.
    pub fn step(&mut self, label: Label) -> Verdict {
        if self.verdict != Verdict::Continue {
            return self.verdict;
        }
        self.table.observe(label);
        let t = self.table.t();
        let n_r = self.table.target_count();

        let pw_vacuous = self.table.runner_up().is_none();
        let pw_log_e = mixture_log_e(
            &self.config.pairwise_grid,
            n_r,
            self.table.runner_up_count(),
        );
        let pw_pass = pw_vacuous || pw_log_e >= self.config.budget.log_threshold_pw();

        let lcb = lower_conf_bound(&LcbInputs {
            grid: &self.config.lcb_grid,
            n_r,
            t,
            threshold_log: self.config.budget.log_threshold_lcb(),
        });
        let unseen = self.unseen.get(t);
        let lu_pass = lcb > unseen;

        if pw_pass && self.diag.tau_pw.is_none() {
            self.diag.tau_pw = Some(t);
        }
        if lu_pass && self.diag.tau_lu.is_none() {
            self.diag.tau_lu = Some(t);
        }
        if pw_pass && lu_pass {
            self.verdict = Verdict::CertifiedAt(t);
        }
        self.last = Some(StepSnapshot {
            t,
            pw_log_e,
            pw_vacuous,
            lcb,
            unseen,
        });
        self.verdict
    }
}

/// Certifier for a target set `S`: certifies that every label in `S`
/// strictly dominates every label outside `S`.
///
/// The pairwise condition takes the minimum over `s in S` of the mixture
/// e-value against the outsider runner-up (vacuous while no outsider has
/// been observed); the LCB condition requires `min_s L_t(s) > U_t`.
#[derive(Debug, Clone)]
pub struct TopKCertifier {
    config: CertifierConfig,
    targets: Vec<Label>,
    t: u64,
    target_counts: Vec<u64>,
    /// Observed outsiders in first-seen order: (label, count).
    outsiders: Vec<(Label, u64)>,
    outsider_slots: std::collections::HashMap<Label, usize>,
    /// Slot of the outsider with maximal count, first-seen tie-break.
    outsider_max: Option<usize>,
    unseen: UnseenCache,
    verdict: Verdict,
    diag: Diagnostics,
    last: Option<StepSnapshot>,
}

impl TopKCertifier {
    pub fn new(targets: Vec<Label>, config: CertifierConfig) -> Result<Self, ModelError> {
        if targets.is_empty() {
            return Err(ModelError::InvalidConfig(
                "target set must be nonempty".into(),
            ));
        }
        let mut dedup = targets.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != targets.len() {
            return Err(ModelError::InvalidConfig(
                "target set labels must be distinct".into(),
            ));
        }
        let alpha_u = config.budget.alpha_u;
        let k = targets.len();
        Ok(Self {
            config,
            targets,
            t: 0,
            target_counts: vec![0; k],
            outsiders: Vec::new(),
            outsider_slots: std::collections::HashMap::new(),
            outsider_max: None,
            unseen: UnseenCache::new(alpha_u),
            verdict: Verdict::Continue,
            diag: Diagnostics::default(),
            last: None,
        })
    }

    pub fn targets(&self) -> &[Label] {
        &self.targets
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diag
    }

    pub fn snapshot(&self) -> Option<&StepSnapshot> {
        self.last.as_ref()
    }

    /// Ingests one observation; no-op once certified.
    pub fn step(&mut self, label: Label) -> Verdict {
        if self.verdict != Verdict::Continue {
            return self.verdict;
        }
        self.t += 1;
        if let Some(pos) = self.targets.iter().position(|&s| s == label) {
            self.target_counts[pos] += 1;
        } else {
            let slot = match self.outsider_slots.get(&label) {
                Some(&s) => {
                    self.outsiders[s].1 += 1;
                    s
                }
                None => {
                    let s = self.outsiders.len();
                    self.outsider_slots.insert(label, s);
                    self.outsiders.push((label, 1));
                    s
                }
            };
            match self.outsider_max {
                None => self.outsider_max = Some(slot),
                Some(m) if m == slot => {}
                Some(m) => {
                    let (c, mc) = (self.outsiders[slot].1, self.outsiders[m].1);
                    if c > mc || (c == mc && slot < m) {
                        self.outsider_max = Some(slot);
                    }
                }
            }
        }

        let out_count = self.outsider_max.map_or(0, |m| self.outsiders[m].1);
        let pw_vacuous = self.outsider_max.is_none();
        let pw_log_e = self
            .target_counts
            .iter()
            .map(|&n_s| mixture_log_e(&self.config.pairwise_grid, n_s, out_count))
            .fold(f64::INFINITY, f64::min);
        let pw_pass = pw_vacuous || pw_log_e >= self.config.budget.log_threshold_pw();

        let lcb = self
            .target_counts
            .iter()
            .map(|&n_s| {
                lower_conf_bound(&LcbInputs {
                    grid: &self.config.lcb_grid,
                    n_r: n_s,
                    t: self.t,
                    threshold_log: self.config.budget.log_threshold_lcb(),
                })
            })
            .fold(f64::INFINITY, f64::min);
        let unseen = self.unseen.get(self.t);
        let lu_pass = lcb > unseen;

        if pw_pass && self.diag.tau_pw.is_none() {
            self.diag.tau_pw = Some(self.t);
        }
        if lu_pass && self.diag.tau_lu.is_none() {
            self.diag.tau_lu = Some(self.t);
        }
        if pw_pass && lu_pass {
            self.verdict = Verdict::CertifiedAt(self.t);
        }
        self.last = Some(StepSnapshot {
            t: self.t,
            pw_log_e,
            pw_vacuous,
            lcb,
            unseen,
        });
        self.verdict
    }
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

    #[test]
    fn init_state() {
        let c = CiteCertifier::new(l(0), config());
        assert_eq!(c.t(), 0);
        assert_eq!(c.verdict(), Verdict::Continue);
        assert_eq!(c.diagnostics(), Diagnostics::default());
        assert!(c.snapshot().is_none());
        // equal split at 0.05 gives log 60 thresholds for both components
        let cfg = config();
        assert!((cfg.budget.log_threshold_pw() - 60f64.ln()).abs() < 1e-12);
        assert!((cfg.budget.log_threshold_lcb() - 60f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn all_target_stream_certifies_with_vacuous_pairwise() {
        let mut c = CiteCertifier::new(l(0), config());
        let mut tau = None;
        for _ in 0..60 {
            if let Verdict::CertifiedAt(t) = c.step(l(0)) {
                tau = Some(t);
                break;
            }
            assert!(c.snapshot().unwrap().pw_vacuous);
        }
        let tau = tau.expect("all-target stream must certify within 60 steps");
        assert!(tau <= 60);
        assert_eq!(c.diagnostics().tau_pw, Some(1));
        assert_eq!(c.diagnostics().tau_lu, Some(tau));
    }

    #[test]
    fn alternating_stream_never_certifies() {
        // competitor first: the pairwise condition is never vacuous and the
        // e-value stays below threshold on this trace
        let mut c = CiteCertifier::new(l(0), config());
        for i in 0..2000 {
            let lab = if i % 2 == 0 { l(1) } else { l(0) };
            assert_eq!(c.step(lab), Verdict::Continue);
        }
        assert_eq!(c.diagnostics().tau_pw, None);
        // the LCB condition does cross on its own for a half-mass target
        assert!(c.diagnostics().tau_lu.is_some());
    }

    #[test]
    fn target_first_round_is_vacuous_and_counts_toward_tau_pw() {
        let mut c = CiteCertifier::new(l(0), config());
        c.step(l(0));
        assert!(c.snapshot().unwrap().pw_vacuous);
        assert_eq!(c.diagnostics().tau_pw, Some(1));
        for i in 0..2000 {
            let lab = if i % 2 == 0 { l(1) } else { l(0) };
            assert_eq!(c.step(lab), Verdict::Continue);
        }
    }

    #[test]
    fn single_competitor_observation() {
        let mut c = CiteCertifier::new(l(0), config());
        assert_eq!(c.step(l(1)), Verdict::Continue);
        let snap = c.snapshot().unwrap();
        assert_eq!(snap.lcb, 0.0);
        assert!(!snap.pw_vacuous);
        assert!(snap.pw_log_e < 0.0);
    }

    #[test]
    fn absorbed_state_is_fixed() {
        let mut c = CiteCertifier::new(l(0), config());
        let mut tau = None;
        for _ in 0..100 {
            if let Verdict::CertifiedAt(t) = c.step(l(0)) {
                tau = Some(t);
                break;
            }
        }
        let tau = tau.unwrap();
        let before = c.t();
        for _ in 0..50 {
            assert_eq!(c.step(l(1)), Verdict::CertifiedAt(tau));
        }
        assert_eq!(c.t(), before, "absorbed step must not mutate counts");
    }

    #[test]
    fn topk_rejects_bad_target_sets() {
        assert!(TopKCertifier::new(vec![], config()).is_err());
        assert!(TopKCertifier::new(vec![l(1), l(1)], config()).is_err());
    }

    #[test]
    fn topk_singleton_matches_cite() {
        // identical arithmetic paths give exactly equal verdict sequences
        let stream: Vec<Label> = (0..500)
            .map(|i| if i % 7 == 0 { l(1) } else { l(0) })
            .collect();
        let mut cite = CiteCertifier::new(l(0), config());
        let mut topk = TopKCertifier::new(vec![l(0)], config()).unwrap();
        for &lab in &stream {
            assert_eq!(cite.step(lab), topk.step(lab));
        }
        assert_eq!(cite.diagnostics(), topk.diagnostics());
    }

    #[test]
    fn topk_two_target_stream_with_no_outsider() {
        // only members of S appear: pairwise vacuous, stops on min-LCB vs U
        let mut topk = TopKCertifier::new(vec![l(0), l(1)], config()).unwrap();
        let mut tau = None;
        for i in 0..400 {
            let lab = if i % 2 == 0 { l(0) } else { l(1) };
            if let Verdict::CertifiedAt(t) = topk.step(lab) {
                tau = Some(t);
                break;
            }
            assert!(topk.snapshot().unwrap().pw_vacuous);
        }
        assert!(tau.is_some(), "balanced two-label stream certifies top-2");
    }

    #[test]
    fn topk_missing_member_blocks() {
        // outsider dominates while the second member never appears
        let mut topk = TopKCertifier::new(vec![l(0), l(1)], config()).unwrap();
        for i in 0..2000 {
            let lab = if i % 2 == 0 { l(0) } else { l(2) };
            assert_eq!(topk.step(lab), Verdict::Continue);
        }
        assert_eq!(topk.snapshot().unwrap().lcb, 0.0);
    }
}
