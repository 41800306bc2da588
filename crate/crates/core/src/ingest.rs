//! Ingestion of pre-generated answer pools and bootstrap replicate reports.
//!
//! A pool file holds one problem's answers as line-delimited JSON records:
//!
//! ```text
//! {"problem_id": "p1", "answer": "42"}
//! {"problem_id": "p1", "answer": "41", "weight": 0.73}
//! ```
//!
//! `weight`, when used, must be present on every record and lie in `[0,1]`.
//! Answers are interned verbatim: no normalization beyond exact-string
//! identity (semantic normalization such as numeric equivalence belongs to
//! the model-specific extraction pipeline that produced the pool).

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{bonferroni_certify, MmcCertifier};
use crate::certifier::{CiteCertifier, Verdict};
use crate::label::{Label, LabelSpace};
use crate::report::TrialReport;
use crate::sim::{child_seed, Method, RunConfig, TrialCase};
use crate::weighted::{WCiteCertifier, WeightedObservation};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("pool is empty")]
    EmptyPool,
    #[error("line {line}: weight must be present on all records or none")]
    MixedWeights { line: usize },
    #[error("report error: {0}")]
    Report(String),
    #[error("simulation error: {0}")]
    Sim(#[from] crate::sim::SimError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    problem_id: String,
    answer: String,
    #[serde(default)]
    weight: Option<f64>,
}

/// One problem's answer pool.
#[derive(Debug, Clone)]
pub struct AnswerPool {
    pub problem_id: String,
    pub space: LabelSpace,
    pub labels: Vec<Label>,
    /// Present iff every record carried a weight.
    pub weights: Option<Vec<f64>>,
}

impl AnswerPool {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Pool mode and runner-up by exact counting; ties resolve to the
    /// first-seen label, with `mode_tie` flagging a tie at the top count.
    pub fn mode_and_runner(&self) -> (Label, Option<Label>, bool) {
        let distinct = self.space.len();
        let mut counts = vec![0u64; distinct];
        for &lab in &self.labels {
            counts[lab.index()] += 1;
        }
        let mode = (0..distinct)
            .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
            .unwrap();
        let runner = (0..distinct)
            .filter(|&i| i != mode && counts[i] > 0)
            .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)));
        let tie = runner.is_some_and(|r| counts[r] == counts[mode]);
        (Label(mode as u32), runner.map(|r| Label(r as u32)), tie)
    }
}

/// Parses a pool from a reader. Malformed lines are reported with 1-based
/// line numbers; blank lines are ignored.
pub fn parse_pool<R: Read>(reader: R) -> Result<AnswerPool, IngestError> {
    let mut space = LabelSpace::new();
    let mut labels = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut problem_id: Option<String> = None;
    let mut weight_mode: Option<bool> = None;

    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord =
            serde_json::from_str(&line).map_err(|e| IngestError::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        match &problem_id {
            None => problem_id = Some(record.problem_id.clone()),
            Some(id) if *id != record.problem_id => {
                return Err(IngestError::MalformedLine {
                    line: line_no,
                    message: format!(
                        "problem_id {:?} differs from {id:?}; one pool holds one problem",
                        record.problem_id
                    ),
                })
            }
            Some(_) => {}
        }
        let has_weight = record.weight.is_some();
        match weight_mode {
            None => weight_mode = Some(has_weight),
            Some(expected) if expected != has_weight => {
                return Err(IngestError::MixedWeights { line: line_no })
            }
            Some(_) => {}
        }
        if let Some(w) = record.weight {
            if !(0.0..=1.0).contains(&w) {
                return Err(IngestError::MalformedLine {
                    line: line_no,
                    message: format!("weight {w} outside [0,1]"),
                });
            }
            weights.push(w);
        }
        labels.push(space.intern(&record.answer));
    }

    if labels.is_empty() {
        return Err(IngestError::EmptyPool);
    }
    Ok(AnswerPool {
        problem_id: problem_id.unwrap(),
        space,
        labels,
        weights: if weight_mode == Some(true) {
            Some(weights)
        } else {
            None
        },
    })
}

pub fn load_pool(path: &Path) -> Result<AnswerPool, IngestError> {
    parse_pool(std::fs::File::open(path)?)
}

/// `n` i.i.d. uniform-with-replacement draws from the pool, deterministic
/// given `seed`.
pub fn bootstrap_replicate(
    pool: &AnswerPool,
    n: u64,
    seed: u64,
) -> Result<(Vec<Label>, Option<Vec<f64>>), IngestError> {
    if n == 0 {
        return Err(IngestError::Report("replicate size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(n as usize);
    let mut weights = pool
        .weights
        .as_ref()
        .map(|_| Vec::with_capacity(n as usize));
    for _ in 0..n {
        let idx = rng.gen_range(0..pool.len());
        labels.push(pool.labels[idx]);
        if let (Some(out), Some(ws)) = (&mut weights, &pool.weights) {
            out.push(ws[idx]);
        }
    }
    Ok((labels, weights))
}

/// Pool-level report: the resolved target plus one row per
/// (method, budget).
#[derive(Debug, Clone, Serialize)]
pub struct PoolReport {
    pub problem_id: String,
    pub case: String,
    pub target: String,
    /// The pool mode was tied and resolved to the first-seen answer.
    pub mode_tie: bool,
    pub rows: Vec<TrialReport>,
}

#[derive(Debug, Clone, Copy, Default)]
struct PoolAcc {
    certified: u64,
    tau_sum: u64,
    pw_n: u64,
    pw_sum: u64,
    lu_n: u64,
    lu_sum: u64,
    k_sum: u64,
}

impl PoolAcc {
    fn merge(mut self, o: Self) -> Self {
        self.certified += o.certified;
        self.tau_sum += o.tau_sum;
        self.pw_n += o.pw_n;
        self.pw_sum += o.pw_sum;
        self.lu_n += o.lu_n;
        self.lu_sum += o.lu_sum;
        self.k_sum += o.k_sum;
        self
    }
}

/// Runs bootstrap trials of each method on the pool. One stream of
/// `max(budgets)` draws is sampled per replicate and evaluated at every
/// budget prefix, matching the sequential stopping-time semantics.
pub fn pool_report(
    pool: &AnswerPool,
    methods: &[Method],
    case: TrialCase,
    cfg: &RunConfig,
) -> Result<PoolReport, IngestError> {
    if cfg.reps == 0 || cfg.budgets.is_empty() {
        return Err(IngestError::Report("need reps >= 1 and budgets".into()));
    }
    if methods.is_empty() {
        return Err(IngestError::Report("need at least one method".into()));
    }
    if methods.contains(&Method::WCite) && pool.weights.is_none() {
        return Err(IngestError::Report(
            "wcite requires a pool with weights".into(),
        ));
    }
    let budgets = crate::sim::finalize_budgets(&cfg.budgets)?;
    let max_budget = *budgets.last().unwrap();

    let (mode, runner, tie) = pool.mode_and_runner();
    let target = match case {
        TrialCase::A => mode,
        TrialCase::B => {
            runner.ok_or_else(|| IngestError::Report("case B needs a pool runner-up".into()))?
        }
    };

    let epsilon = cfg.certifier.budget.epsilon;
    let accs: Vec<Vec<PoolAcc>> = (0..cfg.reps)
        .into_par_iter()
        .map(|k| {
            let rep_seed = child_seed(cfg.seed, k as u64);
            let (labels, weights) = bootstrap_replicate(pool, max_budget, child_seed(rep_seed, 0))
                .expect("validated sizes");
            // distinct observed categories at each budget prefix
            let mut seen = vec![false; pool.space.len()];
            let mut distinct = 0u64;
            let mut k_at = Vec::with_capacity(budgets.len());
            let mut next = 0usize;
            for (i, &lab) in labels.iter().enumerate() {
                if !seen[lab.index()] {
                    seen[lab.index()] = true;
                    distinct += 1;
                }
                while next < budgets.len() && (i as u64 + 1) == budgets[next] {
                    k_at.push(distinct);
                    next += 1;
                }
            }

            methods
                .iter()
                .map(|&method| {
                    let mut per_budget = vec![PoolAcc::default(); budgets.len()];
                    match method {
                        Method::Bonferroni => {
                            for (bi, &n) in budgets.iter().enumerate() {
                                if bonferroni_certify(&labels[..n as usize], target, epsilon)
                                    .expect("nonempty prefix")
                                {
                                    per_budget[bi].certified = 1;
                                    per_budget[bi].tau_sum = n;
                                }
                            }
                        }
                        Method::Cite => {
                            let mut c = CiteCertifier::new(target, cfg.certifier.clone());
                            for &lab in &labels {
                                if let Verdict::CertifiedAt(_) = c.step(lab) {
                                    break;
                                }
                            }
                            fill_sequential(
                                &mut per_budget,
                                &budgets,
                                c.verdict().certified_at(),
                                c.diagnostics().tau_pw,
                                c.diagnostics().tau_lu,
                            );
                        }
                        Method::WCite => {
                            let ws = weights.as_ref().expect("checked above");
                            let mut c = WCiteCertifier::new(target, cfg.certifier.clone());
                            for (&lab, &w) in labels.iter().zip(ws) {
                                let v = c
                                    .step(WeightedObservation {
                                        label: lab,
                                        weight: w,
                                    })
                                    .expect("pool weights validated on load");
                                if let Verdict::CertifiedAt(_) = v {
                                    break;
                                }
                            }
                            fill_sequential(
                                &mut per_budget,
                                &budgets,
                                c.verdict().certified_at(),
                                c.diagnostics().tau_pw,
                                c.diagnostics().tau_lu,
                            );
                        }
                        Method::Mmc => {
                            let mut c = MmcCertifier::new(epsilon).expect("valid epsilon");
                            let mut tau = None;
                            for &lab in &labels {
                                if let Some((t, leader)) = c.step(lab).certified() {
                                    if leader == target {
                                        tau = Some(t);
                                    }
                                    break;
                                }
                            }
                            fill_sequential(&mut per_budget, &budgets, tau, None, None);
                        }
                    }
                    for (bi, acc) in per_budget.iter_mut().enumerate() {
                        acc.k_sum = k_at[bi];
                    }
                    per_budget
                })
                .collect::<Vec<_>>()
        })
        .reduce(
            || vec![vec![PoolAcc::default(); budgets.len()]; methods.len()],
            |a, b| {
                a.into_iter()
                    .zip(b)
                    .map(|(ma, mb)| ma.into_iter().zip(mb).map(|(x, y)| x.merge(y)).collect())
                    .collect()
            },
        );

    let reps = cfg.reps as f64;
    let mut rows = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        for (bi, &budget) in budgets.iter().enumerate() {
            let acc = &accs[mi][bi];
            let rate = acc.certified as f64 / reps;
            rows.push(TrialReport {
                setting: format!("pool:{}", pool.problem_id),
                method: method.name().to_owned(),
                case: case.name().to_owned(),
                budget,
                rate,
                stderr: (rate * (1.0 - rate) / reps).sqrt(),
                tau_mean: if acc.certified > 0 {
                    Some(acc.tau_sum as f64 / acc.certified as f64)
                } else {
                    None
                },
                tau_pw_mean: if acc.pw_n > 0 {
                    Some(acc.pw_sum as f64 / acc.pw_n as f64)
                } else {
                    None
                },
                tau_lu_mean: if acc.lu_n > 0 {
                    Some(acc.lu_sum as f64 / acc.lu_n as f64)
                } else {
                    None
                },
                reps: cfg.reps,
                seed: cfg.seed,
                k_mean: Some(acc.k_sum as f64 / reps),
            });
        }
    }
    Ok(PoolReport {
        problem_id: pool.problem_id.clone(),
        case: case.name().to_owned(),
        target: pool.space.name(target).to_owned(),
        mode_tie: tie,
        rows,
    })
}

fn fill_sequential(
    per_budget: &mut [PoolAcc],
    budgets: &[u64],
    tau: Option<u64>,
    tau_pw: Option<u64>,
    tau_lu: Option<u64>,
) {
    for (bi, &budget) in budgets.iter().enumerate() {
        if let Some(t) = tau.filter(|&t| t <= budget) {
            per_budget[bi].certified = 1;
            per_budget[bi].tau_sum = t;
        }
        if let Some(t) = tau_pw.filter(|&t| t <= budget) {
            per_budget[bi].pw_n = 1;
            per_budget[bi].pw_sum = t;
        }
        if let Some(t) = tau_lu.filter(|&t| t <= budget) {
            per_budget[bi].lu_n = 1;
            per_budget[bi].lu_sum = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifier::CertifierConfig;

    fn pool_text(lines: &[&str]) -> String {
        lines.join("\n")
    }

    #[test]
    fn parse_small_pool() {
        let text = pool_text(&[
            r#"{"problem_id": "p1", "answer": "42"}"#,
            r#"{"problem_id": "p1", "answer": "41"}"#,
            r#"{"problem_id": "p1", "answer": "42"}"#,
        ]);
        let pool = parse_pool(text.as_bytes()).unwrap();
        assert_eq!(pool.len(), 3);
        assert_eq!(pool.problem_id, "p1");
        assert!(pool.weights.is_none());
        let (mode, runner, tie) = pool.mode_and_runner();
        assert_eq!(pool.space.name(mode), "42");
        assert_eq!(pool.space.name(runner.unwrap()), "41");
        assert!(!tie);
    }

    #[test]
    fn rejects_weight_out_of_range_with_line_number() {
        let text = pool_text(&[
            r#"{"problem_id": "p1", "answer": "a", "weight": 0.5}"#,
            r#"{"problem_id": "p1", "answer": "b", "weight": 1.2}"#,
        ]);
        match parse_pool(text.as_bytes()) {
            Err(IngestError::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed line, got {other:?}"),
        }
    }

    #[test]
    fn rejects_mixed_weight_presence() {
        let text = pool_text(&[
            r#"{"problem_id": "p1", "answer": "a", "weight": 0.5}"#,
            r#"{"problem_id": "p1", "answer": "b"}"#,
        ]);
        match parse_pool(text.as_bytes()) {
            Err(IngestError::MixedWeights { line }) => assert_eq!(line, 2),
            other => panic!("expected mixed weights, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_multi_problem_pools() {
        assert!(matches!(
            parse_pool("".as_bytes()),
            Err(IngestError::EmptyPool)
        ));
        let text = pool_text(&[
            r#"{"problem_id": "p1", "answer": "a"}"#,
            r#"{"problem_id": "p2", "answer": "b"}"#,
        ]);
        assert!(matches!(
            parse_pool(text.as_bytes()),
            Err(IngestError::MalformedLine { line: 2, .. })
        ));
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let text = pool_text(&[
            r#"{"problem_id": "p1", "answer": "a"}"#,
            r#"{"problem_id": "p1", "answer": "b"}"#,
            r#"{"problem_id": "p1", "answer": "c"}"#,
        ]);
        let pool = parse_pool(text.as_bytes()).unwrap();
        let (x, _) = bootstrap_replicate(&pool, 20, 9).unwrap();
        let (y, _) = bootstrap_replicate(&pool, 20, 9).unwrap();
        assert_eq!(x, y);
        assert!(bootstrap_replicate(&pool, 0, 9).is_err());
    }

    #[test]
    fn singleton_pool_bootstrap_repeats() {
        let pool = parse_pool(r#"{"problem_id": "p", "answer": "only"}"#.as_bytes()).unwrap();
        let (labels, _) = bootstrap_replicate(&pool, 5, 1).unwrap();
        assert_eq!(labels, vec![Label(0); 5]);
    }

    #[test]
    fn pool_mode_tie_is_flagged() {
        let text = pool_text(&[
            r#"{"problem_id": "p1", "answer": "x"}"#,
            r#"{"problem_id": "p1", "answer": "y"}"#,
        ]);
        let pool = parse_pool(text.as_bytes()).unwrap();
        let (mode, _, tie) = pool.mode_and_runner();
        assert_eq!(pool.space.name(mode), "x");
        assert!(tie);
    }

    #[test]
    fn report_on_concentrated_pool() {
        let mut lines = vec![r#"{"problem_id": "p1", "answer": "win"}"#.to_owned(); 98];
        lines.push(r#"{"problem_id": "p1", "answer": "lose"}"#.to_owned());
        lines.push(r#"{"problem_id": "p1", "answer": "other"}"#.to_owned());
        let text = lines.join("\n");
        let pool = parse_pool(text.as_bytes()).unwrap();
        let cfg = RunConfig {
            budgets: vec![64, 128],
            reps: 50,
            seed: 3,
            certifier: CertifierConfig::default_at(0.05).unwrap(),
            weight_gamma: 0.0,
        };
        let report = pool_report(
            &pool,
            &[Method::Cite, Method::Bonferroni],
            TrialCase::A,
            &cfg,
        )
        .unwrap();
        assert_eq!(report.target, "win");
        assert!(!report.mode_tie);
        assert_eq!(report.rows.len(), 4);
        let cite64 = &report.rows[0];
        assert!(cite64.rate > 0.9, "rate {}", cite64.rate);
        assert!(cite64.tau_mean.unwrap() < 40.0);
        // K mean is nondecreasing in budget
        assert!(report.rows[1].k_mean.unwrap() >= report.rows[0].k_mean.unwrap());
    }

    #[test]
    fn single_replicate_rates_are_zero_or_one() {
        let text = pool_text(&[
            r#"{"problem_id": "p", "answer": "a"}"#,
            r#"{"problem_id": "p", "answer": "a"}"#,
            r#"{"problem_id": "p", "answer": "b"}"#,
        ]);
        let pool = parse_pool(text.as_bytes()).unwrap();
        let cfg = RunConfig {
            budgets: vec![32, 64],
            reps: 1,
            seed: 13,
            certifier: CertifierConfig::default_at(0.05).unwrap(),
            weight_gamma: 0.0,
        };
        let report = pool_report(&pool, &[Method::Cite], TrialCase::A, &cfg).unwrap();
        for row in &report.rows {
            assert!(row.rate == 0.0 || row.rate == 1.0);
        }
    }

    #[test]
    fn case_b_without_runner_up_errors() {
        let pool = parse_pool(r#"{"problem_id": "p", "answer": "only"}"#.as_bytes()).unwrap();
        let cfg = RunConfig {
            budgets: vec![16],
            reps: 2,
            seed: 3,
            certifier: CertifierConfig::default_at(0.05).unwrap(),
            weight_gamma: 0.0,
        };
        assert!(pool_report(&pool, &[Method::Cite], TrialCase::B, &cfg).is_err());
    }

    #[test]
    fn wcite_requires_weights() {
        let pool = parse_pool(
            pool_text(&[
                r#"{"problem_id": "p", "answer": "a"}"#,
                r#"{"problem_id": "p", "answer": "b"}"#,
            ])
            .as_bytes(),
        )
        .unwrap();
        let cfg = RunConfig {
            budgets: vec![16],
            reps: 2,
            seed: 3,
            certifier: CertifierConfig::default_at(0.05).unwrap(),
            weight_gamma: 0.0,
        };
        assert!(pool_report(&pool, &[Method::WCite], TrialCase::A, &cfg).is_err());
    }
}
