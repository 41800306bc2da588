//! Trial reports and their CSV/JSON serializations.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Aggregated result of one (setting, method, case, budget) cell.
///
/// `tau_mean` is the mean stopping time among certified replicates (the
/// fixed budget `N` itself for the fixed-sample baseline) and is absent
/// when no replicate certified. The diagnostic means average the first
/// crossing times of the pairwise and LCB-unseen conditions over the
/// replicates where the crossing happened within the budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub setting: String,
    pub method: String,
    pub case: String,
    pub budget: u64,
    pub rate: f64,
    pub stderr: f64,
    pub tau_mean: Option<f64>,
    pub tau_pw_mean: Option<f64>,
    pub tau_lu_mean: Option<f64>,
    pub reps: u32,
    pub seed: u64,
    /// Monte-Carlo mean number of observed categories at this budget
    /// (ingestion reports only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_mean: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.4}"))
}

/// Renders reports as CSV. The `k_mean` column appears only when at least
/// one row carries it, keeping simulation and ingestion schemas stable.
pub fn to_csv(reports: &[TrialReport]) -> String {
    let with_k = reports.iter().any(|r| r.k_mean.is_some());
    let mut out = String::from(
        "setting,method,case,N,rate,stderr,tau_mean,tau_pw_mean,tau_lu_mean,reps,seed",
    );
    if with_k {
        out.push_str(",k_mean");
    }
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{},{},{},{},{}",
            r.setting,
            r.method,
            r.case,
            r.budget,
            r.rate,
            r.stderr,
            fmt_opt(r.tau_mean),
            fmt_opt(r.tau_pw_mean),
            fmt_opt(r.tau_lu_mean),
            r.reps,
            r.seed
        ));
        if with_k {
            out.push(',');
            out.push_str(&fmt_opt(r.k_mean));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, reports: &[TrialReport]) -> io::Result<()> {
    std::fs::write(path, to_csv(reports))
}

pub fn write_json(path: &Path, reports: &[TrialReport]) -> io::Result<()> {
    let text = serde_json::to_string_pretty(reports).map_err(io::Error::other)?;
    std::fs::write(path, text)
}
