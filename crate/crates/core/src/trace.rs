//! Step-trace export: one line-delimited JSON record per observation.
//!
//! All certifiers share one schema; the weighted certifier adds a `weight`
//! column and the leader-tracking baseline a `tuple` column. Fields that a
//! method does not produce are omitted from its records.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// One step of a certification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pw_log_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pw_vacuous: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lcb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unseen: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuple: Option<String>,
    pub verdict: String,
}

impl TraceRecord {
    pub fn write_line<W: Write>(&self, mut out: W) -> io::Result<()> {
        let line = serde_json::to_string(self).map_err(io::Error::other)?;
        writeln!(out, "{line}")
    }
}

/// Verdict strings used in traces and decision records.
pub fn verdict_str(certified_at: Option<u64>) -> String {
    match certified_at {
        None => "continue".to_owned(),
        Some(t) => format!("certified-at({t})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip_omits_missing_fields() {
        let rec = TraceRecord {
            t: 3,
            label: "A".into(),
            weight: None,
            pw_log_e: Some(0.25),
            pw_vacuous: Some(false),
            lcb: Some(0.0),
            unseen: Some(0.5),
            tuple: None,
            verdict: "continue".into(),
        };
        let mut buf = Vec::new();
        rec.write_line(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(!s.contains("weight"));
        assert!(!s.contains("tuple"));
        let back: TraceRecord = serde_json::from_str(s.trim()).unwrap();
        assert_eq!(back.t, 3);
        assert_eq!(back.pw_log_e, Some(0.25));
    }
}
