//! Anytime-valid certification that a prespecified category is the unique
//! mode of an unknown categorical distribution over an unknown (possibly
//! unbounded) label set.
//!
//! The certifier combines three time-uniform components, all driven by
//! e-process machinery:
//!
//! 1. a pairwise mixture e-process comparing the target against the
//!    empirical runner-up,
//! 2. a lower confidence bound `L_t` on the target mass, valid
//!    simultaneously over all times, and
//! 3. a deterministic upper bound `U_t` on the mass of any still-unseen
//!    category.
//!
//! Certification fires at the first time the pairwise e-value clears its
//! threshold *and* `L_t > U_t` hold simultaneously. The error budget
//! `alpha_pw + alpha_r + alpha_u <= epsilon` makes the false-certification
//! probability at most `epsilon` uniformly over all data-dependent stopping
//! times.
//!
//! Besides the core stopping rule ([`certifier::CiteCertifier`]) the crate
//! ships the confidence-weighted variant ([`weighted::WCiteCertifier`]), a
//! top-k set extension ([`certifier::TopKCertifier`]), two baselines
//! ([`baselines`]), a seeded Monte-Carlo harness ([`sim`]) and an ingestion
//! path for pre-recorded answer pools ([`ingest`]).

pub mod baselines;
pub mod bounds;
pub mod budget;
pub mod certifier;
pub mod config;
pub mod counts;
pub mod eprocess;
pub mod grid;
pub mod ingest;
pub mod label;
pub mod report;
pub mod sim;
pub mod trace;
pub mod weighted;

pub use budget::BudgetSplit;
pub use certifier::{CertifierConfig, CiteCertifier, Diagnostics, TopKCertifier, Verdict};
pub use counts::CountTable;
pub use grid::GridSpec;
pub use label::{Label, LabelSpace};

use thiserror::Error;

/// Errors raised by the model layer (grids, budgets, parameter domains).
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid budget split: {0}")]
    InvalidBudget(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
}
