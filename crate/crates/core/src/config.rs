//! Key/value configuration file for the certifier.
//!
//! TOML format; every section is optional and falls back to the defaults
//! (`epsilon = 0.05`, equal budget split, geometric pairwise grid at
//! `delta0 = 1`, default LCB grid):
//!
//! ```toml
//! epsilon = 0.05
//!
//! [budget]              # defaults to the equal split epsilon/3
//! alpha_pw = 0.0166666
//! alpha_r  = 0.0166666
//! alpha_u  = 0.0166666
//!
//! [pairwise_grid]       # either delta0 (geometric grid) ...
//! delta0 = 1.0
//! # ... or explicit points/weights:
//! # points  = [0.125, 0.25, 0.5]
//! # weights = [0.3333, 0.3333, 0.3333]
//!
//! [lcb_grid]
//! points  = [0.5, 1.0]
//! weights = [0.5, 0.5]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::budget::BudgetSplit;
use crate::certifier::CertifierConfig;
use crate::grid::GridSpec;
use crate::ModelError;

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub epsilon: Option<f64>,
    pub budget: Option<BudgetSection>,
    pub pairwise_grid: Option<GridSection>,
    pub lcb_grid: Option<GridSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub alpha_pw: f64,
    pub alpha_r: f64,
    pub alpha_u: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub delta0: Option<f64>,
    pub points: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::InvalidConfig(format!("{}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| ModelError::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Resolves to a full certifier configuration, applying defaults for
    /// missing sections.
    pub fn resolve(&self) -> Result<CertifierConfig, ModelError> {
        let epsilon = self.epsilon.unwrap_or(DEFAULT_EPSILON);
        let budget = match &self.budget {
            None => BudgetSplit::equal_split(epsilon)?,
            Some(b) => BudgetSplit::new(epsilon, b.alpha_pw, b.alpha_r, b.alpha_u)?,
        };
        let pairwise_grid = match &self.pairwise_grid {
            None => GridSpec::default_pairwise(),
            Some(section) => resolve_grid(section, true)?,
        };
        let lcb_grid = match &self.lcb_grid {
            None => GridSpec::default_lcb(),
            Some(section) => resolve_grid(section, false)?,
        };
        Ok(CertifierConfig {
            budget,
            pairwise_grid,
            lcb_grid,
        })
    }
}

fn resolve_grid(section: &GridSection, pairwise: bool) -> Result<GridSpec, ModelError> {
    match (&section.delta0, &section.points, &section.weights) {
        (Some(d0), None, None) if pairwise => GridSpec::geometric_pairwise(*d0),
        (Some(_), None, None) => Err(ModelError::InvalidConfig(
            "delta0 only applies to the pairwise grid".into(),
        )),
        (None, Some(p), Some(w)) => {
            if pairwise {
                GridSpec::pairwise(p.clone(), w.clone())
            } else {
                GridSpec::lcb(p.clone(), w.clone())
            }
        }
        _ => Err(ModelError::InvalidConfig(
            "grid section needs either delta0 or points+weights".into(),
        )),
    }
}
