//! Monte-Carlo simulation harness: distribution generators for the five
//! study settings, null-witness fixtures, a rank-based weight model, and
//! the seeded trial runner.

mod runner;
mod weights;

pub(crate) use runner::finalize_budgets;
pub use runner::{
    bottleneck_sweep, child_seed, run_trials, Method, RunConfig, SweepRow, SweepVariable, TrialCase,
};
pub use weights::RankWeightModel;

use rand::Rng;
use thiserror::Error;

use crate::label::{Label, LabelSpace};

/// Mass-sum tolerance for generated distributions.
pub const MASS_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("infeasible setting: {0}")]
    InfeasibleSetting(String),
    #[error("fixture error: {0}")]
    Fixture(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown method: {0}")]
    UnknownMethod(String),
}

/// Tail family of a simulation setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailSpec {
    /// Shifted Zipf: unnormalized weight `(j+1)^-s` for tail label `j`.
    Zipf {
        exponent: f64,
        labels: u32,
    },
    Uniform {
        labels: u32,
    },
}

impl TailSpec {
    pub fn labels(&self) -> u32 {
        match *self {
            TailSpec::Zipf { labels, .. } | TailSpec::Uniform { labels } => labels,
        }
    }
}

/// Parameters of one simulation setting: mode mass `p_r`, modal gap
/// `delta` (so the runner-up has mass `p_r - delta`), and a tail family
/// capped so the gap is preserved exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingSpec {
    pub name: String,
    /// Nominal label budget; surplus labels beyond the named mode,
    /// runner-up, and tail count stay unused with mass zero.
    pub label_budget: u32,
    pub p_r: f64,
    pub delta: f64,
    pub tail: TailSpec,
}

impl SettingSpec {
    /// The five distribution settings of the simulation study.
    pub fn preset(id: u8) -> Result<Self, SimError> {
        let (name, label_budget, p_r, delta, tail) = match id {
            1 => (
                "setting1",
                5000,
                0.24,
                0.215,
                TailSpec::Zipf {
                    exponent: 1.1,
                    labels: 4987,
                },
            ),
            2 => (
                "setting2",
                100,
                0.60,
                0.450,
                TailSpec::Uniform { labels: 94 },
            ),
            3 => (
                "setting3",
                500,
                0.12,
                0.010,
                TailSpec::Zipf {
                    exponent: 1.3,
                    labels: 497,
                },
            ),
            4 => (
                "setting4",
                10000,
                0.06,
                0.010,
                TailSpec::Zipf {
                    exponent: 1.0,
                    labels: 9998,
                },
            ),
            5 => (
                "setting5",
                1000,
                0.35,
                0.150,
                TailSpec::Zipf {
                    exponent: 1.2,
                    labels: 997,
                },
            ),
            other => {
                return Err(SimError::InvalidParameter(format!(
                    "setting id must be 1..=5, got {other}"
                )))
            }
        };
        Ok(Self {
            name: name.to_owned(),
            label_budget,
            p_r,
            delta,
            tail,
        })
    }
}

/// A finite categorical distribution with interned labels, inverse-transform
/// sampling, and mass-descending ranks (first-seen tie order).
#[derive(Debug, Clone)]
pub struct Distribution {
    space: LabelSpace,
    entries: Vec<(Label, f64)>,
    cumulative: Vec<f64>,
    /// `ranks[i]` is the 1-based mass rank of `entries[i]`.
    ranks: Vec<usize>,
}

impl Distribution {
    pub fn from_masses(space: LabelSpace, entries: Vec<(Label, f64)>) -> Result<Self, SimError> {
        if entries.is_empty() {
            return Err(SimError::InfeasibleSetting("empty distribution".into()));
        }
        if !entries.iter().all(|&(_, m)| m > 0.0) {
            return Err(SimError::InfeasibleSetting(
                "all masses must be positive".into(),
            ));
        }
        let sum: f64 = entries.iter().map(|&(_, m)| m).sum();
        if (sum - 1.0).abs() > MASS_SUM_TOL {
            return Err(SimError::InfeasibleSetting(format!(
                "masses sum to {sum}, not 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = 0.0;
        for &(_, m) in &entries {
            acc += m;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&a, &b| {
            entries[b]
                .1
                .partial_cmp(&entries[a].1)
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut ranks = vec![0usize; entries.len()];
        for (rank0, &idx) in order.iter().enumerate() {
            ranks[idx] = rank0 + 1;
        }
        Ok(Self {
            space,
            entries,
            cumulative,
            ranks,
        })
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn entries(&self) -> &[(Label, f64)] {
        &self.entries
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn mass(&self, label: Label) -> f64 {
        self.entries
            .iter()
            .find(|&&(l, _)| l == label)
            .map_or(0.0, |&(_, m)| m)
    }

    /// Label of maximal mass (ties broken by first-seen order).
    pub fn mode(&self) -> Label {
        self.entries[self.ranks.iter().position(|&r| r == 1).unwrap()].0
    }

    /// Second-ranked label, if the support has more than one element.
    pub fn runner_up(&self) -> Option<Label> {
        self.ranks
            .iter()
            .position(|&r| r == 2)
            .map(|i| self.entries[i].0)
    }

    /// 1-based mass-descending rank of the entry at `index`.
    pub fn rank_of_index(&self, index: usize) -> usize {
        self.ranks[index]
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let x: f64 = rng.gen();
        let idx = self.cumulative.partition_point(|&c| c <= x);
        idx.min(self.entries.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Label {
        self.entries[self.sample_index(rng)].0
    }
}

/// Builds the distribution for a setting: mode at `p_r`, runner-up at
/// `p_r - delta`, and the remaining mass spread over the tail with weights
/// from the tail family, then iteratively capped at `p_r - delta` with the
/// excess redistributed proportionally over uncapped entries.
pub fn build_setting(spec: &SettingSpec) -> Result<Distribution, SimError> {
    if !(spec.p_r > 0.0 && spec.p_r <= 1.0) {
        return Err(SimError::InfeasibleSetting(format!(
            "p_r must lie in (0,1], got {}",
            spec.p_r
        )));
    }
    if !(spec.delta >= 0.0 && spec.delta <= spec.p_r) {
        return Err(SimError::InfeasibleSetting(format!(
            "delta must lie in [0, p_r], got {}",
            spec.delta
        )));
    }
    let runner_mass = spec.p_r - spec.delta;
    let tail_mass = 1.0 - spec.p_r - runner_mass;
    if tail_mass < -MASS_SUM_TOL {
        return Err(SimError::InfeasibleSetting(format!(
            "p_r + runner-up mass exceeds 1 (tail mass {tail_mass})"
        )));
    }
    let tail_mass = tail_mass.max(0.0);
    let m = spec.tail.labels() as usize;

    let mut space = LabelSpace::new();
    let mut entries = Vec::with_capacity(m + 2);
    entries.push((space.intern("mode"), spec.p_r));
    if runner_mass > 0.0 {
        entries.push((space.intern("runner"), runner_mass));
    }
    if tail_mass > 0.0 {
        if m == 0 {
            return Err(SimError::InfeasibleSetting(
                "positive tail mass but no tail labels".into(),
            ));
        }
        let cap = runner_mass;
        if tail_mass > cap * m as f64 + MASS_SUM_TOL {
            return Err(SimError::InfeasibleSetting(format!(
                "tail mass {tail_mass} cannot fit under cap {cap} with {m} labels"
            )));
        }
        let mut w: Vec<f64> = match spec.tail {
            TailSpec::Uniform { .. } => vec![1.0; m],
            TailSpec::Zipf { exponent, .. } => {
                (1..=m).map(|j| ((j + 1) as f64).powf(-exponent)).collect()
            }
        };
        let total: f64 = w.iter().sum();
        for x in &mut w {
            *x *= tail_mass / total;
        }
        // Cap-and-redistribute until no entry exceeds the gap cap.
        let mut capped = vec![false; m];
        loop {
            let mut excess = 0.0;
            let mut free_mass = 0.0;
            for j in 0..m {
                if !capped[j] && w[j] > cap {
                    excess += w[j] - cap;
                    w[j] = cap;
                    capped[j] = true;
                } else if !capped[j] {
                    free_mass += w[j];
                }
            }
            if excess <= 1e-15 {
                break;
            }
            if free_mass <= 0.0 {
                return Err(SimError::InfeasibleSetting(
                    "cap redistribution ran out of uncapped tail entries".into(),
                ));
            }
            let scale = (free_mass + excess) / free_mass;
            for j in 0..m {
                if !capped[j] {
                    w[j] *= scale;
                }
            }
        }
        for (j, &mass) in w.iter().enumerate() {
            entries.push((space.intern(&format!("tail{:05}", j + 1)), mass));
        }
    }
    Distribution::from_masses(space, entries)
}

/// Null-witness family for Type-I experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    /// Exchange the masses of the target and its strongest competitor.
    Swap,
    /// Set both to their average.
    Midpoint,
    /// Split the target mass with a fresh, never-observed label.
    Hidden,
}

/// Builds a member of the null family from `dist` by modifying the target
/// and (for swap/midpoint) its strongest competitor.
pub fn null_witness(
    dist: &Distribution,
    target: Label,
    kind: WitnessKind,
) -> Result<Distribution, SimError> {
    let p_target = dist.mass(target);
    if p_target <= 0.0 {
        return Err(SimError::Fixture("target has no mass".into()));
    }
    let mut entries = dist.entries().to_vec();
    let target_idx = entries.iter().position(|&(l, _)| l == target).unwrap();
    let mut space = dist.space().clone();

    match kind {
        WitnessKind::Swap | WitnessKind::Midpoint => {
            let comp_idx = entries
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != target_idx)
                .max_by(|&(i, &(_, a)), &(j, &(_, b))| a.partial_cmp(&b).unwrap().then(j.cmp(&i)))
                .map(|(i, _)| i)
                .ok_or_else(|| SimError::Fixture("no competitor for swap/midpoint".into()))?;
            if entries[comp_idx].1 <= 0.0 {
                return Err(SimError::Fixture("competitor has no mass".into()));
            }
            match kind {
                WitnessKind::Swap => {
                    let (a, b) = (entries[target_idx].1, entries[comp_idx].1);
                    entries[target_idx].1 = b;
                    entries[comp_idx].1 = a;
                }
                WitnessKind::Midpoint => {
                    let avg = 0.5 * (entries[target_idx].1 + entries[comp_idx].1);
                    entries[target_idx].1 = avg;
                    entries[comp_idx].1 = avg;
                }
                WitnessKind::Hidden => unreachable!(),
            }
        }
        WitnessKind::Hidden => {
            let mut name = String::from("hidden");
            let mut k = 1;
            while space.get(&name).is_some() {
                k += 1;
                name = format!("hidden{k}");
            }
            let fresh = space.intern(&name);
            entries[target_idx].1 = p_target / 2.0;
            entries.push((fresh, p_target / 2.0));
        }
    }
    Distribution::from_masses(space, entries)
}
