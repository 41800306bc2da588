//! Streaming count statistics over an unknown, growing label set.

use std::collections::HashMap;

use crate::label::Label;

/// Running time `t`, per-label counts `N_t(a)`, and the observed set, for a
/// fixed target label.
///
/// The table keeps labels in first-seen order and maintains the empirical
/// runner-up (the observed non-target label with maximal count, ties broken
/// by first-seen order) incrementally, so lookups are O(1) per step.
#[derive(Debug, Clone)]
pub struct CountTable {
    target: Label,
    t: u64,
    slots: HashMap<Label, usize>,
    /// (label, count) in first-seen order.
    entries: Vec<(Label, u64)>,
    /// Slot of the current runner-up, if any non-target label was observed.
    runner: Option<usize>,
}

impl CountTable {
    pub fn new(target: Label) -> Self {
        Self {
            target,
            t: 0,
            slots: HashMap::new(),
            entries: Vec::new(),
            runner: None,
        }
    }

    pub fn target(&self) -> Label {
        self.target
    }

    /// Observations so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn count(&self, label: Label) -> u64 {
        self.slots.get(&label).map_or(0, |&s| self.entries[s].1)
    }

    pub fn target_count(&self) -> u64 {
        self.count(self.target)
    }

    /// Empirical frequency of `label`; 0 before the first observation.
    pub fn frequency(&self, label: Label) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.count(label) as f64 / self.t as f64
        }
    }

    /// Number of distinct observed labels.
    pub fn observed_len(&self) -> usize {
        self.entries.len()
    }

    /// Observed labels with counts, in first-seen order.
    pub fn iter(&self) -> impl Iterator<Item = (Label, u64)> + '_ {
        self.entries.iter().copied()
    }

    /// Records one observation of `label`.
    pub fn observe(&mut self, label: Label) {
        self.t += 1;
        let slot = match self.slots.get(&label) {
            Some(&s) => {
                self.entries[s].1 += 1;
                s
            }
            None => {
                let s = self.entries.len();
                self.slots.insert(label, s);
                self.entries.push((label, 1));
                s
            }
        };
        if label == self.target {
            return;
        }
        // Counts only grow, so the runner-up can be maintained by comparing
        // the updated slot against the incumbent. First-seen order is the
        // slot index, smaller index wins ties.
        match self.runner {
            None => self.runner = Some(slot),
            Some(r) if r == slot => {}
            Some(r) => {
                let (c, rc) = (self.entries[slot].1, self.entries[r].1);
                if c > rc || (c == rc && slot < r) {
                    self.runner = Some(slot);
                }
            }
        }
    }

    /// The observed non-target label with maximal count, ties broken by
    /// first-seen order. `None` while no non-target label has been observed.
    pub fn runner_up(&self) -> Option<Label> {
        self.runner.map(|s| self.entries[s].0)
    }

    pub fn runner_up_count(&self) -> u64 {
        self.runner.map_or(0, |s| self.entries[s].1)
    }
}

/// Incremental top-2 tracker over all labels (no excluded target), used by
/// the leader-tracking baseline. Ties break by first-seen order.
#[derive(Debug, Clone, Default)]
pub struct LeaderBoard {
    t: u64,
    slots: HashMap<Label, usize>,
    entries: Vec<(Label, u64)>,
    best: Option<usize>,
    second: Option<usize>,
}

impl LeaderBoard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn observe(&mut self, label: Label) {
        self.t += 1;
        let slot = match self.slots.get(&label) {
            Some(&s) => {
                self.entries[s].1 += 1;
                s
            }
            None => {
                let s = self.entries.len();
                self.slots.insert(label, s);
                self.entries.push((label, 1));
                s
            }
        };
        let c = self.entries[slot].1;
        match self.best {
            None => {
                self.best = Some(slot);
                return;
            }
            Some(b) if b == slot => return,
            Some(b) => {
                let bc = self.entries[b].1;
                if c > bc || (c == bc && slot < b) {
                    // The dethroned leader dominates everything else, so it
                    // becomes the runner-up.
                    self.best = Some(slot);
                    self.second = Some(b);
                    return;
                }
            }
        }
        match self.second {
            None => self.second = Some(slot),
            Some(s2) if s2 == slot => {}
            Some(s2) => {
                let sc = self.entries[s2].1;
                if c > sc || (c == sc && slot < s2) {
                    self.second = Some(slot);
                }
            }
        }
    }

    /// (leader, runner-up) pair, available once two distinct labels are seen.
    pub fn top_pair(&self) -> Option<(Label, Label)> {
        match (self.best, self.second) {
            (Some(b), Some(s)) => Some((self.entries[b].0, self.entries[s].0)),
            _ => None,
        }
    }

    pub fn leader(&self) -> Option<Label> {
        self.best.map(|b| self.entries[b].0)
    }
}
