//! Interned category labels.
//!
//! Free-form answer strings are interned into dense ids once and compared by
//! id afterwards. Interning is injective (equal strings give equal ids) and
//! ids carry the first-interned order, which is the deterministic total
//! order used everywhere a tie-break is needed.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// An interned category identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl Label {
    /// Insertion index of this label within its [`LabelSpace`].
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// String interner mapping category strings to [`Label`]s.
///
/// No normalization is performed here: two strings intern to the same label
/// iff they are byte-identical.
#[derive(Debug, Clone, Default)]
pub struct LabelSpace {
    ids: HashMap<String, Label>,
    names: Vec<String>,
}

impl LabelSpace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `name`, returning the existing id when already present.
    pub fn intern(&mut self, name: &str) -> Label {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = Label(u32::try_from(self.names.len()).expect("label space overflow"));
        self.ids.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }

    pub fn get(&self, name: &str) -> Option<Label> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, label: Label) -> &str {
        &self.names[label.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}
