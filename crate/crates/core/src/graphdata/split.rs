use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::GraphBundle;
use crate::{Error, Result};

/// Per-class assignment as stored in `splits.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitAssignment {
    /// Consecutive class ids: the first `train` classes, then `dev`, then `test`.
    pub fn contiguous(train: usize, dev: usize, test: usize) -> Self {
        Self {
            train: (0..train).collect(),
            dev: (train..train + dev).collect(),
            test: (train + dev..train + dev + test).collect(),
        }
    }

    /// 3/2/2 split of Cora's seven classes.
    pub fn cora() -> Self {
        Self::contiguous(3, 2, 2)
    }

    /// 2/2/2 split of CiteSeer's six classes.
    pub fn citeseer() -> Self {
        Self::contiguous(2, 2, 2)
    }
}

/// Disjoint train / dev / test class sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSplit {
    train: BTreeSet<usize>,
    dev: BTreeSet<usize>,
    test: BTreeSet<usize>,
}

impl LabelSplit {
    pub fn train(&self) -> &BTreeSet<usize> {
        &self.train
    }

    pub fn dev(&self) -> &BTreeSet<usize> {
        &self.dev
    }

    pub fn test(&self) -> &BTreeSet<usize> {
        &self.test
    }

    /// `(|train|, |dev|, |test|)`
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.dev.len(), self.test.len())
    }
}

/// Check an assignment against the classes present in `g`: every class
/// exactly once, no unknown class, no empty split.
pub fn split_label_space(g: &GraphBundle, assignment: &SplitAssignment) -> Result<LabelSplit> {
    let present = g.classes_present();
    let mut seen = BTreeSet::new();
    let mut sets = Vec::with_capacity(3);
    for (name, ids) in [
        ("train", &assignment.train),
        ("dev", &assignment.dev),
        ("test", &assignment.test),
    ] {
        if ids.is_empty() {
            return Err(Error::InvalidSplit(format!("{name} split is empty")));
        }
        let mut set = BTreeSet::new();
        for &c in ids {
            if !present.contains(&c) {
                return Err(Error::InvalidSplit(format!(
                    "class {c} in {name} split has no nodes"
                )));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidSplit(format!(
                    "class {c} is assigned more than once"
                )));
            }
            set.insert(c);
        }
        sets.push(set);
    }
    if let Some(missing) = present.difference(&seen).next() {
        return Err(Error::InvalidSplit(format!(
            "class {missing} is missing from the assignment"
        )));
    }
    let test = sets.pop().expect("three sets");
    let dev = sets.pop().expect("three sets");
    let train = sets.pop().expect("three sets");
    Ok(LabelSplit { train, dev, test })
}
