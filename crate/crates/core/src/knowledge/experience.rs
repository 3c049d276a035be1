//! Success statistics of past pick and place trials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::neem::{Annotation, Combo, ContextKey, Neem, NodeStatus};

pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialKey {
    pub action: String,
    pub context: ContextKey,
    pub combo: Combo,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub successes: u32,
    pub trials: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceModel {
    pub alpha: f64,
    #[serde(with = "entries")]
    pub table: BTreeMap<TrialKey, Counts>,
}

mod entries {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &BTreeMap<TrialKey, Counts>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(t.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<TrialKey, Counts>, D::Error> {
        Ok(Vec::<(TrialKey, Counts)>::deserialize(d)?.into_iter().collect())
    }
}

impl ExperienceModel {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0, "smoothing constant must be positive");
        ExperienceModel { alpha, table: BTreeMap::new() }
    }

    pub fn record(&mut self, key: TrialKey, success: bool) {
        let c = self.table.entry(key).or_default();
        c.trials += 1;
        c.successes += success as u32;
    }

    pub fn counts(&self, key: &TrialKey) -> Counts {
        self.table.get(key).copied().unwrap_or_default()
    }

    /// Laplace-smoothed success rate; untried combos score one half.
    pub fn rate(&self, key: &TrialKey) -> f64 {
        let c = self.counts(key);
        (c.successes as f64 + self.alpha) / (c.trials as f64 + 2.0 * self.alpha)
    }

    pub fn total_trials(&self) -> u32 {
        self.table.values().map(|c| c.trials).sum()
    }
}

/// Counts every finished trial recorded in the narratives. Cancelled trials
/// are left out.
pub fn train_experience_model(neems: &[Neem], alpha: f64) -> ExperienceModel {
    let mut m = ExperienceModel::new(alpha);
    for n in neems {
        for node in &n.narrative {
            let success = match node.status {
                NodeStatus::Succeeded => true,
                NodeStatus::Failed(_) => false,
                _ => continue,
            };
            for a in &node.annotations {
                if let Annotation::Trial(t) = a {
                    let key = TrialKey { action: t.action.clone(), context: t.context.clone(), combo: t.combo };
                    m.record(key, success);
                }
            }
        }
    }
    m
}
