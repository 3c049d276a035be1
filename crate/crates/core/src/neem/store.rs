//! Append-only NEEM store: one NDJSON file per episode plus an index file.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{export_neem, import_neem, Annotation, ContextKey, FormatError, Neem};

pub const INDEX_FILE: &str = "index.ndjson";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file}: {source}")]
    Format { file: String, source: FormatError },
    #[error("index line {line}: {message}")]
    Index { line: usize, message: String },
}

/// One index row per stored episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct IndexEntry {
    pub file: String,
    pub seed: u64,
    pub gm: String,
    pub plan: String,
    pub outcome: String,
    /// (action type, context, outcome) of every recorded trial.
    pub trials: Vec<(String, ContextKey, String)>,
}

fn index_entry(file: String, n: &Neem) -> IndexEntry {
    let trials = n
        .narrative
        .iter()
        .flat_map(|node| {
            node.annotations.iter().filter_map(move |a| match a {
                Annotation::Trial(t) => Some((t.action.clone(), t.context.clone(), node.status.outcome().to_string())),
                _ => None,
            })
        })
        .collect();
    IndexEntry {
        file,
        seed: n.header.seed,
        gm: n.header.gm.clone(),
        plan: n.header.plan.clone(),
        outcome: n.footer.outcome.outcome().to_string(),
        trials,
    }
}

#[derive(Debug, Default)]
pub struct NeemStore {
    dir: Option<PathBuf>,
    neems: Vec<Neem>,
    index: Vec<IndexEntry>,
}

impl NeemStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a store directory and loads its episodes.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(dir)?;
        let mut store = NeemStore { dir: Some(dir.to_path_buf()), ..Default::default() };
        let index_path = dir.join(INDEX_FILE);
        if !index_path.exists() {
            return Ok(store);
        }
        for (i, line) in fs::read_to_string(&index_path)?.lines().enumerate() {
            let entry: IndexEntry =
                serde_json::from_str(line).map_err(|e| StoreError::Index { line: i + 1, message: e.to_string() })?;
            let text = fs::read_to_string(dir.join(&entry.file))?;
            let neem = import_neem(&text).map_err(|source| StoreError::Format { file: entry.file.clone(), source })?;
            store.neems.push(neem);
            store.index.push(entry);
        }
        Ok(store)
    }

    pub fn append(&mut self, neem: Neem) -> Result<usize, StoreError> {
        let id = self.neems.len();
        let file = format!("neem-{id:06}.ndjson");
        if let Some(dir) = &self.dir {
            let mut f = fs::OpenOptions::new().write(true).create_new(true).open(dir.join(&file))?;
            f.write_all(export_neem(&neem).as_bytes())?;
        }
        let entry = index_entry(file, &neem);
        if let Some(dir) = &self.dir {
            let mut idx = fs::OpenOptions::new().append(true).create(true).open(dir.join(INDEX_FILE))?;
            writeln!(idx, "{}", serde_json::to_string(&entry).expect("index rows serialize"))?;
        }
        self.neems.push(neem);
        self.index.push(entry);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.neems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neems.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Neem> {
        self.neems.get(id)
    }

    pub fn neems(&self) -> &[Neem] {
        &self.neems
    }

    pub fn index(&self) -> &[IndexEntry] {
        &self.index
    }

    /// Episode ids with at least one trial of `action` in `context` ending in `outcome`.
    pub fn lookup(&self, action: &str, context: &ContextKey, outcome: &str) -> Vec<usize> {
        let mut by_key: BTreeMap<(&str, &ContextKey, &str), Vec<usize>> = BTreeMap::new();
        for (i, e) in self.index.iter().enumerate() {
            for (a, c, o) in &e.trials {
                let ids = by_key.entry((a.as_str(), c, o.as_str())).or_default();
                if ids.last() != Some(&i) {
                    ids.push(i);
                }
            }
        }
        by_key.remove(&(action, context, outcome)).unwrap_or_default()
    }
}
