use std::collections::BTreeMap;
use std::sync::Arc;

use super::{WorldError, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SnapshotToken(pub u64);

/// Immutable world snapshots addressed by token.
#[derive(Debug, Default, Clone)]
pub struct SnapshotStore {
    next: u64,
    snapshots: BTreeMap<u64, Arc<WorldState>>,
}

impl SnapshotStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&mut self, world: &WorldState) -> SnapshotToken {
        let token = self.next;
        self.next += 1;
        self.snapshots.insert(token, Arc::new(world.clone()));
        SnapshotToken(token)
    }

    pub fn restore(&self, token: SnapshotToken) -> Result<WorldState, WorldError> {
        self.snapshots.get(&token.0).map(|w| (**w).clone()).ok_or(WorldError::UnknownToken(token.0))
    }

    /// Shared read-only view, for projection sandboxes that clone lazily.
    pub fn get(&self, token: SnapshotToken) -> Result<Arc<WorldState>, WorldError> {
        self.snapshots.get(&token.0).cloned().ok_or(WorldError::UnknownToken(token.0))
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}
