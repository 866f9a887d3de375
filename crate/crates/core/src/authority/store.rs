use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::HashDigest;
use crate::work::SimulationResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum DataError {
    #[error("data serving is disabled")]
    Denied,
    #[error("no data stored under this digest")]
    UnknownDigest,
}

/// `{digest: result}` store of verified simulation data.
#[derive(Debug, Clone)]
pub struct DataStore {
    entries: BTreeMap<HashDigest, SimulationResult>,
    pub serving_enabled: bool,
}

impl DataStore {
    pub fn new(serving_enabled: bool) -> Self {
        DataStore { entries: BTreeMap::new(), serving_enabled }
    }

    /// Stores under the result's own digest.
    pub fn insert(&mut self, result: SimulationResult) {
        self.entries.entry(result.digest).or_insert(result);
    }

    pub fn contains(&self, digest: &HashDigest) -> bool {
        self.entries.contains_key(digest)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn serve_data(&self, digest: &HashDigest) -> Result<&SimulationResult, DataError> {
        if !self.serving_enabled {
            return Err(DataError::Denied);
        }
        self.entries.get(digest).ok_or(DataError::UnknownDigest)
    }
}
