use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::{Address, AuthKey, KeyLookup, KeyRing};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub real_id: String,
    pub auth_key: AuthKey,
    pub banned: bool,
    pub strikes: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("identity {0:?} is already registered")]
    DuplicateIdentity(String),
    #[error("address {0} is already registered")]
    DuplicateAddress(Address),
    #[error("the root address cannot be registered")]
    ReservedAddress,
    #[error("address {0} is not registered")]
    UnknownAddress(Address),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BanRecord {
    pub address: Address,
    pub reason: String,
    pub height: u64,
}

/// Identity-verified miners. Each real-world identity maps to exactly one
/// address; a banned identity cannot come back under a new address.
#[derive(Debug, Clone, Default)]
pub struct MinerRegistry {
    entries: BTreeMap<Address, RegistryEntry>,
    identities: BTreeMap<String, Address>,
}

impl MinerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_miner(
        &mut self,
        real_id: &str,
        address: Address,
        auth_key: AuthKey,
    ) -> Result<(), RegistryError> {
        if address == Address::ROOT {
            return Err(RegistryError::ReservedAddress);
        }
        if self.identities.contains_key(real_id) {
            return Err(RegistryError::DuplicateIdentity(real_id.to_string()));
        }
        if self.entries.contains_key(&address) {
            return Err(RegistryError::DuplicateAddress(address));
        }
        self.identities.insert(real_id.to_string(), address);
        self.entries.insert(
            address,
            RegistryEntry { real_id: real_id.to_string(), auth_key, banned: false, strikes: 0 },
        );
        Ok(())
    }

    pub fn ban_miner(&mut self, address: &Address) -> Result<(), RegistryError> {
        let entry = self.entries.get_mut(address).ok_or(RegistryError::UnknownAddress(*address))?;
        entry.banned = true;
        Ok(())
    }

    /// Record a strike; returns `true` if this strike crossed `threshold`
    /// and the miner is now banned. A threshold of 0 disables bans.
    pub fn add_strike(&mut self, address: &Address, threshold: u32) -> bool {
        let Some(entry) = self.entries.get_mut(address) else { return false };
        entry.strikes += 1;
        if threshold > 0 && !entry.banned && entry.strikes >= threshold {
            entry.banned = true;
            return true;
        }
        false
    }

    pub fn get(&self, address: &Address) -> Option<&RegistryEntry> {
        self.entries.get(address)
    }

    pub fn is_registered(&self, address: &Address) -> bool {
        self.entries.contains_key(address)
    }

    pub fn is_banned(&self, address: &Address) -> bool {
        self.entries.get(address).is_some_and(|e| e.banned)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Public key snapshot distributed to nodes.
    pub fn keyring(&self) -> KeyRing {
        self.entries.iter().map(|(a, e)| (*a, e.auth_key)).collect()
    }
}

impl KeyLookup for MinerRegistry {
    fn auth_key(&self, address: &Address) -> Option<AuthKey> {
        self.entries.get(address).map(|e| e.auth_key)
    }
}
