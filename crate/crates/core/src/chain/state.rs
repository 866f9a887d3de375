use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{block_hash, Address, AuthKey, Block, HashDigest};

/// Source of transaction verification keys.
pub trait KeyLookup {
    fn auth_key(&self, address: &Address) -> Option<AuthKey>;
}

/// Public snapshot of registered keys, as held by every node.
pub type KeyRing = BTreeMap<Address, AuthKey>;

impl KeyLookup for KeyRing {
    fn auth_key(&self, address: &Address) -> Option<AuthKey> {
        self.get(address).copied()
    }
}

/// Chain-wide constants every validator must agree on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainRules {
    pub block_reward: u64,
    pub tx_cap: Option<usize>,
}

impl Default for ChainRules {
    fn default() -> Self {
        Self { block_reward: 1, tx_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("height mismatch: expected {expected}, found {found}")]
    HeightMismatch { expected: u64, found: u64 },
    #[error("prev_hash does not link to block {parent}")]
    LinkBroken { parent: u64 },
    #[error("timestamp {found} not after parent timestamp {parent}")]
    TimestampNotIncreasing { parent: u64, found: u64 },
    #[error("{found} transactions exceed cap {cap}")]
    CapExceeded { cap: usize, found: usize },
    #[error("transaction {index}: unknown sender")]
    UnknownSender { index: usize },
    #[error("transaction {index}: auth tag does not verify")]
    BadAuthTag { index: usize },
    #[error("transaction {index}: nonce {found} not above last used (next allowed {min})")]
    StaleNonce { index: usize, min: u64, found: u64 },
    #[error("transaction {index}: zero amount")]
    ZeroAmount { index: usize },
    #[error("transaction {index}: overspend ({amount} requested, {balance} available)")]
    Overspend { index: usize, balance: u64, amount: u64 },
    #[error("block is not the canonical genesis block")]
    BadGenesis,
}

impl ValidationError {
    /// Stable rule name, used in reports and CLI output.
    pub fn rule(&self) -> &'static str {
        match self {
            Self::HeightMismatch { .. } => "HeightMismatch",
            Self::LinkBroken { .. } => "LinkBroken",
            Self::TimestampNotIncreasing { .. } => "TimestampNotIncreasing",
            Self::CapExceeded { .. } => "CapExceeded",
            Self::UnknownSender { .. } => "UnknownSender",
            Self::BadAuthTag { .. } => "BadAuthTag",
            Self::StaleNonce { .. } => "StaleNonce",
            Self::ZeroAmount { .. } => "ZeroAmount",
            Self::Overspend { .. } => "Overspend",
            Self::BadGenesis => "BadGenesis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("block {height} invalid: {cause}")]
pub struct ReplayError {
    pub height: u64,
    pub cause: ValidationError,
}

/// Ledger state: the block list plus balances derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub rules: ChainRules,
    pub blocks: Vec<Block>,
    pub balances: BTreeMap<Address, u64>,
    pub next_nonce: BTreeMap<Address, u64>,
    pub total_supply: u64,
}

impl ChainState {
    /// State holding only the genesis block.
    pub fn new(rules: ChainRules) -> Self {
        ChainState {
            rules,
            blocks: vec![Block::genesis()],
            balances: BTreeMap::new(),
            next_nonce: BTreeMap::new(),
            total_supply: 0,
        }
    }

    pub fn height(&self) -> u64 {
        self.tip().number
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn tip_hash(&self) -> HashDigest {
        block_hash(self.tip())
    }

    /// Balance of `address`; unknown addresses hold zero.
    pub fn balance(&self, address: &Address) -> u64 {
        self.balances.get(address).copied().unwrap_or(0)
    }

    pub fn next_nonce(&self, address: &Address) -> u64 {
        self.next_nonce.get(address).copied().unwrap_or(0)
    }

    /// Check `candidate` as the next block. Reports the first violated rule.
    pub fn validate_block(
        &self,
        candidate: &Block,
        keys: &impl KeyLookup,
    ) -> Result<(), ValidationError> {
        let parent = self.tip();
        if candidate.number != parent.number + 1 {
            return Err(ValidationError::HeightMismatch {
                expected: parent.number + 1,
                found: candidate.number,
            });
        }
        if candidate.prev_hash != block_hash(parent) {
            return Err(ValidationError::LinkBroken { parent: parent.number });
        }
        if candidate.timestamp <= parent.timestamp {
            return Err(ValidationError::TimestampNotIncreasing {
                parent: parent.timestamp,
                found: candidate.timestamp,
            });
        }
        if let Some(cap) = self.rules.tx_cap {
            if candidate.transactions.len() > cap {
                return Err(ValidationError::CapExceeded {
                    cap,
                    found: candidate.transactions.len(),
                });
            }
        }

        // Transactions execute in order, so later ones see earlier effects.
        let mut balances: BTreeMap<Address, u64> = BTreeMap::new();
        let mut nonces: BTreeMap<Address, u64> = BTreeMap::new();
        for (index, tx) in candidate.transactions.iter().enumerate() {
            let key = keys
                .auth_key(&tx.from)
                .ok_or(ValidationError::UnknownSender { index })?;
            if !tx.verify_tag(&key) {
                return Err(ValidationError::BadAuthTag { index });
            }
            let min = *nonces.entry(tx.from).or_insert_with(|| self.next_nonce(&tx.from));
            if tx.nonce < min {
                return Err(ValidationError::StaleNonce { index, min, found: tx.nonce });
            }
            if tx.amount == 0 {
                return Err(ValidationError::ZeroAmount { index });
            }
            let balance = *balances.entry(tx.from).or_insert_with(|| self.balance(&tx.from));
            if tx.amount > balance {
                return Err(ValidationError::Overspend { index, balance, amount: tx.amount });
            }
            balances.insert(tx.from, balance - tx.amount);
            let to_balance = *balances.entry(tx.to).or_insert_with(|| self.balance(&tx.to));
            balances.insert(tx.to, to_balance + tx.amount);
            nonces.insert(tx.from, tx.nonce + 1);
        }
        Ok(())
    }

    /// Validate and then execute `block`. On error the state is untouched.
    pub fn apply_block(
        &mut self,
        block: Block,
        keys: &impl KeyLookup,
    ) -> Result<(), ValidationError> {
        self.validate_block(&block, keys)?;
        for tx in &block.transactions {
            *self.balances.entry(tx.from).or_insert(0) -= tx.amount;
            *self.balances.entry(tx.to).or_insert(0) += tx.amount;
            self.next_nonce.insert(tx.from, tx.nonce + 1);
        }
        *self.balances.entry(block.winner).or_insert(0) += self.rules.block_reward;
        self.total_supply += self.rules.block_reward;
        self.blocks.push(block);
        Ok(())
    }

    /// Sum of all balances. Equal to `total_supply` in every reachable state.
    pub fn balance_sum(&self) -> u64 {
        self.balances.values().sum()
    }
}

/// Rebuild ledger state from a block list starting at genesis.
pub fn replay_chain(
    blocks: &[Block],
    rules: ChainRules,
    keys: &impl KeyLookup,
) -> Result<ChainState, ReplayError> {
    let mut iter = blocks.iter();
    match iter.next() {
        Some(first) if *first == Block::genesis() => {}
        Some(first) => {
            return Err(ReplayError { height: first.number, cause: ValidationError::BadGenesis })
        }
        None => return Err(ReplayError { height: 0, cause: ValidationError::BadGenesis }),
    }
    let mut state = ChainState::new(rules);
    for block in iter {
        let height = block.number;
        state
            .apply_block(block.clone(), keys)
            .map_err(|cause| ReplayError { height, cause })?;
    }
    Ok(state)
}
