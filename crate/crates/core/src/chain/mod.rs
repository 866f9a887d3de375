//! Blocks, transactions, hashing and ledger state.

mod export;
mod state;
mod types;

pub use export::{read_chain, write_chain, ChainExport, ChainHeader, ExportError, KeyEntry, CHAIN_FORMAT};
pub use state::{replay_chain, ChainRules, ChainState, KeyLookup, KeyRing, ReplayError, ValidationError};
pub use types::{block_hash, derive_work_seed, Address, AuthKey, Block, HashDigest, HexError, Transaction};
