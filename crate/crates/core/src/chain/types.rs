use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codec::{sha256, Encoder};
use crate::work::SimulationParameters;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HexError {
    #[error("invalid hex: {0}")]
    Invalid(#[from] hex::FromHexError),
    #[error("expected 32 bytes, got {0}")]
    Length(usize),
}

macro_rules! bytes32_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
        pub struct $name(pub [u8; 32]);

        impl $name {
            pub const ZERO: $name = $name([0u8; 32]);

            pub fn as_bytes(&self) -> &[u8; 32] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }

            pub fn from_hex(s: &str) -> Result<Self, HexError> {
                let raw = hex::decode(s.trim())?;
                let arr: [u8; 32] = raw.as_slice().try_into().map_err(|_| HexError::Length(raw.len()))?;
                Ok($name(arr))
            }

            /// Abbreviated hex for logs.
            pub fn short(&self) -> String {
                hex::encode(&self.0[..4])
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.short())
            }
        }

        impl FromStr for $name {
            type Err = HexError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::from_hex(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                Self::from_hex(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

bytes32_newtype!(
    /// A SHA-256 output.
    HashDigest
);

bytes32_newtype!(
    /// Opaque 32-byte node identifier.
    Address
);

impl HashDigest {
    pub fn of(data: &[u8]) -> Self {
        HashDigest(sha256(data))
    }
}

impl Address {
    /// The root authority. Known to every node; the only block producer.
    pub const ROOT: Address = Address([0u8; 32]);

    /// Deterministic miner address for roster slot `index`.
    pub fn for_miner(index: u32) -> Self {
        let mut enc = Encoder::new();
        enc.bytes(b"miner-address").u32(index);
        Address(enc.sha256())
    }
}

/// Verification material registered for a sender. Transactions carry
/// `SHA-256(key || payload)` as their authenticity tag.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuthKey(pub HashDigest);

impl fmt::Debug for AuthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AuthKey(..)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub from: Address,
    pub to: Address,
    pub amount: u64,
    pub nonce: u64,
    pub auth_tag: HashDigest,
}

impl Transaction {
    /// Build and tag a transfer with the sender's key.
    pub fn signed(from: Address, to: Address, amount: u64, nonce: u64, key: &AuthKey) -> Self {
        let mut tx = Transaction { from, to, amount, nonce, auth_tag: HashDigest::ZERO };
        tx.auth_tag = tx.expected_tag(key);
        tx
    }

    fn payload(&self, enc: &mut Encoder) {
        enc.bytes(&self.from.0).bytes(&self.to.0).u64(self.amount).u64(self.nonce);
    }

    pub fn expected_tag(&self, key: &AuthKey) -> HashDigest {
        let mut enc = Encoder::new();
        enc.bytes(&key.0 .0);
        self.payload(&mut enc);
        HashDigest(enc.sha256())
    }

    pub fn verify_tag(&self, key: &AuthKey) -> bool {
        self.expected_tag(key) == self.auth_tag
    }

    pub(crate) fn encode(&self, enc: &mut Encoder) {
        self.payload(enc);
        enc.bytes(&self.auth_tag.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub number: u64,
    pub timestamp: u64,
    pub prev_hash: HashDigest,
    pub transactions: Vec<Transaction>,
    pub winner: Address,
    pub sim_params: SimulationParameters,
    pub sim_data_hash: HashDigest,
}

impl Block {
    /// Block 0: all-zero links, no transactions, the root as winner and
    /// the fixed placeholder work parameters from
    /// [`SimulationParameters::genesis`].
    pub fn genesis() -> Self {
        Block {
            number: 0,
            timestamp: 0,
            prev_hash: HashDigest::ZERO,
            transactions: Vec::new(),
            winner: Address::ROOT,
            sim_params: SimulationParameters::genesis(),
            sim_data_hash: HashDigest::ZERO,
        }
    }

    /// Canonical serialization, in field order.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.u64(self.number).u64(self.timestamp).bytes(&self.prev_hash.0);
        enc.len_prefix(self.transactions.len());
        for tx in &self.transactions {
            tx.encode(&mut enc);
        }
        enc.bytes(&self.winner.0);
        self.sim_params.encode(&mut enc);
        enc.bytes(&self.sim_data_hash.0);
        enc.into_bytes()
    }

    pub fn hash(&self) -> HashDigest {
        block_hash(self)
    }
}

/// SHA-256 of the block's canonical serialization.
pub fn block_hash(block: &Block) -> HashDigest {
    HashDigest::of(&block.canonical_bytes())
}

/// Work seed for block `number`: the first eight bytes (big-endian) of
/// `SHA-256(prev_hash || number_be64)`.
pub fn derive_work_seed(prev_hash: &HashDigest, number: u64) -> u64 {
    let mut enc = Encoder::new();
    enc.bytes(&prev_hash.0).u64(number);
    let digest = enc.sha256();
    u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"))
}
