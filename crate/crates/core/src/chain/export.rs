//! Line-delimited chain export.
//!
//! Line 1 is a header record carrying the chain rules and the public key
//! ring needed to check transaction tags; every following line is one block,
//! in height order. All digests and addresses are lowercase hex.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::state::{ChainRules, KeyRing};
use super::types::{Address, AuthKey, Block};

pub const CHAIN_FORMAT: &str = "pouw-chain/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyEntry {
    pub address: Address,
    pub auth_key: AuthKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainHeader {
    pub format: String,
    pub rules: ChainRules,
    pub keys: Vec<KeyEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainExport {
    pub rules: ChainRules,
    pub keys: KeyRing,
    pub blocks: Vec<Block>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing header line")]
    MissingHeader,
    #[error("unsupported chain format {0:?}")]
    Format(String),
}

pub fn write_chain<W: Write>(
    mut out: W,
    rules: ChainRules,
    keys: &KeyRing,
    blocks: &[Block],
) -> Result<(), ExportError> {
    let header = ChainHeader {
        format: CHAIN_FORMAT.to_string(),
        rules,
        keys: keys
            .iter()
            .map(|(address, auth_key)| KeyEntry { address: *address, auth_key: *auth_key })
            .collect(),
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for block in blocks {
        serde_json::to_writer(&mut out, block).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_chain<R: BufRead>(input: R) -> Result<ChainExport, ExportError> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
        Ok(s) => !s.trim().is_empty(),
        Err(_) => true,
    });
    let (_, first) = lines.next().ok_or(ExportError::MissingHeader)?;
    let header: ChainHeader = serde_json::from_str(&first?)
        .map_err(|source| ExportError::Parse { line: 1, source })?;
    if header.format != CHAIN_FORMAT {
        return Err(ExportError::Format(header.format));
    }
    let mut blocks = Vec::new();
    for (idx, line) in lines {
        let block: Block = serde_json::from_str(&line?)
            .map_err(|source| ExportError::Parse { line: idx + 1, source })?;
        blocks.push(block);
    }
    Ok(ChainExport {
        rules: header.rules,
        keys: header.keys.into_iter().map(|k| (k.address, k.auth_key)).collect(),
        blocks,
    })
}
