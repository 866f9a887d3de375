//! Canonical byte encoding used for every hashed structure.
//!
//! Integers are big-endian fixed width, floats are their IEEE-754 bit
//! pattern as a big-endian `u64`, and lists carry a `u32` length prefix.

use sha2::{Digest, Sha256};

#[derive(Debug, Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn i64(&mut self, v: i64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.u64(v.to_bits())
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn len_prefix(&mut self, n: usize) -> &mut Self {
        self.u32(u32::try_from(n).expect("list longer than u32::MAX"))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn sha256(&self) -> [u8; 32] {
        sha256(&self.buf)
    }
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

/// Round to the 1e-6 grid used by result digests.
pub fn quantize_micro(x: f64) -> i64 {
    (x * 1e6).round() as i64
}
