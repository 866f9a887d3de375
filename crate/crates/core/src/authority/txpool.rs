use std::collections::VecDeque;

use crate::chain::Transaction;

/// FIFO transaction pool. With a cap, each block takes the oldest `cap`
/// transactions and the rest wait, in order, for later blocks.
#[derive(Debug, Clone, Default)]
pub struct TxPool {
    pending: VecDeque<Transaction>,
    pub cap: Option<usize>,
}

impl TxPool {
    pub fn new(cap: Option<usize>) -> Self {
        TxPool { pending: VecDeque::new(), cap }
    }

    pub fn push(&mut self, tx: Transaction) {
        self.pending.push_back(tx);
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn pending(&self) -> impl Iterator<Item = &Transaction> {
        self.pending.iter()
    }

    /// Remove and return the transactions for the next block.
    pub fn drain_for_block(&mut self) -> Vec<Transaction> {
        let take = self.cap.map_or(self.pending.len(), |c| c.min(self.pending.len()));
        self.pending.drain(..take).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Address, AuthKey, HashDigest};

    fn tx(nonce: u64) -> Transaction {
        Transaction::signed(Address([1; 32]), Address([2; 32]), 1, nonce, &AuthKey(HashDigest([1; 32])))
    }

    #[test]
    fn uncapped_drains_everything() {
        let mut pool = TxPool::new(None);
        (0..5).for_each(|n| pool.push(tx(n)));
        assert_eq!(pool.drain_for_block().len(), 5);
        assert!(pool.is_empty());
    }

    #[test]
    fn cap_defers_overflow_in_order() {
        let mut pool = TxPool::new(Some(3));
        (0..7).for_each(|n| pool.push(tx(n)));
        let first: Vec<u64> = pool.drain_for_block().iter().map(|t| t.nonce).collect();
        assert_eq!(first, vec![0, 1, 2]);
        let second: Vec<u64> = pool.drain_for_block().iter().map(|t| t.nonce).collect();
        assert_eq!(second, vec![3, 4, 5]);
        pool.push(tx(7));
        let third: Vec<u64> = pool.drain_for_block().iter().map(|t| t.nonce).collect();
        assert_eq!(third, vec![6, 7]);
    }
}
