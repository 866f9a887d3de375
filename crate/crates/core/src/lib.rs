//! Deterministic simulator for a root-authority proof-of-useful-work
//! blockchain whose "work" is a toy Monte Carlo detector simulation.
//!
//! * [`chain`]: blocks, hashing, ledger state and replay.
//! * [`work`]: the seeded simulation pipeline and its canonical digest.
//! * [`verification`]: replication, decoy and reference-data validation.
//! * [`authority`]: registry, rounds, winner selection, data store.
//! * [`miner`]: honest and adversarial miner nodes.
//! * [`netsim`]: discrete-event network, scenarios and metrics.

pub mod chain;
pub mod codec;
pub mod rng;
pub mod work;
pub mod verification;
pub mod authority;
pub mod miner;
pub mod netsim;
