use super::*;
use crate::authority::{Authority, AuthorityConfig, WorkTemplate};
use crate::chain::HashDigest;
use crate::work::run_pipeline_sequential;

fn params() -> SimulationParameters {
    template().params(11, 1.0)
}

fn template() -> WorkTemplate {
    WorkTemplate {
        n_configs: 4,
        n_events: 5,
        beam_energy: 6.0,
        n_layers: 4,
        smear_sigma: 0.01,
        smear_step: 0.0,
        split_scale: 6.0,
    }
}

fn node(i: u32, behavior: MinerBehavior, speed: f64) -> MinerNode {
    MinerNode::new(
        i,
        Address::for_miner(i),
        AuthKey(HashDigest([i as u8 + 1; 32])),
        behavior,
        speed,
        ChainRules::default(),
        KeyRing::new(),
        Address::ROOT,
    )
}

fn solve(n: &MinerNode) -> Submission {
    n.compute_solution(&params(), 1, &mut PipelineCache::default(), None)
}

#[test]
fn honest_matches_authority_run() {
    let s = solve(&node(0, MinerBehavior::Honest, 1.0));
    assert_eq!(s.result, run_pipeline_sequential(&params()).unwrap());
    assert_eq!(s.params_echo, params());
}

#[test]
fn colluders_in_a_group_agree() {
    let b = MinerBehavior::SybilColluder { group_id: 3, fabrication_seed: 9 };
    let s1 = solve(&node(0, b.clone(), 1.0));
    let s2 = solve(&node(1, b, 1.0));
    assert_eq!(s1.result, s2.result);
    assert!(s1.result.digest_is_consistent());
    assert_ne!(s1.result.digest, run_pipeline_sequential(&params()).unwrap().digest);
    let other = solve(&node(2, MinerBehavior::SybilColluder { group_id: 4, fabrication_seed: 9 }, 1.0));
    assert_ne!(other.result.digest, s1.result.digest);
}

#[test]
fn independent_fabricators_differ() {
    let s1 = solve(&node(0, MinerBehavior::FabricateAll, 1.0));
    let s2 = solve(&node(1, MinerBehavior::FabricateAll, 1.0));
    assert_ne!(s1.result.digest, s2.result.digest);
}

#[test]
fn partial_with_all_configs_is_honest() {
    let s = solve(&node(0, MinerBehavior::PartialFabricate { k_correct: 4, group: None }, 1.0));
    assert_eq!(s.result, run_pipeline_sequential(&params()).unwrap());
}

#[test]
fn partial_has_exactly_k_correct_configs() {
    let truth = run_pipeline_sequential(&params()).unwrap();
    let s = solve(&node(0, MinerBehavior::PartialFabricate { k_correct: 2, group: Some(1) }, 1.0));
    let correct = s.result.per_config.iter().zip(&truth.per_config).filter(|(a, b)| a == b).count();
    assert_eq!(correct, 2);
    let t = solve(&node(5, MinerBehavior::PartialFabricate { k_correct: 2, group: Some(1) }, 1.0));
    assert_eq!(s.result, t.result);
}

#[test]
fn work_time_scales_with_speed() {
    let p = params();
    let cost = estimate_cost(&p);
    let slow = node(0, MinerBehavior::Honest, 1.0).on_params(&p, 0, u64::MAX).unwrap();
    let fast = node(1, MinerBehavior::Honest, 2.0).on_params(&p, 0, u64::MAX).unwrap();
    assert_eq!(slow, cost.ceil() as u64);
    assert_eq!(fast, (cost / 2.0).ceil() as u64);
}

#[test]
fn slow_node_skips_round() {
    let p = params();
    let n = node(0, MinerBehavior::Honest, 1e-6);
    assert_eq!(n.on_params(&p, 0, 1000), None);
    let mut off = node(1, MinerBehavior::Honest, 1e9);
    off.offline = true;
    assert_eq!(off.on_params(&p, 0, 1000), None);
}

#[test]
fn wrong_params_submits_at_once_with_mutated_cut() {
    let n = node(0, MinerBehavior::WrongParams, 1e-9);
    assert_eq!(n.on_params(&params(), 100, 1000), Some(101));
    let s = solve(&n);
    assert_eq!(s.params_echo.energy_cut, params().energy_cut * WRONG_PARAMS_CUT_FACTOR);
}

#[test]
fn cheat_resamples_reference() {
    let p = params();
    let reference = ReferenceDataset::generate(&p, 123, 16, 0.0).unwrap();
    let n = node(0, MinerBehavior::ReferenceOracleCheat, 1.0);
    let s = n.compute_solution(&p, 1, &mut PipelineCache::default(), Some(&reference));
    for (c, r) in s.result.per_config.iter().zip(&reference.truth.per_config) {
        assert_eq!(c.tracks.len(), r.tracks.len());
        assert!(c.tracks.iter().all(|t| r.tracks.contains(t)));
    }
}

#[test]
fn behavior_toml_rejects_unknown_fields() {
    #[derive(Deserialize)]
    struct W {
        behavior: MinerBehavior,
    }
    let ok: W = toml::from_str("behavior = { kind = \"partial_fabricate\", k_correct = 3 }").unwrap();
    assert_eq!(ok.behavior, MinerBehavior::PartialFabricate { k_correct: 3, group: None });
    assert!(toml::from_str::<W>("behavior = { kind = \"honest\", extra = 1 }").is_err());
    assert!(toml::from_str::<W>("behavior = { kind = \"lazy\" }").is_err());
    assert!(MinerBehavior::PartialFabricate { k_correct: 5, group: None }.validate(4).is_err());
}

fn authority_blocks(n: usize) -> (Vec<Block>, KeyRing) {
    let mut auth = Authority::new(AuthorityConfig::new(template(), 1.0));
    auth.registry.register_miner("m0", Address::for_miner(0), AuthKey(HashDigest([1; 32]))).unwrap();
    let mut cache = PipelineCache::default();
    for r in 0..n as u64 {
        auth.open_round(r * 1000);
        auth.close_round(r * 1000 + 1000, &mut cache);
    }
    (auth.chain.blocks[1..].to_vec(), auth.keyring())
}

#[test]
fn blocks_apply_in_order_and_buffer_gaps() {
    let (blocks, keys) = authority_blocks(4);
    let mut n = node(0, MinerBehavior::Honest, 1.0);
    n.keys = keys;
    assert_eq!(n.on_block(blocks[0].clone(), Address::ROOT), BlockOutcome::Applied(1));
    assert_eq!(n.local_chain.height(), 1);
    assert_eq!(n.on_block(blocks[2].clone(), Address::ROOT), BlockOutcome::Gap { have: 1, got: 3 });
    assert_eq!(n.on_block(blocks[0].clone(), Address::ROOT), BlockOutcome::Duplicate);
    assert_eq!(n.on_block(blocks[1].clone(), Address::ROOT), BlockOutcome::Applied(2));
    assert_eq!(n.local_chain.height(), 3);
}

#[test]
fn block_from_non_authority_rejected() {
    let (blocks, keys) = authority_blocks(1);
    let mut n = node(0, MinerBehavior::Honest, 1.0);
    n.keys = keys;
    let out = n.on_block(blocks[0].clone(), Address::for_miner(3));
    assert_eq!(out, BlockOutcome::Rejected(BlockRejection::NotFromAuthority));
    assert_eq!(n.local_chain.height(), 0);
}

#[test]
fn tampered_block_rejected_chain_unchanged() {
    let (blocks, keys) = authority_blocks(1);
    let mut n = node(0, MinerBehavior::Honest, 1.0);
    n.keys = keys;
    let mut bad = blocks[0].clone();
    bad.prev_hash = HashDigest([7; 32]);
    let before = n.local_chain.clone();
    assert!(matches!(n.on_block(bad, Address::ROOT), BlockOutcome::Rejected(BlockRejection::Invalid(_))));
    assert_eq!(n.local_chain, before);
    assert_eq!(n.rejected_blocks.len(), 1);
}

#[test]
fn transfers_use_increasing_nonces() {
    let mut n = node(0, MinerBehavior::Honest, 1.0);
    let a = n.make_transfer(Address::for_miner(1), 1);
    let b = n.make_transfer(Address::for_miner(1), 1);
    assert_eq!((a.nonce, b.nonce), (0, 1));
    assert!(b.verify_tag(&AuthKey(HashDigest([1; 32]))));
}
