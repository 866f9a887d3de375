use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pouw_core::chain::read_chain;

fn pouw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pouw")).args(args).output().expect("spawn pouw")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn run_default(out: &Path) -> Output {
    pouw(&["run", "--scenario", scenario("default.toml").to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_default(dir.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    for name in ["metrics.csv", "summary.json", "chain.jsonl"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
    assert!(text(&out.stdout).contains("20 blocks, supply 20"));
}

#[test]
fn seed_flag_overrides_the_file() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let path = scenario("default.toml");
    for (dir, seed) in [(a.path(), "1"), (b.path(), "2")] {
        let out = pouw(&["run", "--scenario", path.to_str().unwrap(), "--seed", seed, "--out", dir.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let sa = std::fs::read_to_string(a.path().join("summary.json")).unwrap();
    let sb = std::fs::read_to_string(b.path().join("summary.json")).unwrap();
    assert!(sa.contains("\"seed\": 1,"));
    assert!(sb.contains("\"seed\": 2,"));
}

#[test]
fn verify_chain_accepts_an_untouched_export() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_default(dir.path()).status.success());
    let out = pouw(&["verify-chain", "--chain", dir.path().join("chain.jsonl").to_str().unwrap()]);
    assert!(out.status.success());
    assert!(text(&out.stdout).starts_with("OK: 20 blocks, supply 20"));
}

#[test]
fn verify_chain_names_the_tampered_height() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_default(dir.path()).status.success());
    let path = dir.path().join("chain.jsonl");
    let original = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = original.lines().map(str::to_string).collect();
    // Line 0 is the header, so block 7 sits on line 8.
    let mut block: serde_json::Value = serde_json::from_str(&lines[8]).unwrap();
    block["timestamp"] = 1.into();
    lines[8] = block.to_string();
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();

    let out = pouw(&["verify-chain", "--chain", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("height 7"), "{err}");
}

#[test]
fn replay_balances_matches_the_export() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_default(dir.path()).status.success());
    let path = dir.path().join("chain.jsonl");
    let export = read_chain(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    let first = export.blocks[1].winner;
    let out = pouw(&["replay-balances", "--chain", path.to_str().unwrap(), "--address", &first.to_string()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let printed: u64 = text(&out.stdout).trim().parse().unwrap();

    let mut expected: i128 = 0;
    for b in &export.blocks[1..] {
        if b.winner == first {
            expected += export.rules.block_reward as i128;
        }
        for tx in &b.transactions {
            if tx.from == first {
                expected -= tx.amount as i128;
            }
            if tx.to == first {
                expected += tx.amount as i128;
            }
        }
    }
    assert_eq!(printed as i128, expected);
}

#[test]
fn replay_balances_of_unknown_address_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_default(dir.path()).status.success());
    let path = dir.path().join("chain.jsonl");
    let out = pouw(&["replay-balances", "--chain", path.to_str().unwrap(), "--address", &"11".repeat(32)]);
    assert!(out.status.success());
    assert_eq!(text(&out.stdout).trim(), "0");
}

#[test]
fn scenario_check_accepts_every_shipped_scenario() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = pouw(&["scenario-check", "--scenario", path.to_str().unwrap()]);
            assert!(out.status.success(), "{}: {}", path.display(), text(&out.stderr));
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn scenario_check_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"x\"\nseed = 1\nrounds = 0\n[[miners]]\ncount = 1\n").unwrap();
    let out = pouw(&["scenario-check", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).starts_with("error:"));

    std::fs::write(&path, "name = \"x\"\nseed = 1\nrounds = 3\ncolour = 2\n[[miners]]\n").unwrap();
    let out = pouw(&["scenario-check", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_chain_file_fails() {
    let out = pouw(&["verify-chain", "--chain", "/nonexistent/chain.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(pouw(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(pouw(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pouw(&["replay-balances", "--chain", "x", "--address", "zz"]).status.code(), Some(2));
    assert_eq!(pouw(&[]).status.code(), Some(2));
}
