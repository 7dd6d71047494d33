use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn abqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abqc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const EDGE: &str = "[params]\nk = 3\nm = 2\ngraph = { n = 2, edges = [[0, 1]] }\n";

#[test]
fn params_table_lists_minimal_k() {
    let out = abqc(&["params", "--n-range", "1..3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ks: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ks, ["3", "15", "35"]);
    let out = abqc(&["params", "--n-range", "2..2"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("9982"));
}

#[test]
fn bounds_json_and_text_form() {
    let out = abqc(&["bounds", "--n-range", "1..4", "--format", "json"]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
    assert!(rows.as_array().unwrap().iter().all(|r| r["satisfied"] == true));
    let out = abqc(&["bounds", "--n-range", "1..1", "--text-form-m"]);
    let text = String::from_utf8(out.stdout).unwrap();
    // the k^n form gives m = 5 at n = 1, too small for the budget
    assert!(text.lines().nth(1).unwrap().starts_with("1,3,5,"), "{text}");
    assert!(text.trim_end().ends_with("false"));
}

#[test]
fn bad_ranges_are_usage_errors() {
    assert_eq!(abqc(&["params", "--n-range", "3..1"]).status.code(), Some(2));
    assert_eq!(abqc(&["params", "--n-range", "0..2"]).status.code(), Some(2));
}

#[test]
fn run_exit_codes_follow_the_verdict() {
    let dir = TempDir::new().unwrap();
    let honest = write_config(dir.path(), "honest.toml", EDGE);
    let out = abqc(&["run", "--config", &honest]);
    assert_eq!(out.status.code(), Some(0));
    let t: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(t["verdict"], "accepted");
    assert_eq!(t["backend"], "tableau");

    let liar = write_config(dir.path(), "liar.toml", &format!("{EDGE}[alice]\nkind = \"false_reject\"\n"));
    assert_eq!(abqc(&["run", "--config", &liar]).status.code(), Some(11));

    let ortho = format!("{EDGE}[bob]\nkind = \"iid_state\"\nstate = {{ kind = \"orthogonal\" }}\n").replace("k = 3", "k = 5");
    let ortho = write_config(dir.path(), "ortho.toml", &ortho);
    // 1 - 2^-5 of runs blame Bob; the rest are accepted or blame Alice
    let codes: Vec<i32> = (0..40).map(|s| abqc(&["run", "--config", &ortho, "--seed", &s.to_string()]).status.code().unwrap()).collect();
    assert!(codes.iter().all(|c| [0, 10, 11].contains(c)));
    assert!(codes.iter().filter(|&&c| c == 10).count() >= 30);

    let private = write_config(
        dir.path(),
        "private.toml",
        &ortho_private(),
    );
    let codes: Vec<i32> = (0..20).map(|s| abqc(&["run", "--config", &private, "--seed", &s.to_string()]).status.code().unwrap()).collect();
    assert!(codes.contains(&12));
    assert!(codes.iter().all(|c| [0, 12].contains(c)));
}

fn ortho_private() -> String {
    "[params]\nk = 3\nm = 1\nmode = \"private_only\"\ngraph = { n = 2, edges = [[0, 1]] }\n[bob]\nkind = \"iid_state\"\nstate = { kind = \"orthogonal\" }\n".into()
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(abqc(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let broken = write_config(dir.path(), "broken.toml", "[params]\nk = 3\n");
    assert_eq!(abqc(&["run", "--config", &broken]).status.code(), Some(2));
    let strict = write_config(dir.path(), "strict.toml", &EDGE.replace("k = 3", "k = 3\ntoy = false"));
    let out = abqc(&["run", "--config", &strict]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("toy"));
    let tableau = write_config(
        dir.path(),
        "tableau.toml",
        &format!("backend = \"tableau\"\n{EDGE}[bob]\nkind = \"iid_state\"\nstate = {{ kind = \"maximally_mixed\" }}\n"),
    );
    assert_eq!(abqc(&["montecarlo", "--config", &tableau]).status.code(), Some(2));
    assert_eq!(abqc(&["montecarlo", "--config", &broken, "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn montecarlo_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.toml",
        &format!("trials = 300\nmaster_seed = 11\n{EDGE}[bob]\nkind = \"iid_state\"\nstate = {{ kind = \"depolarized\", fidelity = 0.6 }}\n[output]\ntranscripts = \"a.jsonl\"\nsummary = \"a.json\"\n"),
    );
    let first = abqc(&["montecarlo", "--config", &cfg, "--jobs", "1"]);
    assert!(first.status.success());
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b_path = dir.path().join("b.jsonl");
    let second = abqc(&["montecarlo", "--config", &cfg, "--jobs", "4", "--transcripts", b_path.to_str().unwrap()]);
    assert!(second.status.success());
    assert_eq!(a, std::fs::read(&b_path).unwrap());

    let summary: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    let from_file: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(summary["counts"], from_file["counts"]);
    let counts = &summary["counts"];
    let total: u64 = ["accepted", "bob_cheating", "alice_cheating", "rejected"].iter().map(|k| counts[k].as_u64().unwrap()).sum();
    assert_eq!(total, 300);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 300);
    assert_eq!(summary["predictions"].as_array().unwrap().len(), 3);
}

#[test]
fn run_matches_first_montecarlo_trial() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &format!("master_seed = 99\n{EDGE}"));
    let run = abqc(&["run", "--config", &cfg]);
    let lines = dir.path().join("l.jsonl");
    abqc(&["montecarlo", "--config", &cfg, "--trials", "3", "--transcripts", lines.to_str().unwrap()]);
    let first = std::fs::read_to_string(&lines).unwrap().lines().next().unwrap().to_string();
    assert_eq!(String::from_utf8(run.stdout).unwrap().trim(), first);
}

#[test]
fn verify_single_suite() {
    let out = abqc(&["verify", "--suite", "parameter-minimality"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("PASS parameter-minimality"));
    assert_eq!(abqc(&["verify", "--suite", "unknown"]).status.code(), Some(2));
}

#[test]
fn repository_configs_load() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            abqc_core::harness::ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
