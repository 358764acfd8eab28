use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use radio_gather::formats::{tree_text, Summary, TrialsFile};
use radio_gather_core::protocols::mls_dtree;
use radio_gather_core::trees::make_path;
use radio_gather_core::DuplexMode;
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radio-gather"))
        .args(args)
        .env_remove("RADIO_GATHER_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn summary(text: &str) -> Summary {
    serde_json::from_str(text).unwrap()
}

#[test]
fn run_delivers_everything() {
    let s = summary(&ok(&["run", "--protocol", "unb2", "--tree", "random", "--n", "256"]));
    assert_eq!((s.n, s.delivered), (256, 256));
    assert_eq!(s.schema, "radio-gather/summary/1");

    let s = summary(&ok(&["run", "--protocol", "rr-unb", "--n", "1"]));
    assert_eq!(s.completion_step, Some(0));

    let s = summary(&ok(&["run", "--protocol", "mls", "--tree", "caterpillar", "--n", "64", "--duplex", "full"]));
    assert!(s.completion_step.unwrap() <= mls_dtree(64, DuplexMode::Full).completion_bound());
}

#[test]
fn incomplete_runs_fail_unless_allowed() {
    let args = ["run", "--protocol", "rr-unb", "--tree", "path", "--n", "10", "--max-steps", "5"];
    let out = cli(&args);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("INCOMPLETE"));
    let mut allowed = args.to_vec();
    allowed.push("--allow-incomplete");
    assert_eq!(summary(&ok(&allowed)).completion_step, None);
    assert!(!cli(&["run", "--protocol", "rr-unb", "--n", "4", "--max-steps", "0"]).status.success());
    assert!(!cli(&["run", "--protocol", "nope", "--n", "4"]).status.success());
}

#[test]
fn trace_file_ends_with_a_summary() {
    let path = scratch("trace.jsonl");
    let p = path.to_str().unwrap();
    ok(&["--seed", "3", "run", "--protocol", "bnd", "--tree", "kary3", "--n", "20", "--out", p]);
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let (last, steps) = lines.split_last().unwrap();
    assert!(steps.iter().all(|l| l["record"] == "step" && l["schema"] == "radio-gather/trace/1"));
    assert_eq!(last["record"], "summary");
    assert_eq!(last["delivery"].as_object().unwrap().len(), 20);
    assert_eq!(steps.len() as u64, last["steps_run"].as_u64().unwrap());

    ok(&["--seed", "3", "run", "--protocol", "bnd", "--tree", "kary3", "--n", "20", "--out", p]);
    assert_eq!(fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn tree_files_are_accepted() {
    let path = scratch("path.tree");
    fs::write(&path, tree_text(&make_path(6))).unwrap();
    let s = summary(&ok(&["run", "--protocol", "rr-bnd", "--tree-file", path.to_str().unwrap()]));
    assert_eq!((s.n, s.completion_step), (6, Some(30)));
    fs::write(&path, "3\n0\n0\n").unwrap();
    assert!(!cli(&["run", "--protocol", "rr-bnd", "--tree-file", path.to_str().unwrap()]).status.success());
}

#[test]
fn scaling_is_reproducible() {
    let args = ["scaling", "--protocol", "unb1", "--n", "16,32", "--trials", "4"];
    let csv = ok(&args);
    assert!(csv.starts_with("n,mean_steps,max_steps,bound_ratio\n"));
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(ok(&args), csv);
    let seeded = Command::new(env!("CARGO_BIN_EXE_radio-gather")).args(args).env("RADIO_GATHER_SEED", "9").output().unwrap();
    assert_ne!(String::from_utf8(seeded.stdout).unwrap(), csv);

    // every trial can be replayed with the run command
    let trials = scratch("trials.json");
    ok(&["--seed", "5", "scaling", "--protocol", "unb2", "--n", "24", "--trials", "3", "--trials-out", trials.to_str().unwrap()]);
    let file: TrialsFile = serde_json::from_str(&fs::read_to_string(&trials).unwrap()).unwrap();
    for t in &file.trials {
        let (run_seed, tree_seed, n) = (t.run_seed.to_string(), t.tree_seed.to_string(), t.n.to_string());
        let args = ["--seed", &run_seed, "run", "--protocol", "unb2", "--n", &n, "--tree-seed", &tree_seed];
        assert_eq!(summary(&ok(&args)).completion_step, Some(t.steps));
    }
}

#[test]
fn constructs_dump_and_check() {
    let d: Value = serde_json::from_str(&ok(&["constructs", "disperser", "--n", "9"])).unwrap();
    assert_eq!(d["sets"], serde_json::json!([[0, 7, 8]]));
    assert_eq!((d["p"].as_u64(), d["s"].as_u64()), (Some(3), Some(21)));

    let out = cli(&["constructs", "selfam", "--n", "12", "--k", "2"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS strongly_selective"));
    let f: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(f["checks"]["strongly_selective"], "PASS");
    assert_eq!(f["sets"].as_array().unwrap().len(), f["m"].as_u64().unwrap() as usize);

    let big: Value = serde_json::from_str(&ok(&["constructs", "selfam", "--n", "1000000", "--k", "100"])).unwrap();
    assert_eq!(big["checks"]["strongly_selective"], "UNVERIFIED");
}

#[test]
fn adversary_sources() {
    assert_eq!(ok(&["adversary", "--protocol", "mls", "--n", "32"]), "none\n");

    let w: Value = serde_json::from_str(&ok(&["adversary", "--random-single-firing", "--n", "16"])).unwrap();
    assert_eq!(w["reverified"], true);
    assert_eq!(w["tree"]["parent"].as_array().unwrap().len(), 32);

    let w: Value = serde_json::from_str(&ok(&["adversary", "--all-fire-at-0", "--n", "5"])).unwrap();
    assert_eq!(w["matching"].as_array().unwrap().len(), 1);

    let path = scratch("schedule.json");
    fs::write(&path, r#"{"n": 3, "T": 4, "F": {"0": [1], "1": [1], "2": [3]}}"#).unwrap();
    let w: Value = serde_json::from_str(&ok(&["adversary", "--schedule-file", path.to_str().unwrap()])).unwrap();
    assert_eq!(w["schema"], "radio-gather/witness/1");

    assert!(!cli(&["adversary", "--protocol", "rr-bnd", "--n", "4"]).status.success());
    assert!(!cli(&["adversary", "--n", "4"]).status.success());
}

#[test]
fn lemma_checks() {
    let r: Value = serde_json::from_str(&ok(&["verify-lemmas", "--trees", "40", "--max-n", "64"])).unwrap();
    assert_eq!(r["violations"], serde_json::json!([]));
    assert!(!cli(&["verify-lemmas", "--gammas", "1"]).status.success());
}
