use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn domsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_domsim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("domsim-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn simulate_counts_every_game() {
    let o = domsim(&["simulate", "--a", "big-money", "--b", "big-smithy", "--n", "1000", "--first", "a", "--seed", "1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let total = v["wins_a"].as_u64().unwrap() + v["ties"].as_u64().unwrap() + v["wins_b"].as_u64().unwrap();
    assert_eq!(total, 1000);
}

#[test]
fn same_argv_same_output() {
    let args = ["simulate", "--a", "big-money", "--b", "random", "--n", "200", "--first", "alternate", "--seed", "9"];
    let a = domsim(&args);
    let b = domsim(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let one = domsim(&[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(a.stdout, one.stdout);
}

#[test]
fn text_and_json_agree() {
    let args = ["simulate", "--a", "big-money", "--b", "big-militia", "--n", "100", "--seed", "3"];
    let text = stdout(&domsim(&args));
    let v: serde_json::Value = serde_json::from_str(&stdout(&domsim(&[&args[..], &["--json"]].concat()))).unwrap();
    let expect = format!("W {} / T {} / L {}", v["wins_a"], v["ties"], v["wins_b"]);
    assert!(text.contains(&expect), "{text} / {expect}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(domsim(&["simulate", "--a", "big-money"]).status.code(), Some(1));
    assert_eq!(domsim(&["simulate", "--a", "big-money", "--b", "x", "--bogus"]).status.code(), Some(1));
    assert_eq!(domsim(&["simulate", "--a", "nobody", "--b", "big-money", "--n", "1"]).status.code(), Some(1));
    assert_eq!(domsim(&["simulate", "--a", "big-money", "--b", "big-money", "--kingdom", "Cellar"]).status.code(), Some(1));
    assert_eq!(domsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn stats_on_empty_dir() {
    let dir = scratch("empty");
    let o = domsim(&["stats", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty corpus"));
}

#[test]
fn logs_parse_and_stats() {
    let dir = scratch("logs");
    let o = domsim(&[
        "simulate", "--a", "big-money", "--b", "village-smithy-engine", "--n", "20", "--kingdom", "random", "--seed", "4",
        "--logs", dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let first = dir.join("game_000000.txt");
    let parsed = domsim(&["parse", first.to_str().unwrap(), "--echo"]);
    assert_eq!(parsed.status.code(), Some(0));
    assert_eq!(stdout(&parsed), fs::read_to_string(&first).unwrap());
    let s = domsim(&["stats", dir.to_str().unwrap(), "--json"]);
    assert_eq!(s.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&s)).unwrap();
    assert_eq!(v["games"], 20);

    let bad = dir.join("bad.txt");
    fs::write(&bad, "not a log\n").unwrap();
    assert_eq!(domsim(&["parse", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn benchmark_with_candidate_file() {
    let dir = scratch("bench");
    let file = dir.join("cand.json");
    fs::write(
        &file,
        r#"{"name":"cand","menu":{"entries":[{"card":"Gold","count":99},{"card":"Smithy","count":1},{"card":"Silver","count":99}]},"victory":{"province_always":true,"duchy_threshold":4,"estate_threshold":2}}"#,
    )
    .unwrap();
    let o = domsim(&["benchmark", "--candidate", file.to_str().unwrap(), "--reference", "big-money", "--n", "50", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("Win / Tie / Lose") && text.contains("big-money"), "{text}");
}

#[test]
fn rate_results_file() {
    let dir = scratch("rate");
    let file = dir.join("results.txt");
    fs::write(&file, "alice bob 1\nbob carol 0.5\ncarol alice 0\n").unwrap();
    let o = domsim(&["rate", file.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    fs::write(&file, "alice bob 3\n").unwrap();
    assert_eq!(domsim(&["rate", file.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn train_then_eval() {
    let dir = scratch("train");
    let ck = dir.join("net.ckpt");
    let o = domsim(&["train", "--checkpoint", ck.to_str().unwrap(), "--games", "4", "--iterations", "2", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let e = domsim(&["eval", "--checkpoint", ck.to_str().unwrap(), "--n", "10", "--json"]);
    assert_eq!(e.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&e)).unwrap();
    assert_eq!(v["wins"].as_u64().unwrap() + v["ties"].as_u64().unwrap() + v["losses"].as_u64().unwrap(), 10);
}

#[test]
fn evolve_tiny_run() {
    let dir = scratch("evolve");
    let out = dir.join("board.json");
    let o = domsim(&[
        "evolve", "--generations", "2", "--population", "4", "--games", "2", "--final-games", "2", "--out",
        out.to_str().unwrap(), "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let b = domsim(&["simulate", "--a", "big-money", "--b", out.to_str().unwrap(), "--n", "10"]);
    assert_eq!(b.status.code(), Some(0));
}
