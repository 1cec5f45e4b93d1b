use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn mapr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mapr-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn run_prints_the_scripted_trace() {
    let econ = data("example1.json");
    let o = mapr(&["run", econ.to_str().unwrap(), "--scripted-winners", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let labels: Vec<&str> = text.lines().skip(2).filter_map(|l| l.split(" | ").next()).map(str::trim).collect();
    assert_eq!(&labels[..7], ["0", "1", "2", "3", "4.1", "5.1", "6.1"]);
    assert!(text.contains("final prices: (0,5,4,4,7)"));
    assert!(text.contains("allocation:   (o,c,b,a,d)"));
}

#[test]
fn check_accepts_the_example_tuple() {
    let o = mapr(&[
        "check",
        data("example1.json").to_str().unwrap(),
        "--tuple",
        data("example1_eq.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("all conditions satisfied"));
}

#[test]
fn check_rejects_a_perturbed_tuple() {
    let bad = scratch(
        "bad.json",
        r#"{"prices":[5,4,4,7],"rationing_zeros":[[1,"c"],[3,"c"]],"allocation":["o","c","b","a","o"]}"#,
    );
    let o = mapr(&["check", data("example1.json").to_str().unwrap(), "--tuple", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAILED"));
}

#[test]
fn json_trace_feeds_check() {
    let econ = data("example1.json");
    for seed in ["0", "1", "17"] {
        let o = mapr(&["run", econ.to_str().unwrap(), "--seed", seed, "--format", "json"]);
        assert_eq!(o.status.code(), Some(0));
        let trace = scratch(&format!("trace-{seed}.jsonl"), &stdout(&o));
        let c = mapr(&["check", econ.to_str().unwrap(), "--tuple", trace.to_str().unwrap()]);
        assert_eq!(c.status.code(), Some(0), "{}", stdout(&c));
    }
}

#[test]
fn same_seed_same_bytes() {
    let econ = data("example1.json");
    let a = mapr(&["run", econ.to_str().unwrap(), "--seed", "99", "--format", "json"]);
    let b = mapr(&["run", econ.to_str().unwrap(), "--seed", "99", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn expect_prints_exact_fractions() {
    let o = mapr(&["expect", data("example1.json").to_str().unwrap(), "--histories"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for needle in ["u*[1]=0/1", "u*[3]=5/2", "p*[a]=5/1", "history P=1/2 winners=[2]", "history P=1/2 winners=[3]"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
}

#[test]
fn expect_node_limit_exits_with_guard_code() {
    let o = mapr(&["expect", data("example1.json").to_str().unwrap(), "--node-limit", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeded"));
}

#[test]
fn manipulate_evaluates_a_given_report() {
    let o = mapr(&["manipulate", data("example1.json").to_str().unwrap(), "--strategy", "4,3,7,7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("truthful report [4,3,5,7]: 0/1"));
    assert!(text.contains("report [4,3,7,7]: 1/3"));
}

#[test]
fn manipulate_search_guard() {
    let o = mapr(&["manipulate", data("example1.json").to_str().unwrap(), "--cap", "20", "--strategy-limit", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manipulate_search_two_buyers() {
    let econ = scratch(
        "two.json",
        r#"{"items":["a","b"],"buyers":2,"valuations":[[8,2],[8,1]],"lower_bounds":[2,1],"upper_bounds":[3,2]}"#,
    );
    let o = mapr(&["manipulate", econ.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["truthful_optimal"], true);
    assert_eq!(v["truthful"]["profit"]["fraction"], "3/1");
    assert_eq!(v["closed_form_agrees"], true);
}

#[test]
fn matching_reports_the_over_demanded_sets() {
    let o = mapr(&["matching", data("example1.json").to_str().unwrap(), "--prices", "5,4,3,5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("maximum matching: {1,c} {4,a} {5,d} (size 3)"));
    assert!(text.contains("over-demanded set {c,d}, minimal over-demanded set {c}"));
}

#[test]
fn matching_with_forbidden_pairs() {
    let o = mapr(&[
        "matching",
        data("example1.json").to_str().unwrap(),
        "--prices",
        "5,4,4,7",
        "--forbid",
        "1:c",
        "--forbid",
        "3:c",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("equilibrium allocation exists: yes"));
}

#[test]
fn invalid_inputs_exit_with_one() {
    let econ = data("example1.json");
    let missing = mapr(&["run", "/nonexistent/economy.json"]);
    assert_eq!(missing.status.code(), Some(1));
    let malformed = scratch("malformed.json", "{ not json");
    assert_eq!(mapr(&["run", malformed.to_str().unwrap()]).status.code(), Some(1));
    let crossed = scratch(
        "crossed.json",
        r#"{"items":["a"],"buyers":1,"valuations":[[3]],"lower_bounds":[4],"upper_bounds":[2]}"#,
    );
    let o = mapr(&["run", crossed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds upper bound"));
    let both = mapr(&["run", econ.to_str().unwrap(), "--seed", "1", "--scripted-winners", "2"]);
    assert_eq!(both.status.code(), Some(1));
    let not_entrant = mapr(&["run", econ.to_str().unwrap(), "--scripted-winners", "4"]);
    assert_eq!(not_entrant.status.code(), Some(1));
    let unknown_item = mapr(&["matching", econ.to_str().unwrap(), "--forbid", "1:z"]);
    assert_eq!(unknown_item.status.code(), Some(1));
}
