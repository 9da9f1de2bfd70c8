use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use cake_core::dsl;
use cake_core::fixtures::random_ext_tree;
use cake_core::Protocol;
use serde_json::Value;

fn cake(args: &[&str], stdin: &str, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cake"));
    cmd.args(args)
        .env_remove("CAKE_BUDGET")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: &str) -> String {
    let out = cake(args, stdin, &[]);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn generated_selfridge_conway_has_150_nodes() {
    let text = ok(&["gen", "selfridge-conway", "--model", "bc"], "");
    let stats = ok(&["stats"], &text);
    assert!(stats.contains("nodes: 150"), "{stats}");
    let stats = json(&ok(&["stats", "--json"], &text));
    assert_eq!(stats["nodes"], 150);
    assert_eq!(stats["model"], "bc");
}

#[test]
fn converted_selfridge_conway_matches_the_bc_generator_pairwise() {
    let dir = tempfile::tempdir().unwrap();
    let gcc = path(dir.path(), "sc.cake");
    let bc = path(dir.path(), "sc_bc.json");
    let conv = path(dir.path(), "conv.cake");
    ok(
        &["gen", "selfridge-conway", "--model", "gcc", "-o", &gcc],
        "",
    );
    ok(&["gen", "selfridge-conway", "--model", "bc", "-o", &bc], "");
    ok(
        &["convert", "--from", "gcc", "--to", "bc", &gcc, "-o", &conv],
        "",
    );
    let report = json(&ok(
        &["verify", "--notion", "pairwise", "--json", &conv, &bc],
        "",
    ));
    assert_eq!(report["equivalent"], true);
    assert_eq!(report["notion"], "PAIRWISE");
    assert!(report["disagreements"].as_array().unwrap().is_empty());
    assert!(report["grid"]
        .as_array()
        .unwrap()
        .contains(&Value::from("1/4")));
}

#[test]
fn cuts_before_choices_keeps_the_node_count() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let t = Protocol::Ext(random_ext_tree(seed, 3, 30));
        let input = path(dir.path(), "ext.cake");
        std::fs::write(&input, dsl::print(&t)).unwrap();
        let out = ok(&["normalize", "--pass", "cbc-ext", &input], "");
        let before = json(&ok(&["stats", "--json", &input], ""));
        let after = json(&ok(&["stats", "--json"], &out));
        assert_eq!(before["nodes"], after["nodes"]);
    }
}

#[test]
fn conversions_round_between_models() {
    let cc = ok(&["gen", "cut-and-choose", "--model", "bc"], "");
    for to in ["dag", "extbc", "gcc", "bc"] {
        let out = ok(&["convert", "--from", "bc", "--to", to], &cc);
        let back = ok(&["convert", "--from", to, "--to", "bc", "--json"], &out);
        assert_eq!(json(&back)["model"], "bc");
    }
    let wrong = cake(&["convert", "--from", "gcc", "--to", "bc"], &cc, &[]);
    assert_eq!(code(&wrong), 1);
    let restricted = cake(
        &[
            "convert",
            "--from",
            "bc",
            "--to",
            "gcc",
            "--mode",
            "restricted",
        ],
        &cc,
        &[],
    );
    assert_eq!(code(&restricted), 1);
    ok(
        &[
            "convert",
            "--from",
            "bc",
            "--to",
            "gcc",
            "--mode",
            "extensive",
        ],
        &cc,
    );
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["frobnicate"],
        vec!["gen", "nope"],
        vec!["convert", "--from", "bc"],
        vec!["normalize", "--pass", "sideways"],
    ] {
        let out = cake(&args, "", &[]);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let cc = ok(&["gen", "cut-and-choose", "--model", "bc"], "");
    let out = cake(&["stats"], &cc, &[("CAKE_BUDGET", "lots")]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&cake(&["--help"], "", &[])), 0);
}

#[test]
fn malformed_input_gets_a_spanned_diagnostic() {
    let out = cake(&["stats"], "(bc :agents 2\n  (leaf (1 -> 3)))\n", &[]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("-:2:"), "{err}");
    assert!(err.contains('^'), "{err}");
    let out = cake(&["stats"], "(bc :agents 2", &[]);
    assert_eq!(code(&out), 1);
}

#[test]
fn budget_override_stops_large_conversions() {
    let sc = ok(&["gen", "selfridge-conway", "--model", "gcc"], "");
    let out = cake(
        &["convert", "--from", "gcc", "--to", "bc"],
        &sc,
        &[("CAKE_BUDGET", "10")],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn fmt_prints_canonical_text() {
    let messy = "; cut and choose\n(bc :agents 2 (cut :agent 1 :piece 1 (choose :agent 2\n (leaf (1 -> 2) (2 -> 1)) (leaf (1 -> 1) (2 -> 2)))))";
    let pretty = ok(&["fmt"], messy);
    assert_eq!(pretty, ok(&["gen", "cut-and-choose", "--model", "bc"], ""));
    assert_eq!(code(&cake(&["fmt", "--check"], messy, &[])), 1);
    assert_eq!(code(&cake(&["fmt", "--check"], &pretty, &[])), 0);
}

#[test]
fn seeded_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = path(dir.path(), "ds.cake");
    ok(&["gen", "dubins-spanier", "--n", "3", "-o", &p], "");
    let vals = path(dir.path(), "vals.json");
    std::fs::write(
        &vals,
        r#"[{"breakpoints": ["0", "1/2", "1"], "densities": ["3/2", "1/2"]},
            {"breakpoints": ["0", "1"], "densities": ["1"]},
            {"breakpoints": ["0", "1/4", "1"], "densities": ["0", "4/3"]}]"#,
    )
    .unwrap();
    let args = [
        "run",
        &p,
        "--valuations",
        &vals,
        "-s",
        "random",
        "--seed",
        "9",
        "--json",
    ];
    assert_eq!(ok(&args, ""), ok(&args, ""));
    let honest = json(&ok(
        &["run", &p, "--valuations", &vals, "-s", "intended", "--json"],
        "",
    ));
    for i in 0..3 {
        let v: cake_core::Fraction = honest["values"][i][i].as_str().unwrap().parse().unwrap();
        assert!(v >= cake_core::frac(1, 3));
    }
}

#[test]
fn strategy_assignment_is_checked() {
    let cc = ok(&["gen", "cut-and-choose", "--model", "bc"], "");
    let dir = tempfile::tempdir().unwrap();
    let p = path(dir.path(), "cc.cake");
    std::fs::write(&p, &cc).unwrap();
    for args in [
        vec!["run", &p, "-s", "1=random"],
        vec![
            "run",
            &p,
            "-s",
            "1=random",
            "-s",
            "1=intended",
            "-s",
            "2=random",
        ],
        vec!["run", &p, "-s", "3=random", "-s", "random"],
        vec!["run", &p, "-s", "random", "-s", "intended"],
    ] {
        assert_eq!(code(&cake(&args, "", &[])), 2, "{args:?}");
    }
    let odd = path(dir.path(), "odd.cake");
    std::fs::write(
        &odd,
        "(bc :agents 2 (cut :agent 2 :piece 1 (leaf (1 -> 1) (2 -> 2))))",
    )
    .unwrap();
    assert_eq!(code(&cake(&["run", &odd, "-s", "intended"], "", &[])), 1);
}

fn human_run(dir: &Path, keys: &str, extra: &[&str]) -> (Output, PathBuf) {
    let p = path(dir, "cc.cake");
    std::fs::write(&p, ok(&["gen", "cut-and-choose", "--model", "bc"], "")).unwrap();
    let trace = dir.join("trace.json");
    let mut args = vec!["run", &p, "-o", trace.to_str().unwrap(), "--json"];
    args.extend_from_slice(extra);
    (cake(&args, keys, &[]), trace)
}

#[test]
fn choose_prompt_takes_only_listed_branches() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _) = human_run(
        dir.path(),
        "0\n3\nx\n2\n",
        &["-s", "1=intended", "-s", "human:2"],
    );
    assert!(out.status.success());
    let prompts = String::from_utf8(out.stderr).unwrap();
    assert_eq!(prompts.matches("enter a number from 1 to 2").count(), 3);
    let r = json(&String::from_utf8(out.stdout).unwrap());
    // branch 2 gives the chooser the right half
    assert_eq!(r["allocation"]["pieces"][1][0]["lo"], "1/2");
}

#[test]
fn cut_prompt_rejects_points_outside_the_piece() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _) = human_run(
        dir.path(),
        "5/4\n-1\n0.3\n",
        &["-s", "human:1", "-s", "2=intended"],
    );
    assert!(out.status.success());
    let prompts = String::from_utf8(out.stderr).unwrap();
    assert_eq!(prompts.matches("lies outside").count(), 2);
    let r = json(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(r["trace"]["cuts"][0], "3/10");
}

#[test]
fn human_runs_replay_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (out, trace) = human_run(dir.path(), "2/7\n", &["-s", "human:1", "-s", "2=intended"]);
    assert!(out.status.success());
    let live = String::from_utf8(out.stdout).unwrap();
    let p = path(dir.path(), "cc.cake");
    let replayed = ok(
        &["run", &p, "--replay", trace.to_str().unwrap(), "--json"],
        "",
    );
    assert_eq!(live, replayed);
    let script = format!("script:{}", trace.to_str().unwrap());
    let scripted = ok(&["run", &p, "-s", &script, "--json"], "");
    assert_eq!(live, scripted);
}

#[test]
fn end_of_input_saves_the_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (out, trace) = human_run(dir.path(), "1/3\n", &["-s", "human:1", "-s", "human:2"]);
    assert_eq!(code(&out), 1);
    let saved = json(&std::fs::read_to_string(trace).unwrap());
    assert_eq!(saved["cuts"], serde_json::json!(["1/3"]));
    assert_eq!(saved["events"].as_array().unwrap().len(), 1);
}
