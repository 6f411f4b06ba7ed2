//! End-to-end CLI behavior: determinism of gen, tokenize/detokenize
//! round-trips, validation exit codes, rendering, and stats.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_patternlm"))
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn gen(dir: &Path, n: usize, seed: u64) {
    let out = bin()
        .args(["gen", "--n", &n.to_string(), "--seed", &seed.to_string(), "--out"])
        .arg(dir)
        .output()
        .unwrap();
    ok(&out);
}

fn first_pattern(dir: &Path) -> serde_json::Value {
    let line = std::fs::read_to_string(dir.join("text.jsonl"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    let rec: serde_json::Value = serde_json::from_str(&line).unwrap();
    rec["pattern"].clone()
}

#[test]
fn gen_twice_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen(a.path(), 22, 7);
    gen(b.path(), 22, 7);
    for name in ["manifest.json", "text.jsonl", "edit.jsonl", "vocab.json"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn tokenize_then_detokenize_reproduces_the_pattern_file() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 20, 3);
    let pattern = first_pattern(dir.path());
    let p_path = dir.path().join("p.json");
    std::fs::write(&p_path, serde_json::to_string(&pattern).unwrap()).unwrap();
    let vocab = dir.path().join("vocab.json");
    let stream = dir.path().join("p.tokens.jsonl");
    let back = dir.path().join("p.back.json");

    let out = bin()
        .args(["tokenize"])
        .arg(&p_path)
        .arg("--vocab")
        .arg(&vocab)
        .arg("--out")
        .arg(&stream)
        .output()
        .unwrap();
    let text = ok(&out);
    assert!(text.starts_with("<garment_start>"));
    assert!(text.trim_end().ends_with("<garment_end>"));

    let out = bin()
        .args(["detokenize"])
        .arg(&stream)
        .arg("--vocab")
        .arg(&vocab)
        .arg("--out")
        .arg(&back)
        .output()
        .unwrap();
    ok(&out);

    // write the source through the canonical writer for a byte comparison
    let src = patternlm_core::io::pattern_from_str(&serde_json::to_string(&pattern).unwrap())
        .unwrap();
    let got = patternlm_core::io::read_pattern(&back).unwrap();
    assert!(
        patternlm_core::io::pattern_diff(&src, &got, 1e-9).is_none(),
        "roundtripped pattern deviates"
    );
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 20, 5);
    let pattern = first_pattern(dir.path());
    let good = dir.path().join("good.json");
    std::fs::write(&good, serde_json::to_string(&pattern).unwrap()).unwrap();
    let out = bin().arg("validate").arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    // break the first vertex
    let mut bad = pattern.clone();
    bad["panels"][0]["vertices"][0][0] = serde_json::json!(1.0);
    let bad_path = dir.path().join("bad.json");
    std::fs::write(&bad_path, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = bin().arg("validate").arg(&bad_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("(0, 0)"), "report missing: {stdout}");

    // usage error
    let out = bin().arg("validate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // missing file is a runtime failure
    let out = bin().arg("validate").arg("nope.json").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn render_draws_closed_paths_and_stitch_colors() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 20, 9);
    // find a straight skirt: 2 panels, 2 stitches
    let mut chosen = None;
    for line in std::fs::read_to_string(dir.path().join("text.jsonl"))
        .unwrap()
        .lines()
    {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let pattern = &rec["pattern"];
        if pattern["panels"].as_array().unwrap().len() == 2
            && pattern["stitches"].as_array().unwrap().len() == 2
        {
            chosen = Some(pattern.clone());
            break;
        }
    }
    let pattern = chosen.expect("a two-panel pattern in 20 samples");
    let p_path = dir.path().join("p.json");
    std::fs::write(&p_path, serde_json::to_string(&pattern).unwrap()).unwrap();
    let svg_path = dir.path().join("p.svg");
    let out = bin()
        .arg("render")
        .arg(&p_path)
        .arg("--out")
        .arg(&svg_path)
        .output()
        .unwrap();
    ok(&out);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    let total_edges: usize = pattern["panels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["edges"].as_array().unwrap().len())
        .sum();
    // one closed path per edge
    assert_eq!(svg.matches("<path").count(), total_edges);
    // each stitch colors two edges (stroke + tag label each): 2 stitches
    // give two color pairs
    assert_eq!(svg.matches("hsl(").count(), 8, "{svg}");
    assert_eq!(svg.matches(">t1<").count(), 2);
    assert_eq!(svg.matches(">t2<").count(), 2);
}

#[test]
fn stats_reports_lengths_and_families() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 24, 11);
    let out = bin().arg("stats").arg(dir.path()).output().unwrap();
    let text = ok(&out);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["records"], 24);
    assert!(v["token_length_max"].as_u64().unwrap() <= 838);
    assert!(v["family_counts"].as_object().unwrap().len() >= 3);
    assert!(v["edge_type_counts"]["line"].as_u64().unwrap() > 0);
}

#[test]
fn gen_run_config_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 20, 13);
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_config.json")).unwrap())
            .unwrap();
    assert_eq!(cfg["command"], "gen");
    assert_eq!(cfg["n"], 20);
    assert_eq!(cfg["seed"], 13);
}
