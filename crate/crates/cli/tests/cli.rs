use std::path::PathBuf;
use std::process::{Command, Output};

use lewisgraph::bounds::{bounds_at, BoundsReport};
use lewisgraph::lewis::{lewis_weights, LewisResult};
use lewisgraph::oracle::DesignGap;
use lewisgraph::{generate, Family};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lewisgraph"))
        .args(args)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn tmp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lewisgraph-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn triangle_file() {
    let p = tmp("tri.edges", "# triangle\n0 1\n1 2\n2 0\n");
    let out = run(&["lewis", "--graph", p.to_str().unwrap(), "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "lewis");
    for w in v["w_inf"].as_array().unwrap() {
        assert!((w.as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-4);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["lewis", "--graph", "/nonexistent/file"]).status.code(), Some(1));
    assert_eq!(run(&["lewis", "--family", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["gen", "--family", "grid", "--params", "w=3"]).status.code(), Some(1));
    assert_eq!(run(&["lewis", "--family", "path", "--params", "n=4", "--eps", "2"]).status.code(), Some(1));
    let disconnected = tmp("two.edges", "0 1\n2 3\n");
    assert_eq!(run(&["gen", "--graph", disconnected.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["gen", "--graph", disconnected.to_str().unwrap(), "--lcc"]).status.code(), Some(0));
    // a budget far too small to converge
    let out = run(&["lewis", "--family", "lollipop", "--params", "k=12,p=12", "--iter-const", "0.001"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["converged"], false);
    assert_eq!(run(&["tree", "--family", "cycle", "--params", "n=5"]).status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let args = ["bounds", "--family", "regular", "--params", "d=3,n=40", "--seed", "9"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["bounds", "--family", "regular", "--params", "d=3,n=40", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn json_round_trip() {
    let out = run(&["bounds", "--family", "grid", "--params", "w=4,h=6", "--eps", "0.01"]);
    let parsed: BoundsReport = serde_json::from_slice(&out.stdout).unwrap();
    let g = generate(&Family::Grid { w: 4, h: 6 }, 0).unwrap();
    let lw = lewis_weights(&g, 0.01).unwrap();
    assert_eq!(parsed, bounds_at(&g, &lw, 0.01).unwrap());

    let out = run(&["lewis", "--family", "lollipop", "--params", "k=6,p=4"]);
    let parsed: LewisResult = serde_json::from_slice(&out.stdout).unwrap();
    let g = generate(&Family::Lollipop { k: 6, p: 4 }, 0).unwrap();
    assert_eq!(parsed, lewis_weights(&g, 0.01).unwrap());
}

#[test]
fn csv_round_trip() {
    let out = run(&["--format", "csv", "design-gap", "--n", "2,50,1000"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<DesignGap> = rd.deserialize().map(Result::unwrap).collect();
    let expect: Vec<DesignGap> = [2, 50, 1000].iter().map(|&n| lewisgraph::oracle::design_gap_demo(n).unwrap()).collect();
    assert_eq!(rows, expect);

    let out = run(&["--format", "csv", "lewis", "--family", "grid", "--params", "w=3,h=3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("edge,u,v,w_inf,g_lw"));
    let g = generate(&Family::Grid { w: 3, h: 3 }, 0).unwrap();
    let lw = lewis_weights(&g, 0.01).unwrap();
    for (l, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[3].parse::<f64>().unwrap(), lw.w_inf[l]);
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("lewisgraph-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("g.json");
    let out = run(&["gen", "--family", "star", "--params", "n=5", "--out", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!((v["n"].as_u64(), v["m"].as_u64()), (Some(5), Some(4)));
}

#[test]
fn tree_and_polarize() {
    let out = run(&["tree", "--family", "bowtie", "--params", "t=2,p=1,s=2"]);
    let v = json(&out);
    assert!((v["alpha"].as_f64().unwrap() - 145.0 / (4.0 * 5f64.sqrt() + 3.0).powi(2)).abs() < 1e-12);
    assert_eq!(v["bowtie"]["p"], 1);

    let out = run(&["polarize", "--family", "random_tree", "--params", "n=25", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let last = lines.last().unwrap();
    assert!(last["summary"]["bowtie"].is_object());
    assert_eq!(last["summary"]["steps"].as_u64().unwrap() as usize, lines.len() - 1);
    for step in &lines[..lines.len() - 1] {
        assert_eq!(step["schema"], 1);
        assert!(step["alpha_after"].as_f64() >= step["alpha_before"].as_f64().map(|a| a - 1e-12));
    }
}

#[test]
fn solve_and_stt() {
    let out = run(&["solve", "--family", "bowtie", "--params", "t=2,p=1,s=2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let k = v["k_star"].as_f64().unwrap();
    assert!((k - (4.0 * 5f64.sqrt() + 3.0).powi(2)).abs() < 1e-4 * k);

    let out = run(&["stt", "--family", "regular", "--params", "d=4,n=30", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tree_edges"].as_array().unwrap().len(), 29);
    assert!(v["gamma"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_rows() {
    let out = run(&["--format", "csv", "sweep", "--family", "lollipop", "--n", "20..40", "--n-step", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("family,n,m,runs,alpha_min_max"));

    let out = run(&["sweep", "--family", "regular", "--d", "3,4", "--n", "30", "--runs", "3"]);
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["runs"], 3);
    assert_eq!(run(&["sweep", "--family", "grid"]).status.code(), Some(1));
}
