use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn percoplane(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_percoplane"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_match_then_duality_check() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("sq.map");
    let out = percoplane(&["gen", "--family", "square", "--size", "4", "--out", path(&map)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&map).unwrap().starts_with("map torus 16 64"));

    let g1 = dir.path().join("g1.map");
    let part = dir.path().join("part.txt");
    let out = percoplane(&[
        "match", "--in", path(&map), "--graph", "g1", "--strategy", "diagonal3", "--partition-out", path(&part),
        "--out", path(&g1),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&g1).unwrap().lines().any(|l| l.starts_with("diag ")));
    assert!(!fs::read_to_string(&part).unwrap().is_empty());

    let out = percoplane(&["duality-check", "--in", path(&map), "--max-vertices", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("configurations: 65536"));
    assert!(text.contains("violating configurations: 0"));
}

#[test]
fn sweep_writes_a_curve_and_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("tri.map");
    assert!(percoplane(&["gen", "--family", "triangular", "--size", "6", "--out", path(&map)]).status.success());
    let mut curves = Vec::new();
    for threads in ["1", "3"] {
        let csv = dir.path().join(format!("curve{threads}.csv"));
        let out = percoplane(&[
            "sweep", "--in", path(&map), "--observable", "WRAP_PROBABILITY", "--pgrid", "0.2:0.8:0.1", "--trials",
            "300", "--seed", "9", "--threads", threads, "--out", path(&csv),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        curves.push(fs::read_to_string(&csv).unwrap());
    }
    assert_eq!(curves[0], curves[1]);
    let rows: Vec<&str> = curves[0].lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "p,mean,stderr,trials");
    assert_eq!(rows.len(), 1 + 7);
}

#[test]
fn pc_reports_an_estimate() {
    let out = percoplane(&[
        "pc", "--family", "triangular", "--sizes", "8,16", "--trials", "400", "--seed", "3", "--bootstrap", "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let pc: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("p_c: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((pc - 0.5).abs() < 0.1, "{pc}");
}

#[test]
fn list_experiments_names_every_kind() {
    let out = percoplane(&["list-experiments"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "SUM_RULE",
        "TRIANGULATION_IDENTITY",
        "DUALITY_EXHAUSTIVE",
        "HYPERBOLIC_NONUNIQUENESS",
        "ENDS_SANITY",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn run_exit_code_follows_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("dual.toml");
    let output = dir.path().join("out");
    fs::write(
        &config,
        format!(
            "experiment = \"DUALITY_EXHAUSTIVE\"\nseed = 5\noutput = {:?}\n\n[tiling]\nfamily = \"square\"\nsizes = [3]\n",
            path(&output)
        ),
    )
    .unwrap();
    let out = percoplane(&["run", "--config", path(&config)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(output.join("summary.txt").exists());
}

#[test]
fn errors_exit_with_two() {
    let out = percoplane(&["sweep", "--in", "/definitely/missing.map", "--observable", "WRAP_PROBABILITY"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "experiment = \"NOPE\"\n").unwrap();
    assert_eq!(percoplane(&["run", "--config", path(&bad)]).status.code(), Some(2));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let config = percoplane_core::experiments::ExperimentConfig::load(&path).unwrap();
            config.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5, "{seen}");
}
