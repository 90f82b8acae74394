use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use golf_dns::datasets::{citation_like, CitationLikeConfig};
use golf_dns::io::save_container;
use serde_json::Value;

fn golf_dns(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_golf-dns"))
        .args(args)
        .current_dir(dir)
        .env_remove("GOLF_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn small_graph(dir: &Path) -> String {
    let graph = citation_like(&CitationLikeConfig {
        num_nodes: 300,
        num_classes: 3,
        feature_dim: 60,
        num_edges: 600,
        homophily: 0.85,
        words_per_node: 8,
        topic_strength: 0.8,
        degree_tail: 2.5,
        seed: 5,
    });
    let path = dir.join("small.golf");
    save_container(&graph, &path).unwrap();
    "small.golf".into()
}

#[test]
fn karate_selection_is_deterministic_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = golf_dns(
            dir.path(),
            &[
                "select",
                "--dataset",
                "karate",
                "--budget",
                "4",
                "--out",
                name,
            ],
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    let nodes = read_json(&dir.path().join("a.json"))["nodes"].clone();
    assert_eq!(nodes, serde_json::json!([2, 3, 7, 30]));

    let manifest = read_json(&dir.path().join("a.manifest.json"));
    assert_eq!(manifest["subcommand"], "select");
    assert_eq!(manifest["config"]["budget"], 4);
    assert_eq!(manifest["config"]["sigma"], 1.0);
    assert!(manifest["timings"]["golf"].is_number());
    assert_eq!(manifest["inputs"][0]["source"], "builtin:karate");
}

#[test]
fn manifest_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_graph(dir.path());
    let first = golf_dns(
        dir.path(),
        &[
            "select",
            "--dataset",
            &data,
            "--rate",
            "0.05",
            "--alpha",
            "0.3",
            "--k",
            "2",
            "--out",
            "first.json",
        ],
    );
    assert_eq!(
        code(&first),
        0,
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let manifest = read_json(&dir.path().join("first.manifest.json"));
    let sha = manifest["inputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(sha.len(), 64);

    let again = golf_dns(
        dir.path(),
        &[
            "select",
            "--config",
            "first.manifest.json",
            "--out",
            "again.json",
        ],
    );
    assert_eq!(
        code(&again),
        0,
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );
    assert_eq!(
        fs::read(dir.path().join("first.json")).unwrap(),
        fs::read(dir.path().join("again.json")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "dataset = \"karate\"\nsigma = 2.0\nbudget = 6\n",
    )
    .unwrap();
    let out = golf_dns(
        dir.path(),
        &[
            "select", "--config", "c.toml", "--budget", "5", "--out", "s.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let sel = read_json(&dir.path().join("s.json"));
    assert_eq!(sel["config"]["budget"], 5);
    assert_eq!(sel["config"]["sigma"], 2.0);
    assert_eq!(sel["nodes"].as_array().unwrap().len(), 5);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let usage = golf_dns(
        dir.path(),
        &["select", "--dataset", "karate", "--budget", "4", "--bogus"],
    );
    assert_eq!(code(&usage), 2);
    let missing = golf_dns(dir.path(), &["select", "--dataset", "karate"]);
    assert_eq!(code(&missing), 2);

    fs::write(dir.path().join("bad.golf"), "not a container\n").unwrap();
    assert_eq!(
        code(&golf_dns(dir.path(), &["info", "--dataset", "bad.golf"])),
        3
    );
    assert_eq!(
        code(&golf_dns(dir.path(), &["info", "--dataset", "nowhere"])),
        3
    );
    fs::write(dir.path().join("c.toml"), "sigmaa = 1.0\n").unwrap();
    assert_eq!(
        code(&golf_dns(
            dir.path(),
            &["info", "--config", "c.toml", "--dataset", "karate"]
        )),
        3
    );

    let over = golf_dns(
        dir.path(),
        &["select", "--dataset", "karate", "--budget", "35"],
    );
    assert_eq!(code(&over), 5);
    // Each of the 15 trees needs 3 labels, which 20 cannot cover.
    let infeasible = golf_dns(
        dir.path(),
        &[
            "select",
            "--dataset",
            "karate",
            "--budget",
            "20",
            "--trees",
            "15",
            "--k",
            "3",
        ],
    );
    assert_eq!(
        code(&infeasible),
        5,
        "{}",
        String::from_utf8_lossy(&infeasible.stderr)
    );
}

#[test]
fn info_prints_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let out = golf_dns(
        dir.path(),
        &["info", "--dataset", "karate", "--out", "info.json"],
    );
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("karate"), "{stdout}");
    let info = read_json(&dir.path().join("info.json"));
    assert_eq!(
        (info["nodes"].as_u64(), info["edges"].as_u64()),
        (Some(34), Some(78))
    );
}

#[test]
fn compare_prints_paired_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_graph(dir.path());
    let out = golf_dns(
        dir.path(),
        &[
            "compare",
            "--dataset",
            &data,
            "--rate",
            "0.04,0.02",
            "--runs",
            "2",
            "--epochs",
            "30",
            "--test-size",
            "100",
            "--out",
            "cmp.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    for row in [
        "label rate",
        "GCN (random)",
        "GCN + DNS",
        "change",
        "4%",
        "2%",
    ] {
        assert!(stdout.contains(row), "missing {row:?} in\n{stdout}");
    }
    let rows = read_json(&dir.path().join("cmp.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let delta = row["dns"]["mean"].as_f64().unwrap() - row["random"]["mean"].as_f64().unwrap();
        assert!((row["delta_mean"].as_f64().unwrap() - delta).abs() < 1e-12);
        // Paired seeds: both modes see the same test sizes.
        assert_eq!(row["dns"]["runs"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_graph(dir.path());
    let out = golf_dns(
        dir.path(),
        &[
            "sweep",
            "--dataset",
            &data,
            "--rate",
            "0.04",
            "--runs",
            "1",
            "--epochs",
            "10",
            "--test-size",
            "100",
            "--param",
            "alpha",
            "--values",
            "0,1",
            "--csv",
            "s.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(csv.lines().count() >= 3, "{csv}");
    let manifest = read_json(&dir.path().join("s.manifest.json"));
    assert_eq!(manifest["config"]["param"], "alpha");
}
