use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn macpolar(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macpolar"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {line}"))
        .parse()
        .unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().to_string())
        .collect()
}

#[test]
fn polarize_adder_depth_four() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&macpolar(
        &["polarize", "--q", "2", "--depth", "4"],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("polarization.csv")).unwrap();
    let i12: Vec<f64> = csv_column(&csv, "i12")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(i12.len(), 16);
    assert!((i12.iter().sum::<f64>() / 16.0 - 1.5).abs() < 1e-9);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert!(summary.to_string().contains("unpolarized_fraction"));
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn polarize_perfect_is_all_t112() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&macpolar(
        &["polarize", "--channel", "perfect", "--depth", "3"],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("polarization.csv")).unwrap();
    let classes = csv_column(&csv, "class");
    assert_eq!(classes.len(), 8);
    assert!(classes.iter().all(|c| c == "t112"));
}

#[test]
fn construct_rates() {
    let dir = tempfile::tempdir().unwrap();
    let perfect = stdout(&macpolar(
        &["construct", "--channel", "perfect", "--depth", "3"],
        dir.path(),
    ));
    assert_eq!(field(&perfect, "sum_rate"), 2.0);
    assert!(dir.path().join("code.json").exists());
    let useless = stdout(&macpolar(
        &["construct", "--channel", "useless", "--depth", "3"],
        dir.path(),
    ));
    assert_eq!(field(&useless, "sum_rate"), 0.0);
    let shallow = field(
        &stdout(&macpolar(&["construct", "--depth", "4"], dir.path())),
        "sum_rate",
    );
    let deep = field(
        &stdout(&macpolar(&["construct", "--depth", "8"], dir.path())),
        "sum_rate",
    );
    assert!(deep > shallow && deep <= 1.5, "{shallow} {deep}");
}

#[test]
fn simulate_from_code_file() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&macpolar(
        &["construct", "--channel", "perfect", "--depth", "3"],
        dir.path(),
    ));
    let code = dir.path().join("code.json");
    let code = code.to_str().unwrap();
    let line = stdout(&macpolar(
        &[
            "simulate",
            "--channel",
            "perfect",
            "--code",
            code,
            "--trials",
            "100",
        ],
        dir.path(),
    ));
    assert_eq!(field(&line, "block_errors"), 0.0);
    let first = fs::read(dir.path().join("simulation.csv")).unwrap();
    stdout(&macpolar(
        &[
            "simulate",
            "--channel",
            "perfect",
            "--code",
            code,
            "--trials",
            "100",
        ],
        dir.path(),
    ));
    assert_eq!(first, fs::read(dir.path().join("simulation.csv")).unwrap());
    let mismatch = macpolar(
        &["simulate", "--q", "3", "--code", code, "--trials", "10"],
        dir.path(),
    );
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn region_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let vertices = |channel: &str| {
        stdout(&macpolar(&["region", "--channel", channel], dir.path()));
        let csv = fs::read_to_string(dir.path().join("region.csv")).unwrap();
        csv.lines()
            .filter(|l| l.starts_with("channel,"))
            .map(|l| {
                let p: Vec<f64> = l.split(',').skip(2).map(|s| s.parse().unwrap()).collect();
                (p[0], p[1])
            })
            .collect::<Vec<_>>()
    };
    let adder = vertices("adder");
    assert_eq!(adder.len(), 5);
    for want in [(0.5, 1.0), (1.0, 0.5)] {
        assert!(adder
            .iter()
            .any(|&(a, b)| (a - want.0).abs() < 1e-9 && (b - want.1).abs() < 1e-9));
    }
    assert_eq!(vertices("contention").len(), 3);
    assert_eq!(vertices("perfect").len(), 4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "channel = \"perfect\"\ndepth = 2\nformat = \"json\"\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    stdout(&macpolar(
        &["polarize", "--config", cfg, "--depth", "3"],
        dir.path(),
    ));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("polarization.json")).unwrap())
            .unwrap();
    assert_eq!(report["depth"], 3);
    assert_eq!(report["entries"].as_array().unwrap().len(), 8);

    fs::write(dir.path().join("bad.toml"), "depht = 2\n").unwrap();
    let bad = dir.path().join("bad.toml");
    let o = macpolar(&["polarize", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn channel_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ch.json");
    fs::write(
        &path,
        r#"{"q": 2, "outputs": 2, "probs": [[1,0],[0,1],[0,1],[1,0]]}"#,
    )
    .unwrap();
    let line = stdout(&macpolar(
        &["region", "--channel-file", path.to_str().unwrap()],
        dir.path(),
    ));
    assert!((field(&line, "i12") - 1.0).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| macpolar(args, dir.path()).status.code();
    assert_eq!(code(&["polarize", "--depth", "-1"]), Some(2));
    assert_eq!(code(&["construct", "--epsilon", "0.7"]), Some(2));
    assert_eq!(code(&["construct", "--lambda", "1.5"]), Some(2));
    assert_eq!(code(&["polarize", "--q", "4"]), Some(2));
    assert_eq!(code(&["polarize", "--channel", "nope"]), Some(2));
    assert_eq!(
        code(&["polarize", "--mode", "mc", "--trials", "0"]),
        Some(2)
    );
    assert_eq!(
        code(&[
            "polarize",
            "--flip",
            "0.1",
            "--depth",
            "3",
            "--max-outputs",
            "4"
        ]),
        Some(3)
    );
    assert_eq!(
        code(&["polarize", "--channel-file", "/nonexistent/ch.json"]),
        Some(4)
    );
}
