use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trimatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const TOY: &str = "frame_index,x,y\n0,0,0\n0,10,0\n1,1,0\n1,11,0\n";

#[test]
fn bmcf_on_toy_file_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "det.csv", TOY);
    let out = dir.path().join("tracks.csv");
    for _ in 0..2 {
        let o = run(&["track", "--input", p(&input), "--output", p(&out), "--method", "bmcf"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "track_id,frame_index,x,y\n1,0,0.0,0.0\n1,1,1.0,0.0\n2,0,10.0,0.0\n2,1,11.0,0.0\n"
    );
    let diag: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tracks.diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["method"], "bmcf");
    assert_eq!(diag["space_sizes"], serde_json::json!([1]));
}

#[test]
fn larger_delta_reports_larger_spaces() {
    let dir = TempDir::new().unwrap();
    let sim = dir.path().join("sim");
    let o = run(&["simulate", "--output", p(&sim), "--seed", "5"]);
    assert!(o.status.success());
    let det = sim.join("detections.csv");
    let sizes = |delta: &str| -> Vec<u64> {
        let out = dir.path().join(format!("t{delta}.csv"));
        let o = run(&["track", "--input", p(&det), "--output", p(&out), "--delta", delta]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let d: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("t{delta}.diagnostics.json"))).unwrap())
                .unwrap();
        d["space_sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect()
    };
    let (small, big) = (sizes("0"), sizes("3"));
    assert_eq!(small.len(), big.len());
    assert!(small.iter().zip(&big).all(|(a, b)| a <= b));
    assert!(small.iter().zip(&big).any(|(a, b)| a < b));
}

#[test]
fn malformed_row_is_a_parse_error_naming_the_line() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "bad.csv", "frame_index,x,y\n0,1,2\n0,oops,3\n");
    let o = run(&["track", "--input", p(&input), "--output", p(&dir.path().join("t.csv"))]);
    assert_eq!(o.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn config_errors_have_their_own_exit_code() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "det.csv", TOY);
    let cfg = write(dir.path(), "c.toml", "[tracker]\nlambda_event = 5.0\n");
    let o = run(&["track", "--input", p(&input), "--output", p(&dir.path().join("t.csv")), "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(78));
    let o = run(&["track", "--input", p(&input)]);
    assert_eq!(o.status.code(), Some(64));
    let o = run(&["track", "--input", p(&dir.path().join("missing.csv")), "--output", "x.csv"]);
    assert_eq!(o.status.code(), Some(70));
}

#[test]
fn simulate_is_reproducible_with_default_dimensions() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["simulate", "--output", p(&a), "--seed", "11"]).status.success());
    assert!(run(&["simulate", "--output", p(&b), "--seed", "11"]).status.success());
    for f in ["detections.csv", "truth.csv", "truth_matchings.txt", "metadata.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["cells"], 375);
    assert_eq!(meta["frames"], 50);
    assert_eq!(meta["seed"], 11);
    assert_eq!(fs::read_to_string(a.join("truth_matchings.txt")).unwrap().lines().count(), 49);
}

#[test]
fn evaluate_truth_against_itself_and_a_swap() {
    let dir = TempDir::new().unwrap();
    let truth = write(
        dir.path(),
        "truth.csv",
        "track_id,frame_index,x,y\n1,0,0,0\n1,1,1,0\n1,2,2,0\n2,0,0,5\n2,1,1,5\n2,2,2,5\n",
    );
    let out = dir.path().join("same.csv");
    let o = run(&["evaluate", "--pred", p(&truth), "--truth", p(&truth), "--output", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["whole"]["f_beta"], 1.0);
    assert_eq!(s["path_identity"], 1);
    assert!(dir.path().join("same.summary.json").exists());

    let swapped = write(
        dir.path(),
        "swap.csv",
        "track_id,frame_index,x,y\n1,0,0,0\n1,1,1,0\n1,2,2,5\n2,0,0,5\n2,1,1,5\n2,2,2,0\n",
    );
    let out = dir.path().join("swap_report.csv");
    let o = run(&["evaluate", "--pred", p(&swapped), "--truth", p(&truth), "--output", p(&out)]);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "pair_identity").unwrap();
    let ids: Vec<String> = rdr.records().map(|r| r.unwrap()[col].to_string()).collect();
    assert_eq!(ids, ["1", "0"]);
}

#[test]
fn evaluate_rejects_missing_frame() {
    let dir = TempDir::new().unwrap();
    let truth = write(dir.path(), "truth.csv", "track_id,frame_index,x,y\n1,0,0,0\n1,1,1,0\n1,2,2,0\n");
    let pred = write(dir.path(), "pred.csv", "track_id,frame_index,x,y\n1,0,0,0\n1,2,2,0\n");
    let o = run(&["evaluate", "--pred", p(&pred), "--truth", p(&truth), "--output", p(&dir.path().join("r.csv"))]);
    assert_eq!(o.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&o.stderr).contains("frame 1 is missing"));
}

#[test]
fn experiment_writes_tables_reproducibly() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "grid.toml",
        "[experiment]\nn0 = [6.0]\nframes = 10\nreplicates = 2\ndeltas = [0, 1, 2, 3]\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["experiment", "--config", p(&cfg), "--output", p(out), "--seed", "4"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["results.csv", "aggregate.csv", "series.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("timing.csv").exists());

    let mut rdr = csv::Reader::from_path(a.join("aggregate.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    for h in ["f1_mean", "f1_err", "eval_ratio", "eval_ratio_theory"] {
        assert!(headers.iter().any(|x| x == h), "{h}");
    }
    let theory = headers.iter().position(|h| h == "eval_ratio_theory").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let t: Vec<&str> = rows.iter().map(|r| &r[theory]).collect();
    assert_eq!(t[0], "");
    assert_eq!(t[1], "");
    for (cell, want) in t[2..].iter().zip([9.0, 2.78, 1.96]) {
        assert!((cell.parse::<f64>().unwrap() - want).abs() < 0.005, "{cell}");
    }

    let results = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 5);
}
