use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trackkit::core::properties::PropertyProfile;
use trackkit::report::{AnalyzeReport, ClassifyReport, CorpusReport, IndexReport, SimulateReport, Verdict};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trackkit"))
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_untrackable_system() {
    let o = run(&["analyze", path(&data("systems/untrackable_4x2x3.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("untrackable, rank 2 of 3, Θ=0.667"), "{}", stdout(&o));
}

#[test]
fn analyze_uncoupled_system_exits_zero() {
    let o = run(&["analyze", path(&data("corpus/example_01.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("L undefined: no input-output coupling"));
    let o = run(&["analyze", "--json", path(&data("corpus/example_01.json"))]);
    let rep: AnalyzeReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep.verdict, Verdict::Undefined);
}

#[test]
fn analyze_json_and_theta_variant() {
    let file = data("corpus/example_12.json");
    let o = run(&["analyze", path(&file)]);
    assert!(stdout(&o).contains("trackable, rank 2 of 2, Θ=1"));
    let o = run(&[
        "analyze",
        "--json",
        "--theta-variant",
        "quadratic",
        "--r",
        "4",
        path(&data("systems/untrackable_4x2x3.json")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rep: AnalyzeReport = serde_json::from_slice(&o.stdout).unwrap();
    let d = rep.details.unwrap();
    assert_eq!(d.horizon, 4);
    assert!((rep.system_index.unwrap() - 4.0 / 9.0).abs() < 1e-12);
}

#[test]
fn analyze_rejects_short_horizon_and_bad_tolerance() {
    let file = data("corpus/example_10.json");
    assert_eq!(run(&["analyze", "--r", "1", path(&file)]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--tol", "2", path(&file)]).status.code(), Some(2));
}

#[test]
fn classify_examples_13_and_16() {
    for (n, region) in [(13u8, 13u8), (16, 16)] {
        let o = run(&["classify", "--json", path(&data(&format!("corpus/example_{n:02}.json")))]);
        assert_eq!(o.status.code(), Some(0));
        let rep: ClassifyReport = serde_json::from_slice(&o.stdout).unwrap();
        let p: PropertyProfile = rep.profile;
        assert_eq!(p.venn_region, Some(region));
    }
}

#[test]
fn malformed_and_missing_files_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"A\": [[0]], \"B\": [[1]]}").unwrap();
    let o = run(&["classify", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert_eq!(run(&["classify", path(&dir.path().join("none.json"))]).status.code(), Some(2));
    let d = dir.path().join("d.json");
    fs::write(&d, "{\"A\": [[0]], \"B\": [[1]], \"C\": [[1]], \"D\": [[0]]}").unwrap();
    let o = run(&["analyze", path(&d)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"D\""));
}

#[test]
fn index_trackable_and_null_space_references() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.csv");
    fs::write(&r, "k,y1,y2\n1,0.3,-1\n2,2,0.5\n3,-0.7,0.1\n").unwrap();
    let o = run(&["index", "--json", path(&data("corpus/example_12.json")), path(&r)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: IndexReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!((rep.theta.unwrap() - 1.0).abs() < 1e-12);
    assert!(rep.member);

    // C B = [[1,0],[0,8],[1,8]]: the direction (1,1,-1) is orthogonal to its range
    let r = dir.path().join("null.csv");
    fs::write(&r, "k,y1,y2,y3\n1,1,1,-1\n").unwrap();
    let out = dir.path().join("dec.csv");
    let o = run(&["index", "--json", "--out", path(&out), path(&data("systems/untrackable_4x2x3.json")), path(&r)]);
    let rep: IndexReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rep.theta.unwrap() < 1e-12);
    assert!((rep.min_error_bound - 3f64.sqrt()).abs() < 1e-12);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("k,y1,y2,y3,proj1,proj2,proj3,resid1,resid2,resid3\n1,"));
}

#[test]
fn index_rejects_wrong_reference_shape() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.csv");
    fs::write(&r, "k,y1\n1,0.3\n").unwrap();
    assert_eq!(run(&["index", path(&data("corpus/example_12.json")), path(&r)]).status.code(), Some(2));
    fs::write(&r, "").unwrap();
    assert_eq!(run(&["index", path(&data("corpus/example_12.json")), path(&r)]).status.code(), Some(2));
    // example 10 has L = 2, so references must start at k = 2
    fs::write(&r, "k,y1\n1,0.3\n2,0.1\n").unwrap();
    assert_eq!(run(&["index", path(&data("corpus/example_10.json")), path(&r)]).status.code(), Some(2));
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.csv");
    fs::write(&r, "k,y1\n2,1\n3,-0.5\n4,0.25\n5,2\n").unwrap();
    let out = dir.path().join("run.csv");
    let o = run(&[
        "simulate",
        "--json",
        "--mode",
        "closed-loop",
        "--x0=-1,0.5",
        "--out",
        path(&out),
        path(&data("corpus/example_10.json")),
        path(&r),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: SimulateReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rep.error_norm < 1e-8);
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,u1,y1,yref1");
    assert_eq!(lines.len(), 7);
    // k = 0: input defined, reference not yet
    assert!(lines[1].starts_with("0,") && lines[1].ends_with(','));
    // k = 5: past r - L, no input
    assert!(lines[6].starts_with("5,,"));
    let last: Vec<&str> = lines[6].split(',').collect();
    assert!((last[2].parse::<f64>().unwrap() - 2.0).abs() < 1e-9);

    let o = run(&["simulate", "--x0", "1", path(&data("corpus/example_10.json")), path(&r)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_projected_mode_text() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.csv");
    fs::write(&r, "k,y1,y2,y3\n1,1,0,0\n2,0,1,0\n3,0,0,1\n").unwrap();
    let o = run(&["simulate", "--mode", "projected", path(&data("systems/untrackable_4x2x3.json")), path(&r)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("mode: projected"));
    assert!(text.contains("best effort"));
}

#[test]
fn corpus_bundled_and_directory() {
    let o = run(&["corpus", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let rep: CorpusReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rep.all_match);
    assert_eq!(rep.rows.len(), 17);

    let o = run(&["corpus", path(&data("corpus"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("17 of 17 examples match"));

    // swap two systems: both rows mismatch
    let dir = tempfile::tempdir().unwrap();
    for n in 1..=17 {
        let src = data(&format!("corpus/example_{n:02}.json"));
        let dst_n = match n {
            12 => 11,
            11 => 12,
            n => n,
        };
        fs::copy(src, dir.path().join(format!("example_{dst_n:02}.json"))).unwrap();
    }
    let o = run(&["corpus", "--json", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let rep: CorpusReport = serde_json::from_slice(&o.stdout).unwrap();
    let bad: Vec<u8> = rep.rows.iter().filter(|r| !r.matches).map(|r| r.example).collect();
    assert_eq!(bad, vec![11, 12]);

    fs::remove_file(dir.path().join("example_03.json")).unwrap();
    let o = run(&["corpus", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("file missing"));
}

#[test]
fn help_lists_subcommands() {
    let o = run(&["--help"]);
    let text = stdout(&o);
    for cmd in ["analyze", "classify", "index", "simulate", "corpus"] {
        assert!(text.contains(cmd));
    }
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}
