//! End-to-end checks of the command-line binary: exit codes, output shape,
//! cache reuse and cache corruption.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gross-stark")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", stdout(o)))
}

#[test]
fn classgroup_lists_every_class_of_689() {
    let o = run(&["classgroup", "--disc", "689", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["order"], 8);
    assert_eq!(v["cyclic"], true);
    let classes = v["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 8);
    let mut orders: Vec<u64> = classes.iter().map(|c| c["order"].as_u64().unwrap()).collect();
    orders.sort();
    assert_eq!(orders, [1, 2, 4, 4, 8, 8, 8, 8]);
    let fixed = classes.iter().filter(|c| c["two_torsion"] == true).count();
    assert_eq!(fixed, 2);
}

#[test]
fn zeta_reports_the_dirichlet_check() {
    let o = run(&["zeta", "--disc", "12", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    for row in v["dirichlet"].as_array().unwrap() {
        assert_eq!(row["agree"], true, "{row}");
    }
    assert_eq!(v["dirichlet"][1]["sum"], "1/6");
}

#[test]
fn invalid_input_exits_with_2() {
    for args in [
        &["classgroup", "--disc", "7"][..],
        &["classgroup", "--disc", "-3"],
        &["measure", "--disc", "689", "--prime", "5", "--level", "2"],
        &["measure", "--disc", "689", "--prime", "3", "--smooth", "3", "--level", "2"],
        &["measure", "--disc", "689", "--prime", "3", "--level", "2", "--class", "[1,1,-3]"],
        &["unit", "--disc", "689", "--prime", "3", "--level", "4", "--precision", "2"],
        &["frobnicate"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn errors_are_reported_as_json_when_asked() {
    let o = run(&["classgroup", "--disc", "7", "--json"]);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert_eq!(v["exit"], 2);
    assert!(v["error"].as_str().is_some());
}

#[test]
fn measure_cache_is_written_then_reused() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = ["measure", "--disc", "689", "--prime", "3", "--level", "3", "--class", "[-20,17,5]", "--cache-dir", d];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert!(files >= 1);
    let second = run(&args);
    assert_eq!(second.status.code(), Some(0));
    assert!(stdout(&second).contains("cache: hit"), "{}", stdout(&second));
    assert!(stdout(&second).contains("total mass 0"));
}

#[test]
fn table_json_is_byte_identical_with_a_warm_cache() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = ["table", "--disc", "12", "--prime", "5", "--level", "4", "--json", "--cache-dir", d];
    let cold = run(&args);
    assert_eq!(cold.status.code(), Some(0), "{}", stderr(&cold));
    let warm = run(&args);
    assert_eq!(warm.status.code(), Some(0));
    assert_eq!(cold.stdout, warm.stdout);
    let v = json(&warm);
    assert_eq!(v["classes"].as_array().unwrap().len(), 2);
    for c in v["classes"].as_array().unwrap() {
        assert_eq!(c["trace_law"], true);
        assert_eq!(c["frobenius_fixed"], true);
        assert_eq!(c["power"], 6);
    }
}

#[test]
fn unit_for_a_single_class() {
    let o = run(&["unit", "--disc", "40", "--prime", "7", "--level", "4", "--class", "[-3,2,3]"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("[-3,2,3]"), "{out}");
    assert!(out.contains("trace ok"), "{out}");
}

fn corrupt_one_ball(path: &Path) {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let balls = v["balls"].as_array_mut().unwrap();
    // move one unit of mass between two balls so the total stays zero
    let bump = |b: &mut serde_json::Value, by: i64| {
        let x: i64 = b[2].as_str().unwrap().parse().unwrap();
        b[2] = serde_json::Value::String((x + by).to_string());
    };
    bump(&mut balls[0], 1);
    bump(&mut balls[1], -1);
    std::fs::write(path, serde_json::to_string(&v).unwrap()).unwrap();
}

#[test]
fn quick_selftest_passes_then_catches_a_corrupted_cache() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let start = Instant::now();
    let ok = run(&["selftest", "--quick", "--cache-dir", d]);
    assert!(start.elapsed() < Duration::from_secs(60), "quick selftest took {:?}", start.elapsed());
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("checks passed"));

    let target = dir.path().join("measure-d12-p5-c7-f-1_2_2-r2.json");
    assert!(target.exists(), "missing {}", target.display());
    corrupt_one_ball(&target);
    let bad = run(&["selftest", "--quick", "--cache-dir", d]);
    assert_eq!(bad.status.code(), Some(1), "{}", stdout(&bad));
    let text = stdout(&bad);
    let failing: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert!(failing.iter().any(|l| l.contains("refinement") && l.contains("disc 12")), "{failing:?}");
}
