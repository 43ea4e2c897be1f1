use std::path::Path;
use std::process::Command;

fn ltvid(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ltvid"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn dataset_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = ltvid(tmp.path(), &["dataset", "--scenario", "ltv", "--seed", "7", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (files(&tmp.path().join("a")), files(&tmp.path().join("b")));
    assert!(a.len() > 3);
    assert_eq!(a, b);
}

#[test]
fn singleton_grid_tune_matches_identify() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(ltvid(d, &["dataset", "--scenario", "ltv", "--seed", "7", "--out", "d"]).status.success());
    let o = ltvid(d, &["identify", "--method", "cosmic", "--lambda", "1.0", "--data", "d", "--out", "m.model"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = ltvid(d, &["tune", "--method", "cosmic", "--grid", "1.0", "--data", "d", "--out", "t.model"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(d.join("m.model")).unwrap(), std::fs::read(d.join("t.model")).unwrap());
    assert!(d.join("m.model.manifest.toml").exists());
}

#[test]
fn control_writes_trajectory_gains_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(ltvid(d, &["dataset", "--scenario", "ltv", "--seed", "7", "--out", "d"]).status.success());
    assert!(ltvid(d, &["identify", "--method", "cosmic", "--lambda", "0.01", "--data", "d", "--out", "m.model"])
        .status
        .success());
    let o = ltvid(d, &["control", "--model", "m.model", "--scenario", "ltv", "--x0", "0.1,0", "--seed", "3", "--out", "t.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("t.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,u\n"));
    assert_eq!(csv.lines().count(), 502);
    assert!(d.join("t.csv.gains.toml").exists());
    assert!(d.join("t.csv.manifest.toml").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(ltvid(d, &["bogus"]).status.code(), Some(1));
    assert_eq!(ltvid(d, &["identify", "--nope"]).status.code(), Some(1));
    assert_eq!(ltvid(d, &["dataset", "--scenario", "ltv", "--out", "x"]).status.code(), Some(1));
    let o = ltvid(d, &["identify", "--method", "cosmic", "--data", "missing", "--out", "m.model"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("loading dataset"));
    assert_eq!(ltvid(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn prediction_bench_table_and_rerun_from_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = ltvid(d, &["--jobs", "4", "bench", "--suite", "prediction", "--seed", "7", "--out", "b"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(d.join("b/table1.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 5 * 6);
    let o = ltvid(d, &["bench", "--manifest", "b/manifest.toml", "--out", "c"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&d.join("b")), files(&d.join("c")));
}
