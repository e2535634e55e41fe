//! End-to-end checks of the `wave` binary on a coarse grid.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wave::output::{read_path_table, PATH_FILE, SLICE_HEADER};
use wave::Checkpoint;
use wave_core::continuation::Stage;

const COARSE: &str = r#"{"grid": {"nx": 461, "ny": 11}}"#;

fn wave(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wave"))
        .args(args)
        .env("WAVE_OUT", out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn checkpoints(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(out.join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn default_config_reaches_the_physical_system() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", "{}");
    let out = tmp.path().join("out");
    let o = wave(&["run", s(&cfg)], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_path_table(&out.join(PATH_FILE)).unwrap();
    let last = rows.last().unwrap();
    assert_eq!(last.stage, Stage::C);
    assert_eq!(last.family_param, 1.0);
    assert!(rows.iter().all(|r| r.invariants_ok()));
    assert!(out.join("summary.json").exists());
    assert!(out.join("profile_C_1.000000_phi.csv").exists());
}

#[test]
fn non_positive_line_diffusivity_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"params": {"D": 0}}"#);
    let o = wave(&["run", s(&cfg)], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("\"kind\":\"validation\"") && err.contains("`D`"), "{err}");
}

#[test]
fn unreadable_config_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wave(&["run", s(&tmp.path().join("missing.json"))], tmp.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn stage_a_only_writes_wentzell_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", COARSE);
    let out = tmp.path().join("out");
    let o = wave(&["run", s(&cfg), "--stop-after", "a"], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_path_table(&out.join(PATH_FILE)).unwrap();
    assert!(rows.len() > 1);
    assert!(rows.iter().all(|r| r.stage == Stage::A && r.sandwich_ok.is_none()));
    assert_eq!(rows.last().unwrap().family_param, 1.0);
}

#[test]
fn identical_configs_give_identical_tables_and_resume_reproduces_them() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", COARSE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(wave(&["run", s(&cfg)], &a).status.success());
    assert!(wave(&["run", s(&cfg)], &b).status.success());
    let full = fs::read(a.join(PATH_FILE)).unwrap();
    assert_eq!(full, fs::read(b.join(PATH_FILE)).unwrap());

    let r = tmp.path().join("r");
    assert!(wave(&["run", s(&cfg), "--stop-after", "a"], &r).status.success());
    let last = checkpoints(&r).pop().unwrap();
    let o = wave(&["resume", s(&last), s(&cfg)], &r);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(full, fs::read(r.join(PATH_FILE)).unwrap());
}

#[test]
fn checkpoint_round_trip_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", COARSE);
    let out = tmp.path().join("out");
    assert!(wave(&["run", s(&cfg), "--stop-after", "b"], &out).status.success());
    for p in checkpoints(&out) {
        let text = fs::read_to_string(&p).unwrap();
        let ckpt = Checkpoint::from_json(&text, &p).unwrap();
        assert_eq!(ckpt.to_json(), text, "{}", p.display());
    }
}

#[test]
fn resume_rejects_foreign_schema_and_edited_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", COARSE);
    let out = tmp.path().join("out");
    assert!(wave(&["run", s(&cfg), "--stop-after", "a"], &out).status.success());
    let ckpt = checkpoints(&out).pop().unwrap();

    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&ckpt).unwrap()).unwrap();
    v["schema_version"] = 99.into();
    let foreign = write_config(tmp.path(), "foreign.json", &v.to_string());
    let o = wave(&["resume", s(&foreign), s(&cfg)], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema_mismatch"));

    let edited = write_config(tmp.path(), "edited.json", r#"{"grid": {"nx": 461, "ny": 11}, "params": {"mu": 1.5}}"#);
    let o = wave(&["resume", s(&ckpt), s(&edited)], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config_hash_mismatch"));
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(record["exit_code"], 2);
}

#[test]
fn profile_slices_of_both_families() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", COARSE);
    let out = tmp.path().join("out");
    assert!(wave(&["run", s(&cfg), "--stop-after", "b"], &out).status.success());
    let all = checkpoints(&out);
    let (first, last) = (&all[0], all.last().unwrap());

    let csv = tmp.path().join("w.csv");
    assert!(wave(&["profile", s(first), s(&csv)], &out).status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SLICE_HEADER));
    assert_eq!(lines.clone().count(), 461);
    assert!(lines.all(|l| l.ends_with(',')), "phi column must be empty");

    assert!(wave(&["profile", s(last), s(&csv)], &out).status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().skip(1).all(|l| !l.ends_with(',')));
}

#[test]
fn truncated_checkpoint_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", COARSE);
    let out = tmp.path().join("out");
    assert!(wave(&["run", s(&cfg), "--stop-after", "a"], &out).status.success());
    let text = fs::read_to_string(&checkpoints(&out)[0]).unwrap();
    let cut = write_config(tmp.path(), "cut.json", &text[..text.len() / 3]);
    let o = wave(&["profile", s(&cut), s(&tmp.path().join("p.csv"))], &out);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("\"kind\":\"parse\""));
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", COARSE);
    let out = tmp.path().join("out");
    let o = wave(&["run", s(&cfg), "--stop-after", "a", "--sweep", "D=3,4"], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let c3 = read_path_table(&out.join("D_3").join(PATH_FILE)).unwrap();
    let c4 = read_path_table(&out.join("D_4").join(PATH_FILE)).unwrap();
    // a faster line pulls the front harder
    assert!(c4.last().unwrap().c > c3.last().unwrap().c);
}

#[test]
fn oned_and_symbol_scan_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"grid": {"nx": 461, "ny": 11}, "symbol_scan": {"n": 101}}"#,
    );
    let out = tmp.path().join("out");
    let o = wave(&["oned", s(&cfg)], &out);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("c = 0.2634361"));
    assert_eq!(fs::read_to_string(out.join("oned.csv")).unwrap().lines().count(), 462);

    let o = wave(&["symbol-scan", s(&cfg)], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let scan = fs::read_to_string(out.join("symbol_scan_eps_1.000000.csv")).unwrap();
    assert_eq!(scan.lines().next(), Some("xi,re_F,im_F,abs_F"));
    assert_eq!(scan.lines().count(), 102);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("symbol_scan.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 2);
    assert!(summary.as_array().unwrap().iter().all(|r| r["zero_free"] == true));
}
