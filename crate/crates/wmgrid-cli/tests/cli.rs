use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wmgrid_cli::artifacts::*;
use wmgrid_sim::{PreparedScenario, Scenario, SeedSet};

const SHORT: &str = r#"
schema = 1
name = "short"
model = "tamu4bus"
sample_period = 0.0083
steps = 500

[seeds]
base = 11

[detector]
window = 0.5
thresholds = { chi1 = 1e3, chi2 = 1e3 }
"#;

const ATTACKED: &str = r#"

[[attack]]
dgu = 2
signal = "both"
start = 1.0
kind = "noise_injection"
variance = 1e-4
"#;

fn wmgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmgrid"))
        .args(args)
        .env_remove("WMGRID_OUT")
        .output()
        .unwrap()
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn simulate_to(scn: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--scenario", scn.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    wmgrid(&args)
}

#[test]
fn missing_scenario_is_a_usage_error_naming_the_path() {
    let o = wmgrid(&["simulate", "--scenario", "/no/such/dir/x.scn"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/dir/x.scn"), "{}", stderr(&o));
    let o = wmgrid(&["validate", "--scenario", "/no/such/dir/x.scn"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(wmgrid(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(wmgrid(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_scenario_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "bad.scn", &SHORT.replace("steps = 500", "steps = 500\nduration = 1.0"));
    let o = wmgrid(&["validate", "--scenario", scn.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.scn"), "{}", stderr(&o));
    let o = simulate_to(&scn, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("out").join(MANIFEST_FILE).exists());
}

#[test]
fn validate_reports_bundled_scenarios() {
    for name in ["honest", "destab_fig3", "noise_inject", "replay"] {
        let o = wmgrid(&["validate", "--scenario", name]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("ok ("), "{}", stdout(&o));
        assert!(stdout(&o).contains("thresholds set"));
    }
}

#[test]
fn simulate_writes_consistent_artifacts_and_refuses_to_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "short.scn", SHORT);
    let out = tmp.path().join("run");
    let o = simulate_to(&scn, &out, &["--plots"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in [SIGNALS_FILE, WINDOWS_FILE, MANIFEST_FILE, "voltage.svg", "chi1.svg"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".partial")));

    let manifest = Manifest::parse(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest.steps, 500);
    assert_eq!(manifest.seeds, SeedSet::from_base(11));
    assert!(!manifest.scenario.attacked);
    assert_eq!(manifest.thresholds.len(), 3);
    let archive = read_listed(&out, &manifest, "reduced_dgu3.txt").unwrap();
    let mats = wmgrid_detect::read_matrices(std::str::from_utf8(&archive).unwrap()).unwrap();
    assert_eq!(mats[0].0, "a");
    let signals = read_listed(&out, &manifest, SIGNALS_FILE).unwrap();
    let table = read_signals(signals.as_slice()).unwrap();
    assert_eq!(table.rows.len(), 500);
    assert_eq!(table.columns[0], SIGNALS_TAG);
    let steps = table.column(SIGNALS_TAG).unwrap();
    assert!(steps.iter().enumerate().all(|(k, s)| *s == k as f64));
    let time = table.column("time").unwrap();
    assert!((time[499] - 499.0 * 0.0083).abs() < 1e-12);

    let again = simulate_to(&scn, &out, &[]);
    assert_eq!(again.status.code(), Some(2));
    assert!(stderr(&again).contains("--force"));
    let forced = simulate_to(&scn, &out, &["--force"]);
    assert_eq!(forced.status.code(), Some(0), "{}", stderr(&forced));
}

#[test]
fn same_seed_gives_identical_files_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "short.scn", &format!("{SHORT}{ATTACKED}"));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(simulate_to(&scn, &a, &["--seed", "5"]).status.success());
    assert!(simulate_to(&scn, &b, &["--seed", "5"]).status.success());
    for f in [SIGNALS_FILE, WINDOWS_FILE, MANIFEST_FILE] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let ra = wmgrid(&["report", a.to_str().unwrap()]);
    let rb = wmgrid(&["report", a.to_str().unwrap()]);
    assert_eq!(ra.status.code(), Some(0), "{}", stderr(&ra));
    assert_eq!(ra.stdout, rb.stdout);
    assert!(stdout(&ra).contains("attack onset  1.0000"));

    let c = tmp.path().join("c");
    assert!(simulate_to(&scn, &c, &["--seed", "6"]).status.success());
    assert_ne!(fs::read(a.join(SIGNALS_FILE)).unwrap(), fs::read(c.join(SIGNALS_FILE)).unwrap());
}

#[test]
fn honest_report_has_no_latency() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "short.scn", SHORT);
    let out = tmp.path().join("run");
    assert!(simulate_to(&scn, &out, &[]).status.success());
    let r = stdout(&wmgrid(&["report", out.to_str().unwrap()]));
    assert!(r.contains("attack onset  -"), "{r}");
    let rows: Vec<&str> = r.lines().skip_while(|l| !l.trim_start().starts_with("dgu")).skip(1).take(3).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let cols: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(cols[5], "-", "{row}");
        assert_eq!(cols[6], "-", "{row}");
    }
}

#[test]
fn report_rejects_missing_and_modified_streams() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "short.scn", SHORT);
    let out = tmp.path().join("run");
    assert!(simulate_to(&scn, &out, &[]).status.success());

    let mut text = fs::read_to_string(out.join(WINDOWS_FILE)).unwrap();
    text.push_str("999,1e0,1,0e0,0e0,0,0,0\n");
    fs::write(out.join(WINDOWS_FILE), &text).unwrap();
    let o = wmgrid(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("windows.csv"), "{}", stderr(&o));

    fs::remove_file(out.join(WINDOWS_FILE)).unwrap();
    let o = wmgrid(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("windows.csv"), "{}", stderr(&o));

    fs::remove_file(out.join(MANIFEST_FILE)).unwrap();
    let o = wmgrid(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("manifest.toml"), "{}", stderr(&o));
}

#[test]
fn calibrate_writes_a_loadable_thresholds_file() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "short.scn", &format!("{SHORT}{ATTACKED}"));
    let out = tmp.path().join("cal");
    let args = ["calibrate", "--scenario", scn.to_str().unwrap(), "--out", out.to_str().unwrap(), "--runs", "20"];
    let o = wmgrid(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let th = out.join("thresholds.toml");
    let file = wmgrid_sim::ThresholdsFile::load(&th).unwrap();
    assert_eq!(file.runs, 20);
    assert_eq!(file.seed_base, 1000);
    assert_eq!(file.dgus.len(), 3);

    let o = wmgrid(&args);
    assert_eq!(o.status.code(), Some(2));
    let mut few = args.to_vec();
    few[5] = "3";
    few.push("--force");
    let o = wmgrid(&few);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let run = tmp.path().join("run");
    let o = simulate_to(&scn, &run, &["--thresholds", th.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = Manifest::parse(&fs::read_to_string(run.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(m.thresholds[0].chi1, file.dgus[0].chi1);
}

#[test]
fn unattacked_divergence_exits_with_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = write_scenario(tmp.path(), "div.scn", &SHORT.replace("steps = 500", "steps = 500\ndivergence_bound = 1e-12"));
    let out = tmp.path().join("run");
    let o = simulate_to(&scn, &out, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
    let m = Manifest::parse(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert!(m.outcome.diverged());
}

#[test]
fn csv_streams_round_trip_exactly() {
    let sc = Scenario::parse(&format!("{SHORT}{ATTACKED}")).unwrap();
    let p = PreparedScenario::new(&sc).unwrap();
    let run = wmgrid_sim::run_scenario(&p).unwrap();
    let mut buf = Vec::new();
    write_signals(&mut buf, &run).unwrap();
    let table = read_signals(buf.as_slice()).unwrap();
    assert_eq!(table.columns, signal_columns(3, &[0, 1, 2]));
    for k in [0, 17, 499] {
        let row = &table.rows[k];
        assert_eq!(row[1], run.time[k]);
        assert_eq!(&row[2..8], run.actual.row(k));
        assert_eq!(&row[8..14], run.reported.row(k));
        assert_eq!(*row.last().unwrap(), run.state_norm[k]);
    }

    let mut buf = Vec::new();
    write_windows(&mut buf, &run).unwrap();
    let rows = read_windows(buf.as_slice()).unwrap();
    let total: usize = run.detectors.iter().map(|d| d.windows.len()).sum();
    assert_eq!(rows.len(), total);
    for d in &run.detectors {
        let mine: Vec<&WindowRow> = rows.iter().filter(|r| r.dgu == d.dgu + 1).collect();
        for (r, w) in mine.iter().zip(&d.windows) {
            assert_eq!((r.step, r.time, r.chi1, r.chi2), (w.step, w.time, w.chi1, w.chi2));
            assert_eq!(r.confirmed, w.confirmed);
        }
    }
    assert!(rows.windows(2).all(|w| (w[0].step, w[0].dgu) < (w[1].step, w[1].dgu)));
}

#[test]
fn malformed_csv_and_manifest_are_rejected() {
    assert!(read_windows("a,b\n1,2\n".as_bytes()).is_err());
    let head = WINDOW_COLUMNS.join(",");
    assert!(read_windows(format!("{head}\n1,0.1,0,1,1,0,0,0\n").as_bytes()).is_err());
    assert!(read_windows(format!("{head}\n1,0.1,1,1,1,2,0,0\n").as_bytes()).is_err());
    assert!(read_windows(format!("{head}\n1,x,1,1,1,0,0,0\n").as_bytes()).is_err());
    assert_eq!(read_windows(format!("{head}\n").as_bytes()).unwrap(), vec![]);
    assert!(read_signals("time,signals/1\n".as_bytes()).is_err());
    assert!(read_signals("signals/1,time,a\n0,0,nan-ish\n".as_bytes()).is_err());
    assert!(Manifest::parse("schema = 1").is_err());
    assert!(Manifest::parse("").is_err());
}
