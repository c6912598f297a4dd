//! Subcommand implementations, independent of argument parsing.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use wmgrid_detect::CalibrationOptions;
use wmgrid_sim::scenario::{bundled_scenario, SeedSection};
use wmgrid_sim::{
    calibrate, parse_scenario, run_scenario, DguThresholds, PreparedScenario, Scenario, ThresholdsFile, TimeSeries,
};

use crate::artifacts::{
    read_listed, read_signals, read_windows, sha256_hex, write_signals, write_windows, FileEntry, Manifest,
    ScenarioInfo, MANIFEST_FILE, MANIFEST_SCHEMA, SIGNALS_FILE, WINDOWS_FILE,
};
use crate::report::{dgu_stats, render};
use crate::{plots, CliError};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THRESHOLDS_FILE: &str = "thresholds.toml";
pub const OUT_ENV: &str = "WMGRID_OUT";

/// A scenario together with the exact text it was parsed from.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub text: String,
    /// File path or `bundled:<name>`.
    pub source: String,
}

/// Loads a scenario file; a name without a matching file falls back to the bundled set.
pub fn load_scenario(arg: &str) -> Result<LoadedScenario, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let file = parse_scenario(&text).map_err(|e| CliError::from(e.at(path)))?;
        return Ok(LoadedScenario {
            scenario: Scenario {
                file,
                base_dir: path.parent().map(Path::to_path_buf),
            },
            text,
            source: path.display().to_string(),
        });
    }
    if let Some(text) = bundled_scenario(arg) {
        let name = arg.trim_end_matches(".scn");
        return Ok(LoadedScenario {
            scenario: Scenario::parse(text)?,
            text: text.to_string(),
            source: format!("bundled:{name}"),
        });
    }
    Err(CliError::Usage(format!("{arg}: no such scenario file or bundled scenario")))
}

fn apply_seed(sc: &mut Scenario, seed: Option<u64>) {
    if let Some(base) = seed {
        sc.file.seeds = SeedSection {
            base,
            ..SeedSection::default()
        };
    }
}

fn default_out(root: Option<&Path>, name: &str) -> PathBuf {
    let root = root
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(name)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn check_target(dir: &Path, guard: &str, force: bool) -> Result<(), CliError> {
    let marker = dir.join(guard);
    if marker.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} already exists; pass --force to overwrite",
            marker.display()
        )));
    }
    Ok(())
}

/// Writes `bytes` to a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    pub scenario: String,
    pub out: Option<PathBuf>,
    pub out_root: Option<PathBuf>,
    pub seed: Option<u64>,
    pub thresholds: Option<PathBuf>,
    pub plots: bool,
    pub force: bool,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub summary: String,
}

fn threshold_list(p: &PreparedScenario) -> Vec<DguThresholds> {
    p.detectors
        .iter()
        .filter_map(|d| {
            d.thresholds.map(|t| DguThresholds {
                index: d.dgu + 1,
                chi1: t.chi1,
                chi2: t.chi2,
            })
        })
        .collect()
}

fn encode<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut BufWriter<&mut Vec<u8>>) -> Result<(), crate::artifacts::ArtifactError>,
{
    let mut buf = Vec::new();
    {
        let mut w = BufWriter::new(&mut buf);
        f(&mut w).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(buf)
}

pub fn simulate(args: &SimulateArgs) -> Result<SimulateOutput, CliError> {
    let mut loaded = load_scenario(&args.scenario)?;
    apply_seed(&mut loaded.scenario, args.seed);
    let mut prepared = PreparedScenario::new(&loaded.scenario)?;
    if let Some(path) = &args.thresholds {
        let file = ThresholdsFile::load(path)?;
        prepared.apply_thresholds(&file).map_err(|e| CliError::from(e.at(path)))?;
    }
    let name = prepared.scenario.name.clone();
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| default_out(args.out_root.as_deref(), &name));
    check_target(&dir, MANIFEST_FILE, args.force)?;

    let series = run_scenario(&prepared)?;
    let signals = encode(|w| write_signals(w, &series))?;
    let windows = encode(|w| write_windows(w, &series))?;
    write_atomic(&dir.join(SIGNALS_FILE), &signals)?;
    write_atomic(&dir.join(WINDOWS_FILE), &windows)?;
    let mut files = vec![
        FileEntry {
            name: SIGNALS_FILE.to_string(),
            sha256: sha256_hex(&signals),
        },
        FileEntry {
            name: WINDOWS_FILE.to_string(),
            sha256: sha256_hex(&windows),
        },
    ];
    for d in &prepared.detectors {
        let name = format!("reduced_dgu{}.txt", d.dgu + 1);
        let text = d.model.to_archive();
        write_atomic(&dir.join(&name), text.as_bytes())?;
        files.push(FileEntry {
            name,
            sha256: sha256_hex(text.as_bytes()),
        });
    }

    let thresholds = threshold_list(&prepared);
    let seeds = series.seeds;
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        tool_version: TOOL_VERSION.to_string(),
        run_id: Manifest::run_id(&loaded.text, &seeds, &thresholds, TOOL_VERSION),
        scenario: ScenarioInfo {
            name: name.clone(),
            source: loaded.source.clone(),
            sha256: sha256_hex(loaded.text.as_bytes()),
            attacked: !prepared.attacks.is_empty(),
            attack_onset: prepared.attacks.iter().map(|a| a.start_time).min_by(f64::total_cmp),
        },
        seeds,
        steps: series.steps(),
        sample_period: prepared.ts,
        window_samples: prepared.detector_config.window,
        outcome: series.outcome,
        thresholds,
        files,
    };
    // The manifest goes last so a partial run never looks complete.
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_toml().as_bytes())?;

    if args.plots {
        write_plots(&dir, &manifest, &signals, &windows)?;
    }
    let summary = summarize(&manifest, &series);
    if series.outcome.diverged() && !manifest.scenario.attacked {
        return Err(CliError::Runtime(format!(
            "unattacked run diverged; artifacts in {}\n{summary}",
            dir.display()
        )));
    }
    Ok(SimulateOutput { dir, manifest, summary })
}

fn write_plots(dir: &Path, manifest: &Manifest, signals: &[u8], windows: &[u8]) -> Result<(), CliError> {
    let table = read_signals(signals)?;
    let rows = read_windows(windows)?;
    let th: Vec<(usize, f64)> = manifest.thresholds.iter().map(|t| (t.index, t.chi1)).collect();
    plots::voltage_plot(&dir.join("voltage.svg"), &table).map_err(|e| CliError::Runtime(e.to_string()))?;
    plots::chi1_plot(&dir.join("chi1.svg"), &rows, &th).map_err(|e| CliError::Runtime(e.to_string()))
}

fn summarize(manifest: &Manifest, series: &TimeSeries) -> String {
    let outcome = match series.outcome {
        wmgrid_sim::RunOutcome::Completed => "completed".to_string(),
        wmgrid_sim::RunOutcome::Diverged { time, .. } => format!("diverged at {time:.4} s"),
    };
    let alarm = series
        .first_confirmed()
        .map_or_else(|| "none".to_string(), |t| format!("{t:.4} s"));
    format!(
        "{}: {} steps, {outcome}, first confirmed alarm {alarm}, run id {}",
        manifest.scenario.name,
        manifest.steps,
        &manifest.run_id[..12]
    )
}

#[derive(Debug, Clone, Default)]
pub struct CalibrateArgs {
    pub scenario: String,
    pub out: Option<PathBuf>,
    pub out_root: Option<PathBuf>,
    pub runs: usize,
    pub seed: u64,
    pub force: bool,
}

/// Runs attack-free copies of a scenario and writes `thresholds.toml`; returns its path.
pub fn calibrate_cmd(args: &CalibrateArgs) -> Result<(PathBuf, ThresholdsFile), CliError> {
    let mut loaded = load_scenario(&args.scenario)?;
    loaded.scenario.file.attacks.clear();
    loaded.scenario.file.detector.thresholds = None;
    loaded.scenario.file.detector.thresholds_file = None;
    loaded.scenario.file.detector.dgu_thresholds.clear();
    let prepared = PreparedScenario::new(&loaded.scenario)?;
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| default_out(args.out_root.as_deref(), &prepared.scenario.name));
    check_target(&dir, THRESHOLDS_FILE, args.force)?;
    let file = calibrate(
        &prepared,
        args.runs,
        args.seed,
        &CalibrationOptions::default(),
        &sha256_hex(loaded.text.as_bytes()),
    )
    .map_err(|e| match e {
        wmgrid_sim::SimError::Detect(d) => CliError::Usage(d.to_string()),
        other => CliError::from(other),
    })?;
    let path = dir.join(THRESHOLDS_FILE);
    write_atomic(&path, file.to_toml().as_bytes())?;
    Ok((path, file))
}

/// Reads a run directory and renders the detection report.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath)
        .map_err(|_| CliError::Usage(format!("{}: missing stream {MANIFEST_FILE}", mpath.display())))?;
    let manifest = Manifest::parse(&text)?;
    let windows = read_listed(dir, &manifest, WINDOWS_FILE)?;
    let rows = read_windows(windows.as_slice())?;
    Ok(render(&manifest, &dgu_stats(&manifest, &rows)))
}

/// Parses and prepares a scenario without running it.
pub fn validate(scenario: &str) -> Result<String, CliError> {
    let loaded = load_scenario(scenario)?;
    let p = PreparedScenario::new(&loaded.scenario)?;
    let thresholds = if p.detectors.iter().all(|d| d.thresholds.is_some()) {
        "set"
    } else {
        "uncalibrated"
    };
    Ok(format!(
        "{}: ok ({} DGUs, {} steps of {} s, {} attack(s), {} detector(s), thresholds {thresholds})",
        p.scenario.name,
        p.n_dgu(),
        p.steps,
        p.ts,
        p.attacks.len(),
        p.detectors.len()
    ))
}
