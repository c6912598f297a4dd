//! Detection statistics from run artifacts.

use std::fmt::Write;

use crate::artifacts::{Manifest, WindowRow};

#[derive(Debug, Clone, PartialEq)]
pub struct DguStats {
    pub dgu: usize,
    pub windows: usize,
    pub alarming_windows: usize,
    pub max_chi1: f64,
    pub max_chi2: f64,
    pub first_confirmed: Option<f64>,
    /// First confirmed alarm minus attack onset, when the alarm follows the onset.
    pub latency: Option<f64>,
    /// Alarming windows that end before the attack onset (all of them in an honest run).
    pub false_alarms: usize,
}

pub fn dgu_stats(manifest: &Manifest, windows: &[WindowRow]) -> Vec<DguStats> {
    let mut dgus: Vec<usize> = windows.iter().map(|w| w.dgu).collect();
    dgus.sort_unstable();
    dgus.dedup();
    let onset = manifest.scenario.attack_onset;
    dgus.into_iter()
        .map(|dgu| {
            let rows: Vec<&WindowRow> = windows.iter().filter(|w| w.dgu == dgu).collect();
            let first_confirmed = rows.iter().find(|w| w.confirmed).map(|w| w.time);
            let latency = match (first_confirmed, onset) {
                (Some(t), Some(o)) if t >= o => Some(t - o),
                _ => None,
            };
            let false_alarms = rows
                .iter()
                .filter(|w| w.alarm() && onset.is_none_or(|o| w.time < o))
                .count();
            DguStats {
                dgu,
                windows: rows.len(),
                alarming_windows: rows.iter().filter(|w| w.alarm()).count(),
                max_chi1: rows.iter().map(|w| w.chi1).fold(0.0, f64::max),
                max_chi2: rows.iter().map(|w| w.chi2).fold(0.0, f64::max),
                first_confirmed,
                latency,
                false_alarms,
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |t| format!("{t:.4}"))
}

/// Plain-text report; a pure function of the manifest and window rows.
pub fn render(manifest: &Manifest, stats: &[DguStats]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario      {}", manifest.scenario.name);
    let _ = writeln!(s, "run id        {}", manifest.run_id);
    let _ = writeln!(s, "seed base     {}", manifest.seeds.base);
    let _ = writeln!(
        s,
        "steps         {} x {} s",
        manifest.steps, manifest.sample_period
    );
    let _ = writeln!(s, "attack onset  {}", opt(manifest.scenario.attack_onset));
    let outcome = match manifest.outcome {
        wmgrid_sim::RunOutcome::Completed => "completed".to_string(),
        wmgrid_sim::RunOutcome::Diverged { time, state_norm, .. } => {
            format!("diverged at {time:.4} s (|x| = {state_norm:.3e})")
        }
    };
    let _ = writeln!(s, "outcome       {outcome}");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>4} {:>8} {:>9} {:>12} {:>12} {:>16} {:>10} {:>12}",
        "dgu", "windows", "alarming", "max_chi1", "max_chi2", "first_confirmed", "latency", "false_alarms"
    );
    for d in stats {
        let _ = writeln!(
            s,
            "{:>4} {:>8} {:>9} {:>12.4e} {:>12.4e} {:>16} {:>10} {:>12}",
            d.dgu,
            d.windows,
            d.alarming_windows,
            d.max_chi1,
            d.max_chi2,
            opt(d.first_confirmed),
            opt(d.latency),
            d.false_alarms
        );
    }
    let first = stats
        .iter()
        .filter_map(|d| d.first_confirmed)
        .min_by(f64::total_cmp);
    let _ = writeln!(s);
    let _ = writeln!(s, "first confirmed alarm  {}", opt(first));
    s
}
