//! Scenario files (TOML, conventionally `*.scn`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wmgrid_attack::{AttackSpec, AttackTemplate, TargetSignal};
use wmgrid_detect::Thresholds;
use wmgrid_droop::WatermarkChannels;

use crate::seeds::SeedSet;
use crate::thresholds::DguThresholds;
use crate::SimError;

pub const SCENARIO_SCHEMA: u32 = 1;

pub const HONEST: &str = include_str!("../scenarios/honest.scn");
pub const DESTAB_FIG3: &str = include_str!("../scenarios/destab_fig3.scn");
pub const NOISE_INJECT: &str = include_str!("../scenarios/noise_inject.scn");
pub const REPLAY: &str = include_str!("../scenarios/replay.scn");

/// Bundled scenarios by file name.
pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".scn") {
        "honest" => Some(HONEST),
        "destab_fig3" => Some(DESTAB_FIG3),
        "noise_inject" => Some(NOISE_INJECT),
        "replay" => Some(REPLAY),
        _ => None,
    }
}

pub const BUNDLED_SCENARIOS: [&str; 4] = ["honest.scn", "destab_fig3.scn", "noise_inject.scn", "replay.scn"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: u32,
    pub name: String,
    /// Bundled model name, or a model file path relative to the scenario file.
    pub model: String,
    #[serde(default)]
    pub discretization: DiscretizationName,
    pub sample_period: f64,
    /// Either `duration` (seconds, a whole number of samples) or `steps`.
    pub duration: Option<f64>,
    pub steps: Option<usize>,
    #[serde(default = "default_divergence_bound")]
    pub divergence_bound: f64,
    #[serde(default)]
    pub seeds: SeedSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub watermark: WatermarkSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(rename = "attack", default)]
    pub attacks: Vec<AttackSection>,
    #[serde(rename = "load_step", default)]
    pub load_steps: Vec<LoadStep>,
}

fn default_divergence_bound() -> f64 {
    1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiscretizationName {
    #[default]
    Zoh,
    Tustin,
}

/// Base seed plus optional per-stream overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    #[serde(default)]
    pub base: u64,
    pub process: Option<u64>,
    pub measurement: Option<u64>,
    pub watermark: Option<u64>,
    pub attack: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Continuous-time process-noise intensity per state.
    #[serde(default = "default_noise")]
    pub process_variance: f64,
    #[serde(default = "default_noise")]
    pub measurement_variance: f64,
}

fn default_noise() -> f64 {
    1e-8
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            process_variance: default_noise(),
            measurement_variance: default_noise(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSelection {
    #[default]
    Both,
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WatermarkSection {
    pub variance: f64,
    #[serde(default)]
    pub channels: ChannelSelection,
}

impl Default for WatermarkSection {
    fn default() -> Self {
        Self {
            variance: 1e-7,
            channels: ChannelSelection::Both,
        }
    }
}

impl WatermarkSection {
    pub fn channels(&self) -> WatermarkChannels {
        match self.channels {
            ChannelSelection::Both => WatermarkChannels { p: true, q: true },
            ChannelSelection::P => WatermarkChannels { p: true, q: false },
            ChannelSelection::Q => WatermarkChannels { p: false, q: true },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    #[default]
    Sliding,
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    /// Window length in seconds.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default)]
    pub mode: WindowMode,
    /// Sliding stride in samples.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_confirm")]
    pub confirm: usize,
    /// One-based DGU indices that run a detector; all when absent.
    pub dgus: Option<Vec<usize>>,
    /// Thresholds shared by every detector.
    pub thresholds: Option<Thresholds>,
    /// Calibrated thresholds file, relative to the scenario file.
    pub thresholds_file: Option<String>,
    /// Per-DGU thresholds given inline.
    #[serde(default, rename = "dgu_thresholds")]
    pub dgu_thresholds: Vec<DguThresholds>,
    /// Divisor of the reported indicators; the watermark variance when absent.
    pub indicator_unit: Option<f64>,
}

fn default_window() -> f64 {
    2.0
}

fn default_stride() -> usize {
    1
}

fn default_confirm() -> usize {
    2
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            window: default_window(),
            mode: WindowMode::Sliding,
            stride: default_stride(),
            confirm: default_confirm(),
            dgus: None,
            thresholds: None,
            thresholds_file: None,
            dgu_thresholds: Vec::new(),
            indicator_unit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSection {
    /// One-based DGU index.
    pub dgu: usize,
    pub signal: TargetSignal,
    pub start: f64,
    /// Defaults to the end of the run.
    pub end: Option<f64>,
    #[serde(flatten)]
    pub template: AttackTemplate,
}

/// Step change of one load's demand, per-unit on the model power base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadStep {
    pub time: f64,
    /// One-based index into the model's load list.
    pub load: usize,
    #[serde(default)]
    pub dp: f64,
    #[serde(default)]
    pub dq: f64,
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, SimError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
    file.validate()?;
    Ok(file)
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Scenario(m));
        if self.schema != SCENARIO_SCHEMA {
            return bad(format!("unsupported scenario schema {} (expected {SCENARIO_SCHEMA})", self.schema));
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return bad("sample_period must be positive".into());
        }
        self.steps()?;
        if !(self.divergence_bound > 0.0) {
            return bad("divergence_bound must be positive".into());
        }
        let n = &self.noise;
        if !(n.process_variance >= 0.0 && n.measurement_variance > 0.0)
            || !n.process_variance.is_finite()
            || !n.measurement_variance.is_finite()
        {
            return bad("noise variances must be finite; measurement variance must be positive".into());
        }
        if !(self.watermark.variance >= 0.0 && self.watermark.variance.is_finite()) {
            return bad("watermark variance must be non-negative".into());
        }
        let d = &self.detector;
        if !(d.window > 0.0 && d.window.is_finite()) || d.stride == 0 || d.confirm == 0 {
            return bad("detector window, stride and confirm must be positive".into());
        }
        let sources = [d.thresholds.is_some(), d.thresholds_file.is_some(), !d.dgu_thresholds.is_empty()];
        if sources.iter().filter(|b| **b).count() > 1 {
            return bad("give only one of detector.thresholds, detector.thresholds_file, detector.dgu_thresholds".into());
        }
        for t in &d.dgu_thresholds {
            if t.index == 0 || !(t.chi1 > 0.0 && t.chi2 > 0.0) || !t.chi1.is_finite() || !t.chi2.is_finite() {
                return bad(format!("detector.dgu_thresholds for DGU {} must be positive with a one-based index", t.index));
            }
        }
        if let Some(th) = d.thresholds {
            if !(th.chi1 > 0.0 && th.chi2 > 0.0) {
                return bad("thresholds must be positive".into());
            }
        }
        if let Some(u) = d.indicator_unit {
            if !(u > 0.0 && u.is_finite()) {
                return bad("detector.indicator_unit must be positive".into());
            }
        }
        if let Some(list) = &d.dgus {
            if list.iter().any(|&i| i == 0) {
                return bad("detector.dgus are one-based".into());
            }
        }
        let end = self.duration_seconds()?;
        for (k, a) in self.attacks.iter().enumerate() {
            if a.dgu == 0 {
                return bad(format!("attack {}: dgu is one-based", k + 1));
            }
            self.attack_spec(a, end)
                .validate()
                .map_err(|e| SimError::Scenario(format!("attack {}: {e}", k + 1)))?;
        }
        for (k, s) in self.load_steps.iter().enumerate() {
            if s.load == 0 || !(s.time >= 0.0) || !s.dp.is_finite() || !s.dq.is_finite() {
                return bad(format!("load_step {}: load is one-based, time non-negative", k + 1));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> Result<usize, SimError> {
        match (self.duration, self.steps) {
            (Some(_), Some(_)) => Err(SimError::Scenario("give either duration or steps, not both".into())),
            (None, None) => Err(SimError::Scenario("duration or steps is required".into())),
            (None, Some(n)) if n > 0 => Ok(n),
            (None, Some(_)) => Err(SimError::Scenario("steps must be positive".into())),
            (Some(t), None) => {
                let n = t / self.sample_period;
                let r = n.round();
                if !(t > 0.0) || (n - r).abs() > 1e-6 * r.max(1.0) {
                    return Err(SimError::Scenario(format!(
                        "duration {t} s is not a whole number of {} s samples",
                        self.sample_period
                    )));
                }
                Ok(r as usize)
            }
        }
    }

    pub fn duration_seconds(&self) -> Result<f64, SimError> {
        Ok(self.steps()? as f64 * self.sample_period)
    }

    fn attack_spec(&self, a: &AttackSection, run_end: f64) -> AttackSpec {
        AttackSpec {
            target_dgu: a.dgu.saturating_sub(1),
            target_signal: a.signal,
            template: a.template.clone(),
            start_time: a.start,
            end_time: a.end.unwrap_or(run_end + self.sample_period),
        }
    }

    /// Attack specs with zero-based DGU indices and resolved end times.
    pub fn attack_specs(&self) -> Vec<AttackSpec> {
        let end = self.duration_seconds().unwrap_or(f64::INFINITY);
        self.attacks.iter().map(|a| self.attack_spec(a, end)).collect()
    }

    pub fn seed_set(&self) -> SeedSet {
        SeedSet::from_section(&self.seeds)
    }

    pub fn window_samples(&self) -> usize {
        (self.detector.window / self.sample_period).round().max(1.0) as usize
    }

    pub fn window_stride(&self) -> usize {
        match self.detector.mode {
            WindowMode::Sliding => self.detector.stride,
            WindowMode::Disjoint => self.window_samples(),
        }
    }

    /// Explicit unit, else the watermark variance, else the sensor-noise variance.
    pub fn indicator_unit(&self) -> f64 {
        match self.detector.indicator_unit {
            Some(u) => u,
            None if self.watermark.variance > 0.0 => self.watermark.variance,
            None => self.noise.measurement_variance,
        }
    }

    pub fn is_attack_free(&self) -> bool {
        self.attacks.is_empty()
    }
}

/// A parsed scenario with the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub base_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        Ok(Self {
            file: parse_scenario(text)?,
            base_dir: None,
        })
    }

    pub fn bundled(name: &str) -> Result<Self, SimError> {
        let text = bundled_scenario(name).ok_or_else(|| SimError::Scenario(format!("unknown bundled scenario '{name}'")))?;
        Self::parse(text)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let file = parse_scenario(&text).map_err(|e| e.at(path))?;
        Ok(Self {
            file,
            base_dir: path.parent().map(Path::to_path_buf),
        })
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        match &self.base_dir {
            Some(dir) if Path::new(rel).is_relative() => dir.join(rel),
            _ => PathBuf::from(rel),
        }
    }
}
