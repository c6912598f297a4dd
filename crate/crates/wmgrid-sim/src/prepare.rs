use std::path::PathBuf;

use nalgebra::DMatrix;
use wmgrid_attack::AttackSpec;
use wmgrid_detect::{
    build_reduced_model, AlarmPolicy, DetectorConfig, NoiseModel, ReducedModel, RiccatiOptions, RiccatiSolution,
    Thresholds,
};
use wmgrid_droop::DroopGains;
use wmgrid_model::{config::bundled_model, parse_model, Discretization, OperatingModel, StateSpace};

use crate::scenario::{DiscretizationName, Scenario, ScenarioFile};
use crate::thresholds::ThresholdsFile;
use crate::SimError;

/// Detector data shared by every run of a scenario.
#[derive(Debug, Clone)]
pub struct DetectorSetup {
    pub dgu: usize,
    pub model: ReducedModel,
    pub riccati: RiccatiSolution,
    pub thresholds: Option<Thresholds>,
}

/// Immutable per-scenario data: discrete plant, controller gains, detectors, attacks.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub scenario: ScenarioFile,
    pub model: OperatingModel,
    pub plant: StateSpace,
    pub gains: Vec<DroopGains>,
    pub detectors: Vec<DetectorSetup>,
    pub attacks: Vec<AttackSpec>,
    pub detector_config: DetectorConfig,
    pub steps: usize,
    pub ts: f64,
    /// `L` with `L L' = R_d`.
    pub process_factor: DMatrix<f64>,
    pub measurement_factor: DMatrix<f64>,
}

/// Lower factor of a symmetric positive semidefinite matrix.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = m.clone().cholesky() {
        return ch.l();
    }
    let eig = m.clone().symmetric_eigen();
    let sq = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sq)
}

fn load_model(sc: &Scenario) -> Result<OperatingModel, SimError> {
    let name = &sc.file.model;
    if bundled_model(name).is_some() {
        return Ok(OperatingModel::bundled(name)?);
    }
    let path: PathBuf = sc.resolve(name);
    let text = std::fs::read_to_string(&path).map_err(|e| SimError::Io {
        path: path.clone(),
        source: e,
    })?;
    let file = parse_model(&text).map_err(|e| SimError::from(e).at(&path))?;
    Ok(OperatingModel::from_file(&file)?)
}

impl PreparedScenario {
    pub fn new(sc: &Scenario) -> Result<Self, SimError> {
        let file = sc.file.clone();
        file.validate()?;
        let model = load_model(sc)?;
        let ts = file.sample_period;
        let method = match file.discretization {
            DiscretizationName::Zoh => Discretization::Zoh,
            DiscretizationName::Tustin => Discretization::Tustin,
        };
        let plant = model
            .continuous
            .clone()
            .with_noise(file.noise.process_variance, file.noise.measurement_variance)
            .discretize(ts, method)?;
        let gains: Vec<DroopGains> = model.microgrid.dgus.iter().map(DroopGains::from_dgu).collect();
        let n_dgu = gains.len();
        for a in &file.attacks {
            if a.dgu > n_dgu {
                return Err(SimError::Scenario(format!("attack targets DGU {} but the model has {n_dgu}", a.dgu)));
            }
        }
        let n_load = model.microgrid.loads.len();
        for s in &file.load_steps {
            if s.load > n_load {
                return Err(SimError::Scenario(format!("load_step refers to load {} but the model has {n_load}", s.load)));
            }
        }
        let shared = match &file.detector.thresholds_file {
            Some(p) => Some(ThresholdsFile::load(&sc.resolve(p))?),
            None => None,
        };
        let channels = file.watermark.channels();
        let nu = file.watermark.variance;
        let noise = NoiseModel::from_plant(
            &plant,
            [if channels.p { nu } else { 0.0 }, if channels.q { nu } else { 0.0 }],
        );
        let detector_config = DetectorConfig {
            window: file.window_samples(),
            stride: file.window_stride(),
            thresholds: None,
            policy: AlarmPolicy {
                consecutive: file.detector.confirm,
            },
            riccati: RiccatiOptions::default(),
            indicator_unit: file.indicator_unit(),
        };
        let dgus: Vec<usize> = match &file.detector.dgus {
            Some(list) => list.iter().map(|i| i - 1).collect(),
            None => (0..n_dgu).collect(),
        };
        let mut detectors = Vec::with_capacity(dgus.len());
        for dgu in dgus {
            if dgu >= n_dgu {
                return Err(SimError::Scenario(format!("detector.dgus lists DGU {} but the model has {n_dgu}", dgu + 1)));
            }
            let reduced = build_reduced_model(&plant, &gains, ts, dgu, &noise)?;
            let riccati = wmgrid_detect::solve_riccati(
                &reduced.a,
                &reduced.c,
                &reduced.r,
                &reduced.v,
                &detector_config.riccati,
            )?;
            let missing = || SimError::Scenario(format!("no thresholds given for DGU {}", dgu + 1));
            let inline = &file.detector.dgu_thresholds;
            let thresholds = if let Some(t) = file.detector.thresholds {
                Some(t)
            } else if let Some(f) = &shared {
                Some(f.get(dgu).ok_or_else(missing)?)
            } else if !inline.is_empty() {
                let t = inline.iter().find(|t| t.index == dgu + 1).ok_or_else(missing)?;
                Some(Thresholds {
                    chi1: t.chi1,
                    chi2: t.chi2,
                })
            } else {
                None
            };
            detectors.push(DetectorSetup {
                dgu,
                model: reduced,
                riccati,
                thresholds,
            });
        }
        let process_factor = psd_factor(&plant.process_cov);
        let measurement_factor = psd_factor(&plant.measurement_cov);
        Ok(Self {
            steps: file.steps()?,
            attacks: file.attack_specs(),
            scenario: file,
            model,
            plant,
            gains,
            detectors,
            detector_config,
            ts,
            process_factor,
            measurement_factor,
        })
    }

    pub fn n_dgu(&self) -> usize {
        self.gains.len()
    }

    /// Overrides every detector's thresholds from a calibrated file.
    pub fn apply_thresholds(&mut self, file: &ThresholdsFile) -> Result<(), SimError> {
        for d in &mut self.detectors {
            d.thresholds = Some(
                file.get(d.dgu)
                    .ok_or_else(|| SimError::Scenario(format!("thresholds file has no entry for DGU {}", d.dgu + 1)))?,
            );
        }
        Ok(())
    }

    pub fn set_thresholds(&mut self, th: Option<Thresholds>) {
        for d in &mut self.detectors {
            d.thresholds = th;
        }
    }
}
