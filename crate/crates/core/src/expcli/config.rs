//! Experiment configuration: command defaults overlaid with a TOML file and
//! command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scales::{from_dimensionless, to_dimensionless, CharacteristicScales, Kind};
use crate::surrogate::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    Consolidation,
    Darcy,
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Linear,
    Remodelled,
    /// Linear and remodelled runs side by side.
    Both,
}

impl Mode {
    /// The `linear` flags to run, linear first.
    pub fn runs(self) -> Vec<bool> {
        match self {
            Mode::Linear => vec![true],
            Mode::Remodelled => vec![false],
            Mode::Both => vec![true, false],
        }
    }
}

/// Initial solid matrix and porosity, moduli in Pa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub e_i: f64,
    pub nu_i: f64,
    pub phi_i: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Column length (m).
    pub length: f64,
    pub elements: usize,
}

/// Loads in Pa, times in s, lengths in m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingConfig {
    pub kind: LoadKind,
    /// Axial pressure (consolidation), largest pressure drop (Darcy) or peak
    /// cyclic load. Compressive loads are positive.
    pub magnitude: f64,
    pub ramp_increments: usize,
    pub ramp_time: f64,
    pub cycle_period: f64,
    pub cycles: usize,
    pub period_sweep: Vec<f64>,
    /// Pressure drops as fractions of `magnitude`.
    pub dp_sweep: Vec<f64>,
    pub d_sweep: Vec<f64>,
    pub nu_sweep: Vec<f64>,
    /// Distance to the environment for free drainage; zero means a drained
    /// (zero pressure) face.
    pub drainage_dx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub max_strain_increment: f64,
    pub max_strain_halvings: u32,
    pub max_reject_halvings: u32,
    pub growth: f64,
    /// Largest time step (s); unlimited when absent.
    pub dt_max: Option<f64>,
    /// Simulated time (s) for consolidation.
    pub end_time: f64,
    /// Darcy steady-state bound on `(v_in - v_out) / v_in`.
    pub steady_tol: f64,
    /// Darcy give-up time (s).
    pub max_time: f64,
    pub steps_per_cycle: usize,
    /// Log-spaced series samples after the ramp.
    pub samples: usize,
    /// Profile snapshot times (s).
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub bundle: PathBuf,
    pub dataset: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellsConfig {
    pub resolution: f64,
    pub n_phi: usize,
    pub n_nu: usize,
    pub phi_range: [f64; 2],
    pub nu_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    /// Dimensionless solid moduli of the verification material.
    pub e: f64,
    pub nu: f64,
    pub stretch: f64,
    pub increments: Vec<usize>,
    /// Accepted relative error at the largest increment count.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub mode: Mode,
    pub scales: CharacteristicScales,
    pub material: MaterialConfig,
    pub geometry: GeometryConfig,
    pub loading: LoadingConfig,
    pub solver: SolverConfig,
    pub paths: PathsConfig,
    pub cells: CellsConfig,
    pub train: TrainConfig,
    pub hyper: HyperConfig,
}

impl ExperimentConfig {
    /// Soil column: 7.5 m, E_i = 15 MPa, 1 MPa stress scale.
    pub fn consolidation() -> Self {
        ExperimentConfig {
            seed: 42,
            mode: Mode::Both,
            scales: CharacteristicScales {
                l: 7.5,
                d: 1e-4,
                mu_c: 1e-3,
                f_c: 5.625e7,
            },
            material: MaterialConfig {
                e_i: 15e6,
                nu_i: 0.3,
                phi_i: 0.3,
            },
            geometry: GeometryConfig {
                length: 7.5,
                elements: 40,
            },
            loading: LoadingConfig {
                kind: LoadKind::Consolidation,
                magnitude: 3e6,
                ramp_increments: 10,
                ramp_time: 5.0,
                cycle_period: 108.0,
                cycles: 20,
                period_sweep: vec![],
                dp_sweep: vec![],
                d_sweep: vec![],
                nu_sweep: vec![],
                drainage_dx: 0.0,
            },
            solver: SolverConfig {
                max_strain_increment: 1e-3,
                max_strain_halvings: 12,
                max_reject_halvings: 5,
                growth: 1.5,
                dt_max: None,
                end_time: 2e5,
                steady_tol: 1e-3,
                max_time: 1e6,
                steps_per_cycle: 200,
                samples: 60,
                snapshot_times: vec![10.0, 100.0, 1e3, 1e4, 2e5],
            },
            paths: PathsConfig {
                bundle: PathBuf::from("bundle.json"),
                dataset: PathBuf::from("cells.csv"),
                out: PathBuf::from("out"),
            },
            cells: CellsConfig {
                resolution: 1.0 / 64.0,
                n_phi: 50,
                n_nu: 50,
                phi_range: [0.082, 0.783],
                nu_range: [0.1, 0.45],
            },
            train: TrainConfig::default(),
            hyper: HyperConfig {
                e: 15.0,
                nu: 0.3,
                stretch: 1.3,
                increments: vec![1, 10, 100, 1000],
                tolerance: 0.01,
            },
        }
    }

    /// Filtration through a 1 m column held at both ends.
    pub fn darcy() -> Self {
        let mut c = Self::consolidation();
        c.mode = Mode::Remodelled;
        c.scales = CharacteristicScales {
            l: 1.0,
            d: 1e-4,
            mu_c: 1e-3,
            f_c: 1e6,
        };
        c.geometry = GeometryConfig {
            length: 1.0,
            elements: 40,
        };
        c.loading.kind = LoadKind::Darcy;
        c.loading.magnitude = 15e6 / 4.0;
        c.loading.ramp_time = 1.0;
        c.loading.dp_sweep = vec![0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
        c.loading.d_sweep = vec![5e-5, 1e-4, 2e-4];
        c.loading.nu_sweep = vec![0.2, 0.35];
        c.solver.max_time = 1e5;
        c.solver.snapshot_times = vec![];
        c
    }

    /// Brain sample under a triangular axial load with free drainage on top.
    pub fn cyclic() -> Self {
        let mut c = Self::consolidation();
        c.mode = Mode::Remodelled;
        c.scales = CharacteristicScales {
            l: 1e-3,
            d: 20e-6,
            mu_c: 1e-3,
            f_c: 1e-3,
        };
        c.material = MaterialConfig {
            e_i: 13.5e3,
            nu_i: 0.3,
            phi_i: 0.3,
        };
        c.geometry = GeometryConfig {
            length: 1e-3,
            elements: 10,
        };
        c.loading.kind = LoadKind::Cyclic;
        c.loading.magnitude = 1.35e3;
        c.loading.cycle_period = 108.0;
        c.loading.cycles = 20;
        c.loading.period_sweep = vec![
            3.0, 13.0, 27.0, 54.0, 108.0, 216.0, 1080.0, 10800.0, 108000.0,
        ];
        c.loading.drainage_dx = 0.03;
        c.solver.snapshot_times = vec![];
        c
    }

    pub fn defaults_for(kind: LoadKind) -> Self {
        match kind {
            LoadKind::Consolidation => Self::consolidation(),
            LoadKind::Darcy => Self::darcy(),
            LoadKind::Cyclic => Self::cyclic(),
        }
    }

    /// Defaults for `kind` overlaid with the tables in `text`.
    pub fn from_toml_over(kind: LoadKind, text: &str) -> Result<Self> {
        let overlay: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(Self::defaults_for(kind))
            .map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, overlay);
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(kind: LoadKind, path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_toml_over(
                kind,
                &std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            ),
            None => {
                let cfg = Self::defaults_for(kind);
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.scales.validate()?;
        let m = &self.material;
        if !(m.e_i > 0.0) || !(-1.0 < m.nu_i && m.nu_i < 0.5) || !(0.0 < m.phi_i && m.phi_i < 1.0) {
            return bad(format!("material out of range: {m:?}"));
        }
        if !(self.geometry.length > 0.0) || self.geometry.elements < 4 {
            return bad(format!(
                "geometry needs a positive length and at least 4 elements: {:?}",
                self.geometry
            ));
        }
        let l = &self.loading;
        if !(l.magnitude.abs() > 0.0) || !(l.ramp_time > 0.0) || l.ramp_increments == 0 {
            return bad("load magnitude, ramp time and ramp increments must be positive".into());
        }
        if !(l.cycle_period > 0.0) || l.cycles == 0 || l.period_sweep.iter().any(|t| !(*t > 0.0)) {
            return bad("cycle periods and cycle count must be positive".into());
        }
        if !(l.drainage_dx >= 0.0) {
            return bad(format!(
                "drainage_dx must be non-negative, got {}",
                l.drainage_dx
            ));
        }
        if l.kind == LoadKind::Darcy && (l.dp_sweep.is_empty() || l.d_sweep.is_empty()) {
            return bad("Darcy runs need nonempty dp_sweep and d_sweep".into());
        }
        if l.dp_sweep.iter().any(|f| !(*f > 0.0 && *f <= 1.0))
            || l.d_sweep.iter().any(|d| !(*d > 0.0))
        {
            return bad(
                "dp_sweep fractions must lie in (0, 1] and d_sweep sizes be positive".into(),
            );
        }
        if l.nu_sweep.iter().any(|nu| !(0.1..=0.45).contains(nu)) {
            return bad("nu_sweep values must lie in the surrogate range [0.1, 0.45]".into());
        }
        let s = &self.solver;
        if !(s.max_strain_increment > 0.0)
            || !(s.growth >= 1.0)
            || !(s.end_time > 0.0)
            || !(s.max_time > 0.0)
        {
            return bad("solver limits must be positive and growth at least 1".into());
        }
        if s.dt_max.is_some_and(|d| !(d > 0.0)) || !(s.steady_tol > 0.0) || s.steps_per_cycle < 4 {
            return bad(
                "dt_max and steady_tol must be positive and steps_per_cycle at least 4".into(),
            );
        }
        if self.hyper.increments.is_empty() || self.hyper.increments.contains(&0) {
            return bad("hyper.increments must be nonempty and positive".into());
        }
        Ok(())
    }

    /// Dimensionless value of a physical quantity.
    pub fn nd(&self, value: f64, kind: Kind) -> f64 {
        to_dimensionless(value, kind, &self.scales)
    }

    /// Physical value of a dimensionless quantity.
    pub fn phys(&self, value: f64, kind: Kind) -> f64 {
        from_dimensionless(value, kind, &self.scales)
    }
}

/// Recursive table merge; `overlay` wins on scalars and arrays.
fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
