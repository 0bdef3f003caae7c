//! Neural surrogates for the cell-averaged tensors, one network per output.

mod mlp;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use mlp::{
    layer_dims, relative_l2, split_indices, train_mlp, Affine, Mlp, TrainConfig, TrainReport,
    EXTRAPOLATION_MARGIN, INPUT_NAMES,
};

use crate::microcell::CellSolution;
use crate::remodel::CellProvider;
use crate::tensor::SquareSym4;
use crate::{Error, Result};

pub const BUNDLE_VERSION: u32 = 1;

pub const OUTPUT_NAMES: [&str; 5] = ["M11", "M12", "M44", "Q11", "K11"];

/// K11 spans decades over the porosity range and is fitted in log space.
pub const LOG_OUTPUT: usize = 4;

/// Hidden widths per output, in `OUTPUT_NAMES` order.
pub fn default_architecture() -> [Vec<usize>; 5] {
    [
        vec![50; 3],
        vec![50; 3],
        vec![20; 3],
        vec![50; 3],
        vec![10; 3],
    ]
}

/// Output `k` of a cell solution, in `OUTPUT_NAMES` order.
pub fn output_value(cell: &CellSolution, k: usize) -> f64 {
    match k {
        0 => cell.m.c11,
        1 => cell.m.c12,
        2 => cell.m.c44,
        3 => cell.q11,
        _ => cell.k11,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub seed: u64,
    pub nu_range: [f64; 2],
    pub phi_range: [f64; 2],
    pub rows: usize,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub config: TrainConfig,
    pub reports: Vec<TrainReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateBundle {
    pub version: u32,
    /// In `OUTPUT_NAMES` order.
    pub outputs: Vec<Mlp>,
    pub metadata: BundleMetadata,
}

impl SurrogateBundle {
    pub fn network(&self, name: &str) -> Option<&Mlp> {
        self.outputs.iter().find(|m| m.name == name)
    }

    pub fn predict(&self, nu: f64, phi: f64) -> Result<[f64; 5]> {
        let mut out = [0.0; 5];
        for (o, net) in out.iter_mut().zip(&self.outputs) {
            *o = net.feed_forward(nu, phi)?;
        }
        Ok(out)
    }

    /// Names and validation errors of outputs above the gate.
    pub fn gate_failures(&self) -> Vec<(String, f64)> {
        self.metadata
            .reports
            .iter()
            .filter(|r| !(r.validation_rel_error <= self.metadata.config.gate))
            .map(|r| (r.name.clone(), r.validation_rel_error))
            .collect()
    }

    /// Largest validation relative error over the five outputs.
    pub fn max_validation_error(&self) -> f64 {
        self.metadata
            .reports
            .iter()
            .map(|r| r.validation_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != BUNDLE_VERSION {
            return Err(Error::Format(format!(
                "bundle version {} (expected {BUNDLE_VERSION})",
                self.version
            )));
        }
        let names: Vec<&str> = self.outputs.iter().map(|m| m.name.as_str()).collect();
        if names != OUTPUT_NAMES {
            return Err(Error::Format(format!(
                "bundle outputs {names:?}, expected {OUTPUT_NAMES:?}"
            )));
        }
        self.outputs.iter().try_for_each(Mlp::check_dims)
    }
}

impl CellProvider for SurrogateBundle {
    fn cell(&self, nu: f64, phi: f64) -> Result<CellSolution> {
        let [m11, m12, m44, q11, k11] = self.predict(nu, phi)?;
        if !(k11 > 0.0) || !(q11 < 0.0) {
            return Err(Error::NonPhysical {
                phi,
                nu,
                reason: format!("surrogate gives K11 = {k11}, Q11 = {q11}"),
            });
        }
        Ok(CellSolution {
            phi,
            nu,
            m: SquareSym4::new(m11, m12, m44),
            q11,
            k11,
        })
    }
}

/// Trains the five networks without checking the accuracy gate.
pub fn train_unchecked(
    records: &[CellSolution],
    widths: &[Vec<usize>; 5],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<SurrogateBundle> {
    if records.len() < 100 {
        return Err(Error::InvalidInput(format!(
            "{} training rows; need at least 100",
            records.len()
        )));
    }
    let inputs: Vec<[f64; 2]> = records.iter().map(|r| [r.nu, r.phi]).collect();
    let range = |k: usize| {
        inputs
            .iter()
            .fold([f64::INFINITY, f64::NEG_INFINITY], |acc, x| {
                [acc[0].min(x[k]), acc[1].max(x[k])]
            })
    };
    let (nu_range, phi_range) = (range(0), range(1));
    let input_norm = [
        Affine::unit_range(nu_range[0], nu_range[1]),
        Affine::unit_range(phi_range[0], phi_range[1]),
    ];
    let (train_idx, val_idx) = split_indices(records.len(), cfg.validation_fraction, seed);

    let trained: Vec<(Mlp, TrainReport)> = (0..5)
        .into_par_iter()
        .map(|k| {
            let targets: Vec<f64> = records.iter().map(|r| output_value(r, k)).collect();
            let start = std::time::Instant::now();
            let out = train_mlp(
                OUTPUT_NAMES[k],
                &widths[k],
                &inputs,
                &targets,
                input_norm,
                &train_idx,
                &val_idx,
                cfg,
                seed.wrapping_add(1 + k as u64),
                k == LOG_OUTPUT,
            )?;
            log::info!(
                "{}: {} epochs (best {}), validation error {:.3e}, {:.1?}",
                OUTPUT_NAMES[k],
                out.1.epochs,
                out.1.best_epoch,
                out.1.validation_rel_error,
                start.elapsed()
            );
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let (outputs, reports) = trained.into_iter().unzip();
    Ok(SurrogateBundle {
        version: BUNDLE_VERSION,
        outputs,
        metadata: BundleMetadata {
            seed,
            nu_range,
            phi_range,
            rows: records.len(),
            train_rows: train_idx.len(),
            validation_rows: val_idx.len(),
            config: *cfg,
            reports,
        },
    })
}

/// Trains and enforces the validation gate on every output.
pub fn train(
    records: &[CellSolution],
    widths: &[Vec<usize>; 5],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<SurrogateBundle> {
    let bundle = train_unchecked(records, widths, cfg, seed)?;
    let failed = bundle.gate_failures();
    if failed.is_empty() {
        Ok(bundle)
    } else {
        Err(Error::Gate(format!(
            "validation error above {} for {failed:?}",
            cfg.gate
        )))
    }
}

pub fn bundle_to_string(bundle: &SurrogateBundle) -> Result<String> {
    Ok(serde_json::to_string_pretty(bundle)?)
}

pub fn bundle_from_str(text: &str) -> Result<SurrogateBundle> {
    let bundle: SurrogateBundle = serde_json::from_str(text)?;
    bundle.validate()?;
    Ok(bundle)
}

pub fn save_bundle(bundle: &SurrogateBundle, path: &Path) -> Result<()> {
    std::fs::write(path, bundle_to_string(bundle)?).map_err(|e| Error::io(path, e))
}

pub fn load_bundle(path: &Path) -> Result<SurrogateBundle> {
    bundle_from_str(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
