//! Dataset generation, surrogate training and the two verification drivers.

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::hyperverify::{incremental_uniaxial, oracle_nominal_stress, UniaxialRun};
use crate::microcell::{generate_dataset, solve_cell, CellSolution, Dataset, DatasetGrid};
use crate::remodel::NeoHookeanParams;
use crate::surrogate::{
    default_architecture, output_value, relative_l2, split_indices, train_unchecked,
    SurrogateBundle, OUTPUT_NAMES,
};
use crate::Result;

pub fn grid(cfg: &ExperimentConfig) -> DatasetGrid {
    let c = &cfg.cells;
    DatasetGrid::linspace(
        c.n_phi,
        (c.phi_range[0], c.phi_range[1]),
        c.n_nu,
        (c.nu_range[0], c.nu_range[1]),
    )
}

pub fn gen_cells(cfg: &ExperimentConfig) -> Result<Dataset> {
    generate_dataset(&grid(cfg), cfg.cells.resolution)
}

/// Trains with the default architecture; the gate is checked by the caller.
pub fn train(cfg: &ExperimentConfig, records: &[CellSolution]) -> Result<SurrogateBundle> {
    train_unchecked(records, &default_architecture(), &cfg.train, cfg.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperPoint {
    pub n: usize,
    pub nominal_stress: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperReport {
    pub stretch: f64,
    pub oracle: f64,
    pub points: Vec<HyperPoint>,
    /// Least-squares slope of `ln error` against `ln N` over the runs with
    /// `N >= 10`; first order is -1.
    pub order_slope: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip)]
    pub runs: Vec<UniaxialRun>,
}

pub fn verify_hyper(cfg: &ExperimentConfig) -> Result<HyperReport> {
    let h = &cfg.hyper;
    let params = NeoHookeanParams::from_moduli(h.e, h.nu)?;
    let oracle = oracle_nominal_stress(&params, h.stretch)?;
    let mut ns = h.increments.clone();
    ns.sort_unstable();
    ns.dedup();
    let runs: Vec<UniaxialRun> = ns
        .iter()
        .map(|n| incremental_uniaxial(&params, h.stretch, *n))
        .collect::<Result<_>>()?;
    let points: Vec<HyperPoint> = runs
        .iter()
        .map(|r| HyperPoint {
            n: r.n,
            nominal_stress: r.final_stress(),
            relative_error: (r.final_stress() - oracle).abs() / oracle.abs(),
        })
        .collect();
    let asymptotic: Vec<&HyperPoint> = points.iter().filter(|p| p.n >= 10).collect();
    let x: Vec<f64> = asymptotic.iter().map(|p| p.n as f64).collect();
    let y: Vec<f64> = asymptotic.iter().map(|p| p.relative_error).collect();
    let order_slope = super::darcy::fit_power_law(&x, &y).0;
    let last = points.last().expect("nonempty increments");
    let passed =
        last.relative_error <= h.tolerance && (asymptotic.len() < 2 || order_slope <= -0.95);
    Ok(HyperReport {
        stretch: h.stretch,
        oracle,
        points,
        order_slope,
        tolerance: h.tolerance,
        passed,
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnOutputCheck {
    pub name: &'static str,
    pub recorded_validation_error: f64,
    pub recomputed_validation_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnReport {
    pub gate: f64,
    pub validation_rows: usize,
    pub outputs: Vec<AnnOutputCheck>,
    /// Relative errors at `(nu, phi) = (0.3, 0.3)` against a direct cell solve.
    pub spot_errors: [f64; 5],
    /// K11 increases with porosity along a 20-point line at `nu = 0.3`.
    pub k11_monotone: bool,
    pub passed: bool,
}

/// Re-evaluates the held-out split of the dataset with the bundle's seed.
pub fn verify_ann(
    cfg: &ExperimentConfig,
    bundle: &SurrogateBundle,
    records: &[CellSolution],
) -> Result<AnnReport> {
    let gate = bundle.metadata.config.gate;
    let (_, val) = split_indices(
        records.len(),
        bundle.metadata.config.validation_fraction,
        bundle.metadata.seed,
    );
    let mut outputs = Vec::with_capacity(5);
    for (k, name) in OUTPUT_NAMES.iter().enumerate() {
        let net = &bundle.outputs[k];
        let mut pred = Vec::with_capacity(val.len());
        let mut truth = Vec::with_capacity(val.len());
        for &i in &val {
            let r = &records[i];
            pred.push(net.feed_forward(r.nu, r.phi)?);
            truth.push(output_value(r, k));
        }
        let recomputed = relative_l2(&pred, &truth);
        let recorded = bundle.metadata.reports[k].validation_rel_error;
        outputs.push(AnnOutputCheck {
            name,
            recorded_validation_error: recorded,
            recomputed_validation_error: recomputed,
            passed: recomputed <= gate,
        });
    }
    let (cell, _) = solve_cell(0.3, 0.3, cfg.cells.resolution)?;
    let pred = bundle.predict(0.3, 0.3)?;
    let mut spot_errors = [0.0; 5];
    for k in 0..5 {
        spot_errors[k] = ((pred[k] - output_value(&cell, k)) / output_value(&cell, k)).abs();
    }
    let [lo, hi] = bundle.metadata.phi_range;
    let line: Vec<f64> = (0..20)
        .map(|i| bundle.outputs[4].feed_forward(0.3, lo + (hi - lo) * i as f64 / 19.0))
        .collect::<Result<_>>()?;
    let k11_monotone = line.windows(2).all(|w| w[1] > w[0]);
    let passed = outputs.iter().all(|o| o.passed);
    Ok(AnnReport {
        gate,
        validation_rows: val.len(),
        outputs,
        spot_errors,
        k11_monotone,
        passed,
    })
}
