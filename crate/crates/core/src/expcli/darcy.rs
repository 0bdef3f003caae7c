//! Filtration through a column held at both ends and driven by a pressure
//! drop, run to steady state for a sweep of drops.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::consolidate::{initial_material, step_options};
use crate::macro1d::{
    advance, Column, EndCondition, Hydraulic, MacroState, Mechanical, StepOptions, TimeFunction,
    BOTTOM, TOP,
};
use crate::remodel::CellProvider;
use crate::scales::{from_dimensionless, CharacteristicScales, Kind};
use crate::{Error, Result};

/// How the linear reference flux is formed from the pressure drop.
pub const CONVENTION: &str = "K_i * dP / L' with the unit dimensionless column length L' = 1";

/// Dimensionless pressure drop `dp`, ramped over the configured ramp time.
pub fn column(cfg: &ExperimentConfig, dp: f64) -> Result<Column> {
    let ramp = cfg.nd(cfg.loading.ramp_time, Kind::Time);
    let fixed = || Mechanical::Displacement(TimeFunction::Constant { value: 0.0 });
    let bottom = EndCondition::new(
        fixed(),
        Hydraulic::Pressure(TimeFunction::Ramp {
            value: dp,
            duration: ramp,
        }),
    );
    let top = EndCondition::new(
        fixed(),
        Hydraulic::Pressure(TimeFunction::Constant { value: 0.0 }),
    );
    Column::new(
        cfg.nd(cfg.geometry.length, Kind::Length),
        cfg.geometry.elements,
        bottom,
        top,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DarcyPoint {
    /// `dP / dP_max`.
    pub fraction: f64,
    pub dp: f64,
    pub dp_pa: f64,
    pub v_in: f64,
    pub v_out: f64,
    /// Steady relative fluid velocity, taken as the outflow.
    pub v_rf: f64,
    /// `K_i dP / L`.
    pub v_linear: f64,
    pub ratio: f64,
    /// Dimensionless deviation normalised by the largest drop of the sweep.
    pub y: f64,
    pub t_steady: f64,
    pub increments: usize,
}

pub const POINT_HEADER: &str =
    "fraction,dp,dp_pa,v_in,v_out,v_rf,v_linear,ratio,y,t_steady,increments";

/// Ramps the drop, then advances until `(v_in - v_out) / v_in` falls below
/// the tolerance. Fluxes are those of the last increment.
pub fn run_to_steady(
    cfg: &ExperimentConfig,
    cells: &dyn CellProvider,
    linear: bool,
    nu_i: f64,
    fraction: f64,
) -> Result<(DarcyPoint, MacroState)> {
    let mut cfg = cfg.clone();
    cfg.material.nu_i = nu_i;
    let dp = fraction * cfg.nd(cfg.loading.magnitude, Kind::Stress);
    let column = column(&cfg, dp)?;
    let material = initial_material(&cfg, cells)?;
    let k_i = material.eff.k11;
    let ramp = cfg.nd(cfg.loading.ramp_time, Kind::Time);
    let t_max = cfg.nd(cfg.solver.max_time, Kind::Time);
    let opts = step_options(&cfg);
    let ramp_dt = ramp / cfg.loading.ramp_increments as f64;
    let ramp_opts = StepOptions {
        dt_max: opts.dt_max.min(ramp_dt),
        ..opts
    };

    let mut state = MacroState::initial(&column, material);
    let (next, reports, mut dt) =
        advance(&column, &state, ramp, ramp_dt, cells, linear, &ramp_opts)?;
    state = next;
    let mut increments = reports.len();
    let mut target = ramp;
    loop {
        target = (target * 1.25).min(t_max);
        let (next, reports, d) = advance(&column, &state, target, dt, cells, linear, &opts)?;
        state = next;
        dt = d;
        increments += reports.len();
        let last = reports.last().expect("advance made progress");
        let v_in = -last.drained[BOTTOM] / last.dt;
        let v_out = last.drained[TOP] / last.dt;
        if v_in > 0.0 && (v_in - v_out) / v_in <= cfg.solver.steady_tol {
            let v_linear = k_i * dp / column.length;
            let point = DarcyPoint {
                fraction,
                dp,
                dp_pa: cfg.phys(dp, Kind::Stress),
                v_in,
                v_out,
                v_rf: v_out,
                v_linear,
                ratio: v_out / v_linear,
                y: f64::NAN,
                t_steady: state.t,
                increments,
            };
            return Ok((point, state));
        }
        if target >= t_max {
            return Err(Error::Solver(format!(
                "no steady state by t = {t_max} for dP = {dp}: v_in = {v_in:.6e}, v_out = {v_out:.6e}"
            )));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DarcySweep {
    pub nu_i: f64,
    pub k_i: f64,
    pub points: Vec<DarcyPoint>,
    /// Least-squares slope of `ln y` against `ln(dP / dP_max)`.
    pub slope: f64,
    pub intercept: f64,
}

/// Slope and intercept of the least-squares line through `(ln x, ln y)`,
/// skipping non-positive values.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Runs every drop of the sweep concurrently and normalises the deviations by
/// the largest drop.
pub fn darcy_sweep(
    cfg: &ExperimentConfig,
    cells: &dyn CellProvider,
    linear: bool,
    nu_i: f64,
) -> Result<DarcySweep> {
    let mut points: Vec<DarcyPoint> = cfg
        .loading
        .dp_sweep
        .par_iter()
        .map(|f| run_to_steady(cfg, cells, linear, nu_i, *f).map(|(p, _)| p))
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.fraction.total_cmp(&b.fraction));
    let top = *points.last().expect("nonempty sweep");
    let norm = top.v_rf - top.v_linear;
    for p in &mut points {
        p.y = (p.v_rf - p.v_linear) / norm;
    }
    let x: Vec<f64> = points.iter().map(|p| p.fraction / top.fraction).collect();
    let y: Vec<f64> = points.iter().map(|p| p.y).collect();
    let (slope, intercept) = fit_power_law(&x, &y);
    let mut c = cfg.clone();
    c.material.nu_i = nu_i;
    let k_i = initial_material(&c, cells)?.eff.k11;
    Ok(DarcySweep {
        nu_i,
        k_i,
        points,
        slope,
        intercept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizePoint {
    pub d: f64,
    /// Initial conductivity (m^2 / (Pa s)).
    pub k_i: f64,
    /// `v_rf - K_i dP / L` at the largest drop (m/s).
    pub deviation: f64,
}

/// Deviation at the largest drop for each cell size, with `L`, `mu_c` and
/// `f_c` held so that the stress scale and the drop in Pa are unchanged. The
/// dimensionless problem is then the same for every `d`, and the size enters
/// through the velocity and conductivity scales, both proportional to `d^2`.
pub fn size_sweep(cfg: &ExperimentConfig, sweep: &DarcySweep) -> Vec<SizePoint> {
    let top = sweep.points.last().expect("nonempty sweep");
    cfg.loading
        .d_sweep
        .iter()
        .map(|&d| {
            let cs = CharacteristicScales { d, ..cfg.scales };
            SizePoint {
                d,
                k_i: from_dimensionless(sweep.k_i, Kind::Conductivity, &cs),
                deviation: from_dimensionless(top.v_rf - top.v_linear, Kind::Velocity, &cs),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DarcySummary {
    pub convention: &'static str,
    pub linear: bool,
    pub sweep: DarcySweep,
    /// Largest `|v_rf / (K_i dP) - 1|` over drops up to 5% of the maximum.
    pub small_drop_error: f64,
    pub sizes: Vec<SizePoint>,
    pub deviation_grows_with_d: bool,
    pub nu_sweeps: Vec<DarcySweep>,
}

pub fn run_darcy(
    cfg: &ExperimentConfig,
    cells: &dyn CellProvider,
    linear: bool,
) -> Result<DarcySummary> {
    let sweep = darcy_sweep(cfg, cells, linear, cfg.material.nu_i)?;
    let small_drop_error = sweep
        .points
        .iter()
        .filter(|p| p.fraction <= 0.05 + 1e-12)
        .map(|p| (p.ratio - 1.0).abs())
        .fold(0.0, f64::max);
    let mut sizes = size_sweep(cfg, &sweep);
    sizes.sort_by(|a, b| a.d.total_cmp(&b.d));
    let deviation_grows_with_d = sizes
        .windows(2)
        .all(|w| w[1].deviation.abs() > w[0].deviation.abs());
    let nu_sweeps = cfg
        .loading
        .nu_sweep
        .iter()
        .map(|nu| darcy_sweep(cfg, cells, linear, *nu))
        .collect::<Result<Vec<_>>>()?;
    Ok(DarcySummary {
        convention: CONVENTION,
        linear,
        sweep,
        small_drop_error,
        sizes,
        deviation_grows_with_d,
        nu_sweeps,
    })
}

pub fn write_points<W: Write>(out: &mut W, points: &[DarcyPoint]) -> std::io::Result<()> {
    writeln!(out, "{POINT_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{}",
            p.fraction,
            p.dp,
            p.dp_pa,
            p.v_in,
            p.v_out,
            p.v_rf,
            p.v_linear,
            p.ratio,
            p.y,
            p.t_steady,
            p.increments
        )?;
    }
    Ok(())
}

pub fn write_sizes<W: Write>(out: &mut W, sizes: &[SizePoint]) -> std::io::Result<()> {
    writeln!(out, "d,k_i,deviation")?;
    for s in sizes {
        writeln!(out, "{:.6e},{:.10e},{:.10e}", s.d, s.k_i, s.deviation)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_fit_recovers_exponent() {
        let x = [0.1, 0.2, 0.5, 1.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        let (s, c) = fit_power_law(&x, &y);
        assert!((s - 1.7).abs() < 1e-12 && (c - 3f64.ln()).abs() < 1e-12);
        assert!(fit_power_law(&[1.0], &[1.0]).0.is_nan());
    }
}
