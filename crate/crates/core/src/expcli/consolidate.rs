//! Column compressed by a constant axial pressure, drained on top.

use std::io::Write;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::macro1d::{
    advance, mass_balance, terzaghi_pressure, Column, EndCondition, Hydraulic, MacroState,
    Mechanical, StepOptions, TimeFunction,
};
use crate::remodel::{CellProvider, MaterialPointState};
use crate::scales::Kind;
use crate::Result;

/// `(depth / H, c_v t / H^2)` pairs where linear runs are compared with the series.
pub const TERZAGHI_PAIRS: [(f64, f64); 5] = [
    (0.25, 0.05),
    (0.5, 0.1),
    (0.75, 0.2),
    (1.0, 0.4),
    (0.5, 0.8),
];

pub fn step_options(cfg: &ExperimentConfig) -> StepOptions {
    let s = &cfg.solver;
    StepOptions {
        max_strain_increment: s.max_strain_increment,
        max_strain_halvings: s.max_strain_halvings,
        max_reject_halvings: s.max_reject_halvings,
        growth: s.growth,
        dt_max: s.dt_max.map_or(f64::INFINITY, |d| cfg.nd(d, Kind::Time)),
    }
}

/// Top face: zero pressure, or free drainage when `drainage_dx > 0`.
pub fn top_drainage(cfg: &ExperimentConfig) -> Hydraulic {
    if cfg.loading.drainage_dx > 0.0 {
        Hydraulic::FreeDrainage {
            dx: cfg.nd(cfg.loading.drainage_dx, Kind::Length),
            env: 0.0,
        }
    } else {
        Hydraulic::Pressure(TimeFunction::Constant { value: 0.0 })
    }
}

pub fn initial_material(
    cfg: &ExperimentConfig,
    cells: &dyn CellProvider,
) -> Result<MaterialPointState> {
    let m = &cfg.material;
    MaterialPointState::initial(cfg.nd(m.e_i, Kind::Modulus), m.nu_i, m.phi_i, cells)
}

pub fn column(cfg: &ExperimentConfig) -> Result<Column> {
    let load = cfg.nd(cfg.loading.magnitude, Kind::Stress);
    let ramp = cfg.nd(cfg.loading.ramp_time, Kind::Time);
    let top = EndCondition::new(
        Mechanical::Traction(TimeFunction::Ramp {
            value: -load,
            duration: ramp,
        }),
        top_drainage(cfg),
    );
    Column::new(
        cfg.nd(cfg.geometry.length, Kind::Length),
        cfg.geometry.elements,
        EndCondition::fixed_impermeable(),
        top,
    )
}

/// One output time; dimensionless unless suffixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub t_s: f64,
    pub settlement: f64,
    pub drained: f64,
    pub p_base: f64,
    pub phi_top: f64,
    pub phi_base: f64,
    pub mass_imbalance: f64,
}

pub const SERIES_HEADER: &str = "t,t_s,settlement,drained,p_base,phi_top,phi_base,mass_imbalance";

impl SeriesRow {
    fn new(cfg: &ExperimentConfig, s: &MacroState) -> Self {
        let (first, last) = (
            &s.points[0].material,
            &s.points[s.points.len() - 1].material,
        );
        SeriesRow {
            t: s.t,
            t_s: cfg.phys(s.t, Kind::Time),
            settlement: s.settlement(),
            drained: s.total_drained(),
            p_base: s.p[0],
            phi_top: last.phi,
            phi_base: first.phi,
            mass_imbalance: mass_balance(s).relative(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TerzaghiSample {
    pub depth: f64,
    pub t: f64,
    pub computed: f64,
    pub series: f64,
    /// `|computed - series| / load`.
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct ConsolidationRun {
    pub linear: bool,
    pub series: Vec<SeriesRow>,
    /// States at the configured snapshot times.
    pub snapshots: Vec<MacroState>,
    /// First output after the load ramp.
    pub after_ramp: MacroState,
    pub final_state: MacroState,
    pub increments: usize,
    pub clamp_events: u64,
    /// Linear runs only.
    pub terzaghi: Vec<TerzaghiSample>,
}

/// Output times: the ramp increments, log-spaced samples to the end time and
/// the snapshot times, sorted.
pub fn output_times(cfg: &ExperimentConfig, extra: &[f64]) -> Vec<f64> {
    let ramp = cfg.nd(cfg.loading.ramp_time, Kind::Time);
    let end = cfg.nd(cfg.solver.end_time, Kind::Time);
    let n = cfg.loading.ramp_increments;
    let mut t: Vec<f64> = (1..=n).map(|k| ramp * k as f64 / n as f64).collect();
    let m = cfg.solver.samples.max(1);
    if end > ramp {
        let r = (end / ramp).ln();
        t.extend((1..=m).map(|k| ramp * (r * k as f64 / m as f64).exp()));
    }
    t.extend(
        cfg.solver
            .snapshot_times
            .iter()
            .map(|s| cfg.nd(*s, Kind::Time)),
    );
    t.extend_from_slice(extra);
    t.retain(|x| *x > 0.0 && *x <= end * (1.0 + 1e-12));
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    t
}

pub fn run_consolidation(
    cfg: &ExperimentConfig,
    cells: &dyn CellProvider,
    linear: bool,
) -> Result<ConsolidationRun> {
    let column = column(cfg)?;
    let material = initial_material(cfg, cells)?;
    let eff = material.eff;
    let height = column.length;
    let load = cfg.nd(cfg.loading.magnitude, Kind::Stress);
    let ramp = cfg.nd(cfg.loading.ramp_time, Kind::Time);
    let cv = eff.k11 / (1.0 / eff.biot_modulus + eff.alpha * eff.alpha / eff.c.c11);
    let terzaghi_times: Vec<f64> = if linear {
        TERZAGHI_PAIRS
            .iter()
            .map(|(_, tv)| tv * height * height / cv)
            .collect()
    } else {
        vec![]
    };
    let times = output_times(cfg, &terzaghi_times);
    let snapshot_times: Vec<f64> = cfg
        .solver
        .snapshot_times
        .iter()
        .map(|s| cfg.nd(*s, Kind::Time))
        .collect();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();

    let base_opts = step_options(cfg);
    let ramp_dt = ramp / cfg.loading.ramp_increments as f64;
    let mut state = MacroState::initial(&column, material);
    let mut dt = ramp_dt;
    let mut run = ConsolidationRun {
        linear,
        series: vec![],
        snapshots: vec![],
        after_ramp: state.clone(),
        final_state: state.clone(),
        increments: 0,
        clamp_events: 0,
        terzaghi: vec![],
    };
    let mut seen_ramp = false;
    for &target in &times {
        let opts = if target <= ramp * (1.0 + 1e-12) {
            StepOptions {
                dt_max: base_opts.dt_max.min(ramp_dt),
                ..base_opts
            }
        } else {
            base_opts
        };
        let (next, reports, d) = advance(&column, &state, target, dt, cells, linear, &opts)?;
        run.increments += reports.len();
        run.clamp_events += reports.iter().map(|r| r.clamp_events as u64).sum::<u64>();
        state = next;
        dt = d;
        run.series.push(SeriesRow::new(cfg, &state));
        if !seen_ramp && target >= ramp * (1.0 - 1e-12) {
            run.after_ramp = state.clone();
            seen_ramp = true;
        }
        if snapshot_times.iter().any(|s| close(target, *s)) {
            run.snapshots.push(state.clone());
        }
        for (&(depth, _), &tt) in TERZAGHI_PAIRS.iter().zip(&terzaghi_times) {
            if close(target, tt) {
                let x = height * (1.0 - depth);
                let computed = state.pressure_at(&column, x);
                let series = terzaghi_pressure(&eff, load, height, depth * height, state.t, ramp);
                run.terzaghi.push(TerzaghiSample {
                    depth: depth * height,
                    t: state.t,
                    computed,
                    series,
                    error: (computed - series).abs() / load,
                });
            }
        }
    }
    run.final_state = state;
    Ok(run)
}

/// Largest relative spread `(max - min) / mean` over the per-point property
/// fields phi, E, nu, C11, alpha, M and K.
pub fn property_spread(state: &MacroState) -> f64 {
    let fields: [fn(&MaterialPointState) -> f64; 7] = [
        |m| m.phi,
        |m| m.e,
        |m| m.nu,
        |m| m.eff.c.c11,
        |m| m.eff.alpha,
        |m| m.eff.biot_modulus,
        |m| m.eff.k11,
    ];
    fields
        .iter()
        .map(|f| {
            let v: Vec<f64> = state.points.iter().map(|q| f(&q.material)).collect();
            let (lo, hi) = v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                    (a.min(*x), b.max(*x))
                });
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            (hi - lo) / mean.abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub linear: bool,
    pub increments: usize,
    pub clamp_events: u64,
    pub final_t_s: f64,
    pub final_settlement: f64,
    pub final_drained: f64,
    pub mass_balance_relative: f64,
    pub final_property_spread: f64,
    pub terzaghi_max_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsolidationSummary {
    pub runs: Vec<RunSummary>,
    /// Remodelled settlement below linear at every output time.
    pub settlement_below_linear: Option<bool>,
    /// Remodelled cumulative drainage below linear at every output time.
    pub drainage_below_linear: Option<bool>,
    /// First time the remodelled drainage reaches the linear one.
    pub drainage_crossing_t_s: Option<f64>,
    /// After the ramp: porosity above `phi_i` at the base, below it at the top.
    pub early_porosity_trend: Option<bool>,
}

pub fn summarize(cfg: &ExperimentConfig, runs: &[ConsolidationRun]) -> ConsolidationSummary {
    let summaries = runs
        .iter()
        .map(|r| RunSummary {
            linear: r.linear,
            increments: r.increments,
            clamp_events: r.clamp_events,
            final_t_s: cfg.phys(r.final_state.t, Kind::Time),
            final_settlement: r.final_state.settlement(),
            final_drained: r.final_state.total_drained(),
            mass_balance_relative: mass_balance(&r.final_state).relative(),
            final_property_spread: property_spread(&r.final_state),
            terzaghi_max_error: r
                .linear
                .then(|| r.terzaghi.iter().map(|s| s.error).fold(0.0, f64::max)),
        })
        .collect();
    let lin = runs.iter().find(|r| r.linear);
    let rem = runs.iter().find(|r| !r.linear);
    let pair = lin.zip(rem);
    let settlement_below_linear = pair.map(|(l, r)| {
        l.series
            .iter()
            .zip(&r.series)
            .all(|(a, b)| b.settlement < a.settlement)
    });
    let drainage_below_linear = pair.map(|(l, r)| {
        l.series
            .iter()
            .zip(&r.series)
            .all(|(a, b)| b.drained < a.drained)
    });
    let drainage_crossing_t_s = pair.and_then(|(l, r)| {
        l.series
            .iter()
            .zip(&r.series)
            .find(|(a, b)| b.drained >= a.drained)
            .map(|(a, _)| a.t_s)
    });
    let early_porosity_trend = rem.map(|r| {
        let pts = &r.after_ramp.points;
        let phi_i = cfg.material.phi_i;
        pts[0].material.phi > phi_i && pts[pts.len() - 1].material.phi < phi_i
    });
    ConsolidationSummary {
        runs: summaries,
        settlement_below_linear,
        drainage_below_linear,
        drainage_crossing_t_s,
        early_porosity_trend,
    }
}

pub fn write_series<W: Write>(out: &mut W, series: &[SeriesRow]) -> std::io::Result<()> {
    writeln!(out, "{SERIES_HEADER}")?;
    for r in series {
        writeln!(
            out,
            "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.3e}",
            r.t, r.t_s, r.settlement, r.drained, r.p_base, r.phi_top, r.phi_base, r.mass_imbalance
        )?;
    }
    Ok(())
}
