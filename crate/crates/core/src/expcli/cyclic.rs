//! Triangular axial load cycles on a sample drained through its top face.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::consolidate::{initial_material, step_options, top_drainage};
use crate::macro1d::{
    advance, Column, EndCondition, MacroState, Mechanical, StepOptions, TimeFunction,
};
use crate::remodel::CellProvider;
use crate::scales::Kind;
use crate::upscale::undrained_tensor;
use crate::Result;

/// Compressive (`+1`) or tensile (`-1`) cycles.
pub fn column(cfg: &ExperimentConfig, period: f64, sign: f64) -> Result<Column> {
    let load = cfg.nd(cfg.loading.magnitude, Kind::Stress);
    let top = EndCondition::new(
        Mechanical::Traction(TimeFunction::Triangle {
            max: -sign * load,
            period,
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

/// Area enclosed by a polygon given as `(x, y)` vertices.
pub fn shoelace(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    0.5 * twice.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub cycle: usize,
    /// Applied load, positive in the loading direction (dimensionless).
    pub load: f64,
    pub stretch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Loop area in the (stretch, load) plane.
    pub area: f64,
    /// Strain left at the end of the cycle, positive in the loading direction.
    pub residual_strain: f64,
    pub min_stretch: f64,
    pub max_stretch: f64,
    /// Peak load over the strain range of the cycle.
    pub secant_stiffness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclicRun {
    pub period_s: f64,
    pub linear: bool,
    pub sign: f64,
    #[serde(skip)]
    pub samples: Vec<Sample>,
    pub cycles: Vec<CycleRecord>,
    /// Point-averaged uniaxial-strain moduli at the end of the run.
    pub drained_c11: f64,
    pub undrained_c11: f64,
}

impl CyclicRun {
    pub fn last(&self) -> &CycleRecord {
        self.cycles.last().expect("at least one cycle")
    }
}

fn stretch(column: &Column, s: &MacroState) -> f64 {
    1.0 + s.u[s.u.len() - 1] / column.length
}

/// Runs `cycles` cycles of period `period_s` (s), sampling `steps_per_cycle`
/// times per cycle.
pub fn run_cyclic(
    cfg: &ExperimentConfig,
    cells: &dyn CellProvider,
    linear: bool,
    period_s: f64,
    cycles: usize,
    sign: f64,
) -> Result<CyclicRun> {
    let period = cfg.nd(period_s, Kind::Time);
    let column = column(cfg, period, sign)?;
    let material = initial_material(cfg, cells)?;
    let n = cfg.solver.steps_per_cycle;
    let base = step_options(cfg);
    let opts = StepOptions {
        dt_max: base.dt_max.min(period / n as f64),
        ..base
    };
    let traction = match column.ends[1].mechanical {
        Mechanical::Traction(f) => f,
        Mechanical::Displacement(_) => unreachable!("cyclic top face is loaded"),
    };

    let mut state = MacroState::initial(&column, material);
    let mut dt = period / n as f64;
    let mut samples = vec![Sample {
        t: 0.0,
        cycle: 0,
        load: 0.0,
        stretch: 1.0,
    }];
    let mut records = Vec::with_capacity(cycles);
    for k in 0..cycles {
        let start = samples.len() - 1;
        for j in 1..=n {
            let target = period * (k as f64 + j as f64 / n as f64);
            let (next, _, d) = advance(&column, &state, target, dt, cells, linear, &opts)?;
            state = next;
            dt = d;
            samples.push(Sample {
                t: state.t,
                cycle: k + 1,
                load: -sign * traction.at(state.t),
                stretch: stretch(&column, &state),
            });
        }
        let cyc = &samples[start..];
        let loop_pts: Vec<(f64, f64)> = cyc.iter().map(|s| (s.stretch, s.load)).collect();
        let (lo, hi) = cyc
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
                (a.min(s.stretch), b.max(s.stretch))
            });
        let peak = cyc.iter().map(|s| s.load).fold(0.0, f64::max);
        let end = cyc.last().expect("cycle samples").stretch;
        records.push(CycleRecord {
            cycle: k + 1,
            area: shoelace(&loop_pts),
            residual_strain: sign * (1.0 - end),
            min_stretch: lo,
            max_stretch: hi,
            secant_stiffness: peak / (hi - lo),
        });
    }
    let np = state.points.len() as f64;
    let drained_c11 = state
        .points
        .iter()
        .map(|q| q.material.eff.c.c11)
        .sum::<f64>()
        / np;
    let undrained_c11 = state
        .points
        .iter()
        .map(|q| undrained_tensor(&q.material.eff).c11)
        .sum::<f64>()
        / np;
    Ok(CyclicRun {
        period_s,
        linear,
        sign,
        samples,
        cycles: records,
        drained_c11,
        undrained_c11,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodResult {
    pub period_s: f64,
    pub final_area: f64,
    /// Final-cycle area over that of the reference period.
    pub area_ratio: f64,
    pub min_stretch: f64,
    pub final_residual_strain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FastLimit {
    pub period_s: f64,
    pub secant_stiffness: f64,
    pub undrained_c11: f64,
    pub drained_c11: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MullinsReport {
    pub cycles: usize,
    /// Reloading after cycling needs less load than the first loading at
    /// every common stretch.
    pub reload_below_monotonic: bool,
    /// Largest `load_reload - load_monotonic` over common stretches.
    pub max_excess: f64,
    pub residual_compression: f64,
    pub residual_tension: f64,
    pub tension_exceeds_compression: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclicSummary {
    pub linear: bool,
    pub reference: CyclicRun,
    /// Cycle-to-cycle residual strain increments of the reference run.
    pub residual_increments: Vec<f64>,
    pub sweep: Vec<PeriodResult>,
    pub fast_limit: Option<FastLimit>,
    pub mullins: Option<MullinsReport>,
}

/// First-cycle loading branch against the reloading branch after `cycles`
/// cycles, as `(strain, load)` lists.
fn loading_branch(run: &CyclicRun, cycle: usize, n: usize) -> Vec<(f64, f64)> {
    let start = (cycle - 1) * n;
    run.samples[start..=start + n / 2]
        .iter()
        .map(|s| (run.sign * (1.0 - s.stretch), s.load))
        .collect()
}

fn interpolate(branch: &[(f64, f64)], x: f64) -> Option<f64> {
    branch.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        ((x0 <= x && x <= x1) || (x1 <= x && x <= x0)).then(|| {
            if x1 == x0 {
                y0
            } else {
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        })
    })
}

pub fn mullins_check(
    cfg: &ExperimentConfig,
    cells: &dyn CellProvider,
    cycles: usize,
) -> Result<MullinsReport> {
    let n = cfg.solver.steps_per_cycle;
    let (comp, tens) = rayon::join(
        || run_cyclic(cfg, cells, false, cfg.loading.cycle_period, cycles + 1, 1.0),
        || run_cyclic(cfg, cells, false, cfg.loading.cycle_period, cycles, -1.0),
    );
    let (comp, tens) = (comp?, tens?);
    let mono = loading_branch(&comp, 1, n);
    let reload = loading_branch(&comp, cycles + 1, n);
    let max_excess = reload
        .iter()
        .filter_map(|&(x, y)| interpolate(&mono, x).map(|ym| y - ym))
        .fold(f64::NEG_INFINITY, f64::max);
    let residual_compression = comp.cycles[cycles - 1].residual_strain;
    let residual_tension = tens.last().residual_strain;
    Ok(MullinsReport {
        cycles,
        reload_below_monotonic: max_excess.is_finite() && max_excess <= 0.0,
        max_excess,
        residual_compression,
        residual_tension,
        tension_exceeds_compression: residual_tension.abs() > residual_compression.abs(),
    })
}

/// Reference period, the period sweep, the fast-limit stiffness check and,
/// for remodelled runs, the Mullins comparison.
pub fn run_cyclic_study(
    cfg: &ExperimentConfig,
    cells: &dyn CellProvider,
    linear: bool,
) -> Result<CyclicSummary> {
    let reference_period = cfg.loading.cycle_period;
    let mut periods = cfg.loading.period_sweep.clone();
    if !periods.contains(&reference_period) {
        periods.push(reference_period);
    }
    periods.sort_by(f64::total_cmp);
    let runs: Vec<CyclicRun> = periods
        .par_iter()
        .map(|t| run_cyclic(cfg, cells, linear, *t, cfg.loading.cycles, 1.0))
        .collect::<Result<_>>()?;
    let reference = runs
        .iter()
        .find(|r| r.period_s == reference_period)
        .expect("reference period run")
        .clone();
    let ref_area = reference.last().area;
    let sweep = runs
        .iter()
        .map(|r| PeriodResult {
            period_s: r.period_s,
            final_area: r.last().area,
            area_ratio: r.last().area / ref_area,
            min_stretch: r
                .cycles
                .iter()
                .map(|c| c.min_stretch)
                .fold(f64::INFINITY, f64::min),
            final_residual_strain: r.last().residual_strain,
        })
        .collect();
    let fast_limit = (runs.len() > 1).then(|| {
        let r = &runs[0];
        let secant = r.last().secant_stiffness;
        FastLimit {
            period_s: r.period_s,
            secant_stiffness: secant,
            undrained_c11: r.undrained_c11,
            drained_c11: r.drained_c11,
            relative_error: (secant - r.undrained_c11).abs() / r.undrained_c11,
        }
    });
    let mut residual_increments = Vec::with_capacity(reference.cycles.len());
    let mut prev = 0.0;
    for c in &reference.cycles {
        residual_increments.push(c.residual_strain - prev);
        prev = c.residual_strain;
    }
    let mullins = if linear {
        None
    } else {
        Some(mullins_check(cfg, cells, cfg.loading.cycles.min(5))?)
    };
    Ok(CyclicSummary {
        linear,
        reference,
        residual_increments,
        sweep,
        fast_limit,
        mullins,
    })
}

/// True when the increment magnitudes after cycle `after` strictly decrease.
pub fn increments_shrink_after(increments: &[f64], after: usize) -> bool {
    increments.len() > after + 1
        && increments[after..]
            .windows(2)
            .all(|w| w[1].abs() < w[0].abs())
}

pub fn write_samples<W: Write>(
    out: &mut W,
    cfg: &ExperimentConfig,
    run: &CyclicRun,
) -> std::io::Result<()> {
    writeln!(out, "t,t_s,cycle,load,load_pa,stretch")?;
    for s in &run.samples {
        writeln!(
            out,
            "{:.10e},{:.10e},{},{:.10e},{:.10e},{:.12e}",
            s.t,
            cfg.phys(s.t, Kind::Time),
            s.cycle,
            s.load,
            cfg.phys(s.load, Kind::Stress),
            s.stretch
        )?;
    }
    Ok(())
}

pub fn write_cycles<W: Write>(out: &mut W, runs: &[&CyclicRun]) -> std::io::Result<()> {
    writeln!(
        out,
        "period_s,cycle,area,residual_strain,min_stretch,max_stretch,secant_stiffness"
    )?;
    for r in runs {
        for c in &r.cycles {
            writeln!(
                out,
                "{},{},{:.10e},{:.10e},{:.12e},{:.12e},{:.10e}",
                r.period_s,
                c.cycle,
                c.area,
                c.residual_strain,
                c.min_stretch,
                c.max_stretch,
                c.secant_stiffness
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shoelace_areas() {
        assert_eq!(
            shoelace(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
            1.0
        );
        assert_eq!(
            shoelace(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]),
            1.0
        );
        assert_eq!(shoelace(&[(0.0, 0.0), (2.0, 0.0), (0.0, 3.0)]), 3.0);
        // A path retraced exactly encloses nothing.
        assert_eq!(
            shoelace(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (1.0, 1.0)]),
            0.0
        );
        assert_eq!(shoelace(&[(0.0, 0.0), (1.0, 1.0)]), 0.0);
    }

    #[test]
    fn interpolation_on_either_direction() {
        let up = [(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)];
        assert_eq!(interpolate(&up, 0.5), Some(1.0));
        assert_eq!(interpolate(&up, 3.0), None);
        let down = [(2.0, 3.0), (1.0, 2.0)];
        assert_eq!(interpolate(&down, 1.5), Some(2.5));
    }

    #[test]
    fn shrinking_increments() {
        assert!(increments_shrink_after(&[5.0, 1.0, 2.0, 0.5, 0.4, 0.3], 2));
        assert!(!increments_shrink_after(&[5.0, 1.0, 2.0, 0.5, 0.6], 2));
        assert!(!increments_shrink_after(&[1.0], 2));
        assert!(increments_shrink_after(&[0.1, 0.0, -0.3, -0.2, -0.1], 2));
        assert!(!increments_shrink_after(&[0.1, 0.0, -0.1, -0.2], 2));
    }
}
