//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! The 2500-cell dataset is cached in `POROSCALE_ACCEPTANCE_DIR` (default:
//! the cargo target tmp dir) and generated on first use. The surrogate is
//! retrained on every run so that its wall time is measured.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use poroscale::expcli::config::{ExperimentConfig, LoadKind};
use poroscale::expcli::consolidate::{
    column, initial_material, property_spread, run_consolidation, step_options, summarize,
};
use poroscale::expcli::cyclic::{increments_shrink_after, run_cyclic_study};
use poroscale::expcli::darcy::run_darcy;
use poroscale::expcli::verify::{gen_cells, train, verify_hyper};
use poroscale::macro1d::{advance, MacroState, StepOptions};
use poroscale::microcell::{read_dataset, solve_cell, write_dataset, CellSolution};
use poroscale::remodel::{CellProvider, DirectCells};
use poroscale::scales::Kind;
use poroscale::surrogate::{save_bundle, SurrogateBundle};
use poroscale::upscale::effective_from_cell;

struct Line {
    id: usize,
    pass: bool,
    detail: String,
}

/// Writes past the test harness capture so the lines appear in every run.
fn report(line: &Line) {
    let tag = if line.pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(
        err,
        "acceptance criterion {}: {tag} | {}",
        line.id, line.detail
    );
}

fn work_dir() -> PathBuf {
    let dir = std::env::var_os("POROSCALE_ACCEPTANCE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn criterion1() -> Line {
    let t0 = Instant::now();
    let (coarse, diag) = solve_cell(0.3, 0.3, 1.0 / 64.0).unwrap();
    let coarse_s = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (fine, fine_diag) = solve_cell(0.3, 0.3, 1.0 / 256.0).unwrap();
    let fine_s = t1.elapsed().as_secs_f64();
    let errs = [
        rel(coarse.m.c11, fine.m.c11),
        rel(coarse.q11, fine.q11),
        rel(coarse.k11, fine.k11),
    ];
    let mean = [
        diag.max_mean_displacement,
        diag.max_mean_pressure,
        fine_diag.max_mean_displacement,
        fine_diag.max_mean_pressure,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let pass = errs.iter().all(|e| *e <= 0.01) && mean <= 1e-8 && coarse_s.max(fine_s) <= 120.0;
    Line {
        id: 1,
        pass,
        detail: format!(
            "1/64 vs 1/256 rel diff M11 {:.2e}, Q11 {:.2e}, K11 {:.2e} (tol 1e-2); zero-mean {mean:.1e} (tol 1e-8); \
             time {coarse_s:.1} s at 1/64, {fine_s:.1} s at 1/256 (limit 120 s)",
            errs[0], errs[1], errs[2]
        ),
    }
}

fn dataset(cfg: &ExperimentConfig) -> Vec<CellSolution> {
    let path = work_dir().join("cells.csv");
    if let Ok(records) = read_dataset(&path) {
        if records.len() == cfg.cells.n_phi * cfg.cells.n_nu {
            return records;
        }
    }
    let t = Instant::now();
    let ds = gen_cells(cfg).unwrap();
    eprintln!(
        "generated {} cells in {:.0} s",
        ds.records.len(),
        t.elapsed().as_secs_f64()
    );
    write_dataset(&ds.records, &path).unwrap();
    ds.records
}

fn criterion2(cfg: &ExperimentConfig, records: &[CellSolution]) -> (Line, SurrogateBundle) {
    let t = Instant::now();
    let bundle = train(cfg, records).unwrap();
    let secs = t.elapsed().as_secs_f64();
    save_bundle(&bundle, &work_dir().join("bundle.json")).unwrap();
    let errs: Vec<String> = bundle
        .metadata
        .reports
        .iter()
        .map(|r| format!("{} {:.2e}", r.name, r.validation_rel_error))
        .collect();
    let m = &bundle.metadata;
    let pass = records.len() == 2500
        && bundle.gate_failures().is_empty()
        && m.config.gate <= 0.02
        && (m.validation_rows as f64 - 0.1 * m.rows as f64).abs() <= 1.0
        && secs <= 600.0;
    let line = Line {
        id: 2,
        pass,
        detail: format!(
            "{} rows, {} held out; validation rel error {} (gate 2e-2); training {secs:.0} s (limit 600 s)",
            m.rows,
            m.validation_rows,
            errs.join(", ")
        ),
    };
    (line, bundle)
}

fn criterion3() -> Line {
    let cfg = ExperimentConfig::defaults_for(LoadKind::Consolidation);
    let r = verify_hyper(&cfg).unwrap();
    let at_1000 = r
        .points
        .iter()
        .find(|p| p.n == 1000)
        .map(|p| p.relative_error);
    let pass = at_1000.is_some_and(|e| e <= 0.01) && r.order_slope <= -0.95;
    let errs: Vec<String> = r
        .points
        .iter()
        .map(|p| format!("N={} {:.2e}", p.n, p.relative_error))
        .collect();
    Line {
        id: 3,
        pass,
        detail: format!(
            "stretch {} oracle {:.4}; rel error {} (tol 1e-2 at N=1000); observed order slope {:.3} (<= -0.95)",
            r.stretch,
            r.oracle,
            errs.join(", "),
            r.order_slope
        ),
    }
}

fn criteria4_5(cells: &SurrogateBundle) -> (Line, Line) {
    let cfg = ExperimentConfig::defaults_for(LoadKind::Consolidation);
    let lin = run_consolidation(&cfg, cells, true).unwrap();
    let rem = run_consolidation(&cfg, cells, false).unwrap();
    let s = summarize(&cfg, &[lin.clone(), rem.clone()]);
    let terz = s.runs[0].terzaghi_max_error.unwrap();
    let mass = s
        .runs
        .iter()
        .map(|r| r.mass_balance_relative)
        .fold(0.0, f64::max);
    let four = Line {
        id: 4,
        pass: lin.terzaghi.len() == 5 && terz <= 0.02 && mass <= 0.01,
        detail: format!(
            "{} Terzaghi pairs, max |p - series| / load {terz:.2e} (tol 2e-2); mass imbalance {mass:.1e} (tol 1e-2)",
            lin.terzaghi.len()
        ),
    };
    let settle = s.settlement_below_linear.unwrap();
    let drain = s.drainage_below_linear.unwrap();
    let spread = property_spread(&rem.final_state);
    let fin =
        |r: &poroscale::expcli::consolidate::ConsolidationRun| r.series.last().copied().unwrap();
    let (fl, fr) = (fin(&lin), fin(&rem));
    let five = Line {
        id: 5,
        pass: settle && drain && spread <= 1e-3,
        detail: format!(
            "settlement below linear at all {} outputs: {settle} (final {:.4} vs {:.4}); drainage below linear: {drain} \
             (crossing at t = {} s, final {:.4} vs {:.4}); steady property spread {spread:.2e} at t = {:.0} s (tol 1e-3)",
            rem.series.len(),
            fr.settlement,
            fl.settlement,
            s.drainage_crossing_t_s.map_or("never".into(), |t| format!("{t:.0}")),
            fr.drained,
            fl.drained,
            fr.t_s
        ),
    };
    (four, five)
}

fn criterion6(cells: &SurrogateBundle) -> Line {
    let cfg = ExperimentConfig::defaults_for(LoadKind::Darcy);
    let d = run_darcy(&cfg, cells, false).unwrap();
    let slope = d.sweep.slope;
    let sizes: Vec<String> = d
        .sizes
        .iter()
        .map(|s| format!("d={:.0e}: {:.3e}", s.d, s.deviation))
        .collect();
    Line {
        id: 6,
        pass: (1.8..=2.2).contains(&slope) && d.small_drop_error <= 0.01 && d.deviation_grows_with_d,
        detail: format!(
            "power-law exponent {slope:.3} over {} drops (range [1.8, 2.2]); |v_rf / (K_i dP) - 1| at dP <= 0.05 dP_max \
             {:.2e} (tol 1e-2); deviation (m/s) {} increasing: {}",
            d.sweep.points.len(),
            d.small_drop_error,
            sizes.join(", "),
            d.deviation_grows_with_d
        ),
    }
}

fn criterion7(cells: &SurrogateBundle) -> Line {
    let cfg = ExperimentConfig::defaults_for(LoadKind::Cyclic);
    let s = run_cyclic_study(&cfg, cells, false).unwrap();
    let r = &s.reference;
    let areas_positive = r.cycles.iter().all(|c| c.area > 0.0);
    let first_residual = r.cycles[0].residual_strain;
    let shrink = increments_shrink_after(&s.residual_increments, 5);
    let ratio = |t: f64| {
        s.sweep
            .iter()
            .find(|p| p.period_s == t)
            .map(|p| p.area_ratio)
            .unwrap()
    };
    let (fast, slow) = (ratio(3.0), ratio(108000.0));
    let fl = s.fast_limit.unwrap();
    Line {
        id: 7,
        pass: r.cycles.len() == 20
            && areas_positive
            && first_residual > 0.0
            && shrink
            && fast < 0.1
            && slow < 0.1
            && fl.relative_error <= 0.05,
        detail: format!(
            "T=108 s, {} cycles: all areas > 0: {areas_positive} (last {:.3e}); cycle-1 residual {first_residual:.3e}; \
             |residual increments| shrinking after cycle 5: {shrink}; area ratio T=3 s {fast:.3}, T=108000 s {slow:.4} \
             (< 0.1); fast-limit secant {:.3} vs undrained {:.3}, rel {:.2e} (tol 5e-2)",
            r.cycles.len(),
            r.last().area,
            fl.secant_stiffness,
            fl.undrained_c11,
            fl.relative_error
        ),
    }
}

/// Replaces every point's coefficients by those of a direct cell solve at the
/// same `(nu, phi)` and solid moduli.
fn with_direct_cells(state: &MacroState, direct: &DirectCells) -> MacroState {
    let mut out = state.clone();
    out.points.par_iter_mut().for_each(|q| {
        let m = &mut q.material;
        m.cell = direct.cell(m.nu, m.phi).unwrap();
        m.eff = effective_from_cell(&m.cell, m.e, m.nu, m.phi).unwrap();
    });
    out
}

fn norm_diff(a: &[f64], b: &[f64], base: &[f64]) -> (f64, f64) {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let n: f64 = base.iter().map(|x| x * x).sum::<f64>().sqrt();
    (d, n)
}

fn criterion8(bundle: &SurrogateBundle) -> Line {
    let mut cfg = ExperimentConfig::defaults_for(LoadKind::Consolidation);
    cfg.geometry.elements = 10;
    let direct = DirectCells {
        resolution: cfg.cells.resolution,
    };
    let col = column(&cfg).unwrap();
    let opts = step_options(&cfg);
    let ramp = cfg.nd(cfg.loading.ramp_time, Kind::Time);
    let ramp_dt = ramp / cfg.loading.ramp_increments as f64;
    let mut state = MacroState::initial(&col, initial_material(&cfg, bundle).unwrap());
    let (s, _, mut dt) = advance(
        &col,
        &state,
        ramp,
        ramp_dt,
        bundle,
        false,
        &StepOptions {
            dt_max: ramp_dt,
            ..opts
        },
    )
    .unwrap();
    state = s;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let end = cfg.nd(cfg.solver.end_time, Kind::Time);
    let mut times: Vec<f64> = (0..3)
        .map(|_| (ramp * 2.0) * (end / (ramp * 2.0)).powf(rng.gen::<f64>()))
        .collect();
    times.sort_by(f64::total_cmp);
    let limit = 3.0 * bundle.max_validation_error();
    let mut worst = 0.0f64;
    let mut worst_nodal = 0.0f64;
    let mut parts = Vec::new();
    for t in times {
        let (s, _, d) = advance(&col, &state, t, dt, bundle, false, &opts).unwrap();
        state = s;
        dt = d;
        let swapped = with_direct_cells(&state, &direct);
        let next = state.t + dt;
        let (a, ..) = advance(&col, &state, next, dt, bundle, true, &opts).unwrap();
        let (b, ..) = advance(&col, &swapped, next, dt, &direct, true, &opts).unwrap();
        let du: Vec<f64> = a.u.iter().zip(&state.u).map(|(x, y)| x - y).collect();
        let dp: Vec<f64> = a.p.iter().zip(&state.p).map(|(x, y)| x - y).collect();
        let (eu, nu) = norm_diff(&a.u, &b.u, &du);
        let (ep, np) = norm_diff(&a.p, &b.p, &dp);
        let (ru, rp) = (eu / nu, ep / np);
        worst = worst.max(ru).max(rp);
        let (_, au) = norm_diff(&a.u, &b.u, &a.u);
        let (_, ap) = norm_diff(&a.p, &b.p, &a.p);
        worst_nodal = worst_nodal.max(eu / au).max(ep / ap);
        parts.push(format!(
            "t={:.0} s: du {ru:.2e}, dp {rp:.2e}",
            cfg.phys(state.t, Kind::Time)
        ));
    }
    Line {
        id: 8,
        pass: worst < limit,
        detail: format!(
            "next-increment (du, dp) with direct cells vs surrogate, relative to the increment: {}; worst {worst:.2e} \
             (limit 3 x {:.2e} = {limit:.2e}); relative to nodal (u, p) {worst_nodal:.2e}",
            parts.join("; "),
            bundle.max_validation_error()
        ),
    }
}

#[test]
fn acceptance() {
    let cfg = ExperimentConfig::defaults_for(LoadKind::Consolidation);
    let mut lines = Vec::new();
    let emit = |l: Line, lines: &mut Vec<Line>| {
        report(&l);
        lines.push(l);
    };
    emit(criterion1(), &mut lines);
    let records = dataset(&cfg);
    let (l2, bundle) = criterion2(&cfg, &records);
    emit(l2, &mut lines);
    emit(criterion3(), &mut lines);
    let (l4, l5) = criteria4_5(&bundle);
    emit(l4, &mut lines);
    emit(l5, &mut lines);
    emit(criterion6(&bundle), &mut lines);
    emit(criterion7(&bundle), &mut lines);
    emit(criterion8(&bundle), &mut lines);

    let text: String = lines
        .iter()
        .map(|l| {
            format!(
                "{} {}: {}\n",
                l.id,
                if l.pass { "PASS" } else { "FAIL" },
                l.detail
            )
        })
        .collect();
    std::fs::write(work_dir().join("acceptance_report.txt"), text).unwrap();
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "criteria not met: {failed:?}");
}
