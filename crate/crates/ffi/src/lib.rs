//! C ABI over the poroscale toolkit.
//!
//! Every function returns a [`PsStatus`]; on failure the message is available
//! from [`ps_last_error_message`] on the same thread. Handles are opaque and
//! must be released with their `_free` function. Physical quantities cross the
//! boundary in SI units except where a function says dimensionless.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use poroscale::expcli::config::{ExperimentConfig, LoadKind};
use poroscale::expcli::consolidate::{column, initial_material, step_options};
use poroscale::hyperverify::{incremental_uniaxial, oracle_nominal_stress};
use poroscale::macro1d::{advance, Column, MacroState, StepOptions};
use poroscale::microcell::{solve_cell, CellSolution};
use poroscale::remodel::{CellProvider, DirectCells, NeoHookeanParams};
use poroscale::scales::Kind;
use poroscale::surrogate::{load_bundle, SurrogateBundle};
use poroscale::tensor::SquareSym4;
use poroscale::upscale::effective_from_cell;
use poroscale::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    Io = 4,
    Format = 5,
    Solver = 6,
    Rejected = 7,
    Extrapolation = 8,
    Panic = 9,
}

/// Cell-averaged tensors at the reference solid modulus.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PsCell {
    pub phi: f64,
    pub nu: f64,
    pub m11: f64,
    pub m12: f64,
    pub m44: f64,
    pub q11: f64,
    pub k11: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PsEffective {
    pub c11: f64,
    pub c12: f64,
    pub c44: f64,
    pub alpha: f64,
    pub biot_modulus: f64,
    pub k11: f64,
}

/// A trained surrogate bundle.
pub struct PsBundle {
    bundle: SurrogateBundle,
}

/// A consolidation column and its current state.
pub struct PsColumn {
    cfg: ExperimentConfig,
    column: Column,
    state: MacroState,
    cells: Box<dyn CellProvider + Send>,
    linear: bool,
    dt: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PsStatus {
    match e {
        Error::InvalidInput(_) | Error::Mesh(_) | Error::NonPhysical { .. } => {
            PsStatus::InvalidInput
        }
        Error::Config(_) | Error::Gate(_) => PsStatus::Config,
        Error::Io { .. } => PsStatus::Io,
        Error::Json(_) | Error::Format(_) => PsStatus::Format,
        Error::Solver(_) | Error::Diverged { .. } | Error::Indefinite(_) => PsStatus::Solver,
        Error::Rejected { .. } => PsStatus::Rejected,
        Error::Extrapolation { .. } => PsStatus::Extrapolation,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (PsStatus, String)>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PsStatus::Panic
        }
    }
}

fn core(e: Error) -> (PsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PsStatus, String) {
    (PsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (PsStatus::InvalidInput, format!("{what} is not UTF-8")))
}

fn to_ps(c: &CellSolution) -> PsCell {
    PsCell {
        phi: c.phi,
        nu: c.nu,
        m11: c.m.c11,
        m12: c.m.c12,
        m44: c.m.c44,
        q11: c.q11,
        k11: c.k11,
    }
}

fn from_ps(c: &PsCell) -> CellSolution {
    CellSolution {
        phi: c.phi,
        nu: c.nu,
        m: SquareSym4::new(c.m11, c.m12, c.m44),
        q11: c.q11,
        k11: c.k11,
    }
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Solves the cell problems at `(phi, nu)` with mesh spacing `resolution`.
/// All cell quantities are dimensionless.
///
/// # Safety
/// `out` must point to writable memory for one `PsCell`.
#[no_mangle]
pub unsafe extern "C" fn ps_cell_solve(
    phi: f64,
    nu: f64,
    resolution: f64,
    out: *mut PsCell,
) -> PsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (cell, _) = solve_cell(phi, nu, resolution).map_err(core)?;
        *out = to_ps(&cell);
        Ok(())
    })
}

/// Effective Biot coefficients for a cell at dimensionless solid moduli
/// `(solid_e, solid_nu)`.
///
/// # Safety
/// `cell` must point to a valid `PsCell` and `out` to writable memory.
#[no_mangle]
pub unsafe extern "C" fn ps_effective_from_cell(
    cell: *const PsCell,
    solid_e: f64,
    solid_nu: f64,
    out: *mut PsEffective,
) -> PsStatus {
    guard(|| {
        let cell = cell.as_ref().ok_or_else(|| null("cell"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let eff = effective_from_cell(&from_ps(cell), solid_e, solid_nu, cell.phi).map_err(core)?;
        *out = PsEffective {
            c11: eff.c.c11,
            c12: eff.c.c12,
            c44: eff.c.c44,
            alpha: eff.alpha,
            biot_modulus: eff.biot_modulus,
            k11: eff.k11,
        };
        Ok(())
    })
}

/// Incremental and closed-form nominal stress of a neo-Hookean bar stretched
/// to `stretch` in `increments` steps. Stresses are in the units of `e`.
///
/// # Safety
/// `incremental` and `oracle` must point to writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_hyper_uniaxial(
    e: f64,
    nu: f64,
    stretch: f64,
    increments: usize,
    incremental: *mut f64,
    oracle: *mut f64,
) -> PsStatus {
    guard(|| {
        let incremental = incremental.as_mut().ok_or_else(|| null("incremental"))?;
        let oracle = oracle.as_mut().ok_or_else(|| null("oracle"))?;
        let params = NeoHookeanParams::from_moduli(e, nu).map_err(core)?;
        let run = incremental_uniaxial(&params, stretch, increments).map_err(core)?;
        *oracle = oracle_nominal_stress(&params, stretch).map_err(core)?;
        *incremental = run.final_stress();
        Ok(())
    })
}

/// Loads a bundle written by `poroscale train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_bundle_load(path: *const c_char, out: *mut *mut PsBundle) -> PsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let path = text(path, "path")?;
        let bundle = load_bundle(Path::new(path)).map_err(core)?;
        *out = Box::into_raw(Box::new(PsBundle { bundle }));
        Ok(())
    })
}

/// Surrogate prediction of the cell tensors at `(phi, nu)`.
///
/// # Safety
/// `bundle` must come from `ps_bundle_load`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_bundle_predict(
    bundle: *const PsBundle,
    phi: f64,
    nu: f64,
    out: *mut PsCell,
) -> PsStatus {
    guard(|| {
        let b = bundle.as_ref().ok_or_else(|| null("bundle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = to_ps(&b.bundle.cell(nu, phi).map_err(core)?);
        Ok(())
    })
}

/// # Safety
/// `bundle` must come from `ps_bundle_load` or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_bundle_free(bundle: *mut PsBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Builds a consolidation column from a TOML overlay on the consolidation
/// defaults (`""` keeps them). With a null `bundle` the column uses direct
/// cell solves. The bundle is copied, so it may be freed afterwards.
///
/// # Safety
/// `config_toml` must be NUL-terminated, `bundle` null or a live bundle, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_column_new(
    config_toml: *const c_char,
    bundle: *const PsBundle,
    linear: bool,
    out: *mut *mut PsColumn,
) -> PsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cfg = ExperimentConfig::from_toml_over(
            LoadKind::Consolidation,
            text(config_toml, "config_toml")?,
        )
        .map_err(core)?;
        cfg.validate().map_err(core)?;
        let cells: Box<dyn CellProvider + Send> = match bundle.as_ref() {
            Some(b) => Box::new(b.bundle.clone()),
            None => Box::new(DirectCells {
                resolution: cfg.cells.resolution,
            }),
        };
        let column = column(&cfg).map_err(core)?;
        let state = MacroState::initial(
            &column,
            initial_material(&cfg, cells.as_ref()).map_err(core)?,
        );
        let dt = cfg.nd(cfg.loading.ramp_time, Kind::Time) / cfg.loading.ramp_increments as f64;
        *out = Box::into_raw(Box::new(PsColumn {
            cfg,
            column,
            state,
            cells,
            linear,
            dt,
        }));
        Ok(())
    })
}

/// Advances the column to `t_seconds`. The load ramp is resolved with the
/// configured number of increments.
///
/// # Safety
/// `col` must come from `ps_column_new`.
#[no_mangle]
pub unsafe extern "C" fn ps_column_advance(col: *mut PsColumn, t_seconds: f64) -> PsStatus {
    guard(|| {
        let c = col.as_mut().ok_or_else(|| null("column"))?;
        let target = c.cfg.nd(t_seconds, Kind::Time);
        if !(target.is_finite()) {
            return Err((
                PsStatus::InvalidInput,
                format!("target time {t_seconds} is not finite"),
            ));
        }
        let opts = step_options(&c.cfg);
        let ramp = c.cfg.nd(c.cfg.loading.ramp_time, Kind::Time);
        if c.state.t < ramp {
            let ramp_dt = ramp / c.cfg.loading.ramp_increments as f64;
            let ramp_opts = StepOptions {
                dt_max: opts.dt_max.min(ramp_dt),
                ..opts
            };
            let (s, _, dt) = advance(
                &c.column,
                &c.state,
                target.min(ramp),
                c.dt,
                c.cells.as_ref(),
                c.linear,
                &ramp_opts,
            )
            .map_err(core)?;
            c.state = s;
            c.dt = dt;
        }
        if target > c.state.t {
            let (s, _, dt) = advance(
                &c.column,
                &c.state,
                target,
                c.dt,
                c.cells.as_ref(),
                c.linear,
                &opts,
            )
            .map_err(core)?;
            c.state = s;
            c.dt = dt;
        }
        Ok(())
    })
}

/// Current time (s), settlement of the top face (m) and cumulative drained
/// volume per unit area (m). Any output pointer may be null.
///
/// # Safety
/// `col` must come from `ps_column_new`; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_column_status(
    col: *const PsColumn,
    t_seconds: *mut f64,
    settlement: *mut f64,
    drained: *mut f64,
) -> PsStatus {
    guard(|| {
        let c = col.as_ref().ok_or_else(|| null("column"))?;
        if let Some(t) = t_seconds.as_mut() {
            *t = c.cfg.phys(c.state.t, Kind::Time);
        }
        if let Some(s) = settlement.as_mut() {
            *s = c.cfg.phys(c.state.settlement(), Kind::Length);
        }
        if let Some(d) = drained.as_mut() {
            *d = c.cfg.phys(c.state.total_drained(), Kind::Length);
        }
        Ok(())
    })
}

/// Pore pressure (Pa) at height `x` (m) above the base.
///
/// # Safety
/// `col` must come from `ps_column_new`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_column_pressure_at(
    col: *const PsColumn,
    x: f64,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        let c = col.as_ref().ok_or_else(|| null("column"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let xd = c.cfg.nd(x, Kind::Length);
        if !(0.0..=c.column.length).contains(&xd) {
            return Err((
                PsStatus::InvalidInput,
                format!("x = {x} m lies outside the column"),
            ));
        }
        *out = c.cfg.phys(c.state.pressure_at(&c.column, xd), Kind::Stress);
        Ok(())
    })
}

/// # Safety
/// `col` must come from `ps_column_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_column_free(col: *mut PsColumn) {
    if !col.is_null() {
        drop(Box::from_raw(col));
    }
}
