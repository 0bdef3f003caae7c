//! Command-line front end: dataset generation, training, the three
//! experiments and the verification drivers.

pub mod config;
pub mod consolidate;
pub mod cyclic;
pub mod darcy;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use config::{ExperimentConfig, LoadKind, Mode};

use crate::macro1d::{write_nodal_csv, write_point_csv};
use crate::microcell::{read_dataset, write_dataset};
use crate::remodel::{CellProvider, DirectCells};
use crate::surrogate::{load_bundle, save_bundle, SurrogateBundle};
use crate::{Error, Result};

pub const MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "poroscale",
    version,
    about = "Multiscale poroelasticity experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file overlaid on the command defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run with frozen coefficients (no remodelling).
    #[arg(long, global = true)]
    pub linear: bool,
    /// Load ramp increments; for verify-hyper the largest increment count.
    #[arg(long, global = true)]
    pub increments: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the cell problems on the (phi, nu) grid.
    GenCells,
    /// Train the five surrogate networks.
    Train,
    /// Column consolidation under a constant axial pressure.
    Consolidate,
    /// Filtration sweep to steady state.
    Darcy,
    /// Cyclic axial loading and the cycle-period sweep.
    Cyclic,
    /// Incremental neo-Hookean uniaxial test against the closed form.
    VerifyHyper,
    /// Held-out check of a trained bundle.
    VerifyAnn,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GenCells => "gen-cells",
            Command::Train => "train",
            Command::Consolidate => "consolidate",
            Command::Darcy => "darcy",
            Command::Cyclic => "cyclic",
            Command::VerifyHyper => "verify-hyper",
            Command::VerifyAnn => "verify-ann",
        }
    }

    fn defaults(self) -> LoadKind {
        match self {
            Command::Darcy => LoadKind::Darcy,
            Command::Cyclic => LoadKind::Cyclic,
            _ => LoadKind::Consolidation,
        }
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    /// Set when an accuracy gate failed; the outputs are still written.
    pub gate_failure: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    status: &'a str,
    message: Option<String>,
    config_file: Option<&'a Path>,
    overrides: Overrides,
    config: Option<&'a ExperimentConfig>,
    conventions: Vec<String>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Overrides {
    linear: bool,
    increments: Option<usize>,
    out: Option<PathBuf>,
}

/// Resolved configuration: command defaults, then the file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(cli.command.defaults(), cli.config.as_deref())?;
    if cli.linear {
        cfg.mode = Mode::Linear;
    }
    if let Some(n) = cli.increments {
        if n == 0 {
            return Err(Error::Config("--increments must be positive".into()));
        }
        if cli.command == Command::VerifyHyper {
            let mut ns: Vec<usize> = std::iter::successors(Some(1usize), |k| k.checked_mul(10))
                .take_while(|k| *k < n)
                .collect();
            ns.push(n);
            cfg.hyper.increments = ns;
        } else {
            cfg.loading.ramp_increments = n;
        }
    }
    if let Some(out) = &cli.out {
        cfg.paths.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Relative dataset and bundle paths live in the output directory.
fn in_out(cfg: &ExperimentConfig, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        cfg.paths.out.join(p)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn write_with(
    path: PathBuf,
    outputs: &mut Vec<PathBuf>,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = create(&path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;
    outputs.push(path);
    Ok(())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    outputs.push(path);
    Ok(())
}

fn bundle(cfg: &ExperimentConfig) -> Result<SurrogateBundle> {
    let path = in_out(cfg, &cfg.paths.bundle);
    if !path.exists() {
        return Err(Error::InvalidInput(format!(
            "surrogate bundle missing at {} (run `train` first or use --linear)",
            path.display()
        )));
    }
    load_bundle(&path)
}

/// The trained bundle when present; linear runs fall back to direct cell
/// solves for their initial coefficients.
fn provider(cfg: &ExperimentConfig, runs: &[bool]) -> Result<Box<dyn CellProvider>> {
    let path = in_out(cfg, &cfg.paths.bundle);
    if runs.iter().all(|linear| *linear) && !path.exists() {
        return Ok(Box::new(DirectCells {
            resolution: cfg.cells.resolution,
        }));
    }
    Ok(Box::new(bundle(cfg)?))
}

fn mode_name(linear: bool) -> &'static str {
    if linear {
        "linear"
    } else {
        "remodelled"
    }
}

/// Runs one command with a resolved configuration.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    let out_dir = &cfg.paths.out;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut o = Outcome::default();
    match command {
        Command::GenCells => {
            let ds = verify::gen_cells(cfg)?;
            let path = in_out(cfg, &cfg.paths.dataset);
            write_dataset(&ds.records, &path)?;
            o.outputs.push(path);
            if !ds.failures.is_empty() {
                log::warn!("{} cell solves failed", ds.failures.len());
                write_json(
                    out_dir.join("cells_failures.json"),
                    &ds.failures,
                    &mut o.outputs,
                )?;
            }
        }
        Command::Train => {
            let records = read_dataset(&in_out(cfg, &cfg.paths.dataset))?;
            let b = verify::train(cfg, &records)?;
            let path = in_out(cfg, &cfg.paths.bundle);
            save_bundle(&b, &path)?;
            o.outputs.push(path);
            write_json(
                out_dir.join("train_report.json"),
                &b.metadata.reports,
                &mut o.outputs,
            )?;
            let failed = b.gate_failures();
            if !failed.is_empty() {
                o.gate_failure = Some(format!(
                    "validation error above {} for {failed:?}",
                    b.metadata.config.gate
                ));
            }
        }
        Command::Consolidate => {
            let runs_wanted = cfg.mode.runs();
            let cells = provider(cfg, &runs_wanted)?;
            let runs = runs_wanted
                .iter()
                .map(|linear| consolidate::run_consolidation(cfg, cells.as_ref(), *linear))
                .collect::<Result<Vec<_>>>()?;
            let column = consolidate::column(cfg)?;
            for r in &runs {
                let name = mode_name(r.linear);
                write_with(
                    out_dir.join(format!("consolidation_{name}_series.csv")),
                    &mut o.outputs,
                    |w| consolidate::write_series(w, &r.series),
                )?;
                write_with(
                    out_dir.join(format!("consolidation_{name}_nodal.csv")),
                    &mut o.outputs,
                    |w| {
                        for (i, s) in r
                            .snapshots
                            .iter()
                            .chain(std::iter::once(&r.final_state))
                            .enumerate()
                        {
                            write_nodal_csv(w, &column, s, i == 0)?;
                        }
                        Ok(())
                    },
                )?;
                write_with(
                    out_dir.join(format!("consolidation_{name}_points.csv")),
                    &mut o.outputs,
                    |w| {
                        let states = std::iter::once(&r.after_ramp)
                            .chain(&r.snapshots)
                            .chain(std::iter::once(&r.final_state));
                        for (i, s) in states.enumerate() {
                            write_point_csv(w, s, i == 0)?;
                        }
                        Ok(())
                    },
                )?;
            }
            write_json(
                out_dir.join("consolidation_summary.json"),
                &consolidate::summarize(cfg, &runs),
                &mut o.outputs,
            )?;
        }
        Command::Darcy => {
            let runs_wanted = cfg.mode.runs();
            let cells = provider(cfg, &runs_wanted)?;
            let mut summaries = Vec::new();
            for linear in runs_wanted {
                let s = darcy::run_darcy(cfg, cells.as_ref(), linear)?;
                let name = mode_name(linear);
                write_with(
                    out_dir.join(format!("darcy_{name}_points.csv")),
                    &mut o.outputs,
                    |w| darcy::write_points(w, &s.sweep.points),
                )?;
                write_with(
                    out_dir.join(format!("darcy_{name}_sizes.csv")),
                    &mut o.outputs,
                    |w| darcy::write_sizes(w, &s.sizes),
                )?;
                for n in &s.nu_sweeps {
                    write_with(
                        out_dir.join(format!("darcy_{name}_nu{}_points.csv", n.nu_i)),
                        &mut o.outputs,
                        |w| darcy::write_points(w, &n.points),
                    )?;
                }
                summaries.push(s);
            }
            write_json(
                out_dir.join("darcy_summary.json"),
                &summaries,
                &mut o.outputs,
            )?;
        }
        Command::Cyclic => {
            let runs_wanted = cfg.mode.runs();
            let cells = provider(cfg, &runs_wanted)?;
            let mut summaries = Vec::new();
            for linear in runs_wanted {
                let s = cyclic::run_cyclic_study(cfg, cells.as_ref(), linear)?;
                let name = mode_name(linear);
                write_with(
                    out_dir.join(format!("cyclic_{name}_T{}.csv", s.reference.period_s)),
                    &mut o.outputs,
                    |w| cyclic::write_samples(w, cfg, &s.reference),
                )?;
                write_with(
                    out_dir.join(format!("cyclic_{name}_cycles.csv")),
                    &mut o.outputs,
                    |w| cyclic::write_cycles(w, &[&s.reference]),
                )?;
                summaries.push(s);
            }
            write_json(
                out_dir.join("cyclic_summary.json"),
                &summaries,
                &mut o.outputs,
            )?;
        }
        Command::VerifyHyper => {
            let r = verify::verify_hyper(cfg)?;
            write_with(out_dir.join("hyper.csv"), &mut o.outputs, |w| {
                crate::hyperverify::write_csv(w, &r.runs)
            })?;
            write_json(out_dir.join("hyper_report.json"), &r, &mut o.outputs)?;
            if !r.passed {
                let last = r.points.last().expect("nonempty");
                o.gate_failure = Some(format!(
                    "N = {}: error {:.3e} (tolerance {:.1e}), order slope {:.3}",
                    last.n, last.relative_error, r.tolerance, r.order_slope
                ));
            }
        }
        Command::VerifyAnn => {
            let b = bundle(cfg)?;
            let records = read_dataset(&in_out(cfg, &cfg.paths.dataset))?;
            let r = verify::verify_ann(cfg, &b, &records)?;
            write_json(out_dir.join("ann_report.json"), &r, &mut o.outputs)?;
            if !r.passed {
                let failed: Vec<_> = r
                    .outputs
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| (c.name, c.recomputed_validation_error))
                    .collect();
                o.gate_failure = Some(format!("validation error above {} for {failed:?}", r.gate));
            }
        }
    }
    Ok(o)
}

fn conventions(command: Command, cfg: Option<&ExperimentConfig>) -> Vec<String> {
    match (command, cfg) {
        (Command::Darcy, _) => vec![darcy::CONVENTION.to_string()],
        (Command::Cyclic, Some(c)) => {
            let s = &c.scales;
            let t_c = s.l.powi(4) * s.mu_c / (s.f_c * s.d * s.d);
            let d_for_one_second = (s.l.powi(4) * s.mu_c / s.f_c).sqrt();
            vec![format!(
                "time scale L^4 mu_c / (f_c d^2) = {t_c:.4e} s is used; a 1 s time scale would need d = {d_for_one_second:.3e} m"
            )]
        }
        _ => vec![],
    }
}

/// Runs `cli` and writes the manifest. Returns the exit code:
/// 0 on success, 2 on a gate failure, 1 on any other error.
pub fn run(cli: &Cli) -> i32 {
    let cfg = resolve_config(cli);
    let result = match &cfg {
        Ok(c) => execute(cli.command, c),
        Err(e) => Err(Error::Config(e.to_string())),
    };
    let (status, message, code) = match &result {
        Ok(Outcome {
            gate_failure: None, ..
        }) => ("ok", None, 0),
        Ok(Outcome {
            gate_failure: Some(m),
            ..
        }) => ("gate_failed", Some(m.clone()), 2),
        Err(Error::Gate(m)) => ("gate_failed", Some(m.clone()), 2),
        Err(e) => ("error", Some(e.to_string()), 1),
    };
    if let Some(m) = &message {
        eprintln!("{}: {m}", cli.command.name());
    }
    let out_dir = match &cfg {
        Ok(c) => c.paths.out.clone(),
        Err(_) => cli.out.clone().unwrap_or_else(|| PathBuf::from("out")),
    };
    let outputs = result
        .as_ref()
        .map(|o| o.outputs.iter().map(|p| p.display().to_string()).collect())
        .unwrap_or_default();
    let manifest = Manifest {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        status,
        message,
        config_file: cli.config.as_deref(),
        overrides: Overrides {
            linear: cli.linear,
            increments: cli.increments,
            out: cli.out.clone(),
        },
        config: cfg.as_ref().ok(),
        conventions: conventions(cli.command, cfg.as_ref().ok()),
        outputs,
    };
    let written = std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::io(&out_dir, e))
        .and_then(|_| write_json(out_dir.join(MANIFEST), &manifest, &mut Vec::new()));
    if let Err(e) = written {
        eprintln!("{}: could not write manifest: {e}", cli.command.name());
        return 1;
    }
    code
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
    }
}
