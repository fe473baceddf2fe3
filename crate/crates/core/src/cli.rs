//! Command implementations behind the `barofv` binary.

use std::fs::{self, File};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::RunConfig;
use crate::diagnostics::{
    eoc_table, total_mass, write_diagnostics_row, write_eoc_table, ErrorReport,
};
use crate::error::{Error, Result};
use crate::fields::{write_snapshot, Quadrature};
use crate::flux::FluxParams;
use crate::solver::{compute_dt, Solver};
use crate::study::{ReferenceMode, Study, StudyResult};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const EOC_FILE: &str = "eoc.csv";
/// Same table as [`EOC_FILE`] built from error norms that are not divided by the reference norm.
pub const EOC_UNNORMALISED_FILE: &str = "eoc_unnormalised.csv";
pub const SUMMARY_HEADER: &str =
    "steps,final_time,initial_mass,final_mass,mass_drift,min_density,wall_seconds";

pub fn snapshot_file_name(step: usize) -> String {
    format!("snapshot_{step}.csv")
}

/// What a finished `run` produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub steps: usize,
    pub final_time: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub min_density: f64,
    pub wall_seconds: f64,
    pub snapshots: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn mass_drift(&self) -> f64 {
        self.final_mass - self.initial_mass
    }
}

/// Steps between snapshots when the configuration leaves it open: a tenth of
/// the step count estimated from the initial time step.
pub fn default_snapshot_stride(final_time: f64, initial_dt: f64) -> usize {
    let estimate = (final_time / initial_dt).ceil();
    ((0.1 * estimate).round() as usize).max(1)
}

/// Runs one simulation and writes diagnostics, snapshots and a summary into `out_dir`.
pub fn cmd_run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let start = Instant::now();
    fs::create_dir_all(out_dir)?;
    let case = cfg.benchmark()?;
    let mesh = cfg.mesh()?;
    let params = FluxParams::new(cfg.epsilon, mesh.h(), cfg.model.gamma)?;
    let solver = Solver::new(&mesh, cfg.model, params, case.forcing.clone(), cfg.solver)?;
    let initial = case.initial_state(&mesh, Quadrature::default())?;
    let stride = match cfg.snapshot_stride {
        Some(s) => s,
        None => default_snapshot_stride(
            cfg.final_time,
            compute_dt(&initial, &cfg.model, &mesh, &cfg.solver)?,
        ),
    };
    let initial_mass = total_mass(&mesh, &initial);

    let mut diagnostics = BufWriter::new(File::create(out_dir.join(DIAGNOSTICS_FILE))?);
    writeln!(diagnostics, "{}", crate::diagnostics::DIAGNOSTICS_HEADER)?;
    let mut snapshots = Vec::new();
    let mut min_density = f64::INFINITY;
    let final_time = cfg.final_time;
    let summary = solver.run_with(initial, final_time, |state, report| {
        write_diagnostics_row(&mut diagnostics, &mesh, &cfg.model, state, report)?;
        min_density = min_density.min(state.rho.min());
        let step = report.map_or(0, |r| r.step);
        if step % stride == 0 || state.time >= final_time {
            let path = out_dir.join(snapshot_file_name(step));
            let mut w = BufWriter::new(File::create(&path)?);
            write_snapshot(&mut w, &mesh, &state.rho, &state.u)?;
            w.flush()?;
            snapshots.push(path);
        }
        Ok(())
    })?;
    diagnostics.flush()?;

    let outcome = RunOutcome {
        steps: summary.reports.len(),
        final_time: summary.final_state.time,
        initial_mass,
        final_mass: total_mass(&mesh, &summary.final_state),
        min_density,
        wall_seconds: start.elapsed().as_secs_f64(),
        snapshots,
    };
    let mut w = BufWriter::new(File::create(out_dir.join(SUMMARY_FILE))?);
    write_summary(&mut w, &outcome)?;
    w.flush()?;
    Ok(outcome)
}

pub fn write_summary<W: Write>(out: &mut W, o: &RunOutcome) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    writeln!(
        out,
        "{},{:?},{:?},{:?},{:?},{:?},{:?}",
        o.steps,
        o.final_time,
        o.initial_mass,
        o.final_mass,
        o.mass_drift(),
        o.min_density,
        o.wall_seconds
    )?;
    Ok(())
}

/// Reads a summary file back; snapshot paths are not part of the file.
pub fn read_summary<R: BufRead>(input: R) -> Result<RunOutcome> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Csv("empty summary".into()))??;
    if header.trim() != SUMMARY_HEADER {
        return Err(Error::Csv(format!("unexpected header `{header}`")));
    }
    let row = lines
        .next()
        .ok_or_else(|| Error::Csv("summary has no data row".into()))??;
    let c: Vec<&str> = row.split(',').collect();
    if c.len() != 7 {
        return Err(Error::Csv(format!("expected 7 columns in `{row}`")));
    }
    let f = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Csv(format!("bad number `{s}`")))
    };
    Ok(RunOutcome {
        steps: c[0]
            .parse()
            .map_err(|_| Error::Csv(format!("bad integer `{}`", c[0])))?,
        final_time: f(c[1])?,
        initial_mass: f(c[2])?,
        final_mass: f(c[3])?,
        min_density: f(c[5])?,
        wall_seconds: f(c[6])?,
        snapshots: Vec::new(),
    })
}

/// Parses a level list such as `32,64,128`.
pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("level `{p}` is not a cell count")))
        })
        .collect()
}

/// Runs a refinement study and writes the convergence tables into `out_dir`.
///
/// With [`ReferenceMode::Finest`] the last level only serves as the reference.
pub fn cmd_eoc(
    cfg: &RunConfig,
    case_name: &str,
    levels: &[usize],
    reference: ReferenceMode,
    parallel: bool,
    out_dir: &Path,
) -> Result<StudyResult> {
    let mut cfg = cfg.clone();
    cfg.case = case_name.to_string();
    let case = cfg.benchmark()?;
    let study = Study {
        levels: levels.to_vec(),
        reference,
        solver: cfg.solver,
        final_time: cfg.final_time,
        quadrature: Quadrature::default(),
        parallel,
        case,
    };
    let result = study.run()?;
    fs::create_dir_all(out_dir)?;
    let mut w = BufWriter::new(File::create(out_dir.join(EOC_FILE))?);
    write_eoc_table(&mut w, &result.table)?;
    w.flush()?;

    let unnormalised: Vec<ErrorReport> = result
        .levels
        .iter()
        .map(|l| {
            let [grad_u, u, rho_l1, rho_linf_lgamma] = l.absolute_errors;
            ErrorReport {
                h: l.errors.h,
                grad_u,
                u,
                rho_l1,
                rho_linf_lgamma,
            }
        })
        .collect();
    let mut w = BufWriter::new(File::create(out_dir.join(EOC_UNNORMALISED_FILE))?);
    write_eoc_table(&mut w, &eoc_table(&unnormalised)?)?;
    w.flush()?;
    Ok(result)
}
