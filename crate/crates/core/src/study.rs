//! Mesh-refinement studies: runs a benchmark on a sequence of uniform meshes and
//! measures the space-time errors against an exact solution or the finest run.

use std::time::Instant;

use crate::cases::BenchmarkCase;
use crate::diagnostics::{
    eoc_table, total_mass, EocRow, ErrorAccumulator, ErrorReport, ReferenceSample, StabilityMonitor,
};
use crate::error::{Error, Result};
use crate::fields::{restrict, restrict_vector, Quadrature};
use crate::flux::FluxParams;
use crate::grid::Mesh;
use crate::solver::{Solver, SolverConfig, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceMode {
    /// Compare with the closed-form solution of the case.
    Exact,
    /// Compare with the run on the last (finest) listed level.
    Finest,
}

impl std::str::FromStr for ReferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "finest" | "grid" => Ok(Self::Finest),
            other => Err(Error::InvalidParameter(format!(
                "unknown reference `{other}` (expected `exact` or `finest`)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Study {
    pub case: BenchmarkCase,
    pub levels: Vec<usize>,
    pub reference: ReferenceMode,
    pub solver: SolverConfig,
    pub final_time: f64,
    pub quadrature: Quadrature,
    /// Run the levels on separate threads.
    pub parallel: bool,
}

/// Outcome of one level of a study.
#[derive(Clone, Debug)]
pub struct LevelResult {
    pub cells_per_axis: usize,
    pub errors: ErrorReport,
    /// The same four error norms without normalisation by the reference.
    pub absolute_errors: [f64; 4],
    pub monitor: StabilityMonitor,
    pub steps: usize,
    pub max_mass_drift: f64,
    pub min_density: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct StudyResult {
    pub levels: Vec<LevelResult>,
    pub table: Vec<EocRow>,
}

impl Study {
    pub fn new(case: BenchmarkCase, levels: Vec<usize>, reference: ReferenceMode) -> Self {
        let final_time = case.final_time;
        Self {
            case,
            levels,
            reference,
            solver: SolverConfig::default(),
            final_time,
            quadrature: Quadrature::default(),
            parallel: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let min_levels = match self.reference {
            ReferenceMode::Exact => 1,
            ReferenceMode::Finest => 2,
        };
        if self.levels.len() < min_levels {
            return Err(Error::InvalidParameter(format!(
                "a study with {:?} reference needs at least {min_levels} levels",
                self.reference
            )));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "levels must be strictly increasing".into(),
            ));
        }
        if self.reference == ReferenceMode::Exact && self.case.exact.is_none() {
            return Err(Error::InvalidParameter(format!(
                "case `{}` has no exact solution; use the finest-grid reference",
                self.case.name
            )));
        }
        if self.reference == ReferenceMode::Finest {
            let finest = *self.levels.last().unwrap();
            for &n in &self.levels[..self.levels.len() - 1] {
                if !finest.is_multiple_of(n) {
                    return Err(Error::NotNested(format!(
                        "{n} cells per axis does not divide {finest}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn mesh(&self, n: usize) -> Result<Mesh> {
        Mesh::uniform(self.case.dim, n)
    }

    fn solver<'m>(&self, mesh: &'m Mesh) -> Result<Solver<'m>> {
        let params = FluxParams::new(self.case.epsilon, mesh.h(), self.case.model.gamma)?;
        Solver::new(
            mesh,
            self.case.model,
            params,
            self.case.forcing.clone(),
            self.solver,
        )
    }

    pub fn run(&self) -> Result<StudyResult> {
        self.validate()?;
        let levels = match self.reference {
            ReferenceMode::Exact => self.map_levels(&self.levels, |n| self.run_exact_level(n))?,
            ReferenceMode::Finest => self.run_against_finest()?,
        };
        let reports: Vec<ErrorReport> = levels.iter().map(|l| l.errors).collect();
        let table = eoc_table(&reports)?;
        Ok(StudyResult { levels, table })
    }

    fn map_levels<T: Send>(
        &self,
        levels: &[usize],
        f: impl Fn(usize) -> Result<T> + Sync,
    ) -> Result<Vec<T>> {
        if !self.parallel {
            return levels.iter().map(|&n| f(n)).collect();
        }
        std::thread::scope(|s| {
            let handles: Vec<_> = levels
                .iter()
                .map(|&n| {
                    let f = &f;
                    s.spawn(move || f(n))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("refinement level panicked"))
                .collect()
        })
    }

    fn run_exact_level(&self, n: usize) -> Result<LevelResult> {
        let start = Instant::now();
        let exact = self.case.exact.as_ref().expect("validated");
        let mesh = self.mesh(n)?;
        let solver = self.solver(&mesh)?;
        let initial = self.case.initial_state(&mesh, self.quadrature)?;
        let gamma = self.case.model.gamma;
        let mut acc = ErrorAccumulator::new(&mesh, gamma);
        let mut tracker = LevelTracker::new(&mesh, &initial);
        let summary = solver.run_with(initial, self.final_time, |state, report| {
            let t = state.time;
            let reference = ReferenceSample::from_exact(
                &mesh,
                self.quadrature,
                |x| (exact.rho)(t, x),
                |x| (exact.u)(t, x),
                |x| (exact.grad_u)(t, x),
            );
            acc.add(
                &mesh,
                report.map_or(0.0, |r| r.dt),
                &state.rho,
                &state.u,
                &reference,
            );
            tracker.observe(&mesh, gamma, state, report);
            Ok(())
        })?;
        tracker.finish(
            n,
            acc.finish()?,
            acc.absolute(),
            summary.reports.len(),
            start,
        )
    }

    fn run_against_finest(&self) -> Result<Vec<LevelResult>> {
        let (&finest, coarse_levels) = self.levels.split_last().expect("validated");
        let gamma = self.case.model.gamma;

        let trajectories = self.map_levels(coarse_levels, |n| self.coarse_trajectory(n))?;

        let fine_mesh = self.mesh(finest)?;
        let fine_solver = self.solver(&fine_mesh)?;
        let fine_initial = self.case.initial_state(&fine_mesh, self.quadrature)?;
        let mut cursors: Vec<Cursor> = trajectories
            .iter()
            .map(|t| Cursor::new(&t.mesh, gamma))
            .collect();
        fine_solver.run_with(fine_initial, self.final_time, |fine, _| {
            for (traj, cursor) in trajectories.iter().zip(cursors.iter_mut()) {
                cursor.advance(traj, &fine_mesh, fine)?;
            }
            Ok(())
        })?;

        trajectories
            .into_iter()
            .zip(cursors)
            .map(|(traj, cursor)| {
                if cursor.next < traj.levels.len() {
                    return Err(Error::InvalidParameter(format!(
                        "reference run ended before the {}-cell run",
                        traj.mesh.cells_per_axis()[0]
                    )));
                }
                Ok(LevelResult {
                    errors: cursor.acc.finish()?,
                    absolute_errors: cursor.acc.absolute(),
                    ..traj.result
                })
            })
            .collect()
    }

    fn coarse_trajectory(&self, n: usize) -> Result<Trajectory> {
        let start = Instant::now();
        let mesh = self.mesh(n)?;
        let solver = self.solver(&mesh)?;
        let initial = self.case.initial_state(&mesh, self.quadrature)?;
        let gamma = self.case.model.gamma;
        let mut tracker = LevelTracker::new(&mesh, &initial);
        let mut levels = Vec::new();
        let summary = solver.run_with(initial, self.final_time, |state, report| {
            tracker.observe(&mesh, gamma, state, report);
            levels.push((report.map_or(0.0, |r| r.dt), state.clone()));
            Ok(())
        })?;
        // errors are filled in once the reference run is available
        let placeholder = ErrorReport {
            h: mesh.h(),
            grad_u: 0.0,
            u: 0.0,
            rho_l1: 0.0,
            rho_linf_lgamma: 0.0,
        };
        let result = tracker.finish(n, placeholder, [0.0; 4], summary.reports.len(), start)?;
        Ok(Trajectory {
            mesh,
            levels,
            result,
        })
    }
}

/// Stored time levels `(dt, state)` of a coarse run.
struct Trajectory {
    mesh: Mesh,
    levels: Vec<(f64, State)>,
    result: LevelResult,
}

/// Pairs each coarse time level with the first reference level at or after it.
struct Cursor {
    acc: ErrorAccumulator,
    next: usize,
}

impl Cursor {
    fn new(mesh: &Mesh, gamma: f64) -> Self {
        Self {
            acc: ErrorAccumulator::new(mesh, gamma),
            next: 0,
        }
    }

    fn advance(&mut self, traj: &Trajectory, fine_mesh: &Mesh, fine: &State) -> Result<()> {
        let tol = 1e-12 * fine.time.abs().max(1.0);
        let mut reference = None;
        while let Some((dt, state)) = traj.levels.get(self.next) {
            if state.time > fine.time + tol {
                break;
            }
            if reference.is_none() {
                let rho = restrict(&traj.mesh, fine_mesh, &fine.rho)?;
                let u = restrict_vector(&traj.mesh, fine_mesh, &fine.u)?;
                reference = Some(ReferenceSample::from_cell_data(&traj.mesh, rho, u));
            }
            self.acc.add(
                &traj.mesh,
                *dt,
                &state.rho,
                &state.u,
                reference.as_ref().unwrap(),
            );
            self.next += 1;
        }
        Ok(())
    }
}

struct LevelTracker {
    monitor: StabilityMonitor,
    mass0: f64,
    max_drift: f64,
    min_rho: f64,
}

impl LevelTracker {
    fn new(mesh: &Mesh, initial: &State) -> Self {
        Self {
            monitor: StabilityMonitor::default(),
            mass0: total_mass(mesh, initial),
            max_drift: 0.0,
            min_rho: f64::INFINITY,
        }
    }

    fn observe(
        &mut self,
        mesh: &Mesh,
        gamma: f64,
        state: &State,
        report: Option<&crate::solver::StepReport>,
    ) {
        self.monitor.observe(mesh, gamma, state, report);
        self.max_drift = self
            .max_drift
            .max((total_mass(mesh, state) - self.mass0).abs());
        self.min_rho = self.min_rho.min(state.rho.min());
    }

    fn finish(
        self,
        n: usize,
        errors: ErrorReport,
        absolute_errors: [f64; 4],
        steps: usize,
        start: Instant,
    ) -> Result<LevelResult> {
        Ok(LevelResult {
            cells_per_axis: n,
            errors,
            absolute_errors,
            monitor: self.monitor,
            steps,
            max_mass_drift: self.max_drift,
            min_density: self.min_rho,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{gresho_case, manufactured_case};

    #[test]
    fn rejects_bad_level_lists() {
        let s = Study::new(gresho_case(), vec![8, 16], ReferenceMode::Exact);
        assert!(s.run().is_err());
        let s = Study::new(gresho_case(), vec![8, 12], ReferenceMode::Finest);
        assert!(matches!(s.run(), Err(Error::NotNested(_))));
        let s = Study::new(gresho_case(), vec![16, 8], ReferenceMode::Finest);
        assert!(s.run().is_err());
        assert_eq!(
            "finest".parse::<ReferenceMode>().unwrap(),
            ReferenceMode::Finest
        );
        assert!("best".parse::<ReferenceMode>().is_err());
    }

    #[test]
    fn exact_study_on_tiny_meshes() {
        let mut s = Study::new(manufactured_case(), vec![8, 16], ReferenceMode::Exact);
        s.final_time = 0.05;
        let r = s.run().unwrap();
        assert_eq!(r.table.len(), 2);
        assert!(r.table[0].eoc.is_none() && r.table[1].eoc.is_some());
        for l in &r.levels {
            assert!(l
                .errors
                .as_array()
                .iter()
                .all(|e| e.is_finite() && *e > 0.0));
            assert!(l.min_density > 0.0);
        }
    }

    #[test]
    fn grid_study_on_tiny_meshes() {
        let mut s = Study::new(gresho_case(), vec![8, 16, 32], ReferenceMode::Finest);
        s.final_time = 0.02;
        s.parallel = false;
        let r = s.run().unwrap();
        assert_eq!(r.levels.len(), 2);
        assert!(r.levels[0].errors.u > r.levels[1].errors.u);
    }
}
