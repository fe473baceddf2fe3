//! Implicit upwind finite volume step for the barotropic Navier-Stokes system.
//!
//! Each time step solves, for every cell `K`,
//!
//! ```text
//! (rho_K - rho_K^prev)/dt + sum_sigma |sigma|/|K| F_h(rho, u) = 0
//! ((rho u)_K - (rho u)_K^prev)/dt
//!     + sum_sigma |sigma|/|K| ( F_h(rho u, u) + avg(p) n - mu [[u]]/d_sigma
//!                               - (mu + lambda) avg(div_h u) n ) = f_K
//! ```
//!
//! with a fixed-point iteration. Iterate `m` freezes the advecting velocity at
//! `u^(m)`: the density row becomes a linear M-matrix system in `rho^(m+1)`,
//! and the momentum row, with the pressure evaluated at `rho^(m+1)`, becomes a
//! linear system coupling all velocity components of `u^(m+1)`.

use crate::diagnostics::{energy_budget, total_mass, EnergyBudget};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::flux::{
    flux_divergence, mass_flux, momentum_flux, negative_part, positive_part, FluxParams,
};
use crate::grid::{Mesh, Side};
use crate::model::{Forcing, GasModel};
use crate::operators::{div_h, face_average, grad_dual_axis, laplace_h};
use crate::sparse::{self, KrylovConfig, RowBuilder, SolveStats};

/// Density and velocity at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub time: f64,
    pub rho: ScalarField,
    pub u: VectorField,
}

impl State {
    pub fn new(mesh: &Mesh, time: f64, rho: ScalarField, u: VectorField) -> Result<Self> {
        crate::fields::check_len(mesh.cell_count(), rho.len())?;
        crate::fields::check_len(mesh.dim(), u.dim())?;
        Ok(Self { time, rho, u })
    }

    pub fn uniform(mesh: &Mesh, rho: f64, u: &[f64]) -> Result<Self> {
        Ok(Self {
            time: 0.0,
            rho: ScalarField::constant(mesh, rho),
            u: VectorField::constant(mesh, u)?,
        })
    }

    pub fn check(&self) -> Result<()> {
        if !self.rho.is_finite() || !self.u.is_finite() || !self.time.is_finite() {
            return Err(Error::NonFinite(format!("state at t = {}", self.time)));
        }
        if let Some((cell, &value)) = self
            .rho
            .values
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > 0.0))
        {
            return Err(Error::Positivity { cell, value });
        }
        Ok(())
    }

    pub fn momentum(&self) -> VectorField {
        self.u.scaled_by(&self.rho)
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.rho.len())
            .map(|k| self.u.norm_at(k))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub dt_cap: Option<f64>,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    /// Number of times a failed step is retried with half the time step.
    pub max_retries: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.3,
            dt_cap: None,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            linear_tol: 1e-12,
            linear_max_iter: 2000,
            max_retries: 3,
        }
    }
}

impl SolverConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            v.push(format!("solver.cfl = {} must lie in (0, 1]", self.cfl));
        }
        if let Some(cap) = self.dt_cap {
            if !(cap > 0.0) {
                v.push(format!("solver.dt_cap = {cap} must be > 0"));
            }
        }
        if !(self.picard_tol > 0.0) {
            v.push(format!(
                "solver.picard_tol = {} must be > 0",
                self.picard_tol
            ));
        }
        if !(self.linear_tol > 0.0) {
            v.push(format!(
                "solver.linear_tol = {} must be > 0",
                self.linear_tol
            ));
        }
        if self.picard_max_iter == 0 {
            v.push("solver.picard_max_iter must be >= 1".into());
        }
        if self.linear_max_iter == 0 {
            v.push("solver.linear_max_iter must be >= 1".into());
        }
        v
    }

    fn krylov(&self) -> KrylovConfig {
        KrylovConfig {
            rel_tol: self.linear_tol,
            max_iter: self.linear_max_iter,
            ..Default::default()
        }
    }
}

/// Diagnostics of one accepted time step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub picard_iterations: usize,
    /// Final relative fixed-point increment.
    pub picard_increment: f64,
    /// `dt` times the max-norm residual of the per-cell equations, relative to the state size.
    pub nonlinear_residual: f64,
    pub linear_iterations: usize,
    /// Largest relative residual among the linear solves of the step.
    pub linear_residual: f64,
    pub mass: f64,
    pub budget: EnergyBudget,
    pub min_rho: f64,
    pub max_u: f64,
    pub retries: usize,
}

impl StepReport {
    pub fn energy(&self) -> f64 {
        self.budget.total_energy
    }

    pub fn energy_slack(&self) -> f64 {
        self.budget.balance_slack
    }
}

/// `CFL h / max_K (|u_K| + c(rho_K))`, capped by `dt_cap`.
pub fn compute_dt(
    state: &State,
    model: &GasModel,
    mesh: &Mesh,
    config: &SolverConfig,
) -> Result<f64> {
    let mut wave = 0.0f64;
    for k in 0..mesh.cell_count() {
        let rho = state.rho[k];
        let speed = state.u.norm_at(k);
        if !rho.is_finite() || !speed.is_finite() {
            return Err(Error::NonFinite(format!(
                "cell {k} while computing the time step"
            )));
        }
        wave = wave.max(speed + model.sound_speed(rho)?);
    }
    let mut dt = config.cfl * mesh.h() / wave;
    if let Some(cap) = config.dt_cap {
        dt = dt.min(cap);
    }
    Ok(dt)
}

/// Fully-specified discrete problem on one mesh.
#[derive(Clone, Debug)]
pub struct Solver<'m> {
    pub mesh: &'m Mesh,
    pub model: GasModel,
    pub params: FluxParams,
    pub forcing: Forcing,
    pub config: SolverConfig,
}

/// Result of a fixed-point solve of one step.
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub state: State,
    pub iterations: usize,
    pub increment: f64,
    pub linear_iterations: usize,
    pub linear_residual: f64,
}

/// Per-cell residuals of the discrete equations.
#[derive(Clone, Debug)]
pub struct Residual {
    pub continuity: ScalarField,
    pub momentum: VectorField,
}

impl Residual {
    pub fn max_abs(&self) -> f64 {
        self.continuity.max_abs().max(self.momentum.max_abs())
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub final_state: State,
    pub reports: Vec<StepReport>,
}

impl<'m> Solver<'m> {
    pub fn new(
        mesh: &'m Mesh,
        model: GasModel,
        params: FluxParams,
        forcing: Forcing,
        config: SolverConfig,
    ) -> Result<Self> {
        let mut v = model.violations();
        v.extend(config.violations());
        if !v.is_empty() {
            return Err(Error::InvalidParameter(v.join("; ")));
        }
        Ok(Self {
            mesh,
            model,
            params,
            forcing,
            config,
        })
    }

    pub fn compute_dt(&self, state: &State) -> Result<f64> {
        compute_dt(state, &self.model, self.mesh, &self.config)
    }

    /// Forcing sampled at the cell centers, component-major.
    pub fn sample_forcing(&self, t: f64) -> VectorField {
        let mesh = self.mesh;
        let mut f = VectorField::zeros(mesh);
        if self.forcing.is_zero() {
            return f;
        }
        let mut x = Vec::with_capacity(mesh.dim());
        let mut out = vec![0.0; mesh.dim()];
        for k in 0..mesh.cell_count() {
            mesh.cell_center_into(k, &mut x);
            self.forcing.eval(t, &x, &mut out);
            for (j, v) in out.iter().enumerate() {
                f.components[j][k] = *v;
            }
        }
        f
    }

    /// Density update with the advecting velocity frozen at `u_frozen`.
    pub fn solve_continuity(
        &self,
        rho_prev: &ScalarField,
        u_frozen: &VectorField,
        dt: f64,
        guess: Option<&ScalarField>,
    ) -> Result<(ScalarField, SolveStats)> {
        let mesh = self.mesh;
        let n = mesh.cell_count();
        let c = self.params.diffusion();
        let inv_dt = 1.0 / dt;
        let mut builder = RowBuilder::new(n, n * (1 + 2 * mesh.dim()));
        for k in 0..n {
            builder.add(k, inv_dt);
            for axis in 0..mesh.dim() {
                let w = &u_frozen.components[axis];
                let coef = 1.0 / mesh.h_axis(axis);
                for side in [Side::Minus, Side::Plus] {
                    let l = mesh.neighbor(k, axis, side);
                    let vn = side.sign() * 0.5 * (w[k] + w[l]);
                    builder.add(k, coef * (positive_part(vn) + c));
                    builder.add(l, coef * (negative_part(vn) - c));
                }
            }
            builder.finish_row();
        }
        let a = builder.build();
        let b: Vec<f64> = rho_prev.values.iter().map(|r| r * inv_dt).collect();
        let mut x = guess.unwrap_or(rho_prev).values.clone();
        let stats = sparse::solve(&a, &b, &mut x, &self.config.krylov())?;
        if let Some((cell, &value)) = x.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::Positivity { cell, value });
        }
        Ok((ScalarField { values: x }, stats))
    }

    /// Velocity update for a given new density, advecting velocity frozen at `u_frozen`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve_momentum(
        &self,
        prev: &State,
        rho_new: &ScalarField,
        u_frozen: &VectorField,
        dt: f64,
        forcing: &VectorField,
        guess: Option<&VectorField>,
    ) -> Result<(VectorField, SolveStats)> {
        let mesh = self.mesh;
        let d = mesh.dim();
        let n = mesh.cell_count();
        let c = self.params.diffusion();
        let mu = self.model.mu;
        let bulk = self.model.mu + self.model.lambda;
        let inv_dt = 1.0 / dt;
        let p: Vec<f64> = rho_new
            .values
            .iter()
            .map(|&r| self.model.pressure_unchecked(r))
            .collect();

        let row_len = 1 + 4 * d + 4 * d;
        let mut builder = RowBuilder::new(d * n, d * n * row_len);
        let mut rhs = vec![0.0; d * n];
        for j in 0..d {
            let off = j * n;
            let hj = mesh.h_axis(j);
            let g = bulk / (2.0 * hj);
            for k in 0..n {
                builder.add(off + k, rho_new[k] * inv_dt);
                for axis in 0..d {
                    let w = &u_frozen.components[axis];
                    let coef = 1.0 / mesh.h_axis(axis);
                    let visc = coef * mu / mesh.face_distance(axis);
                    for side in [Side::Minus, Side::Plus] {
                        let l = mesh.neighbor(k, axis, side);
                        let vn = side.sign() * 0.5 * (w[k] + w[l]);
                        builder.add(off + k, coef * rho_new[k] * (positive_part(vn) + c) + visc);
                        builder.add(off + l, coef * rho_new[l] * (negative_part(vn) - c) - visc);
                    }
                }
                // -(mu + lambda) (avg(div)_+ - avg(div)_-) / h_j
                for (m, sign) in [(mesh.plus(j, k), -1.0), (mesh.minus(j, k), 1.0)] {
                    for i in 0..d {
                        let s = sign * g / (2.0 * mesh.h_axis(i));
                        builder.add(i * n + mesh.plus(i, m), s);
                        builder.add(i * n + mesh.minus(i, m), -s);
                    }
                }
                builder.finish_row();
                let grad_p = (p[mesh.plus(j, k)] - p[mesh.minus(j, k)]) / (2.0 * hj);
                rhs[off + k] = prev.rho[k] * prev.u.components[j][k] * inv_dt - grad_p
                    + forcing.components[j][k];
            }
        }
        let a = builder.build();
        let start = guess.unwrap_or(u_frozen);
        let mut x: Vec<f64> = start
            .components
            .iter()
            .flat_map(|c| c.values.iter().cloned())
            .collect();
        let stats = sparse::solve(&a, &rhs, &mut x, &self.config.krylov())?;
        let components = x
            .chunks(n)
            .map(|c| ScalarField { values: c.to_vec() })
            .collect();
        Ok((VectorField { components }, stats))
    }

    /// Fixed-point solve of one implicit step of size `dt` starting from `prev`.
    pub fn picard_step(&self, prev: &State, dt: f64) -> Result<PicardOutcome> {
        let t_new = prev.time + dt;
        let forcing = self.sample_forcing(t_new);
        let mut rho = prev.rho.clone();
        let mut u = prev.u.clone();
        let mut linear_iterations = 0;
        let mut linear_residual = 0.0f64;
        let mut increment = f64::INFINITY;
        for it in 1..=self.config.picard_max_iter {
            let (rho_next, s1) = self.solve_continuity(&prev.rho, &u, dt, Some(&rho))?;
            let (u_next, s2) = self.solve_momentum(prev, &rho_next, &u, dt, &forcing, Some(&u))?;
            linear_iterations += s1.iterations + s2.iterations;
            linear_residual = linear_residual.max(s1.rel_residual).max(s2.rel_residual);

            let du = max_diff_vec(&u_next, &u) / (1.0 + u_next.max_abs());
            let drho = max_diff(&rho_next, &rho) / (1.0 + rho_next.max_abs());
            increment = du.max(drho);
            rho = rho_next;
            u = u_next;
            if !increment.is_finite() {
                break;
            }
            if increment <= self.config.picard_tol {
                return Ok(PicardOutcome {
                    state: State {
                        time: t_new,
                        rho,
                        u,
                    },
                    iterations: it,
                    increment,
                    linear_iterations,
                    linear_residual,
                });
            }
        }
        Err(Error::Picard {
            iterations: self.config.picard_max_iter,
            increment,
            dt,
        })
    }

    /// Per-cell residuals of the discrete equations for the pair `(prev, next)`.
    pub fn residual(&self, prev: &State, next: &State) -> Residual {
        let mesh = self.mesh;
        let dt = next.time - prev.time;
        let forcing = self.sample_forcing(next.time);
        scheme_residual(mesh, &self.model, &self.params, prev, next, dt, &forcing)
    }

    /// One accepted step: the fixed-point solve with the halving retry policy.
    pub fn step(&self, prev: &State, dt: f64, step: usize) -> Result<(State, StepReport)> {
        let mut dt = dt;
        let mut retries = 0;
        let outcome = loop {
            match self.picard_step(prev, dt) {
                Ok(o) => break o,
                Err(
                    e @ (Error::Picard { .. }
                    | Error::LinearSolver { .. }
                    | Error::Positivity { .. }),
                ) => {
                    if retries >= self.config.max_retries {
                        return Err(e);
                    }
                    retries += 1;
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        let next = outcome.state;
        let res = self.residual(prev, &next);
        let scale = next.rho.max_abs() * (1.0 + next.u.max_abs());
        let budget = energy_budget(prev, &next, dt, &self.model, &self.params, self.mesh);
        let report = StepReport {
            step,
            time: next.time,
            dt,
            picard_iterations: outcome.iterations,
            picard_increment: outcome.increment,
            nonlinear_residual: dt * res.max_abs() / scale,
            linear_iterations: outcome.linear_iterations,
            linear_residual: outcome.linear_residual,
            mass: total_mass(self.mesh, &next),
            budget,
            min_rho: next.rho.min(),
            max_u: next.max_speed(),
            retries,
        };
        Ok((next, report))
    }

    /// Advances `initial` to `final_time`, calling `observer` on the initial state
    /// (with no report) and after every accepted step.
    pub fn run_with<F>(
        &self,
        initial: State,
        final_time: f64,
        mut observer: F,
    ) -> Result<RunSummary>
    where
        F: FnMut(&State, Option<&StepReport>) -> Result<()>,
    {
        initial.check()?;
        observer(&initial, None)?;
        let mut state = initial;
        let mut reports = Vec::new();
        let t_end = final_time;
        let mut step = 0;
        while state.time < t_end {
            let mut dt = self.compute_dt(&state)?;
            let remaining = t_end - state.time;
            // land exactly on the final time, without leaving a sliver step behind
            if dt >= remaining * (1.0 - 1e-12) {
                dt = remaining;
            }
            step += 1;
            let (mut next, mut report) = self.step(&state, dt, step)?;
            if report.dt == remaining {
                next.time = t_end;
                report.time = t_end;
            }
            next.check()?;
            observer(&next, Some(&report))?;
            reports.push(report);
            state = next;
        }
        Ok(RunSummary {
            final_state: state,
            reports,
        })
    }

    pub fn run(&self, initial: State, final_time: f64) -> Result<RunSummary> {
        self.run_with(initial, final_time, |_, _| Ok(()))
    }
}

/// Residual of the per-cell equations evaluated face by face with the flux kernels.
pub fn scheme_residual(
    mesh: &Mesh,
    model: &GasModel,
    params: &FluxParams,
    prev: &State,
    next: &State,
    dt: f64,
    forcing: &VectorField,
) -> Residual {
    let d = mesh.dim();
    let mut continuity = flux_divergence(mesh, &mass_flux(mesh, &next.rho, &next.u, params));
    for k in 0..mesh.cell_count() {
        continuity[k] += (next.rho[k] - prev.rho[k]) / dt;
    }

    let mflux = momentum_flux(mesh, &next.rho, &next.u, params);
    let p = next.rho.map(|r| model.pressure_unchecked(r));
    let div = div_h(mesh, &next.u);
    let bulk = model.mu + model.lambda;
    let mut momentum = VectorField::zeros(mesh);
    for j in 0..d {
        let per_axis: Vec<_> = (0..d).map(|axis| mflux[axis][j].clone()).collect();
        let conv = flux_divergence(mesh, &per_axis);
        let lap = laplace_h(mesh, &next.u.components[j]);
        let graddiv = grad_dual_axis(mesh, &face_average(mesh, &div, j));
        let gradp = grad_dual_axis(mesh, &face_average(mesh, &p, j));
        let out = &mut momentum.components[j];
        for k in 0..mesh.cell_count() {
            let dm = (next.rho[k] * next.u.components[j][k]
                - prev.rho[k] * prev.u.components[j][k])
                / dt;
            out[k] = dm + conv[k] + gradp[k]
                - model.mu * lap[k]
                - bulk * graddiv[k]
                - forcing.components[j][k];
        }
    }
    Residual {
        continuity,
        momentum,
    }
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn max_diff_vec(a: &VectorField, b: &VectorField) -> f64 {
    a.components
        .iter()
        .zip(&b.components)
        .map(|(x, y)| max_diff(x, y))
        .fold(0.0, f64::max)
}
