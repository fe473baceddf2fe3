//! Monitored quantities: mass, total energy and its dissipation terms, error
//! norms against reference solutions and experimental orders of convergence.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::flux::FluxParams;
use crate::grid::{CellId, FaceId, Mesh};
use crate::model::GasModel;
use crate::operators::{div_h, grad_edge_axis, OperatorWorkspace};
use crate::solver::{State, StepReport};

/// `∫ rho`.
pub fn total_mass(mesh: &Mesh, state: &State) -> f64 {
    mesh.cell_volume() * state.rho.values.iter().sum::<f64>()
}

/// `∫ (rho |u|^2 / 2 + H(rho))`.
pub fn total_energy(mesh: &Mesh, model: &GasModel, state: &State) -> f64 {
    let e: f64 = (0..mesh.cell_count())
        .map(|k| {
            let rho = state.rho[k];
            let u2: f64 = state.u.components.iter().map(|c| c[k] * c[k]).sum();
            0.5 * rho * u2 + model.pressure_potential_unchecked(rho)
        })
        .sum();
    mesh.cell_volume() * e
}

/// Terms of the discrete energy balance of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBudget {
    pub total_energy: f64,
    /// `h^eps sum_sigma |sigma| avg(rho) |[[u]]|^2`
    pub eps_dissipation: f64,
    /// `mu ||grad_E u||^2`
    pub viscous_grad: f64,
    /// `(mu + lambda) ||div_h u||^2`
    pub viscous_div: f64,
    /// `D_t E + eps_dissipation + viscous_grad + viscous_div`; nonpositive for exact solutions without forcing.
    pub balance_slack: f64,
}

/// Energy budget of the step `prev -> next`; every term is evaluated on `next`.
pub fn energy_budget(
    prev: &State,
    next: &State,
    dt: f64,
    model: &GasModel,
    params: &FluxParams,
    mesh: &Mesh,
) -> EnergyBudget {
    let e_prev = total_energy(mesh, model, prev);
    let e_next = total_energy(mesh, model, next);
    let mut ws = OperatorWorkspace::new(mesh);

    let mut jump_sum = 0.0;
    for axis in 0..mesh.dim() {
        let area = mesh.face_area(axis);
        for k in 0..mesh.faces_per_axis() {
            let l = mesh.plus(axis, k);
            let rho_avg = 0.5 * (next.rho[k] + next.rho[l]);
            let j2: f64 = next
                .u
                .components
                .iter()
                .map(|c| (c[l] - c[k]) * (c[l] - c[k]))
                .sum();
            jump_sum += area * rho_avg * j2;
        }
    }
    let eps_dissipation = params.diffusion() * jump_sum;
    let grad_sq: f64 = next
        .u
        .components
        .iter()
        .map(|c| ws.grad_edge_norm_sq(mesh, c))
        .sum();
    let viscous_grad = model.mu * grad_sq;
    let viscous_div = (model.mu + model.lambda) * ws.div_norm_sq(mesh, &next.u);
    let balance_slack = if dt > 0.0 {
        (e_next - e_prev) / dt + eps_dissipation + viscous_grad + viscous_div
    } else {
        0.0
    };
    EnergyBudget {
        total_energy: e_next,
        eps_dissipation,
        viscous_grad,
        viscous_div,
        balance_slack,
    }
}

/// `log2(e_coarse / e_fine)`.
pub fn eoc(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "convergence order needs positive errors, got ({e_coarse}, {e_fine})"
        )));
    }
    Ok((e_coarse / e_fine).log2())
}

/// Relative space-time errors of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    /// `||grad_E u_h - grad u||_{L2 L2}` relative.
    pub grad_u: f64,
    /// `||u_h - u||_{L2 L2}` relative.
    pub u: f64,
    /// `||rho_h - rho||_{L1 L1}` relative.
    pub rho_l1: f64,
    /// `||rho_h - rho||_{L^inf L^gamma}` relative.
    pub rho_linf_lgamma: f64,
}

impl ErrorReport {
    pub fn as_array(&self) -> [f64; 4] {
        [self.grad_u, self.u, self.rho_l1, self.rho_linf_lgamma]
    }
}

/// Reference data on the coarse mesh at one time level.
#[derive(Clone, Debug)]
pub struct ReferenceSample {
    pub rho: ScalarField,
    pub u: VectorField,
    /// `grad[axis][j]`: reference `d u_j / d x_axis` on the faces of `axis`.
    pub grad: Vec<Vec<crate::fields::FaceField>>,
}

impl ReferenceSample {
    /// Reference whose gradient is the edge gradient of its own velocity (grid references).
    pub fn from_cell_data(mesh: &Mesh, rho: ScalarField, u: VectorField) -> Self {
        let grad = (0..mesh.dim())
            .map(|axis| {
                u.components
                    .iter()
                    .map(|c| grad_edge_axis(mesh, c, axis))
                    .collect()
            })
            .collect();
        Self { rho, u, grad }
    }

    /// Exact reference: cell means of `rho`, `u` and point values of `grad u` at face centers.
    pub fn from_exact(
        mesh: &Mesh,
        quad: crate::fields::Quadrature,
        rho: impl Fn(&[f64]) -> f64,
        u: impl Fn(&[f64]) -> Vec<f64>,
        grad_u: impl Fn(&[f64]) -> Vec<Vec<f64>>,
    ) -> Self {
        let rho = crate::fields::project_cell(mesh, quad, &rho);
        let u = crate::fields::project_cell_vector(mesh, quad, &u);
        let d = mesh.dim();
        let mut grad: Vec<Vec<crate::fields::FaceField>> = (0..d)
            .map(|axis| {
                (0..d)
                    .map(|_| crate::fields::FaceField::zeros(mesh, axis))
                    .collect()
            })
            .collect();
        for (axis, per_axis) in grad.iter_mut().enumerate() {
            for k in 0..mesh.faces_per_axis() {
                let x = mesh.face_center(FaceId {
                    axis,
                    owner: CellId(k),
                });
                // g[j][axis] = d u_j / d x_axis
                let g = grad_u(&x);
                for (j, f) in per_axis.iter_mut().enumerate() {
                    f.values[k] = g[j][axis];
                }
            }
        }
        Self { rho, u, grad }
    }
}

/// Accumulates time-integrated error and reference norms over the steps of one run.
#[derive(Clone, Debug)]
pub struct ErrorAccumulator {
    h: f64,
    gamma: f64,
    grad_err: f64,
    grad_ref: f64,
    u_err: f64,
    u_ref: f64,
    rho_l1_err: f64,
    rho_l1_ref: f64,
    rho_lg_err: f64,
    rho_lg_ref: f64,
}

impl ErrorAccumulator {
    pub fn new(mesh: &Mesh, gamma: f64) -> Self {
        Self {
            h: mesh.h(),
            gamma,
            grad_err: 0.0,
            grad_ref: 0.0,
            u_err: 0.0,
            u_ref: 0.0,
            rho_l1_err: 0.0,
            rho_l1_ref: 0.0,
            rho_lg_err: 0.0,
            rho_lg_ref: 0.0,
        }
    }

    /// Adds one time level with weight `dt` to the time integrals; the `L^inf` in time
    /// part sees every level, including the initial one passed with `dt = 0`.
    pub fn add(
        &mut self,
        mesh: &Mesh,
        dt: f64,
        rho: &ScalarField,
        u: &VectorField,
        reference: &ReferenceSample,
    ) {
        let vol = mesh.cell_volume();
        let mut u_err = 0.0;
        let mut u_ref = 0.0;
        for (c, r) in u.components.iter().zip(&reference.u.components) {
            for (a, b) in c.values.iter().zip(&r.values) {
                u_err += (a - b) * (a - b);
                u_ref += b * b;
            }
        }
        let mut g_err = 0.0;
        let mut g_ref = 0.0;
        for axis in 0..mesh.dim() {
            for (j, c) in u.components.iter().enumerate() {
                let g = grad_edge_axis(mesh, c, axis);
                for (a, b) in g.values.iter().zip(&reference.grad[axis][j].values) {
                    g_err += (a - b) * (a - b);
                    g_ref += b * b;
                }
            }
        }
        let mut l1_err = 0.0;
        let mut l1_ref = 0.0;
        let mut lg_err = 0.0;
        let mut lg_ref = 0.0;
        for (a, b) in rho.values.iter().zip(&reference.rho.values) {
            let e = (a - b).abs();
            l1_err += e;
            l1_ref += b.abs();
            lg_err += e.powf(self.gamma);
            lg_ref += b.abs().powf(self.gamma);
        }
        self.u_err += dt * vol * u_err;
        self.u_ref += dt * vol * u_ref;
        self.grad_err += dt * mesh.dual_volume() * g_err;
        self.grad_ref += dt * mesh.dual_volume() * g_ref;
        self.rho_l1_err += dt * vol * l1_err;
        self.rho_l1_ref += dt * vol * l1_ref;
        self.rho_lg_err = self.rho_lg_err.max((vol * lg_err).powf(1.0 / self.gamma));
        self.rho_lg_ref = self.rho_lg_ref.max((vol * lg_ref).powf(1.0 / self.gamma));
    }

    /// Unnormalised error norms in the order of [`ErrorReport::as_array`].
    pub fn absolute(&self) -> [f64; 4] {
        [
            self.grad_err.sqrt(),
            self.u_err.sqrt(),
            self.rho_l1_err,
            self.rho_lg_err,
        ]
    }

    pub fn finish(&self) -> Result<ErrorReport> {
        let rel = |err: f64, reference: f64, what: &'static str| {
            if reference > 0.0 {
                Ok(err / reference)
            } else {
                Err(Error::ZeroReference(what))
            }
        };
        Ok(ErrorReport {
            h: self.h,
            grad_u: rel(
                self.grad_err.sqrt(),
                self.grad_ref.sqrt(),
                "velocity gradient",
            )?,
            u: rel(self.u_err.sqrt(), self.u_ref.sqrt(), "velocity")?,
            rho_l1: rel(self.rho_l1_err, self.rho_l1_ref, "density (L1)")?,
            rho_linf_lgamma: rel(self.rho_lg_err, self.rho_lg_ref, "density (L^gamma)")?,
        })
    }
}

/// Bounded quantities monitored along a run: `max_t ||rho||_{L^gamma}`,
/// `||grad_E u||_{L2 L2}` and the time-integrated artificial-diffusion jump term.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StabilityMonitor {
    pub rho_linf_lgamma: f64,
    pub grad_u_l2l2: f64,
    pub jump_dissipation: f64,
    grad_sq: f64,
}

impl StabilityMonitor {
    pub fn observe(&mut self, mesh: &Mesh, gamma: f64, state: &State, report: Option<&StepReport>) {
        let lg = (mesh.cell_volume()
            * state
                .rho
                .values
                .iter()
                .map(|r| r.abs().powf(gamma))
                .sum::<f64>())
        .powf(1.0 / gamma);
        self.rho_linf_lgamma = self.rho_linf_lgamma.max(lg);
        if let Some(r) = report {
            let mut ws = OperatorWorkspace::new(mesh);
            let g: f64 = state
                .u
                .components
                .iter()
                .map(|c| ws.grad_edge_norm_sq(mesh, c))
                .sum();
            self.grad_sq += r.dt * g;
            self.grad_u_l2l2 = self.grad_sq.sqrt();
            self.jump_dissipation += r.dt * r.budget.eps_dissipation;
        }
    }
}

pub const DIAGNOSTICS_HEADER: &str =
    "step,t,dt,picard_iters,mass,energy,energy_slack,min_rho,max_u";

/// One diagnostics row; the initial state is written as step 0 with `dt = 0`.
pub fn write_diagnostics_row<W: Write>(
    out: &mut W,
    mesh: &Mesh,
    model: &GasModel,
    state: &State,
    report: Option<&StepReport>,
) -> Result<()> {
    match report {
        Some(r) => writeln!(
            out,
            "{},{:?},{:?},{},{:?},{:?},{:?},{:?},{:?}",
            r.step,
            r.time,
            r.dt,
            r.picard_iterations,
            r.mass,
            r.energy(),
            r.energy_slack(),
            r.min_rho,
            r.max_u
        )?,
        None => writeln!(
            out,
            "0,{:?},0.0,0,{:?},{:?},0.0,{:?},{:?}",
            state.time,
            total_mass(mesh, state),
            total_energy(mesh, model, state),
            state.rho.min(),
            state.max_speed()
        )?,
    }
    Ok(())
}

/// A parsed diagnostics row.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub picard_iters: usize,
    pub mass: f64,
    pub energy: f64,
    pub energy_slack: f64,
    pub min_rho: f64,
    pub max_u: f64,
}

pub fn read_diagnostics<R: BufRead>(input: R) -> Result<Vec<DiagnosticsRow>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Csv("empty diagnostics file".into()))??;
    if header.trim() != DIAGNOSTICS_HEADER {
        return Err(Error::Csv(format!("unexpected header `{header}`")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 9 {
            return Err(Error::Csv(format!("expected 9 columns in `{line}`")));
        }
        let f = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Csv(format!("bad number `{s}`")))
        };
        let u = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Csv(format!("bad integer `{s}`")))
        };
        rows.push(DiagnosticsRow {
            step: u(c[0])?,
            t: f(c[1])?,
            dt: f(c[2])?,
            picard_iters: u(c[3])?,
            mass: f(c[4])?,
            energy: f(c[5])?,
            energy_slack: f(c[6])?,
            min_rho: f(c[7])?,
            max_u: f(c[8])?,
        });
    }
    Ok(rows)
}

pub const EOC_HEADER: &str =
    "h,e_grad_u,eoc_grad_u,e_u,eoc_u,e_rho_l1,eoc_rho_l1,e_rho_linf_lgamma,eoc_rho_linf_lgamma";

/// One row of a convergence table; `eoc` is empty on the coarsest row.
#[derive(Clone, Debug, PartialEq)]
pub struct EocRow {
    pub errors: ErrorReport,
    pub eoc: Option<[f64; 4]>,
}

/// Builds table rows from reports ordered coarse to fine.
pub fn eoc_table(reports: &[ErrorReport]) -> Result<Vec<EocRow>> {
    let mut rows = Vec::with_capacity(reports.len());
    for (i, r) in reports.iter().enumerate() {
        let eoc = if i == 0 {
            None
        } else {
            let prev = reports[i - 1].as_array();
            let cur = r.as_array();
            let mut e = [0.0; 4];
            for q in 0..4 {
                e[q] = eoc(prev[q], cur[q])?;
            }
            Some(e)
        };
        rows.push(EocRow { errors: *r, eoc });
    }
    Ok(rows)
}

pub fn write_eoc_table<W: Write>(out: &mut W, rows: &[EocRow]) -> Result<()> {
    writeln!(out, "{EOC_HEADER}")?;
    for row in rows {
        let e = row.errors.as_array();
        let mut line = format!("{:?}", row.errors.h);
        for q in 0..4 {
            line.push_str(&format!(",{:?},", e[q]));
            if let Some(o) = row.eoc {
                line.push_str(&format!("{:?}", o[q]));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_eoc_table<R: BufRead>(input: R) -> Result<Vec<EocRow>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Csv("empty table".into()))??;
    if header.trim() != EOC_HEADER {
        return Err(Error::Csv(format!("unexpected header `{header}`")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 9 {
            return Err(Error::Csv(format!("expected 9 columns in `{line}`")));
        }
        let f = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Csv(format!("bad number `{s}`")))
        };
        let errors = ErrorReport {
            h: f(c[0])?,
            grad_u: f(c[1])?,
            u: f(c[3])?,
            rho_l1: f(c[5])?,
            rho_linf_lgamma: f(c[7])?,
        };
        let eoc = if c[2].is_empty() {
            None
        } else {
            Some([f(c[2])?, f(c[4])?, f(c[6])?, f(c[8])?])
        };
        rows.push(EocRow { errors, eoc });
    }
    Ok(rows)
}

/// Velocity divergence norm helper used by tests and reports.
pub fn div_norm(mesh: &Mesh, u: &VectorField) -> f64 {
    let d = div_h(mesh, u);
    (mesh.cell_volume() * d.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}
