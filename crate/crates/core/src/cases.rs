//! Benchmark problems: a manufactured smooth solution driven by a momentum
//! source, and the Gresho vortex.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{project_cell, project_cell_vector, Quadrature};
use crate::grid::Mesh;
use crate::model::{Forcing, GasModel};
use crate::solver::State;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type TimeScalarFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;
type TimeVectorFn = dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync;
type TimeMatrixFn = dyn Fn(f64, &[f64]) -> Vec<Vec<f64>> + Send + Sync;

/// Closed-form solution of a benchmark.
#[derive(Clone)]
pub struct ExactSolution {
    pub rho: Arc<TimeScalarFn>,
    pub u: Arc<TimeVectorFn>,
    /// `grad_u(t, x)[j][i] = d u_j / d x_i`.
    pub grad_u: Arc<TimeMatrixFn>,
}

#[derive(Clone)]
pub struct BenchmarkCase {
    pub name: String,
    pub dim: usize,
    pub initial_density: Arc<ScalarFn>,
    pub initial_velocity: Arc<VectorFn>,
    pub forcing: Forcing,
    pub exact: Option<ExactSolution>,
    pub final_time: f64,
    pub model: GasModel,
    pub epsilon: f64,
}

impl fmt::Debug for BenchmarkCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkCase")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("final_time", &self.final_time)
            .field("model", &self.model)
            .field("epsilon", &self.epsilon)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

pub const MANUFACTURED: &str = "manufactured";
pub const GRESHO: &str = "gresho";

/// Looks a case up by name; `model` overrides the case's default gas parameters.
pub fn by_name(name: &str, model: Option<GasModel>) -> Result<BenchmarkCase> {
    let model = model.unwrap_or_default();
    match name {
        MANUFACTURED | "experiment1" => Ok(manufactured_case_with(model)),
        GRESHO | "experiment2" => Ok(gresho_case_with(model)),
        other => Err(Error::InvalidParameter(format!(
            "unknown case `{other}` (expected `{MANUFACTURED}` or `{GRESHO}`)"
        ))),
    }
}

impl BenchmarkCase {
    /// Cell-mean projection of the initial data.
    pub fn initial_state(&self, mesh: &Mesh, quad: Quadrature) -> Result<State> {
        if mesh.dim() != self.dim {
            return Err(Error::InvalidMesh(format!(
                "case `{}` is {}-dimensional, mesh is {}-dimensional",
                self.name,
                self.dim,
                mesh.dim()
            )));
        }
        let rho_fn = self.initial_density.clone();
        let u_fn = self.initial_velocity.clone();
        let rho = project_cell(mesh, quad, |x| rho_fn(x));
        let u = project_cell_vector(mesh, quad, |x| u_fn(x));
        State::new(mesh, 0.0, rho, u)
    }
}

/// Smooth periodic solution with `rho = 2 + cos(2 pi (x + y))` and `rho u = sin(2 pi t) (1, -1)`.
pub fn manufactured_case() -> BenchmarkCase {
    manufactured_case_with(GasModel::default())
}

pub fn manufactured_case_with(model: GasModel) -> BenchmarkCase {
    let exact = ExactSolution {
        rho: Arc::new(|_, x| manufactured_density(x)),
        u: Arc::new(manufactured_velocity),
        grad_u: Arc::new(manufactured_velocity_gradient),
    };
    BenchmarkCase {
        name: MANUFACTURED.into(),
        dim: 2,
        initial_density: Arc::new(manufactured_density),
        initial_velocity: Arc::new(|x| manufactured_velocity(0.0, x)),
        forcing: Forcing::new(move |t, x, out| {
            let f = manufactured_forcing(&model, t, x);
            out.copy_from_slice(&f);
        }),
        exact: Some(exact),
        final_time: MANUFACTURED_FINAL_TIME,
        model,
        epsilon: 0.6,
    }
}

/// Final time of the manufactured benchmark.
pub const MANUFACTURED_FINAL_TIME: f64 = 0.1;

pub fn manufactured_density(x: &[f64]) -> f64 {
    2.0 + (2.0 * PI * (x[0] + x[1])).cos()
}

pub fn manufactured_velocity(t: f64, x: &[f64]) -> Vec<f64> {
    let s = (2.0 * PI * t).sin() / manufactured_density(x);
    vec![s, -s]
}

pub fn manufactured_velocity_gradient(t: f64, x: &[f64]) -> Vec<Vec<f64>> {
    let theta = 2.0 * PI * (x[0] + x[1]);
    let rho = 2.0 + theta.cos();
    let g = 2.0 * PI * (2.0 * PI * t).sin() * theta.sin() / (rho * rho);
    vec![vec![g, g], vec![-g, -g]]
}

/// Momentum source that makes the manufactured pair an exact solution.
///
/// `rho u` is constant in space and `div u = 0`, so convection and the bulk
/// viscosity term vanish and the source reduces to
/// `d_t(rho u) + grad p - mu lap u`.
pub fn manufactured_forcing(model: &GasModel, t: f64, x: &[f64]) -> Vec<f64> {
    let theta = 2.0 * PI * (x[0] + x[1]);
    let (sin_t, cos_t) = theta.sin_cos();
    let rho = 2.0 + cos_t;
    let s = (2.0 * PI * t).sin();
    let dm = 2.0 * PI * (2.0 * PI * t).cos();
    // grad p = a gamma rho^(gamma-1) grad rho, grad rho = -2 pi sin(theta) (1, 1)
    let gp = model.a * model.gamma * rho.powf(model.gamma - 1.0) * (-2.0 * PI * sin_t);
    // lap(1/rho) = 8 pi^2 g''(theta), g = 1 / (2 + cos theta)
    let g2 = cos_t / (rho * rho) + 2.0 * sin_t * sin_t / (rho * rho * rho);
    let lap = 8.0 * PI * PI * s * g2;
    vec![dm + gp - model.mu * lap, -dm + gp + model.mu * lap]
}

/// Stationary vortex of radius 0.2 centred at (0.5, 0.5) in a resting unit-density fluid.
pub fn gresho_case() -> BenchmarkCase {
    gresho_case_with(GasModel::default())
}

pub fn gresho_case_with(model: GasModel) -> BenchmarkCase {
    let gamma = model.gamma;
    BenchmarkCase {
        name: GRESHO.into(),
        dim: 2,
        initial_density: Arc::new(|_| 1.0),
        initial_velocity: Arc::new(move |x| gresho_velocity(gamma, x)),
        forcing: Forcing::zero(),
        exact: None,
        final_time: 0.2,
        model,
        epsilon: 0.6,
    }
}

pub const GRESHO_RADIUS: f64 = 0.2;

/// Azimuthal speed profile `u_r(r)`.
pub fn gresho_speed(gamma: f64, r: f64) -> f64 {
    let r0 = GRESHO_RADIUS;
    let shape = if r < 0.5 * r0 {
        2.0 * r / r0
    } else if r < r0 {
        2.0 * (1.0 - r / r0)
    } else {
        0.0
    };
    gamma.sqrt() * shape
}

pub fn gresho_velocity(gamma: f64, x: &[f64]) -> Vec<f64> {
    let dx = x[0] - 0.5;
    let dy = x[1] - 0.5;
    let r = (dx * dx + dy * dy).sqrt();
    if r == 0.0 {
        return vec![0.0, 0.0];
    }
    let s = gresho_speed(gamma, r) / r;
    vec![dy * s, -dx * s]
}
