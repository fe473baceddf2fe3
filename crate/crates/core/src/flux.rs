//! Upwind and diffusive face fluxes.
//!
//! All kernels take the traces `(r_in, r_out)` and the averaged normal velocity
//! `vbar_n = avg(v) . n` of one face; the normal points from the `in` cell to
//! the `out` cell.

use crate::error::{Error, Result};
use crate::fields::{FaceField, ScalarField, VectorField};
use crate::grid::Mesh;

/// Artificial-diffusion exponent together with the mesh size it scales.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxParams {
    epsilon: f64,
    h: f64,
    coefficient: f64,
}

impl FluxParams {
    /// Checks `0 < epsilon < min(1, 2 (gamma - 1))` and `0 < h < 1`.
    pub fn new(epsilon: f64, h: f64, gamma: f64) -> Result<Self> {
        let violations = Self::violations(epsilon, h, gamma);
        if !violations.is_empty() {
            return Err(Error::InvalidParameter(violations.join("; ")));
        }
        Ok(Self {
            epsilon,
            h,
            coefficient: h.powf(epsilon),
        })
    }

    pub fn violations(epsilon: f64, h: f64, gamma: f64) -> Vec<String> {
        let mut v = Vec::new();
        let bound = epsilon_upper_bound(gamma);
        if !(epsilon > 0.0 && epsilon < bound) {
            v.push(format!(
                "flux.epsilon = {epsilon} must satisfy 0 < epsilon < min{{1, 2(gamma-1)}} = {}",
                (bound * 1e12).round() / 1e12
            ));
        }
        if !(h > 0.0 && h < 1.0) {
            v.push(format!("mesh size h = {h} must lie in (0, 1)"));
        }
        v
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `h^epsilon`.
    pub fn diffusion(&self) -> f64 {
        self.coefficient
    }
}

/// `min(1, 2 (gamma - 1))`.
pub fn epsilon_upper_bound(gamma: f64) -> f64 {
    (2.0 * (gamma - 1.0)).min(1.0)
}

#[inline]
pub fn positive_part(f: f64) -> f64 {
    0.5 * (f + f.abs())
}

#[inline]
pub fn negative_part(f: f64) -> f64 {
    0.5 * (f - f.abs())
}

/// `r_up * vbar_n`, taking the in-side value when `vbar_n >= 0`.
#[inline]
pub fn upwind(r_in: f64, r_out: f64, vbar_n: f64) -> f64 {
    if vbar_n >= 0.0 {
        r_in * vbar_n
    } else {
        r_out * vbar_n
    }
}

/// `Up[r, v] - h^epsilon [[r]]`.
#[inline]
pub fn diffusive_flux(r_in: f64, r_out: f64, vbar_n: f64, params: &FluxParams) -> f64 {
    upwind(r_in, r_out, vbar_n) - params.diffusion() * (r_out - r_in)
}

/// Diffusive flux of `r` advected by `v` on every face of `axis`, oriented along `+e_axis`.
pub fn scalar_flux(
    mesh: &Mesh,
    r: &ScalarField,
    v: &VectorField,
    axis: usize,
    params: &FluxParams,
) -> FaceField {
    let va = &v.components[axis];
    let values = (0..mesh.faces_per_axis())
        .map(|k| {
            let l = mesh.plus(axis, k);
            diffusive_flux(r[k], r[l], 0.5 * (va[k] + va[l]), params)
        })
        .collect();
    FaceField { axis, values }
}

/// Density flux on every face, one face field per axis.
pub fn mass_flux(
    mesh: &Mesh,
    rho: &ScalarField,
    u: &VectorField,
    params: &FluxParams,
) -> Vec<FaceField> {
    (0..mesh.dim())
        .map(|a| scalar_flux(mesh, rho, u, a, params))
        .collect()
}

/// Momentum flux: `result[axis][j]` is the flux of `rho u_j` through the faces of `axis`.
pub fn momentum_flux(
    mesh: &Mesh,
    rho: &ScalarField,
    u: &VectorField,
    params: &FluxParams,
) -> Vec<Vec<FaceField>> {
    let m = u.scaled_by(rho);
    (0..mesh.dim())
        .map(|axis| {
            m.components
                .iter()
                .map(|mj| scalar_flux(mesh, mj, u, axis, params))
                .collect()
        })
        .collect()
}

/// `(1/|K|) sum_{sigma in E(K)} |sigma| F . n`: the net outflow of a set of face fluxes.
pub fn flux_divergence(mesh: &Mesh, flux: &[FaceField]) -> ScalarField {
    let vol = mesh.cell_volume();
    let mut out = ScalarField::zeros(mesh);
    for f in flux {
        let area = mesh.face_area(f.axis);
        for k in 0..mesh.cell_count() {
            out[k] += area * (f[k] - f[mesh.minus(f.axis, k)]) / vol;
        }
    }
    out
}
