//! Discrete differential calculus on the primary and dual grids.
//!
//! Integrals of cell data are `sum_K |K| (.)_K`, integrals of dual-grid data
//! are `sum_sigma |D_sigma| (.)_sigma` and face integrals of face-constant data
//! are `|sigma| (.)_sigma`.

use crate::fields::{FaceField, ScalarField, VectorField};
use crate::grid::Mesh;

/// Cell divergence by summing `|sigma| avg(u) . n` over the faces of each cell.
pub fn div_h(mesh: &Mesh, u: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(mesh);
    div_h_into(mesh, u, &mut out);
    out
}

pub fn div_h_into(mesh: &Mesh, u: &VectorField, out: &mut ScalarField) {
    let vol = mesh.cell_volume();
    for k in 0..mesh.cell_count() {
        let mut acc = 0.0;
        for axis in 0..mesh.dim() {
            let ui = &u.components[axis];
            let area = mesh.face_area(axis);
            let avg_plus = 0.5 * (ui[k] + ui[mesh.plus(axis, k)]);
            let avg_minus = 0.5 * (ui[mesh.minus(axis, k)] + ui[k]);
            acc += area * avg_plus - area * avg_minus;
        }
        out[k] = acc / vol;
    }
}

/// Face average of one cell field on the faces of `axis`.
pub fn face_average(mesh: &Mesh, r: &ScalarField, axis: usize) -> FaceField {
    let values = (0..mesh.faces_per_axis())
        .map(|k| 0.5 * (r[k] + r[mesh.plus(axis, k)]))
        .collect();
    FaceField { axis, values }
}

/// Face jump `r_L - r_K` on the faces of `axis`.
pub fn face_jump(mesh: &Mesh, r: &ScalarField, axis: usize) -> FaceField {
    let values = (0..mesh.faces_per_axis())
        .map(|k| r[mesh.plus(axis, k)] - r[k])
        .collect();
    FaceField { axis, values }
}

/// Difference quotient `(r_L - r_K) / d_sigma` along one axis.
pub fn grad_edge_axis(mesh: &Mesh, r: &ScalarField, axis: usize) -> FaceField {
    let inv = 1.0 / mesh.face_distance(axis);
    let values = (0..mesh.faces_per_axis())
        .map(|k| (r[mesh.plus(axis, k)] - r[k]) * inv)
        .collect();
    FaceField { axis, values }
}

/// Edge gradient: one face field per axis.
pub fn grad_edge(mesh: &Mesh, r: &ScalarField) -> Vec<FaceField> {
    (0..mesh.dim())
        .map(|a| grad_edge_axis(mesh, r, a))
        .collect()
}

/// Dual-to-primary difference `(q_{sigma'} - q_sigma) / h_i` for the two `axis` faces of each cell.
pub fn grad_dual_axis(mesh: &Mesh, q: &FaceField) -> ScalarField {
    let axis = q.axis;
    let inv = 1.0 / mesh.h_axis(axis);
    let values = (0..mesh.cell_count())
        .map(|k| (q[k] - q[mesh.minus(axis, k)]) * inv)
        .collect();
    ScalarField { values }
}

pub fn grad_dual(mesh: &Mesh, q: &[FaceField]) -> Vec<ScalarField> {
    q.iter().map(|qi| grad_dual_axis(mesh, qi)).collect()
}

/// Divergence assembled as `sum_i grad_dual_i(avg(u_i))`.
pub fn div_h_dual(mesh: &Mesh, u: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(mesh);
    for axis in 0..mesh.dim() {
        let d = grad_dual_axis(mesh, &face_average(mesh, &u.components[axis], axis));
        for (o, v) in out.values.iter_mut().zip(d.values) {
            *o += v;
        }
    }
    out
}

/// One-axis Laplacian `(1/|K|) sum_{sigma in E_i(K)} |sigma| [[r]] / d_sigma`.
pub fn laplace_axis(mesh: &Mesh, r: &ScalarField, axis: usize) -> ScalarField {
    let coef = mesh.face_area(axis) / (mesh.face_distance(axis) * mesh.cell_volume());
    let values = (0..mesh.cell_count())
        .map(|k| {
            let jp = r[mesh.plus(axis, k)] - r[k];
            let jm = r[mesh.minus(axis, k)] - r[k];
            coef * (jp + jm)
        })
        .collect();
    ScalarField { values }
}

pub fn laplace_h(mesh: &Mesh, r: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(mesh);
    for axis in 0..mesh.dim() {
        let l = laplace_axis(mesh, r, axis);
        for (o, v) in out.values.iter_mut().zip(l.values) {
            *o += v;
        }
    }
    out
}

/// `∫ r` over the primary grid.
pub fn integrate(mesh: &Mesh, r: &ScalarField) -> f64 {
    mesh.cell_volume() * r.values.iter().sum::<f64>()
}

/// `∫ q` over the dual grid of `q.axis`.
pub fn integrate_dual(mesh: &Mesh, q: &FaceField) -> f64 {
    mesh.dual_volume() * q.values.iter().sum::<f64>()
}

/// `∫ a b` over the primary grid.
pub fn inner(mesh: &Mesh, a: &ScalarField, b: &ScalarField) -> f64 {
    mesh.cell_volume()
        * a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x * y)
            .sum::<f64>()
}

/// `∫ p q` over one dual grid.
pub fn inner_dual(mesh: &Mesh, p: &FaceField, q: &FaceField) -> f64 {
    mesh.dual_volume()
        * p.values
            .iter()
            .zip(&q.values)
            .map(|(x, y)| x * y)
            .sum::<f64>()
}

/// Scratch buffers reused by time loops.
#[derive(Clone, Debug)]
pub struct OperatorWorkspace {
    pub cell: ScalarField,
    pub faces: Vec<FaceField>,
}

impl OperatorWorkspace {
    pub fn new(mesh: &Mesh) -> Self {
        Self {
            cell: ScalarField::zeros(mesh),
            faces: (0..mesh.dim()).map(|a| FaceField::zeros(mesh, a)).collect(),
        }
    }

    /// `||grad_E r||^2_{L^2}` without allocating.
    pub fn grad_edge_norm_sq(&mut self, mesh: &Mesh, r: &ScalarField) -> f64 {
        let mut total = 0.0;
        for axis in 0..mesh.dim() {
            let inv = 1.0 / mesh.face_distance(axis);
            let buf = &mut self.faces[axis];
            for k in 0..mesh.faces_per_axis() {
                buf.values[k] = (r[mesh.plus(axis, k)] - r[k]) * inv;
            }
            total += inner_dual(mesh, buf, buf);
        }
        total
    }

    /// `||div_h u||^2_{L^2}` without allocating.
    pub fn div_norm_sq(&mut self, mesh: &Mesh, u: &VectorField) -> f64 {
        div_h_into(mesh, u, &mut self.cell);
        inner(mesh, &self.cell, &self.cell)
    }
}
