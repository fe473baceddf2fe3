#![allow(dead_code)]

use barofv::fields::{FaceField, ScalarField, VectorField};
use barofv::flux::{diffusive_flux, FluxParams};
use barofv::grid::Mesh;
use barofv::operators::{
    div_h, face_average, face_jump, grad_dual_axis, grad_edge_axis, inner, inner_dual,
    laplace_axis, laplace_h,
};
use rand::Rng;

pub fn random_scalar(mesh: &Mesh, rng: &mut impl Rng, lo: f64, hi: f64) -> ScalarField {
    ScalarField {
        values: (0..mesh.cell_count())
            .map(|_| rng.gen_range(lo..hi))
            .collect(),
    }
}

pub fn random_vector(mesh: &Mesh, rng: &mut impl Rng) -> VectorField {
    VectorField {
        components: (0..mesh.dim())
            .map(|_| random_scalar(mesh, rng, -1.0, 1.0))
            .collect(),
    }
}

pub fn random_face(mesh: &Mesh, axis: usize, rng: &mut impl Rng) -> FaceField {
    FaceField {
        axis,
        values: (0..mesh.faces_per_axis())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect(),
    }
}

/// `|a - b| / scale`, with `scale` the magnitude of the terms that were summed.
fn rel(a: f64, b: f64, scale: f64) -> f64 {
    let s = scale.max(a.abs()).max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Worst relative defect of each discrete calculus identity on one set of random fields.
pub fn identity_defects(mesh: &Mesh, rng: &mut impl Rng) -> Vec<(&'static str, f64)> {
    let d = mesh.dim();
    let r = random_scalar(mesh, rng, 0.5, 2.0);
    let phi = random_scalar(mesh, rng, -1.0, 1.0);
    let v = random_vector(mesh, rng);
    let mut out = Vec::new();

    // face-wise algebra of averages and jumps, from raw traces
    let mut avg_product = 0.0f64;
    let mut product_rule = 0.0f64;
    let mut kinetic = 0.0f64;
    for axis in 0..d {
        for k in 0..mesh.faces_per_axis() {
            let l = mesh.plus(axis, k);
            let (a_in, a_out) = (r[k], r[l]);
            let (b_in, b_out) = (phi[k], phi[l]);
            let avg = |x: f64, y: f64| 0.5 * (x + y);
            let lhs = avg(a_in * b_in, a_out * b_out) - avg(a_in, a_out) * avg(b_in, b_out);
            let rhs = 0.25 * (a_out - a_in) * (b_out - b_in);
            avg_product =
                avg_product.max(rel(lhs, rhs, (a_in * b_in).abs() + (a_out * b_out).abs()));

            let lhs = a_out * b_out - a_in * b_in;
            let rhs = avg(a_in, a_out) * (b_out - b_in) + (a_out - a_in) * avg(b_in, b_out);
            product_rule =
                product_rule.max(rel(lhs, rhs, (a_in * b_in).abs() + (a_out * b_out).abs()));

            // [[r v]].[[v]] - 1/2 [[r]] [[|v|^2]] = avg(r) |[[v]]|^2
            let mut lhs = 0.0;
            let mut jv2 = 0.0;
            let mut v2_in = 0.0;
            let mut v2_out = 0.0;
            let mut scale = 0.0;
            for c in &v.components {
                let (vi, vo) = (c[k], c[l]);
                lhs += (a_out * vo - a_in * vi) * (vo - vi);
                jv2 += (vo - vi) * (vo - vi);
                v2_in += vi * vi;
                v2_out += vo * vo;
                scale += (a_out * vo * vo).abs() + (a_in * vi * vi).abs();
            }
            lhs -= 0.5 * (a_out - a_in) * (v2_out - v2_in);
            kinetic = kinetic.max(rel(lhs, avg(a_in, a_out) * jv2, scale));
        }
    }
    out.push(("average of product", avg_product));
    out.push(("product rule for jumps", product_rule));
    out.push(("kinetic jump identity", kinetic));

    // sum over faces of |sigma| (avg(r) [[v]] + avg(v) [[r]]) . n vanishes
    let mut total = 0.0;
    let mut scale = 0.0;
    for axis in 0..d {
        let area = mesh.face_area(axis);
        let ra = face_average(mesh, &r, axis);
        let rj = face_jump(mesh, &r, axis);
        let va = face_average(mesh, &v.components[axis], axis);
        let vj = face_jump(mesh, &v.components[axis], axis);
        for k in 0..mesh.faces_per_axis() {
            let t = area * (ra[k] * vj[k] + va[k] * rj[k]);
            total += t;
            scale += t.abs();
        }
    }
    out.push(("face sum of product jumps", rel(total, 0.0, scale)));

    // div_h from the face sum equals the sum of dual differences of face averages
    let div = div_h(mesh, &v);
    let mut worst: f64 = 0.0;
    let mut alt = ScalarField::zeros(mesh);
    for axis in 0..d {
        let g = grad_dual_axis(mesh, &face_average(mesh, &v.components[axis], axis));
        for k in 0..mesh.cell_count() {
            alt[k] += g[k];
        }
    }
    let vmax = v.max_abs() / mesh.h();
    for k in 0..mesh.cell_count() {
        worst = worst.max(rel(div[k], alt[k], vmax));
    }
    out.push(("divergence as dual differences", worst));

    // Laplacian summation by parts
    let lap_r = laplace_h(mesh, &r);
    let lap_phi = laplace_h(mesh, &phi);
    let a = inner(mesh, &lap_r, &phi);
    let c = inner(mesh, &r, &lap_phi);
    let mut b = 0.0;
    for axis in 0..d {
        b -= inner_dual(
            mesh,
            &grad_edge_axis(mesh, &r, axis),
            &grad_edge_axis(mesh, &phi, axis),
        );
    }
    let scale = inner(mesh, &lap_r.map(f64::abs), &phi.map(f64::abs));
    out.push((
        "laplacian summation by parts",
        rel(a, b, scale).max(rel(a, c, scale)),
    ));

    // gradient / dual-gradient summation by parts, per axis
    let mut worst: f64 = 0.0;
    for axis in 0..d {
        let q = random_face(mesh, axis, rng);
        let lhs = inner_dual(mesh, &q, &grad_edge_axis(mesh, &r, axis));
        let rhs = -inner(mesh, &r, &grad_dual_axis(mesh, &q));
        let g = grad_edge_axis(mesh, &r, axis);
        let scale = mesh.dual_volume()
            * q.values
                .iter()
                .zip(&g.values)
                .map(|(a, b)| (a * b).abs())
                .sum::<f64>();
        worst = worst.max(rel(lhs, rhs, scale));
    }
    out.push(("gradient summation by parts", worst));

    // axis Laplacian is the dual difference of the edge gradient
    let mut worst: f64 = 0.0;
    for axis in 0..d {
        let lap = laplace_axis(mesh, &r, axis);
        let comp = grad_dual_axis(mesh, &grad_edge_axis(mesh, &r, axis));
        let scale = r.max_abs() / (mesh.h_axis(axis) * mesh.h_axis(axis));
        for k in 0..mesh.cell_count() {
            worst = worst.max(rel(lap[k], comp[k], scale));
        }
    }
    out.push(("axis laplacian composition", worst));

    // convective flux against jumps of a test function
    let params = FluxParams::new(0.6, mesh.h().min(0.5), 1.4).unwrap();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut scale = 0.0;
    for axis in 0..d {
        let area = mesh.face_area(axis);
        let w = &v.components[axis];
        for k in 0..mesh.faces_per_axis() {
            let l = mesh.plus(axis, k);
            let vn = 0.5 * (w[k] + w[l]);
            let jr = r[l] - r[k];
            let jphi = phi[l] - phi[k];
            let f = diffusive_flux(r[k], r[l], vn, &params);
            lhs -= area * f * jphi;
            rhs += area * (0.5 * vn.abs() + params.diffusion() + 0.25 * (w[l] - w[k])) * jr * jphi;
            scale += (area * f * jphi).abs();
        }
    }
    for axis in 0..d {
        let g = grad_dual_axis(mesh, &face_average(mesh, &phi, axis));
        for k in 0..mesh.cell_count() {
            let t = mesh.cell_volume() * r[k] * v.components[axis][k] * g[k];
            rhs -= t;
            scale += t.abs();
        }
    }
    out.push(("convective flux identity", rel(lhs, rhs, scale)));
    out
}
