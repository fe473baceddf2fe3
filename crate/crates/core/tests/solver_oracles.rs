#![allow(clippy::needless_range_loop)]

mod common;

use barofv::cases::{gresho_case, manufactured_case};
use barofv::diagnostics::{total_energy, total_mass};
use barofv::fields::{Quadrature, ScalarField, VectorField};
use barofv::flux::FluxParams;
use barofv::grid::Mesh;
use barofv::model::{Forcing, GasModel};
use barofv::solver::{compute_dt, scheme_residual, Solver, SolverConfig, State};
use barofv::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn solver<'m>(mesh: &'m Mesh, model: GasModel, forcing: Forcing) -> Solver<'m> {
    let params = FluxParams::new(0.6, mesh.h(), model.gamma).unwrap();
    Solver::new(mesh, model, params, forcing, SolverConfig::default()).unwrap()
}

/// Cell residuals of the implicit step written face by face from the definitions.
fn residual_oracle(
    mesh: &Mesh,
    model: &GasModel,
    eps: f64,
    prev: &State,
    next: &State,
    forcing: &Forcing,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = mesh.dim();
    let n = mesh.cell_count();
    let dt = next.time - prev.time;
    let c = mesh.h().powf(eps);
    let rho = &next.rho;
    let u = &next.u;
    let flux = |r_k: f64, r_l: f64, vn: f64| {
        (if vn >= 0.0 { r_k * vn } else { r_l * vn }) - c * (r_l - r_k)
    };
    let sides = [-1.0, 1.0];
    let neighbor = |k: usize, a: usize, s: f64| {
        if s > 0.0 {
            mesh.plus(a, k)
        } else {
            mesh.minus(a, k)
        }
    };

    let mut div = vec![0.0; n];
    for k in 0..n {
        for a in 0..d {
            for s in sides {
                let l = neighbor(k, a, s);
                div[k] += mesh.face_area(a) * s * 0.5 * (u.components[a][k] + u.components[a][l])
                    / mesh.cell_volume();
            }
        }
    }

    let mut cont = vec![0.0; n];
    let mut mom = vec![vec![0.0; n]; d];
    let mut x = Vec::new();
    let mut f = vec![0.0; d];
    for k in 0..n {
        cont[k] = (rho[k] - prev.rho[k]) / dt;
        mesh.cell_center_into(k, &mut x);
        forcing.eval(next.time, &x, &mut f);
        for j in 0..d {
            mom[j][k] =
                (rho[k] * u.components[j][k] - prev.rho[k] * prev.u.components[j][k]) / dt - f[j];
        }
        for a in 0..d {
            let w = mesh.face_area(a) / mesh.cell_volume();
            for s in sides {
                let l = neighbor(k, a, s);
                let vn = s * 0.5 * (u.components[a][k] + u.components[a][l]);
                cont[k] += w * flux(rho[k], rho[l], vn);
                for j in 0..d {
                    let (mk, ml) = (rho[k] * u.components[j][k], rho[l] * u.components[j][l]);
                    let mut t = flux(mk, ml, vn);
                    t -= model.mu * (u.components[j][l] - u.components[j][k]) / mesh.h_axis(a);
                    if a == j {
                        let pbar = 0.5
                            * (model.pressure_unchecked(rho[k]) + model.pressure_unchecked(rho[l]));
                        t += s * pbar;
                        t -= (model.mu + model.lambda) * s * 0.5 * (div[k] + div[l]);
                    }
                    mom[j][k] += w * t;
                }
            }
        }
    }
    (cont, mom)
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        (b[0] * a[1][1] - a[0][1] * b[1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ]
}

/// Solves an affine 2x2 system `R(x) = 0` by probing `R` at 0 and the unit vectors.
fn solve_affine2(residual: impl Fn([f64; 2]) -> [f64; 2]) -> [f64; 2] {
    let r0 = residual([0.0, 0.0]);
    let r1 = residual([1.0, 0.0]);
    let r2 = residual([0.0, 1.0]);
    let a = [
        [r1[0] - r0[0], r2[0] - r0[0]],
        [r1[1] - r0[1], r2[1] - r0[1]],
    ];
    solve2(a, [-r0[0], -r0[1]])
}

#[test]
fn ring_of_two_continuity_matches_hand_solve() {
    let mesh = Mesh::uniform(1, 2).unwrap();
    let s = solver(&mesh, GasModel::default(), Forcing::zero());
    let rho_prev = ScalarField::from_vec(&mesh, vec![1.0, 3.0]).unwrap();
    let u = VectorField::constant(&mesh, &[2.0]).unwrap();
    let (dt, h, c) = (0.1, 0.5, 0.5f64.powf(0.6));

    // both faces carry velocity 2 from cell 0 to cell 1 and from cell 1 to cell 0
    let f = |ri: f64, ro: f64| 2.0 * ri - c * (ro - ri);
    let expected = solve_affine2(|r| {
        [
            (r[0] - 1.0) / dt + (f(r[0], r[1]) - f(r[1], r[0])) / h,
            (r[1] - 3.0) / dt + (f(r[1], r[0]) - f(r[0], r[1])) / h,
        ]
    });
    assert!((expected[0] + expected[1] - 4.0).abs() < 1e-13);
    let (got, _) = s.solve_continuity(&rho_prev, &u, dt, None).unwrap();
    assert!(
        (got[0] - expected[0]).abs() < 1e-11,
        "{:?} vs {expected:?}",
        got.values
    );
    assert!((got[1] - expected[1]).abs() < 1e-11);
    // difference decays by 1 / (1 + 2 dt (2 + 2c) / h)
    let decay = 1.0 / (1.0 + 2.0 * dt * (2.0 + 2.0 * c) / h);
    assert!(((got[0] - got[1]) - (-2.0 * decay)).abs() < 1e-11);
}

#[test]
fn ring_of_two_momentum_matches_hand_solve() {
    let mesh = Mesh::uniform(1, 2).unwrap();
    let model = GasModel::default();
    let s = solver(&mesh, model, Forcing::zero());
    let dt = 0.1;
    let prev = State::new(
        &mesh,
        0.0,
        ScalarField::from_vec(&mesh, vec![1.0, 3.0]).unwrap(),
        VectorField::constant(&mesh, &[2.0]).unwrap(),
    )
    .unwrap();
    let (rho_new, _) = s.solve_continuity(&prev.rho, &prev.u, dt, None).unwrap();
    let zero = VectorField::zeros(&mesh);
    let (got, _) = s
        .solve_momentum(&prev, &rho_new, &prev.u, dt, &zero, None)
        .unwrap();

    let (h, c, mu) = (0.5, 0.5f64.powf(0.6), model.mu);
    let r = [rho_new[0], rho_new[1]];
    let f = |mi: f64, mo: f64| 2.0 * mi - c * (mo - mi);
    // pressure averages and the divergence are equal on both faces and cancel
    let expected = solve_affine2(|u| {
        let m = [r[0] * u[0], r[1] * u[1]];
        [
            (m[0] - 2.0) / dt + (f(m[0], m[1]) - f(m[1], m[0])) / h
                - 2.0 * mu * (u[1] - u[0]) / (h * h),
            (m[1] - 6.0) / dt + (f(m[1], m[0]) - f(m[0], m[1])) / h
                - 2.0 * mu * (u[0] - u[1]) / (h * h),
        ]
    });
    let u = &got.components[0];
    assert!(
        (u[0] - expected[0]).abs() < 1e-10,
        "{:?} vs {expected:?}",
        u.values
    );
    assert!((u[1] - expected[1]).abs() < 1e-10);
}

#[test]
fn library_residual_agrees_with_face_oracle() {
    let mesh = Mesh::new(2, &[6, 5]).unwrap();
    let model = GasModel::default();
    let case = manufactured_case();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prev = State::new(
        &mesh,
        0.3,
        common::random_scalar(&mesh, &mut rng, 0.5, 2.0),
        common::random_vector(&mesh, &mut rng),
    )
    .unwrap();
    let next = State::new(
        &mesh,
        0.31,
        common::random_scalar(&mesh, &mut rng, 0.5, 2.0),
        common::random_vector(&mesh, &mut rng),
    )
    .unwrap();
    let s = solver(&mesh, model, case.forcing.clone());
    let lib = s.residual(&prev, &next);
    let params = FluxParams::new(0.6, mesh.h(), model.gamma).unwrap();
    let again = scheme_residual(
        &mesh,
        &model,
        &params,
        &prev,
        &next,
        0.01,
        &s.sample_forcing(0.31),
    );
    let (cont, mom) = residual_oracle(&mesh, &model, 0.6, &prev, &next, &case.forcing);
    for k in 0..mesh.cell_count() {
        assert!((lib.continuity[k] - cont[k]).abs() < 1e-10 * (1.0 + cont[k].abs()));
        assert!((lib.continuity[k] - again.continuity[k]).abs() < 1e-12 * (1.0 + cont[k].abs()));
        for j in 0..2 {
            assert!(
                (lib.momentum.components[j][k] - mom[j][k]).abs() < 1e-10 * (1.0 + mom[j][k].abs())
            );
        }
    }
}

#[test]
fn manufactured_first_step_converges() {
    let case = manufactured_case();
    let mesh = Mesh::uniform(2, 32).unwrap();
    let s = solver(&mesh, case.model, case.forcing.clone());
    let initial = case.initial_state(&mesh, Quadrature::default()).unwrap();
    let dt = s.compute_dt(&initial).unwrap();
    let out = s.picard_step(&initial, dt).unwrap();
    assert!(out.iterations <= 50);
    let (cont, mom) = residual_oracle(&mesh, &case.model, 0.6, &initial, &out.state, &case.forcing);
    // residual of the step equations multiplied by dt, relative to the state size
    let scale = out.state.rho.max_abs() * (1.0 + out.state.u.max_abs());
    let worst = cont
        .iter()
        .chain(mom.iter().flatten())
        .fold(0.0f64, |m, r| m.max(r.abs()));
    assert!(
        dt * worst / scale <= 1e-8,
        "residual {:e}",
        dt * worst / scale
    );
    let (_, report) = s.step(&initial, dt, 1).unwrap();
    assert!(report.nonlinear_residual <= 1e-8);
    assert!(report.picard_increment <= SolverConfig::default().picard_tol);
}

#[test]
fn mass_is_conserved_from_rough_data() {
    let mesh = Mesh::new(2, &[12, 10]).unwrap();
    let s = solver(&mesh, GasModel::default(), Forcing::zero());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = State::new(
        &mesh,
        0.0,
        common::random_scalar(&mesh, &mut rng, 0.2, 3.0),
        common::random_vector(&mesh, &mut rng),
    )
    .unwrap();
    let m0 = total_mass(&mesh, &state);
    for step in 1..=5 {
        let dt = s.compute_dt(&state).unwrap();
        let (next, report) = s.step(&state, dt, step).unwrap();
        assert!(
            (report.mass - m0).abs() <= 10.0 * 1e-12 * m0,
            "drift {:e}",
            report.mass - m0
        );
        assert!(report.min_rho > 0.0);
        state = next;
    }
}

#[test]
fn compression_keeps_density_positive() {
    let mesh = Mesh::uniform(1, 16).unwrap();
    let s = solver(&mesh, GasModel::default(), Forcing::zero());
    // converging flow piles mass into the middle and empties the sides
    let rho = ScalarField::constant(&mesh, 1e-3);
    let u = ScalarField {
        values: (0..16).map(|k| if k < 8 { 5.0 } else { -5.0 }).collect(),
    };
    let u = VectorField {
        components: vec![u],
    };
    let (r, _) = s.solve_continuity(&rho, &u, 0.5, None).unwrap();
    assert!(r.min() > 0.0);
    assert!((r.values.iter().sum::<f64>() - 16.0 * 1e-3).abs() < 1e-14);
}

#[test]
fn constant_state_survives_many_steps() {
    let mesh = Mesh::uniform(2, 8).unwrap();
    let s = solver(&mesh, GasModel::default(), Forcing::zero());
    let initial = State::uniform(&mesh, 1.3, &[0.2, -0.5]).unwrap();
    let mut state = initial.clone();
    for step in 1..=20 {
        let dt = s.compute_dt(&state).unwrap();
        let (next, report) = s.step(&state, dt, step).unwrap();
        assert_eq!(report.picard_iterations, 1);
        state = next;
    }
    assert!(max_diff(&state, &initial) <= 1e-12);
}

#[test]
fn zero_final_time_returns_initial_state() {
    let mesh = Mesh::uniform(2, 8).unwrap();
    let case = gresho_case();
    let s = solver(&mesh, case.model, Forcing::zero());
    let initial = case.initial_state(&mesh, Quadrature::default()).unwrap();
    let mut seen = 0;
    let out = s
        .run_with(initial.clone(), 0.0, |_, _| {
            seen += 1;
            Ok(())
        })
        .unwrap();
    assert!(out.reports.is_empty());
    assert_eq!(seen, 1);
    assert_eq!(out.final_state.rho, initial.rho);
}

#[test]
fn run_lands_on_final_time() {
    let mesh = Mesh::uniform(2, 16).unwrap();
    let case = gresho_case();
    let s = solver(&mesh, case.model, Forcing::zero());
    let initial = case.initial_state(&mesh, Quadrature::default()).unwrap();
    let out = s.run(initial, 0.0137).unwrap();
    assert_eq!(out.final_state.time, 0.0137);
    assert_eq!(out.reports.last().unwrap().time, 0.0137);
    let mut t = 0.0;
    for r in &out.reports {
        t += r.dt;
        assert!(r.dt > 0.0);
    }
    assert!((t - 0.0137).abs() < 1e-15);
}

#[test]
fn halving_cfl_halves_the_step() {
    let mesh = Mesh::uniform(2, 16).unwrap();
    let case = gresho_case();
    let state = case.initial_state(&mesh, Quadrature::default()).unwrap();
    let mut cfg = SolverConfig::default();
    let dt = compute_dt(&state, &case.model, &mesh, &cfg).unwrap();
    cfg.cfl = 0.15;
    assert_eq!(
        compute_dt(&state, &case.model, &mesh, &cfg).unwrap(),
        0.5 * dt
    );
}

#[test]
fn gresho_energy_does_not_grow() {
    let mesh = Mesh::uniform(2, 32).unwrap();
    let case = gresho_case();
    let s = solver(&mesh, case.model, Forcing::zero());
    let initial = case.initial_state(&mesh, Quadrature::default()).unwrap();
    let e0 = total_energy(&mesh, &case.model, &initial);
    let out = s.run(initial, 0.02).unwrap();
    let mut prev = e0;
    for r in &out.reports {
        assert!(
            r.energy_slack() <= 1e-8 * e0,
            "slack {:e}",
            r.energy_slack()
        );
        assert!(r.energy() <= prev + 1e-8 * e0);
        assert!(r.budget.eps_dissipation >= 0.0 && r.budget.viscous_grad >= 0.0);
        prev = r.energy();
    }
}

#[test]
fn failed_steps_are_retried_with_smaller_steps() {
    let mesh = Mesh::uniform(2, 16).unwrap();
    let case = gresho_case();
    let params = FluxParams::new(0.6, mesh.h(), case.model.gamma).unwrap();
    let cfg = SolverConfig {
        picard_max_iter: 4,
        picard_tol: 1e-6,
        ..SolverConfig::default()
    };
    let s = Solver::new(&mesh, case.model, params, Forcing::zero(), cfg).unwrap();
    let initial = case.initial_state(&mesh, Quadrature::default()).unwrap();
    let dt = 8.0 * s.compute_dt(&initial).unwrap();
    match s.step(&initial, dt, 1) {
        Ok((next, report)) => {
            assert!(report.retries > 0);
            assert!(report.dt < dt);
            assert!((next.time - report.dt).abs() < 1e-15);
        }
        Err(e) => assert!(matches!(e, Error::Picard { .. }), "{e}"),
    }
    let strict = SolverConfig {
        picard_max_iter: 1,
        picard_tol: 1e-14,
        max_retries: 0,
        ..SolverConfig::default()
    };
    let s = Solver::new(&mesh, case.model, params, Forcing::zero(), strict).unwrap();
    assert!(matches!(s.step(&initial, dt, 1), Err(Error::Picard { .. })));
}

fn max_diff(a: &State, b: &State) -> f64 {
    let mut m = 0.0f64;
    for (x, y) in a.rho.values.iter().zip(&b.rho.values) {
        m = m.max((x - y).abs());
    }
    for (ca, cb) in a.u.components.iter().zip(&b.u.components) {
        for (x, y) in ca.values.iter().zip(&cb.values) {
            m = m.max((x - y).abs());
        }
    }
    m
}
