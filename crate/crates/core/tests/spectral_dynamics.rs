mod common;

use pesim_core::dynamics::{BarotropicField, Dynamics, Physics};
use pesim_core::presets::smooth_state;
use pesim_core::probes::g_bound_ratios;
use pesim_core::spectral::{build_basis, Field, ModeIndex, SpectralState};

fn full(n: usize) -> Dynamics {
    Dynamics::new(&build_basis(n, n).unwrap(), Physics::default()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn inner_product_matches_direct_quadrature() {
    let d = full(2);
    for seed in 0..4 {
        let y = smooth_state(&d, 1.0, 0.5, seed).unwrap();
        let y1 = smooth_state(&d, 1.0, 0.5, seed + 10).unwrap();
        let q = common::integrate(24, |x, yy, z| {
            let a = common::eval(&y, x, yy, z);
            let b = common::eval(&y1, x, yy, z);
            (0..3).map(|f| a[f][0] * b[f][0]).sum()
        });
        assert!(close(y.inner_product(&y1).unwrap(), q, 1e-12));
    }
}

#[test]
fn dirichlet_form_is_symmetric_and_matches_gradient_quadrature() {
    let d = full(2);
    let y = smooth_state(&d, 1.0, 1.0, 1).unwrap();
    let y1 = smooth_state(&d, 1.0, 1.0, 2).unwrap();
    let ay = d.apply_a(&y).unwrap();
    let ay1 = d.apply_a(&y1).unwrap();
    let a = ay.inner_product(&y1).unwrap();
    let b = ay1.inner_product(&y).unwrap();
    let q = common::integrate(24, |x, yy, z| {
        let u = common::eval(&y, x, yy, z);
        let v = common::eval(&y1, x, yy, z);
        (0..3).map(|f| (1..4).map(|k| u[f][k] * v[f][k]).sum::<f64>()).sum()
    });
    assert!(close(a, b, 1e-12));
    assert!(close(a, q, 1e-12));
}

#[test]
fn norm_two_is_norm_of_a_y() {
    let d = full(3);
    let y = smooth_state(&d, 1.0, 1.0, 3).unwrap();
    let ay = d.apply_a(&y).unwrap();
    assert!(close(y.norm_s(2.0).unwrap(), ay.norm_s(0.0).unwrap(), 1e-12));
}

#[test]
fn collocation_round_trip_is_identity() {
    let d = full(3);
    let y = smooth_state(&d, 1.0, 0.0, 4).unwrap();
    let back = SpectralState::from_collocation(d.basis(), &y.to_collocation()).unwrap();
    let err = y.coeffs().iter().zip(back.coeffs()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-12, "{err}");
}

#[test]
fn b_matches_exact_triple_products_for_single_modes() {
    let d = full(2);
    let b = d.basis();
    let pairs = [
        (ModeIndex::new(Field::V1, 1, 2, 1).unwrap(), ModeIndex::new(Field::V2, 2, 1, 0).unwrap()),
        (ModeIndex::new(Field::V2, 1, 1, 2).unwrap(), ModeIndex::new(Field::Temp, 1, 2, 1).unwrap()),
        (ModeIndex::new(Field::V1, 2, 2, 0).unwrap(), ModeIndex::new(Field::V1, 1, 1, 1).unwrap()),
    ];
    for (ma, mb) in pairs {
        let ya = SpectralState::single_mode(b, ma, 1.0).unwrap();
        let yb = SpectralState::single_mode(b, mb, 1.0).unwrap();
        let out = d.eval_b(&ya, &yb).unwrap();
        for (pos, me) in b.modes().iter().enumerate() {
            let e = SpectralState::single_mode(b, *me, 1.0).unwrap();
            let q = common::trilinear(24, &ya, &yb, &e);
            assert!(
                (out.coeffs()[pos] - q).abs() < 1e-12 * (1.0 + q.abs()),
                "{ma:?} {mb:?} -> {me:?}: {} vs {q}",
                out.coeffs()[pos]
            );
        }
    }
}

#[test]
fn phi_matches_closed_form_and_z_quadrature() {
    let d = full(2);
    let mode = ModeIndex::new(Field::V1, 1, 1, 1).unwrap();
    let y = SpectralState::single_mode(d.basis(), mode, 1.0).unwrap();
    let phi = d.vertical_velocity(&y).unwrap();
    let (zs, ws) = common::gauss(30, -1.0, 0.0);
    for &(x, yy, z) in &[(0.3, 0.6, -0.2), (0.9, 0.1, -0.75), (0.5, 0.5, 0.0)] {
        let closed = common::phi(&y, x, yy, z);
        // −∫_{−1}^z ∂x v₁ dz′ by Gauss on [−1, z]
        let numeric: f64 = zs
            .iter()
            .zip(&ws)
            .map(|(s, w)| {
                let t = -1.0 + (s + 1.0) * (z + 1.0);
                -w * (z + 1.0) * common::eval(&y, x, yy, t)[0][1]
            })
            .sum();
        assert!((closed - numeric).abs() < 1e-12);
        assert!((phi.at(x, yy, z) - closed).abs() < 1e-12);
    }
}

#[test]
fn phi_of_zero_is_zero_and_surface_flux_is_weakly_zero() {
    let d = full(3);
    let zero = d.vertical_velocity(&SpectralState::zeros(d.basis())).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    // Φ(x, y, 0) = −div v̄ is orthogonal to the pressure space for projected v
    let y = smooth_state(&d, 1.0, 1.0, 7).unwrap();
    for &(i, j) in d.pressure().modes() {
        let flux = common::integrate(24, |x, yy, _| {
            common::phi(&y, x, yy, 0.0) * (i as f64 * std::f64::consts::PI * x).cos()
                * (j as f64 * std::f64::consts::PI * yy).cos()
        });
        assert!(flux.abs() < 1e-12, "({i},{j}): {flux}");
    }
}

#[test]
fn g_energy_is_minus_baroclinic_work() {
    let d = full(2);
    for seed in 0..3 {
        let y = smooth_state(&d, 1.0, 1.0, 20 + seed).unwrap();
        let g = d.eval_g(&y).unwrap().inner_product(&y).unwrap();
        // −∫ (∫_{−1}^z ∇T dz′)·v with the inner integral done by Gauss
        let (zs, ws) = common::gauss(24, -1.0, 0.0);
        let q = common::integrate(24, |x, yy, z| {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (s, w) in zs.iter().zip(&ws) {
                let t = -1.0 + (s + 1.0) * (z + 1.0);
                let e = common::eval(&y, x, yy, t);
                gx += w * (z + 1.0) * e[2][1];
                gy += w * (z + 1.0) * e[2][2];
            }
            let e = common::eval(&y, x, yy, z);
            -(gx * e[0][0] + gy * e[1][0])
        });
        assert!(close(g, q, 1e-11), "{g} vs {q}");
    }
}

#[test]
fn g_bound_constant_is_finite_over_ensemble() {
    let d = full(2);
    let c = (0..100)
        .map(|s| g_bound_ratios(&d, &smooth_state(&d, 1.0, 1.0, 300 + s).unwrap()).unwrap().against_min)
        .fold(0.0f64, f64::max);
    assert!(c.is_finite() && c > 0.0 && c < 10.0, "C = {c}");
}

#[test]
fn random_rhs_projects_to_divergence_free() {
    let d = full(4);
    let n = d.pressure().barotropic_positions().len();
    for seed in 0..5u64 {
        let coeffs: Vec<f64> = (0..n).map(|k| ((k as u64 * 7919 + seed * 104729) % 1000) as f64 / 500.0 - 1.0).collect();
        let p = d.solve_pb(&BarotropicField { n_h: 4, coeffs }).unwrap();
        assert!(p.residual <= 1e-12, "{}", p.residual);
    }
}

#[test]
fn pure_rotation_without_temperature_conserves_energy() {
    let d = full(2);
    let mut y = smooth_state(&d, 1.0, 1.0, 5).unwrap();
    for (c, m) in y.coeffs_mut().iter_mut().zip(d.basis().modes()) {
        if m.field == Field::Temp {
            *c = 0.0;
        }
    }
    let g = d.eval_g(&y).unwrap();
    assert!(g.inner_product(&y).unwrap().abs() < 1e-12);
    assert!(g.restrict(Field::Temp).l2_norm() == 0.0);
}
