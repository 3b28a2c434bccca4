//! Independent pointwise evaluation of states for quadrature oracles. Uses
//! its own Gauss–Legendre rule and hand-written mode derivatives, nothing
//! from the transform code.
#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

use pesim_core::spectral::{Field, SpectralState};

/// Gauss–Legendre nodes and weights on [a, b] by Newton iteration.
pub fn gauss(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dx = p1 / dp;
            t -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (a + b) + 0.5 * (b - a) * t;
        w[i] = (b - a) / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn c(k: u32) -> f64 {
    if k == 0 {
        1.0
    } else {
        SQRT_2
    }
}

/// Value and gradient of every component at a point: [field][0 = value, 1..4 = ∂x, ∂y, ∂z].
pub fn eval(y: &SpectralState, x: f64, yy: f64, z: f64) -> [[f64; 4]; 3] {
    let mut out = [[0.0; 4]; 3];
    for (mode, &a) in y.basis().modes().iter().zip(y.coeffs()) {
        if a == 0.0 {
            continue;
        }
        let (kx, ky, kz) = (mode.i as f64 * PI, mode.j as f64 * PI, mode.m as f64 * PI);
        let (fz, dfz) = (c(mode.m) * (kz * z).cos(), -c(mode.m) * kz * (kz * z).sin());
        let (fx, dfx, fy, dfy) = match mode.field {
            Field::Temp => (
                c(mode.i) * (kx * x).cos(),
                -c(mode.i) * kx * (kx * x).sin(),
                c(mode.j) * (ky * yy).cos(),
                -c(mode.j) * ky * (ky * yy).sin(),
            ),
            _ => (
                SQRT_2 * (kx * x).sin(),
                SQRT_2 * kx * (kx * x).cos(),
                SQRT_2 * (ky * yy).sin(),
                SQRT_2 * ky * (ky * yy).cos(),
            ),
        };
        let s = match mode.field {
            Field::V1 => 0,
            Field::V2 => 1,
            Field::Temp => 2,
        };
        out[s][0] += a * fx * fy * fz;
        out[s][1] += a * dfx * fy * fz;
        out[s][2] += a * fx * dfy * fz;
        out[s][3] += a * fx * fy * dfz;
    }
    out
}

/// Φ(v) = −∫_{−1}^z (∂x v₁ + ∂y v₂) dz′ in closed form.
pub fn phi(y: &SpectralState, x: f64, yy: f64, z: f64) -> f64 {
    let mut w = 0.0;
    for (mode, &a) in y.basis().modes().iter().zip(y.coeffs()) {
        if a == 0.0 || mode.field == Field::Temp {
            continue;
        }
        let (kx, ky, kz) = (mode.i as f64 * PI, mode.j as f64 * PI, mode.m as f64 * PI);
        let int_z = if mode.m == 0 { z + 1.0 } else { c(mode.m) * (kz * z).sin() / kz };
        let horiz = match mode.field {
            Field::V1 => 2.0 * kx * (kx * x).cos() * (ky * yy).sin(),
            _ => 2.0 * ky * (kx * x).sin() * (ky * yy).cos(),
        };
        w -= a * horiz * int_z;
    }
    w
}

/// Tensor quadrature over 𝒪 with n nodes per direction.
pub fn integrate<F: FnMut(f64, f64, f64) -> f64>(n: usize, mut f: F) -> f64 {
    let (xh, wh) = gauss(n, 0.0, 1.0);
    let (xz, wz) = gauss(n, -1.0, 0.0);
    let mut s = 0.0;
    for (i, x) in xh.iter().enumerate() {
        for (j, y) in xh.iter().enumerate() {
            for (k, z) in xz.iter().enumerate() {
                s += wh[i] * wh[j] * wz[k] * f(*x, *y, *z);
            }
        }
    }
    s
}

/// Skew trilinear form ½[((u·∇)b, e) − ((u·∇)e, b)] with u = (v₁, v₂, Φ(v)) of `a`.
pub fn trilinear(n: usize, a: &SpectralState, b: &SpectralState, e: &SpectralState) -> f64 {
    integrate(n, |x, y, z| {
        let av = eval(a, x, y, z);
        let bv = eval(b, x, y, z);
        let ev = eval(e, x, y, z);
        let u = [av[0][0], av[1][0], phi(a, x, y, z)];
        let mut s = 0.0;
        for f in 0..3 {
            let ub: f64 = (0..3).map(|d| u[d] * bv[f][d + 1]).sum();
            let ue: f64 = (0..3).map(|d| u[d] * ev[f][d + 1]).sum();
            s += ub * ev[f][0] - ue * bv[f][0];
        }
        0.5 * s
    })
}
