//! Gauss–Legendre collocation and sum-factorised transforms.

use std::f64::consts::{PI, SQRT_2};

use super::basis::cos_norm;

/// Trigonometric family of a 1D basis factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Sine,
    Cosine,
}

/// Operation applied to a 1D factor before evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Value,
    Deriv,
    /// Antiderivative from the lower end of the interval.
    Antideriv,
}

pub const VALUE: [Factor; 3] = [Factor::Value, Factor::Value, Factor::Value];
pub const DX: [Factor; 3] = [Factor::Deriv, Factor::Value, Factor::Value];
pub const DY: [Factor; 3] = [Factor::Value, Factor::Deriv, Factor::Value];
pub const DZ: [Factor; 3] = [Factor::Value, Factor::Value, Factor::Deriv];
/// x-derivative integrated in z from the bottom.
pub const DX_INT_Z: [Factor; 3] = [Factor::Deriv, Factor::Value, Factor::Antideriv];
/// y-derivative integrated in z from the bottom.
pub const DY_INT_Z: [Factor; 3] = [Factor::Value, Factor::Deriv, Factor::Antideriv];

/// Gauss–Legendre nodes and weights on an interval.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss–Legendre rule on `[a, b]`, Newton iteration on P_n.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Quadrature {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for k in 0..n.div_ceil(2) {
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for l in 2..=n {
                let p2 = ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = mid - half * x;
        nodes[n - 1 - k] = mid + half * x;
        weights[k] = half * w;
        weights[n - 1 - k] = half * w;
    }
    Quadrature { nodes, weights }
}

/// Value of a normalised 1D factor on an interval whose lower end is `lower`.
pub fn factor_value(family: Family, factor: Factor, k: u32, lower: f64, x: f64) -> f64 {
    let kf = k as f64;
    let w = kf * PI;
    match (family, factor) {
        (Family::Sine, Factor::Value) => SQRT_2 * (w * x).sin(),
        (Family::Sine, Factor::Deriv) => SQRT_2 * w * (w * x).cos(),
        (Family::Sine, Factor::Antideriv) => {
            if k == 0 {
                0.0
            } else {
                SQRT_2 * ((w * lower).cos() - (w * x).cos()) / w
            }
        }
        (Family::Cosine, Factor::Value) => cos_norm(k) * (w * x).cos(),
        (Family::Cosine, Factor::Deriv) => -cos_norm(k) * w * (w * x).sin(),
        (Family::Cosine, Factor::Antideriv) => {
            if k == 0 {
                x - lower
            } else {
                cos_norm(k) * ((w * x).sin() - (w * lower).sin()) / w
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Axis {
    quad: Quadrature,
    kmax: usize,
    /// `tables[family * 3 + factor]`, row k holds the factor at every node.
    tables: Vec<Vec<f64>>,
}

fn family_slot(f: Family) -> usize {
    match f {
        Family::Sine => 0,
        Family::Cosine => 1,
    }
}

fn factor_slot(f: Factor) -> usize {
    match f {
        Factor::Value => 0,
        Factor::Deriv => 1,
        Factor::Antideriv => 2,
    }
}

impl Axis {
    fn new(kmax: usize, nodes: usize, lower: f64, upper: f64) -> Self {
        let quad = gauss_legendre(nodes, lower, upper);
        let mut tables = Vec::with_capacity(6);
        for family in [Family::Sine, Family::Cosine] {
            for factor in [Factor::Value, Factor::Deriv, Factor::Antideriv] {
                let mut t = Vec::with_capacity((kmax + 1) * nodes);
                for k in 0..=kmax as u32 {
                    t.extend(
                        quad.nodes
                            .iter()
                            .map(|&x| factor_value(family, factor, k, lower, x)),
                    );
                }
                tables.push(t);
            }
        }
        Self { quad, kmax, tables }
    }

    fn table(&self, family: Family, factor: Factor) -> &[f64] {
        &self.tables[family_slot(family) * 3 + factor_slot(factor)]
    }

    fn n(&self) -> usize {
        self.quad.nodes.len()
    }
}

/// Tensor Gauss–Legendre grid on (0,1)² × (−1,0) with cached factor tables.
///
/// Grid values are stored x-major: index `(gx * ny + gy) * nz + gz`.
/// Coefficient cubes are indexed `(kx * (N_h+1) + ky) * (N_z+1) + kz`.
#[derive(Clone, Debug)]
pub struct Grid {
    h: Axis,
    z: Axis,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(n_h: usize, n_z: usize, nodes_h: usize, nodes_z: usize) -> Self {
        let h = Axis::new(n_h, nodes_h, 0.0, 1.0);
        let z = Axis::new(n_z, nodes_z, -1.0, 0.0);
        let mut weights = Vec::with_capacity(nodes_h * nodes_h * nodes_z);
        for &wx in &h.quad.weights {
            for &wy in &h.quad.weights {
                for &wz in &z.quad.weights {
                    weights.push(wx * wy * wz);
                }
            }
        }
        Self { h, z, weights }
    }

    pub fn nodes_h(&self) -> usize {
        self.h.n()
    }

    pub fn nodes_z(&self) -> usize {
        self.z.n()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.h.n(), self.h.n(), self.z.n())
    }

    pub fn horizontal(&self) -> &Quadrature {
        &self.h.quad
    }

    pub fn vertical(&self) -> &Quadrature {
        &self.z.quad
    }

    /// Product quadrature weights in grid layout.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_𝒪 f g by quadrature.
    pub fn integrate_product(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, a)| w * a).sum()
    }

    /// Coefficient cube → grid values.
    pub fn synthesize(&self, cube: &[f64], family: [Family; 3], factor: [Factor; 3]) -> Vec<f64> {
        let (k1, k2, k3) = (self.h.kmax + 1, self.h.kmax + 1, self.z.kmax + 1);
        let (n1, n2, n3) = (self.h.n(), self.h.n(), self.z.n());
        let tx = self.h.table(family[0], factor[0]);
        let ty = self.h.table(family[1], factor[1]);
        let tz = self.z.table(family[2], factor[2]);

        // contract z
        let mut t1 = vec![0.0; k1 * k2 * n3];
        for a in 0..k1 * k2 {
            let src = &cube[a * k3..(a + 1) * k3];
            if src.iter().all(|&c| c == 0.0) {
                continue;
            }
            let dst = &mut t1[a * n3..(a + 1) * n3];
            for (kz, &c) in src.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let row = &tz[kz * n3..(kz + 1) * n3];
                for (d, &r) in dst.iter_mut().zip(row) {
                    *d += c * r;
                }
            }
        }
        // contract y
        let mut t2 = vec![0.0; k1 * n2 * n3];
        for kx in 0..k1 {
            for ky in 0..k2 {
                let src = &t1[(kx * k2 + ky) * n3..(kx * k2 + ky + 1) * n3];
                if src.iter().all(|&c| c == 0.0) {
                    continue;
                }
                let row = &ty[ky * n2..(ky + 1) * n2];
                for (gy, &r) in row.iter().enumerate() {
                    let dst = &mut t2[(kx * n2 + gy) * n3..(kx * n2 + gy + 1) * n3];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += r * s;
                    }
                }
            }
        }
        // contract x
        let plane = n2 * n3;
        let mut out = vec![0.0; n1 * plane];
        for kx in 0..k1 {
            let src = &t2[kx * plane..(kx + 1) * plane];
            if src.iter().all(|&c| c == 0.0) {
                continue;
            }
            let row = &tx[kx * n1..(kx + 1) * n1];
            for (gx, &r) in row.iter().enumerate() {
                let dst = &mut out[gx * plane..(gx + 1) * plane];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += r * s;
                }
            }
        }
        out
    }

    /// Grid values → quadrature projections onto the factor-transformed
    /// basis, i.e. the weighted transpose of [`Self::synthesize`].
    pub fn analyze(&self, values: &[f64], family: [Family; 3], factor: [Factor; 3]) -> Vec<f64> {
        let (k1, k2, k3) = (self.h.kmax + 1, self.h.kmax + 1, self.z.kmax + 1);
        let (n1, n2, n3) = (self.h.n(), self.h.n(), self.z.n());
        let tx = self.h.table(family[0], factor[0]);
        let ty = self.h.table(family[1], factor[1]);
        let tz = self.z.table(family[2], factor[2]);
        let plane = n2 * n3;

        // contract x (with weights)
        let mut s1 = vec![0.0; k1 * plane];
        for gx in 0..n1 {
            let wv: Vec<f64> = (0..plane)
                .map(|p| values[gx * plane + p] * self.weights[gx * plane + p])
                .collect();
            for kx in 0..k1 {
                let r = tx[kx * n1 + gx];
                if r == 0.0 {
                    continue;
                }
                let dst = &mut s1[kx * plane..(kx + 1) * plane];
                for (d, &s) in dst.iter_mut().zip(&wv) {
                    *d += r * s;
                }
            }
        }
        // contract y
        let mut s2 = vec![0.0; k1 * k2 * n3];
        for kx in 0..k1 {
            for gy in 0..n2 {
                let src = &s1[(kx * n2 + gy) * n3..(kx * n2 + gy + 1) * n3];
                for ky in 0..k2 {
                    let r = ty[ky * n2 + gy];
                    if r == 0.0 {
                        continue;
                    }
                    let dst = &mut s2[(kx * k2 + ky) * n3..(kx * k2 + ky + 1) * n3];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += r * s;
                    }
                }
            }
        }
        // contract z
        let mut cube = vec![0.0; k1 * k2 * k3];
        for a in 0..k1 * k2 {
            let src = &s2[a * n3..(a + 1) * n3];
            for kz in 0..k3 {
                let row = &tz[kz * n3..(kz + 1) * n3];
                cube[a * k3 + kz] = row.iter().zip(src).map(|(r, s)| r * s).sum();
            }
        }
        cube
    }

    /// Coordinates of grid point `g`.
    pub fn point(&self, g: usize) -> (f64, f64, f64) {
        let (_, n2, n3) = self.shape();
        let gz = g % n3;
        let gy = (g / n3) % n2;
        let gx = g / (n2 * n3);
        (self.h.quad.nodes[gx], self.h.quad.nodes[gy], self.z.quad.nodes[gz])
    }
}
