//! Barotropic pressure: discrete gradient, projection and the implicit
//! diffusion–pressure (Stokes) solve.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::spectral::{gauss_legendre, grid::factor_value, BasisSet, Factor, Family};

/// Vertical average of the horizontal velocity: the m = 0 sine–sine
/// coefficients, V1 block then V2 block, each in (i, j) lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct BarotropicField {
    pub n_h: usize,
    pub coeffs: Vec<f64>,
}

impl BarotropicField {
    pub fn zeros(n_h: usize) -> Self {
        Self {
            n_h,
            coeffs: vec![0.0; 2 * n_h * n_h],
        }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Barotropic pressure p_b on cosine modes, with the divergence residual
/// left after the projection it defines.
#[derive(Clone, Debug)]
pub struct BarotropicPressure {
    pub modes: Vec<(u32, u32)>,
    pub coeffs: Vec<f64>,
    pub residual: f64,
}

/// Pressure space cos(iπx)cos(jπy), 0 ≤ i, j ≤ N_h − 1 without the constant,
/// and its discrete gradient into the barotropic velocity block.
#[derive(Debug)]
pub struct PressureSpace {
    modes: Vec<(u32, u32)>,
    barotropic: Vec<usize>,
    /// (e_b, ∇q) for barotropic velocity mode b and pressure mode q.
    gradient: DMatrix<f64>,
    normal: Option<Cholesky<f64, Dyn>>,
    gradient_norm: f64,
}

impl PressureSpace {
    pub fn new(basis: &Arc<BasisSet>) -> Result<Self> {
        let n_h = basis.n_h() as u32;
        let modes: Vec<(u32, u32)> = (0..n_h)
            .flat_map(|i| (0..n_h).map(move |j| (i, j)))
            .filter(|&m| m != (0, 0))
            .collect();
        let barotropic = basis.barotropic_positions();

        let q = gauss_legendre(basis.grid().nodes_h(), 0.0, 1.0);
        let integral = |f1: Family, a1: Factor, k1: u32, f2: Family, a2: Factor, k2: u32| -> f64 {
            q.nodes
                .iter()
                .zip(&q.weights)
                .map(|(&x, &w)| {
                    w * factor_value(f1, a1, k1, 0.0, x) * factor_value(f2, a2, k2, 0.0, x)
                })
                .sum()
        };

        let nb = barotropic.len();
        let half = nb / 2;
        let mut gradient = DMatrix::zeros(nb, modes.len());
        for (col, &(qi, qj)) in modes.iter().enumerate() {
            for vi in 1..=n_h {
                for vj in 1..=n_h {
                    let row = ((vi - 1) * n_h + (vj - 1)) as usize;
                    use Factor::{Deriv, Value};
                    use Family::{Cosine, Sine};
                    // ∂x q against V1, ∂y q against V2
                    gradient[(row, col)] = integral(Sine, Value, vi, Cosine, Deriv, qi)
                        * integral(Sine, Value, vj, Cosine, Value, qj);
                    gradient[(half + row, col)] = integral(Sine, Value, vi, Cosine, Value, qi)
                        * integral(Sine, Value, vj, Cosine, Deriv, qj);
                }
            }
        }

        let normal = if modes.is_empty() {
            None
        } else {
            Some(
                Cholesky::new(gradient.transpose() * &gradient).ok_or(Error::SingularPressure)?,
            )
        };
        let gradient_norm = gradient.norm();
        Ok(Self {
            modes,
            barotropic,
            gradient,
            normal,
            gradient_norm,
        })
    }

    pub fn modes(&self) -> &[(u32, u32)] {
        &self.modes
    }

    pub fn barotropic_positions(&self) -> &[usize] {
        &self.barotropic
    }

    pub fn gradient_matrix(&self) -> &DMatrix<f64> {
        &self.gradient
    }

    pub fn gather(&self, coeffs: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.barotropic.len(), self.barotropic.iter().map(|&p| coeffs[p]))
    }

    /// Weak divergence −(v̄, ∇q) for every pressure mode q.
    pub fn divergence(&self, vbar: &DVector<f64>) -> DVector<f64> {
        -(self.gradient.transpose() * vbar)
    }

    /// |(v̄, ∇q)|₂ relative to ‖∇‖·|v̄|; zero for a discretely divergence-free v̄.
    pub fn divergence_residual(&self, coeffs: &[f64]) -> f64 {
        let vbar = self.gather(coeffs);
        let n = vbar.norm();
        if n == 0.0 || self.modes.is_empty() {
            return 0.0;
        }
        self.divergence(&vbar).norm() / (self.gradient_norm * n)
    }

    /// p_b such that rhs − ∇p_b is discretely divergence-free, constant mode
    /// fixed to zero.
    pub fn solve(&self, rhs: &BarotropicField) -> Result<BarotropicPressure> {
        if rhs.coeffs.len() != self.barotropic.len() {
            return Err(Error::DimensionMismatch {
                expected: self.barotropic.len(),
                got: rhs.coeffs.len(),
            });
        }
        let r = DVector::from_column_slice(&rhs.coeffs);
        let Some(normal) = &self.normal else {
            return Ok(BarotropicPressure {
                modes: Vec::new(),
                coeffs: Vec::new(),
                residual: 0.0,
            });
        };
        let p = normal.solve(&(self.gradient.transpose() * &r));
        let projected = &r - &self.gradient * &p;
        let scale = self.gradient_norm * r.norm();
        let residual = if scale == 0.0 {
            0.0
        } else {
            (self.gradient.transpose() * projected).norm() / scale
        };
        Ok(BarotropicPressure {
            modes: self.modes.clone(),
            coeffs: p.iter().copied().collect(),
            residual,
        })
    }

    /// ∇p_b projected on the barotropic block.
    pub fn gradient_of(&self, p: &[f64]) -> DVector<f64> {
        &self.gradient * DVector::from_column_slice(p)
    }

    /// Removes the discrete gradient part of the barotropic velocity in place.
    pub fn project(&self, coeffs: &mut [f64]) {
        let Some(normal) = &self.normal else {
            return;
        };
        let r = self.gather(coeffs);
        let p = normal.solve(&(self.gradient.transpose() * &r));
        let g = &self.gradient * p;
        for (k, &pos) in self.barotropic.iter().enumerate() {
            coeffs[pos] -= g[k];
        }
    }
}

/// Solve of (I + dt·κA) u + ∇p = r with u discretely divergence-free.
///
/// Diagonal on every mode except the barotropic velocity block, where the
/// Schur complement Gᵀ M⁻¹ G is factored once. The operator is symmetric.
#[derive(Debug)]
pub struct StokesSolver {
    inv_diag: Vec<f64>,
    barotropic: Vec<usize>,
    gradient: DMatrix<f64>,
    schur: Option<Cholesky<f64, Dyn>>,
}

impl StokesSolver {
    pub fn new(basis: &BasisSet, pressure: &PressureSpace, dt: f64, kappa: f64) -> Result<Self> {
        let inv_diag: Vec<f64> = basis
            .eigenvalues()
            .iter()
            .map(|&mu| 1.0 / (1.0 + dt * kappa * mu))
            .collect();
        let barotropic = pressure.barotropic.clone();
        let gradient = pressure.gradient.clone();
        let schur = if pressure.modes.is_empty() {
            None
        } else {
            let minv = DVector::from_iterator(
                barotropic.len(),
                barotropic.iter().map(|&p| inv_diag[p]),
            );
            let mg = DMatrix::from_fn(gradient.nrows(), gradient.ncols(), |r, c| {
                minv[r] * gradient[(r, c)]
            });
            Some(
                Cholesky::new(gradient.transpose() * mg).ok_or(Error::SingularPressure)?,
            )
        };
        Ok(Self {
            inv_diag,
            barotropic,
            gradient,
            schur,
        })
    }

    pub fn apply(&self, r: &mut [f64]) {
        if let Some(schur) = &self.schur {
            let mr = DVector::from_iterator(
                self.barotropic.len(),
                self.barotropic.iter().map(|&p| self.inv_diag[p] * r[p]),
            );
            let p = schur.solve(&(self.gradient.transpose() * mr));
            let g = &self.gradient * p;
            for (k, &pos) in self.barotropic.iter().enumerate() {
                r[pos] -= g[k];
            }
        }
        for (c, d) in r.iter_mut().zip(&self.inv_diag) {
            *c *= d;
        }
    }
}
