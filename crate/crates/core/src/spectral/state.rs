use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::basis::{BasisSet, Field, ModeIndex};
use super::grid::VALUE;
use crate::error::{Error, Result};

/// Coefficients of Y = (v₁, v₂, T) on a truncated basis.
#[derive(Clone, Debug)]
pub struct SpectralState {
    basis: Arc<BasisSet>,
    coeffs: Vec<f64>,
    pub time: f64,
}

impl PartialEq for SpectralState {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis)
            && self.coeffs == other.coeffs
            && self.time == other.time
    }
}

impl SpectralState {
    pub fn zeros(basis: &Arc<BasisSet>) -> Self {
        Self {
            basis: Arc::clone(basis),
            coeffs: vec![0.0; basis.len()],
            time: 0.0,
        }
    }

    pub fn from_coeffs(basis: &Arc<BasisSet>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("state coefficients".into()));
        }
        Ok(Self {
            basis: Arc::clone(basis),
            coeffs,
            time: 0.0,
        })
    }

    /// State with a single coefficient `amplitude` on `mode`.
    pub fn single_mode(basis: &Arc<BasisSet>, mode: ModeIndex, amplitude: f64) -> Result<Self> {
        let pos = basis
            .position(&mode)
            .ok_or_else(|| Error::InvalidArgument(format!("{mode:?} not in basis")))?;
        let mut s = Self::zeros(basis);
        s.coeffs[pos] = amplitude;
        Ok(s)
    }

    /// Random state with coefficient standard deviation
    /// `amplitude · (1 + μ_k)^{−decay/2}`.
    pub fn random_smooth<R: Rng + ?Sized>(
        basis: &Arc<BasisSet>,
        amplitude: f64,
        decay: f64,
        rng: &mut R,
    ) -> Self {
        let coeffs = basis
            .eigenvalues()
            .iter()
            .map(|&mu| {
                let g: f64 = rng.sample(StandardNormal);
                amplitude * g * (1.0 + mu).powf(-0.5 * decay)
            })
            .collect();
        Self {
            basis: Arc::clone(basis),
            coeffs,
            time: 0.0,
        }
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn same_basis(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// (Y, Y₁) in L²(𝒪); the basis is orthonormal so this is a dot product.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.same_basis(other)?;
        Ok(dot(&self.coeffs, &other.coeffs))
    }

    /// ‖Y‖_s = |A^{s/2} Y|. For s < 0 the temperature zero mode is left out.
    pub fn norm_s(&self, s: f64) -> Result<f64> {
        if !(-3.0..=3.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("s = {s} outside [−3, 3]")));
        }
        let v = norm_s_sq(self.basis.eigenvalues(), &self.coeffs, s).sqrt();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("norm_s with s = {s}")))
        }
    }

    /// |Y|.
    pub fn l2_norm(&self) -> f64 {
        dot(&self.coeffs, &self.coeffs).sqrt()
    }

    /// ‖Y‖ = ‖Y‖_V.
    pub fn v_norm(&self) -> f64 {
        norm_s_sq(self.basis.eigenvalues(), &self.coeffs, 1.0).sqrt()
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.same_basis(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut s = self.clone();
        s.coeffs.iter_mut().for_each(|c| *c *= alpha);
        s
    }

    /// Copy with every coefficient outside `field` set to zero.
    pub fn restrict(&self, field: Field) -> Self {
        let mut s = self.clone();
        for (c, m) in s.coeffs.iter_mut().zip(self.basis.modes()) {
            if m.field != field {
                *c = 0.0;
            }
        }
        s
    }

    /// Grid values of v₁, v₂ and T.
    pub fn to_collocation(&self) -> CollocationGrid {
        let b = &self.basis;
        CollocationGrid {
            shape: b.grid().shape(),
            v1: b.synthesize(&self.coeffs, Field::V1, VALUE),
            v2: b.synthesize(&self.coeffs, Field::V2, VALUE),
            temp: b.synthesize(&self.coeffs, Field::Temp, VALUE),
        }
    }

    /// Quadrature projection of grid values onto the basis.
    pub fn from_collocation(basis: &Arc<BasisSet>, grid: &CollocationGrid) -> Result<Self> {
        let expected = basis.grid().shape();
        if grid.shape != expected {
            let (a, b, c) = grid.shape;
            let (d, e, f) = expected;
            return Err(Error::GridTooSmall(format!(
                "grid {a}×{b}×{c} does not match the basis collocation grid {d}×{e}×{f}"
            )));
        }
        let n = basis.grid().len();
        for (name, v) in [("v1", &grid.v1), ("v2", &grid.v2), ("temp", &grid.temp)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("collocation values of {name}")));
            }
        }
        let mut coeffs = vec![0.0; basis.len()];
        basis.analyze_into(&grid.v1, Field::V1, VALUE, 1.0, &mut coeffs);
        basis.analyze_into(&grid.v2, Field::V2, VALUE, 1.0, &mut coeffs);
        basis.analyze_into(&grid.temp, Field::Temp, VALUE, 1.0, &mut coeffs);
        Self::from_coeffs(basis, coeffs)
    }
}

/// Values of Y on the tensor Gauss–Legendre grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationGrid {
    pub shape: (usize, usize, usize),
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub temp: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Σ μ^s c² with the μ = 0 mode skipped for s < 0 and weighted 1 for s = 0.
pub(crate) fn norm_s_sq(eigenvalues: &[f64], coeffs: &[f64], s: f64) -> f64 {
    eigenvalues
        .iter()
        .zip(coeffs)
        .map(|(&mu, &c)| {
            if s == 0.0 {
                c * c
            } else if mu == 0.0 {
                0.0
            } else {
                mu.powf(s) * c * c
            }
        })
        .sum()
}
