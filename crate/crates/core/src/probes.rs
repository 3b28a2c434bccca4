//! Numerical probes of the functional inequalities behind the energy
//! estimates. Each returns ratios whose boundedness over an ensemble is the
//! observable; no constant is asserted.

use serde::Serialize;

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::spectral::grid::VALUE;
use crate::spectral::{dot, Field, SpectralState};

/// |h|_p ratios against the Ladyzhenskaya/Sobolev right-hand sides in 3D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpolationRatios {
    /// |h|₃ / (|h|^{1/2} |h|_{H¹}^{1/2})
    pub l3: f64,
    /// |h|₄ / (|h|^{1/4} |h|_{H¹}^{3/4})
    pub l4: f64,
    /// |h|₆ / |h|_{H¹}
    pub l6: f64,
}

fn pointwise_sq(y: &SpectralState) -> Vec<f64> {
    let g = y.to_collocation();
    g.v1.iter()
        .zip(&g.v2)
        .zip(&g.temp)
        .map(|((a, b), c)| a * a + b * b + c * c)
        .collect()
}

fn lp_norm(y: &SpectralState, sq: &[f64], p: f64) -> f64 {
    let f: Vec<f64> = sq.iter().map(|s| s.powf(0.5 * p)).collect();
    y.basis().grid().integrate(&f).powf(1.0 / p)
}

/// Ratios for the vector field Y = (v, T), with |h|_{H¹}² = |h|² + |∇h|².
pub fn interpolation_ratios(y: &SpectralState) -> Result<InterpolationRatios> {
    let l2 = y.l2_norm();
    let h1 = (l2 * l2 + y.v_norm().powi(2)).sqrt();
    if l2 == 0.0 {
        return Err(Error::InvalidArgument("interpolation probe needs Y ≠ 0".into()));
    }
    let sq = pointwise_sq(y);
    Ok(InterpolationRatios {
        l3: lp_norm(y, &sq, 3.0) / (l2.sqrt() * h1.sqrt()),
        l4: lp_norm(y, &sq, 4.0) / (l2.powf(0.25) * h1.powf(0.75)),
        l6: lp_norm(y, &sq, 6.0) / h1,
    })
}

/// Both sides of (∫_D (∫ f dz)^p dx dy)^{1/p} ≤ ∫ (∫_D f^p dx dy)^{1/p} dz for a
/// nonnegative f given on the collocation grid of `y`'s basis.
pub fn minkowski_sides(dynamics: &Dynamics, f: &[f64], p: f64) -> Result<(f64, f64)> {
    let grid = dynamics.basis().grid();
    if f.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: f.len(),
        });
    }
    if f.iter().any(|v| *v < 0.0 || !v.is_finite()) || p < 1.0 {
        return Err(Error::InvalidArgument("Minkowski probe needs f ≥ 0 and p ≥ 1".into()));
    }
    let (nx, ny, nz) = grid.shape();
    let wh = &grid.horizontal().weights;
    let wz = &grid.vertical().weights;
    let at = |i: usize, j: usize, k: usize| f[(i * ny + j) * nz + k];
    let mut lhs = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            let col: f64 = (0..nz).map(|k| wz[k] * at(i, j, k)).sum();
            lhs += wh[i] * wh[j] * col.powf(p);
        }
    }
    let mut rhs = 0.0;
    for k in 0..nz {
        let mut layer = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                layer += wh[i] * wh[j] * at(i, j, k).powf(p);
            }
        }
        rhs += wz[k] * layer.powf(1.0 / p);
    }
    Ok((lhs.powf(1.0 / p), rhs))
}

/// |(G(Y),Y)| against min and max of |T|‖v‖ and ‖T‖|v|.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GBoundRatios {
    pub against_min: f64,
    pub against_max: f64,
}

pub fn g_bound_ratios(dynamics: &Dynamics, y: &SpectralState) -> Result<GBoundRatios> {
    let g = dynamics.eval_g(y)?.inner_product(y)?.abs();
    let v = y.restrict(Field::V1);
    let mut vel = v.clone();
    vel.axpy(1.0, &y.restrict(Field::V2))?;
    let t = y.restrict(Field::Temp);
    let a = t.l2_norm() * vel.v_norm();
    let b = t.v_norm() * vel.l2_norm();
    let ratio = |d: f64| if d > 0.0 { g / d } else { 0.0 };
    Ok(GBoundRatios {
        against_min: ratio(a.min(b)),
        against_max: ratio(a.max(b)),
    })
}

/// |∫ Φ(u) (f·g)| / (‖u‖ |g|^{1/2}‖g‖^{1/2} |f|^{1/2}‖f‖^{1/2}).
pub fn phi_trilinear_ratio(
    dynamics: &Dynamics,
    u: &SpectralState,
    f: &SpectralState,
    g: &SpectralState,
) -> Result<f64> {
    let phi = dynamics.vertical_velocity(u)?;
    let basis = dynamics.basis();
    let mut fg = vec![0.0; basis.grid().len()];
    for field in Field::ALL {
        let a = basis.synthesize(f.coeffs(), field, VALUE);
        let b = basis.synthesize(g.coeffs(), field, VALUE);
        for ((o, x), y) in fg.iter_mut().zip(a).zip(b) {
            *o += x * y;
        }
    }
    let lhs = basis.grid().integrate_product(&phi.values, &fg).abs();
    let rhs = u.v_norm()
        * (g.l2_norm() * g.v_norm()).sqrt()
        * (f.l2_norm() * f.v_norm()).sqrt();
    Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
}

/// ‖B(Y,Y₁)‖_{−1} / (‖Y‖ ‖Y₁‖₂).
pub fn duality_ratio(dynamics: &Dynamics, y: &SpectralState, y1: &SpectralState) -> Result<f64> {
    let b = dynamics.eval_b(y, y1)?;
    let rhs = y.v_norm() * y1.norm_s(2.0)?;
    Ok(if rhs > 0.0 { b.norm_s(-1.0)? / rhs } else { 0.0 })
}

/// |(B(Y,Y₁),Y₁)| / (‖Y‖ ‖Y₁‖²).
pub fn antisymmetry_residual(dynamics: &Dynamics, y: &SpectralState, y1: &SpectralState) -> Result<f64> {
    let b = dynamics.eval_b(y, y1)?;
    let s = y.v_norm() * y1.v_norm().powi(2);
    let r = dot(b.coeffs(), y1.coeffs()).abs();
    Ok(if s > 0.0 { r / s } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Physics;
    use crate::spectral::build_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn minkowski_is_equality_for_separable_constant_columns() {
        let b = build_basis(2, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let f = vec![2.0; b.grid().len()];
        let (l, r) = minkowski_sides(&d, &f, 3.0).unwrap();
        assert!((l - r).abs() < 1e-12 && (l - 2.0).abs() < 1e-12);
        assert!(minkowski_sides(&d, &[-1.0], 2.0).is_err());
    }

    #[test]
    fn ratios_are_finite() {
        let b = build_basis(2, 2).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut y = SpectralState::random_smooth(&b, 1.0, 1.0, &mut rng);
        d.project(&mut y).unwrap();
        let r = interpolation_ratios(&y).unwrap();
        assert!(r.l3.is_finite() && r.l4.is_finite() && r.l6.is_finite());
        let g = g_bound_ratios(&d, &y).unwrap();
        assert!(g.against_min >= g.against_max);
        assert!(phi_trilinear_ratio(&d, &y, &y, &y).unwrap().is_finite());
        assert!(duality_ratio(&d, &y, &y).unwrap().is_finite());
        assert!(antisymmetry_residual(&d, &y, &y).unwrap() < 1e-12);
    }
}
