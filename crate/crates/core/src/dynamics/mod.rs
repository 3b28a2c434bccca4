//! Operators of the abstract evolution equation dY + AY + B(Y,Y) + G(Y) = ψ dW.
//!
//! B is evaluated pseudo-spectrally in the skew-symmetric form
//! ½[b̂(Y,Y₁,·) − b̂(Y,·,Y₁)], so (B(Y,Y₁),Y₁) vanishes to round-off for every
//! pair of states. The raw-slice methods are used by the time stepper and the
//! adjoint; the [`SpectralState`] methods are the checked public surface.

mod diagnostics;
mod pressure;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use diagnostics::{DiagnosticLog, DiagnosticRow};
pub use pressure::{BarotropicField, BarotropicPressure, PressureSpace, StokesSolver};

use crate::error::{Error, Result};
use crate::spectral::grid::{factor_value, DX, DX_INT_Z, DY, DY_INT_Z, DZ, VALUE};
use crate::spectral::{dot, BasisSet, Factor, Family, Field, ModeIndex, SpectralState};

/// Relative barotropic divergence above which [`Dynamics::eval_b`] warns.
pub const CONSTRAINT_WARN: f64 = 1e-8;

/// Physical switches and parameters. Viscosities are fixed at 1; κ rescales
/// the dissipative operator only (norms always use the geometric A).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    /// f-plane Coriolis parameter.
    pub coriolis: f64,
    pub advection: bool,
    /// Hydrostatic pressure gradient −∫ ∇T dz′.
    pub baroclinic: bool,
    pub diffusion_scale: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            coriolis: 1.0,
            advection: true,
            baroclinic: true,
            diffusion_scale: 1.0,
        }
    }
}

impl Physics {
    /// Diffusion only: A with B and G switched off.
    pub fn linear() -> Self {
        Self {
            coriolis: 0.0,
            advection: false,
            baroclinic: false,
            diffusion_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.coriolis.is_finite() {
            return Err(Error::InvalidArgument("coriolis must be finite".into()));
        }
        if !(self.diffusion_scale.is_finite() && self.diffusion_scale > 0.0) {
            return Err(Error::InvalidArgument(
                "diffusion_scale must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Scalar on the collocation grid, e.g. the vertical velocity Φ(v).
#[derive(Clone, Debug)]
pub struct DiagnosticField {
    pub shape: (usize, usize, usize),
    pub values: Vec<f64>,
    terms: Vec<(ModeIndex, f64)>,
}

impl DiagnosticField {
    /// Pointwise value from the analytic mode sum.
    pub fn at(&self, x: f64, y: f64, z: f64) -> f64 {
        use Factor::{Antideriv, Deriv, Value};
        self.terms
            .iter()
            .map(|(m, c)| {
                let (fx, fy) = match m.field {
                    Field::V1 => (Deriv, Value),
                    _ => (Value, Deriv),
                };
                -c * factor_value(Family::Sine, fx, m.i, 0.0, x)
                    * factor_value(Family::Sine, fy, m.j, 0.0, y)
                    * factor_value(Family::Cosine, Antideriv, m.m, -1.0, z)
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Grid values of a field and its three first derivatives.
struct Gradients {
    val: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
}

/// Advecting velocity (v₁, v₂, Φ(v)) on the grid.
struct Advector {
    u: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
}

/// The operators on one basis with fixed physics.
#[derive(Debug)]
pub struct Dynamics {
    basis: Arc<BasisSet>,
    physics: Physics,
    pressure: PressureSpace,
    /// (V1 position, V2 position) of each horizontal velocity mode pair.
    coriolis_pairs: Vec<(usize, usize)>,
}

impl Dynamics {
    pub fn new(basis: &Arc<BasisSet>, physics: Physics) -> Result<Self> {
        physics.validate()?;
        let pressure = PressureSpace::new(basis)?;
        let coriolis_pairs = basis
            .modes()
            .iter()
            .enumerate()
            .filter(|(_, m)| m.field == Field::V1)
            .map(|(p, m)| {
                let partner = ModeIndex { field: Field::V2, ..*m };
                (p, basis.position(&partner).expect("V2 partner"))
            })
            .collect();
        Ok(Self {
            basis: Arc::clone(basis),
            physics,
            pressure,
            coriolis_pairs,
        })
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn physics(&self) -> &Physics {
        &self.physics
    }

    pub fn pressure(&self) -> &PressureSpace {
        &self.pressure
    }

    /// Effective dissipation rate κμ of each mode.
    pub fn decay_rates(&self) -> Vec<f64> {
        let k = self.physics.diffusion_scale;
        self.basis.eigenvalues().iter().map(|m| k * m).collect()
    }

    fn check(&self, y: &SpectralState) -> Result<()> {
        if Arc::ptr_eq(y.basis(), &self.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    fn state(&self, coeffs: Vec<f64>) -> SpectralState {
        SpectralState::from_coeffs(&self.basis, coeffs).expect("finite operator output")
    }

    // ---------------------------------------------------------------- A

    /// AY: multiplication of each coefficient by its eigenvalue μ.
    pub fn apply_a(&self, y: &SpectralState) -> Result<SpectralState> {
        self.check(y)?;
        let c = y
            .coeffs()
            .iter()
            .zip(self.basis.eigenvalues())
            .map(|(c, m)| c * m)
            .collect();
        Ok(self.state(c).with_time(y.time))
    }

    // ---------------------------------------------------------------- Φ

    fn phi_grid(&self, a: &[f64]) -> Vec<f64> {
        let mut w = self.basis.synthesize(a, Field::V1, DX_INT_Z);
        let w2 = self.basis.synthesize(a, Field::V2, DY_INT_Z);
        for (p, q) in w.iter_mut().zip(w2) {
            *p = -(*p + q);
        }
        w
    }

    /// Φ(v) = −∫_{−1}^{z} ∇·v dz′ on the grid, with an analytic point evaluator.
    pub fn vertical_velocity(&self, y: &SpectralState) -> Result<DiagnosticField> {
        self.check(y)?;
        let terms = self
            .basis
            .modes()
            .iter()
            .zip(y.coeffs())
            .filter(|(m, &c)| m.field.is_velocity() && c != 0.0)
            .map(|(m, &c)| (*m, c))
            .collect();
        Ok(DiagnosticField {
            shape: self.basis.grid().shape(),
            values: self.phi_grid(y.coeffs()),
            terms,
        })
    }

    // ---------------------------------------------------------------- B

    fn advector(&self, a: &[f64]) -> Advector {
        Advector {
            u: self.basis.synthesize(a, Field::V1, VALUE),
            v: self.basis.synthesize(a, Field::V2, VALUE),
            w: self.phi_grid(a),
        }
    }

    fn gradients(&self, b: &[f64]) -> [Gradients; 3] {
        Field::ALL.map(|f| Gradients {
            val: self.basis.synthesize(b, f, VALUE),
            dx: self.basis.synthesize(b, f, DX),
            dy: self.basis.synthesize(b, f, DY),
            dz: self.basis.synthesize(b, f, DZ),
        })
    }

    /// out += scale · B(a, b) from precomputed grid fields.
    fn b_from_fields(&self, adv: &Advector, gb: &[Gradients; 3], scale: f64, out: &mut [f64]) {
        let n = adv.u.len();
        let half = 0.5 * scale;
        let mut buf = vec![0.0; n];
        for (f, g) in Field::ALL.into_iter().zip(gb) {
            for k in 0..n {
                buf[k] = adv.u[k] * g.dx[k] + adv.v[k] * g.dy[k] + adv.w[k] * g.dz[k];
            }
            self.basis.analyze_into(&buf, f, VALUE, half, out);
            for (vel, fac) in [(&adv.u, DX), (&adv.v, DY), (&adv.w, DZ)] {
                for k in 0..n {
                    buf[k] = vel[k] * g.val[k];
                }
                self.basis.analyze_into(&buf, f, fac, -half, out);
            }
        }
    }

    /// out += scale · B(a, b).
    pub fn b_into(&self, a: &[f64], b: &[f64], scale: f64, out: &mut [f64]) {
        let adv = self.advector(a);
        let gb = self.gradients(b);
        self.b_from_fields(&adv, &gb, scale, out);
    }

    /// out += scale · ∇_a (B(a, b), c), the transpose of a ↦ B(a, b) applied to c.
    fn b_first_adjoint_from_fields(
        &self,
        gb: &[Gradients; 3],
        gc: &[Gradients; 3],
        scale: f64,
        out: &mut [f64],
    ) {
        let n = gb[0].val.len();
        let mut qx = vec![0.0; n];
        let mut qy = vec![0.0; n];
        let mut qz = vec![0.0; n];
        for (b, c) in gb.iter().zip(gc) {
            for k in 0..n {
                qx[k] += b.dx[k] * c.val[k] - c.dx[k] * b.val[k];
                qy[k] += b.dy[k] * c.val[k] - c.dy[k] * b.val[k];
                qz[k] += b.dz[k] * c.val[k] - c.dz[k] * b.val[k];
            }
        }
        let half = 0.5 * scale;
        self.basis.analyze_into(&qx, Field::V1, VALUE, half, out);
        self.basis.analyze_into(&qy, Field::V2, VALUE, half, out);
        self.basis.analyze_into(&qz, Field::V1, DX_INT_Z, -half, out);
        self.basis.analyze_into(&qz, Field::V2, DY_INT_Z, -half, out);
    }

    /// out += scale · ∇_a (B(a, b), c).
    pub fn b_first_adjoint_into(&self, b: &[f64], c: &[f64], scale: f64, out: &mut [f64]) {
        let gb = self.gradients(b);
        let gc = self.gradients(c);
        self.b_first_adjoint_from_fields(&gb, &gc, scale, out);
    }

    /// out += scale · J(y)ᵀ μ where J(y) is the derivative of y ↦ B(y, y).
    pub fn b_linearized_transpose_into(&self, y: &[f64], mu: &[f64], scale: f64, out: &mut [f64]) {
        let adv = self.advector(y);
        let gy = self.gradients(y);
        let gm = self.gradients(mu);
        self.b_first_adjoint_from_fields(&gy, &gm, scale, out);
        self.b_from_fields(&adv, &gm, -scale, out);
    }

    /// B(Y, Y₁) as a coefficient vector. Warns when Y violates the barotropic
    /// constraint by more than [`CONSTRAINT_WARN`].
    pub fn eval_b(&self, y: &SpectralState, y1: &SpectralState) -> Result<SpectralState> {
        self.check(y)?;
        self.check(y1)?;
        let r = self.pressure.divergence_residual(y.coeffs());
        if r > CONSTRAINT_WARN {
            log::warn!("eval_b: advecting state has barotropic divergence residual {r:e}");
        }
        let mut out = vec![0.0; self.basis.len()];
        self.b_into(y.coeffs(), y1.coeffs(), 1.0, &mut out);
        Ok(self.state(out).with_time(y.time))
    }

    // ---------------------------------------------------------------- G

    /// out += scale · f k×v.
    pub fn coriolis_into(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        let f = scale * self.physics.coriolis;
        if f == 0.0 {
            return;
        }
        for &(p1, p2) in &self.coriolis_pairs {
            out[p1] -= f * y[p2];
            out[p2] += f * y[p1];
        }
    }

    /// out += scale · (−∫_{−1}^{z} ∇T dz′) tested against velocity modes.
    pub fn baroclinic_into(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        let tx = self.basis.synthesize(y, Field::Temp, DX_INT_Z);
        self.basis.analyze_into(&tx, Field::V1, VALUE, -scale, out);
        let ty = self.basis.synthesize(y, Field::Temp, DY_INT_Z);
        self.basis.analyze_into(&ty, Field::V2, VALUE, -scale, out);
    }

    /// Transpose of [`Self::baroclinic_into`].
    pub fn baroclinic_transpose_into(&self, mu: &[f64], scale: f64, out: &mut [f64]) {
        let u = self.basis.synthesize(mu, Field::V1, VALUE);
        self.basis.analyze_into(&u, Field::Temp, DX_INT_Z, -scale, out);
        let v = self.basis.synthesize(mu, Field::V2, VALUE);
        self.basis.analyze_into(&v, Field::Temp, DY_INT_Z, -scale, out);
    }

    /// out += scale · G₀(y): Coriolis and baroclinic terms, pressure excluded.
    pub fn g0_into(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        self.coriolis_into(y, scale, out);
        if self.physics.baroclinic {
            self.baroclinic_into(y, scale, out);
        }
    }

    /// out += scale · G₀ᵀ μ.
    pub fn g0_transpose_into(&self, mu: &[f64], scale: f64, out: &mut [f64]) {
        self.coriolis_into(mu, -scale, out);
        if self.physics.baroclinic {
            self.baroclinic_transpose_into(mu, scale, out);
        }
    }

    /// Explicit tendency −B(y, y) − G₀(y) added to out with weight `scale`.
    pub fn explicit_tendency_into(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        if self.physics.advection {
            self.b_into(y, y, -scale, out);
        }
        self.g0_into(y, -scale, out);
    }

    /// Transpose of the derivative of [`Self::explicit_tendency_into`] at y.
    pub fn explicit_tendency_transpose_into(
        &self,
        y: &[f64],
        mu: &[f64],
        scale: f64,
        out: &mut [f64],
    ) {
        if self.physics.advection {
            self.b_linearized_transpose_into(y, mu, -scale, out);
        }
        self.g0_transpose_into(mu, -scale, out);
    }

    /// G(Y) = f k×v − ∫∇T dz′ + ∇p_b, with p_b chosen so the barotropic part
    /// of the tendency −G(Y) is discretely divergence-free.
    pub fn eval_g(&self, y: &SpectralState) -> Result<SpectralState> {
        self.check(y)?;
        let mut out = vec![0.0; self.basis.len()];
        self.coriolis_into(y.coeffs(), 1.0, &mut out);
        if self.physics.baroclinic {
            self.baroclinic_into(y.coeffs(), 1.0, &mut out);
        }
        let g0 = self.pressure.gather(&out);
        let rhs = BarotropicField {
            n_h: self.basis.n_h(),
            coeffs: g0.iter().map(|c| -c).collect(),
        };
        let p = self.solve_pb(&rhs)?;
        if !p.coeffs.is_empty() {
            let gp = self.pressure.gradient_of(&p.coeffs);
            for (k, &pos) in self.pressure.barotropic_positions().iter().enumerate() {
                out[pos] += gp[k];
            }
        }
        Ok(self.state(out).with_time(y.time))
    }

    /// Barotropic pressure making rhs − ∇p_b discretely divergence-free.
    pub fn solve_pb(&self, rhs: &BarotropicField) -> Result<BarotropicPressure> {
        self.pressure.solve(rhs)
    }

    /// Projects the barotropic velocity onto the discretely divergence-free space.
    pub fn project(&self, y: &mut SpectralState) -> Result<()> {
        self.check(y)?;
        self.pressure.project(y.coeffs_mut());
        Ok(())
    }

    /// Relative discrete barotropic divergence of Y.
    pub fn constraint_residual(&self, y: &SpectralState) -> f64 {
        self.pressure.divergence_residual(y.coeffs())
    }

    // ---------------------------------------------------------------- split

    /// (v̄, ṽ): the m = 0 velocity coefficients and the remaining velocity.
    /// The temperature is not part of either.
    pub fn split_barotropic(&self, y: &SpectralState) -> Result<(BarotropicField, SpectralState)> {
        self.check(y)?;
        let vbar = BarotropicField {
            n_h: self.basis.n_h(),
            coeffs: self.pressure.gather(y.coeffs()).iter().copied().collect(),
        };
        let tilde = self
            .basis
            .modes()
            .iter()
            .zip(y.coeffs())
            .map(|(m, &c)| if m.field.is_velocity() && m.m > 0 { c } else { 0.0 })
            .collect();
        Ok((vbar, self.state(tilde).with_time(y.time)))
    }

    /// Reassembles v̄ + ṽ into a velocity-only state.
    pub fn join_barotropic(&self, vbar: &BarotropicField, tilde: &SpectralState) -> Result<SpectralState> {
        self.check(tilde)?;
        let mut c = tilde.coeffs().to_vec();
        for (k, &pos) in self.pressure.barotropic_positions().iter().enumerate() {
            c[pos] += vbar.coeffs[k];
        }
        Ok(self.state(c).with_time(tilde.time))
    }

    /// Spectral norm of the baroclinic coupling T ↦ −∫∇T dz′ (power iteration).
    pub fn baroclinic_norm(&self) -> f64 {
        if !self.physics.baroclinic {
            return 0.0;
        }
        let n = self.basis.len();
        let mut x: Vec<f64> = self
            .basis
            .modes()
            .iter()
            .enumerate()
            .map(|(k, m)| if m.field == Field::Temp { 1.0 + 0.1 * (k as f64).sin() } else { 0.0 })
            .collect();
        let mut lambda = 0.0;
        for _ in 0..200 {
            let nx = dot(&x, &x).sqrt();
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|c| *c /= nx);
            let mut lx = vec![0.0; n];
            self.baroclinic_into(&x, 1.0, &mut lx);
            let mut ltlx = vec![0.0; n];
            self.baroclinic_transpose_into(&lx, 1.0, &mut ltlx);
            let next = dot(&ltlx, &x);
            let done = (next - lambda).abs() <= 1e-13 * next;
            lambda = next;
            x = ltlx;
            if done {
                break;
            }
        }
        lambda.max(0.0).sqrt()
    }

    /// (G₀(Y), Y) without the pressure term; equals (G(Y), Y) for projected Y.
    pub fn g_energy(&self, y: &[f64]) -> f64 {
        let mut out = vec![0.0; y.len()];
        self.g0_into(y, 1.0, &mut out);
        dot(&out, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_projected(d: &Dynamics, seed: u64) -> SpectralState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = SpectralState::random_smooth(d.basis(), 1.0, 1.0, &mut rng);
        d.project(&mut y).unwrap();
        y
    }

    #[test]
    fn b_is_bilinear_and_zero_on_zero() {
        let b = build_basis(2, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let y = random_projected(&d, 1);
        let z = SpectralState::zeros(&b);
        assert!(d.eval_b(&z, &y).unwrap().l2_norm() == 0.0);
        assert!(d.eval_b(&y, &z).unwrap().l2_norm() == 0.0);
    }

    #[test]
    fn b_is_antisymmetric_in_last_two_slots() {
        let b = build_basis(2, 2).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let y = random_projected(&d, 2);
        let y1 = random_projected(&d, 3);
        let y2 = random_projected(&d, 4);
        let r = d.eval_b(&y, &y1).unwrap().inner_product(&y1).unwrap();
        assert!(r.abs() < 1e-12 * y.v_norm() * y1.v_norm().powi(2));
        let a = d.eval_b(&y, &y1).unwrap().inner_product(&y2).unwrap();
        let c = d.eval_b(&y, &y2).unwrap().inner_product(&y1).unwrap();
        assert!((a + c).abs() < 1e-11 * a.abs().max(1.0));
    }

    #[test]
    fn first_slot_adjoint_is_exact() {
        let b = build_basis(2, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let (a, bb, c) = (random_projected(&d, 5), random_projected(&d, 6), random_projected(&d, 7));
        let lhs = d.eval_b(&a, &bb).unwrap().inner_product(&c).unwrap();
        let mut g = vec![0.0; b.len()];
        d.b_first_adjoint_into(bb.coeffs(), c.coeffs(), 1.0, &mut g);
        let rhs = dot(&g, a.coeffs());
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn tendency_transpose_matches_directional_derivative() {
        let b = build_basis(2, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let y = random_projected(&d, 8);
        let dy = random_projected(&d, 9);
        let mu = random_projected(&d, 10);
        // tendency is quadratic, so the central difference is exact
        let h = 1e-3;
        let mut p = vec![0.0; b.len()];
        let mut m = vec![0.0; b.len()];
        let yp: Vec<f64> = y.coeffs().iter().zip(dy.coeffs()).map(|(a, b)| a + h * b).collect();
        let ym: Vec<f64> = y.coeffs().iter().zip(dy.coeffs()).map(|(a, b)| a - h * b).collect();
        d.explicit_tendency_into(&yp, 1.0, &mut p);
        d.explicit_tendency_into(&ym, 1.0, &mut m);
        let fd: f64 = p.iter().zip(&m).zip(mu.coeffs()).map(|((a, b), c)| (a - b) / (2.0 * h) * c).sum();
        let mut t = vec![0.0; b.len()];
        d.explicit_tendency_transpose_into(y.coeffs(), mu.coeffs(), 1.0, &mut t);
        let ad = dot(&t, dy.coeffs());
        assert!((fd - ad).abs() < 1e-9 * ad.abs().max(1.0), "{fd} {ad}");
    }

    #[test]
    fn coriolis_is_antisymmetric() {
        let b = build_basis(2, 2).unwrap();
        let d = Dynamics::new(&b, Physics { coriolis: 3.7, ..Physics::default() }).unwrap();
        let y = random_projected(&d, 11);
        let mut out = vec![0.0; b.len()];
        d.coriolis_into(y.coeffs(), 1.0, &mut out);
        assert!(dot(&out, y.coeffs()).abs() < 1e-14 * y.l2_norm().powi(2) * 3.7);
    }

    #[test]
    fn pure_rotation_g_has_zero_energy() {
        let b = build_basis(2, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let mut y = random_projected(&d, 12);
        for (c, m) in y.coeffs_mut().iter_mut().zip(b.modes()) {
            if m.field == Field::Temp {
                *c = 0.0;
            }
        }
        let g = d.eval_g(&y).unwrap();
        assert!(g.inner_product(&y).unwrap().abs() < 1e-13 * y.l2_norm().powi(2));
    }

    #[test]
    fn g_tendency_is_divergence_free() {
        let b = build_basis(3, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let y = random_projected(&d, 13);
        let g = d.eval_g(&y).unwrap();
        assert!(d.constraint_residual(&g) < 1e-12);
    }

    #[test]
    fn phi_vanishes_at_bottom_and_matches_grid() {
        let b = build_basis(2, 2).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let y = random_projected(&d, 14);
        let phi = d.vertical_velocity(&y).unwrap();
        assert!(phi.at(0.3, 0.7, -1.0).abs() < 1e-14);
        for k in (0..b.grid().len()).step_by(101) {
            let (x, yy, z) = b.grid().point(k);
            assert!((phi.at(x, yy, z) - phi.values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn split_reassembles() {
        let b = build_basis(2, 2).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let y = random_projected(&d, 15);
        let (vbar, tilde) = d.split_barotropic(&y).unwrap();
        let v = d.join_barotropic(&vbar, &tilde).unwrap();
        for ((a, e), m) in v.coeffs().iter().zip(y.coeffs()).zip(b.modes()) {
            if m.field.is_velocity() {
                assert_eq!(a, e);
            }
        }
    }

    #[test]
    fn apply_a_scales_by_eigenvalue() {
        let b = build_basis(2, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let m = ModeIndex::new(Field::V1, 1, 1, 0).unwrap();
        let y = SpectralState::single_mode(&b, m, 1.0).unwrap();
        let ay = d.apply_a(&y).unwrap();
        let p = b.position(&m).unwrap();
        assert!((ay.coeffs()[p] - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_physics() {
        let b = build_basis(1, 0).unwrap();
        let p = Physics { diffusion_scale: 0.0, ..Physics::default() };
        assert!(Dynamics::new(&b, p).is_err());
    }
}
