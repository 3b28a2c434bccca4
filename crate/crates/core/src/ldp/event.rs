use crate::error::{Error, Result};
use crate::spectral::{norm_s_sq, SpectralState};

/// Terminal-time event sets.
#[derive(Clone, Debug)]
pub enum EventSpec {
    /// {Y : ‖Y − center‖ ≤ radius} in the V-norm.
    Ball { center: SpectralState, radius: f64 },
    /// {Y : (direction, Y) ≥ level} with |direction| = 1.
    Halfspace { direction: SpectralState, level: f64 },
    /// The whole state space.
    Everything,
}

impl EventSpec {
    pub fn ball(center: SpectralState, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius {radius} must be positive")));
        }
        Ok(Self::Ball { center, radius })
    }

    /// Normalizes `direction`.
    pub fn halfspace(direction: SpectralState, level: f64) -> Result<Self> {
        let n = direction.l2_norm();
        if !(n > 0.0) || !level.is_finite() {
            return Err(Error::InvalidArgument("halfspace needs a nonzero direction".into()));
        }
        Ok(Self::Halfspace {
            direction: direction.scaled(1.0 / n),
            level,
        })
    }

    /// Signed constraint value g(Y): ≤ 0 exactly on the closed set.
    pub fn signed(&self, y: &[f64]) -> f64 {
        match self {
            EventSpec::Ball { center, radius } => {
                let d: Vec<f64> = y.iter().zip(center.coeffs()).map(|(a, b)| a - b).collect();
                norm_s_sq(center.basis().eigenvalues(), &d, 1.0).sqrt() - radius
            }
            EventSpec::Halfspace { direction, level } => {
                level - direction.coeffs().iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
            }
            EventSpec::Everything => f64::NEG_INFINITY,
        }
    }

    /// Distance-like residual: 0 inside the closed set, positive outside.
    pub fn distance(&self, y: &[f64]) -> f64 {
        self.shifted_distance(y, 0.0)
    }

    /// max(0, g(Y) + shift), the residual of the shifted constraint.
    pub fn shifted_distance(&self, y: &[f64], shift: f64) -> f64 {
        (self.signed(y) + shift).max(0.0)
    }

    /// Closed-set membership.
    pub fn contains(&self, y: &[f64]) -> bool {
        self.distance(y) == 0.0
    }

    /// Open-set membership: strictly inside.
    pub fn contains_open(&self, y: &[f64]) -> bool {
        match self {
            EventSpec::Ball { center, radius } => {
                let d: Vec<f64> = y.iter().zip(center.coeffs()).map(|(a, b)| a - b).collect();
                norm_s_sq(center.basis().eigenvalues(), &d, 1.0).sqrt() < *radius
            }
            EventSpec::Halfspace { direction, level } => {
                direction.coeffs().iter().zip(y).map(|(a, b)| a * b).sum::<f64>() > *level
            }
            EventSpec::Everything => true,
        }
    }

    /// out += scale · ∇_Y distance(Y)².
    pub fn distance_sq_gradient_into(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        self.shifted_distance_sq_gradient_into(y, 0.0, scale, out);
    }

    /// out += scale · ∇_Y shifted_distance(Y, shift)².
    pub fn shifted_distance_sq_gradient_into(&self, y: &[f64], shift: f64, scale: f64, out: &mut [f64]) {
        let excess = self.shifted_distance(y, shift);
        if excess == 0.0 {
            return;
        }
        let f = scale * 2.0 * excess;
        match self {
            EventSpec::Ball { center, .. } => {
                let ev = center.basis().eigenvalues();
                let d: Vec<f64> = y.iter().zip(center.coeffs()).map(|(a, b)| a - b).collect();
                let r = norm_s_sq(ev, &d, 1.0).sqrt();
                for ((o, di), mu) in out.iter_mut().zip(&d).zip(ev) {
                    *o += f * mu * di / r;
                }
            }
            EventSpec::Halfspace { direction, .. } => {
                for (o, di) in out.iter_mut().zip(direction.coeffs()) {
                    *o -= f * di;
                }
            }
            EventSpec::Everything => {}
        }
    }
}
