use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{BasisSet, Field, ModeIndex, SpectralState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Additive,
    /// Amplitude 1 + (Y, e_k).
    Multiplicative,
}

/// One noise channel σ · g(Y) · e_mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub mode: ModeIndex,
    pub sigma: f64,
    pub growth: Growth,
}

/// Diagonal diffusion coefficient ψ(t, Y) u = Σ σ_k g_k(Y) u_k e_k.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    basis: Arc<BasisSet>,
    channels: Vec<Channel>,
    positions: Vec<usize>,
    s_decay: f64,
}

/// Constants of the growth/Lipschitz bounds into H, V and D(A).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct H0Constants {
    pub c_h: f64,
    pub c_v: f64,
    pub c_da: f64,
    /// Σ σ_k² (1 + μ_k²).
    pub hilbert_schmidt: f64,
}

impl NoiseModel {
    pub fn new(basis: &Arc<BasisSet>, channels: Vec<Channel>, s_decay: f64) -> Result<Self> {
        let mut positions = Vec::with_capacity(channels.len());
        for ch in &channels {
            let pos = basis.position(&ch.mode).ok_or_else(|| {
                Error::InvalidArgument(format!("noise channel {:?} not in basis", ch.mode))
            })?;
            if positions.contains(&pos) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate noise channel {:?}",
                    ch.mode
                )));
            }
            if !(ch.sigma.is_finite() && ch.sigma >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "channel sigma {} must be finite and ≥ 0",
                    ch.sigma
                )));
            }
            positions.push(pos);
        }
        Ok(Self {
            basis: Arc::clone(basis),
            channels,
            positions,
            s_decay,
        })
    }

    /// One channel per mode with μ > 0, σ_k = σ₀ μ_k^{−s_decay}.
    pub fn default_family(
        basis: &Arc<BasisSet>,
        sigma0: f64,
        s_decay: f64,
        growth: Growth,
    ) -> Result<Self> {
        let channels = basis
            .modes()
            .iter()
            .zip(basis.eigenvalues())
            .filter(|(_, &mu)| mu > 0.0)
            .map(|(m, &mu)| Channel {
                mode: *m,
                sigma: sigma0 * mu.powf(-s_decay),
                growth,
            })
            .collect();
        Self::new(basis, channels, s_decay)
    }

    /// A single channel on `mode`.
    pub fn single(basis: &Arc<BasisSet>, mode: ModeIndex, sigma: f64, growth: Growth) -> Result<Self> {
        Self::new(basis, vec![Channel { mode, sigma, growth }], 0.0)
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn s_decay(&self) -> f64 {
        self.s_decay
    }

    pub fn is_additive(&self) -> bool {
        self.channels.iter().all(|c| c.growth == Growth::Additive)
    }

    fn gain(&self, k: usize, y: &[f64]) -> f64 {
        let ch = &self.channels[k];
        match ch.growth {
            Growth::Additive => ch.sigma,
            Growth::Multiplicative => ch.sigma * (1.0 + y[self.positions[k]]),
        }
    }

    /// out += scale · ψ(Y) u.
    pub fn apply_into(&self, y: &[f64], u: &[f64], scale: f64, out: &mut [f64]) {
        for (k, &pos) in self.positions.iter().enumerate() {
            out[pos] += scale * self.gain(k, y) * u[k];
        }
    }

    /// out_u += scale · ψ(Y)ᵀ μ.
    pub fn transpose_into(&self, y: &[f64], mu: &[f64], scale: f64, out_u: &mut [f64]) {
        for (k, &pos) in self.positions.iter().enumerate() {
            out_u[k] += scale * self.gain(k, y) * mu[pos];
        }
    }

    /// out += scale · (∂_Y[ψ(Y) u])ᵀ μ.
    pub fn state_derivative_transpose_into(&self, u: &[f64], mu: &[f64], scale: f64, out: &mut [f64]) {
        for (k, (&pos, ch)) in self.positions.iter().zip(&self.channels).enumerate() {
            if ch.growth == Growth::Multiplicative {
                out[pos] += scale * ch.sigma * u[k] * mu[pos];
            }
        }
    }

    /// ψ(t, Y) u as a state. ψ does not depend on t.
    pub fn apply_psi(&self, _t: f64, y: &SpectralState, u: &[f64]) -> Result<SpectralState> {
        if !Arc::ptr_eq(y.basis(), &self.basis) {
            return Err(Error::BasisMismatch);
        }
        if u.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.basis.len()];
        self.apply_into(y.coeffs(), u, 1.0, &mut out);
        SpectralState::from_coeffs(&self.basis, out)
    }

    pub fn sigma_max(&self) -> f64 {
        self.channels.iter().fold(0.0, |a, c| a.max(c.sigma))
    }

    pub fn h0_constants(&self) -> H0Constants {
        let mut c = H0Constants {
            c_h: 0.0,
            c_v: 0.0,
            c_da: 0.0,
            hilbert_schmidt: 0.0,
        };
        for (ch, &pos) in self.channels.iter().zip(&self.positions) {
            let mu = self.basis.eigenvalue(pos);
            c.c_h = c.c_h.max(ch.sigma);
            c.c_v = c.c_v.max(ch.sigma * mu.sqrt());
            c.c_da = c.c_da.max(ch.sigma * mu);
            c.hilbert_schmidt += ch.sigma * ch.sigma * (1.0 + mu * mu);
        }
        c
    }

    pub fn spec(&self) -> NoiseSpec {
        NoiseSpec::Channels {
            channels: self
                .channels
                .iter()
                .map(|c| ChannelSpec {
                    field: c.mode.field,
                    i: c.mode.i,
                    j: c.mode.j,
                    m: c.mode.m,
                    sigma: c.sigma,
                    growth: c.growth,
                })
                .collect(),
            s_decay: self.s_decay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub field: Field,
    pub i: u32,
    pub j: u32,
    pub m: u32,
    pub sigma: f64,
    pub growth: Growth,
}

/// Noise model as it appears in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    DefaultFamily {
        sigma0: f64,
        #[serde(default = "default_s_decay")]
        s_decay: f64,
        #[serde(default = "default_growth")]
        growth: Growth,
    },
    Channels {
        channels: Vec<ChannelSpec>,
        #[serde(default)]
        s_decay: f64,
    },
}

fn default_s_decay() -> f64 {
    1.5
}

fn default_growth() -> Growth {
    Growth::Multiplicative
}

impl NoiseSpec {
    pub fn build(&self, basis: &Arc<BasisSet>) -> Result<NoiseModel> {
        match self {
            NoiseSpec::DefaultFamily {
                sigma0,
                s_decay,
                growth,
            } => NoiseModel::default_family(basis, *sigma0, *s_decay, *growth),
            NoiseSpec::Channels { channels, s_decay } => {
                let ch = channels
                    .iter()
                    .map(|c| {
                        Ok(Channel {
                            mode: ModeIndex::new(c.field, c.i, c.j, c.m)?,
                            sigma: c.sigma,
                            growth: c.growth,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                NoiseModel::new(basis, ch, *s_decay)
            }
        }
    }
}

/// Reproducible generator for Monte Carlo path `path` under `seed`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Independent N(0, dt) increments, one per channel.
pub fn sample_wiener_increment<R: Rng + ?Sized>(channels: usize, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
    }
    let s = dt.sqrt();
    Ok((0..channels)
        .map(|_| s * rng.sample::<f64, _>(StandardNormal))
        .collect())
}
