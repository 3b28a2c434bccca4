use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{Factor, Family, Grid};
use crate::error::{Error, Result};

/// Which component of Y = (v₁, v₂, T) a mode belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Field {
    V1,
    V2,
    Temp,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::V1, Field::V2, Field::Temp];

    pub fn is_velocity(self) -> bool {
        !matches!(self, Field::Temp)
    }

    pub(crate) fn slot(self) -> usize {
        match self {
            Field::V1 => 0,
            Field::V2 => 1,
            Field::Temp => 2,
        }
    }

    /// Horizontal trigonometric family: sines for velocity (no-slip on Γ_l),
    /// cosines for temperature (Neumann on Γ_l).
    pub fn horizontal_family(self) -> Family {
        if self.is_velocity() {
            Family::Sine
        } else {
            Family::Cosine
        }
    }
}

/// One orthonormal basis function on 𝒪 = (0,1)² × (−1,0).
///
/// Velocity components use √2 sin(iπx) · √2 sin(jπy) · c_m cos(mπz) and the
/// temperature c_i cos(iπx) · c_j cos(jπy) · c_m cos(mπz), with c_0 = 1 and
/// c_k = √2 otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub field: Field,
    pub i: u32,
    pub j: u32,
    pub m: u32,
}

pub(crate) fn cos_norm(k: u32) -> f64 {
    if k == 0 {
        1.0
    } else {
        SQRT_2
    }
}

impl ModeIndex {
    pub fn new(field: Field, i: u32, j: u32, m: u32) -> Result<Self> {
        if field.is_velocity() && (i == 0 || j == 0) {
            return Err(Error::InvalidArgument(format!(
                "velocity mode ({i},{j},{m}) needs i ≥ 1 and j ≥ 1"
            )));
        }
        Ok(Self { field, i, j, m })
    }

    pub fn wavenumber_sq(&self) -> u64 {
        let (i, j, m) = (self.i as u64, self.j as u64, self.m as u64);
        i * i + j * j + m * m
    }

    /// Eigenvalue of −Δ − ∂_zz for this mode, π²(i² + j² + m²).
    pub fn eigenvalue(&self) -> f64 {
        PI * PI * self.wavenumber_sq() as f64
    }

    pub fn is_barotropic_velocity(&self) -> bool {
        self.field.is_velocity() && self.m == 0
    }

    /// Pointwise value of the basis function.
    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        let zf = cos_norm(self.m) * (self.m as f64 * PI * z).cos();
        match self.field {
            Field::V1 | Field::V2 => {
                2.0 * (self.i as f64 * PI * x).sin() * (self.j as f64 * PI * y).sin() * zf
            }
            Field::Temp => {
                cos_norm(self.i)
                    * (self.i as f64 * PI * x).cos()
                    * cos_norm(self.j)
                    * (self.j as f64 * PI * y).cos()
                    * zf
            }
        }
    }
}

/// Truncated basis, eigenvalues and collocation grid.
///
/// Immutable after construction; share it through an `Arc`.
#[derive(Debug)]
pub struct BasisSet {
    n_h: usize,
    n_z: usize,
    modes: Vec<ModeIndex>,
    eigenvalues: Vec<f64>,
    lookup: HashMap<ModeIndex, usize>,
    grid: Grid,
    /// Dense (i, j, m) cube slot → coefficient position, one table per field.
    slots: [Vec<usize>; 3],
}

const NO_SLOT: usize = usize::MAX;

/// Nodes per direction that integrate products of four basis functions to
/// round-off.
pub fn default_nodes(truncation: usize) -> usize {
    5 * truncation + 12
}

/// Smallest grid accepted: the 3/2 dealiasing rule.
pub fn min_nodes(truncation: usize) -> usize {
    (3 * (truncation + 1)).div_ceil(2)
}

/// Builds the basis for horizontal truncation `n_h` and vertical truncation `n_z`.
pub fn build_basis(n_h: usize, n_z: usize) -> Result<Arc<BasisSet>> {
    BasisSet::new(n_h, n_z).map(Arc::new)
}

impl BasisSet {
    pub fn new(n_h: usize, n_z: usize) -> Result<Self> {
        Self::with_grid(n_h, n_z, default_nodes(n_h), default_nodes(n_z))
    }

    /// Builds the basis with an explicit number of Gauss–Legendre nodes per
    /// direction.
    pub fn with_grid(n_h: usize, n_z: usize, nodes_h: usize, nodes_z: usize) -> Result<Self> {
        if n_h == 0 {
            return Err(Error::InvalidTruncation(
                "N_h = 0 leaves no velocity mode".into(),
            ));
        }
        if nodes_h < min_nodes(n_h) || nodes_z < min_nodes(n_z) {
            return Err(Error::GridTooSmall(format!(
                "need at least {}×{} nodes for truncation ({n_h},{n_z}), got {nodes_h}×{nodes_z}",
                min_nodes(n_h),
                min_nodes(n_z)
            )));
        }

        let mut modes = Vec::new();
        for field in Field::ALL {
            let lo = if field.is_velocity() { 1 } else { 0 };
            for i in lo..=n_h as u32 {
                for j in lo..=n_h as u32 {
                    for m in 0..=n_z as u32 {
                        modes.push(ModeIndex { field, i, j, m });
                    }
                }
            }
        }
        modes.sort_by_key(|md| (md.wavenumber_sq(), md.field, md.i, md.j, md.m));

        let eigenvalues = modes.iter().map(ModeIndex::eigenvalue).collect();
        let lookup: HashMap<_, _> = modes.iter().enumerate().map(|(k, m)| (*m, k)).collect();

        let cube = (n_h + 1) * (n_h + 1) * (n_z + 1);
        let mut slots = [vec![NO_SLOT; cube], vec![NO_SLOT; cube], vec![NO_SLOT; cube]];
        for (pos, md) in modes.iter().enumerate() {
            let c = (md.i as usize * (n_h + 1) + md.j as usize) * (n_z + 1) + md.m as usize;
            slots[md.field.slot()][c] = pos;
        }

        Ok(Self {
            n_h,
            n_z,
            modes,
            eigenvalues,
            lookup,
            grid: Grid::new(n_h, n_z, nodes_h, nodes_z),
            slots,
        })
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, pos: usize) -> f64 {
        self.eigenvalues[pos]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn position(&self, mode: &ModeIndex) -> Option<usize> {
        self.lookup.get(mode).copied()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Positions of the m = 0 velocity modes, V1 block first then V2, each
    /// in (i, j) lexicographic order.
    pub fn barotropic_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.n_h * self.n_h);
        for field in [Field::V1, Field::V2] {
            for i in 1..=self.n_h as u32 {
                for j in 1..=self.n_h as u32 {
                    out.push(self.lookup[&ModeIndex { field, i, j, m: 0 }]);
                }
            }
        }
        out
    }

    /// Positions belonging to one field.
    pub fn field_positions(&self, field: Field) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.modes[k].field == field).collect()
    }

    fn gather(&self, coeffs: &[f64], field: Field) -> Vec<f64> {
        self.slots[field.slot()]
            .iter()
            .map(|&p| if p == NO_SLOT { 0.0 } else { coeffs[p] })
            .collect()
    }

    /// Grid values of Σ c_k X(x)Y(y)Z(z) over the modes of `field`, where each
    /// 1D factor is the value, derivative or antiderivative of the basis
    /// factor as selected by `factors`.
    pub fn synthesize(&self, coeffs: &[f64], field: Field, factors: [Factor; 3]) -> Vec<f64> {
        let cube = self.gather(coeffs, field);
        let fam = field.horizontal_family();
        self.grid.synthesize(&cube, [fam, fam, Family::Cosine], factors)
    }

    /// Adds `scale` · ∫ values · (factor-transformed basis function) to
    /// `out` for every mode of `field`. Exact transpose of [`Self::synthesize`]
    /// with respect to the quadrature-weighted inner product.
    pub fn analyze_into(
        &self,
        values: &[f64],
        field: Field,
        factors: [Factor; 3],
        scale: f64,
        out: &mut [f64],
    ) {
        let fam = field.horizontal_family();
        let cube = self.grid.analyze(values, [fam, fam, Family::Cosine], factors);
        for (c, &p) in self.slots[field.slot()].iter().enumerate() {
            if p != NO_SLOT {
                out[p] += scale * cube[c];
            }
        }
    }

    pub fn description(&self) -> BasisDescription {
        BasisDescription {
            version: BasisDescription::VERSION,
            n_h: self.n_h,
            n_z: self.n_z,
            nodes_h: self.grid.nodes_h(),
            nodes_z: self.grid.nodes_z(),
            modes: self
                .modes
                .iter()
                .zip(&self.eigenvalues)
                .map(|(m, &e)| ModeRecord {
                    field: m.field,
                    i: m.i,
                    j: m.j,
                    m: m.m,
                    eigenvalue: e,
                })
                .collect(),
        }
    }
}

/// Versioned, serialisable description of a basis for reproducibility
/// manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisDescription {
    pub version: u32,
    pub n_h: usize,
    pub n_z: usize,
    pub nodes_h: usize,
    pub nodes_z: usize,
    pub modes: Vec<ModeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub field: Field,
    pub i: u32,
    pub j: u32,
    pub m: u32,
    pub eigenvalue: f64,
}

impl BasisDescription {
    pub const VERSION: u32 = 1;

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a description and rebuilds the basis it describes. The mode
    /// list must match the rebuilt basis exactly.
    pub fn from_json(text: &str) -> Result<(Self, Arc<BasisSet>)> {
        let desc: Self = serde_json::from_str(text)?;
        if desc.version != Self::VERSION {
            return Err(Error::Parse(format!(
                "unsupported basis description version {}",
                desc.version
            )));
        }
        let basis = BasisSet::with_grid(desc.n_h, desc.n_z, desc.nodes_h, desc.nodes_z)?;
        if basis.description() != desc {
            return Err(Error::Parse(
                "mode list does not match the rebuilt basis".into(),
            ));
        }
        Ok((desc, Arc::new(basis)))
    }
}
