//! Control space U, noise channels ψ, Wiener increments and deterministic
//! controls h ∈ T_M.

mod control;
mod noise;

pub use control::ControlPath;
pub use noise::{
    path_rng, sample_wiener_increment, Channel, ChannelSpec, Growth, H0Constants, NoiseModel,
    NoiseSpec,
};
