//! Mechanisms under test, addressable by name.

mod histogram;
mod noisy_max;
mod svt;

pub use histogram::Histogram;
pub use noisy_max::{NoiseKind, NoisyMax, Report};
pub use svt::{SparseVector, SvtVariant};

use crate::error::{Error, Result};
use crate::mechanism::Mechanism;

/// Every registered mechanism name, in a stable order.
pub const NAMES: [&str; 11] = [
    "noisy_max_lap",
    "noisy_max_exp",
    "noisy_max_lap_value",
    "noisy_max_exp_value",
    "histogram",
    "histogram_wrong_scale",
    "svt",
    "isvt1",
    "isvt2",
    "isvt3",
    "isvt4",
];

/// Constructs the mechanism registered under `name`.
pub fn lookup(name: &str) -> Result<Box<dyn Mechanism>> {
    let m: Box<dyn Mechanism> = match name {
        "noisy_max_lap" => Box::new(NoisyMax::new(NAMES[0], NoiseKind::Laplace, Report::Index)),
        "noisy_max_exp" => Box::new(NoisyMax::new(
            NAMES[1],
            NoiseKind::Exponential,
            Report::Index,
        )),
        "noisy_max_lap_value" => {
            Box::new(NoisyMax::new(NAMES[2], NoiseKind::Laplace, Report::Value))
        }
        "noisy_max_exp_value" => Box::new(NoisyMax::new(
            NAMES[3],
            NoiseKind::Exponential,
            Report::Value,
        )),
        "histogram" => Box::new(Histogram::correct(NAMES[4])),
        "histogram_wrong_scale" => Box::new(Histogram::wrong_scale(NAMES[5])),
        "svt" => Box::new(SparseVector::new(NAMES[6], SvtVariant::Correct)),
        "isvt1" => Box::new(SparseVector::new(NAMES[7], SvtVariant::NoQueryNoise)),
        "isvt2" => Box::new(SparseVector::new(NAMES[8], SvtVariant::Unbounded)),
        "isvt3" => Box::new(SparseVector::new(NAMES[9], SvtVariant::UnscaledQueryNoise)),
        "isvt4" => Box::new(SparseVector::new(NAMES[10], SvtVariant::ReleasesValue)),
        other => return Err(Error::UnknownMechanism(other.to_owned())),
    };
    Ok(m)
}
