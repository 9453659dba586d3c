//! Calibrated noise primitives.

use rand::distr::Open01;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "noise scale must be positive and finite, got {scale}"
        )))
    }
}

/// Inverse Laplace CDF at `u ∈ (0, 1)`.
pub fn laplace_from_uniform(scale: f64, u: f64) -> f64 {
    let centered = u - 0.5;
    -scale * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

/// Inverse exponential CDF at `u ∈ [0, 1)`.
pub fn exponential_from_uniform(scale: f64, u: f64) -> f64 {
    -scale * (-u).ln_1p()
}

/// One draw from Laplace(0, `scale`), consuming exactly one uniform.
pub fn laplace_sample<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    check_scale(scale)?;
    let u: f64 = rng.sample(Open01);
    Ok(laplace_from_uniform(scale, u))
}

/// One draw from the exponential distribution with mean `scale`.
pub fn exponential_sample<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    check_scale(scale)?;
    let u: f64 = rng.sample(Open01);
    Ok(exponential_from_uniform(scale, u))
}

/// Noise handed to a mechanism body.
///
/// In noiseless mode every draw is exactly zero and no randomness is consumed.
pub struct Noise<'a> {
    rng: &'a mut dyn RngCore,
    noiseless: bool,
}

impl<'a> Noise<'a> {
    pub fn new(rng: &'a mut dyn RngCore, noiseless: bool) -> Self {
        Self { rng, noiseless }
    }

    pub fn is_noiseless(&self) -> bool {
        self.noiseless
    }

    pub fn laplace(&mut self, scale: f64) -> Result<f64> {
        if self.noiseless {
            check_scale(scale)?;
            return Ok(0.0);
        }
        laplace_sample(scale, &mut *self.rng)
    }

    pub fn exponential(&mut self, scale: f64) -> Result<f64> {
        if self.noiseless {
            check_scale(scale)?;
            return Ok(0.0);
        }
        exponential_sample(scale, &mut *self.rng)
    }
}
