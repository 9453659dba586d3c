//! Exact tests for a gap of `e^ε` between two event probabilities.
//!
//! Given counts `c1`, `c2` of hits out of `n` runs on each input, the boundary
//! null `p1 = e^ε p2` is reduced to equal proportions by thinning `c1`: keeping
//! each hit with probability `e^-ε` turns Binomial(n, p1) into
//! Binomial(n, p1 e^-ε). Equality of the thinned count and `c2` is then checked
//! with the one-sided Fisher exact test. The thinning is repeated and the
//! resulting p-values averaged.

mod hypergeom;

pub use hypergeom::{hypergeom_cdf, ln_choose, ln_factorial, Hypergeometric};

use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Event;
use crate::mechanism::Mechanism;
use crate::rng::{Phase, StreamKey};
use crate::sampling::count_hits;
use crate::types::{AdjacentInputPair, MechanismArgs};

/// Default number of thinning resamples averaged per p-value.
pub const DEFAULT_RESAMPLES: usize = 10;

/// Hits of an event among `n` runs on each input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPair {
    pub c1: u64,
    pub c2: u64,
    pub n: u64,
}

impl CountPair {
    pub fn new(c1: u64, c2: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("iteration count n must be positive"));
        }
        if c1 > n || c2 > n {
            return Err(Error::invalid(format!(
                "counts ({c1}, {c2}) exceed iterations {n}"
            )));
        }
        Ok(Self { c1, c2, n })
    }

    pub fn swapped(self) -> Self {
        Self {
            c1: self.c2,
            c2: self.c1,
            n: self.n,
        }
    }
}

/// Evidence in both directions: `p_top` against `P1 <= e^ε P2`, `p_bot`
/// against `P2 <= e^ε P1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValuePair {
    pub p_top: f64,
    pub p_bot: f64,
}

impl PValuePair {
    pub fn min(&self) -> f64 {
        self.p_top.min(self.p_bot)
    }
}

/// Unthinned one-sided Fisher tail `P(X >= c1)`, `X ~ Hypergeom(2n, n, c1 + c2)`.
pub fn fisher_tail(c1: u64, c2: u64, n: u64) -> f64 {
    Hypergeometric::new(2 * n, n, c1 + c2)
        .expect("counts bounded by n")
        .sf_ge(c1 as i64)
}

/// Keeps each of `count` hits independently with probability `e^-ε`.
pub fn thin<R: RngCore + ?Sized>(count: u64, epsilon: f64, rng: &mut R) -> u64 {
    if count == 0 || epsilon == 0.0 {
        return count;
    }
    Binomial::new(count, (-epsilon).exp())
        .expect("probability in (0, 1]")
        .sample(rng)
}

/// Averaged thinned Fisher p-value for `P(M(D1) ∈ E) > e^ε P(M(D2) ∈ E)`.
pub fn pvalue<R: RngCore + ?Sized>(
    c1: u64,
    c2: u64,
    n: u64,
    epsilon: f64,
    rng: &mut R,
    resamples: usize,
) -> Result<f64> {
    CountPair::new(c1, c2, n)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    if resamples == 0 {
        return Err(Error::invalid("resamples must be positive"));
    }
    if c1 == 0 {
        return Ok(1.0);
    }
    let sum: f64 = (0..resamples)
        .map(|_| fisher_tail(thin(c1, epsilon, rng), c2, n))
        .sum();
    Ok((sum / resamples as f64).clamp(0.0, 1.0))
}

/// Both directions for a count pair, drawing thinning from `rng`.
pub fn pvalue_pair<R: RngCore + ?Sized>(
    counts: CountPair,
    epsilon: f64,
    rng: &mut R,
    resamples: usize,
) -> Result<PValuePair> {
    let p_top = pvalue(counts.c1, counts.c2, counts.n, epsilon, rng, resamples)?;
    let p_bot = pvalue(counts.c2, counts.c1, counts.n, epsilon, rng, resamples)?;
    Ok(PValuePair { p_top, p_bot })
}

/// Runs `mechanism` `n` times on each side of `pair` and tests event `event`.
///
/// Executions draw from `key` (lanes 0 and 1 for the two sides); thinning
/// draws from the same key moved to [`Phase::DetectThinning`].
#[allow(clippy::too_many_arguments)]
pub fn hypothesis_test(
    mechanism: &dyn Mechanism,
    args: &MechanismArgs,
    epsilon: f64,
    pair: &AdjacentInputPair,
    event: &Event,
    n: usize,
    resamples: usize,
    key: StreamKey,
) -> Result<(CountPair, PValuePair)> {
    if n == 0 {
        return Err(Error::invalid("iteration count n must be positive"));
    }
    let hit = |o: &_| event.contains(o);
    let c1 = count_hits(mechanism, pair.d1(), args, n, key.with_lane(0), hit)?;
    let c2 = count_hits(mechanism, pair.d2(), args, n, key.with_lane(1), hit)?;
    let counts = CountPair::new(c1, c2, n as u64)?;
    let mut rng = key.with_phase(Phase::DetectThinning).rng(0);
    let p = pvalue_pair(counts, epsilon, &mut rng, resamples)?;
    Ok((counts, p))
}
