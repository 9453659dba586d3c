//! End-to-end counterexample search for one mechanism.
//!
//! Each test ε is an independent point: candidate inputs are generated, an
//! event is selected from `n_select` exploratory runs, and the chosen
//! `(D1, D2, args, E)` is re-tested on `n_detect` fresh runs. Point `i` of a
//! sweep draws every stream from key `(seed, i, ..)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Event;
use crate::inputs::input_list;
use crate::mechanism::Mechanism;
use crate::mechanisms::lookup;
use crate::rng::{Phase, StreamKey};
use crate::selector::{select_event, SelectorConfig, DEFAULT_GRID_STEP};
use crate::stats::{hypothesis_test, CountPair, PValuePair, DEFAULT_RESAMPLES};
use crate::types::{AdjacentInputPair, MechanismArgs};

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub mechanism: String,
    pub epsilon0: f64,
    /// Strictly increasing test budgets.
    pub test_epsilons: Vec<f64>,
    pub n_detect: usize,
    pub n_select: usize,
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    pub grid_step: f64,
}

impl DetectionConfig {
    /// Defaults for `mechanism` claiming `epsilon0`, swept over [`default_grid`].
    pub fn new(mechanism: impl Into<String>, epsilon0: f64) -> Self {
        Self {
            mechanism: mechanism.into(),
            epsilon0,
            test_epsilons: default_grid(epsilon0),
            n_detect: 500_000,
            n_select: 100_000,
            resamples: DEFAULT_RESAMPLES,
            alpha: 0.05,
            seed: 0,
            workers: None,
            grid_step: DEFAULT_GRID_STEP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        lookup(&self.mechanism)?;
        if !(self.epsilon0 > 0.0 && self.epsilon0.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon0 must be positive and finite, got {}",
                self.epsilon0
            )));
        }
        if self.test_epsilons.is_empty() {
            return Err(Error::invalid("test epsilon grid is empty"));
        }
        if self
            .test_epsilons
            .iter()
            .any(|e| !(*e >= 0.0 && e.is_finite()))
        {
            return Err(Error::invalid(
                "test epsilons must be finite and non-negative",
            ));
        }
        if self.test_epsilons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "test epsilon grid must be strictly increasing",
            ));
        }
        if self.n_detect == 0 || self.n_select == 0 {
            return Err(Error::invalid("n_detect and n_select must be at least 1"));
        }
        if self.resamples == 0 {
            return Err(Error::invalid("resamples must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be at least 1"));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::invalid("grid step must be positive"));
        }
        Ok(())
    }

    fn selector(&self) -> SelectorConfig {
        SelectorConfig {
            n_select: self.n_select,
            resamples: self.resamples,
            grid_step: self.grid_step,
        }
    }
}

/// `lo, lo + step, ..` up to and including `hi` (with rounding slack).
pub fn epsilon_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::invalid(format!("bad grid {lo}:{hi}:{step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// `0.05, 0.15, ..` up to `epsilon0 + 1.5`.
pub fn default_grid(epsilon0: f64) -> Vec<f64> {
    epsilon_grid(0.05, epsilon0 + 1.5, 0.1).unwrap_or_default()
}

/// Parses `lo:hi:step`.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(Error::invalid(format!(
            "sweep must be lo:hi:step, got `{spec}`"
        )));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("not a number in sweep: `{s}`")))
    };
    epsilon_grid(num(lo)?, num(hi)?, num(step)?)
}

/// Outcome of one test ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    pub test_epsilon: f64,
    pub pair: AdjacentInputPair,
    pub args: MechanismArgs,
    pub event: Event,
    /// Counts from the fresh detection runs.
    pub counts: CountPair,
    pub pvalues: PValuePair,
    /// Score the event earned during selection.
    pub exploratory_pvalue: f64,
    /// Wall-clock time for the point.
    pub seconds: f64,
}

impl DetectionResult {
    pub fn min_p(&self) -> f64 {
        self.pvalues.min()
    }
}

/// One sweep point: a result or the reason it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub test_epsilon: f64,
    pub outcome: std::result::Result<DetectionResult, Error>,
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn detect_point(
    mechanism: &dyn Mechanism,
    config: &DetectionConfig,
    point: u64,
    test_epsilon: f64,
) -> Result<DetectionResult> {
    let start = Instant::now();
    let list = input_list(mechanism, config.epsilon0)?;
    let key = StreamKey::new(config.seed, point, Phase::Select, 0);
    let chosen = select_event(mechanism, test_epsilon, &list, &config.selector(), key)?;
    let (counts, pvalues) = hypothesis_test(
        mechanism,
        &chosen.args,
        test_epsilon,
        &chosen.pair,
        &chosen.event,
        config.n_detect,
        config.resamples,
        key.with_phase(Phase::Detect),
    )?;
    Ok(DetectionResult {
        test_epsilon,
        pair: chosen.pair,
        args: chosen.args,
        event: chosen.event,
        counts,
        pvalues,
        exploratory_pvalue: chosen.exploratory_pvalue,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs point `point` of a sweep at `test_epsilon` against `mechanism`.
///
/// The mechanism is passed explicitly so callers can test their own
/// implementations; `config.mechanism` only labels reports.
pub fn detect(
    mechanism: &dyn Mechanism,
    config: &DetectionConfig,
    point: u64,
    test_epsilon: f64,
) -> Result<DetectionResult> {
    with_pool(config.workers, || {
        detect_point(mechanism, config, point, test_epsilon)
    })?
}

/// Runs every test ε of the config; failures are recorded per point.
pub fn sweep(mechanism: &dyn Mechanism, config: &DetectionConfig) -> Result<Vec<SweepPoint>> {
    with_pool(config.workers, || {
        config
            .test_epsilons
            .iter()
            .enumerate()
            .map(|(i, &eps)| SweepPoint {
                test_epsilon: eps,
                outcome: detect_point(mechanism, config, i as u64, eps),
            })
            .collect()
    })
}

/// Looks up the registered mechanism and sweeps it.
pub fn run(config: &DetectionConfig) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let mechanism = lookup(&config.mechanism)?;
    sweep(mechanism.as_ref(), config)
}

/// Whether the sweep holds evidence against the claimed budget: some point
/// at `ε ≥ ε0` rejects at level `alpha`. A rejection at a larger ε implies
/// one at ε0.
pub fn violation_detected(points: &[SweepPoint], epsilon0: f64, alpha: f64) -> bool {
    points.iter().any(|p| {
        p.test_epsilon >= epsilon0 - 1e-9 && p.outcome.as_ref().is_ok_and(|r| r.min_p() < alpha)
    })
}
