//! Statistical counterexamples for differential privacy claims.
//!
//! A mechanism claiming ε-differential privacy must satisfy
//! `P(M(D1) ∈ E) <= e^ε P(M(D2) ∈ E)` for every pair of neighbouring inputs
//! and every event `E`. This crate searches for a violating
//! `(D1, D2, E)` by running the mechanism many times, picking a promising
//! event on exploratory runs, and testing it on fresh runs with an exact
//! test. Small p-values are evidence that the claim is false.
//!
//! ```
//! use dpwitness::{detector, DetectionConfig};
//!
//! let mut config = DetectionConfig::new("isvt1", 0.7);
//! config.test_epsilons = vec![0.7];
//! config.n_select = 5_000;
//! config.n_detect = 20_000;
//! let points = detector::run(&config).unwrap();
//! let result = points[0].outcome.as_ref().unwrap();
//! assert!(result.min_p() < 0.05);
//! ```

pub mod detector;
pub mod error;
pub mod event;
pub mod inputs;
pub mod mechanism;
pub mod mechanisms;
pub mod noise;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod selector;
pub mod stats;
pub mod types;

pub use detector::{detect, sweep, DetectionConfig, DetectionResult, SweepPoint};
pub use error::{Error, Result};
pub use event::Event;
pub use mechanism::{ArgKind, Mechanism};
pub use rng::{Phase, StreamKey};
pub use types::{
    AdjacentInputPair, Arity, Atom, AtomKind, Category, MechanismArgs, MechanismOutput, OutputKind,
    QueryAnswerVector, Symbol,
};

/// Guide chapters, compiled as doc-tests so the book cannot drift.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/testing.md")]
    mod testing {}
    #[doc = include_str!("../../../book/src/inputs.md")]
    mod inputs {}
    #[doc = include_str!("../../../book/src/events.md")]
    mod events {}
    #[doc = include_str!("../../../book/src/mechanisms.md")]
    mod mechanisms {}
    #[doc = include_str!("../../../book/src/running.md")]
    mod running {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
