//! The interface every mechanism under test implements.

use rand::RngCore;

use crate::error::Result;
use crate::types::{Adjacency, MechanismArgs, MechanismOutput, OutputKind, QueryAnswerVector};

/// Optional arguments a mechanism may consume beyond `epsilon0` and the sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArgKind {
    /// A threshold compared against (noisy) query answers.
    Threshold,
    /// A bound on the number of above-threshold reports. Scales noise.
    Bound,
    /// Anything outside the vocabulary the input generator knows how to ground.
    Other(&'static str),
}

impl ArgKind {
    pub fn name(&self) -> &'static str {
        match self {
            ArgKind::Threshold => "threshold",
            ArgKind::Bound => "bound",
            ArgKind::Other(name) => name,
        }
    }
}

/// A randomized algorithm claiming `epsilon0`-differential privacy.
///
/// `execute` must be a pure function of its input, its arguments and the
/// randomness it draws: two calls fed identical streams return identical
/// outputs. With `args.noiseless` set every noise draw is replaced by zero.
pub trait Mechanism: Send + Sync {
    fn name(&self) -> &str;

    /// Declared output shape for inputs of length `input_len`.
    fn output_kind(&self, input_len: usize) -> OutputKind;

    /// Neighbouring relation the privacy claim is made under.
    fn adjacency(&self) -> Adjacency {
        Adjacency::PerQuery
    }

    fn consumed_args(&self) -> &[ArgKind] {
        &[]
    }

    fn execute(
        &self,
        input: &QueryAnswerVector,
        args: &MechanismArgs,
        rng: &mut dyn RngCore,
    ) -> Result<MechanismOutput>;

    /// Noise-free outcome of every threshold comparison the mechanism would
    /// make on `input`, with its loop fully unrolled (early exits ignored).
    ///
    /// `None` for mechanisms without data-dependent branches.
    fn branch_outcomes(
        &self,
        _input: &QueryAnswerVector,
        _args: &MechanismArgs,
    ) -> Option<Vec<bool>> {
        None
    }
}

impl<M: Mechanism + ?Sized> Mechanism for Box<M> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn output_kind(&self, input_len: usize) -> OutputKind {
        (**self).output_kind(input_len)
    }

    fn adjacency(&self) -> Adjacency {
        (**self).adjacency()
    }

    fn consumed_args(&self) -> &[ArgKind] {
        (**self).consumed_args()
    }

    fn execute(
        &self,
        input: &QueryAnswerVector,
        args: &MechanismArgs,
        rng: &mut dyn RngCore,
    ) -> Result<MechanismOutput> {
        (**self).execute(input, args, rng)
    }

    fn branch_outcomes(
        &self,
        input: &QueryAnswerVector,
        args: &MechanismArgs,
    ) -> Option<Vec<bool>> {
        (**self).branch_outcomes(input, args)
    }
}
