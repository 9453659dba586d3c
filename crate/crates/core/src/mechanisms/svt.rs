//! The sparse vector technique and four known-broken variants of it.
//!
//! All variants compare `q + eta2` against a noisy threshold `T + eta1` and
//! emit one entry per processed query, in query order.
//!
//! | variant | threshold noise | query noise      | halts after N | above-threshold entry |
//! |---------|-----------------|------------------|---------------|-----------------------|
//! | `svt`   | `Lap(2Δ/ε0)`    | `Lap(4NΔ/ε0)`    | yes           | `True`                |
//! | `isvt1` | `Lap(2Δ/ε0)`    | none             | no            | `True`                |
//! | `isvt2` | `Lap(2Δ/ε0)`    | `Lap(2Δ/ε0)`     | no            | `True`                |
//! | `isvt3` | `Lap(4Δ/ε0)`    | `Lap(4Δ/(3ε0))`  | yes           | `True`                |
//! | `isvt4` | `Lap(2Δ/ε0)`    | `Lap(2NΔ/ε0)`    | yes           | the noisy answer      |

use rand::RngCore;

use crate::error::{Error, Result};
use crate::mechanism::{ArgKind, Mechanism};
use crate::noise::Noise;
use crate::types::{
    Arity, Atom, AtomKind, MechanismArgs, MechanismOutput, OutputKind, QueryAnswerVector, Symbol,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvtVariant {
    Correct,
    /// No query noise, no bound.
    NoQueryNoise,
    /// No bound on the number of `True`s.
    Unbounded,
    /// Query noise does not scale with N; costs `(1 + 6N)/4 · ε0`.
    UnscaledQueryNoise,
    /// Releases the noisy answer instead of `True`.
    ReleasesValue,
}

#[derive(Debug, Clone)]
pub struct SparseVector {
    name: &'static str,
    variant: SvtVariant,
}

const WITH_BOUND: &[ArgKind] = &[ArgKind::Threshold, ArgKind::Bound];
const THRESHOLD_ONLY: &[ArgKind] = &[ArgKind::Threshold];

impl SparseVector {
    pub fn new(name: &'static str, variant: SvtVariant) -> Self {
        Self { name, variant }
    }

    pub fn variant(&self) -> SvtVariant {
        self.variant
    }

    fn bounded(&self) -> bool {
        !matches!(
            self.variant,
            SvtVariant::NoQueryNoise | SvtVariant::Unbounded
        )
    }

    fn threshold(&self, args: &MechanismArgs) -> Result<f64> {
        args.threshold.ok_or(Error::MissingArgument {
            mechanism: self.name,
            arg: "threshold",
        })
    }

    fn bound(&self, args: &MechanismArgs) -> Result<u32> {
        match args.bound {
            Some(n) if n >= 1 => Ok(n),
            Some(_) => Err(Error::invalid("bound N must be at least 1")),
            None => Err(Error::MissingArgument {
                mechanism: self.name,
                arg: "bound",
            }),
        }
    }
}

impl Mechanism for SparseVector {
    fn name(&self) -> &str {
        self.name
    }

    fn output_kind(&self, _input_len: usize) -> OutputKind {
        OutputKind {
            arity: Arity::Variable,
            atoms: if self.variant == SvtVariant::ReleasesValue {
                AtomKind::Mixed
            } else {
                AtomKind::Categorical
            },
        }
    }

    fn consumed_args(&self) -> &[ArgKind] {
        if self.bounded() {
            WITH_BOUND
        } else {
            THRESHOLD_ONLY
        }
    }

    fn execute(
        &self,
        input: &QueryAnswerVector,
        args: &MechanismArgs,
        rng: &mut dyn RngCore,
    ) -> Result<MechanismOutput> {
        let threshold = self.threshold(args)?;
        let bound = if self.bounded() {
            Some(self.bound(args)?)
        } else {
            None
        };
        let n = bound.unwrap_or(1) as f64;
        let (eps, delta) = (args.epsilon0, args.sensitivity);
        let (threshold_scale, query_scale) = match self.variant {
            SvtVariant::Correct => (2.0 * delta / eps, Some(4.0 * n * delta / eps)),
            SvtVariant::NoQueryNoise => (2.0 * delta / eps, None),
            SvtVariant::Unbounded => (2.0 * delta / eps, Some(2.0 * delta / eps)),
            SvtVariant::UnscaledQueryNoise => (4.0 * delta / eps, Some(4.0 * delta / (3.0 * eps))),
            SvtVariant::ReleasesValue => (2.0 * delta / eps, Some(2.0 * n * delta / eps)),
        };

        let mut noise = Noise::new(rng, args.noiseless);
        let noisy_threshold = threshold + noise.laplace(threshold_scale)?;
        let mut out = Vec::with_capacity(input.len());
        let mut above = 0u32;
        for &q in input.values() {
            let eta = match query_scale {
                Some(scale) => noise.laplace(scale)?,
                None => 0.0,
            };
            let noisy = q + eta;
            if noisy >= noisy_threshold {
                out.push(if self.variant == SvtVariant::ReleasesValue {
                    Atom::Num(noisy)
                } else {
                    Atom::Cat(Symbol::Bool(true))
                });
                above += 1;
                if bound.is_some_and(|b| above >= b) {
                    break;
                }
            } else {
                out.push(Atom::Cat(Symbol::Bool(false)));
            }
        }
        Ok(MechanismOutput(out))
    }

    fn branch_outcomes(
        &self,
        input: &QueryAnswerVector,
        args: &MechanismArgs,
    ) -> Option<Vec<bool>> {
        let t = args.threshold?;
        Some(input.values().iter().map(|&q| q >= t).collect())
    }
}
