use rand::RngCore;

use crate::error::Result;
use crate::mechanism::Mechanism;
use crate::noise::Noise;
use crate::types::{
    Arity, Atom, AtomKind, MechanismArgs, MechanismOutput, OutputKind, QueryAnswerVector, Symbol,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Laplace,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Report {
    /// 1-based index of the largest noisy answer.
    Index,
    /// The largest noisy answer itself. Not `epsilon0`-private.
    Value,
}

/// Report Noisy Max: perturb every answer with noise of scale `2/epsilon0`.
#[derive(Debug, Clone)]
pub struct NoisyMax {
    name: &'static str,
    noise: NoiseKind,
    report: Report,
}

impl NoisyMax {
    pub fn new(name: &'static str, noise: NoiseKind, report: Report) -> Self {
        Self {
            name,
            noise,
            report,
        }
    }
}

impl Mechanism for NoisyMax {
    fn name(&self) -> &str {
        self.name
    }

    fn output_kind(&self, _input_len: usize) -> OutputKind {
        OutputKind {
            arity: Arity::Fixed(1),
            atoms: match self.report {
                Report::Index => AtomKind::Categorical,
                Report::Value => AtomKind::Numeric,
            },
        }
    }

    fn execute(
        &self,
        input: &QueryAnswerVector,
        args: &MechanismArgs,
        rng: &mut dyn RngCore,
    ) -> Result<MechanismOutput> {
        let mut noise = Noise::new(rng, args.noiseless);
        let scale = 2.0 / args.epsilon0;
        // first maximal index wins
        let (mut best_idx, mut best) = (0usize, f64::NEG_INFINITY);
        for (i, &q) in input.values().iter().enumerate() {
            let eta = match self.noise {
                NoiseKind::Laplace => noise.laplace(scale)?,
                NoiseKind::Exponential => noise.exponential(scale)?,
            };
            let noisy = q + eta;
            if noisy > best {
                best = noisy;
                best_idx = i;
            }
        }
        let atom = match self.report {
            Report::Index => Atom::Cat(Symbol::Index(best_idx as u32 + 1)),
            Report::Value => Atom::Num(best),
        };
        Ok(MechanismOutput(vec![atom]))
    }
}
