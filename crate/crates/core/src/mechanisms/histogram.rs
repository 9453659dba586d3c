use rand::RngCore;

use crate::error::Result;
use crate::mechanism::Mechanism;
use crate::noise::Noise;
use crate::types::{
    Adjacency, Arity, Atom, AtomKind, MechanismArgs, MechanismOutput, OutputKind, QueryAnswerVector,
};

/// Noisy histogram with per-cell Laplace noise.
///
/// The correct release uses scale `1/epsilon0`. The `wrong_scale` variant uses
/// scale `epsilon0`, which is `1/epsilon0`-private rather than `epsilon0`-private.
#[derive(Debug, Clone)]
pub struct Histogram {
    name: &'static str,
    wrong_scale: bool,
}

impl Histogram {
    pub fn correct(name: &'static str) -> Self {
        Self {
            name,
            wrong_scale: false,
        }
    }

    pub fn wrong_scale(name: &'static str) -> Self {
        Self {
            name,
            wrong_scale: true,
        }
    }

    fn scale(&self, epsilon0: f64) -> f64 {
        if self.wrong_scale {
            epsilon0
        } else {
            1.0 / epsilon0
        }
    }
}

impl Mechanism for Histogram {
    fn name(&self) -> &str {
        self.name
    }

    fn output_kind(&self, input_len: usize) -> OutputKind {
        OutputKind {
            arity: Arity::Fixed(input_len),
            atoms: AtomKind::Numeric,
        }
    }

    fn adjacency(&self) -> Adjacency {
        Adjacency::Histogram
    }

    fn execute(
        &self,
        input: &QueryAnswerVector,
        args: &MechanismArgs,
        rng: &mut dyn RngCore,
    ) -> Result<MechanismOutput> {
        let mut noise = Noise::new(rng, args.noiseless);
        let scale = self.scale(args.epsilon0);
        let cells = input
            .values()
            .iter()
            .map(|&q| Ok(Atom::Num(q + noise.laplace(scale)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MechanismOutput(cells))
    }
}
