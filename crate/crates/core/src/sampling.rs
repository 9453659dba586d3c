//! Parallel, scheduling-independent mechanism execution.
//!
//! Executions are split into fixed-size chunks, each drawing from its own
//! stream `key.rng(chunk)`. Chunk boundaries never depend on the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mechanism::Mechanism;
use crate::rng::StreamKey;
use crate::types::{MechanismArgs, MechanismOutput, QueryAnswerVector};

pub const CHUNK: usize = 4096;

fn chunk_ranges(n: usize) -> Vec<(u64, usize)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(n - c * CHUNK)))
        .collect()
}

fn wrap(mechanism: &dyn Mechanism, input: &QueryAnswerVector, err: Error) -> Error {
    Error::Execution {
        mechanism: mechanism.name().to_owned(),
        context: format!("input {input}"),
        source: Box::new(err),
    }
}

/// Runs `mechanism` `n` times and keeps every output, in execution order.
pub fn collect_outputs(
    mechanism: &dyn Mechanism,
    input: &QueryAnswerVector,
    args: &MechanismArgs,
    n: usize,
    key: StreamKey,
) -> Result<Vec<MechanismOutput>> {
    let chunks: Vec<Vec<MechanismOutput>> = chunk_ranges(n)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = key.rng(chunk);
            (0..len)
                .map(|_| mechanism.execute(input, args, &mut rng))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()
        .map_err(|e| wrap(mechanism, input, e))?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Runs `mechanism` `n` times and counts outputs satisfying `hit`.
pub fn count_hits<F>(
    mechanism: &dyn Mechanism,
    input: &QueryAnswerVector,
    args: &MechanismArgs,
    n: usize,
    key: StreamKey,
    hit: F,
) -> Result<u64>
where
    F: Fn(&MechanismOutput) -> bool + Sync,
{
    chunk_ranges(n)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = key.rng(chunk);
            let mut count = 0u64;
            for _ in 0..len {
                if hit(&mechanism.execute(input, args, &mut rng)?) {
                    count += 1;
                }
            }
            Ok(count)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
        .map_err(|e| wrap(mechanism, input, e))
}
