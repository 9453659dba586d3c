//! Candidate inputs: adjacent database patterns and argument values.
//!
//! Databases are short query-answer vectors built from an all-ones baseline
//! with deviations of `±Δ`. Arguments that only scale noise are set to the
//! least-noise value (`N = 1`); a threshold is chosen on a finite grid to make
//! as many noise-free branch outcomes as possible differ between the two
//! inputs.

use crate::error::{Error, Result};
use crate::mechanism::{ArgKind, Mechanism};
use crate::types::{Adjacency, AdjacentInputPair, Category, MechanismArgs, QueryAnswerVector};

/// Input lengths used for every mechanism.
pub const LENGTHS: [usize; 2] = [5, 10];

fn pattern(category: Category, l: usize, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let (up, down) = (1.0 + delta, 1.0 - delta);
    let ones = vec![1.0; l];
    let mut d2 = ones.clone();
    match category {
        Category::OneAbove => d2[0] = up,
        Category::OneBelow => d2[0] = down,
        Category::OneAboveRestBelow => {
            d2.fill(down);
            d2[0] = up;
        }
        Category::OneBelowRestAbove => {
            d2.fill(up);
            d2[0] = down;
        }
        Category::HalfHalf => {
            let below = l.div_ceil(2);
            d2[..below].fill(down);
            d2[below..].fill(up);
        }
        Category::AllAboveAllBelow => d2.fill(up),
        Category::XShape => {
            let split = l / 2;
            let mut d1 = vec![down; l];
            d1[..split].fill(1.0);
            d2[..split].fill(down);
            return (d1, d2);
        }
    }
    (ones, d2)
}

/// Every category at every requested length, in category-major order per length.
///
/// ```
/// use dpwitness::inputs::generate_databases;
/// use dpwitness::Category;
///
/// let pairs = generate_databases(&[5], 1.0).unwrap();
/// let half = pairs.iter().find(|p| p.category() == Category::HalfHalf).unwrap();
/// assert_eq!(half.d2().values(), &[0.0, 0.0, 0.0, 2.0, 2.0]);
/// ```
pub fn generate_databases(lengths: &[usize], sensitivity: f64) -> Result<Vec<AdjacentInputPair>> {
    let mut pairs = Vec::with_capacity(lengths.len() * Category::ALL.len());
    for &l in lengths {
        if l < 2 {
            return Err(Error::invalid(format!(
                "input length must be at least 2, got {l}"
            )));
        }
        for category in Category::ALL {
            let (d1, d2) = pattern(category, l, sensitivity);
            pairs.push(AdjacentInputPair::new(
                QueryAnswerVector::new(d1)?,
                QueryAnswerVector::new(d2)?,
                category,
                sensitivity,
            )?);
        }
    }
    Ok(pairs)
}

/// Thresholds worth trying: midpoints between consecutive distinct answers
/// and every answer shifted by `±Δ/2`, sorted and deduplicated.
pub fn threshold_grid(pair: &AdjacentInputPair) -> Vec<f64> {
    let mut answers: Vec<f64> = pair
        .d1()
        .values()
        .iter()
        .chain(pair.d2().values())
        .copied()
        .collect();
    answers.sort_by(f64::total_cmp);
    answers.dedup();
    let half = pair.sensitivity() / 2.0;
    let mut grid: Vec<f64> = answers.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    grid.extend(answers.iter().flat_map(|&a| [a - half, a + half]));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Number of positions where the noise-free branch outcomes differ.
pub fn divergence(
    mechanism: &dyn Mechanism,
    pair: &AdjacentInputPair,
    args: &MechanismArgs,
) -> usize {
    match (
        mechanism.branch_outcomes(pair.d1(), args),
        mechanism.branch_outcomes(pair.d2(), args),
    ) {
        (Some(a), Some(b)) => a.iter().zip(&b).filter(|(x, y)| x != y).count(),
        _ => 0,
    }
}

/// Grounds every optional argument `mechanism` consumes.
///
/// The threshold maximizes [`divergence`] over [`threshold_grid`]; ties go to
/// the smallest value.
pub fn generate_arguments(
    mechanism: &dyn Mechanism,
    pair: &AdjacentInputPair,
    epsilon0: f64,
) -> Result<MechanismArgs> {
    let mut args = MechanismArgs::new(epsilon0, pair.sensitivity())?;
    let consumed = mechanism.consumed_args();
    if let Some(other) = consumed.iter().find(|a| matches!(a, ArgKind::Other(_))) {
        return Err(Error::UnsupportedArgument {
            mechanism: mechanism.name().to_owned(),
            arg: other.name().to_owned(),
        });
    }
    if consumed.contains(&ArgKind::Bound) {
        args = args.with_bound(1);
    }
    if consumed.contains(&ArgKind::Threshold) {
        let mut best: Option<(usize, f64)> = None;
        for t in threshold_grid(pair) {
            let d = divergence(mechanism, pair, &args.clone().with_threshold(t));
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, t));
            }
        }
        let (_, t) = best.expect("grid is never empty");
        args = args.with_threshold(t);
    }
    Ok(args)
}

/// Candidate `(pair, args)` tuples for `mechanism`, filtered to its adjacency.
pub fn input_list(
    mechanism: &dyn Mechanism,
    epsilon0: f64,
) -> Result<Vec<(AdjacentInputPair, MechanismArgs)>> {
    let histogram = mechanism.adjacency() == Adjacency::Histogram;
    generate_databases(&LENGTHS, 1.0)?
        .into_iter()
        .filter(|p| !histogram || p.category().adjacency() == Adjacency::Histogram)
        .map(|p| {
            let args = generate_arguments(mechanism, &p, epsilon0)?;
            Ok((p, args))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::lookup;

    fn find(pairs: &[AdjacentInputPair], c: Category, l: usize) -> &AdjacentInputPair {
        pairs
            .iter()
            .find(|p| p.category() == c && p.len() == l)
            .unwrap()
    }

    #[test]
    fn length_five_matches_reference_table() {
        let pairs = generate_databases(&[5], 1.0).unwrap();
        let rows: [(Category, [f64; 5], [f64; 5]); 7] = [
            (Category::OneAbove, [1.0; 5], [2.0, 1.0, 1.0, 1.0, 1.0]),
            (Category::OneBelow, [1.0; 5], [0.0, 1.0, 1.0, 1.0, 1.0]),
            (
                Category::OneAboveRestBelow,
                [1.0; 5],
                [2.0, 0.0, 0.0, 0.0, 0.0],
            ),
            (
                Category::OneBelowRestAbove,
                [1.0; 5],
                [0.0, 2.0, 2.0, 2.0, 2.0],
            ),
            (Category::HalfHalf, [1.0; 5], [0.0, 0.0, 0.0, 2.0, 2.0]),
            (Category::AllAboveAllBelow, [1.0; 5], [2.0; 5]),
            (
                Category::XShape,
                [1.0, 1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 1.0, 1.0],
            ),
        ];
        assert_eq!(pairs.len(), 7);
        for (c, d1, d2) in rows {
            let p = find(&pairs, c, 5);
            assert_eq!(p.d1().values(), &d1, "{c}");
            assert_eq!(p.d2().values(), &d2, "{c}");
        }
    }

    #[test]
    fn length_ten_and_general_sensitivity() {
        let pairs = generate_databases(&[10], 1.0).unwrap();
        let x = find(&pairs, Category::XShape, 10);
        assert_eq!(
            x.d1().values(),
            &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            x.d2().values(),
            &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]
        );
        let pairs = generate_databases(&[5], 2.5).unwrap();
        assert_eq!(
            find(&pairs, Category::AllAboveAllBelow, 5).d2().values(),
            &[3.5; 5]
        );
        assert!(generate_databases(&[1], 1.0).is_err());
    }

    #[test]
    fn every_pair_revalidates() {
        for delta in [0.5, 1.0, 3.0] {
            for p in generate_databases(&[2, 3, 5, 10], delta).unwrap() {
                let again = AdjacentInputPair::new(
                    p.d1().clone(),
                    p.d2().clone(),
                    p.category(),
                    p.sensitivity(),
                );
                assert!(again.is_ok(), "{} {delta}", p.category());
            }
        }
    }

    #[test]
    fn threshold_splits_all_above_pair() {
        let svt = lookup("svt").unwrap();
        let pairs = generate_databases(&[5], 1.0).unwrap();
        let p = find(&pairs, Category::AllAboveAllBelow, 5);
        let args = generate_arguments(svt.as_ref(), p, 0.5).unwrap();
        assert_eq!(args.threshold, Some(1.5));
        assert_eq!(args.bound, Some(1));
        assert_eq!(divergence(svt.as_ref(), p, &args), 5);
    }

    #[test]
    fn chosen_threshold_is_grid_optimal() {
        for name in ["svt", "isvt1", "isvt2", "isvt3", "isvt4"] {
            let m = lookup(name).unwrap();
            for p in generate_databases(&LENGTHS, 1.0).unwrap() {
                let args = generate_arguments(m.as_ref(), &p, 1.0).unwrap();
                let chosen = divergence(m.as_ref(), &p, &args);
                // independent rescan of the grid
                let base = MechanismArgs::new(1.0, 1.0).unwrap().with_bound(1);
                let best = threshold_grid(&p)
                    .into_iter()
                    .map(|t| divergence(m.as_ref(), &p, &base.clone().with_threshold(t)))
                    .max()
                    .unwrap();
                assert_eq!(chosen, best, "{name} {}", p.category());
                let again = generate_arguments(m.as_ref(), &p, 1.0).unwrap();
                assert_eq!(again, args);
            }
        }
    }

    #[test]
    fn argument_free_mechanisms_get_base_args() {
        for name in ["noisy_max_lap", "histogram"] {
            let m = lookup(name).unwrap();
            for (_, args) in input_list(m.as_ref(), 0.7).unwrap() {
                assert_eq!(args, MechanismArgs::new(0.7, 1.0).unwrap());
            }
        }
    }

    #[test]
    fn tuple_counts_follow_adjacency() {
        assert_eq!(
            input_list(lookup("histogram").unwrap().as_ref(), 1.0)
                .unwrap()
                .len(),
            4
        );
        assert_eq!(
            input_list(lookup("svt").unwrap().as_ref(), 1.0)
                .unwrap()
                .len(),
            14
        );
        assert_eq!(
            input_list(lookup("noisy_max_exp").unwrap().as_ref(), 1.0)
                .unwrap()
                .len(),
            14
        );
    }
}
