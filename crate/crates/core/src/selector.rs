//! Output-type-directed event search and selection.
//!
//! For every candidate `(D1, D2, args)` the mechanism is sampled on both
//! inputs, a search space of events is generated from the observed output
//! shape, and each event is scored by the smaller of its two exploratory
//! p-values. The global minimum over all candidates wins; ties go to the
//! earliest candidate, then the earliest event in generation order.
//!
//! Scoring is exact but avoids evaluating hopeless events. The unthinned
//! Fisher tail `P(X >= c1)` is a lower bound on every thinned p-value (the
//! tail is non-increasing in the thinned count), so any event whose bound
//! exceeds a p-value already attained can never be the argmin. Events are
//! visited in increasing order of that bound and the walk stops at the first
//! bound above the best score. Every event draws its thinning from its own
//! stream, so the result does not depend on visiting order.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::{
    hamming_distance, Agg, CategoricalEvent, Event, Interval, NumericEvent, NumericStat,
};
use crate::mechanism::Mechanism;
use crate::rng::{side_lane, Phase, StreamKey};
use crate::sampling::collect_outputs;
use crate::stats::{thin, CountPair, Hypergeometric};
use crate::types::{
    AdjacentInputPair, Arity, Atom, AtomKind, MechanismArgs, MechanismOutput, OutputKind, Symbol,
};

/// Default spacing of interval end points.
pub const DEFAULT_GRID_STEP: f64 = 0.2;
/// Grids with more points than this per statistic are coarsened by an integer factor.
pub const MAX_GRID_POINTS: usize = 4096;
/// Minimum combined hits, as a fraction of `n · e^ε`, for an event to be scored.
pub const MIN_HIT_FRACTION: f64 = 0.001;

/// Infers the output shape from observed samples.
pub fn classify_output_kind(samples: &[MechanismOutput]) -> Result<OutputKind> {
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid("cannot classify outputs from an empty sample"))?;
    let fixed = samples.iter().all(|s| s.len() == first.len());
    let (mut cat, mut num) = (false, false);
    for atom in samples.iter().flat_map(|s| s.entries()) {
        match atom {
            Atom::Cat(_) => cat = true,
            Atom::Num(_) => num = true,
        }
    }
    Ok(OutputKind {
        arity: if fixed {
            Arity::Fixed(first.len())
        } else {
            Arity::Variable
        },
        atoms: match (cat, num) {
            (true, true) => AtomKind::Mixed,
            (false, true) => AtomKind::Numeric,
            _ => AtomKind::Categorical,
        },
    })
}

/// Observed range of one numeric statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatRange {
    pub min: f64,
    pub max: f64,
    pub integral: bool,
}

impl StatRange {
    fn include(range: &mut Option<StatRange>, v: f64) {
        let integral = v == v.trunc();
        match range {
            Some(r) => {
                r.min = r.min.min(v);
                r.max = r.max.max(v);
                r.integral &= integral;
            }
            None => {
                *range = Some(StatRange {
                    min: v,
                    max: v,
                    integral,
                })
            }
        }
    }
}

/// What the search-space builder needs to know about the observed outputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observations {
    /// Longest observed output.
    pub max_len: usize,
    /// Distinct categorical symbols, sorted.
    pub alphabet: Vec<Symbol>,
    /// Numeric statistics with at least one defined value, in family order.
    pub numeric: Vec<(NumericStat, StatRange)>,
}

impl Observations {
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a MechanismOutput>) -> Self {
        let mut max_len = 0;
        let mut alphabet = BTreeSet::new();
        let mut coords: Vec<Option<StatRange>> = Vec::new();
        let mut aggs: [Option<StatRange>; 3] = [None; 3];
        let mut most_numerics = 0;
        for s in samples {
            max_len = max_len.max(s.len());
            if coords.len() < s.len() {
                coords.resize(s.len(), None);
            }
            let mut numerics = 0;
            for (i, atom) in s.entries().iter().enumerate() {
                match *atom {
                    Atom::Cat(sym) => {
                        alphabet.insert(sym);
                    }
                    Atom::Num(v) => {
                        numerics += 1;
                        StatRange::include(&mut coords[i], v);
                    }
                }
            }
            most_numerics = most_numerics.max(numerics);
            if numerics > 0 {
                for (slot, agg) in aggs.iter_mut().zip(Agg::ALL) {
                    let v = NumericStat::Agg(agg).value(s).expect("has numerics");
                    StatRange::include(slot, v);
                }
            }
        }
        let mut numeric: Vec<(NumericStat, StatRange)> = coords
            .into_iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|r| (NumericStat::Coord(i), r)))
            .collect();
        // a single always-present coordinate makes every aggregate a duplicate
        // of it; with at most one numeric per output, min and max equal avg
        let scalar = max_len == 1 && numeric.len() == 1;
        let kept: &[Agg] = match (scalar, most_numerics) {
            (true, _) => &[],
            (false, 0 | 1) => &[Agg::Avg],
            _ => &Agg::ALL,
        };
        numeric.extend(
            Agg::ALL
                .into_iter()
                .zip(aggs)
                .filter(|(a, _)| kept.contains(a))
                .filter_map(|(a, r)| r.map(|r| (NumericStat::Agg(a), r))),
        );
        Self {
            max_len,
            alphabet: alphabet.into_iter().collect(),
            numeric,
        }
    }
}

/// The candidate end points (or values) for one numeric statistic.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyLayout {
    /// Open intervals `(bounds[i], bounds[j])` for all `i < j`, enumerated row by row.
    Intervals(Vec<f64>),
    /// `coord[i] = v` for each listed integer value.
    Equals(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericFamily {
    pub stat: NumericStat,
    pub layout: FamilyLayout,
}

impl NumericFamily {
    pub fn len(&self) -> usize {
        match &self.layout {
            FamilyLayout::Intervals(b) => b.len() * b.len().saturating_sub(1) / 2,
            FamilyLayout::Equals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, mut idx: usize) -> NumericEvent {
        match &self.layout {
            FamilyLayout::Equals(values) => match self.stat {
                NumericStat::Coord(i) => NumericEvent::CoordEquals(i, values[idx]),
                NumericStat::Agg(_) => unreachable!("equality families are per coordinate"),
            },
            FamilyLayout::Intervals(bounds) => {
                let b = bounds.len();
                for i in 0..b {
                    let row = b - 1 - i;
                    if idx < row {
                        let iv = Interval::new(bounds[i], bounds[i + 1 + idx])
                            .expect("bounds strictly increase");
                        return NumericEvent::InInterval(self.stat, iv);
                    }
                    idx -= row;
                }
                unreachable!("index within family length")
            }
        }
    }
}

fn round_grid(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// End points on the `step` grid covering `[min, max]` widened by one step,
/// plus both infinities.
pub fn interval_bounds(range: StatRange, step: f64) -> Vec<f64> {
    let mut step = step;
    let (mut lo, mut hi);
    loop {
        lo = (range.min / step).floor() as i64 - 1;
        hi = (range.max / step).ceil() as i64 + 1;
        if ((hi - lo + 1) as usize) <= MAX_GRID_POINTS {
            break;
        }
        step *= 2.0;
    }
    let mut bounds = Vec::with_capacity((hi - lo + 3) as usize);
    bounds.push(f64::NEG_INFINITY);
    bounds.extend((lo..=hi).map(|i| round_grid(i as f64 * step)));
    bounds.push(f64::INFINITY);
    bounds
}

/// All events worth considering for one output shape.
///
/// Enumeration order: categorical events (Hamming shells, per-symbol counts,
/// lengths), then numeric events family by family, then products of each
/// count event with each numeric event.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    categorical: Vec<CategoricalEvent>,
    numeric: Vec<NumericFamily>,
    product_parts: Vec<CategoricalEvent>,
    numeric_len: usize,
}

impl SearchSpace {
    pub fn len(&self) -> usize {
        self.categorical.len() + self.numeric_len * (1 + self.product_parts.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn categorical(&self) -> &[CategoricalEvent] {
        &self.categorical
    }

    pub fn numeric_families(&self) -> &[NumericFamily] {
        &self.numeric
    }

    pub fn product_parts(&self) -> &[CategoricalEvent] {
        &self.product_parts
    }

    fn numeric_event(&self, mut idx: usize) -> NumericEvent {
        for fam in &self.numeric {
            if idx < fam.len() {
                return fam.get(idx);
            }
            idx -= fam.len();
        }
        unreachable!("index within numeric space")
    }

    /// The event at position `idx` of the enumeration order.
    pub fn get(&self, idx: usize) -> Option<Event> {
        if idx >= self.len() {
            return None;
        }
        if idx < self.categorical.len() {
            return Some(Event::Categorical(self.categorical[idx].clone()));
        }
        let idx = idx - self.categorical.len();
        if idx < self.numeric_len {
            return Some(Event::Numeric(self.numeric_event(idx)));
        }
        let idx = idx - self.numeric_len;
        let part = &self.product_parts[idx / self.numeric_len];
        Some(Event::Product(
            part.clone(),
            self.numeric_event(idx % self.numeric_len),
        ))
    }

    pub fn iter(&self) -> impl Iterator<Item = Event> + '_ {
        (0..self.len()).map(|i| self.get(i).expect("in range"))
    }
}

/// Builds the event search space for outputs of shape `kind`.
///
/// `reference` is the noise-free output on `D1`, used by Hamming shells.
pub fn build_search_space(
    kind: OutputKind,
    reference: Arc<MechanismOutput>,
    obs: &Observations,
    grid_step: f64,
) -> SearchSpace {
    let has_cat = matches!(kind.atoms, AtomKind::Categorical | AtomKind::Mixed);
    let has_num = matches!(kind.atoms, AtomKind::Numeric | AtomKind::Mixed);
    let l = obs.max_len;

    let counts: Vec<CategoricalEvent> = obs
        .alphabet
        .iter()
        .flat_map(|&s| (0..=l).map(move |k| CategoricalEvent::CountOfValueIs(s, k)))
        .collect();

    let mut categorical = Vec::new();
    if has_cat {
        let shell_max = l.max(reference.len());
        categorical.extend((0..=shell_max).map(|k| CategoricalEvent::HammingShell {
            reference: Arc::clone(&reference),
            k,
        }));
        categorical.extend(counts.iter().cloned());
    }
    if kind.is_variable() {
        categorical.extend((0..=l).map(CategoricalEvent::LengthIs));
    }

    let mut numeric = Vec::new();
    if has_num {
        for &(stat, range) in &obs.numeric {
            let layout = match stat {
                NumericStat::Coord(_) if range.integral => FamilyLayout::Equals(
                    (range.min as i64..=range.max as i64)
                        .map(|v| v as f64)
                        .collect(),
                ),
                _ => FamilyLayout::Intervals(interval_bounds(range, grid_step)),
            };
            numeric.push(NumericFamily { stat, layout });
        }
    }
    let numeric_len = numeric.iter().map(NumericFamily::len).sum();
    let product_parts = if kind.atoms == AtomKind::Mixed {
        counts
    } else {
        Vec::new()
    };
    SearchSpace {
        categorical,
        numeric,
        product_parts,
        numeric_len,
    }
}

/// Selection parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    /// Executions per side for each candidate tuple.
    pub n_select: usize,
    pub resamples: usize,
    pub grid_step: f64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            n_select: 100_000,
            resamples: crate::stats::DEFAULT_RESAMPLES,
            grid_step: DEFAULT_GRID_STEP,
        }
    }
}

/// The winning `(pair, args, event)` and its exploratory score.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub pair: AdjacentInputPair,
    pub args: MechanismArgs,
    pub event: Event,
    pub exploratory_pvalue: f64,
    /// Position of the winning tuple in the input list.
    pub tuple: usize,
    /// Position of the event in that tuple's search space.
    pub event_index: usize,
    /// Selection-phase counts; never reused for the final verdict.
    pub counts: CountPair,
}

/// Hit counts of one surviving event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub index: usize,
    pub c1: u32,
    pub c2: u32,
}

/// Exploratory score of an event: the smaller of its two averaged p-values.
///
/// Thinning for the `c1 > e^ε c2` direction draws from `key.rng(2 i)` and
/// the reverse direction from `key.rng(2 i + 1)`, where `i` is the event
/// index, so each direction equals a [`crate::stats::pvalue`] call on its
/// own stream.
pub fn score_candidate(
    c: Candidate,
    n: u64,
    epsilon: f64,
    resamples: usize,
    key: StreamKey,
) -> f64 {
    score_capped(c, n, epsilon, resamples, key, f64::INFINITY).unwrap_or(1.0)
}

/// One direction's averaged p-value, or `None` once it must exceed `cap`.
///
/// Any returned value is bit-identical to the uncapped computation: draws
/// are taken lazily from the direction's own stream and each tail is exact
/// whenever it is returned.
fn direction_score(
    a: u64,
    b: u64,
    n: u64,
    epsilon: f64,
    resamples: usize,
    mut rng: impl rand::RngCore,
    cap: f64,
) -> Option<f64> {
    if a == 0 {
        return (1.0 <= cap).then_some(1.0);
    }
    if a <= b && cap < 0.5 {
        // every thinned count stays at or below the median, so each tail is >= 1/2
        return None;
    }
    let r = resamples as f64;
    let budget = cap * r;
    let mut sum = 0.0;
    for _ in 0..resamples {
        let k = thin(a, epsilon, &mut rng);
        let h = Hypergeometric::new(2 * n, n, k + b).expect("counts bounded by n");
        sum += h.sf_ge_capped(k as i64, budget - sum)?;
    }
    let p = (sum / r).clamp(0.0, 1.0);
    (p <= cap).then_some(p)
}

/// [`score_candidate`], abandoned as soon as the score is known to exceed `cap`.
fn score_capped(
    c: Candidate,
    n: u64,
    epsilon: f64,
    resamples: usize,
    key: StreamKey,
    cap: f64,
) -> Option<f64> {
    let (c1, c2, i) = (c.c1 as u64, c.c2 as u64, 2 * c.index as u64);
    let top = direction_score(c1, c2, n, epsilon, resamples, key.rng(i), cap);
    // a found top score tightens the cap for the other direction
    let cap = top.map_or(cap, |t| t.min(cap));
    let bot = direction_score(c2, c1, n, epsilon, resamples, key.rng(i + 1), cap);
    match (top, bot) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

/// Minimum combined hit count for an event to be scored.
pub fn min_hits(n: usize, epsilon: f64) -> f64 {
    MIN_HIT_FRACTION * n as f64 * epsilon.exp()
}

/// Per-output categorical features.
struct Features {
    hamming: Vec<u32>,
    len: Vec<u32>,
    /// `counts[s][i]`: occurrences of `alphabet[s]` in output `i`.
    counts: Vec<Vec<u32>>,
}

impl Features {
    fn new(outputs: &[MechanismOutput], reference: &MechanismOutput, alphabet: &[Symbol]) -> Self {
        let hamming = outputs
            .iter()
            .map(|o| hamming_distance(o.entries(), reference.entries()) as u32)
            .collect();
        let len = outputs.iter().map(|o| o.len() as u32).collect();
        let counts = alphabet
            .iter()
            .map(|&s| outputs.iter().map(|o| o.count_of(s) as u32).collect())
            .collect();
        Self {
            hamming,
            len,
            counts,
        }
    }
}

/// Prefix counts of one side's statistic values against a family's grid.
struct Cumulative {
    /// `#{v < bound}` per bound (or per equality value)
    lt: Vec<u32>,
    /// `#{v <= bound}`
    le: Vec<u32>,
}

impl Cumulative {
    fn new(sorted: &[f64], points: &[f64]) -> Self {
        let lt = points
            .iter()
            .map(|&b| sorted.partition_point(|&v| v < b) as u32)
            .collect();
        let le = points
            .iter()
            .map(|&b| sorted.partition_point(|&v| v <= b) as u32)
            .collect();
        Self { lt, le }
    }
}

fn sorted_values(
    outputs: &[MechanismOutput],
    subset: Option<&[usize]>,
    stat: NumericStat,
) -> Vec<f64> {
    let mut v: Vec<f64> = match subset {
        Some(ids) => ids
            .iter()
            .filter_map(|&i| stat.value(&outputs[i]))
            .collect(),
        None => outputs.iter().filter_map(|o| stat.value(o)).collect(),
    };
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Counts every numeric event over the given subsets, pushing survivors.
fn count_numeric(
    space: &SearchSpace,
    sides: [(&[MechanismOutput], Option<&[usize]>); 2],
    base: usize,
    min_count: f64,
    out: &mut Vec<Candidate>,
) {
    let mut offset = base;
    for fam in space.numeric_families() {
        let points = match &fam.layout {
            FamilyLayout::Intervals(b) | FamilyLayout::Equals(b) => b,
        };
        let cum: Vec<Cumulative> = sides
            .iter()
            .map(|&(outputs, subset)| {
                Cumulative::new(&sorted_values(outputs, subset, fam.stat), points)
            })
            .collect();
        match &fam.layout {
            FamilyLayout::Intervals(bounds) => {
                let b = bounds.len();
                let mut idx = offset;
                for i in 0..b {
                    for j in i + 1..b {
                        let c1 = cum[0].lt[j] - cum[0].le[i];
                        let c2 = cum[1].lt[j] - cum[1].le[i];
                        if (c1 + c2) as f64 >= min_count {
                            out.push(Candidate { index: idx, c1, c2 });
                        }
                        idx += 1;
                    }
                }
            }
            FamilyLayout::Equals(values) => {
                for k in 0..values.len() {
                    let c1 = cum[0].le[k] - cum[0].lt[k];
                    let c2 = cum[1].le[k] - cum[1].lt[k];
                    if (c1 + c2) as f64 >= min_count {
                        out.push(Candidate {
                            index: offset + k,
                            c1,
                            c2,
                        });
                    }
                }
            }
        }
        offset += fam.len();
    }
}

/// Hit counts for every event in `space` passing the count filter, in
/// enumeration order. Equivalent to testing each event's membership on every
/// output, but computed from per-output features and sorted statistics.
pub fn count_events(
    space: &SearchSpace,
    outputs: [&[MechanismOutput]; 2],
    reference: &MechanismOutput,
    alphabet: &[Symbol],
    min_count: f64,
) -> Vec<Candidate> {
    let features = outputs.map(|o| Features::new(o, reference, alphabet));
    let mut out = Vec::new();

    for (idx, ev) in space.categorical().iter().enumerate() {
        let count = |f: &Features| -> u32 {
            match ev {
                CategoricalEvent::HammingShell { k, .. } => {
                    f.hamming.iter().filter(|&&h| h as usize == *k).count() as u32
                }
                CategoricalEvent::LengthIs(k) => {
                    f.len.iter().filter(|&&l| l as usize == *k).count() as u32
                }
                CategoricalEvent::CountOfValueIs(s, k) => {
                    let si = alphabet.binary_search(s).expect("symbol from alphabet");
                    f.counts[si].iter().filter(|&&c| c as usize == *k).count() as u32
                }
            }
        };
        let (c1, c2) = (count(&features[0]), count(&features[1]));
        if (c1 + c2) as f64 >= min_count {
            out.push(Candidate { index: idx, c1, c2 });
        }
    }

    let numeric_base = space.categorical().len();
    count_numeric(
        space,
        [(outputs[0], None), (outputs[1], None)],
        numeric_base,
        min_count,
        &mut out,
    );

    let numeric_len = space.len() - numeric_base;
    let numeric_len = numeric_len / (1 + space.product_parts().len());
    for (p, part) in space.product_parts().iter().enumerate() {
        let CategoricalEvent::CountOfValueIs(s, k) = part else {
            unreachable!("product parts are count events")
        };
        let si = alphabet.binary_search(s).expect("symbol from alphabet");
        let subsets: Vec<Vec<usize>> = features
            .iter()
            .map(|f| {
                f.counts[si]
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c as usize == *k)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        // the categorical part alone bounds every product count
        if ((subsets[0].len() + subsets[1].len()) as f64) < min_count {
            continue;
        }
        count_numeric(
            space,
            [
                (outputs[0], Some(&subsets[0])),
                (outputs[1], Some(&subsets[1])),
            ],
            numeric_base + numeric_len * (1 + p),
            min_count,
            &mut out,
        );
    }
    out
}

/// Lower bound on one direction's thinned p-value, or `None` if it exceeds `cap`.
fn direction_bound(a: u32, b: u32, n: u64, cap: f64) -> Option<f64> {
    if a <= b {
        // X is symmetric about s/2 and a <= s/2, so P(X >= a) >= 1/2
        return (0.5 <= cap).then_some(0.5);
    }
    Hypergeometric::new(2 * n, n, (a + b) as u64)
        .expect("counts bounded by n")
        .sf_ge_capped(a as i64, cap)
}

fn candidate_bound(c: &Candidate, n: u64, cap: f64) -> Option<f64> {
    match (
        direction_bound(c.c1, c.c2, n, cap),
        direction_bound(c.c2, c.c1, n, cap),
    ) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

/// Quick ordering heuristic: standardized gap between thinned and raw counts.
fn proxy(c: &Candidate, epsilon: f64) -> f64 {
    let shrink = (-epsilon).exp();
    let total = ((c.c1 + c.c2) as f64).max(1.0).sqrt();
    let top = (c.c1 as f64 * shrink - c.c2 as f64) / total;
    let bot = (c.c2 as f64 * shrink - c.c1 as f64) / total;
    -top.max(bot)
}

/// Running best `(score, tuple, event index)`, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Best {
    score: f64,
    tuple: usize,
    index: usize,
    c1: u32,
    c2: u32,
}

impl Best {
    fn better_than(&self, other: &Option<Best>) -> bool {
        match other {
            None => true,
            Some(o) => (self.score, self.tuple, self.index) < (o.score, o.tuple, o.index),
        }
    }
}

const SEED_EVALUATIONS: usize = 32;
/// Relative slack on pruning comparisons, covering rounding between the two
/// tail computations.
const PRUNE_SLACK: f64 = 1e-9;

fn slack(cap: f64) -> f64 {
    cap * (1.0 + PRUNE_SLACK)
}
const EVAL_BATCH: usize = 512;

fn evaluate(
    c: &Candidate,
    tuple: &TupleScores,
    n: u64,
    epsilon: f64,
    resamples: usize,
    cap: f64,
) -> Option<Best> {
    score_capped(*c, n, epsilon, resamples, tuple.key, cap).map(|score| Best {
        score,
        tuple: tuple.tuple,
        index: c.index,
        c1: c.c1,
        c2: c.c2,
    })
}

fn merge(best: &mut Option<Best>, found: Vec<Best>) {
    for b in found {
        if b.better_than(best) {
            *best = Some(b);
        }
    }
}

/// Surviving candidates of one tuple and its thinning stream.
struct TupleScores {
    tuple: usize,
    key: StreamKey,
    candidates: Vec<Candidate>,
}

/// Evaluates the candidates most likely to score well, to give pruning a
/// tight starting cap.
fn seed_candidates(t: &TupleScores, epsilon: f64) -> Vec<&Candidate> {
    let mut order: Vec<usize> = (0..t.candidates.len()).collect();
    if order.len() > SEED_EVALUATIONS {
        order.select_nth_unstable_by(SEED_EVALUATIONS, |&a, &b| {
            proxy(&t.candidates[a], epsilon)
                .total_cmp(&proxy(&t.candidates[b], epsilon))
                .then(a.cmp(&b))
        });
        order.truncate(SEED_EVALUATIONS);
    }
    order.into_iter().map(|i| &t.candidates[i]).collect()
}

/// Exact minimum over one tuple's candidates, given the best found so far.
fn minimize_tuple(
    t: &TupleScores,
    n: u64,
    epsilon: f64,
    resamples: usize,
    mut best: Option<Best>,
) -> Option<Best> {
    let cap = best.map_or(f64::INFINITY, |b| slack(b.score));
    let mut bounded: Vec<(f64, usize)> = t
        .candidates
        .par_iter()
        .enumerate()
        .filter_map(|(i, c)| candidate_bound(c, n, cap).map(|lb| (lb, i)))
        .collect();
    bounded.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    for batch in bounded.chunks(EVAL_BATCH) {
        let cap = best.map_or(f64::INFINITY, |b| slack(b.score));
        if batch[0].0 > cap {
            break;
        }
        let found: Vec<Best> = batch
            .par_iter()
            .filter(|(lb, _)| *lb <= cap)
            .filter_map(|&(_, i)| evaluate(&t.candidates[i], t, n, epsilon, resamples, cap))
            .collect();
        merge(&mut best, found);
    }
    best
}

/// Picks the `(pair, args, event)` with the smallest exploratory p-value.
///
/// Executions use `key` with phase [`Phase::Select`], lane per tuple and
/// side; thinning uses [`Phase::SelectThinning`], lane per tuple, chunk per
/// event and direction.
pub fn select_event(
    mechanism: &dyn Mechanism,
    epsilon: f64,
    input_list: &[(AdjacentInputPair, MechanismArgs)],
    config: &SelectorConfig,
    key: StreamKey,
) -> Result<SelectionResult> {
    if input_list.is_empty() {
        return Err(Error::invalid("input list is empty"));
    }
    if config.n_select == 0 {
        return Err(Error::invalid("n_select must be positive"));
    }
    let n = config.n_select;
    let min_count = min_hits(n, epsilon);
    let mut spaces = Vec::with_capacity(input_list.len());
    let mut tuples = Vec::with_capacity(input_list.len());

    for (t, (pair, args)) in input_list.iter().enumerate() {
        let exec = key.with_phase(Phase::Select);
        let o1 = collect_outputs(
            mechanism,
            pair.d1(),
            args,
            n,
            exec.with_lane(side_lane(t, 0)),
        )?;
        let o2 = collect_outputs(
            mechanism,
            pair.d2(),
            args,
            n,
            exec.with_lane(side_lane(t, 1)),
        )?;
        let reference = noiseless_reference(mechanism, pair, args)?;
        let obs = Observations::from_samples(o1.iter().chain(&o2));
        let kind = merge_kinds(classify_output_kind(&o1)?, classify_output_kind(&o2)?);
        let space = build_search_space(kind, Arc::clone(&reference), &obs, config.grid_step);
        tuples.push(TupleScores {
            tuple: t,
            key: key.with_phase(Phase::SelectThinning).with_lane(t as u64),
            candidates: count_events(&space, [&o1, &o2], &reference, &obs.alphabet, min_count),
        });
        spaces.push(space);
    }

    let (n64, r) = (n as u64, config.resamples);
    let seeds: Vec<Best> = tuples
        .par_iter()
        .flat_map_iter(|t| {
            seed_candidates(t, epsilon)
                .into_iter()
                .filter_map(move |c| evaluate(c, t, n64, epsilon, r, f64::INFINITY))
        })
        .collect();
    let mut best = None;
    merge(&mut best, seeds);
    for t in &tuples {
        best = minimize_tuple(t, n64, epsilon, r, best);
    }

    let best = best.ok_or(Error::NoCandidate { min_count })?;
    let (pair, args) = input_list[best.tuple].clone();
    Ok(SelectionResult {
        pair,
        args,
        event: spaces[best.tuple]
            .get(best.index)
            .expect("index from space"),
        exploratory_pvalue: best.score,
        tuple: best.tuple,
        event_index: best.index,
        counts: CountPair {
            c1: best.c1 as u64,
            c2: best.c2 as u64,
            n: n64,
        },
    })
}

/// Noise-free output on `D1`: the Hamming reference.
pub fn noiseless_reference(
    mechanism: &dyn Mechanism,
    pair: &AdjacentInputPair,
    args: &MechanismArgs,
) -> Result<Arc<MechanismOutput>> {
    let quiet = args.clone().noiseless();
    // noiseless runs draw nothing; any stream will do
    let mut rng = StreamKey::new(0, 0, Phase::User, 0).rng(0);
    Ok(Arc::new(mechanism.execute(pair.d1(), &quiet, &mut rng)?))
}

fn merge_kinds(a: OutputKind, b: OutputKind) -> OutputKind {
    let arity = if a.arity == b.arity {
        a.arity
    } else {
        Arity::Variable
    };
    let atoms = match (a.atoms, b.atoms) {
        (x, y) if x == y => x,
        _ => AtomKind::Mixed,
    };
    OutputKind { arity, atoms }
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: Atom = Atom::Cat(Symbol::Bool(false));
    const T: Atom = Atom::Cat(Symbol::Bool(true));

    fn out(a: &[Atom]) -> MechanismOutput {
        MechanismOutput(a.to_vec())
    }

    #[test]
    fn classification() {
        assert!(classify_output_kind(&[]).is_err());
        let fixed_cat = vec![out(&[Atom::Cat(Symbol::Index(1)), Atom::Cat(Symbol::Index(2))]); 3];
        assert_eq!(
            classify_output_kind(&fixed_cat).unwrap(),
            OutputKind {
                arity: Arity::Fixed(2),
                atoms: AtomKind::Categorical
            }
        );
        let variable = vec![out(&[F, F, T]), out(&[F, F, F, F, T])];
        assert_eq!(
            classify_output_kind(&variable).unwrap(),
            OutputKind {
                arity: Arity::Variable,
                atoms: AtomKind::Categorical
            }
        );
        let mut svt_like = vec![F; 9];
        svt_like.push(Atom::Num(0.3));
        let mixed = vec![out(&svt_like), out(&[F; 4])];
        assert_eq!(
            classify_output_kind(&mixed).unwrap(),
            OutputKind {
                arity: Arity::Variable,
                atoms: AtomKind::Mixed
            }
        );
    }

    #[test]
    fn fixed_categorical_cardinality() {
        let obs = Observations {
            max_len: 5,
            alphabet: (1..=5).map(Symbol::Index).collect(),
            numeric: vec![],
        };
        let reference = Arc::new(out(&[Atom::Cat(Symbol::Index(1)); 5]));
        let kind = OutputKind {
            arity: Arity::Fixed(5),
            atoms: AtomKind::Categorical,
        };
        let space = build_search_space(kind, reference, &obs, 0.2);
        assert_eq!(space.len(), 6 + 5 * 6);
        assert_eq!(space.iter().filter(|e| e.kind() == "hamming").count(), 6);
    }

    #[test]
    fn variable_categorical_adds_lengths() {
        for l in [5usize, 10] {
            let obs = Observations {
                max_len: l,
                alphabet: vec![Symbol::Bool(false), Symbol::Bool(true)],
                numeric: vec![],
            };
            let reference = Arc::new(out(&vec![F; l]));
            let kind = OutputKind {
                arity: Arity::Variable,
                atoms: AtomKind::Categorical,
            };
            let space = build_search_space(kind, reference, &obs, 0.2);
            assert_eq!(space.len(), (l + 1) * (1 + 2 + 1));
        }
    }

    #[test]
    fn numeric_grid_cardinality() {
        let range = StatRange {
            min: -3.0,
            max: 3.0,
            integral: false,
        };
        let bounds = interval_bounds(range, 0.2);
        // -3.2 ..= 3.2 in steps of 0.2 plus two infinities
        assert_eq!(bounds.len(), 33 + 2);
        assert_eq!(bounds[1], -3.2);
        assert_eq!(bounds[2], -3.0);
        assert_eq!(bounds[33], 3.2);
        assert!(bounds.windows(2).all(|w| w[0] < w[1]));
        let obs = Observations {
            max_len: 2,
            alphabet: vec![],
            numeric: vec![
                (NumericStat::Coord(0), range),
                (NumericStat::Coord(1), range),
                (NumericStat::Agg(Agg::Avg), range),
                (NumericStat::Agg(Agg::Min), range),
                (NumericStat::Agg(Agg::Max), range),
            ],
        };
        let kind = OutputKind {
            arity: Arity::Fixed(2),
            atoms: AtomKind::Numeric,
        };
        let space = build_search_space(kind, Arc::new(out(&[])), &obs, 0.2);
        assert_eq!(space.len(), 5 * (35 * 34 / 2));
        // enumeration covers every ordered pair exactly once
        let fam = &space.numeric_families()[0];
        let seen: BTreeSet<String> = (0..fam.len()).map(|i| fam.get(i).to_string()).collect();
        assert_eq!(seen.len(), fam.len());
    }

    #[test]
    fn integral_coordinates_use_equality_events() {
        let obs = Observations {
            max_len: 1,
            alphabet: vec![],
            numeric: vec![(
                NumericStat::Coord(0),
                StatRange {
                    min: 1.0,
                    max: 4.0,
                    integral: true,
                },
            )],
        };
        let kind = OutputKind {
            arity: Arity::Fixed(1),
            atoms: AtomKind::Numeric,
        };
        let space = build_search_space(kind, Arc::new(out(&[])), &obs, 0.2);
        let rendered: Vec<String> = space.iter().map(|e| e.to_string()).collect();
        assert_eq!(
            rendered,
            [
                "coord[0]=1.0",
                "coord[0]=2.0",
                "coord[0]=3.0",
                "coord[0]=4.0"
            ]
        );
    }

    #[test]
    fn scalar_outputs_skip_duplicate_aggregates() {
        let samples = [out(&[Atom::Num(0.5)]), out(&[Atom::Num(-1.0)])];
        let obs = Observations::from_samples(&samples);
        assert_eq!(obs.numeric.len(), 1);
        let samples = [out(&[Atom::Num(0.5), Atom::Num(1.5)])];
        assert_eq!(Observations::from_samples(&samples).numeric.len(), 5);
        // one numeric per output: only avg among the aggregates
        let samples = [out(&[F, Atom::Num(0.5)]), out(&[Atom::Num(1.5)])];
        let stats: Vec<String> = Observations::from_samples(&samples)
            .numeric
            .iter()
            .map(|(s, _)| s.to_string())
            .collect();
        assert_eq!(stats, ["coord[0]", "coord[1]", "avg()"]);
    }

    #[test]
    fn mixed_space_contains_svt_style_products() {
        let released = |v: f64| {
            let mut a = vec![F; 9];
            a.push(Atom::Num(v));
            out(&a)
        };
        let samples = [released(-2.3), released(2.3), out(&[F, F, Atom::Num(3.1)])];
        let obs = Observations::from_samples(&samples);
        let kind = classify_output_kind(&samples).unwrap();
        let space = build_search_space(kind, Arc::new(out(&[F; 10])), &obs, 0.2);
        let rendered: BTreeSet<String> = space.iter().map(|e| e.to_string()).collect();
        assert!(rendered.contains("count(False)=9&coord[9]in(-2.4,2.4)"));
        assert!(rendered.contains("hamming=0"));
        assert!(rendered.contains("len=10"));
    }

    fn brute_counts(
        space: &SearchSpace,
        sides: [&[MechanismOutput]; 2],
        min: f64,
    ) -> Vec<Candidate> {
        space
            .iter()
            .enumerate()
            .filter_map(|(index, e)| {
                let c1 = sides[0].iter().filter(|o| e.contains(o)).count() as u32;
                let c2 = sides[1].iter().filter(|o| e.contains(o)).count() as u32;
                ((c1 + c2) as f64 >= min).then_some(Candidate { index, c1, c2 })
            })
            .collect()
    }

    #[test]
    fn fast_counts_match_membership() {
        let mut rng = StreamKey::new(3, 0, Phase::User, 0).rng(0);
        use rand::Rng;
        let mut gen = |n: usize| -> Vec<MechanismOutput> {
            (0..n)
                .map(|_| {
                    let len = rng.random_range(1..5);
                    let mut v: Vec<Atom> = (0..len - 1)
                        .map(|_| Atom::Cat(Symbol::Bool(rng.random_bool(0.3))))
                        .collect();
                    v.push(if rng.random_bool(0.5) {
                        Atom::Num((rng.random::<f64>() * 2.0 - 1.0).round() / 2.0 + 0.1)
                    } else {
                        F
                    });
                    MechanismOutput(v)
                })
                .collect()
        };
        let (a, b) = (gen(300), gen(300));
        let reference = Arc::new(out(&[F, T, F]));
        let obs = Observations::from_samples(a.iter().chain(&b));
        let kind = merge_kinds(
            classify_output_kind(&a).unwrap(),
            classify_output_kind(&b).unwrap(),
        );
        let space = build_search_space(kind, Arc::clone(&reference), &obs, 0.5);
        for min in [0.0, 5.0] {
            let fast = count_events(&space, [&a, &b], &reference, &obs.alphabet, min);
            assert_eq!(fast, brute_counts(&space, [&a, &b], min));
        }
    }

    #[test]
    fn bound_never_exceeds_score() {
        let key = StreamKey::new(1, 0, Phase::SelectThinning, 0);
        for (c1, c2) in [(50, 10), (10, 50), (30, 30), (100, 0), (7, 5)] {
            let c = Candidate { index: 3, c1, c2 };
            let lb = candidate_bound(&c, 100, f64::INFINITY).unwrap();
            for eps in [0.0, 0.3, 1.0] {
                assert!(lb <= score_candidate(c, 100, eps, 10, key) + 1e-15);
            }
        }
    }
}
