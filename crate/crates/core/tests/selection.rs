use std::sync::Arc;

use dpwitness::inputs::input_list;
use dpwitness::mechanisms::lookup;
use dpwitness::rng::side_lane;
use dpwitness::sampling::collect_outputs;
use dpwitness::selector::{
    build_search_space, classify_output_kind, count_events, min_hits, noiseless_reference,
    score_candidate, select_event, Observations, SelectorConfig,
};
use dpwitness::stats::pvalue;
use dpwitness::types::{Adjacency, Arity, AtomKind, OutputKind};
use dpwitness::{
    AdjacentInputPair, Atom, Error, Mechanism, MechanismArgs, MechanismOutput, Phase,
    QueryAnswerVector, StreamKey, Symbol,
};

/// Brute-force selection: score every filtered candidate of every tuple.
fn exhaustive(
    mechanism: &dyn Mechanism,
    eps: f64,
    list: &[(AdjacentInputPair, MechanismArgs)],
    config: &SelectorConfig,
    key: StreamKey,
) -> Option<(f64, usize, usize)> {
    let n = config.n_select;
    let mut best: Option<(f64, usize, usize)> = None;
    for (t, (pair, args)) in list.iter().enumerate() {
        let exec = key.with_phase(Phase::Select);
        let o1 = collect_outputs(
            mechanism,
            pair.d1(),
            args,
            n,
            exec.with_lane(side_lane(t, 0)),
        )
        .unwrap();
        let o2 = collect_outputs(
            mechanism,
            pair.d2(),
            args,
            n,
            exec.with_lane(side_lane(t, 1)),
        )
        .unwrap();
        let all: Vec<MechanismOutput> = o1.iter().chain(&o2).cloned().collect();
        let kind = classify_output_kind(&all).unwrap();
        let reference = noiseless_reference(mechanism, pair, args).unwrap();
        let obs = Observations::from_samples(&all);
        let space = build_search_space(kind, Arc::clone(&reference), &obs, config.grid_step);
        let thinning = key.with_phase(Phase::SelectThinning).with_lane(t as u64);
        for c in count_events(
            &space,
            [&o1, &o2],
            &reference,
            &obs.alphabet,
            min_hits(n, eps),
        ) {
            let s = score_candidate(c, n as u64, eps, config.resamples, thinning);
            let cand = (s, t, c.index);
            let better = best.is_none_or(|b| {
                s.total_cmp(&b.0)
                    .then(t.cmp(&b.1))
                    .then(c.index.cmp(&b.2))
                    .is_lt()
            });
            if better {
                best = Some(cand);
            }
        }
    }
    best
}

#[test]
fn pruned_search_finds_the_exhaustive_minimum() {
    let cases = [
        ("noisy_max_lap", 0.7, 0.5),
        ("noisy_max_lap_value", 0.2, 0.4),
        ("histogram", 1.0, 0.6),
        ("svt", 0.5, 0.4),
        ("isvt3", 0.2, 0.3),
        ("isvt4", 0.7, 0.7),
    ];
    for (name, eps0, eps) in cases {
        let m = lookup(name).unwrap();
        let list = input_list(m.as_ref(), eps0).unwrap();
        let config = SelectorConfig {
            n_select: 3000,
            ..SelectorConfig::default()
        };
        let key = StreamKey::new(3, 1, Phase::Select, 0);
        let got = select_event(m.as_ref(), eps, &list, &config, key).unwrap();
        let (score, tuple, index) = exhaustive(m.as_ref(), eps, &list, &config, key).unwrap();
        assert_eq!(
            (got.exploratory_pvalue.to_bits(), got.tuple, got.event_index),
            (score.to_bits(), tuple, index),
            "{name}"
        );
    }
}

#[test]
fn candidate_score_is_min_of_two_directional_pvalues() {
    let key = StreamKey::new(9, 2, Phase::SelectThinning, 4);
    let m = lookup("svt").unwrap();
    let list = input_list(m.as_ref(), 0.5).unwrap();
    let (pair, args) = &list[5];
    let n = 4000;
    let o1 = collect_outputs(m.as_ref(), pair.d1(), args, n, key.with_lane(0)).unwrap();
    let o2 = collect_outputs(m.as_ref(), pair.d2(), args, n, key.with_lane(1)).unwrap();
    let all: Vec<MechanismOutput> = o1.iter().chain(&o2).cloned().collect();
    let reference = noiseless_reference(m.as_ref(), pair, args).unwrap();
    let obs = Observations::from_samples(&all);
    let space = build_search_space(
        classify_output_kind(&all).unwrap(),
        reference.clone(),
        &obs,
        0.2,
    );
    let candidates = count_events(&space, [&o1, &o2], &reference, &obs.alphabet, 0.0);
    assert!(!candidates.is_empty());
    for c in candidates {
        let (c1, c2) = (c.c1 as u64, c.c2 as u64);
        let i = 2 * c.index as u64;
        let top = pvalue(c1, c2, n as u64, 0.3, &mut key.rng(i), 10).unwrap();
        let bot = pvalue(c2, c1, n as u64, 0.3, &mut key.rng(i + 1), 10).unwrap();
        assert_eq!(score_candidate(c, n as u64, 0.3, 10, key), top.min(bot));
    }
}

/// Returns the same output regardless of input or randomness.
struct Constant;

impl Mechanism for Constant {
    fn name(&self) -> &str {
        "constant"
    }

    fn output_kind(&self, _: usize) -> OutputKind {
        OutputKind {
            arity: Arity::Fixed(2),
            atoms: AtomKind::Categorical,
        }
    }

    fn adjacency(&self) -> Adjacency {
        Adjacency::PerQuery
    }

    fn execute(
        &self,
        _: &QueryAnswerVector,
        _: &MechanismArgs,
        _: &mut dyn rand::RngCore,
    ) -> dpwitness::Result<MechanismOutput> {
        Ok(MechanismOutput(vec![
            Atom::Cat(Symbol::Bool(true)),
            Atom::Cat(Symbol::Bool(false)),
        ]))
    }
}

#[test]
fn constant_mechanism_never_rejects() {
    let list = input_list(&Constant, 1.0).unwrap();
    let config = SelectorConfig {
        n_select: 2000,
        ..SelectorConfig::default()
    };
    let key = StreamKey::new(0, 0, Phase::Select, 0);
    let chosen = select_event(&Constant, 0.5, &list, &config, key).unwrap();
    assert!(chosen.exploratory_pvalue > 0.99);
    assert_eq!(chosen.counts.c1, chosen.counts.c2);

    let mut det = dpwitness::DetectionConfig::new("constant", 1.0);
    det.test_epsilons = vec![0.0, 0.5];
    det.n_select = 2000;
    det.n_detect = 5000;
    for p in dpwitness::sweep(&Constant, &det).unwrap() {
        assert!(p.outcome.unwrap().min_p() >= det.alpha);
    }
}

#[test]
fn empty_input_list_is_an_error() {
    let m = lookup("svt").unwrap();
    let err = select_event(
        m.as_ref(),
        0.5,
        &[],
        &SelectorConfig::default(),
        StreamKey::new(0, 0, Phase::Select, 0),
    );
    assert!(matches!(err, Err(Error::InvalidParameter(_))));
}
