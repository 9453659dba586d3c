//! Declarative output events.
//!
//! Events render in a small grammar used by reports:
//!
//! | event                              | rendering                          |
//! |------------------------------------|------------------------------------|
//! | Hamming distance to reference = k  | `hamming=9`                        |
//! | output length = k                  | `len=3`                            |
//! | occurrences of a symbol = k        | `count(False)=9`                   |
//! | coordinate in open interval        | `coord[0]in(-inf,1.0)`             |
//! | aggregate of numerics in interval  | `avg()in(-0.2,0.4)`, `min()`, `max()` |
//! | coordinate equals integer          | `coord[2]=3.0`                     |
//! | product of categorical and numeric | `count(False)=9&coord[9]in(-2.4,2.4)` |
//!
//! Coordinates are 0-based positions in the output list.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::types::{format_real, Atom, MechanismOutput, Symbol};

/// Hamming distance between outputs of possibly different lengths: mismatches
/// over the common prefix plus the length difference.
pub fn hamming_distance(a: &[Atom], b: &[Atom]) -> usize {
    let common = a.len().min(b.len());
    let mismatches = a[..common]
        .iter()
        .zip(&b[..common])
        .filter(|(x, y)| x != y)
        .count();
    mismatches + a.len().abs_diff(b.len())
}

/// Open interval `(lo, hi)` with `lo < hi`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::invalid(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", format_real(self.lo), format_real(self.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Agg {
    Avg,
    Min,
    Max,
}

impl Agg {
    pub const ALL: [Agg; 3] = [Agg::Avg, Agg::Min, Agg::Max];

    fn name(self) -> &'static str {
        match self {
            Agg::Avg => "avg",
            Agg::Min => "min",
            Agg::Max => "max",
        }
    }
}

/// A real-valued statistic of an output; `None` when undefined for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericStat {
    Coord(usize),
    Agg(Agg),
}

impl NumericStat {
    pub fn value(&self, out: &MechanismOutput) -> Option<f64> {
        match *self {
            NumericStat::Coord(i) => out.entries().get(i).and_then(Atom::as_num),
            NumericStat::Agg(agg) => {
                let mut it = out.numerics();
                let first = it.next()?;
                let (mut lo, mut hi, mut sum, mut n) = (first, first, first, 1usize);
                for v in it {
                    lo = lo.min(v);
                    hi = hi.max(v);
                    sum += v;
                    n += 1;
                }
                Some(match agg {
                    Agg::Avg => sum / n as f64,
                    Agg::Min => lo,
                    Agg::Max => hi,
                })
            }
        }
    }
}

impl fmt::Display for NumericStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericStat::Coord(i) => write!(f, "coord[{i}]"),
            NumericStat::Agg(a) => write!(f, "{}()", a.name()),
        }
    }
}

/// Events over the categorical structure of an output.
#[derive(Debug, Clone, PartialEq)]
pub enum CategoricalEvent {
    /// Hamming distance to a reference output equals `k`.
    HammingShell {
        reference: Arc<MechanismOutput>,
        k: usize,
    },
    LengthIs(usize),
    CountOfValueIs(Symbol, usize),
}

impl CategoricalEvent {
    pub fn contains(&self, out: &MechanismOutput) -> bool {
        match self {
            CategoricalEvent::HammingShell { reference, k } => {
                hamming_distance(out.entries(), reference.entries()) == *k
            }
            CategoricalEvent::LengthIs(k) => out.len() == *k,
            CategoricalEvent::CountOfValueIs(s, k) => out.count_of(*s) == *k,
        }
    }
}

impl fmt::Display for CategoricalEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CategoricalEvent::HammingShell { k, .. } => write!(f, "hamming={k}"),
            CategoricalEvent::LengthIs(k) => write!(f, "len={k}"),
            CategoricalEvent::CountOfValueIs(s, k) => write!(f, "count({s})={k}"),
        }
    }
}

/// Events over a numeric statistic of an output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumericEvent {
    InInterval(NumericStat, Interval),
    /// Used instead of intervals when every observed value is integral.
    CoordEquals(usize, f64),
}

impl NumericEvent {
    pub fn contains(&self, out: &MechanismOutput) -> bool {
        match self {
            NumericEvent::InInterval(stat, iv) => stat.value(out).is_some_and(|v| iv.contains(v)),
            NumericEvent::CoordEquals(i, k) => {
                NumericStat::Coord(*i).value(out).is_some_and(|v| v == *k)
            }
        }
    }
}

impl fmt::Display for NumericEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericEvent::InInterval(stat, iv) => write!(f, "{stat}in{iv}"),
            NumericEvent::CoordEquals(i, k) => write!(f, "coord[{i}]={}", format_real(*k)),
        }
    }
}

/// A measurable set of outputs, tested by membership.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Categorical(CategoricalEvent),
    Numeric(NumericEvent),
    /// Both parts must hold.
    Product(CategoricalEvent, NumericEvent),
}

impl Event {
    pub fn hamming(reference: Arc<MechanismOutput>, k: usize) -> Self {
        Event::Categorical(CategoricalEvent::HammingShell { reference, k })
    }

    pub fn length_is(k: usize) -> Self {
        Event::Categorical(CategoricalEvent::LengthIs(k))
    }

    pub fn count_of(symbol: Symbol, k: usize) -> Self {
        Event::Categorical(CategoricalEvent::CountOfValueIs(symbol, k))
    }

    pub fn coord_in(i: usize, lo: f64, hi: f64) -> Result<Self> {
        Ok(Event::Numeric(NumericEvent::InInterval(
            NumericStat::Coord(i),
            Interval::new(lo, hi)?,
        )))
    }

    pub fn agg_in(agg: Agg, lo: f64, hi: f64) -> Result<Self> {
        Ok(Event::Numeric(NumericEvent::InInterval(
            NumericStat::Agg(agg),
            Interval::new(lo, hi)?,
        )))
    }

    pub fn contains(&self, out: &MechanismOutput) -> bool {
        match self {
            Event::Categorical(c) => c.contains(out),
            Event::Numeric(n) => n.contains(out),
            Event::Product(c, n) => c.contains(out) && n.contains(out),
        }
    }

    /// Short family name: `hamming`, `length`, `count`, `interval`, `equals` or `product`.
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Categorical(CategoricalEvent::HammingShell { .. }) => "hamming",
            Event::Categorical(CategoricalEvent::LengthIs(_)) => "length",
            Event::Categorical(CategoricalEvent::CountOfValueIs(..)) => "count",
            Event::Numeric(NumericEvent::InInterval(..)) => "interval",
            Event::Numeric(NumericEvent::CoordEquals(..)) => "equals",
            Event::Product(..) => "product",
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Categorical(c) => write!(f, "{c}"),
            Event::Numeric(n) => write!(f, "{n}"),
            Event::Product(c, n) => write!(f, "{c}&{n}"),
        }
    }
}

impl Serialize for Event {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
