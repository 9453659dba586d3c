//! Domain types shared by the mechanisms, the selector and the detector.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector of query answers standing in for a database.
///
/// Mechanisms never see raw records; adjacency is expressed directly on the
/// answers, as in `D1 = [1, 1, 1, 1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QueryAnswerVector(Vec<f64>);

impl QueryAnswerVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("query answer vector must be non-empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("query answer {v} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<f64>> for QueryAnswerVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<QueryAnswerVector> for Vec<f64> {
    fn from(v: QueryAnswerVector) -> Self {
        v.0
    }
}

/// Serialized as `[a;b;c]`.
impl fmt::Display for QueryAnswerVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{}", format_real(*v))?;
        }
        f.write_str("]")
    }
}

/// Formats a real with the shortest round-tripping representation, keeping a
/// trailing `.0` on integral values and spelling infinities `inf`/`-inf`.
pub fn format_real(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_owned()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_owned()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Which notion of neighbouring inputs a mechanism is analysed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjacency {
    /// At most one answer changes, by at most the sensitivity.
    Histogram,
    /// Every answer may change, each by at most the sensitivity.
    PerQuery,
}

/// The seven database patterns used to build candidate neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    OneAbove,
    OneBelow,
    OneAboveRestBelow,
    OneBelowRestAbove,
    HalfHalf,
    AllAboveAllBelow,
    XShape,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::OneAbove,
        Category::OneBelow,
        Category::OneAboveRestBelow,
        Category::OneBelowRestAbove,
        Category::HalfHalf,
        Category::AllAboveAllBelow,
        Category::XShape,
    ];

    pub fn adjacency(self) -> Adjacency {
        match self {
            Category::OneAbove | Category::OneBelow => Adjacency::Histogram,
            _ => Adjacency::PerQuery,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::OneAbove => "one_above",
            Category::OneBelow => "one_below",
            Category::OneAboveRestBelow => "one_above_rest_below",
            Category::OneBelowRestAbove => "one_below_rest_above",
            Category::HalfHalf => "half_half",
            Category::AllAboveAllBelow => "all_above_all_below",
            Category::XShape => "x_shape",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Two neighbouring inputs together with the pattern that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacentInputPair {
    d1: QueryAnswerVector,
    d2: QueryAnswerVector,
    category: Category,
    sensitivity: f64,
}

impl AdjacentInputPair {
    /// Validates the adjacency invariant of `category` before constructing.
    pub fn new(
        d1: QueryAnswerVector,
        d2: QueryAnswerVector,
        category: Category,
        sensitivity: f64,
    ) -> Result<Self> {
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(Error::invalid(format!(
                "sensitivity must be positive and finite, got {sensitivity}"
            )));
        }
        if d1.len() != d2.len() {
            return Err(Error::invalid(format!(
                "adjacent inputs differ in length ({} vs {})",
                d1.len(),
                d2.len()
            )));
        }
        let diffs: Vec<f64> = d1
            .values()
            .iter()
            .zip(d2.values())
            .map(|(a, b)| (a - b).abs())
            .collect();
        if diffs.iter().any(|&d| d > sensitivity) {
            return Err(Error::invalid(format!(
                "{category}: a coordinate differs by more than the sensitivity {sensitivity}"
            )));
        }
        if category.adjacency() == Adjacency::Histogram {
            let changed = diffs.iter().filter(|&&d| d > 0.0).count();
            if changed != 1 {
                return Err(Error::invalid(format!(
                    "{category}: histogram neighbours must differ in exactly one coordinate, found {changed}"
                )));
            }
        }
        Ok(Self {
            d1,
            d2,
            category,
            sensitivity,
        })
    }

    pub fn d1(&self) -> &QueryAnswerVector {
        &self.d1
    }

    pub fn d2(&self) -> &QueryAnswerVector {
        &self.d2
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn len(&self) -> usize {
        self.d1.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Auxiliary arguments handed to a mechanism alongside its input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismArgs {
    /// Claimed privacy budget.
    pub epsilon0: f64,
    pub threshold: Option<f64>,
    pub bound: Option<u32>,
    pub sensitivity: f64,
    /// Force every noise draw to zero.
    pub noiseless: bool,
}

impl MechanismArgs {
    pub fn new(epsilon0: f64, sensitivity: f64) -> Result<Self> {
        if !(epsilon0 > 0.0 && epsilon0.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon0 must be positive and finite, got {epsilon0}"
            )));
        }
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(Error::invalid(format!(
                "sensitivity must be positive and finite, got {sensitivity}"
            )));
        }
        Ok(Self {
            epsilon0,
            threshold: None,
            bound: None,
            sensitivity,
            noiseless: false,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }

    pub fn with_bound(mut self, bound: u32) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn noiseless(mut self) -> Self {
        self.noiseless = true;
        self
    }
}

/// Compact `key=value` rendering used in reports, e.g. `eps0=0.7;T=1.5;N=1;delta=1.0`.
impl fmt::Display for MechanismArgs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eps0={}", format_real(self.epsilon0))?;
        if let Some(t) = self.threshold {
            write!(f, ";T={}", format_real(t))?;
        }
        if let Some(n) = self.bound {
            write!(f, ";N={n}")?;
        }
        write!(f, ";delta={}", format_real(self.sensitivity))?;
        if self.noiseless {
            f.write_str(";noiseless")?;
        }
        Ok(())
    }
}

/// A categorical output symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Bool(bool),
    /// A 1-based position, as returned by argmax-style mechanisms.
    Index(u32),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Bool(true) => f.write_str("True"),
            Symbol::Bool(false) => f.write_str("False"),
            Symbol::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Atom {
    Cat(Symbol),
    Num(f64),
}

impl Atom {
    pub fn as_num(&self) -> Option<f64> {
        match *self {
            Atom::Num(v) => Some(v),
            Atom::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<Symbol> {
        match *self {
            Atom::Cat(s) => Some(s),
            Atom::Num(_) => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Cat(s) => write!(f, "{s}"),
            Atom::Num(v) => f.write_str(&format_real(*v)),
        }
    }
}

/// One execution's output: an ordered list of atoms, in emission order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MechanismOutput(pub Vec<Atom>);

impl MechanismOutput {
    pub fn entries(&self) -> &[Atom] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn numerics(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().filter_map(Atom::as_num)
    }

    pub fn count_of(&self, symbol: Symbol) -> usize {
        self.0.iter().filter(|a| a.as_cat() == Some(symbol)).count()
    }
}

impl fmt::Display for MechanismOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arity {
    Fixed(usize),
    Variable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Categorical,
    Numeric,
    Mixed,
}

/// Shape of a mechanism's outputs: length regime times atom regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutputKind {
    pub arity: Arity,
    pub atoms: AtomKind,
}

impl OutputKind {
    pub fn is_variable(&self) -> bool {
        self.arity == Arity::Variable
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arity = match self.arity {
            Arity::Fixed(_) => "fixed",
            Arity::Variable => "variable",
        };
        let atoms = match self.atoms {
            AtomKind::Categorical => "categorical",
            AtomKind::Numeric => "numeric",
            AtomKind::Mixed => "mixed",
        };
        write!(f, "{arity}-{atoms}")
    }
}
