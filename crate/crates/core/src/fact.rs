//! Ground atoms, their interning table, and bitset states.

use std::fmt;

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashMap;

/// Dense id of an interned fact.
pub type FactId = usize;

/// A ground atom such as `at-robot(L1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new<S: Into<String>>(predicate: S, args: Vec<String>) -> Self {
        Fact {
            predicate: predicate.into(),
            args,
        }
    }

    /// Builds a fact from string slices, mostly for tests and generators.
    pub fn of(predicate: &str, args: &[&str]) -> Self {
        Fact::new(predicate, args.iter().map(|a| a.to_string()).collect())
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a)?;
        }
        f.write_str(")")
    }
}

/// Interns facts into dense ids in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct FactTable {
    facts: Vec<Fact>,
    index: FxHashMap<Fact, FactId>,
}

impl FactTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, fact: Fact) -> FactId {
        if let Some(&id) = self.index.get(&fact) {
            return id;
        }
        let id = self.facts.len();
        self.index.insert(fact.clone(), id);
        self.facts.push(fact);
        id
    }

    pub fn id(&self, fact: &Fact) -> Option<FactId> {
        self.index.get(fact).copied()
    }

    pub fn get(&self, id: FactId) -> &Fact {
        &self.facts[id]
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactId, &Fact)> {
        self.facts.iter().enumerate()
    }
}

/// A closed-world state: the set of true fact ids.
///
/// Ids beyond the current capacity read as false, and inserting grows the
/// set, so world states can outgrow the task universe.
#[derive(Debug, Clone, Default)]
pub struct State {
    bits: FixedBitSet,
}

impl State {
    pub fn new(universe: usize) -> Self {
        State {
            bits: FixedBitSet::with_capacity(universe),
        }
    }

    pub fn from_facts<I: IntoIterator<Item = FactId>>(universe: usize, facts: I) -> Self {
        let mut s = State::new(universe);
        for f in facts {
            s.insert(f);
        }
        s
    }

    pub fn contains(&self, f: FactId) -> bool {
        self.bits.contains(f)
    }

    pub fn insert(&mut self, f: FactId) {
        if f >= self.bits.len() {
            self.bits.grow(f + 1);
        }
        self.bits.insert(f);
    }

    pub fn remove(&mut self, f: FactId) {
        if f < self.bits.len() {
            self.bits.set(f, false);
        }
    }

    pub fn set(&mut self, f: FactId, value: bool) {
        if value {
            self.insert(f)
        } else {
            self.remove(f)
        }
    }

    pub fn contains_all(&self, facts: &[FactId]) -> bool {
        facts.iter().all(|&f| self.contains(f))
    }

    pub fn iter(&self) -> impl Iterator<Item = FactId> + '_ {
        self.bits.ones()
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn capacity(&self) -> usize {
        self.bits.len()
    }

    /// Resizes to exactly `universe` bits, dropping facts beyond it.
    pub fn resized(&self, universe: usize) -> State {
        let mut s = State::new(universe);
        for f in self.iter().filter(|&f| f < universe) {
            s.bits.insert(f);
        }
        s
    }

    /// Raw blocks, used as a compact hash key during search.
    pub fn blocks(&self) -> &[usize] {
        self.bits.as_slice()
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.bits.as_slice(), other.bits.as_slice());
        let n = a.len().max(b.len());
        (0..n).all(|i| a.get(i).copied().unwrap_or(0) == b.get(i).copied().unwrap_or(0))
    }
}

impl Eq for State {}
