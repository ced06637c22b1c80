use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::graph::VertexId;

/// Sorted, duplicate-free set of vertex ids; the value type of set-union
/// aggregators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSet(Vec<VertexId>);

impl IdSet {
    pub fn new() -> Self {
        IdSet(Vec::new())
    }

    pub fn singleton(v: VertexId) -> Self {
        IdSet(vec![v])
    }

    pub fn from_unsorted(mut ids: Vec<VertexId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        IdSet(ids)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.0.iter().copied()
    }

    pub fn insert(&mut self, v: VertexId) {
        if let Err(pos) = self.0.binary_search(&v) {
            self.0.insert(pos, v);
        }
    }

    /// Merge-based union.
    pub fn union(&self, other: &IdSet) -> IdSet {
        if other.0.is_empty() {
            return self.clone();
        }
        if self.0.is_empty() {
            return other.clone();
        }
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        IdSet(out)
    }
}

impl FromIterator<VertexId> for IdSet {
    fn from_iter<I: IntoIterator<Item = VertexId>>(iter: I) -> Self {
        IdSet::from_unsorted(iter.into_iter().collect())
    }
}

impl From<&HashSet<VertexId>> for IdSet {
    fn from(set: &HashSet<VertexId>) -> Self {
        IdSet::from_unsorted(set.iter().copied().collect())
    }
}

/// Value held by an aggregator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AggValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Ids(IdSet),
}

impl AggValue {
    pub fn as_bool(&self) -> bool {
        match self {
            AggValue::Bool(b) => *b,
            other => panic!("aggregator holds {other:?}, expected a bool"),
        }
    }

    pub fn as_int(&self) -> i64 {
        match self {
            AggValue::Int(i) => *i,
            other => panic!("aggregator holds {other:?}, expected an integer"),
        }
    }

    pub fn as_float(&self) -> f64 {
        match self {
            AggValue::Float(x) => *x,
            other => panic!("aggregator holds {other:?}, expected a float"),
        }
    }

    pub fn as_ids(&self) -> &IdSet {
        match self {
            AggValue::Ids(s) => s,
            other => panic!("aggregator holds {other:?}, expected an id set"),
        }
    }
}

/// Associative and commutative reduction operators.
///
/// Float sums are deliberately absent: they are not associative in floating
/// point, which would make results depend on the shard layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reducer {
    And,
    Or,
    Sum,
    Min,
    Max,
    Union,
}

impl Reducer {
    pub fn identity(self, like: &AggValue) -> AggValue {
        match (self, like) {
            (Reducer::And, _) => AggValue::Bool(true),
            (Reducer::Or, _) => AggValue::Bool(false),
            (Reducer::Sum, _) => AggValue::Int(0),
            (Reducer::Min, AggValue::Float(_)) => AggValue::Float(f64::INFINITY),
            (Reducer::Max, AggValue::Float(_)) => AggValue::Float(f64::NEG_INFINITY),
            (Reducer::Min, _) => AggValue::Int(i64::MAX),
            (Reducer::Max, _) => AggValue::Int(i64::MIN),
            (Reducer::Union, _) => AggValue::Ids(IdSet::new()),
        }
    }

    pub fn combine(self, acc: &AggValue, value: &AggValue) -> AggValue {
        use AggValue::*;
        match (self, acc, value) {
            (Reducer::And, Bool(a), Bool(b)) => Bool(*a && *b),
            (Reducer::Or, Bool(a), Bool(b)) => Bool(*a || *b),
            (Reducer::Sum, Int(a), Int(b)) => Int(a + b),
            (Reducer::Min, Int(a), Int(b)) => Int(*a.min(b)),
            (Reducer::Max, Int(a), Int(b)) => Int(*a.max(b)),
            (Reducer::Min, Float(a), Float(b)) => Float(a.min(*b)),
            (Reducer::Max, Float(a), Float(b)) => Float(a.max(*b)),
            (Reducer::Union, Ids(a), Ids(b)) => Ids(a.union(b)),
            (r, a, b) => panic!("reducer {r:?} cannot combine {a:?} with {b:?}"),
        }
    }
}

/// Declaration of one aggregator.
#[derive(Clone, Debug)]
pub struct AggregatorSpec {
    pub name: &'static str,
    pub reducer: Reducer,
    pub initial: AggValue,
    /// Persistent aggregators keep accumulating across supersteps instead of
    /// being reset to their initial value.
    pub persistent: bool,
}

/// Handle to a registered aggregator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AggId(pub(crate) usize);

/// The aggregators of one run.
#[derive(Clone, Debug, Default)]
pub struct Aggregators {
    pub(crate) specs: Vec<AggregatorSpec>,
}

impl Aggregators {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &'static str, reducer: Reducer, initial: AggValue) -> AggId {
        self.push(AggregatorSpec {
            name,
            reducer,
            initial,
            persistent: false,
        })
    }

    pub fn register_persistent(&mut self, name: &'static str, reducer: Reducer, initial: AggValue) -> AggId {
        self.push(AggregatorSpec {
            name,
            reducer,
            initial,
            persistent: true,
        })
    }

    fn push(&mut self, spec: AggregatorSpec) -> AggId {
        assert!(
            self.specs.iter().all(|s| s.name != spec.name),
            "aggregator `{}` registered twice",
            spec.name
        );
        self.specs.push(spec);
        AggId(self.specs.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<AggId> {
        self.specs.iter().position(|s| s.name == name).map(AggId)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub(crate) fn initial_values(&self) -> Vec<AggValue> {
        self.specs.iter().map(|s| s.initial.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boolean_reductions() {
        let t = AggValue::Bool(true);
        let f = AggValue::Bool(false);
        assert_eq!(Reducer::And.combine(&t, &f), f);
        assert_eq!(Reducer::And.combine(&t, &t), t);
        assert_eq!(Reducer::Or.combine(&f, &t), t);
    }

    proptest! {
        #[test]
        fn reductions_are_order_independent(
            xs in proptest::collection::vec(-1000i64..1000, 0..40),
            sets in proptest::collection::vec(proptest::collection::vec(0u32..50, 0..6), 0..10),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for r in [Reducer::Sum, Reducer::Min, Reducer::Max] {
                let vals: Vec<AggValue> = xs.iter().map(|&x| AggValue::Int(x)).collect();
                let mut shuffled = vals.clone();
                shuffled.shuffle(&mut rng);
                let id = r.identity(&AggValue::Int(0));
                let a = vals.iter().fold(id.clone(), |acc, v| r.combine(&acc, v));
                let b = shuffled.iter().fold(id, |acc, v| r.combine(&acc, v));
                prop_assert_eq!(a, b);
            }
            let vals: Vec<AggValue> = sets.iter().map(|s| AggValue::Ids(IdSet::from_unsorted(s.clone()))).collect();
            let mut shuffled = vals.clone();
            shuffled.shuffle(&mut rng);
            let id = Reducer::Union.identity(&AggValue::Ids(IdSet::new()));
            let a = vals.iter().fold(id.clone(), |acc, v| Reducer::Union.combine(&acc, v));
            let b = shuffled.iter().fold(id, |acc, v| Reducer::Union.combine(&acc, v));
            let expected: IdSet = sets.iter().flatten().copied().collect();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a, AggValue::Ids(expected));
        }
    }
}
