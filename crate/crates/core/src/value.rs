use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Identifier of a process, in `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub usize);

impl ProcessId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for ProcessId {
    fn from(v: usize) -> Self {
        ProcessId(v)
    }
}

/// A value of the agreement domain.
///
/// The domain is finite and totally ordered with `⊥ < 0 < 1 < 2 < ...`.
/// Internally `⊥` is stored as 0 and the numeric value `v` as `v + 1`.
/// The desk-scale domain used throughout the crate is [`DEFAULT_DOMAIN`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Value(u8);

impl Value {
    pub const BOT: Value = Value(0);
    pub const ZERO: Value = Value(1);
    pub const ONE: Value = Value(2);

    /// The numeric value `v` (not `⊥`).
    pub const fn num(v: u8) -> Value {
        assert!(v < u8::MAX);
        Value(v + 1)
    }

    pub fn is_bot(self) -> bool {
        self.0 == 0
    }

    pub fn as_num(self) -> Option<u8> {
        self.0.checked_sub(1)
    }

    /// Swaps 0 and 1; `⊥` and larger values map to 1.
    pub fn flipped(self) -> Value {
        if self == Value::ONE {
            Value::ZERO
        } else {
            Value::ONE
        }
    }
}

/// `{⊥, 0, 1}` in increasing order.
pub const DEFAULT_DOMAIN: [Value; 3] = [Value::BOT, Value::ZERO, Value::ONE];

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_num() {
            None => f.write_str("⊥"),
            Some(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_num().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Option::<u8>::deserialize(d)? {
            None => Ok(Value::BOT),
            Some(v) if v < u8::MAX => Ok(Value::num(v)),
            Some(v) => Err(serde::de::Error::custom(format!("value {v} out of range"))),
        }
    }
}

/// Multiset counter over values. Small domains only; lookups are linear.
#[derive(Clone, Debug, Default)]
pub(crate) struct Tally {
    counts: Vec<(Value, usize)>,
    total: usize,
}

impl Tally {
    pub(crate) fn new() -> Self {
        Tally::default()
    }

    pub(crate) fn add(&mut self, v: Value) {
        self.total += 1;
        match self.counts.iter_mut().find(|(w, _)| *w == v) {
            Some((_, c)) => *c += 1,
            None => self.counts.push((v, 1)),
        }
    }

    pub(crate) fn total(&self) -> usize {
        self.total
    }

    /// Values whose multiplicity is at least `threshold`, in increasing order.
    pub(crate) fn at_least(&self, threshold: usize) -> Vec<Value> {
        let mut out: Vec<Value> = self
            .counts
            .iter()
            .filter(|(_, c)| *c >= threshold)
            .map(|(v, _)| *v)
            .collect();
        out.sort();
        out
    }

    /// The value held by strictly more than half of the entries.
    pub(crate) fn strict_majority(&self) -> Option<Value> {
        self.counts
            .iter()
            .find(|(_, c)| 2 * c > self.total)
            .map(|(v, _)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_puts_bot_first() {
        assert!(Value::BOT < Value::ZERO);
        assert!(Value::ZERO < Value::ONE);
        assert_eq!(DEFAULT_DOMAIN.iter().max(), Some(&Value::ONE));
    }

    #[test]
    fn json_encoding_uses_null_for_bot() {
        let s = serde_json::to_string(&[Value::BOT, Value::ZERO, Value::ONE]).unwrap();
        assert_eq!(s, "[null,0,1]");
        let back: Vec<Value> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, DEFAULT_DOMAIN.to_vec());
    }

    #[test]
    fn tally_majority_is_strict() {
        let mut t = Tally::new();
        t.add(Value::ZERO);
        t.add(Value::ONE);
        assert_eq!(t.strict_majority(), None);
        t.add(Value::ONE);
        assert_eq!(t.strict_majority(), Some(Value::ONE));
        assert_eq!(t.at_least(2), vec![Value::ONE]);
        assert_eq!(t.total(), 3);
    }
}
