//! Dense storage for values indexed by relay paths.
//!
//! Every path starts with the transmitter, so only the labels after it
//! (the *tail*) are encoded. A tail of length `l` is a base-`n` number;
//! tails are laid out by length, shortest first.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{ProcessId, Value};

/// Upper bound on `n^depth` for any stored path tree.
pub const MAX_LEAVES: u64 = 10_000_000;

/// A relay path `p0 p1 … pl`. The first label is always the transmitter.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(pub Vec<ProcessId>);

impl Path {
    pub fn root(transmitter: ProcessId) -> Path {
        Path(vec![transmitter])
    }

    pub fn from_ids(ids: &[usize]) -> Path {
        Path(ids.iter().copied().map(ProcessId).collect())
    }

    pub fn labels(&self) -> &[ProcessId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> ProcessId {
        *self.0.last().expect("paths are nonempty")
    }

    pub fn tail(&self) -> &[ProcessId] {
        &self.0[1..]
    }

    pub fn child(&self, q: ProcessId) -> Path {
        let mut v = self.0.clone();
        v.push(q);
        Path(v)
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.0.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Index arithmetic for all tails of length `0..=depth` over `n` labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSpace {
    n: usize,
    depth: usize,
    /// `offsets[l]` is the index of the first tail of length `l`;
    /// `offsets[depth + 1]` is the total size.
    offsets: Vec<usize>,
    powers: Vec<usize>,
}

impl PathSpace {
    pub fn new(n: usize, depth: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        let leaves = (n as u64).checked_pow(depth as u32);
        if leaves.is_none_or(|l| l > MAX_LEAVES) {
            return Err(Error::TooLarge { n, depth, limit: MAX_LEAVES });
        }
        let mut powers = Vec::with_capacity(depth + 1);
        let mut offsets = Vec::with_capacity(depth + 2);
        let mut p = 1usize;
        let mut off = 0usize;
        for _ in 0..=depth {
            powers.push(p);
            offsets.push(off);
            off += p;
            p *= n;
        }
        offsets.push(off);
        Ok(PathSpace { n, depth, offsets, powers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Maximum tail length.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn size(&self) -> usize {
        self.offsets[self.depth + 1]
    }

    /// Number of tails of length `len`.
    pub fn count(&self, len: usize) -> usize {
        self.powers[len]
    }

    pub fn offset(&self, len: usize) -> usize {
        self.offsets[len]
    }

    #[inline]
    pub fn index(&self, tail: &[ProcessId]) -> usize {
        debug_assert!(tail.len() <= self.depth);
        let mut code = 0usize;
        for p in tail {
            debug_assert!(p.0 < self.n);
            code = code * self.n + p.0;
        }
        self.offsets[tail.len()] + code
    }

    /// Writes the tail stored at `index` into `out`.
    pub fn decode_into(&self, index: usize, out: &mut Vec<ProcessId>) {
        let len = match self.offsets.binary_search(&index) {
            Ok(l) => l,
            Err(l) => l - 1,
        };
        let mut code = index - self.offsets[len];
        out.clear();
        out.resize(len, ProcessId(0));
        for slot in out.iter_mut().rev() {
            *slot = ProcessId(code % self.n);
            code /= self.n;
        }
    }

    pub fn decode(&self, index: usize) -> Vec<ProcessId> {
        let mut v = Vec::new();
        self.decode_into(index, &mut v);
        v
    }

    /// Every tail of length `len`, in increasing code order.
    pub fn tails(&self, len: usize) -> Tails {
        Tails { n: self.n, cur: vec![ProcessId(0); len], done: false }
    }
}

/// Odometer over all label strings of a fixed length.
pub struct Tails {
    n: usize,
    cur: Vec<ProcessId>,
    done: bool,
}

impl Iterator for Tails {
    type Item = Vec<ProcessId>;

    fn next(&mut self) -> Option<Vec<ProcessId>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut i = self.cur.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.cur[i].0 += 1;
            if self.cur[i].0 < self.n {
                break;
            }
            self.cur[i].0 = 0;
        }
        Some(out)
    }
}

/// A total map from paths (transmitter plus `0..=depth` labels) to values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathTable {
    space: PathSpace,
    root: ProcessId,
    values: Vec<Value>,
}

impl PathTable {
    pub fn new(n: usize, depth: usize, root: ProcessId, fill: Value) -> Result<Self> {
        if root.0 >= n {
            return Err(Error::ProcessOutOfRange { id: root.0, n });
        }
        let space = PathSpace::new(n, depth)?;
        let values = vec![fill; space.size()];
        Ok(PathTable { space, root, values })
    }

    pub fn space(&self) -> &PathSpace {
        &self.space
    }

    pub fn root(&self) -> ProcessId {
        self.root
    }

    pub fn depth(&self) -> usize {
        self.space.depth
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn raw(&self) -> &[Value] {
        &self.values
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [Value] {
        &mut self.values
    }

    #[inline]
    pub fn get_tail(&self, tail: &[ProcessId]) -> Value {
        self.values[self.space.index(tail)]
    }

    #[inline]
    pub fn set_tail(&mut self, tail: &[ProcessId], v: Value) {
        let i = self.space.index(tail);
        self.values[i] = v;
    }

    fn check_path(&self, path: &[ProcessId]) -> Result<()> {
        if path.is_empty() || path[0] != self.root || path.len() > self.space.depth + 1 {
            return Err(Error::BadPath(format!("{}", Path(path.to_vec()))));
        }
        if let Some(p) = path.iter().find(|p| p.0 >= self.space.n) {
            return Err(Error::ProcessOutOfRange { id: p.0, n: self.space.n });
        }
        Ok(())
    }

    /// Value at a full path (first label must be the root).
    pub fn get(&self, path: &[ProcessId]) -> Result<Value> {
        self.check_path(path)?;
        Ok(self.get_tail(&path[1..]))
    }

    pub fn set(&mut self, path: &[ProcessId], v: Value) -> Result<()> {
        self.check_path(path)?;
        self.set_tail(&path[1..], v);
        Ok(())
    }

    /// Copy restricted to tails of length `≤ depth`.
    pub fn truncated(&self, depth: usize) -> PathTable {
        assert!(depth <= self.space.depth);
        let space = PathSpace::new(self.space.n, depth).expect("smaller than an existing space");
        let values = self.values[..space.size()].to_vec();
        PathTable { space, root: self.root, values }
    }

    /// All full paths in lexicographic order (each prefix before its
    /// extensions), paired with their values.
    pub fn lexicographic(&self) -> Vec<(Path, Value)> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut stack = vec![Path::root(self.root)];
        while let Some(p) = stack.pop() {
            if p.len() <= self.space.depth {
                for q in (0..self.space.n).rev() {
                    stack.push(p.child(ProcessId(q)));
                }
            }
            let v = self.get_tail(p.tail());
            out.push((p, v));
        }
        out
    }
}
