use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `(n, m, d, b)`-system: `n` processes, at most `m` of which are
/// d-faulty (each may corrupt up to `d` outgoing links per round) and at
/// most `b` of which are Byzantine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub b: usize,
}

impl SystemConfig {
    /// Builds a configuration, checking `n ≥ 1`, `d < n − 1` (when `m > 0`)
    /// and the `m = 0 ⇒ d = 0` convention.
    pub fn new(n: usize, m: usize, d: usize, b: usize) -> Result<Self> {
        let cfg = SystemConfig { n, m, d, b };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.m == 0 && self.d != 0 {
            return Err(Error::InvalidConfig("m = 0 requires d = 0".into()));
        }
        if self.d > 0 && self.d + 1 >= self.n {
            return Err(Error::InvalidConfig(format!(
                "d = {} must be below n - 1 = {}",
                self.d,
                self.n.saturating_sub(1)
            )));
        }
        if self.m + self.b > self.n {
            return Err(Error::InvalidConfig(format!(
                "m + b = {} exceeds n = {}",
                self.m + self.b,
                self.n
            )));
        }
        Ok(())
    }

    /// Solvability with oral messages: `n > max{2m+d, 2d+m, b} + 2b`.
    pub fn resilience_holds(&self) -> bool {
        resilience_holds(self)
    }

    /// Solvability with signed messages: `n > m + d + b`.
    pub fn resilience_holds_signed(&self) -> bool {
        resilience_holds_signed(self)
    }

    /// Condition for the two-round filter: `n ≥ max{2m+2d, b+1} + 2b`.
    pub fn fast_condition_holds(&self) -> bool {
        fast_condition_holds(self)
    }

    /// The same system with partial failures removed: `(n, 0, 0, b)`.
    pub fn without_partial(&self) -> SystemConfig {
        SystemConfig { n: self.n, m: 0, d: 0, b: self.b }
    }
}

pub fn resilience_holds(cfg: &SystemConfig) -> bool {
    let SystemConfig { n, m, d, b } = *cfg;
    n > (2 * m + d).max(2 * d + m).max(b) + 2 * b
}

pub fn resilience_holds_signed(cfg: &SystemConfig) -> bool {
    cfg.n > cfg.m + cfg.d + cfg.b
}

pub fn fast_condition_holds(cfg: &SystemConfig) -> bool {
    let SystemConfig { n, m, d, b } = *cfg;
    n >= (2 * m + 2 * d).max(b + 1) + 2 * b
}
