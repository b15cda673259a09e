//! Input models (boolean, numeric, comparison) wrapped with exact query
//! accounting. Oracles are immutable after construction; only their
//! ledgers mutate. Each concurrent trial owns its own oracle + ledger.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Per-run query counter, keyed by subroutine label. The total always
/// equals the sum over labels and is monotone non-decreasing.
#[derive(Debug, Default)]
pub struct QueryLedger {
    counts: RefCell<BTreeMap<&'static str, u64>>,
    total: Cell<u64>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Charge `k` queries to `label`.
    pub fn charge(&self, label: &'static str, k: u64) {
        if k == 0 {
            return;
        }
        *self.counts.borrow_mut().entry(label).or_insert(0) += k;
        self.total.set(self.total.get() + k);
    }

    pub fn total(&self) -> u64 {
        self.total.get()
    }

    pub fn count(&self, label: &str) -> u64 {
        self.counts.borrow().get(label).copied().unwrap_or(0)
    }

    /// Owned copy of the per-label counts, for traces and reports.
    pub fn snapshot(&self) -> BTreeMap<String, u64> {
        self.counts
            .borrow()
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect()
    }
}

/// A hidden vector of bits, read through the ledger one index at a time.
#[derive(Debug)]
pub struct BooleanOracle {
    bits: Vec<u8>,
    ones: u64,
    ledger: QueryLedger,
}

impl BooleanOracle {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::contract("boolean oracle needs n >= 1"));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::contract("boolean oracle entries must be 0 or 1"));
        }
        let ones = bits.iter().map(|&b| u64::from(b)).sum();
        Ok(Self {
            bits,
            ones,
            ledger: QueryLedger::new(),
        })
    }

    /// Oracle with `t` ones among `n` bits. The layout is deterministic
    /// (ones first); algorithms in this crate only interact with bit
    /// oracles through counting-type subroutines, which are layout-blind.
    pub fn with_count(n: u64, t: u64) -> Result<Self> {
        if t > n {
            return Err(Error::contract(format!("t = {t} exceeds n = {n}")));
        }
        let mut bits = vec![0u8; n as usize];
        for b in bits.iter_mut().take(t as usize) {
            *b = 1;
        }
        Self::new(bits)
    }

    pub fn n(&self) -> u64 {
        self.bits.len() as u64
    }

    /// Charged read of one bit.
    pub fn read_bit(&self, i: usize) -> Result<u8> {
        if i >= self.bits.len() {
            return Err(Error::contract(format!(
                "bit index {i} out of range for n = {}",
                self.bits.len()
            )));
        }
        self.ledger.charge("read", 1);
        Ok(self.bits[i])
    }

    /// Simulator-side peek at the number of ones. Free of charge by design:
    /// the simulation layer needs the hidden count to draw outcomes from the
    /// closed-form law; algorithm code must never branch on it.
    pub fn true_count(&self) -> u64 {
        self.ones
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }
}

/// A hidden vector of numbers in [0, 1], read through the ledger.
#[derive(Debug)]
pub struct NumberOracle {
    values: Vec<f64>,
    ledger: QueryLedger,
}

impl NumberOracle {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("number oracle needs n >= 1"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::contract("number oracle values must lie in [0, 1]"));
        }
        Ok(Self {
            values,
            ledger: QueryLedger::new(),
        })
    }

    pub fn n(&self) -> u64 {
        self.values.len() as u64
    }

    /// Charged read of one value.
    pub fn read(&self, i: usize) -> Result<f64> {
        if i >= self.values.len() {
            return Err(Error::contract(format!(
                "value index {i} out of range for n = {}",
                self.values.len()
            )));
        }
        self.ledger.charge("read", 1);
        Ok(self.values[i])
    }

    /// Simulator-side peek at the full value vector (uncharged).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }
}

/// Comparison-model view over a number oracle. Each comparison charges its
/// own ledger once and the backing value ledger twice (both operands are
/// read), staying within the documented 4-value-query emulation bound.
#[derive(Debug)]
pub struct ComparisonOracle {
    backing: NumberOracle,
    ledger: QueryLedger,
}

impl ComparisonOracle {
    pub fn new(backing: NumberOracle) -> Self {
        Self {
            backing,
            ledger: QueryLedger::new(),
        }
    }

    pub fn n(&self) -> u64 {
        self.backing.n()
    }

    /// Charged strict comparison x_i < x_j.
    pub fn compare(&self, i: usize, j: usize) -> Result<bool> {
        let n = self.backing.values.len();
        if i >= n || j >= n {
            return Err(Error::contract(format!(
                "comparison index ({i}, {j}) out of range for n = {n}"
            )));
        }
        self.ledger.charge("compare", 1);
        self.backing.ledger.charge("read", 2);
        Ok(self.backing.values[i] < self.backing.values[j])
    }

    pub fn backing(&self) -> &NumberOracle {
        &self.backing
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }
}

/// Load an input list from a plain text/CSV file: one value per line,
/// blank lines and `#` comments skipped.
pub fn load_values(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let v: f64 = s
            .parse()
            .map_err(|e| Error::contract(format!("line {}: {e}", lineno + 1)))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::contract("input file contains no values"));
    }
    Ok(out)
}
