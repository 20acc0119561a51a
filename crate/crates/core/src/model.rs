//! Menus, buyer types and best responses.
//!
//! A mechanism is described by its menu: a finite list of outcomes
//! `(q1, q2; t)` giving the probability of awarding each good and the price.
//! The null outcome `(0, 0; 0)` is always available to the buyer and is never
//! stored explicitly; it still counts toward the menu size.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Utilities closer than this are treated as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MenuEntry {
    q1: f64,
    q2: f64,
    t: f64,
}

impl MenuEntry {
    pub fn new(q1: f64, q2: f64, t: f64) -> Result<Self> {
        if !(q1.is_finite() && q2.is_finite() && t.is_finite()) {
            return Err(Error::InvalidEntry(format!("non-finite field in ({q1}, {q2}; {t})")));
        }
        if !(0.0..=1.0).contains(&q1) || !(0.0..=1.0).contains(&q2) {
            return Err(Error::InvalidEntry(format!(
                "allocation probabilities must lie in [0,1], got ({q1}, {q2})"
            )));
        }
        if t < 0.0 {
            return Err(Error::InvalidEntry(format!("negative price {t}")));
        }
        Ok(Self { q1, q2, t })
    }

    pub const fn null() -> Self {
        Self { q1: 0.0, q2: 0.0, t: 0.0 }
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn q2(&self) -> f64 {
        self.q2
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn is_null(&self) -> bool {
        self.q1 == 0.0 && self.q2 == 0.0 && self.t == 0.0
    }

    /// Quasilinear utility `q1 v1 + q2 v2 - t`.
    pub fn utility(&self, v: BuyerType) -> f64 {
        self.q1 * v.v1 + self.q2 * v.v2 - self.t
    }

    pub(crate) fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.q1.total_cmp(&other.q1))
            .then(self.q2.total_cmp(&other.q2))
    }
}

impl fmt::Display for MenuEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.q1, self.q2, self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuyerType {
    pub v1: f64,
    pub v2: f64,
}

impl BuyerType {
    pub const fn new(v1: f64, v2: f64) -> Self {
        Self { v1, v2 }
    }
}

/// A canonical menu: no exact duplicates and no explicit null entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Menu {
    entries: Vec<MenuEntry>,
}

impl Menu {
    pub fn new(entries: impl IntoIterator<Item = MenuEntry>) -> Self {
        let mut out: Vec<MenuEntry> = Vec::new();
        for e in entries {
            if !e.is_null() && !out.contains(&e) {
                out.push(e);
            }
        }
        Self { entries: out }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a menu from `(q1, q2, t)` triples, validating each.
    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self> {
        let entries = triples
            .iter()
            .map(|&(q1, q2, t)| MenuEntry::new(q1, q2, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(entries))
    }

    pub fn entries(&self) -> &[MenuEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn with_entry(&self, e: MenuEntry) -> Menu {
        Menu::new(self.entries.iter().copied().chain(std::iter::once(e)))
    }

    /// Number of distinct outcomes, the null outcome included.
    pub fn menu_size(&self) -> usize {
        self.entries.len() + 1
    }

    /// Index of the entry chosen by type `v`, or `None` for the null outcome.
    ///
    /// Among utility maximizers (within [`TIE_TOL`]) the highest price wins,
    /// then the lowest index; the null outcome sits after every entry. Entries
    /// with negative utility are never chosen.
    pub fn best_index(&self, v: BuyerType) -> Option<usize> {
        let best_u = self
            .entries
            .iter()
            .map(|e| e.utility(v))
            .fold(0.0f64, f64::max);
        let mut chosen: Option<usize> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if e.utility(v) >= best_u - TIE_TOL {
                match chosen {
                    Some(c) if self.entries[c].t >= e.t => {}
                    _ => chosen = Some(i),
                }
            }
        }
        // A zero-price tie with the null outcome keeps the listed entry, which is
        // harmless: both pay nothing.
        chosen
    }

    pub fn best_response(&self, v: BuyerType) -> Option<&MenuEntry> {
        self.best_index(v).map(|i| &self.entries[i])
    }

    pub fn payment(&self, v: BuyerType) -> f64 {
        self.best_response(v).map_or(0.0, |e| e.t)
    }

    /// Induced utility `u(v) = max(0, max_e u_e(v))`.
    pub fn utility_at(&self, v: BuyerType) -> f64 {
        self.entries
            .iter()
            .map(|e| e.utility(v))
            .fold(0.0f64, f64::max)
    }

    /// Parses the plain-text menu format: one `q1 q2 t` entry per line,
    /// `#` starts a comment line, blank lines are ignored.
    pub fn parse(text: &str) -> Result<Menu> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected 3 fields `q1 q2 t`, found {}", fields.len()),
                });
            }
            let mut vals = [0.0; 3];
            for (slot, field) in vals.iter_mut().zip(&fields) {
                *slot = field.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("bad number `{field}`: {e}"),
                })?;
            }
            let entry = MenuEntry::new(vals[0], vals[1], vals[2]).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(Menu::new(entries))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# q1 q2 t\n");
        for e in &self.entries {
            s.push_str(&format!("{e}\n"));
        }
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Menu> {
        Menu::parse(&std::fs::read_to_string(path)?)
    }

    /// Random menu used by test corpora: allocations uniform on `[0,1]`,
    /// prices uniform on `[0, min(1, q1 + q2)]`.
    pub fn random(rng: &mut SplitMix64, entries: usize) -> Menu {
        Menu::new((0..entries).map(|_| {
            let q1 = rng.next_f64();
            let q2 = rng.next_f64();
            let t = rng.next_f64() * (q1 + q2).min(1.0);
            MenuEntry { q1, q2, t }
        }))
    }
}

/// Deterministic communication complexity of running a menu of the given
/// size: `ceil(log2(menu_size))`.
pub fn comm_complexity(menu_size: usize) -> Result<u32> {
    if menu_size == 0 {
        return Err(Error::OutOfRange("menu size must be at least 1".into()));
    }
    Ok(usize::BITS - (menu_size - 1).leading_zeros())
}

/// Corpus of `count` random menus with 1..=`max_entries` entries each.
pub fn random_corpus(count: usize, max_entries: usize, seed: u64) -> Vec<Menu> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| {
            let n = 1 + rng.below(max_entries);
            Menu::random(&mut rng, n)
        })
        .collect()
}
