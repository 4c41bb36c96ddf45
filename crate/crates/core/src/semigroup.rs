//! Invariant semigroups of a single branch.
//!
//! `S_k(f)` is the set of orders of `f^*φ` for function germs `φ` of order at
//! least `k`. Below a bound `B` it is computed exactly as the set of leading
//! exponents of the span of the monomial pullbacks of degree `k..=B`: an
//! echelon form with columns ordered by exponent has one row per achieved
//! order, and each row is an explicit jet realising it.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::germs::{ComponentGerm, Monomial};
use crate::jet::Jet;
use crate::linalg::{Echelon, SparseVec};

/// `S_k` below a bound, with the certified conductor when one was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumericalSemigroup {
    pub k: u32,
    pub bound: u32,
    pub multiplicity: u32,
    pub achieved: BTreeSet<u32>,
    /// Every integer at or above it is achieved; `None` when the bound was
    /// too small to certify.
    pub conductor: Option<u32>,
    /// Jets realising each achieved order, indexed like `achieved`.
    pub witnesses: Vec<Jet>,
}

impl NumericalSemigroup {
    pub fn complete(&self) -> bool {
        self.conductor.is_some()
    }

    pub fn contains(&self, v: u32) -> bool {
        match self.conductor {
            Some(c) if v >= c => true,
            _ => self.achieved.contains(&v),
        }
    }

    /// Smallest positive element.
    pub fn min_positive(&self) -> Option<u32> {
        self.achieved.iter().copied().find(|v| *v > 0)
    }

    /// Positive integers missing below the conductor (or the bound when the
    /// conductor is not certified).
    pub fn gaps(&self) -> Vec<u32> {
        let top = self.conductor.unwrap_or(self.bound + 1);
        (1..top).filter(|v| !self.achieved.contains(v)).collect()
    }

    /// `N_k`, the largest gap; `None` when there is none.
    pub fn largest_gap(&self) -> Option<u32> {
        self.gaps().last().copied()
    }

    pub fn report(&self) -> SemigroupReport {
        SemigroupReport {
            k: self.k,
            achieved_up_to: self.bound,
            achieved: self.achieved.iter().copied().collect(),
            conductor: self.conductor,
            gaps: self.gaps(),
            largest_gap: self.largest_gap(),
            complete: self.complete(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemigroupReport {
    pub k: u32,
    pub achieved_up_to: u32,
    pub achieved: Vec<u32>,
    pub conductor: Option<u32>,
    pub gaps: Vec<u32>,
    pub largest_gap: Option<u32>,
    pub complete: bool,
}

/// Monomials of degree `>= k` whose pullback order can be at most `bound`,
/// skipping coordinates that vanish identically.
fn monomials(c: &ComponentGerm, k: u32, bound: u32) -> Vec<Monomial> {
    let orders: Vec<Option<u32>> = c.coords().iter().map(|j| j.order().finite()).collect();
    let mut out = Vec::new();
    let mut cur = vec![0u32; orders.len()];
    walk(&orders, k, bound, 0, 0, 0, &mut cur, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(
    orders: &[Option<u32>],
    k: u32,
    bound: u32,
    pos: usize,
    degree: u32,
    order: u32,
    cur: &mut Vec<u32>,
    out: &mut Vec<Monomial>,
) {
    if pos == orders.len() {
        if degree >= k {
            out.push(Monomial::new(cur.clone()));
        }
        return;
    }
    let Some(o) = orders[pos] else {
        walk(orders, k, bound, pos + 1, degree, order, cur, out);
        return;
    };
    let mut a = 0;
    while order + a * o <= bound {
        cur[pos] = a;
        walk(orders, k, bound, pos + 1, degree + a, order + a * o, cur, out);
        a += 1;
    }
    cur[pos] = 0;
}

pub fn value_semigroup(c: &ComponentGerm, k: u32, bound: u32) -> Result<NumericalSemigroup> {
    if bound > c.truncation() {
        return Err(Error::LevelTooHigh {
            level: bound,
            truncation: c.truncation(),
        });
    }
    let mult = c.order().finite().ok_or(Error::DegenerateComponent(1))?;
    let c = c.truncate(bound);
    let mut echelon = Echelon::new(bound as usize + 1);
    for mono in monomials(&c, k, bound) {
        let p = c.pullback(&mono);
        let v = SparseVec::from_entries(p.terms().map(|(e, a)| (e as usize, a.clone())));
        echelon.insert(v);
    }
    let achieved: BTreeSet<u32> = echelon.pivots().map(|p| p as u32).collect();
    let witnesses = echelon
        .basis()
        .into_iter()
        .map(|v| Jet::with_constant(v.entries().iter().map(|(e, a)| (*e as u32, a.clone())), bound))
        .collect();
    let conductor = (0..=bound)
        .find(|s| s + mult - 1 <= bound && (*s..s + mult).all(|v| achieved.contains(&v)));
    Ok(NumericalSemigroup {
        k,
        bound,
        multiplicity: mult,
        achieved,
        conductor,
        witnesses,
    })
}

/// The invariant pair `(p, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InvariantPair {
    Pair { p: u32, q: u32 },
    /// Every element found below the bound is a multiple of `p`.
    NoQ { p: u32 },
}

impl InvariantPair {
    pub fn p(&self) -> u32 {
        match *self {
            InvariantPair::Pair { p, .. } | InvariantPair::NoQ { p } => p,
        }
    }

    pub fn q(&self) -> Option<u32> {
        match *self {
            InvariantPair::Pair { q, .. } => Some(q),
            InvariantPair::NoQ { .. } => None,
        }
    }
}

/// `(p, q)` read from `S_0` computed up to the component's truncation.
pub fn invariant_pair(c: &ComponentGerm) -> Result<InvariantPair> {
    let s = value_semigroup(c, 0, c.truncation())?;
    let p = s.min_positive().ok_or(Error::IncompleteSemigroup(s.bound))?;
    Ok(match s.achieved.iter().copied().find(|v| *v > p && v % p != 0) {
        Some(q) => InvariantPair::Pair { p, q },
        None => InvariantPair::NoQ { p },
    })
}

/// `N_k`, the degree of `L_{(k-1)}`-determinacy of a branch in `C^n`,
/// `n >= 2`. Returns `None` when `S_k` has no gaps.
pub fn determinacy_bound(c: &ComponentGerm, k: u32) -> Result<Option<u32>> {
    if c.ambient_dim() < 2 {
        return Err(Error::Unsupported(
            "the semigroup determinacy bound needs a branch in C^n with n >= 2".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let s = value_semigroup(c, k, c.truncation())?;
    if !s.complete() {
        return Err(Error::IncompleteSemigroup(s.bound));
    }
    Ok(s.largest_gap())
}
