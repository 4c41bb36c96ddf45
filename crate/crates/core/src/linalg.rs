//! Sparse exact linear algebra over the rationals.
//!
//! Vectors are sorted `(index, value)` lists without zero entries. [`Echelon`]
//! maintains a reduced row echelon form incrementally: every stored row has a
//! unit pivot at its smallest index and zeros in every other pivot column, so
//! the form is canonical for the span it represents.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::jet::Rational;

/// A sparse vector with strictly increasing indices and no zero entries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SparseVec {
    entries: Vec<(usize, Rational)>,
}

impl SparseVec {
    pub fn new() -> Self {
        SparseVec { entries: Vec::new() }
    }

    /// Build from arbitrary entries; duplicates are summed and zeros dropped.
    pub fn from_entries<I: IntoIterator<Item = (usize, Rational)>>(entries: I) -> Self {
        let mut map: BTreeMap<usize, Rational> = BTreeMap::new();
        for (i, v) in entries {
            *map.entry(i).or_insert_with(Rational::zero) += v;
        }
        SparseVec {
            entries: map.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    pub fn unit(i: usize) -> Self {
        SparseVec {
            entries: vec![(i, Rational::one())],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, Rational)] {
        &self.entries
    }

    pub fn leading(&self) -> Option<(usize, &Rational)> {
        self.entries.first().map(|(i, v)| (*i, v))
    }

    pub fn get(&self, i: usize) -> Rational {
        match self.entries.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(pos) => self.entries[pos].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|(i, _)| *i)
    }

    pub fn scale(&self, s: &Rational) -> SparseVec {
        if s.is_zero() {
            return SparseVec::new();
        }
        SparseVec {
            entries: self.entries.iter().map(|(i, v)| (*i, v * s)).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: &Rational, other: &SparseVec) -> SparseVec {
        if s.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (0, 0);
        while a < self.entries.len() || b < other.entries.len() {
            let ia = self.entries.get(a).map(|e| e.0).unwrap_or(usize::MAX);
            let ib = other.entries.get(b).map(|e| e.0).unwrap_or(usize::MAX);
            if ia < ib {
                out.push(self.entries[a].clone());
                a += 1;
            } else if ib < ia {
                out.push((ib, &other.entries[b].1 * s));
                b += 1;
            } else {
                let v = &self.entries[a].1 + &other.entries[b].1 * s;
                if !v.is_zero() {
                    out.push((ia, v));
                }
                a += 1;
                b += 1;
            }
        }
        SparseVec { entries: out }
    }

    pub fn add(&self, other: &SparseVec) -> SparseVec {
        self.axpy(&Rational::one(), other)
    }

    pub fn sub(&self, other: &SparseVec) -> SparseVec {
        self.axpy(&-Rational::one(), other)
    }

    /// Reindex through `f`, which must be injective.
    pub fn map_indices<F: Fn(usize) -> usize>(&self, f: F) -> SparseVec {
        SparseVec::from_entries(self.entries.iter().map(|(i, v)| (f(*i), v.clone())))
    }

    /// Keep only entries whose index satisfies `keep`.
    pub fn filter<F: Fn(usize) -> bool>(&self, keep: F) -> SparseVec {
        SparseVec {
            entries: self
                .entries
                .iter()
                .filter(|(i, _)| keep(*i))
                .cloned()
                .collect(),
        }
    }
}

/// One stored row, optionally carrying the combination of inserted vectors
/// that produced it.
#[derive(Clone, Debug)]
struct Row {
    vec: SparseVec,
    combo: Option<SparseVec>,
}

/// Incremental reduced row echelon form.
#[derive(Clone, Debug)]
pub struct Echelon {
    dim: usize,
    rows: BTreeMap<usize, Row>,
    track: bool,
    inserted: usize,
}

/// Outcome of reducing a vector against an [`Echelon`].
#[derive(Clone, Debug)]
pub struct Reduction {
    pub residual: SparseVec,
    /// Coefficients over inserted vectors such that
    /// `v = residual + sum combo[i] * inserted[i]` (tracked forms only).
    pub combo: Option<SparseVec>,
}

impl Echelon {
    pub fn new(dim: usize) -> Self {
        Echelon {
            dim,
            rows: BTreeMap::new(),
            track: false,
            inserted: 0,
        }
    }

    /// An echelon form that records, for each row, the combination of
    /// inserted vectors it came from.
    pub fn tracked(dim: usize) -> Self {
        Echelon {
            track: true,
            ..Echelon::new(dim)
        }
    }

    pub fn from_vectors<'a, I: IntoIterator<Item = &'a SparseVec>>(dim: usize, vs: I) -> Self {
        let mut e = Echelon::new(dim);
        for v in vs {
            e.insert(v.clone());
        }
        e
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.rows.contains_key(&col)
    }

    /// Rows in increasing pivot order.
    pub fn basis(&self) -> Vec<SparseVec> {
        self.rows.values().map(|r| r.vec.clone()).collect()
    }

    pub fn reduce(&self, v: &SparseVec) -> Reduction {
        let mut residual = v.clone();
        let mut combo = self.track.then(SparseVec::new);
        // Rows are fully reduced, so eliminating one pivot never introduces
        // another pivot column; a single pass over the original support works.
        for (col, _) in v.entries() {
            if let Some(row) = self.rows.get(col) {
                let c = residual.get(*col);
                if c.is_zero() {
                    continue;
                }
                residual = residual.axpy(&-c.clone(), &row.vec);
                if let (Some(acc), Some(rc)) = (combo.as_mut(), row.combo.as_ref()) {
                    *acc = acc.axpy(&c, rc);
                }
            }
        }
        Reduction { residual, combo }
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).residual.is_zero()
    }

    /// Insert a vector. Returns `None` if it was independent; otherwise the
    /// dependency (on previously inserted vectors) is returned when tracking,
    /// or an empty vector when not.
    pub fn insert(&mut self, v: SparseVec) -> Option<SparseVec> {
        debug_assert!(v.max_index().is_none_or(|i| i < self.dim));
        let idx = self.inserted;
        self.inserted += 1;
        let red = self.reduce(&v);
        if red.residual.is_zero() {
            return Some(red.combo.unwrap_or_default());
        }
        let mut residual = red.residual;
        let mut combo = red
            .combo
            .map(|c| SparseVec::unit(idx).axpy(&-Rational::one(), &c));
        let (pivot, lead) = residual.leading().map(|(i, c)| (i, c.clone())).unwrap();
        let inv = lead.recip();
        residual = residual.scale(&inv);
        combo = combo.map(|c| c.scale(&inv));
        for row in self.rows.values_mut() {
            let c = row.vec.get(pivot);
            if !c.is_zero() {
                row.vec = row.vec.axpy(&-c.clone(), &residual);
                if let (Some(rc), Some(nc)) = (row.combo.as_mut(), combo.as_ref()) {
                    *rc = rc.axpy(&-c, nc);
                }
            }
        }
        self.rows.insert(
            pivot,
            Row {
                vec: residual,
                combo,
            },
        );
        None
    }
}

pub fn rank(dim: usize, vs: &[SparseVec]) -> usize {
    Echelon::from_vectors(dim, vs).rank()
}

/// Basis of the kernel of the linear map sending the `i`-th unit vector to
/// `vs[i]`, as coefficient vectors over `0..vs.len()`.
pub fn kernel(dim: usize, vs: &[SparseVec]) -> Vec<SparseVec> {
    let mut e = Echelon::tracked(dim);
    let mut out = Vec::new();
    for (i, v) in vs.iter().enumerate() {
        if let Some(dep) = e.insert(v.clone()) {
            out.push(SparseVec::unit(i).axpy(&-Rational::one(), &dep));
        }
    }
    out
}

/// Basis of `span(us) ∩ span(ws)`, computed from the kernel of the stacked
/// matrix `[us | ws]`. Both inputs may be dependent.
pub fn intersection(dim: usize, us: &[SparseVec], ws: &[SparseVec]) -> Vec<SparseVec> {
    let ub = Echelon::from_vectors(dim, us).basis();
    let wb = Echelon::from_vectors(dim, ws).basis();
    let stacked: Vec<SparseVec> = ub.iter().chain(wb.iter()).cloned().collect();
    let mut span = Echelon::new(dim);
    for k in kernel(dim, &stacked) {
        let mut v = SparseVec::new();
        for (i, c) in k.entries() {
            if *i < ub.len() {
                v = v.axpy(c, &ub[*i]);
            }
        }
        span.insert(v);
    }
    span.basis()
}
