//! Components, multigerms and the right-left group acting on them.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, Order, Rational};
use crate::linalg::{Echelon, SparseVec};
use crate::sampling::Sampler;

/// A monomial `x^α` in the ambient coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial { exponents }
    }

    /// The coordinate function `x_j` in `n` variables.
    pub fn var(j: usize, n: usize) -> Self {
        let mut exponents = vec![0; n];
        exponents[j] = 1;
        Monomial { exponents }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// All monomials in `n` variables with total degree in `[lo, hi]`, in
    /// graded lexicographic order.
    pub fn all(n: usize, lo: u32, hi: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        for d in lo..=hi {
            let mut cur = vec![0u32; n];
            fill(&mut cur, 0, d, &mut out);
        }
        out
    }
}

fn fill(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Monomial>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(Monomial::new(cur.clone()));
        return;
    }
    for a in (0..=left).rev() {
        cur[pos] = a;
        fill(cur, pos + 1, left - a, out);
    }
    cur[pos] = 0;
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, a) in self.exponents.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if *a == 1 {
                write!(f, "x{}", j + 1)?;
            } else {
                write!(f, "x{}^{}", j + 1, a)?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// A polynomial function on the target, as a list of `(coefficient, monomial)`.
pub type Polynomial = Vec<(Rational, Monomial)>;

/// One branch `t ↦ (f_1(t), …, f_n(t))`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ComponentGerm {
    coords: Vec<Jet>,
}

impl ComponentGerm {
    /// All coordinates are brought to the smallest truncation among them.
    pub fn new(coords: Vec<Jet>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Malformed("component with no coordinates".into()));
        }
        let n = coords.iter().map(Jet::truncation).min().unwrap();
        let mut out = Vec::with_capacity(coords.len());
        for c in coords {
            if !c.constant_term().is_zero() {
                return Err(Error::ConstantTerm);
            }
            out.push(c.truncate(n));
        }
        Ok(ComponentGerm { coords: out })
    }

    pub fn parse(coords: &[&str], truncation: u32) -> Result<Self> {
        let jets = coords
            .iter()
            .map(|s| Jet::parse(s, truncation))
            .collect::<Result<Vec<_>>>()?;
        ComponentGerm::new(jets)
    }

    pub fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn truncation(&self) -> u32 {
        self.coords[0].truncation()
    }

    pub fn coords(&self) -> &[Jet] {
        &self.coords
    }

    pub fn coord(&self, j: usize) -> &Jet {
        &self.coords[j]
    }

    pub fn is_degenerate(&self) -> bool {
        self.coords.iter().all(Jet::is_zero)
    }

    pub fn order(&self) -> Order {
        self.coords.iter().map(Jet::order).min().unwrap()
    }

    pub fn multiplicity(&self) -> Result<u32> {
        self.order().finite().ok_or(Error::DegenerateComponent(0))
    }

    /// Coefficient vector of `t^e` across the coordinates.
    pub fn coefficient_vector(&self, e: u32) -> Vec<Rational> {
        self.coords.iter().map(|c| c.coeff(e)).collect()
    }

    pub fn pullback(&self, m: &Monomial) -> Jet {
        let n = self.truncation();
        let mut out = Jet::constant(Rational::one(), n);
        for (j, a) in m.exponents.iter().enumerate() {
            if *a > 0 {
                out = out.mul(&self.coords[j].pow(*a));
                if out.is_zero() {
                    break;
                }
            }
        }
        out
    }

    pub fn pullback_poly(&self, p: &Polynomial) -> Jet {
        let mut out = Jet::zero(self.truncation());
        for (c, m) in p {
            out = out.add(&self.pullback(m).scale(c));
        }
        out
    }

    /// Lower bound on `ord pullback(x^α)` from the coordinate orders;
    /// `None` when some used coordinate vanishes identically.
    pub fn monomial_order(&self, m: &Monomial) -> Option<u32> {
        let mut total = 0;
        for (j, a) in m.exponents.iter().enumerate() {
            if *a > 0 {
                total += a * self.coords[j].order().finite()?;
            }
        }
        Some(total)
    }

    pub fn truncate(&self, m: u32) -> ComponentGerm {
        ComponentGerm {
            coords: self.coords.iter().map(|c| c.truncate(m)).collect(),
        }
    }

    pub fn with_truncation(&self, n: u32) -> ComponentGerm {
        ComponentGerm {
            coords: self.coords.iter().map(|c| c.with_truncation(n)).collect(),
        }
    }

    pub fn derivative(&self) -> ComponentGerm {
        ComponentGerm {
            coords: self.coords.iter().map(Jet::derivative).collect(),
        }
    }

    /// `self ∘ h` for a reparametrization `h` of the source.
    pub fn reparametrize(&self, h: &Jet) -> Result<ComponentGerm> {
        let coords = self
            .coords
            .iter()
            .map(|c| c.compose(h))
            .collect::<Result<Vec<_>>>()?;
        Ok(ComponentGerm { coords })
    }

    /// Apply a target map given coordinatewise by polynomials.
    pub fn push_forward(&self, map: &[Polynomial]) -> ComponentGerm {
        ComponentGerm {
            coords: map.iter().map(|p| self.pullback_poly(p)).collect(),
        }
    }

    fn padded(&self, n: usize) -> ComponentGerm {
        let mut coords = self.coords.clone();
        coords.resize(n, Jet::zero(self.truncation()));
        ComponentGerm { coords }
    }
}

impl fmt::Display for ComponentGerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (j, c) in self.coords.iter().enumerate() {
            if j > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for ComponentGerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Outcome of the finite-jet image separation check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Separation {
    Verified,
    /// 1-based component indices of a pair whose images could not be separated.
    Unverified { pair: (usize, usize) },
}

impl Separation {
    pub fn is_verified(&self) -> bool {
        matches!(self, Separation::Verified)
    }
}

/// A tuple of branches in a common ambient space and truncation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Multigerm {
    ambient_dim: usize,
    truncation: u32,
    components: Vec<ComponentGerm>,
}

/// Left linear change recorded by [`Multigerm::stabilize`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinearChange {
    /// Original (0-based) coordinate indices that survive, in order.
    pub kept: Vec<usize>,
    /// For each dropped coordinate, the combination of kept coordinates it
    /// equals on every component: `x_dropped = sum coeff * x_kept`.
    pub dropped: Vec<DroppedCoordinate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DroppedCoordinate {
    pub coordinate: usize,
    pub combination: Vec<(usize, String)>,
}

impl LinearChange {
    pub fn is_identity(&self) -> bool {
        self.dropped.is_empty()
    }
}

impl Multigerm {
    /// Components shorter than the longest are padded with zero coordinates;
    /// all truncations are lowered to the common minimum.
    pub fn new(components: Vec<ComponentGerm>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Malformed("a multigerm needs at least one component".into()));
        }
        let n = components.iter().map(ComponentGerm::ambient_dim).max().unwrap();
        let trunc = components.iter().map(ComponentGerm::truncation).min().unwrap();
        let components = components
            .into_iter()
            .map(|c| c.padded(n).truncate(trunc))
            .collect();
        Ok(Multigerm {
            ambient_dim: n,
            truncation: trunc,
            components,
        })
    }

    /// Parse from per-component coordinate strings.
    pub fn parse(components: &[&[&str]], truncation: u32) -> Result<Self> {
        let comps = components
            .iter()
            .map(|c| ComponentGerm::parse(c, truncation))
            .collect::<Result<Vec<_>>>()?;
        Multigerm::new(comps)
    }

    /// The coordinate axes in `C^n`.
    pub fn axes(n: usize, truncation: u32) -> Multigerm {
        let comps = (0..n)
            .map(|i| {
                let mut coords = vec![Jet::zero(truncation); n];
                coords[i] = Jet::t(truncation);
                ComponentGerm { coords }
            })
            .collect();
        Multigerm {
            ambient_dim: n,
            truncation,
            components: comps,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    /// Number of components `k`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[ComponentGerm] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ComponentGerm {
        &self.components[i]
    }

    /// Refuse degenerate components with their index.
    pub fn check_nondegenerate(&self) -> Result<()> {
        match self.components.iter().position(ComponentGerm::is_degenerate) {
            Some(i) => Err(Error::DegenerateComponent(i + 1)),
            None => Ok(()),
        }
    }

    pub fn multiplicities(&self) -> Result<Vec<u32>> {
        self.check_nondegenerate()?;
        self.components.iter().map(|c| c.multiplicity()).collect()
    }

    pub fn jet_of(&self, m: u32) -> Result<Multigerm> {
        if m > self.truncation {
            return Err(Error::LevelTooHigh {
                level: m,
                truncation: self.truncation,
            });
        }
        Ok(self.truncate(m))
    }

    fn truncate(&self, m: u32) -> Multigerm {
        Multigerm {
            ambient_dim: self.ambient_dim,
            truncation: m.min(self.truncation),
            components: self.components.iter().map(|c| c.truncate(m)).collect(),
        }
    }

    /// Declare all coefficients above the current truncation to be zero and
    /// carry the germ at truncation `n` (or truncate when `n` is smaller).
    pub fn with_truncation(&self, n: u32) -> Multigerm {
        Multigerm {
            ambient_dim: self.ambient_dim,
            truncation: n,
            components: self
                .components
                .iter()
                .map(|c| c.with_truncation(n))
                .collect(),
        }
    }

    /// Embed into `C^n`, `n >= ambient_dim`, by appending zero coordinates.
    pub fn embed(&self, n: usize) -> Multigerm {
        Multigerm {
            ambient_dim: n.max(self.ambient_dim),
            truncation: self.truncation,
            components: self
                .components
                .iter()
                .map(|c| c.padded(n.max(self.ambient_dim)))
                .collect(),
        }
    }

    pub fn permute_components(&self, order: &[usize]) -> Multigerm {
        Multigerm {
            ambient_dim: self.ambient_dim,
            truncation: self.truncation,
            components: order.iter().map(|&i| self.components[i].clone()).collect(),
        }
    }

    pub fn permute_coordinates(&self, order: &[usize]) -> Multigerm {
        Multigerm {
            ambient_dim: order.len(),
            truncation: self.truncation,
            components: self
                .components
                .iter()
                .map(|c| ComponentGerm {
                    coords: order.iter().map(|&j| c.coords[j].clone()).collect(),
                })
                .collect(),
        }
    }

    /// Coordinate rows of the stacked coefficient matrix; columns are
    /// `(component, power)` pairs.
    fn coordinate_rows(&self) -> Vec<SparseVec> {
        let n = self.truncation as usize;
        (0..self.ambient_dim)
            .map(|j| {
                SparseVec::from_entries(self.components.iter().enumerate().flat_map(|(i, c)| {
                    c.coords[j]
                        .terms()
                        .map(move |(e, v)| (i * (n + 1) + e as usize, v.clone()))
                        .collect::<Vec<_>>()
                }))
            })
            .collect()
    }

    /// Reduce to the minimal ambient dimension by left linear changes: a
    /// coordinate whose coefficient row depends on earlier surviving rows is
    /// replaced by its difference with that combination (hence zero) and
    /// dropped. Independent coordinates are kept untouched.
    pub fn stabilize(&self) -> (Multigerm, LinearChange) {
        let rows = self.coordinate_rows();
        let dim = self.components.len() * (self.truncation as usize + 1);
        let mut echelon = Echelon::new(dim);
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (j, row) in rows.into_iter().enumerate() {
            match echelon.insert(row) {
                None => kept.push(j),
                Some(_) => dropped.push(j),
            }
        }
        let change = self.relations(&kept, dropped);
        let stable = self.permute_coordinates(&kept);
        (stable, change)
    }

    fn relations(&self, kept: &[usize], dropped: Vec<usize>) -> LinearChange {
        let rows = self.coordinate_rows();
        let dim = self.components.len() * (self.truncation as usize + 1);
        let mut e = Echelon::tracked(dim);
        for &j in kept {
            e.insert(rows[j].clone());
        }
        let dropped = dropped
            .into_iter()
            .map(|j| {
                let red = e.reduce(&rows[j]);
                let combo = red.combo.unwrap_or_default();
                DroppedCoordinate {
                    coordinate: j,
                    combination: combo
                        .entries()
                        .iter()
                        .map(|(slot, c)| (kept[*slot], c.to_string()))
                        .collect(),
                }
            })
            .collect();
        LinearChange {
            kept: kept.to_vec(),
            dropped,
        }
    }

    /// Minimal embedding up to the truncation: a coordinate that agrees on
    /// every component with a combination of earlier surviving coordinates
    /// plus a function of order at least 2 is removed by the left change
    /// subtracting that expression. Returns the reduced germ and the original
    /// indices of the surviving coordinates.
    pub fn reduce_embedding(&self) -> (Multigerm, Vec<usize>) {
        let t = self.truncation as usize;
        let to_vec = |tuple: &[Jet]| {
            SparseVec::from_entries(tuple.iter().enumerate().flat_map(|(i, jet)| {
                jet.terms()
                    .map(move |(e, v)| (i * (t + 1) + e as usize, v.clone()))
                    .collect::<Vec<_>>()
            }))
        };
        let coords: Vec<Vec<Jet>> = (0..self.ambient_dim)
            .map(|j| self.components.iter().map(|c| c.coords[j].clone()).collect())
            .collect();
        let times = |a: &[Jet], b: &[Jet]| -> Vec<Jet> { a.iter().zip(b).map(|(x, y)| x.mul(y)).collect() };
        // Span of the pullbacks of all monomials of degree >= 2, closed under
        // multiplication by the coordinates.
        let mut echelon = Echelon::new(self.components.len() * (t + 1));
        let mut queue: Vec<Vec<Jet>> = Vec::new();
        for a in 0..coords.len() {
            for b in a..coords.len() {
                queue.push(times(&coords[a], &coords[b]));
            }
        }
        while let Some(w) = queue.pop() {
            let v = to_vec(&w);
            if v.is_zero() || echelon.insert(v).is_some() {
                continue;
            }
            queue.extend(coords.iter().map(|c| times(c, &w)));
        }
        let kept: Vec<usize> = self
            .coordinate_rows()
            .into_iter()
            .enumerate()
            .filter_map(|(j, row)| echelon.insert(row).is_none().then_some(j))
            .collect();
        (self.permute_coordinates(&kept), kept)
    }

    pub fn is_stable(&self) -> bool {
        self.stabilize().1.is_identity()
    }

    /// Best-effort check that component images meet only at the origin.
    pub fn separate_images_check(&self) -> Separation {
        for i in 0..self.components.len() {
            for j in i + 1..self.components.len() {
                if !images_distinct(&self.components[i], &self.components[j]) {
                    return Separation::Unverified { pair: (i + 1, j + 1) };
                }
            }
        }
        Separation::Verified
    }

    /// Serialise as `(component, coordinate, power)` coefficients of the `m`-jet.
    pub fn to_vector(&self, m: u32) -> SparseVec {
        let n = self.ambient_dim;
        let mm = m as usize;
        SparseVec::from_entries(self.components.iter().enumerate().flat_map(|(i, c)| {
            c.coords
                .iter()
                .enumerate()
                .flat_map(move |(j, jet)| {
                    jet.terms()
                        .filter(move |(e, _)| *e >= 1 && *e <= m)
                        .map(move |(e, v)| ((i * n + j) * mm + (e as usize - 1), v.clone()))
                })
                .collect::<Vec<_>>()
        }))
    }

    /// Inverse of [`Multigerm::to_vector`] for `k` components in `C^n`.
    pub fn from_vector(v: &SparseVec, k: usize, n: usize, m: u32) -> Multigerm {
        let mm = m as usize;
        let mut terms: Vec<Vec<Vec<(u32, Rational)>>> = vec![vec![Vec::new(); n]; k];
        for (idx, val) in v.entries() {
            let e = idx % mm + 1;
            let j = (idx / mm) % n;
            let i = idx / (mm * n);
            terms[i][j].push((e as u32, val.clone()));
        }
        let components = terms
            .into_iter()
            .map(|coords| ComponentGerm {
                coords: coords
                    .into_iter()
                    .map(|t| Jet::with_constant(t, m))
                    .collect(),
            })
            .collect();
        Multigerm {
            ambient_dim: n,
            truncation: m,
            components,
        }
    }

    pub fn add(&self, other: &Multigerm) -> Result<Multigerm> {
        if self.len() != other.len() || self.ambient_dim != other.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.len() * self.ambient_dim,
                got: other.len() * other.ambient_dim,
            });
        }
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| ComponentGerm {
                coords: a.coords.iter().zip(&b.coords).map(|(x, y)| x.add(y)).collect(),
            })
            .collect();
        Multigerm::new(comps)
    }

    pub fn scale(&self, s: &Rational) -> Multigerm {
        Multigerm {
            ambient_dim: self.ambient_dim,
            truncation: self.truncation,
            components: self
                .components
                .iter()
                .map(|c| ComponentGerm {
                    coords: c.coords.iter().map(|x| x.scale(s)).collect(),
                })
                .collect(),
        }
    }

    /// Apply `(g, h_1, …, h_k)`: component `i` becomes `g ∘ f_i ∘ h_i`.
    pub fn apply(&self, change: &AChange) -> Result<Multigerm> {
        if change.left.len() != self.ambient_dim || change.right.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: change.left.len(),
            });
        }
        let comps = self
            .components
            .iter()
            .zip(&change.right)
            .map(|(c, h)| c.push_forward(&change.left).reparametrize(h))
            .collect::<Result<Vec<_>>>()?;
        Multigerm::new(comps)
    }

    pub fn to_json(&self) -> MultigermJson {
        MultigermJson {
            ambient_dim: self.ambient_dim,
            truncation: self.truncation,
            components: self
                .components
                .iter()
                .map(|c| c.coords.iter().map(|j| j.to_string()).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &MultigermJson) -> Result<Multigerm> {
        if json.truncation == 0 {
            return Err(Error::Malformed("truncation must be positive".into()));
        }
        let mut comps = Vec::with_capacity(json.components.len());
        for (i, c) in json.components.iter().enumerate() {
            if c.len() != json.ambient_dim {
                return Err(Error::Malformed(format!(
                    "component {} has {} coordinates, ambient_dim is {}",
                    i + 1,
                    c.len(),
                    json.ambient_dim
                )));
            }
            let jets = c
                .iter()
                .map(|s| Jet::parse(s, json.truncation))
                .collect::<Result<Vec<_>>>()?;
            comps.push(ComponentGerm::new(jets)?);
        }
        Multigerm::new(comps)
    }

    pub fn from_json_str(s: &str) -> Result<Multigerm> {
        let json: MultigermJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Multigerm::from_json(&json)
    }
}

impl fmt::Display for Multigerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Multigerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} [n={}, N={}]", self.ambient_dim, self.truncation)
    }
}

/// Wire format for multigerms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultigermJson {
    pub ambient_dim: usize,
    pub truncation: u32,
    pub components: Vec<Vec<String>>,
}

/// An element of the right-left group: a polynomial target change `g` (with
/// invertible linear part) and one source reparametrization per component.
#[derive(Clone, Debug)]
pub struct AChange {
    pub left: Vec<Polynomial>,
    pub right: Vec<Jet>,
}

impl AChange {
    pub fn identity(n: usize, k: usize, truncation: u32) -> AChange {
        AChange {
            left: (0..n)
                .map(|j| vec![(Rational::one(), Monomial::var(j, n))])
                .collect(),
            right: vec![Jet::t(truncation); k],
        }
    }

    /// Random element with invertible linear parts, small rational
    /// coefficients and optional nonlinear terms up to degree 3.
    #[allow(clippy::needless_range_loop)]
    pub fn random(n: usize, k: usize, truncation: u32, sampler: &mut Sampler) -> AChange {
        // L = U * D * W with U, W unitriangular keeps det != 0.
        let mut lower = vec![vec![Rational::zero(); n]; n];
        let mut upper = vec![vec![Rational::zero(); n]; n];
        for a in 0..n {
            lower[a][a] = Rational::one();
            upper[a][a] = sampler.signed_nonzero_small();
            for b in 0..a {
                lower[a][b] = sampler.small_int(-2, 2);
            }
            for b in a + 1..n {
                upper[a][b] = sampler.small_int(-2, 2);
            }
        }
        let mut left = Vec::with_capacity(n);
        for a in 0..n {
            let mut poly: Polynomial = Vec::new();
            for b in 0..n {
                let mut c = Rational::zero();
                for m in 0..n {
                    c += &lower[a][m] * &upper[m][b];
                }
                if !c.is_zero() {
                    poly.push((c, Monomial::var(b, n)));
                }
            }
            for mono in Monomial::all(n, 2, 3) {
                if sampler.range(0, 3) == 0 {
                    let c = sampler.small_int(-2, 2);
                    if !c.is_zero() {
                        poly.push((c, mono));
                    }
                }
            }
            left.push(poly);
        }
        let right = (0..k)
            .map(|_| {
                Jet::with_constant(
                    [
                        (1, sampler.signed_nonzero_small()),
                        (2, sampler.small_int(-2, 2)),
                        (3, sampler.small_int(-2, 2)),
                    ],
                    truncation,
                )
            })
            .collect();
        AChange { left, right }
    }
}

impl Sampler {
    /// Nonzero rational with numerator and denominator in `[1, 3]` and random sign.
    pub fn signed_nonzero_small(&mut self) -> Rational {
        let p = self.small_int(1, 3);
        let q = self.small_int(1, 3);
        let v = p / q;
        if self.coin() {
            -v
        } else {
            v
        }
    }
}

/// Finite-jet certificate that `a` and `b` are not reparametrizations of one
/// another (for reduced branches this means their images meet only at 0).
fn images_distinct(a: &ComponentGerm, b: &ComponentGerm) -> bool {
    let (pa, pb) = (a.order(), b.order());
    let (Some(p), Some(q)) = (pa.finite(), pb.finite()) else {
        // A degenerate branch has the origin as image.
        return true;
    };
    if p != q {
        return true;
    }
    let va = a.coefficient_vector(p);
    let vb = b.coefficient_vector(p);
    let Some(lambda) = proportionality(&va, &vb) else {
        return true;
    };
    // Need h = c t + ... with c^p = lambda; try every rational p-th root.
    let roots = rational_roots(&lambda, p);
    if roots.is_empty() {
        // Irrational scaling: the jets alone cannot rule out a match.
        return false;
    }
    roots.iter().all(|c| !reparametrizes(a, b, c, p))
}

/// `Some(λ)` with `w = λ v` when `v ≠ 0` and `w` is proportional to `v`.
fn proportionality(v: &[Rational], w: &[Rational]) -> Option<Rational> {
    let pivot = v.iter().position(|x| !x.is_zero())?;
    let lambda = &w[pivot] / &v[pivot];
    v.iter()
        .zip(w)
        .all(|(x, y)| *y == x * &lambda)
        .then_some(lambda)
}

fn rational_roots(lambda: &Rational, p: u32) -> Vec<Rational> {
    let root = |x: &BigInt| -> Option<BigInt> {
        let r = x.nth_root(p);
        (r.pow(p) == *x).then_some(r)
    };
    let num = lambda.numer().abs();
    let den = lambda.denom().clone();
    let (Some(rn), Some(rd)) = (root(&num), root(&den)) else {
        return Vec::new();
    };
    let base = Rational::new(rn, rd);
    if lambda.is_negative() {
        if p.is_odd() {
            vec![-base]
        } else {
            Vec::new()
        }
    } else if p.is_even() {
        vec![base.clone(), -base]
    } else {
        vec![base]
    }
}

/// Whether `a ∘ h = b` is solvable to the known order with `h = c t + …`.
fn reparametrizes(a: &ComponentGerm, b: &ComponentGerm, c: &Rational, p: u32) -> bool {
    let n = a.truncation().min(b.truncation());
    let a = a.truncate(n);
    let b = b.truncate(n);
    let lead = a.coefficient_vector(p);
    let mut h = Jet::monomial(c.clone(), 1, n);
    let unit = Rational::from_integer(BigInt::from(p)) * c.pow(p as i32 - 1);
    for k in 1..=n.saturating_sub(p) {
        let cur = match a.reparametrize(&h) {
            Ok(cur) => cur,
            Err(_) => return false,
        };
        let residual: Vec<Rational> = (0..a.ambient_dim())
            .map(|j| b.coord(j).coeff(p + k) - cur.coord(j).coeff(p + k))
            .collect();
        if residual.iter().all(Zero::is_zero) {
            continue;
        }
        // The new coefficient h_{k+1} contributes p c^{p-1} h_{k+1} · lead.
        let Some(s) = proportionality(&lead, &residual) else {
            return false;
        };
        let coeff = s / &unit;
        h = h.add(&Jet::monomial(coeff, k + 1, n));
    }
    match a.reparametrize(&h) {
        Ok(cur) => cur == b,
        Err(_) => false,
    }
}
