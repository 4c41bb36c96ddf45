//! Tangent spaces to orbits of the right-left group in jet space.
//!
//! Vectors live in `J^m` for `k` components in `C^n`, with the canonical basis
//! ordered lexicographically by (component, coordinate, power); see
//! [`JetSpaceBasis::index`].

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::family::AffineFamily;
use crate::germs::{ComponentGerm, Monomial, Multigerm};
use crate::jet::Jet;
use crate::linalg::{Echelon, SparseVec};
use crate::sampling::Sampler;

/// Coordinates of the `m`-jet space of `k` components in `C^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct JetSpaceBasis {
    pub level: u32,
    pub components: usize,
    pub ambient_dim: usize,
}

impl JetSpaceBasis {
    pub fn new(level: u32, components: usize, ambient_dim: usize) -> Self {
        JetSpaceBasis {
            level,
            components,
            ambient_dim,
        }
    }

    pub fn of(f: &Multigerm, level: u32) -> Self {
        JetSpaceBasis::new(level, f.len(), f.ambient_dim())
    }

    pub fn dim(&self) -> usize {
        self.components * self.ambient_dim * self.level as usize
    }

    /// Index of `t^e` in coordinate `j` of component `i` (all 0-based but `e`).
    pub fn index(&self, i: usize, j: usize, e: u32) -> usize {
        debug_assert!(e >= 1 && e <= self.level);
        (i * self.ambient_dim + j) * self.level as usize + (e as usize - 1)
    }

    /// Inverse of [`JetSpaceBasis::index`].
    pub fn locate(&self, idx: usize) -> (usize, usize, u32) {
        let m = self.level as usize;
        let e = (idx % m + 1) as u32;
        let j = (idx / m) % self.ambient_dim;
        let i = idx / (m * self.ambient_dim);
        (i, j, e)
    }

    /// Render a vector as a multigerm string, e.g. `((0, 0), (t^3, 0))`.
    pub fn render(&self, v: &SparseVec) -> String {
        Multigerm::from_vector(v, self.components, self.ambient_dim, self.level).to_string()
    }

    /// Render a vector supported in one component as `(…)_i` with `i` 1-based,
    /// falling back to the full form otherwise.
    pub fn render_compact(&self, v: &SparseVec) -> String {
        let comps: Vec<usize> = v.entries().iter().map(|(idx, _)| self.locate(*idx).0).collect();
        match comps.first() {
            Some(&c) if comps.iter().all(|&x| x == c) && self.components > 1 => {
                let f = Multigerm::from_vector(v, self.components, self.ambient_dim, self.level);
                format!("{}_{}", f.component(c), c + 1)
            }
            _ => self.render(v),
        }
    }
}

/// Which part of the right-left group generates the tangent space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupFilter {
    FullA,
    /// Elements whose `r`-jet is the identity.
    SubgroupA(u32),
    LeftOnly,
    RightOnly,
    LeftOnlyDegreeMin(u32),
    RightOnlyDegreeMin(u32),
}

impl GroupFilter {
    /// Minimal power `s` of the right generators `t^s f'`, if any.
    pub fn right_min(&self) -> Option<u32> {
        match *self {
            GroupFilter::FullA | GroupFilter::RightOnly => Some(1),
            GroupFilter::SubgroupA(r) => Some(r + 1),
            GroupFilter::RightOnlyDegreeMin(d) => Some(d),
            GroupFilter::LeftOnly | GroupFilter::LeftOnlyDegreeMin(_) => None,
        }
    }

    /// Minimal degree of the left monomial fields, if any.
    pub fn left_min(&self) -> Option<u32> {
        match *self {
            GroupFilter::FullA | GroupFilter::LeftOnly => Some(1),
            GroupFilter::SubgroupA(r) => Some(r + 1),
            GroupFilter::LeftOnlyDegreeMin(d) => Some(d),
            GroupFilter::RightOnly | GroupFilter::RightOnlyDegreeMin(_) => None,
        }
    }
}

impl fmt::Display for GroupFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupFilter::FullA => f.write_str("full"),
            GroupFilter::SubgroupA(r) => write!(f, "subgroup:{r}"),
            GroupFilter::LeftOnly => f.write_str("left"),
            GroupFilter::RightOnly => f.write_str("right"),
            GroupFilter::LeftOnlyDegreeMin(d) => write!(f, "left-min:{d}"),
            GroupFilter::RightOnlyDegreeMin(d) => write!(f, "right-min:{d}"),
        }
    }
}

impl FromStr for GroupFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s.as_str(), None),
        };
        let num = |a: Option<&str>, min: u32| -> Result<u32> {
            let v: u32 = a
                .ok_or_else(|| Error::InvalidArgument(format!("filter {s:?} needs an argument")))?
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad filter argument in {s:?}")))?;
            if v < min {
                return Err(Error::InvalidArgument(format!(
                    "filter argument must be at least {min}"
                )));
            }
            Ok(v)
        };
        match head {
            "full" | "a" => Ok(GroupFilter::FullA),
            "subgroup" | "a_r" => Ok(GroupFilter::SubgroupA(num(arg, 0)?)),
            "left" => Ok(GroupFilter::LeftOnly),
            "right" => Ok(GroupFilter::RightOnly),
            "left-min" => Ok(GroupFilter::LeftOnlyDegreeMin(num(arg, 1)?)),
            "right-min" => Ok(GroupFilter::RightOnlyDegreeMin(num(arg, 1)?)),
            _ => Err(Error::InvalidArgument(format!(
                "unknown filter {s:?}; expected full, subgroup:R, left, right, left-min:D or right-min:D"
            ))),
        }
    }
}

impl Serialize for GroupFilter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `t^s · F_i'(t)` in component `i`'s slot for `min_power <= s <= m`.
pub fn right_generators(f: &Multigerm, m: u32, min_power: u32) -> Vec<SparseVec> {
    let basis = JetSpaceBasis::of(f, m);
    let mut out = Vec::new();
    for (i, c) in f.components().iter().enumerate() {
        for s in min_power.max(1)..=m {
            let v = SparseVec::from_entries(c.coords().iter().enumerate().flat_map(|(j, jet)| {
                jet.terms()
                    .filter(move |(e, _)| *e >= 1 && e - 1 + s <= m)
                    .map(move |(e, a)| {
                        (basis.index(i, j, e - 1 + s), a * crate::jet::int(e as i64))
                    })
                    .collect::<Vec<_>>()
            }));
            out.push(v);
        }
    }
    out
}

/// Monomials of degree in `[lo, m]` whose pullback to some component can be
/// nonzero below order `m + 1`.
fn relevant_monomials(f: &Multigerm, lo: u32, m: u32) -> Vec<Monomial> {
    let n = f.ambient_dim();
    let orders: Vec<Vec<Option<u32>>> = f
        .components()
        .iter()
        .map(|c| c.coords().iter().map(|j| j.order().finite()).collect())
        .collect();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    let partial = vec![Some(0u32); f.len()];
    walk(&orders, m, lo, 0, 0, &mut cur, &partial, &mut out);
    out.sort_by(|a, b| a.degree().cmp(&b.degree()).then(b.exponents.cmp(&a.exponents)));
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(
    orders: &[Vec<Option<u32>>],
    m: u32,
    lo: u32,
    pos: usize,
    degree: u32,
    cur: &mut Vec<u32>,
    partial: &[Option<u32>],
    out: &mut Vec<Monomial>,
) {
    if pos == cur.len() {
        if degree >= lo && degree >= 1 {
            out.push(Monomial::new(cur.clone()));
        }
        return;
    }
    let mut a = 0;
    loop {
        if degree + a > m {
            break;
        }
        let next: Vec<Option<u32>> = partial
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let p = (*p)?;
                if a == 0 {
                    return Some(p);
                }
                let o = orders[i][pos]?;
                Some(p + a * o).filter(|v| *v <= m)
            })
            .collect();
        if next.iter().all(Option::is_none) {
            break;
        }
        cur[pos] = a;
        walk(orders, m, lo, pos + 1, degree + a, cur, &next, out);
        a += 1;
    }
    cur[pos] = 0;
}

/// Cached powers of each coordinate of a component, truncated at `m`.
struct PowerTable {
    powers: Vec<Vec<Jet>>,
}

impl PowerTable {
    fn new(c: &ComponentGerm, m: u32) -> Self {
        let c = c.with_truncation(m);
        let powers = c
            .coords()
            .iter()
            .map(|x| {
                let mut ps = vec![Jet::constant(crate::jet::int(1), m)];
                for a in 1..=m {
                    let next = ps[a as usize - 1].mul(x);
                    ps.push(next);
                }
                ps
            })
            .collect();
        PowerTable { powers }
    }

    fn pullback(&self, mono: &Monomial, m: u32) -> Jet {
        let mut out: Option<Jet> = None;
        for (j, a) in mono.exponents.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            let p = &self.powers[j][*a as usize];
            out = Some(match out {
                None => p.clone(),
                Some(acc) => acc.mul(p),
            });
            if out.as_ref().is_some_and(Jet::is_zero) {
                break;
            }
        }
        out.unwrap_or_else(|| Jet::constant(crate::jet::int(1), m))
    }
}

/// For each monomial `x^α` with `min_degree <= |α| <= m` and each target
/// coordinate `j`: the field `x^α e_j` evaluated along every component.
pub fn left_generators(f: &Multigerm, m: u32, min_degree: u32) -> Vec<SparseVec> {
    let basis = JetSpaceBasis::of(f, m);
    let tables: Vec<PowerTable> = f.components().iter().map(|c| PowerTable::new(c, m)).collect();
    let mut out = Vec::new();
    for mono in relevant_monomials(f, min_degree.max(1), m) {
        let pulls: Vec<Jet> = tables.iter().map(|t| t.pullback(&mono, m)).collect();
        if pulls.iter().all(Jet::is_zero) {
            continue;
        }
        for j in 0..f.ambient_dim() {
            let v = SparseVec::from_entries(pulls.iter().enumerate().flat_map(|(i, p)| {
                p.terms()
                    .filter(|(e, _)| *e >= 1 && *e <= m)
                    .map(|(e, c)| (basis.index(i, j, e), c.clone()))
                    .collect::<Vec<_>>()
            }));
            out.push(v);
        }
    }
    out
}

/// Span of the generators selected by a [`GroupFilter`], in echelon form.
#[derive(Clone, Debug)]
pub struct TangentSpace {
    pub basis_space: JetSpaceBasis,
    pub filter: GroupFilter,
    pub generators: usize,
    echelon: Echelon,
}

impl TangentSpace {
    pub fn rank(&self) -> usize {
        self.echelon.rank()
    }

    pub fn echelon(&self) -> &Echelon {
        &self.echelon
    }

    pub fn basis(&self) -> Vec<SparseVec> {
        self.echelon.basis()
    }

    pub fn contains(&self, v: &SparseVec) -> Result<bool> {
        self.check_dim(v)?;
        Ok(self.echelon.contains(v))
    }

    /// Membership of a multigerm-shaped vector at this space's level.
    pub fn contains_germ(&self, v: &Multigerm) -> Result<bool> {
        if v.len() != self.basis_space.components || v.ambient_dim() != self.basis_space.ambient_dim
        {
            return Err(Error::DimensionMismatch {
                expected: self.basis_space.dim(),
                got: v.len() * v.ambient_dim() * self.basis_space.level as usize,
            });
        }
        Ok(self.echelon.contains(&v.to_vector(self.basis_space.level)))
    }

    fn check_dim(&self, v: &SparseVec) -> Result<()> {
        match v.max_index() {
            Some(i) if i >= self.basis_space.dim() => Err(Error::DimensionMismatch {
                expected: self.basis_space.dim(),
                got: i + 1,
            }),
            _ => Ok(()),
        }
    }

    pub fn report(&self, with_basis: bool) -> TangentReport {
        TangentReport {
            level: self.basis_space.level,
            filter: self.filter,
            rank: self.rank(),
            dim_ambient: self.basis_space.dim(),
            generators: self.generators,
            basis: with_basis.then(|| {
                self.basis()
                    .iter()
                    .map(|v| self.basis_space.render(v))
                    .collect()
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TangentReport {
    pub level: u32,
    pub filter: GroupFilter,
    pub rank: usize,
    pub dim_ambient: usize,
    pub generators: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<String>>,
}

fn check_level(f: &Multigerm, m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    if m > f.truncation() {
        return Err(Error::LevelTooHigh {
            level: m,
            truncation: f.truncation(),
        });
    }
    f.check_nondegenerate()
}

/// Generators selected by `filter` at level `m`, right ones first.
pub fn generators(f: &Multigerm, m: u32, filter: GroupFilter) -> Vec<SparseVec> {
    let mut gens = Vec::new();
    if let Some(s) = filter.right_min() {
        gens.extend(right_generators(f, m, s));
    }
    if let Some(d) = filter.left_min() {
        gens.extend(left_generators(f, m, d));
    }
    gens
}

pub fn tangent_space(f: &Multigerm, m: u32, filter: GroupFilter) -> Result<TangentSpace> {
    check_level(f, m)?;
    let basis_space = JetSpaceBasis::of(f, m);
    let gens = generators(f, m, filter);
    let mut echelon = Echelon::new(basis_space.dim());
    for g in &gens {
        echelon.insert(g.clone());
    }
    Ok(TangentSpace {
        basis_space,
        filter,
        generators: gens.len(),
        echelon,
    })
}

/// Outcome of a family deficiency computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeficiencyVerdict {
    NotSimpleEvidence,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeficiencyReport {
    pub level: u32,
    pub filter: GroupFilter,
    pub seed: u64,
    pub dim_family: usize,
    /// `dim(T_x X ∩ T_x(orbit))` at each sample.
    pub intersections: Vec<usize>,
    pub max_intersection: usize,
    /// Orbit tangent rank at each sample.
    pub orbit_ranks: Vec<usize>,
    pub verdict: DeficiencyVerdict,
    pub domain: String,
}

/// `dim(span(directions) ∩ T)` for independent directions.
pub fn intersection_dim(t: &TangentSpace, directions: &[SparseVec]) -> usize {
    let mut e = t.echelon.clone();
    let mut added = 0;
    for d in directions {
        if e.insert(d.clone()).is_none() {
            added += 1;
        }
    }
    directions.len() - added
}

pub fn family_deficiency(
    family: &AffineFamily,
    m: u32,
    filter: GroupFilter,
    samples: usize,
    seed: u64,
) -> Result<DeficiencyReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    family.check_independent(m)?;
    let dirs = family.direction_vectors(m);
    let mut sampler = Sampler::new(seed);
    let mut intersections = Vec::with_capacity(samples);
    let mut orbit_ranks = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = family.at(&family.sample(&mut sampler))?;
        let t = tangent_space(&x, m, filter)?;
        intersections.push(intersection_dim(&t, &dirs));
        orbit_ranks.push(t.rank());
    }
    let max_intersection = *intersections.iter().max().unwrap();
    let verdict = if max_intersection < family.dim() {
        DeficiencyVerdict::NotSimpleEvidence
    } else {
        DeficiencyVerdict::Inconclusive
    };
    Ok(DeficiencyReport {
        level: m,
        filter,
        seed,
        dim_family: family.dim(),
        intersections,
        max_intersection,
        orbit_ranks,
        verdict,
        domain: family.domain.clone(),
    })
}

/// Rank of the full orbit tangent space at each level `1..=m_max`.
pub fn orbit_dim_sequence(f: &Multigerm, m_max: u32) -> Result<Vec<usize>> {
    (1..=m_max)
        .map(|m| tangent_space(f, m, GroupFilter::FullA).map(|t| t.rank()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mg(c: &[&[&str]], n: u32) -> Multigerm {
        Multigerm::parse(c, n).unwrap()
    }

    #[test]
    fn right_generator_examples() {
        let f = mg(&[&["t^2", "t^3"], &["t^2", "2t^3"]], 3);
        let b = JetSpaceBasis::of(&f, 3);
        let gens = right_generators(&f, 3, 1);
        let rendered: Vec<String> = gens.iter().map(|g| b.render(g)).collect();
        assert!(rendered.contains(&"((2t^2, 3t^3), (0, 0))".to_string()));
        assert!(rendered.contains(&"((0, 0), (2t^2, 6t^3))".to_string()));
        assert_eq!(gens.len(), 6);
        let f = mg(&[&["t", "0"]], 2);
        let b = JetSpaceBasis::of(&f, 2);
        let r: Vec<String> = right_generators(&f, 2, 1).iter().map(|g| b.render(g)).collect();
        assert_eq!(r, vec!["((t, 0))", "((t^2, 0))"]);
    }

    #[test]
    fn left_generator_examples() {
        let f = mg(&[&["t^2", "t^3"], &["t^2", "2t^3"]], 3);
        let b = JetSpaceBasis::of(&f, 3);
        let l: Vec<String> = left_generators(&f, 3, 1).iter().map(|g| b.render(g)).collect();
        assert!(l.contains(&"((t^2, 0), (t^2, 0))".to_string()));
        assert!(l.contains(&"((t^3, 0), (2t^3, 0))".to_string()));
        let g2 = Multigerm::axes(2, 1);
        let b = JetSpaceBasis::of(&g2, 1);
        let l: Vec<String> = left_generators(&g2, 1, 1).iter().map(|g| b.render(g)).collect();
        assert!(l.contains(&"((0, t), (0, 0))".to_string()));
    }

    #[test]
    fn two_cusps_with_distinct_slopes() {
        // Eight generators, two dependencies: rank 6. The slope direction
        // ((0,0),(0,t^3)) is missing, while ((0,0),(t^3,0)) is present.
        for a in ["2", "3", "5"] {
            let c2 = format!("{a}t^3");
            let f = mg(&[&["t^2", "t^3"], &["t^2", &c2]], 3);
            let t = tangent_space(&f, 3, GroupFilter::FullA).unwrap();
            assert_eq!(t.rank(), 6);
            assert!(!t.contains_germ(&mg(&[&["0", "0"], &["0", "t^3"]], 3)).unwrap());
            assert!(t.contains_germ(&mg(&[&["0", "0"], &["t^3", "0"]], 3)).unwrap());
        }
    }

    #[test]
    fn full_rank_and_trivial_cases() {
        let g2 = Multigerm::axes(2, 3);
        assert_eq!(tangent_space(&g2, 1, GroupFilter::FullA).unwrap().rank(), 4);
        assert_eq!(orbit_dim_sequence(&g2, 2).unwrap(), vec![4, 8]);
        let f = mg(&[&["t", "0"], &["t^2", "t^3"]], 4);
        let t = tangent_space(&f, 3, GroupFilter::LeftOnlyDegreeMin(4)).unwrap();
        assert_eq!(t.rank(), 0);
        assert!(t.contains(&SparseVec::new()).unwrap());
        assert!(t.contains(&SparseVec::unit(100)).is_err());
        assert_eq!(orbit_dim_sequence(&mg(&[&["t", "0"]], 2), 1).unwrap(), vec![2]);
        assert!(orbit_dim_sequence(&mg(&[&["0", "0"]], 2), 1).is_err());
    }

    #[test]
    fn filters_parse_and_print() {
        for s in ["full", "subgroup:1", "left", "right", "left-min:3", "right-min:2"] {
            assert_eq!(s.parse::<GroupFilter>().unwrap().to_string(), s);
        }
        assert!("left-min:0".parse::<GroupFilter>().is_err());
        assert!("bogus".parse::<GroupFilter>().is_err());
    }

    #[test]
    fn point_family_has_no_deficiency() {
        let fam = AffineFamily::point(Multigerm::axes(2, 3));
        let r = family_deficiency(&fam, 2, GroupFilter::FullA, 2, 7).unwrap();
        assert_eq!((r.dim_family, r.max_intersection), (0, 0));
        assert!(family_deficiency(&fam, 2, GroupFilter::FullA, 0, 7).is_err());
    }
}
