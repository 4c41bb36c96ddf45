//! Complete transversals and one-level jet reduction.
//!
//! For an `m`-jet `F`, the homogeneous slice `H^{m+1}` is split into the part
//! reachable through the tangent space of `A_1` (elements whose 1-jet is the
//! identity) and a canonical complement made of coordinate directions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::germs::Multigerm;
use crate::linalg::{Echelon, SparseVec};
use crate::tangent::{generators, GroupFilter, JetSpaceBasis};

/// A complete transversal at level `m + 1`.
#[derive(Clone, Debug)]
pub struct Transversal {
    pub level: u32,
    pub components: usize,
    pub ambient_dim: usize,
    /// Slice directions `(component, coordinate)` spanning the complement.
    pub directions: Vec<(usize, usize)>,
    /// Rank of the tangent space of the subgroup at level `m + 1`.
    pub tangent_rank: usize,
    /// Dimension of the tangent image inside the slice.
    pub image_dim: usize,
}

impl Transversal {
    pub fn is_trivial(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn slice_dim(&self) -> usize {
        self.components * self.ambient_dim
    }

    /// Basis vectors as homogeneous multigerms of degree `level`.
    pub fn basis(&self) -> Vec<Multigerm> {
        let b = JetSpaceBasis::new(self.level, self.components, self.ambient_dim);
        self.directions
            .iter()
            .map(|&(i, j)| {
                Multigerm::from_vector(
                    &SparseVec::unit(b.index(i, j, self.level)),
                    self.components,
                    self.ambient_dim,
                    self.level,
                )
            })
            .collect()
    }

    /// Render basis vectors with the component subscript, e.g. `(t^4, 0, 0)_2`.
    pub fn basis_strings(&self) -> Vec<String> {
        let b = JetSpaceBasis::new(self.level, self.components, self.ambient_dim);
        self.directions
            .iter()
            .map(|&(i, j)| b.render_compact(&SparseVec::unit(b.index(i, j, self.level))))
            .collect()
    }

    pub fn report(&self) -> TransversalReport {
        TransversalReport {
            level: self.level,
            trivial: self.is_trivial(),
            basis: self.basis_strings(),
            tangent_rank: self.tangent_rank,
            image_dim: self.image_dim,
            slice_dim: self.slice_dim(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransversalReport {
    pub level: u32,
    pub trivial: bool,
    pub basis: Vec<String>,
    pub tangent_rank: usize,
    pub image_dim: usize,
    pub slice_dim: usize,
}

/// Column layout placing the degree `m + 1` slice after all lower powers, so
/// that echelon rows pivoting in the slice span the tangent image there.
struct SliceLayout {
    basis: JetSpaceBasis,
    lower: usize,
}

impl SliceLayout {
    fn new(k: usize, n: usize, level: u32) -> Self {
        SliceLayout {
            basis: JetSpaceBasis::new(level, k, n),
            lower: k * n * (level as usize - 1),
        }
    }

    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn remap(&self, idx: usize) -> usize {
        let (i, j, e) = self.basis.locate(idx);
        let n = self.basis.ambient_dim;
        if e == self.basis.level {
            self.lower + i * n + j
        } else {
            (i * n + j) * (self.basis.level as usize - 1) + (e as usize - 1)
        }
    }

    fn slice_slot(&self, col: usize) -> Option<(usize, usize)> {
        (col >= self.lower).then(|| {
            let s = col - self.lower;
            (s / self.basis.ambient_dim, s % self.basis.ambient_dim)
        })
    }
}

struct SliceData {
    layout: SliceLayout,
    echelon: Echelon,
    generators: Vec<SparseVec>,
}

fn slice_data(f: &Multigerm, m: u32, r: u32, track: bool) -> Result<SliceData> {
    if m == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    f.check_nondegenerate()?;
    let level = m + 1;
    let jet = f.with_truncation(m).with_truncation(level);
    let layout = SliceLayout::new(jet.len(), jet.ambient_dim(), level);
    let gens: Vec<SparseVec> = generators(&jet, level, GroupFilter::SubgroupA(r))
        .into_iter()
        .map(|g| g.map_indices(|i| layout.remap(i)))
        .collect();
    let mut echelon = if track {
        Echelon::tracked(layout.dim())
    } else {
        Echelon::new(layout.dim())
    };
    for g in &gens {
        echelon.insert(g.clone());
    }
    Ok(SliceData {
        layout,
        echelon,
        generators: gens,
    })
}

fn transversal_from(data: &SliceData) -> Transversal {
    let b = &data.layout.basis;
    let mut directions = Vec::new();
    let mut image_dim = 0;
    for i in 0..b.components {
        for j in 0..b.ambient_dim {
            let col = data.layout.lower + i * b.ambient_dim + j;
            if data.echelon.is_pivot(col) {
                image_dim += 1;
            } else {
                directions.push((i, j));
            }
        }
    }
    Transversal {
        level: b.level,
        components: b.components,
        ambient_dim: b.ambient_dim,
        directions,
        tangent_rank: data.echelon.rank(),
        image_dim,
    }
}

/// Complete transversal at level `m + 1` for the `m`-jet of `f`.
pub fn complete_transversal(f: &Multigerm, m: u32) -> Result<Transversal> {
    complete_transversal_with(f, m, 1)
}

/// As [`complete_transversal`] but using the subgroup `A_r`.
pub fn complete_transversal_with(f: &Multigerm, m: u32, r: u32) -> Result<Transversal> {
    if m > f.truncation() {
        return Err(Error::LevelTooHigh {
            level: m,
            truncation: f.truncation(),
        });
    }
    Ok(transversal_from(&slice_data(f, m, r, false)?))
}

/// Transversals at target levels `from..=to` for the fixed jet `f`: each level
/// `l` uses `f` truncated (or zero-padded) to degree `l - 1`.
pub fn transversal_scan(f: &Multigerm, from: u32, to: u32) -> Result<Vec<Transversal>> {
    if from < 2 || from > to {
        return Err(Error::InvalidArgument(format!(
            "scan range {from}..{to} must satisfy 2 <= from <= to"
        )));
    }
    (from..=to)
        .map(|l| Ok(transversal_from(&slice_data(f, l - 1, 1, false)?)))
        .collect()
}

/// Outcome of [`reduce_step`].
#[derive(Clone, Debug)]
pub struct ReduceStep {
    pub transversal: Transversal,
    /// The transversal part of `G - F`, as a homogeneous multigerm.
    pub t: Multigerm,
    /// Coefficients `(generator index, value)` writing `G - F - t` in terms of
    /// the subgroup tangent generators.
    pub certificate: Vec<(usize, String)>,
}

/// Split the degree `m + 1` part of `g` into tangent image plus transversal.
pub fn reduce_step(g: &Multigerm, f: &Multigerm) -> Result<ReduceStep> {
    let m = f.truncation();
    let level = m + 1;
    if g.truncation() < level {
        return Err(Error::LevelTooHigh {
            level,
            truncation: g.truncation(),
        });
    }
    let g = g.with_truncation(level);
    if g.with_truncation(m) != *f {
        return Err(Error::InvalidArgument(
            "the m-jet of G must equal F".into(),
        ));
    }
    let data = slice_data(f, m, 1, true)?;
    let diff = g.add(&f.with_truncation(level).scale(&-crate::jet::int(1)))?;
    let v = diff.to_vector(level).map_indices(|i| data.layout.remap(i));
    let red = data.echelon.reduce(&v);
    for (col, _) in red.residual.entries() {
        match data.layout.slice_slot(*col) {
            Some(_) if !data.echelon.is_pivot(*col) => {}
            _ => {
                return Err(Error::Internal(
                    "residual left the transversal directions".into(),
                ))
            }
        }
    }
    let b = JetSpaceBasis::new(level, f.len(), f.ambient_dim());
    let t_vec = SparseVec::from_entries(red.residual.entries().iter().map(|(col, c)| {
        let (i, j) = data.layout.slice_slot(*col).unwrap();
        (b.index(i, j, level), c.clone())
    }));
    let certificate = red
        .combo
        .unwrap_or_default()
        .entries()
        .iter()
        .map(|(i, c)| (*i, c.to_string()))
        .collect();
    debug_assert!(data.generators.len() >= data.echelon.rank());
    Ok(ReduceStep {
        transversal: transversal_from(&data),
        t: Multigerm::from_vector(&t_vec, f.len(), f.ambient_dim(), level),
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mg(c: &[&[&str]], n: u32) -> Multigerm {
        Multigerm::parse(c, n).unwrap()
    }

    #[test]
    fn cusp_pair_transversal() {
        let f = mg(&[&["t", "0", "0"], &["0", "t^3", "0"]], 3);
        let t = complete_transversal(&f, 3).unwrap();
        assert_eq!(t.basis_strings(), vec!["(t^4, 0, 0)_2", "(0, 0, t^4)_2"]);
        assert_eq!(t.image_dim + t.dim(), t.slice_dim());
    }

    #[test]
    fn tacnode_like_transversal() {
        let f = mg(&[&["t", "0", "0"], &["t^2", "t^3", "0"]], 3);
        let t = complete_transversal(&f, 3).unwrap();
        assert_eq!(t.basis_strings(), vec!["(0, t^4, 0)_2", "(0, 0, t^4)_2"]);
    }

    #[test]
    fn axes_are_trivial_everywhere() {
        let g = Multigerm::axes(2, 1);
        for t in transversal_scan(&g, 2, 6).unwrap() {
            assert!(t.is_trivial(), "level {}", t.level);
        }
        assert!(complete_transversal(&g, 1).unwrap().is_trivial());
    }

    #[test]
    fn parity_of_transversals() {
        let f = mg(&[&["t", "0"], &["t^2", "t^3"]], 3);
        let scan = transversal_scan(&f, 4, 6).unwrap();
        let trivial: Vec<bool> = scan.iter().map(Transversal::is_trivial).collect();
        assert_eq!(trivial, vec![false, true, true]);
        let f = mg(&[&["t", "0"], &["t^3", "t^4"]], 4);
        assert!(transversal_scan(&f, 7, 8).unwrap().iter().all(Transversal::is_trivial));
    }

    #[test]
    fn reduce_step_examples() {
        let f = mg(&[&["t", "0"], &["t^2", "t^3"]], 3);
        let g = mg(&[&["t", "0"], &["t^2", "t^3 + 5t^4"]], 4);
        let step = reduce_step(&g, &f).unwrap();
        assert!(!step.t.to_vector(4).is_zero());
        let basis: Vec<SparseVec> = step.transversal.basis().iter().map(|b| b.to_vector(4)).collect();
        let e = Echelon::from_vectors(JetSpaceBasis::of(&f, 4).dim(), &basis);
        assert!(e.contains(&step.t.to_vector(4)));
        let step = reduce_step(&f.with_truncation(4), &f).unwrap();
        assert!(step.t.to_vector(4).is_zero());
        // x^4 e_1 only moves the first branch at level 4
        let g = mg(&[&["t + t^4", "0"], &["t^2", "t^3"]], 4);
        let step = reduce_step(&g, &f).unwrap();
        assert!(step.t.to_vector(4).is_zero());
        assert!(!step.certificate.is_empty());
    }

    #[test]
    fn level_checks() {
        let f = mg(&[&["t", "0"]], 2);
        assert!(complete_transversal(&f, 3).is_err());
        assert!(transversal_scan(&f, 1, 3).is_err());
        let g = mg(&[&["t", "t^2"]], 3);
        assert!(reduce_step(&g, &f).is_err());
    }
}
