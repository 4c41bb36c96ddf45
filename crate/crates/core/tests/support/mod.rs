//! Strategies and property bodies shared by the property suite and the
//! acceptance runner.

#![allow(dead_code)]

pub mod oracle;

use multigerm::catalog::fingerprint;
use multigerm::germs::AChange;
use multigerm::jet::int;
use multigerm::sampling::Sampler;
use multigerm::semigroup::value_semigroup;
use multigerm::tangent::orbit_dim_sequence;
use multigerm::transversal::complete_transversal;
use multigerm::{ComponentGerm, Jet, Multigerm};
use proptest::prelude::*;
use proptest::test_runner::{RngSeed, TestCaseError};

pub const T: u32 = 6;
pub const CASES: u32 = 256;

pub fn config() -> ProptestConfig {
    ProptestConfig {
        cases: CASES,
        rng_seed: RngSeed::Fixed(42),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

pub fn jet_strategy(min_exp: u32) -> impl Strategy<Value = Jet> {
    prop::collection::vec((min_exp..=T, -3i64..=3), 0..5)
        .prop_map(|terms| Jet::with_constant(terms.into_iter().map(|(e, c)| (e, int(c))), T))
}

pub fn germ_strategy() -> impl Strategy<Value = Multigerm> {
    (1usize..=2, 1usize..=3)
        .prop_flat_map(|(k, n)| prop::collection::vec(prop::collection::vec(jet_strategy(1), n), k))
        .prop_filter_map("degenerate component", |comps| {
            let comps: Vec<ComponentGerm> = comps
                .into_iter()
                .map(ComponentGerm::new)
                .collect::<Result<_, _>>()
                .ok()?;
            let f = Multigerm::new(comps).ok()?;
            f.check_nondegenerate().ok()?;
            Some(f)
        })
}

/// Small germs with distinct branches, the shapes the catalog is built from.
pub const SHAPES: &[&[&[&str]]] = &[
    &[&["t^2", "t^3"]],
    &[&["t^3", "t^4", "t^5"]],
    &[&["t^2", "t^5"]],
    &[&["t", "0"], &["0", "t"]],
    &[&["t", "0"], &["t^2", "t^3"]],
    &[&["t", "0"], &["t^2", "t^5"]],
    &[&["t", "0", "0"], &["t^2", "t^3", "0"]],
    &[&["t", "0", "0"], &["0", "t", "0"], &["0", "0", "t"]],
];

pub fn shape_strategy() -> impl Strategy<Value = (usize, u64)> {
    (0..SHAPES.len(), any::<u64>())
}

fn shape(i: usize) -> Multigerm {
    Multigerm::parse(SHAPES[i], T).unwrap()
}

fn changed(f: &Multigerm, seed: u64) -> Multigerm {
    let ch = AChange::random(f.ambient_dim(), f.len(), T, &mut Sampler::new(seed));
    f.apply(&ch).unwrap()
}

pub fn ring_laws((a, b, c): (Jet, Jet, Jet)) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.add(&b), b.add(&a));
    prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
    prop_assert_eq!(a.mul(&b), b.mul(&a));
    prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
    prop_assert_eq!(a.add(&Jet::zero(T)), a.clone());
    prop_assert_eq!(a.mul(&Jet::constant(int(1), T)), a.clone());
    prop_assert!(a.sub(&a).is_zero());
    Ok(())
}

pub fn composition_laws((a, b, c): (Jet, Jet, Jet)) -> Result<(), TestCaseError> {
    let left = a.compose(&b).unwrap().compose(&c).unwrap();
    let right = a.compose(&b.compose(&c).unwrap()).unwrap();
    prop_assert_eq!(left, right);
    Ok(())
}

pub fn reversion_inverts((lead, rest): (i64, Jet)) -> Result<(), TestCaseError> {
    let h = Jet::monomial(int(lead), 1, T).add(&rest);
    let g = h.reversion().unwrap();
    prop_assert_eq!(h.compose(&g).unwrap(), Jet::t(T));
    prop_assert_eq!(g.compose(&h).unwrap(), Jet::t(T));
    Ok(())
}

pub fn orbit_ranks_invariant((i, seed): (usize, u64)) -> Result<(), TestCaseError> {
    let f = shape(i);
    let g = changed(&f, seed);
    prop_assert_eq!(orbit_dim_sequence(&f, 4).unwrap(), orbit_dim_sequence(&g, 4).unwrap());
    Ok(())
}

pub fn semigroups_invariant((i, seed): (usize, u64)) -> Result<(), TestCaseError> {
    let f = shape(i);
    let g = changed(&f, seed);
    for (a, b) in f.components().iter().zip(g.components()) {
        for k in 0..=1 {
            let sa = value_semigroup(a, k, T).unwrap();
            let sb = value_semigroup(b, k, T).unwrap();
            prop_assert_eq!(sa.achieved, sb.achieved);
        }
    }
    Ok(())
}

pub fn fingerprints_invariant((i, seed): (usize, u64)) -> Result<(), TestCaseError> {
    let f = shape(i);
    let g = changed(&f, seed);
    let order: Vec<usize> = (0..g.len()).rev().collect();
    let g = g.permute_components(&order);
    prop_assert_eq!(fingerprint(&f, 4).unwrap(), fingerprint(&g, 4).unwrap());
    Ok(())
}

pub fn complement_identity((f, m): (Multigerm, u32)) -> Result<(), TestCaseError> {
    let r = complete_transversal(&f, m).unwrap().report();
    prop_assert_eq!(r.basis.len() + r.image_dim, r.slice_dim);
    prop_assert_eq!(r.trivial, r.basis.is_empty());
    Ok(())
}

pub fn stabilize_idempotent(f: Multigerm) -> Result<(), TestCaseError> {
    let (s, _) = f.stabilize();
    prop_assert!(s.is_stable());
    prop_assert_eq!(s.stabilize().0, s.clone());
    let (r, _) = f.reduce_embedding();
    prop_assert_eq!(r.reduce_embedding().0, r.clone());
    prop_assert!(r.ambient_dim() <= s.ambient_dim());
    Ok(())
}
