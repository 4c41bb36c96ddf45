//! `value_semigroup` against an oracle that shares no code with the library.

mod support;

use multigerm::ComponentGerm;
use num_bigint::BigInt;
use support::oracle::*;

#[test]
fn random_components_match_the_oracle() {
    check_random(50, 2024).unwrap();
}

#[test]
fn worked_examples() {
    check_worked().unwrap();
}

#[test]
fn elimination_sees_cancellation() {
    // (t^2, t^4 + t^5): y - x^2 has order 5, which no single monomial reaches.
    let sample = Sample {
        coords: vec![
            (0..=B).map(|e| BigInt::from(i64::from(e == 2))).collect(),
            (0..=B).map(|e| BigInt::from(i64::from(e == 4 || e == 5))).collect(),
        ],
        component: ComponentGerm::parse(&["t^2", "t^4 + t^5"], B as u32).unwrap(),
    };
    let (orders, _) = oracle(&sample, 0);
    assert!(orders.contains(&5));
    assert!(!orders.contains(&3));
}
