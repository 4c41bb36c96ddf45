//! `value_semigroup` against an oracle that shares no code with the library:
//! integer power series, fraction-free elimination for prefix ranks and a
//! bounded search over small combinations of monomial pullbacks.

use multigerm::jet::int;
use multigerm::semigroup::value_semigroup;
use multigerm::{ComponentGerm, Jet};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const B: usize = 12;

pub type Series = Vec<BigInt>;

pub fn mul(a: &Series, b: &Series) -> Series {
    let mut out = vec![BigInt::zero(); B + 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(B + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn order(s: &Series) -> Option<usize> {
    s.iter().position(|c| !c.is_zero())
}

/// Exponent vectors of total degree at least `k` whose weighted order stays
/// at most `B`.
pub fn monomials(orders: &[usize], k: u32) -> Vec<Vec<u32>> {
    fn go(orders: &[usize], pos: usize, used: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == orders.len() {
            out.push(cur.clone());
            return;
        }
        let mut a = 0u32;
        while used + a as usize * orders[pos] <= B {
            cur.push(a);
            go(orders, pos + 1, used + a as usize * orders[pos], cur, out);
            cur.pop();
            a += 1;
        }
    }
    let mut out = Vec::new();
    go(orders, 0, 0, &mut Vec::new(), &mut out);
    out.retain(|m| m.iter().sum::<u32>() >= k);
    out
}

pub fn pullback(coords: &[Series], m: &[u32]) -> Series {
    let mut out = vec![BigInt::zero(); B + 1];
    out[0] = BigInt::from(1);
    for (c, &a) in coords.iter().zip(m) {
        for _ in 0..a {
            out = mul(&out, c);
        }
    }
    out
}

/// Orders `e` with rank(columns <= e) > rank(columns < e), where columns are
/// exponents and rows are the pullbacks.
pub fn prefix_rank_orders(rows: &[Series]) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<BigInt>)> = Vec::new();
    let mut out = Vec::new();
    for e in 0..=B {
        // Column e, as a vector over the rows.
        let mut v: Vec<BigInt> = rows.iter().map(|r| r[e].clone()).collect();
        for (p, b) in &basis {
            if v[*p].is_zero() {
                continue;
            }
            let (bp, vp) = (b[*p].clone(), v[*p].clone());
            for (x, y) in v.iter_mut().zip(b) {
                *x = &bp * &*x - &vp * y;
            }
            let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
            if !g.is_zero() {
                for x in v.iter_mut() {
                    *x = &*x / &g;
                }
            }
        }
        if let Some(p) = v.iter().position(|x| !x.is_zero()) {
            basis.push((p, v));
            out.push(e);
        }
    }
    out
}

pub struct Sample {
    pub coords: Vec<Series>,
    pub component: ComponentGerm,
}

pub fn random_component(rng: &mut ChaCha8Rng) -> Sample {
    let n = rng.gen_range(2..=3);
    let mult = rng.gen_range(1..=4);
    let mut coords = Vec::with_capacity(n);
    for j in 0..n {
        let mut s = vec![BigInt::zero(); B + 1];
        if j == 0 {
            s[mult] = BigInt::from(1);
        }
        for c in s.iter_mut().skip(mult + 1) {
            if rng.gen_bool(0.3) {
                *c += BigInt::from(rng.gen_range(-2i64..=2));
            }
        }
        coords.push(s);
    }
    let jets = coords
        .iter()
        .map(|s| {
            Jet::from_terms(
                s.iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(e, c)| (e as u32, int(i64::try_from(c).unwrap()))),
                B as u32,
            )
            .unwrap()
        })
        .collect();
    Sample {
        coords,
        component: ComponentGerm::new(jets).unwrap(),
    }
}

pub fn oracle(s: &Sample, k: u32) -> (Vec<usize>, Vec<Series>) {
    let orders: Vec<usize> = s.coords.iter().map(|c| order(c).unwrap_or(B + 1)).collect();
    let rows: Vec<Series> = monomials(&orders, k)
        .iter()
        .map(|m| pullback(&s.coords, m))
        .collect();
    (prefix_rank_orders(&rows), rows)
}

/// Orders reached by combinations of at most three pullbacks with
/// coefficients in {-2, -1, 1, 2}.
pub fn combination_orders(rows: &[Series]) -> Vec<usize> {
    let coeffs = [-2i64, -1, 1, 2];
    let mut found = [false; B + 1];
    let mut note = |s: &Series| {
        if let Some(o) = order(s) {
            found[o] = true;
        }
    };
    let small: Vec<&Series> = rows.iter().take(10).collect();
    for r in rows {
        note(r);
    }
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            for cb in coeffs {
                let s: Series = a.iter().zip(b).map(|(x, y)| x + y * cb).collect();
                note(&s);
            }
        }
    }
    for (i, a) in small.iter().enumerate() {
        for (j, b) in small.iter().enumerate().skip(i + 1) {
            for c in &small[j + 1..] {
                for cb in coeffs {
                    for cc in coeffs {
                        let s: Series = a
                            .iter()
                            .zip(b.iter())
                            .zip(c.iter())
                            .map(|((x, y), z)| x + y * cb + z * cc)
                            .collect();
                        note(&s);
                    }
                }
            }
        }
    }
    (0..=B).filter(|e| found[*e]).collect()
}

/// Runs `cases` random components through the library and the oracle.
pub fn check_random(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let s = random_component(&mut rng);
        for k in 0..=1 {
            let lib = value_semigroup(&s.component, k, B as u32).map_err(|e| e.to_string())?;
            let (expected, rows) = oracle(&s, k);
            let got: Vec<usize> = lib.achieved.iter().map(|v| *v as usize).collect();
            if got != expected {
                return Err(format!("case {case}, k = {k}: got {got:?}, oracle {expected:?}"));
            }
            for o in combination_orders(&rows) {
                if !lib.contains(o as u32) {
                    return Err(format!("case {case}, k = {k}: order {o} reached but missing"));
                }
            }
        }
    }
    Ok(())
}

pub const WORKED: [(&[&str], &[u32]); 3] = [
    (&["t^2", "t^3"], &[1]),
    (&["t^3", "t^4"], &[1, 2, 5]),
    (&["t^2", "t^4 + t^5"], &[1, 3]),
];

pub fn check_worked() -> Result<(), String> {
    for (coords, gaps) in WORKED {
        let c = ComponentGerm::parse(coords, B as u32).map_err(|e| e.to_string())?;
        let s = value_semigroup(&c, 0, B as u32).map_err(|e| e.to_string())?;
        if !s.complete() || s.gaps() != gaps {
            return Err(format!("{coords:?}: gaps {:?}", s.gaps()));
        }
    }
    Ok(())
}
