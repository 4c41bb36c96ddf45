//! Truncated power series in one variable `t` with exact rational coefficients.
//!
//! A [`Jet`] stores the coefficients of `t^e` for `e <= truncation`; everything
//! above the truncation order is unknown. Binary operations truncate to the
//! smaller of the two orders, so precision can never silently increase.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact coefficient field.
pub type Rational = num_rational::BigRational;

/// Build a rational from a small numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Build an integral rational.
pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Vanishing order of a jet; `Infinite` when every known coefficient is zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Order {
    pub fn finite(self) -> Option<u32> {
        match self {
            Order::Finite(v) => Some(v),
            Order::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Order::Infinite)
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(v) => write!(f, "{v}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

/// A truncated univariate power series.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Jet {
    truncation: u32,
    coeffs: BTreeMap<u32, Rational>,
}

impl Jet {
    pub fn zero(truncation: u32) -> Self {
        Jet {
            truncation,
            coeffs: BTreeMap::new(),
        }
    }

    /// `c * t^e`; yields the zero jet when `e` exceeds the truncation.
    pub fn monomial(c: Rational, e: u32, truncation: u32) -> Self {
        let mut jet = Jet::zero(truncation);
        jet.set(e, c);
        jet
    }

    /// `t`, the identity reparametrization.
    pub fn t(truncation: u32) -> Self {
        Jet::monomial(Rational::one(), 1, truncation)
    }

    /// `t^e` with unit coefficient.
    pub fn power(e: u32, truncation: u32) -> Self {
        Jet::monomial(Rational::one(), e, truncation)
    }

    /// Germ jets have no constant term; a zero exponent is rejected.
    pub fn from_terms<I>(terms: I, truncation: u32) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, Rational)>,
    {
        let mut jet = Jet::zero(truncation);
        for (e, c) in terms {
            if e == 0 && !c.is_zero() {
                return Err(Error::ConstantTerm);
            }
            jet.add_term(e, c);
        }
        Ok(jet)
    }

    /// Internal constructor admitting a constant term, used for unit factors
    /// and intermediate sums.
    pub fn with_constant<I>(terms: I, truncation: u32) -> Self
    where
        I: IntoIterator<Item = (u32, Rational)>,
    {
        let mut jet = Jet::zero(truncation);
        for (e, c) in terms {
            jet.add_term(e, c);
        }
        jet
    }

    pub fn constant(c: Rational, truncation: u32) -> Self {
        Jet::with_constant([(0, c)], truncation)
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, e: u32) -> Rational {
        self.coeffs.get(&e).cloned().unwrap_or_else(Rational::zero)
    }

    /// Nonzero terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &Rational)> + '_ {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(0)
    }

    pub fn order(&self) -> Order {
        match self.coeffs.keys().next() {
            Some(e) => Order::Finite(*e),
            None => Order::Infinite,
        }
    }

    /// Highest exponent with a nonzero coefficient.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    /// Leading (lowest-order) coefficient.
    pub fn leading_coeff(&self) -> Option<&Rational> {
        self.coeffs.values().next()
    }

    fn set(&mut self, e: u32, c: Rational) {
        if e > self.truncation || c.is_zero() {
            self.coeffs.remove(&e);
        } else {
            self.coeffs.insert(e, c);
        }
    }

    fn add_term(&mut self, e: u32, c: Rational) {
        if e > self.truncation || c.is_zero() {
            return;
        }
        let sum = self.coeff(e) + c;
        self.set(e, sum);
    }

    /// Drop every term above `m` and lower the truncation order to `m`.
    pub fn truncate(&self, m: u32) -> Jet {
        let m = m.min(self.truncation);
        Jet {
            truncation: m,
            coeffs: self
                .coeffs
                .range(..=m)
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        }
    }

    /// Reinterpret with a different truncation order. Raising the order asserts
    /// that the unknown coefficients are zero; lowering it truncates.
    pub fn with_truncation(&self, n: u32) -> Jet {
        if n <= self.truncation {
            self.truncate(n)
        } else {
            Jet {
                truncation: n,
                coeffs: self.coeffs.clone(),
            }
        }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let n = self.truncation.min(other.truncation);
        let mut out = self.truncate(n);
        for (e, c) in other.coeffs.range(..=n) {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Jet {
        Jet {
            truncation: self.truncation,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }

    pub fn scale(&self, s: &Rational) -> Jet {
        if s.is_zero() {
            return Jet::zero(self.truncation);
        }
        Jet {
            truncation: self.truncation,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, c * s)).collect(),
        }
    }

    /// Multiply by `t^s`, keeping the truncation order.
    pub fn shift(&self, s: u32) -> Jet {
        let n = self.truncation;
        Jet {
            truncation: n,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(e, _)| **e + s <= n)
                .map(|(e, c)| (*e + s, c.clone()))
                .collect(),
        }
    }

    /// Cauchy product truncated at the smaller order.
    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.truncation.min(other.truncation);
        let mut acc: BTreeMap<u32, Rational> = BTreeMap::new();
        for (ea, ca) in self.coeffs.range(..=n) {
            for (eb, cb) in other.coeffs.range(..=n - ea) {
                *acc.entry(ea + eb).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Jet {
            truncation: n,
            coeffs: acc,
        }
    }

    pub fn pow(&self, k: u32) -> Jet {
        let mut out = Jet::constant(Rational::one(), self.truncation);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// `self(inner(t))`, truncated at the smaller order. `inner` must vanish at 0.
    pub fn compose(&self, inner: &Jet) -> Result<Jet> {
        if !inner.constant_term().is_zero() {
            return Err(Error::ConstantTerm);
        }
        let n = self.truncation.min(inner.truncation);
        let inner = inner.truncate(n);
        let mut out = Jet::zero(n);
        // Horner in increasing powers of `inner`.
        let mut power = Jet::constant(Rational::one(), n);
        let mut last = 0u32;
        for (e, c) in self.coeffs.range(..=n) {
            for _ in last..*e {
                power = power.mul(&inner);
            }
            last = *e;
            if power.is_zero() {
                break;
            }
            out = out.add(&power.scale(c));
        }
        Ok(out)
    }

    /// Formal derivative. The truncation order is kept; the coefficient of
    /// `t^N` in the result would need `t^{N+1}` of the input and is left zero.
    pub fn derivative(&self) -> Jet {
        let n = self.truncation;
        Jet {
            truncation: n,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(e, _)| **e >= 1)
                .map(|(e, c)| (e - 1, c * Rational::from_integer(BigInt::from(*e))))
                .collect(),
        }
    }

    /// Compositional inverse of a unit reparametrization `h(t) = a t + ...`, `a != 0`.
    pub fn reversion(&self) -> Result<Jet> {
        let n = self.truncation;
        let a = self.coeff(1);
        if !self.constant_term().is_zero() || a.is_zero() {
            return Err(Error::NotInvertible);
        }
        // Newton-free fixed point: g = (t - (h(g) - a g)) / a, one order per pass.
        let mut g = Jet::monomial(a.recip(), 1, n);
        let t = Jet::t(n);
        let higher = self.sub(&Jet::monomial(a.clone(), 1, n));
        for _ in 1..n {
            let correction = higher.compose(&g)?;
            g = t.sub(&correction).scale(&a.recip());
        }
        Ok(g)
    }

    pub fn parse(s: &str, truncation: u32) -> Result<Jet> {
        let terms = parse_terms(s)?;
        Jet::from_terms(terms, truncation)
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O(t^{})", self, self.truncation + 1)
    }
}

fn write_coeff(f: &mut fmt::Formatter<'_>, c: &Rational, e: u32) -> fmt::Result {
    let a = c.abs();
    if e == 0 {
        return write!(f, "{a}");
    }
    if !a.is_one() {
        write!(f, "{a}")?;
    }
    if e == 1 {
        f.write_str("t")
    } else {
        write!(f, "t^{e}")
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.coeffs.iter().enumerate() {
            let negative = c.is_negative();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            write_coeff(f, c, *e)?;
        }
        Ok(())
    }
}

/// Parse `"t^2 + 3/2t^5 - t^{7}"` into `(exponent, coefficient)` pairs.
/// Constant terms are returned with exponent 0; callers decide whether to
/// admit them.
pub fn parse_terms(s: &str) -> Result<Vec<(u32, Rational)>> {
    let src: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = |msg: &str| Error::Parse(format!("{msg} in jet \"{s}\""));
    if src.is_empty() {
        return Err(err("empty expression"));
    }
    let mut terms = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let mut sign = Rational::one();
        if src[i] == '+' || src[i] == '-' {
            if src[i] == '-' {
                sign = -sign;
            }
            i += 1;
        } else if i > 0 {
            return Err(err("expected '+' or '-'"));
        }
        let start = i;
        while i < src.len() && (src[i].is_ascii_digit() || src[i] == '/') {
            i += 1;
        }
        let coeff = if i > start {
            let text: String = src[start..i].iter().collect();
            Rational::from_str(&text).map_err(|_| err("bad coefficient"))?
        } else {
            Rational::one()
        };
        if i < src.len() && src[i] == '*' {
            i += 1;
        }
        let exponent = if i < src.len() && src[i] == 't' {
            i += 1;
            if i < src.len() && src[i] == '^' {
                i += 1;
                let braced = i < src.len() && src[i] == '{';
                if braced {
                    i += 1;
                }
                let es = i;
                while i < src.len() && src[i].is_ascii_digit() {
                    i += 1;
                }
                if es == i {
                    return Err(err("missing exponent"));
                }
                let text: String = src[es..i].iter().collect();
                if braced {
                    if i >= src.len() || src[i] != '}' {
                        return Err(err("unclosed brace"));
                    }
                    i += 1;
                }
                text.parse::<u32>().map_err(|_| err("bad exponent"))?
            } else {
                1
            }
        } else if i == start {
            return Err(err("expected a term"));
        } else {
            0
        };
        terms.push((exponent, sign * coeff));
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(s: &str, n: u32) -> Jet {
        Jet::parse(s, n).unwrap()
    }

    #[test]
    fn add_cancels_and_truncates() {
        assert_eq!(j("t^2 + t^3", 5).add(&j("-t^3", 5)), j("t^2", 5));
        assert_eq!(j("t^2", 5).add(&Jet::zero(5)), j("t^2", 5));
        assert_eq!(j("t^4", 3).add(&j("t^2", 3)), j("t^2", 3));
        assert_eq!(j("t^4", 5).add(&j("t^2", 3)).truncation(), 3);
    }

    #[test]
    fn mul_examples() {
        assert_eq!(j("t^2", 6).mul(&j("t^3", 6)), j("t^5", 6));
        assert_eq!(
            j("t^2 + t^3", 6).mul(&j("t^2 - t^3", 6)),
            j("t^4 - t^6", 6)
        );
        assert!(j("t^3", 5).mul(&j("t^3", 5)).is_zero());
    }

    #[test]
    fn compose_examples() {
        assert_eq!(
            j("t^2", 4).compose(&j("t + t^2", 4)).unwrap(),
            j("t^2 + 2t^3 + t^4", 4)
        );
        assert_eq!(j("t^3", 4).compose(&j("2t", 4)).unwrap(), j("8t^3", 4));
        let inner = j("3t^2 - 1/2t^5", 6);
        assert_eq!(Jet::t(6).compose(&inner).unwrap(), inner);
        let c = Jet::with_constant([(0, int(1)), (1, int(1))], 4);
        assert!(matches!(j("t^2", 4).compose(&c), Err(Error::ConstantTerm)));
    }

    #[test]
    fn order_examples() {
        assert_eq!(j("t^3 + t^5", 6).order(), Order::Finite(3));
        assert_eq!(Jet::zero(6).order(), Order::Infinite);
        assert!(Order::Finite(100) < Order::Infinite);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(j("t^2 + t^5", 5).derivative(), j("2t + 5t^4", 5));
        assert!(Jet::zero(5).derivative().is_zero());
        assert_eq!(j("t^5", 5).derivative(), j("5t^4", 5));
    }

    #[test]
    fn reversion_inverts() {
        let h = j("2t + t^2 - 3t^4", 7);
        let g = h.reversion().unwrap();
        assert_eq!(h.compose(&g).unwrap(), Jet::t(7));
        assert_eq!(g.compose(&h).unwrap(), Jet::t(7));
        assert!(j("t^2", 5).reversion().is_err());
    }

    #[test]
    fn parse_and_print() {
        let a = j("t^2 + 3/2t^5", 6);
        assert_eq!(a.coeff(5), rat(3, 2));
        assert_eq!(a.to_string(), "t^2 + 3/2t^5");
        assert_eq!(j("-t^{3} + 2*t", 4).to_string(), "2t - t^3");
        assert_eq!(j("0", 4), Jet::zero(4));
        assert!(Jet::parse("t^", 4).is_err());
        assert!(Jet::parse("1 + t", 4).is_err());
        assert!(Jet::parse("t t", 4).is_err());
    }
}
