//! Exact coefficients: rational numbers times integer powers of the named
//! constants pi and e.
//!
//! A coefficient is a finite sum of monomials `q * pi^a * e^b` with `q`
//! rational. Most coefficients in practice are a single monomial (and very
//! often plain rationals); sums only appear when stacked systems add constant
//! terms with different constant parts. Numeric evaluation substitutes pi and
//! e from 64-digit decimal literals truncated to working precision.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// 64-digit decimal literals for the named constants.
pub const PI_LITERAL: &str =
    "3.141592653589793238462643383279502884197169399375105820974944592";
pub const E_LITERAL: &str =
    "2.718281828459045235360287471352662497757247093699959574966967628";

/// Integer exponents on the named constants of a single monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ConstPowers {
    pub pi: i32,
    pub e: i32,
}

impl ConstPowers {
    pub const NONE: ConstPowers = ConstPowers { pi: 0, e: 0 };

    fn is_empty(&self) -> bool {
        self.pi == 0 && self.e == 0
    }

    fn numeric(&self) -> f64 {
        let pi: f64 = PI_LITERAL.parse().unwrap();
        let e: f64 = E_LITERAL.parse().unwrap();
        pi.powi(self.pi) * e.powi(self.e)
    }
}

/// An exact coefficient. Kept in canonical form: no zero monomials, rationals
/// reduced (which `BigRational` guarantees), monomials sorted by constant
/// powers. `approx` marks values that were obtained numerically (e.g. initial
/// values produced by composition) rather than exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coefficient {
    terms: BTreeMap<ConstPowers, BigRational>,
    approx: bool,
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient { terms: BTreeMap::new(), approx: false }
    }

    pub fn one() -> Self {
        Coefficient::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Coefficient::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Coefficient::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rational(q: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(ConstPowers::NONE, q);
        }
        Coefficient { terms, approx: false }
    }

    /// A single monomial `q * pi^a * e^b`.
    pub fn monomial(q: BigRational, powers: ConstPowers) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(powers, q);
        }
        Coefficient { terms, approx: false }
    }

    /// `q * pi`.
    pub fn pi_times(q: BigRational) -> Self {
        Coefficient::monomial(q, ConstPowers { pi: 1, e: 0 })
    }

    pub fn pi() -> Self {
        Coefficient::pi_times(BigRational::one())
    }

    /// Exact representation of an f64, flagged as approximate.
    pub fn approx_from_f64(v: f64) -> Option<Self> {
        let q = BigRational::from_float(v)?;
        let mut c = Coefficient::from_rational(q);
        c.approx = true;
        Some(c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_approx(&self) -> bool {
        self.approx
    }

    pub fn set_approx(&mut self, approx: bool) {
        self.approx = approx;
    }

    /// True when the value is a plain rational (no pi/e factors).
    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(|p| p.is_empty())
    }

    /// The rational value, if this coefficient has no constant factors.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(q) = self.terms.get(&ConstPowers::NONE) {
                return Some(q.clone());
            }
        }
        None
    }

    /// Iterate the monomials in canonical order.
    pub fn monomials(&self) -> impl Iterator<Item = (&ConstPowers, &BigRational)> {
        self.terms.iter()
    }

    /// Substitute the named constants and evaluate to f64.
    pub fn numeric(&self) -> f64 {
        self.terms
            .iter()
            .map(|(p, q)| q.to_f64().unwrap_or(f64::NAN) * p.numeric())
            .sum()
    }

    /// Sum of absolute values of the numeric monomials. Coincides with
    /// `|numeric()|` for single-monomial coefficients.
    pub fn numeric_abs(&self) -> f64 {
        self.terms
            .iter()
            .map(|(p, q)| (q.to_f64().unwrap_or(f64::NAN) * p.numeric()).abs())
            .sum()
    }

    /// Exact multiplicative inverse. Defined for nonzero single-monomial
    /// coefficients only; sums have no inverse in this representation.
    pub fn inverse(&self) -> Option<Coefficient> {
        if self.terms.len() != 1 {
            return None;
        }
        let (p, q) = self.terms.iter().next().unwrap();
        let mut c = Coefficient::monomial(
            BigRational::one() / q.clone(),
            ConstPowers { pi: -p.pi, e: -p.e },
        );
        c.approx = self.approx;
        Some(c)
    }

    /// Exact absolute value: negates iff the numeric value is negative.
    /// (For single-monomial coefficients the sign is the rational's sign.)
    pub fn abs(&self) -> Coefficient {
        if self.numeric() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn insert(&mut self, p: ConstPowers, q: BigRational) {
        if q.is_zero() {
            return;
        }
        match self.terms.entry(p) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(q);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + q;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    /// Canonical text form. A single monomial renders as
    /// `num/den[*pi^k][*e^k]`; sums are joined with `+`; approximate values
    /// carry a leading `~`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if self.approx {
            s.push('~');
        }
        if self.is_zero() {
            s.push_str("0/1");
            return s;
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(p, q)| {
                let mut t = format!("{}/{}", q.numer(), q.denom());
                if p.pi != 0 {
                    t.push_str(&format!("*pi^{}", p.pi));
                }
                if p.e != 0 {
                    t.push_str(&format!("*e^{}", p.e));
                }
                t
            })
            .collect();
        s.push_str(&parts.join("+"));
        s
    }

    /// Parse the canonical text form.
    pub fn parse_text(s: &str) -> Result<Coefficient, CoeffParseError> {
        let s = s.trim();
        let (approx, body) = match s.strip_prefix('~') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        if body.is_empty() {
            return Err(CoeffParseError::new(s, "empty coefficient"));
        }
        let mut out = Coefficient::zero();
        // Split on '+' separating monomials; '+' never appears inside one.
        for part in body.split('+') {
            let (q, p) = parse_monomial(part).map_err(|m| CoeffParseError::new(s, &m))?;
            out.insert(p, q);
        }
        out.approx = approx;
        Ok(out)
    }
}

fn parse_monomial(s: &str) -> Result<(BigRational, ConstPowers), String> {
    let mut powers = ConstPowers::NONE;
    let mut rational: Option<BigRational> = None;
    for factor in s.split('*') {
        let factor = factor.trim();
        if let Some(rest) = factor.strip_prefix("pi^") {
            powers.pi += rest.parse::<i32>().map_err(|_| format!("bad pi exponent in {s:?}"))?;
        } else if factor == "pi" {
            powers.pi += 1;
        } else if let Some(rest) = factor.strip_prefix("e^") {
            powers.e += rest.parse::<i32>().map_err(|_| format!("bad e exponent in {s:?}"))?;
        } else if factor == "e" {
            powers.e += 1;
        } else if rational.is_none() {
            rational = Some(parse_rational(factor)?);
        } else {
            return Err(format!("unexpected factor {factor:?}"));
        }
    }
    let q = rational.ok_or_else(|| format!("missing rational part in {s:?}"))?;
    Ok((q, powers))
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = num.trim().parse().map_err(|_| format!("bad numerator {num:?}"))?;
    let d: BigInt = den.trim().parse().map_err(|_| format!("bad denominator {den:?}"))?;
    if d.is_zero() {
        return Err("zero denominator".to_string());
    }
    Ok(BigRational::new(n, d))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffParseError {
    pub input: String,
    pub message: String,
}

impl CoeffParseError {
    fn new(input: &str, message: &str) -> Self {
        CoeffParseError { input: input.to_string(), message: message.to_string() }
    }
}

impl fmt::Display for CoeffParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid coefficient {:?}: {}", self.input, self.message)
    }
}

impl std::error::Error for CoeffParseError {}

impl Add for &Coefficient {
    type Output = Coefficient;
    fn add(self, rhs: &Coefficient) -> Coefficient {
        let mut out = self.clone();
        out.approx = self.approx || rhs.approx;
        for (p, q) in &rhs.terms {
            out.insert(*p, q.clone());
        }
        out
    }
}

impl Sub for &Coefficient {
    type Output = Coefficient;
    fn sub(self, rhs: &Coefficient) -> Coefficient {
        let mut out = self.clone();
        out.approx = self.approx || rhs.approx;
        for (p, q) in &rhs.terms {
            out.insert(*p, -q.clone());
        }
        out
    }
}

impl Mul for &Coefficient {
    type Output = Coefficient;
    fn mul(self, rhs: &Coefficient) -> Coefficient {
        let mut out = Coefficient::zero();
        out.approx = self.approx || rhs.approx;
        for (pa, qa) in &self.terms {
            for (pb, qb) in &rhs.terms {
                out.insert(
                    ConstPowers { pi: pa.pi + pb.pi, e: pa.e + pb.e },
                    qa * qb,
                );
            }
        }
        out
    }
}

impl Neg for Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        let terms = self.terms.into_iter().map(|(p, q)| (p, -q)).collect();
        Coefficient { terms, approx: self.approx }
    }
}

/// Total order by numeric value, then structure; used only for canonical
/// sorting, not for exact comparisons.
impl PartialOrd for Coefficient {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(
            self.numeric()
                .partial_cmp(&other.numeric())
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.to_text().cmp(&other.to_text())),
        )
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: i64, d: i64) -> Coefficient {
        Coefficient::from_ratio(n, d)
    }

    #[test]
    fn rational_roundtrip_is_exact() {
        let third = c(1, 3);
        let text = third.to_text();
        assert_eq!(text, "1/3");
        assert_eq!(Coefficient::parse_text(&text).unwrap(), third);
    }

    #[test]
    fn pi_and_e_monomials() {
        let v = Coefficient::monomial(
            BigRational::new(BigInt::from(-3), BigInt::from(4)),
            ConstPowers { pi: 2, e: -1 },
        );
        assert_eq!(v.to_text(), "-3/4*pi^2*e^-1");
        assert_eq!(Coefficient::parse_text(&v.to_text()).unwrap(), v);
        let pi: f64 = PI_LITERAL.parse().unwrap();
        let e: f64 = E_LITERAL.parse().unwrap();
        assert!((v.numeric() - (-0.75 * pi * pi / e)).abs() < 1e-15);
    }

    #[test]
    fn sums_of_monomials() {
        let v = &c(15, 1) + &(&Coefficient::pi() * &Coefficient::pi());
        assert_eq!(v.to_text(), "15/1+1/1*pi^2");
        assert_eq!(Coefficient::parse_text("15/1+1/1*pi^2").unwrap(), v);
        assert!(!v.is_rational());
    }

    #[test]
    fn cancellation_drops_terms() {
        let v = &c(2, 3) - &c(2, 3);
        assert!(v.is_zero());
        assert_eq!(v.to_text(), "0/1");
    }

    #[test]
    fn empty_constant_factors_compare_as_rationals() {
        let a = c(6, 4);
        let b = c(3, 2);
        assert_eq!(a, b);
        assert_eq!(a.as_rational(), Some(BigRational::new(BigInt::from(3), BigInt::from(2))));
    }

    #[test]
    fn inverse_of_monomial() {
        let v = Coefficient::pi_times(BigRational::new(BigInt::from(2), BigInt::from(1)));
        let inv = v.inverse().unwrap();
        assert_eq!(inv.to_text(), "1/2*pi^-1");
        assert!((&v * &inv).as_rational().unwrap().is_one());
        let sum = &c(1, 1) + &Coefficient::pi();
        assert!(sum.inverse().is_none());
        assert!(Coefficient::zero().inverse().is_none());
    }

    #[test]
    fn approx_flag_survives_text() {
        let v = Coefficient::approx_from_f64(0.761594155955765).unwrap();
        assert!(v.is_approx());
        let back = Coefficient::parse_text(&v.to_text()).unwrap();
        assert_eq!(back, v);
        assert!(back.is_approx());
        assert_eq!(back.numeric(), 0.761594155955765);
    }

    #[test]
    fn named_constants_match_f64() {
        let pi: f64 = PI_LITERAL.parse().unwrap();
        let e: f64 = E_LITERAL.parse().unwrap();
        assert_eq!(pi, std::f64::consts::PI);
        assert_eq!(e, std::f64::consts::E);
    }
}
