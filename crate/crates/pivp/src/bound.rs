//! Growth-bound expressions: nondecreasing functions of a nonnegative
//! argument, closed under addition, multiplication, max, composition,
//! integer powers and exp.

use crate::coeff::Coefficient;
use crate::poly::Polynomial;

/// Expression tree for a growth bound. Every node denotes a nondecreasing
/// function of its nonnegative argument; `Const` values are expected to be
/// nonnegative (checked by the sampled monotonicity test, not by type).
#[derive(Debug, Clone, PartialEq)]
pub enum BoundExpr {
    /// alpha -> alpha
    Identity,
    /// alpha -> c
    Const(Coefficient),
    Add(Box<BoundExpr>, Box<BoundExpr>),
    Mul(Box<BoundExpr>, Box<BoundExpr>),
    Max(Box<BoundExpr>, Box<BoundExpr>),
    /// Compose(f, g) = alpha -> f(g(alpha))
    Compose(Box<BoundExpr>, Box<BoundExpr>),
    Exp(Box<BoundExpr>),
    Power(Box<BoundExpr>, u32),
}

impl BoundExpr {
    pub fn constant(c: Coefficient) -> Self {
        BoundExpr::Const(c)
    }

    pub fn constant_int(n: i64) -> Self {
        BoundExpr::Const(Coefficient::from_int(n))
    }

    pub fn add(a: BoundExpr, b: BoundExpr) -> Self {
        BoundExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: BoundExpr, b: BoundExpr) -> Self {
        BoundExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn max(a: BoundExpr, b: BoundExpr) -> Self {
        BoundExpr::Max(Box::new(a), Box::new(b))
    }

    pub fn max_of(items: Vec<BoundExpr>) -> Self {
        let mut it = items.into_iter();
        let first = it.next().expect("max_of needs at least one bound");
        it.fold(first, BoundExpr::max)
    }

    pub fn compose(outer: BoundExpr, inner: BoundExpr) -> Self {
        BoundExpr::Compose(Box::new(outer), Box::new(inner))
    }

    pub fn exp(a: BoundExpr) -> Self {
        BoundExpr::Exp(Box::new(a))
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        match self {
            BoundExpr::Identity => alpha,
            BoundExpr::Const(c) => c.numeric(),
            BoundExpr::Add(a, b) => a.eval(alpha) + b.eval(alpha),
            BoundExpr::Mul(a, b) => a.eval(alpha) * b.eval(alpha),
            BoundExpr::Max(a, b) => a.eval(alpha).max(b.eval(alpha)),
            BoundExpr::Compose(f, g) => f.eval(g.eval(alpha)),
            BoundExpr::Exp(a) => a.eval(alpha).exp(),
            BoundExpr::Power(a, k) => a.eval(alpha).powi(*k as i32),
        }
    }

    /// True when no `Exp` node is reachable; such bounds grow at most
    /// polynomially.
    pub fn is_polynomially_bounded(&self) -> bool {
        match self {
            BoundExpr::Identity | BoundExpr::Const(_) => true,
            BoundExpr::Add(a, b) | BoundExpr::Mul(a, b) | BoundExpr::Max(a, b) | BoundExpr::Compose(a, b) => {
                a.is_polynomially_bounded() && b.is_polynomially_bounded()
            }
            BoundExpr::Exp(_) => false,
            BoundExpr::Power(a, _) => a.is_polynomially_bounded(),
        }
    }

    /// Sampled monotonicity check on [0, 1000]: returns the first offending
    /// pair if some sampled alpha1 < alpha2 has eval(alpha1) > eval(alpha2).
    pub fn check_nondecreasing(&self) -> Option<(f64, f64)> {
        let mut samples: Vec<f64> = (0..=200).map(|i| i as f64 * 5.0).collect();
        samples.extend((0..40).map(|i| i as f64 * 0.025));
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut prev: Option<(f64, f64)> = None;
        for &a in &samples {
            let v = self.eval(a);
            if let Some((pa, pv)) = prev {
                // Tiny slack for float noise in deep trees.
                if pv > v * (1.0 + 1e-12) + 1e-300 {
                    return Some((pa, a));
                }
            }
            prev = Some((a, v));
        }
        None
    }

    /// A nondecreasing polynomial with rational coefficients that dominates
    /// this bound on [0, inf). `None` when an `Exp` node is present. Max
    /// nodes are over-approximated by sums.
    pub fn poly_majorant(&self) -> Option<Polynomial> {
        let x = Polynomial::var(1, 0);
        match self {
            BoundExpr::Identity => Some(x),
            BoundExpr::Const(c) => Some(Polynomial::constant(1, c.abs())),
            BoundExpr::Add(a, b) | BoundExpr::Max(a, b) => {
                Some(a.poly_majorant()?.add(&b.poly_majorant()?))
            }
            BoundExpr::Mul(a, b) => Some(a.poly_majorant()?.mul(&b.poly_majorant()?)),
            BoundExpr::Compose(f, g) => {
                let inner = g.poly_majorant()?;
                let outer = f.poly_majorant()?;
                // Substitute: outer has nonnegative-coefficient monotone use,
                // composing majorants keeps domination on [0, inf).
                let mut acc = Polynomial::zero(1);
                for (m, c) in outer.terms() {
                    let mut term = Polynomial::constant(1, c.abs());
                    term = term.mul(&inner.pow(m.0[0]));
                    acc = acc.add(&term);
                }
                Some(acc)
            }
            BoundExpr::Exp(_) => None,
            BoundExpr::Power(a, k) => Some(a.poly_majorant()?.pow(*k)),
        }
    }
}

/// Whether a bound expression certifies membership in the polynomially
/// bounded class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyBoundedFlag {
    pub is_poly: bool,
}

impl PolyBoundedFlag {
    pub fn of(bound: Option<&BoundExpr>) -> Self {
        PolyBoundedFlag {
            is_poly: bound.map(|b| b.is_polynomially_bounded()).unwrap_or(false),
        }
    }
}
