//! The intermediate representation: polynomial initial value problems with
//! initial data, output selection and tracked growth bounds, plus the
//! built-in library of elementary systems.
//!
//! A `Pivp` describes a state function `y` of `d` inputs with Jacobian
//! `p(y(x))` (an n x d matrix of polynomials in the n state variables),
//! base point `x0` with `y(x0) = y0`, and outputs the first `l` state
//! components. For `d = 1` this is the classic autonomous system
//! `y' = p(y), y(t0) = y0`.

use crate::bound::{BoundExpr, PolyBoundedFlag};
use crate::closure::ClosureTrace;
use crate::coeff::Coefficient;
use crate::poly::{PolyMatrix, Polynomial};
use num::rational::BigRational;
use std::fmt;

/// Declarative domain of definition. The paper's domains are arbitrary open
/// connected sets; these variants are the finitely representable stand-ins.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    AllSpace,
    /// Per-coordinate bounds, `None` meaning unbounded on that side.
    Box {
        lo: Vec<Option<f64>>,
        hi: Vec<Option<f64>>,
    },
    /// User-asserted convexity: straight-segment evaluation is allowed.
    DeclaredConvex,
    /// Evaluation requires an explicit path from the base point.
    PathRequired,
}

impl Domain {
    pub fn unbounded_box(d: usize) -> Self {
        Domain::Box { lo: vec![None; d], hi: vec![None; d] }
    }

    /// Membership check; `AllSpace`, `DeclaredConvex` and `PathRequired`
    /// cannot be checked pointwise and always pass.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box { lo, hi } => {
                if lo.len() != x.len() || hi.len() != x.len() {
                    return false;
                }
                x.iter().zip(lo.iter().zip(hi.iter())).all(|(&v, (l, h))| {
                    l.map(|l| v >= l).unwrap_or(true) && h.map(|h| v <= h).unwrap_or(true)
                })
            }
            _ => true,
        }
    }

    /// Whether evaluation may use the straight segment from the base point.
    pub fn straight_segments_allowed(&self) -> bool {
        !matches!(self, Domain::PathRequired)
    }
}

/// A polynomial initial value problem.
#[derive(Debug, Clone)]
pub struct Pivp {
    /// State dimension n.
    pub state_dim: usize,
    /// Input dimension d (1 for unidimensional systems).
    pub input_dim: usize,
    /// Number of output components; outputs are the first `output_dim`
    /// state variables.
    pub output_dim: usize,
    /// n x d matrix of polynomials with arity n.
    pub rhs: PolyMatrix,
    /// Base input point, length d.
    pub x0: Vec<Coefficient>,
    /// Initial state, length n.
    pub y0: Vec<Coefficient>,
    /// Optional growth bound: along trajectories, the state sup-norm should
    /// stay below `bound(input sup-norm)`. Checked numerically, not assumed.
    pub bound: Option<BoundExpr>,
    pub domain: Domain,
    /// Provenance of generated systems; not serialized, ignored by equality.
    pub trace: Option<Box<ClosureTrace>>,
}

impl PartialEq for Pivp {
    fn eq(&self, other: &Self) -> bool {
        self.state_dim == other.state_dim
            && self.input_dim == other.input_dim
            && self.output_dim == other.output_dim
            && self.rhs == other.rhs
            && self.x0 == other.x0
            && self.y0 == other.y0
            && self.bound == other.bound
            && self.domain == other.domain
    }
}

impl Pivp {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        rhs: PolyMatrix,
        x0: Vec<Coefficient>,
        y0: Vec<Coefficient>,
    ) -> Self {
        let state_dim = rhs.rows();
        Pivp {
            state_dim,
            input_dim,
            output_dim,
            rhs,
            x0,
            y0,
            bound: None,
            domain: Domain::AllSpace,
            trace: None,
        }
    }

    pub fn with_bound(mut self, bound: BoundExpr) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn x0_f64(&self) -> Vec<f64> {
        self.x0.iter().map(|c| c.numeric()).collect()
    }

    pub fn y0_f64(&self) -> Vec<f64> {
        self.y0.iter().map(|c| c.numeric()).collect()
    }

    pub fn poly_bounded(&self) -> PolyBoundedFlag {
        PolyBoundedFlag::of(self.bound.as_ref())
    }

    /// Structural validation; an empty list means the system is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.rhs.rows() != self.state_dim {
            out.push(Violation::RhsRows { expected: self.state_dim, got: self.rhs.rows() });
        }
        if self.rhs.cols() != self.input_dim {
            out.push(Violation::RhsCols { expected: self.input_dim, got: self.rhs.cols() });
        }
        if self.state_dim > 0 && self.rhs.arity() != self.state_dim {
            out.push(Violation::RhsArity { expected: self.state_dim, got: self.rhs.arity() });
        }
        if self.x0.len() != self.input_dim {
            out.push(Violation::X0Length { expected: self.input_dim, got: self.x0.len() });
        }
        if self.y0.len() != self.state_dim {
            out.push(Violation::Y0Length { expected: self.state_dim, got: self.y0.len() });
        }
        if self.output_dim == 0 || self.output_dim > self.state_dim {
            out.push(Violation::OutputDim { output_dim: self.output_dim, state_dim: self.state_dim });
        }
        if let Domain::Box { lo, hi } = &self.domain {
            if lo.len() != self.input_dim || hi.len() != self.input_dim {
                out.push(Violation::DomainDimension {
                    expected: self.input_dim,
                    got: lo.len().max(hi.len()),
                });
            }
        }
        if self.x0.len() == self.input_dim && !self.domain.contains(&self.x0_f64()) {
            out.push(Violation::X0OutsideDomain);
        }
        if let Some(bound) = &self.bound {
            if let Some((a, b)) = bound.check_nondecreasing() {
                out.push(Violation::BoundNotNondecreasing { at: a, then: b });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RhsRows { expected: usize, got: usize },
    RhsCols { expected: usize, got: usize },
    RhsArity { expected: usize, got: usize },
    X0Length { expected: usize, got: usize },
    Y0Length { expected: usize, got: usize },
    OutputDim { output_dim: usize, state_dim: usize },
    DomainDimension { expected: usize, got: usize },
    X0OutsideDomain,
    BoundNotNondecreasing { at: f64, then: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RhsRows { expected, got } => {
                write!(f, "rhs has {got} rows but state dimension is {expected}")
            }
            Violation::RhsCols { expected, got } => {
                write!(f, "rhs has {got} columns but input dimension is {expected}")
            }
            Violation::RhsArity { expected, got } => {
                write!(f, "rhs arity {got} does not match state dimension {expected}")
            }
            Violation::X0Length { expected, got } => {
                write!(f, "x0 has length {got}, expected input dimension {expected}")
            }
            Violation::Y0Length { expected, got } => {
                write!(f, "y0 has length {got}, expected state dimension {expected}")
            }
            Violation::OutputDim { output_dim, state_dim } => {
                write!(f, "output dimension {output_dim} must be in 1..={state_dim}")
            }
            Violation::DomainDimension { expected, got } => {
                write!(f, "domain box has {got} coordinates, expected {expected}")
            }
            Violation::X0OutsideDomain => write!(f, "x0 lies outside the declared domain"),
            Violation::BoundNotNondecreasing { at, then } => {
                write!(f, "bound decreases between alpha={at} and alpha={then}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinError {
    Unknown(String),
    BadParameter(String),
}

impl fmt::Display for BuiltinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinError::Unknown(name) => write!(f, "unknown builtin {name:?}"),
            BuiltinError::BadParameter(msg) => write!(f, "bad builtin parameter: {msg}"),
        }
    }
}

impl std::error::Error for BuiltinError {}

/// Built-in elementary systems.
pub mod builtins {
    use super::*;

    fn zero_x0() -> Vec<Coefficient> {
        vec![Coefficient::zero()]
    }

    /// exp: y' = y, y(0) = 1, bounded by exp.
    pub fn exp() -> Pivp {
        let rhs = PolyMatrix::column(vec![Polynomial::var(1, 0)]);
        Pivp::new(1, 1, rhs, zero_x0(), vec![Coefficient::one()])
            .with_bound(BoundExpr::exp(BoundExpr::Identity))
    }

    /// sin with companion cosine: (y, z)' = (z, -y), start (0, 1), bound 1.
    pub fn sin() -> Pivp {
        let rhs = PolyMatrix::column(vec![Polynomial::var(2, 1), Polynomial::var(2, 0).neg()]);
        Pivp::new(1, 1, rhs, zero_x0(), vec![Coefficient::zero(), Coefficient::one()])
            .with_bound(BoundExpr::constant_int(1))
    }

    /// cos leading the same two-variable rotation: (c, s)' = (-s, c).
    pub fn cos() -> Pivp {
        let rhs = PolyMatrix::column(vec![Polynomial::var(2, 1).neg(), Polynomial::var(2, 0)]);
        Pivp::new(1, 1, rhs, zero_x0(), vec![Coefficient::one(), Coefficient::zero()])
            .with_bound(BoundExpr::constant_int(1))
    }

    /// tanh: y' = 1 - y^2, y(0) = 0, bound 1.
    pub fn tanh() -> Pivp {
        let one = Polynomial::constant(1, Coefficient::one());
        let rhs = PolyMatrix::column(vec![one.sub(&Polynomial::var(1, 0).pow(2))]);
        Pivp::new(1, 1, rhs, zero_x0(), vec![Coefficient::zero()])
            .with_bound(BoundExpr::constant_int(1))
    }

    /// arctan via (arctan x, 1/(1+x^2), x): y' = (y2, -2 y3 y2^2, 1),
    /// bound max(alpha, pi/2).
    pub fn arctan() -> Pivp {
        let y2 = Polynomial::var(3, 1);
        let y3 = Polynomial::var(3, 2);
        let rhs = PolyMatrix::column(vec![
            y2.clone(),
            y3.mul(&y2.pow(2)).scale(&Coefficient::from_int(-2)),
            Polynomial::constant(3, Coefficient::one()),
        ]);
        Pivp::new(
            1,
            1,
            rhs,
            zero_x0(),
            vec![Coefficient::zero(), Coefficient::one(), Coefficient::zero()],
        )
        .with_bound(BoundExpr::max(
            BoundExpr::Identity,
            BoundExpr::Const(Coefficient::pi_times(BigRational::new(1.into(), 2.into()))),
        ))
    }

    /// The identity t -> t: y' = 1, y(0) = 0.
    pub fn identity() -> Pivp {
        let rhs = PolyMatrix::column(vec![Polynomial::constant(1, Coefficient::one())]);
        Pivp::new(1, 1, rhs, zero_x0(), vec![Coefficient::zero()])
            .with_bound(BoundExpr::Identity)
    }

    /// Constant function of one input.
    pub fn constant(c: Coefficient) -> Pivp {
        let rhs = PolyMatrix::column(vec![Polynomial::zero(1)]);
        let bound = BoundExpr::Const(c.abs());
        Pivp::new(1, 1, rhs, zero_x0(), vec![c]).with_bound(bound)
    }

    /// 1/x on (eps, inf): f' = -f^2, f(1) = 1, bound 1/eps.
    pub fn inverse(eps: BigRational) -> Result<Pivp, BuiltinError> {
        if eps <= BigRational::new(0.into(), 1.into()) {
            return Err(BuiltinError::BadParameter("inv requires eps > 0".into()));
        }
        let rhs = PolyMatrix::column(vec![Polynomial::var(1, 0).pow(2).neg()]);
        let inv_eps = Coefficient::from_rational(BigRational::new(1.into(), 1.into()) / eps.clone());
        let eps_f = Coefficient::from_rational(eps).numeric();
        Ok(Pivp::new(1, 1, rhs, vec![Coefficient::one()], vec![Coefficient::one()])
            .with_bound(BoundExpr::Const(inv_eps))
            .with_domain(Domain::Box { lo: vec![Some(eps_f)], hi: vec![None] }))
    }

    /// ln on (eps, inf) as the pair (g, f) with g' = f, f' = -f^2, g(1) = 0,
    /// f(1) = 1; bound max(alpha, |ln eps|, 1/eps).
    pub fn log(eps: BigRational) -> Result<Pivp, BuiltinError> {
        if eps <= BigRational::new(0.into(), 1.into()) {
            return Err(BuiltinError::BadParameter("ln requires eps > 0".into()));
        }
        let f = Polynomial::var(2, 1);
        let rhs = PolyMatrix::column(vec![f.clone(), f.pow(2).neg()]);
        let inv_eps = Coefficient::from_rational(BigRational::new(1.into(), 1.into()) / eps.clone());
        let eps_f = Coefficient::from_rational(eps).numeric();
        let abs_ln_eps = Coefficient::approx_from_f64(eps_f.ln().abs())
            .ok_or_else(|| BuiltinError::BadParameter("eps out of range".into()))?;
        Ok(Pivp::new(
            1,
            1,
            rhs,
            vec![Coefficient::one()],
            vec![Coefficient::zero(), Coefficient::one()],
        )
        .with_bound(BoundExpr::max_of(vec![
            BoundExpr::Identity,
            BoundExpr::Const(abs_ln_eps),
            BoundExpr::Const(inv_eps),
        ]))
        .with_domain(Domain::Box { lo: vec![Some(eps_f)], hi: vec![None] }))
    }

    /// Dispatch by name; `param` feeds eps for `inv` and `ln` and the value
    /// for `const`.
    pub fn by_name(name: &str, param: Option<BigRational>) -> Result<Pivp, BuiltinError> {
        match name {
            "exp" => Ok(exp()),
            "sin" => Ok(sin()),
            "cos" => Ok(cos()),
            "tanh" => Ok(tanh()),
            "arctan" => Ok(arctan()),
            "id" => Ok(identity()),
            "const" => {
                let c = param.ok_or_else(|| BuiltinError::BadParameter("const needs a value".into()))?;
                Ok(constant(Coefficient::from_rational(c)))
            }
            "inv" => inverse(param.ok_or_else(|| BuiltinError::BadParameter("inv needs eps".into()))?),
            "ln" => log(param.ok_or_else(|| BuiltinError::BadParameter("ln needs eps".into()))?),
            other => Err(BuiltinError::Unknown(other.to_string())),
        }
    }

    /// All parameterless builtin names, for table-driven tests.
    pub const SIMPLE_NAMES: [&str; 6] = ["exp", "sin", "cos", "tanh", "arctan", "id"];
}

/// The coordinate projection x -> x_i as a d-input system anchored at `x0`.
pub fn projection(d: usize, i: usize, x0: &[Coefficient]) -> Pivp {
    assert!(i < d && x0.len() == d);
    let mut rhs = PolyMatrix::zero(1, d, 1);
    rhs.set_entry(0, i, Polynomial::constant(1, Coefficient::one()));
    let bound = BoundExpr::Identity;
    Pivp::new(d, 1, rhs, x0.to_vec(), vec![x0[i].clone()]).with_bound(bound)
}

/// The constant function of d inputs.
pub fn constant_fn(d: usize, c: Coefficient, x0: &[Coefficient]) -> Pivp {
    assert_eq!(x0.len(), d);
    let rhs = PolyMatrix::zero(1, d, 1);
    let bound = BoundExpr::Const(c.abs());
    Pivp::new(d, 1, rhs, x0.to_vec(), vec![c]).with_bound(bound)
}

/// The affine map x -> A x + b as a PIVP with one state per row. Rows of `a`
/// have length d; the Jacobian is the constant matrix A.
pub fn affine_map(
    d: usize,
    a: &[Vec<Coefficient>],
    b: &[Coefficient],
    x0: &[Coefficient],
) -> Pivp {
    let n = a.len();
    assert_eq!(b.len(), n);
    assert_eq!(x0.len(), d);
    let mut rhs = PolyMatrix::zero(n, d, n.max(1));
    let mut y0 = Vec::with_capacity(n);
    let mut sigma = Coefficient::zero();
    for (i, row) in a.iter().enumerate() {
        assert_eq!(row.len(), d);
        let mut y = b[i].clone();
        let mut row_abs = Coefficient::zero();
        for (j, c) in row.iter().enumerate() {
            rhs.set_entry(i, j, Polynomial::constant(n.max(1), c.clone()));
            y = &y + &(c * &x0[j]);
            row_abs = &row_abs + &c.abs();
        }
        if row_abs.numeric() > sigma.numeric() {
            sigma = row_abs;
        }
        y0.push(y);
    }
    let offset = b.iter().fold(Coefficient::zero(), |acc, c| {
        if c.numeric_abs() > acc.numeric() {
            c.abs()
        } else {
            acc
        }
    });
    let bound = BoundExpr::add(
        BoundExpr::mul(BoundExpr::Const(sigma), BoundExpr::Identity),
        BoundExpr::Const(offset),
    );
    Pivp::new(d, n, rhs, x0.to_vec(), y0).with_bound(bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_system_validates() {
        let sine = builtins::sin();
        assert!(sine.validate().is_empty());
        assert_eq!(sine.state_dim, 2);
        assert_eq!(sine.rhs.entry(0, 0), &Polynomial::var(2, 1));
        assert_eq!(sine.rhs.entry(1, 0), &Polynomial::var(2, 0).neg());
    }

    #[test]
    fn arity_mismatch_is_reported() {
        // rhs written in 3 variables for a 2-state system
        let rhs = PolyMatrix::column(vec![Polynomial::var(3, 0), Polynomial::var(3, 1)]);
        let mut p = Pivp::new(1, 1, rhs, vec![Coefficient::zero()], vec![Coefficient::zero(); 2]);
        p.state_dim = 2;
        let violations = p.validate();
        assert!(violations.iter().any(|v| matches!(v, Violation::RhsArity { expected: 2, got: 3 })));
    }

    #[test]
    fn x0_outside_box_is_reported() {
        let p = builtins::inverse(BigRational::new(1.into(), 10.into())).unwrap();
        let mut bad = p.clone();
        bad.x0 = vec![Coefficient::from_ratio(1, 100)]; // below eps
        assert!(bad.validate().iter().any(|v| matches!(v, Violation::X0OutsideDomain)));
        assert!(p.validate().is_empty());
    }

    #[test]
    fn builtin_structures_match_stated_systems() {
        let t = builtins::tanh();
        assert_eq!(t.state_dim, 1);
        let one = Polynomial::constant(1, Coefficient::one());
        assert_eq!(t.rhs.entry(0, 0), &one.sub(&Polynomial::var(1, 0).pow(2)));
        assert_eq!(t.y0, vec![Coefficient::zero()]);

        let a = builtins::arctan();
        assert_eq!(a.state_dim, 3);
        assert_eq!(a.y0_f64(), vec![0.0, 1.0, 0.0]);
        let y2 = Polynomial::var(3, 1);
        let y3 = Polynomial::var(3, 2);
        assert_eq!(a.rhs.entry(0, 0), &y2);
        assert_eq!(
            a.rhs.entry(1, 0),
            &y3.mul(&y2.pow(2)).scale(&Coefficient::from_int(-2))
        );

        let inv = builtins::inverse(BigRational::new(1.into(), 10.into())).unwrap();
        assert_eq!(inv.rhs.entry(0, 0), &Polynomial::var(1, 0).pow(2).neg());
        assert_eq!(inv.y0, vec![Coefficient::one()]);
        assert_eq!(inv.bound.as_ref().unwrap().eval(3.0), 10.0);
    }

    #[test]
    fn every_builtin_validates() {
        for name in builtins::SIMPLE_NAMES {
            let p = builtins::by_name(name, None).unwrap();
            assert!(p.validate().is_empty(), "{name} failed validation");
        }
        let eps = BigRational::new(1.into(), 10.into());
        for name in ["inv", "ln"] {
            let p = builtins::by_name(name, Some(eps.clone())).unwrap();
            assert!(p.validate().is_empty(), "{name} failed validation");
        }
        let c = builtins::by_name("const", Some(BigRational::new(3.into(), 2.into()))).unwrap();
        assert!(c.validate().is_empty());
        assert!(builtins::by_name("gamma", None).is_err());
        assert!(builtins::inverse(BigRational::new((-1).into(), 2.into())).is_err());
    }

    #[test]
    fn poly_bounded_flags() {
        // Polynomially bounded: everything except exp.
        for name in ["sin", "cos", "tanh", "arctan", "id"] {
            let p = builtins::by_name(name, None).unwrap();
            assert!(p.poly_bounded().is_poly, "{name} should be polynomially bounded");
        }
        let eps = BigRational::new(1.into(), 10.into());
        assert!(builtins::inverse(eps.clone()).unwrap().poly_bounded().is_poly);
        assert!(builtins::log(eps).unwrap().poly_bounded().is_poly);
        assert!(builtins::constant(Coefficient::from_int(2)).poly_bounded().is_poly);
        assert!(!builtins::exp().poly_bounded().is_poly);
    }

    #[test]
    fn projection_and_affine() {
        let x0 = vec![Coefficient::zero(), Coefficient::from_int(2)];
        let p = projection(2, 1, &x0);
        assert!(p.validate().is_empty());
        assert_eq!(p.y0_f64(), vec![2.0]);
        // (x, y) -> (y - x + 1)
        let row = vec![vec![Coefficient::from_int(-1), Coefficient::one()]];
        let b = vec![Coefficient::one()];
        let m = affine_map(2, &row, &b, &x0);
        assert!(m.validate().is_empty());
        assert_eq!(m.y0_f64(), vec![3.0]);
    }
}
