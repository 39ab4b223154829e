//! Sparse multivariate polynomials with exact coefficients, the substrate for
//! every right-hand side in this crate.
//!
//! Terms are keyed by dense exponent vectors and kept canonical: no zero
//! coefficients, all exponent vectors of length `arity`. The term map is
//! ordered graded-lexicographically so iteration and the text form are
//! deterministic regardless of construction order.

use crate::coeff::Coefficient;
use num::rational::BigRational;
use num::Zero;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Exponent vector of a single term. Ordered graded-lexicographically:
/// first by total degree, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn padded(&self, arity: usize) -> Monomial {
        let mut v = self.0.clone();
        v.resize(arity, 0);
        Monomial(v)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A sparse multivariate polynomial in `arity` variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    arity: usize,
    terms: BTreeMap<Monomial, Coefficient>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArityMismatch {
    pub expected: usize,
    pub got: usize,
}

impl fmt::Display for ArityMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arity mismatch: expected {}, got {}", self.expected, self.got)
    }
}

impl std::error::Error for ArityMismatch {}

impl Polynomial {
    pub fn zero(arity: usize) -> Self {
        Polynomial { arity, terms: BTreeMap::new() }
    }

    pub fn constant(arity: usize, c: Coefficient) -> Self {
        let mut p = Polynomial::zero(arity);
        p.add_term(Monomial(vec![0; arity]), c);
        p
    }

    /// The variable `x_i` (0-based).
    pub fn var(arity: usize, i: usize) -> Self {
        assert!(i < arity, "variable index out of range");
        let mut exps = vec![0; arity];
        exps[i] = 1;
        let mut p = Polynomial::zero(arity);
        p.add_term(Monomial(exps), Coefficient::one());
        p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coefficient)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Insert a term, merging with an existing one and dropping zeros.
    pub fn add_term(&mut self, m: Monomial, c: Coefficient) {
        assert_eq!(m.0.len(), self.arity, "exponent vector length must equal arity");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = &*e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    /// Reinterpret in a larger arity by appending unused variables.
    pub fn pad_to(&self, arity: usize) -> Polynomial {
        assert!(arity >= self.arity);
        let mut p = Polynomial::zero(arity);
        for (m, c) in &self.terms {
            p.add_term(m.padded(arity), c.clone());
        }
        p
    }

    /// Apply a variable renaming `old index -> new index` into a new arity.
    pub fn remap(&self, arity: usize, map: &[usize]) -> Polynomial {
        assert_eq!(map.len(), self.arity);
        let mut p = Polynomial::zero(arity);
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; arity];
            for (i, &e) in m.0.iter().enumerate() {
                assert!(map[i] < arity);
                exps[map[i]] += e;
            }
            p.add_term(Monomial(exps), c.clone());
        }
        p
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let arity = self.arity.max(other.arity);
        let mut out = self.pad_to(arity);
        for (m, c) in &other.terms {
            out.add_term(m.padded(arity), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let arity = self.arity.max(other.arity);
        let mut out = self.pad_to(arity);
        for (m, c) in &other.terms {
            out.add_term(m.padded(arity), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let arity = self.arity.max(other.arity);
        let mut out = Polynomial::zero(arity);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut exps = vec![0u32; arity];
                for (i, &e) in ma.0.iter().enumerate() {
                    exps[i] += e;
                }
                for (i, &e) in mb.0.iter().enumerate() {
                    exps[i] += e;
                }
                out.add_term(Monomial(exps), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Coefficient) -> Polynomial {
        let mut out = Polynomial::zero(self.arity);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.arity);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), -v.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.arity, Coefficient::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Evaluate at a point, with named constants substituted numerically.
    /// Accumulation is Horner-style per variable power (powers built
    /// multiplicatively, cached per term evaluation).
    pub fn eval(&self, x: &[f64]) -> Result<f64, ArityMismatch> {
        if x.len() != self.arity {
            return Err(ArityMismatch { expected: self.arity, got: x.len() });
        }
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.numeric();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t *= x[i].powi(e as i32);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Exact evaluation at a rational point; fails if any coefficient
    /// involves pi or e.
    pub fn eval_exact(&self, x: &[BigRational]) -> Option<BigRational> {
        if x.len() != self.arity {
            return None;
        }
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let q = c.as_rational()?;
            let mut t = q;
            for (i, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    t *= &x[i];
                }
            }
            acc += t;
        }
        Some(acc)
    }

    /// Max total degree over terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    /// Sum of the absolute values of the coefficients, constants substituted.
    pub fn sigma(&self) -> f64 {
        self.terms.values().map(|c| c.numeric_abs()).sum()
    }

    /// Formal partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Result<Polynomial, ArityMismatch> {
        if i >= self.arity {
            return Err(ArityMismatch { expected: self.arity, got: i });
        }
        let mut out = Polynomial::zero(self.arity);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[i] -= 1;
            let factor = Coefficient::from_int(e as i64);
            out.add_term(Monomial(exps), &factor * c);
        }
        Ok(out)
    }

    /// Canonical text form: terms in descending graded-lex order, each
    /// `coeff*x1^e1*...`; multi-monomial coefficients are parenthesized.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(m, c)| {
                let ctext = c.to_text();
                let needs_parens = ctext.contains('+');
                let mut s = if needs_parens { format!("({ctext})") } else { ctext };
                for (i, &e) in m.0.iter().enumerate() {
                    if e > 0 {
                        s.push_str(&format!("*x{}^{}", i + 1, e));
                    }
                }
                s
            })
            .collect();
        parts.join(" + ")
    }

    /// Parse the canonical text form. `arity` fixes the variable space;
    /// variables beyond it are rejected.
    pub fn parse_text(s: &str, arity: usize) -> Result<Polynomial, PolyParseError> {
        let s = s.trim();
        let mut out = Polynomial::zero(arity);
        if s == "0" {
            return Ok(out);
        }
        for term in s.split(" + ") {
            let term = term.trim();
            let mut exps = vec![0u32; arity];
            // Optional parenthesized coefficient prefix.
            let (coeff_text, rest) = if let Some(stripped) = term.strip_prefix('(') {
                let close = stripped.find(')').ok_or_else(|| PolyParseError::new(s, "unbalanced parenthesis"))?;
                (&stripped[..close], stripped[close + 1..].trim_start_matches('*'))
            } else {
                // Coefficient runs until the first variable factor.
                match term.find("*x") {
                    Some(idx) => (&term[..idx], term[idx + 1..].trim_start_matches('*')),
                    None => (term, ""),
                }
            };
            let coeff = Coefficient::parse_text(coeff_text)
                .map_err(|e| PolyParseError::new(s, &e.to_string()))?;
            if !rest.is_empty() {
                for factor in rest.split('*') {
                    let factor = factor.trim();
                    let body = factor
                        .strip_prefix('x')
                        .ok_or_else(|| PolyParseError::new(s, &format!("expected variable, got {factor:?}")))?;
                    let (var, exp) = match body.split_once('^') {
                        Some((v, e)) => (v, e),
                        None => (body, "1"),
                    };
                    let idx: usize = var
                        .parse()
                        .map_err(|_| PolyParseError::new(s, &format!("bad variable {factor:?}")))?;
                    if idx == 0 || idx > arity {
                        return Err(PolyParseError::new(s, &format!("variable x{idx} out of range for arity {arity}")));
                    }
                    let e: u32 = exp
                        .parse()
                        .map_err(|_| PolyParseError::new(s, &format!("bad exponent in {factor:?}")))?;
                    exps[idx - 1] += e;
                }
            }
            out.add_term(Monomial(exps), coeff);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyParseError {
    pub input: String,
    pub message: String,
}

impl PolyParseError {
    fn new(input: &str, message: &str) -> Self {
        PolyParseError { input: input.to_string(), message: message.to_string() }
    }
}

impl fmt::Display for PolyParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid polynomial {:?}: {}", self.input, self.message)
    }
}

impl std::error::Error for PolyParseError {}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A row-major grid of polynomials with uniform arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Polynomial>,
}

impl PolyMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Polynomial>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        if let Some(first) = entries.first() {
            assert!(
                entries.iter().all(|p| p.arity() == first.arity()),
                "matrix entries must share one arity"
            );
        }
        PolyMatrix { rows, cols, entries }
    }

    pub fn zero(rows: usize, cols: usize, arity: usize) -> Self {
        PolyMatrix::new(rows, cols, vec![Polynomial::zero(arity); rows * cols])
    }

    /// A column vector (n x 1).
    pub fn column(entries: Vec<Polynomial>) -> Self {
        let rows = entries.len();
        PolyMatrix::new(rows, 1, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn arity(&self) -> usize {
        self.entries.first().map(|p| p.arity()).unwrap_or(0)
    }

    pub fn entry(&self, row: usize, col: usize) -> &Polynomial {
        &self.entries[row * self.cols + col]
    }

    pub fn set_entry(&mut self, row: usize, col: usize, p: Polynomial) {
        assert_eq!(p.arity(), self.arity());
        self.entries[row * self.cols + col] = p;
    }

    pub fn entries(&self) -> impl Iterator<Item = &Polynomial> {
        self.entries.iter()
    }

    /// Max degree over entries (vector/matrix convention).
    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Max per-entry coefficient sum (vector/matrix convention).
    pub fn sigma(&self) -> f64 {
        self.entries.iter().map(|p| p.sigma()).fold(0.0, f64::max)
    }
}

/// One Taylor-recurrence step for `y' = p(y)` with `p` an n x 1 system:
/// given coefficients `c_0..c_k` of the solution series, returns
/// `c_{k+1} = [t^k] p(sum c_j t^j) / (k+1)`, computed by truncated power
/// series composition. Exact rational variant.
pub fn taylor_step_exact(
    rhs: &PolyMatrix,
    coeffs: &[Vec<BigRational>],
) -> Result<Vec<BigRational>, TaylorError> {
    let n = check_taylor_inputs(rhs, coeffs.len())?;
    for c in coeffs {
        if c.len() != n {
            return Err(TaylorError::BadCoefficientLength { expected: n, got: c.len() });
        }
    }
    let k = coeffs.len() - 1;
    let order = k + 1;
    // Series for each state variable, truncated beyond t^k.
    let series: Vec<Vec<BigRational>> = (0..n)
        .map(|i| coeffs.iter().map(|c| c[i].clone()).collect())
        .collect();
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        let p = rhs.entry(i, 0);
        let mut acc = BigRational::zero();
        for (m, c) in p.terms() {
            let q = c.as_rational().ok_or(TaylorError::NonRationalCoefficient)?;
            // Product of variable powers as a truncated series; we only need
            // the t^k coefficient of the full term.
            let mut term = vec![BigRational::zero(); k + 1];
            term[0] = q;
            for (var, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    term = mul_truncated_exact(&term, &series[var], k + 1);
                }
            }
            acc += term[k].clone();
        }
        next.push(acc / BigRational::from_integer(order.into()));
    }
    Ok(next)
}

/// Floating-point variant of [`taylor_step_exact`].
pub fn taylor_step_f64(rhs: &PolyMatrix, coeffs: &[Vec<f64>]) -> Result<Vec<f64>, TaylorError> {
    let n = check_taylor_inputs(rhs, coeffs.len())?;
    for c in coeffs {
        if c.len() != n {
            return Err(TaylorError::BadCoefficientLength { expected: n, got: c.len() });
        }
    }
    let k = coeffs.len() - 1;
    let series: Vec<Vec<f64>> = (0..n)
        .map(|i| coeffs.iter().map(|c| c[i]).collect())
        .collect();
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        let p = rhs.entry(i, 0);
        let mut acc = 0.0;
        for (m, c) in p.terms() {
            let mut term = vec![0.0; k + 1];
            term[0] = c.numeric();
            for (var, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    term = mul_truncated_f64(&term, &series[var], k + 1);
                }
            }
            acc += term[k];
        }
        next.push(acc / (k + 1) as f64);
    }
    Ok(next)
}

fn check_taylor_inputs(rhs: &PolyMatrix, n_coeffs: usize) -> Result<usize, TaylorError> {
    if rhs.cols() != 1 {
        return Err(TaylorError::NotASystem);
    }
    let n = rhs.rows();
    if rhs.arity() != n {
        return Err(TaylorError::NotASystem);
    }
    if n_coeffs == 0 {
        return Err(TaylorError::NoCoefficients);
    }
    Ok(n)
}

fn mul_truncated_exact(a: &[BigRational], b: &[BigRational], len: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); len];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

fn mul_truncated_f64(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaylorError {
    NotASystem,
    NoCoefficients,
    BadCoefficientLength { expected: usize, got: usize },
    NonRationalCoefficient,
}

impl fmt::Display for TaylorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaylorError::NotASystem => {
                write!(f, "right-hand side must be an n x 1 matrix with arity n")
            }
            TaylorError::NoCoefficients => write!(f, "at least the order-0 coefficient is required"),
            TaylorError::BadCoefficientLength { expected, got } => {
                write!(f, "coefficient vector length {got} does not match state dimension {expected}")
            }
            TaylorError::NonRationalCoefficient => {
                write!(f, "exact mode requires rational coefficients (no pi or e factors)")
            }
        }
    }
}

impl std::error::Error for TaylorError {}
