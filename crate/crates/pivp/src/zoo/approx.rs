//! Uniform approximation of (possibly discontinuous) functions by
//! polynomially bounded generable systems: a target `f` is approximated by
//! `g(x, mu, lambda)` with error at most `e^-mu` wherever `x` keeps distance
//! `1/lambda` from a finite/periodic exception set.
//!
//! Combinators mirror the constructive proofs: sums shift `mu`, products
//! penalize `mu` by the partner's norm, piecewise gluing sums switched
//! differences, and periodic extension pulls the argument back into the
//! window with the round function at a precision driven by the window's
//! modulus of continuity.

use super::{
    clamp_pivp, lxh_pivp, mx_pivp, norm_inf_pivp, poly_fn_pivp, reference, rnd_pivp, ZooError,
};
use crate::closure::{self, combine, compose, multiply, tuple_of, ClosureError, CombineOp};
use crate::coeff::Coefficient;
use crate::pivp::{constant_fn, projection, Pivp};
use crate::poly::Polynomial;
use num::rational::BigRational;
use num::{One, ToPrimitive};
use std::rc::Rc;

/// Where an approximation's accuracy claim is suspended.
#[derive(Debug, Clone, PartialEq)]
pub enum ExceptionLocus {
    Point(f64),
    /// The arithmetic progression offset + period Z.
    Progression { offset: f64, period: f64 },
}

impl ExceptionLocus {
    pub fn distance(&self, x: f64) -> f64 {
        match self {
            ExceptionLocus::Point(p) => (x - p).abs(),
            ExceptionLocus::Progression { offset, period } => {
                let u = (x - offset) / period;
                (u - u.round()).abs() * period.abs()
            }
        }
    }
}

type RefFn = Rc<dyn Fn(f64, f64, f64) -> f64>;

/// A scalar function approximated uniformly but for an exception set: a
/// fast closed-form evaluator paired with the generated PIVP over inputs
/// (x, mu, lambda).
#[derive(Clone)]
pub struct ApproxFunction {
    pub description: String,
    /// Declared interval of validity; `None` bounds mean the whole line.
    pub domain: (Option<BigRational>, Option<BigRational>),
    pub exceptions: Vec<ExceptionLocus>,
    reference: RefFn,
    pub pivp: Pivp,
}

impl std::fmt::Debug for ApproxFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ApproxFunction")
            .field("description", &self.description)
            .field("domain", &self.domain)
            .field("exceptions", &self.exceptions)
            .field("state_dim", &self.pivp.state_dim)
            .finish()
    }
}

fn base3() -> Vec<Coefficient> {
    vec![Coefficient::zero(), Coefficient::one(), Coefficient::from_int(2)]
}

struct Inputs {
    x: Pivp,
    mu: Pivp,
    lam: Pivp,
    x0: Vec<Coefficient>,
}

fn inputs() -> Inputs {
    let x0 = base3();
    Inputs {
        x: projection(3, 0, &x0),
        mu: projection(3, 1, &x0),
        lam: projection(3, 2, &x0),
        x0,
    }
}

fn apply(f: &Pivp, args: &[&Pivp]) -> Result<Pivp, ClosureError> {
    compose(f, &tuple_of(args)?)
}

/// `a * f + b`.
fn scale_shift(f: &Pivp, a: Coefficient, b: Coefficient) -> Result<Pivp, ClosureError> {
    closure::linear_combination(&[(f, a)], b)
}

/// `mu |-> mu + k` input reparameterization (x and lambda untouched).
fn mu_shift(k: i64) -> Pivp {
    let x0 = base3();
    let one = Coefficient::one;
    let zero = Coefficient::zero;
    crate::pivp::affine_map(
        3,
        &[
            vec![one(), zero(), zero()],
            vec![zero(), one(), zero()],
            vec![zero(), zero(), one()],
        ],
        &[zero(), Coefficient::from_int(k), zero()],
        &x0,
    )
}

/// norm_{inf,1} of a single scalar system (used by the product rule).
fn norm1_of(scalar: &Pivp, ins: &Inputs) -> Result<Pivp, ClosureError> {
    let mxf = mx_pivp().map_err(|e| match e {
        ZooError::Closure(c) => c,
        other => ClosureError::BadDimension(other.to_string()),
    })?;
    let neg = scale_shift(scalar, Coefficient::from_int(-1), Coefficient::zero())?;
    let one = constant_fn(3, Coefficient::one(), &ins.x0);
    apply(&mxf, &[scalar, &neg, &one, &one])
}

impl ApproxFunction {
    /// Wrap an explicit (reference, system) pair; `pivp` takes inputs
    /// (x, mu, lambda) anchored at the shared approximation base point.
    pub fn new(
        description: &str,
        domain: (Option<BigRational>, Option<BigRational>),
        exceptions: Vec<ExceptionLocus>,
        reference: Rc<dyn Fn(f64, f64, f64) -> f64>,
        pivp: Pivp,
    ) -> ApproxFunction {
        ApproxFunction {
            description: description.to_string(),
            domain,
            exceptions,
            reference,
            pivp,
        }
    }

    pub fn eval(&self, x: f64, mu: f64, lambda: f64) -> f64 {
        (self.reference)(x, mu, lambda)
    }

    pub fn distance_to_exceptions(&self, x: f64) -> f64 {
        self.exceptions
            .iter()
            .map(|l| l.distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// A constant function: generable, exception-free, whole line.
    pub fn constant(c: &BigRational) -> ApproxFunction {
        let x0 = base3();
        let value = Coefficient::from_rational(c.clone());
        let v = value.numeric();
        ApproxFunction {
            description: format!("const {c}"),
            domain: (None, None),
            exceptions: Vec::new(),
            reference: Rc::new(move |_, _, _| v),
            pivp: constant_fn(3, value, &x0),
        }
    }

    /// Wrap a generable unidimensional system as its own approximation
    /// (exception-free; mu and lambda are ignored).
    pub fn generable(
        description: &str,
        f: &Pivp,
        reference: Rc<dyn Fn(f64) -> f64>,
    ) -> Result<ApproxFunction, ZooError> {
        let ins = inputs();
        let pivp = compose(f, &ins.x)?;
        Ok(ApproxFunction {
            description: description.to_string(),
            domain: (None, None),
            exceptions: Vec::new(),
            reference: Rc::new(move |x, _, _| reference(x)),
            pivp,
        })
    }

    /// Restrict the declared domain (used before piecewise extension).
    pub fn on_interval(mut self, a: Option<BigRational>, b: Option<BigRational>) -> Self {
        self.domain = (a, b);
        self
    }
}

fn union_exceptions(a: &ApproxFunction, b: &ApproxFunction) -> Vec<ExceptionLocus> {
    let mut out = a.exceptions.clone();
    for e in &b.exceptions {
        if !out.contains(e) {
            out.push(e.clone());
        }
    }
    out
}

/// `f + g` (or `f - g`): both approximators queried at `mu + 1`.
pub fn approx_combine(
    f: &ApproxFunction,
    g: &ApproxFunction,
    op: CombineOp,
) -> Result<ApproxFunction, ZooError> {
    let shift = mu_shift(1);
    let fp = compose(&f.pivp, &shift)?;
    let gp = compose(&g.pivp, &shift)?;
    let pivp = combine(&fp, &gp, op)?;
    let (fr, gr) = (f.reference.clone(), g.reference.clone());
    let reference: RefFn = match op {
        CombineOp::Add => {
            Rc::new(move |x, mu, lam| fr(x, mu + 1.0, lam) + gr(x, mu + 1.0, lam))
        }
        CombineOp::Sub => {
            Rc::new(move |x, mu, lam| fr(x, mu + 1.0, lam) - gr(x, mu + 1.0, lam))
        }
    };
    let opname = match op {
        CombineOp::Add => "+",
        CombineOp::Sub => "-",
    };
    Ok(ApproxFunction {
        description: format!("({}) {} ({})", f.description, opname, g.description),
        domain: intersect_domain(&f.domain, &g.domain),
        exceptions: union_exceptions(f, g),
        reference,
        pivp,
    })
}

fn intersect_domain(
    a: &(Option<BigRational>, Option<BigRational>),
    b: &(Option<BigRational>, Option<BigRational>),
) -> (Option<BigRational>, Option<BigRational>) {
    let lo = match (&a.0, &b.0) {
        (Some(u), Some(v)) => Some(u.clone().max(v.clone())),
        (Some(u), None) | (None, Some(u)) => Some(u.clone()),
        (None, None) => None,
    };
    let hi = match (&a.1, &b.1) {
        (Some(u), Some(v)) => Some(u.clone().min(v.clone())),
        (Some(u), None) | (None, Some(u)) => Some(u.clone()),
        (None, None) => None,
    };
    (lo, hi)
}

/// `f * g` with the norm-penalized precision shifts of the product proof:
/// F(x, mu+2+norm(G(x,1,lambda)), lambda) * G(x, mu+3+norm(F(x,1,lambda)), lambda).
pub fn approx_product(
    f: &ApproxFunction,
    g: &ApproxFunction,
) -> Result<ApproxFunction, ZooError> {
    let ins = inputs();
    let one = constant_fn(3, Coefficient::one(), &ins.x0);
    let freeze = |p: &Pivp| -> Result<Pivp, ClosureError> {
        apply(p, &[&ins.x, &one, &ins.lam])
    };
    let g_probe = norm1_of(&freeze(&g.pivp)?, &ins)?;
    let f_probe = norm1_of(&freeze(&f.pivp)?, &ins)?;
    let mu_f = closure::linear_combination(
        &[(&ins.mu, Coefficient::one()), (&g_probe, Coefficient::one())],
        Coefficient::from_int(2),
    )?;
    let mu_g = closure::linear_combination(
        &[(&ins.mu, Coefficient::one()), (&f_probe, Coefficient::one())],
        Coefficient::from_int(3),
    )?;
    let f_at = apply(&f.pivp, &[&ins.x, &mu_f, &ins.lam])?;
    let g_at = apply(&g.pivp, &[&ins.x, &mu_g, &ins.lam])?;
    let pivp = multiply(&f_at, &g_at)?;
    let (fr, gr) = (f.reference.clone(), g.reference.clone());
    let reference: RefFn = Rc::new(move |x, mu, lam| {
        let nf = reference::norm_inf(&[fr(x, 1.0, lam)], 1.0);
        let ng = reference::norm_inf(&[gr(x, 1.0, lam)], 1.0);
        fr(x, mu + 2.0 + ng, lam) * gr(x, mu + 3.0 + nf, lam)
    });
    Ok(ApproxFunction {
        description: format!("({}) * ({})", f.description, g.description),
        domain: intersect_domain(&f.domain, &g.domain),
        exceptions: union_exceptions(f, g),
        reference,
        pivp,
    })
}

/// The dominating modulus polynomial used by the extension and periodic
/// constructions: a nondecreasing rational polynomial `p` with
/// `|F(u) - F(v)| <= |u - v| p(max(|u|, |v|, ...))` for the approximator.
fn dominating_modulus(f: &ApproxFunction) -> Result<Polynomial, ZooError> {
    let m = closure::modulus_bound(&f.pivp)?;
    m.dominating_polynomial().ok_or_else(|| {
        ZooError::BadParameter(format!(
            "piece {:?} has a non-polynomial growth bound",
            f.description
        ))
    })
}

/// Extend a piece defined on a finite interval (a, b) to the whole line by
/// soft-clamping its argument; precision of the clamp is driven by the
/// piece's modulus of continuity.
pub fn extend_to_line(f: &ApproxFunction) -> Result<ApproxFunction, ZooError> {
    let (a, b) = match (&f.domain.0, &f.domain.1) {
        (None, None) => return Ok(f.clone()),
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => {
            return Err(ZooError::BadParameter(format!(
                "piece {:?} has a half-infinite domain; extension needs a finite interval or the whole line",
                f.description
            )))
        }
    };
    let p = dominating_modulus(f)?;
    let ins = inputs();
    // p(1 + norm_{inf,1}(x, mu, lambda))
    let norm3 = norm_inf_pivp(3, &BigRational::one())?;
    let norm_in = apply(&norm3, &[&ins.x, &ins.mu, &ins.lam])?;
    let poly = poly_fn_pivp(&p);
    let penalty = compose(&poly, &scale_shift(&norm_in, Coefficient::one(), Coefficient::one())?)?;
    let mu_clamp = closure::linear_combination(
        &[(&ins.mu, Coefficient::one()), (&penalty, Coefficient::one())],
        Coefficient::one(),
    )?;
    let clamped = apply(&clamp_pivp(&a, &b)?, &[&ins.x, &mu_clamp, &ins.lam])?;
    let mu1 = scale_shift(&ins.mu, Coefficient::one(), Coefficient::one())?;
    let pivp = apply(&f.pivp, &[&clamped, &mu1, &ins.lam])?;
    let (af, bf) = (
        Coefficient::from_rational(a).numeric(),
        Coefficient::from_rational(b).numeric(),
    );
    let fr = f.reference.clone();
    let p_ref = p.clone();
    let reference: RefFn = Rc::new(move |x, mu, lam| {
        let norm = reference::norm_inf(&[x, mu, lam], 1.0);
        let pen = p_ref.eval(&[1.0 + norm]).unwrap();
        let xc = reference::clamp(af, bf, x, mu + 1.0 + pen, lam);
        fr(xc, mu + 1.0, lam)
    });
    Ok(ApproxFunction {
        description: format!("extend({})", f.description),
        domain: (None, None),
        exceptions: f.exceptions.clone(),
        reference,
        pivp,
    })
}

/// Glue approximable pieces at rational breakpoints:
/// g(x, mu, lambda) = f0(x, nu, lambda) +
///   sum_i lxh_[-1,1]((x - a_i) lambda, nu, f_i - f_{i-1}) with nu = mu+k+1.
pub fn approx_piecewise(
    breakpoints: &[BigRational],
    pieces: &[ApproxFunction],
) -> Result<ApproxFunction, ZooError> {
    let k = breakpoints.len();
    if pieces.len() != k + 1 {
        return Err(ZooError::BadParameter(format!(
            "{} breakpoints need {} pieces, got {}",
            k,
            k + 1,
            pieces.len()
        )));
    }
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            return Err(ZooError::BadParameter("breakpoints must be strictly increasing".into()));
        }
    }
    // Whole-line extension of pieces that declare a finite interval.
    let pieces: Vec<ApproxFunction> =
        pieces.iter().map(extend_to_line).collect::<Result<_, _>>()?;
    let ins = inputs();
    let nu = scale_shift(&ins.mu, Coefficient::one(), Coefficient::from_int(k as i64 + 1))?;
    let composed: Vec<Pivp> = pieces
        .iter()
        .map(|p| apply(&p.pivp, &[&ins.x, &nu, &ins.lam]))
        .collect::<Result<_, _>>()?;
    let minus_one = BigRational::from_integer((-1).into());
    let lxh = lxh_pivp(&minus_one, &BigRational::one())?;
    let mut terms: Vec<Pivp> = vec![composed[0].clone()];
    for (i, ai) in breakpoints.iter().enumerate() {
        let shifted = scale_shift(
            &ins.x,
            Coefficient::one(),
            Coefficient::from_rational(-ai.clone()),
        )?;
        let targ = multiply(&shifted, &ins.lam)?;
        let diff = closure::linear_combination(
            &[
                (&composed[i + 1], Coefficient::one()),
                (&composed[i], Coefficient::from_int(-1)),
            ],
            Coefficient::zero(),
        )?;
        terms.push(apply(&lxh, &[&targ, &nu, &diff])?);
    }
    let term_refs: Vec<(&Pivp, Coefficient)> =
        terms.iter().map(|t| (t, Coefficient::one())).collect();
    let pivp = closure::linear_combination(&term_refs, Coefficient::zero())?;

    let refs: Vec<RefFn> = pieces.iter().map(|p| p.reference.clone()).collect();
    let bps: Vec<f64> = breakpoints
        .iter()
        .map(|b| Coefficient::from_rational(b.clone()).numeric())
        .collect();
    let bps_ref = bps.clone();
    let kk = k as f64;
    let reference: RefFn = Rc::new(move |x, mu, lam| {
        let nu = mu + kk + 1.0;
        let mut acc = refs[0](x, nu, lam);
        for (i, &ai) in bps_ref.iter().enumerate() {
            let diff = refs[i + 1](x, nu, lam) - refs[i](x, nu, lam);
            acc += reference::lxh(-1.0, 1.0, (x - ai) * lam, nu, diff);
        }
        acc
    });
    let mut exceptions: Vec<ExceptionLocus> =
        bps.iter().map(|&b| ExceptionLocus::Point(b)).collect();
    for p in &pieces {
        for e in &p.exceptions {
            if !exceptions.contains(e) {
                exceptions.push(e.clone());
            }
        }
    }
    Ok(ApproxFunction {
        description: format!("piecewise[{} pieces]", pieces.len()),
        domain: (None, None),
        exceptions,
        reference,
        pivp,
    })
}

/// Periodic extension: given a window approximator on (a, b) with
/// b - a = tau, pull the argument back into the window with the round
/// function and query the window there.
pub fn approx_periodic(
    a: &BigRational,
    b: &BigRational,
    window: &ApproxFunction,
) -> Result<ApproxFunction, ZooError> {
    if b <= a {
        return Err(ZooError::BadParameter("window needs b > a".into()));
    }
    let window = extend_to_line(window)?;
    let tau = b.clone() - a.clone();
    let two = BigRational::from_integer(2.into());
    let mid = (a.clone() + b.clone()) / two;
    let tau_f = Coefficient::from_rational(tau.clone()).numeric();
    let mid_f = Coefficient::from_rational(mid.clone()).numeric();
    // Precision of the pullback: mu + 1 + q0 + p(1 + norm(mu, lambda)),
    // q0 absorbing the tau scaling of the rounding error.
    let q0 = tau_f.ln().max(0.0).ceil() as i64;
    let p = dominating_modulus(&window)?;
    let ins = inputs();
    let norm2 = norm_inf_pivp(2, &BigRational::one())?;
    let norm_ml = apply(&norm2, &[&ins.mu, &ins.lam])?;
    let poly = poly_fn_pivp(&p);
    let penalty = compose(&poly, &scale_shift(&norm_ml, Coefficient::one(), Coefficient::one())?)?;
    let m_sys = closure::linear_combination(
        &[(&ins.mu, Coefficient::one()), (&penalty, Coefficient::one())],
        Coefficient::from_int(1 + q0),
    )?;
    // Lambda for the round: tau lambda + 2 (>= 2, dead zones inside 1/lambda).
    let lam_rnd = scale_shift(&ins.lam, Coefficient::from_rational(tau.clone()), Coefficient::from_int(2))?;
    let inv_tau = Coefficient::from_rational(BigRational::one() / tau.clone());
    let u_sys = scale_shift(&ins.x, inv_tau.clone(), Coefficient::from_rational(-mid.clone() / tau.clone()))?;
    let rnd_applied = apply(&rnd_pivp()?, &[&u_sys, &m_sys, &lam_rnd])?;
    let xhat = closure::linear_combination(
        &[
            (&ins.x, Coefficient::one()),
            (&rnd_applied, Coefficient::from_rational(-tau.clone())),
        ],
        Coefficient::zero(),
    )?;
    let mu1 = scale_shift(&ins.mu, Coefficient::one(), Coefficient::one())?;
    let pivp = apply(&window.pivp, &[&xhat, &mu1, &ins.lam])?;

    let wr = window.reference.clone();
    let p_ref = p.clone();
    let q0_f = q0 as f64;
    let reference: RefFn = Rc::new(move |x, mu, lam| {
        let norm = reference::norm_inf(&[mu, lam], 1.0);
        let m = mu + 1.0 + q0_f + p_ref.eval(&[1.0 + norm]).unwrap();
        let u = (x - mid_f) / tau_f;
        let n = reference::rnd(u, m, tau_f * lam + 2.0);
        wr(x - tau_f * n, mu + 1.0, lam)
    });
    let mut exceptions = vec![
        ExceptionLocus::Progression {
            offset: Coefficient::from_rational(a.clone()).numeric(),
            period: tau_f,
        },
    ];
    for e in &window.exceptions {
        match e {
            ExceptionLocus::Point(p) => {
                exceptions.push(ExceptionLocus::Progression { offset: *p, period: tau_f })
            }
            prog @ ExceptionLocus::Progression { .. } => exceptions.push(prog.clone()),
        }
    }
    Ok(ApproxFunction {
        description: format!("periodic[tau={}]({})", tau.to_f64().unwrap_or(f64::NAN), window.description),
        domain: (None, None),
        exceptions,
        reference,
        pivp,
    })
}
