//! The approximation zoo: sign, floor, round, absolute value, max/min,
//! norm, switching and clamping functions. Each function ships twice: a
//! closed-form reference evaluator and a generator producing a PIVP built
//! from the builtins via closure operations. Precision parameters `mu`
//! (error `e^-mu`) and `lambda` (dead zones of width `1/lambda`) are inputs
//! of the generated systems, not compile-time constants.

use crate::bound::BoundExpr;
use crate::closure::{compose, linear_combination, multiply, reciprocal, tuple_of, ClosureError};
use crate::coeff::{Coefficient, ConstPowers};
use crate::pivp::{builtins, constant_fn, projection, Domain, Pivp};
use crate::poly::{PolyMatrix, Polynomial};
use num::rational::BigRational;
use num::{One, Zero};
use std::fmt;

pub mod approx;

#[derive(Debug, Clone, PartialEq)]
pub enum ZooError {
    BadParameter(String),
    Closure(ClosureError),
}

impl fmt::Display for ZooError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZooError::BadParameter(msg) => write!(f, "bad zoo parameter: {msg}"),
            ZooError::Closure(e) => write!(f, "zoo generator failed: {e}"),
        }
    }
}

impl std::error::Error for ZooError {}

impl From<ClosureError> for ZooError {
    fn from(e: ClosureError) -> Self {
        ZooError::Closure(e)
    }
}

/// Closed-form reference evaluators, the oracle side of every zoo function.
pub mod reference {
    /// Overflow-safe ln(2 cosh u) = |u| + ln(1 + e^(-2|u|)).
    pub fn ln_2cosh(u: f64) -> f64 {
        u.abs() + (-2.0 * u.abs()).exp().ln_1p()
    }

    /// sg(x, mu, lambda) = tanh(x mu lambda).
    pub fn sg(x: f64, mu: f64, lambda: f64) -> f64 {
        (x * mu * lambda).tanh()
    }

    /// ip1(x, mu, lambda) = (1 + sg(x - 1, mu, lambda)) / 2, tracking
    /// int_1(x) = 0 for x < 1 and 1 for x >= 1.
    pub fn ip1(x: f64, mu: f64, lambda: f64) -> f64 {
        (1.0 + sg(x - 1.0, mu, lambda)) / 2.0
    }

    /// abs(x, mu, lambda) = ln(2 cosh((1 + lambda mu) x)) / (1 + lambda mu).
    pub fn abs(x: f64, mu: f64, lambda: f64) -> f64 {
        let k = 1.0 + lambda * mu;
        ln_2cosh(k * x) / k
    }

    /// mx(x, y, mu, lambda) = (y + x + abs(y - x, mu, lambda)) / 2.
    pub fn mx(x: f64, y: f64, mu: f64, lambda: f64) -> f64 {
        (y + x + abs(y - x, mu, lambda)) / 2.0
    }

    /// mn(x, y, mu, lambda) = x + y - mx(x, y, mu, lambda).
    pub fn mn(x: f64, y: f64, mu: f64, lambda: f64) -> f64 {
        x + y - mx(x, y, mu, lambda)
    }

    /// Nested max over a vector with overshoot at most delta:
    /// mx(x1, mx(x2, ..., mx(x_{n-1}, x_n, 1, 1/(n delta)) ...)).
    pub fn mx_delta(xs: &[f64], delta: f64) -> f64 {
        let n = xs.len();
        assert!(n >= 1);
        let lambda = 1.0 / (n as f64 * delta);
        let mut acc = xs[n - 1];
        for &x in xs[..n - 1].iter().rev() {
            acc = mx(x, acc, 1.0, lambda);
        }
        acc
    }

    /// abs via the max construction: mx_delta(x, -x).
    pub fn abs_delta(x: f64, delta: f64) -> f64 {
        mx_delta(&[x, -x], delta)
    }

    /// Sup-norm with overshoot at most delta.
    pub fn norm_inf(xs: &[f64], delta: f64) -> f64 {
        let parts: Vec<f64> = xs.iter().map(|&x| abs_delta(x, delta / 2.0)).collect();
        mx_delta(&parts, delta / 2.0)
    }

    /// nz(x, mu, lambda) = x + (2/lambda) ip1(1 - x + 3/(4 lambda), mu+1, 4 lambda):
    /// close to x for x >= 1/lambda, bounded below by 1/(2 lambda) for x >= 0.
    pub fn nz(x: f64, mu: f64, lambda: f64) -> f64 {
        x + 2.0 / lambda * ip1(1.0 - x + 3.0 / (4.0 * lambda), mu + 1.0, 4.0 * lambda)
    }

    /// Clamped tangent: like tan(theta) near multiples of pi, bounded near
    /// the poles.
    pub fn cltan(theta: f64, mu: f64, lambda: f64) -> f64 {
        let c = theta.cos();
        theta.sin() / nz(c * c, mu + 16.0 * lambda.powi(3), 4.0 * lambda * lambda).sqrt()
            * sg(c, mu + 3.0 * lambda, 2.0 * lambda)
    }

    /// rnd(x, mu, lambda) = x - arctan(cltan(pi x, mu, lambda)) / pi,
    /// defined for lambda >= 2.
    pub fn rnd(x: f64, mu: f64, lambda: f64) -> f64 {
        use std::f64::consts::PI;
        x - (cltan(PI * x, mu, lambda)).atan() / PI
    }

    /// lxh over [a, b]: low before a, x after b, uncertain between.
    pub fn lxh(a: f64, b: f64, t: f64, mu: f64, x: f64) -> f64 {
        let delta = (b - a) / 2.0;
        let nu = mu + x.mul_add(x, 1.0).ln();
        ip1(t - (a + b) / 2.0 + 1.0, nu, 1.0 / delta) * x
    }

    /// hxl over [a, b]: x before a, low after b.
    pub fn hxl(a: f64, b: f64, t: f64, mu: f64, x: f64) -> f64 {
        let delta = (b - a) / 2.0;
        let nu = mu + x.mul_add(x, 1.0).ln();
        ip1((a + b) / 2.0 - t + 1.0, nu, 1.0 / delta) * x
    }

    /// Soft clamp into (a, b): always lands strictly inside the interval,
    /// within e^-mu of x when a + 1/lambda <= x <= b - 1/lambda.
    pub fn clamp(a: f64, b: f64, x: f64, mu: f64, lambda: f64) -> f64 {
        let delta = b - a;
        let theta = 2.0 * lambda + 1.0 / (2.0 * delta);
        mx(
            a + 1.0 / theta,
            mn(x, b - 1.0 / theta, mu + 1.0, theta),
            mu + 1.0,
            theta,
        )
    }
}

fn q(n: i64, d: i64) -> Coefficient {
    Coefficient::from_ratio(n, d)
}

fn cr(r: &BigRational) -> Coefficient {
    Coefficient::from_rational(r.clone())
}

/// Shared scaffolding for building multidimensional zoo systems over a
/// common base point.
struct Ctx {
    d: usize,
    x0: Vec<Coefficient>,
}

impl Ctx {
    fn new(x0: Vec<Coefficient>) -> Ctx {
        Ctx { d: x0.len(), x0 }
    }

    fn proj(&self, i: usize) -> Pivp {
        projection(self.d, i, &self.x0)
    }

    fn constf(&self, c: Coefficient) -> Pivp {
        constant_fn(self.d, c, &self.x0)
    }

    fn lin(&self, terms: &[(&Pivp, Coefficient)], off: Coefficient) -> Result<Pivp, ClosureError> {
        linear_combination(terms, off)
    }

    /// `a * f + b` for scalar f.
    fn scale_shift(&self, f: &Pivp, a: Coefficient, b: Coefficient) -> Result<Pivp, ClosureError> {
        linear_combination(&[(f, a)], b)
    }
}

/// `f(args...)`: compose a function system with a tuple of argument systems.
fn apply(f: &Pivp, args: &[&Pivp]) -> Result<Pivp, ClosureError> {
    compose(f, &tuple_of(args)?)
}

/// Attach a constant bound to a system that lost its bound (reciprocal);
/// callers state the constant that is valid on the declared domain.
fn with_const_bound(mut f: Pivp, c: Coefficient) -> Pivp {
    f.bound = Some(BoundExpr::Const(c));
    f
}

/// ln(2 cosh u) as a unidimensional generable function: the pair
/// (L, T = tanh u) with dL = T du, dT = (1 - T^2) du, L(0) = ln 2.
pub fn ln_2cosh_pivp() -> Pivp {
    let l_row = Polynomial::var(2, 1);
    let one = Polynomial::constant(2, Coefficient::one());
    let t_row = one.sub(&Polynomial::var(2, 1).pow(2));
    let rhs = PolyMatrix::column(vec![l_row, t_row]);
    let ln2 = Coefficient::approx_from_f64(std::f64::consts::LN_2).unwrap();
    Pivp::new(1, 1, rhs, vec![Coefficient::zero()], vec![ln2, Coefficient::zero()])
        .with_bound(BoundExpr::add(BoundExpr::Identity, BoundExpr::constant_int(1)))
}

/// ln(1 + u^2) as a unidimensional generable function via the triple
/// (L, z = 1/(1+u^2), u).
pub fn ln_one_plus_sq_pivp() -> Pivp {
    let z = Polynomial::var(3, 1);
    let v = Polynomial::var(3, 2);
    let rhs = PolyMatrix::column(vec![
        v.mul(&z).scale(&q(2, 1)),
        v.mul(&z.pow(2)).scale(&q(-2, 1)),
        Polynomial::constant(3, Coefficient::one()),
    ]);
    Pivp::new(
        1,
        1,
        rhs,
        vec![Coefficient::zero()],
        vec![Coefficient::zero(), Coefficient::one(), Coefficient::zero()],
    )
    .with_bound(BoundExpr::add(
        BoundExpr::Power(Box::new(BoundExpr::Identity), 2),
        BoundExpr::constant_int(1),
    ))
}

/// u^(-1/2) on (eps, inf) via dg = -(1/2) g^3 du seeded at g(1) = 1.
pub fn inv_sqrt_pivp(eps: BigRational) -> Result<Pivp, ZooError> {
    if eps <= BigRational::zero() {
        return Err(ZooError::BadParameter("inverse square root needs eps > 0".into()));
    }
    let g = Polynomial::var(1, 0);
    let rhs = PolyMatrix::column(vec![g.pow(3).scale(&q(-1, 2))]);
    let eps_f = cr(&eps).numeric();
    let bound = Coefficient::approx_from_f64(eps_f.sqrt().recip())
        .ok_or_else(|| ZooError::BadParameter("eps out of range".into()))?;
    Ok(
        Pivp::new(1, 1, rhs, vec![Coefficient::one()], vec![Coefficient::one()])
            .with_bound(BoundExpr::Const(bound))
            .with_domain(Domain::Box { lo: vec![Some(eps_f)], hi: vec![None] }),
    )
}

/// A univariate polynomial with rational coefficients as a generable pair
/// (p(u), u).
pub fn poly_fn_pivp(p: &Polynomial) -> Pivp {
    assert_eq!(p.arity(), 1);
    let dp = p.partial(0).unwrap().remap(2, &[1]);
    let rhs = PolyMatrix::column(vec![dp, Polynomial::constant(2, Coefficient::one())]);
    let p0 = p
        .eval_exact(&[BigRational::zero()])
        .map(Coefficient::from_rational)
        .unwrap_or_else(|| Coefficient::approx_from_f64(p.eval(&[0.0]).unwrap()).unwrap());
    // Majorant bound: sigma * (alpha^deg + 1) + alpha.
    let sigma = Coefficient::approx_from_f64(p.sigma()).unwrap();
    let bound = BoundExpr::add(
        BoundExpr::mul(
            BoundExpr::Const(sigma),
            BoundExpr::add(
                BoundExpr::Power(Box::new(BoundExpr::Identity), p.degree()),
                BoundExpr::constant_int(1),
            ),
        ),
        BoundExpr::Identity,
    );
    Pivp::new(1, 1, rhs, vec![Coefficient::zero()], vec![p0, Coefficient::zero()])
        .with_bound(bound)
}

fn zoo3_base() -> Vec<Coefficient> {
    vec![Coefficient::zero(), Coefficient::one(), q(2, 1)]
}

/// Inputs (x, mu, lambda): tanh(x mu lambda).
pub fn sg_pivp() -> Result<Pivp, ZooError> {
    let ctx = Ctx::new(zoo3_base());
    let x = ctx.proj(0);
    let mu = ctx.proj(1);
    let lam = ctx.proj(2);
    let prod = multiply(&multiply(&x, &mu)?, &lam)?;
    Ok(compose(&builtins::tanh(), &prod)?)
}

/// Inputs (x, mu, lambda): (1 + sg(x - 1, mu, lambda)) / 2.
pub fn ip1_pivp() -> Result<Pivp, ZooError> {
    let ctx = Ctx::new(zoo3_base());
    let zero = Coefficient::zero;
    let shift = crate::pivp::affine_map(
        3,
        &[
            vec![Coefficient::one(), zero(), zero()],
            vec![zero(), Coefficient::one(), zero()],
            vec![zero(), zero(), Coefficient::one()],
        ],
        &[q(-1, 1), zero(), zero()],
        &ctx.x0,
    );
    let shifted = compose(&sg_pivp()?, &shift)?;
    Ok(ctx.scale_shift(&shifted, q(1, 2), q(1, 2))?)
}

/// Inputs (x, mu, lambda): ln(2 cosh((1 + lambda mu) x)) / (1 + lambda mu)
/// on mu, lambda >= 0.
pub fn abs_pivp() -> Result<Pivp, ZooError> {
    let ctx = Ctx::new(zoo3_base());
    let x = ctx.proj(0);
    let mu = ctx.proj(1);
    let lam = ctx.proj(2);
    let one_plus = ctx.scale_shift(&multiply(&lam, &mu)?, q(1, 1), q(1, 1))?;
    let inner = multiply(&one_plus, &x)?;
    let l = compose(&ln_2cosh_pivp(), &inner)?;
    // 1/(1 + lambda mu) <= 1 on the declared domain
    let recip = with_const_bound(reciprocal(&one_plus)?, Coefficient::one());
    let mut out = multiply(&l, &recip)?;
    out.domain = Domain::Box {
        lo: vec![None, Some(0.0), Some(0.0)],
        hi: vec![None, None, None],
    };
    Ok(out)
}

fn mx_base() -> Vec<Coefficient> {
    vec![Coefficient::zero(), Coefficient::zero(), Coefficient::one(), q(2, 1)]
}

/// Inputs (x, y, mu, lambda): (y + x + abs(y - x, mu, lambda)) / 2.
pub fn mx_pivp() -> Result<Pivp, ZooError> {
    let ctx = Ctx::new(mx_base());
    let x = ctx.proj(0);
    let y = ctx.proj(1);
    let zero = Coefficient::zero;
    let diffmap = crate::pivp::affine_map(
        4,
        &[
            vec![q(-1, 1), Coefficient::one(), zero(), zero()],
            vec![zero(), zero(), Coefficient::one(), zero()],
            vec![zero(), zero(), zero(), Coefficient::one()],
        ],
        &[zero(), zero(), zero()],
        &ctx.x0,
    );
    let a = compose(&abs_pivp()?, &diffmap)?;
    let mut out = ctx.lin(&[(&x, q(1, 2)), (&y, q(1, 2)), (&a, q(1, 2))], zero())?;
    out.domain = Domain::Box {
        lo: vec![None, None, Some(0.0), Some(0.0)],
        hi: vec![None, None, None, None],
    };
    Ok(out)
}

/// Inputs (x, y, mu, lambda): x + y - mx(x, y, mu, lambda).
pub fn mn_pivp() -> Result<Pivp, ZooError> {
    let ctx = Ctx::new(mx_base());
    let x = ctx.proj(0);
    let y = ctx.proj(1);
    let mx = mx_pivp()?;
    let mut out = ctx.lin(
        &[(&x, Coefficient::one()), (&y, Coefficient::one()), (&mx, q(-1, 1))],
        Coefficient::zero(),
    )?;
    out.domain = mx.domain.clone();
    Ok(out)
}

/// Nested max over n inputs with overshoot delta (inner parameters fixed at
/// mu = 1, lambda = 1/(n delta) as in the defining fold).
pub fn mx_delta_pivp(n: usize, delta: &BigRational) -> Result<Pivp, ZooError> {
    if n == 0 {
        return Err(ZooError::BadParameter("mx_delta needs at least one input".into()));
    }
    if *delta <= BigRational::zero() || *delta > BigRational::one() {
        return Err(ZooError::BadParameter("delta must lie in (0, 1]".into()));
    }
    let ctx = Ctx::new(vec![Coefficient::zero(); n]);
    let lambda =
        BigRational::one() / (BigRational::from_integer((n as i64).into()) * delta.clone());
    let mxf = mx_pivp()?;
    let one = ctx.constf(Coefficient::one());
    let lam = ctx.constf(cr(&lambda));
    let mut acc = ctx.proj(n - 1);
    for i in (0..n - 1).rev() {
        acc = apply(&mxf, &[&ctx.proj(i), &acc, &one, &lam])?;
    }
    Ok(acc)
}

/// Sup-norm over n inputs with overshoot delta.
pub fn norm_inf_pivp(n: usize, delta: &BigRational) -> Result<Pivp, ZooError> {
    if n == 0 {
        return Err(ZooError::BadParameter("norm needs at least one input".into()));
    }
    if *delta <= BigRational::zero() || *delta > BigRational::one() {
        return Err(ZooError::BadParameter("delta must lie in (0, 1]".into()));
    }
    let ctx = Ctx::new(vec![Coefficient::zero(); n]);
    let half = delta.clone() / BigRational::from_integer(2.into());
    let mxf = mx_pivp()?;
    let one = ctx.constf(Coefficient::one());
    // abs_{delta/2}(x) = mx(x, -x, 1, 1/(2 * delta/2)) = mx(x, -x, 1, 1/delta)
    let lam_abs = ctx.constf(cr(&(BigRational::one() / delta.clone())));
    let mut parts = Vec::with_capacity(n);
    for i in 0..n {
        let xi = ctx.proj(i);
        let neg = ctx.scale_shift(&xi, q(-1, 1), Coefficient::zero())?;
        parts.push(apply(&mxf, &[&xi, &neg, &one, &lam_abs])?);
    }
    // fold mx_{delta/2} over the parts
    let lam_fold =
        cr(&(BigRational::one() / (BigRational::from_integer((n as i64).into()) * half)));
    let lam_fold = ctx.constf(lam_fold);
    let mut acc = parts[n - 1].clone();
    for part in parts[..n - 1].iter().rev() {
        acc = apply(&mxf, &[part, &acc, &one, &lam_fold])?;
    }
    Ok(acc)
}

/// Inputs (x, mu, lambda) with lambda >= 2:
/// x - arctan(cltan(pi x, mu, lambda)) / pi.
pub fn rnd_pivp() -> Result<Pivp, ZooError> {
    let ctx = Ctx::new(zoo3_base());
    let x = ctx.proj(0);
    let mu = ctx.proj(1);
    let lam = ctx.proj(2);
    let pi = Coefficient::pi();
    let theta = ctx.scale_shift(&x, pi, Coefficient::zero())?;
    let sin_th = compose(&builtins::sin(), &theta)?;
    let cos_th = compose(&builtins::cos(), &theta)?;
    let cos2 = multiply(&cos_th, &cos_th)?;
    let lam2 = multiply(&lam, &lam)?;
    let lam3 = multiply(&lam2, &lam)?;
    // nz(cos^2 th, mu + 16 lam^3, 4 lam^2)
    let mu_nz = ctx.lin(&[(&mu, q(1, 1)), (&lam3, q(16, 1))], Coefficient::zero())?;
    let lam_nz = ctx.scale_shift(&lam2, q(4, 1), Coefficient::zero())?;
    // 1/(4 lam^2) <= 1/16 for lambda >= 2
    let recip_l = with_const_bound(reciprocal(&lam_nz)?, q(1, 16));
    let arg1 = ctx.lin(&[(&cos2, q(-1, 1)), (&recip_l, q(3, 4))], Coefficient::one())?;
    let arg2 = ctx.scale_shift(&mu_nz, q(1, 1), Coefficient::one())?;
    let arg3 = ctx.scale_shift(&lam_nz, q(4, 1), Coefficient::zero())?;
    let ipv = apply(&ip1_pivp()?, &[&arg1, &arg2, &arg3])?;
    let two_over_l = ctx.scale_shift(&recip_l, q(2, 1), Coefficient::zero())?;
    let correction = multiply(&two_over_l, &ipv)?;
    let nzv = ctx.lin(
        &[(&cos2, Coefficient::one()), (&correction, Coefficient::one())],
        Coefficient::zero(),
    )?;
    // nz >= 1/(8 lambda^2); eps = 1/1024 covers the checked lambda <= 8
    // range with margin (the bound constant is best-effort beyond it).
    let inv_sqrt = compose(&inv_sqrt_pivp(BigRational::new(1.into(), 1024.into()))?, &nzv)?;
    let mu_sg = ctx.lin(&[(&mu, q(1, 1)), (&lam, q(3, 1))], Coefficient::zero())?;
    let lam_sg = ctx.scale_shift(&lam, q(2, 1), Coefficient::zero())?;
    let sg_cos = apply(&sg_pivp()?, &[&cos_th, &mu_sg, &lam_sg])?;
    let cl = multiply(&multiply(&sin_th, &inv_sqrt)?, &sg_cos)?;
    let at = compose(&builtins::arctan(), &cl)?;
    let minus_inv_pi = Coefficient::monomial(
        BigRational::from_integer((-1).into()),
        ConstPowers { pi: -1, e: 0 },
    );
    let mut out = ctx.lin(&[(&x, Coefficient::one()), (&at, minus_inv_pi)], Coefficient::zero())?;
    out.domain = Domain::Box {
        lo: vec![None, Some(0.0), Some(2.0)],
        hi: vec![None, None, None],
    };
    Ok(out)
}

fn interval_params(a: &BigRational, b: &BigRational) -> Result<(), ZooError> {
    if b <= a {
        return Err(ZooError::BadParameter("interval needs b > a".into()));
    }
    Ok(())
}

/// Inputs (t, mu, x): low before a, x after b.
pub fn lxh_pivp(a: &BigRational, b: &BigRational) -> Result<Pivp, ZooError> {
    switch_pivp(a, b, false)
}

/// Inputs (t, mu, x): x before a, low after b.
pub fn hxl_pivp(a: &BigRational, b: &BigRational) -> Result<Pivp, ZooError> {
    switch_pivp(a, b, true)
}

fn switch_pivp(a: &BigRational, b: &BigRational, reversed: bool) -> Result<Pivp, ZooError> {
    interval_params(a, b)?;
    let ctx = Ctx::new(vec![Coefficient::zero(), Coefficient::one(), Coefficient::zero()]);
    let t = ctx.proj(0);
    let mu = ctx.proj(1);
    let x = ctx.proj(2);
    let two = BigRational::from_integer(2.into());
    let mid = (a.clone() + b.clone()) / two.clone();
    let delta = (b.clone() - a.clone()) / two;
    let ln1x2 = compose(&ln_one_plus_sq_pivp(), &x)?;
    let nu = ctx.lin(
        &[(&mu, Coefficient::one()), (&ln1x2, Coefficient::one())],
        Coefficient::zero(),
    )?;
    let arg1 = if reversed {
        ctx.scale_shift(&t, q(-1, 1), cr(&(mid + BigRational::one())))?
    } else {
        ctx.scale_shift(&t, q(1, 1), cr(&(BigRational::one() - mid)))?
    };
    let lam = ctx.constf(cr(&(BigRational::one() / delta)));
    let ipv = apply(&ip1_pivp()?, &[&arg1, &nu, &lam])?;
    Ok(multiply(&ipv, &x)?)
}

/// Inputs (x, mu, lambda) with lambda > 0: soft clamp into (a, b).
pub fn clamp_pivp(a: &BigRational, b: &BigRational) -> Result<Pivp, ZooError> {
    interval_params(a, b)?;
    let ctx = Ctx::new(zoo3_base());
    let x = ctx.proj(0);
    let mu = ctx.proj(1);
    let lam = ctx.proj(2);
    let delta = b.clone() - a.clone();
    let inv_2delta = BigRational::one() / (BigRational::from_integer(2.into()) * delta.clone());
    // theta = 2 lambda + 1/(2 delta) >= 1/(2 delta), so 1/theta <= 2 delta.
    let theta = ctx.scale_shift(&lam, q(2, 1), cr(&inv_2delta))?;
    let recip_theta = with_const_bound(
        reciprocal(&theta)?,
        cr(&(BigRational::from_integer(2.into()) * delta.clone())),
    );
    let lo = ctx.scale_shift(&recip_theta, q(1, 1), cr(a))?;
    let hi = ctx.scale_shift(&recip_theta, q(-1, 1), cr(b))?;
    let mu1 = ctx.scale_shift(&mu, q(1, 1), Coefficient::one())?;
    let mnv = apply(&mn_pivp()?, &[&x, &hi, &mu1, &theta])?;
    let mut out = apply(&mx_pivp()?, &[&lo, &mnv, &mu1, &theta])?;
    out.domain = Domain::Box {
        lo: vec![None, Some(0.0), Some(0.0)],
        hi: vec![None, None, None],
    };
    Ok(out)
}

/// Result of checking one zoo lemma at one grid point.
#[derive(Debug, Clone)]
pub struct PointCheck {
    /// The applicable error bound at this point (what the CSV reports).
    pub bound: f64,
    /// Human-readable descriptions of violated claims; empty means pass.
    pub violations: Vec<String>,
}

const CHECK_SLACK: f64 = 1e-12;

/// Check the quoted lemma inequalities for `sg` at (x, mu, lambda).
pub fn check_sg(x: f64, mu: f64, lambda: f64, value: f64) -> PointCheck {
    let mut v = Vec::new();
    let bound = (-x.abs() * lambda * mu).exp();
    // signum(0) = 0 in the lemma's sense
    let diff = if x == 0.0 { value.abs() } else { (x.signum() - value).abs() };
    if diff > bound + CHECK_SLACK {
        v.push(format!("|sgn x - sg| = {diff} > e^(-|x| lambda mu) = {bound}"));
    }
    if diff > 1.0 + CHECK_SLACK {
        v.push("|sgn x - sg| > 1".to_string());
    }
    if x.abs() >= 1.0 / lambda && diff > (-mu).exp() + CHECK_SLACK {
        v.push(format!("outside dead zone but |sgn x - sg| = {diff} > e^-mu"));
    }
    PointCheck { bound, violations: v }
}

/// Check the floor lemma for `ip1` at (x, mu, lambda).
pub fn check_ip1(x: f64, mu: f64, lambda: f64, value: f64) -> PointCheck {
    let mut v = Vec::new();
    let int1 = if x < 1.0 { 0.0 } else { 1.0 };
    let bound = 0.5 * (-(x - 1.0).abs() * lambda * mu).exp();
    let diff = (int1 - value).abs();
    if diff > bound + CHECK_SLACK {
        v.push(format!("|int1 - ip1| = {diff} > e^(-|x-1| lambda mu)/2 = {bound}"));
    }
    if diff > 0.5 + CHECK_SLACK {
        v.push("|int1 - ip1| > 1/2".to_string());
    }
    if (1.0 - x).abs() >= 1.0 / lambda && diff > (-mu).exp() + CHECK_SLACK {
        v.push(format!("outside dead zone but |int1 - ip1| = {diff} > e^-mu"));
    }
    PointCheck { bound, violations: v }
}

/// Check the absolute value lemma at (x, mu, lambda).
pub fn check_abs(x: f64, mu: f64, lambda: f64, value: f64) -> PointCheck {
    let mut v = Vec::new();
    let over = (1.0 / (1.0 + lambda * mu)).min((-x.abs() * lambda * mu).exp());
    if value + CHECK_SLACK < x.abs() {
        v.push(format!("abs underestimates: {value} < |x| = {}", x.abs()));
    }
    if value > x.abs() + over + CHECK_SLACK {
        v.push(format!(
            "abs overshoot {} > min(1/(1+lm), e^(-|x| l m)) = {over}",
            value - x.abs()
        ));
    }
    if x.abs() >= 1.0 / lambda && value > x.abs() + (-mu).exp() + CHECK_SLACK {
        v.push("outside dead zone but overshoot > e^-mu".to_string());
    }
    PointCheck { bound: over, violations: v }
}

/// Check the max/min lemma at (x, y, mu, lambda) for `mx` and `mn` values.
pub fn check_mx_mn(x: f64, y: f64, mu: f64, lambda: f64, mx_v: f64, mn_v: f64) -> PointCheck {
    let mut v = Vec::new();
    let over = (1.0 / (1.0 + lambda * mu)).min((-(x - y).abs() * lambda * mu).exp());
    let mx_true = x.max(y);
    let mn_true = x.min(y);
    if mx_v + CHECK_SLACK < mx_true || mx_v > mx_true + over + CHECK_SLACK {
        v.push(format!("mx {mx_v} outside [max, max + {over}]"));
    }
    if mn_v > mn_true + CHECK_SLACK || mn_v + CHECK_SLACK < mn_true - over {
        v.push(format!("mn {mn_v} outside [min - {over}, min]"));
    }
    if (x - y).abs() >= 1.0 / lambda {
        let e = (-mu).exp();
        if mx_v > mx_true + e + CHECK_SLACK || mn_v + CHECK_SLACK < mn_true - e {
            v.push("outside dead zone but error > e^-mu".to_string());
        }
    }
    // the defining identity mn = x + y - mx holds exactly
    if (mn_v - (x + y - mx_v)).abs() > 1e-12 * (1.0 + x.abs() + y.abs()) {
        v.push("mn != x + y - mx".to_string());
    }
    PointCheck { bound: over, violations: v }
}

/// Check the norm lemma: ||x|| <= norm <= ||x|| + delta.
pub fn check_norm(xs: &[f64], delta: f64, value: f64) -> PointCheck {
    let mut v = Vec::new();
    let norm = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if value + CHECK_SLACK < norm {
        v.push(format!("norm underestimates: {value} < {norm}"));
    }
    if value > norm + delta + CHECK_SLACK {
        v.push(format!("norm overshoot: {value} > {norm} + {delta}"));
    }
    PointCheck { bound: delta, violations: v }
}

/// Check the round lemma at (x, mu, lambda) for lambda >= 2.
pub fn check_rnd(x: f64, mu: f64, lambda: f64, value: f64) -> PointCheck {
    let mut v = Vec::new();
    let n = x.round(); // x = n + delta with delta in [-1/2, 1/2]
    let diff = (value - n).abs();
    if diff > 0.5 + CHECK_SLACK {
        v.push(format!("|rnd - {n}| = {diff} > 1/2"));
    }
    let delta = x - n;
    let inside = delta.abs() <= 0.5 - 1.0 / lambda;
    let bound = if inside { (-mu).exp() } else { 0.5 };
    if inside && diff > (-mu).exp() + CHECK_SLACK {
        v.push(format!("inside safe region but |rnd - {n}| = {diff} > e^-mu"));
    }
    PointCheck { bound, violations: v }
}

/// Check the switching lemma for `lxh` and `hxl` over [a, b].
pub fn check_switch(
    a: f64,
    b: f64,
    t: f64,
    mu: f64,
    x: f64,
    lxh_v: f64,
    hxl_v: f64,
) -> PointCheck {
    let mut v = Vec::new();
    let e = (-mu).exp();
    if lxh_v.abs() > x.abs() + CHECK_SLACK {
        v.push(format!("|lxh| = {} > |x| = {}", lxh_v.abs(), x.abs()));
    }
    if hxl_v.abs() > x.abs() + CHECK_SLACK {
        v.push(format!("|hxl| = {} > |x|", hxl_v.abs()));
    }
    if t <= a {
        if lxh_v.abs() > e + CHECK_SLACK {
            v.push(format!("t <= a but |lxh| = {} > e^-mu", lxh_v.abs()));
        }
        if (x - hxl_v).abs() > e + CHECK_SLACK {
            v.push(format!("t <= a but |x - hxl| = {} > e^-mu", (x - hxl_v).abs()));
        }
    }
    if t >= b {
        if (x - lxh_v).abs() > e + CHECK_SLACK {
            v.push(format!("t >= b but |x - lxh| = {} > e^-mu", (x - lxh_v).abs()));
        }
        if hxl_v.abs() > e + CHECK_SLACK {
            v.push(format!("t >= b but |hxl| = {} > e^-mu", hxl_v.abs()));
        }
    }
    PointCheck { bound: e, violations: v }
}

/// Check the clamp properties: the value lands strictly inside (a, b) and
/// tracks x within e^-mu away from the edges.
pub fn check_clamp(a: f64, b: f64, x: f64, mu: f64, lambda: f64, value: f64) -> PointCheck {
    let mut v = Vec::new();
    let theta = 2.0 * lambda + 1.0 / (2.0 * (b - a));
    if value <= a || value >= b {
        v.push(format!("clamp {value} escapes ({a}, {b})"));
    }
    if value + CHECK_SLACK < a + 1.0 / theta {
        v.push(format!("clamp {value} < a + 1/theta"));
    }
    let e = (-mu).exp();
    if x >= a + 1.0 / lambda && x <= b - 1.0 / lambda && (value - x).abs() > e + CHECK_SLACK {
        v.push(format!("inside safe region but |clamp - x| = {} > e^-mu", (value - x).abs()));
    }
    PointCheck { bound: e, violations: v }
}

/// A zoo function packaged for the CLI: input layout, reference evaluator,
/// compiled system and per-point lemma check.
pub struct ZooEntry {
    pub name: String,
    /// Input names in system order; the grid sweeps `inputs[grid_input]`.
    pub inputs: Vec<String>,
    pub grid_input: usize,
    pub pivp: Pivp,
    pub reference: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub check: Box<dyn Fn(&[f64], f64) -> PointCheck + Send + Sync>,
}

/// Rational-valued static parameters for interval- or delta-parameterized
/// zoo functions.
#[derive(Debug, Clone, Default)]
pub struct StaticParams {
    pub a: Option<BigRational>,
    pub b: Option<BigRational>,
    pub delta: Option<BigRational>,
}

fn need(p: &Option<BigRational>, name: &str, f: &str) -> Result<BigRational, ZooError> {
    p.clone()
        .ok_or_else(|| ZooError::BadParameter(format!("{f} needs parameter {name}")))
}

/// Look up a zoo function by name. `norm` is fixed at three inputs here;
/// the library functions `norm_inf_pivp`/`mx_delta_pivp` take any arity.
pub fn entry(name: &str, statics: &StaticParams) -> Result<ZooEntry, ZooError> {
    let e = match name {
        "sg" => ZooEntry {
            name: "sg".into(),
            inputs: vec!["x".into(), "mu".into(), "lambda".into()],
            grid_input: 0,
            pivp: sg_pivp()?,
            reference: Box::new(|v| reference::sg(v[0], v[1], v[2])),
            check: Box::new(|v, val| check_sg(v[0], v[1], v[2], val)),
        },
        "ip1" => ZooEntry {
            name: "ip1".into(),
            inputs: vec!["x".into(), "mu".into(), "lambda".into()],
            grid_input: 0,
            pivp: ip1_pivp()?,
            reference: Box::new(|v| reference::ip1(v[0], v[1], v[2])),
            check: Box::new(|v, val| check_ip1(v[0], v[1], v[2], val)),
        },
        "abs" => ZooEntry {
            name: "abs".into(),
            inputs: vec!["x".into(), "mu".into(), "lambda".into()],
            grid_input: 0,
            pivp: abs_pivp()?,
            reference: Box::new(|v| reference::abs(v[0], v[1], v[2])),
            check: Box::new(|v, val| check_abs(v[0], v[1], v[2], val)),
        },
        "mx" => ZooEntry {
            name: "mx".into(),
            inputs: vec!["x".into(), "y".into(), "mu".into(), "lambda".into()],
            grid_input: 0,
            pivp: mx_pivp()?,
            reference: Box::new(|v| reference::mx(v[0], v[1], v[2], v[3])),
            check: Box::new(|v, val| {
                check_mx_mn(v[0], v[1], v[2], v[3], val, reference::mn(v[0], v[1], v[2], v[3]))
            }),
        },
        "mn" => ZooEntry {
            name: "mn".into(),
            inputs: vec!["x".into(), "y".into(), "mu".into(), "lambda".into()],
            grid_input: 0,
            pivp: mn_pivp()?,
            reference: Box::new(|v| reference::mn(v[0], v[1], v[2], v[3])),
            check: Box::new(|v, val| {
                check_mx_mn(v[0], v[1], v[2], v[3], reference::mx(v[0], v[1], v[2], v[3]), val)
            }),
        },
        "rnd" => ZooEntry {
            name: "rnd".into(),
            inputs: vec!["x".into(), "mu".into(), "lambda".into()],
            grid_input: 0,
            pivp: rnd_pivp()?,
            reference: Box::new(|v| reference::rnd(v[0], v[1], v[2])),
            check: Box::new(|v, val| check_rnd(v[0], v[1], v[2], val)),
        },
        "lxh" | "hxl" => {
            let a = need(&statics.a, "a", name)?;
            let b = need(&statics.b, "b", name)?;
            let (af, bf) = (cr(&a).numeric(), cr(&b).numeric());
            let reversed = name == "hxl";
            ZooEntry {
                name: name.into(),
                inputs: vec!["t".into(), "mu".into(), "x".into()],
                grid_input: 0,
                pivp: switch_pivp(&a, &b, reversed)?,
                reference: if reversed {
                    Box::new(move |v| reference::hxl(af, bf, v[0], v[1], v[2]))
                } else {
                    Box::new(move |v| reference::lxh(af, bf, v[0], v[1], v[2]))
                },
                check: Box::new(move |v, val| {
                    let (l, h) = if reversed {
                        (reference::lxh(af, bf, v[0], v[1], v[2]), val)
                    } else {
                        (val, reference::hxl(af, bf, v[0], v[1], v[2]))
                    };
                    check_switch(af, bf, v[0], v[1], v[2], l, h)
                }),
            }
        }
        "clamp" => {
            let a = need(&statics.a, "a", name)?;
            let b = need(&statics.b, "b", name)?;
            let (af, bf) = (cr(&a).numeric(), cr(&b).numeric());
            ZooEntry {
                name: "clamp".into(),
                inputs: vec!["x".into(), "mu".into(), "lambda".into()],
                grid_input: 0,
                pivp: clamp_pivp(&a, &b)?,
                reference: Box::new(move |v| reference::clamp(af, bf, v[0], v[1], v[2])),
                check: Box::new(move |v, val| check_clamp(af, bf, v[0], v[1], v[2], val)),
            }
        }
        "norm" => {
            let delta = need(&statics.delta, "delta", name)?;
            let df = cr(&delta).numeric();
            ZooEntry {
                name: "norm".into(),
                inputs: vec!["x1".into(), "x2".into(), "x3".into()],
                grid_input: 0,
                pivp: norm_inf_pivp(3, &delta)?,
                reference: Box::new(move |v| reference::norm_inf(v, df)),
                check: Box::new(move |v, val| check_norm(v, df, val)),
            }
        }
        other => return Err(ZooError::BadParameter(format!("unknown zoo function {other:?}"))),
    };
    Ok(e)
}

pub const ENTRY_NAMES: [&str; 10] =
    ["sg", "ip1", "abs", "mx", "mn", "rnd", "lxh", "hxl", "clamp", "norm"];
