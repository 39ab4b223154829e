//! Closure operations: mechanical PIVP-to-PIVP compilers for sums, products,
//! reciprocals, composition and ODE rewriting, plus the modulus-of-continuity
//! bound and stacking helpers.
//!
//! Every operation stacks operand systems into a fresh state space and adds
//! derived variables so that the requested outputs occupy the leading state
//! components (the serialized form selects outputs as the first `l`
//! variables). Provenance of each state variable is recorded in a
//! [`ClosureTrace`] attached to the result.

use crate::bound::BoundExpr;
use crate::coeff::Coefficient;
use crate::pivp::{Domain, Pivp};
use crate::poly::{PolyMatrix, Polynomial};
use crate::sim::{self, SimError};
use std::fmt;

/// Tolerance used when an initial value must be computed numerically
/// (composition and ODE rewriting); far tighter than any downstream check.
pub const INITIAL_VALUE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum ClosureError {
    InputDimMismatch { left: usize, right: usize },
    OutputDimMismatch { left: usize, right: usize },
    BasePointMismatch,
    /// reciprocal of a function whose initial value is zero
    ZeroInitialValue,
    /// exact inverse not representable (multi-monomial initial value)
    NonInvertibleInitialValue,
    ScalarOutputRequired { got: usize },
    BadDimension(String),
    InitialValueEvaluation(SimError),
    MissingBound,
}

impl fmt::Display for ClosureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosureError::InputDimMismatch { left, right } => {
                write!(f, "input dimensions differ: {left} vs {right}")
            }
            ClosureError::OutputDimMismatch { left, right } => {
                write!(f, "output dimensions differ: {left} vs {right}")
            }
            ClosureError::BasePointMismatch => {
                write!(f, "operands have different base points; rebase one explicitly")
            }
            ClosureError::ZeroInitialValue => write!(f, "zero initial value"),
            ClosureError::NonInvertibleInitialValue => {
                write!(f, "initial value has no exact inverse in the coefficient field")
            }
            ClosureError::ScalarOutputRequired { got } => {
                write!(f, "operation needs a scalar output, got dimension {got}")
            }
            ClosureError::BadDimension(msg) => write!(f, "{msg}"),
            ClosureError::InitialValueEvaluation(e) => {
                write!(f, "initial value evaluation failed: {e}")
            }
            ClosureError::MissingBound => write!(f, "operand carries no growth bound"),
        }
    }
}

impl std::error::Error for ClosureError {}

/// Where a state variable of a generated system came from.
#[derive(Debug, Clone, PartialEq)]
pub enum VarOrigin {
    /// Carried unchanged from an operand's state.
    Carried { operand: usize, index: usize },
    /// Derived variable with a named role (sum, product, composed, ...).
    Derived { role: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub state_index: usize,
    pub origin: VarOrigin,
}

/// Debug record of one closure operation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureTrace {
    pub operation: String,
    pub operands: Vec<OperandSummary>,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperandSummary {
    pub summary: String,
    pub trace: Option<Box<ClosureTrace>>,
}

impl OperandSummary {
    pub fn of(p: &Pivp) -> Self {
        let name = p
            .trace
            .as_ref()
            .map(|t| t.operation.clone())
            .unwrap_or_else(|| "pivp".to_string());
        OperandSummary {
            summary: format!("{name}[n={}, d={}, l={}]", p.state_dim, p.input_dim, p.output_dim),
            trace: p.trace.clone(),
        }
    }
}

impl ClosureTrace {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        out.push_str(&format!("{pad}{}\n", self.operation));
        for p in &self.provenance {
            let desc = match &p.origin {
                VarOrigin::Carried { operand, index } => {
                    format!("carried from operand {} state {}", operand, index)
                }
                VarOrigin::Derived { role } => format!("derived ({role})"),
            };
            out.push_str(&format!("{pad}  y{}: {}\n", p.state_index + 1, desc));
        }
        for (i, op) in self.operands.iter().enumerate() {
            out.push_str(&format!("{pad}  operand {i}: {}\n", op.summary));
            if let Some(t) = &op.trace {
                t.render_into(out, depth + 2);
            }
        }
    }
}

/// Componentwise sum or difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Sub,
}

fn intersect_domains(a: &Domain, b: &Domain) -> Domain {
    use Domain::*;
    match (a, b) {
        (PathRequired, _) | (_, PathRequired) => PathRequired,
        (Box { lo: la, hi: ha }, Box { lo: lb, hi: hb }) => {
            let lo = la
                .iter()
                .zip(lb.iter())
                .map(|(x, y)| match (x, y) {
                    (Some(u), Some(v)) => Some(u.max(*v)),
                    (Some(u), None) | (None, Some(u)) => Some(*u),
                    (None, None) => None,
                })
                .collect();
            let hi = ha
                .iter()
                .zip(hb.iter())
                .map(|(x, y)| match (x, y) {
                    (Some(u), Some(v)) => Some(u.min(*v)),
                    (Some(u), None) | (None, Some(u)) => Some(*u),
                    (None, None) => None,
                })
                .collect();
            Box { lo, hi }
        }
        (b @ Box { .. }, _) | (_, b @ Box { .. }) => b.clone(),
        (DeclaredConvex, _) | (_, DeclaredConvex) => DeclaredConvex,
        (AllSpace, AllSpace) => AllSpace,
    }
}

/// Offsets of the operand state blocks in a stacked system.
struct Stack {
    arity: usize,
    offsets: Vec<usize>,
}

impl Stack {
    /// Lay out `derived` leading variables followed by the operands' states.
    fn new(derived: usize, operands: &[&Pivp]) -> Stack {
        let mut offsets = Vec::with_capacity(operands.len());
        let mut at = derived;
        for op in operands {
            offsets.push(at);
            at += op.state_dim;
        }
        Stack { arity: at, offsets }
    }

    /// Remap an operand polynomial into the stacked variable space.
    fn lift(&self, operand: usize, p: &Polynomial, operand_dim: usize) -> Polynomial {
        let map: Vec<usize> = (0..operand_dim).map(|i| self.offsets[operand] + i).collect();
        p.remap(self.arity, &map)
    }

    fn var(&self, operand: usize, index: usize) -> Polynomial {
        Polynomial::var(self.arity, self.offsets[operand] + index)
    }
}

fn carried_provenance(stack: &Stack, operands: &[&Pivp], derived_roles: Vec<String>) -> Vec<Provenance> {
    let mut out: Vec<Provenance> = derived_roles
        .into_iter()
        .enumerate()
        .map(|(i, role)| Provenance { state_index: i, origin: VarOrigin::Derived { role } })
        .collect();
    for (oi, op) in operands.iter().enumerate() {
        for k in 0..op.state_dim {
            out.push(Provenance {
                state_index: stack.offsets[oi] + k,
                origin: VarOrigin::Carried { operand: oi, index: k },
            });
        }
    }
    out.sort_by_key(|p| p.state_index);
    out
}

fn require_same_shape(f: &Pivp, g: &Pivp) -> Result<(), ClosureError> {
    if f.input_dim != g.input_dim {
        return Err(ClosureError::InputDimMismatch { left: f.input_dim, right: g.input_dim });
    }
    if f.output_dim != g.output_dim {
        return Err(ClosureError::OutputDimMismatch { left: f.output_dim, right: g.output_dim });
    }
    if f.x0 != g.x0 {
        return Err(ClosureError::BasePointMismatch);
    }
    Ok(())
}

/// Componentwise `f + g` or `f - g`. The result stacks both systems and adds
/// one derived variable per output whose derivative is the sum/difference of
/// the operand output derivatives; bound rule `sp + sp'`.
pub fn combine(f: &Pivp, g: &Pivp, op: CombineOp) -> Result<Pivp, ClosureError> {
    require_same_shape(f, g)?;
    let l = f.output_dim;
    let d = f.input_dim;
    let stack = Stack::new(l, &[f, g]);
    let n = stack.arity;
    let mut rhs = PolyMatrix::zero(n, d, n);
    let mut y0 = Vec::with_capacity(n);
    for i in 0..l {
        for j in 0..d {
            let pf = stack.lift(0, f.rhs.entry(i, j), f.state_dim);
            let pg = stack.lift(1, g.rhs.entry(i, j), g.state_dim);
            let row = match op {
                CombineOp::Add => pf.add(&pg),
                CombineOp::Sub => pf.sub(&pg),
            };
            rhs.set_entry(i, j, row);
        }
        y0.push(match op {
            CombineOp::Add => &f.y0[i] + &g.y0[i],
            CombineOp::Sub => &f.y0[i] - &g.y0[i],
        });
    }
    copy_operand_rows(&mut rhs, &stack, 0, f);
    copy_operand_rows(&mut rhs, &stack, 1, g);
    y0.extend(f.y0.iter().cloned());
    y0.extend(g.y0.iter().cloned());
    let mut out = Pivp::new(d, l, rhs, f.x0.clone(), y0);
    out.domain = intersect_domains(&f.domain, &g.domain);
    if let (Some(bf), Some(bg)) = (&f.bound, &g.bound) {
        out.bound = Some(BoundExpr::add(bf.clone(), bg.clone()));
    }
    let name = match op {
        CombineOp::Add => "add",
        CombineOp::Sub => "sub",
    };
    out.trace = Some(Box::new(ClosureTrace {
        operation: name.to_string(),
        operands: vec![OperandSummary::of(f), OperandSummary::of(g)],
        provenance: carried_provenance(&stack, &[f, g], vec![name.to_string(); l]),
    }));
    Ok(out)
}

fn copy_operand_rows(rhs: &mut PolyMatrix, stack: &Stack, operand: usize, p: &Pivp) {
    for i in 0..p.state_dim {
        for j in 0..p.input_dim {
            rhs.set_entry(
                stack.offsets[operand] + i,
                j,
                stack.lift(operand, p.rhs.entry(i, j), p.state_dim),
            );
        }
    }
}

/// Componentwise product. Derived variables `z_i = f_i * g_i` carry the
/// derivative `p_i(y) g_i + f_i q_i(z)`; bound rule `max(sp, sp', sp sp')`.
pub fn multiply(f: &Pivp, g: &Pivp) -> Result<Pivp, ClosureError> {
    require_same_shape(f, g)?;
    let l = f.output_dim;
    let d = f.input_dim;
    let stack = Stack::new(l, &[f, g]);
    let n = stack.arity;
    let mut rhs = PolyMatrix::zero(n, d, n);
    let mut y0 = Vec::with_capacity(n);
    for i in 0..l {
        let fi = stack.var(0, i);
        let gi = stack.var(1, i);
        for j in 0..d {
            let pf = stack.lift(0, f.rhs.entry(i, j), f.state_dim);
            let pg = stack.lift(1, g.rhs.entry(i, j), g.state_dim);
            rhs.set_entry(i, j, pf.mul(&gi).add(&fi.mul(&pg)));
        }
        y0.push(&f.y0[i] * &g.y0[i]);
    }
    copy_operand_rows(&mut rhs, &stack, 0, f);
    copy_operand_rows(&mut rhs, &stack, 1, g);
    y0.extend(f.y0.iter().cloned());
    y0.extend(g.y0.iter().cloned());
    let mut out = Pivp::new(d, l, rhs, f.x0.clone(), y0);
    out.domain = intersect_domains(&f.domain, &g.domain);
    if let (Some(bf), Some(bg)) = (&f.bound, &g.bound) {
        out.bound = Some(BoundExpr::max_of(vec![
            bf.clone(),
            bg.clone(),
            BoundExpr::mul(bf.clone(), bg.clone()),
        ]));
    }
    out.trace = Some(Box::new(ClosureTrace {
        operation: "multiply".to_string(),
        operands: vec![OperandSummary::of(f), OperandSummary::of(g)],
        provenance: carried_provenance(&stack, &[f, g], vec!["product".to_string(); l]),
    }));
    Ok(out)
}

/// `1/f` for scalar-output `f` with nonzero initial value: adds `g` with
/// `dg = -df * g^2`, `g(x0) = 1/y0_1`. The paper's bound for the reciprocal
/// depends on `1/|f|` and is not derivable from the data held here, so the
/// result carries no bound; callers may attach one.
pub fn reciprocal(f: &Pivp) -> Result<Pivp, ClosureError> {
    if f.output_dim != 1 {
        return Err(ClosureError::ScalarOutputRequired { got: f.output_dim });
    }
    if f.y0[0].is_zero() || f.y0[0].numeric() == 0.0 {
        return Err(ClosureError::ZeroInitialValue);
    }
    let inv0 = f.y0[0].inverse().ok_or(ClosureError::NonInvertibleInitialValue)?;
    let d = f.input_dim;
    let stack = Stack::new(1, &[f]);
    let n = stack.arity;
    let mut rhs = PolyMatrix::zero(n, d, n);
    let gsq = Polynomial::var(n, 0).pow(2);
    for j in 0..d {
        let df = stack.lift(0, f.rhs.entry(0, j), f.state_dim);
        rhs.set_entry(0, j, df.neg().mul(&gsq));
    }
    copy_operand_rows(&mut rhs, &stack, 0, f);
    let mut y0 = vec![inv0];
    y0.extend(f.y0.iter().cloned());
    let mut out = Pivp::new(d, 1, rhs, f.x0.clone(), y0);
    out.domain = f.domain.clone();
    out.trace = Some(Box::new(ClosureTrace {
        operation: "reciprocal".to_string(),
        operands: vec![OperandSummary::of(f)],
        provenance: carried_provenance(&stack, &[f], vec!["reciprocal".to_string()]),
    }));
    Ok(out)
}

/// Full-state initial value of `f` at input `v`: exact when `v` is the base
/// point, otherwise computed by the simulator at [`INITIAL_VALUE_TOL`] and
/// stored as approximate literal coefficients rounded to 15 significant
/// digits. The rounding is deliberate: values sitting within an ulp of a
/// short decimal (saturated states like tanh at large arguments, which must
/// land exactly on 1) snap onto it instead of carrying integration noise
/// that later excites unstable directions of the stacked system.
fn state_at(f: &Pivp, v: &[Coefficient]) -> Result<Vec<Coefficient>, ClosureError> {
    if v == f.x0.as_slice() {
        return Ok(f.y0.clone());
    }
    let point: Vec<f64> = v.iter().map(|c| c.numeric()).collect();
    let state = sim::eval_state(f, &point, INITIAL_VALUE_TOL, None)
        .map_err(ClosureError::InitialValueEvaluation)?;
    state
        .into_iter()
        .map(|x| {
            let snapped: f64 = format!("{x:.14e}").parse().unwrap_or(x);
            Coefficient::approx_from_f64(snapped)
                .ok_or_else(|| ClosureError::BadDimension(format!("non-finite initial value {x}")))
        })
        .collect()
}

/// Composition `f(g(.))`: requires `g.output_dim == f.input_dim`. The result
/// carries a copy `h` of `f`'s generator state with Jacobian
/// `p(h) * q_{1..m}(g-state)`; `h(x0) = f-state(g(x0))`. The caller asserts
/// that `g`'s range lies inside `f`'s domain. Bound rule
/// `max(sp_g, sp_f o sp_g)`.
pub fn compose(f: &Pivp, g: &Pivp) -> Result<Pivp, ClosureError> {
    let m = f.input_dim;
    if g.output_dim != m {
        return Err(ClosureError::BadDimension(format!(
            "composition needs g output dimension {} to match f input dimension {}",
            g.output_dim, m
        )));
    }
    let d = g.input_dim;
    let stack = Stack::new(f.state_dim, &[g]);
    let n = stack.arity;
    // h occupies indices 0..n_f, g-state follows.
    let h_map: Vec<usize> = (0..f.state_dim).collect();
    let mut rhs = PolyMatrix::zero(n, d, n);
    for i in 0..f.state_dim {
        for j in 0..d {
            // sum over f's input slots k of p_f[i][k](h) * p_g[k][j](g)
            let mut acc = Polynomial::zero(n);
            for k in 0..m {
                let pf = f.rhs.entry(i, k).remap(n, &h_map);
                let pg = stack.lift(0, g.rhs.entry(k, j), g.state_dim);
                acc = acc.add(&pf.mul(&pg));
            }
            rhs.set_entry(i, j, acc);
        }
    }
    copy_operand_rows(&mut rhs, &stack, 0, g);
    let h0 = state_at(f, &g.y0[..m].to_vec())?;
    let mut y0 = h0;
    y0.extend(g.y0.iter().cloned());
    let mut out = Pivp::new(d, f.output_dim, rhs, g.x0.clone(), y0);
    out.domain = g.domain.clone();
    if let (Some(bf), Some(bg)) = (&f.bound, &g.bound) {
        out.bound = Some(BoundExpr::max(bg.clone(), BoundExpr::compose(bf.clone(), bg.clone())));
    }
    let mut provenance: Vec<Provenance> = (0..f.state_dim)
        .map(|i| Provenance {
            state_index: i,
            origin: VarOrigin::Derived { role: format!("composed f-state {i}") },
        })
        .collect();
    for k in 0..g.state_dim {
        provenance.push(Provenance {
            state_index: f.state_dim + k,
            origin: VarOrigin::Carried { operand: 1, index: k },
        });
    }
    out.trace = Some(Box::new(ClosureTrace {
        operation: "compose".to_string(),
        operands: vec![OperandSummary::of(f), OperandSummary::of(g)],
        provenance,
    }));
    Ok(out)
}

/// Rewrite `y' = f(y), y(t0) = y0` (with `f` an autonomous generable vector
/// field, `input_dim = output_dim = d`) into a single PIVP whose first `d`
/// components are the solution. The generator state `w` of `f` is pulled
/// along the solution: `w' = p(w) * w_{1..d}`.
pub fn ode_rewrite(f: &Pivp, y0: &[Coefficient], t0: Coefficient) -> Result<Pivp, ClosureError> {
    let d = f.input_dim;
    if f.output_dim != d {
        return Err(ClosureError::BadDimension(format!(
            "vector field needs output dimension {} to match input dimension {}",
            f.output_dim, d
        )));
    }
    if y0.len() != d {
        return Err(ClosureError::BadDimension(format!(
            "initial point has length {}, expected {}",
            y0.len(),
            d
        )));
    }
    let n = d + f.state_dim;
    let w_map: Vec<usize> = (0..f.state_dim).map(|i| d + i).collect();
    let mut rhs = PolyMatrix::zero(n, 1, n);
    for i in 0..d {
        // z_i' = w_i (f's i-th output along the solution)
        rhs.set_entry(i, 0, Polynomial::var(n, d + i));
    }
    for i in 0..f.state_dim {
        let mut acc = Polynomial::zero(n);
        for j in 0..d {
            let pf = f.rhs.entry(i, j).remap(n, &w_map);
            acc = acc.add(&pf.mul(&Polynomial::var(n, d + j)));
        }
        rhs.set_entry(d + i, 0, acc);
    }
    let w0 = state_at(f, y0)?;
    let mut init = y0.to_vec();
    init.extend(w0);
    let mut out = Pivp::new(1, d, rhs, vec![t0], init);
    let mut provenance: Vec<Provenance> = (0..d)
        .map(|i| Provenance {
            state_index: i,
            origin: VarOrigin::Derived { role: format!("solution component {i}") },
        })
        .collect();
    for k in 0..f.state_dim {
        provenance.push(Provenance {
            state_index: d + k,
            origin: VarOrigin::Carried { operand: 0, index: k },
        });
    }
    out.trace = Some(Box::new(ClosureTrace {
        operation: "ode_rewrite".to_string(),
        operands: vec![OperandSummary::of(f)],
        provenance,
    }));
    Ok(out)
}

/// Rewrite `y' = f(y, x(t))` where the control `x(t)` is produced by a
/// unidimensional PIVP: the control's polynomial derivative is substituted
/// for `x'` so the whole right-hand side stays polynomial. With
/// `d_y = f.input_dim - control.output_dim = 0` this is the time pullback of
/// `f` along the control (GPAC rewriting of driven circuits).
pub fn ode_rewrite_controlled(
    f: &Pivp,
    control: &Pivp,
    y0: &[Coefficient],
) -> Result<Pivp, ClosureError> {
    if control.input_dim != 1 {
        return Err(ClosureError::BadDimension(
            "control must be a unidimensional system".to_string(),
        ));
    }
    let d_x = control.output_dim;
    if f.input_dim < d_x {
        return Err(ClosureError::BadDimension(format!(
            "control produces {} inputs but f takes only {}",
            d_x, f.input_dim
        )));
    }
    let d_y = f.input_dim - d_x;
    if d_y > 0 && f.output_dim != d_y {
        return Err(ClosureError::BadDimension(format!(
            "vector field needs output dimension {} for state dimension {}",
            f.output_dim, d_y
        )));
    }
    if y0.len() != d_y {
        return Err(ClosureError::BadDimension(format!(
            "initial point has length {}, expected {}",
            y0.len(),
            d_y
        )));
    }
    let n = d_y + f.state_dim + control.state_dim;
    let w_off = d_y;
    let c_off = d_y + f.state_dim;
    let w_map: Vec<usize> = (0..f.state_dim).map(|i| w_off + i).collect();
    let c_map: Vec<usize> = (0..control.state_dim).map(|i| c_off + i).collect();
    let mut rhs = PolyMatrix::zero(n, 1, n);
    for i in 0..d_y {
        rhs.set_entry(i, 0, Polynomial::var(n, w_off + i));
    }
    for i in 0..f.state_dim {
        let mut acc = Polynomial::zero(n);
        for j in 0..d_y {
            let pf = f.rhs.entry(i, j).remap(n, &w_map);
            acc = acc.add(&pf.mul(&Polynomial::var(n, w_off + j)));
        }
        for j in 0..d_x {
            let pf = f.rhs.entry(i, d_y + j).remap(n, &w_map);
            let xj_prime = control.rhs.entry(j, 0).remap(n, &c_map);
            acc = acc.add(&pf.mul(&xj_prime));
        }
        rhs.set_entry(w_off + i, 0, acc);
    }
    for i in 0..control.state_dim {
        rhs.set_entry(c_off + i, 0, control.rhs.entry(i, 0).remap(n, &c_map));
    }
    // f's generator state starts at (y0, x(t0)) = (y0, control outputs at t0).
    let mut at = y0.to_vec();
    at.extend(control.y0[..d_x].iter().cloned());
    let w0 = state_at(f, &at)?;
    let mut init = y0.to_vec();
    init.extend(w0);
    init.extend(control.y0.iter().cloned());
    let output_dim = if d_y > 0 { d_y } else { f.output_dim };
    let mut out = Pivp::new(1, output_dim, rhs, control.x0.clone(), init);
    let mut provenance: Vec<Provenance> = (0..d_y)
        .map(|i| Provenance {
            state_index: i,
            origin: VarOrigin::Derived { role: format!("solution component {i}") },
        })
        .collect();
    for k in 0..f.state_dim {
        provenance.push(Provenance {
            state_index: w_off + k,
            origin: VarOrigin::Carried { operand: 0, index: k },
        });
    }
    for k in 0..control.state_dim {
        provenance.push(Provenance {
            state_index: c_off + k,
            origin: VarOrigin::Carried { operand: 1, index: k },
        });
    }
    out.trace = Some(Box::new(ClosureTrace {
        operation: "ode_rewrite_controlled".to_string(),
        operands: vec![OperandSummary::of(f), OperandSummary::of(control)],
        provenance,
    }));
    Ok(out)
}

/// The modulus-of-continuity bound: for `x1, x2` with the segment between
/// them inside the domain,
/// `|f(x1) - f(x2)| <= |x1 - x2| * d * sigma(p) * max(1, sp(max|xi|))^deg p`.
#[derive(Debug, Clone)]
pub struct ModulusBound {
    pub input_dim: usize,
    pub sigma: f64,
    pub degree: u32,
    pub bound: BoundExpr,
}

pub fn modulus_bound(f: &Pivp) -> Result<ModulusBound, ClosureError> {
    let bound = f.bound.clone().ok_or(ClosureError::MissingBound)?;
    Ok(ModulusBound {
        input_dim: f.input_dim,
        sigma: f.rhs.sigma(),
        degree: f.rhs.degree(),
        bound,
    })
}

impl ModulusBound {
    pub fn eval(&self, x1: &[f64], x2: &[f64]) -> f64 {
        let dist = x1
            .iter()
            .zip(x2.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let alpha = x1
            .iter()
            .chain(x2.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        dist * self.input_dim as f64
            * self.sigma
            * self.bound.eval(alpha).max(1.0).powi(self.degree as i32)
    }

    /// A nondecreasing polynomial `p` with integer-rounded coefficients such
    /// that `p(alpha)` dominates `d * sigma * max(1, sp(alpha))^deg`; `None`
    /// when the bound is not polynomially majorized.
    pub fn dominating_polynomial(&self) -> Option<Polynomial> {
        let sp = self.bound.poly_majorant()?;
        let one = Polynomial::constant(1, Coefficient::one());
        let base = one.add(&sp); // >= max(1, sp) on [0, inf)
        let factor = (self.input_dim as f64 * self.sigma).ceil() as i64 + 1;
        Some(base.pow(self.degree).scale(&Coefficient::from_int(factor)))
    }
}

/// Move a system's base point: evaluates the full state at `new_x0` with the
/// simulator and returns an otherwise identical system anchored there.
pub fn rebase(f: &Pivp, new_x0: &[Coefficient]) -> Result<Pivp, ClosureError> {
    if new_x0.len() != f.input_dim {
        return Err(ClosureError::BadDimension(format!(
            "new base point has length {}, expected {}",
            new_x0.len(),
            f.input_dim
        )));
    }
    let y0 = state_at(f, new_x0)?;
    let mut out = f.clone();
    out.x0 = new_x0.to_vec();
    out.y0 = y0;
    out.trace = Some(Box::new(ClosureTrace {
        operation: "rebase".to_string(),
        operands: vec![OperandSummary::of(f)],
        provenance: (0..f.state_dim)
            .map(|i| Provenance {
                state_index: i,
                origin: VarOrigin::Carried { operand: 0, index: i },
            })
            .collect(),
    }));
    Ok(out)
}

/// Stack scalar systems into one vector-output system: outputs are leading
/// copy variables of each operand's output.
pub fn tuple_of(fs: &[&Pivp]) -> Result<Pivp, ClosureError> {
    if fs.is_empty() {
        return Err(ClosureError::BadDimension("tuple needs at least one component".into()));
    }
    let d = fs[0].input_dim;
    let x0 = fs[0].x0.clone();
    for f in fs {
        if f.input_dim != d {
            return Err(ClosureError::InputDimMismatch { left: d, right: f.input_dim });
        }
        if f.x0 != x0 {
            return Err(ClosureError::BasePointMismatch);
        }
    }
    let l: usize = fs.iter().map(|f| f.output_dim).sum();
    let stack = Stack::new(l, fs);
    let n = stack.arity;
    let mut rhs = PolyMatrix::zero(n, d, n);
    let mut y0 = Vec::with_capacity(n);
    let mut row = 0usize;
    for (oi, f) in fs.iter().enumerate() {
        for i in 0..f.output_dim {
            for j in 0..d {
                rhs.set_entry(row, j, stack.lift(oi, f.rhs.entry(i, j), f.state_dim));
            }
            y0.push(f.y0[i].clone());
            row += 1;
        }
    }
    for (oi, f) in fs.iter().enumerate() {
        copy_operand_rows(&mut rhs, &stack, oi, f);
        y0.extend(f.y0.iter().cloned());
    }
    let mut out = Pivp::new(d, l, rhs, x0, y0);
    out.domain = fs
        .iter()
        .skip(1)
        .fold(fs[0].domain.clone(), |acc, f| intersect_domains(&acc, &f.domain));
    let bounds: Option<Vec<BoundExpr>> = fs.iter().map(|f| f.bound.clone()).collect();
    out.bound = bounds.map(BoundExpr::max_of);
    out.trace = Some(Box::new(ClosureTrace {
        operation: "tuple".to_string(),
        operands: fs.iter().map(|f| OperandSummary::of(f)).collect(),
        provenance: carried_provenance(
            &stack,
            fs,
            (0..l).map(|i| format!("output copy {i}")).collect(),
        ),
    }));
    Ok(out)
}

/// `sum_i a_i f_i + b` for scalar-output systems over a common base point.
pub fn linear_combination(
    terms: &[(&Pivp, Coefficient)],
    offset: Coefficient,
) -> Result<Pivp, ClosureError> {
    if terms.is_empty() {
        return Err(ClosureError::BadDimension("linear combination needs terms".into()));
    }
    let d = terms[0].0.input_dim;
    let x0 = terms[0].0.x0.clone();
    for (f, _) in terms {
        if f.output_dim != 1 {
            return Err(ClosureError::ScalarOutputRequired { got: f.output_dim });
        }
        if f.input_dim != d {
            return Err(ClosureError::InputDimMismatch { left: d, right: f.input_dim });
        }
        if f.x0 != x0 {
            return Err(ClosureError::BasePointMismatch);
        }
    }
    let fs: Vec<&Pivp> = terms.iter().map(|(f, _)| *f).collect();
    let stack = Stack::new(1, &fs);
    let n = stack.arity;
    let mut rhs = PolyMatrix::zero(n, d, n);
    let mut w0 = offset.clone();
    for j in 0..d {
        let mut acc = Polynomial::zero(n);
        for (oi, (f, a)) in terms.iter().enumerate() {
            acc = acc.add(&stack.lift(oi, f.rhs.entry(0, j), f.state_dim).scale(a));
        }
        rhs.set_entry(0, j, acc);
    }
    for (oi, (f, a)) in terms.iter().enumerate() {
        copy_operand_rows(&mut rhs, &stack, oi, f);
        w0 = &w0 + &(a * &f.y0[0]);
    }
    let mut y0 = vec![w0];
    for (f, _) in terms {
        y0.extend(f.y0.iter().cloned());
    }
    let mut out = Pivp::new(d, 1, rhs, x0, y0);
    out.domain = fs
        .iter()
        .skip(1)
        .fold(fs[0].domain.clone(), |acc, f| intersect_domains(&acc, &f.domain));
    let bounds: Option<Vec<BoundExpr>> = terms
        .iter()
        .map(|(f, a)| {
            f.bound
                .clone()
                .map(|b| BoundExpr::mul(BoundExpr::Const(a.abs()), b))
        })
        .collect();
    out.bound = bounds.map(|bs| {
        let mut acc = BoundExpr::Const(offset.abs());
        for b in bs {
            acc = BoundExpr::add(acc, b);
        }
        acc
    });
    out.trace = Some(Box::new(ClosureTrace {
        operation: "linear_combination".to_string(),
        operands: fs.iter().map(|f| OperandSummary::of(f)).collect(),
        provenance: carried_provenance(&stack, &fs, vec!["weighted sum".to_string()]),
    }));
    Ok(out)
}
