//! Numeric engine: adaptive variable-order Taylor-series integration of
//! PIVPs, evaluation of unidimensional and multidimensional systems along
//! piecewise-linear paths, growth-bound checking, and a convergence probe
//! for the integrator itself.
//!
//! The right-hand side is polynomial, so exact series coefficients of the
//! solution are available through the Taylor recurrence: each step computes
//! coefficients to an adaptive order (8..=20), picks the step from the
//! requested per-unit-time error budget against the top coefficient
//! magnitudes, and advances by Horner evaluation of the series.

use crate::pivp::{Pivp, Violation};
use crate::poly::PolyMatrix;
use std::collections::HashMap;
use std::fmt;

pub const MIN_ORDER: usize = 8;
pub const MAX_ORDER: usize = 20;
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Invalid(Vec<Violation>),
    NotUnidimensional { input_dim: usize },
    /// Step size underflow, typically a finite-time singularity.
    StepUnderflow { t: f64 },
    NonFinite { t: f64 },
    StepLimit { t: f64 },
    PathRequired,
    BadPoint(String),
    BadTolerance(f64),
    MissingBound,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Invalid(v) => {
                write!(f, "invalid system: ")?;
                for (i, violation) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{violation}")?;
                }
                Ok(())
            }
            SimError::NotUnidimensional { input_dim } => {
                write!(f, "time integration needs input dimension 1, got {input_dim}")
            }
            SimError::StepUnderflow { t } => {
                write!(f, "step size underflow near t={t} (finite-time singularity?)")
            }
            SimError::NonFinite { t } => write!(f, "state became non-finite near t={t}"),
            SimError::StepLimit { t } => write!(f, "step limit exceeded at t={t}"),
            SimError::PathRequired => {
                write!(f, "domain requires an explicit evaluation path from the base point")
            }
            SimError::BadPoint(msg) => write!(f, "bad evaluation point: {msg}"),
            SimError::BadTolerance(tol) => write!(f, "tolerance must be positive, got {tol}"),
            SimError::MissingBound => write!(f, "system carries no growth bound"),
        }
    }
}

impl std::error::Error for SimError {}

/// One accepted integration step.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub y: Vec<f64>,
    pub err_est: f64,
    pub h: f64,
    pub order: usize,
}

/// Time-stamped solution samples with per-step error estimates.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        &self.samples.last().expect("trajectory has at least the initial sample").y
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().expect("nonempty").t
    }

    pub fn total_error_estimate(&self) -> f64 {
        self.samples.iter().map(|s| s.err_est).sum()
    }
}

/// Piecewise-linear evaluation path in input space, starting at the base
/// point. Containment in the domain is asserted by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPath {
    pub waypoints: Vec<Vec<f64>>,
}

impl EvalPath {
    pub fn new(waypoints: Vec<Vec<f64>>) -> Self {
        EvalPath { waypoints }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeRef {
    Var(u32),
    Node(u32),
}

/// Product DAG for one directional polynomial system: rows are linear
/// combinations of shared monomial nodes. Nodes are topologically ordered
/// (children precede parents), so series coefficients can be filled one
/// order at a time.
struct Tape {
    n: usize,
    nodes: Vec<(NodeRef, NodeRef)>,
    rows: Vec<Vec<(f64, NodeRef)>>,
    row_consts: Vec<f64>,
}

impl Tape {
    /// Compile `sum_j dir_j * p[., j]` (or column 0 when `dir` is `None`)
    /// into a product DAG.
    fn compile(rhs: &PolyMatrix, dir: Option<&[f64]>) -> Tape {
        let n = rhs.rows();
        let mut nodes = Vec::new();
        let mut power_cache: HashMap<(u32, u32), NodeRef> = HashMap::new();
        let mut term_cache: HashMap<Vec<u32>, NodeRef> = HashMap::new();
        let mut rows = Vec::with_capacity(n);
        let mut row_consts = vec![0.0; n];

        for i in 0..n {
            // Merge term lists across columns with direction weights.
            let mut merged: HashMap<Vec<u32>, f64> = HashMap::new();
            let cols: Vec<(usize, f64)> = match dir {
                Some(d) => d.iter().cloned().enumerate().filter(|(_, w)| *w != 0.0).collect(),
                None => vec![(0, 1.0)],
            };
            for (j, w) in cols {
                for (m, c) in rhs.entry(i, j).terms() {
                    *merged.entry(m.0.clone()).or_insert(0.0) += w * c.numeric();
                }
            }
            let mut row = Vec::new();
            let mut terms: Vec<(Vec<u32>, f64)> = merged.into_iter().collect();
            terms.sort_by(|a, b| a.0.cmp(&b.0));
            for (exps, coeff) in terms {
                if coeff == 0.0 {
                    continue;
                }
                if exps.iter().all(|&e| e == 0) {
                    row_consts[i] += coeff;
                    continue;
                }
                let node = Self::term_node(
                    &exps,
                    &mut nodes,
                    &mut power_cache,
                    &mut term_cache,
                );
                row.push((coeff, node));
            }
            rows.push(row);
        }
        Tape { n, nodes, rows, row_consts }
    }

    fn power_node(
        var: u32,
        exp: u32,
        nodes: &mut Vec<(NodeRef, NodeRef)>,
        power_cache: &mut HashMap<(u32, u32), NodeRef>,
    ) -> NodeRef {
        if exp == 1 {
            return NodeRef::Var(var);
        }
        if let Some(&n) = power_cache.get(&(var, exp)) {
            return n;
        }
        let lower = Self::power_node(var, exp - 1, nodes, power_cache);
        nodes.push((lower, NodeRef::Var(var)));
        let node = NodeRef::Node((nodes.len() - 1) as u32);
        power_cache.insert((var, exp), node);
        node
    }

    fn term_node(
        exps: &[u32],
        nodes: &mut Vec<(NodeRef, NodeRef)>,
        power_cache: &mut HashMap<(u32, u32), NodeRef>,
        term_cache: &mut HashMap<Vec<u32>, NodeRef>,
    ) -> NodeRef {
        if let Some(&n) = term_cache.get(exps) {
            return n;
        }
        let mut factors: Vec<NodeRef> = Vec::new();
        for (var, &e) in exps.iter().enumerate() {
            if e > 0 {
                factors.push(Self::power_node(var as u32, e, nodes, power_cache));
            }
        }
        let mut acc = factors[0];
        for &f in &factors[1..] {
            nodes.push((acc, f));
            acc = NodeRef::Node((nodes.len() - 1) as u32);
        }
        term_cache.insert(exps.to_vec(), acc);
        acc
    }
}

/// Per-step series workspace; coefficient buffers are extended order by
/// order so adaptive deepening costs only the new orders.
struct Workspace {
    var_series: Vec<Vec<f64>>,
    node_series: Vec<Vec<f64>>,
    filled: usize,
}

impl Workspace {
    fn new(tape: &Tape) -> Workspace {
        Workspace {
            var_series: vec![Vec::new(); tape.n],
            node_series: vec![Vec::new(); tape.nodes.len()],
            filled: 0,
        }
    }

    fn reset(&mut self, tape: &Tape, y: &[f64]) {
        for (i, s) in self.var_series.iter_mut().enumerate() {
            s.clear();
            s.push(y[i]);
        }
        for (idx, &(a, b)) in tape.nodes.iter().enumerate() {
            let v = self.node_value(a, 0) * self.node_value(b, 0);
            let s = &mut self.node_series[idx];
            s.clear();
            s.push(v);
        }
        self.filled = 0;
    }

    fn node_value(&self, r: NodeRef, k: usize) -> f64 {
        match r {
            NodeRef::Var(v) => self.var_series[v as usize][k],
            NodeRef::Node(n) => self.node_series[n as usize][k],
        }
    }

    /// Extend the solution series to coefficient order `order` (inclusive).
    fn ensure_order(&mut self, tape: &Tape, order: usize) {
        while self.filled < order {
            let k = self.filled;
            // c_{k+1} from the t^k coefficient of the right-hand side.
            // Row terms are summed with Neumaier compensation: expanded
            // products like (1 - y^2) * p contribute pairs of equal and
            // opposite terms whose cancellation must be exact, or frozen
            // saturated variables pick up phantom dynamics. Results below
            // the roundoff floor of the row's own terms (eps^2 of the
            // largest magnitude, the residue of the compensation itself)
            // are indistinguishable from zero and flushed to it.
            let mut next = vec![0.0; tape.n];
            for (i, next_i) in next.iter_mut().enumerate() {
                let mut sum = if k == 0 { tape.row_consts[i] } else { 0.0 };
                let mut comp = 0.0;
                let mut scale = sum.abs();
                for &(c, node) in &tape.rows[i] {
                    let term = c * self.node_value(node, k);
                    scale = scale.max(term.abs());
                    let t = sum + term;
                    comp += if sum.abs() >= term.abs() {
                        (sum - t) + term
                    } else {
                        (term - t) + sum
                    };
                    sum = t;
                }
                let mut value = sum + comp;
                if value.abs() <= scale * (8.0 * f64::EPSILON * f64::EPSILON) {
                    value = 0.0;
                }
                *next_i = value / (k + 1) as f64;
            }
            for (i, s) in self.var_series.iter_mut().enumerate() {
                s.push(next[i]);
            }
            // Node coefficients at order k+1 by convolution.
            for idx in 0..tape.nodes.len() {
                let (a, b) = tape.nodes[idx];
                let mut acc = 0.0;
                for u in 0..=(k + 1) {
                    acc += self.node_value(a, u) * self.node_value(b, k + 1 - u);
                }
                self.node_series[idx].push(acc);
            }
            self.filled = k + 1;
        }
    }

    fn coeff_norm(&self, k: usize) -> f64 {
        self.var_series.iter().map(|s| s[k].abs()).fold(0.0, f64::max)
    }

    /// Horner evaluation of the series truncated at `order`, at offset `h`.
    fn advance(&self, h: f64, order: usize) -> Vec<f64> {
        self.var_series
            .iter()
            .map(|s| {
                let mut acc = s[order];
                for k in (0..order).rev() {
                    acc = s[k] + acc * h;
                }
                acc
            })
            .collect()
    }
}

struct Integrator {
    tape: Tape,
    ws: Workspace,
    order: usize,
}

struct StepOutcome {
    h: f64,
    order: usize,
    err_est: f64,
}

impl Integrator {
    fn new(rhs: &PolyMatrix, dir: Option<&[f64]>) -> Integrator {
        let tape = Tape::compile(rhs, dir);
        let ws = Workspace::new(&tape);
        Integrator { tape, ws, order: 12 }
    }

    /// Plan a step from `y`, adapting the order by the magnitude of the top
    /// series coefficients. The error allowance per step is
    /// `max(rate * h, step_floor)`: a per-unit-parameter budget plus a
    /// per-step floor that keeps very long segments with localized dynamics
    /// from degenerating into millions of micro-steps.
    fn plan_step(&mut self, y: &[f64], rate: f64, step_floor: f64, remaining: f64) -> StepOutcome {
        self.ws.reset(&self.tape, y);
        let mut order = self.order.clamp(MIN_ORDER, MAX_ORDER);
        self.ws.ensure_order(&self.tape, order);
        let mut h = step_for(&self.ws, order, rate, step_floor);
        // Deepen while the extra orders buy a materially longer step.
        while order + 2 <= MAX_ORDER && h < remaining {
            self.ws.ensure_order(&self.tape, order + 2);
            let h2 = step_for(&self.ws, order + 2, rate, step_floor);
            if h2 > 1.2 * h {
                order += 2;
                h = h2;
            } else {
                break;
            }
        }
        // Relax the order when the series clearly converges faster than
        // needed (top coefficient already negligible at this step).
        if order > MIN_ORDER {
            let lower = order - 2;
            let h_low = step_for(&self.ws, lower, rate, step_floor);
            if h_low >= h.min(remaining) {
                order = lower;
                h = h_low;
            }
        }
        self.order = order;
        let h_clipped = h.min(remaining);
        let err_est = self.ws.coeff_norm(order) * h_clipped.powi(order as i32);
        StepOutcome { h: h_clipped, order, err_est }
    }
}

fn step_for(ws: &Workspace, order: usize, rate: f64, step_floor: f64) -> f64 {
    let mut h = f64::INFINITY;
    for j in [order - 1, order] {
        let a = ws.coeff_norm(j);
        if a > 0.0 {
            // a h^j <= rate h  or  a h^j <= step_floor, whichever is looser
            let h_unit = (rate / a).powf(1.0 / (j as f64 - 1.0));
            let h_step = (step_floor / a).powf(1.0 / j as f64);
            h = h.min(h_unit.max(h_step));
        }
    }
    0.9 * h
}

/// Integrate a unidimensional system from its base time to `t_end`.
pub fn integrate(f: &Pivp, t_end: f64, tol: f64) -> Result<Trajectory, SimError> {
    integrate_with_dense(f, t_end, tol, &mut |_, _| {})
}

/// Integrate and additionally report `n_points + 1` equally spaced dense
/// states over the integration interval (per-step series evaluation).
pub fn integrate_dense(
    f: &Pivp,
    t_end: f64,
    tol: f64,
    n_points: usize,
) -> Result<(Trajectory, Vec<(f64, Vec<f64>)>), SimError> {
    let t0 = f.x0_f64()[0];
    let mut grid: Vec<f64> = (0..=n_points)
        .map(|i| t0 + (t_end - t0) * i as f64 / n_points.max(1) as f64)
        .collect();
    if (t_end - t0) < 0.0 {
        grid.sort_by(|a, b| b.partial_cmp(a).unwrap());
    }
    let mut dense: Vec<(f64, Vec<f64>)> = Vec::with_capacity(grid.len());
    let mut next = 0usize;
    let forward = t_end >= t0;
    let traj = integrate_with_dense(f, t_end, tol, &mut |window, eval| {
        let (a, b) = window;
        let eps = 1e-9 * (b - a).abs();
        while next < grid.len() {
            let t = grid[next];
            let inside = if forward { t >= a - eps && t <= b + eps } else { t <= a + eps && t >= b - eps };
            if inside {
                dense.push((t, eval(t)));
                next += 1;
            } else {
                break;
            }
        }
    })?;
    // Anything left lands exactly on the final time.
    let last = traj.final_state().to_vec();
    while next < grid.len() {
        dense.push((grid[next], last.clone()));
        next += 1;
    }
    Ok((traj, dense))
}

fn integrate_with_dense(
    f: &Pivp,
    t_end: f64,
    tol: f64,
    on_step: &mut dyn FnMut((f64, f64), &dyn Fn(f64) -> Vec<f64>),
) -> Result<Trajectory, SimError> {
    if tol <= 0.0 {
        return Err(SimError::BadTolerance(tol));
    }
    let violations = f.validate();
    if !violations.is_empty() {
        return Err(SimError::Invalid(violations));
    }
    if f.input_dim != 1 {
        return Err(SimError::NotUnidimensional { input_dim: f.input_dim });
    }
    let t0 = f.x0_f64()[0];
    let y0 = f.y0_f64();
    let mut integ = Integrator::new(&f.rhs, None);
    let mut t = t0;
    let mut y = y0.clone();
    let mut samples = vec![Sample { t, y: y.clone(), err_est: 0.0, h: 0.0, order: 0 }];
    if t_end == t0 {
        on_step((t0, t0), &|_| y0.clone());
        return Ok(Trajectory { samples });
    }
    let span = (t_end - t0).abs();
    let rate = tol / span.max(1.0);
    let dir = if t_end > t0 { 1.0 } else { -1.0 };
    let step_floor = tol * 1e-4;
    for _ in 0..MAX_STEPS {
        let remaining = (t_end - t).abs();
        let plan = integ.plan_step(&y, rate, step_floor, remaining);
        let h = plan.h;
        if !h.is_finite() || h <= 1e-15 * t.abs().max(1.0) {
            return Err(SimError::StepUnderflow { t });
        }
        let signed = dir * h;
        let ws = &integ.ws;
        let order = plan.order;
        on_step((t, t + signed), &|tq: f64| ws.advance(tq - t, order));
        y = integ.ws.advance(signed, plan.order);
        t += signed;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite { t });
        }
        samples.push(Sample { t, y: y.clone(), err_est: plan.err_est, h: signed, order: plan.order });
        if (t_end - t).abs() <= 1e-14 * t_end.abs().max(1.0) {
            return Ok(Trajectory { samples });
        }
    }
    Err(SimError::StepLimit { t })
}

fn resolve_path(f: &Pivp, x: &[f64]) -> Result<Vec<Vec<f64>>, SimError> {
    if !f.domain.straight_segments_allowed() {
        return Err(SimError::PathRequired);
    }
    Ok(vec![f.x0_f64(), x.to_vec()])
}

/// Evaluate the output components of `f` at input point `x`.
///
/// For `d = 1` the path is ignored and the system is integrated in time.
/// For `d > 1` the pulled-back system `z' = p(z) * segment_direction` is
/// integrated along the straight segment from the base point (domains that
/// allow it) or along the supplied piecewise-linear path.
pub fn eval(f: &Pivp, x: &[f64], tol: f64, path: Option<&EvalPath>) -> Result<Vec<f64>, SimError> {
    let state = eval_state(f, x, tol, path)?;
    Ok(state[..f.output_dim].to_vec())
}

/// Like [`eval`] but returns the full state vector.
pub fn eval_state(
    f: &Pivp,
    x: &[f64],
    tol: f64,
    path: Option<&EvalPath>,
) -> Result<Vec<f64>, SimError> {
    if x.len() != f.input_dim {
        return Err(SimError::BadPoint(format!(
            "point has dimension {}, system input dimension is {}",
            x.len(),
            f.input_dim
        )));
    }
    if !f.domain.contains(x) {
        return Err(SimError::BadPoint(format!("{x:?} lies outside the declared domain")));
    }
    let x0 = f.x0_f64();
    if x == x0.as_slice() {
        return Ok(f.y0_f64());
    }
    if f.input_dim == 1 && path.is_none() {
        let traj = integrate(f, x[0], tol)?;
        return Ok(traj.final_state().to_vec());
    }
    let mut waypoints = match path {
        Some(p) => p.waypoints.clone(),
        None => resolve_path(f, x)?,
    };
    if waypoints.is_empty() {
        return Err(SimError::BadPoint("empty path".to_string()));
    }
    if waypoints[0] != x0 {
        waypoints.insert(0, x0);
    }
    if let Some(last) = waypoints.last() {
        if last != &x.to_vec() {
            return Err(SimError::BadPoint(format!(
                "path ends at {:?}, expected {:?}",
                last, x
            )));
        }
    }
    for w in &waypoints {
        if w.len() != f.input_dim {
            return Err(SimError::BadPoint("waypoint dimension mismatch".to_string()));
        }
    }
    eval_along(f, &waypoints, tol)
}

/// One straight segment normalized to sup-norm-unit speed: the parameter
/// runs over [0, len] with velocity `dir / len`, which keeps series
/// coefficients at the scale of the state even for very long segments.
struct Segment {
    start: Vec<f64>,
    unit_dir: Vec<f64>,
    len: f64,
}

impl Segment {
    fn between(a: &[f64], b: &[f64]) -> Option<Segment> {
        let dir: Vec<f64> = a.iter().zip(b.iter()).map(|(u, v)| v - u).collect();
        let len = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if len == 0.0 {
            return None;
        }
        Some(Segment {
            start: a.to_vec(),
            unit_dir: dir.iter().map(|v| v / len).collect(),
            len,
        })
    }

    fn point_at(&self, s: f64) -> Vec<f64> {
        self.start
            .iter()
            .zip(self.unit_dir.iter())
            .map(|(a, d)| a + d * s)
            .collect()
    }

    /// Walk the segment, invoking `on_step(s_before, plan, workspace)` at
    /// each accepted step before the state advances.
    fn walk(
        &self,
        f: &Pivp,
        y: &mut Vec<f64>,
        tol: f64,
        mut on_step: impl FnMut(f64, &StepOutcome, &Workspace),
    ) -> Result<(), SimError> {
        let mut integ = Integrator::new(&f.rhs, Some(&self.unit_dir));
        let mut s = 0.0;
        let rate = tol / self.len;
        let step_floor = tol * 1e-4;
        let mut steps = 0usize;
        loop {
            let remaining = self.len - s;
            let plan = integ.plan_step(y, rate, step_floor, remaining);
            let h = plan.h;
            // Progress-relative underflow: a step that no longer moves the
            // parameter relative to its position (or is denormal-small)
            // signals a singularity on the segment.
            if !h.is_finite() || h <= 1e-15 * s || h <= 1e-250 * self.len {
                if std::env::var("PIVP_DEBUG_UNDERFLOW").is_ok() {
                    let k = plan.order;
                    let mut worst: Vec<(usize, f64, f64, f64)> = (0..integ.tape.n)
                        .map(|i| {
                            let sv = &integ.ws.var_series[i];
                            (i, sv[0], sv[1], sv[k])
                        })
                        .collect();
                    worst.sort_by(|a, b| b.3.abs().partial_cmp(&a.3.abs()).unwrap_or(std::cmp::Ordering::Equal));
                    eprintln!("underflow s={s:.4e} len={:.4e} h={h:.3e} K={k}", self.len);
                    for (i, v, c1, ck) in worst.iter().take(6) {
                        eprintln!("  var {i}: y={v:.17e} c1={c1:.17e} cK={ck:.3e}");
                    }
                    if let Ok(ridx) = std::env::var("PIVP_DEBUG_ROW") {
                        if let Ok(ridx) = ridx.parse::<usize>() {
                            eprintln!("row {ridx} const={}", integ.tape.row_consts[ridx]);
                            for &(c, node) in &integ.tape.rows[ridx] {
                                let v0 = integ.ws.node_value(node, 0);
                                eprintln!("  coeff {c:+.17e} node0 {v0:+.17e} prod {:+.17e} ({node:?})", c * v0);
                            }
                        }
                    }
                }
                return Err(SimError::StepUnderflow { t: s / self.len });
            }
            on_step(s, &plan, &integ.ws);
            if let Ok(idx) = std::env::var("PIVP_TRACE_VAR") {
                if let Ok(idx) = idx.parse::<usize>() {
                    if idx < y.len() {
                        let ynew = integ.ws.advance(h, plan.order);
                        eprintln!(
                            "s={s:.5e} h={h:.5e} K={} var: {:+.17e} -> {:+.17e} c[..6]={:?}",
                            plan.order,
                            y[idx],
                            ynew[idx],
                            &integ.ws.var_series[idx][..plan.order.min(5)]
                        );
                    }
                }
            }
            *y = integ.ws.advance(h, plan.order);
            s += h;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(SimError::NonFinite { t: s / self.len });
            }
            if self.len - s <= 1e-14 * self.len {
                return Ok(());
            }
            steps += 1;
            if steps > MAX_STEPS {
                return Err(SimError::StepLimit { t: s / self.len });
            }
        }
    }
}

/// Integrate along a waypoint list, returning the final full state.
fn eval_along(f: &Pivp, waypoints: &[Vec<f64>], tol: f64) -> Result<Vec<f64>, SimError> {
    if tol <= 0.0 {
        return Err(SimError::BadTolerance(tol));
    }
    let violations = f.validate();
    if !violations.is_empty() {
        return Err(SimError::Invalid(violations));
    }
    let mut y = f.y0_f64();
    let segments: Vec<Segment> = waypoints
        .iter()
        .zip(waypoints.iter().skip(1))
        .filter_map(|(a, b)| Segment::between(a, b))
        .collect();
    let seg_tol = tol / segments.len().max(1) as f64;
    for seg in &segments {
        seg.walk(f, &mut y, seg_tol, |_, _, _| {})?;
    }
    Ok(y)
}

/// Integrate along `path` and return output vectors at `n_points + 1`
/// equally spaced points on the final segment. Returns pairs of
/// (input point, outputs). Used for line scans over a parameter grid.
pub fn eval_dense_along(
    f: &Pivp,
    path: &EvalPath,
    n_points: usize,
    tol: f64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, SimError> {
    let violations = f.validate();
    if !violations.is_empty() {
        return Err(SimError::Invalid(violations));
    }
    let mut waypoints = path.waypoints.clone();
    let x0 = f.x0_f64();
    if waypoints.is_empty() {
        return Err(SimError::BadPoint("empty path".to_string()));
    }
    if waypoints[0] != x0 {
        waypoints.insert(0, x0);
    }
    if waypoints.len() < 2 {
        return Err(SimError::BadPoint("path needs a final segment".to_string()));
    }
    let a = waypoints[waypoints.len() - 2].clone();
    let b = waypoints[waypoints.len() - 1].clone();
    let grid: Vec<f64> = (0..=n_points).map(|i| i as f64 / n_points.max(1) as f64).collect();
    let l = f.output_dim;
    let seg_tol = tol / (waypoints.len() - 1) as f64;

    // Integrate everything up to the start of the last segment.
    let mut y = f.y0_f64();
    if waypoints.len() > 2 {
        let head = waypoints[..waypoints.len() - 1].to_vec();
        y = eval_along(f, &head, tol)?;
    }
    let seg = match Segment::between(&a, &b) {
        Some(seg) => seg,
        None => {
            let outputs = y[..l].to_vec();
            return Ok(grid
                .into_iter()
                .map(|_| (a.clone(), outputs.clone()))
                .collect());
        }
    };

    // Walk the last segment, capturing per-step series windows.
    let mut windows: Vec<(f64, f64, Vec<Vec<f64>>)> = Vec::new();
    seg.walk(f, &mut y, seg_tol, |s, plan, ws| {
        let series: Vec<Vec<f64>> =
            ws.var_series.iter().map(|v| v[..=plan.order].to_vec()).collect();
        windows.push((s, s + plan.h, series));
    })?;

    let mut out: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(grid.len());
    let mut widx = 0usize;
    for &sq in &grid {
        let sq = sq * seg.len;
        while widx + 1 < windows.len() && sq > windows[widx].1 + 1e-12 * seg.len {
            widx += 1;
        }
        let (w0, _, series) = &windows[widx];
        let dt = sq - w0;
        let outputs: Vec<f64> = series[..l]
            .iter()
            .map(|cs| {
                let mut acc = cs[cs.len() - 1];
                for k in (0..cs.len() - 1).rev() {
                    acc = cs[k] + acc * dt;
                }
                acc
            })
            .collect();
        out.push((seg.point_at(sq), outputs));
    }
    Ok(out)
}

/// Report from a growth-bound check.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub max_ratio: f64,
    pub worst_input: Vec<f64>,
    /// Points where the state exceeded bound * (1 + 1e-6).
    pub exceedances: Vec<(Vec<f64>, f64)>,
}

/// Sample trajectories across an input box and compare the state sup-norm
/// against `bound(input sup-norm)` along the way.
pub fn check_bound(f: &Pivp, lo: &[f64], hi: &[f64], tol: f64) -> Result<BoundReport, SimError> {
    let bound = f.bound.as_ref().ok_or(SimError::MissingBound)?;
    if lo.len() != f.input_dim || hi.len() != f.input_dim {
        return Err(SimError::BadPoint("range dimension mismatch".to_string()));
    }
    let x0 = f.x0_f64();
    let mut report = BoundReport { max_ratio: 0.0, worst_input: x0.clone(), exceedances: Vec::new() };
    let check_state = |x: &[f64], y: &[f64], report: &mut BoundReport| {
        let alpha = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let b = bound.eval(alpha);
        let ratio = norm / b.max(1e-300);
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.worst_input = x.to_vec();
        }
        if norm > b * (1.0 + 1e-6) {
            report.exceedances.push((x.to_vec(), ratio));
        }
    };
    let targets: Vec<Vec<f64>> = if f.input_dim == 1 {
        vec![vec![lo[0]], vec![hi[0]]]
    } else {
        sample_box(lo, hi)
    };
    for target in targets {
        let seg = match Segment::between(&x0, &target) {
            Some(seg) => seg,
            None => continue,
        };
        check_state(&x0, &f.y0_f64(), &mut report);
        let mut y = f.y0_f64();
        let mut checks: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        seg.walk(f, &mut y, tol, |s, plan, ws| {
            let y_next = ws.advance(plan.h, plan.order);
            checks.push((seg.point_at(s + plan.h), y_next));
        })?;
        for (x, y) in checks {
            check_state(&x, &y, &mut report);
        }
    }
    Ok(report)
}

fn sample_box(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let d = lo.len();
    let mut out = Vec::new();
    // corners
    for mask in 0..(1usize << d.min(10)) {
        let p: Vec<f64> = (0..d)
            .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
            .collect();
        out.push(p);
    }
    // center and golden-ratio interior points
    out.push((0..d).map(|i| 0.5 * (lo[i] + hi[i])).collect());
    let phi = 0.618_033_988_749_894_9;
    let mut u = 0.371;
    for _ in 0..8 {
        let p: Vec<f64> = (0..d)
            .map(|i| {
                u = (u + phi) % 1.0;
                lo[i] + u * (hi[i] - lo[i])
            })
            .collect();
        out.push(p);
    }
    out
}

/// Fixed-order, fixed-step local truncation errors against a reference
/// trajectory, with the fitted log-log slope (classically `order + 1`).
#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub order: usize,
    /// (step size, max local error over the interval)
    pub errors: Vec<(f64, f64)>,
    pub slope: f64,
}

/// Validate the integrator: for each step size, take single fixed-order
/// steps from reference states along the trajectory and measure the worst
/// local error; the log-log slope against h estimates the truncation order.
pub fn convergence_probe(
    f: &Pivp,
    t_end: f64,
    order: usize,
    steps: &[f64],
    ref_tol: f64,
) -> Result<ProbeRow, SimError> {
    let t0 = f.x0_f64()[0];
    let mut errors = Vec::with_capacity(steps.len());
    let tape = Tape::compile(&f.rhs, None);
    let mut ws = Workspace::new(&tape);
    for &h in steps {
        let n_steps = ((t_end - t0) / h).floor().max(1.0) as usize;
        let grid_n = n_steps;
        let (_, dense) = integrate_dense(f, t0 + h * grid_n as f64, ref_tol, grid_n)?;
        let mut worst = 0.0f64;
        for i in 0..grid_n {
            let (_, y_ref) = &dense[i];
            let (_, y_next) = &dense[i + 1];
            ws.reset(&tape, y_ref);
            ws.ensure_order(&tape, order);
            let y_step = ws.advance(h, order);
            let err = y_step
                .iter()
                .zip(y_next.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(err);
        }
        errors.push((h, worst));
    }
    let slope = fit_slope(&errors);
    Ok(ProbeRow { order, errors, slope })
}

/// Take one fixed-order Taylor step from `y`; exposed for tests.
pub fn one_step_fixed(f: &Pivp, y: &[f64], h: f64, order: usize) -> Vec<f64> {
    let tape = Tape::compile(&f.rhs, None);
    let mut ws = Workspace::new(&tape);
    ws.reset(&tape, y);
    ws.ensure_order(&tape, order);
    ws.advance(h, order)
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, e)| *e > 0.0 && *h > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
