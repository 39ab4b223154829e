//! GPAC circuits: constant, adder, multiplier and integrator units wired
//! into a graph, validated and compiled to PIVPs (and back).
//!
//! Integrators may carry several (integrand, differential) port pairs,
//! accumulating `sum_i int u_i dv_i`; the single-input integrator is the
//! one-pair case. Differential ports are driven by external inputs only
//! (circuits where another unit drives a derivative port are handled by
//! rewriting, not by direct compilation), and feedback must pass through an
//! integrator, so the algebraic part of the graph is acyclic.

use crate::coeff::Coefficient;
use crate::pivp::{Domain, Pivp};
use crate::poly::{PolyMatrix, Polynomial};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum UnitKind {
    Constant(Coefficient),
    Adder,
    Multiplier,
    Integrator {
        pairs: usize,
        /// Initial output value; required for compilation.
        init: Option<Coefficient>,
    },
}

impl UnitKind {
    fn input_ports(&self) -> Vec<String> {
        match self {
            UnitKind::Constant(_) => vec![],
            UnitKind::Adder | UnitKind::Multiplier => vec!["a".into(), "b".into()],
            UnitKind::Integrator { pairs, .. } => {
                let mut out = Vec::with_capacity(pairs * 2);
                for i in 1..=*pairs {
                    out.push(format!("u{i}"));
                    out.push(format!("v{i}"));
                }
                out
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            UnitKind::Constant(_) => "constant",
            UnitKind::Adder => "adder",
            UnitKind::Multiplier => "multiplier",
            UnitKind::Integrator { .. } => "integrator",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub id: String,
    pub kind: UnitKind,
}

/// A signal source: an external input `x_j` (0-based) or a unit output.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    External(usize),
    Unit(String),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::External(j) => write!(f, "x{}", j + 1),
            Source::Unit(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wire {
    pub from: Source,
    pub to_unit: String,
    pub to_port: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub input_dim: usize,
    /// Base input point at which integrator initial values hold.
    pub x0: Vec<Coefficient>,
    pub units: Vec<Unit>,
    pub wires: Vec<Wire>,
    /// Designated outputs; must be integrator ids.
    pub outputs: Vec<String>,
    pub domain: Option<Domain>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CircuitViolation {
    DuplicateUnitId(String),
    UnknownUnit(String),
    UnknownPort { unit: String, port: String },
    UnwiredPort { unit: String, port: String },
    DoublyWiredPort { unit: String, port: String },
    ExternalInputOutOfRange { index: usize },
    /// External inputs may only drive integrator differential ports.
    ExternalInputToNonDifferentialPort { unit: String, port: String },
    /// Differential ports accept external inputs only.
    DifferentialPortNotExternal { unit: String, port: String },
    MissingInitialValue { unit: String },
    AlgebraicCycle { through: Vec<String> },
    OutputNotIntegrator { unit: String },
    X0Length { expected: usize, got: usize },
    NoOutputs,
}

impl fmt::Display for CircuitViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CircuitViolation::*;
        match self {
            DuplicateUnitId(id) => write!(f, "duplicate unit id {id:?}"),
            UnknownUnit(id) => write!(f, "reference to unknown unit {id:?}"),
            UnknownPort { unit, port } => write!(f, "unit {unit:?} has no port {port:?}"),
            UnwiredPort { unit, port } => write!(f, "port {unit}.{port} is not wired"),
            DoublyWiredPort { unit, port } => write!(f, "port {unit}.{port} is wired more than once"),
            ExternalInputOutOfRange { index } => write!(f, "external input x{} out of range", index + 1),
            ExternalInputToNonDifferentialPort { unit, port } => {
                write!(f, "external input drives {unit}.{port}, which is not a differential port")
            }
            DifferentialPortNotExternal { unit, port } => {
                write!(f, "differential port {unit}.{port} must be driven by an external input")
            }
            MissingInitialValue { unit } => write!(f, "integrator {unit:?} has no initial value"),
            AlgebraicCycle { through } => {
                write!(f, "algebraic cycle not passing through an integrator: {}", through.join(" -> "))
            }
            OutputNotIntegrator { unit } => {
                write!(f, "designated output {unit:?} is not an integrator")
            }
            X0Length { expected, got } => {
                write!(f, "x0 has length {got}, expected input dimension {expected}")
            }
            NoOutputs => write!(f, "circuit designates no outputs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CircuitError {
    Invalid(Vec<CircuitViolation>),
}

impl fmt::Display for CircuitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircuitError::Invalid(v) => {
                write!(f, "invalid circuit: ")?;
                for (i, violation) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{violation}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for CircuitError {}

impl Circuit {
    fn unit_map(&self) -> HashMap<&str, &Unit> {
        self.units.iter().map(|u| (u.id.as_str(), u)).collect()
    }

    /// Wires keyed by (unit, port).
    fn wire_map(&self) -> HashMap<(String, String), &Wire> {
        let mut out = HashMap::new();
        for w in &self.wires {
            out.entry((w.to_unit.clone(), w.to_port.clone())).or_insert(w);
        }
        out
    }

    pub fn validate(&self) -> Vec<CircuitViolation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for u in &self.units {
            if !seen.insert(u.id.clone()) {
                out.push(CircuitViolation::DuplicateUnitId(u.id.clone()));
            }
        }
        if self.x0.len() != self.input_dim {
            out.push(CircuitViolation::X0Length { expected: self.input_dim, got: self.x0.len() });
        }
        if self.outputs.is_empty() {
            out.push(CircuitViolation::NoOutputs);
        }
        let units = self.unit_map();
        // Wire sanity and per-port counts.
        let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        for w in &self.wires {
            match &w.from {
                Source::External(j) if *j >= self.input_dim => {
                    out.push(CircuitViolation::ExternalInputOutOfRange { index: *j });
                }
                Source::Unit(id) if !units.contains_key(id.as_str()) => {
                    out.push(CircuitViolation::UnknownUnit(id.clone()));
                }
                _ => {}
            }
            match units.get(w.to_unit.as_str()) {
                None => out.push(CircuitViolation::UnknownUnit(w.to_unit.clone())),
                Some(u) => {
                    let ports = u.kind.input_ports();
                    if !ports.contains(&w.to_port) {
                        out.push(CircuitViolation::UnknownPort {
                            unit: w.to_unit.clone(),
                            port: w.to_port.clone(),
                        });
                    } else {
                        let is_diff = matches!(u.kind, UnitKind::Integrator { .. })
                            && w.to_port.starts_with('v');
                        match (&w.from, is_diff) {
                            (Source::External(_), false) => {
                                out.push(CircuitViolation::ExternalInputToNonDifferentialPort {
                                    unit: w.to_unit.clone(),
                                    port: w.to_port.clone(),
                                });
                            }
                            (Source::Unit(_), true) => {
                                out.push(CircuitViolation::DifferentialPortNotExternal {
                                    unit: w.to_unit.clone(),
                                    port: w.to_port.clone(),
                                });
                            }
                            _ => {}
                        }
                    }
                    *counts.entry((w.to_unit.clone(), w.to_port.clone())).or_insert(0) += 1;
                }
            }
        }
        for u in &self.units {
            for port in u.kind.input_ports() {
                match counts.get(&(u.id.clone(), port.clone())).copied().unwrap_or(0) {
                    0 => out.push(CircuitViolation::UnwiredPort { unit: u.id.clone(), port }),
                    1 => {}
                    _ => out.push(CircuitViolation::DoublyWiredPort { unit: u.id.clone(), port }),
                }
            }
            if let UnitKind::Integrator { init: None, .. } = u.kind {
                out.push(CircuitViolation::MissingInitialValue { unit: u.id.clone() });
            }
        }
        // Algebraic cycles: DFS over adder/multiplier input chains.
        let wires = self.wire_map();
        let mut state: HashMap<String, u8> = HashMap::new(); // 1 = visiting, 2 = done
        for u in &self.units {
            if matches!(u.kind, UnitKind::Adder | UnitKind::Multiplier) {
                let mut path = Vec::new();
                if find_algebraic_cycle(&u.id, &units, &wires, &mut state, &mut path) {
                    out.push(CircuitViolation::AlgebraicCycle { through: path });
                }
            }
        }
        for o in &self.outputs {
            match units.get(o.as_str()) {
                None => out.push(CircuitViolation::UnknownUnit(o.clone())),
                Some(u) if !matches!(u.kind, UnitKind::Integrator { .. }) => {
                    out.push(CircuitViolation::OutputNotIntegrator { unit: o.clone() });
                }
                _ => {}
            }
        }
        out
    }

    /// Compile to a PIVP: one state variable per integrator, algebraic unit
    /// outputs eliminated by substitution. Designated outputs come first,
    /// remaining integrators follow in topological-then-id order.
    pub fn to_pivp(&self) -> Result<Pivp, CircuitError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(CircuitError::Invalid(violations));
        }
        let units = self.unit_map();
        let wires = self.wire_map();
        let integrators: Vec<&Unit> = self
            .units
            .iter()
            .filter(|u| matches!(u.kind, UnitKind::Integrator { .. }))
            .collect();
        let order = state_order(&self.outputs, &integrators, &units, &wires);
        let index: HashMap<&str, usize> =
            order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let n = order.len();
        let d = self.input_dim;
        let mut rhs = PolyMatrix::zero(n, d, n);
        let mut memo: HashMap<String, Polynomial> = HashMap::new();
        for id in &order {
            let unit = units[id.as_str()];
            let row = index[id.as_str()];
            if let UnitKind::Integrator { pairs, .. } = &unit.kind {
                for p in 1..=*pairs {
                    let u_src = &wires[&(id.clone(), format!("u{p}"))].from;
                    let v_src = &wires[&(id.clone(), format!("v{p}"))].from;
                    let col = match v_src {
                        Source::External(j) => *j,
                        Source::Unit(_) => unreachable!("validated: differential ports are external"),
                    };
                    let poly = resolve(u_src, n, &units, &wires, &index, &mut memo);
                    let merged = rhs.entry(row, col).add(&poly);
                    rhs.set_entry(row, col, merged);
                }
            }
        }
        let y0: Vec<Coefficient> = order
            .iter()
            .map(|id| match &units[id.as_str()].kind {
                UnitKind::Integrator { init: Some(c), .. } => c.clone(),
                _ => unreachable!(),
            })
            .collect();
        let mut out = Pivp::new(d, self.outputs.len(), rhs, self.x0.clone(), y0);
        if let Some(domain) = &self.domain {
            out.domain = domain.clone();
        }
        Ok(out)
    }

    /// Reverse compilation: one integrator per state variable, polynomial
    /// right-hand sides expanded into constant/multiplier/adder trees.
    pub fn from_pivp(f: &Pivp) -> Circuit {
        let n = f.state_dim;
        let d = f.input_dim;
        let width = n.to_string().len();
        let state_id = |i: usize| format!("y{:0width$}", i + 1, width = width);
        let mut builder = Builder { units: Vec::new(), wires: Vec::new(), counter: 0 };
        for i in 0..n {
            // One pair per nonzero column; at least one pair to keep the
            // integrator well formed.
            let nonzero: Vec<usize> = (0..d).filter(|&j| !f.rhs.entry(i, j).is_zero()).collect();
            let cols: Vec<usize> = if nonzero.is_empty() { vec![0] } else { nonzero };
            builder.units.push(Unit {
                id: state_id(i),
                kind: UnitKind::Integrator { pairs: cols.len(), init: Some(f.y0[i].clone()) },
            });
            for (p, &j) in cols.iter().enumerate() {
                let src = builder.emit_poly(f.rhs.entry(i, j), &state_id);
                builder.wires.push(Wire {
                    from: src,
                    to_unit: state_id(i),
                    to_port: format!("u{}", p + 1),
                });
                builder.wires.push(Wire {
                    from: Source::External(j),
                    to_unit: state_id(i),
                    to_port: format!("v{}", p + 1),
                });
            }
        }
        Circuit {
            input_dim: d,
            x0: f.x0.clone(),
            units: builder.units,
            wires: builder.wires,
            outputs: (0..f.output_dim).map(state_id).collect(),
            domain: Some(f.domain.clone()),
        }
    }
}

fn find_algebraic_cycle(
    id: &str,
    units: &HashMap<&str, &Unit>,
    wires: &HashMap<(String, String), &Wire>,
    state: &mut HashMap<String, u8>,
    path: &mut Vec<String>,
) -> bool {
    match state.get(id) {
        Some(2) => return false,
        Some(1) => {
            path.push(id.to_string());
            return true;
        }
        _ => {}
    }
    let unit = match units.get(id) {
        Some(u) => u,
        None => return false,
    };
    if !matches!(unit.kind, UnitKind::Adder | UnitKind::Multiplier) {
        // Constants and integrators break instantaneous dependency.
        state.insert(id.to_string(), 2);
        return false;
    }
    state.insert(id.to_string(), 1);
    for port in unit.kind.input_ports() {
        if let Some(w) = wires.get(&(id.to_string(), port)) {
            if let Source::Unit(src) = &w.from {
                if find_algebraic_cycle(src, units, wires, state, path) {
                    path.push(id.to_string());
                    return true;
                }
            }
        }
    }
    state.insert(id.to_string(), 2);
    false
}

/// Designated outputs first, then remaining integrators in
/// topological-then-id order (Kahn with an id-ordered heap; cycle members
/// fall back to id order).
fn state_order(
    outputs: &[String],
    integrators: &[&Unit],
    units: &HashMap<&str, &Unit>,
    wires: &HashMap<(String, String), &Wire>,
) -> Vec<String> {
    let mut order: Vec<String> = outputs.to_vec();
    let placed: BTreeSet<String> = outputs.iter().cloned().collect();
    let rest: Vec<&str> = integrators
        .iter()
        .map(|u| u.id.as_str())
        .filter(|id| !placed.contains(*id))
        .collect();
    // Dependencies: integrator -> integrators reachable through its
    // integrand expressions.
    let mut deps: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for &id in &rest {
        let mut found = BTreeSet::new();
        if let UnitKind::Integrator { pairs, .. } = &units[id].kind {
            for p in 1..=*pairs {
                if let Some(w) = wires.get(&(id.to_string(), format!("u{p}"))) {
                    collect_integrators(&w.from, units, wires, &mut found, &mut BTreeSet::new());
                }
            }
        }
        found.remove(id);
        deps.insert(id, found);
    }
    let mut remaining: BTreeSet<&str> = rest.iter().cloned().collect();
    let mut heap: BinaryHeap<std::cmp::Reverse<&str>> = BinaryHeap::new();
    loop {
        for &id in &remaining {
            let free = deps[id].iter().all(|dep| !remaining.contains(dep.as_str()));
            if free {
                heap.push(std::cmp::Reverse(id));
            }
        }
        if heap.is_empty() {
            // Cycle: emit the rest in id order.
            for id in &remaining {
                order.push(id.to_string());
            }
            break;
        }
        while let Some(std::cmp::Reverse(id)) = heap.pop() {
            if remaining.remove(id) {
                order.push(id.to_string());
            }
        }
        if remaining.is_empty() {
            break;
        }
    }
    order
}

fn collect_integrators(
    src: &Source,
    units: &HashMap<&str, &Unit>,
    wires: &HashMap<(String, String), &Wire>,
    out: &mut BTreeSet<String>,
    seen: &mut BTreeSet<String>,
) {
    let id = match src {
        Source::External(_) => return,
        Source::Unit(id) => id,
    };
    if !seen.insert(id.clone()) {
        return;
    }
    match &units[id.as_str()].kind {
        UnitKind::Integrator { .. } => {
            out.insert(id.clone());
        }
        UnitKind::Constant(_) => {}
        UnitKind::Adder | UnitKind::Multiplier => {
            for port in ["a", "b"] {
                if let Some(w) = wires.get(&(id.clone(), port.to_string())) {
                    collect_integrators(&w.from, units, wires, out, seen);
                }
            }
        }
    }
}

fn resolve(
    src: &Source,
    arity: usize,
    units: &HashMap<&str, &Unit>,
    wires: &HashMap<(String, String), &Wire>,
    index: &HashMap<&str, usize>,
    memo: &mut HashMap<String, Polynomial>,
) -> Polynomial {
    let id = match src {
        Source::External(_) => unreachable!("validated: external inputs never feed integrands"),
        Source::Unit(id) => id.clone(),
    };
    if let Some(p) = memo.get(&id) {
        return p.clone();
    }
    let p = match &units[id.as_str()].kind {
        UnitKind::Constant(c) => Polynomial::constant(arity, c.clone()),
        UnitKind::Integrator { .. } => Polynomial::var(arity, index[id.as_str()]),
        UnitKind::Adder => {
            let a = resolve(&wires[&(id.clone(), "a".to_string())].from, arity, units, wires, index, memo);
            let b = resolve(&wires[&(id.clone(), "b".to_string())].from, arity, units, wires, index, memo);
            a.add(&b)
        }
        UnitKind::Multiplier => {
            let a = resolve(&wires[&(id.clone(), "a".to_string())].from, arity, units, wires, index, memo);
            let b = resolve(&wires[&(id.clone(), "b".to_string())].from, arity, units, wires, index, memo);
            a.mul(&b)
        }
    };
    memo.insert(id, p.clone());
    p
}

struct Builder {
    units: Vec<Unit>,
    wires: Vec<Wire>,
    counter: usize,
}

impl Builder {
    fn fresh(&mut self, prefix: &str) -> String {
        self.counter += 1;
        format!("{prefix}{}", self.counter)
    }

    fn constant(&mut self, c: Coefficient) -> Source {
        let id = self.fresh("k");
        self.units.push(Unit { id: id.clone(), kind: UnitKind::Constant(c) });
        Source::Unit(id)
    }

    fn binary(&mut self, kind: UnitKind, a: Source, b: Source) -> Source {
        let prefix = match kind {
            UnitKind::Adder => "s",
            UnitKind::Multiplier => "m",
            _ => unreachable!(),
        };
        let id = self.fresh(prefix);
        self.units.push(Unit { id: id.clone(), kind });
        self.wires.push(Wire { from: a, to_unit: id.clone(), to_port: "a".into() });
        self.wires.push(Wire { from: b, to_unit: id.clone(), to_port: "b".into() });
        Source::Unit(id)
    }

    /// Expand a polynomial over the state variables into a unit tree.
    fn emit_poly(&mut self, p: &Polynomial, state_id: &dyn Fn(usize) -> String) -> Source {
        if p.is_zero() {
            return self.constant(Coefficient::zero());
        }
        let mut term_sources: Vec<Source> = Vec::new();
        for (m, c) in p.terms() {
            let mut factors: Vec<Source> = Vec::new();
            let is_one = c.as_rational().map(|q| q == num::BigRational::from_integer(1.into())).unwrap_or(false);
            if !is_one || m.total_degree() == 0 {
                factors.push(self.constant(c.clone()));
            }
            for (var, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    factors.push(Source::Unit(state_id(var)));
                }
            }
            let mut acc = factors.remove(0);
            for f in factors {
                acc = self.binary(UnitKind::Multiplier, acc, f);
            }
            term_sources.push(acc);
        }
        let mut acc = term_sources.remove(0);
        for t in term_sources {
            acc = self.binary(UnitKind::Adder, acc, t);
        }
        acc
    }
}

/// Reference circuits used across the crate's tests and docs.
pub mod fixtures {
    use super::*;

    /// The two-integrator sine/cosine circuit: a multiplier by -1 feeding
    /// the z integrator, both integrators driven by the input.
    pub fn sine_circuit() -> Circuit {
        Circuit {
            input_dim: 1,
            x0: vec![Coefficient::zero()],
            units: vec![
                Unit { id: "neg".into(), kind: UnitKind::Constant(Coefficient::from_int(-1)) },
                Unit { id: "mul".into(), kind: UnitKind::Multiplier },
                Unit {
                    id: "y".into(),
                    kind: UnitKind::Integrator { pairs: 1, init: Some(Coefficient::zero()) },
                },
                Unit {
                    id: "z".into(),
                    kind: UnitKind::Integrator { pairs: 1, init: Some(Coefficient::one()) },
                },
            ],
            wires: vec![
                Wire { from: Source::Unit("neg".into()), to_unit: "mul".into(), to_port: "a".into() },
                Wire { from: Source::Unit("y".into()), to_unit: "mul".into(), to_port: "b".into() },
                Wire { from: Source::Unit("z".into()), to_unit: "y".into(), to_port: "u1".into() },
                Wire { from: Source::External(0), to_unit: "y".into(), to_port: "v1".into() },
                Wire { from: Source::Unit("mul".into()), to_unit: "z".into(), to_port: "u1".into() },
                Wire { from: Source::External(0), to_unit: "z".into(), to_port: "v1".into() },
            ],
            outputs: vec!["y".into()],
            domain: None,
        }
    }

    /// Two-input circuit computing h1 = 1/(x1^2 + x2^2) together with
    /// h2 = x1 and h3 = x2, anchored at (1, 1) where h = (1/2, 1, 1).
    /// h1 is a two-pair integrator accumulating
    /// -2 h1^2 h2 dx1 - 2 h1^2 h3 dx2.
    pub fn inverse_square_norm_circuit() -> Circuit {
        let mut units = vec![
            Unit { id: "c2".into(), kind: UnitKind::Constant(Coefficient::from_int(-2)) },
            Unit { id: "sq".into(), kind: UnitKind::Multiplier },
            Unit { id: "p1".into(), kind: UnitKind::Multiplier },
            Unit { id: "t1".into(), kind: UnitKind::Multiplier },
            Unit { id: "t2".into(), kind: UnitKind::Multiplier },
            Unit {
                id: "h1".into(),
                kind: UnitKind::Integrator {
                    pairs: 2,
                    init: Some(Coefficient::from_ratio(1, 2)),
                },
            },
            Unit {
                id: "h2".into(),
                kind: UnitKind::Integrator { pairs: 1, init: Some(Coefficient::one()) },
            },
            Unit {
                id: "h3".into(),
                kind: UnitKind::Integrator { pairs: 1, init: Some(Coefficient::one()) },
            },
            Unit { id: "one2".into(), kind: UnitKind::Constant(Coefficient::one()) },
            Unit { id: "one3".into(), kind: UnitKind::Constant(Coefficient::one()) },
        ];
        units.sort_by(|a, b| a.id.cmp(&b.id));
        Circuit {
            input_dim: 2,
            x0: vec![Coefficient::one(), Coefficient::one()],
            units,
            wires: vec![
                // sq = h1 * h1; p1 = -2 * sq
                Wire { from: Source::Unit("h1".into()), to_unit: "sq".into(), to_port: "a".into() },
                Wire { from: Source::Unit("h1".into()), to_unit: "sq".into(), to_port: "b".into() },
                Wire { from: Source::Unit("c2".into()), to_unit: "p1".into(), to_port: "a".into() },
                Wire { from: Source::Unit("sq".into()), to_unit: "p1".into(), to_port: "b".into() },
                // t1 = p1 * h2, t2 = p1 * h3
                Wire { from: Source::Unit("p1".into()), to_unit: "t1".into(), to_port: "a".into() },
                Wire { from: Source::Unit("h2".into()), to_unit: "t1".into(), to_port: "b".into() },
                Wire { from: Source::Unit("p1".into()), to_unit: "t2".into(), to_port: "a".into() },
                Wire { from: Source::Unit("h3".into()), to_unit: "t2".into(), to_port: "b".into() },
                // h1 = int t1 dx1 + int t2 dx2
                Wire { from: Source::Unit("t1".into()), to_unit: "h1".into(), to_port: "u1".into() },
                Wire { from: Source::External(0), to_unit: "h1".into(), to_port: "v1".into() },
                Wire { from: Source::Unit("t2".into()), to_unit: "h1".into(), to_port: "u2".into() },
                Wire { from: Source::External(1), to_unit: "h1".into(), to_port: "v2".into() },
                // h2 = int 1 dx1, h3 = int 1 dx2
                Wire { from: Source::Unit("one2".into()), to_unit: "h2".into(), to_port: "u1".into() },
                Wire { from: Source::External(0), to_unit: "h2".into(), to_port: "v1".into() },
                Wire { from: Source::Unit("one3".into()), to_unit: "h3".into(), to_port: "u1".into() },
                Wire { from: Source::External(1), to_unit: "h3".into(), to_port: "v1".into() },
            ],
            outputs: vec!["h1".into()],
            domain: Some(Domain::PathRequired),
        }
    }

    /// A single integrator computing h(x) = x1.
    pub fn identity_circuit() -> Circuit {
        Circuit {
            input_dim: 1,
            x0: vec![Coefficient::zero()],
            units: vec![
                Unit { id: "one".into(), kind: UnitKind::Constant(Coefficient::one()) },
                Unit {
                    id: "h".into(),
                    kind: UnitKind::Integrator { pairs: 1, init: Some(Coefficient::zero()) },
                },
            ],
            wires: vec![
                Wire { from: Source::Unit("one".into()), to_unit: "h".into(), to_port: "u1".into() },
                Wire { from: Source::External(0), to_unit: "h".into(), to_port: "v1".into() },
            ],
            outputs: vec!["h".into()],
            domain: None,
        }
    }
}
