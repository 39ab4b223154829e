//! Versioned JSON schemas: PIVP documents (v1) and circuit documents (v1).
//!
//! Coefficients serialize as canonical text (`num/den[*pi^k][*e^k]`, sums
//! joined with `+`, approximate values prefixed `~`), so round-trips are
//! bit-exact. Polynomials use the canonical graded-lex text form with
//! variables `x1..xn` ranging over state components.

use crate::bound::BoundExpr;
use crate::circuit::{Circuit, Source, Unit, UnitKind, Wire};
use crate::coeff::Coefficient;
use crate::pivp::{Domain, Pivp};
use crate::poly::{PolyMatrix, Polynomial};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const PIVP_SCHEMA_VERSION: u32 = 1;
pub const CIRCUIT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum SchemaError {
    Json(serde_json::Error),
    Version { expected: u32, got: u32 },
    Coefficient(String),
    Polynomial(String),
    Structure(String),
    /// The parsed document violates PIVP invariants.
    Invalid(Vec<crate::pivp::Violation>),
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaError::Json(e) => write!(f, "{e}"),
            SchemaError::Version { expected, got } => {
                write!(f, "unsupported schema version {got}, expected {expected}")
            }
            SchemaError::Coefficient(msg) | SchemaError::Polynomial(msg) | SchemaError::Structure(msg) => {
                write!(f, "{msg}")
            }
            SchemaError::Invalid(v) => {
                write!(f, "document violates invariants: ")?;
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

impl std::error::Error for SchemaError {}

impl From<serde_json::Error> for SchemaError {
    fn from(e: serde_json::Error) -> Self {
        SchemaError::Json(e)
    }
}

#[derive(Serialize, Deserialize)]
struct PivpDoc {
    version: u32,
    n: usize,
    d: usize,
    l: usize,
    x0: Vec<String>,
    y0: Vec<String>,
    rhs: Vec<Vec<String>>,
    bound: Option<BoundNode>,
    domain: DomainDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum BoundNode {
    Id,
    Const { value: String },
    Add { left: Box<BoundNode>, right: Box<BoundNode> },
    Mul { left: Box<BoundNode>, right: Box<BoundNode> },
    Max { left: Box<BoundNode>, right: Box<BoundNode> },
    Compose { outer: Box<BoundNode>, inner: Box<BoundNode> },
    Exp { arg: Box<BoundNode> },
    Pow { base: Box<BoundNode>, k: u32 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DomainDoc {
    AllSpace,
    Box { lo: Vec<Option<f64>>, hi: Vec<Option<f64>> },
    DeclaredConvex,
    PathRequired,
}

fn bound_to_node(b: &BoundExpr) -> BoundNode {
    match b {
        BoundExpr::Identity => BoundNode::Id,
        BoundExpr::Const(c) => BoundNode::Const { value: c.to_text() },
        BoundExpr::Add(a, b) => BoundNode::Add {
            left: Box::new(bound_to_node(a)),
            right: Box::new(bound_to_node(b)),
        },
        BoundExpr::Mul(a, b) => BoundNode::Mul {
            left: Box::new(bound_to_node(a)),
            right: Box::new(bound_to_node(b)),
        },
        BoundExpr::Max(a, b) => BoundNode::Max {
            left: Box::new(bound_to_node(a)),
            right: Box::new(bound_to_node(b)),
        },
        BoundExpr::Compose(f, g) => BoundNode::Compose {
            outer: Box::new(bound_to_node(f)),
            inner: Box::new(bound_to_node(g)),
        },
        BoundExpr::Exp(a) => BoundNode::Exp { arg: Box::new(bound_to_node(a)) },
        BoundExpr::Power(a, k) => BoundNode::Pow { base: Box::new(bound_to_node(a)), k: *k },
    }
}

fn node_to_bound(n: &BoundNode) -> Result<BoundExpr, SchemaError> {
    Ok(match n {
        BoundNode::Id => BoundExpr::Identity,
        BoundNode::Const { value } => BoundExpr::Const(parse_coeff(value)?),
        BoundNode::Add { left, right } => {
            BoundExpr::add(node_to_bound(left)?, node_to_bound(right)?)
        }
        BoundNode::Mul { left, right } => {
            BoundExpr::mul(node_to_bound(left)?, node_to_bound(right)?)
        }
        BoundNode::Max { left, right } => {
            BoundExpr::max(node_to_bound(left)?, node_to_bound(right)?)
        }
        BoundNode::Compose { outer, inner } => {
            BoundExpr::compose(node_to_bound(outer)?, node_to_bound(inner)?)
        }
        BoundNode::Exp { arg } => BoundExpr::exp(node_to_bound(arg)?),
        BoundNode::Pow { base, k } => BoundExpr::Power(Box::new(node_to_bound(base)?), *k),
    })
}

fn parse_coeff(s: &str) -> Result<Coefficient, SchemaError> {
    Coefficient::parse_text(s).map_err(|e| SchemaError::Coefficient(e.to_string()))
}

fn domain_to_doc(d: &Domain) -> DomainDoc {
    match d {
        Domain::AllSpace => DomainDoc::AllSpace,
        Domain::Box { lo, hi } => DomainDoc::Box { lo: lo.clone(), hi: hi.clone() },
        Domain::DeclaredConvex => DomainDoc::DeclaredConvex,
        Domain::PathRequired => DomainDoc::PathRequired,
    }
}

fn doc_to_domain(d: &DomainDoc) -> Domain {
    match d {
        DomainDoc::AllSpace => Domain::AllSpace,
        DomainDoc::Box { lo, hi } => Domain::Box { lo: lo.clone(), hi: hi.clone() },
        DomainDoc::DeclaredConvex => Domain::DeclaredConvex,
        DomainDoc::PathRequired => Domain::PathRequired,
    }
}

/// Serialize a PIVP to its JSON document.
pub fn pivp_to_json(f: &Pivp) -> String {
    let doc = PivpDoc {
        version: PIVP_SCHEMA_VERSION,
        n: f.state_dim,
        d: f.input_dim,
        l: f.output_dim,
        x0: f.x0.iter().map(|c| c.to_text()).collect(),
        y0: f.y0.iter().map(|c| c.to_text()).collect(),
        rhs: (0..f.state_dim)
            .map(|i| (0..f.input_dim).map(|j| f.rhs.entry(i, j).to_text()).collect())
            .collect(),
        bound: f.bound.as_ref().map(bound_to_node),
        domain: domain_to_doc(&f.domain),
    };
    serde_json::to_string_pretty(&doc).expect("pivp serialization cannot fail")
}

/// Parse a PIVP JSON document, validating invariants after the parse.
pub fn pivp_from_json(text: &str) -> Result<Pivp, SchemaError> {
    let doc: PivpDoc = serde_json::from_str(text)?;
    if doc.version != PIVP_SCHEMA_VERSION {
        return Err(SchemaError::Version { expected: PIVP_SCHEMA_VERSION, got: doc.version });
    }
    if doc.rhs.len() != doc.n {
        return Err(SchemaError::Structure(format!(
            "rhs has {} rows, expected n={}",
            doc.rhs.len(),
            doc.n
        )));
    }
    let mut entries = Vec::with_capacity(doc.n * doc.d);
    for row in &doc.rhs {
        if row.len() != doc.d {
            return Err(SchemaError::Structure(format!(
                "rhs row has {} columns, expected d={}",
                row.len(),
                doc.d
            )));
        }
        for text in row {
            entries.push(
                Polynomial::parse_text(text, doc.n)
                    .map_err(|e| SchemaError::Polynomial(e.to_string()))?,
            );
        }
    }
    let rhs = PolyMatrix::new(doc.n, doc.d, entries);
    let x0 = doc.x0.iter().map(|s| parse_coeff(s)).collect::<Result<Vec<_>, _>>()?;
    let y0 = doc.y0.iter().map(|s| parse_coeff(s)).collect::<Result<Vec<_>, _>>()?;
    let mut f = Pivp::new(doc.d, doc.l, rhs, x0, y0);
    f.domain = doc_to_domain(&doc.domain);
    f.bound = doc.bound.as_ref().map(node_to_bound).transpose()?;
    let violations = f.validate();
    if !violations.is_empty() {
        return Err(SchemaError::Invalid(violations));
    }
    Ok(f)
}

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    version: u32,
    d: usize,
    x0: Vec<String>,
    units: Vec<UnitDoc>,
    wires: Vec<WireDoc>,
    outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<DomainDoc>,
}

#[derive(Serialize, Deserialize)]
struct UnitDoc {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct WireDoc {
    from: String,
    to: String,
}

/// Serialize a circuit to its JSON document.
pub fn circuit_to_json(c: &Circuit) -> String {
    let doc = CircuitDoc {
        version: CIRCUIT_SCHEMA_VERSION,
        d: c.input_dim,
        x0: c.x0.iter().map(|v| v.to_text()).collect(),
        units: c
            .units
            .iter()
            .map(|u| match &u.kind {
                UnitKind::Constant(v) => UnitDoc {
                    id: u.id.clone(),
                    kind: "constant".into(),
                    value: Some(v.to_text()),
                    init: None,
                    pairs: None,
                },
                UnitKind::Adder => UnitDoc {
                    id: u.id.clone(),
                    kind: "adder".into(),
                    value: None,
                    init: None,
                    pairs: None,
                },
                UnitKind::Multiplier => UnitDoc {
                    id: u.id.clone(),
                    kind: "multiplier".into(),
                    value: None,
                    init: None,
                    pairs: None,
                },
                UnitKind::Integrator { pairs, init } => UnitDoc {
                    id: u.id.clone(),
                    kind: "integrator".into(),
                    value: None,
                    init: init.as_ref().map(|c| c.to_text()),
                    pairs: Some(*pairs),
                },
            })
            .collect(),
        wires: c
            .wires
            .iter()
            .map(|w| WireDoc {
                from: w.from.to_string(),
                to: format!("{}.{}", w.to_unit, w.to_port),
            })
            .collect(),
        outputs: c.outputs.clone(),
        domain: c.domain.as_ref().map(domain_to_doc),
    };
    serde_json::to_string_pretty(&doc).expect("circuit serialization cannot fail")
}

fn parse_source(s: &str, d: usize) -> Source {
    if let Some(rest) = s.strip_prefix('x') {
        if let Ok(idx) = rest.parse::<usize>() {
            if idx >= 1 && idx <= d {
                return Source::External(idx - 1);
            }
        }
    }
    Source::Unit(s.to_string())
}

/// Parse a circuit JSON document. Structural circuit problems are left to
/// `Circuit::validate`, which reports them as violations.
pub fn circuit_from_json(text: &str) -> Result<Circuit, SchemaError> {
    let doc: CircuitDoc = serde_json::from_str(text)?;
    if doc.version != CIRCUIT_SCHEMA_VERSION {
        return Err(SchemaError::Version { expected: CIRCUIT_SCHEMA_VERSION, got: doc.version });
    }
    let mut units = Vec::with_capacity(doc.units.len());
    for u in &doc.units {
        let kind = match u.kind.as_str() {
            "constant" => {
                let v = u
                    .value
                    .as_deref()
                    .ok_or_else(|| SchemaError::Structure(format!("constant {:?} missing value", u.id)))?;
                UnitKind::Constant(parse_coeff(v)?)
            }
            "adder" => UnitKind::Adder,
            "multiplier" => UnitKind::Multiplier,
            "integrator" => UnitKind::Integrator {
                pairs: u.pairs.unwrap_or(1),
                init: u.init.as_deref().map(parse_coeff).transpose()?,
            },
            other => {
                return Err(SchemaError::Structure(format!("unknown unit kind {other:?}")));
            }
        };
        units.push(Unit { id: u.id.clone(), kind });
    }
    let mut wires = Vec::with_capacity(doc.wires.len());
    for w in &doc.wires {
        let (unit, port) = w
            .to
            .rsplit_once('.')
            .ok_or_else(|| SchemaError::Structure(format!("wire target {:?} must be unit.port", w.to)))?;
        wires.push(Wire {
            from: parse_source(&w.from, doc.d),
            to_unit: unit.to_string(),
            to_port: port.to_string(),
        });
    }
    let x0 = doc.x0.iter().map(|s| parse_coeff(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(Circuit {
        input_dim: doc.d,
        x0,
        units,
        wires,
        outputs: doc.outputs,
        domain: doc.domain.as_ref().map(doc_to_domain),
    })
}
