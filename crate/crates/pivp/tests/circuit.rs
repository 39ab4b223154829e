//! Circuit validation and compilation tests, including the round-trip
//! between PIVPs and circuits checked by a permutation-aware structural
//! equality oracle.

use pivp::circuit::{fixtures, Circuit, CircuitViolation, Source, Unit, UnitKind, Wire};
use pivp::coeff::Coefficient;
use pivp::pivp::{builtins, Pivp};
use pivp::poly::{PolyMatrix, Polynomial};
use pivp::sim;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Structural equality up to a permutation of the non-output state
/// variables (outputs are pinned to the leading components in order).
fn equal_up_to_state_permutation(a: &Pivp, b: &Pivp) -> bool {
    if a.state_dim != b.state_dim
        || a.input_dim != b.input_dim
        || a.output_dim != b.output_dim
        || a.x0 != b.x0
    {
        return false;
    }
    let n = a.state_dim;
    let l = a.output_dim;
    let tail: Vec<usize> = (l..n).collect();
    let mut perm = tail.clone();
    loop {
        // m maps new index -> b index
        let m: Vec<usize> = (0..l).chain(perm.iter().cloned()).collect();
        let mut minv = vec![0usize; n];
        for (new, &old) in m.iter().enumerate() {
            minv[old] = new;
        }
        let mut ok = true;
        'outer: for i in 0..n {
            if &b.y0[m[i]] != &a.y0[i] {
                ok = false;
                break;
            }
            for j in 0..a.input_dim {
                if b.rhs.entry(m[i], j).remap(n, &minv) != *a.rhs.entry(i, j) {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[test]
fn sine_circuit_compiles_to_the_stated_system() {
    let c = fixtures::sine_circuit();
    assert!(c.validate().is_empty());
    let f = c.to_pivp().unwrap();
    assert!(f.validate().is_empty());
    assert_eq!(f.state_dim, 2);
    assert_eq!(f.input_dim, 1);
    assert_eq!(f.output_dim, 1);
    // y' = z, z' = -y with y0 = (0, 1)
    assert_eq!(f.rhs.entry(0, 0), &Polynomial::var(2, 1));
    assert_eq!(f.rhs.entry(1, 0), &Polynomial::var(2, 0).neg());
    assert_eq!(f.y0_f64(), vec![0.0, 1.0]);
}

#[test]
fn sine_circuit_simulates_to_reference_sine() {
    let f = fixtures::sine_circuit().to_pivp().unwrap();
    let (_, dense) = sim::integrate_dense(&f, 2.0 * std::f64::consts::PI, 1e-10, 100).unwrap();
    for (t, y) in dense {
        assert!((y[0] - t.sin()).abs() < 1e-9, "t={t}");
    }
}

#[test]
fn inverse_square_circuit_matches_the_stated_matrix() {
    let c = fixtures::inverse_square_norm_circuit();
    assert!(c.validate().is_empty());
    let f = c.to_pivp().unwrap();
    assert!(f.validate().is_empty());
    assert_eq!((f.state_dim, f.input_dim, f.output_dim), (3, 2, 1));
    // rows: (-2 h1^2 h2, -2 h1^2 h3), (1, 0), (0, 1)
    let h1 = Polynomial::var(3, 0);
    let h2 = Polynomial::var(3, 1);
    let h3 = Polynomial::var(3, 2);
    let m2 = Coefficient::from_int(-2);
    assert_eq!(f.rhs.entry(0, 0), &h1.pow(2).mul(&h2).scale(&m2));
    assert_eq!(f.rhs.entry(0, 1), &h1.pow(2).mul(&h3).scale(&m2));
    assert_eq!(f.rhs.entry(1, 0), &Polynomial::constant(3, Coefficient::one()));
    assert!(f.rhs.entry(1, 1).is_zero());
    assert!(f.rhs.entry(2, 0).is_zero());
    assert_eq!(f.rhs.entry(2, 1), &Polynomial::constant(3, Coefficient::one()));
    assert_eq!(f.y0_f64(), vec![0.5, 1.0, 1.0]);
}

#[test]
fn single_integrator_is_the_identity() {
    let f = fixtures::identity_circuit().to_pivp().unwrap();
    assert_eq!(f.state_dim, 1);
    for x in [0.5, 2.0, -3.0] {
        let y = sim::eval(&f, &[x], 1e-11, None).unwrap();
        assert!((y[0] - x).abs() < 1e-10);
    }
}

#[test]
fn adder_self_loop_is_an_algebraic_cycle() {
    let c = Circuit {
        input_dim: 1,
        x0: vec![Coefficient::zero()],
        units: vec![
            Unit { id: "a".into(), kind: UnitKind::Adder },
            Unit { id: "k".into(), kind: UnitKind::Constant(Coefficient::one()) },
            Unit {
                id: "w".into(),
                kind: UnitKind::Integrator { pairs: 1, init: Some(Coefficient::zero()) },
            },
        ],
        wires: vec![
            Wire { from: Source::Unit("a".into()), to_unit: "a".into(), to_port: "a".into() },
            Wire { from: Source::Unit("k".into()), to_unit: "a".into(), to_port: "b".into() },
            Wire { from: Source::Unit("a".into()), to_unit: "w".into(), to_port: "u1".into() },
            Wire { from: Source::External(0), to_unit: "w".into(), to_port: "v1".into() },
        ],
        outputs: vec!["w".into()],
        domain: None,
    };
    let violations = c.validate();
    assert!(
        violations.iter().any(|v| matches!(v, CircuitViolation::AlgebraicCycle { .. })),
        "got {violations:?}"
    );
    assert!(c.to_pivp().is_err());
}

#[test]
fn missing_initial_value_is_reported() {
    let mut c = fixtures::sine_circuit();
    for u in &mut c.units {
        if u.id == "y" {
            u.kind = UnitKind::Integrator { pairs: 1, init: None };
        }
    }
    let violations = c.validate();
    assert!(violations
        .iter()
        .any(|v| matches!(v, CircuitViolation::MissingInitialValue { unit } if unit == "y")));
}

#[test]
fn wiring_violations_are_reported() {
    let mut c = fixtures::sine_circuit();
    // unwire the multiplier's b port
    c.wires.retain(|w| !(w.to_unit == "mul" && w.to_port == "b"));
    assert!(c
        .validate()
        .iter()
        .any(|v| matches!(v, CircuitViolation::UnwiredPort { unit, port } if unit == "mul" && port == "b")));
    // wire it twice
    let mut c = fixtures::sine_circuit();
    c.wires.push(Wire {
        from: Source::Unit("z".into()),
        to_unit: "mul".into(),
        to_port: "b".into(),
    });
    assert!(c
        .validate()
        .iter()
        .any(|v| matches!(v, CircuitViolation::DoublyWiredPort { unit, port } if unit == "mul" && port == "b")));
    // external input into a multiplier port
    let mut c = fixtures::sine_circuit();
    c.wires.retain(|w| !(w.to_unit == "mul" && w.to_port == "b"));
    c.wires.push(Wire { from: Source::External(0), to_unit: "mul".into(), to_port: "b".into() });
    assert!(c
        .validate()
        .iter()
        .any(|v| matches!(v, CircuitViolation::ExternalInputToNonDifferentialPort { .. })));
}

#[test]
fn exp_reverses_to_a_single_self_loop_integrator() {
    let c = Circuit::from_pivp(&builtins::exp());
    assert_eq!(c.units.len(), 1);
    assert!(matches!(c.units[0].kind, UnitKind::Integrator { pairs: 1, .. }));
    let id = c.units[0].id.clone();
    assert!(c
        .wires
        .iter()
        .any(|w| w.from == Source::Unit(id.clone()) && w.to_unit == id && w.to_port == "u1"));
    assert!(c.validate().is_empty());
}

#[test]
fn sine_reverses_to_a_two_integrator_circuit() {
    let c = Circuit::from_pivp(&builtins::sin());
    let integrators = c
        .units
        .iter()
        .filter(|u| matches!(u.kind, UnitKind::Integrator { .. }))
        .count();
    let constants = c.units.iter().filter(|u| matches!(u.kind, UnitKind::Constant(_))).count();
    let multipliers = c.units.iter().filter(|u| matches!(u.kind, UnitKind::Multiplier)).count();
    assert_eq!((integrators, constants, multipliers), (2, 1, 1));
    assert!(c.validate().is_empty());
}

fn random_pivp(rng: &mut ChaCha8Rng) -> Pivp {
    let n = rng.gen_range(1..=3);
    let d = rng.gen_range(1..=2);
    let l = rng.gen_range(1..=n);
    let mut entries = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        let mut p = Polynomial::zero(n);
        for _ in 0..rng.gen_range(0..=3) {
            let exps: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
            let num = rng.gen_range(-40i64..=40);
            let den = rng.gen_range(1i64..=12);
            let coeff = if rng.gen_bool(0.1) {
                Coefficient::pi_times(num::BigRational::new(num.into(), den.into()))
            } else {
                Coefficient::from_ratio(num, den)
            };
            p.add_term(pivp::poly::Monomial(exps), coeff);
        }
        entries.push(p);
    }
    let rhs = PolyMatrix::new(n, d, entries);
    let x0: Vec<Coefficient> =
        (0..d).map(|_| Coefficient::from_ratio(rng.gen_range(-3i64..=3), 1)).collect();
    let y0: Vec<Coefficient> = (0..n)
        .map(|_| Coefficient::from_ratio(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=4)))
        .collect();
    Pivp::new(d, l, rhs, x0, y0)
}

#[test]
fn circuit_roundtrip_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..20 {
        let f = random_pivp(&mut rng);
        let circuit = Circuit::from_pivp(&f);
        assert!(circuit.validate().is_empty(), "case {case}: {:?}", circuit.validate());
        let back = circuit.to_pivp().unwrap();
        assert!(back.validate().is_empty());
        assert!(
            equal_up_to_state_permutation(&f, &back),
            "case {case} failed round-trip:\n{:?}\nvs\n{:?}",
            f,
            back
        );
    }
}

#[test]
fn compiled_circuits_validate() {
    for c in [
        fixtures::sine_circuit(),
        fixtures::inverse_square_norm_circuit(),
        fixtures::identity_circuit(),
    ] {
        let f = c.to_pivp().unwrap();
        assert!(f.validate().is_empty());
    }
}
