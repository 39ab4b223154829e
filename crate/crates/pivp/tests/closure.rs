//! Closure operation tests: the stacked systems must evaluate to the
//! arithmetic/composition of their operands, propagate growth bounds per the
//! combination rules, and keep the modulus-of-continuity bound sound.

use pivp::bound::BoundExpr;
use pivp::closure::{
    combine, compose, linear_combination, modulus_bound, multiply, ode_rewrite,
    ode_rewrite_controlled, rebase, reciprocal, tuple_of, ClosureError, CombineOp,
};
use pivp::coeff::Coefficient;
use pivp::pivp::{builtins, projection, Domain, Pivp};
use pivp::poly::Polynomial;
use pivp::sim;

fn c(n: i64, d: i64) -> Coefficient {
    Coefficient::from_ratio(n, d)
}

fn eval1(f: &Pivp, t: f64, tol: f64) -> f64 {
    sim::eval(f, &[t], tol, None).unwrap()[0]
}

#[test]
fn combine_add_matches_componentwise_sum() {
    let sum = combine(&builtins::sin(), &builtins::cos(), CombineOp::Add).unwrap();
    assert!(sum.validate().is_empty());
    assert_eq!(sum.state_dim, 1 + 2 + 2);
    // at t = 0: sin 0 + cos 0 = 1, exactly from the initial data
    assert_eq!(sum.y0_f64()[0], 1.0);
    for t in [0.7, 2.0, -1.3] {
        assert!((eval1(&sum, t, 1e-11) - (t.sin() + t.cos())).abs() < 1e-9);
    }
}

#[test]
fn combine_sub_of_itself_is_zero() {
    let f = builtins::tanh();
    let diff = combine(&f, &f, CombineOp::Sub).unwrap();
    for t in [-2.0, 0.0, 3.0] {
        assert!(eval1(&diff, t, 1e-11).abs() < 1e-10);
    }
}

#[test]
fn combine_bound_rule_is_the_sum() {
    let sum = combine(&builtins::exp(), &builtins::sin(), CombineOp::Add).unwrap();
    let bound = sum.bound.as_ref().unwrap();
    assert!((bound.eval(0.0) - 2.0).abs() < 1e-15);
    for alpha in [0.5, 1.0, 3.0] {
        assert!((bound.eval(alpha) - (alpha.exp() + 1.0)).abs() < 1e-12);
    }
}

#[test]
fn combine_rejects_mismatched_base_points() {
    let mut shifted = builtins::sin();
    shifted.x0 = vec![Coefficient::one()];
    shifted.y0 = vec![
        Coefficient::approx_from_f64(1.0f64.sin()).unwrap(),
        Coefficient::approx_from_f64(1.0f64.cos()).unwrap(),
    ];
    let err = combine(&builtins::sin(), &shifted, CombineOp::Add).unwrap_err();
    assert!(matches!(err, ClosureError::BasePointMismatch));
    // the rebase helper closes the gap
    let rebased = rebase(&builtins::cos(), &[Coefficient::one()]).unwrap();
    let sum = combine(&rebased, &shifted, CombineOp::Add).unwrap();
    for t in [1.0, 2.0] {
        assert!((eval1(&sum, t, 1e-11) - (t.sin() + t.cos())).abs() < 1e-8);
    }
}

#[test]
fn pythagorean_identity_via_multiply_and_combine() {
    let sin2 = multiply(&builtins::sin(), &builtins::sin()).unwrap();
    let cos2 = multiply(&builtins::cos(), &builtins::cos()).unwrap();
    let one = combine(&sin2, &cos2, CombineOp::Add).unwrap();
    for t in [0.0, 1.0, 2.5] {
        assert!((eval1(&one, t, 1e-11) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn multiply_by_zero_constant() {
    let z = multiply(&builtins::tanh(), &builtins::constant(Coefficient::zero())).unwrap();
    for t in [-1.0, 0.5, 4.0] {
        assert!(eval1(&z, t, 1e-11).abs() < 1e-12);
    }
}

#[test]
fn exp_squared_at_one() {
    let sq = multiply(&builtins::exp(), &builtins::exp()).unwrap();
    let e = std::f64::consts::E;
    assert!((eval1(&sq, 1.0, 1e-11) - e * e).abs() < 1e-9);
    // bound rule: max(sp, sp', sp sp') = e^{2 alpha}
    let b = sq.bound.as_ref().unwrap();
    assert!((b.eval(2.0) - (4.0f64).exp()).abs() < 1e-10);
}

#[test]
fn reciprocal_cases() {
    let quarter = reciprocal(&builtins::constant(c(4, 1))).unwrap();
    assert_eq!(quarter.y0_f64()[0], 0.25);
    for t in [0.0, 1.0, -2.0] {
        assert!((eval1(&quarter, t, 1e-11) - 0.25).abs() < 1e-12);
    }
    let inv_exp = reciprocal(&builtins::exp()).unwrap();
    assert!((eval1(&inv_exp, 1.0, 1e-11) - (-1.0f64).exp()).abs() < 1e-9);
    assert!(inv_exp.bound.is_none(), "reciprocal drops the bound");
    let err = reciprocal(&builtins::constant(Coefficient::zero())).unwrap_err();
    assert!(matches!(err, ClosureError::ZeroInitialValue));
}

#[test]
fn compose_with_identity_is_identity() {
    let same = compose(&builtins::sin(), &builtins::identity()).unwrap();
    for t in [0.0, 0.5, 2.0] {
        assert!((eval1(&same, t, 1e-11) - t.sin()).abs() < 1e-9);
    }
}

#[test]
fn compose_sin_exp() {
    let f = compose(&builtins::sin(), &builtins::exp()).unwrap();
    let expect = std::f64::consts::E.sin();
    assert!((eval1(&f, 1.0, 1e-11) - expect).abs() < 1e-8);
    // initial values computed at the tight internal tolerance, flagged
    assert!(f.y0[0].is_approx());
    assert!((f.y0_f64()[0] - 1.0f64.sin()).abs() < 1e-12);
    // bound rule max(sp_g, sp_f o sp_g) with sp_f = 1
    let b = f.bound.as_ref().unwrap();
    assert!((b.eval(1.0) - std::f64::consts::E).abs() < 1e-12);
}

#[test]
fn compose_with_constant_zero() {
    let z = compose(&builtins::tanh(), &builtins::constant(Coefficient::zero())).unwrap();
    for t in [0.0, 1.0, 5.0] {
        assert!(eval1(&z, t, 1e-11).abs() < 1e-12);
    }
}

#[test]
fn evaluation_homomorphism_on_grid() {
    let grid: Vec<f64> = (0..10).map(|i| -2.0 + 4.0 * i as f64 / 9.0).collect();
    let pairs = [
        (builtins::sin(), builtins::cos()),
        (builtins::tanh(), builtins::sin()),
        (builtins::exp(), builtins::cos()),
    ];
    for (f, g) in &pairs {
        let sum = combine(f, g, CombineOp::Add).unwrap();
        let dif = combine(f, g, CombineOp::Sub).unwrap();
        let prd = multiply(f, g).unwrap();
        for &t in &grid {
            let fv = eval1(f, t, 1e-12);
            let gv = eval1(g, t, 1e-12);
            assert!((eval1(&sum, t, 1e-10) - (fv + gv)).abs() < 1e-8);
            assert!((eval1(&dif, t, 1e-10) - (fv - gv)).abs() < 1e-8);
            assert!((eval1(&prd, t, 1e-10) - fv * gv).abs() < 1e-8);
        }
    }
    let rec = reciprocal(&builtins::exp()).unwrap();
    let cmp = compose(&builtins::tanh(), &builtins::sin()).unwrap();
    for &t in &grid {
        let ev = eval1(&builtins::exp(), t, 1e-12);
        assert!((eval1(&rec, t, 1e-10) - 1.0 / ev).abs() < 1e-8);
        let sv = eval1(&builtins::sin(), t, 1e-12);
        let tv = eval1(&builtins::tanh(), sv, 1e-12);
        assert!((eval1(&cmp, t, 1e-10) - tv).abs() < 1e-8);
    }
}

#[test]
fn bound_soundness_of_combined_systems() {
    let cases = vec![
        combine(&builtins::sin(), &builtins::cos(), CombineOp::Add).unwrap(),
        combine(&builtins::exp(), &builtins::sin(), CombineOp::Sub).unwrap(),
        multiply(&builtins::sin(), &builtins::cos()).unwrap(),
        multiply(&builtins::exp(), &builtins::exp()).unwrap(),
        compose(&builtins::sin(), &builtins::exp()).unwrap(),
        compose(&builtins::tanh(), &builtins::sin()).unwrap(),
    ];
    for f in cases {
        let report = sim::check_bound(&f, &[0.0], &[5.0], 1e-9).unwrap();
        assert!(
            report.exceedances.is_empty(),
            "bound violated: max ratio {}",
            report.max_ratio
        );
        assert!(report.max_ratio <= 1.0 + 1e-6);
    }
}

#[test]
fn polynomial_boundedness_is_closed_under_operations() {
    let poly_pairs = [
        (builtins::sin(), builtins::cos()),
        (builtins::tanh(), builtins::arctan()),
    ];
    for (f, g) in &poly_pairs {
        assert!(combine(f, g, CombineOp::Add).unwrap().poly_bounded().is_poly);
        assert!(multiply(f, g).unwrap().poly_bounded().is_poly);
    }
    assert!(compose(&builtins::tanh(), &builtins::arctan()).unwrap().poly_bounded().is_poly);
    // and exp poisons it
    assert!(!multiply(&builtins::exp(), &builtins::sin()).unwrap().poly_bounded().is_poly);
    assert!(!compose(&builtins::sin(), &builtins::exp()).unwrap().poly_bounded().is_poly);
}

#[test]
fn ode_rewrite_of_tanh_field() {
    // y' = tanh(y), y(0) = 1 rewrites to z1' = z2, z2' = (1 - z2^2) z2
    // with z(0) = (1, tanh 1).
    let f = ode_rewrite(&builtins::tanh(), &[Coefficient::one()], Coefficient::zero()).unwrap();
    assert_eq!(f.state_dim, 2);
    assert_eq!(f.rhs.entry(0, 0), &Polynomial::var(2, 1));
    let z2 = Polynomial::var(2, 1);
    let one = Polynomial::constant(2, Coefficient::one());
    assert_eq!(f.rhs.entry(1, 0), &one.sub(&z2.pow(2)).mul(&z2));
    assert_eq!(f.y0_f64()[0], 1.0);
    assert!((f.y0_f64()[1] - 1.0f64.tanh()).abs() < 1e-13);
    // closed form: sinh(y) = sinh(1) e^t
    for t in [0.5f64, 2.0, 5.0] {
        let expect = (1.0f64.sinh() * t.exp()).asinh();
        assert!((eval1(&f, t, 1e-11) - expect).abs() < 1e-8, "t={t}");
    }
}

#[test]
fn ode_rewrite_of_identity_field_is_exp() {
    let f = ode_rewrite(&builtins::identity(), &[Coefficient::one()], Coefficient::zero()).unwrap();
    assert!((eval1(&f, 1.0, 1e-11) - std::f64::consts::E).abs() < 1e-9);
}

#[test]
fn ode_rewrite_of_constant_field_is_linear() {
    let field = builtins::constant(c(3, 2));
    let f = ode_rewrite(&field, &[c(1, 1)], Coefficient::zero()).unwrap();
    for t in [0.5, 1.0, 4.0] {
        assert!((eval1(&f, t, 1e-11) - (1.0 + 1.5 * t)).abs() < 1e-10);
    }
}

/// Fixed-step classical Runge-Kutta on y' = field(y) with the field
/// evaluated through the simulator: the independent route for checking
/// ode_rewrite.
fn rk4_direct(field: &Pivp, y0: f64, t_end: f64, h: f64) -> f64 {
    let f = |y: f64| sim::eval(field, &[y], 1e-12, None).unwrap()[0];
    let mut y = y0;
    let n = (t_end / h).round() as usize;
    for _ in 0..n {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

#[test]
fn ode_rewrite_agrees_with_direct_integration() {
    let field = builtins::tanh();
    let rewritten = ode_rewrite(&field, &[Coefficient::one()], Coefficient::zero()).unwrap();
    let ours = eval1(&rewritten, 5.0, 1e-10);
    let direct = rk4_direct(&field, 1.0, 5.0, 0.01);
    assert!((ours - direct).abs() < 1e-7, "ours {ours} vs direct {direct}");
}

#[test]
fn controlled_rewrite_integrates_the_control() {
    // y' = x(t) with x = sin: y(t) = 1 - cos t from y(0) = 0.
    let x0 = vec![Coefficient::zero(), Coefficient::zero()];
    let field = projection(2, 1, &x0); // f(y, x) = x
    let f = ode_rewrite_controlled(&field, &builtins::sin(), &[Coefficient::zero()]).unwrap();
    for t in [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
        let expect = 1.0 - t.cos();
        assert!((eval1(&f, t, 1e-11) - expect).abs() < 1e-8, "t={t}");
    }
}

#[test]
fn controlled_rewrite_with_constant_control_reduces_to_ode_rewrite() {
    let x0 = vec![Coefficient::zero(), Coefficient::zero()];
    let field = projection(2, 1, &x0); // f(y, x) = x
    let controlled =
        ode_rewrite_controlled(&field, &builtins::constant(Coefficient::one()), &[Coefficient::zero()])
            .unwrap();
    // y' = 1 directly
    let direct = ode_rewrite(&builtins::constant(Coefficient::one()), &[Coefficient::zero()], Coefficient::zero())
        .unwrap();
    for t in [0.5, 1.5, 3.0] {
        let a = eval1(&controlled, t, 1e-11);
        let b = eval1(&direct, t, 1e-11);
        assert!((a - b).abs() < 1e-10);
        assert!((a - t).abs() < 1e-10);
    }
}

#[test]
fn controlled_rewrite_drives_the_inverse_square_circuit() {
    // h1(x1, x2) = 1/(x1^2 + x2^2) driven by (x1, x2) = (t, 2t) equals
    // 1/(5 t^2); the driven region is a convex band inside the domain.
    let circuit = pivp::circuit::fixtures::inverse_square_norm_circuit();
    let mut h = circuit.to_pivp().unwrap();
    h.domain = Domain::DeclaredConvex;
    let t0 = c(1, 2);
    let control = pivp::pivp::affine_map(
        1,
        &[vec![Coefficient::one()], vec![c(2, 1)]],
        &[Coefficient::zero(), Coefficient::zero()],
        &[t0.clone()],
    );
    assert_eq!(control.y0_f64(), vec![0.5, 1.0]);
    let driven = ode_rewrite_controlled(&h, &control, &[]).unwrap();
    assert!(driven.validate().is_empty());
    for t in [0.5, 1.0, 2.0] {
        let expect = 1.0 / (5.0 * t * t);
        assert!(
            (eval1(&driven, t, 1e-11) - expect).abs() < 1e-7,
            "t={t}: got {} want {expect}",
            eval1(&driven, t, 1e-11)
        );
    }
}

#[test]
fn modulus_bound_examples() {
    let sin_m = modulus_bound(&builtins::sin()).unwrap();
    assert_eq!(sin_m.eval(&[0.7], &[0.7]), 0.0);
    let b = sin_m.eval(&[0.0], &[1.0]);
    assert!((b - 1.0).abs() < 1e-15);
    assert!(b >= (1.0f64.sin() - 0.0f64.sin()).abs());

    let tanh_m = modulus_bound(&builtins::tanh()).unwrap();
    let b = tanh_m.eval(&[-2.0], &[2.0]);
    assert!((b - 8.0).abs() < 1e-12); // 4 * 1 * 2 * max(1,1)^2
    assert!(b >= 2.0f64.tanh() - (-2.0f64).tanh());

    assert!(matches!(
        modulus_bound(&reciprocal(&builtins::exp()).unwrap()),
        Err(ClosureError::MissingBound)
    ));
}

#[test]
fn modulus_bound_never_underestimates() {
    // 10^3 random pairs per builtin, references from the standard library.
    let refs: Vec<(Pivp, fn(f64) -> f64)> = vec![
        (builtins::sin(), |t| t.sin()),
        (builtins::cos(), |t| t.cos()),
        (builtins::tanh(), |t| t.tanh()),
        (builtins::arctan(), |t| t.atan()),
    ];
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for (f, reference) in &refs {
        let m = modulus_bound(f).unwrap();
        for _ in 0..1000 {
            let x1 = 40.0 * next() - 20.0;
            let x2 = 40.0 * next() - 20.0;
            let diff = (reference(x1) - reference(x2)).abs();
            let bound = m.eval(&[x1], &[x2]);
            assert!(bound + 1e-12 >= diff, "bound {bound} < diff {diff} at ({x1}, {x2})");
        }
    }
}

#[test]
fn tuple_and_linear_combination() {
    let x0 = vec![Coefficient::zero()];
    let t = projection(1, 0, &x0);
    let pair = tuple_of(&[&builtins::sin(), &builtins::exp()]).unwrap();
    assert_eq!(pair.output_dim, 2);
    let y = sim::eval(&pair, &[1.0], 1e-11, None).unwrap();
    assert!((y[0] - 1.0f64.sin()).abs() < 1e-9);
    assert!((y[1] - std::f64::consts::E).abs() < 1e-9);
    // 2 sin(t) - 3 t + 1/2
    let lc = linear_combination(&[(&builtins::sin(), c(2, 1)), (&t, c(-3, 1))], c(1, 2)).unwrap();
    for tv in [0.0f64, 1.0, -0.5] {
        let expect = 2.0 * tv.sin() - 3.0 * tv + 0.5;
        assert!((eval1(&lc, tv, 1e-11) - expect).abs() < 1e-9);
    }
}

#[test]
fn closure_traces_record_provenance() {
    let f = multiply(&builtins::sin(), &builtins::cos()).unwrap();
    let trace = f.trace.as_ref().unwrap();
    assert_eq!(trace.operation, "multiply");
    assert_eq!(trace.provenance.len(), f.state_dim);
    // each state index appears exactly once
    let mut seen: Vec<usize> = trace.provenance.iter().map(|p| p.state_index).collect();
    seen.sort();
    assert_eq!(seen, (0..f.state_dim).collect::<Vec<_>>());
    let rendered = trace.render();
    assert!(rendered.contains("multiply"));
    assert!(rendered.contains("carried"));
    // bound expressions survive serialization of closure results
    let json = pivp::schema::pivp_to_json(&f);
    let back = pivp::schema::pivp_from_json(&json).unwrap();
    assert_eq!(back, f);
    assert_eq!(back.bound.as_ref().map(|b| b.eval(2.0)), f.bound.as_ref().map(|b| b.eval(2.0)));
    let _ = BoundExpr::Identity; // silence unused import when bound checks change
}
