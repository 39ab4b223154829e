//! Zoo tests: the quoted lemma inequalities on reference evaluators, the
//! compiled-system agreement with the references along dense line scans, and
//! the approximability combinators.

use num::rational::BigRational;
use num::One;
use pivp::sim::{self, EvalPath};
use pivp::zoo::{self, approx, reference as zref};
use std::f64::consts::E;
use std::rc::Rc;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn sg_and_ip1_reference_examples() {
    assert_eq!(zref::sg(0.0, 5.0, 3.0), 0.0);
    let v = zref::sg(1.0, 3.0, 2.0);
    assert_eq!(v, 6.0f64.tanh());
    assert!((1.0 - v).abs() <= (-6.0f64).exp());
    for (mu, lam) in [(1.0, 2.0), (5.0, 4.0)] {
        assert_eq!(zref::ip1(1.0, mu, lam), 0.5);
    }
}

#[test]
fn abs_reference_examples() {
    // cosh 0 = 1, 1 + lambda mu = 7
    assert!((zref::abs(0.0, 2.0, 3.0) - 2.0f64.ln() / 7.0).abs() < 1e-15);
    let v = zref::abs(2.0, 2.0, 3.0);
    assert!(v >= 2.0 && v <= 2.0 + (-12.0f64).exp());
    // even function
    for x in [0.3, 1.7, 3.9] {
        let a = zref::abs(x, 2.0, 3.0);
        let b = zref::abs(-x, 2.0, 3.0);
        assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
    }
    // stable formula agrees with the naive one at moderate arguments
    for u in [0.0, 0.5, 3.0, 20.0] {
        assert!((zref::ln_2cosh(u) - (2.0 * u.cosh()).ln()).abs() < 1e-12);
    }
}

#[test]
fn mx_mn_norm_reference_examples() {
    for (mu, lam) in [(1.0, 2.0), (3.0, 5.0)] {
        let expect = 2.0 + 2.0f64.ln() / (2.0 * (1.0 + lam * mu));
        assert!((zref::mx(2.0, 2.0, mu, lam) - expect).abs() < 1e-14);
    }
    // mn = x + y - mx holds exactly by definition
    for (x, y) in [(1.0, 2.0), (-0.5, 3.25), (4.0, -4.0)] {
        let mx = zref::mx(x, y, 2.0, 3.0);
        let mn = zref::mn(x, y, 2.0, 3.0);
        assert_eq!(mn, x + y - mx);
    }
    let v = zref::norm_inf(&[1.0, -3.0, 2.0], 0.5);
    assert!((3.0..=3.5).contains(&v), "norm value {v}");
}

#[test]
fn rnd_reference_examples() {
    for n in [-3.0f64, 0.0, 1.0, 7.0] {
        let v = zref::rnd(n, 4.0, 3.0);
        // sin(pi n) = 0 up to float noise in pi
        assert!((v - n).abs() < 1e-14, "rnd({n}) = {v}");
    }
    let v = zref::rnd(0.2, 5.0, 4.0);
    assert!(v.abs() <= (-5.0f64).exp(), "rnd(0.2, 5, 4) = {v}");
    // inside the dead zone only the weak half-bound is claimed
    let v = zref::rnd(0.49, 3.0, 2.0);
    assert!(v.abs() <= 0.5 + 1e-12);
}

#[test]
fn switch_reference_examples() {
    for (mu, x) in [(2.0, 7.0), (5.0, 10.0)] {
        assert!((zref::lxh(1.0, 3.0, 2.0, mu, x) - x / 2.0).abs() < 1e-14);
    }
    let v = zref::lxh(1.0, 3.0, 0.0, 4.0, 10.0);
    assert!(v.abs() <= (-4.0f64).exp());
    let v = zref::hxl(1.0, 2.0, 0.0, 4.0, 10.0);
    assert!((10.0 - v).abs() <= (-4.0f64).exp());
}

#[test]
fn clamp_reference_examples() {
    let v = zref::clamp(0.0, 1.0, 0.5, 5.0, 10.0);
    assert!(v > 0.0 && v < 1.0);
    assert!((v - 0.5).abs() <= (-5.0f64).exp());
    for (mu, lam) in [(2.0, 4.0), (6.0, 8.0)] {
        let hi = zref::clamp(0.0, 1.0, 50.0, mu, lam);
        assert!(hi > 0.0 && hi < 1.0);
        let lo = zref::clamp(0.0, 1.0, -50.0, mu, lam);
        let theta = 2.0 * lam + 0.5;
        assert!(lo >= 1.0 / theta - 1e-12 && lo > 0.0);
    }
}

/// Coarse grid for in-crate lemma sweeps; the acceptance suite runs the
/// full standard grid.
fn coarse_grid() -> Vec<f64> {
    (-40..=40).map(|i| i as f64 * 0.1).collect()
}

#[test]
fn lemma_inequalities_hold_on_coarse_grid() {
    let params: Vec<(f64, f64)> = (1..=8)
        .flat_map(|m| (2..=8).map(move |l| (m as f64, l as f64)))
        .collect();
    for &(mu, lam) in &params {
        for &x in &coarse_grid() {
            let c = zoo::check_sg(x, mu, lam, zref::sg(x, mu, lam));
            assert!(c.violations.is_empty(), "sg({x},{mu},{lam}): {:?}", c.violations);
            let c = zoo::check_ip1(x, mu, lam, zref::ip1(x, mu, lam));
            assert!(c.violations.is_empty(), "ip1({x},{mu},{lam}): {:?}", c.violations);
            let c = zoo::check_abs(x, mu, lam, zref::abs(x, mu, lam));
            assert!(c.violations.is_empty(), "abs({x},{mu},{lam}): {:?}", c.violations);
            let c = zoo::check_rnd(x, mu, lam, zref::rnd(x, mu, lam));
            assert!(c.violations.is_empty(), "rnd({x},{mu},{lam}): {:?}", c.violations);
            for y in [-2.0, 0.0, 1.05] {
                let c = zoo::check_mx_mn(
                    x,
                    y,
                    mu,
                    lam,
                    zref::mx(x, y, mu, lam),
                    zref::mn(x, y, mu, lam),
                );
                assert!(c.violations.is_empty(), "mx/mn({x},{y},{mu},{lam}): {:?}", c.violations);
            }
            for xv in [0.0, 1.0, -10.0] {
                let c = zoo::check_switch(
                    1.0,
                    3.0,
                    x,
                    mu,
                    xv,
                    zref::lxh(1.0, 3.0, x, mu, xv),
                    zref::hxl(1.0, 3.0, x, mu, xv),
                );
                assert!(c.violations.is_empty(), "switch({x},{mu},{xv}): {:?}", c.violations);
            }
        }
    }
    // norm over representative vectors and deltas
    for delta in [1.0, 0.5, 0.25, 0.01] {
        for &x in &coarse_grid() {
            let v = [x, -x + 1.0, x / 2.0];
            let c = zoo::check_norm(&v, delta, zref::norm_inf(&v, delta));
            assert!(c.violations.is_empty(), "norm({v:?},{delta}): {:?}", c.violations);
        }
    }
}

#[test]
fn sg_and_ip1_are_nondecreasing_in_x() {
    for (mu, lam) in [(1.0, 2.0), (4.0, 5.0), (8.0, 8.0)] {
        let mut prev_sg = f64::NEG_INFINITY;
        let mut prev_ip = f64::NEG_INFINITY;
        for &x in &coarse_grid() {
            let s = zref::sg(x, mu, lam);
            let i = zref::ip1(x, mu, lam);
            assert!(s >= prev_sg - 1e-15);
            assert!(i >= prev_ip - 1e-15);
            prev_sg = s;
            prev_ip = i;
        }
    }
}

#[test]
fn abs_and_norm_overapproximate() {
    for (mu, lam) in [(1.0, 2.0), (6.0, 7.0)] {
        for &x in &coarse_grid() {
            assert!(zref::abs(x, mu, lam) >= x.abs() - 1e-14);
        }
    }
    for &x in &coarse_grid() {
        let v = [x, 2.0 * x - 1.0];
        let norm = v.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        assert!(zref::norm_inf(&v, 0.25) >= norm - 1e-14);
    }
}

#[test]
fn zoo_generators_validate_and_are_polynomially_bounded() {
    let statics = zoo::StaticParams {
        a: Some(rat(1, 1)),
        b: Some(rat(3, 1)),
        delta: Some(rat(1, 2)),
    };
    for name in zoo::ENTRY_NAMES {
        let entry = zoo::entry(name, &statics).unwrap();
        let violations = entry.pivp.validate();
        assert!(violations.is_empty(), "{name}: {violations:?}");
        assert!(entry.pivp.poly_bounded().is_poly, "{name} must be polynomially bounded");
    }
}

/// Dense line scans over x at fixed trailing parameters, run outward from
/// the active center in both directions: errors injected while a scan sits
/// deep inside a saturation zone would otherwise amplify on the way back
/// toward the active region, while outward scans only ever decay them.
fn scan_outward(
    pivp: &pivp::Pivp,
    center: f64,
    lo: f64,
    hi: f64,
    fixed: &[f64],
    points_per_side: usize,
    tol: f64,
) -> Vec<(f64, f64)> {
    let point = |x: f64| {
        let mut v = vec![x];
        v.extend_from_slice(fixed);
        v
    };
    let mut out = Vec::new();
    for end in [lo, hi] {
        let path = EvalPath::new(vec![pivp.x0_f64(), point(center), point(end)]);
        out.extend(
            sim::eval_dense_along(pivp, &path, points_per_side, tol)
                .unwrap()
                .into_iter()
                .map(|(x, y)| (x[0], y[0])),
        );
    }
    out
}

#[test]
fn compiled_sg_ip1_abs_agree_with_reference() {
    let cases: [(&str, fn(f64, f64, f64) -> f64); 3] =
        [("sg", zref::sg), ("ip1", zref::ip1), ("abs", zref::abs)];
    for (name, reference) in cases {
        let entry = zoo::entry(name, &zoo::StaticParams::default()).unwrap();
        for mu in [1.0, 4.0, 8.0] {
            for lam in [2.0, 5.0, 8.0] {
                for (x, got) in scan_outward(&entry.pivp, 0.0, -4.0, 4.0, &[mu, lam], 200, 1e-12) {
                    let want = reference(x, mu, lam);
                    assert!(
                        (got - want).abs() < 1e-8,
                        "{name}({x},{mu},{lam}): {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn compiled_mx_mn_agree_with_reference() {
    for (name, reference) in [("mx", zref::mx as fn(f64, f64, f64, f64) -> f64), ("mn", zref::mn)] {
        let entry = zoo::entry(name, &zoo::StaticParams::default()).unwrap();
        for y in [-1.5, 0.0, 2.25] {
            for (mu, lam) in [(1.0, 2.0), (5.0, 8.0)] {
                for (x, got) in scan_outward(&entry.pivp, y, -4.0, 4.0, &[y, mu, lam], 100, 1e-12) {
                    let want = reference(x, y, mu, lam);
                    assert!(
                        (got - want).abs() < 1e-8,
                        "{name}({x},{y},{mu},{lam}): {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn compiled_switches_agree_with_reference() {
    let statics = zoo::StaticParams { a: Some(rat(1, 1)), b: Some(rat(3, 1)), delta: None };
    for (name, reference) in
        [("lxh", zref::lxh as fn(f64, f64, f64, f64, f64) -> f64), ("hxl", zref::hxl)]
    {
        let entry = zoo::entry(name, &statics).unwrap();
        for xv in [0.0, 1.0, 10.0] {
            for mu in [1.0, 4.0, 8.0] {
                for (t, got) in scan_outward(&entry.pivp, 2.0, -4.0, 4.0, &[mu, xv], 100, 1e-12) {
                    let want = reference(1.0, 3.0, t, mu, xv);
                    assert!(
                        (got - want).abs() < 1e-8,
                        "{name}({t},{mu},{xv}): {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn compiled_clamp_agrees_with_reference() {
    let statics = zoo::StaticParams { a: Some(rat(0, 1)), b: Some(rat(1, 1)), delta: None };
    let entry = zoo::entry("clamp", &statics).unwrap();
    for (mu, lam) in [(2.0, 4.0), (5.0, 10.0)] {
        for (x, got) in scan_outward(&entry.pivp, 0.5, -4.0, 4.0, &[mu, lam], 100, 1e-12) {
            let want = zref::clamp(0.0, 1.0, x, mu, lam);
            assert!((got - want).abs() < 1e-8, "clamp({x},{mu},{lam}): {got} vs {want}");
        }
    }
}

#[test]
fn compiled_norm_agrees_with_reference() {
    let statics = zoo::StaticParams { a: None, b: None, delta: Some(rat(1, 2)) };
    let entry = zoo::entry("norm", &statics).unwrap();
    for (x2, x3) in [(0.5, -2.0), (-3.0, 1.0)] {
        for (x, got) in scan_outward(&entry.pivp, 0.0, -4.0, 4.0, &[x2, x3], 50, 1e-12) {
            let want = zref::norm_inf(&[x, x2, x3], 0.5);
            assert!((got - want).abs() < 1e-8, "norm({x},{x2},{x3}): {got} vs {want}");
        }
    }
}

#[test]
fn compiled_rnd_agrees_with_reference() {
    // The generated system is evaluated on the barrier-free window
    // |x| <= 0.4, which contains the whole accuracy-claim region
    // [-1/2 + 1/lambda, 1/2 - 1/lambda] for every lambda in the grid.
    // Beyond it the inner sign/floor saturations of the formula are deeper
    // than doubles can represent, and evaluation paths crossing the
    // half-integer barriers stop with a step-size underflow rather than
    // returning values.
    let entry = zoo::entry("rnd", &zoo::StaticParams::default()).unwrap();
    for (mu, lam) in [(1.0, 2.0), (5.0, 4.0), (4.0, 5.0), (8.0, 8.0)] {
        for (x, got) in scan_outward(&entry.pivp, 0.0, -0.4, 0.4, &[mu, lam], 80, 1e-12) {
            let want = zref::rnd(x, mu, lam);
            assert!(
                (got - want).abs() < 1e-6,
                "rnd({x},{mu},{lam}): {got} vs {want} (diff {})",
                (got - want).abs()
            );
        }
    }
    // crossing the half-integer barrier fails loudly instead of silently
    // returning a wrong branch
    let r = pivp::sim::eval(&entry.pivp, &[1.3, 4.0, 4.0], 1e-9, None);
    assert!(matches!(r, Err(pivp::sim::SimError::StepUnderflow { .. })));
}

fn sin_approx() -> approx::ApproxFunction {
    approx::ApproxFunction::generable("sin", &pivp::pivp::builtins::sin(), Rc::new(|x| x.sin()))
        .unwrap()
}

fn tanh_approx() -> approx::ApproxFunction {
    approx::ApproxFunction::generable("tanh", &pivp::pivp::builtins::tanh(), Rc::new(|x| x.tanh()))
        .unwrap()
}

#[test]
fn approx_sum_of_generable_functions() {
    let sum = approx::approx_combine(&sin_approx(), &tanh_approx(), pivp::closure::CombineOp::Add)
        .unwrap();
    assert!(sum.exceptions.is_empty());
    assert!(sum.pivp.validate().is_empty());
    for mu in [2.0, 4.0, 6.0] {
        for x in [-3.0, -0.4, 0.0, 1.1, 3.7] {
            let err = (sum.eval(x, mu, 4.0) - (x.sin() + x.tanh())).abs();
            assert!(err <= (-mu).exp(), "sum err {err} at x={x}, mu={mu}");
        }
    }
    // the generated system agrees with the reference evaluator
    let got = sim::eval(&sum.pivp, &[0.8, 3.0, 4.0], 1e-10, None).unwrap()[0];
    assert!((got - sum.eval(0.8, 3.0, 4.0)).abs() < 1e-8);
}

#[test]
fn approx_product_of_signs() {
    // sg approximates sgn over R but {0}; the product approximates
    // sgn^2 = 1 away from 0.
    let sgn = approx::ApproxFunction::new(
        "sgn",
        (None, None),
        vec![approx::ExceptionLocus::Point(0.0)],
        Rc::new(|x, mu, lam| zref::sg(x, mu, lam)),
        zoo::sg_pivp().unwrap(),
    );
    let prod = approx::approx_product(&sgn, &sgn).unwrap();
    assert!(prod.pivp.validate().is_empty());
    for mu in [2.0, 4.0, 6.0] {
        for lam in [4.0, 8.0] {
            for x in [-3.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.9] {
                assert!(prod.distance_to_exceptions(x) >= 1.0 / lam);
                let err = (prod.eval(x, mu, lam) - 1.0).abs();
                assert!(err <= (-mu).exp(), "prod err {err} at x={x}, mu={mu}, lam={lam}");
            }
        }
    }
    // system vs reference at a spot
    let got = sim::eval(&prod.pivp, &[1.5, 2.0, 4.0], 1e-10, None).unwrap()[0];
    assert!((got - prod.eval(1.5, 2.0, 4.0)).abs() < 1e-7);
}

#[test]
fn approx_piecewise_staircase() {
    let pieces = [
        approx::ApproxFunction::constant(&rat(-1, 1)),
        approx::ApproxFunction::constant(&rat(0, 1)),
        approx::ApproxFunction::constant(&rat(1, 1)),
    ];
    let breaks = [rat(-1, 1), rat(1, 1)];
    let stair = approx::approx_piecewise(&breaks, &pieces).unwrap();
    assert!(stair.pivp.validate().is_empty());
    assert!(stair.pivp.poly_bounded().is_poly);
    let target = |x: f64| -> f64 {
        if x < -1.0 {
            -1.0
        } else if x < 1.0 {
            0.0
        } else {
            1.0
        }
    };
    for mu in [2.0, 4.0, 6.0] {
        for lam in [4.0, 8.0] {
            let mut x = -4.0;
            while x <= 4.0 {
                if stair.distance_to_exceptions(x) >= 1.0 / lam + 1e-9 {
                    let err = (stair.eval(x, mu, lam) - target(x)).abs();
                    assert!(err <= (-mu).exp(), "stair err {err} at x={x}, mu={mu}, lam={lam}");
                }
                x += 0.05;
            }
        }
    }
    // the generated PIVP matches the reference evaluator on a few points
    for x in [-2.0, 0.0, 2.0, 0.9] {
        let got = sim::eval(&stair.pivp, &[x, 3.0, 4.0], 1e-9, None).unwrap()[0];
        assert!(
            (got - stair.eval(x, 3.0, 4.0)).abs() < 1e-6,
            "pivp vs reference at {x}: {got} vs {}",
            stair.eval(x, 3.0, 4.0)
        );
    }
}

#[test]
fn approx_piecewise_single_piece_shifts_mu() {
    let t = tanh_approx();
    let single = approx::approx_piecewise(&[], std::slice::from_ref(&t)).unwrap();
    for x in [-1.0, 0.3, 2.0] {
        // k = 0: the result is the piece queried at nu = mu + 1
        assert_eq!(single.eval(x, 3.0, 4.0), t.eval(x, 4.0, 4.0));
    }
}

#[test]
fn approx_periodic_square_wave() {
    let window = approx::approx_piecewise(
        &[rat(0, 1)],
        &[
            approx::ApproxFunction::constant(&rat(1, 1)),
            approx::ApproxFunction::constant(&rat(-1, 1)),
        ],
    )
    .unwrap();
    let wave = approx::approx_periodic(&rat(-1, 1), &rat(1, 1), &window).unwrap();
    assert!(wave.pivp.validate().is_empty());
    assert!(wave.pivp.poly_bounded().is_poly);
    let target = |x: f64| -> f64 {
        let u = x - 2.0 * (x / 2.0).round();
        if u.abs() < 1e-9 || (u.abs() - 1.0).abs() < 1e-9 {
            f64::NAN // exception point, not checked
        } else if u > 0.0 && u < 1.0 {
            -1.0
        } else {
            1.0
        }
    };
    for mu in [2.0, 4.0, 6.0] {
        for lam in [4.0, 8.0] {
            let mut x = -4.0;
            while x <= 4.0 {
                if wave.distance_to_exceptions(x) >= 1.0 / lam + 1e-9 {
                    let want = target(x);
                    let err = (wave.eval(x, mu, lam) - want).abs();
                    assert!(err <= (-mu).exp(), "wave err {err} at x={x}, mu={mu}, lam={lam}");
                }
                x += 0.045;
            }
        }
    }
    // inside dead zones only boundedness is claimed
    for x in [-1.0, 0.0, 1.0, 2.0] {
        let v = wave.eval(x, 4.0, 4.0);
        assert!(v.is_finite() && v.abs() <= 2.0);
    }
}

#[test]
fn approx_periodic_sine_window_is_sine() {
    // sin is 2 pi periodic and generable; a window of width 2 pi is not
    // rational, so test with the rational-period function sin(pi x): use
    // the window (-1, 1) and the target sin(pi x).
    let x0 = vec![
        pivp::Coefficient::zero(),
        pivp::Coefficient::one(),
        pivp::Coefficient::from_int(2),
    ];
    let scale = pivp::closure::linear_combination(
        &[(&pivp::pivp::projection(3, 0, &x0), pivp::Coefficient::pi())],
        pivp::Coefficient::zero(),
    )
    .unwrap();
    let sin_pi = pivp::closure::compose(&pivp::pivp::builtins::sin(), &scale).unwrap();
    // sin(pi x) is entire, so the window needs no clamp extension.
    let window = approx::ApproxFunction::new(
        "sin(pi x)",
        (None, None),
        vec![],
        Rc::new(|x, _, _| (std::f64::consts::PI * x).sin()),
        sin_pi,
    );
    let periodic = approx::approx_periodic(&rat(-1, 1), &rat(1, 1), &window).unwrap();
    for mu in [2.0, 5.0] {
        for x in [-3.7, -0.2, 0.6, 2.9, 3.4] {
            if periodic.distance_to_exceptions(x) >= 0.25 {
                let err = (periodic.eval(x, mu, 4.0) - (std::f64::consts::PI * x).sin()).abs();
                assert!(err <= (-mu).exp(), "periodic sine err {err} at x={x}, mu={mu}");
            }
        }
    }
}

#[test]
fn extend_to_line_clamps_outside_the_window() {
    let piece = tanh_approx().on_interval(Some(rat(-2, 1)), Some(rat(2, 1)));
    let extended = approx::extend_to_line(&piece).unwrap();
    assert!(extended.pivp.validate().is_empty());
    // inside the window, still accurate
    for x in [-1.5, 0.0, 1.2] {
        let err = (extended.eval(x, 4.0, 4.0) - x.tanh()).abs();
        assert!(err <= (-4.0f64).exp(), "extended err {err} at {x}");
    }
    // outside, finite and close to the edge value
    for x in [-10.0, 10.0] {
        let v = extended.eval(x, 4.0, 4.0);
        assert!(v.is_finite());
        assert!((v.abs() - 2.0f64.tanh().abs()).abs() < 0.1);
    }
    let _ = E; // keep the common constant import exercised
}
