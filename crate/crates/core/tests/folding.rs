use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use foldyn::dynamics::{iterate_first_order, iterate_planar, iterate_second_order, Termination};
use foldyn::folding::{back_map_y, fold, initial_values, reduce_first_order};
use foldyn::scalar::{Scalar, DEFAULT_REL_TOL};
use foldyn::system::{check_degeneracy, step_planar, validate_system, PlanarPoint, PlanarSystem};

fn small() -> impl Strategy<Value = Scalar> {
    (-20i128..=20, 1i128..=4).prop_map(|(n, d)| Scalar::ratio(n, d).unwrap())
}

fn nonzero() -> impl Strategy<Value = Scalar> {
    small().prop_filter("nonzero", |s| !s.is_zero())
}

fn valid_system() -> impl Strategy<Value = PlanarSystem> {
    prop::array::uniform9(small())
        .prop_map(PlanarSystem::from_array)
        .prop_filter("non-trivial", |s| validate_system(s).is_empty())
}

/// Degenerate systems: a' = a b'/b, a'' = a b''/b, c'' = b'' c/b.
fn degenerate_system() -> impl Strategy<Value = PlanarSystem> {
    (small(), nonzero(), small(), small(), small(), nonzero())
        .prop_map(|(a, b, c, bp, cp, bpp)| {
            let ap = a.mul(&bp).unwrap().div(&b).unwrap();
            let app = a.mul(&bpp).unwrap().div(&b).unwrap();
            let cpp = bpp.mul(&c).unwrap().div(&b).unwrap();
            PlanarSystem::from_array([a, b, c, ap, bp, cp, app, bpp, cpp])
        })
        .prop_filter("non-trivial", |s| validate_system(s).is_empty())
}

fn point() -> impl Strategy<Value = PlanarPoint> {
    (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(x, y)| PlanarPoint::new(x, y))
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

fn ratio(s: &Scalar) -> BigRational {
    let r = s.as_rational().unwrap();
    BigRational::new(BigInt::from(r.numer()), BigInt::from(r.denom()))
}

fn to_f64(r: &BigRational) -> f64 {
    let n: f64 = r.numer().to_string().parse().unwrap();
    let d: f64 = r.denom().to_string().parse().unwrap();
    n / d
}

proptest! {
    /// One planar step agrees with exact rational evaluation to within the
    /// rounding error of its sums.
    #[test]
    fn step_planar_is_correctly_rounded_up_to_sum_error(sys in valid_system(), p in point()) {
        let Ok(next) = step_planar(&sys, p) else { return Ok(()) };
        let v: Vec<BigRational> = sys.to_array().iter().map(ratio).collect();
        let (x, y) = (exact(p.x), exact(p.y));
        let x_exact = &v[0] * &x + &v[1] * &y + &v[2];
        let num = &v[3] * &x + &v[4] * &y + &v[5];
        let den = &v[6] * &x + &v[7] * &y + &v[8];
        let k = sys.coeffs();
        let eps = f64::EPSILON;
        let mag = |a: f64, b: f64, c: f64| (a * p.x).abs() + (b * p.y).abs() + c.abs();
        let x_bound = 4.0 * eps * mag(k.a, k.b, k.c);
        prop_assert!((next.x - to_f64(&x_exact)).abs() <= x_bound);
        let y_exact = to_f64(&(num / &den));
        let d = to_f64(&den).abs();
        let y_bound = 4.0 * eps * (mag(k.ap, k.bp, k.cp) + y_exact.abs() * mag(k.app, k.bpp, k.cpp)) / d
            + 2.0 * eps * y_exact.abs();
        prop_assert!((next.y - y_exact).abs() <= y_bound, "{} vs {} (bound {})", next.y, y_exact, y_bound);
    }

    /// The planar x-orbit satisfies the folded equation and the back-map
    /// recovers y.
    #[test]
    fn folding_consistency(sys in valid_system(), p in point()) {
        let eq = fold(&sys).unwrap();
        let k = eq.coeffs();
        let orbit = iterate_planar(&sys, p, 50);
        let pts = &orbit.points;
        for w in pts.windows(3) {
            let r = k.scaled_residual(w[0].x, w[1].x, w[2].x);
            prop_assert!(r < 1e-9, "residual {}", r);
        }
        for w in pts.windows(2) {
            let scale = w[0].x.abs().max(w[1].x.abs()).max(w[0].y.abs()).max(1.0);
            let err = (back_map_y(&eq, w[0].x, w[1].x) - w[0].y).abs() / scale;
            prop_assert!(err < 1e-9, "y error {}", err);
        }
    }

    /// The transferred initial values reproduce x1, and one step of the
    /// second-order recursion reproduces x2 when its denominator is well
    /// conditioned.
    #[test]
    fn second_order_step_matches_planar_orbit(sys in valid_system(), p in point()) {
        let eq = fold(&sys).unwrap();
        let planar = iterate_planar(&sys, p, 2);
        prop_assume!(planar.points.len() == 3);
        let (x0, x1) = initial_values(&sys, p.x, p.y);
        prop_assert_eq!(x0, p.x);
        prop_assert_eq!(x1, planar.points[1].x);
        let k = eq.coeffs();
        let den = k.b1 * x1 + k.b0 * x0 + k.b_const;
        let den_mag = (k.b1 * x1).abs() + (k.b0 * x0).abs() + k.b_const.abs();
        prop_assume!(den.abs() >= 1e-3 * den_mag);
        let folded = iterate_second_order(&eq, x0, x1, 1);
        prop_assume!(folded.values.len() == 3);
        let x2 = planar.points[2].x;
        prop_assert!((folded.values[2] - x2).abs() <= 1e-9 * x2.abs().max(1.0), "{} vs {}", folded.values[2], x2);
    }

    #[test]
    fn degenerate_by_construction(sys in degenerate_system(), p in point()) {
        prop_assert!(check_degeneracy(&sys, 0.0));
        let map = reduce_first_order(&sys, DEFAULT_REL_TOL).unwrap();
        prop_assert!(map.is_exact());
        let v: Vec<BigRational> = sys.to_array().iter().map(ratio).collect();
        // q = c + b b'/b'', s = b (b c' - b' c)/b''
        prop_assert_eq!(ratio(&map.q), &v[2] + &v[1] * &v[4] / &v[7]);
        prop_assert_eq!(ratio(&map.s), &v[1] * (&v[1] * &v[5] - &v[4] * &v[2]) / &v[7]);
        prop_assert_eq!(map.a, sys.a);

        // from step 1 on, x follows the reduced map
        let planar = iterate_planar(&sys, p, 4);
        if planar.points.len() >= 3 {
            let reduced = iterate_first_order(&map, planar.points[1].x, planar.points.len() - 2);
            for (r, pl) in reduced.values.iter().zip(&planar.points[1..]) {
                prop_assert!((r - pl.x).abs() <= 1e-6 * pl.x.abs().max(1.0), "{} vs {}", r, pl.x);
            }
        }
    }

    #[test]
    fn perturbed_degenerate_system_is_rejected(sys in degenerate_system(), bump in 1i128..5) {
        let mut broken = sys;
        broken.ap = broken.ap.add(&Scalar::ratio(bump, 7).unwrap()).unwrap();
        prop_assert!(!check_degeneracy(&broken, 0.0));
        prop_assert!(reduce_first_order(&broken, DEFAULT_REL_TOL).is_err());
    }
}

#[test]
fn shifted_planar_orbit_is_a_suffix() {
    let sys = PlanarSystem::from_array([1, 2, -2, 1, 2, 4, 3, 6, -6].map(Scalar::integer));
    let full = iterate_planar(&sys, PlanarPoint::new(0.3, 1.1), 40);
    assert_eq!(full.termination, Termination::Completed);
    let tail = iterate_planar(&sys, full.points[15], 25);
    assert_eq!(&full.points[15..], &tail.points[..]);
}
