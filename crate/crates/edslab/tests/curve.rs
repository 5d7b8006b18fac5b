mod common;

use edslab::arith::Rat;
use edslab::curve::{self, add, descent_curve, descent_map, division_polys, scalar_mul, Curve, Point};
use rand::Rng;

fn curves() -> [(Curve, Point); 2] {
    [
        (Curve::from_i64(12, 11, 0).unwrap(), Point::parse("1/4,15/8").unwrap()),
        (Curve::from_i64(7, 2, 0).unwrap(), Point::from_ints(-2, 4)),
    ]
}

#[test]
fn addition_is_associative_and_commutative() {
    let mut rng = common::rng(3);
    for (e, p) in curves() {
        let torsion = curve::torsion_points(&e);
        let mut pick = || -> Point {
            let base = scalar_mul(&e, rng.gen_range(-5i64..=5), &p).unwrap();
            let t = &torsion[rng.gen_range(0..torsion.len())];
            add(&e, &base, t).unwrap()
        };
        for _ in 0..100 {
            let (a, b, c) = (pick(), pick(), pick());
            assert_eq!(add(&e, &a, &b).unwrap(), add(&e, &b, &a).unwrap());
            let left = add(&e, &add(&e, &a, &b).unwrap(), &c).unwrap();
            let right = add(&e, &a, &add(&e, &b, &c).unwrap()).unwrap();
            assert_eq!(left, right);
            assert!(e.contains(&left));
        }
    }
}

#[test]
fn scalar_multiplication_is_additive() {
    for (e, p) in curves() {
        for m in -8i64..=8 {
            for n in -8i64..=8 {
                let lhs = scalar_mul(&e, m + n, &p).unwrap();
                let rhs = add(&e, &scalar_mul(&e, m, &p).unwrap(), &scalar_mul(&e, n, &p).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "m={m} n={n}");
            }
        }
    }
}

#[test]
fn coordinates_from_division_polynomials() {
    for (e, p) in curves() {
        for n in 1..=12u64 {
            let d = division_polys(&e, &p, n).unwrap();
            let q = scalar_mul(&e, n as i64, &p).unwrap();
            let psi2 = &d.psi * &d.psi;
            assert_eq!(q.x().unwrap(), &(&d.phi / &psi2), "n={n}");
            let omega = d.omega.as_ref().expect("omega is defined for nonzero psi");
            assert_eq!(q.y().unwrap(), &(omega / (&psi2 * &d.psi)), "n={n}");
        }
    }
}

#[test]
fn descended_multiples_lie_on_the_target() {
    for (e, p) in curves() {
        let target = descent_curve(&e).unwrap();
        for n in 1..=12 {
            let q = descent_map(&e, &scalar_mul(&e, n, &p).unwrap()).unwrap();
            assert!(target.contains(&q), "n={n}");
        }
    }
}

#[test]
fn affine_points_off_the_curve_are_rejected() {
    let (e, _) = &curves()[0];
    let bad = Point::new(Rat::from_integer(1.into()), Rat::from_integer(1.into()));
    assert!(add(e, &bad, &bad).is_err());
    assert!(scalar_mul(e, 2, &bad).is_err());
}
