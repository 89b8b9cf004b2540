mod common;

use bifocus_core::jets::{monomials, tri_index, tri_len, ConstantTerm, Jet2, JetPair};
use bifocus_core::Error;
use common::oracle;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CAP: usize = 10;

#[test]
fn products_match_expanded_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..300 {
        let a = oracle::random_jet(&mut rng, CAP, 5, false);
        let b = oracle::random_jet(&mut rng, CAP, 5, false);
        let expect = oracle::mul(&oracle::from_jet(&a), &oracle::from_jet(&b), None);
        assert!(oracle::relative_gap(&a.mul(&b).unwrap(), &expect) < 1e-12);
    }
}

#[test]
fn compositions_match_expanded_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let outer = oracle::random_jet(&mut rng, CAP, 5, false);
        let inner = JetPair {
            y1: oracle::random_jet(&mut rng, CAP, 5, true),
            y2: oracle::random_jet(&mut rng, CAP, 5, true),
        };
        let got = outer.compose(&inner, ConstantTerm::Reject).unwrap();
        let expect = oracle::compose(
            &oracle::from_jet(&outer),
            &oracle::from_jet(&inner.y1),
            &oracle::from_jet(&inner.y2),
            Some(CAP as u32),
        );
        assert!(oracle::relative_gap(&got, &expect) < 1e-12);
    }
}

#[test]
fn substitution_with_constants_is_exact_for_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        // Outer of degree 2, inner of degree 2: the exact result has degree 4.
        let outer = oracle::random_jet(&mut rng, 4, 2, false);
        let inner = JetPair {
            y1: oracle::random_jet(&mut rng, 4, 2, false),
            y2: oracle::random_jet(&mut rng, 4, 2, false),
        };
        let got = outer.compose(&inner, ConstantTerm::Substitute).unwrap();
        let expect = oracle::compose(
            &oracle::from_jet(&outer),
            &oracle::from_jet(&inner.y1),
            &oracle::from_jet(&inner.y2),
            None,
        );
        assert!(oracle::relative_gap(&got, &expect) < 1e-12);
    }
}

#[test]
fn rejecting_constants() {
    let outer = Jet2::y1(3);
    let inner = JetPair {
        y1: Jet2::constant(3, 0.5),
        y2: Jet2::y2(3),
    };
    assert!(matches!(
        outer.compose(&inner, ConstantTerm::Reject),
        Err(Error::Domain { .. })
    ));
}

#[test]
fn mixed_caps_are_rejected() {
    let a = Jet2::y1(3);
    let b = Jet2::y1(4);
    assert!(matches!(a.mul(&b), Err(Error::CapMismatch { .. })));
    assert!(matches!(a.add(&b), Err(Error::CapMismatch { .. })));
    assert!(JetPair::new(a, b).is_err());
}

#[test]
fn partials_are_scaled_coefficients() {
    // (Y1 + Y2)^4 has d^4/dY1^2 dY2^2 = 2! 2! * 6 = 24.
    let s = Jet2::y1(6).add(&Jet2::y2(6)).unwrap().powi(4);
    assert_eq!(s.partial(2, 2).unwrap(), 24.0);
    assert_eq!(s.partial(4, 0).unwrap(), 24.0);
    assert_eq!(s.partial(1, 0).unwrap(), 0.0);
    assert!(matches!(s.partial(4, 3), Err(Error::OutOfRange { .. })));
}

#[test]
fn evaluation_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let a = oracle::random_jet(&mut rng, 6, 6, false);
        let p = oracle::from_jet(&a);
        for &(y1, y2) in &[(0.3, -0.7), (1.0, 1.0), (-0.25, 0.5)] {
            assert!((a.eval(y1, y2) - oracle::eval(&p, y1, y2)).abs() < 1e-13);
        }
    }
}

#[test]
fn triangular_layout_is_a_bijection() {
    for cap in 0..12 {
        let idx: Vec<usize> = monomials(cap).map(|(j, i)| tri_index(j, i)).collect();
        assert_eq!(idx, (0..tri_len(cap)).collect::<Vec<_>>());
    }
}

#[test]
fn truncation_drops_high_degrees() {
    let y = Jet2::y1(3);
    assert!(y.powi(4).is_zero());
    assert_eq!(y.powi(3).coeff(3, 0), 1.0);
    assert_eq!(Jet2::y1(3).coeff(7, 2), 0.0);
}

fn jet_strategy(cap: usize) -> impl Strategy<Value = Jet2> {
    prop::collection::vec(-2.0f64..2.0, tri_len(cap)).prop_map(move |c| Jet2::from_coeffs(cap, c).unwrap())
}

fn close(a: &Jet2, b: &Jet2, tol: f64) -> bool {
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    a.sub(b).unwrap().max_abs() <= tol * scale
}

proptest! {
    #[test]
    fn multiplication_is_commutative_and_associative(a in jet_strategy(5), b in jet_strategy(5), c in jet_strategy(5)) {
        prop_assert!(close(&a.mul(&b).unwrap(), &b.mul(&a).unwrap(), 1e-13));
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(close(&left, &right, 1e-12));
    }

    #[test]
    fn multiplication_distributes(a in jet_strategy(4), b in jet_strategy(4), c in jet_strategy(4)) {
        let left = a.mul(&b.add(&c).unwrap()).unwrap();
        let right = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(close(&left, &right, 1e-12));
    }

    #[test]
    fn identity_composition_is_neutral(a in jet_strategy(6)) {
        let got = a.compose(&JetPair::identity(6), ConstantTerm::Reject).unwrap();
        prop_assert!(close(&got, &a, 0.0));
    }

    #[test]
    fn composition_is_a_ring_map(a in jet_strategy(4), b in jet_strategy(4), c1 in jet_strategy(4), c2 in jet_strategy(4)) {
        let mut inner = JetPair { y1: c1, y2: c2 };
        inner.y1.set_coeff(0, 0, 0.0);
        inner.y2.set_coeff(0, 0, 0.0);
        let lhs = a.mul(&b).unwrap().compose(&inner, ConstantTerm::Reject).unwrap();
        let rhs = a.compose(&inner, ConstantTerm::Reject).unwrap()
            .mul(&b.compose(&inner, ConstantTerm::Reject).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-10));
    }

    #[test]
    fn eval_is_multiplicative_on_exact_products(a in jet_strategy(3), b in jet_strategy(3), y1 in -1.0f64..1.0, y2 in -1.0f64..1.0) {
        // At cap 6 the product of two cubics is not truncated.
        let (a6, b6) = (a.with_cap(6), b.with_cap(6));
        let prod = a6.mul(&b6).unwrap();
        let expect = a.eval(y1, y2) * b.eval(y1, y2);
        prop_assert!((prod.eval(y1, y2) - expect).abs() <= 1e-11 * expect.abs().max(1.0));
    }
}
