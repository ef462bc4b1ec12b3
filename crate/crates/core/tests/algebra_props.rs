use num_complex::Complex64;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use quasinil::moments::{moment_combinatorial, moment_dense_oracle};
use quasinil::operators::{a_trunc, check_nilpotency, s_operator};
use quasinil::scalar::{rat, real, to_c64, CRational, Rational};
use quasinil::tensor::{apply, dense, Matrix};
use quasinil::{Caps, CoefficientSpec, Letter, MomentTarget, OperatorSum, StateVector, TensorWord};

const LETTERS: [Letter; 7] = [
    Letter::I,
    Letter::P,
    Letter::Q,
    Letter::V,
    Letter::Vstar,
    Letter::R,
    Letter::T,
];

fn letter() -> impl Strategy<Value = Letter> {
    prop::sample::select(LETTERS.to_vec())
}

fn small_rational() -> impl Strategy<Value = CRational> {
    (-6i64..=6, 1i64..=5).prop_map(|(p, q)| real(rat(p, q)))
}

fn nonzero_rational() -> impl Strategy<Value = CRational> {
    (1i64..=6, 1i64..=7, any::<bool>())
        .prop_map(|(p, q, neg)| real(rat(if neg { -p } else { p }, q)))
}

/// Random sums of up to four words on `sites` sites.
fn opsum(sites: usize) -> impl Strategy<Value = OperatorSum> {
    prop::collection::vec(
        (small_rational(), prop::collection::vec(letter(), sites)),
        0..=4,
    )
    .prop_map(|terms| {
        let mut x = OperatorSum::zero();
        for (c, ls) in terms {
            x.add_term(c, TensorWord::new(ls));
        }
        x
    })
}

fn explicit_spec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = CoefficientSpec> {
    prop::collection::vec(nonzero_rational(), len).prop_map(CoefficientSpec::explicit)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_is_cyclic(x in opsum(3), y in opsum(3)) {
        prop_assert_eq!((&x * &y).trace(), (&y * &x).trace());
    }

    #[test]
    fn trace_is_faithful(x in opsum(3)) {
        let n = (&x.adjoint() * &x).trace();
        prop_assert!(n.im.is_zero() && !n.re.is_negative());
        prop_assert_eq!(n.re.is_zero(), x.canonical().is_empty());
        prop_assert_eq!(n.re, x.norm2_sq());
    }

    #[test]
    fn products_match_dense(x in opsum(3), y in opsum(3)) {
        let caps = Caps::default();
        let mx: Matrix<CRational> = dense(&x, 3, &caps).unwrap();
        let my: Matrix<CRational> = dense(&y, 3, &caps).unwrap();
        let mxy: Matrix<CRational> = dense(&(&x * &y), 3, &caps).unwrap();
        prop_assert_eq!(mx.matmul(&my), mxy);
        prop_assert_eq!(dense::<CRational>(&x.adjoint(), 3, &caps).unwrap(), mx.conj_transpose());
    }

    #[test]
    fn apply_matches_dense(x in opsum(4), seed in prop::collection::vec(-1.0f64..1.0, 32)) {
        let amps: Vec<Complex64> = seed.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let v = StateVector::from_amplitudes(4, amps.clone()).unwrap();
        let got = apply(&x, &v).unwrap();
        let m: Matrix<Complex64> = dense(&x, 4, &Caps::default()).unwrap();
        let want = m.apply(&amps);
        for (a, b) in got.amplitudes().iter().zip(&want) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn s_commutes_with_a(spec in explicit_spec(4..=6), level in 4usize..=6) {
        let a = a_trunc(&spec, level);
        for m in 2..=4 {
            for n in 1..m {
                let s = s_operator(&spec, n, m).unwrap();
                prop_assert!(s.commutator(&a).is_zero(), "S({},{}) at N={}", n, m, level);
            }
        }
    }

    #[test]
    fn truncations_are_nilpotent(spec in explicit_spec(1..=5)) {
        let level = spec.support_len().unwrap();
        for r in check_nilpotency(&spec, level).unwrap() {
            prop_assert!(r.pass, "{}", r.name);
        }
    }

    #[test]
    fn astara_combinatorial_matches_dense(spec in explicit_spec(1..=3), p in 1usize..=3) {
        let caps = Caps::default();
        let n = spec.support_len().unwrap();
        let t = MomentTarget::AstarAPower { p };
        let comb = moment_combinatorial(&spec, t, None, &caps).unwrap().exact.unwrap();
        let oracle = moment_dense_oracle(&spec, t, n, true, &caps).unwrap().exact.unwrap();
        prop_assert_eq!(comb, oracle);
    }

    #[test]
    fn y_moments_carry_the_sign(spec in explicit_spec(1..=3), order in 1usize..=6) {
        let caps = Caps::default();
        let n = spec.support_len().unwrap();
        let y = moment_dense_oracle(&spec, MomentTarget::YPower { order }, n, true, &caps).unwrap().exact.unwrap();
        let x = moment_dense_oracle(&spec, MomentTarget::XPower { order }, n, true, &caps).unwrap().exact.unwrap();
        let want = match order % 4 {
            1 | 3 => Rational::zero(),
            2 => -x,
            _ => x,
        };
        prop_assert_eq!(&y, &want);
        let comb = moment_combinatorial(&spec, MomentTarget::YPower { order }, None, &caps).unwrap().exact.unwrap();
        prop_assert_eq!(comb, y);
    }
}

#[test]
fn complex_weights_survive_round_trip() {
    let c = CRational::new(rat(1, 2), rat(-1, 3));
    let x = OperatorSum::term(c.clone(), TensorWord::at(2, Letter::V));
    let m: Matrix<Complex64> = dense(&x, 2, &Caps::default()).unwrap();
    assert_eq!(*m.get(0, 0), Complex64::zero());
    assert!(m.row(0).iter().chain(m.row(2)).any(|z| *z == to_c64(&c)));
}
