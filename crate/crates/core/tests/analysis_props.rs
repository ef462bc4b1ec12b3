use num_traits::Zero;
use proptest::prelude::*;
use quasinil::moments::{moment_combinatorial, rademacher_moment};
use quasinil::sampler::{sample_series, sample_values};
use quasinil::scalar::{rat, Rational};
use quasinil::subspace::{rm_trace, rm_truncated, PQWord};
use quasinil::{Caps, CoefficientSpec, Letter, MomentTarget};

fn alpha() -> impl Strategy<Value = Rational> {
    (1i64..=8).prop_flat_map(|q| (1..q + 1).prop_map(move |p| rat(p, q + 1)))
}

fn word(max: usize) -> impl Strategy<Value = PQWord> {
    prop::collection::vec(prop::bool::ANY, 0..=max).prop_map(|bits| {
        PQWord::new(
            bits.into_iter()
                .map(|b| if b { Letter::P } else { Letter::Q })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prepending_p_scales_by_half_alpha_squared(a in alpha(), w in word(4), m in 0usize..=6) {
        let spec = CoefficientSpec::geometric(a.clone()).unwrap();
        let mut letters = vec![Letter::P];
        letters.extend_from_slice(w.letters());
        let pw = PQWord::new(letters).unwrap();
        let lhs = rm_trace(&pw, &spec, m).unwrap();
        let rhs = rat(1, 2) * num_traits::pow(&a * &a, m) * rm_trace(&w, &spec, m).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn recursion_within_truncated_sum_bounds(a in alpha(), w in word(3), m in 0usize..=5) {
        let spec = CoefficientSpec::geometric(a.clone()).unwrap();
        let exact = rm_trace(&w, &spec, m).unwrap();
        let t = rm_truncated(&w, &a, m, 16).unwrap();
        prop_assert!(t.value <= exact);
        prop_assert!(exact <= &t.value + &t.tail_bound);
    }

    #[test]
    fn ratios_lie_in_unit_interval(a in alpha(), w in word(3)) {
        let p = quasinil::subspace::ratio_profile(&w, &a, 8).unwrap();
        for r in &p.rows {
            prop_assert!(r.ratio > Rational::zero() && r.ratio <= rat(1, 1));
        }
    }

    #[test]
    fn dyadic_integral_equals_combinatorial(vals in prop::collection::vec((-5i64..=5, 1i64..=4), 1..=6), order in 1usize..=6) {
        let spec = CoefficientSpec::explicit_real(vals.iter().map(|&(p, q)| rat(p, q)).collect());
        let n = spec.support_len().unwrap();
        let t = MomentTarget::XPower { order };
        let comb = moment_combinatorial(&spec, t, None, &Caps::default()).unwrap().exact.unwrap();
        prop_assert_eq!(rademacher_moment(&spec, t, n).unwrap().exact.unwrap(), comb);
    }

    #[test]
    fn histogram_total_is_count(a in alpha(), count in 1usize..=3000, seed in any::<u64>(), bins in 1usize..=40) {
        let run = sample_series(&a, count, seed, 24, bins).unwrap();
        prop_assert_eq!(run.histogram.total(), count as u64);
        let values = sample_values(quasinil::scalar::to_f64(&a), count.min(200), seed, 24);
        prop_assert!(values.iter().all(|x| x.abs() <= run.support));
    }
}
