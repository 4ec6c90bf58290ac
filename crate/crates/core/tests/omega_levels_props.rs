mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use selmer_core::arith::primes_up_to;
use selmer_core::frobenius::{frobenius_data, trace_of_frobenius, CurveSpec, TraceTable};
use selmer_core::gl2_density::is_omega_class;
use selmer_core::levels::{carayol_check, enumerate_admissible, CarayolCase, LevelVerdict};
use selmer_core::omega::{classify_prime, sieve_omega, ResidualRepSpec, TraceSource, Verdict};

fn spec() -> ResidualRepSpec {
    ResidualRepSpec::example_11a1_mod7().with_traces_up_to(5000)
}

#[test]
fn table_and_curve_sources_agree() {
    let curve = CurveSpec::cremona_11a1();
    let mut text = String::from("# p=7\n");
    for ell in primes_up_to(3000) {
        if let Ok(t) = trace_of_frobenius(&curve, ell) {
            text.push_str(&format!("{ell},{t}\n"));
        }
    }
    let table = TraceTable::parse(&text, None).unwrap();
    let from_table = ResidualRepSpec::new(7, 11, TraceSource::Table(table), true).unwrap();
    let a = sieve_omega(&spec(), 3000);
    let b = sieve_omega(&from_table, 3000);
    assert_eq!(a.classifications, b.classifications);
}

#[test]
fn sieve_is_order_independent_and_complete() {
    let s = spec();
    let sieve = sieve_omega(&s, 5000);
    let primes = common::primes_naive(5000);
    assert_eq!(
        sieve
            .classifications
            .iter()
            .map(|c| c.ell)
            .collect::<Vec<_>>(),
        primes
    );
    let mut shuffled = primes.clone();
    shuffled.shuffle(&mut common::rng(7));
    for ell in shuffled {
        let c = classify_prime(&s, ell).unwrap();
        let idx = primes.binary_search(&ell).unwrap();
        assert_eq!(c, sieve.classifications[idx]);
    }
}

#[test]
fn omega_primes_are_omega_class_frobenii() {
    let s = spec();
    for ell in sieve_omega(&s, 5000).omega {
        let m = [[(7 - ell % 7) % 7, 0], [0, 6]];
        assert!(is_omega_class(&m, 7).unwrap());
        let f = frobenius_data(&s, ell).unwrap();
        assert_eq!(f.trace, (m[0][0] + m[1][1]) % 7);
        assert_eq!(f.det, (m[0][0] * m[1][1]) % 7);
    }
}

#[test]
fn omega_primes_raise_via_case_one() {
    let s = spec();
    let omega = sieve_omega(&s, 5000).omega;
    assert!(!omega.is_empty());
    for ell in omega {
        match carayol_check(&s, 11 * ell).unwrap() {
            LevelVerdict::Admissible(f) => {
                assert_eq!(
                    f.raised.into_iter().collect::<Vec<_>>(),
                    vec![(ell, (1, CarayolCase::C1))]
                );
            }
            v => panic!("{ell}: {v:?}"),
        }
    }
}

#[test]
fn table_gaps_make_levels_unknown_not_rejected() {
    // only a_5 known: 22, 33 need a_2, a_3
    let table = TraceTable::parse("# p=7\n5,1\n", None).unwrap();
    let s = ResidualRepSpec::new(7, 11, TraceSource::Table(table), true).unwrap();
    let e = enumerate_admissible(&s, 60).unwrap();
    assert_eq!(e.admissible_levels(), vec![11, 55]);
    assert!(e.unknown_levels().contains(&22));
    assert!(sieve_omega(&s, 10)
        .classifications
        .iter()
        .any(|c| c.verdict == Verdict::MissingTrace));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn squarefree_omega_products_are_admissible(picks in prop::collection::vec(0usize..40, 0..4)) {
        let s = spec();
        let omega = sieve_omega(&s, 5000).omega;
        let mut chosen: Vec<u64> = picks.iter().map(|&i| omega[i % omega.len()]).collect();
        chosen.sort_unstable();
        chosen.dedup();
        let m: u128 = chosen.iter().map(|&q| q as u128).product();
        prop_assume!(m * 11 < u64::MAX as u128);
        let v = carayol_check(&s, 11 * m as u64).unwrap();
        prop_assert!(v.is_admissible(), "{:?}", v);
    }

    #[test]
    fn enumeration_is_monotone(x in 11u64..1500, extra in 0u64..1500) {
        let s = spec();
        let small = enumerate_admissible(&s, x).unwrap();
        let large = enumerate_admissible(&s, x + extra).unwrap();
        prop_assert!(small.count() <= large.count());
        prop_assert_eq!(&large.verdicts[..small.verdicts.len()], &small.verdicts[..]);
    }
}
