use proptest::prelude::*;
use weyl_core::exactzero::{certify_zero, RationalPoint};
use weyl_core::families::{family_point, Family, FamilyPoint};
use weyl_core::fractal::{cantor_measure, cantor_sample, CantorRealization, Rect};
use weyl_core::primes::sieve;
use weyl_core::sumcore::{eval_direct, eval_incremental, TorusPoint};

fn odd_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(sieve(200).into_iter().filter(|&p| p > 2).collect::<Vec<_>>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_agree(coords in prop::collection::vec(0.0f64..1.0, 1..=6), n in 1u64..5000) {
        let x = TorusPoint::new(&coords).unwrap();
        let a = eval_incremental(&x, n).unwrap();
        let b = eval_direct(&x, n).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * n as f64);
    }

    #[test]
    fn rational_point_text_round_trip(nums in prop::collection::vec(0u64..1000, 1..5), m in 2u64..1000) {
        let pt = RationalPoint::new(&nums, m).unwrap();
        let back: RationalPoint = pt.to_string().parse().unwrap();
        prop_assert_eq!(back, pt);
    }

    #[test]
    fn gauss_family_vanishes(p in odd_prime(), k in 0u64..1000) {
        let b = 2 * (k % p) + 1;
        prop_assume!(b % p != 0);
        let fp = family_point(Family::Q, p, 2, &[b]).unwrap();
        let cert = certify_zero(&fp.point, fp.vanishing_span).unwrap();
        prop_assert!(cert.verified && cert.mechanism.is_exact());
        prop_assert_eq!(FamilyPoint::from_line(&fp.to_line()).unwrap(), fp);
    }

    #[test]
    fn cantor_measure_bounded_by_density(seed in any::<u64>(), depth in 0u32..7,
                                         x0 in 0.0f64..1.0, y0 in 0.0f64..1.0, w in 0.0f64..1.0, h in 0.0f64..1.0) {
        let real = cantor_sample(depth, seed).unwrap();
        let rect = Rect::new(x0, y0, (x0 + w).min(1.0), (y0 + h).min(1.0)).unwrap();
        let m = cantor_measure(&real, &rect);
        let cap = rect.area() * (4.0f64 / 3.0).powi(depth as i32);
        prop_assert!(m >= 0.0 && m <= cap * (1.0 + 1e-12) + 1e-15);
        prop_assert_eq!(CantorRealization::from_text(&real.to_text()).unwrap(), real);
    }
}
