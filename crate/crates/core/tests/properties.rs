use proptest::prelude::*;
use qrenewal::laplace::{self, Ordering};
use qrenewal::linalg::C64;
use qrenewal::{ModifiedWtdSequence, RenewalSpec, SuperOp, WaitingTime};

fn waiting_time() -> impl Strategy<Value = WaitingTime> {
    prop_oneof![
        (0.05..20.0f64).prop_map(|r| WaitingTime::exponential(r).unwrap()),
        (1u32..6, 0.05..20.0f64).prop_map(|(n, r)| WaitingTime::erlang(n, r).unwrap()),
        prop::collection::vec(0.05..20.0f64, 1..5).prop_map(|r| WaitingTime::hypoexponential(r).unwrap()),
    ]
}

fn frequency() -> impl Strategy<Value = C64> {
    (0.01..50.0f64, -100.0..100.0f64).prop_map(|(re, im)| C64::new(re, im))
}

proptest! {
    #[test]
    fn survival_and_density_transforms_complement(w in waiting_time(), u in frequency()) {
        let lhs = u * w.laplace_survival(u).unwrap() + w.laplace_pdf(u).unwrap();
        prop_assert!((lhs - 1.0).norm() < 1e-10, "residual {}", (lhs - 1.0).norm());
    }

    #[test]
    fn survival_is_monotone(w in waiting_time(), a in 0.0..10.0f64, b in 0.0..10.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(w.survival(hi).unwrap() <= w.survival(lo).unwrap() + 1e-15);
    }

    #[test]
    fn resolvent_identity_holds(
        rates in prop::array::uniform3(0.0..3.0f64),
        gamma in 0.0..1.0f64,
        w in waiting_time(),
        u in frequency(),
    ) {
        let spec = RenewalSpec::renewal(
            SuperOp::decay_generator(rates),
            SuperOp::amplitude_damping(gamma).unwrap(),
            ModifiedWtdSequence::unmodified(w),
            Ordering::Forward,
        ).unwrap();
        prop_assert!(laplace::identity_fs_check(&spec, u).unwrap() < 1e-9);
    }
}
