use proptest::prelude::*;

use relay_outage::analytic::{direct_outage_probability, quadrature_with_check, QuadratureSpec};
use relay_outage::experiment::{agrees, db_to_linear};
use relay_outage::montecarlo::{estimate, SimSpec};
use relay_outage::{DdfParams, RateSplitPolicy, Scheme, SchemeKind};

const KINDS: [SchemeKind; 6] = [
    SchemeKind::RsDdfNc,
    SchemeKind::RsEddfNc,
    SchemeKind::RsDdf,
    SchemeKind::RsEddf,
    SchemeKind::DdfNcRandom,
    SchemeKind::EddfNcRandom,
];

fn scheme(kind: SchemeKind, rate: f64, snr_db: f64) -> Scheme {
    let params = DdfParams::new(10, rate, db_to_linear(snr_db)).unwrap();
    Scheme::new(kind, params, RateSplitPolicy::default()).unwrap()
}

#[test]
fn monte_carlo_matches_quadrature_for_every_scheme() {
    let grid = QuadratureSpec::new(30.0, 512).unwrap();
    for kind in KINDS {
        for (relays, rate, snr_db) in [(1, 1.0, 5.0), (3, 2.0, 10.0), (4, 5.0, 20.0)] {
            let s = scheme(kind, rate, snr_db);
            let q = quadrature_with_check(&s, relays, &grid).unwrap();
            let e = estimate(&SimSpec::new(s, relays, 200_000, 7).unwrap()).unwrap();
            assert!(
                agrees(&e, q.value, q.delta),
                "{kind:?} L={relays} R={rate} {snr_db} dB: mc {} ± {} vs {}",
                e.p_hat,
                e.stderr,
                q.value
            );
        }
    }
}

#[test]
fn seed_reproduces_counts() {
    let s = scheme(SchemeKind::RsEddfNc, 5.0, 25.0);
    let a = estimate(&SimSpec::new(s, 6, 50_000, 11).unwrap()).unwrap();
    let b = estimate(&SimSpec::new(s, 6, 50_000, 11).unwrap()).unwrap();
    let c = estimate(&SimSpec::new(s, 6, 50_000, 12).unwrap()).unwrap();
    assert_eq!(a.outages, b.outages);
    assert_ne!(a.outages, c.outages);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimate_is_bracketed_and_below_direct_outage(
        k in 0usize..6,
        relays in 1usize..6,
        rate in 0.5f64..5.0,
        snr_db in 0.0f64..30.0,
        seed in any::<u64>(),
    ) {
        let s = scheme(KINDS[k], rate, snr_db);
        let e = estimate(&SimSpec::new(s, relays, 2_000, seed).unwrap()).unwrap();
        prop_assert!(e.ci95_lo <= e.p_hat && e.p_hat <= e.ci95_hi);
        prop_assert!(0.0 <= e.ci95_lo && e.ci95_hi <= 1.0);
        let q = direct_outage_probability(&s).unwrap();
        prop_assert!(e.outages == 0 || q > 0.0);
    }
}
