//! Outage events of relay selection with enhanced DDF and network coding
//! (RS-EDDF&NC).
//!
//! Above multiplexing gain 1/2 each source superposes a second codeword at
//! rate `R₂` over the tail `(βJ, J]` of its frame, while the first codeword
//! carries `R₁ = r₁·log₂ρ`. Outside `r ∈ (0.5, 1]` the scheme is plain
//! RS-DDF&NC.

use serde::{Deserialize, Serialize};

use crate::channel::SelectedPair;
use crate::ddf_nc::{self, capacity, DdfParams, Frame, OutageBreakdown, RelayEvents};
use crate::error::{invalid, Error, Result};

/// `r = R / log₂ρ`, or `+∞` when `ρ ≤ 1`.
pub fn multiplexing_gain(rate: f64, snr: f64) -> f64 {
    if snr <= 1.0 {
        return f64::INFINITY;
    }
    rate / snr.log2()
}

/// Whether the enhanced protocol is active, i.e. `r ∈ (0.5, 1]`.
pub fn in_eddf_regime(rate: f64, snr: f64) -> bool {
    let r = multiplexing_gain(rate, snr);
    r > 0.5 && r <= 1.0
}

/// How the rate is divided between the two codebooks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSplitPolicy {
    /// `r₁ = 1/2`, `R₁ = ½·log₂ρ`, `R₂ = R − R₁`, `β = R₁/R`.
    #[default]
    DefaultHalfGain,
    Explicit { beta: f64, r1: f64 },
}

/// Rate split of an EDDF exchange.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EddfParams {
    base: DdfParams,
    r1: f64,
    rate1: f64,
    rate2: f64,
    beta: f64,
}

impl EddfParams {
    pub fn base(&self) -> &DdfParams {
        &self.base
    }

    /// Multiplexing gain of the codebook-1 stream.
    pub fn r1(&self) -> f64 {
        self.r1
    }

    /// `R₁` in bps/Hz.
    pub fn rate1(&self) -> f64 {
        self.rate1
    }

    /// `R₂` in bps/Hz; zero exactly when `β = 1`.
    pub fn rate2(&self) -> f64 {
        self.rate2
    }

    /// Fraction of the frame before the second stream starts.
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Splits `base.rate()` into `(R₁, R₂, β)`.
///
/// Fails with [`Error::Regime`] outside `r ∈ (0.5, 1]`.
pub fn rate_split(base: DdfParams, policy: RateSplitPolicy) -> Result<EddfParams> {
    let rate = base.rate();
    let snr = base.snr();
    let gain = multiplexing_gain(rate, snr);
    if !in_eddf_regime(rate, snr) {
        return Err(Error::Regime { gain });
    }
    let log_snr = snr.log2();
    match policy {
        RateSplitPolicy::DefaultHalfGain => {
            let rate1 = 0.5 * log_snr;
            Ok(EddfParams {
                base,
                r1: 0.5,
                rate1,
                rate2: rate - rate1,
                beta: rate1 / rate,
            })
        }
        RateSplitPolicy::Explicit { beta, r1 } => {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(invalid(format!("beta must lie in (0, 1], got {beta}")));
            }
            if !(r1 > 0.0 && r1.is_finite()) {
                return Err(invalid(format!("r1 must be positive, got {r1}")));
            }
            let rate1 = r1 * log_snr;
            let mut rate2 = rate - rate1;
            if rate2.abs() <= 1e-12 * rate {
                rate2 = 0.0;
            }
            if rate2 < 0.0 {
                return Err(invalid(format!(
                    "r1 = {r1} gives R1 = {rate1} above the total rate {rate}"
                )));
            }
            if (rate2 == 0.0) != (beta == 1.0) {
                return Err(invalid(format!(
                    "R2 = {rate2} and beta = {beta}: the second stream is empty exactly when beta = 1"
                )));
            }
            Ok(EddfParams {
                base,
                r1,
                rate1,
                rate2,
                beta,
            })
        }
    }
}

/// An EDDF exchange after the regime rule has been applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EddfMode {
    Enhanced(EddfParams),
    /// Out of regime: identical to DDF.
    Fallback(DdfParams),
}

impl EddfMode {
    pub fn new(base: DdfParams, policy: RateSplitPolicy) -> Result<Self> {
        if in_eddf_regime(base.rate(), base.snr()) {
            rate_split(base, policy).map(EddfMode::Enhanced)
        } else {
            Ok(EddfMode::Fallback(base))
        }
    }

    pub fn base(&self) -> &DdfParams {
        match self {
            EddfMode::Enhanced(p) => &p.base,
            EddfMode::Fallback(p) => p,
        }
    }

    pub fn split(&self) -> Option<&EddfParams> {
        match self {
            EddfMode::Enhanced(p) => Some(p),
            EddfMode::Fallback(_) => None,
        }
    }
}

/// Fraction of the frame the relay listens before decoding a message at
/// gain `z`: `α = r₁·log₂ρ / log₂(1 + ρz)`, `+∞` for `z = 0`.
pub fn alpha(r1: f64, snr: f64, z: f64) -> f64 {
    let c = capacity(snr, z);
    if c <= 0.0 {
        return f64::INFINITY;
    }
    r1 * snr.log2() / c
}

/// Direct-link outage `O₁ ∪ O₂ ∪ O₃`.
pub fn direct_outage_eddf(params: &EddfParams, z_ab: f64) -> bool {
    direct_outage_eddf_in(Frame::NetworkCoded, params, z_ab)
}

/// Left side of the total-rate event `O₃`,
/// `(2/D)·[β·log₂(1+ρz) + (1−β)·log₂(1+2ρz)]` for a frame of `D·J` intervals.
pub(crate) fn total_rate_throughput(frame: Frame, params: &EddfParams, z: f64) -> f64 {
    let snr = params.base.snr();
    let beta = params.beta;
    2.0 * (beta * capacity(snr, z) + (1.0 - beta) * capacity(2.0 * snr, z)) / frame.slots()
}

pub(crate) fn direct_outage_eddf_in(frame: Frame, params: &EddfParams, z_ab: f64) -> bool {
    let d = frame.slots();
    let c = params.base.capacity(z_ab);
    let o1 = 2.0 * c < d * params.rate1;
    let o2 = params.beta < 1.0 && 2.0 * (1.0 - params.beta) * c < d * params.rate2;
    let o3 = total_rate_throughput(frame, params, z_ab) < params.base.rate();
    o1 || o2 || o3
}

/// Relay-side events with `α` decode fractions in place of `J′/J`.
pub fn relay_events_eddf(params: &EddfParams, pair: SelectedPair) -> RelayEvents {
    relay_events_eddf_in(Frame::NetworkCoded, params, pair)
}

pub(crate) fn relay_events_eddf_in(frame: Frame, params: &EddfParams, pair: SelectedPair) -> RelayEvents {
    let snr = params.base.snr();
    let d = frame.slots();
    let alpha_a = alpha(params.r1, snr, pair.z1);
    let alpha_b = alpha(params.r1, snr, pair.z2);
    let c1 = capacity(snr, pair.z1);
    let c2 = capacity(snr, pair.z2);
    // A dead link is in outage; this also keeps ∞·0 out of the window term.
    let window = |c: f64, own: f64, other: f64| {
        c <= 0.0 || (d - 1.0 + own - other) / d * c < params.rate1
    };
    RelayEvents {
        e1: params.beta < alpha_b,
        e2: params.beta < alpha_a,
        relay_to_a: window(c1, alpha_a, alpha_b),
        relay_to_b: window(c2, alpha_b, alpha_a),
    }
}

/// Overall RS-EDDF&NC outage, or RS-DDF&NC outage out of regime.
pub fn overall_outage_eddf(mode: &EddfMode, z_ab: f64, pair: SelectedPair) -> OutageBreakdown {
    match mode {
        EddfMode::Enhanced(p) => OutageBreakdown::new(
            direct_outage_eddf(p, z_ab),
            relay_events_eddf(p, pair),
        ),
        EddfMode::Fallback(base) => ddf_nc::overall_outage(base, z_ab, pair),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const SNR_15DB: f64 = 31.622_776_601_683_793;

    fn base(rate: f64, snr: f64) -> DdfParams {
        DdfParams::new(10, rate, snr).unwrap()
    }

    fn pair(z1: f64, z2: f64) -> SelectedPair {
        SelectedPair::new(z1, z2).unwrap()
    }

    #[test]
    fn multiplexing_gain_examples() {
        let r = multiplexing_gain(3.0, SNR_15DB);
        assert_relative_eq!(r, 0.602_059_991_327_962_4, max_relative = 1e-12);
        assert!(in_eddf_regime(3.0, SNR_15DB));

        let r = multiplexing_gain(3.0, 1000.0);
        assert_relative_eq!(r, std::f64::consts::LOG10_2, max_relative = 1e-12);
        assert!(!in_eddf_regime(3.0, 1000.0));

        assert_eq!(multiplexing_gain(3.0, 2.0), 3.0);
        assert!(!in_eddf_regime(3.0, 2.0));
        assert_eq!(multiplexing_gain(1.0, 1.0), f64::INFINITY);
        assert_eq!(multiplexing_gain(1.0, 0.5), f64::INFINITY);
        assert!(in_eddf_regime(1.0, 2.0));
    }

    #[test]
    fn default_split_values() {
        let p = rate_split(base(3.0, SNR_15DB), RateSplitPolicy::DefaultHalfGain).unwrap();
        assert_relative_eq!(p.rate1(), 2.491_446_071_165_522, max_relative = 1e-12);
        assert_relative_eq!(p.rate2(), 0.508_553_928_834_478, max_relative = 1e-11);
        assert_relative_eq!(p.beta(), 0.830_482_023_721_840_6, max_relative = 1e-12);
        assert_eq!(p.r1(), 0.5);
    }

    #[test]
    fn explicit_split_passes_through() {
        let policy = RateSplitPolicy::Explicit { beta: 0.5, r1: 0.5 };
        let p = rate_split(base(3.0, SNR_15DB), policy).unwrap();
        assert_eq!(p.beta(), 0.5);
        assert_relative_eq!(p.rate1(), 2.491_446_071_165_522, max_relative = 1e-12);
        assert_relative_eq!(p.rate2(), 0.508_553_928_834_478, max_relative = 1e-11);
    }

    #[test]
    fn split_errors() {
        // r ≈ 0.4
        let snr = 2f64.powf(3.0 / 0.4);
        assert!(matches!(
            rate_split(base(3.0, snr), RateSplitPolicy::DefaultHalfGain),
            Err(Error::Regime { .. })
        ));
        let b = base(3.0, SNR_15DB);
        for (beta, r1) in [(0.0, 0.5), (1.2, 0.5), (0.5, 0.0), (0.5, 0.7), (1.0, 0.5)] {
            let err = rate_split(b, RateSplitPolicy::Explicit { beta, r1 }).unwrap_err();
            assert!(matches!(err, Error::InvalidParameter(_)), "{beta} {r1}: {err}");
        }
        // β = 1 with the whole rate on stream 1.
        let r = multiplexing_gain(3.0, SNR_15DB);
        let p = rate_split(b, RateSplitPolicy::Explicit { beta: 1.0, r1: r }).unwrap();
        assert_eq!(p.rate2(), 0.0);
        assert!(rate_split(b, RateSplitPolicy::Explicit { beta: 0.9, r1: r }).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert_relative_eq!(alpha(0.6, 100.0, 0.99), 0.6, max_relative = 1e-12);
        assert_eq!(alpha(0.6, 100.0, 0.0), f64::INFINITY);
        assert_relative_eq!(alpha(0.5, 16.0, 3.0), 0.356_207_187_108_022_2, max_relative = 1e-12);
    }

    fn explicit(rate: f64, snr: f64, beta: f64, r1: f64) -> EddfParams {
        rate_split(base(rate, snr), RateSplitPolicy::Explicit { beta, r1 }).unwrap()
    }

    #[test]
    fn direct_event_o3_boundary() {
        // β = 1/2, R = 2, ρ = 10: O₃ holds below (−30 + √51300)/400.
        let p = explicit(2.0, 10.0, 0.5, 0.5);
        let root = 0.491_237_582_645_306_2;
        let f = |z| total_rate_throughput(Frame::NetworkCoded, &p, z);
        assert!(f(root - 1e-9) < 2.0 && f(root + 1e-9) > 2.0);
        // z_ab = 0.5 lies above the O₃ boundary.
        assert!(f(0.5) >= 2.0);
        assert!(direct_outage_eddf(&p, 0.0));
    }

    #[test]
    fn degenerate_second_stream_disables_o2() {
        let r = multiplexing_gain(3.0, SNR_15DB);
        let p = explicit(3.0, SNR_15DB, 1.0, r);
        for z in [0.0, 0.01, 0.5, 3.0, 100.0] {
            let c = p.base().capacity(z);
            let o1 = 2.0 * c < 3.0 * p.rate1();
            let o3 = total_rate_throughput(Frame::NetworkCoded, &p, z) < 3.0;
            assert_eq!(direct_outage_eddf(&p, z), o1 || o3);
        }
    }

    #[test]
    fn relay_event_examples() {
        let p = rate_split(base(3.0, SNR_15DB), RateSplitPolicy::Explicit { beta: 0.8, r1: 0.5 })
            .unwrap();
        // α_B > 0.8 needs log₂(1+ρz₂) < R₁/0.8.
        let z2 = 0.05;
        assert!(alpha(0.5, SNR_15DB, z2) > 0.8);
        assert!(relay_events_eddf(&p, pair(5.0, z2)).e1);

        // Equal gains cancel the α terms.
        for z in [0.05, 0.2, 1.0, 4.0] {
            let ev = relay_events_eddf(&p, pair(z, z));
            assert_eq!(ev.relay_to_a, 2.0 / 3.0 * p.base().capacity(z) < p.rate1());
            assert_eq!(ev.relay_to_a, ev.relay_to_b);
        }

        let ev = relay_events_eddf(&p, pair(0.0, 0.0));
        assert!(ev.e1 && ev.e2 && ev.relay_to_a && ev.relay_to_b);
    }

    #[test]
    fn fallback_is_ddf() {
        let b = base(1.0, 1000.0);
        let mode = EddfMode::new(b, RateSplitPolicy::DefaultHalfGain).unwrap();
        assert!(mode.split().is_none());
        for (z_ab, z1, z2) in [(0.001, 0.001, 5.0), (0.0005, 0.02, 0.0001), (3.0, 0.1, 0.1)] {
            assert_eq!(
                overall_outage_eddf(&mode, z_ab, pair(z1, z2)),
                ddf_nc::overall_outage(&b, z_ab, pair(z1, z2))
            );
        }
    }

    #[test]
    fn perfect_direct_link_never_outage() {
        let mode = EddfMode::new(base(3.0, SNR_15DB), RateSplitPolicy::DefaultHalfGain).unwrap();
        assert!(mode.split().is_some());
        assert!(!overall_outage_eddf(&mode, 1e6, pair(0.0, 0.0)).overall);
    }

    #[test]
    fn breakdown_recomposes_over_fuzzed_inputs() {
        use rand::{Rng, SeedableRng};
        let mode = EddfMode::new(base(3.0, SNR_15DB), RateSplitPolicy::DefaultHalfGain).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100_000 {
            let z_ab = rng.random_range(0.0..4.0);
            let pr = pair(rng.random_range(0.0..4.0), rng.random_range(0.0..4.0));
            let o = overall_outage_eddf(&mode, z_ab, pr);
            assert!(o.is_consistent());
            assert_eq!(o.overall, o.direct && (o.e1 || o.e2 || o.relay_to_a || o.relay_to_b));
        }
    }

    proptest! {
        #[test]
        fn out_of_regime_matches_ddf(
            rate in 0.05f64..6.0,
            snr_db in -10.0f64..45.0,
            z_ab in 0.0f64..4.0,
            z1 in 0.0f64..6.0,
            z2 in 0.0f64..6.0,
        ) {
            let snr = 10f64.powf(snr_db / 10.0);
            prop_assume!(!in_eddf_regime(rate, snr));
            let b = base(rate, snr);
            let mode = EddfMode::new(b, RateSplitPolicy::DefaultHalfGain).unwrap();
            prop_assert_eq!(
                overall_outage_eddf(&mode, z_ab, pair(z1, z2)),
                ddf_nc::overall_outage(&b, z_ab, pair(z1, z2))
            );
        }

        #[test]
        fn swap_symmetry(
            gain in 0.501f64..1.0,
            snr_db in 3.0f64..40.0,
            z_ab in 0.0f64..4.0,
            z1 in 0.0f64..6.0,
            z2 in 0.0f64..6.0,
        ) {
            let snr = 10f64.powf(snr_db / 10.0);
            let mode = EddfMode::new(base(gain * snr.log2(), snr), RateSplitPolicy::DefaultHalfGain)
                .unwrap();
            prop_assert!(mode.split().is_some());
            let p = mode.split().unwrap();
            prop_assert_eq!(relay_events_eddf(p, pair(z2, z1)), relay_events_eddf(p, pair(z1, z2)).mirrored());
            prop_assert_eq!(
                overall_outage_eddf(&mode, z_ab, pair(z1, z2)).overall,
                overall_outage_eddf(&mode, z_ab, pair(z2, z1)).overall
            );
        }

        #[test]
        fn default_policy_keeps_second_stream(
            gain in 0.5f64..1.0,
            snr_db in 1.0f64..40.0,
        ) {
            let snr = 10f64.powf(snr_db / 10.0);
            let rate = gain * snr.log2();
            let p = rate_split(base(rate, snr), RateSplitPolicy::DefaultHalfGain);
            if in_eddf_regime(rate, snr) {
                let p = p.unwrap();
                prop_assert!(p.rate1() < rate);
                prop_assert!(p.rate2() > 0.0 && p.beta() < 1.0);
                prop_assert!((p.rate1() + p.rate2() - rate).abs() <= 1e-12 * rate);
            } else {
                prop_assert!(p.is_err());
            }
        }
    }
}
