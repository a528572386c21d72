//! Outage events of relay selection with dynamic decode-and-forward and
//! network coding (RS-DDF&NC).
//!
//! The exchange takes five phases over `3J` symbol intervals: A→(relay, B)
//! for `J` intervals, B→(relay, A) for `J`, then the relay broadcasts the
//! XOR of both messages for the last `J`. The relay joins a direct
//! transmission once it has accumulated enough mutual information, which
//! takes `J′` intervals.
//!
//! The same event arithmetic, with phase 5 removed, drives the RS-DDF
//! baseline; [`Frame`] carries that difference.

use crate::channel::SelectedPair;
use crate::error::{invalid, Result};

/// Frame and link parameters shared by every scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdfParams {
    frame: u32,
    rate: f64,
    snr: f64,
}

impl DdfParams {
    /// `frame` is the codeword length `J` in symbol intervals, `rate` the
    /// spectral efficiency in bps/Hz and `snr` the linear effective SNR.
    pub fn new(frame: u32, rate: f64, snr: f64) -> Result<Self> {
        if frame < 2 {
            return Err(invalid(format!("frame length must be at least 2, got {frame}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid(format!("rate must be positive, got {rate}")));
        }
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(invalid(format!("SNR must be positive, got {snr}")));
        }
        Ok(Self { frame, rate, snr })
    }

    pub fn frame(&self) -> u32 {
        self.frame
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    /// `log₂(1 + ρ·z)`.
    pub fn capacity(&self, z: f64) -> f64 {
        capacity(self.snr, z)
    }
}

pub(crate) fn capacity(snr: f64, z: f64) -> f64 {
    (snr * z).ln_1p() / std::f64::consts::LN_2
}

/// Total frame duration in units of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Frame {
    /// Phases 1–5, `3J` intervals.
    NetworkCoded,
    /// Phases 1–4 only, `2J` intervals.
    Plain,
}

impl Frame {
    pub(crate) fn slots(self) -> f64 {
        match self {
            Frame::NetworkCoded => 3.0,
            Frame::Plain => 2.0,
        }
    }
}

/// Relay-side outage events of one exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RelayEvents {
    /// The relay fails to decode B's message.
    pub e1: bool,
    /// The relay fails to decode A's message.
    pub e2: bool,
    /// The relay-to-A link cannot carry B's message.
    pub relay_to_a: bool,
    /// The relay-to-B link cannot carry A's message.
    pub relay_to_b: bool,
}

impl RelayEvents {
    pub fn any(&self) -> bool {
        self.e1 || self.e2 || self.relay_to_a || self.relay_to_b
    }

    /// The events as seen after swapping the roles of A and B.
    pub fn mirrored(self) -> Self {
        Self {
            e1: self.e2,
            e2: self.e1,
            relay_to_a: self.relay_to_b,
            relay_to_b: self.relay_to_a,
        }
    }
}

/// Per-event view of one realization's outage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutageBreakdown {
    pub direct: bool,
    pub e1: bool,
    pub e2: bool,
    pub relay_to_a: bool,
    pub relay_to_b: bool,
    pub overall: bool,
}

impl OutageBreakdown {
    pub fn new(direct: bool, relay: RelayEvents) -> Self {
        Self {
            direct,
            e1: relay.e1,
            e2: relay.e2,
            relay_to_a: relay.relay_to_a,
            relay_to_b: relay.relay_to_b,
            overall: direct && relay.any(),
        }
    }

    pub fn relay_events(&self) -> RelayEvents {
        RelayEvents {
            e1: self.e1,
            e2: self.e2,
            relay_to_a: self.relay_to_a,
            relay_to_b: self.relay_to_b,
        }
    }

    /// Whether `overall` equals the direct event intersected with the union
    /// of the relay events.
    pub fn is_consistent(&self) -> bool {
        self.overall == (self.direct && self.relay_events().any())
    }
}

/// Number of intervals the relay listens before it can decode a message
/// received with gain `z`: `min(J, ⌈J·R / log₂(1 + ρz)⌉)`.
pub fn decode_time(params: &DdfParams, z: f64) -> u32 {
    let c = params.capacity(z);
    let j = params.frame as f64;
    if c <= 0.0 {
        return params.frame;
    }
    let needed = (j * params.rate / c).ceil();
    if needed >= j {
        params.frame
    } else {
        needed as u32
    }
}

/// Direct-link outage: `(2/3)·log₂(1 + ρ·z_ab) < R`.
pub fn direct_outage(params: &DdfParams, z_ab: f64) -> bool {
    direct_outage_in(Frame::NetworkCoded, params, z_ab)
}

pub(crate) fn direct_outage_in(frame: Frame, params: &DdfParams, z_ab: f64) -> bool {
    2.0 * params.capacity(z_ab) < frame.slots() * params.rate
}

/// Relay-side events `E₁`, `E₂`, `E_{l*,A}` and `E_{l*,B}`.
pub fn relay_events(params: &DdfParams, pair: SelectedPair) -> RelayEvents {
    relay_events_in(Frame::NetworkCoded, params, pair)
}

pub(crate) fn relay_events_in(frame: Frame, params: &DdfParams, pair: SelectedPair) -> RelayEvents {
    let j = params.frame as f64;
    let rate = params.rate;
    let c1 = params.capacity(pair.z1);
    let c2 = params.capacity(pair.z2);
    let decode_limit = j * rate / (j - 1.0);
    let ja = decode_time(params, pair.z1) as f64;
    let jb = decode_time(params, pair.z2) as f64;

    // Window (D−1)·J + J′_A − J′_B against a budget of D·J·R, D = 3 or 2.
    let listen = (frame.slots() - 1.0) * j;
    let budget = frame.slots() * j * rate;
    RelayEvents {
        e1: c2 < decode_limit,
        e2: c1 < decode_limit,
        relay_to_a: (listen + ja - jb) * c1 < budget,
        relay_to_b: (listen + jb - ja) * c2 < budget,
    }
}

/// Overall RS-DDF&NC outage: the direct link fails and at least one relay
/// event occurs.
pub fn overall_outage(params: &DdfParams, z_ab: f64, pair: SelectedPair) -> OutageBreakdown {
    OutageBreakdown::new(direct_outage(params, z_ab), relay_events(params, pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(frame: u32, rate: f64, snr: f64) -> DdfParams {
        DdfParams::new(frame, rate, snr).unwrap()
    }

    fn pair(z1: f64, z2: f64) -> SelectedPair {
        SelectedPair::new(z1, z2).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DdfParams::new(1, 1.0, 10.0).is_err());
        assert!(DdfParams::new(10, 0.0, 10.0).is_err());
        assert!(DdfParams::new(10, 1.0, -1.0).is_err());
        assert!(DdfParams::new(10, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn decode_time_examples() {
        let p = params(10, 1.0, 10.0);
        assert_eq!(decode_time(&p, 0.3), 5);
        assert_eq!(decode_time(&p, 0.0), 10);
        assert_eq!(decode_time(&p, 10.0), 2);
    }

    #[test]
    fn direct_outage_examples() {
        let p = params(10, 2.0, 10.0);
        assert!(direct_outage(&p, 0.6));
        assert!(!direct_outage(&p, 0.8));
        assert!(direct_outage(&p, 0.0));
        assert!(direct_outage(&params(10, 1e-9, 10.0), 0.0));
    }

    #[test]
    fn relay_events_strong_and_weak_links() {
        let p = params(10, 1.0, 10.0);
        assert_eq!(relay_events(&p, pair(10.0, 10.0)), RelayEvents::default());

        let weak = relay_events(&p, pair(0.01, 0.01));
        assert!(weak.e1 && weak.e2);

        // Either side of the decode threshold (2^{10/9} − 1)/10 ≈ 0.116012.
        assert!(relay_events(&p, pair(10.0, 0.1160)).e1);
        assert!(!relay_events(&p, pair(10.0, 0.1161)).e1);
    }

    #[test]
    fn overall_examples() {
        let p = params(10, 1.0, 10.0);
        let o = overall_outage(&p, 0.05, pair(10.0, 10.0));
        assert!(o.direct && !o.overall);
        assert_eq!(o.relay_events(), RelayEvents::default());

        let o = overall_outage(&p, 0.05, pair(0.01, 0.01));
        assert!(o.direct && o.e1 && o.overall);

        let o = overall_outage(&p, 1.0, pair(0.0, 0.0));
        assert!(!o.direct && !o.overall);
        assert!(o.e1 && o.e2);
    }

    #[test]
    fn breakdown_consistency_over_fuzzed_realizations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let p = params(
                rng.random_range(2..=20),
                rng.random_range(0.05..6.0),
                10f64.powf(rng.random_range(0.0..3.5)),
            );
            let z_ab = rng.random_range(0.0..3.0);
            let pr = pair(rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
            let o = overall_outage(&p, z_ab, pr);
            assert!(o.is_consistent());
            assert_eq!(
                o.overall,
                o.direct && ((o.e1 || o.relay_to_a) || (o.e2 || o.relay_to_b))
            );
        }
    }

    proptest! {
        #[test]
        fn swap_mirrors_relay_events(
            frame in 2u32..30,
            rate in 0.01f64..8.0,
            snr_db in -5.0f64..40.0,
            z_ab in 0.0f64..5.0,
            z1 in 0.0f64..8.0,
            z2 in 0.0f64..8.0,
        ) {
            let p = params(frame, rate, 10f64.powf(snr_db / 10.0));
            let ev = relay_events(&p, pair(z1, z2));
            prop_assert_eq!(relay_events(&p, pair(z2, z1)), ev.mirrored());
            prop_assert_eq!(
                overall_outage(&p, z_ab, pair(z1, z2)).overall,
                overall_outage(&p, z_ab, pair(z2, z1)).overall
            );
        }

        #[test]
        fn decode_failure_matches_full_frame(
            frame in 2u32..30,
            rate in 0.01f64..8.0,
            snr_db in -5.0f64..40.0,
            z1 in 0.0f64..8.0,
            z2 in 0.0f64..8.0,
        ) {
            let p = params(frame, rate, 10f64.powf(snr_db / 10.0));
            let ev = relay_events(&p, pair(z1, z2));
            prop_assert_eq!(ev.e1, decode_time(&p, z2) == frame);
            prop_assert_eq!(ev.e2, decode_time(&p, z1) == frame);
            let t = decode_time(&p, z1);
            prop_assert!((1..=frame).contains(&t));
        }

        #[test]
        fn direct_outage_is_monotone(
            rate in 0.01f64..8.0,
            snr_db in -5.0f64..40.0,
            z in 0.0f64..5.0,
            dz in 0.0f64..5.0,
        ) {
            let p = params(10, rate, 10f64.powf(snr_db / 10.0));
            if direct_outage(&p, z + dz) {
                prop_assert!(direct_outage(&p, z));
            }
        }
    }
}
