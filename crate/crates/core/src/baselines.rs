//! The comparison schemes and a single entry point, [`Scheme`], that
//! evaluates any of the six.
//!
//! RS-DDF and RS-EDDF drop the network-coded broadcast (phase 5), so the
//! exchange lasts `2J` intervals instead of `3J`. Their events follow from
//! the network-coded ones by removing phase 5's `J` intervals from every
//! window and charging each message `J·R` bits over `2J` uses instead of
//! `(3/2)·J·R` over `3J`. DDF&NC and EDDF&NC pick the relay uniformly at
//! random instead of by max-min selection.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{best_relay, random_relay, NetworkRealization, RelayIndex, SelectedPair};
use crate::ddf_nc::{self, direct_outage_in, relay_events_in, DdfParams, Frame, OutageBreakdown};
use crate::eddf_nc::{
    self, direct_outage_eddf_in, relay_events_eddf_in, EddfMode, EddfParams, RateSplitPolicy,
};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SchemeKind {
    RsDdfNc,
    RsEddfNc,
    RsDdf,
    RsEddf,
    DdfNcRandom,
    EddfNcRandom,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::RsDdfNc,
        SchemeKind::RsEddfNc,
        SchemeKind::RsDdf,
        SchemeKind::RsEddf,
        SchemeKind::DdfNcRandom,
        SchemeKind::EddfNcRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::RsDdfNc => "rs-ddf-nc",
            SchemeKind::RsEddfNc => "rs-eddf-nc",
            SchemeKind::RsDdf => "rs-ddf",
            SchemeKind::RsEddf => "rs-eddf",
            SchemeKind::DdfNcRandom => "ddf-nc-random",
            SchemeKind::EddfNcRandom => "eddf-nc-random",
        }
    }

    pub fn is_eddf(self) -> bool {
        matches!(
            self,
            SchemeKind::RsEddfNc | SchemeKind::RsEddf | SchemeKind::EddfNcRandom
        )
    }

    pub fn is_random(self) -> bool {
        matches!(self, SchemeKind::DdfNcRandom | SchemeKind::EddfNcRandom)
    }

    pub fn network_coded(self) -> bool {
        !matches!(self, SchemeKind::RsDdf | SchemeKind::RsEddf)
    }

    pub(crate) fn frame(self) -> Frame {
        if self.network_coded() {
            Frame::NetworkCoded
        } else {
            Frame::Plain
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownScheme(s.to_owned()))
    }
}

impl TryFrom<String> for SchemeKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SchemeKind> for String {
    fn from(k: SchemeKind) -> Self {
        k.name().to_owned()
    }
}

/// RS-DDF outage: phases 1–4 of RS-DDF&NC over `2J` intervals.
pub fn overall_outage_rs_ddf(params: &DdfParams, z_ab: f64, pair: SelectedPair) -> OutageBreakdown {
    OutageBreakdown::new(
        direct_outage_in(Frame::Plain, params, z_ab),
        relay_events_in(Frame::Plain, params, pair),
    )
}

/// RS-EDDF outage, or RS-DDF outage out of regime.
pub fn overall_outage_rs_eddf(mode: &EddfMode, z_ab: f64, pair: SelectedPair) -> OutageBreakdown {
    match mode {
        EddfMode::Enhanced(p) => OutageBreakdown::new(
            direct_outage_eddf_in(Frame::Plain, p, z_ab),
            relay_events_eddf_in(Frame::Plain, p, pair),
        ),
        EddfMode::Fallback(base) => overall_outage_rs_ddf(base, z_ab, pair),
    }
}

/// Outage of a random-selection scheme: draws the relay from `rng`, then
/// applies the network-coded event formulas to its gain pair.
pub fn overall_outage_random_selection<R: Rng + ?Sized>(
    scheme: &Scheme,
    real: &NetworkRealization,
    rng: &mut R,
) -> Result<OutageBreakdown> {
    if !scheme.kind.is_random() {
        return Err(invalid(format!("{} does not select relays at random", scheme.kind)));
    }
    let relay = random_relay(real.relays(), rng)?;
    Ok(scheme.outage_for_pair(real.direct(), real.pair(relay)))
}

/// A scheme with its parameters resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    kind: SchemeKind,
    mode: EddfMode,
}

impl Scheme {
    /// `policy` only matters for the EDDF variants and is ignored out of
    /// regime.
    pub fn new(kind: SchemeKind, params: DdfParams, policy: RateSplitPolicy) -> Result<Self> {
        let mode = if kind.is_eddf() {
            EddfMode::new(params, policy)?
        } else {
            EddfMode::Fallback(params)
        };
        Ok(Self { kind, mode })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn params(&self) -> &DdfParams {
        self.mode.base()
    }

    pub fn mode(&self) -> &EddfMode {
        &self.mode
    }

    /// The active rate split; `None` for DDF variants and out-of-regime EDDF.
    pub fn split(&self) -> Option<&EddfParams> {
        self.mode.split()
    }

    /// Relay count whose selection density governs the chosen pair: `L` for
    /// max-min selection, 1 for random selection.
    pub fn effective_relays(&self, relays: usize) -> usize {
        if self.kind.is_random() {
            1
        } else {
            relays
        }
    }

    pub(crate) fn frame(&self) -> Frame {
        self.kind.frame()
    }

    pub fn select<R: Rng + ?Sized>(&self, real: &NetworkRealization, rng: &mut R) -> Result<RelayIndex> {
        if self.kind.is_random() {
            random_relay(real.relays(), rng)
        } else {
            Ok(best_relay(real))
        }
    }

    /// Outage of the exchange through the relay with gains `pair`.
    pub fn outage_for_pair(&self, z_ab: f64, pair: SelectedPair) -> OutageBreakdown {
        match self.kind {
            SchemeKind::RsDdfNc | SchemeKind::DdfNcRandom => {
                ddf_nc::overall_outage(self.params(), z_ab, pair)
            }
            SchemeKind::RsEddfNc | SchemeKind::EddfNcRandom => {
                eddf_nc::overall_outage_eddf(&self.mode, z_ab, pair)
            }
            SchemeKind::RsDdf => overall_outage_rs_ddf(self.params(), z_ab, pair),
            SchemeKind::RsEddf => overall_outage_rs_eddf(&self.mode, z_ab, pair),
        }
    }

    /// Selects a relay (drawing from `rng` for the random variants) and
    /// evaluates the outage.
    pub fn outage<R: Rng + ?Sized>(&self, real: &NetworkRealization, rng: &mut R) -> Result<OutageBreakdown> {
        let relay = self.select(real, rng)?;
        Ok(self.outage_for_pair(real.direct(), real.pair(relay)))
    }

    /// Union of the relay-side events for the selected pair.
    pub fn relay_outage(&self, pair: SelectedPair) -> bool {
        let frame = self.frame();
        match self.mode {
            EddfMode::Enhanced(ref p) => relay_events_eddf_in(frame, p, pair).any(),
            EddfMode::Fallback(ref p) => relay_events_in(frame, p, pair).any(),
        }
    }

    /// Direct-link outage event alone.
    pub fn direct_outage(&self, z_ab: f64) -> bool {
        let frame = self.frame();
        match self.mode {
            EddfMode::Enhanced(ref p) => direct_outage_eddf_in(frame, p, z_ab),
            EddfMode::Fallback(ref p) => direct_outage_in(frame, p, z_ab),
        }
    }
}
