//! Outage probability of relay selection combined with dynamic and enhanced
//! dynamic decode-and-forward and network coding in two-hop two-way relay
//! networks under i.i.d. Rayleigh fading.
//!
//! Two independent routes compute the same probabilities:
//!
//! * [`montecarlo`] draws fading realizations, selects a relay and counts
//!   outage events;
//! * [`analytic`] integrates the relay-event indicator against the closed-form
//!   density of the selected relay's gains and multiplies by the direct-link
//!   outage probability.
//!
//! [`experiment`] drives parameter sweeps over both routes.

pub mod analytic;
pub mod baselines;
pub mod channel;
pub mod ddf_nc;
pub mod eddf_nc;
pub mod error;
pub mod experiment;
pub mod montecarlo;

pub use baselines::{Scheme, SchemeKind};
pub use channel::{NetworkRealization, RelayIndex, SelectedPair};
pub use ddf_nc::{DdfParams, OutageBreakdown, RelayEvents};
pub use eddf_nc::{EddfMode, EddfParams, RateSplitPolicy};
pub use error::{Error, Result};
