//! Seeded Monte Carlo estimation of outage probabilities.
//!
//! Trial `i` draws from its own ChaCha8 stream: the generator is keyed by
//! `seed` (expanded with `seed_from_u64`) and `i` is the stream number. The
//! estimate is therefore a pure function of the spec, whatever the number of
//! worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::baselines::Scheme;
use crate::channel::NetworkRealization;
use crate::ddf_nc::{direct_outage, DdfParams};
use crate::error::{invalid, Result};

/// Below this many outages (or non-outages) the interval is Clopper–Pearson.
pub const EXACT_INTERVAL_BELOW: u64 = 10;

const Z_95: f64 = 1.959_963_984_540_054;
const CHUNK: u64 = 8192;

/// Outage frequency with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: f64,
    /// `√(p̂(1 − p̂)/n)`.
    pub stderr: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub n_trials: u64,
    pub outages: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn from_counts(outages: u64, n_trials: u64, seed: u64) -> Result<Self> {
        if n_trials == 0 {
            return Err(invalid("at least one trial is required"));
        }
        if outages > n_trials {
            return Err(invalid(format!("{outages} outages exceed {n_trials} trials")));
        }
        let n = n_trials as f64;
        let p_hat = outages as f64 / n;
        let stderr = (p_hat * (1.0 - p_hat) / n).sqrt();
        let (ci95_lo, ci95_hi) = if outages.min(n_trials - outages) < EXACT_INTERVAL_BELOW {
            clopper_pearson(outages, n_trials)
        } else {
            ((p_hat - Z_95 * stderr).max(0.0), (p_hat + Z_95 * stderr).min(1.0))
        };
        Ok(Self {
            p_hat,
            stderr,
            ci95_lo: ci95_lo.min(p_hat),
            ci95_hi: ci95_hi.max(p_hat),
            n_trials,
            outages,
            seed,
        })
    }

    /// Whether the normal approximation was replaced by the exact interval.
    pub fn is_exact_interval(&self) -> bool {
        self.outages.min(self.n_trials - self.outages) < EXACT_INTERVAL_BELOW
    }

    pub fn contains(&self, p: f64) -> bool {
        (self.ci95_lo..=self.ci95_hi).contains(&p)
    }
}

/// Exact two-sided 95% binomial interval.
pub fn clopper_pearson(k: u64, n: u64) -> (f64, f64) {
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 { 0.0 } else { quantile(kf, nf - kf + 1.0, 0.025) };
    let hi = if k == n { 1.0 } else { quantile(kf + 1.0, nf - kf, 0.975) };
    (lo, hi)
}

/// Beta quantile by bisection on the regularized incomplete beta function.
/// The inverse shipped with statrs is only accurate to about 1e-3 relative
/// for the extreme shapes that arise here.
fn quantile(a: f64, b: f64, q: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..1100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One Monte Carlo cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub scheme: Scheme,
    pub relays: usize,
    pub n_trials: u64,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(scheme: Scheme, relays: usize, n_trials: u64, seed: u64) -> Result<Self> {
        if relays == 0 {
            return Err(invalid("the network needs at least one relay"));
        }
        if n_trials == 0 {
            return Err(invalid("at least one trial is required"));
        }
        Ok(Self {
            scheme,
            relays,
            n_trials,
            seed,
        })
    }
}

/// Generator for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Overall outage frequency of `spec.scheme`.
pub fn estimate(spec: &SimSpec) -> Result<Estimate> {
    let SimSpec {
        scheme,
        relays,
        n_trials,
        seed,
    } = *spec;
    if relays == 0 {
        return Err(invalid("the network needs at least one relay"));
    }
    let empty = NetworkRealization::new(0.0, vec![0.0; relays], vec![0.0; relays])?;
    let outages = count(n_trials, seed, || empty.clone(), |real, rng| {
        real.resample(rng);
        let relay = scheme.select(real, rng).expect("relay count is positive");
        scheme.outage_for_pair(real.direct(), real.pair(relay)).overall
    })?;
    Estimate::from_counts(outages, n_trials, seed)
}

/// Frequency of the RS-DDF&NC direct-link event over exponential draws.
pub fn estimate_direct_event(rate: f64, snr: f64, n_trials: u64, seed: u64) -> Result<Estimate> {
    // Frame length does not enter the direct event.
    let params = DdfParams::new(2, rate, snr)?;
    let outages = count(n_trials, seed, || (), |_, rng| {
        direct_outage(&params, rng.sample(Exp1))
    })?;
    Estimate::from_counts(outages, n_trials, seed)
}

/// Counts trials for which `trial` returns true. `scratch` builds per-chunk
/// state reused across that chunk's trials.
fn count<S, F>(n_trials: u64, seed: u64, scratch: impl Fn() -> S + Sync, trial: F) -> Result<u64>
where
    F: Fn(&mut S, &mut ChaCha8Rng) -> bool + Sync,
{
    if n_trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    let key = ChaCha8Rng::seed_from_u64(seed);
    let chunks = n_trials.div_ceil(CHUNK);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut state = scratch();
            let end = ((c + 1) * CHUNK).min(n_trials);
            (c * CHUNK..end)
                .filter(|&i| {
                    let mut rng = key.clone();
                    rng.set_stream(i);
                    trial(&mut state, &mut rng)
                })
                .count() as u64
        })
        .sum())
}
