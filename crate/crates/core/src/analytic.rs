//! Numerical evaluation of the outage probability.
//!
//! The direct link is independent of the selected relay's gains, so the
//! outage probability factorizes into `q_direct · ∬ I(relay outage)·f dz₁dz₂`,
//! where `q_direct` has a closed form (or a one-dimensional threshold search
//! for EDDF) and the double integral runs over the selected-pair density.
//!
//! The double integral uses a tensor midpoint rule for the indicator with
//! exact cell masses. The uniform grid is refined at the gains where the
//! indicator switches, which makes the DDF integral exact up to truncation:
//! at high SNR those switches sit at gains of order `1/ρ`, far inside the
//! first uniform cell.

use rayon::prelude::*;

use crate::baselines::Scheme;
use crate::channel::{GridMasses, SelectedPair};
use crate::ddf_nc::{relay_events, DdfParams, Frame};
use crate::eddf_nc::{total_rate_throughput, EddfMode, EddfParams};
use crate::error::{invalid, Error, Result};

/// Direct-link outage probability of RS-DDF&NC:
/// `1 − exp(−(2^{1.5R} − 1)/ρ)`.
pub fn p1(rate: f64, snr: f64) -> f64 {
    gain_cdf(rate_threshold(Frame::NetworkCoded, rate, snr))
}

/// `P[|h|² < t]` for a unit exponential gain.
fn gain_cdf(t: f64) -> f64 {
    -(-t).exp_m1()
}

/// Gain below which `(2/D)·log₂(1 + ρz) < rate`.
fn rate_threshold(frame: Frame, rate: f64, snr: f64) -> f64 {
    (0.5 * frame.slots() * rate * std::f64::consts::LN_2).exp_m1() / snr
}

/// Relay-side outage indicator `I(O)` of RS-DDF&NC.
pub fn indicator_o_ddf(params: &DdfParams, z1: f64, z2: f64) -> bool {
    relay_events(params, SelectedPair { z1, z2 }).any()
}

/// Gain at which the total-rate event `O₃` stops holding: the returned `t`
/// satisfies `O₃(t) = false` and `O₃(prev(t)) = true` up to the bisection
/// budget.
pub fn o3_threshold(split: &EddfParams) -> Result<f64> {
    o3_threshold_in(Frame::NetworkCoded, split)
}

const MAX_BISECTIONS: usize = 200;

fn o3_threshold_in(frame: Frame, split: &EddfParams) -> Result<f64> {
    let rate = split.base().rate();
    let in_outage = |z: f64| total_rate_throughput(frame, split, z) < rate;

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while in_outage(hi) {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Bracket(format!(
                "no upper bracket for the total-rate threshold at R = {rate}"
            )));
        }
    }
    if !in_outage(lo) {
        return Err(Error::Bracket("lower bracket is not in outage".into()));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if in_outage(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Gain threshold `t` such that the direct-link event is `{|h_{A,B}|² < t}`.
fn direct_threshold(frame: Frame, mode: &EddfMode) -> Result<f64> {
    match mode {
        EddfMode::Fallback(p) => Ok(rate_threshold(frame, p.rate(), p.snr())),
        EddfMode::Enhanced(s) => {
            let snr = s.base().snr();
            let t1 = rate_threshold(frame, s.rate1(), snr);
            let t2 = if s.beta() < 1.0 {
                rate_threshold(frame, s.rate2() / (1.0 - s.beta()), snr)
            } else {
                0.0
            };
            let t3 = o3_threshold_in(frame, s)?;
            Ok(t1.max(t2).max(t3))
        }
    }
}

/// Probability of `O₁ ∪ O₂ ∪ O₃` for the network-coded EDDF exchange.
pub fn direct_outage_prob_eddf(split: &EddfParams) -> Result<f64> {
    direct_threshold(Frame::NetworkCoded, &EddfMode::Enhanced(*split)).map(gain_cdf)
}

/// `q_direct` for any scheme.
pub fn direct_outage_probability(scheme: &Scheme) -> Result<f64> {
    direct_threshold(scheme.frame(), scheme.mode()).map(gain_cdf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    Midpoint,
}

/// Tensor-grid discretization of the selected-pair integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    z_max: f64,
    points: usize,
    rule: QuadratureRule,
    allow_fallback: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            z_max: 30.0,
            points: 2048,
            rule: QuadratureRule::Midpoint,
            allow_fallback: true,
        }
    }
}

impl QuadratureSpec {
    pub const MIN_Z_MAX: f64 = 20.0;
    pub const MIN_POINTS: usize = 256;

    /// `z_max` truncates each axis, `points` is the grid size per axis.
    pub fn new(z_max: f64, points: usize) -> Result<Self> {
        if !(z_max >= Self::MIN_Z_MAX && z_max.is_finite()) {
            return Err(invalid(format!("z_max must be at least {}, got {z_max}", Self::MIN_Z_MAX)));
        }
        if points < Self::MIN_POINTS {
            return Err(invalid(format!(
                "grid needs at least {} points per axis, got {points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self {
            z_max,
            points,
            ..Self::default()
        })
    }

    /// Reject EDDF schemes out of regime instead of integrating their DDF
    /// equivalent.
    pub fn forbid_fallback(mut self) -> Self {
        self.allow_fallback = false;
        self
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }
}

/// Quadrature value together with its grid-halving self-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// Same integral on a grid with half as many points per axis.
    pub coarse: f64,
    /// `|value − coarse|`.
    pub delta: f64,
}

/// Outage probability of `scheme` with `relays` relays by quadrature.
pub fn quadrature_outage(scheme: &Scheme, relays: usize, spec: &QuadratureSpec) -> Result<f64> {
    let q_direct = prepare(scheme, relays, spec)?;
    Ok(q_direct * relay_outage_mass(scheme, scheme.effective_relays(relays), spec.points, spec.z_max))
}

/// [`quadrature_outage`] plus the value at half resolution.
pub fn quadrature_with_check(
    scheme: &Scheme,
    relays: usize,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    let q_direct = prepare(scheme, relays, spec)?;
    if spec.points / 2 < QuadratureSpec::MIN_POINTS {
        return Err(invalid(format!(
            "self-check needs at least {} points per axis",
            2 * QuadratureSpec::MIN_POINTS
        )));
    }
    let effective = scheme.effective_relays(relays);
    let value = q_direct * relay_outage_mass(scheme, effective, spec.points, spec.z_max);
    let coarse = q_direct * relay_outage_mass(scheme, effective, spec.points / 2, spec.z_max);
    Ok(QuadratureResult {
        value,
        coarse,
        delta: (value - coarse).abs(),
    })
}

fn prepare(scheme: &Scheme, relays: usize, spec: &QuadratureSpec) -> Result<f64> {
    if relays == 0 {
        return Err(invalid("the network needs at least one relay"));
    }
    if scheme.kind().is_eddf() && scheme.split().is_none() && !spec.allow_fallback {
        let p = scheme.params();
        return Err(Error::Regime {
            gain: crate::eddf_nc::multiplexing_gain(p.rate(), p.snr()),
        });
    }
    direct_outage_probability(scheme)
}

/// Gains at which the relay-event indicator can change along either axis.
///
/// For DDF the indicator is constant on every rectangle between these
/// values: the decode times change at the capacity levels `J·R/k`, and for
/// each pair of decode times the relay links switch at one capacity level.
/// For EDDF the window events have curved boundaries; only the decode
/// thresholds are axis-aligned.
fn breakpoints(scheme: &Scheme) -> Vec<f64> {
    let gain_at = |snr: f64, capacity: f64| (capacity * std::f64::consts::LN_2).exp_m1() / snr;
    match scheme.mode() {
        EddfMode::Fallback(p) => {
            let (frame, rate, snr) = (p.frame() as i64, p.rate(), p.snr());
            let j = frame as f64;
            let d = scheme.frame().slots();
            let mut points: Vec<f64> = (1..frame).map(|k| gain_at(snr, j * rate / k as f64)).collect();
            let (listen, budget) = ((d - 1.0) * j, d * j * rate);
            points.extend((1 - frame..frame).map(|diff| gain_at(snr, budget / (listen + diff as f64))));
            points
        }
        EddfMode::Enhanced(s) => {
            let snr = s.base().snr();
            vec![gain_at(snr, s.r1() * snr.log2() / s.beta())]
        }
    }
}

/// Axis nodes: `points` uniform intervals on `[0, z_max]` refined by the
/// scheme's breakpoints.
fn axis_nodes(scheme: &Scheme, points: usize, z_max: f64) -> Vec<f64> {
    let h = z_max / points as f64;
    let mut nodes: Vec<f64> = (0..=points).map(|i| i as f64 * h).collect();
    nodes.extend(breakpoints(scheme).into_iter().filter(|&z| z > 0.0 && z < z_max));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

/// Mass of the relay-outage region: the indicator at each cell midpoint
/// times the exact cell mass, normalized by the mass of the grid so that an
/// indicator equal to one everywhere gives exactly one.
///
/// Rows are summed left to right and reduced in row order, so the result
/// does not depend on how rayon splits the work.
fn relay_outage_mass(scheme: &Scheme, relays: usize, points: usize, z_max: f64) -> f64 {
    let nodes = axis_nodes(scheme, points, z_max);
    let masses = GridMasses::new(&nodes, relays);
    let mid: Vec<f64> = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let rows: Vec<(f64, f64)> = (0..mid.len())
        .into_par_iter()
        .map(|i| {
            let mut hit = 0.0;
            let mut total = 0.0;
            for (j, &z2) in mid.iter().enumerate() {
                let m = masses.cell(i, j);
                total += m;
                if scheme.relay_outage(SelectedPair { z1: mid[i], z2 }) {
                    hit += m;
                }
            }
            (hit, total)
        })
        .collect();
    let (hit, total) = rows
        .iter()
        .fold((0.0, 0.0), |(a, b), (h, t)| (a + h, b + t));
    hit / total
}
