//! Rayleigh-fading gains of a two-hop two-way relay network and the
//! max-min relay selection rule.
//!
//! Every gain is a squared magnitude `|h|²` of a unit-variance circularly
//! symmetric complex Gaussian coefficient, i.e. an `Exp(1)` variate. Links are
//! reciprocal, so relay `l` is described by a single pair
//! `(|h_{A,l}|², |h_{l,B}|²)`.

use std::fmt;
use std::ops::Range;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{invalid, Result};

/// One fading draw: the direct A–B gain and the `L` relay gain pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    z_ab: f64,
    z_a: Vec<f64>,
    z_b: Vec<f64>,
}

impl NetworkRealization {
    pub fn new(z_ab: f64, z_a: Vec<f64>, z_b: Vec<f64>) -> Result<Self> {
        if z_a.is_empty() || z_a.len() != z_b.len() {
            return Err(invalid(format!(
                "relay gain vectors must be non-empty and equally long (got {} and {})",
                z_a.len(),
                z_b.len()
            )));
        }
        let all_valid = std::iter::once(&z_ab)
            .chain(&z_a)
            .chain(&z_b)
            .all(|g| *g >= 0.0);
        if !all_valid {
            return Err(invalid("channel gains must be non-negative"));
        }
        Ok(Self { z_ab, z_a, z_b })
    }

    /// Direct-link gain `|h_{A,B}|²`.
    pub fn direct(&self) -> f64 {
        self.z_ab
    }

    /// Gains `|h_{A,l}|²`, relay 1 first.
    pub fn to_a(&self) -> &[f64] {
        &self.z_a
    }

    /// Gains `|h_{l,B}|²`, relay 1 first.
    pub fn to_b(&self) -> &[f64] {
        &self.z_b
    }

    pub fn relays(&self) -> usize {
        self.z_a.len()
    }

    /// The gain pair of relay `index`.
    pub fn pair(&self, index: RelayIndex) -> SelectedPair {
        let i = index.zero_based();
        SelectedPair {
            z1: self.z_a[i],
            z2: self.z_b[i],
        }
    }

    /// Redraws every gain in place, keeping the relay count.
    ///
    /// Draw order is `z_ab`, then `(z_a[l], z_b[l])` for `l = 1..=L`.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.z_ab = rng.sample(Exp1);
        for (a, b) in self.z_a.iter_mut().zip(self.z_b.iter_mut()) {
            *a = rng.sample(Exp1);
            *b = rng.sample(Exp1);
        }
    }
}

/// 1-based relay index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelayIndex(usize);

impl RelayIndex {
    pub fn new(index: usize, relays: usize) -> Result<Self> {
        if index == 0 || index > relays {
            return Err(invalid(format!("relay index {index} outside 1..={relays}")));
        }
        Ok(Self(index))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn zero_based(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for RelayIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Gains of the relay that takes part in the exchange:
/// `z1 = |h_{A,l*}|²`, `z2 = |h_{B,l*}|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedPair {
    pub z1: f64,
    pub z2: f64,
}

impl SelectedPair {
    pub fn new(z1: f64, z2: f64) -> Result<Self> {
        if !(z1 >= 0.0 && z2 >= 0.0) {
            return Err(invalid("selected gains must be non-negative"));
        }
        Ok(Self { z1, z2 })
    }

    /// The pair seen from the other user.
    pub fn swapped(self) -> Self {
        Self {
            z1: self.z2,
            z2: self.z1,
        }
    }
}

fn check_relays(relays: usize) -> Result<()> {
    if relays == 0 {
        return Err(invalid("the network needs at least one relay"));
    }
    Ok(())
}

/// Draws a realization with `relays` relays.
pub fn sample_network<R: Rng + ?Sized>(relays: usize, rng: &mut R) -> Result<NetworkRealization> {
    check_relays(relays)?;
    let mut real = NetworkRealization {
        z_ab: 0.0,
        z_a: vec![0.0; relays],
        z_b: vec![0.0; relays],
    };
    real.resample(rng);
    Ok(real)
}

/// Reference sampler that draws complex coefficients with `N(0, 1/2)` real
/// and imaginary parts and squares them. Slower than [`sample_network`] and
/// only meant for validating the exponential shortcut.
pub fn sample_network_complex<R: Rng + ?Sized>(
    relays: usize,
    rng: &mut R,
) -> Result<NetworkRealization> {
    check_relays(relays)?;
    let mut gain = || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        0.5 * (re * re + im * im)
    };
    let z_ab = gain();
    let mut z_a = Vec::with_capacity(relays);
    let mut z_b = Vec::with_capacity(relays);
    for _ in 0..relays {
        z_a.push(gain());
        z_b.push(gain());
    }
    Ok(NetworkRealization { z_ab, z_a, z_b })
}

/// Max-min selection: the relay maximizing `min(|h_{A,l}|², |h_{l,B}|²)`.
/// Ties go to the lowest index.
pub fn best_relay(real: &NetworkRealization) -> RelayIndex {
    let mut best = 0;
    let mut best_q = f64::NEG_INFINITY;
    for (l, (a, b)) in real.z_a.iter().zip(&real.z_b).enumerate() {
        let q = a.min(*b);
        if q > best_q {
            best_q = q;
            best = l;
        }
    }
    RelayIndex(best + 1)
}

/// Uniformly random relay, as used by the schemes without selection.
pub fn random_relay<R: Rng + ?Sized>(relays: usize, rng: &mut R) -> Result<RelayIndex> {
    check_relays(relays)?;
    Ok(RelayIndex(rng.random_range(0..relays) + 1))
}

/// Joint density of the selected pair `(Z1, Z2)` under max-min selection
/// among `relays` i.i.d. relays:
/// `L·e^{-(z1+z2)}·(1 − e^{-2·min(z1, z2)})^{L−1}` on the positive quadrant.
pub fn selected_pair_pdf(z1: f64, z2: f64, relays: usize) -> Result<f64> {
    check_relays(relays)?;
    Ok(pair_density(z1, z2, relays))
}

pub(crate) fn pair_density(z1: f64, z2: f64, relays: usize) -> f64 {
    if z1 < 0.0 || z2 < 0.0 {
        return 0.0;
    }
    let u = z1.min(z2);
    relays as f64 * (-(z1 + z2)).exp() * (-(-2.0 * u).exp_m1()).powi(relays as i32 - 1)
}

/// CDF of `min(Z1, Z2)`, the best relay's bottleneck gain: `(1 − e^{-2u})^L`.
pub fn bottleneck_cdf(u: f64, relays: usize) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    (-(-2.0 * u).exp_m1()).powi(relays as i32)
}

/// Probability that the selected pair falls in the rectangle `x × y`,
/// evaluated in closed form.
pub fn selected_pair_mass(x: Range<f64>, y: Range<f64>, relays: usize) -> Result<f64> {
    check_relays(relays)?;
    if !(x.start >= 0.0 && y.start >= 0.0 && x.start <= x.end && y.start <= y.end) {
        return Err(invalid("rectangle must lie in the positive quadrant"));
    }
    let m = BranchIntegrals::new(relays);
    let mass = m.lower_branch(&x, &y) + m.lower_branch(&y, &x);
    Ok(mass.max(0.0))
}

/// Antiderivatives of the density restricted to `z1 ≤ z2`, where it
/// factorizes as `g(z1)·e^{-z2}` with `g(x) = L·e^{-x}(1 − e^{-2x})^{L−1}`.
struct BranchIntegrals {
    relays: usize,
    // L·C(L−1, k)·(−1)^k / (2k + 1)
    coeffs: Vec<f64>,
}

impl BranchIntegrals {
    fn new(relays: usize) -> Self {
        let n = relays - 1;
        let mut binom = 1.0;
        let mut coeffs = Vec::with_capacity(relays);
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            coeffs.push(relays as f64 * binom * sign / (2 * k + 1) as f64);
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
        Self { relays, coeffs }
    }

    /// `∫_0^x g(t) dt`.
    fn g_integral(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| -c * (-((2 * k + 1) as f64) * x).exp_m1())
            .sum()
    }

    /// `∫_0^x g(t)·e^{-t} dt = (1 − e^{-2x})^L / 2`.
    fn ge_integral(&self, x: f64) -> f64 {
        0.5 * bottleneck_cdf(x, self.relays)
    }

    /// Mass of `{z1 ∈ x, z2 ∈ y, z1 ≤ z2}`.
    fn lower_branch(&self, x: &Range<f64>, y: &Range<f64>) -> f64 {
        let (a, b, c, d) = (x.start, x.end, y.start, y.end);
        let mut mass = 0.0;
        // z1 below the y-interval: the whole of [c, d] is admissible.
        let hi = b.min(c);
        if a < hi {
            mass += (self.g_integral(hi) - self.g_integral(a)) * ((-c).exp() - (-d).exp());
        }
        // z1 inside the y-interval: z2 ranges over [z1, d].
        let lo = a.max(c);
        let hi = b.min(d);
        if lo < hi {
            mass += (self.ge_integral(hi) - self.ge_integral(lo))
                - (-d).exp() * (self.g_integral(hi) - self.g_integral(lo));
        }
        mass
    }
}

/// Exact cell masses of the selected-pair density on the tensor grid whose
/// two axes share the breakpoints `nodes`.
///
/// Off-diagonal cells lie entirely on one side of `z1 = z2`, where the
/// density factorizes, so their mass is a product of one-dimensional
/// integrals.
pub(crate) struct GridMasses {
    /// `∫ g` over each interval.
    lower: Vec<f64>,
    /// `∫ e^{-z}` over each interval.
    upper: Vec<f64>,
    /// Mass of each diagonal square.
    diagonal: Vec<f64>,
}

impl GridMasses {
    pub(crate) fn new(nodes: &[f64], relays: usize) -> Self {
        let m = BranchIntegrals::new(relays);
        let g: Vec<f64> = nodes.iter().map(|&x| m.g_integral(x)).collect();
        let cells = nodes.len() - 1;
        let mut lower = Vec::with_capacity(cells);
        let mut upper = Vec::with_capacity(cells);
        let mut diagonal = Vec::with_capacity(cells);
        for k in 0..cells {
            let (a, b) = (nodes[k], nodes[k + 1]);
            lower.push((g[k + 1] - g[k]).max(0.0));
            upper.push(-(-a).exp() * (a - b).exp_m1());
            let ge = m.ge_integral(b) - m.ge_integral(a);
            diagonal.push((2.0 * (ge - (-b).exp() * (g[k + 1] - g[k]))).max(0.0));
        }
        Self { lower, upper, diagonal }
    }

    /// Mass of `[x_i, x_{i+1}) × [x_j, x_{j+1})`.
    pub(crate) fn cell(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.lower[i] * self.upper[j],
            std::cmp::Ordering::Greater => self.upper[i] * self.lower[j],
            std::cmp::Ordering::Equal => self.diagonal[i],
        }
    }
}
