//! Closed-form thresholds: Rényi entropy, per-base read divergence, the
//! alignment condition and its noise threshold, and Lander–Waterman coverage.
//!
//! All logarithms are base 2, so entropies and divergences are in bits.

use crate::error::{Error, Result};
use crate::genome::{BaseDistribution, NoiseChannel, BASES};

/// Rényi entropy of order 2, `-log2 Σ Q_s²`.
pub fn renyi2(q: &BaseDistribution) -> f64 {
    let collision: f64 = q.probs().iter().map(|p| p * p).sum();
    // exact zero for a point mass instead of -0.0
    (-collision.log2()).max(0.0)
}

/// `I(S=s;Y) = Σ_y π(y|s) log2(π(y|s) / F_Q(y))`, the divergence between the
/// channel row of `s` and the output marginal.
pub fn per_base_divergence(base: usize, channel: &NoiseChannel, q: &BaseDistribution) -> Result<f64> {
    let marginal = channel.output_marginal(q);
    divergence_with_marginal(base, channel, &marginal)
}

fn divergence_with_marginal(base: usize, channel: &NoiseChannel, marginal: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (y, &p) in channel.row(base).iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        if marginal[y] == 0.0 {
            return Err(Error::InfiniteDivergence { base: BASES[base] as char, symbol: channel.alphabet()[y] as char });
        }
        total += p * (p / marginal[y]).log2();
    }
    // a row equal to the marginal can round to a tiny negative
    Ok(total.max(0.0))
}

/// Minimum per-base divergence over the four bases.
pub fn i_read(channel: &NoiseChannel, q: &BaseDistribution) -> Result<f64> {
    let marginal = channel.output_marginal(q);
    (0..4).try_fold(f64::INFINITY, |m, s| Ok(m.min(divergence_with_marginal(s, channel, &marginal)?)))
}

/// Which right-hand side the alignment condition compares `I_read` against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConditionMode {
    /// `I_read > H₂`.
    AsPrinted,
    /// `I_read > H₂ / 2`; reproduces a threshold of 0.19 for the uniform symmetric case.
    #[default]
    ExampleConsistent,
}

impl ConditionMode {
    pub fn threshold(self, h2: f64) -> f64 {
        match self {
            ConditionMode::AsPrinted => h2,
            ConditionMode::ExampleConsistent => h2 / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConditionMode::AsPrinted => "as_printed",
            ConditionMode::ExampleConsistent => "example_consistent",
        }
    }
}

impl std::str::FromStr for ConditionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as_printed" | "as-printed" => Ok(Self::AsPrinted),
            "example_consistent" | "example-consistent" => Ok(Self::ExampleConsistent),
            other => Err(Error::Parse(format!("unknown condition mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub renyi2: f64,
    pub per_base_divergence: [f64; 4],
    pub i_read: f64,
    /// `2 / H₂`, infinite for a point-mass source.
    pub lcrit: f64,
    pub condition_mode: ConditionMode,
    pub condition_satisfied: bool,
    pub margin: f64,
}

pub fn threshold_condition(q: &BaseDistribution, channel: &NoiseChannel, mode: ConditionMode) -> Result<ThresholdReport> {
    let h2 = renyi2(q);
    let marginal = channel.output_marginal(q);
    let mut per_base = [0.0; 4];
    for (s, slot) in per_base.iter_mut().enumerate() {
        *slot = divergence_with_marginal(s, channel, &marginal)?;
    }
    let i_read = per_base.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = i_read - mode.threshold(h2);
    Ok(ThresholdReport {
        renyi2: h2,
        per_base_divergence: per_base,
        i_read,
        lcrit: lcrit(q).unwrap_or(f64::INFINITY),
        condition_mode: mode,
        condition_satisfied: margin > 0.0,
        margin,
    })
}

/// Margin of the alignment condition for the symmetric channel with error rate `delta`.
pub fn symmetric_margin(q: &BaseDistribution, delta: f64, mode: ConditionMode) -> Result<f64> {
    let channel = NoiseChannel::symmetric(delta)?;
    Ok(i_read(&channel, q)? - mode.threshold(renyi2(q)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaStar {
    Root(f64),
    /// The condition fails for every positive error rate.
    Infeasible,
}

pub const DELTA_STAR_TOL: f64 = 1e-6;
const DELTA_SEARCH_MAX: f64 = 0.75;

/// Largest symmetric error rate satisfying the alignment condition, by bisection on `[0, 0.75]`.
pub fn delta_star(q: &BaseDistribution, mode: ConditionMode) -> Result<DeltaStar> {
    let margin = |d: f64| symmetric_margin(q, d, mode);
    if margin(0.0)? <= 0.0 {
        return Ok(DeltaStar::Infeasible);
    }
    let (mut lo, mut hi) = (0.0, DELTA_SEARCH_MAX);
    if margin(hi)? > 0.0 {
        return Ok(DeltaStar::Root(hi));
    }
    while hi - lo > DELTA_STAR_TOL {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DeltaStar::Root(0.5 * (lo + hi)))
}

/// Critical normalized read length `2 / H₂`.
pub fn lcrit(q: &BaseDistribution) -> Result<f64> {
    let h2 = renyi2(q);
    if h2 <= 0.0 {
        return Err(Error::InfiniteLcrit);
    }
    Ok(2.0 / h2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEstimate {
    pub ncov: u64,
    pub coverage_depth: f64,
    pub arrival_rate: f64,
}

/// Reads needed to cover a genome of length `g` with reads of length `l`
/// with failure probability `eps`.
pub fn lander_waterman(g: u64, l: u64, eps: f64) -> Result<CoverageEstimate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Range(format!("ε = {eps} must lie in (0,1)")));
    }
    if l == 0 || l > g {
        return Err(Error::Range(format!("read length {l} must lie in [1, {g}]")));
    }
    let (gf, lf) = (g as f64, l as f64);
    let depth = (gf / (lf * eps)).ln();
    let ncov = ((gf / lf) * depth).ceil().max(1.0) as u64;
    Ok(CoverageEstimate { ncov, coverage_depth: depth, arrival_rate: ncov as f64 * lf / gf })
}
