//! Seeded end-to-end trials and parameter sweeps.

mod config;
mod sweep;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use config::{parse_key_values, ConfigMap};
pub use sweep::{cell_id, critical_length_estimate, crossing_point, run_sweep, wilson_interval, CellSummary, SweepGrid, CSV_HEADER};

use crate::assembly::{default_theta, default_w_min, exact_greedy_w_min, evaluate_layout, greedy_assemble, raw_as_cleaned, AssemblyConfig, AssemblyResult, LayoutEvaluation};
use crate::correct::{clean_reads, predicted_call_error, CleanedRead, CorrectionParams, MBasis, TypicalityOrder};
use crate::error::{Error, Result};
use crate::genome::{corrupt_reads, generate_genome, sample_reads, BaseDistribution, Genome, NoiseChannel, ReadSet};
use crate::info::{lander_waterman, lcrit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    NoiselessGreedy,
    DirectNoisyGreedy,
    CorrectThenGreedy,
}

impl Pipeline {
    pub const ALL: [Pipeline; 3] = [Pipeline::NoiselessGreedy, Pipeline::DirectNoisyGreedy, Pipeline::CorrectThenGreedy];

    pub fn name(self) -> &'static str {
        match self {
            Self::NoiselessGreedy => "noiseless_greedy",
            Self::DirectNoisyGreedy => "direct_noisy_greedy",
            Self::CorrectThenGreedy => "correct_then_greedy",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::Parse(format!("unknown pipeline {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthSpec {
    Absolute(usize),
    /// `L = round(L̄ log2 G)`.
    Normalized(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountSpec {
    Absolute(usize),
    /// `N = round(multiple · Ncov)`.
    Multiple(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Symmetric(f64),
    Matrix(NoiseChannel),
}

/// Error-correction settings that are not derived from `(L, G)`; `None`
/// keeps the derived default.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSettings {
    pub alpha: f64,
    pub beta: f64,
    pub m_basis: MBasis,
    pub eps_typ: Option<f64>,
    pub anchor_len: Option<usize>,
    pub linkage_radius: Option<f64>,
    pub tau: Option<f64>,
    pub order: TypicalityOrder,
}

impl Default for CorrectionSettings {
    fn default() -> Self {
        Self {
            alpha: CorrectionParams::DEFAULT_ALPHA,
            beta: CorrectionParams::DEFAULT_BETA,
            m_basis: MBasis::default(),
            eps_typ: None,
            anchor_len: None,
            linkage_radius: None,
            tau: None,
            order: TypicalityOrder::default(),
        }
    }
}

impl CorrectionSettings {
    pub fn resolve(&self, read_length: usize, genome_length: usize) -> Result<CorrectionParams> {
        let mut p = CorrectionParams::derive(read_length, genome_length, self.alpha, self.beta, self.m_basis)?;
        if let Some(e) = self.eps_typ {
            p.eps_typ = e;
        }
        if let Some(a) = self.anchor_len {
            p.anchor_len = a.min(p.k);
        }
        if let Some(t) = self.tau {
            p.tau = t;
        }
        p.linkage_radius = self.linkage_radius;
        p.order = self.order;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub genome_length: usize,
    pub q: BaseDistribution,
    pub length: LengthSpec,
    pub count: CountSpec,
    /// Failure probability `ε` defining `Ncov`.
    pub coverage_eps: f64,
    pub channel: ChannelSpec,
    pub correction: CorrectionSettings,
    pub theta: Option<f64>,
    pub w_min: Option<usize>,
    pub pipeline: Pipeline,
    pub seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            genome_length: 10_000,
            q: BaseDistribution::uniform(),
            length: LengthSpec::Normalized(2.0),
            count: CountSpec::Multiple(1.5),
            coverage_eps: 0.05,
            channel: ChannelSpec::Symmetric(0.0),
            correction: CorrectionSettings::default(),
            theta: None,
            w_min: None,
            pipeline: Pipeline::NoiselessGreedy,
            seed: 1,
        }
    }
}

impl TrialConfig {
    pub fn read_length(&self) -> Result<usize> {
        let l = match self.length {
            LengthSpec::Absolute(l) => l,
            LengthSpec::Normalized(lbar) => {
                if !(lbar > 0.0) {
                    return Err(Error::Range(format!("L̄ = {lbar} must be positive")));
                }
                (lbar * (self.genome_length.max(2) as f64).log2()).round() as usize
            }
        };
        if l == 0 || l > self.genome_length {
            return Err(Error::Range(format!("read length {l} must lie in [1, {}]", self.genome_length)));
        }
        Ok(l)
    }

    pub fn read_count(&self) -> Result<usize> {
        match self.count {
            CountSpec::Absolute(n) => Ok(n),
            CountSpec::Multiple(m) => {
                if !(m >= 0.0) {
                    return Err(Error::Range(format!("coverage multiple {m} must be non-negative")));
                }
                let cov = lander_waterman(self.genome_length as u64, self.read_length()? as u64, self.coverage_eps)?;
                Ok((m * cov.ncov as f64).round() as usize)
            }
        }
    }

    /// Channel reads pass through; the noiseless pipeline ignores the setting.
    pub fn channel(&self) -> Result<NoiseChannel> {
        if self.pipeline == Pipeline::NoiselessGreedy {
            return Ok(NoiseChannel::identity());
        }
        self.configured_channel()
    }

    /// The configured channel, whatever the pipeline.
    pub fn configured_channel(&self) -> Result<NoiseChannel> {
        match &self.channel {
            ChannelSpec::Symmetric(d) => NoiseChannel::symmetric(*d),
            ChannelSpec::Matrix(c) => Ok(c.clone()),
        }
    }

    /// Symmetric error rate, or the average error rate of a matrix channel.
    pub fn delta(&self) -> f64 {
        match &self.channel {
            ChannelSpec::Symmetric(d) => *d,
            ChannelSpec::Matrix(c) => c.error_rate(&self.q),
        }
    }
}

/// Why a trial did not succeed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Some genome position is not covered by any (cleaned) read.
    NoCoverage,
    /// Reads are placed correctly but do not form one cycle equal to the genome.
    Fragmented,
    /// The assembly places some read away from its true location.
    Misassembled,
    /// Some read maps outside its claimed region or too far from the genome.
    LayoutError,
    /// A stage returned an error.
    StageError,
}

impl FailureKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::NoCoverage => "no-coverage",
            Self::Fragmented => "fragmented",
            Self::Misassembled => "misassembled",
            Self::LayoutError => "layout-error",
            Self::StageError => "stage-error",
        }
    }
}

/// The seed-determined part of a trial result.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub pipeline: Pipeline,
    pub read_length: usize,
    pub read_count: usize,
    pub success: bool,
    pub perfect_layout: bool,
    pub perfect_reconstruction: bool,
    /// Largest normalized distance of an assembled (cleaned) read to the genome.
    pub d_max: f64,
    pub tau: f64,
    pub cleaned_count: usize,
    /// Cleaned reads whose cluster has no majority location.
    pub purity_violations: usize,
    /// Fraction of genome positions covered by the assembled reads' true spans.
    pub coverage: f64,
    pub contigs: usize,
    pub circular: bool,
    pub misplaced: usize,
    pub theta: f64,
    pub w_min: usize,
    pub failure: Option<FailureKind>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub outcome: TrialOutcome,
    /// Seconds; the only field not determined by the configuration.
    pub wall_time: f64,
}

impl TrialResult {
    pub fn success(&self) -> bool {
        self.outcome.success
    }
}

/// One trial. Stage errors are recorded in the outcome rather than returned,
/// except for configurations that cannot be resolved at all.
pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    let start = Instant::now();
    let l = config.read_length()?;
    let n = config.read_count()?;
    let mut outcome = TrialOutcome {
        seed: config.seed,
        pipeline: config.pipeline,
        read_length: l,
        read_count: n,
        success: false,
        perfect_layout: false,
        perfect_reconstruction: false,
        d_max: 0.0,
        tau: 0.0,
        cleaned_count: 0,
        purity_violations: 0,
        coverage: 0.0,
        contigs: 0,
        circular: false,
        misplaced: 0,
        theta: 0.0,
        w_min: 0,
        failure: None,
        error: None,
    };
    if let Err(e) = execute(config, l, n, &mut outcome) {
        outcome.success = false;
        outcome.failure = Some(FailureKind::StageError);
        outcome.error = Some(e.to_string());
    }
    Ok(TrialResult { outcome, wall_time: start.elapsed().as_secs_f64() })
}

fn execute(config: &TrialConfig, l: usize, n: usize, out: &mut TrialOutcome) -> Result<()> {
    let g = config.genome_length;
    let genome = generate_genome(g, &config.q, config.seed)?;
    let reads = sample_reads(&genome, n, l, config.seed)?;
    let channel = config.channel()?;
    let lc = lcrit(&config.q)?;
    out.tau = config.correction.resolve(l, g).map(|p| p.tau).unwrap_or_else(|_| crate::correct::default_tau(g));

    let (assembled, residual): (Vec<CleanedRead>, f64) = match config.pipeline {
        Pipeline::NoiselessGreedy => (raw_as_cleaned(&reads), 0.0),
        Pipeline::DirectNoisyGreedy => {
            let noisy = corrupt_reads(&reads, &channel, config.seed)?;
            (raw_as_cleaned(&noisy), channel.error_rate(&config.q))
        }
        Pipeline::CorrectThenGreedy => {
            let noisy = corrupt_reads(&reads, &channel, config.seed)?;
            let params = config.correction.resolve(l, g)?;
            out.tau = params.tau;
            let cleaned = clean_reads(&noisy, &params, &channel, &config.q)?;
            out.purity_violations = cleaned.iter().filter(|c| !is_pure(c, &noisy)).count();
            (cleaned, predicted_call_error(&channel, &config.q, params.m))
        }
    };
    out.cleaned_count = assembled.len();
    out.coverage = coverage_fraction(&assembled, g);
    if assembled.is_empty() {
        out.failure = Some(FailureKind::NoCoverage);
        return Ok(());
    }
    let theta = config.theta.unwrap_or_else(|| default_theta(residual));
    let w_min = config.w_min.unwrap_or_else(|| match config.pipeline {
        Pipeline::NoiselessGreedy => exact_greedy_w_min(lc, g),
        _ => default_w_min(lc, g),
    });
    out.theta = theta;
    out.w_min = w_min;
    let symbols: Vec<&[u8]> = assembled.iter().map(|c| c.symbols.as_slice()).collect();
    let assembly = greedy_assemble(&symbols, &AssemblyConfig::new(w_min, theta))?;
    out.contigs = assembly.contigs.len();
    out.circular = assembly.circular;

    let eval = if config.pipeline == Pipeline::NoiselessGreedy {
        // exact reads are at distance zero by construction
        noiseless_evaluation(&assembled, &genome, &assembly)?
    } else {
        evaluate_layout(&assembled, &genome, out.tau, Some(&assembly))?
    };
    out.perfect_layout = eval.perfect_layout;
    out.perfect_reconstruction = eval.perfect_reconstruction;
    out.d_max = eval.max_quality;
    out.misplaced = eval.misplaced_count;
    out.success = match config.pipeline {
        Pipeline::NoiselessGreedy => eval.perfect_reconstruction,
        _ => eval.perfect_layout,
    };
    if !out.success {
        out.failure = Some(if eval.mislaid_count > 0 {
            FailureKind::Misassembled
        } else if eval.misplaced_count > 0 {
            FailureKind::LayoutError
        } else if out.coverage < 1.0 {
            FailureKind::NoCoverage
        } else {
            FailureKind::Fragmented
        });
    }
    Ok(())
}

fn noiseless_evaluation(reads: &[CleanedRead], genome: &Genome, assembly: &AssemblyResult) -> Result<LayoutEvaluation> {
    let a = crate::assembly::assess_assembly(reads, genome, assembly)?;
    let mislaid = a.mislaid.iter().filter(|&&m| m).count();
    Ok(LayoutEvaluation {
        perfect_layout: !reads.is_empty() && mislaid == 0,
        misplaced_count: mislaid,
        mislaid_count: mislaid,
        perfect_reconstruction: a.perfect_reconstruction,
        max_quality: 0.0,
    })
}

fn is_pure(read: &CleanedRead, source: &ReadSet) -> bool {
    let g = source.genome_length;
    let locs: Vec<usize> = read.members.iter().map(|e| (source.reads[e.read_index as usize].true_start + e.offset as usize) % g).collect();
    locs.iter().any(|&x| 2 * locs.iter().filter(|&&y| y == x).count() > locs.len())
}

/// Fraction of the genome inside some read's true span.
pub fn coverage_fraction(reads: &[CleanedRead], genome_length: usize) -> f64 {
    let g = genome_length;
    let mut diff = vec![0i64; g + 1];
    for r in reads {
        let (s, len) = (r.claimed_start % g, r.symbols.len().min(g));
        let e = s + len;
        diff[s] += 1;
        if e <= g {
            diff[e] -= 1;
        } else {
            diff[g] -= 1;
            diff[0] += 1;
            diff[e - g] -= 1;
        }
    }
    let mut depth = 0i64;
    let covered = (0..g).filter(|&i| {
        depth += diff[i];
        depth > 0
    });
    covered.count() as f64 / g as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_lengths_and_counts() {
        let c = TrialConfig { genome_length: 10_000, length: LengthSpec::Normalized(2.5), ..TrialConfig::default() };
        assert_eq!(c.read_length().unwrap(), 33);
        let ncov = lander_waterman(10_000, 33, 0.05).unwrap().ncov;
        let c = TrialConfig { count: CountSpec::Multiple(2.0), ..c };
        assert_eq!(c.read_count().unwrap(), 2 * ncov as usize);
        assert!(TrialConfig { length: LengthSpec::Normalized(-1.0), ..TrialConfig::default() }.read_length().is_err());
    }

    #[test]
    fn pipeline_names_round_trip() {
        for p in Pipeline::ALL {
            assert_eq!(p.name().parse::<Pipeline>().unwrap(), p);
        }
        assert!("other".parse::<Pipeline>().is_err());
    }

    #[test]
    fn coverage_handles_wraparound() {
        let r = |s: usize, len: usize| CleanedRead { id: 0, symbols: vec![b'A'; len], members: Vec::new(), claimed_start: s, claimed_region: vec![s] };
        assert_eq!(coverage_fraction(&[r(8, 4)], 10), 0.4);
        assert_eq!(coverage_fraction(&[r(0, 5), r(5, 5)], 10), 1.0);
        assert_eq!(coverage_fraction(&[], 10), 0.0);
    }

    #[test]
    fn small_noiseless_trial_succeeds_and_repeats() {
        let c = TrialConfig { genome_length: 2000, length: LengthSpec::Normalized(2.5), count: CountSpec::Multiple(1.5), seed: 3, ..TrialConfig::default() };
        let a = run_trial(&c).unwrap();
        let b = run_trial(&c).unwrap();
        assert!(a.success(), "{:?}", a.outcome);
        assert_eq!(a.outcome, b.outcome);
    }
}
