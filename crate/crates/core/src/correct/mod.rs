//! Read error correction.
//!
//! Reads are cut into K-mers, K-mers from the same genome location are
//! grouped into clusters of M, each cluster is accepted only if it is jointly
//! typical with respect to `F_P^M` for some candidate composition `P`, and an
//! accepted cluster is collapsed into a cleaned read by a column-wise
//! maximum-likelihood call.

mod cluster;
mod consensus;
mod pool;
mod quality;
mod typicality;

use std::collections::HashMap;

pub use cluster::{default_radius, find_good_alignments, read_neighbors, Neighbor};
pub use consensus::{ml_consensus_of, predicted_call_error, LikelihoodTable};
pub use pool::{extract_kmers, KmerPool, PoolEntry};
pub use quality::{quality, QualityReport, QualityScanner};
pub use typicality::{f_pm_log_prob, typicality_test, TypicalityOrder, FULL_JOINT_MAX_CELLS};

use crate::error::{Error, Result};
use crate::genome::{BaseDistribution, NoiseChannel, ReadSet};

/// Logarithm the cluster size M is proportional to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MBasis {
    LogOfL,
    #[default]
    LogOfG,
}

impl std::str::FromStr for MBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log_of_L" | "log_of_l" | "L" | "l" => Ok(Self::LogOfL),
            "log_of_G" | "log_of_g" | "G" | "g" => Ok(Self::LogOfG),
            other => Err(Error::Parse(format!("unknown M basis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionParams {
    /// K-mer length.
    pub k: usize,
    /// Cluster size.
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub eps_typ: f64,
    /// Quality tolerance for cleaned reads.
    pub tau: f64,
    pub m_basis: MBasis,
    /// Exact-match seed length used to find overlapping reads.
    pub anchor_len: usize,
    /// Maximum mismatch fraction for two reads to be linked at a diagonal.
    /// `None` picks the midpoint between same-location and unrelated
    /// disagreement rates of the channel.
    pub linkage_radius: Option<f64>,
    /// Cap on K-mers gathered for one location before splitting into clusters.
    pub max_group: usize,
    pub order: TypicalityOrder,
}

impl CorrectionParams {
    pub const DEFAULT_ALPHA: f64 = 0.5;
    pub const DEFAULT_BETA: f64 = 0.25;
    pub const DEFAULT_EPS_TYP: f64 = 0.35;

    pub fn defaults(read_length: usize, genome_length: usize) -> Result<Self> {
        Self::derive(read_length, genome_length, Self::DEFAULT_ALPHA, Self::DEFAULT_BETA, MBasis::default())
    }

    /// Parameters whose K, M, τ and anchor length follow from `(L, G, α, β)`.
    pub fn derive(read_length: usize, genome_length: usize, alpha: f64, beta: f64, m_basis: MBasis) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Range(format!("α = {alpha} must lie in (0,1)")));
        }
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::Range(format!("β = {beta} must lie in (0, 0.5)")));
        }
        if read_length == 0 || genome_length == 0 {
            return Err(Error::Range("read and genome length must be positive".into()));
        }
        let k = default_k(read_length, alpha);
        let x = match m_basis {
            MBasis::LogOfL => read_length,
            MBasis::LogOfG => genome_length,
        };
        let m = default_m(beta, x);
        Ok(Self {
            k,
            m,
            alpha,
            beta,
            eps_typ: Self::DEFAULT_EPS_TYP,
            tau: default_tau(genome_length),
            m_basis,
            anchor_len: default_anchor_len(genome_length, k),
            linkage_radius: None,
            max_group: 4 * m,
            order: TypicalityOrder::default(),
        })
    }

    pub fn validate(&self, read_length: usize) -> Result<()> {
        if self.k == 0 || self.k > read_length {
            return Err(Error::Range(format!("K = {} must lie in [1, {read_length}]", self.k)));
        }
        if self.m < 2 {
            return Err(Error::Range(format!("M = {} must be at least 2", self.m)));
        }
        if !(self.eps_typ > 0.0) {
            return Err(Error::Range(format!("ε_typ = {} must be positive", self.eps_typ)));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Range(format!("τ = {} must lie in [0,1]", self.tau)));
        }
        if self.anchor_len == 0 || self.anchor_len > self.k {
            return Err(Error::Range(format!("anchor length {} must lie in [1, K = {}]", self.anchor_len, self.k)));
        }
        if self.max_group < self.m {
            return Err(Error::Range(format!("group cap {} is below M = {}", self.max_group, self.m)));
        }
        Ok(())
    }
}

/// `K = L - floor(L^α)`, which keeps `K/L >= 1 - L^(α-1)`.
pub fn default_k(read_length: usize, alpha: f64) -> usize {
    let trim = (read_length as f64).powf(alpha).floor() as usize;
    read_length.saturating_sub(trim).max(1)
}

/// `M = max(2, round(β log2 x))`.
pub fn default_m(beta: f64, x: usize) -> usize {
    ((beta * (x.max(1) as f64).log2()).round() as usize).max(2)
}

/// `τ = (log2 G)^(-1/4)`, capped at 1.
pub fn default_tau(genome_length: usize) -> f64 {
    let lg = (genome_length.max(1) as f64).log2();
    if lg <= 1.0 {
        1.0
    } else {
        lg.powf(-0.25)
    }
}

/// Seeds about half the length of the typical longest repeat.
pub fn default_anchor_len(genome_length: usize, k: usize) -> usize {
    let lg = (genome_length.max(2) as f64).log2();
    ((lg / 2.0).ceil() as usize + 1).clamp(4, 16).min(k)
}

/// M K-mers proposed as reads of one genome location.
#[derive(Debug, Clone, PartialEq)]
pub struct KmerCluster {
    pub members: Vec<PoolEntry>,
    /// Composition for which the typicality test was run.
    pub type_p: BaseDistribution,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanedRead {
    pub id: usize,
    /// Length-K nucleotide string.
    pub symbols: Vec<u8>,
    pub members: Vec<PoolEntry>,
    /// Most common member location (ground truth, evaluation only).
    pub claimed_start: usize,
    /// Distinct member locations, sorted.
    pub claimed_region: Vec<usize>,
}

impl CleanedRead {
    pub fn cluster_size(&self) -> usize {
        self.members.len()
    }

    /// Number of members drawn from the claimed start.
    pub fn majority_support(&self, pool: &KmerPool<'_>) -> usize {
        self.members.iter().filter(|e| pool.true_location(e) == self.claimed_start).count()
    }
}

/// Whether more than half of the members share one true location.
pub fn cluster_is_pure(members: &[PoolEntry], pool: &KmerPool<'_>) -> bool {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for e in members {
        *counts.entry(pool.true_location(e)).or_default() += 1;
    }
    counts.values().any(|&c| 2 * c > members.len())
}

pub fn ml_consensus(cluster: &KmerCluster, pool: &KmerPool<'_>, channel: &NoiseChannel, id: usize) -> CleanedRead {
    let members: Vec<&[u8]> = cluster.members.iter().map(|e| pool.symbols(e)).collect();
    let symbols = ml_consensus_of(&members, channel);
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for e in &cluster.members {
        *counts.entry(pool.true_location(e)).or_default() += 1;
    }
    let claimed_start = counts.iter().map(|(&loc, &c)| (std::cmp::Reverse(c), loc)).min().map(|(_, loc)| loc).unwrap_or(0);
    let mut claimed_region: Vec<usize> = counts.into_keys().collect();
    claimed_region.sort_unstable();
    CleanedRead { id, symbols, members: cluster.members.clone(), claimed_start, claimed_region }
}

/// Pool, cluster, verify and collapse. Returns the cleaned reads in cluster order.
pub fn clean_reads(reads: &ReadSet, params: &CorrectionParams, channel: &NoiseChannel, q: &BaseDistribution) -> Result<Vec<CleanedRead>> {
    params.validate(reads.read_length)?;
    if reads.is_empty() {
        return Ok(Vec::new());
    }
    let pool = extract_kmers(reads, params.k)?;
    let clusters = find_good_alignments(&pool, params, channel, q)?;
    Ok(clusters.iter().enumerate().map(|(i, c)| ml_consensus(c, &pool, channel, i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{corrupt_reads, generate_genome, sample_reads, Read};

    #[test]
    fn default_parameters() {
        let p = CorrectionParams::defaults(33, 10_000).unwrap();
        assert_eq!(p.k, 28);
        assert_eq!(p.m, 3);
        assert_eq!(CorrectionParams::defaults(33, 100_000).unwrap().m, 4);
        assert!((p.tau - 13.2877f64.powf(-0.25)).abs() < 1e-4);
        p.validate(33).unwrap();
        let pl = CorrectionParams::derive(33, 10_000, 0.5, 0.3, MBasis::LogOfL).unwrap();
        assert_eq!(pl.m, 2);
        assert!(CorrectionParams::derive(33, 10_000, 1.0, 0.3, MBasis::LogOfG).is_err());
        assert!(CorrectionParams::derive(33, 10_000, 0.5, 0.5, MBasis::LogOfG).is_err());
    }

    #[test]
    fn k_over_l_bound() {
        for l in 1..500 {
            for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let k = default_k(l, alpha);
                assert!(k >= 1 && k <= l);
                if k > 1 {
                    assert!(k as f64 / l as f64 >= 1.0 - (l as f64).powf(alpha - 1.0) - 1e-12, "l={l} α={alpha}");
                }
            }
        }
    }

    #[test]
    fn single_read_yields_nothing() {
        let g = generate_genome(200, &BaseDistribution::uniform(), 1).unwrap();
        let rs = ReadSet::new(vec![Read { id: 0, true_start: 0, symbols: g.circular_substring(0, 40).unwrap() }], 40, 200).unwrap();
        let mut p = CorrectionParams::defaults(40, 200).unwrap();
        p.k = 40;
        p.m = 2;
        p.max_group = 8;
        p.anchor_len = p.anchor_len.min(40);
        assert!(clean_reads(&rs, &p, &NoiseChannel::identity(), &BaseDistribution::uniform()).unwrap().is_empty());
    }

    #[test]
    fn sparse_coverage_yields_nothing() {
        // reads far apart: no location has M covering K-mers
        let g = generate_genome(10_000, &BaseDistribution::uniform(), 2).unwrap();
        let reads = (0..5).map(|i| Read { id: i, true_start: i as usize * 1000, symbols: g.circular_substring(i as usize * 1000, 40).unwrap() }).collect();
        let rs = ReadSet::new(reads, 40, 10_000).unwrap();
        let p = CorrectionParams::defaults(40, 10_000).unwrap();
        assert!(clean_reads(&rs, &p, &NoiseChannel::identity(), &BaseDistribution::uniform()).unwrap().is_empty());
    }

    #[test]
    fn noiseless_reads_clean_to_exact_substrings() {
        let g = generate_genome(3000, &BaseDistribution::uniform(), 5).unwrap();
        let rs = sample_reads(&g, 3000, 40, 6).unwrap();
        let p = CorrectionParams::defaults(40, 3000).unwrap();
        let cleaned = clean_reads(&rs, &p, &NoiseChannel::identity(), &BaseDistribution::uniform()).unwrap();
        assert!(cleaned.len() > 500);
        let pool = extract_kmers(&rs, p.k).unwrap();
        let scanner = QualityScanner::new(&g);
        for c in &cleaned {
            assert_eq!(c.claimed_region.len(), 1);
            assert!(cluster_is_pure(&c.members, &pool));
            let q = scanner.scan(&c.symbols).unwrap();
            assert_eq!(q.d, 0.0);
            assert_eq!(q.best_location, c.claimed_start);
        }
    }

    #[test]
    fn planted_location_is_recovered_under_noise() {
        // exactly M reads covering one location, nothing else nearby
        let g = generate_genome(5000, &BaseDistribution::uniform(), 11).unwrap();
        let k = 32;
        let mut p = CorrectionParams::defaults(k, 5000).unwrap();
        p.k = k;
        p.m = 4;
        p.max_group = 4 * p.m;
        p.anchor_len = 8;
        let reads = (0..p.m as u32).map(|i| Read { id: i, true_start: 700, symbols: g.circular_substring(700, k).unwrap() }).collect();
        let rs = ReadSet::new(reads, k, 5000).unwrap();
        let ch = NoiseChannel::symmetric(0.05).unwrap();
        let mut hits = 0;
        for seed in 0..20 {
            let noisy = corrupt_reads(&rs, &ch, seed).unwrap();
            let cleaned = clean_reads(&noisy, &p, &ch, &BaseDistribution::uniform()).unwrap();
            if cleaned.iter().any(|c| c.claimed_start == 700) {
                hits += 1;
            }
        }
        // small K makes the two-sided pair band reject low-noise draws too
        assert!(hits >= 10, "{hits}/20");
    }
}
