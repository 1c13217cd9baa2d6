//! Genome, read and noise-channel model.
//!
//! Genomes are circular strings over `{A,C,G,T}` stored two bits per base.
//! Reads are ASCII strings over the channel's output alphabet; with the
//! default channels that alphabet is `{A,C,G,T}` as well.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, DOMAIN_GENOME, DOMAIN_NOISE, DOMAIN_STARTS};

pub const BASES: [u8; 4] = *b"ACGT";

const STOCHASTIC_TOL: f64 = 1e-12;

/// Index of a nucleotide in `A<C<G<T` order.
#[inline]
pub fn base_index(b: u8) -> Option<usize> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

/// Base composition `Q = (Q_A, Q_C, Q_G, Q_T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseDistribution {
    probs: [f64; 4],
}

impl BaseDistribution {
    pub fn new(probs: [f64; 4]) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::Distribution(format!("entries must lie in [0,1]: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Distribution(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { probs })
    }

    pub fn uniform() -> Self {
        Self { probs: [0.25; 4] }
    }

    /// Empirical composition of a nucleotide string. Non-nucleotide bytes are ignored.
    pub fn composition(seq: &[u8]) -> Result<Self> {
        let mut counts = [0usize; 4];
        for &b in seq {
            if let Some(i) = base_index(b) {
                counts[i] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::Distribution("empty sequence has no composition".into()));
        }
        let mut probs = counts.map(|c| c as f64 / total as f64);
        // absorb rounding so the sum is exactly representable as 1 within tolerance
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        Self::new(probs)
    }

    #[inline]
    pub fn probs(&self) -> &[f64; 4] {
        &self.probs
    }

    #[inline]
    pub fn get(&self, base: usize) -> f64 {
        self.probs[base]
    }
}

/// Nucleotide string packed two bits per base; base `i` lives in word `i / 32`
/// at bit offset `2 * (i % 32)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedSeq {
    words: Vec<u64>,
    len: usize,
}

impl PackedSeq {
    pub fn from_codes(codes: impl IntoIterator<Item = u8>) -> Self {
        let mut words = Vec::new();
        let mut len = 0usize;
        for c in codes {
            if len.is_multiple_of(32) {
                words.push(0);
            }
            *words.last_mut().unwrap() |= ((c & 3) as u64) << (2 * (len % 32));
            len += 1;
        }
        Self { words, len }
    }

    pub fn from_ascii(seq: &[u8]) -> Result<Self> {
        let codes = seq
            .iter()
            .map(|&b| base_index(b).map(|i| i as u8).ok_or_else(|| Error::Parse(format!("not a nucleotide: {:?}", b as char))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_codes(codes))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn code(&self, i: usize) -> u8 {
        ((self.words[i / 32] >> (2 * (i % 32))) & 3) as u8
    }

    pub fn to_ascii(&self) -> Vec<u8> {
        (0..self.len).map(|i| BASES[self.code(i) as usize]).collect()
    }
}

/// Circular genome with its generating distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    seq: PackedSeq,
    distribution: BaseDistribution,
    seed: Option<u64>,
}

impl Genome {
    pub fn from_ascii(seq: &[u8], distribution: BaseDistribution, seed: Option<u64>) -> Result<Self> {
        if seq.is_empty() {
            return Err(Error::Range("genome length must be at least 1".into()));
        }
        Ok(Self { seq: PackedSeq::from_ascii(seq)?, distribution, seed })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.seq.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn distribution(&self) -> &BaseDistribution {
        &self.distribution
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn packed(&self) -> &PackedSeq {
        &self.seq
    }

    /// Base code (0..4) at circular position `i`.
    #[inline]
    pub fn code(&self, i: usize) -> u8 {
        self.seq.code(i % self.len())
    }

    #[inline]
    pub fn base(&self, i: usize) -> u8 {
        BASES[self.code(i) as usize]
    }

    pub fn to_ascii(&self) -> Vec<u8> {
        self.seq.to_ascii()
    }

    /// `length` bases starting at `start`, wrapping past the last position.
    pub fn circular_substring(&self, start: usize, length: usize) -> Result<Vec<u8>> {
        let g = self.len();
        if length == 0 || length > g {
            return Err(Error::Range(format!("substring length {length} must lie in [1, {g}]")));
        }
        let start = start % g;
        Ok((0..length).map(|k| self.base(start + k)).collect())
    }

    /// Packed 32-base window beginning at every circular position.
    pub fn windows32(&self) -> Vec<u64> {
        let g = self.len();
        let mut out = vec![0u64; g];
        // rolling: window(i+1) = window(i) >> 2 | code(i+32) << 62
        let mut w = 0u64;
        for k in 0..32 {
            w |= (self.code(k) as u64) << (2 * k);
        }
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = w;
            w = (w >> 2) | ((self.code(i + 32) as u64) << 62);
        }
        out
    }
}

/// Memoryless substitution channel `π(y|s)` from `{A,C,G,T}` to an output alphabet `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChannel {
    alphabet: Vec<u8>,
    rows: [Vec<f64>; 4],
    lookup: Box<[u8; 256]>,
}

const NO_SYMBOL: u8 = u8::MAX;

impl NoiseChannel {
    pub fn new(alphabet: Vec<u8>, rows: [Vec<f64>; 4]) -> Result<Self> {
        if alphabet.is_empty() || alphabet.len() >= NO_SYMBOL as usize {
            return Err(Error::Channel(format!("output alphabet size {} unsupported", alphabet.len())));
        }
        let mut lookup = Box::new([NO_SYMBOL; 256]);
        for (i, &y) in alphabet.iter().enumerate() {
            if y.is_ascii_whitespace() || lookup[y as usize] != NO_SYMBOL {
                return Err(Error::Channel(format!("bad or repeated output symbol {:?}", y as char)));
            }
            lookup[y as usize] = i as u8;
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != alphabet.len() {
                return Err(Error::Channel(format!("row {} has {} entries, expected {}", BASES[s] as char, row.len(), alphabet.len())));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Channel(format!("row {} has a negative or non-finite entry", BASES[s] as char)));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Channel(format!("row {} sums to {sum}", BASES[s] as char)));
            }
        }
        Ok(Self { alphabet, rows, lookup })
    }

    /// Symmetric substitution channel: correct with probability `1-δ`, otherwise
    /// one of the three other bases uniformly.
    pub fn symmetric(delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Range(format!("δ = {delta} must lie in [0,1]")));
        }
        let rows = std::array::from_fn(|s| (0..4).map(|y| if y == s { 1.0 - delta } else { delta / 3.0 }).collect());
        Self::new(BASES.to_vec(), rows)
    }

    pub fn identity() -> Self {
        Self::symmetric(0.0).expect("identity channel is valid")
    }

    #[inline]
    pub fn alphabet(&self) -> &[u8] {
        &self.alphabet
    }

    #[inline]
    pub fn output_size(&self) -> usize {
        self.alphabet.len()
    }

    #[inline]
    pub fn row(&self, base: usize) -> &[f64] {
        &self.rows[base]
    }

    #[inline]
    pub fn prob(&self, base: usize, symbol_idx: usize) -> f64 {
        self.rows[base][symbol_idx]
    }

    /// Position of an output symbol in the alphabet.
    #[inline]
    pub fn symbol_index(&self, y: u8) -> Option<usize> {
        match self.lookup[y as usize] {
            NO_SYMBOL => None,
            i => Some(i as usize),
        }
    }

    /// Output marginal `F_Q(y) = Σ_s Q_s π(y|s)`.
    pub fn output_marginal(&self, q: &BaseDistribution) -> Vec<f64> {
        (0..self.output_size()).map(|y| (0..4).map(|s| q.get(s) * self.rows[s][y]).sum()).collect()
    }

    /// Per-symbol error rate `1 - Σ_s Q_s π(s|s)`, counting an output as correct
    /// only when it is the input nucleotide itself.
    pub fn error_rate(&self, q: &BaseDistribution) -> f64 {
        1.0 - (0..4)
            .map(|s| q.get(s) * self.symbol_index(BASES[s]).map_or(0.0, |y| self.rows[s][y]))
            .sum::<f64>()
    }

    /// Probability that two independent observations of the same base differ.
    pub fn same_base_disagreement(&self, q: &BaseDistribution) -> f64 {
        1.0 - (0..4).map(|s| q.get(s) * self.rows[s].iter().map(|p| p * p).sum::<f64>()).sum::<f64>()
    }

    /// Probability that observations of two independent bases differ.
    pub fn independent_disagreement(&self, q: &BaseDistribution) -> f64 {
        1.0 - self.output_marginal(q).iter().map(|p| p * p).sum::<f64>()
    }

    fn sample(&self, base: usize, u: f64) -> u8 {
        let row = &self.rows[base];
        let mut acc = 0.0;
        let mut last = 0;
        for (y, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = y;
                if u < acc {
                    return self.alphabet[y];
                }
            }
        }
        self.alphabet[last]
    }
}

/// A read with its ground-truth start (evaluation only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Read {
    pub id: u32,
    pub true_start: usize,
    pub symbols: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadSet {
    pub reads: Vec<Read>,
    pub read_length: usize,
    pub genome_length: usize,
}

impl ReadSet {
    pub fn new(reads: Vec<Read>, read_length: usize, genome_length: usize) -> Result<Self> {
        if read_length == 0 || genome_length == 0 {
            return Err(Error::Range("read and genome length must be positive".into()));
        }
        for r in &reads {
            if r.symbols.len() != read_length {
                return Err(Error::Shape(format!("read {} has length {}, expected {read_length}", r.id, r.symbols.len())));
            }
            if r.true_start >= genome_length {
                return Err(Error::Range(format!("read {} starts at {} outside [0,{genome_length})", r.id, r.true_start)));
            }
        }
        Ok(Self { reads, read_length, genome_length })
    }

    pub fn len(&self) -> usize {
        self.reads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reads.is_empty()
    }
}

fn sample_base(q: &BaseDistribution, u: f64) -> u8 {
    let mut acc = 0.0;
    let mut last = 0;
    for (s, &p) in q.probs().iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = s;
            if u < acc {
                return s as u8;
            }
        }
    }
    last as u8
}

/// Draw an i.i.d. genome of length `g` from `q`.
pub fn generate_genome(g: usize, q: &BaseDistribution, seed: u64) -> Result<Genome> {
    if g == 0 {
        return Err(Error::Range("genome length must be at least 1".into()));
    }
    let q = BaseDistribution::new(*q.probs())?;
    let mut rng = rng::stream(seed, DOMAIN_GENOME, 0);
    let seq = PackedSeq::from_codes((0..g).map(|_| sample_base(&q, rng.gen::<f64>())));
    Ok(Genome { seq, distribution: q, seed: Some(seed) })
}

/// Sample `n` uniformly located reads of length `l`. Read `i`'s start depends
/// only on `(seed, i)`.
pub fn sample_reads(genome: &Genome, n: usize, l: usize, seed: u64) -> Result<ReadSet> {
    let g = genome.len();
    if n == 0 {
        return Err(Error::Range("at least one read must be requested".into()));
    }
    if l == 0 || l > g {
        return Err(Error::Range(format!("read length {l} must lie in [1, {g}]")));
    }
    if n > u32::MAX as usize {
        return Err(Error::Range(format!("{n} reads exceed the id space")));
    }
    let reads = (0..n)
        .map(|i| {
            let start = rng::stream(seed, DOMAIN_STARTS, i as u64).gen_range(0..g);
            Read { id: i as u32, true_start: start, symbols: genome.circular_substring(start, l).expect("l <= g") }
        })
        .collect();
    Ok(ReadSet { reads, read_length: l, genome_length: g })
}

/// Pass every base of every read independently through `channel`.
pub fn corrupt_reads(reads: &ReadSet, channel: &NoiseChannel, seed: u64) -> Result<ReadSet> {
    let out = reads
        .reads
        .iter()
        .map(|r| {
            let mut rng = rng::stream(seed, DOMAIN_NOISE, r.id as u64);
            let symbols = r
                .symbols
                .iter()
                .map(|&b| {
                    let s = base_index(b).ok_or_else(|| Error::Shape(format!("read {} contains non-nucleotide {:?}", r.id, b as char)))?;
                    Ok(channel.sample(s, rng.gen::<f64>()))
                })
                .collect::<Result<Vec<u8>>>()?;
            Ok(Read { id: r.id, true_start: r.true_start, symbols })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReadSet { reads: out, read_length: reads.read_length, genome_length: reads.genome_length })
}

pub fn hamming_distance(a: &[u8], b: &[u8]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}
