//! Distance from a cleaned read to its closest genome substring.

use crate::error::{Error, Result};
use crate::genome::{base_index, Genome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    /// Normalized Hamming distance to the closest substring.
    pub d: f64,
    pub mismatches: usize,
    /// Smallest start achieving the minimum.
    pub best_location: usize,
}

const LOW_BITS: u64 = 0x5555_5555_5555_5555;

#[inline]
fn lane_mismatches(x: u64) -> u32 {
    ((x | (x >> 1)) & LOW_BITS).count_ones()
}

/// Exhaustive scan of all circular starts using two-bit packed comparisons.
/// Build once per genome and reuse across reads.
#[derive(Debug, Clone)]
pub struct QualityScanner {
    windows: Vec<u64>,
}

impl QualityScanner {
    pub fn new(genome: &Genome) -> Self {
        Self { windows: genome.windows32() }
    }

    pub fn genome_len(&self) -> usize {
        self.windows.len()
    }

    pub fn scan(&self, read: &[u8]) -> Result<QualityReport> {
        let g = self.windows.len();
        let k = read.len();
        if k == 0 || k > g {
            return Err(Error::Range(format!("read length {k} must lie in [1, {g}]")));
        }
        // Non-nucleotide symbols mismatch every genome base: mask them out and
        // count them once.
        let mut fixed = 0usize;
        let chunks = k.div_ceil(32);
        let mut words = vec![0u64; chunks];
        let mut masks = vec![0u64; chunks];
        for (i, &b) in read.iter().enumerate() {
            let (c, sh) = (i / 32, 2 * (i % 32));
            match base_index(b) {
                Some(code) => {
                    words[c] |= (code as u64) << sh;
                    masks[c] |= 3u64 << sh;
                }
                None => fixed += 1,
            }
        }
        let mut best = (usize::MAX, 0usize);
        for start in 0..g {
            let mut mm = fixed;
            for c in 0..chunks {
                let w = self.windows[(start + 32 * c) % g];
                mm += lane_mismatches((w ^ words[c]) & masks[c]) as usize;
                if mm >= best.0 {
                    break;
                }
            }
            if mm < best.0 {
                best = (mm, start);
                if mm == fixed {
                    // cannot do better; keep the smallest index
                    break;
                }
            }
        }
        Ok(QualityReport { d: best.0 as f64 / k as f64, mismatches: best.0, best_location: best.1 })
    }
}

pub fn quality(read: &[u8], genome: &Genome) -> Result<QualityReport> {
    QualityScanner::new(genome).scan(read)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{generate_genome, BaseDistribution};

    #[test]
    fn exact_substring_has_zero_distance() {
        let g = generate_genome(2000, &BaseDistribution::uniform(), 3).unwrap();
        let sub = g.circular_substring(1990, 50).unwrap();
        let q = quality(&sub, &g).unwrap();
        assert_eq!(q.d, 0.0);
        assert_eq!(q.best_location, 1990);
    }

    #[test]
    fn one_flip_gives_one_over_k() {
        let g = generate_genome(5000, &BaseDistribution::uniform(), 4).unwrap();
        let mut sub = g.circular_substring(1234, 50).unwrap();
        sub[17] = if sub[17] == b'A' { b'C' } else { b'A' };
        let q = quality(&sub, &g).unwrap();
        assert!((q.d - 0.02).abs() < 1e-15);
        assert_eq!(q.best_location, 1234);
    }

    #[test]
    fn ties_take_smallest_start_and_foreign_symbols_count() {
        let g = Genome::from_ascii(b"AAAA", BaseDistribution::uniform(), None).unwrap();
        let q = quality(b"AA", &g).unwrap();
        assert_eq!((q.mismatches, q.best_location), (0, 0));
        let q = quality(b"AN", &g).unwrap();
        assert_eq!((q.mismatches, q.best_location), (1, 0));
        assert!(quality(b"AAAAA", &g).is_err());
    }
}
