use std::collections::HashMap;

use rayon::prelude::*;

use super::AssemblyResult;
use crate::correct::{CleanedRead, QualityScanner};
use crate::error::{Error, Result};
use crate::genome::{base_index, Genome, ReadSet, BASES};

/// Symbol written at consensus positions no read covers.
pub const GAP: u8 = b'N';

#[derive(Debug, Clone, PartialEq)]
pub struct Consensus {
    pub sequence: Vec<u8>,
    /// Positions no read covers.
    pub gaps: Vec<usize>,
}

/// Per-position plurality over the reads covering it on a cycle of `length`;
/// ties go to the earliest base, non-nucleotide symbols are ignored.
pub fn consensus_from_layout<S: AsRef<[u8]>>(reads: &[S], positions: &[Option<usize>], length: usize) -> Result<Consensus> {
    if reads.len() != positions.len() {
        return Err(Error::Shape(format!("{} reads but {} positions", reads.len(), positions.len())));
    }
    if length == 0 {
        return Err(Error::Range("consensus length must be positive".into()));
    }
    let mut counts = vec![[0u32; 4]; length];
    for (r, pos) in reads.iter().zip(positions) {
        let Some(start) = pos else { continue };
        for (j, &y) in r.as_ref().iter().enumerate() {
            if let Some(b) = base_index(y) {
                counts[(start + j) % length][b] += 1;
            }
        }
    }
    let mut gaps = Vec::new();
    let sequence = counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let max = *c.iter().max().expect("four counts");
            if max == 0 {
                gaps.push(i);
                GAP
            } else {
                BASES[c.iter().position(|&x| x == max).expect("max is present")]
            }
        })
        .collect();
    Ok(Consensus { sequence, gaps })
}

/// Whether `a` is a cyclic rotation of `b`.
pub fn rotation_equal(a: &[u8], b: &[u8]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    let n = a.len();
    (0..n).any(|r| a[r..] == b[..n - r] && a[..r] == b[n - r..])
}

/// Raw reads in evaluation form: each read claims its own true start.
pub fn raw_as_cleaned(reads: &ReadSet) -> Vec<CleanedRead> {
    reads
        .reads
        .iter()
        .enumerate()
        .map(|(i, r)| CleanedRead { id: i, symbols: r.symbols.clone(), members: Vec::new(), claimed_start: r.true_start, claimed_region: vec![r.true_start] })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutEvaluation {
    /// No read is misplaced.
    pub perfect_layout: bool,
    /// Reads whose best genome match is outside their claimed region or
    /// farther than `τ`, or whose position implied by the assembly is outside
    /// their claimed region.
    pub misplaced_count: usize,
    /// Reads counted in `misplaced_count` because of their assembly position.
    pub mislaid_count: usize,
    /// The consensus of the assembled layout is a rotation of the genome.
    pub perfect_reconstruction: bool,
    /// Largest normalized distance of a read to its closest genome substring.
    pub max_quality: f64,
}

/// Checks every read against the genome and, if given, against its position
/// in the assembly. An empty read list is never a perfect layout.
pub fn evaluate_layout(cleaned: &[CleanedRead], genome: &Genome, tau: f64, assembly: Option<&AssemblyResult>) -> Result<LayoutEvaluation> {
    if cleaned.iter().any(|c| c.claimed_region.is_empty()) {
        return Err(Error::EvaluationUnavailable("a read has no ground-truth location".into()));
    }
    let scanner = QualityScanner::new(genome);
    let reports: Vec<_> = cleaned.par_iter().map(|c| scanner.scan(&c.symbols)).collect::<Result<_>>()?;
    let assessment = assembly.map(|a| assess_assembly(cleaned, genome, a)).transpose()?;
    let misplaced_count = (0..cleaned.len())
        .filter(|&i| {
            let (c, q) = (&cleaned[i], &reports[i]);
            let mapped = q.d <= tau && c.claimed_region.binary_search(&q.best_location).is_ok();
            !mapped || assessment.as_ref().is_some_and(|a| a.mislaid[i])
        })
        .count();
    let max_quality = reports.iter().map(|q| q.d).fold(0.0, f64::max);
    Ok(LayoutEvaluation {
        perfect_layout: !cleaned.is_empty() && misplaced_count == 0,
        misplaced_count,
        mislaid_count: assessment.as_ref().map_or(0, |a| a.mislaid.iter().filter(|&&m| m).count()),
        perfect_reconstruction: assessment.is_some_and(|a| a.perfect_reconstruction),
        max_quality,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyAssessment {
    /// Per read: its contig places it outside its claimed region. A contig's
    /// genome coordinate is fixed by the most common shift between its
    /// reads' offsets and claimed starts.
    pub mislaid: Vec<bool>,
    /// One cycle whose layout consensus is a rotation of the genome.
    pub perfect_reconstruction: bool,
}

pub fn assess_assembly(reads: &[CleanedRead], genome: &Genome, assembly: &AssemblyResult) -> Result<AssemblyAssessment> {
    let g = genome.len();
    let a = assembly;
    if a.placements.len() != reads.len() {
        return Err(Error::Shape(format!("{} placements for {} reads", a.placements.len(), reads.len())));
    }
    let shift = |i: usize| (reads[i].claimed_start % g + g - a.placements[i].offset % g) % g;
    let mut votes: HashMap<(usize, usize), usize> = HashMap::new();
    for i in 0..reads.len() {
        *votes.entry((a.placements[i].contig, shift(i))).or_default() += 1;
    }
    let mut best: HashMap<usize, (usize, usize)> = HashMap::new();
    for (&(c, s), &n) in &votes {
        let e = best.entry(c).or_insert((n, s));
        if n > e.0 || (n == e.0 && s < e.1) {
            *e = (n, s);
        }
    }
    let mislaid = (0..reads.len())
        .map(|i| {
            let p = a.placements[i];
            let implied = (p.offset + best[&p.contig].1) % g;
            reads[i].claimed_region.binary_search(&implied).is_err()
        })
        .collect();

    let perfect_reconstruction = a.circular && a.contigs.len() == 1 && {
        let symbols: Vec<&[u8]> = reads.iter().map(|c| c.symbols.as_slice()).collect();
        let positions: Vec<Option<usize>> = a.placements.iter().map(|p| Some(p.offset)).collect();
        let cons = consensus_from_layout(&symbols, &positions, a.contigs[0].len())?;
        cons.gaps.is_empty() && rotation_equal(&cons.sequence, &genome.to_ascii())
    };
    Ok(AssemblyAssessment { mislaid, perfect_reconstruction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{greedy_assemble, AssemblyConfig};
    use crate::genome::{generate_genome, sample_reads, BaseDistribution};

    #[test]
    fn consensus_examples() {
        let g = b"ACGTTGCA";
        let reads: Vec<Vec<u8>> = (0..8).map(|s| (0..4).map(|j| g[(s + j) % 8]).collect()).collect();
        let pos: Vec<Option<usize>> = (0..8).map(Some).collect();
        assert_eq!(consensus_from_layout(&reads, &pos, 8).unwrap().sequence, g);

        let mut flipped = reads.clone();
        flipped[0][1] = b'T';
        assert_eq!(consensus_from_layout(&flipped, &pos, 8).unwrap().sequence, g);

        let c = consensus_from_layout(&[b"ACG"], &[Some(0)], 5).unwrap();
        assert_eq!(c.sequence, b"ACGNN");
        assert_eq!(c.gaps, vec![3, 4]);
    }

    #[test]
    fn rotations() {
        let g = generate_genome(37, &BaseDistribution::uniform(), 2).unwrap();
        let s = g.to_ascii();
        for r in 0..37 {
            assert!(rotation_equal(&g.circular_substring(r, 37).unwrap(), &s));
        }
        let mut other = s.clone();
        other[5] = if other[5] == b'A' { b'C' } else { b'A' };
        assert!(!rotation_equal(&other, &s));
        assert!(!rotation_equal(b"ACG", b"ACGT"));
    }

    #[test]
    fn noiseless_layout_is_perfect() {
        let g = generate_genome(2000, &BaseDistribution::uniform(), 3).unwrap();
        let rs = sample_reads(&g, 1500, 40, 4).unwrap();
        let cleaned = raw_as_cleaned(&rs);
        let e = evaluate_layout(&cleaned, &g, 0.5, None).unwrap();
        assert!(e.perfect_layout);
        assert_eq!(e.max_quality, 0.0);

        let asm = greedy_assemble(&cleaned.iter().map(|c| c.symbols.clone()).collect::<Vec<_>>(), &AssemblyConfig::new(8, 0.0)).unwrap();
        let e = evaluate_layout(&cleaned, &g, 0.5, Some(&asm)).unwrap();
        assert!(e.perfect_layout && e.perfect_reconstruction, "{e:?}");
    }

    #[test]
    fn mixed_cluster_read_is_misplaced() {
        let g = generate_genome(3000, &BaseDistribution::uniform(), 9).unwrap();
        // first half from one location, second half from another, claimed at the first
        let mut sym = g.circular_substring(100, 15).unwrap();
        sym.extend(g.circular_substring(2000, 15).unwrap());
        let read = CleanedRead { id: 0, symbols: sym, members: Vec::new(), claimed_start: 100, claimed_region: vec![100] };
        let e = evaluate_layout(&[read], &g, 0.1, None).unwrap();
        assert!(e.misplaced_count >= 1);
        assert!(!e.perfect_layout);
    }

    #[test]
    fn missing_truth_is_unavailable() {
        let g = generate_genome(100, &BaseDistribution::uniform(), 1).unwrap();
        let read = CleanedRead { id: 0, symbols: b"ACGT".to_vec(), members: Vec::new(), claimed_start: 0, claimed_region: Vec::new() };
        assert!(matches!(evaluate_layout(&[read], &g, 0.5, None), Err(Error::EvaluationUnavailable(_))));
    }
}
