//! Candidate alignments between sequences.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Suffix–prefix overlap of `left` onto `right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OverlapCandidate {
    pub left_id: usize,
    pub right_id: usize,
    pub width: usize,
    pub mismatches: usize,
}

impl OverlapCandidate {
    pub fn mismatch_fraction(&self) -> f64 {
        self.mismatches as f64 / self.width as f64
    }
}

/// Fraction of mismatches between the last `w` symbols of `a` and the first
/// `w` symbols of `b`.
pub fn overlap_mismatch(a: &[u8], b: &[u8], w: usize) -> Result<f64> {
    if w == 0 || w > a.len() || w > b.len() {
        return Err(Error::Range(format!("overlap width {w} must lie in [1, {}]", a.len().min(b.len()))));
    }
    let mm = a[a.len() - w..].iter().zip(&b[..w]).filter(|(x, y)| x != y).count();
    Ok(mm as f64 / w as f64)
}

/// Largest mismatch count tolerated over `w` symbols.
pub fn mismatch_budget(theta: f64, w: usize) -> usize {
    (theta * w as f64 + 1e-9).floor() as usize
}

/// `b[j]` aligned with `a[j + diag]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Alignment {
    pub a: u32,
    pub b: u32,
    pub diag: u32,
    pub mismatches: u32,
}

impl Alignment {
    pub fn width(&self, seqs: &[&[u8]]) -> usize {
        (seqs[self.a as usize].len() - self.diag as usize).min(seqs[self.b as usize].len())
    }

    /// `b` lies entirely inside `a`.
    pub fn is_containment(&self, seqs: &[&[u8]]) -> bool {
        self.diag as usize + seqs[self.b as usize].len() <= seqs[self.a as usize].len()
    }
}

/// How alignment candidates are proposed before verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapSearch {
    /// Exhaustive for small inputs, seeded otherwise.
    #[default]
    Auto,
    /// Every pair at every diagonal.
    Exhaustive,
    /// Shared exact seeds; with `θ = 0` the seed is the whole `w_min` prefix, so
    /// no admissible alignment is missed.
    Seeded,
}

const EXHAUSTIVE_LIMIT: usize = 64;
const SEED_CAP: usize = 1000;

fn count_mismatches(a: &[u8], b: &[u8], budget: usize) -> Option<usize> {
    let mut mm = 0;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            mm += 1;
            if mm > budget {
                return None;
            }
        }
    }
    Some(mm)
}

fn verify(seqs: &[&[u8]], a: u32, b: u32, diag: usize, theta: f64, w_min: usize) -> Option<Alignment> {
    let (sa, sb) = (seqs[a as usize], seqs[b as usize]);
    if diag >= sa.len() {
        return None;
    }
    let w = (sa.len() - diag).min(sb.len());
    let containment = diag + sb.len() <= sa.len();
    if !containment && (diag == 0 || w < w_min) {
        return None;
    }
    let mm = count_mismatches(&sa[diag..diag + w], &sb[..w], mismatch_budget(theta, w))?;
    Some(Alignment { a, b, diag: diag as u32, mismatches: mm as u32 })
}

/// All alignments at `diag >= 0` that are either containments of `b` in `a`
/// or suffix–prefix overlaps of width at least `w_min`, each with at most
/// `floor(θ w)` mismatches. Sorted and free of duplicates.
pub(crate) fn find_alignments(seqs: &[&[u8]], theta: f64, w_min: usize, search: OverlapSearch) -> Vec<Alignment> {
    let n = seqs.len();
    let min_len = seqs.iter().map(|s| s.len()).min().unwrap_or(0);
    if n < 2 || min_len == 0 {
        return Vec::new();
    }
    let exhaustive = match search {
        OverlapSearch::Exhaustive => true,
        OverlapSearch::Seeded => false,
        OverlapSearch::Auto => n <= EXHAUSTIVE_LIMIT,
    };
    let mut out: Vec<Alignment> = if exhaustive {
        (0..n as u32)
            .into_par_iter()
            .flat_map_iter(|a| {
                (0..n as u32).filter(move |&b| b != a).flat_map(move |b| (0..seqs[a as usize].len()).filter_map(move |d| verify(seqs, a, b, d, theta, w_min)))
            })
            .collect()
    } else if theta == 0.0 {
        // any exact overlap of width >= w_min, or containment, starts with b's
        // first min(w_min, |b|) symbols
        let s = w_min.clamp(1, min_len);
        let index = seed_index(seqs, s);
        (0..n as u32)
            .into_par_iter()
            .flat_map_iter(|b| {
                let hits = index.get(&seqs[b as usize][..s]).map(Vec::as_slice).unwrap_or(&[]);
                hits.iter().filter(move |&&(a, _)| a != b).filter_map(move |&(a, p)| verify(seqs, a, b, p as usize, 0.0, w_min))
            })
            .collect()
    } else {
        let s = (w_min / 2).clamp(8, 12).min(min_len);
        let index = seed_index(seqs, s);
        (0..n as u32)
            .into_par_iter()
            .flat_map_iter(|b| {
                let sb = seqs[b as usize];
                let mut diags: Vec<(u32, u32)> = Vec::new();
                for q in 0..=sb.len() - s {
                    let Some(hits) = index.get(&sb[q..q + s]) else { continue };
                    if hits.len() > SEED_CAP {
                        continue;
                    }
                    for &(a, p) in hits {
                        if a != b && p as usize >= q {
                            diags.push((a, p - q as u32));
                        }
                    }
                }
                diags.sort_unstable();
                diags.dedup();
                diags.into_iter().filter_map(move |(a, d)| verify(seqs, a, b, d as usize, theta, w_min))
            })
            .collect()
    };
    out.sort_unstable();
    out.dedup();
    out
}

fn seed_index<'a>(seqs: &[&'a [u8]], s: usize) -> HashMap<&'a [u8], Vec<(u32, u32)>> {
    let mut index: HashMap<&[u8], Vec<(u32, u32)>> = HashMap::new();
    for (i, seq) in seqs.iter().enumerate() {
        if seq.len() < s {
            continue;
        }
        for p in 0..=seq.len() - s {
            index.entry(&seq[p..p + s]).or_default().push((i as u32, p as u32));
        }
    }
    index
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatch_examples() {
        assert_eq!(overlap_mismatch(b"ACGTA", b"GTACC", 3).unwrap(), 0.0);
        assert!((overlap_mismatch(b"ACGTA", b"GAACC", 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(overlap_mismatch(b"ACGTA", b"ACGTA", 5).unwrap(), 0.0);
        assert!(overlap_mismatch(b"ACG", b"ACGT", 4).is_err());
        assert!(overlap_mismatch(b"ACG", b"ACG", 0).is_err());
    }

    #[test]
    fn search_modes_agree_on_exact_overlaps() {
        let seqs: Vec<&[u8]> = vec![b"ACGTTGCA", b"TTGCAGGA", b"CAGGATCC", b"ACGTTGCA", b"GTTGC"];
        let a = find_alignments(&seqs, 0.0, 3, OverlapSearch::Exhaustive);
        let b = find_alignments(&seqs, 0.0, 3, OverlapSearch::Seeded);
        assert_eq!(a, b);
        assert!(a.contains(&Alignment { a: 0, b: 1, diag: 3, mismatches: 0 }));
        assert!(a.contains(&Alignment { a: 0, b: 3, diag: 0, mismatches: 0 }));
        assert!(a.contains(&Alignment { a: 0, b: 4, diag: 2, mismatches: 0 }));
    }
}
