//! Grouping K-mers that were read from the same genome location.
//!
//! Reads are linked when they share an exact anchor and agree on an overlap of
//! at least K symbols at a consistent diagonal. For every unused K-mer of a
//! reference read, the K-mers of its linked reads at the matching offset form
//! a pile; the pile is cut into clusters of M, and each cluster must pass the
//! typicality test for one of a few candidate compositions.

use std::collections::HashMap;

use rayon::prelude::*;

use super::consensus::ml_consensus_of;
use super::pool::{KmerPool, PoolEntry};
use super::typicality::typicality_test;
use super::{CorrectionParams, KmerCluster};
use crate::error::Result;
use crate::genome::{BaseDistribution, NoiseChannel, ReadSet};

/// Another read overlapping a reference read: `other[j]` lines up with
/// `reference[j + diag]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub read: u32,
    pub diag: i32,
    pub mismatches: u32,
    pub overlap: u32,
}

impl Neighbor {
    pub fn mismatch_fraction(&self) -> f64 {
        self.mismatches as f64 / self.overlap as f64
    }
}

/// Linked reads of every read, sorted by `(read, diag)`.
pub fn read_neighbors(reads: &ReadSet, anchor_len: usize, min_overlap: usize, radius: f64) -> Vec<Vec<Neighbor>> {
    let l = reads.read_length;
    let n = reads.len();
    if anchor_len == 0 || anchor_len > l || n == 0 {
        return vec![Vec::new(); n];
    }
    let mut index: HashMap<&[u8], Vec<(u32, u32)>> = HashMap::new();
    for (i, r) in reads.reads.iter().enumerate() {
        for p in 0..=l - anchor_len {
            index.entry(&r.symbols[p..p + anchor_len]).or_default().push((i as u32, p as u32));
        }
    }
    let depth = n as f64 * l as f64 / reads.genome_length.max(1) as f64;
    let cap = (8.0 * depth).max(64.0) as usize;

    (0..n)
        .into_par_iter()
        .map(|i| {
            let sym = &reads.reads[i].symbols;
            let mut cands: Vec<(u32, i32)> = Vec::new();
            for p in 0..=l - anchor_len {
                let Some(hits) = index.get(&sym[p..p + anchor_len]) else { continue };
                if hits.len() > cap {
                    continue;
                }
                for &(j, q) in hits {
                    if j as usize != i {
                        cands.push((j, p as i32 - q as i32));
                    }
                }
            }
            cands.sort_unstable();
            cands.dedup();
            cands
                .into_iter()
                .filter_map(|(j, d)| {
                    let overlap = l - d.unsigned_abs() as usize;
                    if overlap < min_overlap {
                        return None;
                    }
                    let other = &reads.reads[j as usize].symbols;
                    let lo = (-d).max(0) as usize;
                    let mismatches = (lo..lo + overlap).filter(|&t| other[t] != sym[(t as i32 + d) as usize]).count();
                    (mismatches as f64 <= radius * overlap as f64).then_some(Neighbor {
                        read: j,
                        diag: d,
                        mismatches: mismatches as u32,
                        overlap: overlap as u32,
                    })
                })
                .collect()
        })
        .collect()
}

/// Default linkage radius: halfway between the expected disagreement of two
/// reads of the same bases and that of two unrelated reads.
pub fn default_radius(channel: &NoiseChannel, q: &BaseDistribution) -> f64 {
    0.5 * (channel.same_base_disagreement(q) + channel.independent_disagreement(q))
}

/// Maximum-likelihood `P` from pooled symbol counts, by EM over the hidden base.
fn fit_composition(counts: &[usize], channel: &NoiseChannel) -> [f64; 4] {
    let total: usize = counts.iter().sum();
    let mut p = [0.25; 4];
    if total == 0 {
        return p;
    }
    for _ in 0..200 {
        let f = channel.output_marginal(&BaseDistribution::new(p).expect("EM iterate stays a distribution"));
        let mut next = [0.0; 4];
        for (y, &n) in counts.iter().enumerate() {
            if n == 0 || f[y] == 0.0 {
                continue;
            }
            let w = n as f64 / total as f64 / f[y];
            for s in 0..4 {
                next[s] += w * p[s] * channel.prob(s, y);
            }
        }
        let z: f64 = next.iter().sum();
        if z <= 0.0 {
            break;
        }
        next.iter_mut().for_each(|x| *x /= z);
        let change = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        if change < 1e-10 {
            break;
        }
    }
    p
}

/// Nearest type with denominator `k`, by largest remainder.
fn round_to_type(p: &[f64; 4], k: usize) -> [f64; 4] {
    let scaled: Vec<f64> = p.iter().map(|x| x * k as f64).collect();
    let mut ints: Vec<usize> = scaled.iter().map(|x| x.floor() as usize).collect();
    let mut left = k.saturating_sub(ints.iter().sum());
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())).then(a.cmp(&b)));
    for &s in order.iter().cycle() {
        if left == 0 {
            break;
        }
        ints[s] += 1;
        left -= 1;
    }
    std::array::from_fn(|s| ints[s] as f64 / k as f64)
}

fn candidate_compositions(members: &[&[u8]], channel: &NoiseChannel, q: &BaseDistribution) -> Vec<BaseDistribution> {
    let k = members[0].len();
    let mut out: Vec<BaseDistribution> = Vec::with_capacity(3);
    let consensus = ml_consensus_of(members, channel);
    if let Ok(p) = BaseDistribution::composition(&consensus) {
        out.push(p);
    }
    let mut counts = vec![0usize; channel.output_size()];
    for m in members {
        for &y in m.iter() {
            if let Some(i) = channel.symbol_index(y) {
                counts[i] += 1;
            }
        }
    }
    if let Ok(p) = BaseDistribution::new(round_to_type(&fit_composition(&counts, channel), k)) {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if !out.contains(q) {
        out.push(*q);
    }
    out
}

/// Clusters of M K-mers that pass the typicality test, in discovery order.
/// Every K-mer belongs to at most one cluster.
pub fn find_good_alignments(
    pool: &KmerPool<'_>,
    params: &CorrectionParams,
    channel: &NoiseChannel,
    q: &BaseDistribution,
) -> Result<Vec<KmerCluster>> {
    let reads = pool.reads();
    let (l, k, m) = (reads.read_length, pool.k(), params.m);
    params.validate(l)?;
    let radius = params.linkage_radius.unwrap_or_else(|| default_radius(channel, q));
    let neighbors = read_neighbors(reads, params.anchor_len, k, radius);
    let per_read = pool.per_read();
    let mut used = vec![false; reads.len() * per_read];
    let slot = |r: u32, o: usize| r as usize * per_read + o;
    let mut clusters = Vec::new();

    for (r, links) in neighbors.iter().enumerate() {
        let r = r as u32;
        for o in 0..per_read {
            if used[slot(r, o)] {
                continue;
            }
            // best diagonal per linked read at which offset `o` maps inside it
            let mut pile: Vec<(f64, u32, usize)> = Vec::new();
            for nb in links {
                let o2 = o as i64 - nb.diag as i64;
                if o2 < 0 || o2 as usize >= per_read || used[slot(nb.read, o2 as usize)] {
                    continue;
                }
                let f = nb.mismatch_fraction();
                match pile.last_mut() {
                    Some(last) if last.1 == nb.read => {
                        if f < last.0 {
                            *last = (f, nb.read, o2 as usize);
                        }
                    }
                    _ => pile.push((f, nb.read, o2 as usize)),
                }
            }
            if pile.len() + 1 < m {
                continue;
            }
            pile.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            pile.truncate(params.max_group - 1);
            let mut entries = vec![entry(r, o, reads)];
            entries.extend(pile.iter().map(|&(_, read, o2)| entry(read, o2, reads)));

            for chunk in entries.chunks_exact(m) {
                let members: Vec<&[u8]> = chunk.iter().map(|e| pool.symbols(e)).collect();
                for p in candidate_compositions(&members, channel, q) {
                    if typicality_test(&members, &p, channel, params.eps_typ, params.order)? {
                        for e in chunk {
                            used[slot(e.read_index, e.offset as usize)] = true;
                        }
                        clusters.push(KmerCluster { members: chunk.to_vec(), type_p: p, accepted: true });
                        break;
                    }
                }
            }
        }
    }
    Ok(clusters)
}

fn entry(read: u32, offset: usize, reads: &ReadSet) -> PoolEntry {
    PoolEntry { read_index: read, read_id: reads.reads[read as usize].id, offset: offset as u32 }
}
