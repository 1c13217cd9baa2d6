//! Greedy assembly with approximate suffix–prefix overlaps, and the layout
//! and reconstruction evaluators.

mod evaluate;
mod overlap;

use std::collections::HashMap;

pub use evaluate::{assess_assembly, consensus_from_layout, AssemblyAssessment, evaluate_layout, raw_as_cleaned, rotation_equal, Consensus, LayoutEvaluation, GAP};
pub use overlap::{mismatch_budget, overlap_mismatch, OverlapCandidate, OverlapSearch};

use crate::error::{Error, Result};
use overlap::{find_alignments, Alignment};

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyConfig {
    /// Smallest overlap width that may be merged.
    pub w_min: usize,
    /// Largest tolerated mismatch fraction of an overlap.
    pub theta: f64,
    /// Try to close a single remaining contig into a cycle.
    pub circular: bool,
    pub search: OverlapSearch,
}

impl AssemblyConfig {
    pub fn new(w_min: usize, theta: f64) -> Self {
        Self { w_min, theta, circular: true, search: OverlapSearch::Auto }
    }
}

/// One accepted merge, `left` followed by `right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeRecord {
    pub left: usize,
    pub right: usize,
    pub width: usize,
    pub mismatches: usize,
}

/// Overlap between the end and the start of the single contig that was
/// removed to close it into a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Closure {
    pub width: usize,
    pub mismatches: usize,
}

/// Where an input sequence ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub contig: usize,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyResult {
    pub contigs: Vec<Vec<u8>>,
    /// True only when a single contig was closed into a cycle.
    pub circular: bool,
    /// More than one read-length closing overlap was admissible.
    pub closure_ambiguous: bool,
    pub closure: Option<Closure>,
    /// Merges in the order they were made; widths are non-increasing.
    pub merge_log: Vec<MergeRecord>,
    /// Placement of every input; offsets are taken modulo the contig length
    /// when circular.
    pub placements: Vec<Placement>,
}

/// `ceil(Lcrit log2 G) + 1`, just above the longest-repeat scale.
pub fn repeat_scale_w_min(lcrit: f64, genome_length: usize) -> usize {
    let lg = (genome_length.max(2) as f64).log2();
    (lcrit * lg).ceil() as usize + 1
}

/// Minimum overlap for exact greedy on error-free reads: a quarter of the
/// longest-repeat scale. Taking widths in decreasing order already keeps
/// short repeats from winning while true overlaps exist.
pub fn exact_greedy_w_min(lcrit: f64, genome_length: usize) -> usize {
    let lg = (genome_length.max(2) as f64).log2();
    ((lcrit * lg / 4.0).ceil() as usize).max(1)
}

/// Minimum overlap for reads that may carry errors or leave coverage holes:
/// the repeat scale, whatever the tolerance.
pub fn default_w_min(lcrit: f64, genome_length: usize) -> usize {
    repeat_scale_w_min(lcrit, genome_length)
}

/// Default mismatch tolerance, three times the residual per-symbol error rate.
pub fn default_theta(residual_error: f64) -> f64 {
    3.0 * residual_error
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
}

/// Largest-overlap-first merging of `reads`.
///
/// Duplicates and sequences contained in a longer one are absorbed first.
/// Suffix–prefix overlaps are then taken in order of decreasing width (ties by
/// left then right index); an overlap is merged when the left sequence has no
/// successor yet, the right has no predecessor yet and they are not already in
/// one chain. Overlapping symbols come from the left side. Contigs contained
/// in longer contigs are absorbed, and a single remaining contig is closed at
/// its largest admissible end overlap.
pub fn greedy_assemble<S: AsRef<[u8]>>(reads: &[S], config: &AssemblyConfig) -> Result<AssemblyResult> {
    if reads.is_empty() {
        return Err(Error::Shape("nothing to assemble".into()));
    }
    if reads.iter().any(|r| r.as_ref().is_empty()) {
        return Err(Error::Shape("empty sequence".into()));
    }
    if !(config.theta >= 0.0 && config.theta < 1.0) {
        return Err(Error::Range(format!("θ = {} must lie in [0,1)", config.theta)));
    }
    if config.w_min == 0 {
        return Err(Error::Range("minimum overlap must be positive".into()));
    }
    let seqs: Vec<&[u8]> = reads.iter().map(|r| r.as_ref()).collect();
    let n = seqs.len();

    // exact duplicates collapse onto their first occurrence
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut first: HashMap<&[u8], usize> = HashMap::new();
    for (i, s) in seqs.iter().enumerate() {
        match first.get(s) {
            Some(&j) => parent[i] = Some((j, 0)),
            None => {
                first.insert(s, i);
            }
        }
    }
    let distinct: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    let dseqs: Vec<&[u8]> = distinct.iter().map(|&i| seqs[i]).collect();
    let alignments = find_alignments(&dseqs, config.theta, config.w_min, config.search);

    // containment: longer (then earlier) sequences absorb shorter ones
    let rank = |i: usize| (std::cmp::Reverse(dseqs[i].len()), i);
    let mut container: Vec<Option<Alignment>> = vec![None; dseqs.len()];
    for al in alignments.iter().filter(|al| al.is_containment(&dseqs)) {
        let (a, b) = (al.a as usize, al.b as usize);
        if rank(a) >= rank(b) {
            continue;
        }
        let better = match container[b] {
            None => true,
            Some(cur) => (al.mismatches, rank(a), al.diag) < (cur.mismatches, rank(cur.a as usize), cur.diag),
        };
        if better {
            container[b] = Some(*al);
        }
    }
    // resolve chains of containment in rank order so parents are final first
    let mut order: Vec<usize> = (0..dseqs.len()).collect();
    order.sort_by_key(|&i| rank(i));
    let mut absorbed_into: Vec<Option<(usize, usize)>> = vec![None; dseqs.len()];
    for &b in &order {
        if let Some(al) = container[b] {
            let (a, d) = (al.a as usize, al.diag as usize);
            absorbed_into[b] = Some(match absorbed_into[a] {
                Some((root, off)) => (root, off + d),
                None => (a, d),
            });
        }
    }

    // greedy suffix–prefix merging over the remaining sequences
    let mut cands: Vec<&Alignment> = alignments
        .iter()
        .filter(|al| !al.is_containment(&dseqs) && absorbed_into[al.a as usize].is_none() && absorbed_into[al.b as usize].is_none())
        .collect();
    cands.sort_by_key(|al| (std::cmp::Reverse(al.width(&dseqs)), al.a, al.b));
    let m = dseqs.len();
    let mut succ: Vec<Option<(usize, usize)>> = vec![None; m];
    let mut has_pred = vec![false; m];
    let mut dsu = Dsu((0..m).collect());
    let mut merge_log = Vec::new();
    for al in cands {
        let (a, b) = (al.a as usize, al.b as usize);
        if succ[a].is_some() || has_pred[b] {
            continue;
        }
        let (ra, rb) = (dsu.find(a), dsu.find(b));
        if ra == rb {
            continue;
        }
        let w = al.width(&dseqs);
        succ[a] = Some((b, w));
        has_pred[b] = true;
        dsu.0[rb] = ra;
        merge_log.push(MergeRecord { left: distinct[a], right: distinct[b], width: w, mismatches: al.mismatches as usize });
    }

    // spell contigs along chains
    let mut contigs: Vec<Vec<u8>> = Vec::new();
    let mut place: Vec<Option<Placement>> = vec![None; m];
    for head in 0..m {
        if has_pred[head] || absorbed_into[head].is_some() {
            continue;
        }
        let ci = contigs.len();
        let mut contig = dseqs[head].to_vec();
        place[head] = Some(Placement { contig: ci, offset: 0 });
        let mut cur = head;
        while let Some((next, w)) = succ[cur] {
            let offset = contig.len() - w;
            contig.extend_from_slice(&dseqs[next][w..]);
            place[next] = Some(Placement { contig: ci, offset });
            cur = next;
        }
        contigs.push(contig);
    }

    let (contigs, contig_map) = absorb_contigs(contigs, config);
    for p in place.iter_mut().flatten() {
        let (c, off) = contig_map[p.contig];
        *p = Placement { contig: c, offset: p.offset + off };
    }
    for b in 0..m {
        if let Some((root, off)) = absorbed_into[b] {
            let rp = place[root].expect("absorbing sequences are placed");
            place[b] = Some(Placement { contig: rp.contig, offset: rp.offset + off });
        }
    }
    let mut placements = vec![Placement { contig: 0, offset: 0 }; n];
    for (di, &i) in distinct.iter().enumerate() {
        placements[i] = place[di].expect("every distinct sequence is placed");
    }
    for i in 0..n {
        if let Some((j, _)) = parent[i] {
            placements[i] = placements[j];
        }
    }

    let mut result = AssemblyResult { contigs, circular: false, closure_ambiguous: false, closure: None, merge_log, placements };
    if config.circular && result.contigs.len() == 1 {
        close_cycle(&mut result, config, seqs.iter().map(|s| s.len()).min().unwrap_or(1), seqs.iter().map(|s| s.len()).max().unwrap_or(1));
    }
    Ok(result)
}

/// Drops contigs contained (within tolerance) in longer contigs. Returns the
/// survivors and, for each original contig, its new index and offset.
fn absorb_contigs(contigs: Vec<Vec<u8>>, config: &AssemblyConfig) -> (Vec<Vec<u8>>, Vec<(usize, usize)>) {
    let n = contigs.len();
    if n < 2 {
        return (contigs, (0..n).map(|i| (i, 0)).collect());
    }
    let refs: Vec<&[u8]> = contigs.iter().map(|c| c.as_slice()).collect();
    let search = match config.search {
        OverlapSearch::Auto | OverlapSearch::Seeded => OverlapSearch::Seeded,
        OverlapSearch::Exhaustive => OverlapSearch::Exhaustive,
    };
    let rank = |i: usize| (std::cmp::Reverse(refs[i].len()), i);
    let mut best: Vec<Option<(usize, usize, usize)>> = vec![None; n];
    for al in find_alignments(&refs, config.theta, config.w_min, search) {
        let (a, b) = (al.a as usize, al.b as usize);
        if !al.is_containment(&refs) || rank(a) >= rank(b) {
            continue;
        }
        let key = (al.mismatches as usize, a, al.diag as usize);
        if best[b].is_none_or(|cur| (key.0, rank(key.1), key.2) < (cur.0, rank(cur.1), cur.2)) {
            best[b] = Some(key);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| rank(i));
    let mut root: Vec<(usize, usize)> = (0..n).map(|i| (i, 0)).collect();
    for &b in &order {
        if let Some((_, a, d)) = best[b] {
            let (r, off) = root[a];
            root[b] = (r, off + d);
        }
    }
    let mut new_index = vec![usize::MAX; n];
    let mut kept = Vec::new();
    for (i, c) in contigs.into_iter().enumerate() {
        if root[i].0 == i {
            new_index[i] = kept.len();
            kept.push(c);
        }
    }
    let map = root.iter().map(|&(r, off)| (new_index[r], off)).collect();
    (kept, map)
}

fn close_cycle(result: &mut AssemblyResult, config: &AssemblyConfig, min_read: usize, max_read: usize) {
    let contig = &result.contigs[0];
    let len = contig.len();
    let probe = 4 * max_read;
    let mut admissible: Vec<Closure> = Vec::new();
    for p in 1..len {
        let w = len - p;
        if w < config.w_min {
            break;
        }
        let head = w.min(probe);
        // cheap screen on the first symbols, then the full overlap
        if count_mismatches_upto(&contig[p..p + head], &contig[..head], 2 * mismatch_budget(config.theta, head)).is_none() {
            continue;
        }
        if let Some(mm) = count_mismatches_upto(&contig[p..], &contig[..w], mismatch_budget(config.theta, w)) {
            admissible.push(Closure { width: w, mismatches: mm });
        }
    }
    let Some(&best) = admissible.first() else {
        return;
    };
    if admissible.iter().skip(1).any(|c| c.width >= min_read) {
        result.closure_ambiguous = true;
        return;
    }
    let new_len = len - best.width;
    result.contigs[0].truncate(new_len);
    for p in &mut result.placements {
        p.offset %= new_len;
    }
    result.circular = true;
    result.closure = Some(best);
}

fn count_mismatches_upto(a: &[u8], b: &[u8], budget: usize) -> Option<usize> {
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
