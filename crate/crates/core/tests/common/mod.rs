//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use shotgun::assembly::mismatch_budget;

/// Exact ML call for a column over a channel given as integer weights with a
/// common row total: the likelihood of base `s` is proportional to
/// `prod_y w[s][y]^count[y]`. Ties go to the earliest base.
pub fn brute_force_call(weights: &[Vec<u64>; 4], counts: &[usize]) -> usize {
    let mut best = 0;
    let mut best_score: Option<u128> = None;
    for (s, row) in weights.iter().enumerate() {
        let mut score: u128 = 1;
        for (y, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                score *= row[y] as u128;
            }
        }
        if best_score.is_none_or(|b| score > b) {
            best = s;
            best_score = Some(score);
        }
    }
    best
}

/// Smallest start with the fewest mismatches over all circular placements.
pub fn naive_quality(read: &[u8], genome: &[u8]) -> (usize, usize) {
    let g = genome.len();
    let mut best = (usize::MAX, 0);
    for start in 0..g {
        let mm = read.iter().enumerate().filter(|&(j, &y)| genome[(start + j) % g] != y).count();
        if mm < best.0 {
            best = (mm, start);
        }
    }
    best
}

fn mismatches(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Best placement of `b` inside `a` as (mismatches, diag), if any within budget.
fn containment(a: &[u8], b: &[u8], theta: f64) -> Option<(usize, usize)> {
    if b.len() > a.len() {
        return None;
    }
    (0..=a.len() - b.len()).filter_map(|d| {
        let mm = mismatches(&a[d..d + b.len()], b);
        (mm <= mismatch_budget(theta, b.len())).then_some((mm, d))
    }).min()
}

/// Indices of sequences that survive absorption into a longer (or equally
/// long and earlier) sequence.
fn survivors(seqs: &[Vec<u8>], theta: f64) -> Vec<usize> {
    (0..seqs.len())
        .filter(|&b| {
            !(0..seqs.len()).any(|a| {
                let longer = seqs[a].len() > seqs[b].len() || (seqs[a].len() == seqs[b].len() && a < b);
                a != b && longer && containment(&seqs[a], &seqs[b], theta).is_some()
            })
        })
        .collect()
}

#[derive(Debug, PartialEq)]
pub struct OracleAssembly {
    pub contigs: Vec<Vec<u8>>,
    pub circular: bool,
    pub ambiguous: bool,
}

/// Reference greedy: every admissible suffix–prefix overlap between surviving
/// reads is listed, sorted globally by (width desc, left, right) and merged
/// whenever the left end is free, the right start is free and no cycle forms.
pub fn greedy_oracle(reads: &[Vec<u8>], w_min: usize, theta: f64, circular: bool) -> OracleAssembly {
    let mut distinct: Vec<Vec<u8>> = Vec::new();
    for r in reads {
        if !distinct.contains(r) {
            distinct.push(r.clone());
        }
    }
    let alive = survivors(&distinct, theta);
    let mut overlaps = Vec::new();
    for &a in &alive {
        for &b in &alive {
            if a == b {
                continue;
            }
            let (sa, sb) = (&distinct[a], &distinct[b]);
            for w in w_min..sa.len() {
                if w >= sb.len() {
                    break;
                }
                if mismatches(&sa[sa.len() - w..], &sb[..w]) <= mismatch_budget(theta, w) {
                    overlaps.push((std::cmp::Reverse(w), a, b));
                }
            }
        }
    }
    overlaps.sort();
    let n = distinct.len();
    let mut next: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let head_of = |prev: &Vec<Option<usize>>, mut x: usize| {
        while let Some(p) = prev[x] {
            x = p;
        }
        x
    };
    for (std::cmp::Reverse(w), a, b) in overlaps {
        if next[a].is_some() || prev[b].is_some() || head_of(&prev, a) == head_of(&prev, b) {
            continue;
        }
        next[a] = Some((b, w));
        prev[b] = Some(a);
    }
    let mut contigs = Vec::new();
    for &h in &alive {
        if prev[h].is_some() {
            continue;
        }
        let mut c = distinct[h].clone();
        let mut cur = h;
        while let Some((b, w)) = next[cur] {
            c.extend_from_slice(&distinct[b][w..]);
            cur = b;
        }
        contigs.push(c);
    }
    let kept = survivors(&contigs, theta);
    let mut contigs: Vec<Vec<u8>> = kept.into_iter().map(|i| contigs[i].clone()).collect();

    let (mut closed, mut ambiguous) = (false, false);
    if circular && contigs.len() == 1 {
        let c = &contigs[0];
        let min_read = reads.iter().map(Vec::len).min().unwrap_or(1);
        let probe = 4 * reads.iter().map(Vec::len).max().unwrap_or(1);
        let admissible: Vec<usize> = (w_min..c.len())
            .rev()
            .filter(|&w| {
                let p = c.len() - w;
                let head = w.min(probe);
                mismatches(&c[p..p + head], &c[..head]) <= 2 * mismatch_budget(theta, head) && mismatches(&c[p..], &c[..w]) <= mismatch_budget(theta, w)
            })
            .collect();
        if let Some(&best) = admissible.first() {
            if admissible[1..].iter().any(|&w| w >= min_read) {
                ambiguous = true;
            } else {
                let len = c.len() - best;
                contigs[0].truncate(len);
                closed = true;
            }
        }
    }
    OracleAssembly { contigs, circular: closed, ambiguous }
}
