//! Column-wise maximum-likelihood base calls.

use crate::genome::{BaseDistribution, NoiseChannel, BASES};

/// Log-likelihood table `log2 π(y|s)` for fast column scoring.
#[derive(Debug, Clone)]
pub struct LikelihoodTable {
    log: [Vec<f64>; 4],
}

impl LikelihoodTable {
    pub fn new(channel: &NoiseChannel) -> Self {
        Self { log: std::array::from_fn(|s| channel.row(s).iter().map(|p| p.log2()).collect()) }
    }

    /// Most likely base (index into `A<C<G<T`) given per-symbol counts of a
    /// column, with a uniform prior. Ties go to the earliest base.
    ///
    /// Terms are summed in sorted order so that bases whose likelihoods are
    /// permutations of each other score bit-identically.
    pub fn call(&self, counts: &[usize]) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        let mut terms = Vec::with_capacity(counts.len());
        for s in 0..4 {
            terms.clear();
            let mut impossible = false;
            for (y, &n) in counts.iter().enumerate() {
                if n == 0 {
                    continue;
                }
                let l = self.log[s][y];
                if l == f64::NEG_INFINITY {
                    impossible = true;
                    break;
                }
                terms.push(n as f64 * l);
            }
            let score = if impossible {
                f64::NEG_INFINITY
            } else {
                terms.sort_by(|a, b| a.total_cmp(b));
                terms.iter().sum()
            };
            if score > best_score {
                best = s;
                best_score = score;
            }
        }
        best
    }
}

/// ML consensus of equal-length sequences over the channel's output alphabet.
/// Symbols outside the alphabet carry no evidence.
pub fn ml_consensus_of(members: &[&[u8]], channel: &NoiseChannel) -> Vec<u8> {
    let table = LikelihoodTable::new(channel);
    let k = members.first().map_or(0, |m| m.len());
    let mut counts = vec![0usize; channel.output_size()];
    (0..k)
        .map(|i| {
            counts.iter_mut().for_each(|c| *c = 0);
            for m in members {
                if let Some(y) = channel.symbol_index(m[i]) {
                    counts[y] += 1;
                }
            }
            BASES[table.call(&counts)]
        })
        .collect()
}

/// Probability that the ML call from `m` independent observations differs from
/// the true base, for a base drawn from `q`. Exact, by enumerating the count
/// vectors of `m` draws over `Y`.
pub fn predicted_call_error(channel: &NoiseChannel, q: &BaseDistribution, m: usize) -> f64 {
    let table = LikelihoodTable::new(channel);
    let ny = channel.output_size();
    let mut ln_fact = vec![0.0f64; m + 1];
    for i in 1..=m {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let mut error = 0.0;
    let mut counts = vec![0usize; ny];
    compositions(m, ny, &mut counts, 0, &mut |counts| {
        let called = table.call(counts);
        for s in 0..4 {
            if s == called || q.get(s) == 0.0 {
                continue;
            }
            let mut ln_p = ln_fact[m];
            let mut zero = false;
            for (y, &n) in counts.iter().enumerate() {
                if n == 0 {
                    continue;
                }
                let p = channel.prob(s, y);
                if p == 0.0 {
                    zero = true;
                    break;
                }
                ln_p += n as f64 * p.ln() - ln_fact[n];
            }
            if !zero {
                error += q.get(s) * ln_p.exp();
            }
        }
    });
    error
}

fn compositions(remaining: usize, parts: usize, counts: &mut [usize], at: usize, f: &mut impl FnMut(&[usize])) {
    if at + 1 == parts {
        counts[at] = remaining;
        f(counts);
        return;
    }
    for n in 0..=remaining {
        counts[at] = n;
        compositions(remaining - n, parts, counts, at + 1, f);
    }
}
