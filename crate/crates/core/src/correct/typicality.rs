//! Joint-typicality tests of M aligned K-mers against `F_P^M`, the law of M
//! independent channel observations of one base drawn from `P`.
//!
//! A cell with expected frequency `F` passes when `|n/K - F| <= ε F`; cells
//! with `F = 0` must be empty.

use crate::error::{Error, Result};
use crate::genome::{BaseDistribution, NoiseChannel};

/// Which statistics of the aligned K-mers are compared against `F_P^M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TypicalityOrder {
    /// The symbol type pooled over all members (against `F_P`) and the
    /// agree/disagree type pooled over all member pairs (against the
    /// shared-base pair law). Both are coarsenings of the full joint type, so
    /// a full-joint pass implies a pass here.
    #[default]
    MarginalsAndPairs,
    /// The type of the K column tuples over `Y^M`; only feasible for small M.
    FullJoint,
}

impl std::str::FromStr for TypicalityOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginals_and_pairs" | "pairs" => Ok(Self::MarginalsAndPairs),
            "full_joint" | "full" => Ok(Self::FullJoint),
            other => Err(Error::Parse(format!("unknown typicality order {other:?}"))),
        }
    }
}

/// Largest `|Y|^M` the full-joint test will enumerate.
pub const FULL_JOINT_MAX_CELLS: usize = 1 << 20;

// Slack for float rounding. The coarse test gets a looser slack because its
// expected frequencies are sums of full-joint cells.
const FULL_TOL: f64 = 1e-12;
const COARSE_TOL: f64 = 1e-9;

#[inline]
fn within_band(count: usize, total: usize, expected: f64, eps: f64, tol: f64) -> bool {
    let freq = count as f64 / total as f64;
    (freq - expected).abs() <= eps * expected + tol
}

/// `log2 F_P^M(column)`; negative infinity when the column is impossible.
pub fn f_pm_log_prob(column: &[u8], p: &BaseDistribution, channel: &NoiseChannel) -> f64 {
    let mut idx = Vec::with_capacity(column.len());
    for &y in column {
        match channel.symbol_index(y) {
            Some(i) => idx.push(i),
            None => return f64::NEG_INFINITY,
        }
    }
    let terms: Vec<f64> = (0..4)
        .filter(|&s| p.get(s) > 0.0)
        .map(|s| p.get(s).log2() + idx.iter().map(|&y| channel.prob(s, y).log2()).sum::<f64>())
        .filter(|t| t.is_finite())
        .collect();
    let Some(max) = terms.iter().copied().reduce(f64::max) else {
        return f64::NEG_INFINITY;
    };
    max + terms.iter().map(|t| (t - max).exp2()).sum::<f64>().log2()
}

/// Symbol indices of each member, or `None` if a member is not over `Y`.
fn encode(members: &[&[u8]], channel: &NoiseChannel) -> Option<Vec<Vec<usize>>> {
    members.iter().map(|m| m.iter().map(|&y| channel.symbol_index(y)).collect()).collect()
}

pub fn typicality_test(
    members: &[&[u8]],
    p: &BaseDistribution,
    channel: &NoiseChannel,
    eps: f64,
    order: TypicalityOrder,
) -> Result<bool> {
    let Some(first) = members.first() else {
        return Err(Error::Shape("typicality test needs at least one sequence".into()));
    };
    let k = first.len();
    if k == 0 || members.iter().any(|m| m.len() != k) {
        return Err(Error::Shape("members must share a positive length".into()));
    }
    let Some(coded) = encode(members, channel) else {
        return Ok(false);
    };
    match order {
        TypicalityOrder::MarginalsAndPairs => Ok(pooled_test(&coded, k, p, channel, eps)),
        TypicalityOrder::FullJoint => full_joint_test(&coded, k, p, channel, eps),
    }
}

fn pooled_test(coded: &[Vec<usize>], k: usize, p: &BaseDistribution, channel: &NoiseChannel, eps: f64) -> bool {
    let ny = channel.output_size();
    let m = coded.len();

    let mut counts = vec![0usize; ny];
    for seq in coded {
        for &y in seq {
            counts[y] += 1;
        }
    }
    let marginal = channel.output_marginal(p);
    if !(0..ny).all(|y| within_band(counts[y], m * k, marginal[y], eps, COARSE_TOL)) {
        return false;
    }
    if m < 2 {
        return true;
    }

    let agree_prob: f64 = (0..4).map(|s| p.get(s) * channel.row(s).iter().map(|q| q * q).sum::<f64>()).sum();
    let pairs = m * (m - 1) / 2;
    let mut agree = 0usize;
    for i in 0..m {
        for j in i + 1..m {
            agree += coded[i].iter().zip(&coded[j]).filter(|(a, b)| a == b).count();
        }
    }
    let total = pairs * k;
    within_band(agree, total, agree_prob, eps, COARSE_TOL) && within_band(total - agree, total, 1.0 - agree_prob, eps, COARSE_TOL)
}

fn full_joint_test(coded: &[Vec<usize>], k: usize, p: &BaseDistribution, channel: &NoiseChannel, eps: f64) -> Result<bool> {
    let ny = channel.output_size();
    let m = coded.len();
    let cells = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(ny)).filter(|&c| c <= FULL_JOINT_MAX_CELLS);
    let Some(cells) = cells else {
        return Err(Error::Range(format!("full joint over |Y|^M with |Y| = {ny}, M = {m} is too large")));
    };
    let mut counts = vec![0usize; cells];
    for col in 0..k {
        let cell = coded.iter().rev().fold(0usize, |acc, seq| acc * ny + seq[col]);
        counts[cell] += 1;
    }
    let mut tuple = vec![0usize; m];
    for (cell, &count) in counts.iter().enumerate() {
        let mut c = cell;
        for t in tuple.iter_mut() {
            *t = c % ny;
            c /= ny;
        }
        let expected: f64 = (0..4).map(|s| p.get(s) * tuple.iter().map(|&y| channel.prob(s, y)).product::<f64>()).sum();
        if !within_band(count, k, expected, eps, FULL_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}
