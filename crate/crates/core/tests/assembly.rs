mod common;

use proptest::prelude::*;

use shotgun::assembly::{assess_assembly, greedy_assemble, raw_as_cleaned, rotation_equal, AssemblyConfig, AssemblyResult, OverlapSearch, Placement};
use shotgun::genome::{generate_genome, sample_reads};
use shotgun::BaseDistribution;

use common::greedy_oracle;

fn reads_strategy() -> impl Strategy<Value = (Vec<Vec<u8>>, usize, f64, bool)> {
    (prop::collection::vec(prop::sample::select(b"ACGT".to_vec()), 12..40), 1usize..8, 2usize..5, prop::sample::select(vec![0.0, 0.1, 0.2]), any::<bool>(), any::<u64>()).prop_map(
        |(genome, n, w_min, theta, circular, seed)| {
            let g = genome.len();
            let mut x = seed;
            let mut next = move || {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (x >> 33) as usize
            };
            let reads = (0..n)
                .map(|_| {
                    let (s, l) = (next() % g, 4 + next() % 9);
                    (0..l.min(g)).map(|j| genome[(s + j) % g]).collect()
                })
                .collect();
            (reads, w_min, theta, circular)
        },
    )
}

proptest! {
    #[test]
    fn matches_global_sort_oracle((reads, w_min, theta, circular) in reads_strategy()) {
        let cfg = AssemblyConfig { circular, search: OverlapSearch::Exhaustive, ..AssemblyConfig::new(w_min, theta) };
        let got = greedy_assemble(&reads, &cfg).unwrap();
        let want = greedy_oracle(&reads, w_min, theta, circular);
        prop_assert_eq!(&got.contigs, &want.contigs);
        prop_assert_eq!(got.circular, want.circular);
        prop_assert_eq!(got.closure_ambiguous, want.ambiguous);
    }

    #[test]
    fn merge_widths_never_increase((reads, w_min, theta, _c) in reads_strategy()) {
        let got = greedy_assemble(&reads, &AssemblyConfig::new(w_min, theta)).unwrap();
        prop_assert!(got.merge_log.windows(2).all(|w| w[0].width >= w[1].width));
        prop_assert!(got.merge_log.iter().all(|m| m.width >= w_min));
    }

    #[test]
    fn placements_spell_exact_reads((reads, w_min, _t, circular) in reads_strategy()) {
        let cfg = AssemblyConfig { circular, ..AssemblyConfig::new(w_min, 0.0) };
        let got = greedy_assemble(&reads, &cfg).unwrap();
        for (r, p) in reads.iter().zip(&got.placements) {
            let c = &got.contigs[p.contig];
            let fits = if got.circular { true } else { p.offset + r.len() <= c.len() };
            prop_assert!(fits);
            prop_assert!(r.iter().enumerate().all(|(j, &y)| c[(p.offset + j) % c.len()] == y));
        }
    }
}

fn longest_repeat(g: &[u8]) -> usize {
    let n = g.len();
    let mut best = 0;
    for i in 0..n {
        for j in i + 1..n {
            let mut l = 0;
            while l < n && g[(i + l) % n] == g[(j + l) % n] {
                l += 1;
            }
            best = best.max(l);
        }
    }
    best
}

#[test]
fn noiseless_reads_beyond_the_longest_repeat_reconstruct() {
    for seed in 0..5 {
        let genome = generate_genome(400, &BaseDistribution::uniform(), seed).unwrap();
        let w_min = longest_repeat(&genome.to_ascii()) + 1;
        let l = w_min + 10;
        let reads = sample_reads(&genome, 400, l, seed).unwrap();
        let starts: Vec<usize> = reads.reads.iter().map(|r| r.true_start).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let wrap = starts[0] + 400;
        // every junction must overlap by at least w_min
        if (0..starts.len()).any(|i| starts.get(i + 1).unwrap_or(&wrap) - starts[i] + w_min > l) {
            continue;
        }
        let symbols: Vec<Vec<u8>> = reads.reads.iter().map(|r| r.symbols.clone()).collect();
        let a = greedy_assemble(&symbols, &AssemblyConfig::new(w_min, 0.0)).unwrap();
        assert_eq!(a.contigs.len(), 1, "seed {seed}");
        assert!(a.circular && rotation_equal(&a.contigs[0], &genome.to_ascii()), "seed {seed}");
        let assessed = assess_assembly(&raw_as_cleaned(&reads), &genome, &a).unwrap();
        assert!(assessed.perfect_reconstruction && assessed.mislaid.iter().all(|m| !m));
    }
}

#[test]
fn reconstruction_is_invariant_to_rotating_the_cycle() {
    let genome = generate_genome(60, &BaseDistribution::uniform(), 9).unwrap();
    let reads = sample_reads(&genome, 200, 15, 9).unwrap();
    let symbols: Vec<Vec<u8>> = reads.reads.iter().map(|r| r.symbols.clone()).collect();
    let a = greedy_assemble(&symbols, &AssemblyConfig::new(8, 0.0)).unwrap();
    assert!(a.circular && a.contigs.len() == 1);
    let cleaned = raw_as_cleaned(&reads);
    let len = a.contigs[0].len();
    for r in 0..len {
        let contig: Vec<u8> = (0..len).map(|i| a.contigs[0][(i + r) % len]).collect();
        let placements = a.placements.iter().map(|p| Placement { contig: 0, offset: (p.offset + len - r) % len }).collect();
        let rotated = AssemblyResult { contigs: vec![contig], placements, ..a.clone() };
        assert!(assess_assembly(&cleaned, &genome, &rotated).unwrap().perfect_reconstruction, "rotation {r}");
    }
}

#[test]
fn ambiguous_closure_stays_linear() {
    // a periodic contig closes at widths 9, 6 and 3; the contained read makes 3 a read length
    let reads: Vec<&[u8]> = vec![b"ACGACGACGACG", b"ACG"];
    let a = greedy_assemble(&reads, &AssemblyConfig::new(3, 0.0)).unwrap();
    assert!(!a.circular && a.closure_ambiguous);
}

#[test]
fn out_of_range_parameters_are_errors() {
    let reads: Vec<&[u8]> = vec![b"ACGT"];
    assert!(greedy_assemble(&reads, &AssemblyConfig::new(0, 0.0)).is_err());
    assert!(greedy_assemble(&reads, &AssemblyConfig::new(2, 1.0)).is_err());
    assert!(greedy_assemble(&[b"".as_slice()], &AssemblyConfig::new(2, 0.0)).is_err());
}
