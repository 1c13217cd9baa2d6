use crate::error::{Error, Result};
use crate::genome::ReadSet;

/// Provenance of one K-mer: which read it came from and where.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PoolEntry {
    /// Position of the read in its `ReadSet`.
    pub read_index: u32,
    pub read_id: u32,
    pub offset: u32,
}

/// All length-K substrings of all reads.
#[derive(Debug, Clone)]
pub struct KmerPool<'a> {
    reads: &'a ReadSet,
    k: usize,
    entries: Vec<PoolEntry>,
}

impl<'a> KmerPool<'a> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn reads(&self) -> &'a ReadSet {
        self.reads
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// K-mers contributed by each read.
    pub fn per_read(&self) -> usize {
        self.reads.read_length - self.k + 1
    }

    pub fn symbols(&self, e: &PoolEntry) -> &'a [u8] {
        let o = e.offset as usize;
        &self.reads.reads[e.read_index as usize].symbols[o..o + self.k]
    }

    /// Genome position the K-mer was drawn from (ground truth).
    pub fn true_location(&self, e: &PoolEntry) -> usize {
        let r = &self.reads.reads[e.read_index as usize];
        (r.true_start + e.offset as usize) % self.reads.genome_length
    }
}

pub fn extract_kmers(reads: &ReadSet, k: usize) -> Result<KmerPool<'_>> {
    let l = reads.read_length;
    if k == 0 || k > l {
        return Err(Error::Range(format!("K = {k} must lie in [1, {l}]")));
    }
    let entries = reads
        .reads
        .iter()
        .enumerate()
        .flat_map(|(idx, r)| (0..=l - k).map(move |o| PoolEntry { read_index: idx as u32, read_id: r.id, offset: o as u32 }))
        .collect();
    Ok(KmerPool { reads, k, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::Read;

    fn set(reads: &[&str]) -> ReadSet {
        let l = reads[0].len();
        ReadSet::new(reads.iter().enumerate().map(|(i, s)| Read { id: i as u32 + 10, true_start: i, symbols: s.as_bytes().to_vec() }).collect(), l, 100).unwrap()
    }

    #[test]
    fn offsets_and_counts() {
        let rs = set(&["ACGTA"]);
        let pool = extract_kmers(&rs, 3).unwrap();
        assert_eq!(pool.len(), 3);
        assert_eq!(pool.entries().iter().map(|e| e.offset).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(pool.symbols(&pool.entries()[2]), b"GTA");
        let rs = set(&["ACGT", "TTTT", "GGGG"]);
        assert_eq!(extract_kmers(&rs, 4).unwrap().len(), 3);
        assert!(matches!(extract_kmers(&rs, 5), Err(Error::Range(_))));
    }

    #[test]
    fn duplicates_keep_provenance() {
        let rs = set(&["ACGT", "ACGT"]);
        let pool = extract_kmers(&rs, 4).unwrap();
        let (a, b) = (pool.entries()[0], pool.entries()[1]);
        assert_eq!(pool.symbols(&a), pool.symbols(&b));
        assert_ne!(a.read_id, b.read_id);
        assert_eq!(pool.true_location(&b), 1);
    }
}
