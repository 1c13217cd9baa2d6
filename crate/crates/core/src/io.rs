//! Text formats for genomes, reads, channels, cleaned reads and merge logs.
//!
//! * Genome: FASTA with a header `>genome G=<len> Q=<a>,<c>,<g>,<t> seed=<s>`.
//! * Reads: a `#` header of `key=value` pairs, then `id<TAB>true_start<TAB>symbols`.
//! * Channel: the output alphabet on the first line, then four rows of
//!   `|Y|` probabilities for A, C, G, T.
//! * Cleaned reads: `id<TAB>symbols<TAB>cluster_size<TAB>claimed_start`,
//!   where the last column is evaluation metadata and may be `-`.

use std::fmt::Write as _;

use crate::assembly::MergeRecord;
use crate::correct::CleanedRead;
use crate::error::{Error, Result};
use crate::genome::{BaseDistribution, Genome, NoiseChannel, Read, ReadSet};

const FASTA_WIDTH: usize = 80;

fn header_fields(line: &str) -> impl Iterator<Item = (&str, &str)> {
    line.split_whitespace().filter_map(|t| t.split_once('='))
}

fn field<T: std::str::FromStr>(line: &str, key: &str) -> Result<Option<T>> {
    header_fields(line)
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v.parse::<T>().map_err(|_| Error::Parse(format!("invalid {key}={v}"))))
        .transpose()
}

pub fn format_genome_fasta(genome: &Genome) -> String {
    let q = genome.distribution().probs();
    let mut out = format!("genome G={} Q={},{},{},{}", genome.len(), q[0], q[1], q[2], q[3]);
    if let Some(seed) = genome.seed() {
        write!(out, " seed={seed}").expect("writing to a string");
    }
    let mut text = format!(">{out}\n");
    for chunk in genome.to_ascii().chunks(FASTA_WIDTH) {
        text.push_str(std::str::from_utf8(chunk).expect("nucleotides are ASCII"));
        text.push('\n');
    }
    text
}

/// Reads the first record of a FASTA file. Without a `Q=` header field the
/// composition of the sequence is used.
pub fn parse_genome_fasta(text: &str) -> Result<Genome> {
    let mut lines = text.lines();
    let header = lines.next().filter(|l| l.starts_with('>')).ok_or_else(|| Error::Parse("FASTA must start with '>'".into()))?;
    let seq: Vec<u8> = lines.take_while(|l| !l.starts_with('>')).flat_map(|l| l.trim().bytes()).map(|b| b.to_ascii_uppercase()).collect();
    if seq.is_empty() {
        return Err(Error::Parse("empty genome sequence".into()));
    }
    let dist = match header_fields(header).find(|(k, _)| *k == "Q") {
        Some((_, v)) => {
            let p: Vec<f64> = v.split(',').map(|x| x.parse::<f64>().map_err(|_| Error::Parse(format!("invalid Q={v}")))).collect::<Result<_>>()?;
            BaseDistribution::new(p.try_into().map_err(|_| Error::Parse("Q needs four values".into()))?)?
        }
        None => BaseDistribution::composition(&seq)?,
    };
    if let Some(g) = field::<usize>(header, "G")? {
        if g != seq.len() {
            return Err(Error::Parse(format!("header says G={g} but the sequence has {} bases", seq.len())));
        }
    }
    Genome::from_ascii(&seq, dist, field(header, "seed")?)
}

/// Extra header fields carried by a reads file.
pub fn format_reads_tsv(reads: &ReadSet, extra: &[(&str, String)]) -> String {
    let mut text = format!("# G={} L={} N={}", reads.genome_length, reads.read_length, reads.len());
    for (k, v) in extra {
        write!(text, " {k}={v}").expect("writing to a string");
    }
    text.push('\n');
    for r in &reads.reads {
        writeln!(text, "{}\t{}\t{}", r.id, r.true_start, String::from_utf8_lossy(&r.symbols)).expect("writing to a string");
    }
    text
}

/// Returns the reads and the raw header line (without `#`).
pub fn parse_reads_tsv(text: &str) -> Result<(ReadSet, String)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().and_then(|l| l.strip_prefix('#')).ok_or_else(|| Error::Parse("reads file must start with a '#' header".into()))?;
    let g: usize = field(header, "G")?.ok_or_else(|| Error::Parse("reads header lacks G".into()))?;
    let mut reads = Vec::new();
    for (no, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("read line {}: expected 3 tab-separated fields", no + 1)));
        }
        let bad = |what: &str| Error::Parse(format!("read line {}: invalid {what}", no + 1));
        reads.push(Read {
            id: cols[0].parse().map_err(|_| bad("id"))?,
            true_start: cols[1].parse().map_err(|_| bad("start"))?,
            symbols: cols[2].trim().as_bytes().to_vec(),
        });
    }
    let l = match field::<usize>(header, "L")? {
        Some(l) => l,
        None => reads.first().map(|r| r.symbols.len()).ok_or_else(|| Error::Parse("no reads and no L".into()))?,
    };
    Ok((ReadSet::new(reads, l, g)?, header.trim().to_string()))
}

pub fn format_channel(channel: &NoiseChannel) -> String {
    let alphabet: Vec<String> = channel.alphabet().iter().map(|&b| (b as char).to_string()).collect();
    let mut text = alphabet.join(" ");
    text.push('\n');
    for s in 0..4 {
        let row: Vec<String> = channel.row(s).iter().map(|p| p.to_string()).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    text
}

pub fn parse_channel(text: &str) -> Result<NoiseChannel> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let alphabet: Vec<u8> = lines.next().ok_or_else(|| Error::Parse("empty channel file".into()))?.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(4);
    for line in lines {
        rows.push(line.split_whitespace().map(|x| x.parse::<f64>().map_err(|_| Error::Parse(format!("invalid probability {x:?}")))).collect::<Result<_>>()?);
    }
    let rows: [Vec<f64>; 4] = rows.try_into().map_err(|r: Vec<Vec<f64>>| Error::Parse(format!("channel needs 4 rows, found {}", r.len())))?;
    NoiseChannel::new(alphabet, rows)
}

pub fn format_cleaned_tsv(cleaned: &[CleanedRead], with_truth: bool) -> String {
    let mut text = String::from("# id\tsymbols\tcluster_size\tclaimed_start (evaluation metadata)\n");
    for c in cleaned {
        let truth = if with_truth { c.claimed_start.to_string() } else { "-".into() };
        writeln!(text, "{}\t{}\t{}\t{truth}", c.id, String::from_utf8_lossy(&c.symbols), c.cluster_size()).expect("writing to a string");
    }
    text
}

/// Cleaned reads as assembler input. Cluster members are not stored, so
/// the claimed region is the claimed start alone, or empty when unknown.
pub fn parse_cleaned_tsv(text: &str) -> Result<Vec<CleanedRead>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#')) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::Parse(format!("cleaned line {}: expected 4 tab-separated fields", no + 1)));
        }
        let bad = |what: &str| Error::Parse(format!("cleaned line {}: invalid {what}", no + 1));
        let id = cols[0].parse().map_err(|_| bad("id"))?;
        cols[2].parse::<usize>().map_err(|_| bad("cluster size"))?;
        let (claimed_start, claimed_region) = match cols[3].trim() {
            "-" => (0, Vec::new()),
            s => {
                let v: usize = s.parse().map_err(|_| bad("claimed start"))?;
                (v, vec![v])
            }
        };
        out.push(CleanedRead { id, symbols: cols[1].trim().as_bytes().to_vec(), members: Vec::new(), claimed_start, claimed_region });
    }
    Ok(out)
}

pub fn format_merge_log(log: &[MergeRecord]) -> String {
    let mut text = String::from("# left\tright\twidth\tmismatches\n");
    for m in log {
        writeln!(text, "{}\t{}\t{}\t{}", m.left, m.right, m.width, m.mismatches).expect("writing to a string");
    }
    text
}

pub fn format_contigs_fasta(contigs: &[Vec<u8>], circular: bool) -> String {
    let mut text = String::new();
    for (i, c) in contigs.iter().enumerate() {
        writeln!(text, ">contig{i} length={} circular={circular}", c.len()).expect("writing to a string");
        for chunk in c.chunks(FASTA_WIDTH) {
            text.push_str(&String::from_utf8_lossy(chunk));
            text.push('\n');
        }
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{corrupt_reads, generate_genome, sample_reads};

    #[test]
    fn genome_round_trip() {
        let g = generate_genome(250, &BaseDistribution::new([0.1, 0.2, 0.3, 0.4]).unwrap(), 5).unwrap();
        let back = parse_genome_fasta(&format_genome_fasta(&g)).unwrap();
        assert_eq!(back.to_ascii(), g.to_ascii());
        assert_eq!(back.distribution(), g.distribution());
        assert_eq!(back.seed(), Some(5));
        assert!(parse_genome_fasta(">genome G=3\nACGT\n").is_err());
        assert!(parse_genome_fasta("ACGT").is_err());
    }

    #[test]
    fn reads_and_channel_round_trip() {
        let g = generate_genome(300, &BaseDistribution::uniform(), 1).unwrap();
        let rs = sample_reads(&g, 20, 12, 2).unwrap();
        let ch = NoiseChannel::new(b"ACGTN".to_vec(), [vec![0.8, 0.05, 0.05, 0.05, 0.05], vec![0.05, 0.8, 0.05, 0.05, 0.05], vec![0.05, 0.05, 0.8, 0.05, 0.05], vec![0.05, 0.05, 0.05, 0.8, 0.05]]).unwrap();
        let noisy = corrupt_reads(&rs, &ch, 3).unwrap();
        let (back, header) = parse_reads_tsv(&format_reads_tsv(&noisy, &[("seed", "2".into())])).unwrap();
        assert_eq!(back, noisy);
        assert!(header.contains("seed=2"));
        assert_eq!(parse_channel(&format_channel(&ch)).unwrap(), ch);
        assert!(parse_channel("ACGT\n1 0 0 0\n").is_err());
    }

    #[test]
    fn cleaned_round_trip() {
        let c = CleanedRead { id: 3, symbols: b"ACGT".to_vec(), members: Vec::new(), claimed_start: 7, claimed_region: vec![7] };
        let back = parse_cleaned_tsv(&format_cleaned_tsv(std::slice::from_ref(&c), true)).unwrap();
        assert_eq!(back, vec![c.clone()]);
        let hidden = parse_cleaned_tsv(&format_cleaned_tsv(&[c], false)).unwrap();
        assert!(hidden[0].claimed_region.is_empty());
    }
}
