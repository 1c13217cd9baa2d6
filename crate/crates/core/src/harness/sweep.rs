//! Resumable parameter sweeps.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::{run_trial, ChannelSpec, CountSpec, LengthSpec, Pipeline, TrialConfig, TrialResult};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, DOMAIN_TRIAL};

pub const CSV_HEADER: &str = "cell_id,Lbar,multiple,delta,pipeline,trials,successes,wilson_lo,wilson_hi";

const WILSON_Z: f64 = 1.959964;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    /// Settings shared by every cell; its length, count, channel, pipeline
    /// and seed are replaced per cell and trial.
    pub template: TrialConfig,
    pub lbar: Vec<f64>,
    pub multiple: Vec<f64>,
    pub delta: Vec<f64>,
    pub pipelines: Vec<Pipeline>,
    pub trials: usize,
    pub base_seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            template: TrialConfig::default(),
            lbar: vec![2.0],
            multiple: vec![1.5],
            delta: vec![0.0],
            pipelines: vec![Pipeline::NoiselessGreedy],
            trials: 10,
            base_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cell {
    index: usize,
    lbar: f64,
    multiple: f64,
    delta: f64,
    pipeline: Pipeline,
    config: TrialConfig,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Range("trials per cell must be at least 1".into()));
        }
        if self.lbar.is_empty() || self.multiple.is_empty() || self.delta.is_empty() || self.pipelines.is_empty() {
            return Err(Error::Range("every sweep axis needs at least one value".into()));
        }
        Ok(())
    }

    /// Cells in `(L̄, multiple, δ, pipeline)` order.
    fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &lbar in &self.lbar {
            for &multiple in &self.multiple {
                for &delta in &self.delta {
                    for &pipeline in &self.pipelines {
                        let config = TrialConfig {
                            length: LengthSpec::Normalized(lbar),
                            count: CountSpec::Multiple(multiple),
                            channel: ChannelSpec::Symmetric(delta),
                            pipeline,
                            seed: 0,
                            ..self.template.clone()
                        };
                        out.push(Cell { index: out.len(), lbar, multiple, delta, pipeline, config });
                    }
                }
            }
        }
        out
    }

    /// Seed of one trial, from the base seed, cell index and trial index.
    pub fn trial_seed(&self, cell_index: usize, trial: usize) -> u64 {
        derive_seed(self.base_seed, &[DOMAIN_TRIAL, cell_index as u64, trial as u64])
    }
}

/// Stable identifier of a cell: FNV-1a over its full configuration, trial
/// count, base seed and index.
pub fn cell_id(config: &TrialConfig, trials: usize, base_seed: u64, cell_index: usize) -> String {
    let canonical = format!("{config:?}|{trials}|{base_seed}|{cell_index}");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canonical.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell_id: String,
    pub lbar: f64,
    pub multiple: f64,
    pub delta: f64,
    pub pipeline: Pipeline,
    pub trials: usize,
    pub successes: usize,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl CellSummary {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.6},{:.6}",
            self.cell_id, self.lbar, self.multiple, self.delta, self.pipeline, self.trials, self.successes, self.wilson_lo, self.wilson_hi
        )
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse(format!("expected 9 fields in {line:?}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad count {s:?}")));
        Ok(Self {
            cell_id: f[0].to_string(),
            lbar: num(f[1])?,
            multiple: num(f[2])?,
            delta: num(f[3])?,
            pipeline: f[4].parse()?,
            trials: int(f[5])?,
            successes: int(f[6])?,
            wilson_lo: num(f[7])?,
            wilson_hi: num(f[8])?,
        })
    }
}

fn detail_line(id: &str, cell: &Cell, trial: usize, r: &TrialResult) -> String {
    let o = &r.outcome;
    format!(
        "cell_id={id} cell={} trial={trial} seed={} pipeline={} Lbar={} multiple={} delta={} L={} N={} success={} perfect_layout={} perfect_reconstruction={} d_max={:.6} tau={:.6} cleaned={} purity_violations={} coverage={:.6} contigs={} circular={} misplaced={} theta={:.6} w_min={} failure={} wall_time={:.3}",
        cell.index,
        o.seed,
        o.pipeline,
        cell.lbar,
        cell.multiple,
        cell.delta,
        o.read_length,
        o.read_count,
        o.success,
        o.perfect_layout,
        o.perfect_reconstruction,
        o.d_max,
        o.tau,
        o.cleaned_count,
        o.purity_violations,
        o.coverage,
        o.contigs,
        o.circular,
        o.misplaced,
        o.theta,
        o.w_min,
        o.failure.map_or("none", |f| f.name()),
        r.wall_time
    )
}

fn write_csv(path: &Path, rows: &BTreeMap<usize, String>) -> Result<()> {
    let tmp = path.with_extension("csv.partial");
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for row in rows.values() {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs every cell of `grid`. With `csv`, rows already present for a cell id
/// are kept verbatim and the cell is skipped; the file is rewritten in cell
/// order after each completed cell. With `details`, one `key=value` line per
/// newly run trial is appended.
pub fn run_sweep(grid: &SweepGrid, csv: Option<&Path>, details: Option<&Path>) -> Result<Vec<CellSummary>> {
    grid.validate()?;
    let cells = grid.cells();
    let mut existing: HashMap<String, String> = HashMap::new();
    if let Some(path) = csv.filter(|p| p.exists()) {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        if let Some(header) = lines.next() {
            if header.trim_end() != CSV_HEADER {
                return Err(Error::Parse(format!("{} does not start with the sweep header", path.display())));
            }
        }
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let id = line.split(',').next().unwrap_or_default().to_string();
            existing.insert(id, line.to_string());
        }
    }

    let mut rows: BTreeMap<usize, String> = BTreeMap::new();
    let mut out = Vec::with_capacity(cells.len());
    for cell in &cells {
        let id = cell_id(&cell.config, grid.trials, grid.base_seed, cell.index);
        if let Some(row) = existing.get(&id) {
            out.push(CellSummary::parse_csv_row(row)?);
            rows.insert(cell.index, row.clone());
            continue;
        }
        let results: Vec<TrialResult> = (0..grid.trials)
            .into_par_iter()
            .map(|t| run_trial(&TrialConfig { seed: grid.trial_seed(cell.index, t), ..cell.config.clone() }))
            .collect::<Result<_>>()?;
        let successes = results.iter().filter(|r| r.success()).count();
        let (wilson_lo, wilson_hi) = wilson_interval(successes, grid.trials);
        let summary = CellSummary {
            cell_id: id.clone(),
            lbar: cell.lbar,
            multiple: cell.multiple,
            delta: cell.delta,
            pipeline: cell.pipeline,
            trials: grid.trials,
            successes,
            wilson_lo,
            wilson_hi,
        };
        if let Some(path) = details {
            let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
            for (t, r) in results.iter().enumerate() {
                writeln!(f, "{}", detail_line(&id, cell, t, r))?;
            }
        }
        rows.insert(cell.index, summary.to_csv_row());
        if let Some(path) = csv {
            write_csv(path, &rows)?;
        }
        out.push(summary);
    }
    if let Some(path) = csv {
        write_csv(path, &rows)?;
    }
    Ok(out)
}

/// First point where a piecewise-linear curve through `points` crosses 0.5.
pub fn crossing_point(points: &[(f64, f64)]) -> Result<f64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pts.windows(2) {
        let ((x0, r0), (x1, r1)) = (w[0], w[1]);
        if r0 == 0.5 {
            return Ok(x0);
        }
        if (r0 < 0.5) != (r1 < 0.5) {
            return Ok(x0 + (0.5 - r0) / (r1 - r0) * (x1 - x0));
        }
    }
    match pts.last() {
        Some(&(x, 0.5)) => Ok(x),
        _ => Err(Error::EstimateUnavailable("success rate never crosses 0.5".into())),
    }
}

/// Normalized read length at which the pooled success rate of `pipeline`
/// crosses 0.5, interpolating between grid values of L̄.
pub fn critical_length_estimate(rows: &[CellSummary], pipeline: Pipeline) -> Result<f64> {
    let mut pooled: Vec<(f64, usize, usize)> = Vec::new();
    for r in rows.iter().filter(|r| r.pipeline == pipeline) {
        match pooled.iter_mut().find(|p| p.0 == r.lbar) {
            Some(p) => {
                p.1 += r.successes;
                p.2 += r.trials;
            }
            None => pooled.push((r.lbar, r.successes, r.trials)),
        }
    }
    let points: Vec<(f64, f64)> = pooled.iter().map(|&(x, s, t)| (x, s as f64 / t as f64)).collect();
    crossing_point(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(10, 20);
        assert!((lo - 0.299298).abs() < 1e-5 && (hi - 0.700702).abs() < 1e-5, "{lo} {hi}");
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277533).abs() < 1e-5, "{hi}");
    }

    #[test]
    fn crossing_examples() {
        assert!((crossing_point(&[(0.8, 0.0), (1.2, 1.0)]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(crossing_point(&[(0.8, 1.0), (1.2, 1.0)]), Err(Error::EstimateUnavailable(_))));
        assert!(crossing_point(&[]).is_err());
    }

    #[test]
    fn rows_round_trip() {
        let s = CellSummary {
            cell_id: "00ff".into(),
            lbar: 2.5,
            multiple: 1.5,
            delta: 0.1,
            pipeline: Pipeline::CorrectThenGreedy,
            trials: 20,
            successes: 17,
            wilson_lo: 0.64,
            wilson_hi: 0.95,
        };
        let row = s.to_csv_row();
        assert_eq!(CellSummary::parse_csv_row(&row).unwrap().to_csv_row(), row);
    }

    #[test]
    fn cell_ids_depend_on_config() {
        let c = TrialConfig::default();
        assert_eq!(cell_id(&c, 10, 1, 0), cell_id(&c, 10, 1, 0));
        assert_ne!(cell_id(&c, 10, 1, 0), cell_id(&c, 10, 1, 1));
        assert_ne!(cell_id(&c, 10, 1, 0), cell_id(&TrialConfig { genome_length: 5, ..c.clone() }, 10, 1, 0));
    }
}
