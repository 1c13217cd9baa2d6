//! Flat `key=value` configuration.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::{ChannelSpec, CountSpec, LengthSpec, SweepGrid, TrialConfig};
use crate::error::{Error, Result};
use crate::genome::BaseDistribution;

pub type ConfigMap = BTreeMap<String, String>;

/// Keys understood by trial and sweep configuration.
pub const KNOWN_KEYS: &[&str] = &[
    "G", "Q", "L", "Lbar", "N", "multiple", "eps", "delta", "channel", "pipeline", "seed", "theta", "w_min", "alpha", "beta",
    "m_basis", "eps_typ", "anchor_len", "radius", "tau", "order", "Lbar_axis", "multiple_axis", "delta_axis", "pipelines",
    "trials", "base_seed",
];

/// Parses `key=value` lines; blank lines and lines starting with `#` are
/// skipped, later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!("line {}: expected key=value", no + 1)));
        };
        let k = k.trim();
        if !KNOWN_KEYS.contains(&k) {
            return Err(Error::Parse(format!("line {}: unknown key {k:?}", no + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn value<T: FromStr>(map: &ConfigMap, key: &str) -> Result<Option<T>> {
    map.get(key).map(|v| v.parse::<T>().map_err(|_| Error::Parse(format!("invalid value {v:?} for {key}")))).transpose()
}

pub(crate) fn list<T: FromStr>(text: &str, key: &str) -> Result<Vec<T>> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| s.parse::<T>().map_err(|_| Error::Parse(format!("invalid entry {s:?} in {key}")))).collect()
}

pub(crate) fn parse_distribution(text: &str) -> Result<BaseDistribution> {
    let v: Vec<f64> = list(text, "Q")?;
    let arr: [f64; 4] = v.try_into().map_err(|_| Error::Parse("Q needs four comma-separated probabilities".into()))?;
    BaseDistribution::new(arr)
}

impl TrialConfig {
    /// Overrides fields with the keys present in `map`. The `channel` key
    /// (a file path) is left to the caller.
    pub fn apply(&mut self, map: &ConfigMap) -> Result<()> {
        if let Some(g) = value(map, "G")? {
            self.genome_length = g;
        }
        if let Some(q) = map.get("Q") {
            self.q = parse_distribution(q)?;
        }
        match (value::<usize>(map, "L")?, value::<f64>(map, "Lbar")?) {
            (Some(_), Some(_)) => return Err(Error::Parse("give either L or Lbar, not both".into())),
            (Some(l), None) => self.length = LengthSpec::Absolute(l),
            (None, Some(lb)) => self.length = LengthSpec::Normalized(lb),
            (None, None) => {}
        }
        match (value::<usize>(map, "N")?, value::<f64>(map, "multiple")?) {
            (Some(_), Some(_)) => return Err(Error::Parse("give either N or multiple, not both".into())),
            (Some(n), None) => self.count = CountSpec::Absolute(n),
            (None, Some(m)) => self.count = CountSpec::Multiple(m),
            (None, None) => {}
        }
        if let Some(e) = value(map, "eps")? {
            self.coverage_eps = e;
        }
        if let Some(d) = value(map, "delta")? {
            self.channel = ChannelSpec::Symmetric(d);
        }
        if let Some(p) = value(map, "pipeline")? {
            self.pipeline = p;
        }
        if let Some(s) = value(map, "seed")? {
            self.seed = s;
        }
        if let Some(t) = value(map, "theta")? {
            self.theta = Some(t);
        }
        if let Some(w) = value(map, "w_min")? {
            self.w_min = Some(w);
        }
        let c = &mut self.correction;
        if let Some(a) = value(map, "alpha")? {
            c.alpha = a;
        }
        if let Some(b) = value(map, "beta")? {
            c.beta = b;
        }
        if let Some(m) = value(map, "m_basis")? {
            c.m_basis = m;
        }
        if let Some(e) = value(map, "eps_typ")? {
            c.eps_typ = Some(e);
        }
        if let Some(a) = value(map, "anchor_len")? {
            c.anchor_len = Some(a);
        }
        if let Some(r) = value(map, "radius")? {
            c.linkage_radius = Some(r);
        }
        if let Some(t) = value(map, "tau")? {
            c.tau = Some(t);
        }
        if let Some(o) = value(map, "order")? {
            c.order = o;
        }
        Ok(())
    }
}

impl SweepGrid {
    /// Overrides axes, trial count and base seed; remaining keys configure
    /// the template trial.
    pub fn apply(&mut self, map: &ConfigMap) -> Result<()> {
        self.template.apply(map)?;
        if let Some(v) = map.get("Lbar_axis") {
            self.lbar = list(v, "Lbar_axis")?;
        }
        if let Some(v) = map.get("multiple_axis") {
            self.multiple = list(v, "multiple_axis")?;
        }
        if let Some(v) = map.get("delta_axis") {
            self.delta = list(v, "delta_axis")?;
        }
        if let Some(v) = map.get("pipelines") {
            self.pipelines = list(v, "pipelines")?;
        }
        if let Some(t) = value(map, "trials")? {
            self.trials = t;
        }
        if let Some(s) = value(map, "base_seed")? {
            self.base_seed = s;
        }
        Ok(())
    }
}
