use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shotgun::assembly::{default_theta, default_w_min, greedy_assemble, AssemblyConfig};
use shotgun::correct::clean_reads;
use shotgun::genome::{corrupt_reads, generate_genome, sample_reads};
use shotgun::harness::{critical_length_estimate, parse_key_values, run_sweep, run_trial, ChannelSpec, ConfigMap, Pipeline, SweepGrid, TrialConfig};
use shotgun::info::{delta_star, i_read, lcrit, threshold_condition, ConditionMode, DeltaStar};
use shotgun::io;
use shotgun::{BaseDistribution, Error, NoiseChannel};

// a closed stdout (e.g. piped into head) ends the program quietly
macro_rules! out {
    ($($t:tt)*) => {
        if writeln!(std::io::stdout(), $($t)*).is_err() {
            std::process::exit(0);
        }
    };
}

#[derive(Parser)]
#[command(name = "shotgun", version, about = "Noisy shotgun sequencing: simulate, correct, assemble, sweep")]
struct Cli {
    /// Flat key=value configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a circular i.i.d. genome as FASTA.
    Gen {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample noiseless reads from a genome.
    Reads {
        #[arg(long)]
        genome: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pass reads through a substitution channel.
    Corrupt {
        #[arg(long)]
        reads: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Clean noisy reads by K-mer clustering and ML consensus.
    Correct {
        #[arg(long)]
        reads: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        correction: CorrectionArgs,
        /// Write `-` instead of claimed starts.
        #[arg(long)]
        hide_truth: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy overlap assembly into FASTA contigs.
    Assemble {
        #[arg(long, conflicts_with = "cleaned", required_unless_present = "cleaned")]
        reads: Option<PathBuf>,
        #[arg(long)]
        cleaned: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        assembly: AssemblyArgs,
        #[arg(long, overrides_with = "circular")]
        no_circular: bool,
        #[arg(long, overrides_with = "no_circular")]
        circular: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tab-separated merge log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Information-theoretic thresholds for a source and channel.
    Thresholds {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        /// as_printed or example_consistent.
        #[arg(long, default_value = "example_consistent")]
        mode: ConditionMode,
        /// Also emit I_read over a symmetric error-rate grid with this step.
        #[arg(long)]
        grid: Option<f64>,
        /// File for the grid CSV; stdout when absent.
        #[arg(long)]
        grid_out: Option<PathBuf>,
    },
    /// Run a grid of seeded trials and summarize success rates.
    Sweep {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long, value_delimiter = ',')]
        lbar_axis: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        multiple_axis: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        delta_axis: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        pipelines: Option<Vec<Pipeline>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        /// Results CSV; an existing file is resumed.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-trial key=value records.
        #[arg(long)]
        details: Option<PathBuf>,
    },
    /// Run one end-to-end trial and print its record.
    Trial {
        #[command(flatten)]
        trial: TrialArgs,
    },
}

#[derive(Args, Default)]
struct ModelArgs {
    /// Genome length.
    #[arg(long = "G")]
    g: Option<usize>,
    /// Base distribution: four comma-separated reals or "uniform".
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Default)]
struct SamplingArgs {
    #[arg(long = "L", conflicts_with = "lbar")]
    l: Option<usize>,
    /// Normalized read length L / log2 G.
    #[arg(long)]
    lbar: Option<f64>,
    #[arg(long = "N", conflicts_with = "multiple")]
    n: Option<usize>,
    /// Read count as a multiple of the coverage count.
    #[arg(long)]
    multiple: Option<f64>,
    /// Coverage failure probability.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args, Default)]
struct NoiseArgs {
    /// Symmetric substitution rate.
    #[arg(long, short = 'd', conflicts_with = "channel")]
    delta: Option<f64>,
    /// Channel matrix file.
    #[arg(long)]
    channel: Option<PathBuf>,
}

#[derive(Args, Default)]
struct CorrectionArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eps_typ: Option<f64>,
    /// log_of_G or log_of_L.
    #[arg(long)]
    m_basis: Option<String>,
    #[arg(long)]
    anchor_len: Option<usize>,
    /// Linkage radius for candidate K-mer groups.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// marginals_and_pairs or full_joint.
    #[arg(long)]
    order: Option<String>,
}

#[derive(Args, Default)]
struct AssemblyArgs {
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    w_min: Option<usize>,
}

#[derive(Args, Default)]
struct TrialArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    correction: CorrectionArgs,
    #[command(flatten)]
    assembly: AssemblyArgs,
    #[arg(long)]
    pipeline: Option<Pipeline>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn set<T: ToString>(map: &mut ConfigMap, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        map.insert(key.into(), v.to_string());
    }
}

/// Flag values written over the configuration file, dropping config
/// entries that conflict with a given flag.
fn overlay(map: &mut ConfigMap, pairs: &[(&str, Option<String>)], exclusive: &[(&str, &str)]) {
    for (k, v) in pairs {
        if v.is_some() {
            for (a, b) in exclusive {
                if a == k {
                    map.remove(*b);
                }
                if b == k {
                    map.remove(*a);
                }
            }
        }
        set(map, k, v);
    }
}

const EXCLUSIVE: &[(&str, &str)] = &[("L", "Lbar"), ("N", "multiple"), ("delta", "channel")];

fn model_pairs(m: &ModelArgs) -> Vec<(&'static str, Option<String>)> {
    let q = m.q.as_ref().map(|q| if q == "uniform" { "0.25,0.25,0.25,0.25".to_string() } else { q.clone() });
    vec![("G", m.g.map(|v| v.to_string())), ("Q", q), ("seed", m.seed.map(|v| v.to_string()))]
}

fn sampling_pairs(s: &SamplingArgs) -> Vec<(&'static str, Option<String>)> {
    let f = |v: Option<f64>| v.map(|x| x.to_string());
    let u = |v: Option<usize>| v.map(|x| x.to_string());
    vec![("L", u(s.l)), ("Lbar", f(s.lbar)), ("N", u(s.n)), ("multiple", f(s.multiple)), ("eps", f(s.eps))]
}

fn noise_pairs(n: &NoiseArgs) -> Vec<(&'static str, Option<String>)> {
    vec![("delta", n.delta.map(|v| v.to_string())), ("channel", n.channel.as_ref().map(|p| p.display().to_string()))]
}

fn correction_pairs(c: &CorrectionArgs) -> Vec<(&'static str, Option<String>)> {
    let f = |v: Option<f64>| v.map(|x| x.to_string());
    vec![
        ("alpha", f(c.alpha)),
        ("beta", f(c.beta)),
        ("eps_typ", f(c.eps_typ)),
        ("m_basis", c.m_basis.clone()),
        ("anchor_len", c.anchor_len.map(|v| v.to_string())),
        ("radius", f(c.radius)),
        ("tau", f(c.tau)),
        ("order", c.order.clone()),
    ]
}

fn assembly_pairs(a: &AssemblyArgs) -> Vec<(&'static str, Option<String>)> {
    vec![("theta", a.theta.map(|v| v.to_string())), ("w_min", a.w_min.map(|v| v.to_string()))]
}

fn trial_pairs(t: &TrialArgs) -> Vec<(&'static str, Option<String>)> {
    let mut v = model_pairs(&t.model);
    v.extend(sampling_pairs(&t.sampling));
    v.extend(noise_pairs(&t.noise));
    v.extend(correction_pairs(&t.correction));
    v.extend(assembly_pairs(&t.assembly));
    v.push(("pipeline", t.pipeline.map(|p| p.to_string())));
    v
}

fn load_config(path: Option<&Path>) -> CliResult<ConfigMap> {
    let Some(path) = path else { return Ok(ConfigMap::new()) };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_key_values(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn trial_config(map: &ConfigMap) -> CliResult<TrialConfig> {
    let mut cfg = TrialConfig::default();
    cfg.apply(map).map_err(|e| usage(e.to_string()))?;
    if let Some(path) = map.get("channel") {
        cfg.channel = ChannelSpec::Matrix(io::parse_channel(&fs::read_to_string(path).map_err(Error::from)?)?);
    }
    Ok(cfg)
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(e.into())),
        None => {
            if std::io::stdout().write_all(text.as_bytes()).is_err() {
                std::process::exit(0);
            }
            Ok(())
        }
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Runtime(Error::Parse(format!("cannot read {}: {e}", path.display()))))
}

fn channel_label(map: &ConfigMap, cfg: &TrialConfig) -> (&'static str, String) {
    match map.get("channel") {
        Some(p) => ("channel", p.clone()),
        None => ("delta", cfg.delta().to_string()),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut map = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Gen { model, out } => {
            overlay(&mut map, &model_pairs(&model), EXCLUSIVE);
            let cfg = trial_config(&map)?;
            let genome = generate_genome(cfg.genome_length, &cfg.q, cfg.seed)?;
            write_output(out.as_deref(), &io::format_genome_fasta(&genome))
        }
        Command::Reads { genome, model, sampling, out } => {
            overlay(&mut map, &model_pairs(&model), EXCLUSIVE);
            overlay(&mut map, &sampling_pairs(&sampling), EXCLUSIVE);
            let mut cfg = trial_config(&map)?;
            let genome = io::parse_genome_fasta(&read_file(&genome)?)?;
            cfg.genome_length = genome.len();
            cfg.q = *genome.distribution();
            let (l, n) = (cfg.read_length()?, cfg.read_count()?);
            let reads = sample_reads(&genome, n, l, cfg.seed)?;
            write_output(out.as_deref(), &io::format_reads_tsv(&reads, &[("seed", cfg.seed.to_string()), ("delta", "0".into())]))
        }
        Command::Corrupt { reads, model, noise, out } => {
            overlay(&mut map, &model_pairs(&model), EXCLUSIVE);
            overlay(&mut map, &noise_pairs(&noise), EXCLUSIVE);
            let cfg = trial_config(&map)?;
            let (reads, _) = io::parse_reads_tsv(&read_file(&reads)?)?;
            let channel = cfg.configured_channel()?;
            let noisy = corrupt_reads(&reads, &channel, cfg.seed)?;
            let (k, v) = channel_label(&map, &cfg);
            write_output(out.as_deref(), &io::format_reads_tsv(&noisy, &[("seed", cfg.seed.to_string()), (k, v)]))
        }
        Command::Correct { reads, model, noise, correction, hide_truth, out } => {
            overlay(&mut map, &model_pairs(&model), EXCLUSIVE);
            overlay(&mut map, &noise_pairs(&noise), EXCLUSIVE);
            overlay(&mut map, &correction_pairs(&correction), EXCLUSIVE);
            let cfg = trial_config(&map)?;
            let (reads, _) = io::parse_reads_tsv(&read_file(&reads)?)?;
            let params = cfg.correction.resolve(reads.read_length, reads.genome_length)?;
            let channel = cfg.configured_channel()?;
            let cleaned = clean_reads(&reads, &params, &channel, &cfg.q)?;
            eprintln!("K={} M={} tau={:.4} cleaned={}", params.k, params.m, params.tau, cleaned.len());
            let text = format!("# G={} K={} M={}\n{}", reads.genome_length, params.k, params.m, io::format_cleaned_tsv(&cleaned, !hide_truth));
            write_output(out.as_deref(), &text)
        }
        Command::Assemble { reads, cleaned, model, assembly, no_circular, circular: _, out, log } => {
            overlay(&mut map, &model_pairs(&model), EXCLUSIVE);
            overlay(&mut map, &assembly_pairs(&assembly), EXCLUSIVE);
            let cfg = trial_config(&map)?;
            let (symbols, g): (Vec<Vec<u8>>, Option<usize>) = match (reads, cleaned) {
                (Some(p), _) => {
                    let (rs, _) = io::parse_reads_tsv(&read_file(&p)?)?;
                    (rs.reads.into_iter().map(|r| r.symbols).collect(), Some(rs.genome_length))
                }
                (None, Some(p)) => {
                    let text = read_file(&p)?;
                    let g = text.lines().filter_map(|l| l.strip_prefix('#')).flat_map(str::split_whitespace).find_map(|t| t.strip_prefix("G=")).and_then(|v| v.parse().ok());
                    (io::parse_cleaned_tsv(&text)?.into_iter().map(|c| c.symbols).collect(), g)
                }
                (None, None) => return Err(usage("give --reads or --cleaned")),
            };
            let g = if map.contains_key("G") { cfg.genome_length } else { g.unwrap_or(cfg.genome_length) };
            let w_min = match cfg.w_min {
                Some(w) => w,
                None => default_w_min(lcrit(&cfg.q)?, g),
            };
            let mut config = AssemblyConfig::new(w_min, cfg.theta.unwrap_or_else(|| default_theta(0.0)));
            config.circular = !no_circular;
            let result = greedy_assemble(&symbols, &config)?;
            eprintln!("contigs={} circular={} w_min={} theta={}", result.contigs.len(), result.circular, config.w_min, config.theta);
            if let Some(path) = log {
                fs::write(path, io::format_merge_log(&result.merge_log)).map_err(Error::from)?;
            }
            write_output(out.as_deref(), &io::format_contigs_fasta(&result.contigs, result.circular))
        }
        Command::Thresholds { model, noise, mode, grid, grid_out } => {
            overlay(&mut map, &model_pairs(&model), EXCLUSIVE);
            overlay(&mut map, &noise_pairs(&noise), EXCLUSIVE);
            let cfg = trial_config(&map)?;
            thresholds(&cfg.q, &cfg.configured_channel()?, mode, grid, grid_out.as_deref())
        }
        Command::Sweep { trial, lbar_axis, multiple_axis, delta_axis, pipelines, trials, base_seed, out, details } => {
            overlay(&mut map, &trial_pairs(&trial), EXCLUSIVE);
            let join = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
            overlay(
                &mut map,
                &[
                    ("Lbar_axis", join(&lbar_axis)),
                    ("multiple_axis", join(&multiple_axis)),
                    ("delta_axis", join(&delta_axis)),
                    ("pipelines", pipelines.map(|p| p.iter().map(Pipeline::to_string).collect::<Vec<_>>().join(","))),
                    ("trials", trials.map(|t| t.to_string())),
                    ("base_seed", base_seed.map(|s| s.to_string())),
                ],
                &[],
            );
            let mut grid = SweepGrid::default();
            grid.apply(&map).map_err(|e| usage(e.to_string()))?;
            grid.template = trial_config(&map)?;
            grid.validate().map_err(|e| usage(e.to_string()))?;
            let rows = run_sweep(&grid, out.as_deref(), details.as_deref())?;
            if out.is_none() {
                out!("{}", shotgun::harness::CSV_HEADER);
                for r in &rows {
                    out!("{}", r.to_csv_row());
                }
            }
            if grid.pipelines.contains(&Pipeline::NoiselessGreedy) && grid.lbar.len() > 1 {
                match critical_length_estimate(&rows, Pipeline::NoiselessGreedy) {
                    Ok(x) => eprintln!("estimated critical Lbar={x:.4}"),
                    Err(e) => eprintln!("critical Lbar unavailable: {e}"),
                }
            }
            Ok(())
        }
        Command::Trial { trial } => {
            overlay(&mut map, &trial_pairs(&trial), EXCLUSIVE);
            let cfg = trial_config(&map)?;
            let r = run_trial(&cfg)?;
            let o = &r.outcome;
            out!(
                "seed={} pipeline={} G={} L={} N={} delta={} success={} perfect_layout={} perfect_reconstruction={} d_max={:.6} tau={:.6} cleaned={} purity_violations={} coverage={:.6} contigs={} circular={} misplaced={} theta={:.6} w_min={} failure={} wall_time={:.3}{}",
                o.seed,
                o.pipeline,
                cfg.genome_length,
                o.read_length,
                o.read_count,
                cfg.delta(),
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
                r.wall_time,
                o.error.as_ref().map_or(String::new(), |e| format!(" error={e:?}")),
            );
            Ok(())
        }
    }
}

fn thresholds(q: &BaseDistribution, channel: &NoiseChannel, mode: ConditionMode, grid: Option<f64>, grid_out: Option<&Path>) -> CliResult<()> {
    let r = threshold_condition(q, channel, mode)?;
    out!("renyi2={:.6}", r.renyi2);
    out!("lcrit={:.6}", r.lcrit);
    for (b, d) in ["A", "C", "G", "T"].iter().zip(r.per_base_divergence) {
        out!("divergence_{b}={d:.6}");
    }
    out!("i_read={:.6}", r.i_read);
    out!("mode={}", r.condition_mode.name());
    out!("threshold={:.6}", mode.threshold(r.renyi2));
    out!("margin={:.6}", r.margin);
    out!("condition_satisfied={}", r.condition_satisfied);
    match delta_star(q, mode)? {
        DeltaStar::Root(d) => out!("delta_star={d:.6}"),
        DeltaStar::Infeasible => out!("delta_star=infeasible"),
    }
    if let Some(step) = grid {
        if !(step > 0.0 && step <= 0.75) {
            return Err(usage("--grid step must lie in (0, 0.75]"));
        }
        let mut csv = String::from("delta,i_read,margin\n");
        let steps = (0.75 / step + 1e-9).floor() as usize;
        for i in 0..=steps {
            let d = i as f64 * step;
            let ir = i_read(&NoiseChannel::symmetric(d)?, q)?;
            csv.push_str(&format!("{d:.6},{ir:.6},{:.6}\n", ir - mode.threshold(r.renyi2)));
        }
        if grid_out.is_none() {
            out!();
        }
        write_output(grid_out, &csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
