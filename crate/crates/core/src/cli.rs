//! Command-line front end.
//!
//! Three subcommands: `run` prints one `RunResult` as JSON, `sweep` runs a
//! grid and writes CSV or JSON, `validate` generates a landscape and checks
//! its invariants. Every option can also be given in a flat `key = value`
//! file (`--config`); keys are the flag names without the leading dashes
//! (underscores are accepted in place of dashes) and flags win over the file.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::engine::{Simulation, SimulationConfig, TraceWriter};
use crate::experiment::{run_sweep, write_results, ExportFormat, Reliability, SweepSpec};
use crate::landscape::Landscape;
use crate::social::{Composition, Direction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const PARALLELISM_ENV: &str = "ARGABM_PARALLELISM";

#[derive(Debug, Parser)]
#[command(name = "argabm", version, about = "Argumentative agent-based model of scientific inquiry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and print its result as JSON.
    Run {
        #[command(flatten)]
        sim: SimFlags,
        /// Write a per-round trace (to stderr unless --trace-file is given).
        #[arg(long)]
        trace: bool,
        #[arg(long, value_name = "PATH")]
        trace_file: Option<PathBuf>,
    },
    /// Run a parameter sweep and export one row per grid cell.
    Sweep {
        #[command(flatten)]
        sim: SimFlags,
        #[command(flatten)]
        sweep: SweepFlags,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Output format; defaults to the extension of --out.
        #[arg(long)]
        format: Option<ExportFormat>,
        #[arg(long, env = PARALLELISM_ENV)]
        parallelism: Option<usize>,
    },
    /// Generate the configured landscape and check its invariants.
    Validate {
        #[command(flatten)]
        sim: SimFlags,
        /// Print the landscape graph instead of the summary.
        #[arg(long)]
        dump: bool,
    },
}

fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is not a probability in [0, 1]"))
    }
}

fn positive(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("`{s}` is not a positive integer")),
    }
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

fn list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let v: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(item)
        .collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

fn usize_list(s: &str) -> Result<Vec<usize>, String> {
    list(s, |x| x.parse().map_err(|_| format!("`{x}` is not an integer")))
}

fn probability_list(s: &str) -> Result<Vec<f64>, String> {
    list(s, probability)
}

fn composition_list(s: &str) -> Result<Vec<Composition>, String> {
    list(s, str::parse)
}

fn reliability_list(s: &str) -> Result<Vec<Reliability>, String> {
    list(s, str::parse)
}

fn parse_with<T>(key: &str, value: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, String> {
    f(value).map(Some).map_err(|e| format!("{key}: {e}"))
}

fn from_str<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

/// Options of a single simulation.
#[derive(Debug, Default, Clone, Args)]
pub struct SimFlags {
    /// Flat key = value file; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = positive)]
    pub agents: Option<u64>,
    #[arg(long)]
    pub theories: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, value_parser = positive)]
    pub branching: Option<u64>,
    #[arg(long, value_parser = probability)]
    pub attack_prob: Option<f64>,
    #[arg(long, value_parser = probability)]
    pub share_prob: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub share_interval: Option<u64>,
    #[arg(long, value_parser = positive)]
    pub network_size: Option<u64>,
    #[arg(long)]
    pub direction: Option<Direction>,
    #[arg(long)]
    pub composition: Option<Composition>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = boolean)]
    pub biased: Option<bool>,
    #[arg(long, value_parser = probability)]
    pub move_prob: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub eval_interval: Option<u64>,
    #[arg(long, value_parser = probability)]
    pub switch_threshold: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..))]
    pub rounds_per_degree: Option<u8>,
    #[arg(long, value_parser = positive)]
    pub max_rounds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Grid options of a sweep.
#[derive(Debug, Default, Clone, Args)]
pub struct SweepFlags {
    /// Agents {10,20,30,40,70,100} x sharing {0,0.3,0.5,1} x both
    /// compositions x both reliabilities x theories {2,3}.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = boolean)]
    pub paper_grid: Option<bool>,
    #[arg(long, value_parser = positive)]
    pub reps: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub agent_counts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_parser = probability)]
    pub share_probs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub theory_counts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub compositions: Option<Vec<Composition>>,
    #[arg(long, value_delimiter = ',')]
    pub reliabilities: Option<Vec<Reliability>>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr; $($field:ident),* $(,)?) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl SimFlags {
    fn take_key(&mut self, key: &str, value: &str) -> Result<bool, String> {
        match key {
            "agents" => self.agents = parse_with(key, value, positive)?,
            "theories" => self.theories = parse_with(key, value, from_str)?,
            "depth" => self.depth = parse_with(key, value, from_str)?,
            "branching" => self.branching = parse_with(key, value, positive)?,
            "attack-prob" => self.attack_prob = parse_with(key, value, probability)?,
            "share-prob" => self.share_prob = parse_with(key, value, probability)?,
            "share-interval" => self.share_interval = parse_with(key, value, positive)?,
            "network-size" => self.network_size = parse_with(key, value, positive)?,
            "direction" => self.direction = parse_with(key, value, from_str)?,
            "composition" => self.composition = parse_with(key, value, from_str)?,
            "biased" => self.biased = parse_with(key, value, boolean)?,
            "move-prob" => self.move_prob = parse_with(key, value, probability)?,
            "eval-interval" => self.eval_interval = parse_with(key, value, positive)?,
            "switch-threshold" => self.switch_threshold = parse_with(key, value, probability)?,
            "rounds-per-degree" => {
                self.rounds_per_degree = parse_with(key, value, |s| match s.parse::<u8>() {
                    Ok(n) if n >= 1 => Ok(n),
                    _ => Err(format!("`{s}` is not an integer in 1..=255")),
                })?
            }
            "max-rounds" => self.max_rounds = parse_with(key, value, positive)?,
            "seed" => self.seed = parse_with(key, value, from_str)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn overlay(&mut self, file: &SimFlags) {
        overlay!(self, file; agents, theories, depth, branching, attack_prob, share_prob,
            share_interval, network_size, direction, composition, biased, move_prob,
            eval_interval, switch_threshold, rounds_per_degree, max_rounds, seed);
    }

    pub fn to_config(&self) -> Result<SimulationConfig, String> {
        let mut c = SimulationConfig::default();
        if let Some(v) = self.agents {
            c.num_agents = v as usize;
        }
        if let Some(v) = self.theories {
            c.landscape.num_theories = v;
        }
        if let Some(v) = self.depth {
            c.landscape.depth = v;
        }
        if let Some(v) = self.branching {
            c.landscape.branching = v as usize;
        }
        if let Some(v) = self.attack_prob {
            c.landscape.attack_probability = v;
        }
        if let Some(v) = self.share_prob {
            c.sharing.share_probability = v;
        }
        if let Some(v) = self.share_interval {
            c.sharing.share_interval = v;
        }
        if let Some(v) = self.network_size {
            c.sharing.network_size = v as usize;
        }
        if let Some(v) = self.direction {
            c.sharing.direction = v;
        }
        if let Some(v) = self.composition {
            c.composition = v;
        }
        if let Some(v) = self.biased {
            c.biased = v;
        }
        if let Some(v) = self.move_prob {
            c.behavior.move_probability = v;
        }
        if let Some(v) = self.eval_interval {
            c.behavior.evaluation_interval = v;
        }
        if let Some(v) = self.switch_threshold {
            c.behavior.switch_threshold = v;
        }
        if let Some(v) = self.rounds_per_degree {
            c.behavior.rounds_per_degree = v;
        }
        if let Some(v) = self.max_rounds {
            c.max_rounds = v;
        }
        let c = c.with_seed(self.seed.unwrap_or(0));
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

impl SweepFlags {
    fn take_key(&mut self, key: &str, value: &str) -> Result<bool, String> {
        match key {
            "paper-grid" => self.paper_grid = parse_with(key, value, boolean)?,
            "reps" => self.reps = parse_with(key, value, positive)?,
            "agent-counts" => self.agent_counts = parse_with(key, value, usize_list)?,
            "share-probs" => self.share_probs = parse_with(key, value, probability_list)?,
            "theory-counts" => self.theory_counts = parse_with(key, value, usize_list)?,
            "compositions" => self.compositions = parse_with(key, value, composition_list)?,
            "reliabilities" => self.reliabilities = parse_with(key, value, reliability_list)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn overlay(&mut self, file: &SweepFlags) {
        overlay!(self, file; paper_grid, reps, agent_counts, share_probs, theory_counts,
            compositions, reliabilities);
    }

    /// The grid: the full published grid when requested, otherwise the single values
    /// of `sim`; explicit lists replace either.
    pub fn to_spec(&self, sim: &SimFlags) -> Result<SweepSpec, String> {
        let template = sim.to_config()?;
        let reps = self.reps.unwrap_or(1) as usize;
        let seed = sim.seed.unwrap_or(0);
        let mut spec = if self.paper_grid.unwrap_or(false) {
            let mut s = SweepSpec::paper_grid(reps, seed);
            s.template = template.clone();
            if let Some(t) = sim.theories {
                s.theory_counts = vec![t];
            }
            s
        } else {
            SweepSpec {
                agent_counts: vec![template.num_agents],
                share_probabilities: vec![template.sharing.share_probability],
                compositions: vec![template.composition],
                reliabilities: vec![if template.biased {
                    Reliability::Biased
                } else {
                    Reliability::Reliable
                }],
                theory_counts: vec![template.landscape.num_theories],
                repetitions: reps,
                base_seed: seed,
                template,
            }
        };
        if let Some(v) = &self.agent_counts {
            spec.agent_counts = v.clone();
        }
        if let Some(v) = &self.share_probs {
            spec.share_probabilities = v.clone();
        }
        if let Some(v) = &self.theory_counts {
            spec.theory_counts = v.clone();
        }
        if let Some(v) = &self.compositions {
            spec.compositions = v.clone();
        }
        if let Some(v) = &self.reliabilities {
            spec.reliabilities = v.clone();
        }
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// skipped.
pub fn parse_config_file(text: &str) -> Result<(SimFlags, SweepFlags), String> {
    let mut sim = SimFlags::default();
    let mut sweep = SweepFlags::default();
    let mut seen = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
        let key = k.trim().replace('_', "-");
        let value = v.trim();
        if seen.insert(key.clone(), n + 1).is_some() {
            return Err(format!("line {}: duplicate key `{key}`", n + 1));
        }
        let known = sim.take_key(&key, value).map_err(|e| format!("line {}: {e}", n + 1))?
            || sweep.take_key(&key, value).map_err(|e| format!("line {}: {e}", n + 1))?;
        if !known {
            return Err(format!("line {}: unknown key `{key}`", n + 1));
        }
    }
    Ok((sim, sweep))
}

fn load(path: &Path) -> Result<(SimFlags, SweepFlags), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config_file(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn resolve_sim(flags: &SimFlags) -> Result<(SimFlags, SweepFlags), String> {
    let mut sim = flags.clone();
    let mut sweep = SweepFlags::default();
    if let Some(path) = &flags.config {
        let (file_sim, file_sweep) = load(path)?;
        sim.overlay(&file_sim);
        sweep = file_sweep;
    }
    Ok((sim, sweep))
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Entry point used by the binary; returns the process exit status.
pub fn run_cli<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let usage = |stderr: &mut dyn Write, msg: String| {
        let _ = writeln!(stderr, "error: {msg}");
        EXIT_USAGE
    };
    match cli.command {
        Command::Run {
            sim,
            trace,
            trace_file,
        } => {
            let config = match resolve_sim(&sim).and_then(|(s, _)| s.to_config()) {
                Ok(c) => c,
                Err(e) => return usage(stderr, e),
            };
            let mut simulation = match Simulation::new(config) {
                Ok(s) => s,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_FAILURE;
                }
            };
            let result = if trace || trace_file.is_some() {
                let sink: Box<dyn Write> = match &trace_file {
                    Some(p) => match std::fs::File::create(p) {
                        Ok(f) => Box::new(std::io::BufWriter::new(f)),
                        Err(e) => {
                            let _ = writeln!(stderr, "error: {}: {e}", p.display());
                            return EXIT_FAILURE;
                        }
                    },
                    None => Box::new(std::io::stderr()),
                };
                let mut tw = TraceWriter::new(sink);
                let r = simulation.run_observed(&mut tw);
                if let Err(e) = tw.finish() {
                    let _ = writeln!(stderr, "error: trace: {e}");
                    return EXIT_FAILURE;
                }
                r
            } else {
                simulation.run_observed(&mut ())
            };
            match result {
                Ok(r) => {
                    let _ = writeln!(stdout, "{}", serde_json::to_string(&r).expect("result serializes"));
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    EXIT_FAILURE
                }
            }
        }
        Command::Sweep {
            sim,
            sweep,
            out,
            format,
            parallelism,
        } => {
            let (sim, file_sweep) = match resolve_sim(&sim) {
                Ok(x) => x,
                Err(e) => return usage(stderr, e),
            };
            let mut sweep = sweep;
            sweep.overlay(&file_sweep);
            let spec = match sweep.to_spec(&sim) {
                Ok(s) => s,
                Err(e) => return usage(stderr, e),
            };
            let format = format.unwrap_or_else(|| match out.extension().and_then(|e| e.to_str()) {
                Some("json") => ExportFormat::Json,
                _ => ExportFormat::Csv,
            });
            let threads = parallelism.filter(|&p| p > 0).unwrap_or_else(default_parallelism);
            let report = match run_sweep(&spec, threads) {
                Ok(r) => r,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_FAILURE;
                }
            };
            for f in &report.failures {
                let _ = writeln!(
                    stderr,
                    "failed: agents={} theories={} share_probability={:.2} {} {} repetition={} seed={}: {}",
                    f.key.num_agents,
                    f.key.num_theories,
                    f.key.share_probability,
                    f.key.composition.as_str(),
                    f.key.reliability.as_str(),
                    f.repetition,
                    f.seed,
                    f.error
                );
            }
            if !report.cells.is_empty() {
                if let Err(e) = write_results(&report.cells, format, &out) {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_FAILURE;
                }
            }
            let _ = writeln!(
                stdout,
                "{} cells, {} runs each, written to {}",
                report.cells.len(),
                spec.repetitions,
                out.display()
            );
            if report.failures.is_empty() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Command::Validate { sim, dump } => {
            let config = match resolve_sim(&sim).and_then(|(s, _)| s.to_config()) {
                Ok(c) => c,
                Err(e) => return usage(stderr, e),
            };
            let landscape = match Landscape::generate(&config.landscape) {
                Ok(l) => l,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_FAILURE;
                }
            };
            let violations = landscape.check_invariants();
            if dump {
                let _ = write!(stdout, "{}", landscape.to_text());
            } else {
                let summary = serde_json::json!({
                    "theories": landscape.num_theories(),
                    "arguments": landscape.num_arguments(),
                    "attacks": landscape.attacks().len(),
                    "best_theory": landscape.best_theory(),
                    "defensibility": (0..landscape.num_theories())
                        .map(|t| landscape.full_defensibility(t))
                        .collect::<Vec<_>>(),
                    "violations": violations,
                });
                let _ = writeln!(stdout, "{summary}");
            }
            if violations.is_empty() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
    }
}
