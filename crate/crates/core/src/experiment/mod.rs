//! Batch experiments over a parameter grid.

pub mod export;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_simulation, RunResult, SimulationConfig, SimulationError};
use crate::social::Composition;

pub use export::{read_csv, to_csv_string, to_json_string, write_results, ExportFormat};
pub use stats::TestResult;

pub const PAPER_AGENT_COUNTS: [usize; 6] = [10, 20, 30, 40, 70, 100];
pub const PAPER_SHARE_PROBABILITIES: [f64; 4] = [0.0, 0.3, 0.5, 1.0];
pub const PAPER_THEORY_COUNTS: [usize; 2] = [2, 3];
pub const PAPER_REPETITIONS: usize = 100;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("nothing to export")]
    EmptyTable,
    #[error("cells have different repetition counts ({0} vs {1})")]
    RepetitionMismatch(usize, usize),
    #[error("cell has no per-run data to compare")]
    MissingRuns,
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reliability {
    Reliable,
    Biased,
}

impl Reliability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reliability::Reliable => "reliable",
            Reliability::Biased => "biased",
        }
    }

    pub fn is_biased(&self) -> bool {
        matches!(self, Reliability::Biased)
    }
}

impl std::str::FromStr for Reliability {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reliable" => Ok(Reliability::Reliable),
            "biased" => Ok(Reliability::Biased),
            _ => Err(format!("unknown reliability `{s}`")),
        }
    }
}

/// One point of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub num_agents: usize,
    pub num_theories: usize,
    pub share_probability: f64,
    pub composition: Composition,
    pub reliability: Reliability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub agent_counts: Vec<usize>,
    pub share_probabilities: Vec<f64>,
    pub compositions: Vec<Composition>,
    pub reliabilities: Vec<Reliability>,
    pub theory_counts: Vec<usize>,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Everything not varied by the grid.
    pub template: SimulationConfig,
}

impl SweepSpec {
    pub fn paper_grid(repetitions: usize, base_seed: u64) -> Self {
        Self {
            agent_counts: PAPER_AGENT_COUNTS.to_vec(),
            share_probabilities: PAPER_SHARE_PROBABILITIES.to_vec(),
            compositions: vec![Composition::Homogeneous, Composition::Heterogeneous],
            reliabilities: vec![Reliability::Reliable, Reliability::Biased],
            theory_counts: PAPER_THEORY_COUNTS.to_vec(),
            repetitions,
            base_seed,
            template: SimulationConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions < 1 {
            return Err(ExperimentError::Spec("repetitions must be at least 1".into()));
        }
        if self.agent_counts.is_empty()
            || self.share_probabilities.is_empty()
            || self.compositions.is_empty()
            || self.reliabilities.is_empty()
            || self.theory_counts.is_empty()
        {
            return Err(ExperimentError::Spec("every grid dimension needs at least one value".into()));
        }
        if let Some(p) = self.share_probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ExperimentError::Spec(format!("share probability {p} outside [0, 1]")));
        }
        for cell in self.cells() {
            self.config_for(&cell, 0, 0)
                .validate()
                .map_err(|e| ExperimentError::Spec(e.to_string()))?;
        }
        Ok(())
    }

    /// Grid cells in output order: theory count, agent count, share
    /// probability, composition, reliability (last varies fastest).
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &num_theories in &self.theory_counts {
            for &num_agents in &self.agent_counts {
                for &share_probability in &self.share_probabilities {
                    for &composition in &self.compositions {
                        for &reliability in &self.reliabilities {
                            out.push(CellKey {
                                num_agents,
                                num_theories,
                                share_probability,
                                composition,
                                reliability,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn config_for(&self, cell: &CellKey, cell_index: usize, repetition: usize) -> SimulationConfig {
        let mut cfg = self.template.clone();
        cfg.num_agents = cell.num_agents;
        cfg.landscape.num_theories = cell.num_theories;
        cfg.sharing.share_probability = cell.share_probability;
        cfg.composition = cell.composition;
        cfg.biased = cell.reliability.is_biased();
        cfg.with_seed(derive_seed(self.base_seed, cell_index, repetition))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of repetition `repetition` of cell `cell_index`.
///
/// `(cell_index << 32) | repetition` is spread with the golden-ratio
/// increment, offset by the base seed and passed through the SplitMix64
/// finalizer. Every step is a bijection on u64, so distinct
/// (cell, repetition) pairs below 2^32 each get their own seed.
pub fn derive_seed(base_seed: u64, cell_index: usize, repetition: usize) -> u64 {
    let key = ((cell_index as u64) << 32) | (repetition as u64 & 0xFFFF_FFFF);
    splitmix64(base_seed.wrapping_add(key.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub key: CellKey,
    pub repetitions: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_rounds: f64,
    pub median_rounds: f64,
    pub std_rounds: f64,
    pub cap_hits: usize,
    /// Per-run round counts in repetition order; empty for tables read back
    /// from an export.
    #[serde(skip)]
    pub run_rounds: Vec<u64>,
    #[serde(skip)]
    pub run_success: Vec<bool>,
}

impl CellSummary {
    pub fn from_runs(key: CellKey, runs: &[RunResult]) -> Self {
        let rounds: Vec<f64> = runs.iter().map(|r| r.rounds as f64).collect();
        let successes = runs.iter().filter(|r| r.success).count();
        Self {
            key,
            repetitions: runs.len(),
            successes,
            success_rate: successes as f64 / runs.len() as f64,
            mean_rounds: stats::mean(&rounds),
            median_rounds: stats::median(&rounds),
            std_rounds: stats::std_dev(&rounds),
            cap_hits: runs.iter().filter(|r| r.terminated_by_cap).count(),
            run_rounds: runs.iter().map(|r| r.rounds).collect(),
            run_success: runs.iter().map(|r| r.success).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellFailure {
    pub key: CellKey,
    pub repetition: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<CellSummary>,
    pub failures: Vec<CellFailure>,
}

impl SweepReport {
    pub fn cell(&self, pred: impl Fn(&CellKey) -> bool) -> Option<&CellSummary> {
        self.cells.iter().find(|c| pred(&c.key))
    }
}

/// Runs every repetition of every cell on up to `parallelism` threads.
/// Results are gathered by (cell, repetition), so the report does not depend
/// on scheduling. A cell with a failing run is left out of `cells` and its
/// first failure goes to `failures`.
pub fn run_sweep(spec: &SweepSpec, parallelism: usize) -> Result<SweepReport, ExperimentError> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.repetitions).map(move |r| (c, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(c, r)| {
                let cfg = spec.config_for(&cells[c], c, r);
                run_simulation(&cfg).map_err(|e: SimulationError| (cfg.seed, e.to_string()))
            })
            .collect::<Vec<_>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let results = pool.install(work);

    let mut report = SweepReport::default();
    for (c, key) in cells.iter().enumerate() {
        let chunk = &results[c * spec.repetitions..(c + 1) * spec.repetitions];
        match chunk.iter().enumerate().find_map(|(r, x)| x.as_ref().err().map(|e| (r, e))) {
            Some((repetition, (seed, error))) => report.failures.push(CellFailure {
                key: *key,
                repetition,
                seed: *seed,
                error: error.clone(),
            }),
            None => {
                let runs: Vec<RunResult> = chunk.iter().map(|x| x.clone().expect("checked")).collect();
                report.cells.push(CellSummary::from_runs(*key, &runs));
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    SuccessRate,
    Rounds,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Comparison {
    /// metric(a) - metric(b); mean rounds for [`Metric::Rounds`].
    pub difference: f64,
    /// -1, 0 or 1.
    pub direction: i8,
    pub test: TestResult,
}

/// Compares two cells on `metric`: two-proportion z-test for success rates,
/// rank-sum test on per-run rounds.
pub fn compare_cells(a: &CellSummary, b: &CellSummary, metric: Metric) -> Result<Comparison, ExperimentError> {
    if a.repetitions != b.repetitions {
        return Err(ExperimentError::RepetitionMismatch(a.repetitions, b.repetitions));
    }
    let (difference, test) = match metric {
        Metric::SuccessRate => (
            a.success_rate - b.success_rate,
            stats::two_proportion_z(a.successes, a.repetitions, b.successes, b.repetitions),
        ),
        Metric::Rounds => {
            if a.run_rounds.is_empty() || b.run_rounds.is_empty() {
                return Err(ExperimentError::MissingRuns);
            }
            let ra: Vec<f64> = a.run_rounds.iter().map(|&x| x as f64).collect();
            let rb: Vec<f64> = b.run_rounds.iter().map(|&x| x as f64).collect();
            (a.mean_rounds - b.mean_rounds, stats::rank_sum(&ra, &rb))
        }
    };
    let direction = if difference > 0.0 {
        1
    } else if difference < 0.0 {
        -1
    } else {
        0
    };
    Ok(Comparison {
        difference,
        direction,
        test,
    })
}
