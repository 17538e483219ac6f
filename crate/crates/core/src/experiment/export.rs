//! CSV and JSON export of sweep summaries.
//!
//! Both formats carry the same columns, one row per grid cell. Probabilities
//! are written with 2 decimals, statistics with 3.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CellKey, CellSummary, ExperimentError, Reliability};
use crate::social::Composition;

pub const CSV_COLUMNS: [&str; 11] = [
    "num_agents",
    "num_theories",
    "share_probability",
    "composition",
    "reliability",
    "repetitions",
    "success_rate",
    "mean_rounds",
    "median_rounds",
    "std_rounds",
    "cap_hits",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(format!("unknown export format `{s}`")),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    num_agents: usize,
    num_theories: usize,
    share_probability: String,
    composition: Composition,
    reliability: Reliability,
    repetitions: usize,
    success_rate: String,
    mean_rounds: String,
    median_rounds: String,
    std_rounds: String,
    cap_hits: usize,
}

#[derive(Debug, Serialize)]
struct JsonRow {
    num_agents: usize,
    num_theories: usize,
    share_probability: f64,
    composition: Composition,
    reliability: Reliability,
    repetitions: usize,
    success_rate: f64,
    mean_rounds: f64,
    median_rounds: f64,
    std_rounds: f64,
    cap_hits: usize,
}

fn round_to(x: f64, decimals: usize) -> f64 {
    format!("{x:.decimals$}").parse().expect("formatted float parses")
}

impl CellSummary {
    /// The values an export preserves: statistics at export precision, no
    /// per-run data.
    pub fn rounded(&self) -> CellSummary {
        CellSummary {
            key: CellKey {
                share_probability: round_to(self.key.share_probability, 2),
                ..self.key
            },
            repetitions: self.repetitions,
            successes: self.successes,
            success_rate: round_to(self.success_rate, 3),
            mean_rounds: round_to(self.mean_rounds, 3),
            median_rounds: round_to(self.median_rounds, 3),
            std_rounds: round_to(self.std_rounds, 3),
            cap_hits: self.cap_hits,
            run_rounds: Vec::new(),
            run_success: Vec::new(),
        }
    }
}

fn row(c: &CellSummary) -> Row {
    Row {
        num_agents: c.key.num_agents,
        num_theories: c.key.num_theories,
        share_probability: format!("{:.2}", c.key.share_probability),
        composition: c.key.composition,
        reliability: c.key.reliability,
        repetitions: c.repetitions,
        success_rate: format!("{:.3}", c.success_rate),
        mean_rounds: format!("{:.3}", c.mean_rounds),
        median_rounds: format!("{:.3}", c.median_rounds),
        std_rounds: format!("{:.3}", c.std_rounds),
        cap_hits: c.cap_hits,
    }
}

pub fn to_csv_string(cells: &[CellSummary]) -> Result<String, ExperimentError> {
    if cells.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in cells {
        w.serialize(row(c))?;
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json_string(cells: &[CellSummary]) -> Result<String, ExperimentError> {
    if cells.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let rows: Vec<JsonRow> = cells
        .iter()
        .map(|c| {
            let r = c.rounded();
            JsonRow {
                num_agents: r.key.num_agents,
                num_theories: r.key.num_theories,
                share_probability: r.key.share_probability,
                composition: r.key.composition,
                reliability: r.key.reliability,
                repetitions: r.repetitions,
                success_rate: r.success_rate,
                mean_rounds: r.mean_rounds,
                median_rounds: r.median_rounds,
                std_rounds: r.std_rounds,
                cap_hits: r.cap_hits,
            }
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)? + "\n")
}

pub fn write_results(cells: &[CellSummary], format: ExportFormat, path: &Path) -> Result<(), ExperimentError> {
    let text = match format {
        ExportFormat::Csv => to_csv_string(cells)?,
        ExportFormat::Json => to_json_string(cells)?,
    };
    fs::write(path, text)?;
    Ok(())
}

/// Parses an exported CSV back into summaries (without per-run data).
pub fn read_csv(text: &str) -> Result<Vec<CellSummary>, ExperimentError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(ExperimentError::Spec(format!("unexpected CSV header {headers:?}")));
    }
    let num = |s: &str| -> Result<f64, ExperimentError> {
        s.parse()
            .map_err(|_| ExperimentError::Spec(format!("bad number `{s}`")))
    };
    let mut out = Vec::new();
    for rec in r.deserialize::<Row>() {
        let row = rec?;
        let success_rate = num(&row.success_rate)?;
        out.push(CellSummary {
            key: CellKey {
                num_agents: row.num_agents,
                num_theories: row.num_theories,
                share_probability: num(&row.share_probability)?,
                composition: row.composition,
                reliability: row.reliability,
            },
            repetitions: row.repetitions,
            successes: (success_rate * row.repetitions as f64).round() as usize,
            success_rate,
            mean_rounds: num(&row.mean_rounds)?,
            median_rounds: num(&row.median_rounds)?,
            std_rounds: num(&row.std_rounds)?,
            cap_hits: row.cap_hits,
            run_rounds: Vec::new(),
            run_success: Vec::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn summary(p: f64, reps: usize, successes: usize, mean: f64) -> CellSummary {
        CellSummary {
            key: CellKey {
                num_agents: 10,
                num_theories: 2,
                share_probability: p,
                composition: Composition::Heterogeneous,
                reliability: Reliability::Biased,
            },
            repetitions: reps,
            successes,
            success_rate: successes as f64 / reps as f64,
            mean_rounds: mean,
            median_rounds: mean.floor(),
            std_rounds: mean / 7.0,
            cap_hits: 0,
            run_rounds: vec![1, 2, 3],
            run_success: vec![true],
        }
    }

    #[test]
    fn one_cell_csv() {
        let csv = to_csv_string(&[summary(0.3, 100, 87, 812.456_78)]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines[1], "10,2,0.30,heterogeneous,biased,100,0.870,812.457,812.000,116.065,0");
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(matches!(to_csv_string(&[]), Err(ExperimentError::EmptyTable)));
        assert!(matches!(to_json_string(&[]), Err(ExperimentError::EmptyTable)));
    }

    #[test]
    fn json_mirrors_csv_fields() {
        let json = to_json_string(&[summary(0.5, 100, 40, 10.0)]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let obj = v[0].as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        let mut expected = CSV_COLUMNS.to_vec();
        expected.sort();
        let mut keys_sorted = keys.clone();
        keys_sorted.sort();
        assert_eq!(keys_sorted, expected);
        assert_eq!(obj["success_rate"], 0.4);
        assert_eq!(obj["composition"], "heterogeneous");
    }

    #[test]
    fn unwritable_path() {
        let err = write_results(
            &[summary(0.5, 10, 4, 10.0)],
            ExportFormat::Csv,
            Path::new("/nonexistent-dir/x/results.csv"),
        );
        assert!(matches!(err, Err(ExperimentError::Io(_))));
    }

    proptest! {
        #[test]
        fn csv_roundtrip(
            p in prop::sample::select(vec![0.0, 0.3, 0.5, 1.0]),
            reps in 1usize..500,
            frac in 0.0f64..=1.0,
            mean in 0.0f64..1e5,
        ) {
            let successes = (frac * reps as f64) as usize;
            let cells = vec![summary(p, reps, successes, mean), summary(1.0, reps, reps, mean * 0.5)];
            let parsed = read_csv(&to_csv_string(&cells).unwrap()).unwrap();
            let expected: Vec<CellSummary> = cells.iter().map(CellSummary::rounded).collect();
            prop_assert_eq!(parsed, expected);
        }
    }
}
