//! Parameter sweeps over the cross product of named axes.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::RunConfig;
use super::output::simulate;
use crate::stepper::Outcome;
use crate::{Error, Result};

pub const SWEEP_SCHEMA: &str = "kslab.sweep/v1";

/// One swept parameter. `path` is either a dotted path into the run config
/// (`model.source.p`, `initial.u0.mass`, ...) or one of the shorthands `p`,
/// `mu`, `r`, `mass`, `n` (cells per side) and `geometry` (a whole grid object).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub path: String,
    pub values: Vec<Value>,
}

impl Axis {
    pub fn new(path: &str, values: impl IntoIterator<Item = impl Into<Value>>) -> Self {
        Axis {
            path: path.to_string(),
            values: values.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub base: RunConfig,
    pub axes: Vec<Axis>,
    /// Runs executed at the same time.
    #[serde(default = "one")]
    pub parallelism: usize,
    /// Refuse plans whose cross product exceeds this many runs.
    #[serde(default = "default_limit")]
    pub max_runs: usize,
    /// Sweep directory; each run writes to `run_<index>` inside it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_schema() -> String {
    SWEEP_SCHEMA.to_string()
}

fn one() -> usize {
    1
}

fn default_limit() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub params: Vec<Value>,
    /// `completed`, `blowup`, `stalled` or `error`.
    pub outcome: String,
    pub t_star: Option<f64>,
    pub final_t: Option<f64>,
    pub sup_u: Option<f64>,
    pub sup_v: Option<f64>,
    pub sup_energy_y: Option<f64>,
    pub dissipation_window: Option<f64>,
    pub final_mass: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepPlan {
    pub fn new(base: RunConfig, axes: Vec<Axis>) -> Self {
        SweepPlan {
            schema: default_schema(),
            base,
            axes,
            parallelism: 1,
            max_runs: default_limit(),
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    fn validate(&self) -> Result<()> {
        if self.schema != SWEEP_SCHEMA {
            return Err(Error::config("schema", format!("expected {SWEEP_SCHEMA:?}")));
        }
        if self.parallelism == 0 {
            return Err(Error::config("parallelism", "must be >= 1"));
        }
        if let Some(axis) = self.axes.iter().find(|a| a.values.is_empty()) {
            return Err(Error::config(format!("axes.{}", axis.path), "no values"));
        }
        if self.size() > self.max_runs {
            return Err(Error::config(
                "axes",
                format!("{} runs exceed max_runs = {}", self.size(), self.max_runs),
            ));
        }
        Ok(())
    }

    /// Parameter values of cell `index`, last axis fastest.
    fn cell(&self, mut index: usize) -> Vec<Value> {
        let mut values = vec![Value::Null; self.axes.len()];
        for (slot, axis) in values.iter_mut().zip(&self.axes).rev() {
            *slot = axis.values[index % axis.values.len()].clone();
            index /= axis.values.len();
        }
        values
    }

    /// The run config of cell `index`.
    pub fn config_for(&self, index: usize) -> Result<RunConfig> {
        let mut doc = serde_json::to_value(&self.base).expect("config serializes");
        for (axis, value) in self.axes.iter().zip(self.cell(index)) {
            apply(&mut doc, &axis.path, value)?;
        }
        let mut cfg: RunConfig = serde_json::from_value(doc)
            .map_err(|e| Error::config("axes", e.to_string()))?;
        if let Some(root) = &self.output_dir {
            cfg.output.dir = Some(root.join(format!("run_{index:04}")));
        }
        Ok(cfg)
    }
}

fn apply(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    match path {
        "p" | "mu" | "r" => set(doc, &format!("model.source.{path}"), value),
        "mass" => set(doc, "initial.u0.mass", value),
        "geometry" => set(doc, "grid", value),
        "n" => {
            if doc["grid"]["geometry"] == "radial_disk" {
                set(doc, "grid.nr", value)
            } else {
                set(doc, "grid.nx", value.clone())?;
                set(doc, "grid.ny", value)
            }
        }
        _ => set(doc, path, value),
    }
}

fn set(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        node = node
            .get_mut(*part)
            .filter(|n| n.is_object())
            .ok_or_else(|| Error::config(path, format!("no object at {part:?}")))?;
    }
    let last = parts[parts.len() - 1];
    match node.as_object_mut() {
        Some(map) => {
            map.insert(last.to_string(), value);
            Ok(())
        }
        None => Err(Error::config(path, "parent is not an object")),
    }
}

fn execute(plan: &SweepPlan, index: usize) -> SweepRow {
    let params = plan.cell(index);
    let failed = |params: Vec<Value>, e: Error| SweepRow {
        index,
        params,
        outcome: "error".into(),
        t_star: None,
        final_t: None,
        sup_u: None,
        sup_v: None,
        sup_energy_y: None,
        dissipation_window: None,
        final_mass: None,
        error: Some(e.to_string()),
    };
    let result = plan
        .config_for(index)
        .and_then(|cfg| cfg.resolve())
        .and_then(|run| simulate(&run));
    match result {
        Ok(res) => {
            let s = &res.summary;
            SweepRow {
                index,
                params,
                outcome: res.outcome.label().into(),
                t_star: match res.outcome {
                    Outcome::Blowup { t, .. } => Some(t),
                    _ => None,
                },
                final_t: Some(s.final_t),
                sup_u: Some(s.sup_u),
                sup_v: Some(s.sup_v),
                sup_energy_y: Some(s.sup_energy_y),
                dissipation_window: s.dissipation_window,
                final_mass: Some(s.final_mass),
                error: None,
            }
        }
        Err(e) => failed(params, e),
    }
}

fn csv_header(axes: &[String]) -> String {
    let mut cols = vec!["index".to_string()];
    cols.extend(axes.iter().cloned());
    cols.extend(
        [
            "outcome",
            "t_star",
            "final_t",
            "sup_u",
            "sup_v",
            "sup_energy_y",
            "dissipation_window",
            "final_mass",
            "error",
        ]
        .map(String::from),
    );
    cols.join(",")
}

fn csv_row(row: &SweepRow) -> String {
    let num = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    let mut cols = vec![row.index.to_string()];
    cols.extend(row.params.iter().map(|v| match v {
        Value::String(s) => s.clone(),
        other => other.to_string().replace(',', ";"),
    }));
    cols.push(row.outcome.clone());
    for x in [
        row.t_star,
        row.final_t,
        row.sup_u,
        row.sup_v,
        row.sup_energy_y,
        row.dissipation_window,
        row.final_mass,
    ] {
        cols.push(num(x));
    }
    cols.push(
        row.error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n'], " "),
    );
    cols.join(",")
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = csv_header(&self.axes);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&csv_row(row));
            out.push('\n');
        }
        out
    }
}

/// Runs every cell of the plan. Failed cells become `error` rows; the sweep
/// itself only fails on an invalid plan or when its own files cannot be written.
///
/// With an output directory, each finished row is appended to
/// `sweep.partial.csv` as soon as it is known, and `sweep.csv` holds the
/// table sorted by cell index at the end.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepTable> {
    plan.validate()?;
    let axes: Vec<String> = plan.axes.iter().map(|a| a.path.clone()).collect();
    let partial_path = plan.output_dir.as_ref().map(|d| d.join("sweep.partial.csv"));
    if let Some(dir) = &plan.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    if let Some(path) = &partial_path {
        fs::write(path, csv_header(&axes) + "\n").map_err(|e| Error::io(path, e))?;
    }

    let total = plan.size();
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(total));
    let io_error: Mutex<Option<Error>> = Mutex::new(None);
    let workers = plan.parallelism.min(total).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= total {
                    break;
                }
                let row = execute(plan, index);
                let mut rows = rows.lock().expect("no worker panics while holding the lock");
                if let Some(path) = &partial_path {
                    if let Err(e) = append(path, &csv_row(&row)) {
                        io_error.lock().expect("lock").get_or_insert(e);
                    }
                }
                rows.push(row);
            });
        }
    });
    if let Some(e) = io_error.into_inner().expect("lock") {
        return Err(e);
    }
    let mut rows = rows.into_inner().expect("lock");
    rows.sort_by_key(|r| r.index);
    let table = SweepTable { axes, rows };
    if let Some(dir) = &plan.output_dir {
        let path = dir.join("sweep.csv");
        fs::write(&path, table.to_csv()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(table)
}

fn append(path: &Path, line: &str) -> Result<()> {
    let mut file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    writeln!(file, "{line}").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;
    use crate::harness::output::simulate;
    use crate::model::{ModelSpec, SourceSpec};

    fn base() -> RunConfig {
        let model = ModelSpec::classical().with_source(SourceSpec::new(0.0, 1.0, 0.5).unwrap());
        RunConfig::new(model, Geometry::unit_square(8), 0.05)
    }

    #[test]
    fn single_cell_matches_direct_run() {
        let plan = SweepPlan::new(base(), vec![Axis::new("p", [0.5])]);
        let table = run_sweep(&plan).unwrap();
        assert_eq!(table.rows.len(), 1);
        let direct = simulate(&base().resolve().unwrap()).unwrap();
        let row = &table.rows[0];
        assert_eq!(row.outcome, "completed");
        assert_eq!(row.sup_u, Some(direct.summary.sup_u));
        assert_eq!(row.sup_energy_y, Some(direct.summary.sup_energy_y));
    }

    #[test]
    fn cross_product_rows_and_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let mut plan = SweepPlan::new(
            base(),
            vec![Axis::new("p", [0.25, 0.45]), Axis::new("mu", [1.0, -1.0]), Axis::new("n", [8, 12])],
        );
        plan.parallelism = 3;
        plan.output_dir = Some(tmp.path().to_path_buf());
        let table = run_sweep(&plan).unwrap();
        assert_eq!(table.rows.len(), 8);
        assert!(table.rows.iter().enumerate().all(|(i, r)| r.index == i));
        // negative mu is invalid and must show up as an error row
        let errors = table.rows.iter().filter(|r| r.outcome == "error").count();
        assert_eq!(errors, 4);
        assert!(table.rows.iter().all(|r| r.outcome == "error" || r.outcome == "completed"));
        let csv = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().count(), 9);
        let partial = fs::read_to_string(tmp.path().join("sweep.partial.csv")).unwrap();
        assert_eq!(partial.lines().count(), 9);
        // index 4 is (p = 0.45, mu = 1, n = 8), index 3 has the invalid mu
        assert!(tmp.path().join("run_0004/series.csv").exists());
    }

    #[test]
    fn oversized_and_bad_paths() {
        let mut plan = SweepPlan::new(base(), vec![Axis::new("p", [0.1, 0.2, 0.3])]);
        plan.max_runs = 2;
        assert!(run_sweep(&plan).is_err());
        let plan = SweepPlan::new(base(), vec![Axis::new("model.nothing.here", [1])]);
        let table = run_sweep(&plan).unwrap();
        assert_eq!(table.rows[0].outcome, "error");
    }
}
