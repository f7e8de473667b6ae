//! Single runs with their on-disk artifacts: `series.csv`, `summary.json`,
//! `run.json` and `KSFIELD` snapshots.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ResolvedRun;
use super::initial::make_initial_data;
use crate::diagnostics::DiagnosticsRecord;
use crate::grid::{write_snapshot, Grid};
use crate::model::Regime;
use crate::stepper::{run_with_observer, Outcome, RunResult, RunSummary, State};
use crate::{Error, Result};

pub const SUMMARY_SCHEMA: &str = "kslab.summary/v1";

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryFile<'a> {
    pub schema: &'static str,
    #[serde(flatten)]
    pub outcome: &'a Outcome,
    pub summary: &'a RunSummary,
    pub regime: Regime,
    pub k: f64,
    pub tau: f64,
    pub seed: u64,
    pub warnings: &'a [String],
    pub wall_time: f64,
    pub artifacts: &'a [PathBuf],
}

/// Builds the initial state from the config.
pub fn initial_state(run: &ResolvedRun) -> Result<State> {
    let (u0, v0) = make_initial_data(&run.config.initial, &run.grid, run.config.seed)?;
    State::new(u0, v0)
}

/// Runs a resolved config. Without an output directory nothing is written.
pub fn simulate(run: &ResolvedRun) -> Result<RunResult> {
    let state = initial_state(run)?;
    let cfg = &run.config;
    let Some(dir) = cfg.output.resolve_dir() else {
        return crate::stepper::run(
            state,
            &cfg.model,
            &run.grid,
            cfg.t_end,
            &cfg.step,
            &run.diagnostics,
        );
    };
    simulate_into(run, state, &dir)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn simulate_into(run: &ResolvedRun, state: State, dir: &Path) -> Result<RunResult> {
    let cfg = &run.config;
    create_dir(dir)?;
    let mut artifacts = Vec::new();

    let config_path = dir.join("run.json");
    fs::write(&config_path, cfg.to_json()).map_err(|e| Error::io(&config_path, e))?;
    artifacts.push(config_path);

    let series_path = dir.join("series.csv");
    let file = File::create(&series_path).map_err(|e| Error::io(&series_path, e))?;
    let mut series = BufWriter::new(file);
    writeln!(series, "{}", DiagnosticsRecord::csv_header(&run.diagnostics.q_list))
        .map_err(|e| Error::io(&series_path, e))?;

    let mut snapshots = Snapshotter::new(dir.join("snapshots"), cfg.output.snapshot_every);
    let result = run_with_observer(
        state,
        &cfg.model,
        &run.grid,
        cfg.t_end,
        &cfg.step,
        &run.diagnostics,
        |s, rec| {
            if let Some(rec) = rec {
                writeln!(series, "{}", rec.csv_row()).map_err(|e| Error::io(&series_path, e))?;
            }
            snapshots.observe(s, &run.grid)
        },
    );
    series.flush().map_err(|e| Error::io(&series_path, e))?;
    let mut result = result?;
    artifacts.push(series_path);
    snapshots.finish(&result.final_state, &run.grid)?;
    artifacts.extend(snapshots.written);

    let summary_path = dir.join("summary.json");
    artifacts.push(summary_path.clone());
    let summary = SummaryFile {
        schema: SUMMARY_SCHEMA,
        outcome: &result.outcome,
        summary: &result.summary,
        regime: run.regime,
        k: run.diagnostics.k,
        tau: run.diagnostics.tau,
        seed: cfg.seed,
        warnings: &run.warnings,
        wall_time: result.wall_time,
        artifacts: &artifacts,
    };
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, text).map_err(|e| Error::io(&summary_path, e))?;
    result.artifacts = artifacts;
    Ok(result)
}

/// Writes `u` and `v` snapshots at the first state on or after each multiple
/// of `every`, plus the final state.
struct Snapshotter {
    dir: PathBuf,
    every: Option<f64>,
    next: f64,
    index: usize,
    last_t: Option<f64>,
    written: Vec<PathBuf>,
}

impl Snapshotter {
    fn new(dir: PathBuf, every: Option<f64>) -> Self {
        Snapshotter {
            dir,
            every,
            next: 0.0,
            index: 0,
            last_t: None,
            written: Vec::new(),
        }
    }

    fn observe(&mut self, s: &State, g: &Grid) -> Result<()> {
        let Some(every) = self.every else {
            return Ok(());
        };
        if s.t + 1e-12 * every >= self.next {
            self.write(s, g)?;
            while self.next <= s.t + 1e-12 * every {
                self.next += every;
            }
        }
        Ok(())
    }

    fn finish(&mut self, s: &State, g: &Grid) -> Result<()> {
        if self.every.is_some() && self.last_t != Some(s.t) {
            self.write(s, g)?;
        }
        Ok(())
    }

    fn write(&mut self, s: &State, g: &Grid) -> Result<()> {
        if self.index == 0 {
            create_dir(&self.dir)?;
        }
        for (name, field) in [("u", &s.u), ("v", &s.v)] {
            let path = self.dir.join(format!("{name}_{:05}.ksfield", self.index));
            write_snapshot(&path, field, g, s.t)?;
            self.written.push(path);
        }
        self.index += 1;
        self.last_t = Some(s.t);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{read_snapshot, Geometry};
    use crate::harness::config::RunConfig;
    use crate::model::ModelSpec;

    fn small_config(dir: &Path) -> RunConfig {
        let mut cfg = RunConfig::new(ModelSpec::classical(), Geometry::unit_square(8), 0.1);
        cfg.output.dir = Some(dir.to_path_buf());
        cfg.output.snapshot_every = Some(0.05);
        cfg.seed = 3;
        cfg
    }

    #[test]
    fn writes_series_summary_and_snapshots() {
        let tmp = tempfile::tempdir().unwrap();
        let run = small_config(tmp.path()).resolve().unwrap();
        let res = simulate(&run).unwrap();
        assert!(res.outcome.is_completed());
        let csv = fs::read_to_string(tmp.path().join("series.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + res.records.len());
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["outcome"], "completed");
        assert_eq!(summary["schema"], SUMMARY_SCHEMA);
        // t = 0, 0.05 and 0.1
        let last = tmp.path().join("snapshots/u_00002.ksfield");
        let (u, t) = read_snapshot(&last, &run.grid).unwrap();
        assert_eq!(t, 0.1);
        assert_eq!(u, res.final_state.u);
    }

    #[test]
    fn identical_seeds_give_identical_series() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        simulate(&small_config(a.path()).resolve().unwrap()).unwrap();
        simulate(&small_config(b.path()).resolve().unwrap()).unwrap();
        let read = |d: &Path| fs::read(d.join("series.csv")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
    }
}
