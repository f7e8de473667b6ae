//! Grid and time-step refinement studies.

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::output::initial_state;
use crate::grid::{Field, Grid};
use crate::stepper::{run, Outcome, RunResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceKind {
    /// Halve the cell size per level with `dt = factor * h^2`, so that the
    /// first-order time error shrinks like the second-order space error.
    Spatial,
    /// Fixed grid, constant `dt = factor / 2^level`, compared with a run at
    /// an eighth of the finest step.
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub cells: usize,
    pub h: f64,
    pub dt: f64,
    /// Max-norm error of `u` at `t_end`.
    pub error: f64,
    /// `log2(error_(level-1) / error_level)`.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub kind: ConvergenceKind,
    pub reference: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Orders between consecutive levels.
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,cells,h,dt,error,order\n");
        for r in &self.rows {
            let order = r.order.map(|o| format!("{o:.4}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e},{order}\n",
                r.level, r.cells, r.h, r.dt, r.error
            ));
        }
        out
    }
}

/// Exact solution `u(x, y, t)` used as reference instead of the finest level.
pub type ExactSolution<'a> = &'a dyn Fn(f64, f64, f64) -> f64;

fn fixed_step(cfg: &RunConfig, dt: f64) -> RunConfig {
    let mut cfg = cfg.clone();
    cfg.step.dt_max = dt;
    cfg.step.dt_min = dt.min(cfg.step.dt_min);
    // records only at the ends, so no step is shortened to hit a cadence mark
    cfg.diagnostics.cadence = Some(cfg.t_end);
    cfg.diagnostics.tau = Some(cfg.t_end);
    cfg.output.dir = None;
    cfg
}

fn solve(cfg: &RunConfig) -> Result<(Grid, RunResult)> {
    let resolved = cfg.resolve()?;
    let state = initial_state(&resolved)?;
    let res = run(
        state,
        &cfg.model,
        &resolved.grid,
        cfg.t_end,
        &cfg.step,
        &resolved.diagnostics,
    )?;
    match &res.outcome {
        Outcome::Completed => Ok((resolved.grid, res)),
        other => Err(Error::Precondition(format!(
            "refinement run ended with {} at t = {}",
            other.label(),
            res.summary.final_t
        ))),
    }
}

fn max_error(a: &Field, b: &Field) -> f64 {
    a.max_abs_diff(b)
}

/// Restricts `field` from `fine` down to `coarse` by repeated 2x coarsening.
fn restrict_to(field: &Field, fine: &Grid, coarse: &Grid) -> Result<Field> {
    let mut grid = fine.clone();
    let mut f = field.clone();
    while grid.len() > coarse.len() {
        let (nx, ny) = grid.geometry().shape();
        let next_geometry = match grid.geometry() {
            crate::grid::Geometry::Rectangle { lx, ly, .. } => crate::grid::Geometry::Rectangle {
                lx,
                ly,
                nx: nx / 2,
                ny: ny / 2,
            },
            crate::grid::Geometry::RadialDisk { radius, .. } => {
                crate::grid::Geometry::RadialDisk { radius, nr: nx / 2 }
            }
        };
        let next = Grid::new(next_geometry)?;
        f = grid.restrict(&f, &next)?;
        grid = next;
    }
    if grid.geometry() != coarse.geometry() {
        return Err(Error::GridMismatch);
    }
    Ok(f)
}

/// Runs `cfg` at `levels` refinements and reports errors and observed orders.
///
/// `factor` sets the step: `dt = factor * h^2` for spatial studies and
/// `dt = factor / 2^level` for temporal ones. Without `exact`, spatial errors
/// are measured against the finest level restricted to each coarser grid.
pub fn convergence_study(
    cfg: &RunConfig,
    kind: ConvergenceKind,
    levels: usize,
    factor: f64,
    exact: Option<ExactSolution<'_>>,
) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(Error::config("levels", "a convergence study needs at least 3 levels"));
    }
    if !(factor > 0.0) {
        return Err(Error::config("factor", "must be > 0"));
    }
    let mut rows = Vec::with_capacity(levels);
    let reference;
    match kind {
        ConvergenceKind::Spatial => {
            let mut solutions = Vec::with_capacity(levels);
            for level in 0..levels {
                let mut c = cfg.clone();
                c.grid = cfg.grid.refined(1 << level);
                let h = Grid::new(c.grid)?.min_spacing();
                let dt = factor * h * h;
                let (grid, res) = solve(&fixed_step(&c, dt))?;
                solutions.push((grid, res.final_state.u, h, dt));
            }
            let (fine_grid, fine_u, ..) = solutions.last().expect("levels >= 3").clone();
            reference = if exact.is_some() { "exact" } else { "finest level" };
            let count = if exact.is_some() { levels } else { levels - 1 };
            for (level, (grid, u, h, dt)) in solutions.iter().take(count).enumerate() {
                let error = match exact {
                    Some(f) => {
                        let truth = Field::from_fn(grid, |x, y| f(x, y, cfg.t_end));
                        max_error(u, &truth)
                    }
                    None => max_error(u, &restrict_to(&fine_u, &fine_grid, grid)?),
                };
                rows.push(ConvergenceRow {
                    level,
                    cells: grid.len(),
                    h: *h,
                    dt: *dt,
                    error,
                    order: None,
                });
            }
        }
        ConvergenceKind::Temporal => {
            let finest = factor / (1u64 << (levels - 1)) as f64;
            let (grid, truth) = solve(&fixed_step(cfg, finest / 8.0))?;
            reference = "eighth of the finest step";
            let h = grid.min_spacing();
            for level in 0..levels {
                let dt = factor / (1u64 << level) as f64;
                let (_, res) = solve(&fixed_step(cfg, dt))?;
                rows.push(ConvergenceRow {
                    level,
                    cells: grid.len(),
                    h,
                    dt,
                    error: max_error(&res.final_state.u, &truth.final_state.u),
                    order: None,
                });
            }
        }
    }
    for i in 1..rows.len() {
        let (prev, cur) = (rows[i - 1].error, rows[i].error);
        if prev > 0.0 && cur > 0.0 {
            rows[i].order = Some((prev / cur).log2());
        }
    }
    Ok(ConvergenceTable {
        kind,
        reference: reference.to_string(),
        rows,
    })
}
