//! The time loop: adaptive steps, retries, diagnostics at a fixed cadence and
//! blow-up detection.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{adapt_dt, State, StepOptions, Stepper};
use crate::diagnostics::{
    detect_blowup, dissipation_window, record, BlowupReason, DiagnosticsConfig, DiagnosticsRecord,
};
use crate::grid::Grid;
use crate::model::ModelSpec;
use crate::{Error, Result};

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// Blow-up was detected at time `t`.
    Blowup { t: f64, reason: BlowupReason },
    /// The step could not be completed even after the allowed retries.
    Stalled { t: f64, message: String },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Blowup { .. } => "blowup",
            Outcome::Stalled { .. } => "stalled",
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Outcome::Completed)
    }

    pub fn is_blowup(&self) -> bool {
        matches!(self, Outcome::Blowup { .. })
    }
}

/// Suprema over the run. `sup_u` and `sup_v` are taken over every accepted
/// step, the rest over the recorded series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_t: f64,
    pub steps: u64,
    pub rejected_steps: u64,
    pub min_dt: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub sup_energy_y: f64,
    pub sup_grad_v_sq: f64,
    pub sup_lap_v_sq: f64,
    pub sup_dissipation_density: f64,
    pub sup_lq_norms: Vec<f64>,
    /// Largest dissipation integral over a window of length `tau`; absent
    /// when the recorded series is shorter than `tau`.
    pub dissipation_window: Option<f64>,
    pub clamped_mass: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub summary: RunSummary,
    pub final_state: State,
    pub records: Vec<DiagnosticsRecord>,
    pub wall_time: f64,
    /// Files written for this run; empty unless the harness wrote output.
    pub artifacts: Vec<PathBuf>,
}

/// Runs without observing intermediate states.
pub fn run(
    initial: State,
    m: &ModelSpec,
    g: &Grid,
    t_end: f64,
    o: &StepOptions,
    d: &DiagnosticsConfig,
) -> Result<RunResult> {
    run_with_observer(initial, m, g, t_end, o, d, |_, _| Ok(()))
}

/// Runs to `t_end`, calling `observer` with the initial state and after every
/// accepted step. The record is present exactly at cadence points.
///
/// Steps are shortened to land on multiples of the cadence and on `t_end`,
/// so records sit at exact times and the final state has `t == t_end`.
pub fn run_with_observer<F>(
    initial: State,
    m: &ModelSpec,
    g: &Grid,
    t_end: f64,
    o: &StepOptions,
    d: &DiagnosticsConfig,
    mut observer: F,
) -> Result<RunResult>
where
    F: FnMut(&State, Option<&DiagnosticsRecord>) -> Result<()>,
{
    o.validate()?;
    d.validate()?;
    if !(t_end > initial.t && t_end.is_finite()) {
        return Err(Error::config("t_end", "must exceed the initial time"));
    }
    g.check(&initial.u)?;
    let clock = Instant::now();
    let p = m.damping_exponent();

    let mut s = initial;
    let first = record(&s, g, d, p, false)?;
    observer(&s, Some(&first))?;
    let mut tracker = Tracker::new(&first);
    let mut records = vec![first];

    let mut stepper = Stepper::new(g);
    let mut mark_index: u64 = 1;
    let mark_time = |i: u64| (i as f64 * d.cadence).min(t_end);
    let mut next_mark = mark_time(mark_index);
    let mut rejected = 0u64;
    let mut min_dt = f64::INFINITY;

    let outcome = loop {
        if s.t >= t_end {
            break Outcome::Completed;
        }
        if o.max_steps.is_some_and(|limit| s.step_count >= limit) {
            let rec = record(&s, g, d, p, false)?;
            tracker.absorb(&rec);
            if records.last().map(|r| r.t) != Some(s.t) {
                observer(&s, Some(&rec))?;
                records.push(rec);
            }
            break Outcome::Stalled {
                t: s.t,
                message: format!("step limit of {} reached", s.step_count),
            };
        }
        let mut dt = adapt_dt(&s, m, g, o);
        // Step size the solution asks for, before shortening to hit a mark.
        let mut natural_dt = dt;
        let mut lands = false;
        // Stretching by a hair avoids a sliver step just short of the mark.
        if s.t + dt * (1.0 + 1e-6) >= next_mark {
            dt = next_mark - s.t;
            lands = true;
        }

        let mut attempts = 0;
        let stepped = loop {
            match stepper.step(&s, m, g, dt, o) {
                Ok(next) => break Ok(next),
                Err(err @ (Error::PositivityFailure { .. } | Error::SolverStall { .. })) => {
                    attempts += 1;
                    rejected += 1;
                    dt *= 0.5;
                    natural_dt = dt;
                    lands = false;
                    if dt < d.blowup_dt_floor {
                        break Err(Outcome::Blowup {
                            t: s.t,
                            reason: BlowupReason::DtCollapse,
                        });
                    }
                    if attempts > o.max_retries || dt < o.dt_min {
                        break Err(Outcome::Stalled {
                            t: s.t,
                            message: err.to_string(),
                        });
                    }
                }
                Err(other) => return Err(other),
            }
        };
        let mut next = match stepped {
            Ok(next) => next,
            Err(outcome) => {
                let rec = record(&s, g, d, p, outcome.is_blowup())?;
                tracker.absorb(&rec);
                observer(&s, Some(&rec))?;
                records.push(rec);
                break outcome;
            }
        };
        if lands {
            // Remove the rounding in s.t + dt so records sit on exact marks.
            next.t = next_mark;
        }
        min_dt = min_dt.min(next.last_dt);
        s = next;
        tracker.sup_u = tracker.sup_u.max(s.u.max());
        tracker.sup_v = tracker.sup_v.max(s.v.max());

        let check = detect_blowup(&s, d, natural_dt);
        if lands || check.flagged {
            let rec = record(&s, g, d, p, check.flagged)?;
            tracker.absorb(&rec);
            observer(&s, Some(&rec))?;
            records.push(rec);
            if lands {
                mark_index += 1;
                next_mark = mark_time(mark_index);
            }
        } else {
            observer(&s, None)?;
        }
        if let Some(reason) = check.reason {
            break Outcome::Blowup { t: s.t, reason };
        }
    };

    let window = dissipation_window(&records, d.tau).ok();
    let summary = RunSummary {
        final_t: s.t,
        steps: s.step_count,
        rejected_steps: rejected,
        min_dt: if min_dt.is_finite() { min_dt } else { 0.0 },
        initial_mass: records[0].mass,
        final_mass: records.last().map_or(f64::NAN, |r| r.mass),
        sup_u: tracker.sup_u,
        sup_v: tracker.sup_v,
        sup_energy_y: tracker.energy_y,
        sup_grad_v_sq: tracker.grad_v_sq,
        sup_lap_v_sq: tracker.lap_v_sq,
        sup_dissipation_density: tracker.dissipation_density,
        sup_lq_norms: tracker.lq_norms,
        dissipation_window: window,
        clamped_mass: s.clamped_mass,
    };
    Ok(RunResult {
        outcome,
        summary,
        final_state: s,
        records,
        wall_time: clock.elapsed().as_secs_f64(),
        artifacts: Vec::new(),
    })
}

struct Tracker {
    sup_u: f64,
    sup_v: f64,
    energy_y: f64,
    grad_v_sq: f64,
    lap_v_sq: f64,
    dissipation_density: f64,
    lq_norms: Vec<f64>,
}

impl Tracker {
    fn new(r: &DiagnosticsRecord) -> Self {
        Tracker {
            sup_u: r.sup_u,
            sup_v: r.sup_v,
            energy_y: r.energy_y,
            grad_v_sq: r.grad_v_sq,
            lap_v_sq: r.lap_v_sq,
            dissipation_density: r.dissipation_density,
            lq_norms: r.lq_norms.clone(),
        }
    }

    // f64::max ignores NaN, so a non-finite final record cannot poison the suprema.
    fn absorb(&mut self, r: &DiagnosticsRecord) {
        self.sup_u = self.sup_u.max(r.sup_u);
        self.sup_v = self.sup_v.max(r.sup_v);
        self.energy_y = self.energy_y.max(r.energy_y);
        self.grad_v_sq = self.grad_v_sq.max(r.grad_v_sq);
        self.lap_v_sq = self.lap_v_sq.max(r.lap_v_sq);
        self.dissipation_density = self.dissipation_density.max(r.dissipation_density);
        for (s, x) in self.lq_norms.iter_mut().zip(&r.lq_norms) {
            *s = s.max(*x);
        }
    }
}
