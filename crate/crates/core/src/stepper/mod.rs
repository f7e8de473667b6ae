//! First-order IMEX time stepping.
//!
//! One step of size `dt` performs, in order:
//!
//! 1. the chemical stage `(1 + dt) v' - dt lap(v') = v + dt u`, solved implicitly;
//! 2. the density stage with diffusion `div(D(v') grad u')` implicit (face
//!    coefficients frozen at `v'`), the chemotactic flux explicit and upwinded
//!    with `v'`, and the source either explicit or in Patankar form, where the
//!    damping `mu u^2 / ln^p(u + e)` becomes `mu u u' / ln^p(u + e)`.
//!
//! Under the transport restriction chosen by [`adapt_dt`] the explicit part of
//! the density stage is nonnegative, and the implicit operator is an M-matrix,
//! so the new density stays nonnegative.

mod helmholtz;
mod multigrid;
mod run;

pub use helmholtz::{solve_helmholtz, Coefficient, Preconditioner, Reaction, SolveStats};
pub use run::{run, run_with_observer, Outcome, RunResult, RunSummary};

use serde::{Deserialize, Serialize};

use crate::grid::{
    chemotactic_divergence_into, face_diffusivity_into, ChemotaxisScheme, FaceAverage, Field, Grid,
};
use crate::model::ModelSpec;
use crate::{Error, Result};
use helmholtz::HelmholtzSolver;

/// Values in `[-CLAMP_FLOOR * scale, 0)` are rounding and get clamped to zero.
pub const CLAMP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
    pub step_count: u64,
    pub last_dt: f64,
    /// Cumulative mass removed by clamping rounding-level negatives.
    pub clamped_mass: f64,
}

impl State {
    /// Initial state; both fields must be nonnegative and finite.
    pub fn new(u: Field, v: Field) -> Result<Self> {
        if u.grid_id() != v.grid_id() {
            return Err(Error::GridMismatch);
        }
        for (name, f) in [("u", &u), ("v", &v)] {
            if !f.all_finite() || f.min() < 0.0 {
                return Err(Error::Precondition(format!(
                    "initial {name} must be finite and nonnegative"
                )));
            }
        }
        Ok(State {
            u,
            v,
            t: 0.0,
            step_count: 0,
            last_dt: 0.0,
            clamped_mass: 0.0,
        })
    }
}

/// Treatment of the source term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTreatment {
    /// `u' += dt f(u)`.
    Explicit,
    /// Production explicit, damping linearly implicit; unconditionally positive.
    #[default]
    Patankar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepOptions {
    pub cfl_safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub linear_tol: f64,
    pub max_linear_iters: usize,
    pub preconditioner: Preconditioner,
    pub chemotaxis: ChemotaxisScheme,
    pub source: SourceTreatment,
    pub face_average: FaceAverage,
    /// Halvings of `dt` allowed for a single step before the run stalls.
    pub max_retries: u32,
    /// Accepted steps after which a run stops as stalled; unlimited when unset.
    pub max_steps: Option<u64>,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            // Four outgoing faces per cell: 0.2 keeps the upwind update a convex combination.
            cfl_safety: 0.2,
            dt_min: 1e-14,
            dt_max: 1e-2,
            linear_tol: 1e-10,
            max_linear_iters: 20_000,
            preconditioner: Preconditioner::Multigrid,
            chemotaxis: ChemotaxisScheme::Upwind,
            source: SourceTreatment::Patankar,
            face_average: FaceAverage::Arithmetic,
            max_retries: 20,
            max_steps: None,
        }
    }
}

impl StepOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::config("step.cfl_safety", "must lie in (0, 1]"));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return Err(Error::config("step.dt_min", "need 0 < dt_min <= dt_max"));
        }
        if !(self.linear_tol > 0.0) {
            return Err(Error::config("step.linear_tol", "must be > 0"));
        }
        if self.max_steps == Some(0) {
            return Err(Error::config("step.max_steps", "must be >= 1"));
        }
        if self.max_linear_iters == 0 {
            return Err(Error::config("step.max_linear_iters", "must be >= 1"));
        }
        Ok(())
    }
}

/// Step sizes allowed by the explicit parts of the density stage.
pub fn adapt_dt(s: &State, m: &ModelSpec, g: &Grid, o: &StepOptions) -> f64 {
    let v = s.v.values();
    let mut dt = f64::INFINITY;
    if let Some(transport) = transport_limit(v, m, g) {
        dt = o.cfl_safety * transport;
    }
    if o.source == SourceTreatment::Explicit {
        if let Some(source) = &m.source {
            let u_max = s.u.max().max(0.0);
            let h = 1e-6 * u_max.max(1.0);
            let slope = ((source.value(u_max + h) - source.value(u_max)) / h)
                .abs()
                .max(source.r.abs());
            if slope > 0.0 {
                dt = dt.min(0.5 / slope);
            }
        }
    }
    dt.clamp(o.dt_min, o.dt_max)
}

/// `min over faces of h / |w|` with `w = S(v_face) (v_R - v_L) / h`, if any face moves.
pub(crate) fn transport_limit(v: &[f64], m: &ModelSpec, g: &Grid) -> Option<f64> {
    let mut best = f64::INFINITY;
    for face in g.faces() {
        let dv = v[face.right] - v[face.left];
        if dv == 0.0 {
            continue;
        }
        let speed = (m.sensitivity.value(0.5 * (v[face.left] + v[face.right])) * dv / face.dist).abs();
        if speed > 0.0 {
            best = best.min(face.dist / speed);
        }
    }
    best.is_finite().then_some(best)
}

/// Advances `s` by `dt`. Allocates a fresh workspace; loops should keep a [`Stepper`].
pub fn step(s: &State, m: &ModelSpec, g: &Grid, dt: f64, o: &StepOptions) -> Result<State> {
    Stepper::new(g).step(s, m, g, dt, o)
}

/// Step workspace reused across steps of one run.
#[derive(Debug, Clone)]
pub struct Stepper {
    solver: HelmholtzSolver,
    face_coeff: Vec<f64>,
    unit_faces: Vec<f64>,
    rhs: Vec<f64>,
    transport: Vec<f64>,
    reaction: Vec<f64>,
    pub last_stats: [SolveStats; 2],
}

impl Stepper {
    pub fn new(g: &Grid) -> Self {
        let n = g.len();
        let nf = g.faces().len();
        Stepper {
            solver: HelmholtzSolver::new(g, Preconditioner::default()),
            face_coeff: vec![0.0; nf],
            unit_faces: vec![0.0; nf],
            rhs: vec![0.0; n],
            transport: vec![0.0; n],
            reaction: vec![0.0; n],
            last_stats: [SolveStats { iterations: 0, residual: 0.0 }; 2],
        }
    }

    pub fn step(
        &mut self,
        s: &State,
        m: &ModelSpec,
        g: &Grid,
        dt: f64,
        o: &StepOptions,
    ) -> Result<State> {
        g.check(&s.u)?;
        g.check(&s.v)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!("dt = {dt} must be positive")));
        }
        if self.solver.preconditioner() != o.preconditioner {
            self.solver = HelmholtzSolver::new(g, o.preconditioner);
        }
        let u = s.u.values();
        let n = g.len();
        let vol = g.volumes();
        let mut clamped = 0.0;

        // Chemical stage.
        self.unit_faces.iter_mut().for_each(|c| *c = dt);
        for i in 0..n {
            self.rhs[i] = s.v[i] + dt * u[i];
        }
        let mut v_new = s.v.values().to_vec();
        self.last_stats[0] = self.solver.solve(
            g,
            &self.unit_faces,
            Reaction::Scalar(dt),
            &self.rhs,
            &mut v_new,
            o.linear_tol,
            o.max_linear_iters,
        )?;
        let v_scale = s.v.max().max(s.u.max()).max(1.0);
        clamped += clamp_negatives(&mut v_new, vol, v_scale, o.linear_tol)?;

        // Density stage: explicit predictor.
        chemotactic_divergence_into(u, &v_new, &m.sensitivity, g, o.chemotaxis, &mut self.transport);
        let u_scale = s.u.max().max(1.0);
        match (&m.source, o.source) {
            (None, _) => {
                for i in 0..n {
                    self.rhs[i] = u[i] - dt * self.transport[i];
                    self.reaction[i] = 0.0;
                }
            }
            (Some(src), SourceTreatment::Explicit) => {
                for i in 0..n {
                    self.rhs[i] = u[i] - dt * self.transport[i] + dt * src.value(u[i]);
                    self.reaction[i] = 0.0;
                }
            }
            (Some(src), SourceTreatment::Patankar) => {
                let production = src.r.max(0.0);
                let linear_loss = (-src.r).max(0.0);
                for i in 0..n {
                    self.rhs[i] = u[i] * (1.0 + dt * production) - dt * self.transport[i];
                    self.reaction[i] = dt * (src.destruction_rate(u[i]) + linear_loss);
                }
            }
        }
        let predictor_min = self.rhs.iter().copied().fold(f64::INFINITY, f64::min);
        if predictor_min < -CLAMP_FLOOR * u_scale || !predictor_min.is_finite() {
            return Err(Error::PositivityFailure { min: predictor_min });
        }

        // Density stage: implicit diffusion (and damping).
        face_diffusivity_into(&v_new, &m.diffusion, o.face_average, g, &mut self.face_coeff)?;
        self.face_coeff.iter_mut().for_each(|c| *c *= dt);
        let mut u_new = u.to_vec();
        let reaction = if m.source.is_some() {
            Reaction::Cells(&self.reaction)
        } else {
            Reaction::Scalar(0.0)
        };
        self.last_stats[1] = self.solver.solve(
            g,
            &self.face_coeff,
            reaction,
            &self.rhs,
            &mut u_new,
            o.linear_tol,
            o.max_linear_iters,
        )?;
        clamped += clamp_negatives(&mut u_new, vol, u_scale, o.linear_tol)?;

        Ok(State {
            u: Field::new(g, u_new)?,
            v: Field::new(g, v_new)?,
            t: s.t + dt,
            step_count: s.step_count + 1,
            last_dt: dt,
            clamped_mass: s.clamped_mass + clamped,
        })
    }
}

/// Clamps rounding-level negatives to zero and returns the clamped mass.
///
/// The tolerance is `max(CLAMP_FLOOR, linear_tol) * scale`: an iterative solve
/// stopped at relative residual `linear_tol` leaves errors of that size in
/// cells whose exact value is zero.
fn clamp_negatives(
    values: &mut [f64],
    vol: &[f64],
    scale: f64,
    linear_tol: f64,
) -> Result<f64> {
    let floor = -CLAMP_FLOOR.max(linear_tol) * scale;
    let mut clamped = 0.0;
    let mut worst = 0.0f64;
    for (x, w) in values.iter_mut().zip(vol) {
        if *x < 0.0 {
            worst = worst.min(*x);
            clamped -= *x * w;
            *x = 0.0;
        } else if !x.is_finite() {
            return Err(Error::PositivityFailure { min: *x });
        }
    }
    if worst < floor {
        return Err(Error::PositivityFailure { min: worst });
    }
    Ok(clamped)
}
