//! Preconditioned conjugate gradients for
//! `w - div(c grad w) + alpha w = rhs` with zero-flux boundaries.
//!
//! Multiplying each row by its cell volume makes the system symmetric:
//! `vol_i (1 + alpha_i) w_i + sum_faces T_f c_f (w_i - w_j) = vol_i rhs_i`,
//! an M-matrix whose inverse is nonnegative.

use serde::{Deserialize, Serialize};

use super::multigrid::Multigrid;
use super::super::grid::{Field, Grid};
use crate::{Error, Result};

/// Preconditioner for the implicit solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    /// Aggregation multigrid V-cycle. Iteration counts stay nearly flat
    /// as the grid is refined or the step grows.
    #[default]
    Multigrid,
    /// Diagonal scaling.
    Jacobi,
}

/// Diffusivity of the implicit operator.
#[derive(Debug, Clone, Copy)]
pub enum Coefficient<'a> {
    Scalar(f64),
    /// Per-cell values; faces use the arithmetic mean of their two cells.
    Cells(&'a Field),
    /// Per-face values in grid face order.
    Faces(&'a [f64]),
}

/// Zeroth-order term `alpha`.
#[derive(Debug, Clone, Copy)]
pub enum Reaction<'a> {
    Scalar(f64),
    Cells(&'a [f64]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves the Helmholtz problem from a zero initial guess.
pub fn solve_helmholtz(
    g: &Grid,
    coeff: Coefficient<'_>,
    alpha: f64,
    rhs: &Field,
    tol: f64,
) -> Result<Field> {
    g.check(rhs)?;
    if !(alpha >= 0.0) {
        return Err(Error::Precondition(format!("alpha = {alpha} must be >= 0")));
    }
    let faces = face_coefficients(g, coeff)?;
    let mut solver = HelmholtzSolver::new(g, Preconditioner::default());
    let mut w = vec![0.0; g.len()];
    solver.solve(
        g,
        &faces,
        Reaction::Scalar(alpha),
        rhs.values(),
        &mut w,
        tol,
        default_iteration_cap(g),
    )?;
    Field::new(g, w)
}

pub(crate) fn default_iteration_cap(g: &Grid) -> usize {
    (20 * g.len()).max(1000)
}

fn face_coefficients(g: &Grid, coeff: Coefficient<'_>) -> Result<Vec<f64>> {
    let values: Vec<f64> = match coeff {
        Coefficient::Scalar(c) => vec![c; g.faces().len()],
        Coefficient::Cells(field) => {
            g.check(field)?;
            let c = field.values();
            g.faces()
                .iter()
                .map(|f| 0.5 * (c[f.left] + c[f.right]))
                .collect()
        }
        Coefficient::Faces(c) => {
            if c.len() != g.faces().len() {
                return Err(Error::GridMismatch);
            }
            c.to_vec()
        }
    };
    if let Some(bad) = values.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(Error::Precondition(format!(
            "diffusivity {bad} must be finite and nonnegative"
        )));
    }
    Ok(values)
}

/// Reusable CG workspace.
#[derive(Debug, Clone)]
pub(crate) struct HelmholtzSolver {
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    diag: Vec<f64>,
    /// Face weights `T_f c_f`, kept for the multigrid update.
    weights: Vec<f64>,
    multigrid: Option<Box<Multigrid>>,
}

impl HelmholtzSolver {
    pub(crate) fn new(g: &Grid, pre: Preconditioner) -> Self {
        let n = g.len();
        HelmholtzSolver {
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
            diag: vec![0.0; n],
            weights: vec![0.0; g.faces().len()],
            multigrid: match pre {
                Preconditioner::Multigrid => Some(Box::new(Multigrid::new(g))),
                Preconditioner::Jacobi => None,
            },
        }
    }

    pub(crate) fn preconditioner(&self) -> Preconditioner {
        if self.multigrid.is_some() {
            Preconditioner::Multigrid
        } else {
            Preconditioner::Jacobi
        }
    }

    fn precondition(&mut self) {
        match &mut self.multigrid {
            Some(mg) => mg.apply(&self.r, &mut self.z),
            None => {
                for i in 0..self.r.len() {
                    self.z[i] = self.r[i] / self.diag[i];
                }
            }
        }
    }

    /// `x` holds the initial guess on entry and the solution on exit.
    /// `face_coeff` already contains any time-step factor.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn solve(
        &mut self,
        g: &Grid,
        face_coeff: &[f64],
        reaction: Reaction<'_>,
        rhs: &[f64],
        x: &mut [f64],
        tol: f64,
        max_iters: usize,
    ) -> Result<SolveStats> {
        let vol = g.volumes();
        let n = g.len();
        for i in 0..n {
            self.diag[i] = vol[i] * (1.0 + alpha_at(reaction, i));
        }
        for (k, (face, c)) in g.faces().iter().zip(face_coeff).enumerate() {
            let t = face.transmissibility() * c;
            self.weights[k] = t;
            self.diag[face.left] += t;
            self.diag[face.right] += t;
        }

        apply(g, face_coeff, reaction, x, &mut self.q);
        let mut b_norm_sq = 0.0;
        for i in 0..n {
            let b = vol[i] * rhs[i];
            b_norm_sq += b * b;
            self.r[i] = b - self.q[i];
        }
        let b_norm = b_norm_sq.sqrt();
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(SolveStats { iterations: 0, residual: 0.0 });
        }
        let target = tol * b_norm;
        let mut r_norm = norm(&self.r);
        if r_norm <= target {
            self.balance(g, reaction, x);
            return Ok(SolveStats {
                iterations: 0,
                residual: r_norm / b_norm,
            });
        }
        if let Some(mg) = &mut self.multigrid {
            // the mass term is diag minus the face weights already summed in
            let mut mass = self.diag.clone();
            for (face, &t) in g.faces().iter().zip(&self.weights) {
                mass[face.left] -= t;
                mass[face.right] -= t;
            }
            mg.update(&mass, &self.weights);
        }
        self.precondition();
        self.p.copy_from_slice(&self.z);
        let mut rz = dot(&self.r, &self.z);
        for iteration in 1..=max_iters {
            apply(g, face_coeff, reaction, &self.p, &mut self.q);
            let pq = dot(&self.p, &self.q);
            let step = rz / pq;
            let mut r_sq = 0.0;
            for i in 0..n {
                x[i] += step * self.p[i];
                self.r[i] -= step * self.q[i];
                r_sq += self.r[i] * self.r[i];
            }
            r_norm = r_sq.sqrt();
            if r_norm <= target {
                self.balance(g, reaction, x);
                return Ok(SolveStats {
                    iterations: iteration,
                    residual: r_norm / b_norm,
                });
            }
            self.precondition();
            let rz_next = dot(&self.r, &self.z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                self.p[i] = self.z[i] + beta * self.p[i];
            }
        }
        Err(Error::SolverStall {
            iterations: max_iters,
            residual: r_norm / b_norm,
        })
    }
}

impl HelmholtzSolver {
    /// Shifts `x` by the constant that makes the residual sum to zero.
    ///
    /// Fluxes cancel in the sum over cells, so this is what makes the solve
    /// conserve `sum vol * x` exactly rather than to the solver tolerance.
    fn balance(&mut self, g: &Grid, reaction: Reaction<'_>, x: &mut [f64]) {
        let vol = g.volumes();
        let mut residual_sum = 0.0;
        let mut weight = 0.0;
        for i in 0..x.len() {
            residual_sum += self.r[i];
            weight += vol[i] * (1.0 + alpha_at(reaction, i));
        }
        let shift = residual_sum / weight;
        for i in 0..x.len() {
            x[i] += shift;
            self.r[i] -= shift * vol[i] * (1.0 + alpha_at(reaction, i));
        }
    }
}

#[inline]
fn alpha_at(reaction: Reaction<'_>, i: usize) -> f64 {
    match reaction {
        Reaction::Scalar(a) => a,
        Reaction::Cells(a) => a[i],
    }
}

/// `out = A x` for the volume-scaled operator.
fn apply(g: &Grid, face_coeff: &[f64], reaction: Reaction<'_>, x: &[f64], out: &mut [f64]) {
    let vol = g.volumes();
    match reaction {
        Reaction::Scalar(a) => {
            for i in 0..x.len() {
                out[i] = vol[i] * (1.0 + a) * x[i];
            }
        }
        Reaction::Cells(a) => {
            for i in 0..x.len() {
                out[i] = vol[i] * (1.0 + a[i]) * x[i];
            }
        }
    }
    for (face, c) in g.faces().iter().zip(face_coeff) {
        let flux = face.transmissibility() * c * (x[face.right] - x[face.left]);
        out[face.left] -= flux;
        out[face.right] += flux;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    #[test]
    fn constant_rhs_without_reaction_is_reproduced() {
        let g = Grid::unit_square(10).unwrap();
        let rhs = Field::constant(&g, 2.5);
        let coeff = Field::from_fn(&g, |x, y| 1.0 + x + y * y);
        let w = solve_helmholtz(&g, Coefficient::Cells(&coeff), 0.0, &rhs, 1e-12).unwrap();
        assert!(w.values().iter().all(|&x| (x - 2.5).abs() < 1e-10));
    }

    #[test]
    fn pure_reaction_halves() {
        let g = Grid::new(Geometry::RadialDisk { radius: 2.0, nr: 12 }).unwrap();
        let rhs = Field::from_fn(&g, |r, _| 1.0 + r);
        let w = solve_helmholtz(&g, Coefficient::Scalar(0.0), 1.0, &rhs, 1e-14).unwrap();
        for (a, b) in w.values().iter().zip(rhs.values()) {
            assert!((a - b / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn stall_is_reported() {
        let g = Grid::unit_square(16).unwrap();
        let rhs = Field::from_fn(&g, |x, _| x);
        let faces = vec![100.0; g.faces().len()];
        let mut solver = HelmholtzSolver::new(&g, Preconditioner::Jacobi);
        let mut x = vec![0.0; g.len()];
        let err = solver
            .solve(&g, &faces, Reaction::Scalar(0.0), rhs.values(), &mut x, 1e-14, 2)
            .unwrap_err();
        assert!(matches!(err, Error::SolverStall { iterations: 2, .. }));
    }

    #[test]
    fn preconditioners_agree() {
        let g = Grid::new(Geometry::Rectangle { lx: 1.0, ly: 1.5, nx: 40, ny: 33 }).unwrap();
        let rhs = Field::from_fn(&g, |x, y| (-30.0 * ((x - 0.3).powi(2) + (y - 0.9).powi(2))).exp());
        let faces: Vec<f64> = (0..g.faces().len()).map(|k| 0.05 * (1.0 + (k % 9) as f64)).collect();
        let alpha: Vec<f64> = (0..g.len()).map(|i| 0.01 * (i % 4) as f64).collect();
        let mut solutions = Vec::new();
        for pre in [Preconditioner::Jacobi, Preconditioner::Multigrid] {
            let mut solver = HelmholtzSolver::new(&g, pre);
            let mut x = vec![0.0; g.len()];
            let stats = solver
                .solve(&g, &faces, Reaction::Cells(&alpha), rhs.values(), &mut x, 1e-12, 10_000)
                .unwrap();
            solutions.push((x, stats.iterations));
        }
        let (jacobi, mg) = (&solutions[0], &solutions[1]);
        assert!(mg.1 < jacobi.1 / 3, "{} vs {}", mg.1, jacobi.1);
        for (a, b) in jacobi.0.iter().zip(&mg.0) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn matches_dense_elimination() {
        let g = Grid::unit_square(16).unwrap();
        let n = g.len();
        let c = Field::new(&g, crate::testing::sample(n, 21, 0.1, 3.0)).unwrap();
        let rhs = Field::new(&g, crate::testing::sample(n, 22, -1.0, 1.0)).unwrap();
        let alpha = 0.3;
        let w = solve_helmholtz(&g, Coefficient::Cells(&c), alpha, &rhs, 1e-12).unwrap();

        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            a[i][i] = g.volumes()[i] * (1.0 + alpha);
            a[i][n] = g.volumes()[i] * rhs[i];
        }
        for f in g.faces() {
            let t = f.transmissibility() * 0.5 * (c[f.left] + c[f.right]);
            a[f.left][f.left] += t;
            a[f.right][f.right] += t;
            a[f.left][f.right] -= t;
            a[f.right][f.left] -= t;
        }
        for k in 0..n {
            let pivot = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, pivot);
            for i in k + 1..n {
                let factor = a[i][k] / a[k][k];
                for j in k..=n {
                    a[i][j] -= factor * a[k][j];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let tail: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (a[i][n] - tail) / a[i][i];
        }
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (p, q) in w.values().iter().zip(&x) {
            assert!((p - q).abs() <= 1e-8 * scale, "{p} vs {q}");
        }
    }

    #[test]
    fn negative_alpha_is_rejected() {
        let g = Grid::unit_square(4).unwrap();
        let rhs = Field::constant(&g, 1.0);
        assert!(solve_helmholtz(&g, Coefficient::Scalar(1.0), -0.5, &rhs, 1e-10).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn inverse_is_nonnegative(
                rhs in prop::collection::vec(0.0f64..5.0, 100),
                c in prop::collection::vec(0.01f64..50.0, 100),
                alpha in 0.0f64..2.0,
            ) {
                let g = Grid::unit_square(10).unwrap();
                let rhs = Field::new(&g, rhs).unwrap();
                let c = Field::new(&g, c).unwrap();
                let w = solve_helmholtz(&g, Coefficient::Cells(&c), alpha, &rhs, 1e-12).unwrap();
                let scale = rhs.max().max(1e-300);
                prop_assert!(w.min() >= -1e-10 * scale);
                // sum vol (1 + alpha) w = sum vol rhs
                let lhs: f64 = w.values().iter().zip(g.volumes()).map(|(x, v)| x * v * (1.0 + alpha)).sum();
                let total: f64 = rhs.values().iter().zip(g.volumes()).map(|(x, v)| x * v).sum();
                prop_assert!((lhs - total).abs() <= 1e-12 * (1.0 + total));
            }
        }
    }
}
