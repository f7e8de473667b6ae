//! Aggregation multigrid V-cycle, used as a preconditioner for conjugate
//! gradients on `diag(mass) + sum_faces w_f (e_i - e_j)(e_i - e_j)^T`.
//!
//! Cells are merged in 2x2 blocks (pairs on a disk). The coarse operator is
//! the Galerkin product with piecewise-constant prolongation, which for this
//! operator means summing masses over each block and summing the weights of
//! the fine faces that cross between two blocks. Blocks of a tensor grid form
//! a tensor grid again, so every level keeps a five-point stencil.

use crate::grid::Grid;

/// Levels stop coarsening at this many cells and are solved directly.
const COARSEST_CELLS: usize = 64;
/// Red-black Gauss-Seidel sweeps before and after the coarse correction.
const SWEEPS: usize = 2;

/// One level, stored with a ring of ghost cells so the stencil needs no
/// boundary branches. Ghost entries of `x`, `b`, `r` and all weights touching
/// a ghost stay zero.
#[derive(Debug, Clone)]
struct Level {
    nx: usize,
    ny: usize,
    /// Weight to the east neighbour, by padded index.
    we: Vec<f64>,
    /// Weight to the north neighbour, by padded index.
    wn: Vec<f64>,
    mass: Vec<f64>,
    diag: Vec<f64>,
    inv_diag: Vec<f64>,
    x: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
}

impl Level {
    fn new(nx: usize, ny: usize) -> Self {
        let n = (nx + 2) * (ny + 2);
        Level {
            nx,
            ny,
            we: vec![0.0; n],
            wn: vec![0.0; n],
            mass: vec![0.0; n],
            diag: vec![0.0; n],
            inv_diag: vec![0.0; n],
            x: vec![0.0; n],
            b: vec![0.0; n],
            r: vec![0.0; n],
        }
    }

    fn len(&self) -> usize {
        self.nx * self.ny
    }

    fn stride(&self) -> usize {
        self.nx + 2
    }

    /// Padded index of cell `(i, j)`.
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        (j + 1) * self.stride() + i + 1
    }

    fn coarse_shape(&self) -> (usize, usize) {
        (self.nx.div_ceil(2), self.ny.div_ceil(2))
    }

    fn finish_diag(&mut self) {
        let s = self.stride();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.at(i, j);
                let d = self.mass[c] + self.we[c - 1] + self.we[c] + self.wn[c - s] + self.wn[c];
                self.diag[c] = d;
                self.inv_diag[c] = 1.0 / d;
            }
        }
    }

    /// Minus the off-diagonal part of the operator applied to `x`, at `c`.
    #[inline]
    fn neighbours(&self, c: usize) -> f64 {
        let s = self.stride();
        self.we[c - 1] * self.x[c - 1]
            + self.we[c] * self.x[c + 1]
            + self.wn[c - s] * self.x[c - s]
            + self.wn[c] * self.x[c + s]
    }

    /// Gauss-Seidel over the cells with `(i + j) % 2 == colour`; cells of one
    /// colour only couple to the other, so the order within a colour is free.
    fn sweep(&mut self, colour: usize) {
        for j in 0..self.ny {
            let row = self.at(0, j);
            for c in (row + (j + colour) % 2..row + self.nx).step_by(2) {
                self.x[c] = (self.b[c] + self.neighbours(c)) * self.inv_diag[c];
            }
        }
    }

    fn residual(&mut self) {
        for j in 0..self.ny {
            let row = self.at(0, j);
            for c in row..row + self.nx {
                self.r[c] = self.b[c] - self.diag[c] * self.x[c] + self.neighbours(c);
            }
        }
    }

    /// Loads `coarse` with the Galerkin product of this level.
    fn restrict_operator(&self, coarse: &mut Level) {
        coarse.mass.iter_mut().for_each(|m| *m = 0.0);
        coarse.we.iter_mut().for_each(|w| *w = 0.0);
        coarse.wn.iter_mut().for_each(|w| *w = 0.0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (c, p) = (self.at(i, j), coarse.at(i / 2, j / 2));
                coarse.mass[p] += self.mass[c];
                // faces leaving an odd column or row separate two blocks
                if i % 2 == 1 && i + 1 < self.nx {
                    coarse.we[p] += self.we[c];
                }
                if j % 2 == 1 && j + 1 < self.ny {
                    coarse.wn[p] += self.wn[c];
                }
            }
        }
    }

    fn restrict_residual(&self, coarse: &mut Level) {
        coarse.b.iter_mut().for_each(|b| *b = 0.0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = coarse.at(i / 2, j / 2);
                coarse.b[p] += self.r[self.at(i, j)];
            }
        }
    }

    fn prolong_correction(&mut self, coarse: &Level) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.at(i, j);
                self.x[c] += coarse.x[coarse.at(i / 2, j / 2)];
            }
        }
    }

    fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| self.at(i, j)))
    }
}

/// Dense Cholesky factor of the coarsest operator.
#[derive(Debug, Clone)]
struct Dense {
    n: usize,
    l: Vec<f64>,
}

impl Dense {
    fn factor(level: &Level) -> Self {
        let n = level.len();
        let cells: Vec<usize> = level.cells().collect();
        let compact = |c: usize| {
            let (i, j) = (c % level.stride() - 1, c / level.stride() - 1);
            j * level.nx + i
        };
        let mut a = vec![0.0; n * n];
        for &c in &cells {
            let p = compact(c);
            a[p * n + p] = level.diag[c];
            for (w, q) in [(level.we[c], c + 1), (level.wn[c], c + level.stride())] {
                if w != 0.0 {
                    let q = compact(q);
                    a[p * n + q] -= w;
                    a[q * n + p] -= w;
                }
            }
        }
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
        }
        Dense { n, l: a }
    }

    /// Solves with the right side taken from `level.b`, writing `level.x`.
    fn solve(&self, level: &mut Level, work: &mut [f64]) {
        let n = self.n;
        for (w, c) in work.iter_mut().zip(level.cells()) {
            *w = level.b[c];
        }
        for i in 0..n {
            let mut s = work[i];
            for k in 0..i {
                s -= self.l[i * n + k] * work[k];
            }
            work[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = work[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * work[k];
            }
            work[i] = s / self.l[i * n + i];
        }
        let cells: Vec<usize> = level.cells().collect();
        for (c, w) in cells.into_iter().zip(work.iter()) {
            level.x[c] = *w;
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Multigrid {
    levels: Vec<Level>,
    coarse: Option<Dense>,
    coarse_work: Vec<f64>,
    /// Padded index of each grid cell on the finest level.
    cell_slot: Vec<usize>,
    /// Slot of each grid face on the finest level: `Ok` in `we`, `Err` in `wn`.
    face_slot: Vec<std::result::Result<usize, usize>>,
}

impl Multigrid {
    pub(crate) fn new(g: &Grid) -> Self {
        let (nx, ny) = g.geometry().shape();
        let fine = Level::new(nx, ny);
        let cell_slot: Vec<usize> = (0..g.len()).map(|k| fine.at(k % nx, k / nx)).collect();
        let face_slot = g
            .faces()
            .iter()
            .map(|f| {
                let a = f.left.min(f.right);
                if f.left.max(f.right) == a + 1 {
                    Ok(cell_slot[a])
                } else {
                    Err(cell_slot[a])
                }
            })
            .collect();
        let mut levels = vec![fine];
        loop {
            let last = levels.last().expect("at least one level");
            if last.len() <= COARSEST_CELLS || last.nx < 2 {
                break;
            }
            let (cx, cy) = last.coarse_shape();
            levels.push(Level::new(cx, cy));
        }
        let coarsest = levels.last().expect("levels").len();
        Multigrid {
            levels,
            coarse: None,
            coarse_work: vec![0.0; coarsest],
            cell_slot,
            face_slot,
        }
    }

    /// Loads a new operator: `mass` per cell and `weights` per grid face.
    pub(crate) fn update(&mut self, mass: &[f64], weights: &[f64]) {
        let fine = &mut self.levels[0];
        for (&c, &m) in self.cell_slot.iter().zip(mass) {
            fine.mass[c] = m;
        }
        for (slot, &w) in self.face_slot.iter().zip(weights) {
            match *slot {
                Ok(c) => fine.we[c] = w,
                Err(c) => fine.wn[c] = w,
            }
        }
        for l in 0..self.levels.len() {
            let (head, tail) = self.levels.split_at_mut(l + 1);
            let level = &mut head[l];
            level.finish_diag();
            if let Some(coarse) = tail.first_mut() {
                level.restrict_operator(coarse);
            }
        }
        self.coarse = Some(Dense::factor(self.levels.last().expect("levels")));
    }

    /// `z = B r` for the symmetric V-cycle `B`.
    pub(crate) fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        let coarse = self.coarse.as_ref().expect("update before apply");
        let fine = &mut self.levels[0];
        for (&c, &v) in self.cell_slot.iter().zip(r) {
            fine.b[c] = v;
        }
        cycle(&mut self.levels, coarse, &mut self.coarse_work);
        let fine = &self.levels[0];
        for (&c, v) in self.cell_slot.iter().zip(z.iter_mut()) {
            *v = fine.x[c];
        }
    }
}

fn cycle(levels: &mut [Level], coarse: &Dense, work: &mut [f64]) {
    let (level, rest) = levels.split_first_mut().expect("nonempty");
    let Some(next) = rest.first_mut() else {
        coarse.solve(level, work);
        return;
    };
    level.x.iter_mut().for_each(|x| *x = 0.0);
    for _ in 0..SWEEPS {
        level.sweep(0);
        level.sweep(1);
    }
    level.residual();
    level.restrict_residual(next);
    cycle(rest, coarse, work);
    level.prolong_correction(&rest[0]);
    for _ in 0..SWEEPS {
        level.sweep(1);
        level.sweep(0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    fn dense_operator(g: &Grid, mass: &[f64], w: &[f64]) -> Vec<Vec<f64>> {
        let n = g.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = mass[i];
        }
        for (f, &c) in g.faces().iter().zip(w) {
            a[f.left][f.left] += c;
            a[f.right][f.right] += c;
            a[f.left][f.right] -= c;
            a[f.right][f.left] -= c;
        }
        a
    }

    #[test]
    fn small_grid_is_solved_exactly() {
        // at most COARSEST_CELLS cells: the cycle is the Cholesky solve
        let g = Grid::new(Geometry::Rectangle { lx: 1.0, ly: 2.0, nx: 5, ny: 7 }).unwrap();
        let mass: Vec<f64> = (0..g.len()).map(|i| 0.1 + (i % 3) as f64).collect();
        let w: Vec<f64> = (0..g.faces().len()).map(|k| 1.0 + (k % 5) as f64).collect();
        let mut mg = Multigrid::new(&g);
        mg.update(&mass, &w);
        let x_true: Vec<f64> = (0..g.len()).map(|i| (i as f64).sin()).collect();
        let a = dense_operator(&g, &mass, &w);
        let b: Vec<f64> = a.iter().map(|row| row.iter().zip(&x_true).map(|(p, q)| p * q).sum()).collect();
        let mut x = vec![0.0; g.len()];
        mg.apply(&b, &mut x);
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-10, "{p} vs {q}");
        }
    }

    #[test]
    fn coarse_operator_is_galerkin_product() {
        let g = Grid::new(Geometry::Rectangle { lx: 1.0, ly: 1.0, nx: 9, ny: 10 }).unwrap();
        let n = g.len();
        let mass: Vec<f64> = (0..n).map(|i| 0.5 + (i % 4) as f64).collect();
        let w: Vec<f64> = (0..g.faces().len()).map(|k| 1.0 + (k % 7) as f64).collect();
        let mut mg = Multigrid::new(&g);
        mg.update(&mass, &w);
        let a = dense_operator(&g, &mass, &w);
        let (fine, coarse) = (&mg.levels[0], &mg.levels[1]);
        let m = coarse.len();
        let parent = |c: usize| (c / fine.nx / 2) * coarse.nx + (c % fine.nx) / 2;
        let mut pap = vec![vec![0.0; m]; m];
        for p in 0..n {
            for q in 0..n {
                pap[parent(p)][parent(q)] += a[p][q];
            }
        }
        let l = Dense::factor(coarse).l;
        for p in 0..m {
            for q in 0..=p {
                let llt: f64 = (0..=q).map(|k| l[p * m + k] * l[q * m + k]).sum();
                assert!((llt - pap[p][q]).abs() < 1e-10, "({p}, {q}): {llt} vs {}", pap[p][q]);
            }
        }
    }

    #[test]
    fn cycle_is_symmetric_and_positive() {
        let g = Grid::new(Geometry::Rectangle { lx: 1.0, ly: 1.0, nx: 24, ny: 21 }).unwrap();
        let n = g.len();
        let mass: Vec<f64> = (0..n).map(|i| 1e-3 * (1.0 + (i % 7) as f64)).collect();
        let w: Vec<f64> = (0..g.faces().len()).map(|k| (-((k % 11) as f64)).exp()).collect();
        let mut mg = Multigrid::new(&g);
        mg.update(&mass, &w);
        let u: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        let v: Vec<f64> = (0..n).map(|i| ((i * 5 % 17) as f64 - 8.0) / 8.0).collect();
        let (mut bu, mut bv) = (vec![0.0; n], vec![0.0; n]);
        mg.apply(&u, &mut bu);
        mg.apply(&v, &mut bv);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (uv, vu) = (dot(&u, &bv), dot(&v, &bu));
        assert!((uv - vu).abs() < 1e-9 * uv.abs().max(1.0), "{uv} vs {vu}");
        assert!(dot(&u, &bu) > 0.0 && dot(&v, &bv) > 0.0);
    }

    #[test]
    fn disks_coarsen_in_pairs() {
        let g = Grid::new(Geometry::RadialDisk { radius: 1.0, nr: 300 }).unwrap();
        let mg = Multigrid::new(&g);
        let sizes: Vec<usize> = mg.levels.iter().map(Level::len).collect();
        assert_eq!(sizes, vec![300, 150, 75, 38]);
    }
}
