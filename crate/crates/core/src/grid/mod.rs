//! Cell-centred finite-volume meshes with zero-flux (Neumann) boundaries.
//!
//! A [`Grid`] is reduced to two arrays: cell volumes and interior faces. A
//! boundary face never appears in the face list, which is exactly the
//! reflected-ghost-cell treatment of a homogeneous Neumann condition: the
//! ghost value equals its neighbour, so the boundary flux is zero. Every
//! divergence operator is assembled face by face, adding to one cell what it
//! removes from the other, so the discrete integral of a divergence vanishes
//! up to rounding.

mod ops;
mod snapshot;

pub use ops::{
    cell_gradient_sq, chemotactic_divergence, diffusive_divergence, grad_sq_integral, laplacian_neumann,
    ChemotaxisScheme, FaceAverage,
};
pub(crate) use ops::{chemotactic_divergence_into, face_diffusivity_into};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot};

use std::f64::consts::PI;
use std::hash::{Hash, Hasher};
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    /// `[0, lx] x [0, ly]` split into `nx * ny` cells, x fastest.
    Rectangle { lx: f64, ly: f64, nx: usize, ny: usize },
    /// Disk of the given radius under rotational symmetry: `nr` annuli.
    RadialDisk { radius: f64, nr: usize },
}

impl Geometry {
    pub fn unit_square(n: usize) -> Self {
        Geometry::Rectangle { lx: 1.0, ly: 1.0, nx: n, ny: n }
    }

    /// Token used by the snapshot header.
    pub fn tag(&self) -> &'static str {
        match self {
            Geometry::Rectangle { .. } => "rectangle",
            Geometry::RadialDisk { .. } => "radial-disk",
        }
    }

    /// `(nx, ny)` as written in snapshot headers; `(nr, 1)` for disks.
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Geometry::Rectangle { nx, ny, .. } => (nx, ny),
            Geometry::RadialDisk { nr, .. } => (nr, 1),
        }
    }

    /// The same domain with every cell count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        match *self {
            Geometry::Rectangle { lx, ly, nx, ny } => Geometry::Rectangle {
                lx,
                ly,
                nx: nx * factor,
                ny: ny * factor,
            },
            Geometry::RadialDisk { radius, nr } => Geometry::RadialDisk {
                radius,
                nr: nr * factor,
            },
        }
    }
}

/// Interior face between cells `left` and `right` (`right` on the positive side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub left: usize,
    pub right: usize,
    /// Face measure (length in 2D, or `2 pi r` per unit of `r` for disks).
    pub area: f64,
    /// Distance between the two cell centres.
    pub dist: f64,
}

impl Face {
    /// `area / dist`, the weight of the two-point flux.
    #[inline]
    pub fn transmissibility(&self) -> f64 {
        self.area / self.dist
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    geometry: Geometry,
    volumes: Vec<f64>,
    faces: Vec<Face>,
    centers: Vec<(f64, f64)>,
    id: u64,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
    }
}

impl Grid {
    pub fn new(geometry: Geometry) -> Result<Self> {
        match geometry {
            Geometry::Rectangle { lx, ly, nx, ny } => {
                if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
                    return Err(Error::config("grid", "side lengths must be positive"));
                }
                if nx < 4 || ny < 4 {
                    return Err(Error::config("grid", "need at least 4 cells per direction"));
                }
                Ok(Self::rectangle(geometry, lx, ly, nx, ny))
            }
            Geometry::RadialDisk { radius, nr } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::config("grid", "radius must be positive"));
                }
                if nr < 4 {
                    return Err(Error::config("grid", "need at least 4 radial cells"));
                }
                Ok(Self::disk(geometry, radius, nr))
            }
        }
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(Geometry::unit_square(n))
    }

    fn rectangle(geometry: Geometry, lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        let n = nx * ny;
        let volumes = vec![hx * hy; n];
        let mut centers = Vec::with_capacity(n);
        for j in 0..ny {
            for i in 0..nx {
                centers.push(((i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy));
            }
        }
        let mut faces = Vec::with_capacity((nx - 1) * ny + nx * (ny - 1));
        for j in 0..ny {
            for i in 0..nx - 1 {
                let c = j * nx + i;
                faces.push(Face { left: c, right: c + 1, area: hy, dist: hx });
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let c = j * nx + i;
                faces.push(Face { left: c, right: c + nx, area: hx, dist: hy });
            }
        }
        Self::assemble(geometry, volumes, faces, centers)
    }

    fn disk(geometry: Geometry, radius: f64, nr: usize) -> Self {
        let h = radius / nr as f64;
        let centers: Vec<(f64, f64)> = (0..nr).map(|i| ((i as f64 + 0.5) * h, 0.0)).collect();
        let volumes = centers.iter().map(|&(r, _)| 2.0 * PI * r * h).collect();
        // The face at r = 0 has zero measure and the one at r = R is a wall:
        // neither carries flux, so only the nr - 1 interior faces are listed.
        let faces = (0..nr - 1)
            .map(|i| Face {
                left: i,
                right: i + 1,
                area: 2.0 * PI * (i as f64 + 1.0) * h,
                dist: h,
            })
            .collect();
        Self::assemble(geometry, volumes, faces, centers)
    }

    fn assemble(
        geometry: Geometry,
        volumes: Vec<f64>,
        faces: Vec<Face>,
        centers: Vec<(f64, f64)>,
    ) -> Self {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        geometry.tag().hash(&mut hasher);
        match geometry {
            Geometry::Rectangle { lx, ly, nx, ny } => {
                (lx.to_bits(), ly.to_bits(), nx, ny).hash(&mut hasher)
            }
            Geometry::RadialDisk { radius, nr } => (radius.to_bits(), nr).hash(&mut hasher),
        }
        Grid {
            geometry,
            volumes,
            faces,
            centers,
            id: hasher.finish(),
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Identity token shared by every field defined on this grid.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Cell centres; `(r, 0)` on a disk.
    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    /// Total measure of the domain.
    pub fn measure(&self) -> f64 {
        match self.geometry {
            Geometry::Rectangle { lx, ly, .. } => lx * ly,
            Geometry::RadialDisk { radius, .. } => PI * radius * radius,
        }
    }

    /// Smallest centre-to-centre distance.
    pub fn min_spacing(&self) -> f64 {
        self.faces.iter().map(|f| f.dist).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check(&self, field: &Field) -> Result<()> {
        if field.grid_id != self.id || field.values.len() != self.len() {
            Err(Error::GridMismatch)
        } else {
            Ok(())
        }
    }

    /// Volume-weighted 2x coarsening onto `coarse`, which must be this grid
    /// with every cell count halved.
    pub fn restrict(&self, field: &Field, coarse: &Grid) -> Result<Field> {
        self.check(field)?;
        if coarse.geometry.refined(2) != self.geometry {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![0.0; coarse.len()];
        match self.geometry {
            Geometry::Rectangle { nx, ny, .. } => {
                let cnx = nx / 2;
                for j in 0..ny {
                    for i in 0..nx {
                        out[(j / 2) * cnx + i / 2] += 0.25 * field.values[j * nx + i];
                    }
                }
            }
            Geometry::RadialDisk { nr, .. } => {
                for i in 0..nr {
                    out[i / 2] += self.volumes[i] * field.values[i];
                }
                for (value, vol) in out.iter_mut().zip(&coarse.volumes) {
                    *value /= vol;
                }
            }
        }
        Field::new(coarse, out)
    }
}

/// Per-cell values tied to one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    grid_id: u64,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            values,
            grid_id: grid.id,
        })
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Field {
            values: vec![value; grid.len()],
            grid_id: grid.id,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(x, y)` at cell centres (`f(r, 0)` on a disk).
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Field {
            values: grid.centers.iter().map(|&(x, y)| f(x, y)).collect(),
            grid_id: grid.id,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid_id(&self) -> u64 {
        self.grid_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            values: self.values.iter().map(|&x| f(x)).collect(),
            grid_id: self.grid_id,
        }
    }
}

impl Index<usize> for Field {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Discrete integral: sum of cell values times cell volumes.
pub fn integrate(f: &Field, g: &Grid) -> Result<f64> {
    g.check(f)?;
    Ok(weighted_sum(f.values(), g.volumes()))
}

#[inline]
pub(crate) fn weighted_sum(values: &[f64], volumes: &[f64]) -> f64 {
    values.iter().zip(volumes).map(|(v, w)| v * w).sum()
}
