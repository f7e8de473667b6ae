//! Initial data generators. Every generator yields a nonnegative, smooth,
//! not identically zero density; Gaussian data is rescaled after sampling so
//! that the discrete mass is exactly the requested one.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{integrate, Field, Geometry, Grid};
use crate::stepper::{solve_helmholtz, Coefficient};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    pub u0: DensitySpec,
    pub v0: ChemicalSpec,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            u0: DensitySpec::PerturbedConstant {
                mean: 1.0,
                amplitude: 0.1,
                modes: 3,
            },
            v0: ChemicalSpec::SameAsU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    /// Ignored on disks, where every bump sits at the origin.
    #[serde(default)]
    pub center: [f64; 2],
    pub sigma: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Constant {
        value: f64,
    },
    /// Sum of Gaussians scaled to total `mass`.
    GaussianBumps {
        bumps: Vec<Bump>,
        mass: f64,
        #[serde(default)]
        background: f64,
    },
    /// `mean (1 + amplitude P)` with `P` a random cosine series normalised to `max |P| = 1`.
    PerturbedConstant {
        mean: f64,
        amplitude: f64,
        modes: usize,
    },
    /// `mean + amplitude cos(kx pi x / lx) cos(ky pi y / ly)` on a rectangle.
    CosineMode {
        mean: f64,
        amplitude: f64,
        kx: u32,
        ky: u32,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChemicalSpec {
    /// `v0 = u0`.
    #[default]
    SameAsU,
    Constant {
        value: f64,
    },
    /// `v0` solving `v0 - lap v0 = u0`, the chemical in equilibrium with the cells.
    Elliptic,
}

impl InitialSpec {
    pub fn gaussian(center: [f64; 2], sigma: f64, mass: f64) -> Self {
        InitialSpec {
            u0: DensitySpec::GaussianBumps {
                bumps: vec![Bump { center, sigma, weight: 1.0 }],
                mass,
                background: 0.0,
            },
            v0: ChemicalSpec::SameAsU,
        }
    }

    pub fn with_v0(mut self, v0: ChemicalSpec) -> Self {
        self.v0 = v0;
        self
    }

    pub(crate) fn validate(&self, geometry: &Geometry) -> Result<()> {
        let bad = |field: &str, message: &str| Err(Error::config(format!("initial.u0.{field}"), message));
        match &self.u0 {
            DensitySpec::Constant { value } => {
                if *value == 0.0 {
                    return bad("value", "initial density must not be identically zero");
                }
                if !(*value > 0.0 && value.is_finite()) {
                    return bad("value", "must be positive");
                }
            }
            DensitySpec::GaussianBumps { bumps, mass, background } => {
                if !(*mass > 0.0 && mass.is_finite()) {
                    return bad("mass", "target mass must be > 0");
                }
                if bumps.is_empty() && *background == 0.0 {
                    return bad("bumps", "initial density must not be identically zero");
                }
                if !(*background >= 0.0) {
                    return bad("background", "must be >= 0");
                }
                for b in bumps {
                    if !(b.sigma > 0.0) || !(b.weight >= 0.0) {
                        return bad("bumps", "need sigma > 0 and weight >= 0");
                    }
                    if matches!(geometry, Geometry::RadialDisk { .. }) && b.center != [0.0, 0.0] {
                        return bad("bumps", "bumps on a disk must be centred at the origin");
                    }
                }
                if *background == 0.0 && bumps.iter().all(|b| b.weight == 0.0) {
                    return bad("bumps", "initial density must not be identically zero");
                }
            }
            DensitySpec::PerturbedConstant { mean, amplitude, .. } => {
                if *mean == 0.0 {
                    return bad("mean", "initial density must not be identically zero");
                }
                if !(*mean > 0.0 && mean.is_finite()) {
                    return bad("mean", "must be positive");
                }
                if !(*amplitude >= 0.0 && *amplitude <= 1.0) {
                    return bad("amplitude", "must lie in [0, 1] to keep the density nonnegative");
                }
            }
            DensitySpec::CosineMode { mean, amplitude, .. } => {
                if !matches!(geometry, Geometry::Rectangle { .. }) {
                    return bad("kind", "cosine modes need a rectangle");
                }
                if !(*mean > 0.0 && mean.is_finite()) {
                    return bad("mean", "must be positive");
                }
                if !(amplitude.abs() <= *mean) {
                    return bad("amplitude", "|amplitude| must not exceed the mean");
                }
            }
        }
        if let ChemicalSpec::Constant { value } = self.v0 {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::config("initial.v0.value", "must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Samples `(u0, v0)` on `grid`; the seed only matters for perturbed data.
pub fn make_initial_data(spec: &InitialSpec, grid: &Grid, seed: u64) -> Result<(Field, Field)> {
    spec.validate(&grid.geometry())?;
    let u0 = match &spec.u0 {
        DensitySpec::Constant { value } => Field::constant(grid, *value),
        DensitySpec::GaussianBumps { bumps, mass, background } => {
            let disk = matches!(grid.geometry(), Geometry::RadialDisk { .. });
            let raw = Field::from_fn(grid, |x, y| {
                let bumps_sum: f64 = bumps
                    .iter()
                    .map(|b| {
                        let d2 = if disk {
                            x * x
                        } else {
                            (x - b.center[0]).powi(2) + (y - b.center[1]).powi(2)
                        };
                        b.weight * (-d2 / (2.0 * b.sigma * b.sigma)).exp()
                    })
                    .sum();
                background + bumps_sum
            });
            let total = integrate(&raw, grid)?;
            if !(total > 0.0) {
                return Err(Error::config(
                    "initial.u0",
                    "bumps vanish on this grid; the density would be identically zero",
                ));
            }
            raw.map(|x| x * (mass / total))
        }
        DensitySpec::CosineMode { mean, amplitude, kx, ky } => {
            let (lx, ly) = match grid.geometry() {
                Geometry::Rectangle { lx, ly, .. } => (lx, ly),
                Geometry::RadialDisk { .. } => unreachable!("validated above"),
            };
            let (wx, wy) = (*kx as f64 * PI / lx, *ky as f64 * PI / ly);
            Field::from_fn(grid, |x, y| mean + amplitude * (wx * x).cos() * (wy * y).cos())
        }
        DensitySpec::PerturbedConstant { mean, amplitude, modes } => {
            if *amplitude == 0.0 || *modes == 0 {
                Field::constant(grid, *mean)
            } else {
                let shape = cosine_series(grid, *modes, seed);
                let peak = shape.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let raw = if peak > 0.0 {
                    shape.map(|p| mean * (1.0 + amplitude * p / peak))
                } else {
                    Field::constant(grid, *mean)
                };
                let total = integrate(&raw, grid)?;
                let target = mean * grid.measure();
                raw.map(|x| x * (target / total))
            }
        }
    };
    let v0 = match spec.v0 {
        ChemicalSpec::SameAsU => u0.clone(),
        ChemicalSpec::Constant { value } => Field::constant(grid, value),
        ChemicalSpec::Elliptic => {
            let v = solve_helmholtz(grid, Coefficient::Scalar(1.0), 0.0, &u0, 1e-13)?;
            v.map(|x| x.max(0.0))
        }
    };
    Ok((u0, v0))
}

/// Random combination of Neumann cosine modes.
fn cosine_series(grid: &Grid, modes: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match grid.geometry() {
        Geometry::Rectangle { lx, ly, .. } => {
            let mut terms = Vec::new();
            for m in 0..=modes {
                for n in 0..=modes {
                    if m + n == 0 || m + n > modes {
                        continue;
                    }
                    terms.push((m as f64, n as f64, rng.gen_range(-1.0..1.0)));
                }
            }
            Field::from_fn(grid, |x, y| {
                terms
                    .iter()
                    .map(|(m, n, a)| a * (m * PI * x / lx).cos() * (n * PI * y / ly).cos())
                    .sum()
            })
        }
        Geometry::RadialDisk { radius, .. } => {
            let terms: Vec<(f64, f64)> = (1..=modes)
                .map(|m| (m as f64, rng.gen_range(-1.0..1.0)))
                .collect();
            Field::from_fn(grid, |r, _| {
                terms.iter().map(|(m, a)| a * (m * PI * r / radius).cos()).sum()
            })
        }
    }
}
