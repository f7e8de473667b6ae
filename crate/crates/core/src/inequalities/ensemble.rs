use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Field, Geometry, Grid};
use crate::Result;

/// Family of synthetic test fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Random cosine series with a random offset; fields may change sign.
    BandLimitedTrig,
    /// One to three Gaussians with random centres, widths and weights.
    GaussianBumps,
    /// Value `a` on a random axis-aligned box, `b` elsewhere.
    TwoValued,
    /// A single-cell spike, placed in a corner half of the time, on a small background.
    WorstCaseSpike,
}

impl Generator {
    pub const ALL: [Generator; 4] = [
        Generator::BandLimitedTrig,
        Generator::GaussianBumps,
        Generator::TwoValued,
        Generator::WorstCaseSpike,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Generator::BandLimitedTrig => "band-limited-trig",
            Generator::GaussianBumps => "gaussian-bumps",
            Generator::TwoValued => "two-valued",
            Generator::WorstCaseSpike => "worst-case-spike",
        }
    }
}

/// A reproducible set of fields on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEnsemble {
    pub geometry: Geometry,
    pub generator: Generator,
    pub count: usize,
    pub seed: u64,
}

impl FieldEnsemble {
    pub fn new(geometry: Geometry, generator: Generator, count: usize, seed: u64) -> Self {
        FieldEnsemble {
            geometry,
            generator,
            count,
            seed,
        }
    }

    /// Same generator on a disjoint seed, for revalidating fitted constants.
    pub fn fresh(&self) -> Self {
        FieldEnsemble {
            seed: self.seed ^ 0x9E37_79B9_7F4A_7C15,
            ..self.clone()
        }
    }

    /// Same generator and seed on a grid refined by 2 in every direction.
    pub fn refined(&self) -> Self {
        FieldEnsemble {
            geometry: self.geometry.refined(2),
            ..self.clone()
        }
    }

    pub fn descriptor(&self) -> String {
        let (nx, ny) = self.geometry.shape();
        format!(
            "{} x{} on {} {nx}x{ny}, seed {}",
            self.generator.tag(),
            self.count,
            self.geometry.tag(),
            self.seed
        )
    }

    pub fn generate(&self) -> Result<(Grid, Vec<Field>)> {
        let grid = Grid::new(self.geometry)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut fields = Vec::with_capacity(self.count);
        if self.generator == Generator::WorstCaseSpike {
            fields.extend(spike_extremes(&grid).into_iter().take(self.count));
        }
        while fields.len() < self.count {
            fields.push(sample(self.generator, &grid, &mut rng));
        }
        Ok((grid, fields))
    }
}

fn extent(grid: &Grid) -> (f64, f64) {
    match grid.geometry() {
        Geometry::Rectangle { lx, ly, .. } => (lx, ly),
        Geometry::RadialDisk { radius, .. } => (radius, 0.0),
    }
}

fn sample(generator: Generator, grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let (lx, ly) = extent(grid);
    let ly = if ly > 0.0 { ly } else { 1.0 };
    match generator {
        Generator::BandLimitedTrig => {
            let modes = rng.gen_range(1..=6usize);
            let offset = rng.gen_range(-1.0..1.0);
            let mut terms = Vec::new();
            for m in 0..=modes {
                for n in 0..=modes - m {
                    if m + n > 0 {
                        terms.push((m as f64, n as f64, rng.gen_range(-1.0..1.0)));
                    }
                }
            }
            Field::from_fn(grid, |x, y| {
                offset
                    + terms
                        .iter()
                        .map(|(m, n, a)| a * (m * PI * x / lx).cos() * (n * PI * y / ly).cos())
                        .sum::<f64>()
            })
        }
        Generator::GaussianBumps => {
            let count = rng.gen_range(1..=3usize);
            let h = grid.min_spacing();
            let bumps: Vec<(f64, f64, f64, f64)> = (0..count)
                .map(|_| {
                    (
                        rng.gen_range(0.0..lx),
                        rng.gen_range(0.0..ly),
                        rng.gen_range(2.0 * h..0.3 * lx.min(ly)),
                        rng.gen_range(0.1..10.0),
                    )
                })
                .collect();
            Field::from_fn(grid, |x, y| {
                bumps
                    .iter()
                    .map(|(cx, cy, s, w)| {
                        w * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp()
                    })
                    .sum()
            })
        }
        Generator::TwoValued => {
            let a = rng.gen_range(0.0..10.0);
            let b = rng.gen_range(0.0..10.0);
            let (x0, x1) = ordered(rng.gen_range(0.0..lx), rng.gen_range(0.0..lx));
            let (y0, y1) = ordered(rng.gen_range(0.0..ly), rng.gen_range(0.0..ly));
            Field::from_fn(grid, |x, y| {
                if (x0..=x1).contains(&x) && (y0..=y1).contains(&y) {
                    a
                } else {
                    b
                }
            })
        }
        Generator::WorstCaseSpike => {
            let n = grid.len();
            let cell = if rng.gen_bool(0.5) {
                // corner cells have the fewest faces and the smallest gradient
                let (nx, ny) = grid.geometry().shape();
                let corners = [0, nx - 1, nx * (ny - 1), nx * ny - 1];
                corners[rng.gen_range(0..corners.len())].min(n - 1)
            } else {
                rng.gen_range(0..n)
            };
            let height = 10f64.powf(rng.gen_range(SPIKE_DECADES.0..SPIKE_DECADES.1));
            let background = if rng.gen_bool(0.25) {
                0.0
            } else {
                rng.gen_range(0.0..SPIKE_BACKGROUND)
            };
            spike(grid, cell, height, background)
        }
    }
}

/// Spike heights are `10^x` with `x` uniform in this range.
const SPIKE_DECADES: (f64, f64) = (-1.0, 3.0);
const SPIKE_BACKGROUND: f64 = 0.1;

fn spike(grid: &Grid, cell: usize, height: f64, background: f64) -> Field {
    let mut values = vec![background; grid.len()];
    values[cell] += height;
    Field::new(grid, values).expect("length matches grid")
}

/// The corners of the spike parameter box: corner and central cell, lowest
/// and highest spike, with and without background. They lead every
/// worst-case ensemble so that no fitted constant misses them by chance.
fn spike_extremes(grid: &Grid) -> Vec<Field> {
    let (nx, ny) = grid.geometry().shape();
    let centre = ((ny / 2) * nx + nx / 2).min(grid.len() - 1);
    let mut out = Vec::with_capacity(8);
    for cell in [0, centre] {
        for decade in [SPIKE_DECADES.0, SPIKE_DECADES.1] {
            for background in [0.0, SPIKE_BACKGROUND] {
                out.push(spike(grid, cell, 10f64.powf(decade), background));
            }
        }
    }
    out
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
