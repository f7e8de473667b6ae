use serde::{Deserialize, Serialize};

use crate::grid::{Field, Grid};
use crate::{Error, Result};

/// Norms `||u||_q` along `q = q0 2^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserLadder {
    /// `(q, ||u||_q)` pairs.
    pub rungs: Vec<(f64, f64)>,
    pub sup: f64,
    /// `||u||_q / |Omega|^(1/q)`, the power means of `u`.
    pub normalized: Vec<f64>,
    /// Whether the normalized norms are nondecreasing in `q` and bounded by `sup`.
    pub monotone: bool,
}

/// `||u||_q` computed as `sup * (int (u / sup)^q)^(1/q)` so large `q` cannot overflow.
pub(crate) fn lq_norm(values: &[f64], volumes: &[f64], q: f64) -> f64 {
    let sup = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if sup == 0.0 {
        return 0.0;
    }
    let sum: f64 = values
        .iter()
        .zip(volumes)
        .map(|(x, w)| w * (x.abs() / sup).powf(q))
        .sum();
    sup * sum.powf(1.0 / q)
}

pub fn moser_ladder(u: &Field, g: &Grid, q0: f64, levels: usize) -> Result<MoserLadder> {
    g.check(u)?;
    if !(q0 > 2.0 && q0.is_finite()) {
        return Err(Error::Precondition(format!("q0 = {q0} must exceed 2")));
    }
    if u.min() < 0.0 || !u.all_finite() {
        return Err(Error::Precondition("u must be finite and nonnegative".into()));
    }
    let measure = g.measure();
    let sup = u.max();
    let mut rungs = Vec::with_capacity(levels + 1);
    let mut normalized = Vec::with_capacity(levels + 1);
    let mut q = q0;
    for _ in 0..=levels {
        let norm = lq_norm(u.values(), g.volumes(), q);
        rungs.push((q, norm));
        normalized.push(norm / measure.powf(1.0 / q));
        q *= 2.0;
    }
    let slack = 1e-12;
    let monotone = normalized
        .windows(2)
        .all(|w| w[1] >= w[0] * (1.0 - slack))
        && normalized.iter().all(|&x| x <= sup * (1.0 + slack));
    Ok(MoserLadder {
        rungs,
        sup,
        normalized,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{sample, Fixed};

    #[test]
    fn norms_match_extended_precision() {
        let g = Grid::new(crate::grid::Geometry::Rectangle { lx: 1.0, ly: 2.0, nx: 20, ny: 30 }).unwrap();
        let u = Field::new(&g, sample(g.len(), 9, 0.0, 10.0)).unwrap();
        for q in [4u32, 8] {
            let mut sum = Fixed::int(0);
            for (&x, &w) in u.values().iter().zip(g.volumes()) {
                let x = Fixed::from_f64(x);
                let mut power = Fixed::int(1);
                for _ in 0..q {
                    power = power.mul(&x);
                }
                sum = sum.add(&power.mul(&Fixed::from_f64(w)));
            }
            let exact = sum.ln().div(&Fixed::int(q as i64)).exp().to_f64();
            let got = lq_norm(u.values(), g.volumes(), q as f64);
            assert!((got - exact).abs() <= 1e-10 * exact, "q = {q}: {got} vs {exact}");
        }
    }

    #[test]
    fn constant_field() {
        let g = Grid::new(crate::grid::Geometry::Rectangle { lx: 2.0, ly: 1.5, nx: 6, ny: 5 }).unwrap();
        let u = Field::constant(&g, 3.0);
        let ladder = moser_ladder(&u, &g, 4.0, 3).unwrap();
        assert!(ladder.monotone);
        assert_eq!(ladder.sup, 3.0);
        for ((q, norm), normalized) in ladder.rungs.iter().zip(&ladder.normalized) {
            let expected = 3.0 * 3.0f64.powf(1.0 / q);
            assert!((norm - expected).abs() < 1e-13 * expected);
            assert!((normalized - 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn huge_values_do_not_overflow() {
        let g = Grid::unit_square(4).unwrap();
        let u = Field::from_fn(&g, |x, _| 1e200 * (1.0 + x));
        let ladder = moser_ladder(&u, &g, 4.0, 6).unwrap();
        assert!(ladder.rungs.iter().all(|(_, n)| n.is_finite()));
        assert!(ladder.monotone);
    }

    #[test]
    fn preconditions() {
        let g = Grid::unit_square(4).unwrap();
        let u = Field::constant(&g, 1.0);
        assert!(moser_ladder(&u, &g, 2.0, 2).is_err());
        assert!(moser_ladder(&Field::constant(&g, -1.0), &g, 4.0, 2).is_err());
        let zero = moser_ladder(&Field::zeros(&g), &g, 4.0, 2).unwrap();
        assert!(zero.rungs.iter().all(|(_, n)| *n == 0.0));
    }
}
