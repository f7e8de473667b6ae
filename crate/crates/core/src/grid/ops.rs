use serde::{Deserialize, Serialize};

use super::{Field, Grid};
use crate::model::CoefficientSpec;
use crate::{Error, Result};

/// How the density is carried across a face by the chemotactic velocity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChemotaxisScheme {
    /// Arithmetic mean of the two neighbours; second order, not positivity preserving.
    Central,
    /// Donor cell chosen by the sign of the face velocity.
    #[default]
    Upwind,
}

/// Face value of the diffusion coefficient.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceAverage {
    /// `D((v_L + v_R) / 2)`
    #[default]
    Arithmetic,
    /// Harmonic mean of `D(v_L)` and `D(v_R)`.
    Harmonic,
}

/// Five-point (or radial three-point) Laplacian with zero boundary flux.
pub fn laplacian_neumann(f: &Field, g: &Grid) -> Result<Field> {
    g.check(f)?;
    let mut out = vec![0.0; g.len()];
    laplacian_into(f.values(), g, &mut out);
    Field::new(g, out)
}

pub(crate) fn laplacian_into(f: &[f64], g: &Grid, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for face in g.faces() {
        let flux = face.transmissibility() * (f[face.right] - f[face.left]);
        out[face.left] += flux;
        out[face.right] -= flux;
    }
    for (x, vol) in out.iter_mut().zip(g.volumes()) {
        *x /= vol;
    }
}

/// `div(D(v) grad u)` in face-flux form.
pub fn diffusive_divergence(u: &Field, v: &Field, d: &CoefficientSpec, g: &Grid) -> Result<Field> {
    g.check(u)?;
    g.check(v)?;
    let mut coeff = vec![0.0; g.faces().len()];
    face_diffusivity_into(v.values(), d, FaceAverage::Arithmetic, g, &mut coeff)?;
    let u = u.values();
    let mut out = vec![0.0; g.len()];
    for (face, c) in g.faces().iter().zip(&coeff) {
        let flux = c * face.transmissibility() * (u[face.right] - u[face.left]);
        out[face.left] += flux;
        out[face.right] -= flux;
    }
    for (x, vol) in out.iter_mut().zip(g.volumes()) {
        *x /= vol;
    }
    Field::new(g, out)
}

/// Writes `D` at every interior face; fails on a nonpositive or non-finite value.
pub(crate) fn face_diffusivity_into(
    v: &[f64],
    d: &CoefficientSpec,
    average: FaceAverage,
    g: &Grid,
    out: &mut [f64],
) -> Result<()> {
    if let CoefficientSpec::Constant { value } = d {
        if !(*value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidCoefficient {
                what: "diffusion must be strictly positive".into(),
                v: 0.0,
                value: *value,
            });
        }
        out.iter_mut().for_each(|x| *x = *value);
        return Ok(());
    }
    for (face, slot) in g.faces().iter().zip(out.iter_mut()) {
        let (vl, vr) = (v[face.left], v[face.right]);
        let (value, at) = match average {
            FaceAverage::Arithmetic => {
                let vf = 0.5 * (vl + vr);
                (d.value(vf), vf)
            }
            FaceAverage::Harmonic => {
                let (dl, dr) = (d.value(vl), d.value(vr));
                (2.0 * dl * dr / (dl + dr), if dl < dr { vl } else { vr })
            }
        };
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidCoefficient {
                what: "diffusion must be strictly positive at every face".into(),
                v: at,
                value,
            });
        }
        *slot = value;
    }
    Ok(())
}

/// `div(u S(v) grad v)` with face velocity `S(v_face) (v_R - v_L) / h`.
pub fn chemotactic_divergence(
    u: &Field,
    v: &Field,
    s: &CoefficientSpec,
    g: &Grid,
    scheme: ChemotaxisScheme,
) -> Result<Field> {
    g.check(u)?;
    g.check(v)?;
    let mut out = vec![0.0; g.len()];
    chemotactic_divergence_into(u.values(), v.values(), s, g, scheme, &mut out);
    Field::new(g, out)
}

pub(crate) fn chemotactic_divergence_into(
    u: &[f64],
    v: &[f64],
    s: &CoefficientSpec,
    g: &Grid,
    scheme: ChemotaxisScheme,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for face in g.faces() {
        let (l, r) = (face.left, face.right);
        let dv = v[r] - v[l];
        if dv == 0.0 {
            continue;
        }
        let w = s.value(0.5 * (v[l] + v[r])) * dv / face.dist;
        let carried = match scheme {
            ChemotaxisScheme::Central => 0.5 * (u[l] + u[r]),
            ChemotaxisScheme::Upwind => {
                if w > 0.0 {
                    u[l]
                } else {
                    u[r]
                }
            }
        };
        let flux = face.area * carried * w;
        out[l] += flux;
        out[r] -= flux;
    }
    for (x, vol) in out.iter_mut().zip(g.volumes()) {
        *x /= vol;
    }
}

/// `sum over interior faces of (dv / h)^2 * area * h`, the discrete `int |grad v|^2`.
///
/// Boundary faces carry no gradient under the zero-flux closure and are left
/// out, so this equals `-int v lap(v)` exactly (summation by parts).
pub fn grad_sq_integral(v: &Field, g: &Grid) -> Result<f64> {
    g.check(v)?;
    Ok(grad_sq_sum(v.values(), g))
}

pub(crate) fn grad_sq_sum(v: &[f64], g: &Grid) -> f64 {
    g.faces()
        .iter()
        .map(|face| {
            let dv = v[face.right] - v[face.left];
            face.transmissibility() * dv * dv
        })
        .sum()
}

/// Squared gradient magnitude per cell. Each axis contributes the mean of
/// the squared differences over its two faces; a wall face counts as zero.
/// Weighted by cell volume this sums to [`grad_sq_integral`] on uniform meshes.
pub fn cell_gradient_sq(v: &Field, g: &Grid) -> Result<Vec<f64>> {
    g.check(v)?;
    let v = v.values();
    let mut out = vec![0.0; g.len()];
    for face in g.faces() {
        let slope = (v[face.right] - v[face.left]) / face.dist;
        let half = 0.5 * slope * slope;
        out[face.left] += half;
        out[face.right] += half;
    }
    Ok(out)
}
