//! Point sets, exact nearest-node distances, ball volumes and ball sampling.
//!
//! Volumes are computed in log-space throughout: the unit d-ball volume
//! V_d = pi^(d/2) / Gamma(1 + d/2) underflows a linear f64 near d = 350,
//! while its logarithm stays comfortably representable past d = 10^4.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{E, PI};

/// Finite nonempty set of nodes in R^d, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    d: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn from_rows(d: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("a point set needs at least one point"));
        }
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in &rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(d, data)
    }

    pub fn from_flat(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d must be at least 1"));
        }
        if data.is_empty() || data.len() % d != 0 {
            return Err(Error::invalid(format!(
                "flat point data of length {} is not a positive multiple of d = {}",
                data.len(),
                d
            )));
        }
        if let Some(bad) = data.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {bad}")));
        }
        Ok(Self { d, data })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of points; always at least 1.
    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Exhaustive scan for the Euclidean distance to the nearest node.
    /// Exact zero when `x` coincides bitwise with a node.
    pub(crate) fn min_dist(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let mut best = f64::INFINITY;
        for p in self.iter() {
            let mut sq = 0.0;
            for (a, b) in x.iter().zip(p) {
                let diff = a - b;
                sq += diff * diff;
            }
            if sq < best {
                best = sq;
            }
        }
        best.sqrt()
    }

    /// Componentwise bounding box of the nodes.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.point(0).to_vec();
        let mut hi = self.point(0).to_vec();
        for p in self.iter() {
            for j in 0..self.d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        (lo, hi)
    }
}

/// Closed Euclidean ball.
#[derive(Clone, Debug)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("ball center must have dimension >= 1"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("ball center has a non-finite coordinate"));
        }
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::invalid(format!(
                "radius must be finite and nonnegative, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: x.len(),
            });
        }
        Ok(dist(x, &self.center) <= self.radius)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Distance from `x` to the nearest point of `set`.
pub fn dist_to_set(x: &[f64], set: &PointSet) -> Result<f64> {
    if x.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("query point has a non-finite coordinate"));
    }
    Ok(set.min_dist(x))
}

fn check_d(d: u32) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    Ok(())
}

/// log V_d for the unit d-ball.
pub fn unit_ball_volume_ln(d: u32) -> Result<f64> {
    check_d(d)?;
    let half_d = f64::from(d) / 2.0;
    Ok(half_d * PI.ln() - libm::lgamma(1.0 + half_d))
}

/// log of the volume of a d-ball of the given radius. Negative infinity
/// for radius zero.
pub fn ball_volume_ln(d: u32, radius: f64) -> Result<f64> {
    check_d(d)?;
    if !radius.is_finite() || radius < 0.0 {
        return Err(Error::invalid(format!(
            "radius must be finite and nonnegative, got {radius}"
        )));
    }
    Ok(f64::from(d) * radius.ln() + unit_ball_volume_ln(d)?)
}

/// Linear-space ball volume; underflows to 0 and overflows to infinity as
/// f64 dictates. Prefer [`ball_volume_ln`] for large d.
pub fn ball_volume(d: u32, radius: f64) -> Result<f64> {
    Ok(ball_volume_ln(d, radius)?.exp())
}

/// log of (delta * sqrt(2*pi*e))^d, a strict upper bound for the volume of
/// the ball of radius delta*sqrt(d).
pub fn ball_volume_upper_bound_ln(d: u32, delta: f64) -> Result<f64> {
    check_d(d)?;
    check_delta(delta)?;
    Ok(f64::from(d) * (delta.ln() + 0.5 * (2.0 * PI * E).ln()))
}

/// Linear-space version of [`ball_volume_upper_bound_ln`].
pub fn ball_volume_upper_bound(d: u32, delta: f64) -> Result<f64> {
    Ok(ball_volume_upper_bound_ln(d, delta)?.exp())
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta <= 0.0 || delta > 1.0 {
        return Err(Error::invalid(format!(
            "delta must be in (0, 1], got {delta}"
        )));
    }
    Ok(())
}

/// (2 / sqrt(d)) * V_(d-1) / V_d. At most 1 for every d >= 2: the central
/// hyperplane slice of a ball of radius sqrt(d)/2 never exceeds the ball's
/// own volume.
pub fn slice_ratio(d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("d must be at least 2, got {d}")));
    }
    let ln_ratio = 2.0f64.ln() - 0.5 * f64::from(d).ln() + unit_ball_volume_ln(d - 1)?
        - unit_ball_volume_ln(d)?;
    Ok(ln_ratio.exp())
}

/// Fills `out` with a uniformly random direction on the unit sphere.
pub(crate) fn sample_unit_vector<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let norm = vec_norm(out);
        if norm.is_finite() && norm > 0.0 {
            for c in out.iter_mut() {
                *c /= norm;
            }
            return;
        }
    }
}

/// Uniform draw from the closed ball of the given radius, written into
/// `out`. The returned vector's computed norm never exceeds the radius.
pub(crate) fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64, out: &mut [f64]) {
    debug_assert!(radius.is_finite() && radius >= 0.0);
    if radius == 0.0 || out.is_empty() {
        out.fill(0.0);
        return;
    }
    sample_unit_vector(rng, out);
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / out.len() as f64);
    for c in out.iter_mut() {
        *c *= scale;
    }
    // Rounding in the normalise/scale chain can land a hair outside the
    // closed ball; pull back until the computed norm is inside.
    let mut norm = vec_norm(out);
    while norm > radius {
        let shrink = radius / norm * (1.0 - f64::EPSILON);
        for c in out.iter_mut() {
            *c *= shrink;
        }
        norm = vec_norm(out);
    }
}

/// Uniform draw from the closed d-ball of the given radius.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    if !radius.is_finite() || radius < 0.0 {
        return Err(Error::invalid(format!(
            "radius must be finite and nonnegative, got {radius}"
        )));
    }
    let mut out = vec![0.0; d];
    sample_in_ball(rng, radius, &mut out);
    Ok(out)
}
