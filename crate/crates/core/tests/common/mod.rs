//! Helpers shared by integration tests.

use cubature_adversary::fooling::f0_eval;
use cubature_adversary::geometry::PointSet;
use std::f64::consts::PI;

/// Deterministic reference for the once-smoothed base function in the
/// plane: the average of f0 over the disk of radius `rho` around `x`,
/// computed by midpoint quadrature in polar coordinates.
///
/// The integrand is 1/(delta sqrt 2)-Lipschitz and piecewise smooth, so
/// the composite midpoint error decays quadratically in the grid step;
/// at `grid` = 600 it sits far below 1e-4.
pub fn polar_disk_average(nodes: &PointSet, delta: f64, rho: f64, x: &[f64], grid: usize) -> f64 {
    assert_eq!(nodes.dim(), 2, "polar oracle is two-dimensional");
    let n = grid as f64;
    let ds = rho / n;
    let dphi = 2.0 * PI / n;
    let mut acc = 0.0;
    let mut q = [0.0f64; 2];
    for i in 0..grid {
        let s = (i as f64 + 0.5) * ds;
        for j in 0..grid {
            let phi = (j as f64 + 0.5) * dphi;
            q[0] = x[0] + s * phi.cos();
            q[1] = x[1] + s * phi.sin();
            acc += s * f0_eval(&q, nodes, delta).expect("oracle query is valid");
        }
    }
    acc * ds * dphi / (PI * rho * rho)
}
