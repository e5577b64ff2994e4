//! Monte Carlo estimation over the unit cube and the end-to-end attack
//! pipeline that certifies a lower bound against a concrete node set.

use crate::bounds::fooling_certificate;
use crate::error::{Error, Result};
use crate::fooling::{FoolingFunction, SmoothingSchedule};
use crate::geometry::PointSet;
use crate::seeding::{indexed_stream, stream_rng, PURPOSE_INTEGRAL, PURPOSE_MEASURE};
use crate::stats::{batched_fold, RunningStats};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// A Monte Carlo estimate with its provenance.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < 2 {
        return Err(Error::invalid("need at least 2 samples for a standard error"));
    }
    Ok(())
}

/// Plain Monte Carlo integral of `f` over the unit cube. Batches are
/// seeded independently of thread scheduling, so the estimate depends only
/// on (d, samples, seed).
pub fn integral_unit_cube<F>(f: F, d: usize, samples: u64, seed: u64) -> Result<MCEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    check_samples(samples)?;
    let stats = batched_fold(
        samples,
        |batch, range| {
            let mut rng = stream_rng(seed, indexed_stream(PURPOSE_INTEGRAL, batch));
            let mut x = vec![0.0; d];
            let mut s = RunningStats::new();
            for _ in range {
                for c in x.iter_mut() {
                    *c = rng.random::<f64>();
                }
                s.push(f(&x));
            }
            s
        },
        RunningStats::new(),
        |a, b| a.merge(b),
    );
    Ok(MCEstimate {
        mean: stats.mean(),
        std_error: stats.std_error(),
        samples,
        seed,
    })
}

/// Estimates the Lebesgue measure of the rho-neighborhood of the node set
/// inside the unit cube, by counting uniform hits within distance rho.
pub fn neighborhood_measure(
    nodes: &PointSet,
    rho: f64,
    samples: u64,
    seed: u64,
) -> Result<MCEstimate> {
    if !rho.is_finite() || rho < 0.0 {
        return Err(Error::invalid(format!(
            "neighborhood radius must be finite and nonnegative, got {rho}"
        )));
    }
    check_samples(samples)?;
    let d = nodes.dim();
    let stats = batched_fold(
        samples,
        |batch, range| {
            let mut rng = stream_rng(seed, indexed_stream(PURPOSE_MEASURE, batch));
            let mut x = vec![0.0; d];
            let mut s = RunningStats::new();
            for _ in range {
                for c in x.iter_mut() {
                    *c = rng.random::<f64>();
                }
                s.push(if nodes.min_dist(&x) <= rho { 1.0 } else { 0.0 });
            }
            s
        },
        RunningStats::new(),
        |a, b| a.merge(b),
    );
    Ok(MCEstimate {
        mean: stats.mean(),
        std_error: stats.std_error(),
        samples,
        seed,
    })
}

/// Sampling budgets for [`attack`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AttackConfig {
    /// Uniform draws for the neighborhood-measure estimate.
    pub measure_samples: u64,
    /// Outer uniform draws for the integral of the smoothed function.
    pub integral_samples: u64,
    /// Ball draws per smoothed evaluation (inner loop).
    pub samples_per_eval: u64,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            measure_samples: 100_000,
            integral_samples: 100_000,
            samples_per_eval: 1_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NodesSummary {
    pub n: u64,
    pub d: u32,
}

/// Everything the attack pipeline certifies against one node set.
#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub nodes: NodesSummary,
    pub delta: f64,
    pub r: u32,
    /// Closed-form certificate: any rule on these n nodes errs by at least
    /// this much against the smoothed fooling class.
    pub certificate_analytic: f64,
    pub certificate_analytic_kind: &'static str,
    /// Measured volume of the far-field complement's complement: the
    /// 3 delta sqrt(d) neighborhood of the nodes.
    pub measure_estimate: MCEstimate,
    /// 1 - measure: the statistical counterpart of the certificate.
    pub certificate_mc: f64,
    /// Three standard errors on `certificate_mc`.
    pub certificate_mc_radius: f64,
    pub certificate_mc_kind: &'static str,
    /// Monte Carlo integral of the concrete smoothed fooling function.
    pub integral_estimate: MCEstimate,
    /// Largest |f_r(node)| over all nodes with fast paths disabled; the
    /// construction makes this exactly 0.
    pub node_audit: f64,
}

/// Runs the full pipeline: closed-form certificate, measured neighborhood
/// volume, integral of the concrete fooling function, and a node audit
/// confirming the function vanishes where the rule samples.
pub fn attack(nodes: &PointSet, r: u32, delta: f64, cfg: &AttackConfig) -> Result<AttackReport> {
    if nodes.dim() < 2 {
        return Err(Error::Unsupported(
            "the certificate pipeline needs dimension d >= 2".into(),
        ));
    }
    if r == 0 {
        return Err(Error::invalid("smoothing order r must be at least 1"));
    }
    let d = nodes.dim() as u32;
    let n = nodes.len() as u64;
    let certificate_analytic = fooling_certificate(n, d, delta)?;

    let f = FoolingFunction::new(
        nodes.clone(),
        SmoothingSchedule::uniform(delta, r)?,
        cfg.samples_per_eval,
        cfg.seed,
    )?;
    let far = f.far_field_radius();

    let measure_estimate = neighborhood_measure(nodes, far, cfg.measure_samples, cfg.seed)?;
    let certificate_mc = 1.0 - measure_estimate.mean;
    let certificate_mc_radius = 3.0 * measure_estimate.std_error;

    let integral_estimate = integral_fooling(&f, cfg.integral_samples, cfg.seed)?;

    let node_audit = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            f.eval_no_fast_path(nodes.point(i))
                .map(|e| e.value.abs())
                .unwrap_or(f64::NAN)
        })
        .reduce(|| 0.0, f64::max);

    Ok(AttackReport {
        nodes: NodesSummary { n, d },
        delta,
        r,
        certificate_analytic,
        certificate_analytic_kind: "proved",
        measure_estimate,
        certificate_mc,
        certificate_mc_radius,
        certificate_mc_kind: "statistical",
        integral_estimate,
        node_audit,
    })
}

/// Integral of the smoothed fooling function with a conservative standard
/// error: the outer sampling variance plus the summed inner Monte Carlo
/// variances of the non-exact evaluations.
fn integral_fooling(f: &FoolingFunction, samples: u64, seed: u64) -> Result<MCEstimate> {
    check_samples(samples)?;
    let d = f.nodes().dim();
    let (stats, inner_var_sum) = batched_fold(
        samples,
        |batch, range| {
            let mut rng = stream_rng(seed, indexed_stream(PURPOSE_INTEGRAL, batch));
            let mut x = vec![0.0; d];
            let mut s = RunningStats::new();
            let mut inner = 0.0f64;
            for _ in range {
                for c in x.iter_mut() {
                    *c = rng.random::<f64>();
                }
                let dist = f.nodes().min_dist(&x);
                let e = f.eval_given_dist(&x, dist, true);
                s.push(e.value);
                inner += e.std_error * e.std_error;
            }
            (s, inner)
        },
        (RunningStats::new(), 0.0),
        |a, b| (a.0.merge(b.0), a.1 + b.1),
    );
    let n = stats.count() as f64;
    let se = (stats.sample_variance() / n + inner_var_sum / (n * n)).sqrt();
    Ok(MCEstimate {
        mean: stats.mean(),
        std_error: se,
        samples,
        seed,
    })
}
