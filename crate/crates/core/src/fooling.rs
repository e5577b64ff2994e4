//! Fooling integrands: the base ramp and its ball-convolution smoothings.
//!
//! The base function vanishes on a union of balls around the nodes and
//! climbs to 1 at unit rate in the rescaled metric; convolving it r times
//! with normalised ball indicators gains one degree of smoothness per pass
//! while preserving the vanishing set, the Lipschitz budget and the
//! integral over the cube. Smoothed values are Monte Carlo expectations of
//! the base at a randomly shifted query, using a single expectation over
//! the sum of the ball draws.

use crate::error::{Error, Result};
use crate::geometry::{check_delta, sample_in_ball, PointSet};
use crate::seeding::{self, point_stream, stream_rng};
use crate::stats::RunningStats;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Radii schedule for iterated ball convolution: pass j uses a ball of
/// radius alpha_j * delta * sqrt(d). The alphas sum to at most 1 so that
/// the total shift can never escape the vanishing neighborhood.
#[derive(Clone, Debug)]
pub struct SmoothingSchedule {
    delta: f64,
    alphas: Vec<f64>,
}

/// Slack for validating sum(alpha) <= 1: the default uniform schedule
/// forms 1/r in floating point, whose r-fold sum can exceed 1 by an ulp.
const ALPHA_SUM_SLACK: f64 = 1e-12;

impl SmoothingSchedule {
    pub fn new(delta: f64, alphas: Vec<f64>) -> Result<Self> {
        check_delta(delta)?;
        if alphas.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::invalid("every alpha must be finite and positive"));
        }
        let sum: f64 = alphas.iter().sum();
        if sum > 1.0 + ALPHA_SUM_SLACK {
            return Err(Error::invalid(format!(
                "alphas must sum to at most 1, got {sum}"
            )));
        }
        Ok(Self { delta, alphas })
    }

    /// Uniform schedule alpha_j = 1/r. With r = 0 no smoothing happens and
    /// evaluation falls back to the exact base function.
    pub fn uniform(delta: f64, r: u32) -> Result<Self> {
        let alphas = vec![1.0 / f64::from(r.max(1)); r as usize];
        Self::new_allow_empty(delta, alphas)
    }

    fn new_allow_empty(delta: f64, alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            check_delta(delta)?;
            return Ok(Self { delta, alphas });
        }
        Self::new(delta, alphas)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of convolution passes r.
    pub fn order(&self) -> u32 {
        self.alphas.len() as u32
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

/// Outcome of one smoothed evaluation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EvalResult {
    pub value: f64,
    pub std_error: f64,
    /// True when a fast path or closed form produced the value exactly.
    pub exact: bool,
}

impl EvalResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            exact: true,
        }
    }
}

pub const DEFAULT_SAMPLES_PER_EVAL: u64 = 10_000;

/// A smoothed fooling function bound to a concrete node set.
#[derive(Clone, Debug)]
pub struct FoolingFunction {
    nodes: PointSet,
    schedule: SmoothingSchedule,
    samples_per_eval: u64,
    master_seed: u64,
    delta_sqrt_d: f64,
    radii: Vec<f64>,
}

impl FoolingFunction {
    pub fn new(
        nodes: PointSet,
        schedule: SmoothingSchedule,
        samples_per_eval: u64,
        master_seed: u64,
    ) -> Result<Self> {
        if samples_per_eval == 0 {
            return Err(Error::invalid("samples_per_eval must be at least 1"));
        }
        let delta_sqrt_d = schedule.delta() * (nodes.dim() as f64).sqrt();
        let radii = schedule.alphas().iter().map(|a| a * delta_sqrt_d).collect();
        Ok(Self {
            nodes,
            schedule,
            samples_per_eval,
            master_seed,
            delta_sqrt_d,
            radii,
        })
    }

    pub fn with_defaults(nodes: PointSet, schedule: SmoothingSchedule, master_seed: u64) -> Result<Self> {
        Self::new(nodes, schedule, DEFAULT_SAMPLES_PER_EVAL, master_seed)
    }

    pub fn nodes(&self) -> &PointSet {
        &self.nodes
    }

    pub fn schedule(&self) -> &SmoothingSchedule {
        &self.schedule
    }

    pub fn samples_per_eval(&self) -> u64 {
        self.samples_per_eval
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// delta * sqrt(d): the vanishing radius and the reciprocal of the
    /// Lipschitz budget.
    pub fn delta_sqrt_d(&self) -> f64 {
        self.delta_sqrt_d
    }

    /// Beyond 3 * delta * sqrt(d) from every node the smoothed function is
    /// identically 1.
    pub fn far_field_radius(&self) -> f64 {
        3.0 * self.delta_sqrt_d
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.nodes.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("query point has a non-finite coordinate"));
        }
        Ok(())
    }

    /// Base ramp: clamp(dist(x, P)/(delta sqrt d) - 1, 0, 1). Exactly 0 on
    /// the vanishing neighborhood, exactly 1 outside twice its radius.
    pub fn f0(&self, x: &[f64]) -> Result<f64> {
        self.check_query(x)?;
        Ok(self.f0_unchecked(x))
    }

    pub(crate) fn f0_unchecked(&self, x: &[f64]) -> f64 {
        ramp(self.nodes.min_dist(x), self.delta_sqrt_d)
    }

    /// Smoothed evaluation with the exact fast paths: 0 at the nodes, 1 in
    /// the far field.
    pub fn eval(&self, x: &[f64]) -> Result<EvalResult> {
        self.check_query(x)?;
        let dist = self.nodes.min_dist(x);
        Ok(self.eval_given_dist(x, dist, true))
    }

    /// Smoothed evaluation forced through the Monte Carlo path, for audits.
    pub fn eval_no_fast_path(&self, x: &[f64]) -> Result<EvalResult> {
        self.check_query(x)?;
        Ok(self.mc_eval(x))
    }

    pub(crate) fn eval_given_dist(&self, x: &[f64], dist: f64, fast_paths: bool) -> EvalResult {
        if fast_paths {
            if dist == 0.0 {
                return EvalResult::exact(0.0);
            }
            if dist >= self.far_field_radius() {
                return EvalResult::exact(1.0);
            }
        }
        self.mc_eval(x)
    }

    fn mc_eval(&self, x: &[f64]) -> EvalResult {
        if self.schedule.order() == 0 {
            return EvalResult::exact(self.f0_unchecked(x));
        }
        let mut rng = stream_rng(
            self.master_seed,
            point_stream(seeding::PURPOSE_POINT_EVAL, x),
        );
        let d = self.nodes.dim();
        let mut stats = RunningStats::new();
        let mut shifted = vec![0.0; d];
        let mut ball = vec![0.0; d];
        for _ in 0..self.samples_per_eval {
            shifted.copy_from_slice(x);
            add_total_shift(&mut rng, &self.radii, &mut shifted, &mut ball);
            stats.push(self.f0_unchecked(&shifted));
        }
        EvalResult {
            value: stats.mean().clamp(0.0, 1.0),
            std_error: stats.std_error(),
            exact: false,
        }
    }

    /// Common-random-numbers pair evaluation: both queries see the
    /// identical sequence of ball draws from the caller-supplied stream,
    /// so the difference of the two estimates obeys the Lipschitz budget
    /// deterministically, sample by sample. Fast paths stay off.
    pub fn eval_pair_crn(&self, x: &[f64], y: &[f64], stream: u64) -> Result<(EvalResult, EvalResult)> {
        self.check_query(x)?;
        self.check_query(y)?;
        if self.schedule.order() == 0 {
            return Ok((
                EvalResult::exact(self.f0_unchecked(x)),
                EvalResult::exact(self.f0_unchecked(y)),
            ));
        }
        let mut rng = stream_rng(self.master_seed, stream);
        let d = self.nodes.dim();
        let mut sx = RunningStats::new();
        let mut sy = RunningStats::new();
        let mut shift = vec![0.0; d];
        let mut ball = vec![0.0; d];
        let mut query = vec![0.0; d];
        for _ in 0..self.samples_per_eval {
            shift.fill(0.0);
            add_total_shift(&mut rng, &self.radii, &mut shift, &mut ball);
            for (q, (a, s)) in query.iter_mut().zip(x.iter().zip(&shift)) {
                *q = a + s;
            }
            sx.push(self.f0_unchecked(&query));
            for (q, (a, s)) in query.iter_mut().zip(y.iter().zip(&shift)) {
                *q = a + s;
            }
            sy.push(self.f0_unchecked(&query));
        }
        Ok((
            EvalResult {
                value: sx.mean().clamp(0.0, 1.0),
                std_error: sx.std_error(),
                exact: false,
            },
            EvalResult {
                value: sy.mean().clamp(0.0, 1.0),
                std_error: sy.std_error(),
                exact: false,
            },
        ))
    }
}

fn ramp(dist: f64, rho: f64) -> f64 {
    (dist / rho - 1.0).clamp(0.0, 1.0)
}

/// Draws one ball shift per radius and adds their sum onto `acc`.
fn add_total_shift(rng: &mut ChaCha8Rng, radii: &[f64], acc: &mut [f64], ball: &mut [f64]) {
    for &rho in radii {
        sample_in_ball(rng, rho, ball);
        for (a, b) in acc.iter_mut().zip(ball.iter()) {
            *a += b;
        }
    }
}

/// Free-function form of the base ramp for an explicit node set.
pub fn f0_eval(x: &[f64], nodes: &PointSet, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if x.len() != nodes.dim() {
        return Err(Error::DimensionMismatch {
            expected: nodes.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("query point has a non-finite coordinate"));
    }
    let rho = delta * (nodes.dim() as f64).sqrt();
    Ok(ramp(nodes.min_dist(x), rho))
}

fn check_points(d: usize, points: &[Vec<f64>]) -> Result<()> {
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("evaluation point has a non-finite coordinate"));
        }
    }
    Ok(())
}

/// Core common-random-numbers loop: for every sample, one total shift is
/// drawn and the base is evaluated at every listed point plus that shift.
fn crn_loop<F, V>(
    base: &F,
    schedule: &SmoothingSchedule,
    d: usize,
    points: &[Vec<f64>],
    samples: u64,
    rng: &mut ChaCha8Rng,
    mut visit: V,
) where
    F: Fn(&[f64]) -> f64,
    V: FnMut(&[f64]),
{
    let delta_sqrt_d = schedule.delta() * (d as f64).sqrt();
    let radii: Vec<f64> = schedule.alphas().iter().map(|a| a * delta_sqrt_d).collect();
    let mut shift = vec![0.0; d];
    let mut ball = vec![0.0; d];
    let mut query = vec![0.0; d];
    let mut values = vec![0.0; points.len()];
    for _ in 0..samples {
        shift.fill(0.0);
        add_total_shift(rng, &radii, &mut shift, &mut ball);
        for (slot, p) in values.iter_mut().zip(points) {
            for (q, (a, s)) in query.iter_mut().zip(p.iter().zip(&shift)) {
                *q = a + s;
            }
            *slot = base(&query);
        }
        visit(&values);
    }
}

/// Smoothed evaluation of an arbitrary base function at one point.
///
/// Estimates (base * g_1 * ... * g_r)(x) as a single expectation of
/// base(x + Y_1 + ... + Y_r) over the ball draws, rather than nesting one
/// expectation per convolution pass. With r = 0 the base value is returned
/// exactly.
pub fn conv_eval_generic<F>(
    base: F,
    schedule: &SmoothingSchedule,
    x: &[f64],
    samples: u64,
    seed: u64,
) -> Result<EvalResult>
where
    F: Fn(&[f64]) -> f64,
{
    if x.is_empty() {
        return Err(Error::invalid("evaluation point must have dimension >= 1"));
    }
    check_points(x.len(), std::slice::from_ref(&x.to_vec()))?;
    if schedule.order() == 0 {
        return Ok(EvalResult::exact(base(x)));
    }
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let mut rng = stream_rng(seed, point_stream(seeding::PURPOSE_GENERIC_CONV, x));
    let mut stats = RunningStats::new();
    crn_loop(
        &base,
        schedule,
        x.len(),
        std::slice::from_ref(&x.to_vec()),
        samples,
        &mut rng,
        |vals| stats.push(vals[0]),
    );
    Ok(EvalResult {
        value: stats.mean(),
        std_error: stats.std_error(),
        exact: false,
    })
}

/// Smoothed evaluation of an arbitrary base at several points under common
/// random numbers. Values are not range-clamped: the base is arbitrary.
pub fn conv_eval_points_crn<F>(
    base: F,
    schedule: &SmoothingSchedule,
    points: &[Vec<f64>],
    samples: u64,
    master_seed: u64,
    stream: u64,
) -> Result<Vec<EvalResult>>
where
    F: Fn(&[f64]) -> f64,
{
    let d = points.first().map_or(0, |p| p.len());
    if d == 0 {
        return Err(Error::invalid("need at least one nonempty evaluation point"));
    }
    check_points(d, points)?;
    if schedule.order() == 0 {
        return Ok(points.iter().map(|p| EvalResult::exact(base(p))).collect());
    }
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let mut rng = stream_rng(master_seed, stream);
    let mut stats = vec![RunningStats::new(); points.len()];
    crn_loop(&base, schedule, d, points, samples, &mut rng, |vals| {
        for (s, v) in stats.iter_mut().zip(vals) {
            s.push(*v);
        }
    });
    Ok(stats
        .iter()
        .map(|s| EvalResult {
            value: s.mean(),
            std_error: s.std_error(),
            exact: false,
        })
        .collect())
}

/// Smoothed evaluation of a coefficient contrast sum(c_i * f_r(p_i)) under
/// common random numbers, with a proper standard error for the combined
/// statistic. This is the estimator behind finite-difference derivative
/// checks, where the per-sample cancellation is the whole point.
pub fn conv_eval_contrast_crn<F>(
    base: F,
    schedule: &SmoothingSchedule,
    points: &[Vec<f64>],
    coeffs: &[f64],
    samples: u64,
    master_seed: u64,
    stream: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    if points.len() != coeffs.len() {
        return Err(Error::invalid(format!(
            "got {} points but {} coefficients",
            points.len(),
            coeffs.len()
        )));
    }
    let d = points.first().map_or(0, |p| p.len());
    if d == 0 {
        return Err(Error::invalid("need at least one nonempty evaluation point"));
    }
    check_points(d, points)?;
    if schedule.order() == 0 {
        let exact: f64 = points.iter().zip(coeffs).map(|(p, c)| c * base(p)).sum();
        return Ok((exact, 0.0));
    }
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let mut rng = stream_rng(master_seed, stream);
    let mut stats = RunningStats::new();
    crn_loop(&base, schedule, d, points, samples, &mut rng, |vals| {
        let q: f64 = vals.iter().zip(coeffs).map(|(v, c)| v * c).sum();
        stats.push(q);
    });
    Ok((stats.mean(), stats.std_error()))
}
