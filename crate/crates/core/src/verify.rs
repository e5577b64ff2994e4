//! Numerical verification of the smoothing construction's properties:
//! vanishing at the nodes, Lipschitz budgets, derivative-Lipschitz budgets,
//! integral preservation, and membership of the smoothed function in the
//! advertised class, both at explicit delta and at the dimension-balanced
//! radius.
//!
//! Checks report a [`CheckOutcome`] with the observed statistic, the bound
//! it must stay under, and the tolerance that absorbs Monte Carlo noise.
//! A check whose noise is too large to decide either way returns
//! [`Error::Inconclusive`] instead of guessing.
//!
//! Suites bundle checks behind the [`VerifySuite`] trait and are selected
//! by name from [`suite_registry`].

use crate::bounds::{check_p, delta_for_p};
use crate::error::{Error, Result};
use crate::fooling::{
    conv_eval_contrast_crn, conv_eval_generic, conv_eval_points_crn, FoolingFunction,
    SmoothingSchedule,
};
use crate::geometry::{check_delta, dist, sample_unit_vector, PointSet};
use crate::rules::uniform_random;
use crate::seeding::{
    indexed_stream, stream_rng, PURPOSE_CHECK, PURPOSE_CHECK_DLIP, PURPOSE_CHECK_LIP,
    PURPOSE_CHECK_NORM, PURPOSE_CHECK_SMOOTH,
};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{E, PI};

/// Which property a check observed. Serialized names are stable protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PropertyId {
    #[serde(rename = "conv_i")]
    ConvI,
    #[serde(rename = "conv_ii")]
    ConvII,
    #[serde(rename = "conv_iii")]
    ConvIII,
    #[serde(rename = "conv_iv")]
    ConvIV,
    #[serde(rename = "conv_v")]
    ConvV,
    #[serde(rename = "class_norm")]
    ClassNorm,
    #[serde(rename = "class_lip")]
    ClassLip,
    #[serde(rename = "class_dlip")]
    ClassDlip,
    #[serde(rename = "tilde_class")]
    TildeClass,
}

impl PropertyId {
    pub fn as_str(self) -> &'static str {
        match self {
            PropertyId::ConvI => "conv_i",
            PropertyId::ConvII => "conv_ii",
            PropertyId::ConvIII => "conv_iii",
            PropertyId::ConvIV => "conv_iv",
            PropertyId::ConvV => "conv_v",
            PropertyId::ClassNorm => "class_norm",
            PropertyId::ClassLip => "class_lip",
            PropertyId::ClassDlip => "class_dlip",
            PropertyId::TildeClass => "tilde_class",
        }
    }
}

/// Result of one property check. `passed` means
/// observed <= bound * (1 + tolerance).
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub property_id: PropertyId,
    /// Which facet of the property was checked, e.g. "lip" or "dlip k=2".
    pub condition: String,
    pub passed: bool,
    pub observed: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub trials: u64,
    pub seed: u64,
}

impl CheckOutcome {
    fn judge(
        property_id: PropertyId,
        condition: impl Into<String>,
        observed: f64,
        bound: f64,
        tolerance: f64,
        trials: u64,
        seed: u64,
    ) -> Self {
        Self {
            property_id,
            condition: condition.into(),
            passed: observed <= bound * (1.0 + tolerance),
            observed,
            bound,
            tolerance,
            trials,
            seed,
        }
    }
}

/// Lipschitz budget of the smoothed fooling function: 1/(delta sqrt d).
pub fn lip_bound(d: u32, delta: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    check_delta(delta)?;
    Ok(1.0 / (delta * f64::from(d).sqrt()))
}

/// Lipschitz budget of the k-th directional derivatives after r smoothing
/// passes: r^k / (delta^(k+1) sqrt(d)). Each pass divides one factor of
/// delta back out, paying r for the shrunken per-pass ball radius; the
/// sqrt(d) comes from the ball slice ratio being at most 1.
pub fn dlip_bound(d: u32, r: u32, k: u32, delta: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    check_derivative_order(r, k)?;
    check_delta(delta)?;
    Ok(f64::from(r).powi(k as i32) / (delta.powi(k as i32 + 1) * f64::from(d).sqrt()))
}

/// Lipschitz budget at the dimension-balanced radius, in closed form:
/// sqrt(18 e pi) d^(p/(r+1) - 1/2).
pub fn tilde_lip_bound(d: u32, r: u32, p: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    if r == 0 {
        return Err(Error::invalid("smoothing order r must be at least 1"));
    }
    check_p(p)?;
    let x = p / f64::from(r + 1) - 0.5;
    Ok((18.0 * E * PI).sqrt() * f64::from(d).powf(x))
}

/// Derivative-Lipschitz budget at the dimension-balanced radius:
/// r^k (18 e pi)^((k+1)/2) d^(-1/2 + p(k+1)/(r+1)).
pub fn tilde_dlip_bound(d: u32, r: u32, k: u32, p: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    check_derivative_order(r, k)?;
    check_p(p)?;
    let kf = f64::from(k);
    let x = -0.5 + p * (kf + 1.0) / f64::from(r + 1);
    Ok(f64::from(r).powi(k as i32)
        * (18.0 * E * PI).powf((kf + 1.0) / 2.0)
        * f64::from(d).powf(x))
}

fn check_derivative_order(r: u32, k: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::invalid("smoothing order r must be at least 1"));
    }
    if k == 0 || k > r {
        return Err(Error::invalid(format!(
            "derivative order k must satisfy 1 <= k <= r, got k = {k}, r = {r}"
        )));
    }
    Ok(())
}

const MIN_PAIR_DIST: f64 = 1e-9;
/// Sigma multiplier separating "noisy but decisive" from inconclusive.
const NOISE_SIGMA: f64 = 3.0;
/// Base relative headroom for derivative checks before the discretization
/// allowance is added.
const BASE_DLIP_TOL: f64 = 0.1;
/// Minimum |<v, u>| in the smooth-base check, so the analytic per-trial
/// bound never degenerates.
const MIN_ALIGNMENT: f64 = 0.3;
/// Nodes per suite-internal random rule.
const SUITE_NODES: u64 = 8;
/// Ball draws per smoothed evaluation inside suite checks.
const CRN_SAMPLES: u64 = 256;

fn sample_box<R: Rng + ?Sized>(rng: &mut R, lo: &[f64], hi: &[f64], out: &mut [f64]) {
    for ((o, l), h) in out.iter_mut().zip(lo).zip(hi) {
        *o = l + (h - l) * rng.random::<f64>();
    }
}

/// Bounding box of the nodes inflated by the far-field radius on every
/// side: outside it every check statistic is identically constant.
fn inflated_box(f: &FoolingFunction) -> (Vec<f64>, Vec<f64>) {
    let (mut lo, mut hi) = f.nodes().bounding_box();
    let far = f.far_field_radius();
    for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
        *l -= far;
        *h += far;
    }
    (lo, hi)
}

/// Draws a unit vector whose alignment |<v, u>| is at least `min_align`,
/// by rotating v toward a random orthogonal direction by a bounded angle.
fn aligned_direction<R: Rng + ?Sized>(rng: &mut R, v: &[f64], min_align: f64) -> Vec<f64> {
    let d = v.len();
    if d == 1 {
        return vec![if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 }];
    }
    let mut g = vec![0.0; d];
    loop {
        sample_unit_vector(rng, &mut g);
        let a: f64 = g.iter().zip(v).map(|(x, y)| x * y).sum();
        let mut perp: Vec<f64> = g.iter().zip(v).map(|(x, y)| x - a * y).collect();
        let norm = perp.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        for c in perp.iter_mut() {
            *c /= norm;
        }
        let theta = min_align.acos() * rng.random::<f64>();
        let (sin, cos) = theta.sin_cos();
        let sign = if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 };
        return v
            .iter()
            .zip(&perp)
            .map(|(vc, pc)| sign * (cos * vc + sin * pc))
            .collect();
    }
}

/// Largest |smoothed base| over every node, re-checked `extra_trials`
/// times with fresh draw streams at cycled nodes.
fn vanishing_observed<F>(
    base: &F,
    schedule: &SmoothingSchedule,
    nodes: &PointSet,
    extra_trials: u64,
    samples: u64,
    master_seed: u64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let per_node = (0..nodes.len())
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let point = vec![nodes.point(i).to_vec()];
            let evals = conv_eval_points_crn(
                base,
                schedule,
                &point,
                samples,
                master_seed,
                indexed_stream(PURPOSE_CHECK, u64::MAX - i as u64),
            )?;
            Ok(evals[0].value.abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    let extra = (0..extra_trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let point = vec![nodes.point((t % nodes.len() as u64) as usize).to_vec()];
            let evals = conv_eval_points_crn(
                base,
                schedule,
                &point,
                samples,
                master_seed,
                indexed_stream(PURPOSE_CHECK, t),
            )?;
            Ok(evals[0].value.abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(per_node.max(extra))
}

/// The smoothed function must vanish identically at every node: zero
/// bound, zero tolerance, no fast paths involved.
pub fn check_vanishing(f: &FoolingFunction, trials: u64) -> Result<CheckOutcome> {
    let base = |q: &[f64]| f.f0_unchecked(q);
    let observed = vanishing_observed(
        &base,
        f.schedule(),
        f.nodes(),
        trials,
        f.samples_per_eval(),
        f.master_seed(),
    )?;
    Ok(CheckOutcome::judge(
        PropertyId::ConvI,
        "vanish at nodes",
        observed,
        0.0,
        0.0,
        trials + f.nodes().len() as u64,
        f.master_seed(),
    ))
}

/// Largest common-random-numbers difference quotient over random pairs in
/// the box. Shared draws make every per-sample quotient obey the base
/// function's Lipschitz constant exactly, so the estimate does too.
fn max_lip_ratio<F>(
    base: &F,
    schedule: &SmoothingSchedule,
    lo: &[f64],
    hi: &[f64],
    pairs: u64,
    samples: u64,
    master_seed: u64,
    seed: u64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = lo.len();
    (0..pairs)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = stream_rng(seed, indexed_stream(PURPOSE_CHECK_LIP, 2 * i));
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            sample_box(&mut rng, lo, hi, &mut x);
            let mut separation = 0.0;
            for _ in 0..100 {
                sample_box(&mut rng, lo, hi, &mut y);
                separation = dist(&x, &y);
                if separation >= MIN_PAIR_DIST {
                    break;
                }
            }
            if separation < MIN_PAIR_DIST {
                return Ok(0.0);
            }
            let evals = conv_eval_points_crn(
                base,
                schedule,
                &[x, y],
                samples,
                master_seed,
                indexed_stream(PURPOSE_CHECK_LIP, 2 * i + 1),
            )?;
            Ok((evals[0].value - evals[1].value).abs() / separation)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// The smoothed fooling function keeps the base Lipschitz budget
/// 1/(delta sqrt d); checked on random pairs with zero tolerance.
pub fn check_lip(f: &FoolingFunction, pairs: u64, seed: u64) -> Result<CheckOutcome> {
    if pairs == 0 {
        return Err(Error::invalid("need at least one pair"));
    }
    let (lo, hi) = inflated_box(f);
    let base = |q: &[f64]| f.f0_unchecked(q);
    let observed = max_lip_ratio(
        &base,
        f.schedule(),
        &lo,
        &hi,
        pairs,
        f.samples_per_eval(),
        f.master_seed(),
        seed,
    )?;
    let bound = lip_bound(f.nodes().dim() as u32, f.schedule().delta())?;
    Ok(CheckOutcome::judge(
        PropertyId::ConvII,
        "lip",
        observed,
        bound,
        0.0,
        pairs,
        seed,
    ))
}

/// 2^(k+1)-point stencil contrasting the k-th mixed difference quotient at
/// x against the same quotient at y: coefficient (-1)^(k - |S|)/h^k on
/// x + h * sum_{i in S} u_i, negated on the y copies.
fn build_stencil(
    x: &[f64],
    y: &[f64],
    dirs: &[Vec<f64>],
    h: f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = dirs.len();
    let hk = h.powi(k as i32);
    let mut points = Vec::with_capacity(2 << k);
    let mut coeffs = Vec::with_capacity(2 << k);
    for (center, sign) in [(x, 1.0), (y, -1.0)] {
        for mask in 0..(1u32 << k) {
            let mut p = center.to_vec();
            let mut c = sign / hk;
            for (i, u) in dirs.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    for (pc, uc) in p.iter_mut().zip(u) {
                        *pc += h * uc;
                    }
                } else {
                    c = -c;
                }
            }
            points.push(p);
            coeffs.push(c);
        }
    }
    (points, coeffs)
}

/// Max over trials of |stencil contrast| / gap together with the largest
/// NOISE_SIGMA * se / gap seen, for the inconclusiveness decision.
fn dlip_observe<F>(
    base: &F,
    schedule: &SmoothingSchedule,
    anchors: &PointSet,
    k: u32,
    h: f64,
    trials: u64,
    samples: u64,
    master_seed: u64,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = anchors.dim();
    let gap = h;
    let far = 3.0 * schedule.delta() * (d as f64).sqrt();
    let smax = far + f64::from(k) * h + gap;
    let mut max_ratio = 0.0f64;
    let mut max_noise = 0.0f64;
    for t in 0..trials {
        let stream_base = (u64::from(k) << 32) | (2 * t);
        let mut rng = stream_rng(seed, indexed_stream(PURPOSE_CHECK_DLIP, stream_base));
        let node = anchors.point(rng.random_range(0..anchors.len()));
        let mut u0 = vec![0.0; d];
        sample_unit_vector(&mut rng, &mut u0);
        let s = rng.random::<f64>() * smax;
        let x: Vec<f64> = node.iter().zip(&u0).map(|(n, u)| n + s * u).collect();
        let dirs: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let mut u = vec![0.0; d];
                sample_unit_vector(&mut rng, &mut u);
                u
            })
            .collect();
        let mut w = vec![0.0; d];
        sample_unit_vector(&mut rng, &mut w);
        let y: Vec<f64> = x.iter().zip(&w).map(|(c, wc)| c + gap * wc).collect();
        let (points, coeffs) = build_stencil(&x, &y, &dirs, h);
        let (mean, se) = conv_eval_contrast_crn(
            base,
            schedule,
            &points,
            &coeffs,
            samples,
            master_seed,
            indexed_stream(PURPOSE_CHECK_DLIP, stream_base + 1),
        )?;
        max_ratio = max_ratio.max(mean.abs() / gap);
        max_noise = max_noise.max(NOISE_SIGMA * se / gap);
    }
    Ok((max_ratio, max_noise))
}

fn dlip_outcome(
    f: &FoolingFunction,
    property_id: PropertyId,
    condition: String,
    bound: f64,
    k: u32,
    h: f64,
    trials: u64,
    samples: u64,
    seed: u64,
) -> Result<CheckOutcome> {
    check_derivative_order(f.schedule().order(), k)?;
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::invalid(format!("step h must be positive, got {h}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if samples < 2 {
        return Err(Error::invalid("need at least 2 samples per trial"));
    }
    // The difference quotient averages true directional derivatives, so
    // the bound holds for any h; the h term is pure slack on top of the
    // Monte Carlo headroom.
    let rel = h / f.delta_sqrt_d();
    let tolerance = BASE_DLIP_TOL + rel * rel;
    let base = |q: &[f64]| f.f0_unchecked(q);
    let (observed, noise) = dlip_observe(
        &base,
        f.schedule(),
        f.nodes(),
        k,
        h,
        trials,
        samples,
        f.master_seed(),
        seed,
    )?;
    if noise > tolerance * bound {
        return Err(Error::Inconclusive(format!(
            "{condition}: {NOISE_SIGMA} sigma noise {noise:.6} exceeds the decision margin {:.6}; raise samples",
            tolerance * bound
        )));
    }
    Ok(CheckOutcome::judge(
        property_id, condition, observed, bound, tolerance, trials, seed,
    ))
}

/// k-th derivative-Lipschitz check for the smoothed fooling function
/// against r^k / (delta^(k+1) sqrt d), via a randomized stencil contrast
/// under common random numbers. Errors with [`Error::Inconclusive`] when
/// the Monte Carlo noise could flip the verdict.
pub fn check_derivative_lip(
    f: &FoolingFunction,
    k: u32,
    h: f64,
    trials: u64,
    samples: u64,
    seed: u64,
) -> Result<CheckOutcome> {
    let bound = dlip_bound(
        f.nodes().dim() as u32,
        f.schedule().order(),
        k,
        f.schedule().delta(),
    )?;
    dlip_outcome(
        f,
        PropertyId::ConvV,
        format!("dlip k={k}"),
        bound,
        k,
        h,
        trials,
        samples,
        seed,
    )
}

fn norm_outcome(
    f: &FoolingFunction,
    property_id: PropertyId,
    trials: u64,
    seed: u64,
) -> Result<CheckOutcome> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let (lo, hi) = inflated_box(f);
    let observed = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = stream_rng(seed, indexed_stream(PURPOSE_CHECK_NORM, i));
            let mut x = vec![0.0; lo.len()];
            sample_box(&mut rng, &lo, &hi, &mut x);
            Ok(f.eval(&x)?.value.abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(CheckOutcome::judge(
        property_id,
        "norm",
        observed,
        1.0,
        0.0,
        trials,
        seed,
    ))
}

/// Sup-norm check: every sample of the smoothed function lies in [0, 1],
/// so the estimates must too, with zero tolerance.
pub fn check_range(f: &FoolingFunction, trials: u64, seed: u64) -> Result<CheckOutcome> {
    norm_outcome(f, PropertyId::ClassNorm, trials, seed)
}

/// Exact integral-preservation witnesses for the smoothing operator:
/// a constant base stays constant, and the far-field integral of the
/// smoothed fooling function over the cube is exactly 1 when every node
/// sits beyond the far-field radius of the whole cube.
pub fn check_integral_preservation(
    d: u32,
    delta: f64,
    r: u32,
    seed: u64,
) -> Result<Vec<CheckOutcome>> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    let schedule = SmoothingSchedule::uniform(delta, r)?;
    let center = vec![0.5; d as usize];
    let constant = conv_eval_generic(|_| 0.3, &schedule, &center, CRN_SAMPLES, seed)?;
    let constant_outcome = CheckOutcome::judge(
        PropertyId::ConvIII,
        "constant base mean",
        (constant.value - 0.3).abs(),
        0.0,
        0.0,
        CRN_SAMPLES,
        seed,
    );

    let far_nodes = PointSet::from_rows(d as usize, vec![vec![5.0; d as usize]])?;
    let f = FoolingFunction::new(far_nodes, schedule, CRN_SAMPLES, seed)?;
    let samples = 8192;
    let est = crate::estimate::integral_unit_cube(
        |x| f.eval(x).map(|e| e.value).expect("query points are valid"),
        d as usize,
        samples,
        seed,
    )?;
    let far_outcome = CheckOutcome::judge(
        PropertyId::ConvIII,
        "far field integral",
        (est.mean - 1.0).abs(),
        0.0,
        0.0,
        samples,
        seed,
    );
    Ok(vec![constant_outcome, far_outcome])
}

/// Smoothing must not increase derivative-Lipschitz constants of a smooth
/// base. Uses sin(omega <v, x>), whose directional derivative along u has
/// Lipschitz constant exactly omega^2 |<v, u>|; the observed stencil
/// ratios are normalized by that per-trial bound.
pub fn check_smooth_base(
    d: u32,
    delta: f64,
    r: u32,
    h: f64,
    trials: u64,
    samples: u64,
    seed: u64,
) -> Result<CheckOutcome> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    if r == 0 {
        return Err(Error::invalid("smoothing order r must be at least 1"));
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::invalid(format!("step h must be positive, got {h}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let schedule = SmoothingSchedule::uniform(delta, r)?;
    let df = f64::from(d);
    let omega = 2.0 / (delta * df.sqrt());
    let mut vrng = stream_rng(seed, indexed_stream(PURPOSE_CHECK_SMOOTH, u64::MAX));
    let mut v = vec![0.0; d as usize];
    sample_unit_vector(&mut vrng, &mut v);
    let vb = v.clone();
    let base = move |q: &[f64]| (omega * q.iter().zip(&vb).map(|(a, b)| a * b).sum::<f64>()).sin();

    let gap = h;
    let mut max_ratio = 0.0f64;
    let mut max_noise = 0.0f64;
    for t in 0..trials {
        let mut rng = stream_rng(seed, indexed_stream(PURPOSE_CHECK_SMOOTH, 2 * t));
        let mut x = vec![0.0; d as usize];
        for c in x.iter_mut() {
            *c = rng.random::<f64>();
        }
        let u = aligned_direction(&mut rng, &v, MIN_ALIGNMENT);
        let align: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs();
        let mut w = vec![0.0; d as usize];
        sample_unit_vector(&mut rng, &mut w);
        let y: Vec<f64> = x.iter().zip(&w).map(|(c, wc)| c + gap * wc).collect();
        let trial_bound = omega * omega * align;
        let (points, coeffs) = build_stencil(&x, &y, std::slice::from_ref(&u), h);
        let (mean, se) = conv_eval_contrast_crn(
            &base,
            &schedule,
            &points,
            &coeffs,
            samples,
            seed,
            indexed_stream(PURPOSE_CHECK_SMOOTH, 2 * t + 1),
        )?;
        max_ratio = max_ratio.max(mean.abs() / (gap * trial_bound));
        max_noise = max_noise.max(NOISE_SIGMA * se / (gap * trial_bound));
    }
    let tolerance = BASE_DLIP_TOL;
    if max_noise > tolerance {
        return Err(Error::Inconclusive(format!(
            "smooth base: {NOISE_SIGMA} sigma noise {max_noise:.6} exceeds the decision margin {tolerance:.6}; raise samples"
        )));
    }
    Ok(CheckOutcome::judge(
        PropertyId::ConvIV,
        "smooth base k=1",
        max_ratio,
        1.0,
        tolerance,
        trials,
        seed,
    ))
}

/// Per-order sampling plan for derivative checks: small steps where noise
/// allows, coarser steps (with the tolerance paying for them) at higher
/// orders where the 1/h^k amplification would otherwise need infeasible
/// sample counts.
fn dlip_plan(k: u32, delta: f64, d: u32, budget: u64) -> (f64, u64, u64) {
    let h = match k {
        1 => delta / 20.0,
        2 => delta / 4.0,
        _ => delta * f64::from(d).sqrt() / 2.0,
    };
    let trials = (budget / 25).clamp(4, 12);
    let samples = budget.saturating_mul(4_000).clamp(100_000, 400_000);
    (h, trials, samples)
}

/// Membership of the smoothed fooling function in its advertised class:
/// sup norm, Lipschitz budget, and every derivative-Lipschitz budget up
/// to order r.
pub fn check_class_membership(
    f: &FoolingFunction,
    budget: u64,
    seed: u64,
) -> Result<Vec<CheckOutcome>> {
    let d = f.nodes().dim() as u32;
    let r = f.schedule().order();
    let delta = f.schedule().delta();
    let mut out = Vec::with_capacity(2 + r as usize);
    out.push(norm_outcome(f, PropertyId::ClassNorm, budget.max(16), seed)?);
    let lip = check_lip(f, budget.max(16), seed)?;
    out.push(CheckOutcome {
        property_id: PropertyId::ClassLip,
        ..lip
    });
    for k in 1..=r {
        let (h, trials, samples) = dlip_plan(k, delta, d, budget);
        let bound = dlip_bound(d, r, k, delta)?;
        out.push(dlip_outcome(
            f,
            PropertyId::ClassDlip,
            format!("dlip k={k}"),
            bound,
            k,
            h,
            trials,
            samples,
            seed,
        )?);
    }
    Ok(out)
}

/// Class membership at the dimension-balanced radius, with the bounds in
/// their closed d-power forms.
pub fn check_tilde_membership(
    d: u32,
    r: u32,
    p: f64,
    budget: u64,
    seed: u64,
) -> Result<Vec<CheckOutcome>> {
    let tilde_delta = delta_for_p(d, r, p)?;
    let nodes = uniform_random(d as usize, SUITE_NODES, seed)?;
    let f = FoolingFunction::new(
        nodes,
        SmoothingSchedule::uniform(tilde_delta, r)?,
        CRN_SAMPLES,
        seed,
    )?;
    let mut out = Vec::with_capacity(2 + r as usize);
    let norm = norm_outcome(&f, PropertyId::TildeClass, budget.max(16), seed)?;
    out.push(norm);
    let lip = check_lip(&f, budget.max(16), seed)?;
    out.push(CheckOutcome {
        property_id: PropertyId::TildeClass,
        bound: tilde_lip_bound(d, r, p)?,
        ..lip
    });
    for k in 1..=r {
        let (h, trials, samples) = dlip_plan(k, tilde_delta, d, budget);
        let bound = tilde_dlip_bound(d, r, k, p)?;
        out.push(dlip_outcome(
            &f,
            PropertyId::TildeClass,
            format!("dlip k={k}"),
            bound,
            k,
            h,
            trials,
            samples,
            seed,
        )?);
    }
    Ok(out)
}

/// Shared configuration for verification suites.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuiteConfig {
    pub d: u32,
    pub r: u32,
    pub delta: f64,
    /// Growth exponent for the tilde suite; None uses its default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub seed: u64,
    /// Scales trial and pair counts; 100 is the calibrated default.
    pub budget: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            d: 2,
            r: 1,
            delta: 0.05,
            p: None,
            seed: 0,
            budget: 100,
        }
    }
}

pub const DEFAULT_TILDE_P: f64 = 0.25;

/// A named bundle of property checks, selectable at runtime.
pub trait VerifySuite: Sync {
    fn id(&self) -> &'static str;
    fn run(&self, cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>>;
}

fn suite_function(cfg: &SuiteConfig) -> Result<FoolingFunction> {
    let nodes = uniform_random(cfg.d as usize, SUITE_NODES, cfg.seed)?;
    FoolingFunction::new(
        nodes,
        SmoothingSchedule::uniform(cfg.delta, cfg.r)?,
        CRN_SAMPLES,
        cfg.seed,
    )
}

/// The five smoothing properties: vanishing, Lipschitz budget, integral
/// preservation, smooth-base derivative budgets, and the fooling
/// function's own derivative budgets (orders 1 and 2; higher orders cost
/// more than they teach here and stay with the class suite).
struct ConvSuite;

impl VerifySuite for ConvSuite {
    fn id(&self) -> &'static str {
        "conv"
    }
    fn run(&self, cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
        let f = suite_function(cfg)?;
        let mut out = Vec::new();
        out.push(check_vanishing(&f, cfg.budget.clamp(8, 200))?);
        out.push(check_lip(&f, cfg.budget.max(16), cfg.seed)?);
        out.extend(check_integral_preservation(cfg.d, cfg.delta, cfg.r, cfg.seed)?);
        let trials = (cfg.budget / 25).clamp(4, 16);
        let samples = cfg.budget.saturating_mul(2_000).clamp(50_000, 200_000);
        out.push(check_smooth_base(
            cfg.d,
            cfg.delta,
            cfg.r,
            cfg.delta / 20.0,
            trials,
            samples,
            cfg.seed,
        )?);
        for k in 1..=cfg.r.min(2) {
            let (h, trials, samples) = dlip_plan(k, cfg.delta, cfg.d, cfg.budget);
            out.push(check_derivative_lip(&f, k, h, trials, samples, cfg.seed)?);
        }
        Ok(out)
    }
}

/// Class membership at the explicit delta.
struct ClassSuite;

impl VerifySuite for ClassSuite {
    fn id(&self) -> &'static str {
        "class"
    }
    fn run(&self, cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
        let f = suite_function(cfg)?;
        check_class_membership(&f, cfg.budget, cfg.seed)
    }
}

/// Class membership at the dimension-balanced radius.
struct TildeSuite;

impl VerifySuite for TildeSuite {
    fn id(&self) -> &'static str {
        "tilde"
    }
    fn run(&self, cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
        let p = cfg.p.unwrap_or(DEFAULT_TILDE_P);
        check_tilde_membership(cfg.d, cfg.r, p, cfg.budget, cfg.seed)
    }
}

static SUITES: [&dyn VerifySuite; 3] = [&ConvSuite, &ClassSuite, &TildeSuite];

/// Every registered verification suite, in presentation order.
pub fn suite_registry() -> &'static [&'static dyn VerifySuite] {
    &SUITES
}

/// Look a suite up by its registered name.
pub fn find_suite(name: &str) -> Result<&'static dyn VerifySuite> {
    SUITES
        .iter()
        .copied()
        .find(|s| s.id() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = SUITES.iter().map(|s| s.id()).collect();
            Error::invalid(format!(
                "unknown suite {name:?}; known suites: {}",
                known.join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rel(actual: f64, expected: f64, rel: f64) {
        let scale = expected.abs().max(1e-300);
        assert!(
            (actual - expected).abs() <= rel * scale,
            "{actual} vs {expected} (rel {rel})"
        );
    }

    #[test]
    fn bound_formulas_frozen_values() {
        assert_rel(dlip_bound(2, 1, 1, 0.2).unwrap(), 17.677669529663685, 1e-12);
        assert_rel(lip_bound(3, 0.1).unwrap(), 5.773502691896257, 1e-12);
    }

    #[test]
    fn tilde_bounds_match_explicit_delta_forms() {
        for d in [2u32, 5, 10, 100] {
            for r in [1u32, 2, 3] {
                for p in [0.1, 0.25, 0.4] {
                    let td = delta_for_p(d, r, p).unwrap();
                    assert_rel(
                        tilde_lip_bound(d, r, p).unwrap(),
                        lip_bound(d, td).unwrap(),
                        1e-12,
                    );
                    for k in 1..=r {
                        assert_rel(
                            tilde_dlip_bound(d, r, k, p).unwrap(),
                            dlip_bound(d, r, k, td).unwrap(),
                            1e-12,
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bound_validation() {
        assert!(dlip_bound(2, 1, 0, 0.1).is_err());
        assert!(dlip_bound(2, 1, 2, 0.1).is_err());
        assert!(dlip_bound(0, 1, 1, 0.1).is_err());
        assert!(tilde_lip_bound(2, 1, 0.5).is_err());
        assert!(tilde_dlip_bound(2, 2, 3, 0.25).is_err());
    }

    #[test]
    fn property_id_serialization_names() {
        assert_eq!(serde_json::to_string(&PropertyId::ConvII).unwrap(), "\"conv_ii\"");
        assert_eq!(serde_json::to_string(&PropertyId::ConvIV).unwrap(), "\"conv_iv\"");
        assert_eq!(
            serde_json::to_string(&PropertyId::TildeClass).unwrap(),
            "\"tilde_class\""
        );
        assert_eq!(PropertyId::ClassDlip.as_str(), "class_dlip");
    }

    #[test]
    fn stencil_is_exact_on_polynomials() {
        // k = 1 along e1 on f(v) = v0^2: the contrast collapses to
        // -2 * gap exactly (up to rounding), so ratio = 2 = Lip(D f).
        let x = vec![0.3, 0.4];
        let gap = 0.05;
        let y = vec![0.3 + gap, 0.4];
        let dirs = vec![vec![1.0, 0.0]];
        let (points, coeffs) = build_stencil(&x, &y, &dirs, 0.01);
        assert_eq!(points.len(), 4);
        assert_eq!(coeffs.len(), 4);
        let contrast: f64 = points
            .iter()
            .zip(&coeffs)
            .map(|(p, c)| c * p[0] * p[0])
            .sum();
        assert!((contrast + 2.0 * gap).abs() < 1e-9, "{contrast}");
        let total: f64 = coeffs.iter().sum();
        assert!(total.abs() < 1e-9);

        // k = 2 on f(v) = v0 * v1 with axis directions: the mixed second
        // derivative is constant, so the x and y stencils cancel exactly.
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (points, coeffs) = build_stencil(&x, &y, &dirs, 0.25);
        assert_eq!(points.len(), 8);
        let contrast: f64 = points
            .iter()
            .zip(&coeffs)
            .map(|(p, c)| c * p[0] * p[1])
            .sum();
        assert!(contrast.abs() < 1e-12, "{contrast}");
    }

    #[test]
    fn vanishing_detects_a_base_that_does_not_vanish() {
        let nodes = uniform_random(2, 4, 3).unwrap();
        let schedule = SmoothingSchedule::uniform(0.1, 1).unwrap();
        let observed =
            vanishing_observed(&|_q: &[f64]| 0.5, &schedule, &nodes, 4, 64, 3).unwrap();
        assert_eq!(observed, 0.5);
    }

    #[test]
    fn lip_engine_detects_a_steep_base() {
        // Slope twice the budget along the first axis; a narrow smoothing
        // radius keeps the smoothed slope essentially intact.
        let d = 2u32;
        let delta = 0.2;
        let budget = lip_bound(d, delta).unwrap();
        let steep = move |q: &[f64]| ((q[0] - 0.2) * 2.0 * budget).clamp(0.0, 1.0);
        let schedule = SmoothingSchedule::new(delta, vec![0.01]).unwrap();
        let observed = max_lip_ratio(
            &steep,
            &schedule,
            &[0.2, 0.0],
            &[0.2 + 1.0 / (2.0 * budget), 0.2],
            100,
            64,
            7,
            7,
        )
        .unwrap();
        assert!(
            observed > budget,
            "steep base slipped under the budget: {observed} <= {budget}"
        );
    }

    #[test]
    fn conv_suite_passes_at_default_shape() {
        let cfg = SuiteConfig {
            d: 2,
            r: 1,
            delta: 0.1,
            p: None,
            seed: 0,
            budget: 25,
        };
        let outcomes = ConvSuite.run(&cfg).unwrap();
        assert_eq!(outcomes.len(), 6);
        let ids: Vec<PropertyId> = outcomes.iter().map(|o| o.property_id).collect();
        assert_eq!(
            ids,
            vec![
                PropertyId::ConvI,
                PropertyId::ConvII,
                PropertyId::ConvIII,
                PropertyId::ConvIII,
                PropertyId::ConvIV,
                PropertyId::ConvV,
            ]
        );
        for o in &outcomes {
            assert!(
                o.passed,
                "{} ({}) failed: observed {} vs bound {} (tol {})",
                o.property_id.as_str(),
                o.condition,
                o.observed,
                o.bound,
                o.tolerance
            );
        }
    }

    #[test]
    fn class_suite_passes_and_reports_membership() {
        let cfg = SuiteConfig {
            d: 2,
            r: 1,
            delta: 0.15,
            p: None,
            seed: 1,
            budget: 25,
        };
        let outcomes = ClassSuite.run(&cfg).unwrap();
        assert_eq!(outcomes.len(), 3);
        assert_eq!(outcomes[0].property_id, PropertyId::ClassNorm);
        assert_eq!(outcomes[1].property_id, PropertyId::ClassLip);
        assert_eq!(outcomes[2].property_id, PropertyId::ClassDlip);
        assert!(outcomes.iter().all(|o| o.passed));
        assert!(outcomes[1].bound > 0.0);
    }

    #[test]
    fn tilde_suite_uses_closed_form_bounds() {
        let cfg = SuiteConfig {
            d: 3,
            r: 1,
            delta: 0.05, // ignored by the tilde suite
            p: Some(0.25),
            seed: 2,
            budget: 25,
        };
        let outcomes = TildeSuite.run(&cfg).unwrap();
        assert_eq!(outcomes.len(), 3);
        assert!(outcomes.iter().all(|o| o.property_id == PropertyId::TildeClass));
        assert!(outcomes.iter().all(|o| o.passed));
        assert_rel(outcomes[1].bound, tilde_lip_bound(3, 1, 0.25).unwrap(), 1e-12);
        assert_rel(
            outcomes[2].bound,
            tilde_dlip_bound(3, 1, 1, 0.25).unwrap(),
            1e-12,
        );
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(suite_registry().len(), 3);
        assert_eq!(find_suite("conv").unwrap().id(), "conv");
        assert_eq!(find_suite("tilde").unwrap().id(), "tilde");
        assert!(find_suite("nope").is_err());
    }

    #[test]
    fn derivative_check_rejects_bad_orders() {
        let nodes = uniform_random(2, 4, 0).unwrap();
        let f = FoolingFunction::new(
            nodes,
            SmoothingSchedule::uniform(0.1, 1).unwrap(),
            64,
            0,
        )
        .unwrap();
        assert!(check_derivative_lip(&f, 0, 0.01, 4, 100, 0).is_err());
        assert!(check_derivative_lip(&f, 2, 0.01, 4, 100, 0).is_err());
        assert!(check_derivative_lip(&f, 1, 0.0, 4, 100, 0).is_err());
        assert!(check_derivative_lip(&f, 1, 0.01, 0, 100, 0).is_err());
    }

    #[test]
    fn integral_preservation_outcomes_are_exact() {
        let outcomes = check_integral_preservation(2, 0.1, 2, 5).unwrap();
        assert_eq!(outcomes.len(), 2);
        for o in &outcomes {
            assert_eq!(o.observed, 0.0, "{}", o.condition);
            assert!(o.passed);
            assert_eq!(o.bound, 0.0);
            assert_eq!(o.tolerance, 0.0);
        }
    }

    #[test]
    fn aligned_direction_honors_minimum() {
        let mut rng = stream_rng(4, 0);
        for d in [1usize, 2, 3, 8] {
            let mut v = vec![0.0; d];
            sample_unit_vector(&mut rng, &mut v);
            for _ in 0..50 {
                let u = aligned_direction(&mut rng, &v, MIN_ALIGNMENT);
                let norm: f64 = u.iter().map(|c| c * c).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-9);
                let a: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>().abs();
                assert!(a >= MIN_ALIGNMENT - 1e-9, "alignment {a} in d={d}");
            }
        }
    }
}
