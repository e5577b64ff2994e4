//! Closed-form lower bounds on worst-case cubature error, evaluated in
//! log-space so that astronomically small or large quantities stay finite.
//!
//! Every formula is exposed twice: as a plain function and as a
//! [`BoundFormula`] strategy object in a registry keyed by name, which is
//! what configuration and the command line select by.

use crate::error::{Error, Result};
use crate::geometry::check_delta;
use serde::Serialize;
use std::f64::consts::{E, PI};

/// ln sqrt(18 e pi): the packing constant of the ball-volume bound.
pub(crate) fn ln_sqrt_18epi() -> f64 {
    0.5 * (18.0 * E * PI).ln()
}

/// ln sqrt(2 pi e): the per-dimension constant in the volume upper bound.
pub(crate) fn ln_sqrt_2pie() -> f64 {
    0.5 * (2.0 * PI * E).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    Thm2,
    Thm3,
    Corollary,
    Sukharev,
    Certificate,
    D0,
}

impl FormulaId {
    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::Thm2 => "thm2",
            FormulaId::Thm3 => "thm3",
            FormulaId::Corollary => "corollary",
            FormulaId::Sukharev => "sukharev",
            FormulaId::Certificate => "certificate",
            FormulaId::D0 => "d0",
        }
    }
}

/// Parameter bag shared by every registered formula. Each formula reads
/// the subset it needs and rejects calls with the rest missing.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct BoundParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
}

/// A bound evaluation: always the log value, plus the plain value whenever
/// it is representable in f64.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub formula_id: FormulaId,
    pub parameters: BoundParams,
    pub log_value: f64,
    pub value: Option<f64>,
}

impl BoundReport {
    fn new(formula_id: FormulaId, parameters: BoundParams, log_value: f64) -> Self {
        // exp overflows past ln(f64::MAX) ~ 709.78; below that (including
        // -inf, which exponentiates to 0) the plain value is meaningful.
        let value = if log_value <= f64::MAX.ln() {
            Some(log_value.exp())
        } else {
            None
        };
        Self {
            formula_id,
            parameters,
            log_value,
            value,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !eps.is_finite() || !(0.0..1.0).contains(&eps) {
        return Err(Error::invalid(format!("eps must lie in [0, 1), got {eps}")));
    }
    Ok(())
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !p.is_finite() || p <= 0.0 || p >= 0.5 {
        return Err(Error::invalid(format!(
            "p must lie in the open interval (0, 1/2), got {p}"
        )));
    }
    Ok(())
}

fn check_r_positive(r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::invalid("smoothing order r must be at least 1"));
    }
    Ok(())
}

fn check_d_positive(d: u32) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    Ok(())
}

/// ln of the minimum number of points any cubature rule needs before its
/// worst-case error over the 1-Lipschitz fooling class drops below 1 - eps,
/// at vanishing radius scale delta.
///
/// For d = 1 the ball-packing term is vacuous and the bound degenerates to
/// ln(1 - eps).
pub fn min_points_thm2(eps: f64, d: u32, delta: f64) -> Result<f64> {
    check_eps(eps)?;
    check_d_positive(d)?;
    check_delta(delta)?;
    let base = (1.0 - eps).ln();
    if d == 1 {
        return Ok(base);
    }
    Ok(base - f64::from(d) * (delta.ln() + ln_sqrt_18epi()))
}

/// ln of the point-count bound for the r-times smoothed class whose
/// Lipschitz budget grows like d^p: the packing radius is tied to p and r
/// through [`delta_for_p`].
pub fn min_points_thm3(eps: f64, d: u32, r: u32, p: f64) -> Result<f64> {
    check_eps(eps)?;
    check_d_positive(d)?;
    check_r_positive(r)?;
    check_p(p)?;
    let df = f64::from(d);
    Ok((1.0 - eps).ln() + p * df / f64::from(r + 1) * df.ln())
}

/// The vanishing radius that balances the smoothed Lipschitz budget
/// against dimension: delta = d^(-p/(r+1)) / sqrt(18 e pi).
pub fn delta_for_p(d: u32, r: u32, p: f64) -> Result<f64> {
    check_d_positive(d)?;
    check_r_positive(r)?;
    check_p(p)?;
    let ln_delta = -p / f64::from(r + 1) * f64::from(d).ln() - ln_sqrt_18epi();
    Ok(ln_delta.exp())
}

/// Dimension threshold d_0 past which the smoothed bound beats every
/// polynomial rate: ln d_0 = (r ln r + (r+1)/2 ln(18 e pi)) / (1/2 - p).
/// Diverges as p -> 1/2, so p >= 1/2 is rejected rather than clamped.
pub fn d0_threshold(r: u32, p: f64) -> Result<BoundReport> {
    check_r_positive(r)?;
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::invalid(format!("p must be positive, got {p}")));
    }
    if p >= 0.5 {
        return Err(Error::invalid(format!(
            "threshold diverges as p approaches 1/2 from below, got p = {p}"
        )));
    }
    let rf = f64::from(r);
    let numer = rf * rf.ln() + f64::from(r + 1) / 2.0 * (2.0 * ln_sqrt_18epi());
    let ln_d0 = numer / (0.5 - p);
    Ok(BoundReport::new(
        FormulaId::D0,
        BoundParams {
            r: Some(r),
            p: Some(p),
            ..BoundParams::default()
        },
        ln_d0,
    ))
}

/// ln c_r in the super-exponential bound n >= (1 - eps) c_r: the constant
/// absorbs the worst dimension d_0 at the rate-optimal p* = (r+1)/(2r+3).
///
/// ln c_r = -(p*/(r+1)) d_0 ln d_0 underflows f64 already at r = 6
/// (ln d_0 exceeds 709, so d_0 itself is not representable); such r are
/// rejected instead of returning -inf.
pub fn corollary_ln_c(r: u32) -> Result<f64> {
    check_r_positive(r)?;
    let p_star = f64::from(r + 1) / f64::from(2 * r + 3);
    let ln_d0 = d0_threshold(r, p_star)?.log_value;
    if ln_d0 > f64::MAX.ln() {
        return Err(Error::invalid(format!(
            "constant underflows the f64 range at r = {r}: ln d_0 = {ln_d0:.1}"
        )));
    }
    let d0 = ln_d0.exp();
    Ok(-(p_star / f64::from(r + 1)) * d0 * ln_d0)
}

/// ln of the super-exponential lower bound (1 - eps) c_r, valid for every
/// dimension at smoothing order r.
pub fn corollary_bound(eps: f64, d: u32, r: u32) -> Result<f64> {
    check_eps(eps)?;
    check_d_positive(d)?;
    Ok((1.0 - eps).ln() + corollary_ln_c(r)?)
}

/// Worst-case error of the best possible rule on the plain Lipschitz class:
/// (d/(2d+2)) n^(-1/d). Computed in log-space first so huge d and n stay
/// accurate.
pub fn sukharev_error(d: u32, n: u64) -> Result<f64> {
    check_d_positive(d)?;
    if n == 0 {
        return Err(Error::invalid("point count n must be at least 1"));
    }
    let df = f64::from(d);
    let log = (df / (2.0 * df + 2.0)).ln() - (n as f64).ln() / df;
    Ok(log.exp())
}

pub(crate) fn sukharev_error_ln(d: u32, n: u64) -> Result<f64> {
    check_d_positive(d)?;
    if n == 0 {
        return Err(Error::invalid("point count n must be at least 1"));
    }
    let df = f64::from(d);
    Ok((df / (2.0 * df + 2.0)).ln() - (n as f64).ln() / df)
}

/// Certified lower bound on the worst-case error of *any* rule using the
/// given point count: 1 - n (3 delta)^d (2 pi e)^(d/2), clamped to [0, 1].
/// The subtrahend is the volume bound on the union of fooling-neighborhood
/// balls; when it reaches 1 the certificate is vacuous and 0 is returned.
pub fn fooling_certificate(n: u64, d: u32, delta: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::Unsupported(
            "the ball-volume certificate needs dimension d >= 2".into(),
        ));
    }
    if n == 0 {
        return Err(Error::invalid("point count n must be at least 1"));
    }
    check_delta(delta)?;
    let t = (n as f64).ln() + f64::from(d) * ((3.0 * delta).ln() + ln_sqrt_2pie());
    if t >= 0.0 {
        return Ok(0.0);
    }
    // 1 - e^t via exp_m1 keeps full precision when e^t is tiny.
    Ok((-t.exp_m1()).clamp(0.0, 1.0))
}

fn need<T: Copy>(value: Option<T>, flag: &str, formula: &str) -> Result<T> {
    value.ok_or_else(|| Error::invalid(format!("--{flag} is required for formula {formula}")))
}

/// One closed-form bound behind a common interface, so formulas can be
/// selected by name at runtime.
pub trait BoundFormula: Sync {
    fn id(&self) -> FormulaId;
    /// The parameter flags this formula consumes, in CLI spelling.
    fn flags(&self) -> &'static [&'static str];
    fn evaluate(&self, params: &BoundParams) -> Result<BoundReport>;
}

struct Thm2Formula;

impl BoundFormula for Thm2Formula {
    fn id(&self) -> FormulaId {
        FormulaId::Thm2
    }
    fn flags(&self) -> &'static [&'static str] {
        &["eps", "dim", "delta"]
    }
    fn evaluate(&self, params: &BoundParams) -> Result<BoundReport> {
        let eps = need(params.eps, "eps", "thm2")?;
        let d = need(params.d, "dim", "thm2")?;
        let delta = need(params.delta, "delta", "thm2")?;
        let log = min_points_thm2(eps, d, delta)?;
        Ok(BoundReport::new(
            FormulaId::Thm2,
            BoundParams {
                d: Some(d),
                delta: Some(delta),
                eps: Some(eps),
                ..BoundParams::default()
            },
            log,
        ))
    }
}

struct Thm3Formula;

impl BoundFormula for Thm3Formula {
    fn id(&self) -> FormulaId {
        FormulaId::Thm3
    }
    fn flags(&self) -> &'static [&'static str] {
        &["eps", "dim", "r", "p"]
    }
    fn evaluate(&self, params: &BoundParams) -> Result<BoundReport> {
        let eps = need(params.eps, "eps", "thm3")?;
        let d = need(params.d, "dim", "thm3")?;
        let r = need(params.r, "r", "thm3")?;
        let p = need(params.p, "p", "thm3")?;
        let log = min_points_thm3(eps, d, r, p)?;
        Ok(BoundReport::new(
            FormulaId::Thm3,
            BoundParams {
                d: Some(d),
                r: Some(r),
                eps: Some(eps),
                p: Some(p),
                ..BoundParams::default()
            },
            log,
        ))
    }
}

struct CorollaryFormula;

impl BoundFormula for CorollaryFormula {
    fn id(&self) -> FormulaId {
        FormulaId::Corollary
    }
    fn flags(&self) -> &'static [&'static str] {
        &["eps", "dim", "r"]
    }
    fn evaluate(&self, params: &BoundParams) -> Result<BoundReport> {
        let eps = need(params.eps, "eps", "corollary")?;
        let d = need(params.d, "dim", "corollary")?;
        let r = need(params.r, "r", "corollary")?;
        let log = corollary_bound(eps, d, r)?;
        Ok(BoundReport::new(
            FormulaId::Corollary,
            BoundParams {
                d: Some(d),
                r: Some(r),
                eps: Some(eps),
                ..BoundParams::default()
            },
            log,
        ))
    }
}

struct SukharevFormula;

impl BoundFormula for SukharevFormula {
    fn id(&self) -> FormulaId {
        FormulaId::Sukharev
    }
    fn flags(&self) -> &'static [&'static str] {
        &["dim", "n"]
    }
    fn evaluate(&self, params: &BoundParams) -> Result<BoundReport> {
        let d = need(params.d, "dim", "sukharev")?;
        let n = need(params.n, "n", "sukharev")?;
        let log = sukharev_error_ln(d, n)?;
        Ok(BoundReport::new(
            FormulaId::Sukharev,
            BoundParams {
                d: Some(d),
                n: Some(n),
                ..BoundParams::default()
            },
            log,
        ))
    }
}

struct CertificateFormula;

impl BoundFormula for CertificateFormula {
    fn id(&self) -> FormulaId {
        FormulaId::Certificate
    }
    fn flags(&self) -> &'static [&'static str] {
        &["dim", "n", "delta"]
    }
    fn evaluate(&self, params: &BoundParams) -> Result<BoundReport> {
        let d = need(params.d, "dim", "certificate")?;
        let n = need(params.n, "n", "certificate")?;
        let delta = need(params.delta, "delta", "certificate")?;
        let value = fooling_certificate(n, d, delta)?;
        let mut report = BoundReport::new(
            FormulaId::Certificate,
            BoundParams {
                d: Some(d),
                n: Some(n),
                delta: Some(delta),
                ..BoundParams::default()
            },
            value.ln(),
        );
        // ln rounds; the certificate itself is the authoritative value.
        report.value = Some(value);
        Ok(report)
    }
}

static REGISTRY: [&dyn BoundFormula; 5] = [
    &Thm2Formula,
    &Thm3Formula,
    &CorollaryFormula,
    &SukharevFormula,
    &CertificateFormula,
];

/// Every registered closed-form bound, in presentation order.
pub fn formula_registry() -> &'static [&'static dyn BoundFormula] {
    &REGISTRY
}

/// Look a formula up by its name, as used in configuration and the CLI.
pub fn find_formula(name: &str) -> Result<&'static dyn BoundFormula> {
    REGISTRY
        .iter()
        .copied()
        .find(|f| f.id().as_str() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = REGISTRY.iter().map(|f| f.id().as_str()).collect();
            Error::invalid(format!(
                "unknown formula {name:?}; known formulas: {}",
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
    fn packing_constant() {
        // Frozen from a 60-digit evaluation of ln sqrt(18 e pi).
        assert_rel(ln_sqrt_18epi(), 5.0351016437455645 / 2.0, 1e-15);
        assert_rel((18.0 * E * PI).sqrt(), 12.398194062367478, 1e-15);
        assert_rel(ln_sqrt_2pie().exp(), 4.132731354122493, 1e-15);
    }

    #[test]
    fn thm2_frozen_grid() {
        // (eps, d, delta) -> ln n, frozen from a 60-digit oracle.
        let cases: [(f64, u32, f64, f64); 5] = [
            (0.5, 10, 0.0403278, 6.238486816187936),
            (0.5, 2, 0.05, 0.2632157228024717),
            (0.25, 1, 0.3, -0.2876820724517809),
            (0.9, 100, 0.01, 206.45935131853685),
            (0.1, 1000, 0.02, 1394.3668230397059),
        ];
        for (eps, d, delta, expected) in cases {
            assert_rel(min_points_thm2(eps, d, delta).unwrap(), expected, 1e-12);
        }
    }

    #[test]
    fn thm2_exact_half_packing_delta() {
        // At delta = 1/(2 sqrt(18 e pi)) the d-dimensional term collapses
        // to d ln 2 in exact arithmetic.
        let delta = 0.5 / (18.0 * E * PI).sqrt();
        let got = min_points_thm2(0.5, 10, delta).unwrap();
        assert_rel(got, 9.0 * std::f64::consts::LN_2, 1e-12);
    }

    #[test]
    fn thm3_frozen_grid() {
        let cases: [(f64, u32, u32, f64, f64); 5] = [
            (0.0, 4, 1, 0.25, 0.6931471805599453),
            (0.5, 100, 2, 0.4, 60.70912196594794),
            (0.5, 1, 1, 0.1, -0.6931471805599453),
            (0.25, 50, 3, 0.45, 21.71744733308154),
            (0.5, 1_000_000, 2, 0.45, 2072325.8905474606),
        ];
        for (eps, d, r, p, expected) in cases {
            assert_rel(min_points_thm3(eps, d, r, p).unwrap(), expected, 1e-12);
        }
    }

    #[test]
    fn d0_frozen_grid() {
        let cases: [(u32, f64, f64); 5] = [
            (1, 0.4, 50.35101643745566),
            (2, 0.4, 89.3894682673824),
            (1, 0.25, 20.140406574982258),
            (3, 0.1, 33.41510038373865),
            (2, 0.49, 893.894682673823),
        ];
        for (r, p, expected) in cases {
            assert_rel(d0_threshold(r, p).unwrap().log_value, expected, 1e-12);
        }
    }

    #[test]
    fn d0_rejects_divergent_p() {
        assert!(d0_threshold(1, 0.5).is_err());
        assert!(d0_threshold(1, 0.7).is_err());
        assert!(d0_threshold(1, 0.0).is_err());
        assert!(d0_threshold(0, 0.3).is_err());
    }

    #[test]
    fn corollary_frozen_constants() {
        assert_rel(corollary_ln_c(1).unwrap(), -7.416633778319386e22, 1e-12);
        assert_rel(corollary_ln_c(2).unwrap(), -4.0013844664716655e55, 1e-12);
        assert_rel(corollary_ln_c(3).unwrap(), -8.19195317501087e105, 1e-12);
    }

    #[test]
    fn corollary_frozen_grid() {
        // The eps and d terms sit far below one ulp of ln c_r, so the full
        // bound equals ln c_r bit for bit across this grid.
        let cases: [(f64, u32, u32, f64); 5] = [
            (0.5, 2, 1, -7.416633778319386e22),
            (0.5, 100, 1, -7.416633778319386e22),
            (0.25, 10, 2, -4.0013844664716655e55),
            (0.5, 1000, 3, -8.19195317501087e105),
            (0.9, 1, 1, -7.416633778319386e22),
        ];
        for (eps, d, r, expected) in cases {
            assert_rel(corollary_bound(eps, d, r).unwrap(), expected, 1e-12);
        }
    }

    #[test]
    fn corollary_rejects_unrepresentable_order() {
        // ln d_0 crosses ln(f64::MAX) between r = 5 and r = 6.
        assert!(corollary_ln_c(5).is_ok());
        let err = corollary_ln_c(6).unwrap_err();
        assert!(err.to_string().contains("underflows"));
    }

    #[test]
    fn sukharev_frozen_grid() {
        let cases: [(u32, u64, f64); 5] = [
            (2, 16, -2.4849066497880004),
            (1, 1, -1.3862943611198906),
            (10, 1024, -1.4816045409242156),
            (3, 27, -2.0794415416798357),
            (50, 1_000_000, -0.9892600190154105),
        ];
        for (d, n, expected) in cases {
            assert_rel(sukharev_error_ln(d, n).unwrap(), expected, 1e-12);
        }
        // 4 x 4 midpoint grid in d = 2: exactly 1/12 up to rounding.
        assert_rel(sukharev_error(2, 16).unwrap(), 0.08333333333333333, 1e-15);
    }

    #[test]
    fn certificate_frozen_grid() {
        let cases: [(u64, u32, f64, f64); 5] = [
            (16, 2, 0.01, 0.7540556543870013),
            (10, 2, 0.01, 0.8462847839918758),
            (100, 3, 0.01, 0.809420892159254),
            (1000, 5, 0.01, 0.9707050912716241),
            (5, 2, 0.02, 0.6925695679837516),
        ];
        for (n, d, delta, expected) in cases {
            assert_rel(fooling_certificate(n, d, delta).unwrap(), expected, 1e-12);
        }
    }

    #[test]
    fn certificate_vacuous_and_unsupported() {
        // Large delta / n drives the covered volume past 1: certificate 0.
        assert_eq!(fooling_certificate(1000, 2, 0.5).unwrap(), 0.0);
        assert!(matches!(
            fooling_certificate(16, 1, 0.01),
            Err(Error::Unsupported(_))
        ));
        assert!(fooling_certificate(0, 2, 0.01).is_err());
    }

    #[test]
    fn delta_for_p_substitution_identity() {
        // Substituting delta_for_p into the plain-class bound must
        // reproduce the smoothed-class bound identically.
        for d in [2u32, 5, 10, 100] {
            for r in [1u32, 2, 3] {
                for p in [0.1, 0.25, 0.4] {
                    let delta = delta_for_p(d, r, p).unwrap();
                    let via_thm2 = min_points_thm2(0.5, d, delta).unwrap();
                    let direct = min_points_thm3(0.5, d, r, p).unwrap();
                    assert_rel(via_thm2, direct, 1e-12);
                }
            }
        }
    }

    #[test]
    fn input_validation() {
        assert!(min_points_thm2(1.0, 2, 0.1).is_err());
        assert!(min_points_thm2(-0.1, 2, 0.1).is_err());
        assert!(min_points_thm2(0.5, 0, 0.1).is_err());
        assert!(min_points_thm2(0.5, 2, 0.0).is_err());
        assert!(min_points_thm2(0.5, 2, 1.1).is_err());
        assert!(min_points_thm3(0.5, 2, 0, 0.25).is_err());
        assert!(min_points_thm3(0.5, 2, 1, 0.5).is_err());
        assert!(delta_for_p(2, 1, 0.6).is_err());
        assert!(sukharev_error(0, 5).is_err());
        assert!(sukharev_error(2, 0).is_err());
        // eps = 0 is allowed: the bound is still meaningful there.
        assert!(min_points_thm3(0.0, 4, 1, 0.25).is_ok());
    }

    #[test]
    fn registry_dispatch_matches_direct_calls() {
        let params = BoundParams {
            d: Some(10),
            delta: Some(0.0403278),
            eps: Some(0.5),
            ..BoundParams::default()
        };
        let report = find_formula("thm2").unwrap().evaluate(&params).unwrap();
        assert_eq!(report.formula_id, FormulaId::Thm2);
        assert_rel(report.log_value, 6.238486816187936, 1e-12);
        assert_rel(report.value.unwrap(), 6.238486816187936f64.exp(), 1e-12);

        let params = BoundParams {
            d: Some(2),
            n: Some(16),
            delta: Some(0.01),
            ..BoundParams::default()
        };
        let report = find_formula("certificate").unwrap().evaluate(&params).unwrap();
        assert_rel(report.value.unwrap(), 0.7540556543870013, 1e-12);

        assert!(find_formula("nope").is_err());
        assert_eq!(formula_registry().len(), 5);
    }

    #[test]
    fn registry_reports_missing_flags() {
        let err = find_formula("thm3")
            .unwrap()
            .evaluate(&BoundParams {
                d: Some(2),
                ..BoundParams::default()
            })
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("--eps") && msg.contains("thm3"), "{msg}");
    }

    #[test]
    fn overflowing_log_value_serializes_without_plain_value() {
        let report = find_formula("thm3")
            .unwrap()
            .evaluate(&BoundParams {
                d: Some(1_000_000),
                r: Some(2),
                eps: Some(0.5),
                p: Some(0.45),
                ..BoundParams::default()
            })
            .unwrap();
        assert!(report.value.is_none());
        assert_rel(report.log_value, 2072325.8905474606, 1e-12);
    }
}
