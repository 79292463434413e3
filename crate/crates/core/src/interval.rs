//! Bootstrap percentile intervals and their second-order shift correction.
//!
//! Quantiles use the inverse empirical CDF: the `p`-quantile of sorted
//! values `x_(1) ≤ … ≤ x_(B)` is `x_(⌈pB⌉)` (clamped to `x_(1)`).

use crate::bootstrap::BootstrapRun;
use crate::counts::LocalStats;
use crate::error::{Error, Result};
use crate::expansion::{empirical_coefficients, normal_quantile};
use crate::scalar::Scalar;
use crate::smooth::SmoothBootOutput;
use serde::Serialize;

pub const MIN_REPLICATES: usize = 100;

/// `p̂1`, `q̂1` evaluated at an endpoint's normal quantile, and the resulting shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EndpointTerms<T> {
    pub z: T,
    pub p1: T,
    pub q1: T,
    pub shift: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CiResult<T> {
    pub level: f64,
    pub lower: T,
    pub upper: T,
    pub corrected: bool,
    /// Terms at the lower and upper endpoint when corrected.
    pub correction_terms: Option<[EndpointTerms<T>; 2]>,
}

impl<T: Scalar> CiResult<T> {
    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn contains(&self, x: T) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Inverse-ECDF quantile of sorted values.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: f64) -> T {
    let b = sorted.len();
    let k = (p * b as f64).ceil() as usize;
    sorted[k.clamp(1, b) - 1]
}

fn sorted<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite replicates"));
    v
}

fn check(b: usize, level: f64) -> Result<()> {
    if b < MIN_REPLICATES {
        return Err(Error::TooFewReplicates { got: b, min: MIN_REPLICATES });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level {level} outside (0,1)")));
    }
    Ok(())
}

/// `(ŷ_{(1−α)/2}, ŷ_{(1+α)/2})` from unstandardized replicate values.
pub fn percentile_ci_values<T: Scalar>(raw: &[T], level: f64) -> Result<CiResult<T>> {
    check(raw.len(), level)?;
    let s = sorted(raw);
    Ok(CiResult {
        level,
        lower: quantile_sorted(&s, (1.0 - level) / 2.0),
        upper: quantile_sorted(&s, (1.0 + level) / 2.0),
        corrected: false,
        correction_terms: None,
    })
}

/// Percentile interval of `center + scale · replicate`.
pub fn percentile_ci<T: Scalar>(run: &BootstrapRun<T>, level: f64) -> Result<CiResult<T>> {
    percentile_ci_values(&run.raw(), level)
}

/// Shifts each endpoint by `n⁻¹ σ {p̂1(z) + q̂1(z)}`, `z` the normal quantile of the endpoint's level.
///
/// `sigma` is the order-one scale of the statistic (`r τ̂` for counts,
/// `σ̃_f` for smooth functionals).
pub fn corrected_ci_values<T: Scalar>(
    raw: &[T],
    level: f64,
    n: usize,
    sigma: T,
    p1: Option<&dyn Fn(T) -> T>,
    q1: Option<&dyn Fn(T) -> T>,
) -> Result<CiResult<T>> {
    let (Some(p1), Some(q1)) = (p1, q1) else {
        return Err(Error::MissingCoefficients("both p1 and q1 are required".into()));
    };
    let base = percentile_ci_values(raw, level)?;
    let k = sigma / T::from_usize(n).unwrap();
    let terms = |beta: f64| {
        let z = T::lit(normal_quantile(beta));
        let (a, b) = (p1(z), q1(z));
        EndpointTerms { z, p1: a, q1: b, shift: k * (a + b) }
    };
    let lo = terms((1.0 - level) / 2.0);
    let hi = terms((1.0 + level) / 2.0);
    let (mut lower, mut upper) = (base.lower + lo.shift, base.upper + hi.shift);
    if lower > upper {
        std::mem::swap(&mut lower, &mut upper);
    }
    Ok(CiResult { level, lower, upper, corrected: true, correction_terms: Some([lo, hi]) })
}

pub fn corrected_ci<T: Scalar>(
    run: &BootstrapRun<T>,
    level: f64,
    p1: Option<&dyn Fn(T) -> T>,
    q1: Option<&dyn Fn(T) -> T>,
    sigma: T,
) -> Result<CiResult<T>> {
    corrected_ci_values(&run.raw(), level, run.n, sigma, p1, q1)
}

/// Corrected interval for a count functional using its empirical expansion.
pub fn corrected_count_ci<T: Scalar>(run: &BootstrapRun<T>, stats: &LocalStats<T>, level: f64) -> Result<CiResult<T>> {
    let co = empirical_coefficients(stats)?;
    let sigma = T::from_usize(stats.r()).unwrap() * stats.tau_hat;
    let p1 = |x: T| co.p1(x);
    let q1 = |x: T| co.q1(x);
    corrected_ci(run, level, Some(&p1), Some(&q1), sigma)
}

pub fn percentile_smooth_ci<T: Scalar>(out: &SmoothBootOutput<T>, level: f64) -> Result<CiResult<T>> {
    percentile_ci_values(&out.raw(), level)
}

/// Corrected interval for a smooth functional; needs the studentized pair.
pub fn corrected_smooth_ci<T: Scalar>(out: &SmoothBootOutput<T>, level: f64) -> Result<CiResult<T>> {
    if out.b1_hat.is_none() || out.b2_hat.is_none() {
        return Err(Error::MissingCoefficients(format!("no studentized pair for {}", out.function)));
    }
    let p1 = |x: T| out.p1(x);
    let q1 = |x: T| out.q1(x).expect("checked above");
    corrected_ci_values(&out.raw(), level, out.n, out.sigma_f_tilde, Some(&p1), Some(&q1))
}

/// Per-interval level `1 − (1 − family)/m`.
pub fn bonferroni_level(m: usize, family_level: f64) -> f64 {
    1.0 - (1.0 - family_level) / m as f64
}

/// Recomputes each percentile interval at the Bonferroni-adjusted level.
pub fn bonferroni<T: Scalar>(runs: &[BootstrapRun<T>], family_level: f64) -> Result<Vec<CiResult<T>>> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("bonferroni needs at least one interval".into()));
    }
    let level = bonferroni_level(runs.len(), family_level);
    runs.iter().map(|r| percentile_ci(r, level)).collect()
}
