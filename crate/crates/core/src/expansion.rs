//! Empirical and population Edgeworth expansions for standardized counts.

use crate::counts::{binom, LocalStats};
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, pairwise_sum_by, Scalar};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub use crate::population::{population_coefficients, McSizes, MomentErrors};

/// Standard normal CDF.
pub fn phi_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn phi_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffSource {
    Empirical,
    Population,
}

/// Moments defining `Ĝn`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeworthCoefficients<T> {
    pub n: usize,
    pub r: usize,
    pub tau: T,
    /// `E g1³`
    pub m3: T,
    /// `E g1(X1) g1(X2) g̃2(X1, X2)`
    pub m112: T,
    pub source: CoeffSource,
    pub errors: Option<MomentErrors>,
}

/// `(1/n) Σ ĝ1³` and `(1/C(n,2)) Σ_{i<j} g̃2(i,j) ĝ1(i) ĝ1(j)`.
pub fn empirical_coefficients<T: Scalar>(stats: &LocalStats<T>) -> Result<EdgeworthCoefficients<T>> {
    let h2 = stats.h2.as_ref().ok_or(Error::MissingPairwise)?;
    if !(stats.tau_hat > T::zero()) {
        return Err(Error::Degenerate(format!("tau_hat = {}", stats.tau_hat)));
    }
    let n = stats.n();
    let nn = T::from_usize(n).unwrap();
    let g = &stats.g1;
    let m3 = pairwise_sum_by(g, |x| x * x * x) / nn;
    // Σ_{i<j} g̃2 g_i g_j = ½ [gᵀ H2 g − t((Σg)² − Σg²)]
    let rows: Vec<T> = (0..n)
        .map(|i| {
            let mut s = T::zero();
            for (&h, &gj) in h2.row(i).iter().zip(g) {
                s += h * gj;
            }
            g[i] * s
        })
        .collect();
    let sg = pairwise_sum(g);
    let sg2 = pairwise_sum_by(g, |x| x * x);
    let half = T::lit(0.5) * (pairwise_sum(&rows) - stats.t_hat * (sg * sg - sg2));
    let m112 = half / T::lit(binom(n, 2) as f64);
    Ok(EdgeworthCoefficients {
        n,
        r: stats.r(),
        tau: stats.tau_hat,
        m3,
        m112,
        source: CoeffSource::Empirical,
        errors: None,
    })
}

impl<T: Scalar> EdgeworthCoefficients<T> {
    /// `[m3 + 3(r−1) m112] / τ³`
    pub fn skew(&self) -> T {
        let r1 = T::from_usize(self.r - 1).unwrap();
        (self.m3 + T::lit(3.0) * r1 * self.m112) / (self.tau * self.tau * self.tau)
    }

    /// Standardized polynomial: `Gn = Φ + n^{-1/2} p1 φ`.
    pub fn p1(&self, x: T) -> T {
        -(x * x - T::one()) * self.skew() / T::lit(6.0)
    }

    /// Studentized polynomial `q1(x) = τ⁻³ [m3 (2x²+1)/6 + (r−1) m112 (x²+1)/2]`.
    pub fn q1(&self, x: T) -> T {
        let r1 = T::from_usize(self.r - 1).unwrap();
        let x2 = x * x;
        (self.m3 * (T::lit(2.0) * x2 + T::one()) / T::lit(6.0) + r1 * self.m112 * (x2 + T::one()) / T::lit(2.0))
            / (self.tau * self.tau * self.tau)
    }

    /// `(B1, B2)` with `q1(x) = −{B1 + B2 (x²−1)/6}`.
    pub fn b_pair(&self) -> (T, T) {
        let r1 = T::from_usize(self.r - 1).unwrap();
        let t3 = self.tau * self.tau * self.tau;
        let b1 = -T::lit(0.5) * (self.m3 + T::lit(2.0) * r1 * self.m112) / t3;
        let b2 = (-T::lit(2.0) * self.m3 - T::lit(3.0) * r1 * self.m112) / t3;
        (b1, b2)
    }

    pub fn cast<U: Scalar>(&self) -> EdgeworthCoefficients<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        EdgeworthCoefficients {
            n: self.n,
            r: self.r,
            tau: c(self.tau),
            m3: c(self.m3),
            m112: c(self.m112),
            source: self.source,
            errors: self.errors,
        }
    }
}

/// `Ĝn(u) = Φ(u) − (u²−1) φ(u) / (6 √n τ³) · [m3 + 3(r−1) m112]`, unclipped.
pub fn gn_hat<T: Scalar>(coeffs: &EdgeworthCoefficients<T>, u: T) -> T {
    let uf = u.to_f64_lossy();
    let n = coeffs.n as f64;
    T::lit(phi_cdf(uf)) + T::lit(phi_pdf(uf) / n.sqrt()) * coeffs.p1(u)
}

/// `Ĝn` on a grid, clipped to `[0,1]` and made nondecreasing; for plotting only.
pub fn gn_hat_monotone<T: Scalar>(coeffs: &EdgeworthCoefficients<T>, grid: &[T]) -> Vec<T> {
    let mut run = T::zero();
    grid.iter()
        .map(|&u| {
            let v = gn_hat(coeffs, u).max(T::zero()).min(T::one());
            run = run.max(v);
            run
        })
        .collect()
}

/// `Φ(x) + n^{-1/2} poly(x) φ(x)` on a grid.
pub fn one_term_expansion(n: usize, grid: &[f64], poly: impl Fn(f64) -> f64) -> Vec<f64> {
    let s = (n as f64).sqrt();
    grid.iter().map(|&x| phi_cdf(x) + poly(x) * phi_pdf(x) / s).collect()
}

/// The 61 points −3.0, −2.9, …, 3.0.
pub fn standard_grid() -> Vec<f64> {
    (0..=60).map(|k| (k as f64 - 30.0) / 10.0).collect()
}

/// Grid `lo, lo+step, …` up to `hi` inclusive (with a half-step tolerance).
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) {
        return Err(Error::InvalidArgument(format!("bad grid {lo}:{hi}:{step}")));
    }
    let k = ((hi - lo) / step + 0.5).floor() as usize;
    Ok((0..=k).map(|i| lo + i as f64 * step).collect())
}

/// `max |f − g|` over a common grid.
pub fn sup_distance<T: Scalar>(f: &[T], g: &[T]) -> Result<T> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch { left: f.len(), right: g.len() });
    }
    Ok(f.iter().zip(g).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), |m, x| m.max(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(m3: f64, m112: f64) -> EdgeworthCoefficients<f64> {
        EdgeworthCoefficients { n: 160, r: 3, tau: 0.2, m3, m112, source: CoeffSource::Empirical, errors: None }
    }

    #[test]
    fn normal_helpers() {
        assert!((phi_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((phi_cdf(1.959963984540054) - 0.975).abs() < 1e-15);
        assert!((phi_cdf(-1.959963984540054) - 0.025).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
        assert!((phi_pdf(0.0) - 0.3989422804014327).abs() < 1e-16);
    }

    #[test]
    fn zero_moments_reduce_to_phi() {
        let c = coeffs(0.0, 0.0);
        for u in standard_grid() {
            assert_eq!(gn_hat(&c, u), phi_cdf(u));
        }
    }

    #[test]
    fn unit_points_are_fixed() {
        let c = coeffs(0.3, -0.2);
        for u in [-1.0, 1.0] {
            assert!((gn_hat(&c, u) - phi_cdf(u)).abs() < 1e-16);
        }
    }

    #[test]
    fn transcription() {
        // Φ(u) − (u²−1)φ(u)/(6√n τ³)[m3 + 3(r−1)m112] written out by hand
        let c = coeffs(0.001, 0.0005);
        for &u in &[-2.5, -0.3, 0.0, 0.7, 2.0] {
            let corr = (u * u - 1.0) * phi_pdf(u) / (6.0 * 160f64.sqrt() * 0.008) * (0.001 + 6.0 * 0.0005);
            assert!((gn_hat(&c, u) - (phi_cdf(u) - corr)).abs() < 1e-12);
        }
    }

    #[test]
    fn correction_is_even() {
        let c = coeffs(0.01, 0.002);
        for u in standard_grid() {
            let a = gn_hat(&c, u) - phi_cdf(u);
            let b = gn_hat(&c, -u) - phi_cdf(-u);
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn b_pair_reproduces_q1() {
        let c = coeffs(0.004, -0.001);
        let (b1, b2) = c.b_pair();
        for x in standard_grid() {
            let q = -(b1 + b2 * (x * x - 1.0) / 6.0);
            assert!((q - c.q1(x)).abs() < 1e-9 * c.q1(x).abs().max(1.0));
        }
        assert!((c.p1(0.0) - c.q1(0.0)).abs() < 1e-9);
    }

    #[test]
    fn sup_distance_cases() {
        let g = standard_grid();
        let f: Vec<f64> = g.iter().map(|&x| phi_cdf(x)).collect();
        assert_eq!(sup_distance(&f, &f).unwrap(), 0.0);
        let h: Vec<f64> = f.iter().map(|x| x + 0.01).collect();
        assert!((sup_distance(&f, &h).unwrap() - 0.01).abs() < 1e-12);
        assert!(sup_distance(&f, &h[1..]).is_err());
        assert_eq!(g.len(), 61);
        assert_eq!(grid(-3.0, 3.0, 0.1).unwrap().len(), 61);
    }

    #[test]
    fn monotone_variant_is_monotone() {
        let c = coeffs(0.5, 0.5);
        let v = gn_hat_monotone(&c, &standard_grid());
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}
