//! Smooth functions of several count functionals: bootstrap of
//! `S* = √n {f(u*) − f(û)} / σ̃_f`, its one-term expansion, and the
//! studentized correction pair `(B1, B2)`.

use crate::bootstrap::{linear_delta, quadratic_term, weights_as, MultiplierSpec};
use crate::counts::LocalStats;
use crate::error::{Error, Result};
use crate::motif::{Motif, MotifKind};
use crate::scalar::{pairwise_sum, Scalar};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

pub type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum FunctionKind {
    /// `f(x) = x`
    Identity,
    /// `α x + β y`
    LinComb { alpha: f64, beta: f64 },
    /// `x y`
    Product,
    /// `c x / y`
    Ratio { c: f64 },
    /// `x² y²`
    SquareProduct,
    Custom { name: String, d: usize, f: CustomFn },
}

impl fmt::Debug for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionKind::Identity => write!(f, "Identity"),
            FunctionKind::LinComb { alpha, beta } => write!(f, "LinComb({alpha}, {beta})"),
            FunctionKind::Product => write!(f, "Product"),
            FunctionKind::Ratio { c } => write!(f, "Ratio({c})"),
            FunctionKind::SquareProduct => write!(f, "SquareProduct"),
            FunctionKind::Custom { name, d, .. } => write!(f, "Custom({name}, d={d})"),
        }
    }
}

/// A function `f: R^d → R` together with the motifs feeding each coordinate.
#[derive(Clone, Debug)]
pub struct SmoothFunctional {
    pub kind: FunctionKind,
    pub motifs: Vec<Motif>,
}

impl SmoothFunctional {
    pub fn identity(motif: Motif) -> Self {
        SmoothFunctional { kind: FunctionKind::Identity, motifs: vec![motif] }
    }

    fn tv(kind: FunctionKind) -> Self {
        SmoothFunctional { kind, motifs: vec![Motif::triangle(), Motif::twostar()] }
    }

    pub fn lincomb(alpha: f64, beta: f64) -> Self {
        Self::tv(FunctionKind::LinComb { alpha, beta })
    }

    pub fn product() -> Self {
        Self::tv(FunctionKind::Product)
    }

    /// Transitivity-type ratio `c T / V`.
    pub fn ratio(c: f64) -> Self {
        Self::tv(FunctionKind::Ratio { c })
    }

    pub fn square_product() -> Self {
        Self::tv(FunctionKind::SquareProduct)
    }

    pub fn custom(name: &str, motifs: Vec<Motif>, f: CustomFn) -> Self {
        let d = motifs.len();
        SmoothFunctional { kind: FunctionKind::Custom { name: name.into(), d, f }, motifs }
    }

    /// Parses `T`, `3T+5V`, `TV`, `3T/V`, `T2V2`, `aT+bV`, `cT/V`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.replace(' ', "");
        let num = |x: &str| -> Result<f64> {
            if x.is_empty() {
                Ok(1.0)
            } else {
                x.parse().map_err(|_| Error::InvalidArgument(format!("bad coefficient in {s:?}")))
            }
        };
        match t.as_str() {
            "T" => return Ok(Self::identity(Motif::triangle())),
            "TV" => return Ok(Self::product()),
            "T2V2" => return Ok(Self::square_product()),
            _ => {}
        }
        if let Some(c) = t.strip_suffix("T/V") {
            return Ok(Self::ratio(num(c)?));
        }
        if let (Some(p), true) = (t.find("T+"), t.ends_with('V')) {
            return Ok(Self::lincomb(num(&t[..p])?, num(&t[p + 2..t.len() - 1])?));
        }
        Err(Error::InvalidArgument(format!("unknown function {s:?}")))
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FunctionKind::Identity => "T".into(),
            FunctionKind::LinComb { alpha, beta } => format!("{alpha}T+{beta}V"),
            FunctionKind::Product => "TV".into(),
            FunctionKind::Ratio { c } => format!("{c}T/V"),
            FunctionKind::SquareProduct => "T2V2".into(),
            FunctionKind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn d(&self) -> usize {
        self.motifs.len()
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, FunctionKind::Custom { .. })
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let c = |v: f64| T::lit(v);
        match &self.kind {
            FunctionKind::Identity => x[0],
            FunctionKind::LinComb { alpha, beta } => c(*alpha) * x[0] + c(*beta) * x[1],
            FunctionKind::Product => x[0] * x[1],
            FunctionKind::Ratio { c: k } => c(*k) * x[0] / x[1],
            FunctionKind::SquareProduct => x[0] * x[0] * x[1] * x[1],
            FunctionKind::Custom { f, .. } => {
                let v: Vec<f64> = x.iter().map(|t| t.to_f64_lossy()).collect();
                T::lit(f(&v))
            }
        }
    }

    pub fn grad<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let c = |v: f64| T::lit(v);
        match &self.kind {
            FunctionKind::Identity => vec![T::one()],
            FunctionKind::LinComb { alpha, beta } => vec![c(*alpha), c(*beta)],
            FunctionKind::Product => vec![x[1], x[0]],
            FunctionKind::Ratio { c: k } => vec![c(*k) / x[1], -c(*k) * x[0] / (x[1] * x[1])],
            FunctionKind::SquareProduct => {
                let two = c(2.0);
                vec![two * x[0] * x[1] * x[1], two * x[0] * x[0] * x[1]]
            }
            FunctionKind::Custom { .. } => self.fd_grad(x),
        }
    }

    /// Row-major `d × d` Hessian.
    pub fn hess<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let c = |v: f64| T::lit(v);
        let z = T::zero();
        match &self.kind {
            FunctionKind::Identity => vec![z],
            FunctionKind::LinComb { .. } => vec![z; 4],
            FunctionKind::Product => vec![z, T::one(), T::one(), z],
            FunctionKind::Ratio { c: k } => {
                let k = c(*k);
                let off = -k / (x[1] * x[1]);
                vec![z, off, off, c(2.0) * k * x[0] / (x[1] * x[1] * x[1])]
            }
            FunctionKind::SquareProduct => {
                let off = c(4.0) * x[0] * x[1];
                vec![c(2.0) * x[1] * x[1], off, off, c(2.0) * x[0] * x[0]]
            }
            FunctionKind::Custom { .. } => self.fd_hess(x),
        }
    }

    fn step(x: f64) -> f64 {
        f64::EPSILON.cbrt() * x.abs().max(1.0)
    }

    fn step2(x: f64) -> f64 {
        f64::EPSILON.powf(0.25) * x.abs().max(1.0)
    }

    fn fd_grad<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let base: Vec<f64> = x.iter().map(|t| t.to_f64_lossy()).collect();
        (0..base.len())
            .map(|i| {
                let h = Self::step(base[i]);
                let mut p = base.clone();
                let mut m = base.clone();
                p[i] += h;
                m[i] -= h;
                T::lit((self.eval_f64(&p) - self.eval_f64(&m)) / (2.0 * h))
            })
            .collect()
    }

    fn fd_hess<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let base: Vec<f64> = x.iter().map(|t| t.to_f64_lossy()).collect();
        let d = base.len();
        let mut out = vec![T::zero(); d * d];
        for i in 0..d {
            for j in i..d {
                let (hi, hj) = (Self::step2(base[i]), Self::step2(base[j]));
                let at = |si: f64, sj: f64| {
                    let mut p = base.clone();
                    p[i] += si * hi;
                    p[j] += sj * hj;
                    self.eval_f64(&p)
                };
                let v = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * hi * hj);
                out[i * d + j] = T::lit(v);
                out[j * d + i] = T::lit(v);
            }
        }
        out
    }

    fn eval_f64(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    /// True for the pair accepted by the studentized machinery.
    fn studentizable(&self) -> bool {
        match self.d() {
            1 => matches!(self.kind, FunctionKind::Identity),
            2 => self.motifs[0].kind() == MotifKind::Triangle && self.motifs[1].kind() == MotifKind::Twostar,
            _ => false,
        }
    }
}

/// ρ-normalized moments shared by every smooth-functional computation.
struct Scaled<'a, T> {
    stats: &'a [LocalStats<T>],
    n: usize,
    r: Vec<T>,
    /// `ρ^{s_i}`
    pw: Vec<T>,
    /// `T̂_i / ρ^{s_i}`
    u: Vec<T>,
    /// `ĝ1⁽ⁱ⁾ / ρ^{s_i}`
    z: Vec<Vec<T>>,
}

impl<'a, T: Scalar> Scaled<'a, T> {
    fn new(f: &SmoothFunctional, stats: &'a [LocalStats<T>], rho: T) -> Result<Self> {
        if stats.len() != f.d() {
            return Err(Error::LengthMismatch { left: f.d(), right: stats.len() });
        }
        if !(rho > T::zero()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        let n = stats[0].n();
        for (s, m) in stats.iter().zip(&f.motifs) {
            if s.n() != n {
                return Err(Error::LengthMismatch { left: n, right: s.n() });
            }
            if !s.is_exact() {
                return Err(Error::InvalidArgument("smooth functionals need exact statistics".into()));
            }
            if s.motif.upper_bits() != m.upper_bits() || s.r() != m.r() {
                return Err(Error::InvalidArgument(format!("statistics for {} where {} expected", s.motif.name(), m.name())));
            }
        }
        let pw: Vec<T> = stats.iter().map(|s| rho.powi(s.motif.s() as i32)).collect();
        Ok(Scaled {
            stats,
            n,
            r: stats.iter().map(|s| T::from_usize(s.r()).unwrap()).collect(),
            u: stats.iter().zip(&pw).map(|(s, &p)| s.t_hat / p).collect(),
            z: stats.iter().zip(&pw).map(|(s, &p)| s.g1.iter().map(|&g| g / p).collect()).collect(),
            pw,
        })
    }

    fn d(&self) -> usize {
        self.stats.len()
    }

    fn nn(&self) -> T {
        T::from_usize(self.n).unwrap()
    }

    /// `Ê[z_i z_j]`
    fn m2(&self, i: usize, j: usize) -> T {
        let v: Vec<T> = self.z[i].iter().zip(&self.z[j]).map(|(&a, &b)| a * b).collect();
        pairwise_sum(&v) / self.nn()
    }

    /// `Ê[z_i z_j z_k]`
    fn m3(&self, i: usize, j: usize, k: usize) -> T {
        let v: Vec<T> = (0..self.n).map(|l| self.z[i][l] * self.z[j][l] * self.z[k][l]).collect();
        pairwise_sum(&v) / self.nn()
    }

    /// `(1/(n(n−1))) Σ_{l≠m} z_i(l) z_j(m) g̃2⁽ᵏ⁾(l,m) / ρ^{s_k}`
    fn m112(&self, i: usize, j: usize, k: usize) -> Result<T> {
        let st = &self.stats[k];
        let h2 = st.h2.as_ref().ok_or(Error::MissingPairwise)?;
        let (a, b) = (&self.z[i], &self.z[j]);
        let rows: Vec<T> = (0..self.n)
            .map(|l| {
                let mut s = T::zero();
                for (&h, &bm) in h2.row(l).iter().zip(b) {
                    s += h * bm;
                }
                a[l] * s
            })
            .collect();
        let ab: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
        let q = pairwise_sum(&rows) - st.t_hat * (pairwise_sum(a) * pairwise_sum(b) - pairwise_sum(&ab));
        let nn = self.nn();
        Ok(q / (nn * (nn - T::one())) / self.pw[k])
    }

    /// `λ_ij = Ê[y_i y_j]` with `y_i = r_i z_i`.
    fn lambda(&self) -> Vec<T> {
        let d = self.d();
        let mut l = vec![T::zero(); d * d];
        for i in 0..d {
            for j in i..d {
                let v = self.r[i] * self.r[j] * self.m2(i, j);
                l[i * d + j] = v;
                l[j * d + i] = v;
            }
        }
        l
    }
}

/// Plug-in coefficients of the bootstrap expansion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothCoefficients<T> {
    pub f_hat: T,
    pub sigma_f: T,
    pub a1: T,
    pub a2: T,
}

fn variance<T: Scalar>(a: &[T], lambda: &[T]) -> Result<T> {
    let d = a.len();
    let mut v = T::zero();
    for i in 0..d {
        for j in 0..d {
            v += a[i] * a[j] * lambda[i * d + j];
        }
    }
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::Degenerate(format!("sigma_f^2 = {v}")));
    }
    Ok(v)
}

/// `σ̃_f` from `Σ âᵢ âⱼ Ê[y_i y_j]`.
pub fn sigma_f_emp<T: Scalar>(f: &SmoothFunctional, stats: &[LocalStats<T>], rho: T) -> Result<T> {
    let sc = Scaled::new(f, stats, rho)?;
    Ok(variance(&f.grad(&sc.u), &sc.lambda())?.sqrt())
}

/// `f(û)` on the ρ-normalized coordinates.
pub fn f_hat<T: Scalar>(f: &SmoothFunctional, stats: &[LocalStats<T>], rho: T) -> Result<T> {
    Ok(f.eval(&Scaled::new(f, stats, rho)?.u))
}

/// `σ̃_f`, `Ã1` and `Ã2`.
pub fn smooth_coefficients<T: Scalar>(f: &SmoothFunctional, stats: &[LocalStats<T>], rho: T) -> Result<SmoothCoefficients<T>> {
    let sc = Scaled::new(f, stats, rho)?;
    let d = sc.d();
    let a = f.grad(&sc.u);
    let h = f.hess(&sc.u);
    let lam = sc.lambda();
    let sigma2 = variance(&a, &lam)?;
    let mut a1 = T::zero();
    for i in 0..d {
        for j in 0..d {
            a1 += h[i * d + j] * lam[i * d + j];
        }
    }
    a1 *= T::lit(0.5);
    let mut a2 = T::zero();
    let three = T::lit(3.0);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let aaa = a[i] * a[j] * a[k];
                let y3 = sc.r[i] * sc.r[j] * sc.r[k] * sc.m3(i, j, k);
                let kap = sc.r[i] * sc.r[j] * sc.r[k] * (sc.r[k] - T::one()) * sc.m112(i, j, k)?;
                a2 += aaa * (y3 + three * kap);
                for t in 0..d {
                    a2 += three * a[i] * a[j] * h[k * d + t] * lam[i * d + k] * lam[j * d + t];
                }
            }
        }
    }
    Ok(SmoothCoefficients { f_hat: f.eval(&sc.u), sigma_f: sigma2.sqrt(), a1, a2 })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothBootOutput<T> {
    pub function: String,
    pub n: usize,
    pub b: usize,
    pub seed: u64,
    pub f_hat: T,
    pub sigma_f_tilde: T,
    pub a1_tilde: T,
    pub a2_tilde: T,
    /// Standardized `S*` values.
    pub replicates: Vec<T>,
    pub b1_hat: Option<T>,
    pub b2_hat: Option<T>,
}

impl<T: Scalar> SmoothBootOutput<T> {
    /// `p̃1(x) = −{Ã1/σ̃ + Ã2 (x²−1) / (6σ̃³)}`
    pub fn p1(&self, x: T) -> T {
        let s = self.sigma_f_tilde;
        -(self.a1_tilde / s + self.a2_tilde * (x * x - T::one()) / (T::lit(6.0) * s * s * s))
    }

    /// `q̂1(x) = −{B̂1 + B̂2 (x²−1)/6}` when the studentized pair is available.
    pub fn q1(&self, x: T) -> Option<T> {
        Some(-(self.b1_hat? + self.b2_hat? * (x * x - T::one()) / T::lit(6.0)))
    }

    /// Unstandardized `f(u*)` values.
    pub fn raw(&self) -> Vec<T> {
        let k = self.sigma_f_tilde / T::from_usize(self.n).unwrap().sqrt();
        self.replicates.iter().map(|&s| self.f_hat + k * s).collect()
    }
}

/// Per-replicate coordinate perturbations `ΔT_i` (MB-Q) from one shared weight draw.
pub fn coordinate_deltas<T: Scalar>(stats: &[LocalStats<T>], spec: &MultiplierSpec, replicate: u64) -> Result<Vec<T>> {
    let n = stats.first().map_or(0, |s| s.n());
    let xi = weights_as::<T>(n, spec, replicate);
    stats.iter().map(|s| Ok(linear_delta(s, &xi) + quadratic_term(s, &xi)?)).collect()
}

/// `S*_j = √n {f(u*_j) − f(û)} / σ̃_f` with `u*` built coordinate-wise by MB-Q under shared weights.
pub fn bootstrap_smooth<T: Scalar>(
    f: &SmoothFunctional,
    stats: &[LocalStats<T>],
    rho: T,
    spec: &MultiplierSpec,
    b: usize,
) -> Result<SmoothBootOutput<T>> {
    if b == 0 {
        return Err(Error::InvalidArgument("B must be positive".into()));
    }
    if stats.iter().any(|s| s.h2.is_none()) {
        return Err(Error::MissingPairwise);
    }
    let co = smooth_coefficients(f, stats, rho)?;
    let sc = Scaled::new(f, stats, rho)?;
    let sqn = sc.nn().sqrt();
    let reps: Result<Vec<T>> = (0..b)
        .into_par_iter()
        .map(|j| {
            let dt = coordinate_deltas(stats, spec, j as u64)?;
            let us: Vec<T> = (0..sc.d()).map(|i| sc.u[i] + dt[i] / sc.pw[i]).collect();
            Ok(sqn * (f.eval(&us) - co.f_hat) / co.sigma_f)
        })
        .collect();
    let (b1, b2) = if f.studentizable() {
        let (x, y) = studentized_coeffs(f, stats, rho)?;
        (Some(x), Some(y))
    } else {
        (None, None)
    };
    Ok(SmoothBootOutput {
        function: f.name(),
        n: sc.n,
        b,
        seed: spec.seed,
        f_hat: co.f_hat,
        sigma_f_tilde: co.sigma_f,
        a1_tilde: co.a1,
        a2_tilde: co.a2,
        replicates: reps?,
        b1_hat: b1,
        b2_hat: b2,
    })
}

/// Index of an extended coordinate: a density or a pair `(p, q)`, `p ≤ q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ext {
    Density(usize),
    Pair(usize, usize),
}

/// Density terms, cross terms `p < q`, then squares.
fn extended_index(d: usize) -> Vec<Ext> {
    let mut v: Vec<Ext> = (0..d).map(Ext::Density).collect();
    for p in 0..d {
        for q in p + 1..d {
            v.push(Ext::Pair(p, q));
        }
    }
    v.extend((0..d).map(|p| Ext::Pair(p, p)));
    v
}

/// `(B̂1, B̂2)` of the studentized statistic `√n {f(û) − f(μ)} / σ̂_f`.
pub fn studentized_coeffs<T: Scalar>(f: &SmoothFunctional, stats: &[LocalStats<T>], rho: T) -> Result<(T, T)> {
    if !f.studentizable() {
        return Err(Error::Unsupported(format!(
            "studentized correction for {} on {:?}",
            f.name(),
            f.motifs.iter().map(|m| m.name()).collect::<Vec<_>>()
        )));
    }
    let co = smooth_coefficients(f, stats, rho)?;
    let sc = Scaled::new(f, stats, rho)?;
    let d = sc.d();
    let a = f.grad(&sc.u);
    let h = f.hess(&sc.u);
    let lam = sc.lambda();
    let ext = extended_index(d);
    let two = T::lit(2.0);
    // Gradient of σ² as a function of the extended vector.
    let ru: T = (0..d).map(|j| a[j] * sc.r[j] * sc.u[j]).fold(T::zero(), |x, y| x + y);
    let c: Vec<T> = ext
        .iter()
        .map(|e| match *e {
            Ext::Density(k) => {
                let mut s = T::zero();
                for i in 0..d {
                    for j in 0..d {
                        s += h[i * d + k] * a[j] * lam[i * d + j];
                    }
                }
                two * s - two * a[k] * sc.r[k] * ru
            }
            Ext::Pair(p, q) if p == q => a[p] * a[p],
            Ext::Pair(p, q) => two * a[p] * a[q],
        })
        .collect();
    let one = T::one();
    let mut acc = T::zero();
    for i in 0..d {
        for (e, &ck) in ext.iter().zip(&c) {
            let mu = match *e {
                Ext::Density(k) => lam[i * d + k],
                Ext::Pair(p, q) => {
                    let (ri, rp, rq) = (sc.r[i], sc.r[p], sc.r[q]);
                    rp * sc.u[p] * rq * lam[i * d + q]
                        + rq * sc.u[q] * rp * lam[i * d + p]
                        + ri * rp * rq * sc.m3(i, p, q)
                        + (rq - one) * ri * rp * rq * sc.m112(i, p, q)?
                        + (rp - one) * ri * rp * rq * sc.m112(i, q, p)?
                }
            };
            acc += a[i] * ck * mu;
        }
    }
    let s = co.sigma_f;
    let b1 = co.a1 / s - T::lit(0.5) * acc / (s * s * s);
    let b2 = T::lit(6.0) * b1 - T::lit(6.0) * co.a1 / s + co.a2 / (s * s * s);
    Ok((b1, b2))
}
