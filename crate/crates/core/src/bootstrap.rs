//! Multiplier weights, the MB-L / MB-L-apx / MB-Q / MB-M bootstraps, and the
//! empirical-graphon and subsampling baselines.

use crate::counts::{binom, count_exact, LocalStats};
use crate::error::{Error, Result};
use crate::esp::esp;
use crate::graph::Graph;
use crate::motif::Motif;
use crate::rng::{domain, substream};
use crate::scalar::{pairwise_sum, Compensated, Scalar};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Weight law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLaw {
    /// `ξ = X·Y`, `X ~ N(1, 1/2)`, `Y ~ N(1, 1/3)`: mean, variance and third
    /// central moment all equal 1.
    GaussianProduct,
    /// `ξ ≡ 1`; test hook.
    Ones,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub law: WeightLaw,
    pub seed: u64,
}

impl MultiplierSpec {
    pub fn gaussian_product(seed: u64) -> Self {
        MultiplierSpec { law: WeightLaw::GaussianProduct, seed }
    }

    pub fn ones() -> Self {
        MultiplierSpec { law: WeightLaw::Ones, seed: 0 }
    }
}

/// Weights of replicate `j`; depends only on `(seed, j)`.
pub fn draw_weights(n: usize, spec: &MultiplierSpec, replicate: u64) -> Vec<f64> {
    match spec.law {
        WeightLaw::Ones => vec![1.0; n],
        WeightLaw::GaussianProduct => {
            let mut rng = substream(spec.seed ^ domain::WEIGHT, replicate, 0);
            let sx = 0.5f64.sqrt();
            let sy = (1.0f64 / 3.0).sqrt();
            (0..n)
                .map(|_| {
                    let zx: f64 = rng.sample(StandardNormal);
                    let zy: f64 = rng.sample(StandardNormal);
                    (1.0 + sx * zx) * (1.0 + sy * zy)
                })
                .collect()
        }
    }
}

/// Weights of replicate `j` converted to `T`.
pub fn weights_as<T: Scalar>(n: usize, spec: &MultiplierSpec, replicate: u64) -> Vec<T> {
    draw_weights(n, spec, replicate).into_iter().map(T::lit).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MB_M")]
    MbM,
    #[serde(rename = "MB_Q")]
    MbQ,
    #[serde(rename = "MB_L")]
    MbL,
    #[serde(rename = "MB_L_APX")]
    MbLApx,
    #[serde(rename = "EG")]
    Eg,
    #[serde(rename = "SS")]
    Ss,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::MbM => "MB-M",
            Method::MbQ => "MB-Q",
            Method::MbL => "MB-L",
            Method::MbLApx => "MB-L-apx",
            Method::Eg => "EG",
            Method::Ss => "SS",
        }
    }
}

/// Standardized replicates `(T* − center) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapRun<T> {
    pub method: Method,
    pub b: usize,
    pub seed: u64,
    pub n: usize,
    pub r: usize,
    pub center: T,
    pub scale: T,
    pub replicates: Vec<T>,
}

impl<T: Scalar> BootstrapRun<T> {
    /// Replicates on the raw statistic scale.
    pub fn raw(&self) -> Vec<T> {
        self.replicates.iter().map(|&z| self.center + self.scale * z).collect()
    }

    pub fn mean(&self) -> T {
        pairwise_sum(&self.replicates) / T::from_usize(self.b).unwrap()
    }
}

/// `(r/√n)·τ̂`; errors when `τ̂ = 0`.
pub fn standard_scale<T: Scalar>(stats: &LocalStats<T>) -> Result<T> {
    let n = T::from_usize(stats.n()).unwrap();
    let scale = T::from_usize(stats.r()).unwrap() / n.sqrt() * stats.tau_hat;
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(Error::Degenerate(format!("tau_hat = {}", stats.tau_hat)));
    }
    Ok(scale)
}

/// `(r/n) Σ (ξ_i − 1) g1(i)`
pub fn linear_delta<T: Scalar>(stats: &LocalStats<T>, xi: &[T]) -> T {
    let n = stats.n();
    let terms: Vec<T> = xi.iter().zip(&stats.g1).map(|(&x, &g)| (x - T::one()) * g).collect();
    T::from_usize(stats.r()).unwrap() / T::from_usize(n).unwrap() * pairwise_sum(&terms)
}

/// `r(r−1)/(n(n−1)) Σ_{i<j} (ξ_i − 1)(ξ_j − 1) g̃2(i,j)`
pub fn quadratic_term<T: Scalar>(stats: &LocalStats<T>, xi: &[T]) -> Result<T> {
    let h2 = stats.h2.as_ref().ok_or(Error::MissingPairwise)?;
    let n = stats.n();
    let a: Vec<T> = xi.iter().map(|&x| x - T::one()).collect();
    // aᵀ G̃ a with G̃ = H2 − t(J − I): aᵀ H2 a − t((Σa)² − Σa²), halved for i<j.
    let rows: Vec<T> = (0..n)
        .map(|i| {
            let row = h2.row(i);
            let mut s = T::zero();
            for (&h, &aj) in row.iter().zip(&a) {
                s += h * aj;
            }
            a[i] * s
        })
        .collect();
    let quad = pairwise_sum(&rows);
    let sum_a = pairwise_sum(&a);
    let sum_a2: Vec<T> = a.iter().map(|&x| x * x).collect();
    let off = sum_a * sum_a - pairwise_sum(&sum_a2);
    let half = T::lit(0.5) * (quad - stats.t_hat * off);
    let (r, nn) = (T::from_usize(stats.r()).unwrap(), T::from_usize(n).unwrap());
    Ok(r * (r - T::one()) / (nn * (nn - T::one())) * half)
}

/// `Σ_inst ∏ξ / C − T̂ · e_r(ξ)/C`, i.e. `T*_M − T̂`.
pub fn multiplicative_delta<T: Scalar>(stats: &LocalStats<T>, xi: &[T]) -> Result<T> {
    let inst = stats.instances.as_ref().ok_or(Error::MissingInstances)?;
    let c = T::lit(binom(stats.n(), stats.r()) as f64);
    let mut acc = Compensated::<T>::default();
    for s in inst.iter() {
        let mut p = T::one();
        for &v in s {
            p *= xi[v as usize];
        }
        acc.add(p);
    }
    let er = esp(xi, stats.r());
    Ok(acc.value() / c - stats.t_hat * (er / c))
}

fn run<T: Scalar>(
    stats: &LocalStats<T>,
    spec: &MultiplierSpec,
    b: usize,
    method: Method,
    delta: impl Fn(&[T]) -> Result<T> + Sync,
) -> Result<BootstrapRun<T>> {
    if b == 0 {
        return Err(Error::InvalidArgument("B must be positive".into()));
    }
    let scale = standard_scale(stats)?;
    let n = stats.n();
    let reps: Result<Vec<T>> = (0..b)
        .into_par_iter()
        .map(|j| {
            let xi = weights_as::<T>(n, spec, j as u64);
            Ok(delta(&xi)? / scale)
        })
        .collect();
    Ok(BootstrapRun {
        method,
        b,
        seed: spec.seed,
        n,
        r: stats.r(),
        center: stats.t_hat,
        scale,
        replicates: reps?,
    })
}

/// Linear bootstrap; tagged MB-L-apx when the statistics are sketched.
pub fn mb_linear<T: Scalar>(stats: &LocalStats<T>, spec: &MultiplierSpec, b: usize) -> Result<BootstrapRun<T>> {
    let method = if stats.is_exact() { Method::MbL } else { Method::MbLApx };
    run(stats, spec, b, method, |xi| Ok(linear_delta(stats, xi)))
}

pub fn mb_quadratic<T: Scalar>(stats: &LocalStats<T>, spec: &MultiplierSpec, b: usize) -> Result<BootstrapRun<T>> {
    if stats.h2.is_none() {
        return Err(Error::MissingPairwise);
    }
    run(stats, spec, b, Method::MbQ, |xi| Ok(linear_delta(stats, xi) + quadratic_term(stats, xi)?))
}

pub fn mb_multiplicative<T: Scalar>(stats: &LocalStats<T>, spec: &MultiplierSpec, b: usize) -> Result<BootstrapRun<T>> {
    if stats.instances.is_none() {
        return Err(Error::MissingInstances);
    }
    run(stats, spec, b, Method::MbM, |xi| multiplicative_delta(stats, xi))
}

/// Fraction of replicates `≤ u` at each grid point.
pub fn ecdf<T: Scalar>(run: &BootstrapRun<T>, grid: &[T]) -> Vec<T> {
    ecdf_of(&run.replicates, grid)
}

pub fn ecdf_of<T: Scalar>(values: &[T], grid: &[T]) -> Vec<T> {
    let mut sorted: Vec<T> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite replicates"));
    let b = T::from_usize(sorted.len().max(1)).unwrap();
    grid.iter()
        .map(|&u| T::from_usize(sorted.partition_point(|&x| x <= u)).unwrap() / b)
        .collect()
}

/// Graph on resampled labels: `p ~ q` iff the labels differ and are adjacent.
pub fn resampled_graph(graph: &Graph, labels: &[usize]) -> Graph {
    let k = labels.len();
    let edges = (0..k).flat_map(|p| (p + 1..k).map(move |q| (p, q)));
    let edges = edges.filter(|&(p, q)| labels[p] != labels[q] && graph.has_edge(labels[p], labels[q]));
    Graph::from_edges(k, edges).expect("in range").0
}

/// Empirical-graphon bootstrap: size-`n` vertex resamples with replacement.
pub fn baseline_eg(graph: &Graph, motif: &Motif, b: usize, seed: u64) -> Result<BootstrapRun<f64>> {
    let stats = count_exact::<f64>(graph, motif, false, false)?;
    let scale = standard_scale(&stats)?;
    let n = graph.n();
    let reps: Result<Vec<f64>> = (0..b)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(seed ^ domain::RESAMPLE, j as u64, 0);
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let g = resampled_graph(graph, &labels);
            Ok((count_exact::<f64>(&g, motif, false, false)?.t_hat - stats.t_hat) / scale)
        })
        .collect();
    Ok(BootstrapRun { method: Method::Eg, b, seed, n, r: motif.r(), center: stats.t_hat, scale, replicates: reps? })
}

/// Subsampling: size-`sub` subsets without replacement, scaled by `σ̂_b = √(n/b)·σ̂_n`.
pub fn baseline_ss(graph: &Graph, motif: &Motif, sub: usize, b: usize, seed: u64) -> Result<BootstrapRun<f64>> {
    let n = graph.n();
    if sub >= n {
        return Err(Error::InvalidArgument(format!("subsample size {sub} must be below n = {n}")));
    }
    let stats = count_exact::<f64>(graph, motif, false, false)?;
    let scale = standard_scale(&stats)? * (n as f64 / sub as f64).sqrt();
    let reps: Result<Vec<f64>> = (0..b)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(seed ^ domain::RESAMPLE ^ 1, j as u64, 0);
            let mut verts = sample(&mut rng, n, sub).into_vec();
            verts.sort_unstable();
            let g = graph.induced(&verts);
            Ok((count_exact::<f64>(&g, motif, false, false)?.t_hat - stats.t_hat) / scale)
        })
        .collect();
    Ok(BootstrapRun { method: Method::Ss, b, seed, n, r: motif.r(), center: stats.t_hat, scale, replicates: reps? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::count_exact;

    #[test]
    fn ecdf_direct_count() {
        let run = BootstrapRun {
            method: Method::MbL,
            b: 4,
            seed: 0,
            n: 10,
            r: 3,
            center: 0.0,
            scale: 1.0,
            replicates: vec![-1.0, 0.0, 0.0, 2.0],
        };
        assert_eq!(ecdf(&run, &[-5.0, 0.0, 5.0]), vec![0.0, 0.75, 1.0]);
    }

    #[test]
    fn degenerate_tau_errors() {
        let s = count_exact::<f64>(&Graph::complete(5), &Motif::triangle(), true, true).unwrap();
        let spec = MultiplierSpec::gaussian_product(1);
        assert!(matches!(mb_linear(&s, &spec, 10), Err(Error::Degenerate(_))));
        assert!(matches!(mb_quadratic(&s, &spec, 10), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ones_give_zero_replicates() {
        let g = Graph::erdos_renyi(30, 0.5, 3);
        let s = count_exact::<f64>(&g, &Motif::triangle(), true, true).unwrap();
        let spec = MultiplierSpec::ones();
        for run in [mb_linear(&s, &spec, 5), mb_quadratic(&s, &spec, 5), mb_multiplicative(&s, &spec, 5)] {
            assert!(run.unwrap().replicates.iter().all(|&z| z == 0.0));
        }
    }

    #[test]
    fn zero_g2_makes_quadratic_equal_linear() {
        let g = Graph::erdos_renyi(25, 0.5, 3);
        let mut s = count_exact::<f64>(&g, &Motif::triangle(), false, false).unwrap();
        let t = s.t_hat;
        s.h2 = Some(crate::counts::PairTable::from_fn(25, |_, _| t));
        let spec = MultiplierSpec::gaussian_product(9);
        let l = mb_linear(&s, &spec, 50).unwrap();
        let q = mb_quadratic(&s, &spec, 50).unwrap();
        for (a, b) in l.replicates.iter().zip(&q.replicates) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_term_matches_double_loop() {
        let g = Graph::erdos_renyi(20, 0.5, 4);
        let s = count_exact::<f64>(&g, &Motif::twostar(), true, false).unwrap();
        let xi = draw_weights(20, &MultiplierSpec::gaussian_product(2), 0);
        let mut direct = 0.0;
        for i in 0..20 {
            for j in i + 1..20 {
                direct += (xi[i] - 1.0) * (xi[j] - 1.0) * s.g2_tilde(i, j).unwrap();
            }
        }
        direct *= 6.0 / (20.0 * 19.0);
        assert!((quadratic_term(&s, &xi).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn empty_graph_multiplicative_is_zero() {
        // zero motif density: every replicate is exactly zero
        let g = Graph::empty(12);
        let mut s = count_exact::<f64>(&g, &Motif::triangle(), false, true).unwrap();
        s.tau_hat = 1.0;
        let r = mb_multiplicative(&s, &MultiplierSpec::gaussian_product(1), 5).unwrap();
        assert!(r.raw().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn eg_identity_labels_reproduce_graph() {
        let g = Graph::erdos_renyi(20, 0.4, 1);
        let labels: Vec<usize> = (0..20).collect();
        assert_eq!(resampled_graph(&g, &labels), g);
    }

    #[test]
    fn ss_rejects_large_subsample() {
        let g = Graph::erdos_renyi(20, 0.4, 1);
        assert!(baseline_ss(&g, &Motif::triangle(), 20, 10, 1).is_err());
    }

    #[test]
    fn ss_on_k4_hits_degenerate_path() {
        let g = Graph::complete(5);
        assert!(matches!(baseline_ss(&g, &Motif::triangle(), 4, 10, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn f32_run() {
        let g = Graph::erdos_renyi(40, 0.5, 3);
        let s = count_exact::<f32>(&g, &Motif::triangle(), true, false).unwrap();
        let r = mb_quadratic(&s, &MultiplierSpec::gaussian_product(1), 20).unwrap();
        assert!(r.replicates.iter().all(|z| z.is_finite()));
    }
}
