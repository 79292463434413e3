//! Exact count functionals and rooted (Hoeffding) statistics.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::motif::{matches, IsoSet, Motif, MotifKind};
use crate::scalar::{pairwise_sum, pairwise_sum_by, Scalar};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default bound on `C(n, r)` for subset enumeration.
pub const DEFAULT_ENUM_GUARD: u64 = 5_000_000;
/// Default largest `n` for which a dense pairwise table is built.
pub const DEFAULT_PAIRWISE_CAP: usize = 3_000;

/// `C(n, k)` as an exact integer (saturating).
pub fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc.saturating_mul((n - t) as u128) / (t as u128 + 1);
    }
    acc
}

/// How the local statistics were obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Sketched {
        n_perms: usize,
        seed: u64,
        strategy: crate::sketch::Strategy,
        /// `r = 2`: every permutation covers all other vertices, so the pass is exact.
        exact_fallback: bool,
    },
}

/// Dense symmetric `n × n` table with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTable<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> PairTable<T> {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T + Sync) -> Self {
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| if i == j { T::zero() } else { f(i, j) }).collect())
            .collect();
        PairTable { n, data: rows.concat() }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Matching `r`-subsets, sorted lexicographically, stored flat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instances {
    r: usize,
    flat: Vec<u32>,
}

impl Instances {
    fn from_unsorted(r: usize, mut tuples: Vec<Vec<u32>>) -> Self {
        for t in tuples.iter_mut() {
            t.sort_unstable();
        }
        tuples.sort_unstable();
        Instances { r, flat: tuples.concat() }
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.r
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.flat.chunks_exact(self.r)
    }
}

/// Local statistics of one motif on one graph.
#[derive(Clone, Debug)]
pub struct LocalStats<T> {
    pub motif: Motif,
    pub t_hat: T,
    pub h1: Vec<T>,
    pub g1: Vec<T>,
    /// `sqrt(Σ g1² / n)`
    pub tau_hat: T,
    pub h2: Option<PairTable<T>>,
    pub instances: Option<Instances>,
    pub provenance: Provenance,
}

impl<T: Scalar> LocalStats<T> {
    /// Assembles statistics from `t_hat` and rooted averages; `g1` and `tau_hat` are derived.
    pub fn from_parts(
        motif: Motif,
        t_hat: T,
        h1: Vec<T>,
        h2: Option<PairTable<T>>,
        instances: Option<Instances>,
        provenance: Provenance,
    ) -> Self {
        let g1: Vec<T> = h1.iter().map(|&h| h - t_hat).collect();
        let n = T::from_usize(g1.len().max(1)).unwrap();
        let tau_hat = (pairwise_sum_by(&g1, |x| x * x) / n).sqrt();
        LocalStats { motif, t_hat, h1, g1, tau_hat, h2, instances, provenance }
    }

    pub fn n(&self) -> usize {
        self.h1.len()
    }

    pub fn r(&self) -> usize {
        self.motif.r()
    }

    pub fn is_exact(&self) -> bool {
        self.provenance == Provenance::Exact
    }

    /// `g̃2(i,j) = Ĥ2(i,j) − T̂`
    pub fn g2_tilde(&self, i: usize, j: usize) -> Result<T> {
        let h2 = self.h2.as_ref().ok_or(Error::MissingPairwise)?;
        Ok(h2.get(i, j) - self.t_hat)
    }

    /// `ĝ2(i,j) = g̃2(i,j) − ĝ1(i) − ĝ1(j)`
    pub fn g2_hat(&self, i: usize, j: usize) -> Result<T> {
        if i == j {
            return Err(Error::InvalidArgument("g2_hat needs i != j".into()));
        }
        Ok(self.g2_tilde(i, j)? - self.g1[i] - self.g1[j])
    }

    /// Variance estimate with the `n²` normalization used for sketches:
    /// `sqrt(Σ (h1 − t)² / n²) = tau_hat / sqrt(n)`.
    pub fn tau_tilde_n2(&self) -> T {
        self.tau_hat / T::from_usize(self.n()).unwrap().sqrt()
    }

    /// Mean of `h1` (equals `t_hat` for exact statistics up to rounding).
    pub fn mean_h1(&self) -> T {
        pairwise_sum(&self.h1) / T::from_usize(self.n()).unwrap()
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> LocalStats<U> {
        let c = |x: T| U::from_f64(x.to_f64_lossy()).unwrap();
        LocalStats {
            motif: self.motif.clone(),
            t_hat: c(self.t_hat),
            h1: self.h1.iter().map(|&x| c(x)).collect(),
            g1: self.g1.iter().map(|&x| c(x)).collect(),
            tau_hat: c(self.tau_hat),
            h2: self.h2.as_ref().map(|t| PairTable { n: t.n, data: t.data.iter().map(|&x| c(x)).collect() }),
            instances: self.instances.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Options for exact counting.
#[derive(Clone, Debug)]
pub struct CountOptions {
    pub want_pairwise: bool,
    pub want_instances: bool,
    pub pairwise_cap: usize,
    pub enum_guard: u64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            want_pairwise: false,
            want_instances: false,
            pairwise_cap: DEFAULT_PAIRWISE_CAP,
            enum_guard: DEFAULT_ENUM_GUARD,
        }
    }
}

/// Integer counts behind the densities.
#[derive(Clone, Debug)]
struct Raw {
    total: u64,
    c1: Vec<u64>,
    c2: Option<Vec<Vec<u64>>>,
    instances: Option<Instances>,
}

fn finish<T: Scalar>(motif: &Motif, n: usize, raw: Raw) -> LocalStats<T> {
    let r = motif.r();
    let d0 = T::lit(binom(n, r) as f64);
    let d1 = T::lit(binom(n - 1, r - 1) as f64);
    let d2 = T::lit(binom(n - 2, r - 2) as f64);
    let t_hat = T::from_count(raw.total) / d0;
    let h1 = raw.c1.iter().map(|&c| T::from_count(c) / d1).collect();
    let h2 = raw.c2.map(|rows| PairTable::from_fn(n, |i, j| T::from_count(rows[i][j]) / d2));
    LocalStats::from_parts(motif.clone(), t_hat, h1, h2, raw.instances, Provenance::Exact)
}

/// Exact local statistics via per-motif kernels.
pub fn count_exact<T: Scalar>(
    graph: &Graph,
    motif: &Motif,
    want_pairwise: bool,
    want_instances: bool,
) -> Result<LocalStats<T>> {
    let opts = CountOptions { want_pairwise, want_instances, ..CountOptions::default() };
    count_exact_with(graph, motif, &opts)
}

pub fn count_exact_with<T: Scalar>(graph: &Graph, motif: &Motif, opts: &CountOptions) -> Result<LocalStats<T>> {
    let n = graph.n();
    let r = motif.r();
    if n < r {
        return Err(Error::InvalidArgument(format!("need n >= r (n={n}, r={r})")));
    }
    if opts.want_pairwise && n > opts.pairwise_cap {
        return Err(Error::TooLarge { what: format!("pairwise table for n={n}"), bound: opts.pairwise_cap as u64 });
    }
    let raw = match motif.kind() {
        MotifKind::Custom => {
            let iso = IsoSet::new(motif);
            enumerate(graph, r, opts.want_pairwise, opts.want_instances, opts.enum_guard, |s| iso.test(graph, s))?
        }
        kind => {
            let c1 = rooted_counts(graph, kind);
            let total = c1.iter().sum::<u64>() / r as u64;
            let c2 = opts.want_pairwise.then(|| {
                (0..n).into_par_iter().map(|i| (0..n).map(|j| pair_count(graph, kind, i, j)).collect()).collect()
            });
            let instances = if opts.want_instances { Some(instances_of(graph, kind, opts.enum_guard)?) } else { None };
            Raw { total, c1, c2, instances }
        }
    };
    Ok(finish(motif, n, raw))
}

/// Exhaustive enumeration through the relabeling-based `matches`.
pub fn count_bruteforce<T: Scalar>(graph: &Graph, motif: &Motif) -> Result<LocalStats<T>> {
    count_bruteforce_with(graph, motif, DEFAULT_ENUM_GUARD)
}

pub fn count_bruteforce_with<T: Scalar>(graph: &Graph, motif: &Motif, guard: u64) -> Result<LocalStats<T>> {
    let n = graph.n();
    let r = motif.r();
    if n < r {
        return Err(Error::InvalidArgument(format!("need n >= r (n={n}, r={r})")));
    }
    let raw = enumerate(graph, r, true, true, guard, |s| matches(graph, s, motif).expect("valid subset"))?;
    Ok(finish(motif, n, raw))
}

fn enumerate(
    graph: &Graph,
    r: usize,
    want_pairwise: bool,
    want_instances: bool,
    guard: u64,
    hit: impl Fn(&[usize]) -> bool,
) -> Result<Raw> {
    let n = graph.n();
    let subsets = binom(n, r);
    if subsets > guard as u128 {
        return Err(Error::TooLarge { what: format!("C({n},{r}) = {subsets} subsets"), bound: guard });
    }
    let mut c1 = vec![0u64; n];
    let mut c2 = want_pairwise.then(|| vec![vec![0u64; n]; n]);
    let mut inst = Vec::new();
    let mut total = 0u64;
    let mut s: Vec<usize> = (0..r).collect();
    loop {
        if hit(&s) {
            total += 1;
            for &v in &s {
                c1[v] += 1;
            }
            if let Some(c2) = c2.as_mut() {
                for a in 0..r {
                    for b in a + 1..r {
                        c2[s[a]][s[b]] += 1;
                        c2[s[b]][s[a]] += 1;
                    }
                }
            }
            if want_instances {
                inst.push(s.iter().map(|&v| v as u32).collect());
            }
        }
        // next combination in lexicographic order
        let mut k = r;
        while k > 0 && s[k - 1] == n - r + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        s[k - 1] += 1;
        for t in k..r {
            s[t] = s[t - 1] + 1;
        }
    }
    Ok(Raw { total, c1, c2, instances: want_instances.then(|| Instances::from_unsorted(r, inst)) })
}

#[inline]
fn and_count(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u64).sum()
}

#[inline]
fn and3_count(a: &[u64], b: &[u64], c: &[u64]) -> u64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| (x & y & z).count_ones() as u64).sum()
}

fn c2_of(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

/// Per-vertex counts of matching subsets containing the vertex.
fn rooted_counts(graph: &Graph, kind: MotifKind) -> Vec<u64> {
    let n = graph.n();
    match kind {
        MotifKind::Edge => (0..n).map(|i| graph.degree(i) as u64).collect(),
        MotifKind::Triangle => triangles_at(graph),
        MotifKind::Twostar => {
            let tri = triangles_at(graph);
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let di = graph.degree(i) as u64;
                    let center = c2_of(di) - tri[i];
                    let leaf: u64 = graph
                        .neighbors(i)
                        .iter()
                        .map(|&j| {
                            let j = j as usize;
                            graph.degree(j) as u64 - 1 - graph.common_neighbors(i, j) as u64
                        })
                        .sum();
                    center + leaf
                })
                .collect()
        }
        MotifKind::Fourcycle => (0..n).into_par_iter().map(|a| fourcycles_at(graph, a)).collect(),
        MotifKind::Custom => unreachable!("custom motifs use enumeration"),
    }
}

fn triangles_at(graph: &Graph) -> Vec<u64> {
    (0..graph.n())
        .into_par_iter()
        .map(|i| {
            let ri = graph.row(i);
            graph.neighbors(i).iter().map(|&j| and_count(ri, graph.row(j as usize))).sum::<u64>() / 2
        })
        .collect()
}

/// Mask of vertices outside the closed neighborhood of `a`.
fn outside_closed(graph: &Graph, a: usize) -> Vec<u64> {
    let n = graph.n();
    let mut out: Vec<u64> = graph.row(a).iter().map(|w| !w).collect();
    out[a / 64] &= !(1u64 << (a % 64));
    let tail = n % 64;
    if tail != 0 {
        let last = out.len() - 1;
        out[last] &= (1u64 << tail) - 1;
    }
    out
}

// Induced 4-cycles through `a`: for each opposite vertex `c` outside N[a], count
// non-adjacent pairs in W = N(a) ∩ N(c), i.e. C(|W|,2) − e(W).
fn fourcycles_at(graph: &Graph, a: usize) -> u64 {
    let ra = graph.row(a);
    let out = outside_closed(graph, a);
    let mut pairs = 0u64;
    for (w, &word) in out.iter().enumerate() {
        let mut x = word;
        while x != 0 {
            let c = w * 64 + x.trailing_zeros() as usize;
            pairs += c2_of(and_count(ra, graph.row(c)));
            x &= x - 1;
        }
    }
    let mut inner = 0u64;
    let nb = graph.neighbors(a);
    for (k, &b) in nb.iter().enumerate() {
        let rb = graph.row(b as usize);
        for &d in &nb[k + 1..] {
            if graph.has_edge(b as usize, d as usize) {
                inner += and3_count(rb, graph.row(d as usize), &out);
            }
        }
    }
    pairs - inner
}

/// Number of matching subsets containing both `i` and `j`.
fn pair_count(graph: &Graph, kind: MotifKind, i: usize, j: usize) -> u64 {
    if i == j {
        return 0;
    }
    let adj = graph.has_edge(i, j);
    match kind {
        MotifKind::Edge => adj as u64,
        MotifKind::Triangle => {
            if adj {
                graph.common_neighbors(i, j) as u64
            } else {
                0
            }
        }
        MotifKind::Twostar => {
            let cn = graph.common_neighbors(i, j) as u64;
            if adj {
                (graph.degree(i) as u64 - 1 - cn) + (graph.degree(j) as u64 - 1 - cn)
            } else {
                cn
            }
        }
        MotifKind::Fourcycle => {
            let (ri, rj) = (graph.row(i), graph.row(j));
            if adj {
                // cycle i-j-k-l-i with k ∈ N(j)∖N[i], l ∈ N(i)∖N[j], k ~ l
                let xi: Vec<u64> = ri.iter().zip(&outside_closed(graph, j)).map(|(p, q)| p & q).collect();
                let yj: Vec<u64> = rj.iter().zip(&outside_closed(graph, i)).map(|(p, q)| p & q).collect();
                let mut total = 0;
                for (w, &word) in yj.iter().enumerate() {
                    let mut x = word;
                    while x != 0 {
                        let k = w * 64 + x.trailing_zeros() as usize;
                        total += and_count(graph.row(k), &xi);
                        x &= x - 1;
                    }
                }
                total
            } else {
                let wset: Vec<u64> = ri.iter().zip(rj).map(|(p, q)| p & q).collect();
                let size: u64 = wset.iter().map(|x| x.count_ones() as u64).sum();
                let mut twice_edges = 0;
                for (w, &word) in wset.iter().enumerate() {
                    let mut x = word;
                    while x != 0 {
                        let b = w * 64 + x.trailing_zeros() as usize;
                        twice_edges += and_count(graph.row(b), &wset);
                        x &= x - 1;
                    }
                }
                c2_of(size) - twice_edges / 2
            }
        }
        MotifKind::Custom => unreachable!("custom motifs use enumeration"),
    }
}

fn instances_of(graph: &Graph, kind: MotifKind, guard: u64) -> Result<Instances> {
    let n = graph.n();
    let tuples: Vec<Vec<u32>> = match kind {
        MotifKind::Edge => graph.edges().map(|(i, j)| vec![i as u32, j as u32]).collect(),
        MotifKind::Triangle => (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let nb = graph.neighbors(i);
                let mut out = Vec::new();
                for (k, &j) in nb.iter().enumerate() {
                    if (j as usize) < i {
                        continue;
                    }
                    for &l in &nb[k + 1..] {
                        if graph.has_edge(j as usize, l as usize) {
                            out.push(vec![i as u32, j, l]);
                        }
                    }
                }
                out
            })
            .collect(),
        MotifKind::Twostar => (0..n)
            .into_par_iter()
            .flat_map_iter(|c| {
                let nb = graph.neighbors(c);
                let mut out = Vec::new();
                for (k, &a) in nb.iter().enumerate() {
                    for &b in &nb[k + 1..] {
                        if !graph.has_edge(a as usize, b as usize) {
                            out.push(vec![a, b, c as u32]);
                        }
                    }
                }
                out
            })
            .collect(),
        MotifKind::Fourcycle => {
            let total = rooted_counts(graph, kind).iter().sum::<u64>() / 4;
            if total > guard {
                return Err(Error::TooLarge { what: format!("{total} four-cycle instances"), bound: guard });
            }
            (0..n)
                .into_par_iter()
                .flat_map_iter(|a| {
                    let mut out = Vec::new();
                    for c in a + 1..n {
                        if graph.has_edge(a, c) {
                            continue;
                        }
                        let w: Vec<u32> = graph
                            .neighbors(a)
                            .iter()
                            .copied()
                            .filter(|&b| b as usize > a && graph.has_edge(b as usize, c))
                            .collect();
                        for (k, &b) in w.iter().enumerate() {
                            for &d in &w[k + 1..] {
                                if !graph.has_edge(b as usize, d as usize) {
                                    out.push(vec![a as u32, b, c as u32, d]);
                                }
                            }
                        }
                    }
                    out
                })
                .collect()
        }
        MotifKind::Custom => unreachable!("custom motifs use enumeration"),
    };
    let r = match kind {
        MotifKind::Edge => 2,
        MotifKind::Fourcycle => 4,
        _ => 3,
    };
    Ok(Instances::from_unsorted(r, tuples))
}
