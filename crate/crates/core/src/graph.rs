//! Undirected simple graphs, sparse graphon samplers and data ingestion.

use crate::error::{Error, Result};
use crate::rng::{domain, substream};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

/// Immutable undirected simple graph.
///
/// Adjacency is kept twice: as a dense bitset (one row of `words` u64 per
/// vertex) and as sorted neighbor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    nbrs: Vec<Vec<u32>>,
    m: usize,
}

/// Counts of input records dropped while building a graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Graph { n, words, bits: vec![0; n * words], nbrs: vec![Vec::new(); n], m: 0 }
    }

    /// Builds a graph from vertex pairs, collapsing duplicates and dropping self-loops.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<(Self, IngestReport)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(n);
        let mut report = IngestReport::default();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if a == b {
                report.self_loops += 1;
                continue;
            }
            if g.has_edge(a, b) {
                report.duplicates += 1;
                continue;
            }
            g.set(a, b);
            g.set(b, a);
            g.m += 1;
        }
        g.rebuild_lists();
        Ok((g, report))
    }

    /// Complete graph on `n` vertices.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Graph::from_edges(n, edges).expect("valid").0
    }

    /// Cycle on `n` vertices.
    pub fn cycle(n: usize) -> Self {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid").0
    }

    /// Erdős–Rényi graph, handy for tests.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Self {
        let spec = GraphonSpec::constant(p);
        sample_graph(&spec, n, seed).expect("valid p").0
    }

    fn from_rows(n: usize, rows: Vec<Vec<u32>>) -> Self {
        let mut g = Graph::empty(n);
        for (i, row) in rows.into_iter().enumerate() {
            for j in row {
                let j = j as usize;
                g.set(i, j);
                g.set(j, i);
                g.m += 1;
            }
        }
        g.rebuild_lists();
        g
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1u64 << (j % 64);
    }

    fn rebuild_lists(&mut self) {
        let words = self.words;
        let bits = &self.bits;
        self.nbrs = (0..self.n)
            .map(|i| {
                let row = &bits[i * words..(i + 1) * words];
                let mut out = Vec::new();
                for (w, &word) in row.iter().enumerate() {
                    let mut x = word;
                    while x != 0 {
                        let t = x.trailing_zeros() as usize;
                        out.push((w * 64 + t) as u32);
                        x &= x - 1;
                    }
                }
                out
            })
            .collect();
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.m
    }

    /// Number of u64 words per bitset row.
    #[inline]
    pub fn words(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.words + j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.nbrs[i].len()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.nbrs[i]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// |N(i) ∩ N(j)|
    #[inline]
    pub fn common_neighbors(&self, i: usize, j: usize) -> usize {
        self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Fraction of vertex pairs that are edges.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m as f64 / (self.n as f64 * (self.n as f64 - 1.0) / 2.0)
    }

    /// Edges as `(i, j)` with `i < j`, lexicographically ordered.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.nbrs[i].iter().map(|&j| j as usize).filter(move |&j| j > i).map(move |j| (i, j))
        })
    }

    /// Induced subgraph on `vertices`, relabelled `0..len`.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let k = vertices.len();
        let rows = (0..k)
            .map(|a| {
                (a + 1..k)
                    .filter(|&b| self.has_edge(vertices[a], vertices[b]))
                    .map(|b| b as u32)
                    .collect()
            })
            .collect();
        Graph::from_rows(k, rows)
    }

    /// Writes the canonical edge list, one `i j` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }
}

/// Named closed-form graphons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothFormula {
    /// `(u²+v²)/3 · cos(1/(u²+v²)) + 0.15`
    SmG,
    /// `w ≡ c`
    Constant(f64),
}

impl SmoothFormula {
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self {
            SmoothFormula::SmG => {
                let s = u * u + v * v;
                if s == 0.0 {
                    0.15
                } else {
                    s / 3.0 * (1.0 / s).cos() + 0.15
                }
            }
            SmoothFormula::Constant(c) => *c,
        }
    }
}

/// Graphon family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphonKind {
    Sbm { b: Vec<Vec<f64>>, pi: Vec<f64> },
    Smooth(SmoothFormula),
    /// Piecewise constant on an `m × m` grid over `[0,1]²`.
    Table { grid: Vec<Vec<f64>> },
}

/// Graphon `w` together with the sparsity multiplier `rho`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphonSpec {
    pub kind: GraphonKind,
    pub rho: f64,
}

/// Latent positions drawn alongside a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Latents {
    Uniform(Vec<f64>),
    Blocks(Vec<usize>),
}

impl GraphonSpec {
    /// Two-block model with `B11 = 0.6`, other entries `0.2`, `π = (0.65, 0.35)`.
    pub fn sbm_g(rho: f64) -> Self {
        GraphonSpec {
            kind: GraphonKind::Sbm { b: vec![vec![0.6, 0.2], vec![0.2, 0.2]], pi: vec![0.65, 0.35] },
            rho,
        }
    }

    pub fn sm_g(rho: f64) -> Self {
        GraphonSpec { kind: GraphonKind::Smooth(SmoothFormula::SmG), rho }
    }

    pub fn constant(p: f64) -> Self {
        GraphonSpec { kind: GraphonKind::Smooth(SmoothFormula::Constant(p)), rho: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidSpec(format!("rho = {} outside [0,1]", self.rho)));
        }
        let (lo, hi) = match &self.kind {
            GraphonKind::Sbm { b, pi } => {
                let k = pi.len();
                if k == 0 || b.len() != k || b.iter().any(|row| row.len() != k) {
                    return Err(Error::InvalidSpec("block matrix must be K x K with K = len(pi)".into()));
                }
                if pi.iter().any(|&p| !(p >= 0.0)) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidSpec("pi must be a probability vector".into()));
                }
                for a in 0..k {
                    for c in 0..k {
                        if b[a][c] != b[c][a] {
                            return Err(Error::InvalidSpec(format!("B not symmetric at ({a},{c})")));
                        }
                    }
                }
                let flat = b.iter().flatten().copied();
                (flat.clone().fold(f64::INFINITY, f64::min), flat.fold(f64::NEG_INFINITY, f64::max))
            }
            GraphonKind::Smooth(f) => {
                let m = 400;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for a in 0..=m {
                    for c in 0..=m {
                        let w = f.eval(a as f64 / m as f64, c as f64 / m as f64);
                        lo = lo.min(w);
                        hi = hi.max(w);
                    }
                }
                (lo, hi)
            }
            GraphonKind::Table { grid } => {
                let m = grid.len();
                if m == 0 || grid.iter().any(|row| row.len() != m) {
                    return Err(Error::InvalidSpec("table graphon must be a nonempty square grid".into()));
                }
                for a in 0..m {
                    for c in 0..m {
                        if grid[a][c] != grid[c][a] {
                            return Err(Error::InvalidSpec(format!("table not symmetric at ({a},{c})")));
                        }
                    }
                }
                let flat = grid.iter().flatten().copied();
                (flat.clone().fold(f64::INFINITY, f64::min), flat.fold(f64::NEG_INFINITY, f64::max))
            }
        };
        if !(lo >= 0.0) {
            return Err(Error::InvalidSpec(format!("graphon takes negative value {lo}")));
        }
        if !(self.rho * hi <= 1.0) {
            return Err(Error::InvalidSpec(format!("rho * sup w = {} exceeds 1", self.rho * hi)));
        }
        Ok(())
    }

    /// `w(u, v)` for continuous latents.
    pub fn w(&self, u: f64, v: f64) -> f64 {
        match &self.kind {
            GraphonKind::Sbm { b, pi } => b[block_of(pi, u)][block_of(pi, v)],
            GraphonKind::Smooth(f) => f.eval(u, v),
            GraphonKind::Table { grid } => {
                let m = grid.len();
                let a = ((u * m as f64) as usize).min(m - 1);
                let c = ((v * m as f64) as usize).min(m - 1);
                grid[a][c]
            }
        }
    }
}

/// Block index of a uniform latent under cumulative `pi`.
pub fn block_of(pi: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in pi.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    pi.len() - 1
}

/// Draws `A_ij ~ Bernoulli(rho · w(X_i, X_j))` independently over pairs.
pub fn sample_graph(spec: &GraphonSpec, n: usize, seed: u64) -> Result<(Graph, Latents)> {
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    spec.validate()?;
    let mut rng = substream(seed, domain::LATENT, 0);
    let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let (probs_of, latents): (Box<dyn Fn(usize, usize) -> f64 + Sync>, Latents) = match &spec.kind {
        GraphonKind::Sbm { b, pi } => {
            let labels: Vec<usize> = xs.iter().map(|&u| block_of(pi, u)).collect();
            let l2 = labels.clone();
            let b = b.clone();
            let rho = spec.rho;
            (Box::new(move |i, j| rho * b[l2[i]][l2[j]]), Latents::Blocks(labels))
        }
        _ => {
            let x2 = xs.clone();
            let s2 = spec.clone();
            (Box::new(move |i, j| s2.rho * s2.w(x2[i], x2[j])), Latents::Uniform(xs))
        }
    };
    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, domain::EDGE, i as u64);
            let mut row = Vec::new();
            for j in i + 1..n {
                let p = probs_of(i, j);
                if rng.random::<f64>() < p {
                    row.push(j as u32);
                }
            }
            row
        })
        .collect();
    Ok((Graph::from_rows(n, rows), latents))
}

/// Parses whitespace-separated vertex pairs. Blank lines and `#` comments are skipped.
///
/// `n` defaults to one past the largest id seen.
pub fn read_edge_list<R: BufRead>(input: R, one_based: bool, n: Option<usize>) -> Result<(Graph, IngestReport)> {
    let mut pairs = Vec::new();
    let mut max_id = 0usize;
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut it = body.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            let tok = tok.ok_or_else(|| Error::Parse { line: k + 1, msg: "expected two vertex ids".into() })?;
            let v: usize = tok
                .parse()
                .map_err(|_| Error::Parse { line: k + 1, msg: format!("bad vertex id {tok:?}") })?;
            if one_based {
                v.checked_sub(1).ok_or_else(|| Error::Parse { line: k + 1, msg: "id 0 in 1-based input".into() })
            } else {
                Ok(v)
            }
        };
        let a = parse(it.next())?;
        let b = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::Parse { line: k + 1, msg: "trailing tokens".into() });
        }
        max_id = max_id.max(a).max(b);
        pairs.push((a, b));
    }
    let n = match n {
        Some(n) => n,
        None if pairs.is_empty() => 0,
        None => max_id + 1,
    };
    Graph::from_edges(n, pairs)
}

pub fn ingest_edge_list(path: &Path, one_based: bool) -> Result<(Graph, IngestReport)> {
    let f = std::fs::File::open(path)?;
    read_edge_list(std::io::BufReader::new(f), one_based, None)
}

/// A single roll-call vote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vote {
    Yay,
    Nay,
    Other,
}

impl Vote {
    pub fn parse(tok: &str) -> Vote {
        match tok.trim() {
            "Y" | "y" | "yea" | "yay" | "Yea" | "1" => Vote::Yay,
            "N" | "n" | "nay" | "Nay" | "6" => Vote::Nay,
            _ => Vote::Other,
        }
    }
}

/// Agreement graph from roll-call data.
#[derive(Clone, Debug)]
pub struct RollCall {
    pub graph: Graph,
    pub threshold: u32,
    /// Same-party agreement counts per bin (empty under an override).
    pub same_party: Vec<u64>,
    /// Cross-party agreement counts per bin (empty under an override).
    pub cross_party: Vec<u64>,
}

/// Number of bills where members `a` and `b` both vote yay or both vote nay.
pub fn agreement(a: &[Vote], b: &[Vote]) -> u32 {
    a.iter()
        .zip(b)
        .filter(|(x, y)| x == y && **x != Vote::Other)
        .count() as u32
}

/// Builds the agreement graph; edge iff agreement exceeds the threshold.
///
/// Without an override the threshold is where the normalized same-party
/// histogram overtakes the cross-party one: starting at the cross-party mode,
/// the first unit-width bin `b` with `SP(b) >= CP(b)` and `SP(b+1) >= CP(b+1)`.
pub fn ingest_rollcall(votes: &[Vec<Vote>], parties: &[String], threshold_override: Option<u32>) -> Result<RollCall> {
    let m = votes.len();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two members".into()));
    }
    if parties.len() != m {
        return Err(Error::LengthMismatch { left: m, right: parties.len() });
    }
    let bills = votes[0].len();
    if bills == 0 || votes.iter().any(|v| v.len() != bills) {
        return Err(Error::InvalidArgument("every member needs the same nonzero number of bills".into()));
    }
    let agree: Vec<Vec<u32>> = (0..m)
        .map(|i| (0..m).map(|j| if j > i { agreement(&votes[i], &votes[j]) } else { 0 }).collect())
        .collect();
    let (threshold, sp, cp) = match threshold_override {
        Some(t) => (t, Vec::new(), Vec::new()),
        None => {
            let mut sp = vec![0u64; bills + 2];
            let mut cp = vec![0u64; bills + 2];
            for i in 0..m {
                for j in i + 1..m {
                    let a = agree[i][j] as usize;
                    if parties[i] == parties[j] {
                        sp[a] += 1;
                    } else {
                        cp[a] += 1;
                    }
                }
            }
            let ns: u64 = sp.iter().sum();
            let nc: u64 = cp.iter().sum();
            if nc == 0 {
                return Err(Error::InvalidArgument("all members share one party; no cross-party histogram".into()));
            }
            let t = histogram_crossing(&sp, &cp, ns, nc);
            (t, sp, cp)
        }
    };
    let rows = (0..m)
        .map(|i| (i + 1..m).filter(|&j| agree[i][j] > threshold).map(|j| j as u32).collect())
        .collect();
    Ok(RollCall { graph: Graph::from_rows(m, rows), threshold, same_party: sp, cross_party: cp })
}

fn histogram_crossing(sp: &[u64], cp: &[u64], ns: u64, nc: u64) -> u32 {
    // Compare normalized masses exactly: SP(b)/ns >= CP(b)/nc.
    let ge = |b: usize| (sp[b] as u128) * (nc as u128) >= (cp[b] as u128) * (ns.max(1) as u128);
    let mode = (0..cp.len()).max_by_key(|&b| (cp[b], std::cmp::Reverse(b))).unwrap_or(0);
    for b in mode..cp.len() - 1 {
        if ge(b) && ge(b + 1) {
            return b as u32;
        }
    }
    (cp.len() - 2) as u32
}

/// Parses roll-call CSV: `member,party,vote,vote,...` with an optional header row.
pub fn read_rollcall_csv<R: BufRead>(input: R) -> Result<(Vec<String>, Vec<String>, Vec<Vec<Vote>>)> {
    let mut ids = Vec::new();
    let mut parties = Vec::new();
    let mut votes = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
        if cols.len() < 3 {
            return Err(Error::Parse { line: k + 1, msg: "need member, party and at least one vote".into() });
        }
        if k == 0 && cols[0].eq_ignore_ascii_case("member") {
            continue;
        }
        ids.push(cols[0].to_string());
        parties.push(cols[1].to_string());
        votes.push(cols[2..].iter().map(|t| Vote::parse(t)).collect());
    }
    Ok((ids, parties, votes))
}
