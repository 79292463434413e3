//! Motif patterns, induced isomorphism and rate classification.

use crate::error::{Error, Result};
use crate::graph::Graph;
use serde::{Deserialize, Serialize};

/// Largest supported motif size.
pub const MAX_R: usize = 8;

/// Structural class of a pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Acyclic,
    SimpleCycle,
    GeneralCyclic,
}

/// Catalog names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotifKind {
    Edge,
    Twostar,
    Triangle,
    Fourcycle,
    Custom,
}

/// An `r`-vertex pattern `R`, matched by induced isomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Motif {
    r: usize,
    /// Row bitmasks of the pattern adjacency.
    rows: [u8; MAX_R],
    s: usize,
    shape: Shape,
    kind: MotifKind,
}

/// Bit index of pair `(a, b)`, `a < b`, in lexicographic pair order.
#[inline]
pub fn pair_bit(r: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < r);
    a * (2 * r - a - 1) / 2 + (b - a - 1)
}

impl Motif {
    /// Builds a pattern from an edge list on `0..r`.
    pub fn from_edges(r: usize, edges: &[(usize, usize)]) -> Result<Motif> {
        if !(2..=MAX_R).contains(&r) {
            return Err(Error::InvalidArgument(format!("motif size r={r} outside 2..={MAX_R}")));
        }
        let mut rows = [0u8; MAX_R];
        for &(a, b) in edges {
            if a >= r || b >= r || a == b {
                return Err(Error::InvalidArgument(format!("bad motif edge ({a},{b})")));
            }
            rows[a] |= 1 << b;
            rows[b] |= 1 << a;
        }
        let s = rows[..r].iter().map(|x| x.count_ones() as usize).sum::<usize>() / 2;
        let mut m = Motif { r, rows, s, shape: Shape::Acyclic, kind: MotifKind::Custom };
        m.shape = classify(&m);
        Ok(m)
    }

    /// Parses the upper triangle as a bitstring in lexicographic pair order,
    /// e.g. `"111"` is the triangle and `"110"` the two-star centered at 0.
    pub fn from_upper_bits(r: usize, bits: &str) -> Result<Motif> {
        let want = r * (r.saturating_sub(1)) / 2;
        if bits.len() != want || !bits.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::InvalidArgument(format!("expected {want} binary digits for r={r}")));
        }
        let chars: Vec<char> = bits.chars().collect();
        let mut edges = Vec::new();
        for a in 0..r {
            for b in a + 1..r {
                if chars[pair_bit(r, a, b)] == '1' {
                    edges.push((a, b));
                }
            }
        }
        Motif::from_edges(r, &edges)
    }

    fn named(kind: MotifKind, r: usize, edges: &[(usize, usize)]) -> Motif {
        let mut m = Motif::from_edges(r, edges).expect("catalog motif");
        m.kind = kind;
        m
    }

    pub fn edge() -> Motif {
        Motif::named(MotifKind::Edge, 2, &[(0, 1)])
    }

    pub fn twostar() -> Motif {
        Motif::named(MotifKind::Twostar, 3, &[(0, 1), (0, 2)])
    }

    pub fn triangle() -> Motif {
        Motif::named(MotifKind::Triangle, 3, &[(0, 1), (0, 2), (1, 2)])
    }

    pub fn fourcycle() -> Motif {
        Motif::named(MotifKind::Fourcycle, 4, &[(0, 1), (1, 2), (2, 3), (0, 3)])
    }

    /// Catalog lookup by name, or `r:bits` for a custom pattern.
    pub fn parse(name: &str) -> Result<Motif> {
        match name {
            "edge" => Ok(Motif::edge()),
            "twostar" => Ok(Motif::twostar()),
            "triangle" => Ok(Motif::triangle()),
            "fourcycle" => Ok(Motif::fourcycle()),
            other => {
                let (r, bits) = other
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown motif {other:?}")))?;
                let r: usize = r.parse().map_err(|_| Error::InvalidArgument(format!("bad motif size {r:?}")))?;
                Motif::from_upper_bits(r, bits)
            }
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            MotifKind::Edge => "edge".into(),
            MotifKind::Twostar => "twostar".into(),
            MotifKind::Triangle => "triangle".into(),
            MotifKind::Fourcycle => "fourcycle".into(),
            MotifKind::Custom => format!("{}:{}", self.r, self.upper_bits()),
        }
    }

    pub fn upper_bits(&self) -> String {
        let mut out = String::new();
        for a in 0..self.r {
            for b in a + 1..self.r {
                out.push(if self.has_edge(a, b) { '1' } else { '0' });
            }
        }
        out
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn s(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn kind(&self) -> MotifKind {
        self.kind
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        (self.rows[a] >> b) & 1 == 1
    }

    pub fn degree(&self, a: usize) -> usize {
        self.rows[a].count_ones() as usize
    }

    /// Pattern adjacency as a pair mask.
    pub fn mask(&self) -> u32 {
        let mut m = 0u32;
        for a in 0..self.r {
            for b in a + 1..self.r {
                if self.has_edge(a, b) {
                    m |= 1 << pair_bit(self.r, a, b);
                }
            }
        }
        m
    }

    fn sorted_degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.r).map(|a| self.degree(a)).collect();
        d.sort_unstable();
        d
    }
}

/// Forest / single spanning cycle / other.
pub fn classify(m: &Motif) -> Shape {
    let r = m.r;
    let mut parent: Vec<usize> = (0..r).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut cyclic = false;
    let mut components = r;
    for a in 0..r {
        for b in a + 1..r {
            if m.has_edge(a, b) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra == rb {
                    cyclic = true;
                } else {
                    parent[ra] = rb;
                    components -= 1;
                }
            }
        }
    }
    if !cyclic {
        Shape::Acyclic
    } else if components == 1 && (0..r).all(|a| m.degree(a) == 2) {
        Shape::SimpleCycle
    } else {
        Shape::GeneralCyclic
    }
}

/// Induced isomorphism test `1(A_S ≅ R)` by full relabeling enumeration.
pub fn matches(graph: &Graph, subset: &[usize], motif: &Motif) -> Result<bool> {
    let r = motif.r;
    if subset.len() != r {
        return Err(Error::SubsetSize { expected: r, got: subset.len() });
    }
    for (k, &v) in subset.iter().enumerate() {
        if v >= graph.n() {
            return Err(Error::InvalidSubset(format!("vertex {v} out of range")));
        }
        if subset[..k].contains(&v) {
            return Err(Error::InvalidSubset(format!("vertex {v} repeated")));
        }
    }
    let mut rows = [0u8; MAX_R];
    for a in 0..r {
        for b in 0..r {
            if a != b && graph.has_edge(subset[a], subset[b]) {
                rows[a] |= 1 << b;
            }
        }
    }
    let mut deg: Vec<usize> = rows[..r].iter().map(|x| x.count_ones() as usize).collect();
    deg.sort_unstable();
    if deg != motif.sorted_degrees() {
        return Ok(false);
    }
    let mut perm: Vec<usize> = (0..r).collect();
    Ok(search(&rows, motif, &mut perm, 0))
}

// Backtracking over relabelings: perm[k] is the subset position mapped to pattern vertex k.
fn search(rows: &[u8; MAX_R], motif: &Motif, perm: &mut Vec<usize>, k: usize) -> bool {
    let r = motif.r;
    if k == r {
        return true;
    }
    for t in k..r {
        perm.swap(k, t);
        let ok = (0..k).all(|q| ((rows[perm[k]] >> perm[q]) & 1 == 1) == motif.has_edge(k, q));
        if ok && search(rows, motif, perm, k + 1) {
            perm.swap(k, t);
            return true;
        }
        perm.swap(k, t);
    }
    false
}

/// All pair masks isomorphic to a pattern, for fast indicator lookup.
#[derive(Clone, Debug)]
pub struct IsoSet {
    r: usize,
    dense: Option<Vec<bool>>,
    sparse: Vec<u32>,
    /// Bit `k` set when some relabeling gives vertex 0 degree `k`.
    root_degrees: u32,
}

impl IsoSet {
    pub fn new(motif: &Motif) -> IsoSet {
        let r = motif.r;
        let mut images = Vec::new();
        let mut perm: Vec<usize> = (0..r).collect();
        permutations(&mut perm, 0, &mut |p| {
            let mut m = 0u32;
            for a in 0..r {
                for b in a + 1..r {
                    if motif.has_edge(a, b) {
                        let (x, y) = if p[a] < p[b] { (p[a], p[b]) } else { (p[b], p[a]) };
                        m |= 1 << pair_bit(r, x, y);
                    }
                }
            }
            images.push(m);
        });
        images.sort_unstable();
        images.dedup();
        let pairs = r * (r - 1) / 2;
        let dense = (pairs <= 15).then(|| {
            let mut t = vec![false; 1 << pairs];
            for &m in &images {
                t[m as usize] = true;
            }
            t
        });
        let low = (1u32 << (r - 1)) - 1;
        let root_degrees = images.iter().fold(0u32, |acc, &m| acc | 1 << (m & low).count_ones());
        IsoSet { r, dense, sparse: images, root_degrees }
    }

    /// Sorted distinct pair masks of all relabelings.
    pub fn masks(&self) -> &[u32] {
        &self.sparse
    }

    #[inline]
    pub fn contains(&self, mask: u32) -> bool {
        match &self.dense {
            Some(t) => t[mask as usize],
            None => self.sparse.binary_search(&mask).is_ok(),
        }
    }

    /// Pair mask of the subgraph induced by `verts` (in the given order).
    #[inline]
    pub fn mask_of(&self, graph: &Graph, verts: &[usize]) -> u32 {
        let r = self.r;
        let mut m = 0u32;
        let mut bit = 0;
        for a in 0..r {
            for b in a + 1..r {
                if graph.has_edge(verts[a], verts[b]) {
                    m |= 1 << bit;
                }
                bit += 1;
            }
        }
        m
    }

    #[inline]
    pub fn test(&self, graph: &Graph, verts: &[usize]) -> bool {
        self.contains(self.mask_of(graph, verts))
    }

    /// Same as `test`, rejecting early on the degree of `verts[0]`.
    #[inline]
    pub fn test_rooted(&self, graph: &Graph, verts: &[usize]) -> bool {
        let root = verts[0];
        let mut m = 0u32;
        for (k, &v) in verts[1..].iter().enumerate() {
            m |= (graph.has_edge(root, v) as u32) << k;
        }
        if self.root_degrees >> m.count_ones() & 1 == 0 {
            return false;
        }
        let r = self.r;
        let mut bit = r - 1;
        for a in 1..r {
            for b in a + 1..r {
                if graph.has_edge(verts[a], verts[b]) {
                    m |= 1 << bit;
                }
                bit += 1;
            }
        }
        self.contains(m)
    }
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for t in k..p.len() {
        p.swap(k, t);
        permutations(p, k + 1, f);
        p.swap(k, t);
    }
}

/// Informational rate diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub delta: f64,
    pub m_rate: f64,
    /// Set when the pattern is cyclic but not a simple cycle; the cyclic
    /// formula is applied without theoretical backing.
    pub outside_theory: bool,
}

/// Decomposition remainder rate `delta` and expansion rate `m_rate`.
pub fn theoretical_rates(motif: &Motif, n: usize, rho: f64) -> Result<Rates> {
    if n < 2 || !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument("need n >= 2 and rho in (0,1]".into()));
    }
    let n = n as f64;
    Ok(match motif.shape {
        Shape::Acyclic => Rates { delta: 1.0 / (n * rho), m_rate: 1.0 / (n * rho), outside_theory: false },
        shape => Rates {
            delta: 1.0 / (n * rho.powf(1.5)),
            m_rate: 1.0 / (n * rho.powf(motif.r as f64 / 2.0)),
            outside_theory: shape == Shape::GeneralCyclic,
        },
    })
}
