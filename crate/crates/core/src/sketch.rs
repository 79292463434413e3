//! Permutation-partition sketch of the rooted statistics, and the
//! with-replacement subset baseline.

use crate::counts::{LocalStats, Provenance};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::motif::{IsoSet, Motif};
use crate::rng::{domain, substream};
use crate::scalar::{pairwise_sum, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    PermutationPartition,
    SubsetReplacement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchPlan {
    pub n_perms: usize,
    pub seed: u64,
    pub strategy: Strategy,
}

impl SketchPlan {
    /// `N = ⌈50 ln n⌉` permutations per vertex.
    pub fn default_for(n: usize, seed: u64) -> Self {
        SketchPlan { n_perms: default_perms(n), seed, strategy: Strategy::PermutationPartition }
    }
}

pub fn default_perms(n: usize) -> usize {
    (50.0 * (n.max(2) as f64).ln()).ceil() as usize
}

/// Work accounting for one sketch pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchCounters {
    /// Indicator evaluations.
    pub evaluations: u64,
    /// Vertices placed in some evaluated block.
    pub block_vertices: u64,
    /// Vertices left over after the last complete block.
    pub discarded: u64,
}

pub fn sketch_local<T: Scalar>(graph: &Graph, motif: &Motif, plan: &SketchPlan) -> Result<LocalStats<T>> {
    sketch_local_counted(graph, motif, plan).map(|(s, _)| s)
}

pub fn sketch_subset_baseline<T: Scalar>(graph: &Graph, motif: &Motif, plan: &SketchPlan) -> Result<LocalStats<T>> {
    let plan = SketchPlan { strategy: Strategy::SubsetReplacement, ..*plan };
    sketch_local_counted(graph, motif, &plan).map(|(s, _)| s)
}

/// Sketch with the strategy named in `plan`, also returning work counters.
pub fn sketch_local_counted<T: Scalar>(
    graph: &Graph,
    motif: &Motif,
    plan: &SketchPlan,
) -> Result<(LocalStats<T>, SketchCounters)> {
    let n = graph.n();
    let r = motif.r();
    if n < r {
        return Err(Error::InvalidArgument(format!("need n >= r (n={n}, r={r})")));
    }
    if plan.n_perms == 0 {
        return Err(Error::InvalidArgument("n_perms must be at least 1".into()));
    }
    let iso = IsoSet::new(motif);
    let blocks = (n - 1) / (r - 1);
    let leftover = (n - 1) - blocks * (r - 1);
    let exact_fallback = r == 2;
    let per_vertex: Vec<(T, SketchCounters)> = (0..n)
        .into_par_iter()
        .map(|i| {
            if exact_fallback {
                let hits = (0..n).filter(|&j| j != i && iso.test(graph, &[i, j])).count();
                let c = SketchCounters { evaluations: (n - 1) as u64, block_vertices: (n - 1) as u64, discarded: 0 };
                return (T::from_usize(hits).unwrap() / T::from_usize(n - 1).unwrap(), c);
            }
            match plan.strategy {
                Strategy::PermutationPartition => partition_vertex(graph, &iso, r, i, plan, blocks, leftover),
                Strategy::SubsetReplacement => subset_vertex(graph, &iso, r, i, plan, blocks),
            }
        })
        .collect();
    let mut counters = SketchCounters::default();
    let h1: Vec<T> = per_vertex
        .into_iter()
        .map(|(h, c)| {
            counters.evaluations += c.evaluations;
            counters.block_vertices += c.block_vertices;
            counters.discarded += c.discarded;
            h
        })
        .collect();
    let t_hat = pairwise_sum(&h1) / T::from_usize(n).unwrap();
    let prov = Provenance::Sketched { n_perms: plan.n_perms, seed: plan.seed, strategy: plan.strategy, exact_fallback };
    Ok((LocalStats::from_parts(motif.clone(), t_hat, h1, None, None, prov), counters))
}

fn partition_vertex<T: Scalar>(
    graph: &Graph,
    iso: &IsoSet,
    r: usize,
    i: usize,
    plan: &SketchPlan,
    blocks: usize,
    leftover: usize,
) -> (T, SketchCounters) {
    let n = graph.n();
    let mut others: Vec<usize> = (0..n).filter(|&v| v != i).collect();
    let mut verts = vec![i; r];
    let mut total_hits = 0u64;
    for j in 0..plan.n_perms {
        let mut rng = substream(plan.seed ^ domain::SKETCH, i as u64, j as u64);
        // Start each permutation from the identity so it depends only on (seed, i, j).
        if j > 0 {
            for (k, v) in others.iter_mut().enumerate() {
                *v = if k < i { k } else { k + 1 };
            }
        }
        others.shuffle(&mut rng);
        for block in others.chunks_exact(r - 1) {
            verts[1..].copy_from_slice(block);
            total_hits += iso.test_rooted(graph, &verts) as u64;
        }
    }
    let evals = (plan.n_perms * blocks) as u64;
    let c = SketchCounters {
        evaluations: evals,
        block_vertices: evals * (r as u64 - 1),
        discarded: (plan.n_perms * leftover) as u64,
    };
    (T::from_count(total_hits) / T::lit(evals as f64), c)
}

fn subset_vertex<T: Scalar>(
    graph: &Graph,
    iso: &IsoSet,
    r: usize,
    i: usize,
    plan: &SketchPlan,
    blocks: usize,
) -> (T, SketchCounters) {
    let n = graph.n();
    let mut verts = vec![i; r];
    let mut hits = 0u64;
    for j in 0..plan.n_perms {
        let mut rng = substream(plan.seed ^ domain::SKETCH ^ 1, i as u64, j as u64);
        for _ in 0..blocks {
            let mut k = 1;
            while k < r {
                let v = rng.random_range(0..n);
                if v != i && !verts[1..k].contains(&v) {
                    verts[k] = v;
                    k += 1;
                }
            }
            hits += iso.test_rooted(graph, &verts) as u64;
        }
    }
    let evals = (plan.n_perms * blocks) as u64;
    let c = SketchCounters { evaluations: evals, block_vertices: evals * (r as u64 - 1), discarded: 0 };
    (T::from_count(hits) / T::lit(evals as f64), c)
}
