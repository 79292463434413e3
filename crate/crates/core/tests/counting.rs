use netboot::counts::{binom, count_bruteforce, count_exact};
use netboot::graph::{read_edge_list, sample_graph, Graph, GraphonSpec};
use netboot::motif::{matches, Motif};
use netboot::rng::with_workers;
use netboot::sketch::{sketch_local_counted, SketchPlan};
use proptest::prelude::*;

fn catalog() -> Vec<Motif> {
    vec![Motif::edge(), Motif::twostar(), Motif::triangle(), Motif::fourcycle()]
}

/// Induced isomorphism by trying every relabeling of the subset.
fn matches_by_relabeling(g: &Graph, subset: &[usize], m: &Motif) -> bool {
    let r = subset.len();
    let mut perm: Vec<usize> = (0..r).collect();
    loop {
        let ok = (0..r).all(|a| (a + 1..r).all(|b| g.has_edge(subset[perm[a]], subset[perm[b]]) == m.has_edge(a, b)));
        if ok {
            return true;
        }
        // next lexicographic permutation
        let Some(i) = (0..r - 1).rev().find(|&i| perm[i] < perm[i + 1]) else {
            return false;
        };
        let j = (i + 1..r).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
}

fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    g.induced(perm)
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (4..=max_n, 0.05f64..0.95, any::<u64>()).prop_map(|(n, p, s)| Graph::erdos_renyi(n, p, s))
}

#[test]
fn sbm_edge_density_within_three_standard_errors() {
    let spec = GraphonSpec::sbm_g(0.5);
    let target = 0.5 * (0.65 * 0.65 * 0.6 + 2.0 * 0.65 * 0.35 * 0.2 + 0.35 * 0.35 * 0.2);
    let d: Vec<f64> = (0..100).map(|s| sample_graph(&spec, 200, s).unwrap().0.density()).collect();
    let mean = d.iter().sum::<f64>() / 100.0;
    let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
    assert!((mean - target).abs() <= 3.0 * sd / 10.0, "mean {mean} target {target} se {}", sd / 10.0);
}

#[test]
fn sampling_is_bit_identical_across_workers() {
    for spec in [GraphonSpec::sbm_g(0.7), GraphonSpec::sm_g(1.0)] {
        let a = with_workers(1, || sample_graph(&spec, 300, 9).unwrap());
        let b = with_workers(8, || sample_graph(&spec, 300, 9).unwrap());
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}

#[test]
fn matches_agrees_with_relabeling_oracle() {
    let mut rng_state = 12345u64;
    let mut next = |k: usize| {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((rng_state >> 33) as usize) % k
    };
    for m in catalog() {
        for trial in 0..1000 {
            let n = 6 + next(6);
            let g = Graph::erdos_renyi(n, 0.5, trial as u64 * 31 + m.r() as u64);
            let mut subset: Vec<usize> = vec![];
            while subset.len() < m.r() {
                let v = next(n);
                if !subset.contains(&v) {
                    subset.push(v);
                }
            }
            assert_eq!(matches(&g, &subset, &m).unwrap(), matches_by_relabeling(&g, &subset, &m), "{} {subset:?}", m.name());
        }
    }
}

#[test]
fn kernels_match_bruteforce_on_fifty_graphs() {
    for seed in 0..50u64 {
        let n = 5 + (seed as usize * 7) % 21;
        let g = Graph::erdos_renyi(n, 0.2 + 0.6 * ((seed % 5) as f64 / 4.0), seed);
        for m in catalog() {
            let a = count_exact::<f64>(&g, &m, true, false).unwrap();
            let b = count_bruteforce::<f64>(&g, &m).unwrap();
            assert_eq!(a.t_hat, b.t_hat);
            assert_eq!(a.h1, b.h1);
            assert_eq!(a.h2.as_ref().unwrap(), b.h2.as_ref().unwrap());
        }
    }
}

#[test]
fn sketch_leftover_is_discarded() {
    // n − 1 = 9 others, r − 1 = 2 per block: 4 blocks and one leftover per permutation
    let g = Graph::erdos_renyi(10, 0.5, 1);
    let plan = SketchPlan { n_perms: 7, ..SketchPlan::default_for(10, 3) };
    let (_, c) = sketch_local_counted::<f64>(&g, &Motif::triangle(), &plan).unwrap();
    assert_eq!(c.evaluations, 10 * 7 * 4);
    assert_eq!(c.block_vertices, 10 * 7 * 8);
    assert_eq!(c.discarded, 10 * 7);
}

#[test]
fn sketch_is_deterministic_across_workers() {
    let g = Graph::erdos_renyi(60, 0.3, 2);
    let plan = SketchPlan::default_for(60, 8);
    let a = with_workers(1, || sketch_local_counted::<f64>(&g, &Motif::fourcycle(), &plan).unwrap().0);
    let b = with_workers(8, || sketch_local_counted::<f64>(&g, &Motif::fourcycle(), &plan).unwrap().0);
    assert_eq!(a.h1, b.h1);
    assert_eq!(a.t_hat, b.t_hat);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_is_order_invariant(g in arb_graph(10), seed in any::<u64>(), which in 0usize..4) {
        let m = &catalog()[which];
        let n = g.n();
        let mut subset: Vec<usize> = (0..n).collect();
        let k = (seed as usize) % n;
        subset.rotate_left(k);
        subset.truncate(m.r());
        let base = matches(&g, &subset, m).unwrap();
        let mut rev = subset.clone();
        rev.reverse();
        prop_assert_eq!(base, matches(&g, &rev, m).unwrap());
        let mut rot = subset.clone();
        rot.rotate_left(1);
        prop_assert_eq!(base, matches(&g, &rot, m).unwrap());
    }

    #[test]
    fn hoeffding_identities(g in arb_graph(18), which in 0usize..4) {
        let m = &catalog()[which];
        let s = count_exact::<f64>(&g, m, true, true).unwrap();
        let n = g.n();
        let mean_h1 = s.h1.iter().sum::<f64>() / n as f64;
        prop_assert!((mean_h1 - s.t_hat).abs() <= 1e-10);
        let h2 = s.h2.as_ref().unwrap();
        for i in 0..n {
            let row: f64 = (0..n).filter(|&j| j != i).map(|j| h2.get(i, j)).sum();
            prop_assert!((row - (n - 1) as f64 * s.h1[i]).abs() <= 1e-10);
        }
        let inst = s.instances.as_ref().unwrap().len() as f64;
        prop_assert_eq!(inst, (binom(n, m.r()) as f64 * s.t_hat).round());
    }

    #[test]
    fn tau_is_relabeling_invariant(g in arb_graph(16), shift in 1usize..15, which in 0usize..4) {
        let m = &catalog()[which];
        let n = g.n();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
        prop_assume!({ let mut p = perm.clone(); p.sort(); p.dedup(); p.len() == n });
        let a = count_exact::<f64>(&g, m, false, false).unwrap();
        let b = count_exact::<f64>(&relabel(&g, &perm), m, false, false).unwrap();
        prop_assert!((a.tau_hat - b.tau_hat).abs() <= 1e-12);
        prop_assert!((a.t_hat - b.t_hat).abs() <= 1e-15);
    }

    #[test]
    fn edge_list_round_trip(g in arb_graph(30)) {
        let mut buf = vec![];
        g.write_edge_list(&mut buf).unwrap();
        let (back, rep) = read_edge_list(buf.as_slice(), false, Some(g.n())).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(rep.duplicates + rep.self_loops, 0);
        let mut again = vec![];
        back.write_edge_list(&mut again).unwrap();
        prop_assert_eq!(buf, again);
    }
}
