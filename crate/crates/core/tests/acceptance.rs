//! Acceptance suite. Criteria run sequentially in one test so wall-clock
//! measurements see an otherwise idle process; each prints one line.

use netboot::bootstrap::{
    baseline_eg, baseline_ss, draw_weights, ecdf, mb_linear, mb_multiplicative, mb_quadratic, MultiplierSpec,
};
use netboot::counts::{count_bruteforce, count_exact};
use netboot::esp::esp;
use netboot::expansion::{empirical_coefficients, gn_hat, standard_grid, sup_distance};
use netboot::graph::{sample_graph, Graph, GraphonKind, GraphonSpec};
use netboot::harness::{
    coverage_truth, log_log_slope, preset, run_cdf_error, run_coverage, run_timing, ExperimentConfig, IntervalKind,
    MethodName, Phase,
};
use netboot::motif::Motif;
use netboot::population::{nested_mc, McSizes};
use netboot::rng::with_workers;
use netboot::sketch::{sketch_local, SketchPlan};
use netboot::smooth::{bootstrap_smooth, SmoothFunctional};
use std::io::Write;
use std::time::Instant;

type Outcome = (bool, String);

fn catalog() -> Vec<Motif> {
    vec![Motif::edge(), Motif::twostar(), Motif::triangle(), Motif::fourcycle()]
}

// Bypasses the test harness capture so the lines show on passing runs too.
fn say(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    go(0, n, r, &mut vec![], &mut out);
    out
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut bad = vec![];
    for seed in 0..50u64 {
        let n = 5 + (seed as usize * 13) % 21;
        let g = Graph::erdos_renyi(n, 0.15 + 0.7 * ((seed % 7) as f64 / 6.0), 1_000 + seed);
        for m in catalog() {
            let a = count_exact::<f64>(&g, &m, true, false).unwrap();
            let b = count_bruteforce::<f64>(&g, &m).unwrap();
            if a.t_hat != b.t_hat || a.h1 != b.h1 || a.h2 != b.h2 {
                bad.push(format!("seed {seed} {}", m.name()));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    (bad.is_empty() && secs < 60.0, format!("50 graphs x 4 motifs, mismatches {bad:?}, {secs:.1}s"))
}

fn hoeffding_identities() -> Outcome {
    let mut worst = [0.0f64; 3];
    let mut ok = true;
    for k in 0..20u64 {
        let n = 20 + 9 * k as usize;
        let g = if k % 2 == 0 {
            sample_graph(&GraphonSpec::sbm_g(1.0), n, 500 + k).unwrap().0
        } else {
            Graph::erdos_renyi(n, 0.3, 500 + k)
        };
        for m in catalog() {
            let s = count_exact::<f64>(&g, &m, true, false).unwrap();
            let h2 = s.h2.as_ref().unwrap();
            let max_h1 = s.h1.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let sum_g1 = s.g1.iter().sum::<f64>().abs();
            let mean_h1 = (s.h1.iter().sum::<f64>() / n as f64 - s.t_hat).abs();
            let rows = (0..n)
                .map(|i| {
                    let row: f64 = (0..n).filter(|&j| j != i).map(|j| h2.get(i, j)).sum();
                    (row - (n - 1) as f64 * s.h1[i]).abs()
                })
                .fold(0.0f64, f64::max);
            ok &= sum_g1 <= n as f64 * 1e-12 * max_h1 && mean_h1 <= 1e-10 && rows <= 1e-10;
            worst[0] = worst[0].max(sum_g1 / (n as f64 * max_h1.max(f64::MIN_POSITIVE)));
            worst[1] = worst[1].max(mean_h1);
            worst[2] = worst[2].max(rows);
        }
    }
    (ok, format!("20 graphs n<=191, worst |sum g1|/(n max H1) {:.1e}, |mean H1 - T| {:.1e}, row sum {:.1e}", worst[0], worst[1], worst[2]))
}

fn multiplier_moments() -> Outcome {
    let t = Instant::now();
    let xi = draw_weights(1_000_000, &MultiplierSpec::gaussian_product(2024), 0);
    let k = xi.len() as f64;
    let mean = xi.iter().sum::<f64>() / k;
    let var = xi.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
    let m3 = xi.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / k;
    let secs = t.elapsed().as_secs_f64();
    let ok = (mean - 1.0).abs() <= 0.01 && (var - 1.0).abs() <= 0.02 && (m3 - 1.0).abs() <= 0.05 && secs < 10.0;
    (ok, format!("mean {mean:.4} var {var:.4} third {m3:.4}, {secs:.2}s"))
}

fn mb_linear_variance() -> Outcome {
    let g = Graph::erdos_renyi(200, 0.5, 77);
    let s = count_exact::<f64>(&g, &Motif::triangle(), false, false).unwrap();
    let run = mb_linear(&s, &MultiplierSpec::gaussian_product(78), 50_000).unwrap();
    let got = variance(&run.raw());
    let (n, r) = (200.0, 3.0);
    let want = r * r / (n * n) * s.g1.iter().map(|x| x * x).sum::<f64>();
    let rel = (got / want - 1.0).abs();
    (rel <= 0.03, format!("variance {got:.4e} vs {want:.4e}, rel diff {rel:.4}"))
}

fn newton_girard() -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=12usize {
        let xi = draw_weights(n, &MultiplierSpec::gaussian_product(n as u64), 0);
        for r in 2..=4usize.min(n) {
            let direct: f64 = subsets(n, r).iter().map(|s| s.iter().map(|&i| xi[i]).product::<f64>()).sum();
            worst = worst.max((esp(&xi, r) - direct).abs() / direct.abs().max(f64::MIN_POSITIVE));
        }
    }
    let mut exact = true;
    for (n, seed) in [(8usize, 1u64), (12, 2), (40, 3)] {
        let g = Graph::erdos_renyi(n, 0.5, seed);
        for m in catalog() {
            let s = count_exact::<f64>(&g, &m, false, true).unwrap();
            let run = mb_multiplicative(&s, &MultiplierSpec::ones(), 4).unwrap();
            exact &= run.raw().iter().all(|&t| t == s.t_hat);
        }
    }
    (worst <= 1e-12 && exact, format!("worst relative error {worst:.2e}, unit weights reproduce T exactly: {exact}"))
}

fn decomposition_closeness() -> Outcome {
    let g = Graph::erdos_renyi(60, 0.5, 60);
    let s = count_exact::<f64>(&g, &Motif::triangle(), true, true).unwrap();
    let spec = MultiplierSpec::gaussian_product(61);
    let m = mb_multiplicative(&s, &spec, 2_000).unwrap();
    let q = mb_quadratic(&s, &spec, 2_000).unwrap();
    let diff: Vec<f64> = m.replicates.iter().zip(&q.replicates).map(|(a, b)| a - b).collect();
    let ratio = variance(&diff) / variance(&m.replicates);
    (ratio <= 0.05, format!("Var(M-Q)/Var(M) = {ratio:.4}"))
}

fn expansion_closeness() -> Outcome {
    let t = Instant::now();
    let (g, _) = sample_graph(&GraphonSpec::sbm_g(1.0), 160, 7).unwrap();
    let s = count_exact::<f64>(&g, &Motif::triangle(), true, false).unwrap();
    let run = mb_quadratic(&s, &MultiplierSpec::gaussian_product(3), 100_000).unwrap();
    let grid = standard_grid();
    let co = empirical_coefficients(&s).unwrap();
    let gn: Vec<f64> = grid.iter().map(|&u| gn_hat(&co, u)).collect();
    let sup = sup_distance(&ecdf(&run, &grid), &gn).unwrap();
    let secs = t.elapsed().as_secs_f64();
    (sup <= 0.05 && secs < 300.0, format!("sup |ECDF_MBQ - G_n| = {sup:.4}, {secs:.1}s"))
}

fn edgeworth_beats_normal() -> Outcome {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = vec![];
    for name in ["tableA1", "tableA2"] {
        let tab = run_cdf_error(&preset(name).unwrap()).unwrap();
        let ew = tab.row(MethodName::Ew).unwrap();
        let nm = tab.row(MethodName::Normal).unwrap();
        let sep = tab.separated(MethodName::Ew, MethodName::Normal).unwrap();
        ok &= sep;
        parts.push(format!(
            "{}: EW {:.4} normal {:.4} gap {:.4} need > {:.4}",
            tab.target,
            ew.mean,
            nm.mean,
            nm.mean - ew.mean,
            3.0 * ew.budget.max(nm.budget)
        ));
    }
    let secs = t.elapsed().as_secs_f64();
    (ok && secs < 1800.0, format!("{}, {secs:.0}s", parts.join("; ")))
}

// Not a criterion: the same standardized comparison with ten times the truth sample.
fn edgeworth_beats_normal_large_m() -> String {
    let cfg = ExperimentConfig { m: 100_000, ..preset("tableA1").unwrap() };
    let tab = run_cdf_error(&cfg).unwrap();
    let ew = tab.row(MethodName::Ew).unwrap();
    let nm = tab.row(MethodName::Normal).unwrap();
    format!(
        "M = 1e5 triangle: EW {:.4} normal {:.4} gap {:.4} vs 3x budget {:.4}, separated {}",
        ew.mean,
        nm.mean,
        nm.mean - ew.mean,
        3.0 * ew.budget.max(nm.budget),
        tab.separated(MethodName::Ew, MethodName::Normal).unwrap()
    )
}

/// Induced triangle density of a block model by summing over block triples.
fn block_triangle_density(spec: &GraphonSpec) -> f64 {
    let GraphonKind::Sbm { b, pi } = &spec.kind else { panic!("block model expected") };
    let k = pi.len();
    let p = |a: usize, c: usize| spec.rho * b[a][c];
    let mut th = 0.0;
    for x in 0..k {
        for y in 0..k {
            for z in 0..k {
                th += pi[x] * pi[y] * pi[z] * p(x, y) * p(y, z) * p(x, z);
            }
        }
    }
    th
}

fn coverage() -> Outcome {
    let t = Instant::now();
    let cfg = preset("fig2-coverage").unwrap();
    let oracle = block_triangle_density(&cfg.graphon);
    let truth = coverage_truth(&cfg).unwrap();
    let tab = run_coverage(&cfg, None).unwrap();
    let row = tab.row(MethodName::MbQ, IntervalKind::Corrected).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = (truth - oracle).abs() <= 1e-12 && (0.88..=0.99).contains(&row.coverage) && secs < 1200.0;
    (
        ok,
        format!(
            "truth {truth:.5} (block sum {oracle:.5}), corrected coverage {:.3} over {} datasets, {secs:.0}s",
            row.coverage, row.datasets
        ),
    )
}

fn sketch_unbiased() -> Outcome {
    let t = Instant::now();
    let g = Graph::erdos_renyi(200, 0.3, 200);
    let mut worst = 0.0f64;
    let mut ok = true;
    for m in [Motif::triangle(), Motif::twostar()] {
        let exact = count_exact::<f64>(&g, &m, false, false).unwrap();
        let draws: Vec<Vec<f64>> = (0..200u64)
            .map(|seed| sketch_local::<f64>(&g, &m, &SketchPlan::default_for(200, 9_000 + seed)).unwrap().h1)
            .collect();
        for i in 0..200 {
            let xs: Vec<f64> = draws.iter().map(|d| d[i]).collect();
            let mean = xs.iter().sum::<f64>() / 200.0;
            let se = (variance(&xs) / 200.0).sqrt();
            let gap = (mean - exact.h1[i]).abs();
            if se == 0.0 {
                ok &= gap <= 1e-12;
            } else {
                ok &= gap <= 4.0 * se;
                worst = worst.max(gap / se);
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    (ok, format!("triangle and two-star, N = {}, worst |mean - H1|/SE {worst:.2}, {secs:.0}s", SketchPlan::default_for(200, 0).n_perms))
}

fn timing_shape() -> Outcome {
    let slope_cfg = ExperimentConfig {
        motif: Some("triangle".into()),
        methods: vec![MethodName::MbL],
        ns: vec![500, 1_000, 2_000, 4_000],
        b: 2_000,
        ..preset("fig3-timing").unwrap()
    };
    let tab = run_timing(&slope_cfg).unwrap();
    let secs: Vec<f64> =
        slope_cfg.ns.iter().map(|&n| tab.get(MethodName::MbL, n, Phase::Replicate).unwrap().seconds).collect();
    let ns: Vec<f64> = slope_cfg.ns.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&ns, &secs);

    let four = ExperimentConfig { ns: vec![4_000], timing_repeats: 1, warmup: false, ..preset("fig3-timing").unwrap() };
    let tab = run_timing(&four).unwrap();
    let exact = tab.get(MethodName::MbL, 4_000, Phase::Precompute).unwrap().seconds;
    let apx = tab.get(MethodName::MbLApx, 4_000, Phase::Precompute).unwrap().seconds;
    (
        (0.8..=1.3).contains(&slope) && apx < exact,
        format!("MB-L replicate slope {slope:.3}; four-cycle precompute at n = 4000: sketch {apx:.1}s exact {exact:.1}s"),
    )
}

fn determinism() -> Outcome {
    let pipelines = || -> Vec<String> {
        let mut out = vec![];
        let (g, lat) = sample_graph(&GraphonSpec::sbm_g(0.8), 70, 5).unwrap();
        out.push(format!("{g:?}{lat:?}"));
        let (h, lat) = sample_graph(&GraphonSpec::sm_g(1.0), 70, 6).unwrap();
        out.push(format!("{h:?}{lat:?}"));
        out.push(format!("{:?}", Graph::erdos_renyi(70, 0.4, 7)));
        let tri = count_exact::<f64>(&g, &Motif::triangle(), true, true).unwrap();
        let star = count_exact::<f64>(&g, &Motif::twostar(), true, false).unwrap();
        out.push(format!("{tri:?}"));
        let sk = sketch_local::<f64>(&g, &Motif::fourcycle(), &SketchPlan::default_for(70, 8)).unwrap();
        out.push(format!("{sk:?}"));
        let spec = MultiplierSpec::gaussian_product(9);
        out.push(format!("{:?}", mb_linear(&tri, &spec, 400).unwrap()));
        out.push(format!("{:?}", mb_linear(&sk, &spec, 400).unwrap()));
        out.push(format!("{:?}", mb_quadratic(&tri, &spec, 400).unwrap()));
        out.push(format!("{:?}", mb_multiplicative(&tri, &spec, 400).unwrap()));
        out.push(format!("{:?}", baseline_eg(&g, &Motif::triangle(), 100, 10).unwrap()));
        out.push(format!("{:?}", baseline_ss(&g, &Motif::triangle(), 35, 100, 11).unwrap()));
        let f = SmoothFunctional::parse("3T/V").unwrap();
        out.push(format!("{:?}", bootstrap_smooth(&f, &[tri, star], 1.0, &spec, 400).unwrap()));
        let mc = McSizes { outer: 500, inner: 50, seed: 12, force_mc: false };
        out.push(format!("{:?}", nested_mc(&GraphonSpec::sm_g(1.0), &Motif::triangle(), &mc).unwrap()));
        let small = |name: &str| ExperimentConfig { m: 60, b: 150, repeats: 2, n: 50, ..preset(name).unwrap() };
        out.push(run_cdf_error(&small("fig1-sbm-triangle")).unwrap().to_csv().unwrap());
        out.push(run_cdf_error(&small("tableA2")).unwrap().to_csv().unwrap());
        out.push(run_coverage(&ExperimentConfig { m: 20, ..small("fig2-coverage") }, None).unwrap().to_csv().unwrap());
        out
    };
    let a = with_workers(1, pipelines);
    let b = with_workers(1, pipelines);
    let c = with_workers(8, pipelines);
    let differing: Vec<usize> = (0..a.len()).filter(|&k| a[k] != b[k] || a[k] != c[k]).collect();
    (differing.is_empty(), format!("{} pipelines, differing {differing:?}", a.len()))
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("oracle equivalence", oracle_equivalence),
        ("Hoeffding identities", hoeffding_identities),
        ("multiplier moments", multiplier_moments),
        ("MB-L conditional variance", mb_linear_variance),
        ("Newton-Girard MB-M", newton_girard),
        ("decomposition closeness", decomposition_closeness),
        ("bootstrap vs expansion", expansion_closeness),
        ("Edgeworth beats normal", edgeworth_beats_normal),
        ("coverage", coverage),
        ("sketch unbiasedness", sketch_unbiased),
        ("timing shape", timing_shape),
        ("determinism", determinism),
    ];
    let mut failed = vec![];
    for (k, (name, check)) in criteria.into_iter().enumerate() {
        let (ok, detail) = check();
        say(&format!("[{}] {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, k + 1));
        if k + 1 == 8 {
            say(&format!("[INFO]  8 {}", edgeworth_beats_normal_large_m()));
        }
        if !ok {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
