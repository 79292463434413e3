//! `netboot` command-line front end.

use clap::{Args, Parser, Subcommand, ValueEnum};
use netboot::bootstrap::{
    baseline_eg, baseline_ss, ecdf, ecdf_of, mb_linear, mb_multiplicative, mb_quadratic, BootstrapRun, MultiplierSpec,
};
use netboot::counts::{count_exact, LocalStats};
use netboot::expansion::{empirical_coefficients, gn_hat, grid, phi_cdf, population_coefficients, McSizes};
use netboot::graph::{
    ingest_rollcall, read_edge_list, read_rollcall_csv, sample_graph, Graph, GraphonKind, GraphonSpec, Latents, SmoothFormula,
};
use netboot::harness::{self, ExperimentConfig, ExperimentOutput};
use netboot::interval::{corrected_count_ci, corrected_smooth_ci, percentile_ci, percentile_smooth_ci, CiResult};
use netboot::motif::Motif;
use netboot::sketch::{default_perms, sketch_local, SketchPlan, Strategy};
use netboot::smooth::{bootstrap_smooth, SmoothFunctional};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const FORMATS: &str = "\
Formats:
  edge list   one `i j` pair per line, 0-based unless --one-based; `#` starts a comment.
              A leading comment containing `n=<count>` fixes the vertex count.
  roll-call   CSV `member,party,vote,...` with an optional `member,...` header;
              Y/N votes, anything else abstains.
  graphon     sbm-g | sm-g | constant:<p> | path to a TOML or JSON spec
  motif       edge | twostar | triangle | fourcycle | <r>:<upper-triangle bits>
  function    T | aT+bV | TV | cT/V | T2V2   (T triangle, V two-star density)
  grid        lo:hi:step
  h2 file     row-major little-endian f64, n*n values
  CSV output  first line `# netboot <version> config=<sha256> seed=<seed>`
  JSON output the same fields under `meta`
Errors exit with status 2 and a JSON object {\"error\", \"message\"} on stderr.";

#[derive(Parser)]
#[command(name = "netboot", version, about = "Multiplier bootstraps and Edgeworth corrections for network motif statistics", after_help = FORMATS)]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph from a graphon and write its edge list.
    Generate(GenerateArgs),
    /// Canonicalize an edge list or build an agreement graph from roll-call votes.
    Ingest(IngestArgs),
    /// Exact or sketched motif densities and rooted statistics (JSON).
    Count(CountArgs),
    /// Bootstrap ECDF of the standardized count (CSV u,ecdf).
    Bootstrap(BootstrapArgs),
    /// Empirical or population Edgeworth expansion (CSV u,gn_hat,phi).
    Edgeworth(EdgeworthArgs),
    /// MB-Q bootstrap of a smooth functional of densities (CSV u,ecdf).
    Smooth(SmoothArgs),
    /// Percentile and corrected bootstrap intervals (JSON).
    Ci(CiArgs),
    /// Monte Carlo study from a config file or preset (CSV).
    Experiment(ExperimentArgs),
}

#[derive(Args, Serialize)]
struct InputArgs {
    /// Edge list path.
    #[arg(long)]
    input: PathBuf,
    /// Vertex ids start at 1.
    #[arg(long)]
    one_based: bool,
    /// Vertex count; overrides the header and the largest id.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Serialize)]
struct OutputArgs {
    /// Primary output path; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
    /// JSON metadata path; defaults to `<output>.json` when --output is set.
    #[arg(long)]
    #[serde(skip)]
    meta: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    #[arg(long)]
    graphon: String,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize)]
struct IngestArgs {
    /// Edge list to canonicalize.
    #[arg(long, conflicts_with = "rollcall", required_unless_present = "rollcall")]
    input: Option<PathBuf>,
    #[arg(long)]
    one_based: bool,
    /// Roll-call CSV.
    #[arg(long)]
    rollcall: Option<PathBuf>,
    /// Agreement threshold; skips the histogram rule.
    #[arg(long, requires = "rollcall")]
    threshold: Option<u32>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SketchStrategy {
    Partition,
    Subset,
}

#[derive(Args, Serialize)]
struct CountArgs {
    #[arg(long)]
    motif: String,
    #[command(flatten)]
    input: InputArgs,
    /// Write the pairwise table to this path.
    #[arg(long)]
    #[serde(skip)]
    h2: Option<PathBuf>,
    /// Randomized sketch instead of exact counts.
    #[arg(long)]
    sketch: bool,
    /// Permutations per vertex; defaults to ceil(50 ln n).
    #[arg(long, requires = "sketch")]
    perms: Option<usize>,
    #[arg(long, value_enum, default_value = "partition", requires = "sketch")]
    strategy: SketchStrategy,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BootMethod {
    Mbm,
    Mbq,
    Mbl,
    MblApx,
    Eg,
    Ss,
}

#[derive(Args, Serialize)]
struct BootstrapArgs {
    #[arg(long, value_enum)]
    method: BootMethod,
    #[arg(long)]
    motif: String,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long = "B", default_value_t = 1000)]
    b: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "-3:3:0.1", allow_hyphen_values = true)]
    grid: String,
    /// Subsample size for ss; defaults to n/2.
    #[arg(long)]
    sub: Option<usize>,
    /// Sketch permutations for mbl-apx.
    #[arg(long)]
    perms: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize)]
struct EdgeworthArgs {
    #[arg(long)]
    motif: String,
    /// Edge list for empirical coefficients.
    #[arg(long, required_unless_present = "graphon")]
    input: Option<PathBuf>,
    #[arg(long)]
    one_based: bool,
    /// Graphon for population coefficients (needs --n).
    #[arg(long, conflicts_with = "input", requires = "n")]
    graphon: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long)]
    n: Option<usize>,
    /// Seed of the population Monte Carlo, when one is needed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "-3:3:0.1", allow_hyphen_values = true)]
    grid: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize)]
struct SmoothArgs {
    #[arg(long)]
    function: String,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long = "B", default_value_t = 1000)]
    b: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Sparsity level used to normalize the densities; the edge density when absent.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value = "-3:3:0.1", allow_hyphen_values = true)]
    grid: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize)]
struct CiArgs {
    #[arg(long, conflicts_with = "function", required_unless_present = "function")]
    motif: Option<String>,
    #[arg(long)]
    function: Option<String>,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "mbq")]
    method: BootMethod,
    #[arg(long = "B", default_value_t = 2000)]
    b: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Family size for a Bonferroni-adjusted level.
    #[arg(long, default_value_t = 1)]
    family: usize,
    /// Sparsity level for smooth functionals; the edge density when absent.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ExperimentArgs {
    /// TOML config file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = harness::PRESETS)]
    preset: Option<String>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of Monte Carlo datasets.
    #[arg(long)]
    m: Option<usize>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
    /// CSV table path; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
    /// Line-oriented JSON: a metadata line, then one line per table row.
    #[arg(long)]
    #[serde(skip)]
    json: Option<PathBuf>,
}

#[derive(Debug)]
struct CliError {
    kind: String,
    message: String,
}

impl From<netboot::Error> for CliError {
    fn from(e: netboot::Error) -> Self {
        CliError { kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { kind: "io".into(), message: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError { kind: "serialize".into(), message: e.to_string() }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError { kind: "invalid_argument".into(), message: msg.into() }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Serialize)]
struct Meta {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    seed: Option<u64>,
}

impl Meta {
    fn new(command: &'static str, args: &impl Serialize, inputs: &[&[u8]], seed: Option<u64>) -> CliResult<Meta> {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(serde_json::to_vec(args)?);
        for bytes in inputs {
            h.update(Sha256::digest(bytes));
        }
        let config_hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(Meta { tool: "netboot", version: env!("CARGO_PKG_VERSION"), command, config_hash, seed })
    }

    fn header(&self) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!("# netboot {} config={} seed={}\n", self.version, self.config_hash, seed)
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn write_out(path: Option<&Path>, body: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn write_meta(out: &OutputArgs, value: &serde_json::Value) -> CliResult<()> {
    let path = match (&out.meta, &out.output) {
        (Some(m), _) => m.clone(),
        (None, Some(o)) => {
            let mut s = o.clone().into_os_string();
            s.push(".json");
            PathBuf::from(s)
        }
        (None, None) => return Ok(()),
    };
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn to_json(meta: &Meta, body: serde_json::Value) -> CliResult<String> {
    let mut v = body;
    v["meta"] = serde_json::to_value(meta)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn parse_graphon(s: &str, rho: f64) -> CliResult<GraphonSpec> {
    let spec = match s {
        "sbm-g" => GraphonSpec::sbm_g(rho),
        "sm-g" => GraphonSpec::sm_g(rho),
        other if other.starts_with("constant:") => {
            let p: f64 = other["constant:".len()..].parse().map_err(|_| invalid(format!("bad constant graphon {other:?}")))?;
            GraphonSpec { kind: GraphonKind::Smooth(SmoothFormula::Constant(p)), rho }
        }
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("graphon {path:?} is neither a known name nor a readable file: {e}")))?;
            let mut spec: GraphonSpec = if path.ends_with(".json") {
                serde_json::from_str(&text)?
            } else {
                toml::from_str(&text).map_err(|e| CliError { kind: "parse".into(), message: e.to_string() })?
            };
            spec.rho *= rho;
            spec
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| invalid(format!("bad grid {s:?}")))?;
    let [lo, hi, step] = nums[..] else {
        return Err(invalid(format!("grid must be lo:hi:step, got {s:?}")));
    };
    Ok(grid(lo, hi, step)?)
}

/// Vertex count from a leading `# ... n=<count>` comment.
fn header_n(text: &str) -> Option<usize> {
    let line = text.lines().next()?.strip_prefix('#')?;
    line.split_whitespace().find_map(|tok| tok.strip_prefix("n=")?.parse().ok())
}

fn load_graph(path: &Path, one_based: bool, n: Option<usize>) -> CliResult<(Graph, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| CliError { kind: "io".into(), message: format!("{}: {e}", path.display()) })?;
    let text = String::from_utf8_lossy(&bytes);
    let n = n.or_else(|| header_n(&text));
    let (g, _) = read_edge_list(text.as_bytes(), one_based, n)?;
    Ok((g, bytes))
}

fn edge_list_text(header: &str, g: &Graph) -> CliResult<String> {
    let mut buf = header.as_bytes().to_vec();
    g.write_edge_list(&mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii"))
}

fn csv_table(header: &str, columns: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(header.as_bytes().to_vec());
    let err = |e: csv::Error| CliError { kind: "io".into(), message: e.to_string() };
    w.write_record(columns).map_err(err)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError { kind: "io".into(), message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}

fn stats_json(stats: &LocalStats<f64>) -> serde_json::Value {
    json!({
        "motif": stats.motif.name(),
        "n": stats.n(),
        "t_hat": stats.t_hat,
        "tau_hat": stats.tau_hat,
        "h1": stats.h1,
        "provenance": stats.provenance,
    })
}

fn run_json(run: &BootstrapRun<f64>) -> serde_json::Value {
    json!({
        "method": run.method.label(),
        "B": run.b,
        "n": run.n,
        "r": run.r,
        "center": run.center,
        "scale": run.scale,
        "replicate_mean": run.mean(),
    })
}

fn generate(a: &GenerateArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed);
    let spec = parse_graphon(&a.graphon, a.rho)?;
    let (g, latents) = sample_graph(&spec, a.n, seed)?;
    let meta = Meta::new("generate", a, &[], Some(seed))?;
    let header = format!("# netboot {} n={} config={} seed={}\n", meta.version, a.n, meta.config_hash, seed);
    write_out(a.out.output.as_deref(), &edge_list_text(&header, &g)?)?;
    let latents = match latents {
        Latents::Uniform(u) => json!({ "uniform": u }),
        Latents::Blocks(b) => json!({ "blocks": b }),
    };
    write_meta(&a.out, &json!({ "meta": meta, "graphon": spec, "n": a.n, "edges": g.edge_count(), "latents": latents }))
}

fn ingest(a: &IngestArgs) -> CliResult<()> {
    let (g, bytes, report) = if let Some(path) = &a.rollcall {
        let bytes = std::fs::read(path)?;
        let (ids, parties, votes) = read_rollcall_csv(bytes.as_slice())?;
        let rc = ingest_rollcall(&votes, &parties, a.threshold)?;
        let report = json!({
            "members": ids,
            "threshold": rc.threshold,
            "same_party_histogram": rc.same_party,
            "cross_party_histogram": rc.cross_party,
        });
        (rc.graph, bytes, report)
    } else {
        let path = a.input.as_ref().expect("clap requires input or rollcall");
        let bytes = std::fs::read(path)?;
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let (g, rep) = read_edge_list(text.as_bytes(), a.one_based, header_n(&text))?;
        (g, bytes, serde_json::to_value(rep)?)
    };
    let meta = Meta::new("ingest", a, &[&bytes], None)?;
    let header = format!("# netboot {} n={} config={} seed=none\n", meta.version, g.n(), meta.config_hash);
    write_out(a.out.output.as_deref(), &edge_list_text(&header, &g)?)?;
    write_meta(&a.out, &json!({ "meta": meta, "n": g.n(), "edges": g.edge_count(), "report": report }))
}

fn count(a: &CountArgs) -> CliResult<()> {
    let motif = Motif::parse(&a.motif)?;
    let (g, bytes) = load_graph(&a.input.input, a.input.one_based, a.input.n)?;
    let (stats, seed) = if a.sketch {
        let seed = resolve_seed(a.seed);
        let strategy = match a.strategy {
            SketchStrategy::Partition => Strategy::PermutationPartition,
            SketchStrategy::Subset => Strategy::SubsetReplacement,
        };
        let plan = SketchPlan { n_perms: a.perms.unwrap_or_else(|| default_perms(g.n())), seed, strategy };
        (sketch_local::<f64>(&g, &motif, &plan)?, Some(seed))
    } else {
        (count_exact::<f64>(&g, &motif, a.h2.is_some(), false)?, None)
    };
    if a.sketch && a.h2.is_some() {
        return Err(invalid("the sketch does not produce a pairwise table"));
    }
    let meta = Meta::new("count", a, &[&bytes], seed)?;
    let mut body = stats_json(&stats);
    if let (Some(path), Some(h2)) = (&a.h2, &stats.h2) {
        let mut buf = Vec::with_capacity(8 * g.n() * g.n());
        for i in 0..g.n() {
            for v in h2.row(i) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(path, buf)?;
        body["h2_path"] = json!(path);
    }
    write_out(a.output.as_deref(), &to_json(&meta, body)?)
}

fn bootstrap_run(
    method: BootMethod,
    g: &Graph,
    motif: &Motif,
    b: usize,
    seed: u64,
    sub: Option<usize>,
    perms: Option<usize>,
) -> CliResult<(BootstrapRun<f64>, Option<LocalStats<f64>>)> {
    let weights = MultiplierSpec::gaussian_product(seed);
    Ok(match method {
        BootMethod::Mbm => {
            let s = count_exact::<f64>(g, motif, true, true)?;
            (mb_multiplicative(&s, &weights, b)?, Some(s))
        }
        BootMethod::Mbq => {
            let s = count_exact::<f64>(g, motif, true, false)?;
            (mb_quadratic(&s, &weights, b)?, Some(s))
        }
        BootMethod::Mbl => {
            let s = count_exact::<f64>(g, motif, true, false)?;
            (mb_linear(&s, &weights, b)?, Some(s))
        }
        BootMethod::MblApx => {
            let plan = SketchPlan { n_perms: perms.unwrap_or_else(|| default_perms(g.n())), ..SketchPlan::default_for(g.n(), seed) };
            (mb_linear(&sketch_local::<f64>(g, motif, &plan)?, &weights, b)?, None)
        }
        BootMethod::Eg => (baseline_eg(g, motif, b, seed)?, None),
        BootMethod::Ss => (baseline_ss(g, motif, sub.unwrap_or(g.n() / 2), b, seed)?, None),
    })
}

fn bootstrap(a: &BootstrapArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed);
    let motif = Motif::parse(&a.motif)?;
    let grid = parse_grid(&a.grid)?;
    let (g, bytes) = load_graph(&a.input.input, a.input.one_based, a.input.n)?;
    let (run, _) = bootstrap_run(a.method, &g, &motif, a.b, seed, a.sub, a.perms)?;
    let meta = Meta::new("bootstrap", a, &[&bytes], Some(seed))?;
    let e = ecdf(&run, &grid);
    let csv = csv_table(&meta.header(), &["u", "ecdf"], grid.iter().zip(&e).map(|(&u, &f)| vec![u, f]))?;
    write_out(a.out.output.as_deref(), &csv)?;
    write_meta(&a.out, &json!({ "meta": meta, "motif": motif.name(), "run": run_json(&run) }))
}

fn edgeworth(a: &EdgeworthArgs) -> CliResult<()> {
    let motif = Motif::parse(&a.motif)?;
    let grid = parse_grid(&a.grid)?;
    let (co, bytes, seed) = match (&a.input, &a.graphon) {
        (Some(path), _) => {
            let (g, bytes) = load_graph(path, a.one_based, a.n)?;
            (empirical_coefficients(&count_exact::<f64>(&g, &motif, true, false)?)?, bytes, None)
        }
        (None, Some(name)) => {
            let spec = parse_graphon(name, a.rho)?;
            let seed = resolve_seed(a.seed);
            let mc = McSizes { seed, ..McSizes::default() };
            let n = a.n.ok_or_else(|| invalid("--graphon needs --n"))?;
            (population_coefficients(&spec, &motif, n, &mc)?, vec![], Some(seed))
        }
        (None, None) => return Err(invalid("need --input or --graphon")),
    };
    let meta = Meta::new("edgeworth", a, &[&bytes], seed)?;
    let rows = grid.iter().map(|&u| vec![u, gn_hat(&co, u), phi_cdf(u)]);
    write_out(a.out.output.as_deref(), &csv_table(&meta.header(), &["u", "gn_hat", "phi"], rows)?)?;
    write_meta(&a.out, &json!({ "meta": meta, "motif": motif.name(), "coefficients": co, "skew": co.skew() }))
}

fn smooth_stats(f: &SmoothFunctional, g: &Graph) -> CliResult<Vec<LocalStats<f64>>> {
    Ok(f.motifs.iter().map(|m| count_exact::<f64>(g, m, true, false)).collect::<Result<_, _>>()?)
}

fn smooth(a: &SmoothArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed);
    let f = SmoothFunctional::parse(&a.function)?;
    let grid = parse_grid(&a.grid)?;
    let (g, bytes) = load_graph(&a.input.input, a.input.one_based, a.input.n)?;
    let rho = a.rho.unwrap_or_else(|| g.density());
    let out = bootstrap_smooth(&f, &smooth_stats(&f, &g)?, rho, &MultiplierSpec::gaussian_product(seed), a.b)?;
    let meta = Meta::new("smooth", a, &[&bytes], Some(seed))?;
    let e = ecdf_of(&out.replicates, &grid);
    let csv = csv_table(&meta.header(), &["u", "ecdf"], grid.iter().zip(&e).map(|(&u, &p)| vec![u, p]))?;
    write_out(a.out.output.as_deref(), &csv)?;
    write_meta(
        &a.out,
        &json!({
            "meta": meta,
            "function": out.function,
            "n": out.n,
            "rho": rho,
            "rho_estimated": a.rho.is_none(),
            "B": out.b,
            "coefficients": {
                "f_hat": out.f_hat,
                "sigma_f": out.sigma_f_tilde,
                "a1": out.a1_tilde,
                "a2": out.a2_tilde,
                "b1": out.b1_hat,
                "b2": out.b2_hat,
            },
        }),
    )
}

fn ci_json(ci: &CiResult<f64>) -> serde_json::Value {
    json!({ "level": ci.level, "lower": ci.lower, "upper": ci.upper, "terms": ci.correction_terms })
}

fn ci(a: &CiArgs) -> CliResult<()> {
    if a.family == 0 {
        return Err(invalid("--family must be at least 1"));
    }
    let seed = resolve_seed(a.seed);
    let level = netboot::interval::bonferroni_level(a.family, a.level);
    let (g, bytes) = load_graph(&a.input.input, a.input.one_based, a.input.n)?;
    let (target, percentile, corrected) = if let Some(m) = &a.motif {
        let motif = Motif::parse(m)?;
        if !matches!(a.method, BootMethod::Mbq | BootMethod::Mbl | BootMethod::Mbm) {
            return Err(invalid("corrected intervals need mbq, mbl or mbm"));
        }
        let (run, stats) = bootstrap_run(a.method, &g, &motif, a.b, seed, None, None)?;
        let stats = stats.expect("exact statistics");
        (motif.name(), percentile_ci(&run, level)?, corrected_count_ci(&run, &stats, level))
    } else {
        let f = SmoothFunctional::parse(a.function.as_deref().expect("clap requires motif or function"))?;
        if a.method != BootMethod::Mbq {
            return Err(invalid("smooth functionals use mbq"));
        }
        let rho = a.rho.unwrap_or_else(|| g.density());
        let out = bootstrap_smooth(&f, &smooth_stats(&f, &g)?, rho, &MultiplierSpec::gaussian_product(seed), a.b)?;
        (f.name(), percentile_smooth_ci(&out, level)?, corrected_smooth_ci(&out, level))
    };
    let corrected = match corrected {
        Ok(c) => ci_json(&c),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    let meta = Meta::new("ci", a, &[&bytes], Some(seed))?;
    let body = json!({
        "target": target,
        "method": a.method,
        "B": a.b,
        "level": level,
        "percentile": ci_json(&percentile),
        "corrected": corrected,
    });
    write_out(a.output.as_deref(), &to_json(&meta, body)?)
}

fn experiment(a: &ExperimentArgs, workers: usize) -> CliResult<()> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            let cfg: ExperimentConfig =
                toml::from_str(&text).map_err(|e| CliError { kind: "parse".into(), message: e.to_string() })?;
            cfg
        }
        (None, Some(p)) => harness::preset(p)?,
        (None, None) => return Err(invalid("need --config or --preset")),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(m) = a.m {
        cfg.m = m;
    }
    if workers > 0 {
        cfg.workers = workers;
    }
    cfg.validate()?;
    if a.print_config {
        let text = toml::to_string(&cfg).map_err(|e| CliError { kind: "serialize".into(), message: e.to_string() })?;
        return write_out(a.output.as_deref(), &text);
    }
    let mut hashed = cfg.clone();
    hashed.workers = 0;
    hashed.output_dir = None;
    let meta = Meta::new("experiment", &hashed, &[], Some(cfg.seed))?;
    let out = harness::run(&cfg)?;
    write_out(a.output.as_deref(), &(meta.header() + &out.to_csv()?))?;
    if let Some(path) = &a.json {
        let mut lines = serde_json::to_string(&json!({ "meta": meta, "config": cfg }))? + "\n";
        let rows = match &out {
            ExperimentOutput::CdfError(t) => t.rows.iter().map(serde_json::to_string).collect::<Result<Vec<_>, _>>()?,
            ExperimentOutput::Coverage(t) => t.rows.iter().map(serde_json::to_string).collect::<Result<Vec<_>, _>>()?,
            ExperimentOutput::Timing(t) => t.rows.iter().map(serde_json::to_string).collect::<Result<Vec<_>, _>>()?,
        };
        for r in rows {
            lines.push_str(&r);
            lines.push('\n');
        }
        std::fs::write(path, lines)?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| invalid(e.to_string()))?;
    }
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Ingest(a) => ingest(a),
        Command::Count(a) => count(a),
        Command::Bootstrap(a) => bootstrap(a),
        Command::Edgeworth(a) => edgeworth(a),
        Command::Smooth(a) => smooth(a),
        Command::Ci(a) => ci(a),
        Command::Experiment(a) => experiment(a, cli.workers),
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let v = json!({ "error": kind, "message": message });
    let _ = writeln!(std::io::stderr().lock(), "{v}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            return fail("usage", msg.lines().next().unwrap_or("usage error").trim_start_matches("error: "));
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e.kind, &e.message),
    }
}
