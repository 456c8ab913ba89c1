use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lewisgraph::bounds::{bounds_at, BoundsReport};
use lewisgraph::experiment::{self, ExperimentConfig, RowSummary, SweepKind};
use lewisgraph::lewis::{lewis_weights_with, LewisOptions, LewisResult};
use lewisgraph::oracle::{design_gap_demo, ermp_solve, ErmpOptions, ErmpSolution};
use lewisgraph::stt::thin_tree_from;
use lewisgraph::trees::{is_bowtie, polarize, Bowtie, Partition, TreeInstance};
use lewisgraph::{read_edge_list, BuildOptions, Error, Family, Graph};

mod output;

use output::{Format, Sink};

#[derive(Parser)]
#[command(name = "lewisgraph", version, about = "Lewis weights and total effective resistance")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress messages on standard error.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Args, Clone)]
struct Input {
    /// Edge-list file, one `u v` pair per line.
    #[arg(long, conflicts_with = "family")]
    graph: Option<PathBuf>,
    /// Generator family (path, star, cycle, complete, grid, lollipop, bowtie,
    /// regular, watts_strogatz, margulis, chordal_cycle, random_tree).
    #[arg(long)]
    family: Option<String>,
    /// Family parameters as `k=v,k=v`.
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only the largest connected component of an input file.
    #[arg(long)]
    lcc: bool,
}

#[derive(Args, Clone, Copy)]
struct LewisArgs {
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Constant in the iteration budget `C / eps · ln max(m/n, 2)`.
    #[arg(long = "iter-const", default_value_t = 4.0)]
    c: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a graph and print its edges.
    Gen(Input),
    /// Lewis weights.
    Lewis {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        lewis: LewisArgs,
    },
    /// Approximation certificates at the Lewis weights.
    Bounds {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        lewis: LewisArgs,
    },
    /// Minimize the Kirchhoff index directly (small graphs).
    Solve {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 50_000)]
        max_iters: usize,
    },
    /// Closed-form optimum of a tree.
    Tree(Input),
    /// Transform a tree toward a bowtie, one step per output record.
    Polarize(Input),
    /// Spectral thinness of the maximum Lewis-weight spanning tree.
    Stt {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        lewis: LewisArgs,
    },
    /// Lewis weights against weights `∝ 1/i` for `V = diag(1..n)`.
    DesignGap {
        /// Sizes, as a list `a,b,c` or a range `a..b`.
        #[arg(long, default_value = "100")]
        n: String,
    },
    /// Certificates for every family of the summary table.
    Table1 {
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
    /// Certificates along a family as the size grows.
    Sweep {
        /// `regular` or `lollipop`.
        #[arg(long)]
        family: String,
        /// Degrees for regular graphs, as a list or range.
        #[arg(long, default_value = "3..6")]
        d: String,
        /// Vertex counts, as a list or range.
        #[arg(long, default_value = "50..400")]
        n: String,
        /// Step for `--n` ranges.
        #[arg(long, default_value_t = 50)]
        n_step: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(String),
    NoConvergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } => Failure::NoConvergence(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let writer: Box<dyn Write> = match &cli.out {
        Some(p) => match File::create(p) {
            Ok(f) => Box::new(io::BufWriter::new(f)),
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", p.display());
                return ExitCode::from(1);
            }
        },
        None => Box::new(io::BufWriter::new(io::stdout())),
    };
    let mut sink = Sink::new(writer, cli.format);
    let result = run(cli.cmd, &mut sink).and_then(|ok| {
        sink.finish()?;
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NoConvergence(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(input: &Input) -> Result<Graph, Failure> {
    match (&input.graph, &input.family) {
        (Some(path), None) => {
            let opts = BuildOptions {
                drop_self_loops: true,
                take_lcc: input.lcc,
            };
            Ok(read_edge_list(path, opts)?)
        }
        (None, Some(name)) => {
            let fam = Family::parse(name, &input.params)?;
            Ok(lewisgraph::generate(&fam, input.seed)?)
        }
        _ => Err(Failure::Input("pass exactly one of --graph or --family".into())),
    }
}

fn lewis(graph: &Graph, args: LewisArgs) -> Result<LewisResult, Failure> {
    let opts = LewisOptions {
        eps: args.eps,
        c: args.c,
        ..Default::default()
    };
    Ok(lewis_weights_with(graph, &opts)?)
}

#[derive(Serialize)]
struct GraphOut<'a> {
    n: usize,
    m: usize,
    edges: &'a [(usize, usize)],
    labels: &'a [u64],
}

#[derive(Serialize)]
struct EdgeRow {
    edge: usize,
    u: usize,
    v: usize,
}

#[derive(Serialize)]
struct LewisRow {
    edge: usize,
    u: usize,
    v: usize,
    w_inf: f64,
    g_lw: f64,
}

#[derive(Serialize)]
struct BoundsRow {
    alpha1: f64,
    alpha2: f64,
    alpha_min: f64,
    diameter: usize,
    kappa: f64,
    bound_pairwise: f64,
    bound_diam: f64,
    bound_sum: f64,
    lambda2: f64,
    lambda_n: f64,
    kirchhoff: f64,
    n: usize,
    m: usize,
    eps: f64,
    lewis_iterations: usize,
    lewis_residual: f64,
    converged: bool,
}

impl From<&BoundsReport> for BoundsRow {
    fn from(r: &BoundsReport) -> Self {
        BoundsRow {
            alpha1: r.alpha1,
            alpha2: r.alpha2,
            alpha_min: r.alpha_min,
            diameter: r.diameter,
            kappa: r.kappa,
            bound_pairwise: r.mohar.bound_pairwise,
            bound_diam: r.mohar.bound_diam,
            bound_sum: r.mohar.bound_sum,
            lambda2: r.lambda2,
            lambda_n: r.lambda_n,
            kirchhoff: r.kirchhoff,
            n: r.n,
            m: r.m,
            eps: r.eps,
            lewis_iterations: r.lewis_iterations,
            lewis_residual: r.lewis_residual,
            converged: r.converged,
        }
    }
}

#[derive(Serialize)]
struct SolveRow {
    edge: usize,
    u: usize,
    v: usize,
    g_star: f64,
}

#[derive(Serialize)]
struct TreeOut {
    n: usize,
    m: usize,
    root: usize,
    congestions: Vec<u64>,
    g_star: Vec<f64>,
    k_star: f64,
    alpha: f64,
    partition: Partition,
    bowtie: Option<Bowtie>,
}

#[derive(Serialize)]
struct TreeRow {
    edge: usize,
    u: usize,
    v: usize,
    congestion: u64,
    g_star: f64,
    upper: bool,
}

#[derive(Serialize)]
struct PolarizeSummary {
    initial_alpha: f64,
    final_alpha: f64,
    steps: usize,
    bowtie: Option<Bowtie>,
}

#[derive(Serialize)]
struct SummaryRow {
    family: String,
    n: usize,
    m: usize,
    runs: usize,
    alpha_min_max: f64,
    alpha_min_mean: f64,
    alpha_min_std: f64,
    alpha1_max: f64,
    alpha2_max: f64,
    exact_ratio: Option<f64>,
    all_converged: bool,
}

impl From<&RowSummary> for SummaryRow {
    fn from(r: &RowSummary) -> Self {
        SummaryRow {
            family: r.family.to_string(),
            n: r.n,
            m: r.m,
            runs: r.runs,
            alpha_min_max: r.alpha_min_max,
            alpha_min_mean: r.alpha_min_mean,
            alpha_min_std: r.alpha_min_std,
            alpha1_max: r.alpha1_max,
            alpha2_max: r.alpha2_max,
            exact_ratio: r.exact_ratio,
            all_converged: r.all_converged,
        }
    }
}

fn run(cmd: Cmd, sink: &mut Sink) -> CmdResult {
    match cmd {
        Cmd::Gen(input) => {
            let g = load(&input)?;
            sink.document(
                "gen",
                &GraphOut {
                    n: g.n(),
                    m: g.m(),
                    edges: g.edges(),
                    labels: g.labels(),
                },
                g.edges().iter().enumerate().map(|(edge, &(u, v))| EdgeRow { edge, u, v }),
            )?;
            Ok(true)
        }
        Cmd::Lewis { input, lewis: args } => {
            let g = load(&input)?;
            let lw = lewis(&g, args)?;
            let rows = g.edges().iter().enumerate().map(|(edge, &(u, v))| LewisRow {
                edge,
                u,
                v,
                w_inf: lw.w_inf[edge],
                g_lw: lw.g_lw[edge],
            });
            sink.document("lewis", &lw, rows)?;
            Ok(lw.converged)
        }
        Cmd::Bounds { input, lewis: args } => {
            let g = load(&input)?;
            let lw = lewis(&g, args)?;
            let rep = bounds_at(&g, &lw, args.eps)?;
            sink.document("bounds", &rep, std::iter::once(BoundsRow::from(&rep)))?;
            Ok(lw.converged)
        }
        Cmd::Solve { input, tol, max_iters } => {
            let g = load(&input)?;
            let sol: ErmpSolution = ermp_solve(&g, ErmpOptions { tol, max_iters })?;
            let rows = g.edges().iter().enumerate().map(|(edge, &(u, v))| SolveRow {
                edge,
                u,
                v,
                g_star: sol.g_star[edge],
            });
            sink.document("solve", &sol, rows)?;
            Ok(sol.converged)
        }
        Cmd::Tree(input) => {
            let g = load(&input)?;
            let t = TreeInstance::from_graph(&g)?;
            let out = TreeOut {
                n: t.n(),
                m: t.m(),
                root: t.root(),
                congestions: t.congestions().to_vec(),
                g_star: t.g_star().to_vec(),
                k_star: t.k_star(),
                alpha: t.alpha(),
                partition: t.partition(),
                bowtie: is_bowtie(&t),
            };
            let rows = t.edges().iter().enumerate().map(|(edge, &(u, v))| TreeRow {
                edge,
                u,
                v,
                congestion: t.congestions()[edge],
                g_star: t.g_star()[edge],
                upper: t.in_upper(edge),
            });
            sink.document("tree", &out, rows)?;
            Ok(true)
        }
        Cmd::Polarize(input) => {
            let g = load(&input)?;
            let t = TreeInstance::from_graph(&g)?;
            let p = polarize(&t)?;
            sink.lines("polarize", &p.steps)?;
            sink.trailer(
                "polarize",
                &PolarizeSummary {
                    initial_alpha: p.initial_alpha,
                    final_alpha: p.final_alpha,
                    steps: p.steps.len(),
                    bowtie: p.bowtie,
                },
            )?;
            Ok(true)
        }
        Cmd::Stt { input, lewis: args } => {
            let g = load(&input)?;
            let lw = lewis(&g, args)?;
            let rep = thin_tree_from(&g, &lw)?;
            let rows = rep.tree_edges.iter().map(|&edge| {
                let (u, v) = g.edge(edge);
                EdgeRow { edge, u, v }
            });
            sink.document("stt", &rep, rows)?;
            Ok(lw.converged)
        }
        Cmd::DesignGap { n } => {
            let ns = parse_list(&n, 1)?;
            let rows = ns.iter().map(|&n| design_gap_demo(n)).collect::<Result<Vec<_>, _>>()?;
            sink.table("design-gap", &rows, rows.iter().copied())?;
            Ok(true)
        }
        Cmd::Table1 { runs, seed, eps } => {
            let rows = summaries(&experiment::table1_families(), runs, seed, eps)?;
            sink.table("table1", &rows, rows.iter().map(SummaryRow::from))?;
            Ok(rows.iter().all(|r| r.all_converged))
        }
        Cmd::Sweep {
            family,
            d,
            n,
            n_step,
            runs,
            seed,
            eps,
        } => {
            let kind = match family.as_str() {
                "regular" | "random_regular" => SweepKind::Regular,
                "lollipop" => SweepKind::Lollipop,
                other => return Err(Failure::Input(format!("sweep supports regular and lollipop, got `{other}`"))),
            };
            let ds = parse_list(&d, 1)?;
            let ns = parse_list(&n, n_step)?;
            let fams = experiment::sweep_families(kind, &ds, &ns);
            let rows = summaries(&fams, runs, seed, eps)?;
            sink.table("sweep", &rows, rows.iter().map(SummaryRow::from))?;
            Ok(rows.iter().all(|r| r.all_converged))
        }
    }
}

fn summaries(fams: &[Family], runs: usize, seed: u64, eps: f64) -> Result<Vec<RowSummary>, Failure> {
    fams.iter()
        .map(|f| {
            let cfg = ExperimentConfig {
                family: f.clone(),
                runs,
                seed,
                eps,
            };
            let row = experiment::run_row(&cfg)?;
            log::info!("{f}: alpha_min = {:.4} (max over {} runs)", row.alpha_min_max, row.runs);
            Ok(row)
        })
        .collect()
}

/// `a,b,c` or `a..b` (inclusive, stepping by `step`).
fn parse_list(s: &str, step: usize) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Input(format!("expected a list `a,b,c` or a range `a..b`, got `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b || step == 0 {
            return Err(bad());
        }
        return Ok((a..=b).step_by(step).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}
