//! `zetagraph`: zeta and L-function series, route checks, primes and poles
//! of weighted graph files. Data goes to stdout (or `--out`), diagnostics to
//! stderr.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use zetagraph::cycles::{primes_csv, prime_cycles, DEFAULT_MAX_LENGTH};
use zetagraph::families::{convergence_study, make_source, truncate_source};
use zetagraph::format::{read_document, serialize};
use zetagraph::routes::{
    self, AlphaVariant, BassVariant, Route, RouteOptions, DEFAULT_ABS_TOL,
};
use zetagraph::twist::{lfunction, LRoute};
use zetagraph::{Error, LocalSystem, WeightedGraph, DEFAULT_ORDER, MAX_ORDER};

const OK: u8 = 0;
const VALIDATION: u8 = 1;
const DISAGREEMENT: u8 = 2;
const IO_OR_PARSE: u8 = 3;
const RESOURCE_CAP: u8 = 4;

#[derive(Parser)]
#[command(name = "zetagraph", version, about = "Ihara zeta and L-functions of weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Series {
    /// Graph file (JSON)
    file: PathBuf,
    /// Truncation order M, 1..=64
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
}

#[derive(Args)]
struct Output {
    /// Write data here instead of stdout
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficients of Z(u)^-1 as CSV `n,re,im`
    Coeffs {
        #[command(flatten)]
        series: Series,
        #[arg(long, value_enum, default_value_t = RouteArg::Fredholm)]
        route: RouteArg,
        /// Block for `bass` (corrected, as-printed) or α for `partial` (w, w-squared)
        #[arg(long, value_enum)]
        variant: Option<Variant>,
        #[command(flatten)]
        output: Output,
    },
    /// Runs every applicable route and compares them pairwise; exit 2 on disagreement
    Check {
        #[command(flatten)]
        series: Series,
        /// Absolute and relative coefficient tolerance
        #[arg(long, default_value_t = DEFAULT_ABS_TOL)]
        tol: f64,
        /// Include the product formula for asymmetric backtracking sets
        #[arg(long)]
        experimental: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Rotation classes of closed admissible edge sequences
    Primes {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_LENGTH)]
        max_len: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Poles of Z from the spectrum of the transfer operator
    Poles {
        file: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Coefficients of L(ρ, u)^-1 for the file's local system (trivial if absent)
    Lfun {
        #[command(flatten)]
        series: Series,
        #[arg(long, value_enum, default_value_t = LRouteArg::Determinant)]
        route: LRouteArg,
        #[command(flatten)]
        output: Output,
    },
    /// Writes a finite truncation of a built-in infinite family
    Family {
        #[arg(long)]
        name: String,
        #[arg(long)]
        r: f64,
        /// Stop at the first block whose tail weight is at most this
        #[arg(long, conflicts_with = "blocks", required_unless_present = "blocks")]
        epsilon: Option<f64>,
        /// Number of the last block, counted from 0
        #[arg(long)]
        blocks: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Coefficient deltas between consecutive truncations as CSV `k,n,delta`
    Study {
        #[arg(long)]
        name: String,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 8)]
        k_max: usize,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Counts, Euler number, weights and girth as `key,value` rows
    Stats {
        file: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Oracle,
    Fredholm,
    Sunada,
    Bass,
    Partial,
    Classical,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Corrected,
    AsPrinted,
    W,
    WSquared,
}

#[derive(Clone, Copy, ValueEnum)]
enum LRouteArg {
    Oracle,
    Determinant,
    Transfer,
}

enum Failure {
    Core(Error),
    Usage(String),
    Disagreement,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) => IO_OR_PARSE,
        Error::ResourceCap { .. } => RESOURCE_CAP,
        _ => VALIDATION,
    }
}

fn check_order(order: usize) -> Result<(), Failure> {
    if order == 0 {
        return Err(Failure::Usage("--order must be at least 1".into()));
    }
    if order > MAX_ORDER {
        return Err(Error::ResourceCap {
            what: "order",
            requested: order,
            limit: MAX_ORDER,
        }
        .into());
    }
    Ok(())
}

fn emit(output: &Output, data: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => fs::write(path, data)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(data.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<(WeightedGraph, Option<LocalSystem>), Failure> {
    read_document(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }.into())
}

fn route_options(route: RouteArg, variant: Option<Variant>) -> Result<RouteOptions, Failure> {
    let mut opts = RouteOptions::default();
    match (route, variant) {
        (_, None) => {}
        (RouteArg::Bass, Some(Variant::Corrected)) => opts.bass = BassVariant::Corrected,
        (RouteArg::Bass, Some(Variant::AsPrinted)) => opts.bass = BassVariant::AsPrinted,
        (RouteArg::Partial, Some(Variant::W)) => opts.alpha = AlphaVariant::W,
        (RouteArg::Partial, Some(Variant::WSquared)) => opts.alpha = AlphaVariant::WSquared,
        _ => {
            return Err(Failure::Usage(
                "--variant applies to bass (corrected, as-printed) and partial (w, w-squared)".into(),
            ))
        }
    }
    Ok(opts)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Coeffs { series, route, variant, output } => {
            check_order(series.order)?;
            let opts = route_options(route, variant)?;
            let (g, _) = load(&series.file)?;
            let route = match route {
                RouteArg::Oracle => Route::Oracle,
                RouteArg::Fredholm => Route::Fredholm,
                RouteArg::Sunada => Route::Sunada,
                RouteArg::Bass => Route::Bass,
                RouteArg::Partial => Route::Partial,
                RouteArg::Classical => Route::Classical,
            };
            let result = routes::run_route(&g, series.order, route, opts)?;
            if let Some(alpha) = result.metadata.alpha {
                eprintln!("alpha = {alpha}");
            }
            if result.metadata.asymmetric_backtracking {
                eprintln!("warning: the backtracking set is not symmetric; this route is experimental");
            }
            emit(&output, &format!("n,re,im\n{}", result.series.to_csv()))
        }
        Command::Check { series, tol, experimental, output } => {
            check_order(series.order)?;
            if tol.is_nan() || tol < 0.0 {
                return Err(Failure::Usage("--tol must be non-negative".into()));
            }
            let (g, _) = load(&series.file)?;
            let report = routes::cross_validate(&g, series.order, experimental, tol, tol)?;
            if report.asymmetric_backtracking {
                eprintln!(
                    "warning: the backtracking set is not symmetric{}",
                    if experimental { "; partial route included as experimental" } else { "; partial route skipped" }
                );
            }
            emit(&output, &report.to_csv())?;
            if report.all_agree() {
                Ok(())
            } else {
                Err(Failure::Disagreement)
            }
        }
        Command::Primes { file, max_len, output } => {
            let (g, _) = load(&file)?;
            let records = prime_cycles(&g, max_len)?;
            emit(&output, &primes_csv(&g, &records))
        }
        Command::Poles { file, output } => {
            let (g, _) = load(&file)?;
            emit(&output, &routes::poles_csv(&routes::spectrum_poles(&g)?))
        }
        Command::Lfun { series, route, output } => {
            check_order(series.order)?;
            let (g, system) = load(&series.file)?;
            let rho = system.unwrap_or_else(|| {
                eprintln!("note: no local system in file, using the trivial one");
                LocalSystem::trivial(&g, 1)
            });
            let route = match route {
                LRouteArg::Oracle => LRoute::Oracle,
                LRouteArg::Determinant => LRoute::Determinant,
                LRouteArg::Transfer => LRoute::Transfer,
            };
            let l = lfunction(&g, &rho, series.order, route)?;
            emit(&output, &format!("n,re,im\n{}", l.to_csv()))
        }
        Command::Family { name, r, epsilon, blocks, output } => {
            let source = make_source(&name, r)?;
            let (g, k, tail) = match (epsilon, blocks) {
                (Some(eps), _) => {
                    let t = truncate_source(&source, eps)?;
                    (t.graph, t.blocks, t.tail_weight)
                }
                (None, Some(k)) => (source.block(k)?, k, source.tail_weight(k)),
                (None, None) => unreachable!("clap requires one of --epsilon and --blocks"),
            };
            eprintln!("blocks 0..={k}, tail weight {tail}");
            emit(&output, &serialize(&g, None))
        }
        Command::Study { name, r, k_max, order, output } => {
            check_order(order)?;
            let source = make_source(&name, r)?;
            let study = convergence_study(&source, k_max, order)?;
            if let Some(ratio) = study.decay_ratio(3.min(order), 2) {
                eprintln!("decay ratio of delta_k(3), k >= 2: {ratio}");
            }
            emit(&output, &study.to_csv())
        }
        Command::Stats { file, output } => {
            let (g, _) = load(&file)?;
            let s = g.stats();
            let mut rows = vec![
                ("vertex_count".to_string(), s.vertex_count.to_string()),
                ("edge_count".into(), s.edge_count.to_string()),
                ("euler_number".into(), s.euler_number.to_string()),
                ("total_weight".into(), s.total_weight.to_string()),
                ("valency_bound".into(), s.valency_bound.to_string()),
                (
                    "girth_lower_bound".into(),
                    s.girth_lower_bound.map_or("none".into(), |x| x.to_string()),
                ),
            ];
            for (&(a, b), w) in g.edges().iter().zip(&s.edge_products) {
                rows.push((format!("W({}-{})", g.vertex_name(a), g.vertex_name(b)), w.to_string()));
            }
            let text: String = rows.iter().map(|(k, v)| format!("{k},{v}\n")).collect();
            emit(&output, &format!("key,value\n{text}"))
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("ZETAGRAPH_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("ZETAGRAPH_THREADS={value:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { IO_OR_PARSE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = configure_threads().and_then(|()| run(cli));
    ExitCode::from(match outcome {
        Ok(()) => OK,
        Err(Failure::Disagreement) => {
            eprintln!("routes disagree");
            DISAGREEMENT
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            VALIDATION
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    })
}
