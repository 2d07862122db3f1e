mod rows;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use maxkcut_lab::graph::{self, Girth, Graph};
use maxkcut_lab::heuristic::{self, HeuristicConfig, TieBreak};
use maxkcut_lab::highgirth::maxkcut_expectation;
use maxkcut_lab::optimizer::{self, AngleRecord, OptimizeConfig};
use maxkcut_lab::sdp::{self, SdpConfig};
use maxkcut_lab::statevector::{MixerKind, MixerSpec, QaoaAngles};
use rayon::prelude::*;

use rows::{ResultRow, INFINITE_N};

#[derive(Parser)]
#[command(name = "maxkcut-lab", version, about = "Max-k-Cut: high-girth QAOA versus classical baselines")]
struct Cli {
    /// Write 0 in the wall_time_s column so outputs are byte-reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone)]
struct OptArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 5000)]
    max_evals: usize,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
}

impl OptArgs {
    fn config(&self) -> OptimizeConfig {
        OptimizeConfig {
            restarts: self.restarts,
            max_evals: self.max_evals,
            tolerance: self.tolerance,
            seed: self.seed,
            ..OptimizeConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a random regular graph and write its edge list.
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the girth of a graph ("inf" for forests).
    Girth {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Saturation-degree greedy labeling, optionally followed by local search.
    Heuristic {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        improve: bool,
        /// Break selection ties at random instead of by lowest index.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the relaxation (or load a Gram factor) and round it.
    Sdp {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        rounds: usize,
        #[arg(long)]
        gram_in: Option<PathBuf>,
        #[arg(long)]
        gram_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the high-girth cut fraction at given angles.
    QaoaExpect {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value = "grover")]
        mixer: MixerKind,
        /// Comma-separated, one per layer.
        #[arg(long, allow_hyphen_values = true)]
        gammas: String,
        /// Layers separated by ';', components within a layer by ','.
        #[arg(long, allow_hyphen_values = true)]
        betas: String,
    },
    /// Optimize angles at one depth.
    QaoaOptimize {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value = "grover")]
        mixer: MixerKind,
        #[command(flatten)]
        opt: OptArgs,
        /// Angle JSON to start from instead of random restarts.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        angles_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize depths 1..=p-max with FOURIER warm starts.
    DepthSweep {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        p_max: usize,
        #[arg(long, default_value = "grover")]
        mixer: MixerKind,
        #[command(flatten)]
        opt: OptArgs,
        /// Directory for one angle JSON per depth.
        #[arg(long)]
        angles_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit F(p) = m/(p^a + c) + b and report the depth reaching a target.
    Fit {
        /// Points as p:value pairs, comma-separated.
        #[arg(long, conflicts_with = "csv")]
        points: Option<String>,
        /// Result CSV; uses its qaoa rows.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = optimizer::DEFAULT_FIT_HORIZON)]
        horizon: f64,
    },
    /// Heuristic and SDP over sampled instances next to high-girth QAOA.
    Compare {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        degrees: Vec<usize>,
        /// Depths to report; optimization sweeps up to the largest.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<usize>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        instances: usize,
        #[arg(long, default_value_t = 20)]
        rounds: usize,
        #[arg(long, default_value = "grover")]
        mixer: MixerKind,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        #[arg(long, default_value_t = 3000)]
        max_evals: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean ± sample standard deviation per (algorithm, k, degree).
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Solver(String),
}

type CliResult<T> = Result<T, CliError>;

fn solver(op: &str) -> impl Fn(String) -> CliError + '_ {
    move |msg| CliError::Solver(format!("{op}: {msg}"))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("MAXKCUT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Solver(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> CliResult<Graph> {
    graph::load_edge_list(path).map_err(|e| solver("graph::load_edge_list")(e.to_string()))
}

fn mixer_spec(kind: MixerKind, k: usize) -> CliResult<MixerSpec> {
    MixerSpec::new(kind, k).map_err(|e| usage(e.to_string()))
}

fn parse_floats(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| usage(format!("--{what}: {x:?}: {e}"))))
        .collect()
}

/// `--betas` is `;`-separated layers; single-angle mixers may also list one
/// value per layer separated by commas.
fn parse_angles(gammas: &str, betas: &str, p: usize, mixer: &MixerSpec) -> CliResult<QaoaAngles> {
    let gammas = parse_floats(gammas, "gammas")?;
    let layers: Vec<Vec<f64>> = if betas.contains(';') || mixer.arity() > 1 {
        betas.split(';').map(|l| parse_floats(l, "betas")).collect::<CliResult<_>>()?
    } else {
        parse_floats(betas, "betas")?.into_iter().map(|b| vec![b]).collect()
    };
    let angles = QaoaAngles::new(gammas, layers);
    if angles.depth() != p {
        return Err(usage(format!("--p {p} but {} gammas given", angles.depth())));
    }
    angles.validate(mixer).map_err(|e| usage(e.to_string()))?;
    Ok(angles)
}

fn elapsed(start: Instant, no_timing: bool) -> f64 {
    if no_timing {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let nt = cli.no_timing;
    match &cli.cmd {
        Cmd::GenGraph { n, degree, seed, out } => {
            if (n * degree) % 2 != 0 || degree >= n {
                return Err(usage("--n times --degree must be even and --degree below --n"));
            }
            let g = graph::random_regular(*n, *degree, *seed).map_err(|e| solver("graph::random_regular")(e.to_string()))?;
            emit(&g.to_string(), out.as_deref())
        }
        Cmd::Girth { graph } => {
            match graph::girth(&load_graph(graph)?) {
                Girth::Finite(g) => println!("{g}"),
                Girth::Infinite => println!("inf"),
            }
            Ok(())
        }
        Cmd::Heuristic { k, graph, improve, seed, out } => {
            let g = load_graph(graph)?;
            if *k < 2 {
                return Err(usage("--k must be at least 2"));
            }
            let start = Instant::now();
            let tie_break = seed.map_or(TieBreak::Lowest, TieBreak::Seeded);
            let (_, report) = heuristic::solve(&g, *k, HeuristicConfig { improve: *improve, tie_break });
            let row = ResultRow {
                algorithm: if *improve { "heuristic" } else { "heuristic-greedy" }.into(),
                k: *k,
                degree: g.regular_degree().unwrap_or(0),
                n: g.n().to_string(),
                p: None,
                seed: *seed,
                cut_fraction: report.cut_fraction,
                wall_time_s: elapsed(start, nt),
            };
            emit(&rows::to_csv(&[row]), out.as_deref())
        }
        Cmd::Sdp { k, graph, seed, rounds, gram_in, gram_out, out } => {
            let g = load_graph(graph)?;
            let start = Instant::now();
            let factor = match gram_in {
                Some(path) => sdp::load_gram_factor(path).map_err(|e| solver("sdp::load_gram_factor")(e.to_string()))?,
                None => {
                    let sol = sdp::solve_relaxation(&g, *k, &SdpConfig::with_seed(*seed))
                        .map_err(|e| solver("sdp::solve_relaxation")(e.to_string()))?;
                    if sol.max_violation > 1e-3 {
                        eprintln!("warning: relaxation constraint violation {:.2e} exceeds 1e-3", sol.max_violation);
                    }
                    sol.factor
                }
            };
            if let Some(path) = gram_out {
                sdp::save_gram_factor(&factor, path).map_err(|e| solver("sdp::save_gram_factor")(e.to_string()))?;
            }
            let rounding =
                sdp::fj_round(&g, &factor, *k, *rounds, *seed).map_err(|e| solver("sdp::fj_round")(e.to_string()))?;
            let row = ResultRow {
                algorithm: "sdp".into(),
                k: *k,
                degree: g.regular_degree().unwrap_or(0),
                n: g.n().to_string(),
                p: None,
                seed: Some(*seed),
                cut_fraction: rounding.mean_fraction(),
                wall_time_s: elapsed(start, nt),
            };
            emit(&rows::to_csv(&[row]), out.as_deref())
        }
        Cmd::QaoaExpect { k, degree, p, mixer, gammas, betas } => {
            let m = mixer_spec(*mixer, *k)?;
            let angles = parse_angles(gammas, betas, *p, &m)?;
            let v = maxkcut_expectation(*k, *degree, *p, &m, &angles)
                .map_err(|e| solver("highgirth::maxkcut_expectation")(e.to_string()))?;
            println!("{v}");
            Ok(())
        }
        Cmd::QaoaOptimize { k, degree, p, mixer, opt, init, angles_out, out } => {
            let m = mixer_spec(*mixer, *k)?;
            let init = match init {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| usage(format!("--init: {e}")))?;
                    let rec: AngleRecord = serde_json::from_str(&text).map_err(|e| usage(format!("--init: {e}")))?;
                    Some(rec.angles())
                }
                None => None,
            };
            let start = Instant::now();
            let point = optimizer::optimize_at_depth(*k, *degree, *p, &m, init.as_ref(), &opt.config())
                .map_err(|e| solver("optimizer::optimize_at_depth")(e.to_string()))?;
            if let Some(path) = angles_out {
                write_angles(path, &AngleRecord::new(&m, *degree, &point))?;
            }
            let row = qaoa_row(*k, *degree, *p, opt.seed, point.value, elapsed(start, nt));
            emit(&rows::to_csv(&[row]), out.as_deref())
        }
        Cmd::DepthSweep { k, degree, p_max, mixer, opt, angles_dir, out } => {
            let m = mixer_spec(*mixer, *k)?;
            let start = Instant::now();
            let points = optimizer::depth_sweep(*k, *degree, *p_max, &m, &opt.config())
                .map_err(|e| solver("optimizer::depth_sweep")(e.to_string()))?;
            let wall = elapsed(start, nt);
            if let Some(dir) = angles_dir {
                fs::create_dir_all(dir).map_err(|e| CliError::Solver(format!("{}: {e}", dir.display())))?;
                for pt in &points {
                    let name = format!("angles_k{k}_D{degree}_p{}_{mixer}.json", pt.angles.depth());
                    write_angles(&dir.join(name), &AngleRecord::new(&m, *degree, pt))?;
                }
            }
            let rows: Vec<ResultRow> =
                points.iter().map(|pt| qaoa_row(*k, *degree, pt.angles.depth(), opt.seed, pt.value, wall)).collect();
            emit(&rows::to_csv(&rows), out.as_deref())
        }
        Cmd::Fit { points, csv, k, degree, target, horizon } => {
            let pts = match (points, csv) {
                (Some(s), None) => parse_points(s)?,
                (None, Some(path)) => {
                    let file = fs::File::open(path).map_err(|e| usage(format!("--csv: {e}")))?;
                    let rows = rows::read_rows(file, &path.display().to_string())
                        .map_err(|e| solver("report")(e.to_string()))?;
                    rows.iter()
                        .filter(|r| r.algorithm == "qaoa")
                        .filter(|r| k.map_or(true, |k| r.k == k) && degree.map_or(true, |d| r.degree == d))
                        .filter_map(|r| r.p.map(|p| (p as f64, r.cut_fraction)))
                        .collect()
                }
                _ => return Err(usage("give exactly one of --points or --csv")),
            };
            let fit = optimizer::fit_extrapolate_with_horizon(&pts, *target, *horizon)
                .map_err(|e| solver("optimizer::fit_extrapolate")(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&fit).expect("fit serializes"));
            Ok(())
        }
        Cmd::Compare { k, degrees, p, n, instances, rounds, mixer, seed, restarts, max_evals, out } => {
            let m = mixer_spec(*mixer, *k)?;
            let cfg = OptimizeConfig { restarts: *restarts, max_evals: *max_evals, seed: *seed, ..Default::default() };
            let rows = compare(*k, degrees, p, *n, *instances, *rounds, &m, &cfg, nt)?;
            emit(&rows::to_csv(&rows), out.as_deref())
        }
        Cmd::Report { csv } => {
            let mut all = Vec::new();
            for path in csv {
                let file = fs::File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                all.extend(rows::read_rows(file, &path.display().to_string()).map_err(|e| usage(format!("report: {e}")))?);
            }
            print!("{}", rows::summarize(&all));
            Ok(())
        }
    }
}

fn qaoa_row(k: usize, degree: usize, p: usize, seed: u64, value: f64, wall: f64) -> ResultRow {
    ResultRow {
        algorithm: "qaoa".into(),
        k,
        degree,
        n: INFINITE_N.into(),
        p: Some(p),
        seed: Some(seed),
        cut_fraction: value,
        wall_time_s: wall,
    }
}

fn write_angles(path: &Path, rec: &AngleRecord) -> CliResult<()> {
    let text = serde_json::to_string_pretty(rec).expect("angles serialize");
    fs::write(path, text + "\n").map_err(|e| CliError::Solver(format!("writing {}: {e}", path.display())))
}

fn parse_points(s: &str) -> CliResult<Vec<(f64, f64)>> {
    s.split(',')
        .map(|pair| {
            let (p, v) = pair.split_once(':').ok_or_else(|| usage(format!("--points: expected p:value, got {pair:?}")))?;
            let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| usage(format!("--points: {x:?}: {e}")));
            Ok((parse(p)?, parse(v)?))
        })
        .collect()
}

enum Job {
    Instance { degree: usize, index: usize },
    Qaoa { degree: usize },
}

#[allow(clippy::too_many_arguments)]
fn compare(
    k: usize,
    degrees: &[usize],
    depths: &[usize],
    n: usize,
    instances: usize,
    rounds: usize,
    mixer: &MixerSpec,
    cfg: &OptimizeConfig,
    no_timing: bool,
) -> CliResult<Vec<ResultRow>> {
    if degrees.iter().any(|d| n * d % 2 == 1 || *d >= n) {
        return Err(usage("every degree needs n·degree even and degree < n"));
    }
    if instances == 0 || rounds == 0 || depths.is_empty() {
        return Err(usage("--instances, --rounds and --p must be nonempty"));
    }
    let p_max = *depths.iter().max().expect("nonempty");
    let mut jobs: Vec<Job> = degrees.iter().map(|&degree| Job::Qaoa { degree }).collect();
    for &degree in degrees {
        jobs.extend((0..instances).map(|index| Job::Instance { degree, index }));
    }
    let results: Vec<CliResult<Vec<ResultRow>>> = jobs
        .par_iter()
        .map(|job| match *job {
            Job::Qaoa { degree } => {
                let start = Instant::now();
                let points = optimizer::depth_sweep(k, degree, p_max, mixer, cfg)
                    .map_err(|e| solver("optimizer::depth_sweep")(e.to_string()))?;
                let wall = elapsed(start, no_timing);
                Ok(points
                    .iter()
                    .filter(|pt| depths.contains(&pt.angles.depth()))
                    .map(|pt| qaoa_row(k, degree, pt.angles.depth(), cfg.seed, pt.value, wall))
                    .collect())
            }
            Job::Instance { degree, index } => {
                let seed = cfg.seed.wrapping_add(index as u64);
                let g = graph::random_regular(n, degree, seed).map_err(|e| solver("graph::random_regular")(e.to_string()))?;
                let start = Instant::now();
                let (_, h) = heuristic::solve(&g, k, HeuristicConfig { improve: true, tie_break: TieBreak::Lowest });
                let heuristic_time = elapsed(start, no_timing);
                let start = Instant::now();
                let sol = sdp::solve_relaxation(&g, k, &SdpConfig::with_seed(seed))
                    .map_err(|e| solver("sdp::solve_relaxation")(e.to_string()))?;
                if sol.max_violation > 1e-3 {
                    eprintln!(
                        "warning: degree {degree} instance {index}: relaxation violation {:.2e} exceeds 1e-3",
                        sol.max_violation
                    );
                }
                let r = sdp::fj_round(&g, &sol.factor, k, rounds, seed).map_err(|e| solver("sdp::fj_round")(e.to_string()))?;
                let base = |algorithm: &str, cut_fraction: f64, wall_time_s: f64| ResultRow {
                    algorithm: algorithm.into(),
                    k,
                    degree,
                    n: n.to_string(),
                    p: None,
                    seed: Some(seed),
                    cut_fraction,
                    wall_time_s,
                };
                Ok(vec![
                    base("heuristic", h.cut_fraction, heuristic_time),
                    base("sdp", r.mean_fraction(), elapsed(start, no_timing)),
                ])
            }
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}
