//! Frieze–Jerrum pipeline: simplex embedding, a low-rank solver for the
//! Max-k-Cut semidefinite relaxation, and randomized rounding.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::graph::Graph;
use crate::maxkcut::{count_cut, Assignment, CutReport};

#[derive(Debug, Error, PartialEq)]
pub enum SdpError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("row {0} of the Gram factor is zero")]
    ZeroRow(usize),
    #[error("Gram factor has {got} rows but graph has {expected} vertices")]
    RankMismatch { expected: usize, got: usize },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("rounds must be at least 1")]
    NoRounds,
    #[error("no tabulated worst-case ratio for k = {0}")]
    UnknownK(usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("io: {0}")]
    Io(String),
}

/// `k` unit vectors in `R^k` with pairwise inner product `−1/(k−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexEmbedding {
    pub k: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl SimplexEmbedding {
    pub fn inner(&self, a: usize, b: usize) -> f64 {
        dot(&self.vectors[a], &self.vectors[b])
    }
}

/// `q_a = normalize(e_a − (1,…,1)/k)`.
pub fn simplex_embedding(k: usize) -> Result<SimplexEmbedding, SdpError> {
    if k < 2 {
        return Err(SdpError::InvalidK(k));
    }
    let c = 1.0 / k as f64;
    let vectors = (0..k)
        .map(|a| {
            let mut v: Vec<f64> = (0..k).map(|i| if i == a { 1.0 - c } else { -c }).collect();
            normalize(&mut v);
            v
        })
        .collect();
    Ok(SimplexEmbedding { k, vectors })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Unit vectors `y_1..y_n ∈ R^r`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramFactor {
    n: usize,
    r: usize,
    data: Vec<f64>,
}

impl GramFactor {
    /// Normalizes every row; fails on an all-zero row.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, SdpError> {
        let n = rows.len();
        let r = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * r);
        for (i, mut row) in rows.into_iter().enumerate() {
            if row.len() != r {
                return Err(SdpError::Parse { line: i + 2, msg: format!("expected {r} columns, got {}", row.len()) });
            }
            if normalize(&mut row) == 0.0 {
                return Err(SdpError::ZeroRow(i));
            }
            data.extend(row);
        }
        Ok(Self { n, r, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.r..(i + 1) * self.r]
    }

    pub fn inner(&self, u: usize, v: usize) -> f64 {
        dot(self.row(u), self.row(v))
    }

    /// CSV: a first line `n,r`, then `n` rows of `r` comma-separated values.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.n, self.r);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Accepts either the dimensions or the literal `n,r` on the first line.
    pub fn from_csv(text: &str) -> Result<Self, SdpError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(SdpError::Parse { line: 1, msg: "empty file".into() })?;
        let dims: Vec<&str> = header.split(',').map(str::trim).collect();
        let expected = match dims.as_slice() {
            ["n", "r"] => None,
            [n, r] => {
                let parse = |s: &str| {
                    s.parse::<usize>().map_err(|e| SdpError::Parse { line: 1, msg: format!("bad dimension {s:?}: {e}") })
                };
                Some((parse(n)?, parse(r)?))
            }
            _ => return Err(SdpError::Parse { line: 1, msg: "header must be `n,r`".into() }),
        };
        let mut rows = Vec::new();
        for (i, line) in lines {
            let row = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| SdpError::Parse { line: i + 1, msg: format!("bad value {s:?}: {e}") })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some((_, r)) = expected {
                if row.len() != r {
                    return Err(SdpError::Parse { line: i + 1, msg: format!("expected {r} columns, got {}", row.len()) });
                }
            }
            rows.push(row);
        }
        if let Some((n, _)) = expected {
            if rows.len() != n {
                return Err(SdpError::Parse { line: 1, msg: format!("header declares {n} rows, found {}", rows.len()) });
            }
        }
        Self::from_rows(rows)
    }
}

pub fn load_gram_factor(path: impl AsRef<Path>) -> Result<GramFactor, SdpError> {
    GramFactor::from_csv(&fs::read_to_string(path).map_err(|e| SdpError::Io(e.to_string()))?)
}

pub fn save_gram_factor(y: &GramFactor, path: impl AsRef<Path>) -> Result<(), SdpError> {
    fs::write(path, y.to_csv()).map_err(|e| SdpError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpConfig {
    /// `None` picks `max(k+2, ⌈√(2n)⌉)` capped at 64.
    pub rank: Option<usize>,
    pub max_iters: usize,
    /// Initial penalty weight; doubled while constraints stay violated.
    pub penalty: f64,
    pub tolerance: f64,
    /// Largest acceptable constraint violation before the penalty is raised.
    pub violation_tolerance: f64,
    pub max_penalty_doublings: usize,
    pub seed: u64,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self {
            rank: None,
            max_iters: 2000,
            penalty: 10.0,
            tolerance: 1e-7,
            violation_tolerance: 1e-3,
            max_penalty_doublings: 12,
            seed: 0,
        }
    }
}

impl SdpConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn default_rank(n: usize, k: usize) -> usize {
        let root = ((2 * n) as f64).sqrt().ceil() as usize;
        (k + 2).max(root).min(64)
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub factor: GramFactor,
    /// `(k−1)/k · Σ_E (1 − ⟨y_u, y_v⟩)` without the penalty.
    pub objective: f64,
    /// `max_E max(0, −1/(k−1) − ⟨y_u, y_v⟩)`.
    pub max_violation: f64,
    pub penalty: f64,
    pub converged: bool,
    pub sweeps: usize,
    /// Penalized objective after each sweep, with the penalty in force.
    pub history: Vec<(f64, f64)>,
}

struct Relaxation<'a> {
    g: &'a Graph,
    r: usize,
    c: f64,
    floor: f64,
    lambda: f64,
}

impl Relaxation<'_> {
    fn edge_term(&self, x: f64) -> f64 {
        let v = (self.floor - x).max(0.0);
        -self.c * x - self.lambda * v * v
    }

    /// Terms touching vertex `u` with its row replaced by `y`.
    fn local(&self, data: &[f64], u: usize, y: &[f64]) -> f64 {
        self.g.neighbors(u).iter().map(|&v| self.edge_term(dot(y, &data[v * self.r..(v + 1) * self.r]))).sum()
    }

    fn total(&self, data: &[f64]) -> f64 {
        self.g
            .edges()
            .iter()
            .map(|&(u, v)| {
                let x = dot(&data[u * self.r..(u + 1) * self.r], &data[v * self.r..(v + 1) * self.r]);
                self.c + self.edge_term(x)
            })
            .sum()
    }

    /// One pass of row updates; each update never lowers the objective.
    fn sweep(&self, data: &mut [f64]) {
        let r = self.r;
        let mut grad = vec![0.0; r];
        let mut trial = vec![0.0; r];
        for u in 0..self.g.n() {
            if self.g.degree(u) == 0 {
                continue;
            }
            let current = data[u * r..(u + 1) * r].to_vec();
            grad.fill(0.0);
            for &v in self.g.neighbors(u) {
                let yv = &data[v * r..(v + 1) * r];
                let x = dot(&current, yv);
                let w = -self.c + 2.0 * self.lambda * (self.floor - x).max(0.0);
                grad.iter_mut().zip(yv).for_each(|(g, y)| *g += w * y);
            }
            if dot(&grad, &grad) == 0.0 {
                continue;
            }
            let base = self.local(data, u, &current);
            let mut step = 1.0;
            for _ in 0..30 {
                // step 1 jumps to the normalized gradient; smaller steps
                // interpolate towards it from the current row
                for ((t, y), g) in trial.iter_mut().zip(&current).zip(&grad) {
                    *t = (1.0 - step) * y + step * g;
                }
                if normalize(&mut trial) > 0.0 && self.local(data, u, &trial) > base {
                    data[u * r..(u + 1) * r].copy_from_slice(&trial);
                    break;
                }
                step *= 0.5;
            }
        }
    }
}

/// Low-rank block-coordinate ascent on the penalized relaxation.
pub fn solve_relaxation(g: &Graph, k: usize, cfg: &SdpConfig) -> Result<SdpSolution, SdpError> {
    if g.n() == 0 {
        return Err(SdpError::EmptyGraph);
    }
    if k < 2 {
        return Err(SdpError::InvalidK(k));
    }
    let r = cfg.rank.unwrap_or_else(|| SdpConfig::default_rank(g.n(), k));
    if r < 2 || !(cfg.penalty >= 0.0) {
        return Err(SdpError::InvalidConfig(format!("rank {r}, penalty {}", cfg.penalty)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data: Vec<f64> = Vec::with_capacity(g.n() * r);
    for _ in 0..g.n() {
        let mut row: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
        normalize(&mut row);
        data.extend(row);
    }

    let floor = -1.0 / (k - 1) as f64;
    let mut prob = Relaxation { g, r, c: (k - 1) as f64 / k as f64, floor, lambda: cfg.penalty };
    let mut history = Vec::new();
    let mut sweeps = 0;
    let mut converged;
    let mut doublings = 0;
    loop {
        let mut prev = prob.total(&data);
        converged = false;
        while sweeps < cfg.max_iters {
            prob.sweep(&mut data);
            sweeps += 1;
            let now = prob.total(&data);
            history.push((prob.lambda, now));
            let change = (now - prev).abs() / prev.abs().max(1.0);
            prev = now;
            if change < cfg.tolerance {
                converged = true;
                break;
            }
        }
        let violation = max_violation(g, r, &data, floor);
        if violation <= cfg.violation_tolerance || doublings == cfg.max_penalty_doublings || sweeps >= cfg.max_iters {
            break;
        }
        prob.lambda = if prob.lambda > 0.0 { prob.lambda * 2.0 } else { 1.0 };
        doublings += 1;
    }

    let objective = g
        .edges()
        .iter()
        .map(|&(u, v)| prob.c * (1.0 - dot(&data[u * r..(u + 1) * r], &data[v * r..(v + 1) * r])))
        .sum();
    Ok(SdpSolution {
        max_violation: max_violation(g, r, &data, floor),
        factor: GramFactor { n: g.n(), r, data },
        objective,
        penalty: prob.lambda,
        converged,
        sweeps,
        history,
    })
}

fn max_violation(g: &Graph, r: usize, data: &[f64], floor: f64) -> f64 {
    g.edges()
        .iter()
        .map(|&(u, v)| (floor - dot(&data[u * r..(u + 1) * r], &data[v * r..(v + 1) * r])).max(0.0))
        .fold(0.0, f64::max)
}

/// Result of repeated randomized rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    /// Best labeling over all rounds (earliest round on ties).
    pub assignment: Assignment,
    pub report: CutReport,
    /// Cut fraction of every round, in round order.
    pub round_fractions: Vec<f64>,
}

impl Rounding {
    pub fn mean_fraction(&self) -> f64 {
        self.round_fractions.iter().sum::<f64>() / self.round_fractions.len() as f64
    }
}

/// Per round, draws `k` random unit directions and labels each vertex by the
/// direction with the largest inner product (lowest label on ties). Round
/// `i` uses stream `i` of a generator seeded with `seed`.
pub fn fj_round(g: &Graph, y: &GramFactor, k: usize, rounds: usize, seed: u64) -> Result<Rounding, SdpError> {
    if y.n != g.n() {
        return Err(SdpError::RankMismatch { expected: g.n(), got: y.n });
    }
    if k < 2 {
        return Err(SdpError::InvalidK(k));
    }
    if rounds == 0 {
        return Err(SdpError::NoRounds);
    }
    let mut best: Option<(Vec<usize>, usize)> = None;
    let mut round_fractions = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round as u64);
        let dirs: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let mut d: Vec<f64> = (0..y.r).map(|_| StandardNormal.sample(&mut rng)).collect();
                normalize(&mut d);
                d
            })
            .collect();
        let labels: Vec<usize> = (0..g.n())
            .map(|u| {
                let row = y.row(u);
                let mut arg = 0;
                let mut top = f64::NEG_INFINITY;
                for (a, d) in dirs.iter().enumerate() {
                    let s = dot(row, d);
                    if s > top {
                        top = s;
                        arg = a;
                    }
                }
                arg
            })
            .collect();
        let cut = count_cut(g, &labels);
        round_fractions.push(CutReport::new(cut, g.num_edges()).cut_fraction);
        if best.as_ref().map_or(true, |(_, b)| cut > *b) {
            best = Some((labels, cut));
        }
    }
    let (labels, cut) = best.expect("at least one round");
    Ok(Rounding {
        assignment: Assignment { k, labels },
        report: CutReport::new(cut, g.num_edges()),
        round_fractions,
    })
}

/// Worst-case approximation ratio guaranteed by Frieze–Jerrum rounding.
pub fn fj_reference_ratio(k: usize) -> Result<f64, SdpError> {
    Ok(match k {
        2 => 0.878,
        3 => 0.836,
        4 => 0.857,
        5 => 0.876,
        6 => 0.891,
        7 => 0.903,
        8 => 0.926,
        100 => 0.990,
        _ => return Err(SdpError::UnknownK(k)),
    })
}
