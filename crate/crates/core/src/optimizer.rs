//! Angle optimization against the high-girth expectation, FOURIER warm
//! starts across depths, and extrapolation of performance versus depth.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::highgirth::{maxkcut_expectation, HighGirthError};
use crate::statevector::{MixerKind, MixerSpec, QaoaAngles};

#[derive(Debug, Error, PartialEq)]
pub enum OptimizeError {
    #[error(transparent)]
    HighGirth(#[from] HighGirthError),
    #[error("at least one restart is required")]
    NoRestarts,
    #[error("depth must be at least 1")]
    ZeroDepth,
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 4 points to fit 4 parameters, got {0}")]
    InsufficientPoints(usize),
    #[error("no finite fit found")]
    DegenerateFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    /// Random starting points per depth (in addition to any warm start).
    pub restarts: usize,
    /// Objective evaluations per local search.
    pub max_evals: usize,
    /// Stop once the simplex spread in objective falls below this.
    pub tolerance: f64,
    pub seed: u64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self { restarts: 10, max_evals: 5000, tolerance: 1e-8, seed: 0, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedPoint {
    pub angles: QaoaAngles,
    /// Cut fraction at `angles`.
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Serialized form of optimized angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleRecord {
    pub k: usize,
    #[serde(rename = "D")]
    pub degree: usize,
    pub p: usize,
    pub mixer: MixerKind,
    pub gammas: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub value: f64,
}

impl AngleRecord {
    pub fn new(mixer: &MixerSpec, degree: usize, point: &OptimizedPoint) -> Self {
        Self {
            k: mixer.k,
            degree,
            p: point.angles.depth(),
            mixer: mixer.kind,
            gammas: point.angles.gammas.clone(),
            betas: point.angles.betas.clone(),
            value: point.value,
        }
    }

    pub fn angles(&self) -> QaoaAngles {
        QaoaAngles::new(self.gammas.clone(), self.betas.clone())
    }
}

/// Outcome of a local minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½). The starting point is
/// always a simplex vertex, so the result is never worse than `f(x0)`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize, tol: f64) -> Minimum {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    if n == 0 {
        return Minimum { x: x0.to_vec(), value: v0, evaluations: evals, converged: true };
    }
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let mut converged = false;
    while evals < max_evals {
        // stable sort keeps earlier vertices first on ties
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let x = along(0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
            let v = eval(&x, &mut evals);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evals, converged }
}

fn objective(
    k: usize,
    degree: usize,
    p: usize,
    mixer: &MixerSpec,
) -> impl Fn(&[f64]) -> Result<f64, HighGirthError> + '_ {
    move |x: &[f64]| {
        let angles = QaoaAngles::from_flat(x, p, mixer.arity());
        maxkcut_expectation(k, degree, p, mixer, &angles)
    }
}

/// Good phaser angles shrink like `1/√D`; uniform starts over the full period
/// mostly land on a noisy plateau.
fn random_start(p: usize, arity: usize, degree: usize, rng: &mut ChaCha8Rng) -> QaoaAngles {
    let g_max = 2.0 / (degree.max(1) as f64).sqrt();
    QaoaAngles::new(
        (0..p).map(|_| rng.gen_range(0.0..g_max)).collect(),
        (0..p).map(|_| (0..arity).map(|_| rng.gen_range(0.0..PI / 2.0)).collect()).collect(),
    )
}

/// Runs a local search from each start and keeps the best (earliest on ties).
/// Extra candidates are evaluated but not searched from.
fn best_of(
    k: usize,
    degree: usize,
    p: usize,
    mixer: &MixerSpec,
    starts: &[QaoaAngles],
    candidates: &[QaoaAngles],
    cfg: &OptimizeConfig,
) -> Result<OptimizedPoint, OptimizeError> {
    let f = objective(k, degree, p, mixer);
    let mut best: Option<OptimizedPoint> = None;
    let mut total_evals = 0;
    let consider = |point: OptimizedPoint, best: &mut Option<OptimizedPoint>| {
        if best.as_ref().map_or(true, |b| point.value > b.value) {
            *best = Some(point);
        }
    };
    for start in candidates {
        let value = f(&start.to_flat())?;
        total_evals += 1;
        consider(OptimizedPoint { angles: start.clone(), value, evaluations: 1, converged: false }, &mut best);
    }
    for start in starts {
        f(&start.to_flat())?;
        let mut failure = None;
        let min = nelder_mead(
            |x| match f(x) {
                Ok(v) => -v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            &start.to_flat(),
            cfg.initial_step,
            cfg.max_evals,
            cfg.tolerance,
        );
        if let Some(e) = failure {
            return Err(e.into());
        }
        total_evals += min.evaluations;
        let angles = QaoaAngles::from_flat(&min.x, p, mixer.arity());
        consider(OptimizedPoint { angles, value: -min.value, evaluations: min.evaluations, converged: min.converged }, &mut best);
    }
    let mut point = best.expect("at least one candidate");
    point.evaluations = total_evals;
    Ok(point)
}

/// Maximizes the high-girth cut fraction at depth `p`, from `init` or from
/// `cfg.restarts` random starts. Zero angles are always a candidate, so the
/// result is at least `1 − 1/k`.
pub fn optimize_at_depth(
    k: usize,
    degree: usize,
    p: usize,
    mixer: &MixerSpec,
    init: Option<&QaoaAngles>,
    cfg: &OptimizeConfig,
) -> Result<OptimizedPoint, OptimizeError> {
    if p == 0 {
        return Err(OptimizeError::ZeroDepth);
    }
    let starts = match init {
        Some(a) => vec![a.clone()],
        None => {
            if cfg.restarts == 0 {
                return Err(OptimizeError::NoRestarts);
            }
            random_starts(p, mixer.arity(), degree, cfg, 0)
        }
    };
    best_of(k, degree, p, mixer, &starts, &[QaoaAngles::zeros(p, mixer.arity())], cfg)
}

fn random_starts(p: usize, arity: usize, degree: usize, cfg: &OptimizeConfig, depth_tag: u64) -> Vec<QaoaAngles> {
    (0..cfg.restarts)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((depth_tag << 32) | i as u64);
            random_start(p, arity, degree, &mut rng)
        })
        .collect()
}

/// Sine (for `γ`) and cosine (for each `β` channel) coefficients of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    pub u: Vec<f64>,
    pub v: Vec<Vec<f64>>,
}

fn basis(i: usize, j: usize, q: usize, sine: bool) -> f64 {
    let x = (j as f64 + 0.5) * (i as f64 + 0.5) * PI / q as f64;
    if sine {
        x.sin()
    } else {
        x.cos()
    }
}

fn to_coeffs(values: &[f64], sine: bool) -> Vec<f64> {
    let q = values.len();
    // the half-integer sine and cosine matrices square to (q/2)·I
    (0..q).map(|j| 2.0 / q as f64 * (0..q).map(|i| basis(i, j, q, sine) * values[i]).sum::<f64>()).collect()
}

fn from_coeffs(coeffs: &[f64], q: usize, sine: bool) -> Vec<f64> {
    (0..q).map(|i| coeffs.iter().enumerate().map(|(j, c)| c * basis(i, j, q, sine)).sum()).collect()
}

/// `γ_i = Σ_j u_j sin[(j−½)(i−½)π/p]`, `β_i = Σ_j v_j cos[(j−½)(i−½)π/p]`.
pub fn to_fourier(angles: &QaoaAngles) -> FourierCoefficients {
    let p = angles.depth();
    let arity = angles.betas.first().map_or(0, Vec::len);
    let u = to_coeffs(&angles.gammas, true);
    let v = (0..arity)
        .map(|c| to_coeffs(&angles.betas.iter().map(|b| b[c]).collect::<Vec<_>>(), false))
        .collect();
    debug_assert_eq!(u.len(), p);
    FourierCoefficients { u, v }
}

/// Evaluates the first `min(p, len)` coefficients as a depth-`p` schedule;
/// missing coefficients are zero.
pub fn from_fourier(coeffs: &FourierCoefficients, p: usize) -> QaoaAngles {
    let take = |c: &[f64]| c[..c.len().min(p)].to_vec();
    let gammas = from_coeffs(&take(&coeffs.u), p, true);
    let channels: Vec<Vec<f64>> = coeffs.v.iter().map(|v| from_coeffs(&take(v), p, false)).collect();
    let betas = (0..p).map(|i| channels.iter().map(|ch| ch[i]).collect()).collect();
    QaoaAngles::new(gammas, betas)
}

/// Depth-`p+1` warm start: append a zero Fourier coefficient and resample.
pub fn fourier_extend(angles: &QaoaAngles) -> QaoaAngles {
    from_fourier(&to_fourier(angles), angles.depth() + 1)
}

/// Optimizes depths `1..=p_max`, warm-starting each depth from the FOURIER
/// extension of the previous optimum plus `cfg.restarts` fresh starts. The
/// previous optimum padded with an identity layer is also a candidate, so
/// values never decrease with depth.
pub fn depth_sweep(
    k: usize,
    degree: usize,
    p_max: usize,
    mixer: &MixerSpec,
    cfg: &OptimizeConfig,
) -> Result<Vec<OptimizedPoint>, OptimizeError> {
    if cfg.restarts == 0 {
        return Err(OptimizeError::NoRestarts);
    }
    let arity = mixer.arity();
    let mut out: Vec<OptimizedPoint> = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let mut starts = Vec::new();
        let mut candidates = vec![QaoaAngles::zeros(p, arity)];
        if let Some(prev) = out.last() {
            starts.push(fourier_extend(&prev.angles));
            let mut padded = prev.angles.clone();
            padded.gammas.push(0.0);
            padded.betas.push(vec![0.0; arity]);
            candidates.push(padded);
        }
        starts.extend(random_starts(p, arity, degree, cfg, p as u64));
        out.push(best_of(k, degree, p, mixer, &starts, &candidates, cfg)?);
    }
    Ok(out)
}

/// `F(p) = m / (p^a + c) + b` with the depth where it first reaches a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub m: f64,
    pub a: f64,
    pub c: f64,
    pub b: f64,
    /// Root of the sum of squared residuals.
    pub residual: f64,
    pub p_th: Option<f64>,
}

impl FitModel {
    pub fn eval(&self, p: f64) -> f64 {
        self.m / (p.powf(self.a) + self.c) + self.b
    }
}

/// Horizon for the threshold-depth search.
pub const DEFAULT_FIT_HORIZON: f64 = 200.0;

/// Least-squares `(m, b)` for fixed `(a, c)`; `None` if infeasible.
fn project(points: &[(f64, f64)], a: f64, c: f64) -> Option<(f64, f64, f64)> {
    if !(a > 0.0) || points.iter().any(|&(p, _)| !(p.powf(a) + c > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(p, _)| 1.0 / (p.powf(a) + c)).collect();
    let (sx, sy) = (xs.iter().sum::<f64>(), points.iter().map(|p| p.1).sum::<f64>());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| x * p.1).sum();
    let det = n * sxx - sx * sx;
    let (m, b) = if det.abs() > 1e-14 * n * sxx.max(1e-300) {
        let m = (n * sxy - sx * sy) / det;
        (m, (sy - m * sx) / n)
    } else {
        (0.0, sy / n)
    };
    let sse: f64 = xs.iter().zip(points).map(|(x, p)| (m * x + b - p.1).powi(2)).sum();
    sse.is_finite().then_some((m, b, sse))
}

/// Fits `F(p) = m/(p^a + c) + b`. `(m, b)` are solved in closed form for
/// each `(a, c)`, which are searched by Nelder–Mead from a grid of starts.
pub fn fit_extrapolate(points: &[(f64, f64)], target: f64) -> Result<FitModel, FitError> {
    fit_extrapolate_with_horizon(points, target, DEFAULT_FIT_HORIZON)
}

pub fn fit_extrapolate_with_horizon(points: &[(f64, f64)], target: f64, horizon: f64) -> Result<FitModel, FitError> {
    if points.len() < 4 {
        return Err(FitError::InsufficientPoints(points.len()));
    }
    let p_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let sse = |x: &[f64]| project(points, x[0], x[1]).map_or(f64::INFINITY, |r| r.2);
    let mut best: Option<(f64, f64, f64)> = None;
    for a0 in [0.5, 1.0, 1.5, 2.0, 3.0] {
        for c_rel in [-0.5, 0.0, 0.5, 2.0, 5.0] {
            // keep the start feasible: p^a + c > 0 on the data
            let c0 = c_rel * p_min.powf(a0);
            let min = nelder_mead(sse, &[a0, c0], 0.1, 4000, 1e-20);
            if min.value.is_finite() && best.map_or(true, |b| min.value < b.2) {
                best = Some((min.x[0], min.x[1], min.value));
            }
        }
    }
    let (a, c, _) = best.ok_or(FitError::DegenerateFit)?;
    let (m, b, sse) = project(points, a, c).ok_or(FitError::DegenerateFit)?;
    let mut model = FitModel { m, a, c, b, residual: sse.sqrt(), p_th: None };
    let p_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    model.p_th = threshold_depth(&model, target, p_max, horizon);
    Ok(model)
}

/// Smallest `p ≥ p_start` with `F(p) ≥ target`, by bisection on the tail.
fn threshold_depth(model: &FitModel, target: f64, p_start: f64, horizon: f64) -> Option<f64> {
    let g = |p: f64| model.eval(p) - target;
    if g(p_start) >= 0.0 {
        return Some(p_start);
    }
    if !(g(horizon) >= 0.0) {
        return None;
    }
    let (mut lo, mut hi) = (p_start, horizon);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> OptimizeConfig {
        OptimizeConfig { restarts: 3, max_evals: 2000, ..OptimizeConfig::default() }
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let min = nelder_mead(|x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2), &[0.0, 0.0], 0.5, 5000, 1e-14);
        assert!(min.converged);
        assert!((min.x[0] - 1.0).abs() < 1e-5 && (min.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn qubit_p1_optimum() {
        let m = MixerSpec::grover(2);
        let point = optimize_at_depth(2, 3, 1, &m, None, &quick()).unwrap();
        let target = 0.5 + 1.0 / (3.0 * 3f64.sqrt());
        assert!((point.value - target).abs() < 1e-4, "{}", point.value);
        let again = maxkcut_expectation(2, 3, 1, &m, &point.angles).unwrap();
        assert!((again - point.value).abs() < 1e-12);
    }

    #[test]
    fn never_below_random_baseline() {
        let m = MixerSpec::bkkt(3);
        let cfg = OptimizeConfig { restarts: 1, max_evals: 30, ..OptimizeConfig::default() };
        let point = optimize_at_depth(3, 4, 1, &m, None, &cfg).unwrap();
        assert!(point.value >= 2.0 / 3.0 - 1e-12);
    }

    #[test]
    fn warm_start_improves_with_depth() {
        let m = MixerSpec::grover(3);
        let p1 = optimize_at_depth(3, 3, 1, &m, None, &quick()).unwrap();
        let p2 = optimize_at_depth(3, 3, 2, &m, Some(&fourier_extend(&p1.angles)), &quick()).unwrap();
        assert!(p2.value >= p1.value - 1e-10);
    }

    #[test]
    fn fourier_round_trip() {
        let a = QaoaAngles::new(vec![0.1, 0.4, -0.2], vec![vec![0.3, 1.0], vec![0.2, -0.5], vec![-0.1, 0.0]]);
        let back = from_fourier(&to_fourier(&a), 3);
        for (x, y) in a.to_flat().iter().zip(back.to_flat()) {
            assert!((x - y).abs() < 1e-10);
        }
        let ext = fourier_extend(&a);
        assert_eq!(ext.depth(), 4);
        let trunc = from_fourier(&to_fourier(&a), 3);
        assert!(trunc.to_flat().iter().zip(a.to_flat()).all(|(x, y)| (x - y).abs() < 1e-10));
        // the extension shares the leading coefficients
        let c = to_fourier(&ext);
        let orig = to_fourier(&a);
        for (x, y) in orig.u.iter().zip(&c.u) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(c.u[3].abs() < 1e-10);
        assert_eq!(fourier_extend(&QaoaAngles::zeros(2, 1)), QaoaAngles::zeros(3, 1));
    }

    #[test]
    fn depth_one_extension() {
        let a = QaoaAngles::new(vec![0.6], vec![vec![-0.3]]);
        let ext = fourier_extend(&a);
        let v = maxkcut_expectation(2, 3, 2, &MixerSpec::grover(2), &ext).unwrap();
        assert!(v.is_finite());
        let first = from_fourier(&to_fourier(&ext), 1);
        assert!((first.gammas[0] - 0.6).abs() < 1e-10 && (first.betas[0][0] + 0.3).abs() < 1e-10);
    }

    #[test]
    fn sweep_is_monotone_and_deterministic() {
        let m = MixerSpec::grover(3);
        let cfg = OptimizeConfig { restarts: 1, max_evals: 600, ..OptimizeConfig::default() };
        let a = depth_sweep(3, 3, 3, &m, &cfg).unwrap();
        assert_eq!(a.len(), 3);
        for w in a.windows(2) {
            assert!(w[1].value >= w[0].value - 1e-10);
        }
        assert_eq!(a, depth_sweep(3, 3, 3, &m, &cfg).unwrap());
        let zero = OptimizeConfig { restarts: 0, ..cfg };
        assert_eq!(depth_sweep(3, 3, 2, &m, &zero), Err(OptimizeError::NoRestarts));
    }

    #[test]
    fn fit_recovers_synthetic_model() {
        let truth = FitModel { m: -0.3, a: 1.2, c: 0.5, b: 0.95, residual: 0.0, p_th: None };
        let noise = [0.7e-4, -0.4e-4, 0.2e-4, -0.9e-4, 0.5e-4, -0.1e-4];
        let pts: Vec<(f64, f64)> = (1..=6).map(|p| (p as f64, truth.eval(p as f64) + noise[p - 1])).collect();
        let fit = fit_extrapolate(&pts, 0.94).unwrap();
        for (got, want) in [(fit.m, truth.m), (fit.a, truth.a), (fit.c, truth.c), (fit.b, truth.b)] {
            assert!(((got - want) / want).abs() < 0.05, "{fit:?}");
        }
        let p = fit.p_th.unwrap();
        assert!((fit.eval(p) - 0.94).abs() < 1e-6 && p > 6.0);
    }

    #[test]
    fn constant_data() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|p| (p as f64, 0.8)).collect();
        let fit = fit_extrapolate(&pts, 0.9).unwrap();
        assert!(fit.m.abs() < 1e-6 && (fit.b - 0.8).abs() < 1e-6);
        assert_eq!(fit.p_th, None);
        assert_eq!(fit_extrapolate(&pts, 0.7).unwrap().p_th, Some(5.0));
        assert_eq!(fit_extrapolate(&pts[..3], 0.9), Err(FitError::InsufficientPoints(3)));
    }

    #[test]
    fn angle_record_json() {
        let point = OptimizedPoint {
            angles: QaoaAngles::new(vec![0.1], vec![vec![0.2]]),
            value: 0.7,
            evaluations: 1,
            converged: true,
        };
        let rec = AngleRecord::new(&MixerSpec::grover(3), 3, &point);
        let s = serde_json::to_string(&rec).unwrap();
        assert!(s.contains("\"D\":3") && s.contains("\"mixer\":\"grover\""));
        assert_eq!(serde_json::from_str::<AngleRecord>(&s).unwrap(), rec);
    }
}
