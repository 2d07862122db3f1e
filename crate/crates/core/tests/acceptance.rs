//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Run with `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use maxkcut_lab::graph::{random_regular, Graph};
use maxkcut_lab::heuristic::{self, HeuristicConfig, TieBreak};
use maxkcut_lab::highgirth::{
    edge_expectation_with, hadamard_matvec, hadamard_nd, iterate_fast, iterate_naive, maxkcut_expectation, EvalMethod,
    HighGirthSpec, PathIndex, PathVector,
};
use maxkcut_lab::optimizer::{depth_sweep, fit_extrapolate, optimize_at_depth, OptimizeConfig, OptimizedPoint};
use maxkcut_lab::sdp::{fj_round, solve_relaxation, SdpConfig};
use maxkcut_lab::statevector::{
    bkkt_gauge_fix, edge_expectation, run_qaoa, EdgeCostFn, MixerKind, MixerSpec, QaoaAngles,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const ALL_KINDS: [MixerKind; 3] = [MixerKind::TransverseField, MixerKind::Grover, MixerKind::Bkkt];

// Search effort for the depth sweeps shared by criteria 9–12.
const SWEEP_RESTARTS: usize = 2;
const SWEEP_MAX_EVALS: usize = 3000;
const SWEEP_P: usize = 4;
// Sampled-instance protocol for criteria 8–10.
const N: usize = 1000;
const INSTANCES: u64 = 5;
const ROUNDS: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn mixers(k: usize) -> Vec<MixerSpec> {
    ALL_KINDS.iter().filter_map(|&kind| MixerSpec::new(kind, k).ok()).collect()
}

fn random_angles(m: &MixerSpec, p: usize, rng: &mut ChaCha8Rng) -> QaoaAngles {
    QaoaAngles::new(
        (0..p).map(|_| rng.gen_range(-PI..PI)).collect(),
        (0..p).map(|_| (0..m.arity()).map(|_| rng.gen_range(-PI..PI)).collect()).collect(),
    )
}

fn random_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn zero_angle_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for k in 2..=8 {
        for m in mixers(k) {
            for d in 2..=50 {
                for p in 1..=4 {
                    let v = match maxkcut_expectation(k, d, p, &m, &QaoaAngles::zeros(p, m.arity())) {
                        Ok(v) => v,
                        Err(e) => return outcome(false, format!("k={k} D={d} p={p} {}: {e}", m.kind)),
                    };
                    worst = worst.max((v - (1.0 - 1.0 / k as f64)).abs());
                    cases += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("{cases} cases, max |F − (1 − 1/k)| = {worst:.2e}"))
}

fn tree_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for (k, degree, p) in [(2, 3, 1), (2, 3, 2), (3, 3, 1), (3, 3, 2), (4, 3, 1), (3, 4, 1)] {
        let tree = Graph::regular_edge_tree(degree, p);
        let kinds = mixers(k);
        for draw in 0..25 {
            let m = kinds[draw % kinds.len()];
            let angles = random_angles(&m, p, &mut rng);
            let s = run_qaoa(&tree, &m, &angles).expect("tree fits in memory");
            let oracle = edge_expectation(&s, &tree, 0, 1, &EdgeCostFn::cut_indicator(k)).unwrap();
            let v = maxkcut_expectation(k, degree, p, &m, &angles).unwrap();
            worst = worst.max((v - oracle).abs());
        }
    }
    outcome(worst <= 1e-9, format!("6 trees × 25 draws, max deviation {worst:.2e}"))
}

fn heawood_oracle() -> Outcome {
    let g = Graph::heawood();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for k in [2, 3] {
        let m = MixerSpec::grover(k);
        for p in [1, 2] {
            for _ in 0..10 {
                let angles = random_angles(&m, p, &mut rng);
                let s = run_qaoa(&g, &m, &angles).unwrap();
                let v = maxkcut_expectation(k, 3, p, &m, &angles).unwrap();
                for &(a, b) in g.edges() {
                    let e = edge_expectation(&s, &g, a, b, &EdgeCostFn::cut_indicator(k)).unwrap();
                    worst = worst.max((e - v).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-9, format!("21 edges × 40 draws, max deviation {worst:.2e}"))
}

fn naive_fast_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_nu, mut worst_h): (f64, f64) = (0.0, 0.0);
    for k in [2, 3] {
        let kinds = mixers(k);
        for p in [1, 2] {
            for d in [1, 2, 3] {
                for draw in 0..100 {
                    let m = kinds[draw % kinds.len()];
                    let spec = HighGirthSpec::maxkcut(d + 1, m, random_angles(&m, p, &mut rng)).unwrap();
                    let naive = edge_expectation_with(&spec, EvalMethod::Naive).unwrap();
                    let fast = edge_expectation_with(&spec, EvalMethod::Hadamard).unwrap();
                    worst_nu = worst_nu.max((naive - fast).abs() / naive.abs().max(fast.abs()));
                    let (hn, hf) = (iterate_naive(&spec).unwrap(), iterate_fast(&spec).unwrap());
                    worst_h = worst_h.max(hn.max_abs_diff(&hf));
                }
            }
        }
    }
    outcome(
        worst_nu <= 1e-9,
        format!("12 settings × 100 draws, max relative ν gap {worst_nu:.2e} (max |ΔH| {worst_h:.2e})"),
    )
}

fn p1_closed_form() -> Outcome {
    let cfg = OptimizeConfig { restarts: 10, seed: 5, ..OptimizeConfig::default() };
    let best = optimize_at_depth(2, 3, 1, &MixerSpec::grover(2), None, &cfg).unwrap();
    let target = 0.5 + 1.0 / (3.0 * 3f64.sqrt());
    let gap = (best.value - target).abs();
    outcome(gap <= 1e-4, format!("optimized {:.8} vs 0.5 + 1/(3√3) = {target:.8}", best.value))
}

fn mixer_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let k = rng.gen_range(2..=6);
        let p = rng.gen_range(1..=3);
        let degree = rng.gen_range(2..=8);
        let grover = random_angles(&MixerSpec::grover(k), p, &mut rng);
        // BKKT with every β except the index-0 one set to zero, in the β_0 = 0 gauge
        let bkkt = QaoaAngles::new(
            grover.gammas.clone(),
            grover
                .betas
                .iter()
                .map(|b| {
                    let mut full = vec![0.0; k];
                    full[0] = b[0];
                    bkkt_gauge_fix(&full)
                })
                .collect(),
        );
        let g = maxkcut_expectation(k, degree, p, &MixerSpec::grover(k), &grover).unwrap();
        let b = maxkcut_expectation(k, degree, p, &MixerSpec::bkkt(k), &bkkt).unwrap();
        worst = worst.max((g - b).abs());
    }
    outcome(worst <= 1e-12, format!("50 angle sets, max |Grover − BKKT| = {worst:.2e}"))
}

fn digits(mut i: usize, k: usize, n: usize) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let d = i % k;
            i /= k;
            d
        })
        .collect()
}

fn hadamard_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut round_trip, mut dense): (f64, f64) = (0.0, 0.0);
    for k in [2usize, 3, 5] {
        for n in 1..=4 {
            let len = k.pow(n as u32);
            let v = random_vec(len, &mut rng);
            let back = hadamard_nd(&hadamard_nd(&v, k, n, false), k, n, true);
            round_trip = round_trip.max(max_diff(&v, &back));
            let scale = (k as f64).powf(-(n as f64) / 2.0);
            let want: Vec<Complex64> = (0..len)
                .map(|x| {
                    let dx = digits(x, k, n);
                    (0..len)
                        .map(|y| {
                            let dot: usize = dx.iter().zip(digits(y, k, n)).map(|(a, b)| a * b).sum();
                            Complex64::from_polar(scale, -2.0 * PI * (dot % k) as f64 / k as f64) * v[y]
                        })
                        .sum()
                })
                .collect();
            dense = dense.max(max_diff(&want, &hadamard_nd(&v, k, n, false)));
        }
    }
    let mut conv: f64 = 0.0;
    for k in [2, 3, 5] {
        let idx = PathIndex::new(1, k);
        let (n, len) = (idx.len(), idx.size().unwrap());
        for _ in 0..5 {
            let m = random_vec(len, &mut rng);
            let u = random_vec(len, &mut rng);
            let fast = hadamard_matvec(&PathVector::new(idx, m.clone()).unwrap(), &PathVector::new(idx, u.clone()).unwrap())
                .unwrap();
            let want: Vec<Complex64> = (0..len)
                .map(|a| {
                    let da = digits(a, k, n);
                    (0..len)
                        .map(|b| {
                            let diff: Vec<usize> = da.iter().zip(digits(b, k, n)).map(|(x, y)| (x + k - y) % k).collect();
                            m[idx.encode(&diff)] * u[b]
                        })
                        .sum()
                })
                .collect();
            let got: Vec<Complex64> = (0..len).map(|a| fast.get(&digits(a, k, n))).collect();
            conv = conv.max(max_diff(&want, &got));
        }
    }
    outcome(
        round_trip <= 1e-12 && dense <= 1e-12 && conv <= 1e-9,
        format!("round trip {round_trip:.2e}, dense kernel {dense:.2e}, convolution at n=4 {conv:.2e}"),
    )
}

fn heuristic_mean(k: usize, degree: usize, instances: u64) -> f64 {
    let cfg = HeuristicConfig { improve: true, tie_break: TieBreak::Lowest };
    let total: f64 = (0..instances)
        .map(|seed| {
            let g = random_regular(N, degree, seed).expect("valid degree");
            heuristic::solve(&g, k, cfg).1.cut_fraction
        })
        .sum();
    total / instances as f64
}

fn near_colorability() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, degree) in [(4, 4), (4, 5), (4, 6), (5, 8), (5, 11)] {
        let mean = heuristic_mean(k, degree, 10);
        pass &= mean >= 0.999;
        parts.push(format!("k={k} D={degree}: {mean:.5}"));
    }
    outcome(pass, parts.join(", "))
}

struct Sweep {
    k: usize,
    degree: usize,
    points: Vec<OptimizedPoint>,
}

impl Sweep {
    fn best(&self) -> f64 {
        self.points.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn sweeps() -> Vec<Sweep> {
    let cfg = OptimizeConfig { restarts: SWEEP_RESTARTS, max_evals: SWEEP_MAX_EVALS, seed: 1, ..OptimizeConfig::default() };
    [(3, 3), (3, 5), (3, 10), (4, 3), (4, 5), (4, 10), (4, 20), (4, 40)]
        .into_iter()
        .map(|(k, degree)| {
            let points = depth_sweep(k, degree, SWEEP_P, &MixerSpec::grover(k), &cfg).expect("sweep runs");
            Sweep { k, degree, points }
        })
        .collect()
}

fn sweep(all: &[Sweep], k: usize, degree: usize) -> &Sweep {
    all.iter().find(|s| s.k == k && s.degree == degree).expect("swept")
}

fn solver_ordering(all: &[Sweep]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut worst_violation: f64 = 0.0;
    for (k, degree) in [(3, 3), (3, 5), (3, 10), (4, 5), (4, 10), (4, 20), (4, 40)] {
        let mut total = 0.0;
        for i in 0..INSTANCES {
            let g = random_regular(N, degree, 100 + i).expect("valid degree");
            let sol = solve_relaxation(&g, k, &SdpConfig::with_seed(i)).expect("relaxation solves");
            worst_violation = worst_violation.max(sol.max_violation);
            total += fj_round(&g, &sol.factor, k, ROUNDS, i).expect("rounds").mean_fraction();
        }
        let sdp = total / INSTANCES as f64;
        let qaoa = sweep(all, k, degree).points[SWEEP_P - 1].value;
        pass &= qaoa > sdp;
        parts.push(format!("k={k} D={degree}: QAOA {qaoa:.4} vs SDP {sdp:.4}"));
    }
    if worst_violation > 1e-3 {
        parts.push(format!("CAVEAT: relaxation constraint violation up to {worst_violation:.2e} exceeds 1e-3"));
    } else {
        parts.push(format!("max constraint violation {worst_violation:.2e}"));
    }
    outcome(pass, parts.join("; "))
}

fn heuristic_dominance(all: &[Sweep]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [3, 4] {
        for degree in [3, 5, 10] {
            let h = heuristic_mean(k, degree, INSTANCES);
            let q = sweep(all, k, degree).best();
            pass &= h >= q;
            parts.push(format!("k={k} D={degree}: heuristic {h:.4} vs QAOA {q:.4}"));
        }
    }
    outcome(pass, parts.join("; "))
}

fn depth_monotonicity(all: &[Sweep]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, degree, p_max) in [(3, 3, 4), (4, 5, 3)] {
        let values: Vec<f64> = sweep(all, k, degree).points[..p_max].iter().map(|p| p.value).collect();
        pass &= values.windows(2).all(|w| w[1] >= w[0] - 1e-10);
        let shown: Vec<String> = values.iter().map(|v| format!("{v:.5}")).collect();
        parts.push(format!("k={k} D={degree}: [{}]", shown.join(", ")));
    }
    outcome(pass, parts.join("; "))
}

fn fit_recovery(all: &[Sweep]) -> Outcome {
    let (m, a, c, b) = (-0.3, 0.8, 1.0, 0.95);
    let noise = Normal::new(0.0, 1e-4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let points: Vec<(f64, f64)> = (1..=6)
        .map(|p| {
            let p = p as f64;
            (p, m / (p.powf(a) + c) + b + noise.sample(&mut rng))
        })
        .collect();
    let fit = match fit_extrapolate(&points, 0.9) {
        Ok(f) => f,
        Err(e) => return outcome(false, e.to_string()),
    };
    let rel = |got: f64, want: f64| ((got - want) / want).abs();
    let worst = rel(fit.m, m).max(rel(fit.a, a)).max(rel(fit.c, c)).max(rel(fit.b, b));
    // reported only: depth at which the k=3, D=10 curve would reach the heuristic
    let s = sweep(all, 3, 10);
    let curve: Vec<(f64, f64)> = s.points.iter().enumerate().map(|(i, p)| ((i + 1) as f64, p.value)).collect();
    let target = heuristic_mean(3, 10, INSTANCES);
    let p_th = match fit_extrapolate(&curve, target) {
        Ok(f) => f.p_th.map_or("beyond horizon".to_owned(), |p| format!("{p:.1}")),
        Err(e) => format!("no fit ({e})"),
    };
    outcome(
        worst <= 0.05,
        format!(
            "fitted (m,a,c,b) = ({:.4}, {:.4}, {:.4}, {:.4}), max relative error {worst:.2e}; \
             report only: k=3 D=10 p_th vs heuristic {target:.4} = {p_th}",
            fit.m, fit.a, fit.c, fit.b
        ),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{status} {id:>2} {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failures += 1;
        }
    };
    report(1, "zero-angle identity", &mut zero_angle_identity);
    report(2, "tree statevector oracle", &mut tree_oracle);
    report(3, "Heawood graph oracle", &mut heawood_oracle);
    report(4, "naive/fast agreement", &mut naive_fast_agreement);
    report(5, "p=1 closed form", &mut p1_closed_form);
    report(6, "BKKT reduces to Grover", &mut mixer_reduction);
    report(7, "Hadamard transform", &mut hadamard_checks);
    report(8, "heuristic near-colorability", &mut near_colorability);
    let start = Instant::now();
    let all = sweeps();
    println!(
        "     depth sweeps to p={SWEEP_P} ({SWEEP_RESTARTS} restarts, {SWEEP_MAX_EVALS} evaluations each) took {:.1}s",
        start.elapsed().as_secs_f64()
    );
    report(9, "QAOA beats SDP rounding", &mut || solver_ordering(&all));
    report(10, "heuristic beats QAOA", &mut || heuristic_dominance(&all));
    report(11, "depth monotonicity", &mut || depth_monotonicity(&all));
    report(12, "fit recovery", &mut || fit_recovery(&all));
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
