//! Saturation-ordered greedy labeling with 1-opt local improvement.
//!
//! The greedy phase repeatedly picks the unlabeled vertex with the most
//! distinct labels among its neighbors (ties: larger degree) and gives it the
//! label shared by the fewest already-labeled neighbors. The improvement phase
//! sweeps vertices in id order and moves a vertex whenever some other label
//! strictly increases the cut.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;
use crate::maxkcut::{count_cut, Assignment, CutReport};

/// How ties left open by the (saturation, degree) rule are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lowest vertex id, then lowest label id.
    #[default]
    Lowest,
    /// Uniform choice among tied candidates, driven by the seed.
    Seeded(u64),
}

/// Greedy-phase bookkeeping: partial labels and neighbor label counters.
#[derive(Debug, Clone)]
pub struct HeuristicState {
    k: usize,
    labels: Vec<Option<usize>>,
    /// `counts[v * k + a]` = labeled neighbors of `v` carrying label `a`.
    counts: Vec<usize>,
    saturation: Vec<usize>,
    labeled: usize,
}

impl HeuristicState {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            k,
            labels: vec![None; n],
            counts: vec![0; n * k],
            saturation: vec![0; n],
            labeled: 0,
        }
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    pub fn count(&self, v: usize, a: usize) -> usize {
        self.counts[v * self.k + a]
    }

    pub fn saturation(&self, v: usize) -> usize {
        self.saturation[v]
    }

    pub fn num_labeled(&self) -> usize {
        self.labeled
    }

    fn assign(&mut self, g: &Graph, v: usize, a: usize) {
        debug_assert!(self.labels[v].is_none());
        self.labels[v] = Some(a);
        self.labeled += 1;
        for &u in g.neighbors(v) {
            let slot = &mut self.counts[u * self.k + a];
            if *slot == 0 {
                self.saturation[u] += 1;
            }
            *slot += 1;
        }
    }

    /// Recomputes the counters from the labels; used to check the invariant.
    pub fn recount(&self, g: &Graph) -> Vec<usize> {
        let mut counts = vec![0; self.counts.len()];
        for v in 0..g.n() {
            for &u in g.neighbors(v) {
                if let Some(a) = self.labels[u] {
                    counts[v * self.k + a] += 1;
                }
            }
        }
        counts
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    fn into_assignment(self) -> Assignment {
        let labels = self.labels.into_iter().map(|l| l.expect("all vertices labeled")).collect();
        Assignment { k: self.k, labels }
    }
}

/// Picks uniformly among tied maxima with a reservoir, or keeps the first.
struct TiePicker<'a> {
    rng: Option<&'a mut ChaCha8Rng>,
}

impl TiePicker<'_> {
    fn pick<K: Ord + Copy>(&mut self, candidates: impl Iterator<Item = (usize, K)>) -> Option<usize> {
        let mut best: Option<(usize, K)> = None;
        let mut ties = 0u32;
        for (item, key) in candidates {
            match best {
                Some((_, bk)) if key < bk => {}
                Some((_, bk)) if key == bk => {
                    ties += 1;
                    if let Some(rng) = self.rng.as_deref_mut() {
                        if rng.gen_range(0..ties) == 0 {
                            best = Some((item, key));
                        }
                    }
                }
                _ => {
                    best = Some((item, key));
                    ties = 1;
                }
            }
        }
        best.map(|(item, _)| item)
    }
}

/// Runs the greedy phase and returns its final state.
pub fn greedy_state(g: &Graph, k: usize, tie: TieBreak) -> HeuristicState {
    assert!(k >= 2, "k must be at least 2");
    let n = g.n();
    let mut rng = match tie {
        TieBreak::Lowest => None,
        TieBreak::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut state = HeuristicState::new(n, k);
    while state.labeled < n {
        let mut picker = TiePicker { rng: rng.as_mut() };
        let v = picker
            .pick(
                (0..n)
                    .filter(|&v| state.labels[v].is_none())
                    .map(|v| (v, (state.saturation[v], g.degree(v)))),
            )
            .expect("an unlabeled vertex remains");
        // gain(a) = labeled neighbors − counts[v][a]; maximize by minimizing the count
        let counts = &state.counts[v * k..(v + 1) * k];
        let mut picker = TiePicker { rng: rng.as_mut() };
        let a = picker
            .pick(counts.iter().enumerate().map(|(a, &c)| (a, std::cmp::Reverse(c))))
            .expect("k >= 2");
        state.assign(g, v, a);
    }
    state
}

pub fn greedy_pass(g: &Graph, k: usize, tie: TieBreak) -> Assignment {
    greedy_state(g, k, tie).into_assignment()
}

/// 1-opt hill climbing over single-vertex relabels.
///
/// Uses incremental neighbor counts; each candidate move is scored by its
/// exact change in the global cut, so results match a literal recomputation.
pub fn local_improve(g: &Graph, a: &Assignment) -> Assignment {
    let k = a.k;
    let n = g.n();
    assert_eq!(a.labels.len(), n, "assignment size must match graph");
    let mut labels = a.labels.clone();
    let mut counts = vec![0usize; n * k];
    for v in 0..n {
        for &u in g.neighbors(v) {
            counts[v * k + labels[u]] += 1;
        }
    }
    loop {
        let mut changed = false;
        for v in 0..n {
            let row = &counts[v * k..(v + 1) * k];
            let current = labels[v];
            // cut after moving v to c changes by counts[v][current] − counts[v][c]
            let (best, &best_count) = row
                .iter()
                .enumerate()
                .min_by_key(|&(c, &cnt)| (cnt, c))
                .expect("k >= 2");
            if best_count < row[current] {
                labels[v] = best;
                for &u in g.neighbors(v) {
                    counts[u * k + current] -= 1;
                    counts[u * k + best] += 1;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Assignment { k, labels }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HeuristicConfig {
    pub improve: bool,
    pub tie_break: TieBreak,
}

/// Greedy pass followed (optionally) by local improvement.
pub fn solve(g: &Graph, k: usize, cfg: HeuristicConfig) -> (Assignment, CutReport) {
    let mut a = greedy_pass(g, k, cfg.tie_break);
    if cfg.improve {
        a = local_improve(g, &a);
    }
    let report = CutReport::new(count_cut(g, &a.labels), g.num_edges());
    (a, report)
}
