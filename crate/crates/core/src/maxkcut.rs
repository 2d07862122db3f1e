//! Max-k-Cut objective, cut statistics and an exhaustive optimum oracle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

/// Default cap on `k^n` for [`brute_force_optimum`].
pub const DEFAULT_BRUTE_FORCE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum CutError {
    #[error("assignment has {got} labels but graph has {expected} vertices")]
    SizeMismatch { expected: usize, got: usize },
    #[error("label {label} at vertex {vertex} is outside 0..{k}")]
    LabelOutOfRange { vertex: usize, label: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("exhaustive search over {k}^{n} assignments exceeds budget {budget}")]
    BudgetExceeded { k: usize, n: usize, budget: u64 },
}

/// Vertex labeling `χ: V → Z_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub k: usize,
    pub labels: Vec<usize>,
}

impl Assignment {
    pub fn new(k: usize, labels: Vec<usize>) -> Result<Self, CutError> {
        if k < 2 {
            return Err(CutError::InvalidK(k));
        }
        if let Some((vertex, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(CutError::LabelOutOfRange { vertex, label, k });
        }
        Ok(Self { k, labels })
    }

    pub fn uniform(k: usize, n: usize) -> Self {
        Self { k, labels: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("assignment serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub cut_edges: usize,
    pub total_edges: usize,
    pub cut_fraction: f64,
}

impl CutReport {
    pub fn new(cut_edges: usize, total_edges: usize) -> Self {
        let cut_fraction = if total_edges == 0 { 0.0 } else { cut_edges as f64 / total_edges as f64 };
        Self { cut_edges, total_edges, cut_fraction }
    }
}

pub(crate) fn count_cut(g: &Graph, labels: &[usize]) -> usize {
    g.edges().iter().filter(|&&(u, v)| labels[u] != labels[v]).count()
}

pub fn cut_value(g: &Graph, a: &Assignment) -> Result<CutReport, CutError> {
    if a.labels.len() != g.n() {
        return Err(CutError::SizeMismatch { expected: g.n(), got: a.labels.len() });
    }
    Ok(CutReport::new(count_cut(g, &a.labels), g.num_edges()))
}

/// Expected cut fraction of a uniformly random labeling, `1 - 1/k`.
pub fn random_baseline(k: usize) -> f64 {
    1.0 - 1.0 / k as f64
}

/// `⌊2(k−1)·ln(k−1)⌋`, the degree below which random regular graphs are
/// asymptotically almost surely k-colorable.
pub fn colorability_threshold(k: usize) -> usize {
    assert!(k >= 2, "k must be at least 2");
    let km1 = (k - 1) as f64;
    (2.0 * km1 * km1.ln()).floor() as usize
}

/// Exhaustive maximum; ties resolve to the lexicographically smallest labeling.
pub fn brute_force_optimum(g: &Graph, k: usize) -> Result<(Assignment, CutReport), CutError> {
    brute_force_optimum_with_budget(g, k, DEFAULT_BRUTE_FORCE_BUDGET)
}

pub fn brute_force_optimum_with_budget(
    g: &Graph,
    k: usize,
    budget: u64,
) -> Result<(Assignment, CutReport), CutError> {
    if k < 2 {
        return Err(CutError::InvalidK(k));
    }
    let n = g.n();
    let total = (k as u64).checked_pow(n as u32).filter(|&t| t <= budget);
    if total.is_none() {
        return Err(CutError::BudgetExceeded { k, n, budget });
    }

    // odometer with the last vertex varying fastest = lexicographic order;
    // only a strictly better cut replaces the incumbent
    let mut labels = vec![0usize; n];
    let mut current = 0usize;
    let mut best = (labels.clone(), 0usize);
    loop {
        if current > best.1 {
            best = (labels.clone(), current);
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                let report = CutReport::new(best.1, g.num_edges());
                return Ok((Assignment { k, labels: best.0 }, report));
            }
            pos -= 1;
            let old = labels[pos];
            let new = if old + 1 == k { 0 } else { old + 1 };
            current = apply_relabel(g, &labels, pos, new, current);
            labels[pos] = new;
            if new != 0 {
                break;
            }
        }
    }
}

fn apply_relabel(g: &Graph, labels: &[usize], v: usize, new: usize, current: usize) -> usize {
    let old = labels[v];
    let mut value = current as isize;
    for &w in g.neighbors(v) {
        value += (labels[w] == old) as isize - (labels[w] == new) as isize;
    }
    value as usize
}
