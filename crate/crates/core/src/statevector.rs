//! Dense qudit statevector simulation of the QAOA circuit.
//!
//! Amplitudes use little-endian mixed-radix indexing: qudit 0 is the fastest
//! varying digit of the basis index.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

/// Default cap on the number of amplitudes `k^n`.
pub const DEFAULT_AMPLITUDE_BUDGET: usize = 1 << 26;

#[derive(Debug, Error, PartialEq)]
pub enum QaoaError {
    #[error("{kind} mixer expects {expected} angle(s) per layer, got {got}")]
    ArityMismatch { kind: MixerKind, expected: usize, got: usize },
    #[error("transverse-field mixer needs k a power of two, got {0}")]
    NonPowerOfTwoK(usize),
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("angles: {gammas} gammas but {betas} beta layers")]
    DepthMismatch { gammas: usize, betas: usize },
    #[error("statevector has {state} qudits but graph has {graph} vertices")]
    SizeMismatch { state: usize, graph: usize },
    #[error("{{{0}, {1}}} is not an edge")]
    NotAnEdge(usize, usize),
    #[error("{k}^{n} amplitudes exceed budget {budget}")]
    BudgetExceeded { k: usize, n: usize, budget: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixerKind {
    TransverseField,
    Grover,
    Bkkt,
}

impl fmt::Display for MixerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixerKind::TransverseField => "tf",
            MixerKind::Grover => "grover",
            MixerKind::Bkkt => "bkkt",
        })
    }
}

impl FromStr for MixerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tf" | "transverse-field" | "transverse_field" => Ok(MixerKind::TransverseField),
            "grover" => Ok(MixerKind::Grover),
            "bkkt" => Ok(MixerKind::Bkkt),
            other => Err(format!("unknown mixer {other:?} (expected tf, grover or bkkt)")),
        }
    }
}

/// A mixer family at a fixed qudit dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixerSpec {
    pub kind: MixerKind,
    pub k: usize,
}

impl MixerSpec {
    pub fn new(kind: MixerKind, k: usize) -> Result<Self, QaoaError> {
        if k < 2 {
            return Err(QaoaError::InvalidK(k));
        }
        if kind == MixerKind::TransverseField && !k.is_power_of_two() {
            return Err(QaoaError::NonPowerOfTwoK(k));
        }
        Ok(Self { kind, k })
    }

    pub fn grover(k: usize) -> Self {
        Self::new(MixerKind::Grover, k).expect("k >= 2")
    }

    pub fn bkkt(k: usize) -> Self {
        Self::new(MixerKind::Bkkt, k).expect("k >= 2")
    }

    /// Angles per layer. BKKT keeps `β_c` for `c = 1..k`; `β_0` is the
    /// eliminated global phase and fixed to zero.
    pub fn arity(&self) -> usize {
        match self.kind {
            MixerKind::TransverseField | MixerKind::Grover => 1,
            MixerKind::Bkkt => self.k - 1,
        }
    }

    /// The single-qudit mixer unitary for one layer.
    pub fn matrix(&self, beta: &[f64]) -> Result<QuditMatrix, QaoaError> {
        mixer_matrix(self, beta)
    }
}

/// Maps BKKT angles in the full `k`-parameter form `(β_0, …, β_{k−1})` to the
/// gauge-fixed form used by [`MixerSpec`]: `β_c − β_0` for `c ≥ 1`. The two
/// unitaries differ by the global phase `e^{iβ_0}`.
pub fn bkkt_gauge_fix(full: &[f64]) -> Vec<f64> {
    full[1..].iter().map(|b| b - full[0]).collect()
}

/// Per-layer QAOA angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaAngles {
    pub gammas: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
}

impl QaoaAngles {
    pub fn new(gammas: Vec<f64>, betas: Vec<Vec<f64>>) -> Self {
        Self { gammas, betas }
    }

    pub fn zeros(p: usize, arity: usize) -> Self {
        Self { gammas: vec![0.0; p], betas: vec![vec![0.0; arity]; p] }
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn validate(&self, mixer: &MixerSpec) -> Result<(), QaoaError> {
        if self.gammas.len() != self.betas.len() {
            return Err(QaoaError::DepthMismatch { gammas: self.gammas.len(), betas: self.betas.len() });
        }
        for b in &self.betas {
            if b.len() != mixer.arity() {
                return Err(QaoaError::ArityMismatch { kind: mixer.kind, expected: mixer.arity(), got: b.len() });
            }
        }
        Ok(())
    }

    /// Flattens to `[γ_1..γ_p, β_1.., …, β_p..]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.gammas.clone();
        for b in &self.betas {
            v.extend_from_slice(b);
        }
        v
    }

    pub fn from_flat(flat: &[f64], p: usize, arity: usize) -> Self {
        assert_eq!(flat.len(), p * (1 + arity), "flat angle vector has wrong length");
        let gammas = flat[..p].to_vec();
        let betas = flat[p..].chunks(arity).map(|c| c.to_vec()).collect();
        Self { gammas, betas }
    }
}

/// Dense row-major square complex matrix acting on one qudit.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl QuditMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let data = (0..dim * dim).map(|i| f(i / dim, i % dim)).collect();
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Element `⟨row|U|col⟩`.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_fn(self.dim, |r, c| (0..self.dim).map(|j| self.get(r, j) * other.get(j, c)).sum())
    }

    /// `max |A_ij − B_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.dim))
    }
}

/// Builds the single-qudit mixer unitary.
///
/// * Grover: `I + (e^{iβ} − 1)/k · J`, i.e. `exp(iβ|+⟩⟨+|)`.
/// * BKKT: `Σ_c e^{iβ_c}|c̃⟩⟨c̃|` with `β_0 = 0`, assembled as
///   `I + (1/k)Σ_c (e^{iβ_c} − 1) ω^{c(a−b)}` so zero angles give exactly `I`.
/// * Transverse field: `exp(−iβ/2 Σ_i X_i)` over the `log2 k` qubits of the
///   binary encoding.
pub fn mixer_matrix(m: &MixerSpec, beta: &[f64]) -> Result<QuditMatrix, QaoaError> {
    if beta.len() != m.arity() {
        return Err(QaoaError::ArityMismatch { kind: m.kind, expected: m.arity(), got: beta.len() });
    }
    let k = m.k;
    let kf = k as f64;
    let one = Complex64::new(1.0, 0.0);
    Ok(match m.kind {
        MixerKind::Grover => {
            let off = (Complex64::from_polar(1.0, beta[0]) - one) / kf;
            QuditMatrix::from_fn(k, |r, c| if r == c { one + off } else { off })
        }
        MixerKind::Bkkt => {
            let phases: Vec<Complex64> = std::iter::once(0.0)
                .chain(beta.iter().copied())
                .map(|b| Complex64::from_polar(1.0, b) - one)
                .collect();
            QuditMatrix::from_fn(k, |r, col| {
                let diff = (r + k - col) % k;
                let sum: Complex64 = phases
                    .iter()
                    .enumerate()
                    .map(|(c, ph)| ph * Complex64::from_polar(1.0, 2.0 * PI * ((c * diff) % k) as f64 / kf))
                    .sum();
                let base = if r == col { one } else { Complex64::new(0.0, 0.0) };
                base + sum / kf
            })
        }
        MixerKind::TransverseField => {
            if !k.is_power_of_two() {
                return Err(QaoaError::NonPowerOfTwoK(k));
            }
            let qubits = k.trailing_zeros();
            let (s, c) = (beta[0] / 2.0).sin_cos();
            let diag = Complex64::new(c, 0.0);
            let off = Complex64::new(0.0, -s);
            QuditMatrix::from_fn(k, |r, col| {
                let flips = (r ^ col).count_ones();
                diag.powu(qubits - flips) * off.powu(flips)
            })
        }
    })
}

/// Per-edge function of two labels, real valued.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCostFn {
    /// Arbitrary table `φ(x, y)`, row-major `k × k`.
    General { k: usize, table: Vec<f64> },
    /// `φ(x, y) = g((x − y) mod k)`.
    TranslationInvariant { k: usize, values: Vec<f64> },
}

impl EdgeCostFn {
    /// `1[x ≠ y]`: the Max-k-Cut edge indicator.
    pub fn cut_indicator(k: usize) -> Self {
        let values = (0..k).map(|c| if c == 0 { 0.0 } else { 1.0 }).collect();
        EdgeCostFn::TranslationInvariant { k, values }
    }

    /// `1[x = y]`: the same-label penalty generating the phaser.
    pub fn same_label_penalty(k: usize) -> Self {
        let values = (0..k).map(|c| if c == 0 { 1.0 } else { 0.0 }).collect();
        EdgeCostFn::TranslationInvariant { k, values }
    }

    pub fn k(&self) -> usize {
        match self {
            EdgeCostFn::General { k, .. } | EdgeCostFn::TranslationInvariant { k, .. } => *k,
        }
    }

    pub fn eval(&self, x: usize, y: usize) -> f64 {
        match self {
            EdgeCostFn::General { k, table } => table[x * k + y],
            EdgeCostFn::TranslationInvariant { k, values } => values[(x + k - y) % k],
        }
    }

    pub fn is_translation_invariant(&self) -> bool {
        matches!(self, EdgeCostFn::TranslationInvariant { .. })
    }

    /// Expanded `k × k` table, regardless of representation.
    pub fn to_general(&self) -> Self {
        let k = self.k();
        let table = (0..k * k).map(|i| self.eval(i / k, i % k)).collect();
        EdgeCostFn::General { k, table }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    k: usize,
    n_qudits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|+⟩^{⊗n}`: every amplitude `k^{−n/2}`.
    pub fn uniform(k: usize, n_qudits: usize, budget: usize) -> Result<Self, QaoaError> {
        let len = checked_pow(k, n_qudits).filter(|&l| l <= budget).ok_or(QaoaError::BudgetExceeded {
            k,
            n: n_qudits,
            budget,
        })?;
        let amp = Complex64::new((len as f64).sqrt().recip(), 0.0);
        Ok(Self { k, n_qudits, amplitudes: vec![amp; len] })
    }

    pub fn from_amplitudes(k: usize, n_qudits: usize, amplitudes: Vec<Complex64>) -> Self {
        assert_eq!(Some(amplitudes.len()), checked_pow(k, n_qudits), "length must be k^n");
        Self { k, n_qudits, amplitudes }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_qudits(&self) -> usize {
        self.n_qudits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Label of qudit `q` in basis state `index`.
    pub fn digit(&self, index: usize, q: usize) -> usize {
        (index / self.k.pow(q as u32)) % self.k
    }

    /// Applies a single-qudit gate to qudit `q`.
    pub fn apply_single(&mut self, q: usize, u: &QuditMatrix) {
        let k = self.k;
        assert_eq!(u.dim(), k);
        let stride = k.pow(q as u32);
        let block = stride * k;
        let mut buf = vec![Complex64::new(0.0, 0.0); k];
        for base in (0..self.amplitudes.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (a, slot) in buf.iter_mut().enumerate() {
                    *slot = self.amplitudes[start + a * stride];
                }
                for r in 0..k {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (c, v) in buf.iter().enumerate() {
                        acc += u.get(r, c) * v;
                    }
                    self.amplitudes[start + r * stride] = acc;
                }
            }
        }
    }

    fn apply_diagonal_phase(&mut self, counts: &[u32], gamma: f64) {
        let max = counts.iter().copied().max().unwrap_or(0) as usize;
        let phases: Vec<Complex64> = (0..=max).map(|c| Complex64::from_polar(1.0, -gamma * c as f64)).collect();
        for (amp, &c) in self.amplitudes.iter_mut().zip(counts) {
            *amp *= phases[c as usize];
        }
    }
}

fn checked_pow(k: usize, n: usize) -> Option<usize> {
    u32::try_from(n).ok().and_then(|n| k.checked_pow(n))
}

/// Number of same-label edges for every basis state.
fn same_label_counts(k: usize, g: &Graph) -> Vec<u32> {
    let len = k.pow(g.n() as u32);
    let strides: Vec<usize> = (0..g.n()).map(|q| k.pow(q as u32)).collect();
    (0..len)
        .map(|x| {
            g.edges()
                .iter()
                .filter(|&&(u, v)| (x / strides[u]) % k == (x / strides[v]) % k)
                .count() as u32
        })
        .collect()
}

/// Multiplies each basis amplitude by `exp(−iγ · #{same-label edges})`.
pub fn apply_phaser(s: &mut Statevector, g: &Graph, gamma: f64) -> Result<(), QaoaError> {
    if s.n_qudits != g.n() {
        return Err(QaoaError::SizeMismatch { state: s.n_qudits, graph: g.n() });
    }
    let counts = same_label_counts(s.k, g);
    s.apply_diagonal_phase(&counts, gamma);
    Ok(())
}

pub fn run_qaoa(g: &Graph, mixer: &MixerSpec, angles: &QaoaAngles) -> Result<Statevector, QaoaError> {
    run_qaoa_with_budget(g, mixer, angles, DEFAULT_AMPLITUDE_BUDGET)
}

/// Prepares `∏_t U_M(β_t) U_C(γ_t) |+⟩^{⊗n}`, phaser first in each layer.
pub fn run_qaoa_with_budget(
    g: &Graph,
    mixer: &MixerSpec,
    angles: &QaoaAngles,
    budget: usize,
) -> Result<Statevector, QaoaError> {
    angles.validate(mixer)?;
    let mut state = Statevector::uniform(mixer.k, g.n(), budget)?;
    if angles.depth() == 0 {
        return Ok(state);
    }
    let counts = same_label_counts(mixer.k, g);
    for (gamma, beta) in angles.gammas.iter().zip(&angles.betas) {
        state.apply_diagonal_phase(&counts, *gamma);
        let u = mixer_matrix(mixer, beta)?;
        for q in 0..g.n() {
            state.apply_single(q, &u);
        }
    }
    Ok(state)
}

/// `Σ_x |amp(x)|² ξ(x_u, x_v)` for an edge `{u, v}`.
pub fn edge_expectation(
    s: &Statevector,
    g: &Graph,
    u: usize,
    v: usize,
    xi: &EdgeCostFn,
) -> Result<f64, QaoaError> {
    if s.n_qudits != g.n() {
        return Err(QaoaError::SizeMismatch { state: s.n_qudits, graph: g.n() });
    }
    if !g.has_edge(u, v) {
        return Err(QaoaError::NotAnEdge(u, v));
    }
    let (su, sv) = (s.k.pow(u as u32), s.k.pow(v as u32));
    Ok(s
        .amplitudes
        .iter()
        .enumerate()
        .map(|(x, a)| a.norm_sqr() * xi.eval((x / su) % s.k, (x / sv) % s.k))
        .sum())
}
