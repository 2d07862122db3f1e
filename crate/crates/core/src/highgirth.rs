//! Instance-independent QAOA edge expectations on high-girth regular graphs.
//!
//! On a `(d+1)`-regular graph whose girth is at least `2p+2`, the depth-`p`
//! light cone of an edge is a tree, so the expectation of a per-edge
//! observable depends only on `(k, d, p)` and the angles. It is computed from
//! tensors over *path* ditstrings `a ∈ Z_k^{2p+2}` that track one qudit's
//! basis label through the bra layers `a_1 … a_{p+1}` and the ket layers
//! `a_{−p−1} … a_{−1}`.
//!
//! Four evaluators share one contract:
//!
//! * [`EvalMethod::Naive`] — literal double sum with a dense phase, `O(k^{4p+4})`.
//! * [`EvalMethod::Hadamard`] — translation-invariant costs; convolutions are
//!   diagonalized by the Hadamard transform over `Z_k^{2p+2}`.
//! * [`EvalMethod::Factored`] — the phase `e^{iΦ(a,b)}` is a Kronecker product
//!   of `k × k` matrices, one per path coordinate, and the two middle
//!   coordinates collapse because `f` forces them equal and `Φ` ignores them.
//!   Works for any cost tables in `O(p² k^{2p+2})` and is the default.
//! * [`EvalMethod::Support`] — enumerates only ditstrings with `f(a) ≠ 0`;
//!   exact and very cheap when the mixers are (near) diagonal.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::statevector::{EdgeCostFn, MixerSpec, QaoaAngles, QaoaError, QuditMatrix};

/// Largest path-vector length accepted, `k^{2p+2} ≤ 2^31`.
pub const MAX_PATH_ENTRIES: u64 = 1 << 31;
/// Cap on `k^{2(2p+2)}` pair evaluations in the naive evaluator.
pub const DEFAULT_NAIVE_BUDGET: u64 = 1 << 34;
/// [`EvalMethod::Auto`] enumerates the support of `f` when it has at most
/// this many entries.
pub const SUPPORT_LIMIT: usize = 1024;
/// Absolute tolerance on the imaginary part of an expectation, for trees
/// with at most `IMAGINARY_TOLERANCE_SCALE` paths of length `p`.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;
/// Each level raises to the `d`-th power, so rounding grows like `d^p`; the
/// tolerance grows proportionally past this many paths.
pub const IMAGINARY_TOLERANCE_SCALE: f64 = 1e5;

/// Imaginary-residue tolerance for degree `d` and depth `p`.
pub fn imaginary_tolerance(d: usize, p: usize) -> f64 {
    IMAGINARY_TOLERANCE * ((d as f64).powi(p as i32) / IMAGINARY_TOLERANCE_SCALE).max(1.0)
}

#[derive(Debug, Error, PartialEq)]
pub enum HighGirthError {
    #[error(transparent)]
    Qaoa(#[from] QaoaError),
    #[error("path vector needs {k}^{len} entries, above the 2^31 bound")]
    TooLarge { k: usize, len: usize },
    #[error("naive evaluation needs {work} kernel evaluations, budget {budget}")]
    BudgetExceeded { work: u128, budget: u64 },
    #[error("the Hadamard path requires translation-invariant edge costs")]
    NotTranslationInvariant,
    #[error("imaginary residue {0:e} in edge expectation")]
    ImaginaryResidueExceeded(f64),
    #[error("cost function is over Z_{got} but the mixer acts on Z_{k}")]
    DimensionMismatch { k: usize, got: usize },
    #[error("graph degree must be at least 1")]
    InvalidDegree,
    #[error("depth {p} requested but angles have depth {got}")]
    DepthMismatch { p: usize, got: usize },
    #[error("path vectors have different shapes")]
    ShapeMismatch,
}

type Result<T> = std::result::Result<T, HighGirthError>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Shape of a path tensor: `2p+2` axes of size `k`.
///
/// Axis order is `(a_1, …, a_{p+1}, a_{−p−1}, …, a_{−1})`, flattened
/// little-endian (axis 0 fastest).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathIndex {
    pub p: usize,
    pub k: usize,
}

impl PathIndex {
    pub fn new(p: usize, k: usize) -> Self {
        Self { p, k }
    }

    /// Number of axes, `2p + 2`.
    pub fn len(&self) -> usize {
        2 * self.p + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total number of entries `k^{2p+2}`, if it fits the size bound.
    pub fn size(&self) -> Option<usize> {
        (self.k as u64)
            .checked_pow(self.len() as u32)
            .filter(|&s| s <= MAX_PATH_ENTRIES)
            .map(|s| s as usize)
    }

    fn checked_size(&self) -> Result<usize> {
        self.size().ok_or(HighGirthError::TooLarge { k: self.k, len: self.len() })
    }

    /// Axis holding `a_t` for `t = 1..=p+1`.
    pub fn bra_axis(&self, t: usize) -> usize {
        debug_assert!((1..=self.p + 1).contains(&t));
        t - 1
    }

    /// Axis holding `a_{−t}` for `t = 1..=p+1`.
    pub fn ket_axis(&self, t: usize) -> usize {
        debug_assert!((1..=self.p + 1).contains(&t));
        2 * self.p + 2 - t
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        assert_eq!(digits.len(), self.len());
        digits.iter().rev().fold(0, |acc, &d| acc * self.k + d)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        (0..self.len())
            .map(|_| {
                let d = index % self.k;
                index /= self.k;
                d
            })
            .collect()
    }
}

/// Complex tensor over path ditstrings.
#[derive(Debug, Clone, PartialEq)]
pub struct PathVector {
    pub idx: PathIndex,
    pub values: Vec<Complex64>,
}

impl PathVector {
    pub fn new(idx: PathIndex, values: Vec<Complex64>) -> Result<Self> {
        if Some(values.len()) != idx.size() {
            return Err(HighGirthError::ShapeMismatch);
        }
        Ok(Self { idx, values })
    }

    pub fn filled(idx: PathIndex, value: Complex64) -> Result<Self> {
        Ok(Self { idx, values: vec![value; idx.checked_size()?] })
    }

    pub fn get(&self, digits: &[usize]) -> Complex64 {
        self.values[self.idx.encode(digits)]
    }

    /// `max |a_i − b_i|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Everything the high-girth formula needs. `d` is the branching factor, one
/// less than the graph degree. The girth assumption `≥ 2p+2` is the caller's
/// responsibility.
#[derive(Debug, Clone, PartialEq)]
pub struct HighGirthSpec {
    pub k: usize,
    pub d: usize,
    pub p: usize,
    pub mixer: MixerSpec,
    pub angles: QaoaAngles,
    /// Per-edge term of the phase Hamiltonian, `U_C(γ) = e^{−iγ Σ_edges φ}`.
    pub phi: EdgeCostFn,
    /// Per-edge observable.
    pub xi: EdgeCostFn,
}

impl HighGirthSpec {
    pub fn new(d: usize, mixer: MixerSpec, angles: QaoaAngles, phi: EdgeCostFn, xi: EdgeCostFn) -> Result<Self> {
        angles.validate(&mixer)?;
        let k = mixer.k;
        for cost in [&phi, &xi] {
            if cost.k() != k {
                return Err(HighGirthError::DimensionMismatch { k, got: cost.k() });
            }
        }
        Ok(Self { k, d, p: angles.depth(), mixer, angles, phi, xi })
    }

    /// Max-k-Cut on a `degree`-regular graph: the phaser penalizes equal
    /// labels and the observable is the cut indicator.
    pub fn maxkcut(degree: usize, mixer: MixerSpec, angles: QaoaAngles) -> Result<Self> {
        if degree == 0 {
            return Err(HighGirthError::InvalidDegree);
        }
        let k = mixer.k;
        Self::new(degree - 1, mixer, angles, EdgeCostFn::same_label_penalty(k), EdgeCostFn::cut_indicator(k))
    }

    pub fn index(&self) -> PathIndex {
        PathIndex::new(self.p, self.k)
    }

    fn layer_matrices(&self) -> Result<Vec<QuditMatrix>> {
        Ok(self.angles.betas.iter().map(|b| self.mixer.matrix(b)).collect::<std::result::Result<_, _>>()?)
    }

    /// `Φ(a, b) = Σ_t γ_t (φ(a_t, b_t) − φ(a_{−t}, b_{−t}))` on full digit strings.
    pub fn phase(&self, a: &[usize], b: &[usize]) -> f64 {
        let idx = self.index();
        (1..=self.p)
            .map(|t| {
                let (bra, ket) = (idx.bra_axis(t), idx.ket_axis(t));
                self.angles.gammas[t - 1] * (self.phi.eval(a[bra], b[bra]) - self.phi.eval(a[ket], b[ket]))
            })
            .sum()
    }
}

/// `f(a) = (1/k) ∏_t ⟨a_t|U_t†|a_{t+1}⟩⟨a_{−t−1}|U_t|a_{−t}⟩ · 1[a_{p+1} = a_{−p−1}]`,
/// the `1/k` coming from the two `|+⟩` overlaps.
pub fn build_f(spec: &HighGirthSpec) -> Result<PathVector> {
    let idx = spec.index();
    let size = idx.checked_size()?;
    let mats = spec.layer_matrices()?;
    let p = spec.p;
    let norm = Complex64::new(1.0 / spec.k as f64, 0.0);
    let values = (0..size)
        .map(|i| {
            let a = idx.decode(i);
            if a[idx.bra_axis(p + 1)] != a[idx.ket_axis(p + 1)] {
                return ZERO;
            }
            let mut v = norm;
            for (t, u) in (1..=p).zip(&mats) {
                v *= u.get(a[idx.bra_axis(t + 1)], a[idx.bra_axis(t)]).conj();
                v *= u.get(a[idx.ket_axis(t + 1)], a[idx.ket_axis(t)]);
            }
            v
        })
        .collect();
    Ok(PathVector { idx, values })
}

/// Phase of the iteration kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseKernel {
    /// `e^{iΦ(a,b)}` evaluated pairwise from the kernel parameters.
    General(Box<HighGirthSpec>),
    /// `m(c)` with `e^{iΦ(a,b)} = m(a − b)`.
    TranslationInvariant(PathVector),
}

impl PhaseKernel {
    /// `e^{iΦ(a,b)}` for flat indices.
    pub fn eval(&self, a: usize, b: usize) -> Complex64 {
        match self {
            PhaseKernel::General(spec) => {
                let idx = spec.index();
                Complex64::from_polar(1.0, spec.phase(&idx.decode(a), &idx.decode(b)))
            }
            PhaseKernel::TranslationInvariant(m) => {
                let idx = m.idx;
                let (da, db) = (idx.decode(a), idx.decode(b));
                let c: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + idx.k - y) % idx.k).collect();
                m.get(&c)
            }
        }
    }
}

/// The translation-invariant kernel when `φ` is, the pairwise phase otherwise.
pub fn phase_kernel(spec: &HighGirthSpec) -> Result<PhaseKernel> {
    if !spec.phi.is_translation_invariant() {
        return Ok(PhaseKernel::General(Box::new(spec.clone())));
    }
    Ok(PhaseKernel::TranslationInvariant(translation_kernel(spec, None)?))
}

/// `m(c) = exp(i Σ_t γ_t (φ(c_t) − φ(c_{−t})))`, optionally times `ξ(c_{p+1})`.
fn translation_kernel(spec: &HighGirthSpec, xi: Option<&EdgeCostFn>) -> Result<PathVector> {
    let idx = spec.index();
    let size = idx.checked_size()?;
    let g = |c: usize| spec.phi.eval(c, 0);
    let values = (0..size)
        .map(|i| {
            let c = idx.decode(i);
            let theta: f64 = (1..=spec.p)
                .map(|t| spec.angles.gammas[t - 1] * (g(c[idx.bra_axis(t)]) - g(c[idx.ket_axis(t)])))
                .sum();
            let scale = xi.map_or(1.0, |x| x.eval(c[idx.bra_axis(spec.p + 1)], 0));
            Complex64::from_polar(scale, theta)
        })
        .collect();
    Ok(PathVector { idx, values })
}

/// Applies `[H_{k,n}]_{x,y} = k^{−n/2} e^{−2πi x·y/k}` (or its adjoint) to a
/// tensor of `n` axes of size `k`, one axis at a time.
pub fn hadamard_nd(values: &[Complex64], k: usize, n: usize, inverse: bool) -> Vec<Complex64> {
    assert_eq!(Some(values.len()), k.checked_pow(n as u32), "length must be k^n");
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = (k as f64).sqrt().recip();
    let kernel: Vec<Complex64> = (0..k * k)
        .map(|i| Complex64::from_polar(scale, sign * 2.0 * PI * ((i / k) * (i % k) % k) as f64 / k as f64))
        .collect();
    let mut out = values.to_vec();
    let mut stride = 1;
    for _ in 0..n {
        apply_axis(&mut out, k, stride, &kernel);
        stride *= k;
    }
    out
}

pub fn hadamard_transform(v: &PathVector, inverse: bool) -> PathVector {
    PathVector { idx: v.idx, values: hadamard_nd(&v.values, v.idx.k, v.idx.len(), inverse) }
}

/// `w(a) = Σ_b m(a − b) u(b)` over `Z_k^n`, computed as `k^{n/2} H†(Hm ⊙ Hu)`.
pub fn convolve_nd(m: &[Complex64], u: &[Complex64], k: usize, n: usize) -> Vec<Complex64> {
    let mh = hadamard_nd(m, k, n, false);
    let uh = hadamard_nd(u, k, n, false);
    let scale = (k as f64).powf(n as f64 / 2.0);
    let prod: Vec<Complex64> = mh.iter().zip(&uh).map(|(a, b)| a * b * scale).collect();
    hadamard_nd(&prod, k, n, true)
}

pub fn hadamard_matvec(m: &PathVector, u: &PathVector) -> Result<PathVector> {
    if m.idx != u.idx {
        return Err(HighGirthError::ShapeMismatch);
    }
    Ok(PathVector { idx: u.idx, values: convolve_nd(&m.values, &u.values, u.idx.k, u.idx.len()) })
}

/// In-place `v ← (I ⊗ … ⊗ M ⊗ … ⊗ I) v` for the axis with the given stride;
/// `mat` is row-major `k × k`.
fn apply_axis(values: &mut [Complex64], k: usize, stride: usize, mat: &[Complex64]) {
    let block = stride * k;
    // Max-k-Cut phases and indicators are all of the form αJ + βI
    let (off, diag) = (mat[1], mat[0]);
    let structured = (0..k * k).all(|i| mat[i] == if i / k == i % k { diag } else { off });
    if structured {
        let shift = diag - off;
        if stride < 8 {
            for chunk in values.chunks_exact_mut(block) {
                for j in 0..stride {
                    let s: Complex64 = (0..k).map(|c| chunk[j + c * stride]).sum();
                    let os = off * s;
                    for c in 0..k {
                        let v = &mut chunk[j + c * stride];
                        *v = os + shift * *v;
                    }
                }
            }
            return;
        }
        let mut sum = vec![ZERO; stride];
        for chunk in values.chunks_exact_mut(block) {
            sum.fill(ZERO);
            for src in chunk.chunks_exact(stride) {
                for (s, v) in sum.iter_mut().zip(src) {
                    *s += v;
                }
            }
            for out in chunk.chunks_exact_mut(stride) {
                for (o, s) in out.iter_mut().zip(&sum) {
                    *o = off * s + shift * *o;
                }
            }
        }
        return;
    }
    let mut buf = vec![ZERO; block];
    for chunk in values.chunks_exact_mut(block) {
        buf.copy_from_slice(chunk);
        for (r, out) in chunk.chunks_exact_mut(stride).enumerate() {
            out.fill(ZERO);
            for (c, src) in buf.chunks_exact(stride).enumerate() {
                let a = mat[r * k + c];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += a * s;
                }
            }
        }
    }
}

/// Elementwise `x^d` by repeated squaring; `x^0 = 1` including `x = 0`.
fn pow_in_place(values: &mut [Complex64], d: usize) {
    for v in values {
        *v = pow_by_squaring(*v, d);
    }
}

fn pow_by_squaring(mut base: Complex64, mut exp: usize) -> Complex64 {
    let mut acc = ONE;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        exp >>= 1;
        if exp > 0 {
            base *= base;
        }
    }
    acc
}

fn check_naive_budget(size: usize, p: usize, budget: u64) -> Result<()> {
    let work = (size as u128) * (size as u128) * (p.max(1) as u128);
    if work > budget as u128 {
        return Err(HighGirthError::BudgetExceeded { work, budget });
    }
    Ok(())
}

/// `H^{(p)}` by the literal recursion
/// `H^{(r)}(a) = (Σ_b f(b) H^{(r−1)}(b) e^{iΦ(a,b)})^d`, `H^{(0)} ≡ 1`.
pub fn iterate_naive(spec: &HighGirthSpec) -> Result<PathVector> {
    iterate_naive_with_budget(spec, DEFAULT_NAIVE_BUDGET)
}

pub fn iterate_naive_with_budget(spec: &HighGirthSpec, budget: u64) -> Result<PathVector> {
    let f = build_f(spec)?;
    check_naive_budget(f.values.len(), spec.p, budget)?;
    Ok(naive_h(spec, &f))
}

fn decoded(idx: PathIndex, size: usize) -> Vec<Vec<usize>> {
    (0..size).map(|i| idx.decode(i)).collect()
}

fn naive_h(spec: &HighGirthSpec, f: &PathVector) -> PathVector {
    let size = f.values.len();
    let digits = decoded(f.idx, size);
    let mut h = vec![ONE; size];
    for _ in 0..spec.p {
        let u: Vec<Complex64> = f.values.iter().zip(&h).map(|(a, b)| a * b).collect();
        h = (0..size)
            .map(|a| {
                let s: Complex64 = (0..size)
                    .map(|b| u[b] * Complex64::from_polar(1.0, spec.phase(&digits[a], &digits[b])))
                    .sum();
                s
            })
            .collect();
        pow_in_place(&mut h, spec.d);
    }
    PathVector { idx: f.idx, values: h }
}

/// `H^{(p)}` with each inner sum computed by [`hadamard_matvec`]; requires a
/// translation-invariant `φ`.
pub fn iterate_fast(spec: &HighGirthSpec) -> Result<PathVector> {
    let f = build_f(spec)?;
    fast_h(spec, &f)
}

fn fast_h(spec: &HighGirthSpec, f: &PathVector) -> Result<PathVector> {
    if !spec.phi.is_translation_invariant() {
        return Err(HighGirthError::NotTranslationInvariant);
    }
    let (k, n) = (spec.k, f.idx.len());
    let m = translation_kernel(spec, None)?;
    // kernel transform is iteration independent
    let scale = (k as f64).powf(n as f64 / 2.0);
    let mh: Vec<Complex64> = hadamard_nd(&m.values, k, n, false).into_iter().map(|x| x * scale).collect();
    let mut h = vec![ONE; f.values.len()];
    for _ in 0..spec.p {
        let u: Vec<Complex64> = f.values.iter().zip(&h).map(|(a, b)| a * b).collect();
        let uh = hadamard_nd(&u, k, n, false);
        let prod: Vec<Complex64> = mh.iter().zip(&uh).map(|(a, b)| a * b).collect();
        h = hadamard_nd(&prod, k, n, true);
        pow_in_place(&mut h, spec.d);
    }
    Ok(PathVector { idx: f.idx, values: h })
}

/// Evaluation strategy for [`edge_expectation_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    /// Support enumeration when `f` is sparse, otherwise factored.
    Auto,
    Naive,
    Hadamard,
    Factored,
    Support,
}

/// `ν = Σ_{a,b} ξ(a_{p+1}, b_{p+1}) f(a)H(a) f(b)H(b) e^{iΦ(a,b)}` with
/// `H = H^{(p)}`; the per-edge expectation of `ξ`.
pub fn edge_expectation_highgirth(spec: &HighGirthSpec) -> Result<f64> {
    edge_expectation_with(spec, EvalMethod::Auto)
}

pub fn edge_expectation_with(spec: &HighGirthSpec, method: EvalMethod) -> Result<f64> {
    let nu = match method {
        EvalMethod::Auto => match support(spec, SUPPORT_LIMIT)? {
            Some(s) => support_expectation(spec, &s),
            None => factored_expectation(spec)?,
        },
        EvalMethod::Naive => naive_expectation(spec, DEFAULT_NAIVE_BUDGET)?,
        EvalMethod::Hadamard => hadamard_expectation(spec)?,
        EvalMethod::Factored => factored_expectation(spec)?,
        EvalMethod::Support => {
            let size = spec.index().checked_size()?;
            let s = support(spec, size)?.expect("limit covers every ditstring");
            support_expectation(spec, &s)
        }
    };
    if nu.im.abs() > imaginary_tolerance(spec.d, spec.p) {
        return Err(HighGirthError::ImaginaryResidueExceeded(nu.im.abs()));
    }
    Ok(nu.re)
}

/// Per-edge Max-k-Cut probability of depth-`p` QAOA on any `degree`-regular
/// graph of girth at least `2p+2`. Multiply by `|E|` for the expected cut.
pub fn maxkcut_expectation(
    k: usize,
    degree: usize,
    p: usize,
    mixer: &MixerSpec,
    angles: &QaoaAngles,
) -> Result<f64> {
    if mixer.k != k {
        return Err(HighGirthError::DimensionMismatch { k: mixer.k, got: k });
    }
    if angles.depth() != p {
        return Err(HighGirthError::DepthMismatch { p, got: angles.depth() });
    }
    edge_expectation_highgirth(&HighGirthSpec::maxkcut(degree, *mixer, angles.clone())?)
}

fn naive_expectation(spec: &HighGirthSpec, budget: u64) -> Result<Complex64> {
    let f = build_f(spec)?;
    let size = f.values.len();
    check_naive_budget(size, spec.p + 1, budget)?;
    let h = naive_h(spec, &f);
    let digits = decoded(f.idx, size);
    let mid = f.idx.bra_axis(spec.p + 1);
    let u: Vec<Complex64> = f.values.iter().zip(&h.values).map(|(a, b)| a * b).collect();
    let mut nu = ZERO;
    for a in 0..size {
        for b in 0..size {
            let xi = spec.xi.eval(digits[a][mid], digits[b][mid]);
            nu += u[a] * u[b] * Complex64::from_polar(xi, spec.phase(&digits[a], &digits[b]));
        }
    }
    Ok(nu)
}

fn hadamard_expectation(spec: &HighGirthSpec) -> Result<Complex64> {
    if !spec.xi.is_translation_invariant() {
        return Err(HighGirthError::NotTranslationInvariant);
    }
    let f = build_f(spec)?;
    let h = fast_h(spec, &f)?;
    let u = PathVector { idx: f.idx, values: f.values.iter().zip(&h.values).map(|(a, b)| a * b).collect() };
    let m = translation_kernel(spec, Some(&spec.xi))?;
    let w = hadamard_matvec(&m, &u)?;
    Ok(u.values.iter().zip(&w.values).map(|(a, b)| a * b).sum())
}

/// Row-major `k × k` matrix `e^{i s γ φ(x, y)}`.
fn phase_matrix(phi: &EdgeCostFn, k: usize, theta: f64) -> Vec<Complex64> {
    (0..k * k).map(|i| Complex64::from_polar(1.0, theta * phi.eval(i / k, i % k))).collect()
}

fn factored_expectation(spec: &HighGirthSpec) -> Result<Complex64> {
    let (k, p) = (spec.k, spec.p);
    spec.index().checked_size()?;
    let mats = spec.layer_matrices()?;
    let kp = k.pow(p as u32);
    let kf = k as f64;

    // The 1/k normalization of f is applied after each contraction so that
    // trivial sums stay exactly 1 under the d-th power.
    //
    // Reduced layout over 2p+1 axes: (a_1..a_p, x, a_{−p}..a_{−1}) where
    // x = a_{p+1} = a_{−p−1}. `bra[lo]` covers digits (a_1..a_p, x) and
    // `ket[x + k·hi]` covers (x, a_{−p}..a_{−1}).
    let chain = |conj: bool| -> Vec<Complex64> {
        (0..kp * k)
            .map(|i| {
                let digits: Vec<usize> = (0..=p).map(|j| (i / k.pow(j as u32)) % k).collect();
                let mut v = ONE;
                for (t, u) in (1..=p).zip(&mats) {
                    v *= if conj {
                        // digits[j] = a_{j+1}
                        u.get(digits[t], digits[t - 1]).conj()
                    } else {
                        // digits[0] = a_{−p−1}, digits[j] = a_{−(p+1−j)}
                        u.get(digits[p - t], digits[p + 1 - t])
                    };
                }
                v
            })
            .collect()
    };
    let bra = chain(true);
    let ket = chain(false);
    let full = kp * k * kp;
    let mut fx = vec![ZERO; full];
    for hi in 0..kp {
        for lo in 0..kp * k {
            let x = lo / kp;
            fx[lo + kp * k * hi] = bra[lo] * ket[x + k * hi];
        }
    }

    // per-axis phase matrices of e^{iΦ}, in reduced axis order without x
    let mut axis_mats: Vec<Vec<Complex64>> = Vec::with_capacity(2 * p);
    for t in 1..=p {
        axis_mats.push(phase_matrix(&spec.phi, k, spec.angles.gammas[t - 1]));
    }
    for t in (1..=p).rev() {
        axis_mats.push(phase_matrix(&spec.phi, k, -spec.angles.gammas[t - 1]));
    }

    // H never depends on the middle coordinate: iterate on 2p axes with
    // f summed over x
    let mut f1 = vec![ZERO; kp * kp];
    for hi in 0..kp {
        for x in 0..k {
            for lo in 0..kp {
                f1[lo + kp * hi] += fx[lo + kp * x + kp * k * hi];
            }
        }
    }
    let mut h = vec![ONE; kp * kp];
    for _ in 0..p {
        let mut w: Vec<Complex64> = f1.iter().zip(&h).map(|(a, b)| a * b).collect();
        let mut stride = 1;
        for m in &axis_mats {
            apply_axis(&mut w, k, stride, m);
            stride *= k;
        }
        w.iter_mut().for_each(|v| *v /= kf);
        pow_in_place(&mut w, spec.d);
        h = w;
    }

    let u: Vec<Complex64> = fx
        .iter()
        .enumerate()
        .map(|(i, v)| v * h[i % kp + kp * (i / (kp * k))])
        .collect();
    let mut w = u.clone();
    let xi_mat: Vec<Complex64> = (0..k * k).map(|i| Complex64::new(spec.xi.eval(i / k, i % k), 0.0)).collect();
    let mut stride = 1;
    for (axis, m) in axis_mats[..p].iter().chain([&xi_mat]).chain(&axis_mats[p..]).enumerate() {
        debug_assert_eq!(stride, k.pow(axis as u32));
        apply_axis(&mut w, k, stride, m);
        stride *= k;
    }
    Ok(u.iter().zip(&w).map(|(a, b)| a * b).sum::<Complex64>() / (kf * kf))
}

/// Nonzero entries of `k·f` as (digits, value), or `None` past `limit`.
fn support(spec: &HighGirthSpec, limit: usize) -> Result<Option<Vec<(Vec<usize>, Complex64)>>> {
    let mats = spec.layer_matrices()?;
    let idx = spec.index();
    let mut out = Vec::new();
    let mut digits = vec![0; idx.len()];
    let complete = walk_support(&mats, idx, 1, true, ONE, &mut digits, &mut out, limit);
    Ok(complete.then_some(out))
}

/// Depth-first walk along the bra chain `a_1 → a_{p+1}`, across the middle,
/// then down the ket chain `a_{−p−1} → a_{−1}`.
#[allow(clippy::too_many_arguments)]
fn walk_support(
    mats: &[QuditMatrix],
    idx: PathIndex,
    t: usize,
    bra: bool,
    value: Complex64,
    digits: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, Complex64)>,
    limit: usize,
) -> bool {
    let (k, p) = (idx.k, idx.p);
    if bra {
        if t == 1 {
            for a in 0..k {
                digits[idx.bra_axis(1)] = a;
                if !walk_support(mats, idx, 2, true, value, digits, out, limit) {
                    return false;
                }
            }
            return true;
        }
        if t == p + 2 {
            digits[idx.ket_axis(p + 1)] = digits[idx.bra_axis(p + 1)];
            return walk_support(mats, idx, p, false, value, digits, out, limit);
        }
        let prev = digits[idx.bra_axis(t - 1)];
        for a in 0..k {
            let amp = mats[t - 2].get(a, prev).conj();
            if amp == ZERO {
                continue;
            }
            digits[idx.bra_axis(t)] = a;
            if !walk_support(mats, idx, t + 1, true, value * amp, digits, out, limit) {
                return false;
            }
        }
        return true;
    }
    if t == 0 {
        if out.len() == limit {
            return false;
        }
        out.push((digits.clone(), value));
        return true;
    }
    // choose a_{−t} given a_{−t−1}
    let prev = digits[idx.ket_axis(t + 1)];
    for a in 0..k {
        let amp = mats[t - 1].get(prev, a);
        if amp == ZERO {
            continue;
        }
        digits[idx.ket_axis(t)] = a;
        if !walk_support(mats, idx, t - 1, false, value * amp, digits, out, limit) {
            return false;
        }
    }
    true
}

fn support_expectation(spec: &HighGirthSpec, s: &[(Vec<usize>, Complex64)]) -> Complex64 {
    let n = s.len();
    let kf = spec.k as f64;
    let phases: Vec<Complex64> = (0..n * n)
        .map(|i| Complex64::from_polar(1.0, spec.phase(&s[i / n].0, &s[i % n].0)))
        .collect();
    let mut h = vec![ONE; n];
    for _ in 0..spec.p {
        let u: Vec<Complex64> = s.iter().zip(&h).map(|((_, f), h)| f * h).collect();
        h = (0..n)
            .map(|a| {
                let sum: Complex64 = (0..n).map(|b| u[b] * phases[a * n + b]).sum();
                pow_by_squaring(sum / kf, spec.d)
            })
            .collect();
    }
    let mid = spec.index().bra_axis(spec.p + 1);
    let u: Vec<Complex64> = s.iter().zip(&h).map(|((_, f), h)| f * h).collect();
    let mut nu = ZERO;
    for a in 0..n {
        for b in 0..n {
            nu += u[a] * u[b] * phases[a * n + b] * spec.xi.eval(s[a].0[mid], s[b].0[mid]);
        }
    }
    nu / (kf * kf)
}
