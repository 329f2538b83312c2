//! Randomized estimates of determinant bounds.
//!
//! A constant `δ` is a determinant bound of `C` when
//! `|det(⟨p_i, q_j⟩ C(x_i, y_j))| ≤ δ^{2n}` for all points and all vectors in
//! the unit ball. The supremum cannot be computed, so the harness samples
//! points (with deliberately clustered times) and unit vectors, reports the
//! largest `|det|^{1/(2n)}` seen and checks it against the claimed bound.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::covariance::{
    backward_left, backward_right, forward_left, forward_right, GramVector, LatticeModel,
    SpaceTimePoint,
};
use crate::grassmann::indicator_det;
use crate::linalg::{dot_hermitian, norm2, CMatrix};
use crate::rng::{complex_gaussian_vec, derive_seed, sample_unit_sphere, trial_rng};
use crate::scales::ScaleSplit;
use crate::{Error, Result, BOUND_SLACK, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Outcome of a randomized bound suite.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub spec: String,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Largest `|det|^{1/(2n)}` over all trials.
    pub observed: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

impl BoundReport {
    pub fn new(
        spec: impl Into<String>,
        n_values: Vec<usize>,
        trials: usize,
        seed: u64,
        observed: f64,
        bound: f64,
    ) -> Self {
        Self {
            spec: spec.into(),
            n_values,
            trials,
            seed,
            observed,
            bound,
            margin: bound - observed,
            pass: observed <= bound * (1.0 + BOUND_SLACK),
        }
    }
}

/// `|det|^{1/(2n)}`.
pub fn det_root(det: C64, n: usize) -> f64 {
    libm::pow(det.norm(), 1.0 / (2 * n) as f64)
}

/// Samples space-time points, mixing uniform draws with clusters of
/// coincident and nearly coincident times and times close to `0` and `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointSampler {
    pub beta: f64,
    pub l: usize,
    pub d: usize,
    pub cluster_prob: f64,
}

impl PointSampler {
    pub fn new(beta: f64, l: usize, d: usize) -> Self {
        Self {
            beta,
            l,
            d,
            cluster_prob: 0.5,
        }
    }

    pub fn for_model(model: &LatticeModel) -> Self {
        Self::new(model.beta(), model.l(), model.d())
    }

    fn uniform_site<R: Rng + ?Sized>(&self, rng: &mut R) -> [i64; 3] {
        let mut x = [0i64; 3];
        for slot in x.iter_mut().take(self.d) {
            *slot = rng.random_range(0..self.l.max(1)) as i64;
        }
        x
    }

    fn clamp(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            0.0
        } else if tau >= self.beta {
            // largest double below β
            f64::from_bits(self.beta.to_bits() - 1)
        } else {
            tau
        }
    }

    /// `count` points, each possibly clustered with an earlier one.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<SpaceTimePoint> {
        const OFFSETS: [f64; 4] = [0.0, 1e-12, 1e-9, 1e-6];
        let mut points: Vec<SpaceTimePoint> = Vec::with_capacity(count);
        for _ in 0..count {
            let mut x = self.uniform_site(rng);
            let tau = if rng.random::<f64>() >= self.cluster_prob {
                rng.random::<f64>() * self.beta
            } else {
                let offset = OFFSETS[rng.random_range(0..OFFSETS.len())] * self.beta;
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                match rng.random_range(0..4) {
                    0 | 1 if !points.is_empty() => {
                        let other = points[rng.random_range(0..points.len())];
                        if rng.random::<bool>() {
                            x = other.x;
                        }
                        self.clamp(other.tau + sign * offset)
                    }
                    2 => self.clamp(offset),
                    _ => self.clamp(self.beta - offset),
                }
            };
            points.push(SpaceTimePoint::new(tau, x));
        }
        points.shuffle(rng);
        points
    }
}

/// Comparison between the images of two points under the time maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Indicator {
    None,
    /// `1[φ'(x) > φ(y)]`.
    Strict,
    /// `1[φ'(x) ≥ φ(y)]`.
    Weak,
}

impl Indicator {
    pub fn eval(self, left: f64, right: f64) -> bool {
        match self {
            Indicator::None => true,
            Indicator::Strict => left > right,
            Indicator::Weak => left >= right,
        }
    }
}

/// Map from a point to the totally ordered label set (the reals here).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TimeMap {
    Time,
    NegatedTime,
}

impl TimeMap {
    pub fn apply(self, p: &SpaceTimePoint) -> f64 {
        match self {
            TimeMap::Time => p.tau,
            TimeMap::NegatedTime => -p.tau,
        }
    }
}

/// Vectors of a Gram representation `C_l(x, y) = ⟨v_x, w_y⟩`.
#[derive(Debug, Clone)]
pub enum PieceVectors {
    /// `v = |c|^{1/2}`, `w = c/|c|^{1/2}` in `ℂ`.
    Constant(f64),
    /// `v_x = -g⁺_{t,x} - g⁻_{β-t,x}`, `w_y = g⁺_{t',y} + h_{t',y}`.
    FermionForward(LatticeModel),
    /// `v_x = g⁺_{t,x} + h_{t,x}`, `w_y = g⁺_{t'-β,y} + h_{t',y}`.
    FermionBackward(LatticeModel),
}

impl PieceVectors {
    fn inner(&self, x: &SpaceTimePoint, y: &SpaceTimePoint) -> Result<C64> {
        match self {
            PieceVectors::Constant(c) => Ok(C64::new(*c, 0.0)),
            PieceVectors::FermionForward(m) => {
                m.gram_combination_inner(&forward_left(x, m.beta()), &forward_right(y))
            }
            PieceVectors::FermionBackward(m) => {
                m.gram_combination_inner(&backward_left(x), &backward_right(y, m.beta()))
            }
        }
    }

    /// `(‖v_x‖, ‖w_x‖)`.
    pub fn norms(&self, p: &SpaceTimePoint) -> Result<(f64, f64)> {
        let norm = |m: &LatticeModel, v: &[(f64, GramVector)]| m.gram_norm(v);
        match self {
            PieceVectors::Constant(c) => {
                let r = libm::sqrt(libm::fabs(*c));
                Ok((r, r))
            }
            PieceVectors::FermionForward(m) => Ok((
                norm(m, &forward_left(p, m.beta()))?,
                norm(m, &forward_right(p))?,
            )),
            PieceVectors::FermionBackward(m) => Ok((
                norm(m, &backward_left(p))?,
                norm(m, &backward_right(p, m.beta()))?,
            )),
        }
    }
}

/// One summand `1[φ'(x) ≻ φ(y)] ⟨v_x, w_y⟩` with claimed Gram constant
/// `gamma`.
#[derive(Debug, Clone)]
pub struct GramPiece {
    pub vectors: PieceVectors,
    pub indicator: Indicator,
    pub phi_prime: TimeMap,
    pub phi: TimeMap,
    pub gamma: f64,
}

impl GramPiece {
    pub fn entry(&self, x: &SpaceTimePoint, y: &SpaceTimePoint) -> Result<C64> {
        if self
            .indicator
            .eval(self.phi_prime.apply(x), self.phi.apply(y))
        {
            self.vectors.inner(x, y)
        } else {
            Ok(ZERO)
        }
    }

    /// Checks `max(‖v_x‖, ‖w_x‖) ≤ gamma` on the given points.
    pub fn verify(&self, points: &[SpaceTimePoint]) -> Result<()> {
        for p in points {
            let (a, b) = self.vectors.norms(p)?;
            let measured = a.max(b);
            if measured > self.gamma * (1.0 + 1e-12) {
                return Err(Error::UnverifiedGramConstant {
                    claimed: self.gamma,
                    measured,
                });
            }
        }
        Ok(())
    }
}

/// The two time-ordered pieces reproducing the fermionic covariance, each
/// with Gram constant `‖h‖₁^{1/2}`.
pub fn fermion_pieces(model: &LatticeModel) -> Vec<GramPiece> {
    let gamma = libm::sqrt(model.h_l1());
    vec![
        GramPiece {
            vectors: PieceVectors::FermionForward(model.clone()),
            indicator: Indicator::Strict,
            phi_prime: TimeMap::Time,
            phi: TimeMap::Time,
            gamma,
        },
        GramPiece {
            vectors: PieceVectors::FermionBackward(model.clone()),
            indicator: Indicator::Weak,
            phi_prime: TimeMap::NegatedTime,
            phi: TimeMap::NegatedTime,
            gamma,
        },
    ]
}

/// Verifies every piece on `points` and returns `Σ γ_l`.
pub fn gram_sum_bound(pieces: &[GramPiece], points: &[SpaceTimePoint]) -> Result<f64> {
    for piece in pieces {
        piece.verify(points)?;
    }
    Ok(pieces.iter().map(|p| p.gamma).sum())
}

#[derive(Debug, Clone)]
pub enum CovarianceKind {
    FermionFull(LatticeModel),
    FermionUv(ScaleSplit),
    FermionIr(ScaleSplit),
    /// `U(x, y) = 1[τ_x ≥ τ_y]`.
    StepU,
    Constant(f64),
    GramSum(Vec<GramPiece>),
}

/// A matrix rule on space-time points together with its point sampler.
#[derive(Debug, Clone)]
pub struct CovarianceMatrixSpec {
    pub name: String,
    pub kind: CovarianceKind,
    pub sampler: PointSampler,
}

impl CovarianceMatrixSpec {
    pub fn new(name: impl Into<String>, kind: CovarianceKind, sampler: PointSampler) -> Self {
        Self {
            name: name.into(),
            kind,
            sampler,
        }
    }

    pub fn fermion_full(model: LatticeModel) -> Self {
        let sampler = PointSampler::for_model(&model);
        Self::new("fermion-full", CovarianceKind::FermionFull(model), sampler)
    }

    pub fn entry(&self, x: &SpaceTimePoint, y: &SpaceTimePoint) -> Result<C64> {
        let dx = [x.x[0] - y.x[0], x.x[1] - y.x[1], x.x[2] - y.x[2]];
        let tau = x.tau - y.tau;
        Ok(match &self.kind {
            CovarianceKind::FermionFull(m) => m.covariance(tau, &dx),
            CovarianceKind::FermionUv(s) => s.uv(tau, &dx),
            CovarianceKind::FermionIr(s) => s.ir(tau, &dx),
            CovarianceKind::StepU => {
                if x.tau >= y.tau {
                    ONE
                } else {
                    ZERO
                }
            }
            CovarianceKind::Constant(c) => C64::new(*c, 0.0),
            CovarianceKind::GramSum(pieces) => {
                let mut sum = ZERO;
                for piece in pieces {
                    sum += piece.entry(x, y)?;
                }
                sum
            }
        })
    }

    /// The theoretical determinant bound `δ`. Gram pieces are verified on
    /// `check_points` first.
    pub fn bound(&self, check_points: &[SpaceTimePoint]) -> Result<f64> {
        Ok(match &self.kind {
            CovarianceKind::FermionFull(m) => 2.0 * libm::sqrt(m.h_l1()),
            CovarianceKind::FermionUv(s) => {
                2.0 * libm::sqrt(s.model().h_l1()) + libm::sqrt(s.gamma_ir_sq().upper())
            }
            CovarianceKind::FermionIr(s) => libm::sqrt(s.gamma_ir_sq().upper()),
            CovarianceKind::StepU => 1.0,
            CovarianceKind::Constant(c) => libm::sqrt(libm::fabs(*c)),
            CovarianceKind::GramSum(pieces) => gram_sum_bound(pieces, check_points)?,
        })
    }

    fn matrix(&self, xs: &[SpaceTimePoint], ys: &[SpaceTimePoint]) -> Result<CMatrix> {
        let n = xs.len();
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.entry(&xs[i], &ys[j])?;
            }
        }
        Ok(m)
    }
}

/// Uniform draw from the unit sphere of `ℂ^n`.
pub fn sample_unit_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    sample_unit_sphere(rng, n)
}

/// `P = Q*Q` with the columns `q_i` of a complex Gaussian `Q` rescaled by
/// `1/max(1, ‖q_i‖)`, so `P` is positive semidefinite with `P_ii ≤ 1`.
#[derive(Debug, Clone)]
pub struct InterpolationMatrix {
    pub p: CMatrix,
    pub q: CMatrix,
}

impl InterpolationMatrix {
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut q = CMatrix::from_fn(n, |_, _| {
            crate::rng::complex_gaussian(rng) / libm::sqrt(n as f64)
        });
        for col in 0..n {
            let norm = libm::sqrt((0..n).map(|r| q[(r, col)].norm_sqr()).sum::<f64>());
            let scale = 1.0 / norm.max(1.0);
            for r in 0..n {
                q[(r, col)] *= scale;
            }
        }
        let p = q.adjoint().mul(&q);
        Self { p, q }
    }
}

/// Which randomized quantity a trial measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TrialKind {
    /// `|det(⟨p_i, q_j⟩ C(x_i, y_j))|` with unit vectors `p`, `q`.
    Masked,
    /// `|det(C(x_i, y_j) P_ij)|` with a random interpolation matrix `P`.
    Interp,
}

/// `|det(⟨p_i, q_j⟩ C(x_i, y_j))|` for freshly sampled points and vectors.
pub fn masked_det_trial<R: Rng + ?Sized>(
    spec: &CovarianceMatrixSpec,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    let points = spec.sampler.sample(rng, 2 * n);
    let (xs, ys) = points.split_at(n);
    let ps: Vec<Vec<C64>> = (0..n).map(|_| sample_unit_sphere(rng, n)).collect();
    let qs: Vec<Vec<C64>> = (0..n).map(|_| sample_unit_sphere(rng, n)).collect();
    let c = spec.matrix(xs, ys)?;
    let m = CMatrix::from_fn(n, |i, j| dot_hermitian(&ps[i], &qs[j]) * c[(i, j)]);
    Ok(m.det().norm())
}

/// `|det(C(x_i, y_j) P_ij)|` for a random interpolation matrix.
pub fn interp_det_trial<R: Rng + ?Sized>(
    spec: &CovarianceMatrixSpec,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    let points = spec.sampler.sample(rng, 2 * n);
    let (xs, ys) = points.split_at(n);
    let p = InterpolationMatrix::random(n, rng).p;
    Ok(spec.matrix(xs, ys)?.hadamard(&p).det().norm())
}

fn stream_seed(spec: &CovarianceMatrixSpec, kind: TrialKind, n: usize, seed: u64) -> u64 {
    derive_seed(seed, &format!("{}/{:?}/{}", spec.name, kind, n))
}

/// `|det|^{1/(2n)}` of trial `index`; the value depends only on
/// `(spec, kind, n, seed, index)`.
pub fn det_trial(
    spec: &CovarianceMatrixSpec,
    kind: TrialKind,
    n: usize,
    seed: u64,
    index: u64,
) -> Result<f64> {
    let mut rng = trial_rng(stream_seed(spec, kind, n, seed), index);
    let det = match kind {
        TrialKind::Masked => masked_det_trial(spec, n, &mut rng)?,
        TrialKind::Interp => interp_det_trial(spec, n, &mut rng)?,
    };
    Ok(libm::pow(det, 1.0 / (2 * n) as f64))
}

/// Points on which Gram pieces are verified before a run.
pub fn check_points(spec: &CovarianceMatrixSpec, seed: u64, count: usize) -> Vec<SpaceTimePoint> {
    let mut rng = trial_rng(derive_seed(seed, &format!("{}/check", spec.name)), 0);
    spec.sampler.sample(&mut rng, count)
}

/// Runs `trials` masked and `trials` interpolation trials for every `n`
/// and compares the largest `|det|^{1/(2n)}` with the bound.
pub fn run_bound_suite(
    spec: &CovarianceMatrixSpec,
    n_values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    let bound = spec.bound(&check_points(spec, seed, 64))?;
    let mut observed = 0.0f64;
    for &n in n_values {
        for kind in [TrialKind::Masked, TrialKind::Interp] {
            for i in 0..trials as u64 {
                observed = observed.max(det_trial(spec, kind, n, seed, i)?);
            }
        }
    }
    Ok(BoundReport::new(
        spec.name.clone(),
        n_values.to_vec(),
        trials,
        seed,
        observed,
        bound,
    ))
}

/// Lower-bound witness: with `P = 1` and all points equal, `|det|^{1/(2n)}`
/// is `|C(x, x')|^{1/2}`. Evaluates the two one-sided diagonal values
/// `τ' = τ` and `τ' ↑ τ` and returns the larger root.
pub fn diagonal_witness(spec: &CovarianceMatrixSpec, n: usize) -> Result<f64> {
    let beta = spec.sampler.beta;
    let tau = beta / 2.0;
    let x = SpaceTimePoint::new(tau, [0; 3]);
    let below = SpaceTimePoint::new(f64::from_bits(tau.to_bits() - 1), [0; 3]);
    let mut best = 0.0f64;
    for y in [x, below] {
        let xs = vec![x; n];
        let ys = vec![y; n];
        let c = spec.matrix(&xs, &ys)?;
        let m = CMatrix::from_fn(n, |i, j| if i == j { c[(i, j)] } else { ZERO });
        best = best.max(det_root(m.det(), n));
    }
    Ok(best)
}

/// One instance of the indicator-masked Gram determinant.
#[derive(Debug, Clone, Copy)]
pub struct MaskedGramSample {
    /// Pivoted LU determinant of `⟨v_k, w_l⟩ 1[φ'(k) ≻ φ(l)]`.
    pub lu: C64,
    /// The same determinant through the chronological product.
    pub chrono: C64,
    /// `Π ‖v_k‖ ‖w_k‖`.
    pub norm_product: f64,
    /// Hadamard scale of the masked matrix, for relative comparisons.
    pub scale: f64,
}

/// Random vectors in `ℂ^dim` and labels drawn from a small set so that
/// ties occur often.
pub fn masked_gram_sample<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    dim: usize,
    strict: bool,
) -> Result<MaskedGramSample> {
    let vs: Vec<Vec<C64>> = (0..n).map(|_| complex_gaussian_vec(rng, dim)).collect();
    let ws: Vec<Vec<C64>> = (0..n).map(|_| complex_gaussian_vec(rng, dim)).collect();
    let levels = 1 + n / 2;
    let phi_prime: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0..=levels) as f64 * 0.25)
        .collect();
    let phi: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0..=levels) as f64 * 0.25)
        .collect();
    let m = CMatrix::from_fn(n, |k, l| {
        let on = if strict {
            phi_prime[k] > phi[l]
        } else {
            phi_prime[k] >= phi[l]
        };
        if on {
            dot_hermitian(&vs[k], &ws[l])
        } else {
            ZERO
        }
    });
    // α_k(w) = ⟨v_k, w⟩
    let alphas: Vec<Vec<C64>> = vs
        .iter()
        .map(|v| v.iter().map(|z| z.conj()).collect())
        .collect();
    let chrono = indicator_det(&alphas, &ws, &phi_prime, &phi, strict)?;
    let norm_product = vs
        .iter()
        .zip(&ws)
        .map(|(v, w)| norm2(v) * norm2(w))
        .product();
    Ok(MaskedGramSample {
        lu: m.det(),
        chrono,
        norm_product,
        scale: m.hadamard_scale(),
    })
}

/// Uniformly random sorted `p`-subset of `0..size`.
fn random_subset<R: Rng + ?Sized>(rng: &mut R, size: usize, p: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..size).collect();
    all.shuffle(rng);
    let mut s = all[..p].to_vec();
    s.sort_unstable();
    s
}

/// Largest `|det(⟨p_i, q_j⟩ A_{a_i b_j})|^{1/(2p)}` over random submatrices
/// of size `p ≤ n_max` and random unit vectors.
fn property_max<R: Rng + ?Sized>(a: &CMatrix, n_max: usize, trials: usize, rng: &mut R) -> f64 {
    let mut best = 0.0f64;
    for _ in 0..trials {
        let p = rng.random_range(1..=n_max.min(a.size()));
        let rows = random_subset(rng, a.size(), p);
        let cols = random_subset(rng, a.size(), p);
        let ps: Vec<Vec<C64>> = (0..p).map(|_| sample_unit_sphere(rng, p)).collect();
        let qs: Vec<Vec<C64>> = (0..p).map(|_| sample_unit_sphere(rng, p)).collect();
        let m = CMatrix::from_fn(p, |i, j| {
            dot_hermitian(&ps[i], &qs[j]) * a[(rows[i], cols[j])]
        });
        best = best.max(det_root(m.det(), p));
    }
    best
}

/// Checks the property `Π(Σ A_l, Σ γ_l)` on random submatrices after
/// checking `Π(A_l, γ_l)` for every piece.
pub fn laplace_sum_check(
    pieces: &[(CMatrix, f64)],
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    let Some((first, _)) = pieces.first() else {
        return Err(Error::InvalidParameter("no pieces".to_string()));
    };
    let size = first.size();
    for (idx, (a, gamma)) in pieces.iter().enumerate() {
        if a.size() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                found: a.size(),
            });
        }
        let mut rng = trial_rng(derive_seed(seed, "laplace/piece"), idx as u64);
        let seen = property_max(a, n_max, trials, &mut rng);
        if seen > gamma * (1.0 + BOUND_SLACK) {
            return Err(Error::Hypothesis(format!(
                "piece {idx} violates its property constant"
            )));
        }
    }
    let mut sum = CMatrix::zeros(size);
    for (a, _) in pieces {
        for i in 0..size {
            for j in 0..size {
                sum[(i, j)] += a[(i, j)];
            }
        }
    }
    let mut rng = trial_rng(derive_seed(seed, "laplace/sum"), 0);
    let observed = property_max(&sum, n_max, trials, &mut rng);
    let bound = pieces.iter().map(|(_, g)| g).sum();
    Ok(BoundReport::new(
        "laplace-sum",
        (1..=n_max).collect(),
        trials,
        seed,
        observed,
        bound,
    ))
}

fn binomial(n: u32, k: u32) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// `C(p, s)² ≤ C(2p, 2s)` for all `0 ≤ s ≤ p ≤ p_max`, exactly.
pub fn binomial_inequality_holds(p_max: u32) -> bool {
    (0..=p_max).all(|p| (0..=p).all(|s| binomial(p, s).pow(2) <= binomial(2 * p, 2 * s)))
}

/// For the all-ones `n × n` matrix: the Hadamard bound `n^{n/2}` and the
/// bound `1` from its rank-one Gram representation.
pub fn hadamard_comparison(n: usize) -> (f64, f64) {
    (libm::pow(n as f64, n as f64 / 2.0), 1.0)
}

/// `‖w_t - w_{t'}‖ ≥ 1/γ - 1e-12` for all pairs of distinct times.
pub fn gram_separation_check(times: &[f64], vectors: &[Vec<C64>], gamma: f64) -> bool {
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            if times[i] == times[j] {
                continue;
            }
            let diff: Vec<C64> = vectors[i]
                .iter()
                .zip(&vectors[j])
                .map(|(a, b)| a - b)
                .collect();
            if norm2(&diff) < 1.0 / gamma - 1e-12 {
                return false;
            }
        }
    }
    true
}
