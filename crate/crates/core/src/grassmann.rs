//! Finite-dimensional exterior algebra.
//!
//! Basis elements are indexed by subsets of the generators `0..N`, stored as
//! bit masks (bit `i` set means generator `i` is present). A mask stands for
//! the wedge product of its generators in ascending order. The dual pairing
//! between the algebra over `V*` and the one over `V` is the determinant
//! pairing, so dual bases pair to the identity and [`Multivector::pairing`]
//! is the plain bilinear sum of coefficient products.
//!
//! Wedge and contraction operators take coefficient vectors and act
//! bilinearly: `(α∧)` wedges with `Σ α_i e_i`, and `u⌟` is the
//! antiderivation with `u⌟e_i = u_i`. Under the Hermitian structure the
//! adjoint of `(u∧)` is contraction by the conjugate vector.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::linalg::{dot_bilinear, inversion_sign, CMatrix};
use crate::{Error, Result, C64};

pub const MAX_GENERATORS: usize = 16;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Sign of moving generator `i` in front of the generators in `mask`.
#[inline]
fn insertion_sign(mask: u32, i: usize) -> f64 {
    if (mask & ((1u32 << i) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign of `e_a ∧ e_b` relative to `e_{a ∪ b}`; the sets must be disjoint.
#[inline]
fn merge_sign(a: u32, b: u32) -> f64 {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        // generators of `a` above j have to move past generator j
        swaps += (a >> j >> 1).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sparse element of the exterior algebra over `N ≤ 16` generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Multivector {
    dim: usize,
    terms: BTreeMap<u32, C64>,
}

impl Multivector {
    pub fn zero(dim: usize) -> Result<Self> {
        if dim > MAX_GENERATORS {
            return Err(Error::TooManyGenerators(dim));
        }
        Ok(Self {
            dim,
            terms: BTreeMap::new(),
        })
    }

    /// The unit `1` of the algebra.
    pub fn one(dim: usize) -> Result<Self> {
        Self::scalar(dim, ONE)
    }

    pub fn scalar(dim: usize, value: C64) -> Result<Self> {
        let mut m = Self::zero(dim)?;
        m.add_term(0, value);
        Ok(m)
    }

    /// Degree-one element `Σ coeffs[i] e_i`.
    pub fn vector(coeffs: &[C64]) -> Result<Self> {
        let mut m = Self::zero(coeffs.len())?;
        for (i, &c) in coeffs.iter().enumerate() {
            m.add_term(1 << i, c);
        }
        Ok(m)
    }

    /// Single basis element `value · e_mask`.
    pub fn basis(dim: usize, mask: u32, value: C64) -> Result<Self> {
        let mut m = Self::zero(dim)?;
        if dim < 32 && mask >> dim != 0 {
            return Err(Error::IndexOutOfRange {
                index: 31 - mask.leading_zeros() as usize,
                size: dim,
            });
        }
        m.add_term(mask, value);
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, mask: u32) -> C64 {
        self.terms.get(&mask).copied().unwrap_or(ZERO)
    }

    pub fn scalar_part(&self) -> C64 {
        self.coeff(0)
    }

    /// Nonzero terms in ascending mask order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, C64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `value` to the coefficient of `e_mask`; exact zeros are not stored.
    pub fn add_term(&mut self, mask: u32, value: C64) {
        if value == ZERO {
            return;
        }
        let entry = self.terms.entry(mask).or_insert(ZERO);
        *entry += value;
        if *entry == ZERO {
            self.terms.remove(&mask);
        }
    }

    /// Restriction to degree `k`.
    pub fn grade(&self, k: u32) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.count_ones() == k)
                .map(|(&m, &c)| (m, c))
                .collect(),
        }
    }

    /// Drops coefficients with magnitude at most `eps`.
    pub fn prune(&mut self, eps: f64) {
        self.terms.retain(|_, c| c.norm() > eps);
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc + c.norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    /// Hermitian inner product induced by the one on `V`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.terms
            .iter()
            .filter_map(|(m, a)| other.terms.get(m).map(|b| a.conj() * b))
            .sum()
    }

    /// Bilinear determinant pairing between the algebras over `V*` and `V`.
    pub fn pairing(&self, other: &Self) -> C64 {
        self.terms
            .iter()
            .filter_map(|(m, a)| other.terms.get(m).map(|b| a * b))
            .sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = Self {
            dim: self.dim,
            terms: BTreeMap::new(),
        };
        for (&m, &c) in &self.terms {
            out.add_term(m, c * factor);
        }
        out
    }

    /// Exterior product `self ∧ other`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = Self::zero(self.dim)?;
        for (&a, &ca) in &self.terms {
            for (&b, &cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                out.add_term(a | b, ca * cb * merge_sign(a, b));
            }
        }
        Ok(out)
    }

    /// `self^k` under the exterior product.
    pub fn wedge_power(&self, k: u32) -> Result<Self> {
        let mut out = Self::one(self.dim)?;
        for _ in 0..k {
            if out.is_zero() {
                break;
            }
            out = out.wedge(self)?;
        }
        Ok(out)
    }

    /// Exponential `Σ_k self^k / k!`, which is a finite sum because the
    /// non-scalar part is nilpotent.
    pub fn exp(&self) -> Result<Self> {
        let s = self.scalar_part();
        let mut nil = self.clone();
        nil.terms.remove(&0);
        let mut out = Self::one(self.dim)?;
        let mut power = Self::one(self.dim)?;
        let mut k = 1.0;
        loop {
            power = power.wedge(&nil)?.scale(C64::new(1.0 / k, 0.0));
            if power.is_zero() {
                break;
            }
            out = &out + &power;
            k += 1.0;
        }
        Ok(out.scale(s.exp()))
    }

    /// Principal logarithm `ln s + Σ_k (-1)^{k+1} (N/s)^k / k` for
    /// `self = s + N` with nonzero scalar part `s`.
    pub fn log(&self) -> Result<Self> {
        let s = self.scalar_part();
        if s == ZERO {
            return Err(Error::NonInvertible);
        }
        let mut nil = self.clone();
        nil.terms.remove(&0);
        let nil = if s == ONE { nil } else { nil.scale(s.inv()) };
        let mut out = Self::scalar(self.dim, s.ln())?;
        let mut power = Self::one(self.dim)?;
        let mut k = 1.0;
        loop {
            power = power.wedge(&nil)?;
            if power.is_zero() {
                break;
            }
            let sign = if (k as u64) % 2 == 1 { 1.0 } else { -1.0 };
            out = &out + &power.scale(C64::new(sign / k, 0.0));
            k += 1.0;
        }
        Ok(out)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: dim,
            });
        }
        Ok(())
    }
}

impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, rhs: &Multivector) -> Multivector {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (&m, &c) in &rhs.terms {
            out.add_term(m, c);
        }
        out
    }
}

impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, rhs: &Multivector) -> Multivector {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (&m, &c) in &rhs.terms {
            out.add_term(m, -c);
        }
        out
    }
}

impl AddAssign<&Multivector> for Multivector {
    fn add_assign(&mut self, rhs: &Multivector) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (&m, &c) in &rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-ONE)
    }
}

impl Mul<C64> for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: C64) -> Multivector {
        self.scale(rhs)
    }
}

fn check_vector(v: &[C64], m: &Multivector) -> Result<()> {
    if v.len() != m.dim {
        return Err(Error::DimensionMismatch {
            expected: m.dim,
            found: v.len(),
        });
    }
    Ok(())
}

/// `(α∧) m`.
pub fn wedge_apply(alpha: &[C64], m: &Multivector) -> Result<Multivector> {
    check_vector(alpha, m)?;
    let mut out = Multivector::zero(m.dim)?;
    for (&mask, &c) in &m.terms {
        for (i, &a) in alpha.iter().enumerate() {
            if a == ZERO || mask & (1 << i) != 0 {
                continue;
            }
            out.add_term(mask | (1 << i), a * c * insertion_sign(mask, i));
        }
    }
    Ok(out)
}

/// `u⌟ m`, the degree -1 antiderivation with `u⌟e_i = u_i`.
pub fn contract_apply(u: &[C64], m: &Multivector) -> Result<Multivector> {
    check_vector(u, m)?;
    let mut out = Multivector::zero(m.dim)?;
    for (&mask, &c) in &m.terms {
        let mut rest = mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let ui = u[i];
            if ui == ZERO {
                continue;
            }
            out.add_term(mask & !(1 << i), ui * c * insertion_sign(mask, i));
        }
    }
    Ok(out)
}

/// Norm of `((α∧)(u⌟) + (u⌟)(α∧)) m − α(u) m`.
pub fn car_defect(alpha: &[C64], u: &[C64], m: &Multivector) -> Result<f64> {
    check_vector(alpha, m)?;
    check_vector(u, m)?;
    let a = wedge_apply(alpha, &contract_apply(u, m)?)?;
    let b = contract_apply(u, &wedge_apply(alpha, m)?)?;
    let expected = m.scale(dot_bilinear(alpha, u));
    Ok((&(&a + &b) - &expected).norm())
}

/// `α_1 ∧ … ∧ α_k` as a multivector.
pub fn wedge_all(dim: usize, vectors: &[Vec<C64>]) -> Result<Multivector> {
    let mut out = Multivector::one(dim)?;
    for v in vectors.iter().rev() {
        out = wedge_apply(v, &out)?;
    }
    Ok(out)
}

/// `det(α_i(v_j))`, evaluated as the pairing of `α_1∧…∧α_k` with
/// `v_1∧…∧v_k`.
pub fn duality_det(alphas: &[Vec<C64>], vs: &[Vec<C64>]) -> Result<C64> {
    if alphas.len() != vs.len() {
        return Err(Error::LengthMismatch(alphas.len(), vs.len()));
    }
    let dim = alphas.first().map_or(0, Vec::len);
    for v in alphas.iter().chain(vs) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    if alphas.len() > dim {
        return Ok(ZERO);
    }
    let a = wedge_all(dim, alphas)?;
    let v = wedge_all(dim, vs)?;
    Ok(a.pairing(&v))
}

/// Label in the lexicographically extended order `(time, tier, rank)`.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderedLabel {
    pub time: f64,
    pub tier: u8,
    pub rank: u32,
}

impl OrderedLabel {
    pub fn new(time: f64, tier: u8, rank: u32) -> Self {
        Self { time, tier, rank }
    }

    /// Label carrying only a time.
    pub fn at(time: f64) -> Self {
        Self::new(time, 0, 1)
    }
}

impl PartialEq for OrderedLabel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OrderedLabel {}

impl PartialOrd for OrderedLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.tier.cmp(&other.tier))
            .then(self.rank.cmp(&other.rank))
    }
}

/// Resolves ties between real labels so that the strict order on the
/// extended labels reproduces the real-valued indicator.
///
/// Returns `(J, J')` with `J[l]` extending `phi[l]` (contraction side) and
/// `J'[k]` extending `phi_prime[k]` (wedge side), such that
/// `1[J'[k] > J[l]]` equals `1[phi_prime[k] > phi[l]]` when `strict` and
/// `1[phi_prime[k] >= phi[l]]` otherwise. Equal values on the same side are
/// separated by their occurrence rank.
pub fn extend_order(
    phi: &[f64],
    phi_prime: &[f64],
    strict: bool,
) -> (Vec<OrderedLabel>, Vec<OrderedLabel>) {
    // strict: equal times put the wedge below the contraction; weak: above.
    let (tier_phi, tier_prime) = if strict { (1, 0) } else { (0, 1) };
    let rank = |values: &[f64], idx: usize| {
        1 + values[..idx]
            .iter()
            .filter(|v| v.total_cmp(&values[idx]) == Ordering::Equal)
            .count() as u32
    };
    let j = (0..phi.len())
        .map(|l| OrderedLabel::new(phi[l], tier_phi, rank(phi, l)))
        .collect();
    let jp = (0..phi_prime.len())
        .map(|k| OrderedLabel::new(phi_prime[k], tier_prime, rank(phi_prime, k)))
        .collect();
    (j, jp)
}

/// `(-1)^{#{(j, j') : j > j'}}` for disjoint label sets.
pub fn rho_sign(j: &[OrderedLabel], j_prime: &[OrderedLabel]) -> Result<i8> {
    let mut count = 0usize;
    for a in j {
        for b in j_prime {
            match a.cmp(b) {
                Ordering::Equal => return Err(Error::OverlappingLabels),
                Ordering::Greater => count += 1,
                Ordering::Less => {}
            }
        }
    }
    Ok(if count % 2 == 0 { 1 } else { -1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum OperatorKind {
    Wedge,
    Contract,
}

/// A wedge or contraction operator carrying an ordering label.
#[derive(Debug, Clone)]
pub struct ChronoOperator {
    pub kind: OperatorKind,
    pub vector: Vec<C64>,
    pub label: OrderedLabel,
}

impl ChronoOperator {
    pub fn wedge(vector: Vec<C64>, label: OrderedLabel) -> Self {
        Self {
            kind: OperatorKind::Wedge,
            vector,
            label,
        }
    }

    pub fn contract(vector: Vec<C64>, label: OrderedLabel) -> Self {
        Self {
            kind: OperatorKind::Contract,
            vector,
            label,
        }
    }

    /// +1 for wedge, -1 for contraction.
    pub fn degree(&self) -> i32 {
        match self.kind {
            OperatorKind::Wedge => 1,
            OperatorKind::Contract => -1,
        }
    }

    pub fn apply(&self, m: &Multivector) -> Result<Multivector> {
        match self.kind {
            OperatorKind::Wedge => wedge_apply(&self.vector, m),
            OperatorKind::Contract => contract_apply(&self.vector, m),
        }
    }
}

/// Chronological product `sgn(π) ε_{π(1)} ⋯ ε_{π(K)}` applied to `m`, where
/// `π` sorts the labels ascending. The operator with the largest label acts
/// first.
pub fn chrono_product_apply(ops: &[ChronoOperator], m: &Multivector) -> Result<Multivector> {
    let labels: Vec<OrderedLabel> = ops.iter().map(|o| o.label).collect();
    let mut order: Vec<usize> = (0..ops.len()).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    if order.windows(2).any(|w| labels[w[0]] == labels[w[1]]) {
        return Err(Error::DuplicateLabel);
    }
    let sign = inversion_sign(&labels);
    let mut out = m.clone();
    for &idx in order.iter().rev() {
        out = ops[idx].apply(&out)?;
        if out.is_zero() {
            break;
        }
    }
    Ok(if sign < 0 { -&out } else { out })
}

/// `M_{kl} = α_k(v_l) 1[J'_k > J_l]`.
pub fn masked_matrix(
    alphas: &[Vec<C64>],
    vs: &[Vec<C64>],
    j: &[OrderedLabel],
    j_prime: &[OrderedLabel],
) -> CMatrix {
    CMatrix::from_fn(alphas.len(), |k, l| {
        if j_prime[k] > j[l] {
            dot_bilinear(&alphas[k], &vs[l])
        } else {
            ZERO
        }
    })
}

fn is_sorted(labels: &[OrderedLabel]) -> bool {
    labels.windows(2).all(|w| w[0] < w[1])
}

/// Determinant of the masked matrix `α_k(v_l) 1[J'_k > J_l]` computed as
/// `(-1)^{n(n-1)/2} T_{J,J'}[v_1⌟, …, v_n⌟, (α_1∧), …, (α_n∧)] 1`.
pub fn chrono_det(
    alphas: &[Vec<C64>],
    vs: &[Vec<C64>],
    j: &[OrderedLabel],
    j_prime: &[OrderedLabel],
) -> Result<C64> {
    let n = alphas.len();
    if vs.len() != n {
        return Err(Error::LengthMismatch(n, vs.len()));
    }
    if j.len() != n || j_prime.len() != n {
        return Err(Error::LengthMismatch(n, j.len().min(j_prime.len())));
    }
    if n == 0 {
        return Ok(ONE);
    }
    let dim = alphas[0].len();
    if n > dim {
        return Err(Error::SizeExceedsDimension { n, dim });
    }
    if !is_sorted(j) || !is_sorted(j_prime) {
        return Err(Error::UnsortedLabels);
    }
    rho_sign(j, j_prime)?;
    let mut ops = Vec::with_capacity(2 * n);
    for (v, &label) in vs.iter().zip(j) {
        ops.push(ChronoOperator::contract(v.clone(), label));
    }
    for (a, &label) in alphas.iter().zip(j_prime) {
        ops.push(ChronoOperator::wedge(a.clone(), label));
    }
    let value = chrono_product_apply(&ops, &Multivector::one(dim)?)?.scalar_part();
    Ok(if (n * (n - 1) / 2) % 2 == 0 {
        value
    } else {
        -value
    })
}

/// Determinant of `α_k(v_l) 1[φ'(k) ≻ φ(l)]` (or `⪰` when `strict` is
/// false) for arbitrary, possibly repeated, real labels. Ties are resolved
/// with [`extend_order`], rows and columns are sorted by label and the
/// result is evaluated through [`chrono_det`].
pub fn indicator_det(
    alphas: &[Vec<C64>],
    vs: &[Vec<C64>],
    phi_prime: &[f64],
    phi: &[f64],
    strict: bool,
) -> Result<C64> {
    let n = alphas.len();
    if vs.len() != n || phi.len() != n || phi_prime.len() != n {
        return Err(Error::LengthMismatch(n, vs.len()));
    }
    let (j, jp) = extend_order(phi, phi_prime, strict);
    let mut cols: Vec<usize> = (0..n).collect();
    cols.sort_by(|&a, &b| j[a].cmp(&j[b]));
    let mut rows: Vec<usize> = (0..n).collect();
    rows.sort_by(|&a, &b| jp[a].cmp(&jp[b]));
    let sign = inversion_sign(&j) * inversion_sign(&jp);
    let sorted_alphas: Vec<Vec<C64>> = rows.iter().map(|&k| alphas[k].clone()).collect();
    let sorted_vs: Vec<Vec<C64>> = cols.iter().map(|&l| vs[l].clone()).collect();
    let sorted_j: Vec<OrderedLabel> = cols.iter().map(|&l| j[l]).collect();
    let sorted_jp: Vec<OrderedLabel> = rows.iter().map(|&k| jp[k]).collect();
    let d = chrono_det(&sorted_alphas, &sorted_vs, &sorted_j, &sorted_jp)?;
    Ok(if sign < 0 { -d } else { d })
}

/// A Grassmann generator of the pair `(ψ̄_a, ψ_a)` on site `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Field {
    Bar(usize),
    Psi(usize),
}

/// `∫ dμ_C` of a monomial, normalized so that `∫ ψ̄_a ψ_b dμ_C = C_{ab}`.
///
/// The monomial is brought to the order `ψ̄_{a_1} ψ_{b_1} ⋯ ψ̄_{a_p} ψ_{b_p}`
/// and evaluated as `det(C_{a_i b_j})`. Repeated fields or unequal numbers
/// of barred and unbarred fields give zero.
pub fn gaussian_integral(covariance: &CMatrix, monomial: &[Field]) -> Result<C64> {
    let m = covariance.size();
    // Sort into (bars ascending, psis ascending) and track the sign.
    let keys: Vec<usize> = monomial
        .iter()
        .map(|f| match *f {
            Field::Bar(a) => a,
            Field::Psi(b) => m + b,
        })
        .collect();
    for f in monomial {
        let (Field::Bar(i) | Field::Psi(i)) = *f;
        if i >= m {
            return Err(Error::IndexOutOfRange { index: i, size: m });
        }
    }
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Ok(ZERO);
    }
    let sign = inversion_sign(&keys);
    let bars: u32 = sorted
        .iter()
        .filter(|&&k| k < m)
        .fold(0, |acc, &k| acc | (1 << k));
    let psis: u32 = sorted
        .iter()
        .filter(|&&k| k >= m)
        .fold(0, |acc, &k| acc | (1 << (k - m)));
    let value = gaussian_integral_canonical(covariance, bars, psis);
    Ok(if sign < 0 { -value } else { value })
}

/// Integral of the canonically ordered monomial
/// `ψ̄_{a_1} ⋯ ψ̄_{a_p} ψ_{b_1} ⋯ ψ_{b_p}` with `a` ascending in `bars` and
/// `b` ascending in `psis`.
pub fn gaussian_integral_canonical(covariance: &CMatrix, bars: u32, psis: u32) -> C64 {
    let p = bars.count_ones() as usize;
    if p != psis.count_ones() as usize {
        return ZERO;
    }
    if p == 0 {
        return ONE;
    }
    let rows = bit_indices(bars);
    let cols = bit_indices(psis);
    let det = covariance.select(&rows, &cols).det();
    if (p * (p - 1) / 2) % 2 == 0 {
        det
    } else {
        -det
    }
}

pub(crate) fn bit_indices(mask: u32) -> Vec<usize> {
    let mut out = vec![];
    let mut rest = mask;
    while rest != 0 {
        out.push(rest.trailing_zeros() as usize);
        rest &= rest - 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_vec, trial_rng};
    use rand::Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn e(dim: usize, i: usize) -> Vec<C64> {
        let mut v = vec![ZERO; dim];
        v[i] = ONE;
        v
    }

    fn random_mv<R: Rng>(rng: &mut R, dim: usize) -> Multivector {
        let mut m = Multivector::zero(dim).unwrap();
        for mask in 0..(1u32 << dim) {
            if rng.random::<f64>() < 0.6 {
                m.add_term(mask, crate::rng::complex_gaussian(rng));
            }
        }
        m
    }

    /// Dense matrix of `(α∧)` on the 2^N-dimensional algebra, built by
    /// explicit reordering of generator lists.
    fn dense_wedge(alpha: &[C64]) -> Vec<Vec<C64>> {
        let dim = alpha.len();
        let size = 1usize << dim;
        let mut mat = vec![vec![ZERO; size]; size];
        for col in 0..size {
            for (i, &a) in alpha.iter().enumerate() {
                if col & (1 << i) != 0 {
                    continue;
                }
                // list [i, gens of col ascending]; count transpositions of a bubble sort
                let mut list = vec![i];
                list.extend((0..dim).filter(|g| col & (1 << g) != 0));
                let mut swaps = 0;
                for x in 0..list.len() {
                    for y in 0..list.len() - 1 - x {
                        if list[y] > list[y + 1] {
                            list.swap(y, y + 1);
                            swaps += 1;
                        }
                    }
                }
                let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
                mat[col | (1 << i)][col] += a * sign;
            }
        }
        mat
    }

    #[test]
    fn wedge_on_unit_gives_vector() {
        let alpha = [c(1.0), c(-2.0), C64::new(0.0, 3.0)];
        let out = wedge_apply(&alpha, &Multivector::one(3).unwrap()).unwrap();
        assert_eq!(out, Multivector::vector(&alpha).unwrap());
    }

    #[test]
    fn wedge_twice_vanishes() {
        let mut rng = trial_rng(11, 0);
        let alpha = complex_gaussian_vec(&mut rng, 4);
        let m = random_mv(&mut rng, 4);
        let twice = wedge_apply(&alpha, &wedge_apply(&alpha, &m).unwrap()).unwrap();
        assert!(twice.norm() < 1e-12 * (1.0 + m.norm()));
    }

    #[test]
    fn e1_wedge_e2_has_positive_sign() {
        let m = Multivector::vector(&e(2, 1)).unwrap();
        let out = wedge_apply(&e(2, 0), &m).unwrap();
        assert_eq!(out.coeff(0b11), ONE);
        // against the dense sign-bookkeeping oracle
        let dense = dense_wedge(&e(2, 0));
        assert_eq!(dense[0b11][0b10], ONE);
        let out = wedge_apply(&e(2, 1), &Multivector::vector(&e(2, 0)).unwrap()).unwrap();
        assert_eq!(out.coeff(0b11), -ONE);
    }

    #[test]
    fn wedge_matches_dense_oracle() {
        let mut rng = trial_rng(12, 0);
        for dim in 1..=5 {
            let alpha = complex_gaussian_vec(&mut rng, dim);
            let m = random_mv(&mut rng, dim);
            let dense = dense_wedge(&alpha);
            let out = wedge_apply(&alpha, &m).unwrap();
            for row in 0..(1usize << dim) {
                let expect: C64 = (0..(1usize << dim))
                    .map(|col| dense[row][col] * m.coeff(col as u32))
                    .sum();
                assert!((expect - out.coeff(row as u32)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn contraction_basics() {
        let u = [c(0.5), c(2.0)];
        assert!(contract_apply(&u, &Multivector::one(2).unwrap())
            .unwrap()
            .is_zero());
        let alpha = [c(3.0), C64::new(0.0, 1.0)];
        let out = contract_apply(&u, &Multivector::vector(&alpha).unwrap()).unwrap();
        assert_eq!(out.scalar_part(), dot_bilinear(&u, &alpha));
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn contraction_is_dual_to_wedge() {
        let mut rng = trial_rng(13, 0);
        for _ in 0..50 {
            let u = complex_gaussian_vec(&mut rng, 3);
            let a = random_mv(&mut rng, 3);
            let b = random_mv(&mut rng, 3);
            let lhs = contract_apply(&u, &a).unwrap().pairing(&b);
            let rhs = a.pairing(&wedge_apply(&u, &b).unwrap());
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn car_defect_exact_for_basis_vectors() {
        let one = Multivector::one(3).unwrap();
        assert_eq!(car_defect(&e(3, 0), &e(3, 0), &one).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = Multivector::one(3).unwrap();
        assert!(matches!(
            wedge_apply(&e(2, 0), &m),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            contract_apply(&e(4, 0), &m),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Multivector::zero(17),
            Err(Error::TooManyGenerators(17))
        ));
    }

    #[test]
    fn duality_det_examples() {
        let mut rng = trial_rng(14, 0);
        let a = complex_gaussian_vec(&mut rng, 4);
        let v = complex_gaussian_vec(&mut rng, 4);
        let d = duality_det(&[a.clone()], &[v.clone()]).unwrap();
        assert!((d - dot_bilinear(&a, &v)).norm() < 1e-14);
        let basis: Vec<Vec<C64>> = (0..3).map(|i| e(5, i)).collect();
        assert_eq!(duality_det(&basis, &basis).unwrap(), ONE);
        assert!(matches!(
            duality_det(&basis, &basis[..2]),
            Err(Error::LengthMismatch(3, 2))
        ));
    }

    #[test]
    fn duality_det_matches_lu() {
        let mut rng = trial_rng(15, 0);
        for _ in 0..20 {
            let alphas: Vec<Vec<C64>> = (0..3).map(|_| complex_gaussian_vec(&mut rng, 5)).collect();
            let vs: Vec<Vec<C64>> = (0..3).map(|_| complex_gaussian_vec(&mut rng, 5)).collect();
            let lu = CMatrix::from_fn(3, |i, j| dot_bilinear(&alphas[i], &vs[j])).det();
            let d = duality_det(&alphas, &vs).unwrap();
            assert!((d - lu).norm() <= 1e-10 * lu.norm());
        }
    }

    #[test]
    fn unit_ordering_reproduces_plain_det() {
        // (-1)^{n(n-1)/2} v_1⌟ ⋯ v_n⌟ (α_1 ∧ ⋯ ∧ α_n) = det(α_i(v_j))
        let mut rng = trial_rng(16, 0);
        let n = 3;
        let alphas: Vec<Vec<C64>> = (0..n).map(|_| complex_gaussian_vec(&mut rng, 4)).collect();
        let vs: Vec<Vec<C64>> = (0..n).map(|_| complex_gaussian_vec(&mut rng, 4)).collect();
        let mut m = wedge_all(4, &alphas).unwrap();
        for v in vs.iter().rev() {
            m = contract_apply(v, &m).unwrap();
        }
        let sign = if (n * (n - 1) / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let lu = CMatrix::from_fn(n, |i, j| dot_bilinear(&alphas[i], &vs[j])).det();
        assert!((m.scalar_part() * sign - lu).norm() < 1e-10 * lu.norm());
        // same through chrono_det with every wedge label above every contraction label
        let j: Vec<OrderedLabel> = (0..n).map(|l| OrderedLabel::at(l as f64)).collect();
        let jp: Vec<OrderedLabel> = (0..n).map(|k| OrderedLabel::at(10.0 + k as f64)).collect();
        let cd = chrono_det(&alphas, &vs, &j, &jp).unwrap();
        assert!((cd - lu).norm() < 1e-10 * lu.norm());
    }

    #[test]
    fn extend_order_examples() {
        let (j, jp) = extend_order(&[0.3], &[0.3], true);
        assert!(!(jp[0] > j[0]));
        let (j, jp) = extend_order(&[0.3], &[0.3], false);
        assert!(jp[0] > j[0]);
        let (j, jp) = extend_order(&[0.1, 0.5], &[0.2, 0.7], true);
        for k in 0..2 {
            for l in 0..2 {
                assert_eq!(jp[k] > j[l], [0.2, 0.7][k] > [0.1, 0.5][l]);
            }
        }
    }

    #[test]
    fn rho_sign_examples() {
        let lo = [OrderedLabel::at(1.0), OrderedLabel::at(2.0)];
        let hi = [OrderedLabel::at(3.0), OrderedLabel::at(4.0)];
        assert_eq!(rho_sign(&lo, &hi).unwrap(), 1);
        assert_eq!(
            rho_sign(&[OrderedLabel::at(2.0)], &[OrderedLabel::at(1.0)]).unwrap(),
            -1
        );
        assert_eq!(rho_sign(&lo, &lo), Err(Error::OverlappingLabels));
    }

    #[test]
    fn rho_sign_is_merge_permutation_sign() {
        let mut rng = trial_rng(17, 0);
        for _ in 0..200 {
            let mut times: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            let mut j: Vec<OrderedLabel> = times.drain(..4).map(OrderedLabel::at).collect();
            let mut jp: Vec<OrderedLabel> = times.into_iter().map(OrderedLabel::at).collect();
            j.sort();
            jp.sort();
            // explicit permutation sorting the concatenation (j, j')
            let all: Vec<OrderedLabel> = j.iter().chain(&jp).copied().collect();
            let mut perm: Vec<usize> = (0..8).collect();
            perm.sort_by(|&a, &b| all[a].cmp(&all[b]));
            let mut visited = [false; 8];
            let mut sign = 1i8;
            for start in 0..8 {
                if visited[start] {
                    continue;
                }
                let mut len = 0;
                let mut k = start;
                while !visited[k] {
                    visited[k] = true;
                    k = perm[k];
                    len += 1;
                }
                if len % 2 == 0 {
                    sign = -sign;
                }
            }
            assert_eq!(rho_sign(&j, &jp).unwrap(), sign);
        }
    }

    #[test]
    fn chrono_product_sorted_and_swapped() {
        let mut rng = trial_rng(18, 0);
        let a = complex_gaussian_vec(&mut rng, 3);
        let u = complex_gaussian_vec(&mut rng, 3);
        let m = random_mv(&mut rng, 3);
        let sorted = [
            ChronoOperator::contract(u.clone(), OrderedLabel::at(0.0)),
            ChronoOperator::wedge(a.clone(), OrderedLabel::at(1.0)),
        ];
        let plain = contract_apply(&u, &wedge_apply(&a, &m).unwrap()).unwrap();
        assert_eq!(chrono_product_apply(&sorted, &m).unwrap(), plain);
        let swapped = [
            ChronoOperator::contract(u.clone(), OrderedLabel::at(1.0)),
            ChronoOperator::wedge(a.clone(), OrderedLabel::at(0.0)),
        ];
        let expect = -&wedge_apply(&a, &contract_apply(&u, &m).unwrap()).unwrap();
        assert_eq!(chrono_product_apply(&swapped, &m).unwrap(), expect);
        let dup = [
            ChronoOperator::contract(u, OrderedLabel::at(1.0)),
            ChronoOperator::wedge(a, OrderedLabel::at(1.0)),
        ];
        assert_eq!(chrono_product_apply(&dup, &m), Err(Error::DuplicateLabel));
    }

    #[test]
    fn chrono_product_matches_independent_sort() {
        let mut rng = trial_rng(19, 0);
        for _ in 0..50 {
            let ops: Vec<ChronoOperator> = (0..4)
                .map(|i| {
                    let v = complex_gaussian_vec(&mut rng, 4);
                    let t = OrderedLabel::at(rng.random::<f64>());
                    if i % 2 == 0 {
                        ChronoOperator::contract(v, t)
                    } else {
                        ChronoOperator::wedge(v, t)
                    }
                })
                .collect();
            let m = random_mv(&mut rng, 4);
            // insertion sort counting adjacent swaps
            let mut idx: Vec<usize> = (0..4).collect();
            let mut swaps = 0;
            for i in 1..4 {
                let mut k = i;
                while k > 0 && ops[idx[k - 1]].label > ops[idx[k]].label {
                    idx.swap(k - 1, k);
                    swaps += 1;
                    k -= 1;
                }
            }
            let mut expect = m.clone();
            for &i in idx.iter().rev() {
                expect = ops[i].apply(&expect).unwrap();
            }
            if swaps % 2 == 1 {
                expect = -&expect;
            }
            let got = chrono_product_apply(&ops, &m).unwrap();
            assert!((&got - &expect).norm() < 1e-12);
        }
    }

    #[test]
    fn chrono_det_single_pair() {
        let a = vec![c(2.0), c(1.0)];
        let v = vec![c(0.5), c(3.0)];
        let above = chrono_det(
            &[a.clone()],
            &[v.clone()],
            &[OrderedLabel::at(0.0)],
            &[OrderedLabel::at(1.0)],
        )
        .unwrap();
        assert_eq!(above, dot_bilinear(&a, &v));
        let below = chrono_det(
            &[a],
            &[v],
            &[OrderedLabel::at(1.0)],
            &[OrderedLabel::at(0.0)],
        )
        .unwrap();
        assert_eq!(below, ZERO);
    }

    #[test]
    fn chrono_det_errors() {
        let a = vec![vec![ONE, ZERO]; 3];
        let labels: Vec<OrderedLabel> = (0..3).map(|i| OrderedLabel::at(i as f64)).collect();
        let other: Vec<OrderedLabel> = (0..3).map(|i| OrderedLabel::at(10.0 + i as f64)).collect();
        assert!(matches!(
            chrono_det(&a, &a, &labels, &other),
            Err(Error::SizeExceedsDimension { .. })
        ));
        let a = vec![vec![ONE, ZERO, ZERO]; 2];
        assert_eq!(
            chrono_det(&a, &a, &labels[..2], &labels[1..]),
            Err(Error::OverlappingLabels)
        );
    }

    #[test]
    fn chrono_det_matches_masked_lu() {
        let mut rng = trial_rng(20, 0);
        for _ in 0..200 {
            let n = 3;
            let alphas: Vec<Vec<C64>> = (0..n).map(|_| complex_gaussian_vec(&mut rng, 4)).collect();
            let vs: Vec<Vec<C64>> = (0..n).map(|_| complex_gaussian_vec(&mut rng, 4)).collect();
            let mut j: Vec<OrderedLabel> = (0..n)
                .map(|_| OrderedLabel::at(rng.random::<f64>()))
                .collect();
            let mut jp: Vec<OrderedLabel> = (0..n)
                .map(|_| OrderedLabel::at(rng.random::<f64>()))
                .collect();
            j.sort();
            jp.sort();
            let mask = masked_matrix(&alphas, &vs, &j, &jp);
            let lu = mask.det();
            let cd = chrono_det(&alphas, &vs, &j, &jp).unwrap();
            assert!(
                (cd - lu).norm() <= 1e-10 * lu.norm().max(mask.hadamard_scale()),
                "{cd} {lu}"
            );
        }
    }

    /// Grassmann Gaussian expectation computed as `exp(Δ_C)` on the full
    /// algebra with `Δ_C = Σ C_ab ∂_{ψ_b} ∂_{ψ̄_a}`, then projected on the
    /// scalar part.
    fn brute_force_gaussian(cov: &CMatrix, monomial: &[Field]) -> C64 {
        let m = cov.size();
        let dim = 2 * m;
        let gen = |f: Field| match f {
            Field::Bar(a) => a,
            Field::Psi(b) => m + b,
        };
        let mut f = Multivector::one(dim).unwrap();
        for &fld in monomial.iter().rev() {
            f = wedge_apply(&e(dim, gen(fld)), &f).unwrap();
        }
        let laplacian = |x: &Multivector| {
            let mut out = Multivector::zero(dim).unwrap();
            for a in 0..m {
                for b in 0..m {
                    let inner = contract_apply(&e(dim, a), x).unwrap();
                    let outer = contract_apply(&e(dim, m + b), &inner).unwrap();
                    out += &outer.scale(cov[(a, b)]);
                }
            }
            out
        };
        let mut total = f.clone();
        let mut term = f;
        let mut k = 1.0;
        loop {
            term = laplacian(&term).scale(C64::new(1.0 / k, 0.0));
            if term.is_zero() {
                break;
            }
            total += &term;
            k += 1.0;
        }
        total.scalar_part()
    }

    #[test]
    fn gaussian_integral_examples() {
        let mut rng = trial_rng(21, 0);
        let cov = CMatrix::from_fn(3, |_, _| crate::rng::complex_gaussian(&mut rng));
        assert_eq!(gaussian_integral(&cov, &[]).unwrap(), ONE);
        assert_eq!(
            gaussian_integral(&cov, &[Field::Bar(0), Field::Psi(2)]).unwrap(),
            cov[(0, 2)]
        );
        assert_eq!(
            gaussian_integral(&cov, &[Field::Bar(0), Field::Bar(1)]).unwrap(),
            ZERO
        );
        assert_eq!(
            gaussian_integral(&cov, &[Field::Bar(0), Field::Bar(0)]).unwrap(),
            ZERO
        );
        assert!(matches!(
            gaussian_integral(&cov, &[Field::Bar(3), Field::Psi(0)]),
            Err(Error::IndexOutOfRange { index: 3, size: 3 })
        ));
        let four = [Field::Bar(0), Field::Psi(1), Field::Bar(2), Field::Psi(0)];
        let expect = cov[(0, 1)] * cov[(2, 0)] - cov[(0, 0)] * cov[(2, 1)];
        assert!((gaussian_integral(&cov, &four).unwrap() - expect).norm() < 1e-12);
    }

    #[test]
    fn gaussian_integral_matches_brute_force() {
        let mut rng = trial_rng(22, 0);
        let fields: Vec<Field> = (0..3)
            .flat_map(|a| [Field::Bar(a), Field::Psi(a)])
            .collect();
        for m in 1..=3 {
            let cov = CMatrix::from_fn(m, |_, _| crate::rng::complex_gaussian(&mut rng));
            for _ in 0..40 {
                let len = 2 * (1 + rng.random_range(0..m));
                let mut mono = vec![];
                while mono.len() < len {
                    let f = fields[rng.random_range(0..2 * m)];
                    if !mono.contains(&f) || rng.random::<f64>() < 0.05 {
                        mono.push(f);
                    }
                }
                let fast = gaussian_integral(&cov, &mono).unwrap();
                let brute = brute_force_gaussian(&cov, &mono);
                assert!(
                    (fast - brute).norm() <= 1e-10 * (1.0 + brute.norm()),
                    "{mono:?}: {fast} vs {brute}"
                );
            }
        }
    }

    #[test]
    fn exp_and_log_are_inverse() {
        let mut rng = trial_rng(23, 0);
        let mut x = Multivector::zero(4).unwrap();
        for mask in [0u32, 0b0011, 0b0101, 0b1100, 0b1111] {
            x.add_term(mask, crate::rng::complex_gaussian(&mut rng) * 0.5);
        }
        let back = x.exp().unwrap().log().unwrap();
        assert!((&back - &x).norm() < 1e-12);
    }
}
