//! Exact effective actions on tiny index sets.
//!
//! An interaction over `m` sites lives in the Grassmann algebra generated
//! by `ψ̄_0 … ψ̄_{m-1}, ψ_0 … ψ_{m-1}` (bits `0..m` and `m..2m`). A basis
//! element `ψ̄_A ψ_B` with `A`, `B` ascending carries the coefficient
//! `m̄! m! v_{m̄,m}(A; B)` of the antisymmetrized kernel `v_{m̄,m}`.
//!
//! The effective action `W(V, C) = log ∫ dμ_C(Ψ') e^{V(Ψ'+Ψ)}` is computed in
//! the doubled algebra with internal fields `ψ̄'` (bits `0..m`), `ψ'`
//! (`m..2m`) and external fields `ψ̄` (`2m..3m`), `ψ` (`3m..4m`). Internal
//! monomials are integrated with [`gaussian_integral_canonical`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::grassmann::{
    bit_indices, contract_apply, gaussian_integral_canonical, wedge_all, Multivector,
};
use crate::linalg::{inversion_sign, CMatrix};
use crate::{Error, Result, BOUND_SLACK, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Largest index set whose doubled algebra fits in 16 generators.
pub const MAX_SITES: usize = 4;

fn check_sites(sites: usize) -> Result<()> {
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::TooManyGenerators(4 * sites));
    }
    Ok(())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// An interaction `V(Ψ)` on `sites` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    sites: usize,
    field: Multivector,
}

impl Interaction {
    pub fn zero(sites: usize) -> Result<Self> {
        check_sites(sites)?;
        Ok(Self {
            sites,
            field: Multivector::zero(2 * sites)?,
        })
    }

    /// Wraps an element of the algebra over `2 · sites` generators.
    pub fn from_multivector(sites: usize, field: Multivector) -> Result<Self> {
        check_sites(sites)?;
        if field.dim() != 2 * sites {
            return Err(Error::DimensionMismatch {
                expected: 2 * sites,
                found: field.dim(),
            });
        }
        Ok(Self { sites, field })
    }

    /// `Σ v(a; b) ψ̄_{a_1} ⋯ ψ̄_{a_m̄} ψ_{b_1} ⋯ ψ_{b_m}` for a dense kernel
    /// indexed as `v[a_1, …, a_m̄, b_1, …, b_m]` in row-major order.
    pub fn add_kernel(&mut self, mbar: usize, m: usize, kernel: &[C64]) -> Result<()> {
        let s = self.sites;
        let len = s.pow((mbar + m) as u32);
        if kernel.len() != len {
            return Err(Error::LengthMismatch(len, kernel.len()));
        }
        for (flat, &value) in kernel.iter().enumerate() {
            if value == ZERO {
                continue;
            }
            let idx = unflatten(flat, s, mbar + m);
            let bars = &idx[..mbar];
            let psis = &idx[mbar..];
            if has_repeat(bars) || has_repeat(psis) {
                continue;
            }
            let sign = inversion_sign(bars) * inversion_sign(psis);
            let mask = bars.iter().fold(0u32, |acc, &a| acc | 1 << a)
                | psis.iter().fold(0u32, |acc, &b| acc | 1 << (s + b));
            self.field.add_term(mask, value * f64::from(sign));
        }
        Ok(())
    }

    /// `u ψ̄_0 ψ_0 ψ̄_1 ψ_1`, a density-density vertex between sites 0 and 1.
    pub fn density_density(sites: usize, u: f64) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "density-density vertex needs two sites, got {sites}"
            )));
        }
        let mut v = Self::zero(sites)?;
        // ψ̄_0 ψ_0 ψ̄_1 ψ_1 = -ψ̄_0 ψ̄_1 ψ_0 ψ_1
        let mask = 0b11 | (0b11 << sites);
        v.field.add_term(mask, C64::new(-u, 0.0));
        Ok(v)
    }

    /// `Σ_ab A_ab ψ̄_a ψ_b`.
    pub fn quadratic(a: &CMatrix) -> Result<Self> {
        let s = a.size();
        let mut v = Self::zero(s)?;
        v.add_kernel(1, 1, a.as_slice())?;
        Ok(v)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn field(&self) -> &Multivector {
        &self.field
    }

    pub fn scale(&self, lambda: f64) -> Self {
        Self {
            sites: self.sites,
            field: self.field.scale(C64::new(lambda, 0.0)),
        }
    }

    fn split_mask(&self, mask: u32) -> (u32, u32) {
        let low = (1u32 << self.sites) - 1;
        (mask & low, (mask >> self.sites) & low)
    }

    /// Dense antisymmetric kernel `v_{m̄,m}` indexed as in
    /// [`Self::add_kernel`].
    pub fn kernel(&self, mbar: usize, m: usize) -> Vec<C64> {
        let s = self.sites;
        let norm = factorial(mbar) * factorial(m);
        let mut out = vec![ZERO; s.pow((mbar + m) as u32)];
        for (flat, slot) in out.iter_mut().enumerate() {
            let idx = unflatten(flat, s, mbar + m);
            let (bars, psis) = idx.split_at(mbar);
            if has_repeat(bars) || has_repeat(psis) {
                continue;
            }
            let mask = bars.iter().fold(0u32, |acc, &a| acc | 1 << a)
                | psis.iter().fold(0u32, |acc, &b| acc | 1 << (s + b));
            let sign = inversion_sign(bars) * inversion_sign(psis);
            *slot = self.field.coeff(mask) * (f64::from(sign) / norm);
        }
        out
    }

    /// `|v_{m̄,m}|`: the largest sum of `|v|` over all slots but one, with
    /// the remaining slot pinned.
    pub fn kernel_weight(&self, mbar: usize, m: usize) -> f64 {
        let s = self.sites;
        let mut bar_pins = vec![0.0; s];
        let mut psi_pins = vec![0.0; s];
        for (mask, c) in self.field.terms() {
            let (bars, psis) = self.split_mask(mask);
            if bars.count_ones() as usize != mbar || psis.count_ones() as usize != m {
                continue;
            }
            for a in bit_indices(bars) {
                bar_pins[a] += c.norm() / mbar as f64;
            }
            for b in bit_indices(psis) {
                psi_pins[b] += c.norm() / m as f64;
            }
        }
        bar_pins.into_iter().chain(psi_pins).fold(0.0, f64::max)
    }

    /// `‖V‖_h = Σ_{m̄+m ≥ 1} |v_{m̄,m}| h^{m̄+m}`.
    pub fn kernel_norm(&self, h: f64) -> f64 {
        let mut total = 0.0;
        for mbar in 0..=self.sites {
            for m in 0..=self.sites {
                if mbar + m == 0 {
                    continue;
                }
                let w = self.kernel_weight(mbar, m);
                if w > 0.0 {
                    total += w * libm::pow(h, (mbar + m) as f64);
                }
            }
        }
        total
    }
}

fn unflatten(mut flat: usize, base: usize, len: usize) -> Vec<usize> {
    let mut idx = vec![0; len];
    for slot in idx.iter_mut().rev() {
        *slot = flat % base;
        flat /= base;
    }
    idx
}

fn has_repeat(xs: &[usize]) -> bool {
    xs.iter().enumerate().any(|(i, a)| xs[..i].contains(a))
}

/// `V(Ψ' + Ψ)` in the doubled algebra.
pub fn substitute(v: &Interaction) -> Result<Multivector> {
    let s = v.sites;
    let dim = 4 * s;
    let mut out = Multivector::zero(dim)?;
    for (mask, c) in v.field.terms() {
        let gens: Vec<Vec<C64>> = bit_indices(mask)
            .into_iter()
            .map(|g| {
                let mut vec = vec![ZERO; dim];
                vec[g] = ONE;
                vec[2 * s + g] = ONE;
                vec
            })
            .collect();
        out += &wedge_all(dim, &gens)?.scale(c);
    }
    Ok(out)
}

/// `∫ dμ_C(Ψ') F(Ψ', Ψ)`, projecting onto monomials without internal fields.
pub fn integrate_internal(f: &Multivector, covariance: &CMatrix) -> Result<Multivector> {
    let s = covariance.size();
    if f.dim() != 4 * s {
        return Err(Error::DimensionMismatch {
            expected: 4 * s,
            found: f.dim(),
        });
    }
    let low = (1u32 << s) - 1;
    let mut out = Multivector::zero(2 * s)?;
    for (mask, c) in f.terms() {
        let bars = mask & low;
        let psis = (mask >> s) & low;
        let value = gaussian_integral_canonical(covariance, bars, psis);
        if value != ZERO {
            out.add_term(mask >> (2 * s), c * value);
        }
    }
    Ok(out)
}

/// `∫ dμ_C(Ψ') e^{V(Ψ'+Ψ)}`.
pub fn partition(v: &Interaction, covariance: &CMatrix) -> Result<Multivector> {
    check_covariance(v, covariance)?;
    integrate_internal(&substitute(v)?.exp()?, covariance)
}

fn check_covariance(v: &Interaction, covariance: &CMatrix) -> Result<()> {
    if covariance.size() != v.sites {
        return Err(Error::DimensionMismatch {
            expected: v.sites,
            found: covariance.size(),
        });
    }
    Ok(())
}

/// `W(V, C)` as an element of the external algebra, including its scalar
/// part.
pub fn effective_action(v: &Interaction, covariance: &CMatrix) -> Result<Interaction> {
    let z = partition(v, covariance)?;
    Interaction::from_multivector(v.sites, z.log()?)
}

/// `W(λV, C)`.
pub fn effective_action_exact(
    v: &Interaction,
    covariance: &CMatrix,
    lambda: f64,
) -> Result<Interaction> {
    effective_action(&v.scale(lambda), covariance)
}

/// Independent route: `e^{Δ_C}` with `Δ_C = Σ C_ab ∂_{ψ'_b} ∂_{ψ̄'_a}`
/// applied to `e^{V(Ψ'+Ψ)}` in the doubled algebra, keeping the part free
/// of internal fields, followed by the logarithm.
pub fn effective_action_oracle(v: &Interaction, covariance: &CMatrix) -> Result<Interaction> {
    check_covariance(v, covariance)?;
    let s = v.sites;
    let dim = 4 * s;
    let basis = |g: usize| {
        let mut e = vec![ZERO; dim];
        e[g] = ONE;
        e
    };
    let laplacian = |x: &Multivector| -> Result<Multivector> {
        let mut out = Multivector::zero(dim)?;
        for a in 0..s {
            for b in 0..s {
                let c = covariance[(a, b)];
                if c == ZERO {
                    continue;
                }
                let inner = contract_apply(&basis(a), x)?;
                out += &contract_apply(&basis(s + b), &inner)?.scale(c);
            }
        }
        Ok(out)
    };
    let f = substitute(v)?.exp()?;
    let mut total = f.clone();
    let mut term = f;
    let mut k = 1.0;
    loop {
        term = laplacian(&term)?.scale(C64::new(1.0 / k, 0.0));
        if term.is_zero() {
            break;
        }
        total += &term;
        k += 1.0;
    }
    let internal = (1u32 << (2 * s)) - 1;
    let mut z = Multivector::zero(2 * s)?;
    for (mask, c) in total.terms() {
        if mask & internal == 0 {
            z.add_term(mask >> (2 * s), c);
        }
    }
    Interaction::from_multivector(s, z.log()?)
}

fn series_mul(a: &[Multivector], b: &[Multivector], order: usize) -> Result<Vec<Multivector>> {
    let dim = a[0].dim();
    let mut out = vec![Multivector::zero(dim)?; order + 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            if bj.is_zero() {
                continue;
            }
            out[i + j] += &ai.wedge(bj)?;
        }
    }
    Ok(out)
}

/// Coefficients `w_0, …, w_order` of `W(λV, C) = Σ_p λ^p w_p`, so that
/// `W_p = p! w_p`. Obtained from `Z(λ) = Σ_k λ^k ∫ V(Ψ'+Ψ)^k / k!` by the
/// logarithm of a power series with algebra-valued coefficients.
pub fn taylor_coefficients(
    v: &Interaction,
    covariance: &CMatrix,
    order: usize,
) -> Result<Vec<Interaction>> {
    check_covariance(v, covariance)?;
    let s = v.sites;
    let sub = substitute(v)?;
    let mut z = Vec::with_capacity(order + 1);
    let mut power = Multivector::one(4 * s)?;
    for k in 0..=order {
        if k > 0 {
            power = power.wedge(&sub)?.scale(C64::new(1.0 / k as f64, 0.0));
        }
        z.push(integrate_internal(&power, covariance)?);
    }
    let z0 = z[0].scalar_part();
    if z0 == ZERO {
        return Err(Error::NonInvertible);
    }
    // Z(λ) = z0 (1 + X(λ)), X(0) = 0
    let mut x: Vec<Multivector> = z.iter().map(|zk| zk.scale(z0.inv())).collect();
    x[0] = Multivector::zero(2 * s)?;
    let mut w = vec![Multivector::zero(2 * s)?; order + 1];
    w[0] = Multivector::scalar(2 * s, z0.ln())?;
    let mut xp = x.clone();
    for j in 1..=order {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        for (wp, term) in w.iter_mut().zip(&xp) {
            *wp += &term.scale(C64::new(sign / j as f64, 0.0));
        }
        if j < order {
            xp = series_mul(&xp, &x, order)?;
        }
    }
    w.into_iter()
        .map(|m| Interaction::from_multivector(s, m))
        .collect()
}

/// `Σ_{p ≤ order} λ^p w_p`.
pub fn evaluate_series(coeffs: &[Interaction], lambda: f64) -> Result<Interaction> {
    let first = coeffs
        .first()
        .ok_or(Error::InvalidParameter(format!("empty series")))?;
    let mut out = Multivector::zero(first.field.dim())?;
    let mut power = 1.0;
    for c in coeffs {
        out += &c.field.scale(C64::new(power, 0.0));
        power *= lambda;
    }
    Interaction::from_multivector(first.sites, out)
}

/// One λ point of the remainder check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RemainderPoint {
    pub lambda: f64,
    pub order: usize,
    /// `‖W(λV) - Σ_{p ≤ P} λ^p W_p/p!‖_h`.
    pub remainder: f64,
    /// `ω^P ‖λV‖_{h'}^{P+1} / (1 - ω ‖λV‖_{h'})`.
    pub bound: f64,
    /// `ω ‖λV‖_{h'}`.
    pub ratio: f64,
    pub pass: bool,
}

/// Constants entering the convergence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KonvConstants {
    pub h: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl KonvConstants {
    /// `ω_C = 2 α_C / δ_C²`.
    pub fn omega(&self) -> f64 {
        2.0 * self.alpha / (self.delta * self.delta)
    }

    pub fn h_prime(&self) -> f64 {
        self.h + self.omega()
    }
}

/// `max_a Σ_b |C_ab|` over rows and columns, the decay constant of a
/// matrix under counting measure.
pub fn matrix_decay_constant(c: &CMatrix) -> f64 {
    let n = c.size();
    let rows = (0..n).map(|i| (0..n).map(|j| c[(i, j)].norm()).sum::<f64>());
    let cols = (0..n).map(|j| (0..n).map(|i| c[(i, j)].norm()).sum::<f64>());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Checks the order-`P` remainder bound at every `λ` of the grid.
///
/// `exact` supplies `W(λV)`; points with `ω ‖λV‖_{h'} ≥ 1` are refused.
pub fn konv_remainder_check(
    v: &Interaction,
    covariance: &CMatrix,
    constants: KonvConstants,
    order: usize,
    lambdas: &[f64],
    exact: impl Fn(f64) -> Result<Interaction>,
) -> Result<Vec<RemainderPoint>> {
    let coeffs = taylor_coefficients(v, covariance, order)?;
    let omega = constants.omega();
    let hp = constants.h_prime();
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let norm = v.scale(lambda).kernel_norm(hp);
        let ratio = omega * norm;
        if !(ratio < 1.0) {
            return Err(Error::OutOfDomain(format!(
                "omega * |lambda V| = {ratio} at lambda = {lambda}"
            )));
        }
        let w = exact(lambda)?;
        let partial = evaluate_series(&coeffs, lambda)?;
        let diff = Interaction::from_multivector(v.sites, &w.field - &partial.field)?;
        let remainder = diff.kernel_norm(constants.h);
        let bound =
            libm::pow(omega, order as f64) * libm::pow(norm, (order + 1) as f64) / (1.0 - ratio);
        out.push(RemainderPoint {
            lambda,
            order,
            remainder,
            bound,
            ratio,
            pass: remainder <= bound * (1.0 + BOUND_SLACK),
        });
    }
    Ok(out)
}

/// Degree in `λ` beyond which all Taylor coefficients vanish exactly, or
/// `None` if none does up to `max_order`.
pub fn exhaustion_degree(coeffs: &[Interaction]) -> Option<usize> {
    let last = coeffs.iter().rposition(|c| !c.field.is_zero())?;
    if last + 1 < coeffs.len() {
        Some(last)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, trial_rng};
    use rand::Rng;

    fn random_cov(seed: u64, n: usize) -> CMatrix {
        let mut rng = trial_rng(seed, 0);
        CMatrix::from_fn(n, |_, _| complex_gaussian(&mut rng) * 0.5)
    }

    #[test]
    fn zero_interaction_has_zero_norm() {
        assert_eq!(Interaction::zero(3).unwrap().kernel_norm(2.0), 0.0);
        assert!(matches!(
            Interaction::zero(5),
            Err(Error::TooManyGenerators(20))
        ));
    }

    #[test]
    fn quartic_orbit_norm() {
        // one antisymmetrized entry U on (0,1;0,1): each pinned slot sees U/2
        let v = Interaction::density_density(2, 3.0).unwrap();
        assert!((v.kernel_norm(0.5) - 3.0 * 0.0625 / 2.0).abs() < 1e-15);
        let k = v.kernel(2, 2);
        // v(0,1;0,1) = -U/4 from ψ̄_0 ψ_0 ψ̄_1 ψ_1 = -ψ̄_0 ψ̄_1 ψ_0 ψ_1
        assert!((k[0b0101] - C64::new(-0.75, 0.0)).norm() < 1e-15);
    }

    /// Slow evaluation of the norm by pinning every slot of the dense kernels.
    fn naive_norm(v: &Interaction, h: f64) -> f64 {
        let s = v.sites();
        let mut total = 0.0;
        for mbar in 0..=s {
            for m in 0..=s {
                let order = mbar + m;
                if order == 0 {
                    continue;
                }
                let k = v.kernel(mbar, m);
                let mut best = 0.0f64;
                for slot in 0..order {
                    for pinned in 0..s {
                        let mut sum = 0.0;
                        for (flat, c) in k.iter().enumerate() {
                            if unflatten(flat, s, order)[slot] == pinned {
                                sum += c.norm();
                            }
                        }
                        best = best.max(sum);
                    }
                }
                total += best * libm::pow(h, order as f64);
            }
        }
        total
    }

    #[test]
    fn norm_matches_naive_pinning() {
        let mut rng = trial_rng(30, 0);
        for _ in 0..20 {
            let mut field = Multivector::zero(6).unwrap();
            for _ in 0..6 {
                let mask = rng.random_range(1..64u32);
                field.add_term(mask, complex_gaussian(&mut rng));
            }
            let v = Interaction::from_multivector(3, field).unwrap();
            let h = rng.random_range(0.2..2.0);
            assert!(
                (v.kernel_norm(h) - naive_norm(&v, h)).abs() < 1e-12 * (1.0 + naive_norm(&v, h))
            );
        }
    }

    #[test]
    fn kernels_roundtrip_and_are_antisymmetric() {
        let mut rng = trial_rng(31, 0);
        let raw: Vec<C64> = (0..81).map(|_| complex_gaussian(&mut rng)).collect();
        let mut v = Interaction::zero(3).unwrap();
        v.add_kernel(2, 2, &raw).unwrap();
        let k = v.kernel(2, 2);
        let at = |a: [usize; 4]| k[((a[0] * 3 + a[1]) * 3 + a[2]) * 3 + a[3]];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        assert!((at([a, b, c, d]) + at([b, a, c, d])).norm() < 1e-14);
                        assert!((at([a, b, c, d]) + at([a, b, d, c])).norm() < 1e-14);
                    }
                }
            }
        }
        let mut again = Interaction::zero(3).unwrap();
        again.add_kernel(2, 2, &k).unwrap();
        assert!((&again.field - &v.field).norm() < 1e-12);
    }

    #[test]
    fn zero_coupling_gives_zero_action() {
        let v = Interaction::density_density(2, 1.0).unwrap();
        let w = effective_action_exact(&v, &random_cov(32, 2), 0.0).unwrap();
        assert!(w.field().is_zero());
    }

    #[test]
    fn first_order_matches_wick() {
        let s = 2;
        let cov = random_cov(33, s);
        let mut rng = trial_rng(34, 0);
        let raw: Vec<C64> = (0..16).map(|_| complex_gaussian(&mut rng)).collect();
        let mut v = Interaction::zero(s).unwrap();
        v.add_kernel(2, 2, &raw).unwrap();
        let coeffs = taylor_coefficients(&v, &cov, 1).unwrap();
        // Hand Wick expansion of every ordered product ψ̄_a ψ̄_b ψ_c ψ_d with
        // each field either contracted or external.
        let mut expect = Multivector::zero(2 * s).unwrap();
        for (flat, &val) in raw.iter().enumerate() {
            let idx = unflatten(flat, s, 4);
            let gens = [idx[0], idx[1], s + idx[2], s + idx[3]];
            for internal in 0..16u32 {
                let inner: Vec<usize> = (0..4).filter(|i| internal & (1 << i) != 0).collect();
                let outer: Vec<usize> = (0..4).filter(|i| internal & (1 << i) == 0).collect();
                let mut swaps = 0;
                for &i in &inner {
                    swaps += outer.iter().filter(|&&o| o < i).count();
                }
                let wick = match inner.as_slice() {
                    [] => ONE,
                    [0, 2] => cov[(idx[0], idx[2])],
                    [0, 3] => cov[(idx[0], idx[3])],
                    [1, 2] => cov[(idx[1], idx[2])],
                    [1, 3] => cov[(idx[1], idx[3])],
                    [0, 1, 2, 3] => {
                        -(cov[(idx[0], idx[2])] * cov[(idx[1], idx[3])]
                            - cov[(idx[0], idx[3])] * cov[(idx[1], idx[2])])
                    }
                    _ => ZERO,
                };
                if wick == ZERO {
                    continue;
                }
                let ext: Vec<usize> = outer.iter().map(|&o| gens[o]).collect();
                if has_repeat(&ext) {
                    continue;
                }
                let mask = ext.iter().fold(0u32, |acc, &g| acc | 1 << g);
                let sign =
                    if swaps % 2 == 0 { 1.0 } else { -1.0 } * f64::from(inversion_sign(&ext));
                expect.add_term(mask, val * wick * sign);
            }
        }
        assert!((&coeffs[1].field - &expect).norm() < 1e-12 * (1.0 + expect.norm()));
    }

    #[test]
    fn quadratic_interaction_closed_form() {
        let s = 2;
        let cov = random_cov(35, s);
        let a = random_cov(36, s);
        let v = Interaction::quadratic(&a).unwrap();
        let w = effective_action(&v, &cov).unwrap();
        // log det(1 + A Cᵀ) + ψ̄ A (1 + Cᵀ A)^{-1} ψ
        let ct = CMatrix::from_fn(s, |i, j| cov[(j, i)]);
        let one = CMatrix::identity(s);
        let act = a.mul(&ct);
        let lhs = CMatrix::from_fn(s, |i, j| one[(i, j)] + act[(i, j)]);
        let cta = ct.mul(&a);
        let m2 = CMatrix::from_fn(s, |i, j| one[(i, j)] + cta[(i, j)]);
        let det = m2.det();
        let inv = CMatrix::from_fn(s, |i, j| {
            // 2x2 inverse
            let adj = [[m2[(1, 1)], -m2[(0, 1)]], [-m2[(1, 0)], m2[(0, 0)]]];
            adj[i][j] / det
        });
        let m = a.mul(&inv);
        assert!((w.field().scalar_part() - lhs.det().ln()).norm() < 1e-12);
        let k = w.kernel(1, 1);
        for i in 0..s {
            for j in 0..s {
                assert!((k[i * s + j] - m[(i, j)]).norm() < 1e-12);
            }
        }
        assert!(w.kernel_weight(2, 2) < 1e-12);
    }

    #[test]
    fn taylor_series_matches_exact_for_small_coupling() {
        let s = 2;
        let cov = random_cov(37, s);
        let v = Interaction::density_density(s, 1.0).unwrap();
        let coeffs = taylor_coefficients(&v, &cov, 3).unwrap();
        for &lambda in &[1e-2, 2e-2] {
            let exact = effective_action_exact(&v, &cov, lambda).unwrap();
            let series = evaluate_series(&coeffs, lambda).unwrap();
            let err = (&exact.field - &series.field).norm();
            assert!(err < 50.0 * libm::pow(lambda, 4.0), "{lambda}: {err}");
        }
    }

    #[test]
    fn oracle_agrees_with_fast_route() {
        let cov = random_cov(38, 2);
        let mut rng = trial_rng(39, 0);
        let mut v = Interaction::density_density(2, 0.7).unwrap();
        let quad: Vec<C64> = (0..4).map(|_| complex_gaussian(&mut rng) * 0.3).collect();
        v.add_kernel(1, 1, &quad).unwrap();
        let fast = effective_action(&v, &cov).unwrap();
        let slow = effective_action_oracle(&v, &cov).unwrap();
        assert!((&fast.field - &slow.field).norm() < 1e-12);
    }

    #[test]
    fn triangular_covariance_exhausts() {
        let mut cov = CMatrix::zeros(2);
        cov[(0, 1)] = C64::new(-libm::exp(-0.5), 0.0);
        let v = Interaction::density_density(2, 1.0).unwrap();
        let coeffs = taylor_coefficients(&v, &cov, 8).unwrap();
        let degree = exhaustion_degree(&coeffs).unwrap();
        assert!(degree <= 4);
        let exact = effective_action_exact(&v, &cov, 0.3).unwrap();
        let series = evaluate_series(&coeffs, 0.3).unwrap();
        assert!((&exact.field - &series.field).norm() < 1e-12);
    }
}
