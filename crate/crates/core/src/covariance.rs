//! Free many-fermion covariance on a finite periodic lattice.
//!
//! Momenta live on `(2π/L)·{0..L-1}^d` with weight `L^{-d}` each, so every
//! momentum integral below is an exact finite sum.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Threshold below which a dispersion value counts as zero when choosing
/// the default regularization.
pub const ZERO_DISPERSION_TOL: f64 = 1e-6;

/// Fermi function `f_β(E) = 1/(1 + e^{βE})`.
pub fn fermi(energy: f64, beta: f64) -> f64 {
    let x = beta * energy;
    if x > 0.0 {
        let e = libm::exp(-x);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(x))
    }
}

/// Reduces `tau` into `(-β, β]`.
pub fn reduce_time(tau: f64, beta: f64) -> f64 {
    let period = 2.0 * beta;
    let r = tau - period * libm::floor((tau + beta) / period);
    if r <= -beta {
        r + period
    } else if r > beta {
        r - period
    } else {
        r
    }
}

/// The bare covariance `bC(τ, E)`, extended `2β`-periodically.
///
/// On `(0, β]` it is `-e^{-τE} f_β(-E)`, on `(-β, 0]` it is
/// `e^{-τE} f_β(E)`. Every branch is evaluated with nonpositive exponents.
pub fn bare_covariance(tau: f64, energy: f64, beta: f64) -> f64 {
    let t = reduce_time(tau, beta);
    let e = energy;
    if t > 0.0 {
        if e >= 0.0 {
            -libm::exp(-t * e) / (1.0 + libm::exp(-beta * e))
        } else {
            -libm::exp((beta - t) * e) / (1.0 + libm::exp(beta * e))
        }
    } else if e > 0.0 {
        libm::exp(-(beta + t) * e) / (1.0 + libm::exp(-beta * e))
    } else {
        libm::exp(-t * e) / (1.0 + libm::exp(beta * e))
    }
}

/// The fermionic Matsubara frequency `(2k+1)π/β`.
pub fn matsubara_frequency(k: i64, beta: f64) -> f64 {
    (2 * k + 1) as f64 * PI / beta
}

/// Largest `k ≥ 0` with `(2k+1)π/β ≤ omega_max`, or `None` if no positive
/// frequency fits.
pub fn matsubara_count(beta: f64, omega_max: f64) -> Option<i64> {
    let k = libm::floor((omega_max * beta / PI - 1.0) / 2.0);
    if k < 0.0 {
        None
    } else {
        Some(k as i64)
    }
}

fn on_discontinuity(tau: f64, beta: f64) -> bool {
    let r = tau / beta;
    libm::fabs(r - libm::round(r)) < 1e-12
}

/// Symmetric partial Matsubara sum `β^{-1} Σ_{|ω| ≤ Ω} e^{-iωτ}/(iω - E)`.
pub fn matsubara_covariance(tau: f64, energy: f64, beta: f64, omega_max: f64) -> Result<C64> {
    if on_discontinuity(tau, beta) {
        return Err(Error::Discontinuity(tau));
    }
    if !(omega_max > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidParameter(
            "omega_max and beta must be positive".to_string(),
        ));
    }
    let Some(kmax) = matsubara_count(beta, omega_max) else {
        return Ok(ZERO);
    };
    let mut sum = ZERO;
    // pair ω with -ω, from the smallest frequency upward
    for k in 0..=kmax {
        let w = matsubara_frequency(k, beta);
        let phase = C64::from_polar(1.0, -w * tau);
        sum += phase / C64::new(-energy, w) + phase.conj() / C64::new(-energy, -w);
    }
    Ok(sum / beta)
}

/// `Φ(s, ε) = π^{-1/2} (ε f_β(-ε))^{1/2} / (is - ε)`.
pub fn phi_kernel(s: f64, eps: f64, beta: f64) -> Result<C64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(
            "phi_kernel requires eps > 0".to_string(),
        ));
    }
    let num = libm::sqrt(eps * fermi(-eps, beta) / PI);
    Ok(C64::new(num, 0.0) / C64::new(-eps, s))
}

/// Zero-temperature limit of the bare covariance at `E = 1`.
pub fn fkt_limit_covariance(tau: f64) -> f64 {
    if tau > 0.0 {
        -libm::exp(-tau)
    } else {
        0.0
    }
}

/// Point `(τ, x)` of imaginary time times the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpaceTimePoint {
    pub tau: f64,
    pub x: [i64; 3],
}

impl SpaceTimePoint {
    pub fn new(tau: f64, x: [i64; 3]) -> Self {
        Self { tau, x }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Dispersion {
    /// `E(p) = Σ_i cos p_i - mu`.
    TightBinding {
        mu: f64,
    },
    Constant {
        energy: f64,
    },
}

impl Dispersion {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match *self {
            Dispersion::TightBinding { mu } => p.iter().map(|&q| libm::cos(q)).sum::<f64>() - mu,
            Dispersion::Constant { energy } => energy,
        }
    }
}

/// Scaling function `h(p) ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Scaling {
    One,
    Constant {
        value: f64,
    },
    /// `h(p) = f(E(p)/eps)` with the smooth bump `f` supported on `1 ≤ |x| ≤ 2`.
    Shell {
        eps: f64,
    },
}

/// Smooth bump on `1 ≤ |x| ≤ 2`, normalized to 1 at `|x| = 3/2`.
pub fn shell_profile(x: f64) -> f64 {
    let a = libm::fabs(x);
    if a <= 1.0 || a >= 2.0 {
        return 0.0;
    }
    libm::exp(4.0 - 1.0 / ((a - 1.0) * (2.0 - a)))
}

impl Scaling {
    fn eval(&self, energy: f64) -> f64 {
        match *self {
            Scaling::One => 1.0,
            Scaling::Constant { value } => value,
            Scaling::Shell { eps } => shell_profile(energy / eps),
        }
    }
}

/// One momentum of the discrete torus.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    /// Integer coordinates `k` with `p = 2πk/L`.
    pub k: [i64; 3],
    /// Dispersion before regularization.
    pub raw_energy: f64,
    /// Dispersion used in every covariance formula.
    pub energy: f64,
    pub h: f64,
}

#[derive(Debug, Clone)]
pub struct LatticeModel {
    d: usize,
    l: usize,
    beta: f64,
    dispersion: Dispersion,
    scaling: Scaling,
    epsilon_reg: f64,
    modes: Vec<Mode>,
    roots: Vec<C64>,
}

impl LatticeModel {
    pub fn new(
        d: usize,
        l: usize,
        beta: f64,
        dispersion: Dispersion,
        scaling: Scaling,
    ) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidParameter(
                "dimension must be 1, 2 or 3".to_string(),
            ));
        }
        if l == 0 {
            return Err(Error::InvalidParameter("L must be positive".to_string()));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(
                "beta must be positive and finite".to_string(),
            ));
        }
        if let Scaling::Constant { value } = scaling {
            if !(value >= 0.0) {
                return Err(Error::InvalidParameter("h must be nonnegative".to_string()));
            }
        }
        if let Scaling::Shell { eps } = scaling {
            if !(eps > 0.0) {
                return Err(Error::InvalidParameter(
                    "shell width must be positive".to_string(),
                ));
            }
        }
        let roots = (0..l)
            .map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / l as f64))
            .collect();
        let mut model = Self {
            d,
            l,
            beta,
            dispersion,
            scaling,
            epsilon_reg: 0.0,
            modes: Vec::new(),
            roots,
        };
        model.rebuild_modes();
        Ok(model)
    }

    /// `E(p) = cos p - 0.3` on a chain.
    pub fn metal1d(l: usize, beta: f64) -> Result<Self> {
        Self::new(
            1,
            l,
            beta,
            Dispersion::TightBinding { mu: 0.3 },
            Scaling::One,
        )
    }

    /// `E(p) = cos p - 2.5`, so `|E| ≥ 1.5`.
    pub fn insulator1d(l: usize, beta: f64) -> Result<Self> {
        Self::new(
            1,
            l,
            beta,
            Dispersion::TightBinding { mu: 2.5 },
            Scaling::One,
        )
    }

    /// `E(p) = cos p_1 + cos p_2 - 0.3` on a square lattice.
    pub fn metal2d(l: usize, beta: f64) -> Result<Self> {
        Self::new(
            2,
            l,
            beta,
            Dispersion::TightBinding { mu: 0.3 },
            Scaling::One,
        )
    }

    pub fn by_name(name: &str, l: usize, beta: f64) -> Result<Self> {
        match name {
            "metal1d" => Self::metal1d(l, beta),
            "insulator1d" => Self::insulator1d(l, beta),
            "metal2d" => Self::metal2d(l, beta),
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown model `{other}`"
            ))),
        }
    }

    fn rebuild_modes(&mut self) {
        let count = self.l.pow(self.d as u32);
        let mut modes = Vec::with_capacity(count);
        for idx in 0..count {
            let mut k = [0i64; 3];
            let mut rest = idx;
            for slot in k.iter_mut().take(self.d) {
                *slot = (rest % self.l) as i64;
                rest /= self.l;
            }
            let p: Vec<f64> = k[..self.d]
                .iter()
                .map(|&ki| 2.0 * PI * ki as f64 / self.l as f64)
                .collect();
            let raw = self.dispersion.eval(&p);
            modes.push(Mode {
                k,
                raw_energy: raw,
                energy: self.regularize(raw),
                h: self.scaling.eval(raw),
            });
        }
        self.modes = modes;
    }

    fn regularize(&self, energy: f64) -> f64 {
        let half = self.epsilon_reg / 2.0;
        if half > 0.0 && libm::fabs(energy) <= half {
            half
        } else {
            energy
        }
    }

    /// Replaces `E` by `E_ε`, which equals `ε/2` wherever `|E| ≤ ε/2`.
    pub fn with_epsilon_reg(mut self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidParameter(
                "epsilon_reg must be nonnegative".to_string(),
            ));
        }
        self.epsilon_reg = eps;
        self.rebuild_modes();
        Ok(self)
    }

    /// Applies the default regularization `ε = 1e-6` if some `|E(p)|` is
    /// below that threshold; the flag reports whether it did.
    pub fn auto_regularized(self) -> (Self, bool) {
        if self.epsilon_reg == 0.0
            && self
                .modes
                .iter()
                .any(|m| libm::fabs(m.raw_energy) < ZERO_DISPERSION_TOL)
        {
            let model = self
                .with_epsilon_reg(ZERO_DISPERSION_TOL)
                .expect("positive epsilon is valid");
            (model, true)
        } else {
            (self, false)
        }
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Result<Self> {
        let model = Self::new(self.d, self.l, self.beta, self.dispersion, scaling)?;
        self.scaling = model.scaling;
        self.rebuild_modes();
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        Self::new(self.d, self.l, beta, self.dispersion, self.scaling)?;
        self.beta = beta;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn epsilon_reg(&self) -> f64 {
        self.epsilon_reg
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// `L^d`.
    pub fn volume(&self) -> usize {
        self.modes.len()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.volume() as f64
    }

    /// `‖h‖₁ = L^{-d} Σ_p |h(p)|`.
    pub fn h_l1(&self) -> f64 {
        self.weight() * self.modes.iter().map(|m| libm::fabs(m.h)).sum::<f64>()
    }

    /// `max_p |E(p)|` of the effective dispersion.
    pub fn energy_sup(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| libm::fabs(m.energy))
            .fold(0.0, f64::max)
    }

    /// Number of momenta with `h(p) > 0`.
    pub fn support_size(&self) -> usize {
        self.modes.iter().filter(|m| m.h > 0.0).count()
    }

    /// Lattice sites `{0..L-1}^d`, padded with zeros to three components.
    pub fn sites(&self) -> Vec<[i64; 3]> {
        (0..self.volume())
            .map(|idx| {
                let mut x = [0i64; 3];
                let mut rest = idx;
                for slot in x.iter_mut().take(self.d) {
                    *slot = (rest % self.l) as i64;
                    rest /= self.l;
                }
                x
            })
            .collect()
    }

    /// Euclidean length of the minimal-image representative of `x`.
    pub fn torus_norm(&self, x: &[i64; 3]) -> f64 {
        let l = self.l as i64;
        let mut sq = 0.0;
        for &xi in &x[..self.d] {
            let r = xi.rem_euclid(l);
            let r = r.min(l - r) as f64;
            sq += r * r;
        }
        libm::sqrt(sq)
    }

    /// `e^{i p·x}` for the mode `k`.
    pub fn phase(&self, k: &[i64; 3], x: &[i64; 3]) -> C64 {
        let l = self.l as i64;
        let mut s = 0i64;
        for i in 0..self.d {
            s += k[i] * x[i];
        }
        self.roots[s.rem_euclid(l) as usize]
    }

    /// `C(τ, x) = L^{-d} Σ_p h(p) e^{ip·x} bC(τ, E(p))`.
    pub fn covariance(&self, tau: f64, x: &[i64; 3]) -> C64 {
        let mut sum = ZERO;
        for m in &self.modes {
            if m.h == 0.0 {
                continue;
            }
            sum += self.phase(&m.k, x) * (m.h * bare_covariance(tau, m.energy, self.beta));
        }
        sum * self.weight()
    }

    pub fn covariance_position(&self, x: &SpaceTimePoint, y: &SpaceTimePoint) -> C64 {
        self.covariance(x.tau - y.tau, &diff(&x.x, &y.x))
    }

    /// `C(τ, x)` for every lattice site `x`, in the order of [`Self::sites`].
    pub fn covariance_table(&self, tau: f64) -> Vec<C64> {
        let coeffs: Vec<f64> = self
            .modes
            .iter()
            .map(|m| m.h * bare_covariance(tau, m.energy, self.beta) * self.weight())
            .collect();
        self.sites()
            .iter()
            .map(|x| {
                self.modes
                    .iter()
                    .zip(&coeffs)
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(m, &c)| self.phase(&m.k, x) * c)
                    .sum()
            })
            .collect()
    }

    /// Inner product `⟨a, b⟩` in `L²(ℝ × B)` of two Gram vectors, with the
    /// `s`-integral done in closed form.
    pub fn gram_inner_product(&self, a: &GramVector, b: &GramVector) -> Result<C64> {
        let dx = diff(&a.x, &b.x);
        let dt = libm::fabs(a.kind.time_sign() * a.t - b.kind.time_sign() * b.t);
        let mut sum = ZERO;
        for m in &self.modes {
            if m.h == 0.0 {
                continue;
            }
            if m.energy == 0.0 {
                return Err(Error::ZeroDispersion);
            }
            if !(a.kind.supports(m.energy) && b.kind.supports(m.energy)) {
                continue;
            }
            let eps = libm::fabs(m.energy);
            let weight = m.h * libm::exp(-eps * dt) * fermi(-eps, self.beta);
            sum += self.phase(&m.k, &dx) * weight;
        }
        Ok(sum * self.weight())
    }

    /// `⟨Σ a_i u_i, Σ b_j w_j⟩` for real coefficients.
    pub fn gram_combination_inner(
        &self,
        lhs: &[(f64, GramVector)],
        rhs: &[(f64, GramVector)],
    ) -> Result<C64> {
        let mut sum = ZERO;
        for (ca, a) in lhs {
            for (cb, b) in rhs {
                sum += self.gram_inner_product(a, b)? * (ca * cb);
            }
        }
        Ok(sum)
    }

    pub fn gram_norm(&self, v: &[(f64, GramVector)]) -> Result<f64> {
        Ok(libm::sqrt(self.gram_combination_inner(v, v)?.re.max(0.0)))
    }

    /// The covariance assembled from its Gram representation: the forward
    /// pair for `t > t'`, the backward pair otherwise.
    pub fn gram_assembly(&self, x: &SpaceTimePoint, y: &SpaceTimePoint) -> Result<C64> {
        if x.tau > y.tau {
            self.gram_combination_inner(&forward_left(x, self.beta), &forward_right(y))
        } else {
            self.gram_combination_inner(&backward_left(x), &backward_right(y, self.beta))
        }
    }
}

fn diff(a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Which of the three vector families of the Gram representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GramKind {
    /// `g⁺`, supported on `E > 0`.
    GPlus,
    /// `g⁻`, supported on `E < 0`.
    GMinus,
    /// `h`, supported on `E < 0`, with reversed time phase.
    H,
}

impl GramKind {
    fn supports(self, energy: f64) -> bool {
        match self {
            GramKind::GPlus => energy > 0.0,
            GramKind::GMinus | GramKind::H => energy < 0.0,
        }
    }

    fn time_sign(self) -> f64 {
        match self {
            GramKind::GPlus | GramKind::GMinus => 1.0,
            GramKind::H => -1.0,
        }
    }
}

/// `g^±_{(t,x)}` or `h_{(t,x)}`; `t` may lie outside `[0, β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramVector {
    pub kind: GramKind,
    pub t: f64,
    pub x: [i64; 3],
}

impl GramVector {
    pub fn new(kind: GramKind, t: f64, x: [i64; 3]) -> Self {
        Self { kind, t, x }
    }
}

/// `-g⁺_{t,x} - g⁻_{β-t,x}`.
pub fn forward_left(p: &SpaceTimePoint, beta: f64) -> [(f64, GramVector); 2] {
    [
        (-1.0, GramVector::new(GramKind::GPlus, p.tau, p.x)),
        (-1.0, GramVector::new(GramKind::GMinus, beta - p.tau, p.x)),
    ]
}

/// `g⁺_{t',x'} + h_{t',x'}`.
pub fn forward_right(p: &SpaceTimePoint) -> [(f64, GramVector); 2] {
    backward_left(p)
}

/// `g⁺_{t,x} + h_{t,x}`.
pub fn backward_left(p: &SpaceTimePoint) -> [(f64, GramVector); 2] {
    [
        (1.0, GramVector::new(GramKind::GPlus, p.tau, p.x)),
        (1.0, GramVector::new(GramKind::H, p.tau, p.x)),
    ]
}

/// `g⁺_{t'-β,x'} + h_{t',x'}`.
pub fn backward_right(p: &SpaceTimePoint, beta: f64) -> [(f64, GramVector); 2] {
    [
        (1.0, GramVector::new(GramKind::GPlus, p.tau - beta, p.x)),
        (1.0, GramVector::new(GramKind::H, p.tau, p.x)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use rand::Rng;

    #[test]
    fn fermi_examples() {
        assert_eq!(fermi(0.0, 3.0), 0.5);
        assert!((fermi(libm::log(3.0), 1.0) - 0.25).abs() < 1e-15);
        assert_eq!(fermi(1e6, 1e3), 0.0);
        assert_eq!(fermi(-1e6, 1e3), 1.0);
        let mut rng = trial_rng(1, 0);
        for _ in 0..1000 {
            let e = rng.random_range(-50.0..50.0);
            let b = rng.random_range(0.1..10.0);
            assert!((fermi(e, b) + fermi(-e, b) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reduce_time_lands_in_half_open_interval() {
        assert_eq!(reduce_time(0.0, 2.0), 0.0);
        assert_eq!(reduce_time(2.0, 2.0), 2.0);
        assert_eq!(reduce_time(-2.0, 2.0), 2.0);
        assert!((reduce_time(4.5, 2.0) - 0.5).abs() < 1e-15);
        assert!((reduce_time(-3.0, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bare_covariance_branches() {
        let beta = 2.0;
        assert_eq!(bare_covariance(0.0, 0.7, beta), fermi(0.7, beta));
        assert_eq!(bare_covariance(0.0, 0.0, beta), 0.5);
        assert!((bare_covariance(1e-12, 0.0, beta) + 0.5).abs() < 1e-11);
        // the direct formula is safe at these values
        for &(t, e) in &[(0.3, 1.2), (1.7, -0.4), (-0.6, 2.0), (-1.1, -1.5)] {
            let direct = if t > 0.0 {
                -libm::exp(-t * e) * fermi(-e, beta)
            } else {
                libm::exp(-t * e) * fermi(e, beta)
            };
            assert!((bare_covariance(t, e, beta) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn bare_covariance_is_stable_at_large_beta() {
        for &e in &[-30.0, -1.0, 1.0, 30.0] {
            for &t in &[-500.0, -1.0, 0.0, 1.0, 500.0] {
                let v = bare_covariance(t, e, 1000.0);
                assert!(v.is_finite() && v.abs() <= 1.0);
            }
        }
    }

    #[test]
    fn antiperiodicity() {
        let mut rng = trial_rng(2, 0);
        for _ in 0..1000 {
            let beta = rng.random_range(0.5..8.0);
            let t = rng.random_range(-beta..beta);
            let e = rng.random_range(-4.0..4.0);
            let a = bare_covariance(t + beta, e, beta);
            let b = bare_covariance(t, e, beta);
            assert!((a + b).abs() <= 1e-14, "{t} {e} {beta}: {a} {b}");
        }
    }

    #[test]
    fn matsubara_frequencies_are_odd() {
        assert!((matsubara_frequency(0, 2.0) - PI / 2.0).abs() < 1e-15);
        assert!((matsubara_frequency(-1, 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(matsubara_count(2.0, 1.0), None);
        assert_eq!(matsubara_count(2.0, 32.0 * PI / 2.0), Some(15));
    }

    #[test]
    fn matsubara_refuses_jump() {
        assert!(matches!(
            matsubara_covariance(0.0, 1.0, 2.0, 100.0),
            Err(Error::Discontinuity(_))
        ));
        assert!(matches!(
            matsubara_covariance(4.0, 1.0, 2.0, 100.0),
            Err(Error::Discontinuity(_))
        ));
    }

    #[test]
    fn matsubara_approaches_closed_form() {
        let (beta, e, tau) = (2.0, 0.0, 1.0);
        let exact = bare_covariance(tau, e, beta);
        assert_eq!(exact, -0.5);
        let coarse = matsubara_covariance(tau, e, beta, 100.0).unwrap();
        let fine = matsubara_covariance(tau, e, beta, 10000.0).unwrap();
        assert!(fine.im.abs() < 1e-12);
        assert!((fine.re - exact).abs() < (coarse.re - exact).abs().max(1e-3));
        assert!((fine.re - exact).abs() < 1e-3);
    }

    #[test]
    fn phi_kernel_values() {
        assert!(matches!(
            phi_kernel(0.0, 0.0, 1.0),
            Err(Error::InvalidParameter(_))
        ));
        let v = phi_kernel(0.0, 1.0, 1e6).unwrap();
        assert!((v.re + 1.0 / libm::sqrt(PI)).abs() < 1e-15 && v.im == 0.0);
        // |Φ|² = ε f(-ε) / (π (s² + ε²)); integral over s is f(-ε)
        let (eps, beta) = (0.7, 2.0);
        let s = 1.3;
        let v = phi_kernel(s, eps, beta).unwrap();
        let expect = eps * fermi(-eps, beta) / (PI * (s * s + eps * eps));
        assert!((v.norm_sqr() - expect).abs() < 1e-15);
    }

    #[test]
    fn fkt_limit() {
        assert_eq!(fkt_limit_covariance(-0.5), 0.0);
        assert_eq!(fkt_limit_covariance(1.0), -libm::exp(-1.0));
        assert!(
            (bare_covariance(1.0, 1.0, 64.0) - fkt_limit_covariance(1.0)).abs()
                <= libm::exp(-64.0) * libm::exp(1.0)
        );
    }

    #[test]
    fn flat_band_examples() {
        let model = LatticeModel::new(
            1,
            8,
            2.0,
            Dispersion::Constant { energy: 0.0 },
            Scaling::One,
        )
        .unwrap();
        let x = SpaceTimePoint::new(1.0, [3, 0, 0]);
        let later = SpaceTimePoint::new(0.5, [3, 0, 0]);
        assert!((model.covariance_position(&x, &later) - C64::new(-0.5, 0.0)).norm() < 1e-15);
        assert!((model.covariance_position(&later, &x) - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((model.covariance_position(&x, &x) - C64::new(0.5, 0.0)).norm() < 1e-15);
        let other = SpaceTimePoint::new(0.5, [4, 0, 0]);
        assert!(model.covariance_position(&x, &other).norm() < 1e-15);
        assert!(matches!(
            model.gram_inner_product(
                &GramVector::new(GramKind::GPlus, 0.0, [0; 3]),
                &GramVector::new(GramKind::GPlus, 0.0, [0; 3])
            ),
            Err(Error::ZeroDispersion)
        ));
        let (reg, applied) = model.auto_regularized();
        assert!(applied);
        assert_eq!(reg.epsilon_reg(), ZERO_DISPERSION_TOL);
        let (_, again) = LatticeModel::metal1d(8, 2.0).unwrap().auto_regularized();
        assert!(!again);
    }

    #[test]
    fn conjugate_symmetry() {
        let model = LatticeModel::metal2d(6, 2.0).unwrap();
        let mut rng = trial_rng(3, 0);
        for _ in 0..100 {
            let tau = rng.random_range(-2.0..2.0);
            let x = [rng.random_range(-6..6), rng.random_range(-6..6), 0];
            let a = model.covariance(tau, &x);
            let b = model.covariance(tau, &[-x[0], -x[1], 0]);
            assert!((a - b.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn gram_norms_bounded_by_h() {
        let model = LatticeModel::metal1d(8, 2.0).unwrap();
        let p = SpaceTimePoint::new(0.4, [2, 0, 0]);
        let g = model
            .gram_norm(&[(1.0, GramVector::new(GramKind::GPlus, p.tau, p.x))])
            .unwrap();
        let h = model
            .gram_norm(&[(1.0, GramVector::new(GramKind::H, p.tau, p.x))])
            .unwrap();
        assert!(g * g + h * h <= model.h_l1() * (1.0 + 1e-12));
        let cross = model
            .gram_inner_product(
                &GramVector::new(GramKind::GPlus, 0.1, [0; 3]),
                &GramVector::new(GramKind::H, 0.3, [1, 0, 0]),
            )
            .unwrap();
        assert_eq!(cross, ZERO);
    }

    #[test]
    fn shell_profile_support() {
        assert_eq!(shell_profile(0.5), 0.0);
        assert_eq!(shell_profile(2.5), 0.0);
        assert_eq!(shell_profile(-1.0), 0.0);
        assert!((shell_profile(1.5) - 1.0).abs() < 1e-15);
        assert_eq!(shell_profile(-1.5), shell_profile(1.5));
    }

    #[test]
    fn torus_norm_uses_minimal_image() {
        let model = LatticeModel::metal2d(6, 1.0).unwrap();
        assert_eq!(model.torus_norm(&[5, 0, 0]), 1.0);
        assert_eq!(model.torus_norm(&[3, 4, 0]), libm::sqrt(13.0));
        assert_eq!(model.sites().len(), 36);
    }
}
