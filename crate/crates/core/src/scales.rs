//! Frequency-space UV/IR split of the covariance, the Gram constant of the
//! IR part and decay constants.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::covariance::{matsubara_count, matsubara_frequency, LatticeModel};
use crate::quadrature::PanelDoubling;
use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `e^{-1/t}` for `t > 0`, zero otherwise.
fn mollifier(t: f64) -> f64 {
    if t > 0.0 {
        libm::exp(-1.0 / t)
    } else {
        0.0
    }
}

/// Smooth step rising from 0 at `t ≤ 0` to 1 at `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    let a = mollifier(t);
    let b = mollifier(1.0 - t);
    a / (a + b)
}

/// The infrared cutoff `χ_<`; the UV cutoff is `χ_> = 1 - χ_<`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Cutoff {
    /// `χ_<(x) = 1/(1 + |x|^alpha)`, so `χ_<(x) ≤ kappa |x|^{-alpha}` with
    /// `kappa = 1`.
    SmoothDecay { kappa: f64, alpha: f64 },
    /// Equal to 1 on `|x| ≤ 1` and to 0 on `|x| ≥ 2`.
    StrictBump,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff::SmoothDecay {
            kappa: 1.0,
            alpha: 4.0,
        }
    }
}

impl Cutoff {
    pub fn chi_lt(&self, x: f64) -> f64 {
        let a = libm::fabs(x);
        match *self {
            Cutoff::SmoothDecay { alpha, .. } => 1.0 / (1.0 + libm::pow(a, alpha)),
            Cutoff::StrictBump => smooth_step(2.0 - a),
        }
    }

    pub fn chi_gt(&self, x: f64) -> f64 {
        1.0 - self.chi_lt(x)
    }

    /// Radius beyond which `χ_<` vanishes identically.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Cutoff::SmoothDecay { .. } => None,
            Cutoff::StrictBump => Some(2.0),
        }
    }

    /// Upper bound on `β^{-1} Σ_{|ω| > W} χ_<(ω/Ω) Σ_p |h(p)|/|iω - E(p)|`.
    pub fn tail_bound(&self, h_l1: f64, omega: f64, omega_max: f64, beta: f64) -> f64 {
        match *self {
            Cutoff::StrictBump => {
                if omega_max >= 2.0 * omega {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Cutoff::SmoothDecay { kappa, alpha } => {
                let start = omega_max - 2.0 * PI / beta;
                if start <= 0.0 {
                    return f64::INFINITY;
                }
                h_l1 * kappa * libm::pow(omega / start, alpha) / (PI * alpha)
            }
        }
    }

    /// Frequency cutoff `Ω tol^{-1/alpha}` for the smooth cutoff, `2Ω` for
    /// the bump.
    pub fn default_omega_max(&self, omega: f64, tolerance: f64) -> f64 {
        match *self {
            Cutoff::SmoothDecay { alpha, .. } => omega * libm::pow(tolerance, -1.0 / alpha),
            Cutoff::StrictBump => 2.0 * omega,
        }
    }

    /// Sup norms of the first three derivatives of `χ_<`, by central
    /// differences on a grid over `[0, 3]`.
    pub fn derivative_sup_norms(&self) -> [f64; 3] {
        let h = 1e-3;
        let steps = 3000;
        let mut out = [0.0f64; 3];
        for i in 0..=steps {
            let x = 3.0 * i as f64 / steps as f64;
            let f = |k: i32| self.chi_lt(x + k as f64 * h);
            let d1 = (f(1) - f(-1)) / (2.0 * h);
            let d2 = (f(1) - 2.0 * f(0) + f(-1)) / (h * h);
            let d3 = (f(2) - 2.0 * f(1) + 2.0 * f(-1) - f(-2)) / (2.0 * h * h * h);
            out[0] = out[0].max(libm::fabs(d1));
            out[1] = out[1].max(libm::fabs(d2));
            out[2] = out[2].max(libm::fabs(d3));
        }
        out
    }
}

/// The split `C = C_< + C_>` at frequency scale `Ω`.
#[derive(Debug, Clone)]
pub struct ScaleSplit {
    model: LatticeModel,
    cutoff: Cutoff,
    omega: f64,
    omega_max: f64,
    tail: f64,
    /// `(ω, χ_<(ω/Ω))` for every retained fermionic frequency.
    freqs: Vec<(f64, f64)>,
    /// `L^{-d} Σ_p h(p) e^{ip·x} / (iω - E(p))`, per frequency then per site.
    profiles: Vec<Vec<C64>>,
}

impl ScaleSplit {
    /// Builds the split, keeping all frequencies with `|ω| ≤ omega_max`. If
    /// `tolerance` is given, refuses when the tail bound exceeds it.
    pub fn new(
        model: LatticeModel,
        cutoff: Cutoff,
        omega: f64,
        omega_max: f64,
        tolerance: Option<f64>,
    ) -> Result<Self> {
        if !(omega >= 1.0) {
            return Err(Error::Hypothesis(
                "the scale Omega must be at least 1".to_string(),
            ));
        }
        let beta = model.beta();
        let tail = cutoff.tail_bound(model.h_l1(), omega, omega_max, beta);
        if let Some(tol) = tolerance {
            if !(tail <= tol) {
                return Err(Error::OmegaMaxTooSmall {
                    tail,
                    tolerance: tol,
                });
            }
        }
        let mut freqs = Vec::new();
        if let Some(kmax) = matsubara_count(beta, omega_max) {
            for k in 0..=kmax {
                let w = matsubara_frequency(k, beta);
                let chi = cutoff.chi_lt(w / omega);
                if chi > 0.0 {
                    freqs.push((w, chi));
                    freqs.push((-w, chi));
                }
            }
        }
        let sites = model.sites();
        let weight = model.weight();
        let profiles = freqs
            .iter()
            .map(|&(w, _)| {
                sites
                    .iter()
                    .map(|x| {
                        model
                            .modes()
                            .iter()
                            .filter(|m| m.h != 0.0)
                            .map(|m| model.phase(&m.k, x) * m.h / C64::new(-m.energy, w))
                            .sum::<C64>()
                            * weight
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            model,
            cutoff,
            omega,
            omega_max,
            tail,
            freqs,
            profiles,
        })
    }

    /// The bump split, which is an exact finite sum.
    pub fn strict(model: LatticeModel, omega: f64) -> Result<Self> {
        Self::new(model, Cutoff::StrictBump, omega, 2.0 * omega, Some(0.0))
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// Bound on the pointwise truncation error of [`Self::ir`].
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn frequency_count(&self) -> usize {
        self.freqs.len()
    }

    fn site_index(&self, x: &[i64; 3]) -> usize {
        let l = self.model.l() as i64;
        let mut idx = 0usize;
        for i in (0..self.model.d()).rev() {
            idx = idx * l as usize + x[i].rem_euclid(l) as usize;
        }
        idx
    }

    /// `C_<(τ, x)`.
    pub fn ir(&self, tau: f64, x: &[i64; 3]) -> C64 {
        let site = self.site_index(x);
        let mut sum = ZERO;
        for (&(w, chi), profile) in self.freqs.iter().zip(&self.profiles) {
            sum += C64::from_polar(chi, -w * tau) * profile[site];
        }
        sum / self.model.beta()
    }

    /// `C_>(τ, x) = C(τ, x) - C_<(τ, x)`.
    pub fn uv(&self, tau: f64, x: &[i64; 3]) -> C64 {
        self.model.covariance(tau, x) - self.ir(tau, x)
    }

    /// `C_<(τ, ·)` over all sites.
    pub fn ir_table(&self, tau: f64) -> Vec<C64> {
        let beta = self.model.beta();
        let mut out = vec![ZERO; self.model.volume()];
        for (&(w, chi), profile) in self.freqs.iter().zip(&self.profiles) {
            let phase = C64::from_polar(chi / beta, -w * tau);
            for (o, p) in out.iter_mut().zip(profile) {
                *o += phase * p;
            }
        }
        out
    }

    pub fn uv_table(&self, tau: f64) -> Vec<C64> {
        let full = self.model.covariance_table(tau);
        full.iter()
            .zip(self.ir_table(tau))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Squared Gram constant of `C_<` from the standard frequency-space Gram
    /// representation.
    pub fn gamma_ir_sq(&self) -> GammaIr {
        gamma_ir_sum(&self.model, self.cutoff, self.omega, self.omega_max)
    }
}

/// `γ_<²` split into the truncated sum and the analytic tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GammaIr {
    pub truncated: f64,
    pub tail: f64,
}

impl GammaIr {
    /// The upper estimate used in every one-sided assertion.
    pub fn upper(&self) -> f64 {
        self.truncated + self.tail
    }
}

fn gamma_ir_sum(model: &LatticeModel, cutoff: Cutoff, omega: f64, omega_max: f64) -> GammaIr {
    let beta = model.beta();
    let weight = model.weight();
    let mut truncated = 0.0;
    if let Some(kmax) = matsubara_count(beta, omega_max) {
        for k in 0..=kmax {
            let w = matsubara_frequency(k, beta);
            let chi = cutoff.chi_lt(w / omega);
            if chi == 0.0 {
                continue;
            }
            let inner: f64 = model
                .modes()
                .iter()
                .map(|m| libm::fabs(m.h) / libm::hypot(w, m.energy))
                .sum();
            // ±ω contribute equally
            truncated += 2.0 * chi * inner * weight;
        }
    }
    GammaIr {
        truncated: truncated / beta,
        tail: cutoff.tail_bound(model.h_l1(), omega, omega_max, beta),
    }
}

/// `γ_<² = β^{-1} Σ_ω χ_<(ω/Ω) L^{-d} Σ_p |h(p)| / |iω - E(p)|`, truncated at
/// `omega_max` with the tail bounded analytically. Requires `β > π`.
pub fn gram_constant_ir(
    model: &LatticeModel,
    cutoff: Cutoff,
    omega: f64,
    omega_max: f64,
) -> Result<GammaIr> {
    if !(model.beta() > PI) {
        return Err(Error::Hypothesis(
            "the IR Gram constant bound needs beta > pi".to_string(),
        ));
    }
    if !(omega >= 1.0) {
        return Err(Error::Hypothesis(
            "the scale Omega must be at least 1".to_string(),
        ));
    }
    Ok(gamma_ir_sum(model, cutoff, omega, omega_max))
}

/// `‖h‖₁ (K' + 2 ln Ω) + L^{-d} Σ_{|E| ≤ 1} |h| ln(1/max(|E|, π/β))` with
/// `K' = 10 + 2κ(1/α + 1/(βΩ))`.
pub fn gram_ir_rhs(model: &LatticeModel, kappa: f64, alpha: f64, omega: f64) -> f64 {
    let beta = model.beta();
    let k_prime = 10.0 + 2.0 * kappa * (1.0 / alpha + 1.0 / (beta * omega));
    let log_part: f64 = model
        .modes()
        .iter()
        .filter(|m| libm::fabs(m.energy) <= 1.0)
        .map(|m| libm::fabs(m.h) * libm::log(1.0 / libm::fmax(libm::fabs(m.energy), PI / beta)))
        .sum::<f64>()
        * model.weight();
    model.h_l1() * (k_prime + 2.0 * libm::log(omega)) + log_part
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum KernelKind {
    Full,
    Uv,
    Ir,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayConstant {
    pub k0: u32,
    pub k: u32,
    pub value: f64,
    pub kernel: KernelKind,
}

/// `∫_{-β}^{β} dτ Σ_x |C(τ, x)| |τ|^{k0} |x|^k` with the time integral split
/// at the jump `τ = 0`. `split` is required for the UV and IR kernels.
pub fn decay_constant(
    model: &LatticeModel,
    split: Option<&ScaleSplit>,
    kernel: KernelKind,
    k0: u32,
    k: u32,
    quadrature: &PanelDoubling,
) -> Result<DecayConstant> {
    if kernel != KernelKind::Full && split.is_none() {
        return Err(Error::InvalidParameter(
            "UV and IR kernels need a scale split".to_string(),
        ));
    }
    let weights: Vec<f64> = model
        .sites()
        .iter()
        .map(|x| {
            if k == 0 {
                1.0
            } else {
                libm::pow(model.torus_norm(x), k as f64)
            }
        })
        .collect();
    let integrand = |tau: f64| {
        let table = match kernel {
            KernelKind::Full => model.covariance_table(tau),
            KernelKind::Uv => split.expect("checked above").uv_table(tau),
            KernelKind::Ir => split.expect("checked above").ir_table(tau),
        };
        let spatial: f64 = table.iter().zip(&weights).map(|(c, w)| c.norm() * w).sum();
        spatial * libm::pow(libm::fabs(tau), k0 as f64)
    };
    let beta = model.beta();
    let value = quadrature.integrate(-beta, 0.0, integrand)?
        + quadrature.integrate(0.0, beta, integrand)?;
    Ok(DecayConstant {
        k0,
        k,
        value,
        kernel,
    })
}

/// `u(τ) = (2β)^{-1} Σ_{ω ∈ (π/β)ℤ} e^{-iωτ} χ_<(ω/Ω)`, normalized so that
/// `∫_{-β}^{β} u = χ_<(0) = 1` and `C_< = u * C`. Needs a compactly
/// supported cutoff.
pub fn u_kernel(tau: f64, beta: f64, omega: f64, cutoff: Cutoff) -> Result<f64> {
    let radius = cutoff.support_radius().ok_or_else(|| {
        Error::InvalidParameter("u_kernel needs a compactly supported cutoff".to_string())
    })?;
    let step = PI / beta;
    let nmax = libm::ceil(radius * omega / step) as i64;
    let mut sum = cutoff.chi_lt(0.0);
    for n in 1..=nmax {
        let w = n as f64 * step;
        sum += 2.0 * cutoff.chi_lt(w / omega) * libm::cos(w * tau);
    }
    Ok(sum / (2.0 * beta))
}

/// `∫_a^b u(s) ds` in closed form.
pub fn u_integral(a: f64, b: f64, beta: f64, omega: f64, cutoff: Cutoff) -> Result<f64> {
    let radius = cutoff.support_radius().ok_or_else(|| {
        Error::InvalidParameter("u_integral needs a compactly supported cutoff".to_string())
    })?;
    let step = PI / beta;
    let nmax = libm::ceil(radius * omega / step) as i64;
    let mut sum = cutoff.chi_lt(0.0) * (b - a);
    for n in 1..=nmax {
        let w = n as f64 * step;
        sum += 2.0 * cutoff.chi_lt(w / omega) * (libm::sin(w * b) - libm::sin(w * a)) / w;
    }
    Ok(sum / (2.0 * beta))
}

/// `a(τ) - (u * a)(τ)` for `a(τ) = bC(τ, 0)` and `τ ∈ (-β, β]`, namely
/// `-sgn(τ) ∫_{I(τ)} u` with `I(τ) = [-β, τ-β] ∪ [τ, β]` for `τ > 0` and
/// `[-β, τ] ∪ [β+τ, β]` otherwise.
pub fn flat_band_uv(tau: f64, beta: f64, omega: f64, cutoff: Cutoff) -> Result<f64> {
    if tau > 0.0 {
        let part = u_integral(-beta, tau - beta, beta, omega, cutoff)?
            + u_integral(tau, beta, beta, omega, cutoff)?;
        Ok(-part)
    } else {
        let part = u_integral(-beta, tau, beta, omega, cutoff)?
            + u_integral(beta + tau, beta, beta, omega, cutoff)?;
        Ok(part)
    }
}

/// `4 sup_τ |u(τ)| (1 + Ω|τ|)³ / Ω` over a grid of `samples` points in
/// `[0, β]` (`u` is even).
pub fn calibrate_k(beta: f64, omega: f64, cutoff: Cutoff, samples: usize) -> Result<f64> {
    let mut best = 0.0f64;
    for i in 0..=samples {
        let tau = beta * i as f64 / samples as f64;
        let u = u_kernel(tau, beta, omega, cutoff)?;
        let scaled = libm::fabs(u) * libm::pow(1.0 + omega * tau, 3.0);
        best = best.max(scaled);
    }
    Ok(4.0 * best / omega)
}

/// `Σ_x |L^{-d} Σ_p f(p) e^{ip·x}|`, the `ℓ¹` norm of an inverse transform.
pub fn inverse_transform_l1(
    model: &LatticeModel,
    f: impl Fn(&crate::covariance::Mode) -> f64,
) -> f64 {
    let coeffs: Vec<f64> = model.modes().iter().map(&f).collect();
    model
        .sites()
        .iter()
        .map(|x| {
            let v: C64 = model
                .modes()
                .iter()
                .zip(&coeffs)
                .map(|(m, &c)| model.phase(&m.k, x) * c)
                .sum::<C64>()
                * model.weight();
            v.norm()
        })
        .sum()
}

/// `‖g‖₁` for `g` the inverse transform of `h`.
pub fn g_l1(model: &LatticeModel) -> f64 {
    inverse_transform_l1(model, |m| m.h)
}

/// `‖F‖₁` for `F` the inverse transform of `E`.
pub fn f_l1(model: &LatticeModel) -> f64 {
    inverse_transform_l1(model, |m| m.energy)
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Refuses shell scalings resolved by fewer than four momenta.
pub fn check_shell_resolution(model: &LatticeModel) -> Result<()> {
    let count = model.support_size();
    if count < 4 {
        return Err(Error::LatticeTooCoarse(count));
    }
    Ok(())
}

/// Closed form of `∫_{-β}^{β} |bC(τ, E)| dτ = 2 tanh(βE/2)/E`.
pub fn flat_band_decay(energy: f64, beta: f64) -> f64 {
    if energy == 0.0 {
        return beta;
    }
    2.0 * libm::tanh(beta * energy / 2.0) / energy
}
