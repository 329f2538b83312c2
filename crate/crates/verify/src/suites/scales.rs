use chronodet_core::covariance::Scaling;
use chronodet_core::detbound::{CovarianceKind, CovarianceMatrixSpec, PointSampler};
use chronodet_core::quadrature::PanelDoubling;
use chronodet_core::scales::{
    calibrate_k, check_shell_resolution, decay_constant, f_l1, fit_slope, g_l1, gram_constant_ir,
    gram_ir_rhs, Cutoff, KernelKind, ScaleSplit,
};
use chronodet_core::Error;

use rayon::prelude::*;

use super::bounds::par_bound;
use super::{log_slope, model, SuiteError};
use crate::config::SuiteConfig;
use crate::report::Check;

const ADDITIVITY_TOL: f64 = 1e-12;
const JUMP_TOL: f64 = 1e-9;
const IR_TAIL_TOL: f64 = 1e-10;
const K_SAMPLES: usize = 20_000;
// |C_>| has kinks at every sign change, so panel doubling converges slowly
const UV_QUADRATURE: PanelDoubling = PanelDoubling {
    order: 8,
    rel_tol: 1e-4,
    min_level: 4,
    max_level: 16,
};

pub(crate) fn uv_split(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let m = model(&cfg.model, cfg.l, cfg.scale_beta)?;
    let beta = m.beta();
    let sites = m.sites();
    let mut checks = Vec::new();
    let mut pointwise = Vec::new();
    for &omega in &cfg.uv_omegas {
        let split = ScaleSplit::strict(m.clone(), omega)?;
        let param = format!("model={} L={} beta={beta} Omega={omega}", cfg.model, cfg.l);
        let mut worst = 0.0f64;
        for i in 0..40 {
            let tau = -beta + 2.0 * beta * (i as f64 + 0.5) / 40.0;
            for x in &sites {
                let sum = split.ir(tau, x) + split.uv(tau, x);
                worst = worst.max((sum - m.covariance(tau, x)).norm());
            }
        }
        checks.push(Check::upper(
            "uv-split",
            "additivity",
            &param,
            worst,
            ADDITIVITY_TOL,
            0.0,
        ));

        let above = 1e-300;
        let jump_uv = split.uv(above, &[0; 3]) - split.uv(0.0, &[0; 3]);
        let jump_full = m.covariance(above, &[0; 3]) - m.covariance(0.0, &[0; 3]);
        checks.push(Check::upper(
            "uv-split",
            "jump-carried-by-uv",
            &param,
            (jump_uv - jump_full).norm(),
            JUMP_TOL,
            0.0,
        ));

        let value = split.uv(beta / 2.0, &[0; 3]).norm();
        checks.push(Check::diagnostic(
            "uv-split",
            "uv-at-half-beta",
            &param,
            value,
        ));
        pointwise.push(value);
    }
    let (first, last) = (pointwise[0], pointwise[pointwise.len() - 1]);
    checks.push(Check::upper(
        "uv-split",
        "uv-vanishes-pointwise",
        format!(
            "Omega={}..{}",
            cfg.uv_omegas[0],
            cfg.uv_omegas[cfg.uv_omegas.len() - 1]
        ),
        last,
        first,
        0.0,
    ));

    let omega = cfg.uv_omegas[0];
    let split = ScaleSplit::strict(m.clone(), omega)?;
    let spec = CovarianceMatrixSpec::new(
        "fermion-uv",
        CovarianceKind::FermionUv(split),
        PointSampler::for_model(&m),
    );
    let (observed, bound) = par_bound(&spec, cfg.n_max, cfg.trials, cfg.seed)?;
    checks.push(Check::upper(
        "uv-split",
        "uv-determinant-bound",
        format!(
            "model={} L={} beta={beta} Omega={omega} n=1..{} trials={}",
            cfg.model, cfg.l, cfg.n_max, cfg.trials
        ),
        observed,
        bound,
        cfg.slack,
    ));
    Ok(checks)
}

pub(crate) fn gram_ir(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let m = model(&cfg.model, cfg.l, cfg.scale_beta)?;
    let cutoff = Cutoff::default();
    let Cutoff::SmoothDecay { kappa, alpha } = cutoff else {
        unreachable!("the default cutoff is the smooth one")
    };
    let mut checks = Vec::new();
    let mut values = Vec::with_capacity(cfg.omegas.len());
    for &omega in &cfg.omegas {
        let omega_max = cutoff.default_omega_max(omega, IR_TAIL_TOL);
        let gamma = gram_constant_ir(&m, cutoff, omega, omega_max)?;
        let param = format!(
            "model={} L={} beta={} Omega={omega}",
            cfg.model,
            cfg.l,
            m.beta()
        );
        checks.push(Check::upper(
            "gram-ir",
            "gamma-sq-vs-rhs",
            &param,
            gamma.upper(),
            gram_ir_rhs(&m, kappa, alpha, omega),
            cfg.slack,
        ));
        values.push(gamma.upper());
    }
    let logs: Vec<f64> = cfg.omegas.iter().map(|w| w.ln()).collect();
    checks.push(Check::upper(
        "gram-ir",
        "gamma-sq-log-slope",
        format!("model={} L={} beta={}", cfg.model, cfg.l, m.beta()),
        fit_slope(&logs, &values),
        2.0 * m.h_l1() * 1.2,
        0.0,
    ));
    Ok(checks)
}

pub(crate) fn decay(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let quadrature = PanelDoubling::default();
    let mut checks = Vec::new();

    let m = model(&cfg.model, cfg.l, cfg.scale_beta)?;
    let beta = m.beta();
    let e_sup = m.energy_sup();
    if let Some(&omega) = cfg
        .uv_omegas
        .iter()
        .chain(&cfg.uv_bound_omegas)
        .find(|&&w| w <= e_sup)
    {
        return Err(Error::Hypothesis(format!(
            "Omega = {omega} does not exceed sup |E| = {e_sup}"
        ))
        .into());
    }
    let cutoff = Cutoff::StrictBump;
    let base = format!("model={} L={} beta={beta}", cfg.model, cfg.l);
    let mut k = 0.0f64;
    for &omega in cfg.uv_omegas.iter().chain(&cfg.uv_bound_omegas) {
        let k_omega = calibrate_k(beta, omega, cutoff, K_SAMPLES)?;
        checks.push(Check::diagnostic(
            "decay",
            "u-kernel-constant",
            format!("{base} Omega={omega}"),
            k_omega,
        ));
        k = k.max(k_omega);
    }
    let (g1, f1) = (g_l1(&m), f_l1(&m));
    checks.push(Check::diagnostic("decay", "calibrated-K", &base, k));
    checks.push(Check::diagnostic("decay", "F-l1", &base, f1));
    let sweep: Vec<f64> = cfg
        .uv_omegas
        .iter()
        .chain(&cfg.uv_bound_omegas)
        .copied()
        .collect();
    let values = sweep
        .par_iter()
        .map(|&omega| -> Result<f64, SuiteError> {
            let split = ScaleSplit::strict(m.clone(), omega)?;
            Ok(decay_constant(&m, Some(&split), KernelKind::Uv, 0, 0, &UV_QUADRATURE)?.value)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut alphas = Vec::with_capacity(cfg.uv_omegas.len());
    for (&omega, &alpha) in sweep.iter().zip(&values) {
        let param = format!("{base} Omega={omega}");
        checks.push(Check::diagnostic("decay", "alpha-uv", &param, alpha));
        if k * f1 < omega / 4.0 {
            checks.push(Check::upper(
                "decay",
                "alpha-uv-bound",
                &param,
                alpha,
                2.0 * k / omega * g1,
                cfg.slack,
            ));
        }
        if cfg.uv_omegas.contains(&omega) {
            alphas.push((omega, alpha));
        }
    }
    for pair in alphas.windows(2) {
        let ((w0, a0), (w1, a1)) = (pair[0], pair[1]);
        if w1 == 2.0 * w0 && w0 >= 4.0 * e_sup {
            checks.push(Check::within(
                "decay",
                "alpha-uv-halving",
                format!("{base} Omega={w0}->{w1}"),
                a1 / a0,
                0.3,
                0.7,
            ));
        }
    }

    let pairs = cfg
        .betas
        .par_iter()
        .map(|&b| -> Result<(f64, f64), SuiteError> {
            let metal = model(&cfg.model, cfg.l, b)?;
            let insulator = model("insulator1d", cfg.l, b)?;
            Ok((
                decay_constant(&metal, None, KernelKind::Full, 0, 0, &quadrature)?.value,
                decay_constant(&insulator, None, KernelKind::Full, 0, 0, &quadrature)?.value,
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (full, gapped): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    for ((&b, a), g) in cfg.betas.iter().zip(&full).zip(&gapped) {
        checks.push(Check::diagnostic(
            "decay",
            "alpha-full",
            format!("model={} L={} beta={b}", cfg.model, cfg.l),
            *a,
        ));
        checks.push(Check::diagnostic(
            "decay",
            "alpha-full",
            format!("model=insulator1d L={} beta={b}", cfg.l),
            *g,
        ));
    }
    let span = format!("beta={}..{}", cfg.betas[0], cfg.betas[cfg.betas.len() - 1]);
    if cfg.model != "insulator1d" {
        let d = m.d() as f64;
        checks.push(Check::upper(
            "decay",
            "alpha-beta-slope",
            format!("model={} L={} {span}", cfg.model, cfg.l),
            log_slope(&cfg.betas, &full),
            d + 1.0 + 0.2,
            0.0,
        ));
    }
    checks.push(Check::upper(
        "decay",
        "insulator-alpha-ratio",
        format!("model=insulator1d L={} {span}", cfg.l),
        gapped[gapped.len() - 1] / gapped[0],
        1.5,
        0.0,
    ));
    Ok(checks)
}

pub(crate) fn sector(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let quadrature = PanelDoubling::default();
    let base = model(&cfg.model, cfg.sector_l, cfg.sector_beta)?;
    let d = base.d() as f64;
    let mut checks = Vec::new();
    let mut alphas = Vec::with_capacity(cfg.epsilons.len());
    for &eps in &cfg.epsilons {
        let m = base.clone().with_scaling(Scaling::Shell { eps })?;
        check_shell_resolution(&m)?;
        let param = format!(
            "model={} L={} beta={} eps={eps}",
            cfg.model, cfg.sector_l, cfg.sector_beta
        );
        checks.push(Check::diagnostic(
            "sector",
            "support-size",
            &param,
            m.support_size() as f64,
        ));
        let a = decay_constant(&m, None, KernelKind::Full, 0, 0, &quadrature)?.value;
        checks.push(Check::diagnostic("sector", "alpha-shell", &param, a));
        alphas.push(a);
    }
    checks.push(Check::lower(
        "sector",
        "alpha-eps-slope",
        format!(
            "model={} L={} beta={}",
            cfg.model, cfg.sector_l, cfg.sector_beta
        ),
        log_slope(&cfg.epsilons, &alphas),
        -(d + 1.0) / 2.0 - 0.5,
    ));
    Ok(checks)
}
