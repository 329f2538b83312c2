use chronodet_core::covariance::{bare_covariance, matsubara_covariance, SpaceTimePoint};
use chronodet_core::detbound::PointSampler;
use chronodet_core::rng::{derive_seed, trial_rng};
use rand::Rng;
use rayon::prelude::*;

use super::{log_slope, model, par_max, SuiteError};
use crate::config::SuiteConfig;
use crate::report::Check;

const ANTIPERIODIC_TOL: f64 = 1e-14;
const SYMMETRY_TOL: f64 = 1e-12;
const ASSEMBLY_TOL: f64 = 1e-12;

pub(crate) fn covariance(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let beta = cfg.beta;
    let mut checks = Vec::new();

    let seed = derive_seed(cfg.seed, "covariance/antiperiodic");
    let anti = par_max(cfg.trials as u64, |i| {
        let mut rng = trial_rng(seed, i);
        let tau = -rng.random_range(0.0..beta);
        let energy = rng.random_range(-4.0..4.0);
        Ok((bare_covariance(tau + beta, energy, beta) + bare_covariance(tau, energy, beta)).abs())
    })?;
    checks.push(Check::upper(
        "covariance",
        "antiperiodicity",
        format!("beta={beta} trials={}", cfg.trials),
        anti,
        ANTIPERIODIC_TOL,
        0.0,
    ));

    let m = model(&cfg.model, cfg.l, beta)?;
    let sampler = PointSampler::for_model(&m);
    let param = format!("model={} L={} beta={beta}", cfg.model, cfg.l);
    let seed = derive_seed(cfg.seed, "covariance/symmetry");
    let sym = par_max(cfg.trials as u64, |i| {
        let mut rng = trial_rng(seed, i);
        let pts = sampler.sample(&mut rng, 2);
        let (x, y) = (pts[0], pts[1]);
        // (τ, x) ↔ (τ', x') with the spatial offset negated
        let xr = SpaceTimePoint::new(x.tau, y.x);
        let yr = SpaceTimePoint::new(y.tau, x.x);
        Ok((m.covariance_position(&x, &y) - m.covariance_position(&xr, &yr).conj()).norm())
    })?;
    checks.push(Check::upper(
        "covariance",
        "conjugate-symmetry",
        &param,
        sym,
        SYMMETRY_TOL,
        0.0,
    ));

    let at_zero = m.covariance(0.0, &[0; 3]).norm();
    let above_zero = m.covariance(1e-300, &[0; 3]).norm();
    checks.push(Check::lower(
        "covariance",
        "sup-at-coincidence",
        &param,
        at_zero.max(above_zero),
        m.h_l1() / 2.0,
    ));

    let (b, e, tau) = (2.0, 1.0, 0.7);
    let exact = bare_covariance(tau, e, b);
    let cutoffs: Vec<f64> = (5..=10)
        .map(|k| f64::from(1u32 << k) * std::f64::consts::PI / b)
        .collect();
    let mut errors = Vec::with_capacity(cutoffs.len());
    for &w in &cutoffs {
        let err = (matsubara_covariance(tau, e, b, w)? - exact).norm();
        checks.push(Check::diagnostic(
            "covariance",
            "matsubara-error",
            format!("omega_max={w}"),
            err,
        ));
        errors.push(err);
    }
    checks.push(Check::within(
        "covariance",
        "matsubara-slope",
        format!("beta={b} E={e} tau={tau}"),
        log_slope(&cutoffs, &errors),
        -1.3,
        -0.7,
    ));
    Ok(checks)
}

pub(crate) fn gram_rep(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let base = model(&cfg.model, cfg.l, cfg.beta)?;
    let (m, regularized) = match cfg.epsilon_reg {
        Some(eps) => (base.with_epsilon_reg(eps)?, eps > 0.0),
        None => base.auto_regularized(),
    };
    let param = format!(
        "model={} L={} beta={} epsilon-reg={}",
        cfg.model,
        cfg.l,
        cfg.beta,
        m.epsilon_reg()
    );
    let beta = cfg.beta;
    let sites = m.sites();
    let grid: Vec<(usize, usize)> = (0..20).flat_map(|i| (0..20).map(move |j| (i, j))).collect();
    let worst = grid
        .par_iter()
        .map(|&(i, j)| -> chronodet_core::Result<f64> {
            let mut best = 0.0f64;
            for x in &sites {
                let p = SpaceTimePoint::new(beta * i as f64 / 20.0, *x);
                let q = SpaceTimePoint::new(beta * j as f64 / 20.0, [0; 3]);
                let diff = (m.gram_assembly(&p, &q)? - m.covariance_position(&p, &q)).norm();
                best = best.max(diff);
            }
            Ok(best)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(vec![
        Check::diagnostic(
            "gram-rep",
            "regularized",
            &param,
            f64::from(u8::from(regularized)),
        ),
        Check::upper(
            "gram-rep",
            "assembly-vs-momentum-sum",
            &param,
            worst,
            ASSEMBLY_TOL,
            0.0,
        ),
    ])
}
