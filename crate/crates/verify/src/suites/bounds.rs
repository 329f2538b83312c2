use chronodet_core::detbound::{
    check_points, det_trial, diagonal_witness, fermion_pieces, laplace_sum_check, CovarianceKind,
    CovarianceMatrixSpec, PointSampler, TrialKind,
};
use chronodet_core::linalg::{dot_hermitian, CMatrix};
use chronodet_core::rng::{derive_seed, sample_unit_sphere, trial_rng};

use super::{model, par_max, SuiteError};
use crate::config::SuiteConfig;
use crate::report::Check;

/// Largest `|det|^{1/(2n)}` over masked and interpolation trials for every
/// `n`, together with the spec's bound. Matches the sequential harness in
/// the core crate trial for trial.
pub(crate) fn par_bound(
    spec: &CovarianceMatrixSpec,
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64), SuiteError> {
    let bound = spec.bound(&check_points(spec, seed, 64))?;
    let mut observed = 0.0f64;
    for n in 1..=n_max {
        for kind in [TrialKind::Masked, TrialKind::Interp] {
            observed = observed.max(par_max(trials as u64, |i| {
                det_trial(spec, kind, n, seed, i)
            })?);
        }
    }
    Ok((observed, bound))
}

pub(crate) fn det_bound(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let m = model(&cfg.model, cfg.l, cfg.beta)?;
    let param = format!(
        "model={} L={} beta={} n=1..{} trials={}",
        cfg.model, cfg.l, cfg.beta, cfg.n_max, cfg.trials
    );
    let mut checks = Vec::new();

    let full = CovarianceMatrixSpec::fermion_full(m.clone());
    let (observed, bound) = par_bound(&full, cfg.n_max, cfg.trials, cfg.seed)?;
    checks.push(Check::upper(
        "det-bound",
        "fermion-full",
        &param,
        observed,
        bound,
        cfg.slack,
    ));
    let mut witness = 0.0f64;
    for n in 1..=cfg.n_max {
        witness = witness.max(diagonal_witness(&full, n)?);
    }
    let lower = m.h_l1().sqrt() / std::f64::consts::SQRT_2 - 1e-6;
    checks.push(Check::lower(
        "det-bound",
        "fermion-full-witness",
        &param,
        observed.max(witness),
        lower,
    ));

    let sampler = PointSampler::for_model(&m);
    let step = CovarianceMatrixSpec::new("step-u", CovarianceKind::StepU, sampler);
    let (observed, bound) = par_bound(&step, cfg.n_max, cfg.trials, cfg.seed)?;
    checks.push(Check::upper(
        "det-bound",
        "step-u",
        &param,
        observed,
        bound,
        cfg.slack,
    ));

    let sum = CovarianceMatrixSpec::new(
        "gram-sum",
        CovarianceKind::GramSum(fermion_pieces(&m)),
        sampler,
    );
    let (observed, bound) = par_bound(&sum, cfg.n_max, cfg.trials, cfg.seed)?;
    checks.push(Check::upper(
        "det-bound",
        "gram-sum",
        &param,
        observed,
        bound,
        cfg.slack,
    ));

    // two Gram matrices of unit vectors, each with constant 1
    let mut rng = trial_rng(derive_seed(cfg.seed, "laplace/matrices"), 0);
    let pieces: Vec<(CMatrix, f64)> = (0..2)
        .map(|_| {
            let vs: Vec<_> = (0..8).map(|_| sample_unit_sphere(&mut rng, 4)).collect();
            let ws: Vec<_> = (0..8).map(|_| sample_unit_sphere(&mut rng, 4)).collect();
            (
                CMatrix::from_fn(8, |i, j| dot_hermitian(&vs[i], &ws[j])),
                1.0,
            )
        })
        .collect();
    let laplace = laplace_sum_check(&pieces, cfg.n_max, cfg.trials, cfg.seed)?;
    checks.push(Check::upper(
        "det-bound",
        "laplace-sum",
        format!("pieces=2 size=8 n=1..{} trials={}", cfg.n_max, cfg.trials),
        laplace.observed,
        laplace.bound,
        cfg.slack,
    ));
    Ok(checks)
}
