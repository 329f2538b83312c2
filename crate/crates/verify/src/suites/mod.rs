use chronodet_core::covariance::LatticeModel;
use chronodet_core::scales::fit_slope;
use rayon::prelude::*;

use crate::config::SuiteConfig;
use crate::report::{Check, Report};
use crate::SuiteError;

mod algebra;
mod bounds;
mod effaction;
mod kernels;
mod scales;

pub use effaction::KonvInstance;

type Suite = fn(&SuiteConfig) -> Result<Vec<Check>, SuiteError>;

const ORDER: [(&str, Suite); 10] = [
    ("car", algebra::car),
    ("chrono-det", algebra::chrono_det),
    ("det-bound", bounds::det_bound),
    ("covariance", kernels::covariance),
    ("gram-rep", kernels::gram_rep),
    ("uv-split", scales::uv_split),
    ("gram-ir", scales::gram_ir),
    ("decay", scales::decay),
    ("sector", scales::sector),
    ("effective-action", effaction::effective_action),
];

/// Runs the configured suite (or all of them, in a fixed order) on a rayon
/// pool capped at `config.threads`.
pub fn run_suite(config: &SuiteConfig) -> Result<Report, SuiteError> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| SuiteError::Config(e.to_string()))?;
    let checks = pool.install(|| -> Result<Vec<Check>, SuiteError> {
        let mut checks = Vec::new();
        for (name, suite) in ORDER {
            if config.suite == "all" || config.suite == name {
                checks.extend(suite(config)?);
            }
        }
        Ok(checks)
    })?;
    Ok(Report::new(config.clone(), checks))
}

/// Largest value of `f` over `0..count`, evaluated in parallel. The result
/// does not depend on the schedule.
pub(crate) fn par_max<F>(count: u64, f: F) -> Result<f64, SuiteError>
where
    F: Fn(u64) -> chronodet_core::Result<f64> + Sync + Send,
{
    let best = (0..count)
        .into_par_iter()
        .map(f)
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(best)
}

/// Componentwise maximum of `f` over `0..count`.
pub(crate) fn par_max_n<const K: usize, F>(count: u64, f: F) -> Result<[f64; K], SuiteError>
where
    F: Fn(u64) -> chronodet_core::Result<[f64; K]> + Sync + Send,
{
    let best = (0..count).into_par_iter().map(f).try_reduce(
        || [0.0; K],
        |a, b| {
            let mut out = a;
            for (o, v) in out.iter_mut().zip(b) {
                *o = o.max(v);
            }
            Ok(out)
        },
    )?;
    Ok(best)
}

pub(crate) fn model(name: &str, l: usize, beta: f64) -> Result<LatticeModel, SuiteError> {
    Ok(LatticeModel::by_name(name, l, beta)?)
}

pub(crate) fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_slope(&lx, &ly)
}
