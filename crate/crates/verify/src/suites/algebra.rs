use chronodet_core::detbound::masked_gram_sample;
use chronodet_core::grassmann::{car_defect, contract_apply, wedge_apply, Multivector};
use chronodet_core::linalg::norm2;
use chronodet_core::rng::{complex_gaussian, complex_gaussian_vec, derive_seed, trial_rng};
use chronodet_core::C64;
use rand::Rng;

use super::{par_max_n, SuiteError};
use crate::config::SuiteConfig;
use crate::report::Check;

const CAR_TOL: f64 = 1e-12;
const CHRONO_TOL: f64 = 1e-10;

fn random_multivector<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
) -> chronodet_core::Result<Multivector> {
    let mut m = Multivector::zero(dim)?;
    for mask in 0..(1u32 << dim) {
        m.add_term(mask, complex_gaussian(rng));
    }
    Ok(m)
}

/// Relative defects of the three anticommutation relations, of
/// adjointness, and the ratio `‖u op m‖ / (‖u‖ ‖m‖)` for both operators.
fn car_trial(seed: u64, index: u64) -> chronodet_core::Result<[f64; 5]> {
    let mut rng = trial_rng(seed, index);
    let dim = rng.random_range(1..=6);
    let alpha = complex_gaussian_vec(&mut rng, dim);
    let beta = complex_gaussian_vec(&mut rng, dim);
    let u = complex_gaussian_vec(&mut rng, dim);
    let v = complex_gaussian_vec(&mut rng, dim);
    let m = random_multivector(&mut rng, dim)?;
    let b = random_multivector(&mut rng, dim)?;
    let mn = m.norm();

    let mixed = car_defect(&alpha, &u, &m)? / (norm2(&alpha) * norm2(&u) * mn);
    let wedges = &wedge_apply(&alpha, &wedge_apply(&beta, &m)?)?
        + &wedge_apply(&beta, &wedge_apply(&alpha, &m)?)?;
    let wedges = wedges.norm() / (norm2(&alpha) * norm2(&beta) * mn);
    let contractions = &contract_apply(&u, &contract_apply(&v, &m)?)?
        + &contract_apply(&v, &contract_apply(&u, &m)?)?;
    let contractions = contractions.norm() / (norm2(&u) * norm2(&v) * mn);

    let conj: Vec<C64> = u.iter().map(|z| z.conj()).collect();
    let lhs = wedge_apply(&u, &m)?.inner(&b);
    let rhs = m.inner(&contract_apply(&conj, &b)?);
    let adjoint = (lhs - rhs).norm() / (norm2(&u) * mn * b.norm());

    let ratio = wedge_apply(&u, &m)?
        .norm()
        .max(contract_apply(&u, &m)?.norm())
        / (norm2(&u) * mn);
    Ok([mixed, wedges, contractions, adjoint, ratio])
}

pub(crate) fn car(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let seed = derive_seed(cfg.seed, "car");
    let [mixed, wedges, contractions, adjoint, ratio] =
        par_max_n(cfg.trials as u64, |i| car_trial(seed, i))?;
    let param = format!("trials={} N<=6", cfg.trials);
    Ok(vec![
        Check::upper(
            "car",
            "wedge-contract-anticommutator",
            &param,
            mixed,
            CAR_TOL,
            0.0,
        ),
        Check::upper(
            "car",
            "wedge-wedge-anticommutator",
            &param,
            wedges,
            CAR_TOL,
            0.0,
        ),
        Check::upper(
            "car",
            "contract-contract-anticommutator",
            &param,
            contractions,
            CAR_TOL,
            0.0,
        ),
        Check::upper("car", "adjointness", &param, adjoint, CAR_TOL, 0.0),
        Check::upper("car", "operator-norm", &param, ratio, 1.0, CAR_TOL),
    ])
}

/// Relative mismatch between the chronological-product and LU
/// determinants, and `|det| / Π ‖v_k‖ ‖w_k‖`, for strict and weak masks.
fn chrono_trial(seed: u64, index: u64) -> chronodet_core::Result<[f64; 4]> {
    let mut rng = trial_rng(seed, index);
    let n = rng.random_range(1..=5);
    let dim = rng.random_range(n..=8);
    let mut out = [0.0; 4];
    for (slot, strict) in [true, false].into_iter().enumerate() {
        let s = masked_gram_sample(&mut rng, n, dim, strict)?;
        let diff = (s.lu - s.chrono).norm();
        let scale = s.lu.norm().max(s.scale);
        out[slot] = if diff == 0.0 { 0.0 } else { diff / scale };
        out[2 + slot] = s.lu.norm() / s.norm_product;
    }
    Ok(out)
}

pub(crate) fn chrono_det(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let seed = derive_seed(cfg.seed, "chrono-det");
    let [strict, weak, strict_bound, weak_bound] =
        par_max_n(cfg.trials as u64, |i| chrono_trial(seed, i))?;
    let param = format!("trials={} n<=5 N<=8", cfg.trials);
    Ok(vec![
        Check::upper(
            "chrono-det",
            "chrono-vs-lu-strict",
            &param,
            strict,
            CHRONO_TOL,
            0.0,
        ),
        Check::upper(
            "chrono-det",
            "chrono-vs-lu-weak",
            &param,
            weak,
            CHRONO_TOL,
            0.0,
        ),
        Check::upper(
            "chrono-det",
            "gram-mask-bound-strict",
            &param,
            strict_bound,
            1.0,
            cfg.slack,
        ),
        Check::upper(
            "chrono-det",
            "gram-mask-bound-weak",
            &param,
            weak_bound,
            1.0,
            cfg.slack,
        ),
    ])
}
