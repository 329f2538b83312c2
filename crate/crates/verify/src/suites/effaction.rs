use chronodet_core::covariance::{fkt_limit_covariance, SpaceTimePoint};
use chronodet_core::effaction::{
    effective_action as convolve, effective_action_exact, effective_action_oracle, evaluate_series,
    exhaustion_degree, konv_remainder_check, matrix_decay_constant, taylor_coefficients,
    Interaction, KonvConstants,
};
use chronodet_core::linalg::CMatrix;
use chronodet_core::scales::ScaleSplit;
use chronodet_core::C64;

use super::{model, SuiteError};
use crate::config::SuiteConfig;
use crate::report::Check;

const SEMIGROUP_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-12;
const EXHAUSTION_ORDER: usize = 8;
const SPLIT_OMEGA: f64 = 4.0;

/// A two-site instance of the convergence bound.
#[derive(Debug, Clone)]
pub struct KonvInstance {
    pub covariance: CMatrix,
    pub constants: KonvConstants,
    pub vertex: Interaction,
}

impl KonvInstance {
    pub fn new(covariance: CMatrix, delta: f64, h: f64, coupling: f64) -> Result<Self, SuiteError> {
        let constants = KonvConstants {
            h,
            delta,
            alpha: matrix_decay_constant(&covariance),
        };
        let vertex = Interaction::density_density(covariance.size(), coupling)?;
        Ok(Self {
            covariance,
            constants,
            vertex,
        })
    }

    /// The coupling at which `ω ‖λV‖_{h'}` reaches 1.
    pub fn radius(&self) -> f64 {
        1.0 / (self.constants.omega() * self.vertex.kernel_norm(self.constants.h_prime()))
    }
}

fn points(beta: f64) -> [SpaceTimePoint; 2] {
    [
        SpaceTimePoint::new(0.25 * beta, [0; 3]),
        SpaceTimePoint::new(0.6 * beta, [1, 0, 0]),
    ]
}

fn matrix(
    points: &[SpaceTimePoint; 2],
    f: impl Fn(&SpaceTimePoint, &SpaceTimePoint) -> C64,
) -> CMatrix {
    CMatrix::from_fn(2, |a, b| f(&points[a], &points[b]))
}

pub(crate) fn effective_action(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let m = model(&cfg.model, cfg.l, cfg.beta)?;
    let pts = points(cfg.beta);
    let cov = matrix(&pts, |x, y| m.covariance_position(x, y));
    let instance = KonvInstance::new(cov.clone(), 2.0 * m.h_l1().sqrt(), cfg.h, cfg.coupling)?;
    let KonvInstance {
        constants, vertex, ..
    } = &instance;
    let radius = instance.radius();
    let base = format!(
        "model={} L={} beta={} sites=2 U={}",
        cfg.model, cfg.l, cfg.beta, cfg.coupling
    );
    let mut checks = vec![
        Check::diagnostic("effective-action", "delta", &base, constants.delta),
        Check::diagnostic("effective-action", "alpha", &base, constants.alpha),
        Check::diagnostic("effective-action", "omega", &base, constants.omega()),
        Check::diagnostic("effective-action", "lambda-radius", &base, radius),
    ];

    let lambdas: Vec<f64> = cfg.lambda_fractions.iter().map(|f| f * radius).collect();
    let mut remainders = Vec::new();
    for &order in &cfg.orders {
        let report = konv_remainder_check(vertex, &cov, *constants, order, &lambdas, |l| {
            effective_action_exact(vertex, &cov, l)
        })?;
        for point in &report {
            checks.push(Check::upper(
                "effective-action",
                "remainder-bound",
                format!("{base} h={} P={order} lambda={}", cfg.h, point.lambda),
                point.remainder,
                point.bound,
                cfg.slack,
            ));
        }
        remainders.push((order, report));
    }
    for pair in remainders.windows(2) {
        let (p, ref lo) = pair[0];
        let (q, ref hi) = pair[1];
        if q != p + 1 {
            continue;
        }
        for (a, b) in lo.iter().zip(hi) {
            if a.remainder > 0.0 && b.remainder > 0.0 {
                let param = format!("{base} P={p}->{q} lambda={}", a.lambda);
                checks.push(Check::diagnostic(
                    "effective-action",
                    "remainder-ratio",
                    &param,
                    b.remainder / a.remainder,
                ));
                checks.push(Check::diagnostic(
                    "effective-action",
                    "omega-norm",
                    &param,
                    a.ratio,
                ));
            }
        }
    }

    let mid = lambdas[lambdas.len() / 2];
    let fast = effective_action_exact(vertex, &cov, mid)?;
    let slow = effective_action_oracle(&vertex.scale(mid), &cov)?;
    checks.push(Check::upper(
        "effective-action",
        "oracle-agreement",
        format!("{base} lambda={mid}"),
        (fast.field() - slow.field()).norm(),
        ORACLE_TOL,
        0.0,
    ));

    checks.extend(exhaustion(cfg)?);

    let split = ScaleSplit::strict(m.clone(), SPLIT_OMEGA)?;
    let ir = matrix(&pts, |x, y| split.ir(x.tau - y.tau, &offset(x, y)));
    let uv = matrix(&pts, |x, y| split.uv(x.tau - y.tau, &offset(x, y)));
    let sum = CMatrix::from_fn(2, |a, b| ir[(a, b)] + uv[(a, b)]);
    let v = vertex.scale(mid);
    let direct = convolve(&v, &sum)?;
    let iterated = convolve(&convolve(&v, &uv)?, &ir)?;
    checks.push(Check::upper(
        "effective-action",
        "semigroup",
        format!("{base} Omega={SPLIT_OMEGA} lambda={mid}"),
        (direct.field() - iterated.field()).norm(),
        SEMIGROUP_TOL,
        0.0,
    ));
    Ok(checks)
}

fn offset(x: &SpaceTimePoint, y: &SpaceTimePoint) -> [i64; 3] {
    [x.x[0] - y.x[0], x.x[1] - y.x[1], x.x[2] - y.x[2]]
}

/// Zero-temperature covariance on two ordered times: strictly triangular,
/// so every vacuum contribution vanishes and `W` is a polynomial in `λ`.
fn exhaustion(cfg: &SuiteConfig) -> Result<Vec<Check>, SuiteError> {
    let times = [1.0, 0.5];
    let cov = CMatrix::from_fn(2, |a, b| {
        C64::new(fkt_limit_covariance(times[a] - times[b]), 0.0)
    });
    let instance = KonvInstance::new(cov.clone(), 2.0, cfg.h, cfg.coupling)?;
    let coeffs = taylor_coefficients(&instance.vertex, &cov, EXHAUSTION_ORDER)?;
    let param = format!("times=1,0.5 beta=inf U={}", cfg.coupling);
    let Some(degree) = exhaustion_degree(&coeffs) else {
        return Ok(vec![Check::upper(
            "effective-action",
            "exhaustion-degree",
            &param,
            f64::INFINITY,
            EXHAUSTION_ORDER as f64,
            0.0,
        )]);
    };
    let lambda = 0.5 * instance.radius();
    let polynomial = evaluate_series(&coeffs, lambda)?;
    let logarithm = effective_action_exact(&instance.vertex, &cov, lambda)?;
    let report = konv_remainder_check(
        &instance.vertex,
        &cov,
        instance.constants,
        degree,
        &[lambda],
        |l| evaluate_series(&coeffs, l),
    )?;
    let param = format!("{param} P={degree} lambda={lambda}");
    Ok(vec![
        Check::diagnostic(
            "effective-action",
            "exhaustion-degree",
            &param,
            degree as f64,
        ),
        Check::upper(
            "effective-action",
            "polynomial-vs-logarithm",
            &param,
            (polynomial.field() - logarithm.field()).norm(),
            ORACLE_TOL,
            0.0,
        ),
        Check::upper(
            "effective-action",
            "exhausted-remainder",
            &param,
            report[0].remainder,
            0.0,
            0.0,
        ),
    ])
}
