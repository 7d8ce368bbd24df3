use serde::Serialize;

use super::Matrix;
use crate::error::{Error, Result};

/// Central-difference step.
pub const FD_EPS: f64 = 1e-5;

/// Tolerance every analytic gradient in this crate is held to.
pub const GRAD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_index: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

#[inline]
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares `analytic_grad` against central finite differences of `f` around `theta`.
pub fn grad_check<F>(mut f: F, analytic_grad: &Matrix, theta: &Matrix) -> Result<GradCheckReport>
where
    F: FnMut(&Matrix) -> f64,
{
    if analytic_grad.shape() != theta.shape() {
        return Err(Error::shape("grad_check", analytic_grad.shape(), theta.shape()));
    }
    let base = f(theta);
    if !base.is_finite() {
        return Err(Error::NonFiniteFunctionValue {
            context: "theta".into(),
        });
    }
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_index: (0, 0),
        analytic: analytic_grad.as_slice().first().copied().unwrap_or(0.0),
        numeric: 0.0,
    };
    let mut probe = theta.clone();
    for i in 0..theta.rows() {
        for j in 0..theta.cols() {
            let original = theta.get(i, j);
            probe.set(i, j, original + FD_EPS);
            let plus = f(&probe);
            probe.set(i, j, original - FD_EPS);
            let minus = f(&probe);
            probe.set(i, j, original);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFiniteFunctionValue {
                    context: format!("perturbation of ({i}, {j})"),
                });
            }
            let numeric = (plus - minus) / (2.0 * FD_EPS);
            let analytic = analytic_grad.get(i, j);
            let err = relative_error(analytic, numeric);
            if err > report.max_rel_err || (i, j) == (0, 0) {
                report = GradCheckReport {
                    max_rel_err: err.max(report.max_rel_err),
                    worst_index: (i, j),
                    analytic,
                    numeric,
                };
            }
        }
    }
    Ok(report)
}
