//! Finite-difference consistency checks for field derivatives. Used by the
//! test suites and available to callers that construct fields by hand.

use super::{fd_step_grad, fd_step_hess, ScalarField, TimeScalarField};
use crate::error::Result;
use crate::linalg::{self, Mat};
use crate::scalar::{lit, Scalar};

/// Worst relative deviation between the analytic gradient and a central
/// difference of `eval` over the given points.
pub fn gradient_consistency<T: Scalar>(field: &ScalarField<T>, points: &[Vec<T>]) -> Result<T> {
    let n = field.dim();
    let mut worst = T::zero();
    let mut fd = vec![T::zero(); n];
    for x in points {
        let g = field.grad(x)?;
        let h = fd_step_grad(x);
        let mut xs = x.clone();
        for i in 0..n {
            xs[i] = x[i] + h;
            let fp = field.eval(&xs);
            xs[i] = x[i] - h;
            let fm = field.eval(&xs);
            xs[i] = x[i];
            fd[i] = (fp - fm) / (h + h);
        }
        let diff = linalg::norm(&linalg::sub(&fd, &g));
        let rel = diff / (T::one() + linalg::norm(&g));
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}

/// Worst relative deviation between the analytic Hessian and a central
/// difference of the analytic gradient.
pub fn hessian_consistency<T: Scalar>(field: &ScalarField<T>, points: &[Vec<T>]) -> Result<T> {
    let n = field.dim();
    let mut worst = T::zero();
    for x in points {
        let hess = field.hess(x)?;
        let step = fd_step_hess(x);
        let mut fd = Mat::zeros(n, n);
        let mut xs = x.clone();
        for j in 0..n {
            xs[j] = x[j] + step;
            let gp = field.grad(&xs)?;
            xs[j] = x[j] - step;
            let gm = field.grad(&xs)?;
            xs[j] = x[j];
            for i in 0..n {
                fd[(i, j)] = (gp[i] - gm[i]) / (step + step);
            }
        }
        let mut diff = T::zero();
        let mut scale = T::one();
        for i in 0..n {
            for j in 0..n {
                diff = diff.max((fd[(i, j)] - hess[(i, j)]).abs());
                scale = scale.max(hess[(i, j)].abs());
            }
        }
        let rel = diff / scale;
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}

/// Symmetry defect of the Hessian (largest `|H_ij - H_ji|`).
pub fn hessian_symmetry<T: Scalar>(field: &ScalarField<T>, points: &[Vec<T>]) -> Result<T> {
    let mut worst = T::zero();
    for x in points {
        let h = field.hess(x)?;
        for i in 0..field.dim() {
            for j in (i + 1)..field.dim() {
                worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
            }
        }
    }
    Ok(worst)
}

/// Worst relative deviation of analytic `grad_x` and `dt` of a time field
/// against central differences, over points and times.
pub fn time_field_consistency<T: Scalar>(
    field: &TimeScalarField<T>,
    points: &[Vec<T>],
    times: &[T],
) -> Result<T> {
    let n = field.dim();
    let mut worst = T::zero();
    let mut fd = vec![T::zero(); n];
    for x in points {
        for &t in times {
            let g = field.grad_x(x, t)?;
            let h = fd_step_grad(x);
            let mut xs = x.clone();
            for i in 0..n {
                xs[i] = x[i] + h;
                let fp = field.eval(&xs, t);
                xs[i] = x[i] - h;
                let fm = field.eval(&xs, t);
                xs[i] = x[i];
                fd[i] = (fp - fm) / (h + h);
            }
            let rel = linalg::norm(&linalg::sub(&fd, &g)) / (T::one() + linalg::norm(&g));
            worst = worst.max(rel);

            let ht = lit::<T>(1e-6) * (T::one() + t.abs());
            let dt_fd = (field.eval(x, t + ht) - field.eval(x, t - ht)) / (ht + ht);
            let dt = field.dt(x, t)?;
            worst = worst.max((dt_fd - dt).abs() / (T::one() + dt.abs()));
        }
    }
    Ok(worst)
}

/// Smallest value of `V - lower_bound` over the sampled points and times
/// (negative means the declared bound is violated).
pub fn lower_bound_margin<T: Scalar>(field: &TimeScalarField<T>, points: &[Vec<T>], times: &[T]) -> T {
    let mut margin = T::infinity();
    for x in points {
        for &t in times {
            margin = margin.min(field.eval(x, t) - field.lower_bound());
        }
    }
    margin
}
