//! Evaluatable stochastic time-periodic Newtonian systems.
//!
//! A system is the first-order form
//!
//! ```text
//! dx = y dt,
//! dy = -[ M(x,y,t) y + grad_x V(x,t) + E(x,y,t) ] dt + Sigma(x,y,t) dB,
//! ```
//!
//! with friction `M` either `D^2 F(x)` for a scalar friction function `F`
//! ([`FrictionSpec::HessianOfF`]) or a general matrix field
//! ([`FrictionSpec::GeneralMatrix`]). Fields are immutable closures plus
//! declared bounds; evaluation is pure and thread-safe.

mod builtins;
pub mod check;

pub use builtins::{builtin, builtin_names, BuiltinParams, NoiseSpec};

use crate::error::{Error, Result, Witness};
use crate::linalg::{self, Mat};
use crate::lyapunov::Certificate;
use crate::scalar::{lit, lower_slice, Scalar};
use std::sync::Arc;

pub type EvalFn<T> = dyn Fn(&[T]) -> T + Send + Sync;
pub type GradFn<T> = dyn Fn(&[T], &mut [T]) -> Result<()> + Send + Sync;
pub type HessFn<T> = dyn Fn(&[T], &mut Mat<T>) -> Result<()> + Send + Sync;
/// `out = Hessian(x) * v` without forming the matrix.
pub type HessApplyFn<T> = dyn Fn(&[T], &[T], &mut [T]) -> Result<()> + Send + Sync;
pub type TimeEvalFn<T> = dyn Fn(&[T], T) -> T + Send + Sync;
pub type TimeGradFn<T> = dyn Fn(&[T], T, &mut [T]) -> Result<()> + Send + Sync;
pub type TimeDtFn<T> = dyn Fn(&[T], T) -> Result<T> + Send + Sync;
pub type VectorEvalFn<T> = dyn Fn(&[T], &[T], T, &mut [T]) -> Result<()> + Send + Sync;
pub type MatrixEvalFn<T> = dyn Fn(&[T], &[T], T, &mut Mat<T>) -> Result<()> + Send + Sync;
pub type MatrixApplyFn<T> = dyn Fn(&[T], &[T], T, &[T], &mut [T]) -> Result<()> + Send + Sync;

fn dim_check(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

/// Central-difference step for gradients at `x`.
#[inline]
pub fn fd_step_grad<T: Scalar>(x: &[T]) -> T {
    lit::<T>(1e-5) * (T::one() + linalg::norm(x))
}

/// Central-difference step for Hessians at `x`.
#[inline]
pub fn fd_step_hess<T: Scalar>(x: &[T]) -> T {
    lit::<T>(1e-4) * (T::one() + linalg::norm(x))
}

/// Scalar function of a point with optional analytic derivatives.
#[derive(Clone)]
pub struct ScalarField<T> {
    dim: usize,
    eval: Arc<EvalFn<T>>,
    grad: Option<Arc<GradFn<T>>>,
    hess: Option<Arc<HessFn<T>>>,
    hess_apply: Option<Arc<HessApplyFn<T>>>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(dim: usize, eval: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        ScalarField { dim, eval: Arc::new(eval), grad: None, hess: None, hess_apply: None }
    }

    pub fn with_grad(mut self, grad: impl Fn(&[T], &mut [T]) -> Result<()> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hess(mut self, hess: impl Fn(&[T], &mut Mat<T>) -> Result<()> + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(hess));
        self
    }

    pub fn with_hess_apply(
        mut self,
        apply: impl Fn(&[T], &[T], &mut [T]) -> Result<()> + Send + Sync + 'static,
    ) -> Self {
        self.hess_apply = Some(Arc::new(apply));
        self
    }

    /// Wrap a polynomial with its analytic derivatives.
    pub fn from_poly(poly: crate::polysys::MultiPoly<T>) -> Self {
        let dim = poly.dim();
        let poly = Arc::new(poly);
        let p_eval = poly.clone();
        let p_grad = poly.clone();
        let p_hess = poly.clone();
        let p_apply = poly;
        ScalarField::new(dim, move |x| p_eval.eval(x))
            .with_grad(move |x, out| {
                p_grad.grad_into(x, out);
                Ok(())
            })
            .with_hess(move |x, out| {
                p_hess.hess_into(x, out);
                Ok(())
            })
            .with_hess_apply(move |x, v, out| {
                let mut h = Mat::zeros(x.len(), x.len());
                p_apply.hess_into(x, &mut h);
                h.matvec_into(v, out);
                Ok(())
            })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_hess(&self) -> bool {
        self.hess.is_some() || self.hess_apply.is_some()
    }

    pub fn eval(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    pub fn grad_into(&self, x: &[T], out: &mut [T]) -> Result<()> {
        dim_check("scalar field gradient", self.dim, x.len())?;
        match &self.grad {
            Some(g) => g(x, out),
            None => Err(Error::CapabilityMissing(
                "gradient (wrap the field with numeric_derivatives for a finite-difference fallback)",
            )),
        }
    }

    pub fn grad(&self, x: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.dim];
        self.grad_into(x, &mut out)?;
        Ok(out)
    }

    pub fn hess_into(&self, x: &[T], out: &mut Mat<T>) -> Result<()> {
        dim_check("scalar field hessian", self.dim, x.len())?;
        match &self.hess {
            Some(h) => h(x, out),
            None => Err(Error::CapabilityMissing(
                "hessian (wrap the field with numeric_derivatives for a finite-difference fallback)",
            )),
        }
    }

    pub fn hess(&self, x: &[T]) -> Result<Mat<T>> {
        let mut out = Mat::zeros(self.dim, self.dim);
        self.hess_into(x, &mut out)?;
        Ok(out)
    }

    /// `out = Hessian(x) * v`, using the matrix-free closure when available.
    pub fn hess_apply_into(&self, x: &[T], v: &[T], out: &mut [T]) -> Result<()> {
        dim_check("scalar field hessian apply", self.dim, x.len())?;
        if let Some(apply) = &self.hess_apply {
            return apply(x, v, out);
        }
        let h = self.hess(x)?;
        h.matvec_into(v, out);
        Ok(())
    }
}

/// Attach central-difference gradient and Hessian closures to a field that
/// lacks analytic ones (steps `1e-5 (1 + |x|)` and `1e-4 (1 + |x|)`).
pub fn numeric_derivatives<T: Scalar>(field: ScalarField<T>) -> ScalarField<T> {
    let dim = field.dim;
    let mut out = field.clone();
    if out.grad.is_none() {
        let f = field.eval.clone();
        out.grad = Some(Arc::new(move |x: &[T], g: &mut [T]| {
            let h = fd_step_grad(x);
            let mut xp = x.to_vec();
            for i in 0..dim {
                xp[i] = x[i] + h;
                let fp = f(&xp);
                xp[i] = x[i] - h;
                let fm = f(&xp);
                xp[i] = x[i];
                if !fp.is_finite() || !fm.is_finite() {
                    return Err(stencil_error("numeric gradient", &xp, i, h));
                }
                g[i] = (fp - fm) / (h + h);
            }
            Ok(())
        }));
    }
    if out.hess.is_none() {
        let f = field.eval.clone();
        out.hess = Some(Arc::new(move |x: &[T], m: &mut Mat<T>| {
            let h = fd_step_hess(x);
            let f0 = f(x);
            if !f0.is_finite() {
                return Err(stencil_error("numeric hessian", x, 0, T::zero()));
            }
            let h2 = h * h;
            let mut xs = x.to_vec();
            for i in 0..dim {
                xs[i] = x[i] + h;
                let fp = f(&xs);
                xs[i] = x[i] - h;
                let fm = f(&xs);
                xs[i] = x[i];
                if !fp.is_finite() || !fm.is_finite() {
                    return Err(stencil_error("numeric hessian", &xs, i, h));
                }
                m[(i, i)] = (fp - (f0 + f0) + fm) / h2;
                for j in (i + 1)..dim {
                    xs[i] = x[i] + h;
                    xs[j] = x[j] + h;
                    let fpp = f(&xs);
                    xs[j] = x[j] - h;
                    let fpm = f(&xs);
                    xs[i] = x[i] - h;
                    let fmm = f(&xs);
                    xs[j] = x[j] + h;
                    let fmp = f(&xs);
                    xs[i] = x[i];
                    xs[j] = x[j];
                    if !fpp.is_finite() || !fpm.is_finite() || !fmp.is_finite() || !fmm.is_finite() {
                        return Err(stencil_error("numeric hessian", &xs, j, h));
                    }
                    let four = lit::<T>(4.0);
                    let v = (fpp - fpm - fmp + fmm) / (four * h2);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Ok(())
        }));
    }
    out
}

fn stencil_error<T: Scalar>(what: &str, x: &[T], coord: usize, step: T) -> Error {
    Error::NumericDomain {
        what: format!("{what} stencil (coordinate {coord}, step {})", step.to_f64().unwrap_or(f64::NAN)),
        witness: Witness::at_x(lower_slice(x)),
    }
}

/// Time-periodic scalar potential `V(x, t)` with declared period and lower
/// bound. Builtins carry analytic `grad_x` and `dt`; fields constructed from
/// an evaluator alone fall back to central differences.
#[derive(Clone)]
pub struct TimeScalarField<T> {
    dim: usize,
    period: T,
    lower_bound: T,
    eval: Arc<TimeEvalFn<T>>,
    grad_x: Arc<TimeGradFn<T>>,
    dt: Arc<TimeDtFn<T>>,
}

impl<T: Scalar> TimeScalarField<T> {
    pub fn new(
        dim: usize,
        period: T,
        lower_bound: T,
        eval: impl Fn(&[T], T) -> T + Send + Sync + 'static,
    ) -> Self {
        let eval: Arc<TimeEvalFn<T>> = Arc::new(eval);
        let grad_src = eval.clone();
        let dt_src = eval.clone();
        let grad_x: Arc<TimeGradFn<T>> = Arc::new(move |x: &[T], t: T, g: &mut [T]| {
            let h = fd_step_grad(x);
            let mut xs = x.to_vec();
            for i in 0..x.len() {
                xs[i] = x[i] + h;
                let fp = grad_src(&xs, t);
                xs[i] = x[i] - h;
                let fm = grad_src(&xs, t);
                xs[i] = x[i];
                if !fp.is_finite() || !fm.is_finite() {
                    return Err(stencil_error("numeric potential gradient", &xs, i, h));
                }
                g[i] = (fp - fm) / (h + h);
            }
            Ok(())
        });
        let dt: Arc<TimeDtFn<T>> = Arc::new(move |x: &[T], t: T| {
            let h = lit::<T>(1e-5) * (T::one() + t.abs());
            let fp = dt_src(x, t + h);
            let fm = dt_src(x, t - h);
            if !fp.is_finite() || !fm.is_finite() {
                return Err(stencil_error("numeric time derivative", x, 0, h));
            }
            Ok((fp - fm) / (h + h))
        });
        TimeScalarField { dim, period, lower_bound, eval, grad_x, dt }
    }

    pub fn with_grad_x(mut self, grad: impl Fn(&[T], T, &mut [T]) -> Result<()> + Send + Sync + 'static) -> Self {
        self.grad_x = Arc::new(grad);
        self
    }

    pub fn with_dt(mut self, dt: impl Fn(&[T], T) -> Result<T> + Send + Sync + 'static) -> Self {
        self.dt = Arc::new(dt);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn lower_bound(&self) -> T {
        self.lower_bound
    }

    pub fn eval(&self, x: &[T], t: T) -> T {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x, t)
    }

    pub fn grad_x_into(&self, x: &[T], t: T, out: &mut [T]) -> Result<()> {
        dim_check("potential gradient", self.dim, x.len())?;
        (self.grad_x)(x, t, out)
    }

    pub fn grad_x(&self, x: &[T], t: T) -> Result<Vec<T>> {
        let mut g = vec![T::zero(); self.dim];
        self.grad_x_into(x, t, &mut g)?;
        Ok(g)
    }

    pub fn dt(&self, x: &[T], t: T) -> Result<T> {
        dim_check("potential time derivative", self.dim, x.len())?;
        (self.dt)(x, t)
    }
}

/// Bounded perturbation `E(x, y, t)` with declared sup-norm bound.
#[derive(Clone)]
pub struct VectorField<T> {
    dim: usize,
    bound: T,
    eval: Arc<VectorEvalFn<T>>,
}

impl<T: Scalar> VectorField<T> {
    pub fn new(
        dim: usize,
        bound: T,
        eval: impl Fn(&[T], &[T], T, &mut [T]) -> Result<()> + Send + Sync + 'static,
    ) -> Self {
        VectorField { dim, bound, eval: Arc::new(eval) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, T::zero(), |_, _, _, out: &mut [T]| {
            out.fill(T::zero());
            Ok(())
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Declared sup-norm bound `e` (checked by the verifiers, not assumed).
    pub fn bound(&self) -> T {
        self.bound
    }

    pub fn eval_into(&self, x: &[T], y: &[T], t: T, out: &mut [T]) -> Result<()> {
        dim_check("perturbation", self.dim, x.len())?;
        (self.eval)(x, y, t, out)
    }

    pub fn eval(&self, x: &[T], y: &[T], t: T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(x, y, t, &mut out)?;
        Ok(out)
    }
}

/// Noise intensity `Sigma(x, y, t)`, an `n x k` matrix field.
#[derive(Clone)]
pub struct MatrixField<T> {
    rows: usize,
    cols: usize,
    eval: Arc<MatrixEvalFn<T>>,
    apply: Arc<MatrixApplyFn<T>>,
}

impl<T: Scalar> MatrixField<T> {
    pub fn general(
        rows: usize,
        cols: usize,
        eval: impl Fn(&[T], &[T], T, &mut Mat<T>) -> Result<()> + Send + Sync + 'static,
    ) -> Self {
        let eval: Arc<MatrixEvalFn<T>> = Arc::new(eval);
        let eval_for_apply = eval.clone();
        let apply: Arc<MatrixApplyFn<T>> = Arc::new(move |x, y, t, v, out| {
            let mut m = Mat::zeros(rows, cols);
            eval_for_apply(x, y, t, &mut m)?;
            m.matvec_into(v, out);
            Ok(())
        });
        MatrixField { rows, cols, eval, apply }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        MatrixField {
            rows,
            cols,
            eval: Arc::new(move |_, _, _, m: &mut Mat<T>| {
                m.fill(T::zero());
                Ok(())
            }),
            apply: Arc::new(|_, _, _, _, out: &mut [T]| {
                out.fill(T::zero());
                Ok(())
            }),
        }
    }

    /// `sigma * I_n` (square).
    pub fn constant_diag(n: usize, sigma: T) -> Self {
        Self::diag_state_fn(n, move |_, _, _| sigma)
    }

    /// Diagonal `f(x, y, t) * I_n`, matrix-free application.
    pub fn diag_state_fn(n: usize, f: impl Fn(&[T], &[T], T) -> T + Send + Sync + Clone + 'static) -> Self {
        let f_eval = f.clone();
        MatrixField {
            rows: n,
            cols: n,
            eval: Arc::new(move |x, y, t, m: &mut Mat<T>| {
                let s = f_eval(x, y, t);
                m.fill(T::zero());
                for i in 0..n {
                    m[(i, i)] = s;
                }
                Ok(())
            }),
            apply: Arc::new(move |x, y, t, v, out: &mut [T]| {
                let s = f(x, y, t);
                for (o, &vi) in out.iter_mut().zip(v) {
                    *o = s * vi;
                }
                Ok(())
            }),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn eval_into(&self, x: &[T], y: &[T], t: T, out: &mut Mat<T>) -> Result<()> {
        if out.rows() != self.rows || out.cols() != self.cols {
            out.resize(self.rows, self.cols);
        }
        (self.eval)(x, y, t, out)
    }

    pub fn eval(&self, x: &[T], y: &[T], t: T) -> Result<Mat<T>> {
        let mut m = Mat::zeros(self.rows, self.cols);
        self.eval_into(x, y, t, &mut m)?;
        Ok(m)
    }

    /// `out = Sigma(x,y,t) * v`
    pub fn apply_into(&self, x: &[T], y: &[T], t: T, v: &[T], out: &mut [T]) -> Result<()> {
        dim_check("noise increment", self.cols, v.len())?;
        (self.apply)(x, y, t, v, out)
    }

    /// `tr(Sigma Sigma^T)`, the squared Frobenius norm.
    pub fn trace_sq(&self, x: &[T], y: &[T], t: T) -> Result<T> {
        let m = self.eval(x, y, t)?;
        Ok(m.frobenius_sq())
    }
}

/// General (non-Hessian) friction matrix field with declared bounds: the
/// symmetric part is at least `two_alpha * I` and the operator norm at most
/// `beta` (both checked by the verifiers).
#[derive(Clone)]
pub struct GeneralFriction<T> {
    dim: usize,
    pub two_alpha: T,
    pub beta: T,
    eval: Arc<MatrixEvalFn<T>>,
}

impl<T: Scalar> GeneralFriction<T> {
    pub fn new(
        dim: usize,
        two_alpha: T,
        beta: T,
        eval: impl Fn(&[T], &[T], T, &mut Mat<T>) -> Result<()> + Send + Sync + 'static,
    ) -> Self {
        GeneralFriction { dim, two_alpha, beta, eval: Arc::new(eval) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, x: &[T], y: &[T], t: T) -> Result<Mat<T>> {
        let mut m = Mat::zeros(self.dim, self.dim);
        (self.eval)(x, y, t, &mut m)?;
        Ok(m)
    }
}

/// Friction specification: Hessian-driven or general matrix.
#[derive(Clone)]
pub enum FrictionSpec<T> {
    HessianOfF(ScalarField<T>),
    GeneralMatrix(GeneralFriction<T>),
}

impl<T: Scalar> FrictionSpec<T> {
    /// Hessian-driven friction; the field must expose Hessian capability.
    pub fn hessian_of(field: ScalarField<T>) -> Result<Self> {
        if !field.has_hess() {
            return Err(Error::CapabilityMissing("Hessian-driven friction requires a field with a Hessian"));
        }
        Ok(FrictionSpec::HessianOfF(field))
    }

    pub fn dim(&self) -> usize {
        match self {
            FrictionSpec::HessianOfF(f) => f.dim(),
            FrictionSpec::GeneralMatrix(g) => g.dim(),
        }
    }

    /// The scalar friction function, when Hessian-driven.
    pub fn friction_function(&self) -> Result<&ScalarField<T>> {
        match self {
            FrictionSpec::HessianOfF(f) => Ok(f),
            FrictionSpec::GeneralMatrix(_) => {
                Err(Error::WrongVariant("general-matrix friction has no scalar friction function"))
            }
        }
    }

    /// `out = M(x,y,t) * v`
    pub fn apply_into(&self, x: &[T], y: &[T], t: T, v: &[T], out: &mut [T]) -> Result<()> {
        match self {
            FrictionSpec::HessianOfF(f) => f.hess_apply_into(x, v, out),
            FrictionSpec::GeneralMatrix(g) => {
                let m = g.matrix(x, y, t)?;
                m.matvec_into(v, out);
                Ok(())
            }
        }
    }

    /// The friction matrix itself.
    pub fn matrix(&self, x: &[T], y: &[T], t: T) -> Result<Mat<T>> {
        match self {
            FrictionSpec::HessianOfF(f) => f.hess(x),
            FrictionSpec::GeneralMatrix(g) => g.matrix(x, y, t),
        }
    }
}

/// Reusable buffers for drift evaluation in tight loops.
#[derive(Clone, Debug)]
pub struct DriftScratch<T> {
    buf: Vec<T>,
}

impl<T: Scalar> DriftScratch<T> {
    pub fn new(n: usize) -> Self {
        DriftScratch { buf: vec![T::zero(); n] }
    }
}

/// A stochastic time-periodic Newtonian system.
#[derive(Clone)]
pub struct SystemSpec<T> {
    n: usize,
    k: usize,
    pub friction: FrictionSpec<T>,
    pub potential: TimeScalarField<T>,
    pub perturbation: VectorField<T>,
    pub noise: MatrixField<T>,
    period: T,
    /// Default Lyapunov certificate constants, when the builtin carries them.
    pub metadata: Option<Certificate<T>>,
    /// Explanation when a builtin could not attach a valid certificate.
    pub metadata_note: Option<String>,
    pub name: Option<String>,
}

impl<T: Scalar> SystemSpec<T> {
    pub fn new(
        friction: FrictionSpec<T>,
        potential: TimeScalarField<T>,
        perturbation: VectorField<T>,
        noise: MatrixField<T>,
        period: T,
    ) -> Result<Self> {
        let n = friction.dim();
        dim_check("potential dimension", n, potential.dim())?;
        dim_check("perturbation dimension", n, perturbation.dim())?;
        dim_check("noise rows", n, noise.rows())?;
        if !(period > T::zero()) {
            return Err(Error::Contract("period must be positive".into()));
        }
        let k = noise.cols();
        Ok(SystemSpec {
            n,
            k,
            friction,
            potential,
            perturbation,
            noise,
            period,
            metadata: None,
            metadata_note: None,
            name: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Wiener dimension.
    pub fn wiener_dim(&self) -> usize {
        self.k
    }

    pub fn period(&self) -> T {
        self.period
    }

    /// Drift `(dx, dy) = (y, -[M y + grad_x V + E])` into caller buffers.
    pub fn drift_into(
        &self,
        x: &[T],
        y: &[T],
        t: T,
        dx: &mut [T],
        dy: &mut [T],
        scratch: &mut DriftScratch<T>,
    ) -> Result<()> {
        dim_check("drift x", self.n, x.len())?;
        dim_check("drift y", self.n, y.len())?;
        dx.copy_from_slice(y);
        self.friction.apply_into(x, y, t, y, dy)?;
        self.potential.grad_x_into(x, t, &mut scratch.buf)?;
        for (d, &g) in dy.iter_mut().zip(scratch.buf.iter()) {
            *d += g;
        }
        self.perturbation.eval_into(x, y, t, &mut scratch.buf)?;
        for (d, &e) in dy.iter_mut().zip(scratch.buf.iter()) {
            *d = -(*d + e);
        }
        if !linalg::all_finite(dy) {
            return Err(Error::NumericDomain {
                what: "drift".into(),
                witness: Witness { x: lower_slice(x), y: lower_slice(y), t: t.to_f64().unwrap_or(f64::NAN) },
            });
        }
        Ok(())
    }

    pub fn drift(&self, x: &[T], y: &[T], t: T) -> Result<(Vec<T>, Vec<T>)> {
        let mut dx = vec![T::zero(); self.n];
        let mut dy = vec![T::zero(); self.n];
        let mut scratch = DriftScratch::new(self.n);
        self.drift_into(x, y, t, &mut dx, &mut dy, &mut scratch)?;
        Ok((dx, dy))
    }

    /// Noise intensity matrix at `(x, y, t)`.
    pub fn diffusion(&self, x: &[T], y: &[T], t: T) -> Result<Mat<T>> {
        dim_check("diffusion x", self.n, x.len())?;
        dim_check("diffusion y", self.n, y.len())?;
        let m = self.noise.eval(x, y, t)?;
        if m.rows() != self.n || m.cols() != self.k {
            return Err(Error::Contract(format!(
                "noise field produced a {}x{} matrix, declared {}x{}",
                m.rows(),
                m.cols(),
                self.n,
                self.k
            )));
        }
        Ok(m)
    }

    /// `out = Sigma(x,y,t) * v`
    pub fn noise_apply_into(&self, x: &[T], y: &[T], t: T, v: &[T], out: &mut [T]) -> Result<()> {
        self.noise.apply_into(x, y, t, v, out)
    }

    pub fn with_metadata(mut self, cert: Certificate<T>) -> Self {
        self.metadata = Some(cert);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }
}

#[cfg(test)]
mod tests;
