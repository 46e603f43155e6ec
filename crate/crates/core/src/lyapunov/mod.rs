//! The mixed-energy Lyapunov function, its generator drift in closed form,
//! and numerical certification of the drift hypotheses on grids.
//!
//! For Hessian-driven friction the Lyapunov function is
//!
//! ```text
//! Psi(x,y,t) = 1/2 |y + grad F(x) - a x|^2
//!            + [ V(x,t) + a F(x) - a^2/2 |x|^2 ] + D,
//! ```
//!
//! whose generator drift collapses to the closed form
//!
//! ```text
//! L Psi = dV/dt + 1/2 tr(Sigma Sigma^T) - <E, y + grad F - a x>
//!       - a |y|^2 - <grad_x V, grad F - a x>.
//! ```
//!
//! [`generator_psi`] evaluates that closed form; [`generator_apply`] applies
//! the generator to an arbitrary smooth function from its derivative
//! closures, which cross-validates the cancellation algebra behind the
//! closed form.

mod verify;

pub use verify::{
    calibrate_d, uf2_drift_bound_constant, verify_hypotheses, verify_khasminskii, ConditionEntry,
    GridDescriptor, ShellValue, VerificationGrid, VerificationReport, WitnessPoint,
};

use crate::error::{Error, Result, Witness};
use crate::linalg::{self, Mat};
use crate::model::SystemSpec;
use crate::scalar::{lit, lower_slice, Scalar};
use std::sync::Arc;

/// Constant bundle for the Hessian-driven hypotheses.
#[derive(Clone, Debug)]
pub struct UfCertificate<T> {
    /// Friction shift in the mixed energy; `a > 0`.
    pub a: T,
    /// Offset making `Psi >= 1`.
    pub big_d: T,
    /// Inner-product growth: `<grad V, grad F - ax> >= b |x|^(2m) - M`.
    pub b: T,
    pub m: T,
    pub big_m: T,
    /// Sup-norm bound on the perturbation `E`.
    pub e: T,
    /// `|dV/dt| <= c1 b |x|^(2m) + M1`.
    pub c1: T,
    pub big_m1: T,
    /// `tr(Sigma Sigma^T) <= 2 c2 (a |y|^2 + b |x|^(2m)) + M2`.
    pub c2: T,
    pub big_m2: T,
}

impl<T: Scalar> UfCertificate<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(a: T, big_d: T, b: T, m: T, big_m: T, e: T, c1: T, big_m1: T, c2: T, big_m2: T) -> Result<Self> {
        if !(a > T::zero()) {
            return Err(Error::CertificateInvalid(format!("a must be positive, got {a}")));
        }
        if !(b > T::zero()) || !(m > T::zero()) {
            return Err(Error::CertificateInvalid(format!("b and m must be positive, got b={b}, m={m}")));
        }
        if big_m < T::zero() || big_m1 < T::zero() || big_m2 < T::zero() {
            return Err(Error::CertificateInvalid("M, M1, M2 must be nonnegative".into()));
        }
        if e < T::zero() {
            return Err(Error::CertificateInvalid(format!("e must be nonnegative, got {e}")));
        }
        if c1 < T::zero() || c2 < T::zero() || c1 + c2 >= T::one() {
            return Err(Error::CertificateInvalid(format!(
                "need c1, c2 >= 0 with c1 + c2 < 1; got c1={c1}, c2={c2}"
            )));
        }
        Ok(UfCertificate { a, big_d, b, m, big_m, e, c1, big_m1, c2, big_m2 })
    }

    pub fn with_big_d(mut self, big_d: T) -> Self {
        self.big_d = big_d;
        self
    }
}

/// Constant bundle for general-matrix friction.
#[derive(Clone, Debug)]
pub struct Uf2Certificate<T> {
    /// `C^s >= 2 alpha I`.
    pub alpha: T,
    /// `|C| and |E| <= beta`.
    pub beta: T,
    /// `<x, grad V> >= b |x|^(2+eps) - M`.
    pub b: T,
    pub eps: T,
    pub big_m: T,
    /// `tr(Sigma Sigma^T) <= c alpha (|y|^2 + b |x|^(2+eps)) + M1`, `c < 1`.
    pub c: T,
    pub big_m1: T,
}

impl<T: Scalar> Uf2Certificate<T> {
    pub fn new(alpha: T, beta: T, b: T, eps: T, big_m: T, c: T, big_m1: T) -> Result<Self> {
        if !(alpha > T::zero()) || !(beta > T::zero()) {
            return Err(Error::CertificateInvalid(format!(
                "alpha and beta must be positive, got alpha={alpha}, beta={beta}"
            )));
        }
        if !(b > T::zero()) || !(eps > T::zero()) {
            return Err(Error::CertificateInvalid(format!("b and eps must be positive, got b={b}, eps={eps}")));
        }
        if big_m < T::zero() || big_m1 < T::zero() {
            return Err(Error::CertificateInvalid("M and M1 must be nonnegative".into()));
        }
        if !(c > T::zero()) || c >= T::one() {
            return Err(Error::CertificateInvalid(format!("c must lie in (0, 1), got {c}")));
        }
        Ok(Uf2Certificate { alpha, beta, b, eps, big_m, c, big_m1 })
    }
}

/// Certificate for either friction variant.
#[derive(Clone, Debug)]
pub enum Certificate<T> {
    Uf(UfCertificate<T>),
    Uf2(Uf2Certificate<T>),
}

impl<T: Scalar> Certificate<T> {
    pub fn as_uf(&self) -> Result<&UfCertificate<T>> {
        match self {
            Certificate::Uf(c) => Ok(c),
            Certificate::Uf2(_) => Err(Error::WrongVariant("expected a Hessian-driven (UF) certificate")),
        }
    }

    pub fn as_uf2(&self) -> Result<&Uf2Certificate<T>> {
        match self {
            Certificate::Uf2(c) => Ok(c),
            Certificate::Uf(_) => Err(Error::WrongVariant("expected a general-friction (UF2) certificate")),
        }
    }
}

/// `w = y + grad F(x) - a x`, the mixed-energy vector.
fn mixed_energy_vector<T: Scalar>(sys: &SystemSpec<T>, a: T, x: &[T], y: &[T]) -> Result<Vec<T>> {
    let f = sys.friction.friction_function()?;
    let mut w = f.grad(x)?;
    for i in 0..w.len() {
        w[i] = w[i] + y[i] - a * x[i];
    }
    Ok(w)
}

/// The Lyapunov function for Hessian-driven friction.
pub fn psi<T: Scalar>(sys: &SystemSpec<T>, cert: &UfCertificate<T>, x: &[T], y: &[T], t: T) -> Result<T> {
    let f = sys.friction.friction_function()?;
    let w = mixed_energy_vector(sys, cert.a, x, y)?;
    let half: T = lit(0.5);
    let mixed = half * linalg::norm_sq(&w);
    let bracket = sys.potential.eval(x, t) + cert.a * f.eval(x) - half * cert.a * cert.a * linalg::norm_sq(x);
    Ok(mixed + bracket + cert.big_d)
}

/// The Lyapunov function for general-matrix friction
/// (`F := alpha |x|^2, a := alpha` specialization), evaluated at a fixed
/// time; time-dependent potentials are allowed but the function is only a
/// Lyapunov function when `V` is autonomous.
pub fn psi_uf2_at<T: Scalar>(
    sys: &SystemSpec<T>,
    cert: &Uf2Certificate<T>,
    x: &[T],
    y: &[T],
    t: T,
) -> Result<T> {
    if x.len() != sys.dim() || y.len() != sys.dim() {
        return Err(Error::DimensionMismatch { what: "psi_uf2 state", expected: sys.dim(), got: x.len() });
    }
    let half: T = lit(0.5);
    let mut w = vec![T::zero(); x.len()];
    for i in 0..x.len() {
        w[i] = y[i] + cert.alpha * x[i];
    }
    Ok(half * linalg::norm_sq(&w)
        + sys.potential.eval(x, t)
        + half * cert.alpha * cert.alpha * linalg::norm_sq(x))
}

/// [`psi_uf2_at`] at `t = 0`.
pub fn psi_uf2<T: Scalar>(sys: &SystemSpec<T>, cert: &Uf2Certificate<T>, x: &[T], y: &[T]) -> Result<T> {
    psi_uf2_at(sys, cert, x, y, T::zero())
}

/// Term-by-term breakdown of the closed-form generator drift.
#[derive(Clone, Debug)]
pub struct GeneratorTerms<T> {
    pub dt_v: T,
    pub half_trace: T,
    pub perturbation: T,
    pub damping: T,
    pub inner_product: T,
}

impl<T: Scalar> GeneratorTerms<T> {
    pub fn total(&self) -> T {
        self.dt_v + self.half_trace - self.perturbation - self.damping - self.inner_product
    }
}

/// Closed-form generator drift of [`psi`], split into its terms.
pub fn generator_psi_terms<T: Scalar>(
    sys: &SystemSpec<T>,
    cert: &UfCertificate<T>,
    x: &[T],
    y: &[T],
    t: T,
) -> Result<GeneratorTerms<T>> {
    let f = sys.friction.friction_function()?;
    let half: T = lit(0.5);

    let mut df = f.grad(x)?;
    for i in 0..df.len() {
        df[i] = df[i] - cert.a * x[i];
    }
    let mut w = df.clone();
    for i in 0..w.len() {
        w[i] += y[i];
    }
    let e_val = sys.perturbation.eval(x, y, t)?;
    let grad_v = sys.potential.grad_x(x, t)?;

    let terms = GeneratorTerms {
        dt_v: sys.potential.dt(x, t)?,
        half_trace: half * sys.noise.trace_sq(x, y, t)?,
        perturbation: linalg::dot(&e_val, &w),
        damping: cert.a * linalg::norm_sq(y),
        inner_product: linalg::dot(&grad_v, &df),
    };
    if !terms.total().is_finite() {
        return Err(Error::NumericDomain {
            what: format!(
                "generator drift (dt_v={}, half_trace={}, perturbation={}, damping={}, inner_product={})",
                terms.dt_v, terms.half_trace, terms.perturbation, terms.damping, terms.inner_product
            ),
            witness: Witness { x: lower_slice(x), y: lower_slice(y), t: t.to_f64().unwrap_or(f64::NAN) },
        });
    }
    Ok(terms)
}

/// Closed-form generator drift of [`psi`].
pub fn generator_psi<T: Scalar>(
    sys: &SystemSpec<T>,
    cert: &UfCertificate<T>,
    x: &[T],
    y: &[T],
    t: T,
) -> Result<T> {
    Ok(generator_psi_terms(sys, cert, x, y, t)?.total())
}

type SmoothEvalFn<T> = dyn Fn(&[T], &[T], T) -> T + Send + Sync;
type SmoothGradFn<T> = dyn Fn(&[T], &[T], T, &mut [T]) -> Result<()> + Send + Sync;
type SmoothDtFn<T> = dyn Fn(&[T], &[T], T) -> Result<T> + Send + Sync;
type SmoothHessFn<T> = dyn Fn(&[T], &[T], T, &mut Mat<T>) -> Result<()> + Send + Sync;

/// Scalar function of `(x, y, t)` with the derivatives the generator needs:
/// first derivatives in `x`, `y`, `t` and second derivatives in `y`.
/// Missing derivatives fall back to central differences only when
/// [`SmoothFn::with_numeric_fallback`] enabled it.
#[derive(Clone)]
pub struct SmoothFn<T> {
    eval: Arc<SmoothEvalFn<T>>,
    grad_x: Option<Arc<SmoothGradFn<T>>>,
    grad_y: Option<Arc<SmoothGradFn<T>>>,
    dt: Option<Arc<SmoothDtFn<T>>>,
    hess_yy: Option<Arc<SmoothHessFn<T>>>,
    numeric_fallback: bool,
}

impl<T: Scalar> SmoothFn<T> {
    pub fn new(eval: impl Fn(&[T], &[T], T) -> T + Send + Sync + 'static) -> Self {
        SmoothFn {
            eval: Arc::new(eval),
            grad_x: None,
            grad_y: None,
            dt: None,
            hess_yy: None,
            numeric_fallback: false,
        }
    }

    pub fn constant(c: T) -> Self {
        let mut f = Self::new(move |_, _, _| c);
        f.grad_x = Some(Arc::new(|_, _, _, out: &mut [T]| {
            out.fill(T::zero());
            Ok(())
        }));
        f.grad_y = Some(Arc::new(|_, _, _, out: &mut [T]| {
            out.fill(T::zero());
            Ok(())
        }));
        f.dt = Some(Arc::new(|_, _, _| Ok(T::zero())));
        f.hess_yy = Some(Arc::new(|_, _, _, m: &mut Mat<T>| {
            m.fill(T::zero());
            Ok(())
        }));
        f
    }

    pub fn with_grad_x(mut self, g: impl Fn(&[T], &[T], T, &mut [T]) -> Result<()> + Send + Sync + 'static) -> Self {
        self.grad_x = Some(Arc::new(g));
        self
    }

    pub fn with_grad_y(mut self, g: impl Fn(&[T], &[T], T, &mut [T]) -> Result<()> + Send + Sync + 'static) -> Self {
        self.grad_y = Some(Arc::new(g));
        self
    }

    pub fn with_dt(mut self, g: impl Fn(&[T], &[T], T) -> Result<T> + Send + Sync + 'static) -> Self {
        self.dt = Some(Arc::new(g));
        self
    }

    pub fn with_hess_yy(mut self, g: impl Fn(&[T], &[T], T, &mut Mat<T>) -> Result<()> + Send + Sync + 'static) -> Self {
        self.hess_yy = Some(Arc::new(g));
        self
    }

    /// Allow central-difference fallbacks for missing derivatives.
    pub fn with_numeric_fallback(mut self, allow: bool) -> Self {
        self.numeric_fallback = allow;
        self
    }

    pub fn eval(&self, x: &[T], y: &[T], t: T) -> T {
        (self.eval)(x, y, t)
    }

    fn grad_x_into(&self, x: &[T], y: &[T], t: T, out: &mut [T]) -> Result<()> {
        if let Some(g) = &self.grad_x {
            return g(x, y, t, out);
        }
        if !self.numeric_fallback {
            return Err(Error::CapabilityMissing("grad_x of generator test function"));
        }
        let h = crate::model::fd_step_grad(x);
        let mut xs = x.to_vec();
        for i in 0..x.len() {
            xs[i] = x[i] + h;
            let fp = self.eval(&xs, y, t);
            xs[i] = x[i] - h;
            let fm = self.eval(&xs, y, t);
            xs[i] = x[i];
            out[i] = (fp - fm) / (h + h);
        }
        Ok(())
    }

    fn grad_y_into(&self, x: &[T], y: &[T], t: T, out: &mut [T]) -> Result<()> {
        if let Some(g) = &self.grad_y {
            return g(x, y, t, out);
        }
        if !self.numeric_fallback {
            return Err(Error::CapabilityMissing("grad_y of generator test function"));
        }
        let h = crate::model::fd_step_grad(y);
        let mut ys = y.to_vec();
        for i in 0..y.len() {
            ys[i] = y[i] + h;
            let fp = self.eval(x, &ys, t);
            ys[i] = y[i] - h;
            let fm = self.eval(x, &ys, t);
            ys[i] = y[i];
            out[i] = (fp - fm) / (h + h);
        }
        Ok(())
    }

    fn dt_at(&self, x: &[T], y: &[T], t: T) -> Result<T> {
        if let Some(g) = &self.dt {
            return g(x, y, t);
        }
        if !self.numeric_fallback {
            return Err(Error::CapabilityMissing("time derivative of generator test function"));
        }
        let h = lit::<T>(1e-6) * (T::one() + t.abs());
        Ok((self.eval(x, y, t + h) - self.eval(x, y, t - h)) / (h + h))
    }

    fn hess_yy_into(&self, x: &[T], y: &[T], t: T, out: &mut Mat<T>) -> Result<()> {
        if let Some(g) = &self.hess_yy {
            return g(x, y, t, out);
        }
        if !self.numeric_fallback {
            return Err(Error::CapabilityMissing(
                "second y-derivatives of generator test function (enable the numeric fallback)",
            ));
        }
        let n = y.len();
        let h = crate::model::fd_step_hess(y);
        let h2 = h * h;
        let f0 = self.eval(x, y, t);
        let mut ys = y.to_vec();
        for i in 0..n {
            ys[i] = y[i] + h;
            let fp = self.eval(x, &ys, t);
            ys[i] = y[i] - h;
            let fm = self.eval(x, &ys, t);
            ys[i] = y[i];
            out[(i, i)] = (fp - (f0 + f0) + fm) / h2;
            for j in (i + 1)..n {
                ys[i] = y[i] + h;
                ys[j] = y[j] + h;
                let fpp = self.eval(x, &ys, t);
                ys[j] = y[j] - h;
                let fpm = self.eval(x, &ys, t);
                ys[i] = y[i] - h;
                let fmm = self.eval(x, &ys, t);
                ys[j] = y[j] + h;
                let fmp = self.eval(x, &ys, t);
                ys[i] = y[i];
                ys[j] = y[j];
                let four: T = lit(4.0);
                let v = (fpp - fpm - fmp + fmm) / (four * h2);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(())
    }
}

/// Apply the generator to an arbitrary smooth function:
///
/// ```text
/// L f = df/dt + 1/2 sum_ij (Sigma Sigma^T)_ij d2f/dy_i dy_j
///     + <y, grad_x f> + <dy_drift, grad_y f>
/// ```
///
/// where `dy_drift` is the (already negated) `y`-drift of the system. This
/// never uses the closed-form cancellation, so comparing it against
/// [`generator_psi`] on the Lyapunov function is a genuine cross-check.
pub fn generator_apply<T: Scalar>(sys: &SystemSpec<T>, f: &SmoothFn<T>, x: &[T], y: &[T], t: T) -> Result<T> {
    let n = sys.dim();
    if x.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch { what: "generator_apply state", expected: n, got: x.len() });
    }
    let mut grad_x = vec![T::zero(); n];
    f.grad_x_into(x, y, t, &mut grad_x)?;
    let mut grad_y = vec![T::zero(); n];
    f.grad_y_into(x, y, t, &mut grad_y)?;
    let dt = f.dt_at(x, y, t)?;

    let mut hess = Mat::zeros(n, n);
    f.hess_yy_into(x, y, t, &mut hess)?;
    let sigma = sys.diffusion(x, y, t)?;
    let mut diffusion_term = T::zero();
    for i in 0..n {
        for j in 0..n {
            // (Sigma Sigma^T)_ij
            let mut s = T::zero();
            for l in 0..sigma.cols() {
                s += sigma[(i, l)] * sigma[(j, l)];
            }
            diffusion_term += s * hess[(i, j)];
        }
    }
    let half: T = lit(0.5);

    let (_, dy) = sys.drift(x, y, t)?;
    Ok(dt + half * diffusion_term + linalg::dot(y, &grad_x) + linalg::dot(&dy, &grad_y))
}

/// [`psi`] as a [`SmoothFn`] with analytic derivatives assembled from the
/// factored forms `grad_y Psi = w` and `grad_x Psi = grad V - a y + D^2 F w`.
pub fn psi_smooth_fn<T: Scalar>(sys: &SystemSpec<T>, cert: &UfCertificate<T>) -> Result<SmoothFn<T>> {
    sys.friction.friction_function()?;
    let a = cert.a;
    let sys_eval = sys.clone();
    let cert_eval = cert.clone();
    let sys_gx = sys.clone();
    let sys_gy = sys.clone();
    let sys_dt = sys.clone();
    Ok(SmoothFn::new(move |x: &[T], y: &[T], t: T| {
        psi(&sys_eval, &cert_eval, x, y, t).unwrap_or_else(|_| T::nan())
    })
    .with_grad_x(move |x, y, t, out| {
        let f = sys_gx.friction.friction_function()?;
        let w = mixed_energy_vector(&sys_gx, a, x, y)?;
        f.hess_apply_into(x, &w, out)?;
        let grad_v = sys_gx.potential.grad_x(x, t)?;
        for i in 0..out.len() {
            out[i] = out[i] + grad_v[i] - a * y[i];
        }
        Ok(())
    })
    .with_grad_y(move |x, y, _t, out| {
        let w = mixed_energy_vector(&sys_gy, a, x, y)?;
        out.copy_from_slice(&w);
        Ok(())
    })
    .with_dt(move |x, _y, t| sys_dt.potential.dt(x, t))
    .with_hess_yy(|_, _, _, m: &mut Mat<T>| {
        m.fill(T::zero());
        for i in 0..m.rows() {
            m[(i, i)] = T::one();
        }
        Ok(())
    }))
}

/// [`psi_uf2_at`] as a [`SmoothFn`] with analytic derivatives.
pub fn psi_uf2_smooth_fn<T: Scalar>(sys: &SystemSpec<T>, cert: &Uf2Certificate<T>) -> SmoothFn<T> {
    let alpha = cert.alpha;
    let sys_eval = sys.clone();
    let cert_eval = cert.clone();
    let sys_gx = sys.clone();
    SmoothFn::new(move |x: &[T], y: &[T], t: T| {
        psi_uf2_at(&sys_eval, &cert_eval, x, y, t).unwrap_or_else(|_| T::nan())
    })
    .with_grad_x(move |x, y, t, out| {
        // grad_x = alpha (y + alpha x) + grad V + alpha^2 x
        let grad_v = sys_gx.potential.grad_x(x, t)?;
        for i in 0..out.len() {
            out[i] = alpha * (y[i] + alpha * x[i]) + grad_v[i] + alpha * alpha * x[i];
        }
        Ok(())
    })
    .with_grad_y(move |x, y, _t, out| {
        for i in 0..out.len() {
            out[i] = y[i] + alpha * x[i];
        }
        Ok(())
    })
    .with_dt(move |_, _, _| Ok(T::zero()))
    .with_hess_yy(|_, _, _, m: &mut Mat<T>| {
        m.fill(T::zero());
        for i in 0..m.rows() {
            m[(i, i)] = T::one();
        }
        Ok(())
    })
}

/// Residual of the cancellation identity behind the closed form:
///
/// ```text
/// <y, grad_x Psi> - <D^2F y + grad V, grad_y Psi>
///   + a |y|^2 + <grad V, grad F - a x>  =  0.
/// ```
///
/// Returns `(residual, scale)` where `scale` is one plus the magnitudes of
/// the participating terms.
pub fn cancellation_residual<T: Scalar>(
    sys: &SystemSpec<T>,
    cert: &UfCertificate<T>,
    x: &[T],
    y: &[T],
    t: T,
) -> Result<(T, T)> {
    let f = sys.friction.friction_function()?;
    let a = cert.a;
    let w = mixed_energy_vector(sys, a, x, y)?;
    let grad_v = sys.potential.grad_x(x, t)?;

    // grad_x Psi assembled per the factored form.
    let mut gx = vec![T::zero(); x.len()];
    f.hess_apply_into(x, &w, &mut gx)?;
    for i in 0..gx.len() {
        gx[i] = gx[i] + grad_v[i] - a * y[i];
    }

    let mut hy = vec![T::zero(); x.len()];
    f.hess_apply_into(x, y, &mut hy)?;
    let mut drift_part = vec![T::zero(); x.len()];
    for i in 0..x.len() {
        drift_part[i] = hy[i] + grad_v[i];
    }

    let mut df = f.grad(x)?;
    for i in 0..df.len() {
        df[i] -= a * x[i];
    }

    let t1 = linalg::dot(y, &gx);
    let t2 = linalg::dot(&drift_part, &w);
    let t3 = a * linalg::norm_sq(y);
    let t4 = linalg::dot(&grad_v, &df);
    let residual = t1 - t2 + t3 + t4;
    let scale = T::one() + t1.abs() + t2.abs() + t3.abs() + t4.abs();
    Ok((residual, scale))
}
