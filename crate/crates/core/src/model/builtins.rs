//! Builtin system catalog.
//!
//! All builtins carry analytic gradients, Hessians, and time derivatives
//! (no finite-difference fallback), and attach their default Lyapunov
//! certificate constants as metadata. Time-dependent closures reduce `t`
//! modulo the period before evaluating trigonometry, so stroboscopic
//! evaluations are exactly periodic.

use super::{FrictionSpec, MatrixField, ScalarField, SystemSpec, TimeScalarField, VectorField};
use crate::error::{Error, Result};
use crate::linalg;
use crate::lyapunov::{Certificate, UfCertificate};
use crate::polysys::MultiPoly;
use crate::scalar::{lit, Scalar};

/// Noise intensity choice for builtins.
///
/// `StateQuad` saturates the trace growth the builtin's hypotheses allow:
/// each diagonal entry is `sqrt(c3 (|x|^(2m) + |y|^2) + big_c)` with `m` the
/// builtin's inner-product growth exponent, so `tr(Sigma Sigma^T)` equals
/// `n (c3 (|x|^(2m) + |y|^2) + big_c)`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseSpec {
    Zero,
    Const { sigma: f64 },
    StateQuad { c3: f64, big_c: f64 },
}

/// Parameters accepted by [`builtin`]. Unset fields take builtin-specific
/// defaults.
#[derive(Clone, Debug, Default)]
pub struct BuiltinParams {
    pub n: Option<usize>,
    pub noise: Option<NoiseSpec>,
    /// Friction scale of the van der Pol builtin.
    pub mu: Option<f64>,
    /// Amplitude of the periodic forcing term.
    pub amplitude: Option<f64>,
    /// Period for the polynomial builtin (builtins with trigonometric
    /// forcing are always 2 pi periodic).
    pub period: Option<f64>,
    /// Potential coefficients for the polynomial builtin.
    pub v_terms: Option<Vec<(Vec<u32>, f64)>>,
    /// Friction-function coefficients for the polynomial builtin.
    pub f_terms: Option<Vec<(Vec<u32>, f64)>>,
}

const NAMES: [&str; 8] = [
    "example-4.1",
    "example-4.2",
    "example-4.3",
    "example-4.1-relax",
    "example-4.3-relax",
    "open-problem-v4",
    "van-der-pol",
    "polynomial",
];

/// Names accepted by [`builtin`].
pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

/// Construct a builtin system by name.
pub fn builtin<T: Scalar>(name: &str, params: &BuiltinParams) -> Result<SystemSpec<T>> {
    match name {
        "example-4.1" => example_4x(params, ExampleKind::LogPotential { relax: false }),
        "example-4.1-relax" => example_4x(params, ExampleKind::LogPotential { relax: true }),
        "example-4.2" => example_4x(params, ExampleKind::SqrtPotential),
        "example-4.3" => example_4x(params, ExampleKind::ExpFriction { relax: false }),
        "example-4.3-relax" => example_4x(params, ExampleKind::ExpFriction { relax: true }),
        "open-problem-v4" => open_problem(params),
        "van-der-pol" => van_der_pol(params),
        "polynomial" => polynomial(params),
        _ => Err(Error::UnknownBuiltin { name: name.to_string(), valid: NAMES.join(", ") }),
    }
}

/// Scalar friction function of `r = |x|^2`: `F(x) = psi(r)`, so
/// `grad F = 2 psi'(r) x` and `D^2 F = 2 psi'(r) I + 4 psi''(r) x x^T`.
fn radial_friction_field<T: Scalar>(
    n: usize,
    psi: impl Fn(T) -> T + Send + Sync + Clone + 'static,
    dpsi: impl Fn(T) -> T + Send + Sync + Clone + 'static,
    d2psi: impl Fn(T) -> T + Send + Sync + Clone + 'static,
) -> ScalarField<T> {
    let two: T = lit(2.0);
    let four: T = lit(4.0);
    let g_d = dpsi.clone();
    let h_d = dpsi.clone();
    let h_d2 = d2psi.clone();
    ScalarField::new(n, move |x| psi(linalg::norm_sq(x)))
        .with_grad(move |x, out| {
            let c = two * g_d(linalg::norm_sq(x));
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = c * xi;
            }
            Ok(())
        })
        .with_hess(move |x, out| {
            let r = linalg::norm_sq(x);
            let c1 = two * h_d(r);
            let c2 = four * h_d2(r);
            for i in 0..x.len() {
                for j in 0..x.len() {
                    // The product is parenthesized so (i, j) and (j, i)
                    // round identically and the matrix is exactly symmetric.
                    let mut v = c2 * (x[i] * x[j]);
                    if i == j {
                        v += c1;
                    }
                    out[(i, j)] = v;
                }
            }
            Ok(())
        })
        .with_hess_apply(move |x, v, out| {
            let r = linalg::norm_sq(x);
            let c1 = two * dpsi(r);
            let c2 = four * d2psi(r) * linalg::dot(x, v);
            for i in 0..x.len() {
                out[i] = c1 * v[i] + c2 * x[i];
            }
            Ok(())
        })
}

/// Time-periodic potential of `(r, t)`: `V(x, t) = phi(|x|^2, t)` with
/// `t` reduced modulo the period before evaluation.
fn radial_time_potential<T: Scalar>(
    n: usize,
    period: T,
    lower_bound: T,
    phi: impl Fn(T, T) -> T + Send + Sync + Clone + 'static,
    dphi_dr: impl Fn(T, T) -> T + Send + Sync + Clone + 'static,
    dphi_dt: impl Fn(T, T) -> T + Send + Sync + Clone + 'static,
) -> TimeScalarField<T> {
    let two: T = lit(2.0);
    TimeScalarField::new(n, period, lower_bound, move |x, t| phi(linalg::norm_sq(x), t % period))
        .with_grad_x(move |x, t, out| {
            let c = two * dphi_dr(linalg::norm_sq(x), t % period);
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = c * xi;
            }
            Ok(())
        })
        .with_dt(move |x, t| Ok(dphi_dt(linalg::norm_sq(x), t % period)))
}

/// `E(x, y, t) = -amplitude * sin(t) * e_1`; zero field for zero amplitude.
fn axis_forcing<T: Scalar>(n: usize, amplitude: f64, period: T) -> VectorField<T> {
    if amplitude == 0.0 {
        return VectorField::zero(n);
    }
    let a: T = lit(amplitude);
    VectorField::new(n, a.abs(), move |_, _, t: T, out: &mut [T]| {
        out.fill(T::zero());
        out[0] = -a * (t % period).sin();
        Ok(())
    })
}

fn noise_field<T: Scalar>(n: usize, spec: &NoiseSpec, m_exp: f64) -> MatrixField<T> {
    match *spec {
        NoiseSpec::Zero => MatrixField::zero(n, n),
        NoiseSpec::Const { sigma } => MatrixField::constant_diag(n, lit(sigma)),
        NoiseSpec::StateQuad { c3, big_c } => {
            let c3t: T = lit(c3);
            let ct: T = lit(big_c);
            let m: T = lit(m_exp);
            MatrixField::diag_state_fn(n, move |x: &[T], y: &[T], _| {
                let rx = linalg::norm_sq(x).powf(m);
                (c3t * (rx + linalg::norm_sq(y)) + ct).sqrt()
            })
        }
    }
}

/// Trace-bound constants `(c2, M2)` induced by a noise choice against the
/// hypothesis `tr(Sigma Sigma^T) <= 2 c2 (a |y|^2 + b |x|^(2m)) + M2`.
fn noise_trace_constants(spec: &NoiseSpec, n: usize, a: f64, b: f64) -> (f64, f64) {
    match *spec {
        NoiseSpec::Zero => (0.0, 0.0),
        NoiseSpec::Const { sigma } => (0.0, n as f64 * sigma * sigma),
        NoiseSpec::StateQuad { c3, big_c } => {
            let c2 = n as f64 * c3 * (1.0 / (2.0 * a)).max(1.0 / (2.0 * b));
            (c2, n as f64 * big_c)
        }
    }
}

struct CertNumbers {
    a: f64,
    big_d: f64,
    b: f64,
    m: f64,
    big_m: f64,
    e: f64,
    c1: f64,
    big_m1: f64,
}

fn attach_uf_cert<T: Scalar>(sys: SystemSpec<T>, c: CertNumbers, noise: &NoiseSpec) -> SystemSpec<T> {
    let (c2, m2) = noise_trace_constants(noise, sys.dim(), c.a, c.b);
    match UfCertificate::new(
        lit(c.a),
        lit(c.big_d),
        lit(c.b),
        lit(c.m),
        lit(c.big_m),
        lit(c.e),
        lit(c.c1),
        lit(c.big_m1),
        lit(c2),
        lit(m2),
    ) {
        Ok(cert) => sys.with_metadata(Certificate::Uf(cert)),
        Err(err) => {
            let mut sys = sys;
            sys.metadata_note =
                Some(format!("default certificate dropped: {err} (noise too strong for the trace bound)"));
            sys
        }
    }
}

enum ExampleKind {
    /// `V = ln(2 + sin t + |x|^2)`, `F = |x|^4 + |x|^2` (or `- |x|^2` relaxed)
    LogPotential { relax: bool },
    /// `V = sqrt(2 + sin t + |x|^2)`, same `F`
    SqrtPotential,
    /// `V = (2 + sin t)(1 - exp(-|x|^2))`, `F = (e^r (r -+ ...))/4` integral form
    ExpFriction { relax: bool },
}

fn example_4x<T: Scalar>(params: &BuiltinParams, kind: ExampleKind) -> Result<SystemSpec<T>> {
    let n = params.n.unwrap_or(2);
    if n == 0 {
        return Err(Error::Contract("dimension must be positive".into()));
    }
    let period: T = T::PI() + T::PI();
    let noise_spec = params.noise.clone().unwrap_or(NoiseSpec::Zero);
    let amplitude = params.amplitude.unwrap_or(0.0);

    let half: T = lit(0.5);
    let one = T::one();
    let two: T = lit(2.0);
    let quarter: T = lit(0.25);

    let (name, potential, friction, numbers): (&str, TimeScalarField<T>, ScalarField<T>, CertNumbers) =
        match kind {
            ExampleKind::LogPotential { relax } => {
                let potential = radial_time_potential(
                    n,
                    period,
                    T::zero(),
                    move |r: T, t: T| (two + t.sin() + r).ln(),
                    move |r: T, t: T| one / (two + t.sin() + r),
                    move |r: T, t: T| t.cos() / (two + t.sin() + r),
                );
                if relax {
                    let friction = radial_friction_field(
                        n,
                        move |r: T| r * r - r,
                        move |r: T| two * r - one,
                        move |_| two,
                    );
                    // Remark-level variant: constants derived numerically
                    // (scan of the inner-product bound), not from the text.
                    let numbers = CertNumbers {
                        a: 8.0,
                        big_d: 50.0,
                        b: 8.0,
                        m: 1.0,
                        big_m: 44.0,
                        e: amplitude.abs(),
                        c1: 0.0,
                        big_m1: 1.0,
                    };
                    ("example-4.1-relax", potential, friction, numbers)
                } else {
                    let friction = radial_friction_field(
                        n,
                        move |r: T| r * r + r,
                        move |r: T| two * r + one,
                        move |_| two,
                    );
                    let numbers = CertNumbers {
                        a: 8.0,
                        big_d: 19.0,
                        b: 8.0,
                        m: 1.0,
                        big_m: 36.0,
                        e: amplitude.abs(),
                        c1: 0.0,
                        big_m1: 1.0,
                    };
                    ("example-4.1", potential, friction, numbers)
                }
            }
            ExampleKind::SqrtPotential => {
                let potential = radial_time_potential(
                    n,
                    period,
                    one,
                    move |r: T, t: T| (two + t.sin() + r).sqrt(),
                    move |r: T, t: T| half / (two + t.sin() + r).sqrt(),
                    move |r: T, t: T| half * t.cos() / (two + t.sin() + r).sqrt(),
                );
                let friction = radial_friction_field(
                    n,
                    move |r: T| r * r + r,
                    move |r: T| two * r + one,
                    move |_| two,
                );
                let numbers = CertNumbers {
                    a: 2.0,
                    big_d: 1.0,
                    b: 2.0,
                    m: 1.5,
                    big_m: 2.0,
                    e: amplitude.abs(),
                    c1: 0.0,
                    big_m1: 0.5,
                };
                ("example-4.2", potential, friction, numbers)
            }
            ExampleKind::ExpFriction { relax } => {
                let potential = radial_time_potential(
                    n,
                    period,
                    T::zero(),
                    move |r: T, t: T| (two + t.sin()) * (one - (-r).exp()),
                    move |r: T, t: T| (two + t.sin()) * (-r).exp(),
                    move |r: T, t: T| t.cos() * (one - (-r).exp()),
                );
                if relax {
                    // F = (e^r (r - 2) + 2)/4, the relaxation-oscillation variant.
                    let friction = radial_friction_field(
                        n,
                        move |r: T| quarter * (r.exp() * (r - two) + two),
                        move |r: T| quarter * r.exp() * (r - one),
                        move |r: T| quarter * r.exp() * r,
                    );
                    let numbers = CertNumbers {
                        a: 1.0,
                        big_d: 2.0,
                        b: 0.9,
                        m: 2.0,
                        big_m: 3.5,
                        e: amplitude.abs(),
                        c1: 0.0,
                        big_m1: 1.0,
                    };
                    ("example-4.3-relax", potential, friction, numbers)
                } else {
                    // F = r e^r / 4 = (1/4) integral_0^r e^s (s+1) ds.
                    let friction = radial_friction_field(
                        n,
                        move |r: T| quarter * r * r.exp(),
                        move |r: T| quarter * r.exp() * (r + one),
                        move |r: T| quarter * r.exp() * (r + two),
                    );
                    let numbers = CertNumbers {
                        a: 1.0,
                        big_d: 2.0,
                        b: 1.0,
                        m: 2.0,
                        big_m: 3.0,
                        e: amplitude.abs(),
                        c1: 0.0,
                        big_m1: 1.0,
                    };
                    ("example-4.3", potential, friction, numbers)
                }
            }
        };

    let m_exp = numbers.m;
    let sys = SystemSpec::new(
        FrictionSpec::hessian_of(friction)?,
        potential,
        axis_forcing(n, amplitude, period),
        noise_field(n, &noise_spec, m_exp),
        period,
    )?
    .with_name(name);
    Ok(attach_uf_cert(sys, numbers, &noise_spec))
}

/// `x'' + x' + x^3 = dB + sin t` in first-order form: `F = |x|^2 / 2`
/// (friction matrix `I`), `V = |x|^4 / 4`, and the forcing folded into the
/// bracketed drift as `E = -sin t` so that `-E` lands on the right-hand side.
fn open_problem<T: Scalar>(params: &BuiltinParams) -> Result<SystemSpec<T>> {
    let n = params.n.unwrap_or(1);
    if n == 0 {
        return Err(Error::Contract("dimension must be positive".into()));
    }
    let period: T = T::PI() + T::PI();
    let amplitude = params.amplitude.unwrap_or(1.0);
    let noise_spec = params.noise.clone().unwrap_or(NoiseSpec::Const { sigma: 1.0 });

    let half: T = lit(0.5);
    let quarter: T = lit(0.25);
    let potential = radial_time_potential(
        n,
        period,
        T::zero(),
        move |r: T, _| quarter * r * r,
        move |r: T, _| half * r,
        move |_, _| T::zero(),
    );
    let friction = radial_friction_field(n, move |r: T| half * r, move |_| half, move |_| T::zero());

    let sys = SystemSpec::new(
        FrictionSpec::hessian_of(friction)?,
        potential,
        axis_forcing(n, amplitude, period),
        noise_field(n, &noise_spec, 2.0),
        period,
    )?
    .with_name("open-problem-v4");

    // Polynomial recipe with q = 1: a = nu = 1/2, and then
    // <grad V, grad F - a x> = |x|^4 / 2 exactly, so b = 1/2, M = 0.
    let numbers = CertNumbers {
        a: 0.5,
        big_d: 1.0,
        b: 0.5,
        m: 2.0,
        big_m: 0.0,
        e: amplitude.abs(),
        c1: 0.0,
        big_m1: 0.0,
    };
    Ok(attach_uf_cert(sys, numbers, &noise_spec))
}

/// Periodically forced van der Pol oscillator with noise:
/// `F = mu (|x|^4/12 - |x|^2/2)` (friction matrix `mu (x^2 - 1)` on the
/// line), `V = |x|^2 / 2`.
fn van_der_pol<T: Scalar>(params: &BuiltinParams) -> Result<SystemSpec<T>> {
    let n = params.n.unwrap_or(1);
    if n == 0 {
        return Err(Error::Contract("dimension must be positive".into()));
    }
    let mu = params.mu.unwrap_or(1.0);
    if mu <= 0.0 {
        return Err(Error::Contract("van der Pol friction scale mu must be positive".into()));
    }
    let period: T = T::PI() + T::PI();
    let amplitude = params.amplitude.unwrap_or(1.0);
    let noise_spec = params.noise.clone().unwrap_or(NoiseSpec::Const { sigma: 1.0 });

    let half: T = lit(0.5);
    let mu_t: T = lit(mu);
    let twelfth: T = lit(1.0 / 12.0);
    let sixth: T = lit(1.0 / 6.0);
    let potential = radial_time_potential(
        n,
        period,
        T::zero(),
        move |r: T, _| half * r,
        move |_, _| half,
        move |_, _| T::zero(),
    );
    let friction = radial_friction_field(
        n,
        move |r: T| mu_t * (twelfth * r * r - half * r),
        move |r: T| mu_t * (sixth * r - half),
        move |_| mu_t * sixth,
    );

    let sys = SystemSpec::new(
        FrictionSpec::hessian_of(friction)?,
        potential,
        axis_forcing(n, amplitude, period),
        noise_field(n, &noise_spec, 2.0),
        period,
    )?
    .with_name("van-der-pol");

    // a = 1 from the polynomial recipe (deg F = 4); b = mu/6 and
    // M = 3 (mu+1)^2 / (2 mu) make the inner-product bound exact, and the
    // bracket minimum is -3 mu / 4, covered by D = 1 + mu.
    let numbers = CertNumbers {
        a: 1.0,
        big_d: 1.0 + mu,
        b: mu / 6.0,
        m: 2.0,
        big_m: 3.0 * (mu + 1.0) * (mu + 1.0) / (2.0 * mu),
        e: amplitude.abs(),
        c1: 0.0,
        big_m1: 0.0,
    };
    Ok(attach_uf_cert(sys, numbers, &noise_spec))
}

/// User-supplied polynomial potential and friction function.
fn polynomial<T: Scalar>(params: &BuiltinParams) -> Result<SystemSpec<T>> {
    let n = params.n.unwrap_or(1);
    if n == 0 {
        return Err(Error::Contract("dimension must be positive".into()));
    }
    let v_terms = params
        .v_terms
        .as_ref()
        .ok_or_else(|| Error::PolyParse("polynomial builtin requires potential coefficients".into()))?;
    let f_terms = params
        .f_terms
        .as_ref()
        .ok_or_else(|| Error::PolyParse("polynomial builtin requires friction coefficients".into()))?;
    let v_poly: MultiPoly<T> = MultiPoly::from_f64_terms(n, v_terms)?;
    let f_poly: MultiPoly<T> = MultiPoly::from_f64_terms(n, f_terms)?;
    if v_poly.is_zero() {
        return Err(Error::PolyParse("potential polynomial is zero".into()));
    }
    if f_poly.is_zero() {
        return Err(Error::PolyParse("friction polynomial is zero".into()));
    }

    let period: T = params.period.map(lit).unwrap_or_else(|| T::PI() + T::PI());
    if !(period > T::zero()) {
        return Err(Error::Contract("period must be positive".into()));
    }
    let amplitude = params.amplitude.unwrap_or(0.0);
    let noise_spec = params.noise.clone().unwrap_or(NoiseSpec::Zero);

    // Grid estimate of the potential's lower bound (declared, then checked
    // by the verifiers like any user field).
    let dirs = crate::polysys::sphere_directions::<T>(n, 64);
    let mut vmin = T::infinity();
    for step in 0..=100 {
        let radius: T = lit(step as f64 * 0.5);
        for u in &dirs {
            let x: Vec<T> = u.iter().map(|&c| c * radius).collect();
            let v = v_poly.eval(&x);
            if v < vmin {
                vmin = v;
            }
        }
    }
    let lower = vmin - T::one();

    let vp = v_poly.clone();
    let vg = v_poly;
    let potential = TimeScalarField::new(n, period, lower, move |x: &[T], _| vp.eval(x))
        .with_grad_x(move |x, _, out| {
            vg.grad_into(x, out);
            Ok(())
        })
        .with_dt(|_, _| Ok(T::zero()));

    let sys = SystemSpec::new(
        FrictionSpec::hessian_of(ScalarField::from_poly(f_poly))?,
        potential,
        axis_forcing(n, amplitude, period),
        noise_field(n, &noise_spec, 2.0),
        period,
    )?
    .with_name("polynomial");
    let mut sys = sys;
    sys.metadata_note =
        Some("no default certificate: derive one with uf1_constants / fit_inner_bound".into());
    Ok(sys)
}
