//! Multivariate polynomial machinery for the dissipativity analysis of
//! polynomial potentials and frictions: leading forms, positive definiteness
//! on the unit sphere, the constant recipe for the noise bound, and the
//! empirical fit of the friction-potential inner-product growth.

use crate::error::{Error, Result, Witness};
use crate::linalg::{self, Mat};
use crate::model::{ScalarField, TimeScalarField};
use crate::rng;
use crate::scalar::{lit, lower_slice, Scalar};

/// Multivariate polynomial in sparse exponent-tuple form.
#[derive(Clone, Debug)]
pub struct MultiPoly<T> {
    n: usize,
    terms: Vec<(Vec<u32>, T)>,
}

impl<T: Scalar> MultiPoly<T> {
    /// Build from raw terms; merges duplicate exponent tuples and drops
    /// exact zeros.
    pub fn new(n: usize, raw: Vec<(Vec<u32>, T)>) -> Result<Self> {
        let mut terms: Vec<(Vec<u32>, T)> = Vec::new();
        for (exps, coeff) in raw {
            if exps.len() != n {
                return Err(Error::PolyParse(format!(
                    "exponent tuple {exps:?} has length {}, expected {n}",
                    exps.len()
                )));
            }
            if !coeff.is_finite() {
                return Err(Error::PolyParse(format!("non-finite coefficient for {exps:?}")));
            }
            match terms.iter_mut().find(|(e, _)| *e == exps) {
                Some((_, c)) => *c = *c + coeff,
                None => terms.push((exps, coeff)),
            }
        }
        terms.retain(|(_, c)| *c != T::zero());
        terms.sort_by(|(ea, _), (eb, _)| {
            let da: u32 = ea.iter().sum();
            let db: u32 = eb.iter().sum();
            da.cmp(&db).then_with(|| ea.cmp(eb))
        });
        Ok(MultiPoly { n, terms })
    }

    pub fn from_f64_terms(n: usize, raw: &[(Vec<u32>, f64)]) -> Result<Self> {
        Self::new(n, raw.iter().map(|(e, c)| (e.clone(), lit(*c))).collect())
    }

    /// `||x||^(2q)` expanded into monomials.
    pub fn norm_even_power(n: usize, q: u32) -> Self {
        let mut terms = Vec::new();
        let mut exps = vec![0u32; n];
        fn rec<T: Scalar>(
            terms: &mut Vec<(Vec<u32>, T)>,
            exps: &mut Vec<u32>,
            coord: usize,
            left: u32,
            coeff_num: f64,
        ) {
            let n = exps.len();
            if coord == n - 1 {
                exps[coord] = 2 * left;
                terms.push((exps.clone(), lit(coeff_num)));
                return;
            }
            for k in 0..=left {
                exps[coord] = 2 * k;
                // running multinomial factor: choose(left, k) applied recursively
                let mut c = coeff_num;
                for i in 0..k {
                    c = c * (left - i) as f64 / (i + 1) as f64;
                }
                rec::<T>(terms, exps, coord + 1, left - k, c);
            }
            exps[coord] = 0;
        }
        rec::<T>(&mut terms, &mut exps, 0, q, 1.0);
        MultiPoly::new(n, terms).expect("multinomial expansion is well formed")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Vec<u32>, T)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximal total degree; zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.n);
        let mut acc = T::zero();
        for (exps, coeff) in &self.terms {
            let mut term = *coeff;
            for (xi, &e) in x.iter().zip(exps) {
                if e > 0 {
                    term = term * xi.powi(e as i32);
                }
            }
            acc += term;
        }
        acc
    }

    pub fn grad_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(out.len(), self.n);
        out.fill(T::zero());
        for (exps, coeff) in &self.terms {
            for k in 0..self.n {
                let ek = exps[k];
                if ek == 0 {
                    continue;
                }
                let mut term = *coeff * lit(ek as f64);
                for (i, (xi, &e)) in x.iter().zip(exps).enumerate() {
                    let p = if i == k { e - 1 } else { e };
                    if p > 0 {
                        term = term * xi.powi(p as i32);
                    }
                }
                out[k] += term;
            }
        }
    }

    pub fn grad(&self, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.n];
        self.grad_into(x, &mut g);
        g
    }

    pub fn hess_into(&self, x: &[T], out: &mut Mat<T>) {
        debug_assert_eq!(out.rows(), self.n);
        out.fill(T::zero());
        for (exps, coeff) in &self.terms {
            for k in 0..self.n {
                for l in 0..self.n {
                    let (ek, el) = (exps[k], exps[l]);
                    let factor = if k == l {
                        if ek < 2 {
                            continue;
                        }
                        (ek * (ek - 1)) as f64
                    } else {
                        if ek == 0 || el == 0 {
                            continue;
                        }
                        (ek * el) as f64
                    };
                    let mut term = *coeff * lit(factor);
                    for (i, (xi, &e)) in x.iter().zip(exps).enumerate() {
                        let drop = (i == k) as u32 + (i == l) as u32;
                        let p = e - drop;
                        if p > 0 {
                            term = term * xi.powi(p as i32);
                        }
                    }
                    out[(k, l)] += term;
                }
            }
        }
    }

    /// Sub-polynomial of maximal total degree.
    pub fn leading_form(&self) -> Result<HomogeneousForm<T>> {
        if self.terms.is_empty() {
            return Err(Error::EmptyPoly);
        }
        let d = self.degree();
        let lead: Vec<_> = self
            .terms
            .iter()
            .filter(|(e, _)| e.iter().sum::<u32>() == d)
            .cloned()
            .collect();
        HomogeneousForm::new(MultiPoly { n: self.n, terms: lead })
    }

    /// `Some(q)` when this polynomial is literally `||x||^(2q)`.
    pub fn unit_norm_power(&self) -> Option<u32> {
        let d = self.degree();
        if d == 0 || d % 2 != 0 {
            return None;
        }
        let q = d / 2;
        let reference = Self::norm_even_power(self.n, q);
        if reference.terms.len() != self.terms.len() {
            return None;
        }
        let tol: T = lit(1e-12);
        for ((ea, ca), (eb, cb)) in reference.terms.iter().zip(&self.terms) {
            if ea != eb || (*ca - *cb).abs() > tol * ca.abs() {
                return None;
            }
        }
        Some(q)
    }

    /// `Some(scale)` when this polynomial is `scale * ||x||^(2q)` for a
    /// positive scale.
    pub fn norm_power_multiple(&self) -> Option<T> {
        let d = self.degree();
        if d == 0 || d % 2 != 0 || self.terms.is_empty() {
            return None;
        }
        let reference = Self::norm_even_power(self.n, d / 2);
        if reference.terms.len() != self.terms.len() {
            return None;
        }
        let scale = self.terms[0].1 / reference.terms[0].1;
        if scale <= T::zero() {
            return None;
        }
        let tol: T = lit(1e-12);
        for ((ea, ca), (eb, cb)) in reference.terms.iter().zip(&self.terms) {
            if ea != eb || (*ca * scale - *cb).abs() > tol * (*cb).abs().max(T::one()) {
                return None;
            }
        }
        Some(scale)
    }
}

/// Polynomial whose terms all share one total degree.
#[derive(Clone, Debug)]
pub struct HomogeneousForm<T> {
    poly: MultiPoly<T>,
    degree: u32,
}

impl<T: Scalar> HomogeneousForm<T> {
    pub fn new(poly: MultiPoly<T>) -> Result<Self> {
        if poly.terms.is_empty() {
            return Err(Error::EmptyPoly);
        }
        let degree = poly.degree();
        if poly.terms.iter().any(|(e, _)| e.iter().sum::<u32>() != degree) {
            return Err(Error::PolyParse("terms of a homogeneous form must share one degree".into()));
        }
        Ok(HomogeneousForm { poly, degree })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.poly.n
    }

    pub fn poly(&self) -> &MultiPoly<T> {
        &self.poly
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.poly.eval(x)
    }

    pub fn grad(&self, x: &[T]) -> Vec<T> {
        self.poly.grad(x)
    }
}

/// Deterministic quasi-uniform directions on the unit sphere of `R^n`.
///
/// Point sets are prefix-nested: the first `k` points are identical for any
/// `count >= k`, and for `n = 2` doubling the count refines the angle grid in
/// place. That makes sphere minima monotone under refinement.
pub fn sphere_directions<T: Scalar>(n: usize, count: usize) -> Vec<Vec<T>> {
    assert!(n >= 1);
    match n {
        1 => vec![vec![T::one()], vec![-T::one()]],
        2 => {
            let mut dirs = Vec::with_capacity(count + 4);
            for i in 0..n {
                for sign in [T::one(), -T::one()] {
                    let mut e = vec![T::zero(); n];
                    e[i] = sign;
                    dirs.push(e);
                }
            }
            let tau: T = T::PI() + T::PI();
            let c: T = lit(count as f64);
            for k in 0..count {
                let th = tau * lit(k as f64) / c;
                dirs.push(vec![th.cos(), th.sin()]);
            }
            dirs
        }
        _ => {
            let mut dirs = Vec::with_capacity(count + 2 * n);
            for i in 0..n {
                for sign in [T::one(), -T::one()] {
                    let mut e = vec![T::zero(); n];
                    e[i] = sign;
                    dirs.push(e);
                }
            }
            const SPHERE_SEED: u64 = 0x5fe2_9a1b_7c33_04d9;
            let mut i = 0u64;
            while dirs.len() < count + 2 * n {
                let v: Vec<f64> = (0..n)
                    .map(|j| rng::std_normal(rng::key3(SPHERE_SEED, i, j as u64)))
                    .collect();
                i += 1;
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-8 {
                    continue;
                }
                dirs.push(v.iter().map(|&x| lit(x / norm)).collect());
            }
            dirs
        }
    }
}

/// Result of a sphere minimization.
#[derive(Clone, Debug)]
pub struct SphereMin<T> {
    pub min_value: T,
    pub witness: Vec<T>,
    pub resolution: usize,
    pub positive_definite: bool,
}

const PD_CUTOFF: f64 = 1e-9;

/// Minimum of an even homogeneous form over the unit sphere: quasi-uniform
/// sampling at the given resolution, then projected-gradient descent with
/// step halving from every sampled point.
pub fn min_on_sphere<T: Scalar>(form: &HomogeneousForm<T>, resolution: usize) -> Result<SphereMin<T>> {
    if form.degree() % 2 != 0 {
        return Err(Error::OddDegreeForm(form.degree() as usize));
    }
    if resolution < 8 {
        return Err(Error::Contract(format!("sphere resolution {resolution} < 8")));
    }
    let n = form.dim();
    let dirs = sphere_directions::<T>(n, resolution);
    let mut best_val = T::infinity();
    let mut best_pt: Vec<T> = dirs[0].clone();
    for u in &dirs {
        let (v, p) = descend_on_sphere(form, u);
        if v < best_val {
            best_val = v;
            best_pt = p;
        }
        let sampled = form.eval(u);
        if sampled < best_val {
            best_val = sampled;
            best_pt = u.clone();
        }
    }
    Ok(SphereMin {
        min_value: best_val,
        witness: best_pt,
        resolution,
        positive_definite: best_val > lit(PD_CUTOFF),
    })
}

fn descend_on_sphere<T: Scalar>(form: &HomogeneousForm<T>, start: &[T]) -> (T, Vec<T>) {
    let n = start.len();
    let mut u = start.to_vec();
    let mut f = form.eval(&u);
    let mut eta: T = lit(0.1);
    for _ in 0..200 {
        let g = form.grad(&u);
        let gu = linalg::dot(&g, &u);
        let mut tangent = vec![T::zero(); n];
        for i in 0..n {
            tangent[i] = g[i] - gu * u[i];
        }
        let tn = linalg::norm(&tangent);
        if tn < lit::<T>(1e-14) * (T::one() + f.abs()) {
            break;
        }
        let mut step = eta;
        let mut improved = false;
        for _ in 0..40 {
            let mut v: Vec<T> = (0..n).map(|i| u[i] - step * tangent[i]).collect();
            let vn = linalg::norm(&v);
            if vn > T::zero() {
                linalg::scale(T::one() / vn, &mut v);
                let fv = form.eval(&v);
                if fv < f {
                    u = v;
                    f = fv;
                    eta = step + step;
                    improved = true;
                    break;
                }
            }
            step = step / (T::one() + T::one());
        }
        if !improved {
            break;
        }
    }
    (f, u)
}

/// Which leading form, if any, is literally a unit norm power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum UnitLeading {
    PotentialIsUnitNormPower,
    FrictionIsUnitNormPower,
    ScalarMultipleOnly,
    Neither,
}

/// Constant bundle for polynomial potential/friction pairs.
#[derive(Clone, Debug)]
pub struct Uf1Constants<T> {
    pub p: u32,
    pub q: u32,
    /// Joint sphere minimum of the two quadratic leading forms (`p = q = 1`).
    pub lambda: Option<T>,
    /// Sphere minimum of the friction leading form (`p + q > 2`).
    pub nu: Option<T>,
    pub a: T,
    pub c_max: T,
    pub m: T,
    pub unit_leading: UnitLeading,
    pub sphere_res: usize,
}

pub const DEFAULT_SPHERE_RES: usize = 512;

/// Derive the dissipativity constants for polynomial `V` and `F` with
/// positive definite leading forms of degrees `2p` and `2q`.
///
/// `a` is fixed for reproducibility: `a = lambda` when `p = q = 1`, `a = 1`
/// when `q >= 2`, and `a = min(1, nu)` when `q = 1 < p` (the friction
/// gradient term degenerates against `a x` at the same polynomial order
/// there, so `a` must stay below `2 nu`). Pass `a_override` to choose a
/// different admissible value.
pub fn uf1_constants<T: Scalar>(
    potential: &MultiPoly<T>,
    friction: &MultiPoly<T>,
    sphere_res: usize,
    a_override: Option<T>,
) -> Result<Uf1Constants<T>> {
    let v_lead = potential.leading_form()?;
    let f_lead = friction.leading_form()?;
    if v_lead.degree() % 2 != 0 {
        return Err(Error::OddDegreeForm(v_lead.degree() as usize));
    }
    if f_lead.degree() % 2 != 0 {
        return Err(Error::OddDegreeForm(f_lead.degree() as usize));
    }
    let p = v_lead.degree() / 2;
    let q = f_lead.degree() / 2;
    if p == 0 || q == 0 {
        return Err(Error::Contract("leading forms must have positive degree".into()));
    }

    let v_min = min_on_sphere(&v_lead, sphere_res)?;
    if !v_min.positive_definite {
        return Err(Error::CertificateFailure {
            reason: format!("potential leading form is not positive definite (min {})", v_min.min_value),
            witness: Witness::at_x(lower_slice(&v_min.witness)),
        });
    }
    let f_min = min_on_sphere(&f_lead, sphere_res)?;
    if !f_min.positive_definite {
        return Err(Error::CertificateFailure {
            reason: format!("friction leading form is not positive definite (min {})", f_min.min_value),
            witness: Witness::at_x(lower_slice(&f_min.witness)),
        });
    }

    let two = T::one() + T::one();
    let (lambda, nu, a, c_max) = if p == 1 && q == 1 {
        let lambda = v_min.min_value.min(f_min.min_value);
        let a = a_override.unwrap_or(lambda);
        if a <= T::zero() || a >= two * lambda {
            return Err(Error::CertificateInvalid(format!(
                "a must lie in (0, 2 lambda) = (0, {}); got {a}",
                two * lambda
            )));
        }
        let c_max = (two * (two * lambda - a)).min(two * a);
        (Some(lambda), None, a, c_max)
    } else {
        let nu = f_min.min_value;
        let a = a_override.unwrap_or(if q == 1 { T::one().min(nu) } else { T::one() });
        if a <= T::zero() {
            return Err(Error::CertificateInvalid(format!("a must be positive; got {a}")));
        }
        if q == 1 && a >= two * nu {
            return Err(Error::CertificateInvalid(format!(
                "with deg F = 2 the inner-product bound needs a < 2 nu = {}; got {a}",
                two * nu
            )));
        }
        let four_pq: T = lit(4.0 * p as f64 * q as f64);
        let c_max = (four_pq * nu).min(two * a);
        (None, Some(nu), a, c_max)
    };

    let unit_leading = if v_lead.poly().unit_norm_power().is_some() {
        UnitLeading::PotentialIsUnitNormPower
    } else if f_lead.poly().unit_norm_power().is_some() {
        UnitLeading::FrictionIsUnitNormPower
    } else if v_lead.poly().norm_power_multiple().is_some() || f_lead.poly().norm_power_multiple().is_some() {
        UnitLeading::ScalarMultipleOnly
    } else {
        UnitLeading::Neither
    };

    let out = Uf1Constants {
        p,
        q,
        lambda,
        nu,
        a,
        c_max,
        m: lit((p + q - 1) as f64),
        unit_leading,
        sphere_res,
    };
    debug_assert!(out.c_max > T::zero());
    Ok(out)
}

/// Result of the empirical inner-product growth fit.
#[derive(Clone, Debug)]
pub struct InnerBoundFit<T> {
    pub b_hat: T,
    pub m_hat: T,
    pub big_m_hat: T,
    /// Per-shell `(R, min over sphere x time of <grad V, grad F - a x>)`.
    pub shell_minima: Vec<(T, T)>,
    /// Number of top shells used for the log-log fit.
    pub fitted_shells: usize,
}

/// Estimate `(b, m, M)` such that `<grad_x V, grad F - a x> >= b ||x||^(2m) - M`
/// from shell minima of the inner product.
///
/// The growth exponent is fitted from data instead of assumed, so the same
/// operation serves non-polynomial fields. `M` is the empirical defect over
/// the sampled grid and is only valid there.
pub fn fit_inner_bound<T: Scalar>(
    potential: &TimeScalarField<T>,
    friction: &ScalarField<T>,
    a: T,
    radii: &[T],
    sphere_res: usize,
    t_samples: usize,
) -> Result<InnerBoundFit<T>> {
    if radii.len() < 3 {
        return Err(Error::Contract(format!("need at least 3 shells, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("shell radii must be strictly increasing".into()));
    }
    let n = friction.dim();
    let dirs = sphere_directions::<T>(n, sphere_res);
    let period = potential.period();
    let times: Vec<T> = (0..t_samples.max(1))
        .map(|i| period * lit(i as f64) / lit(t_samples.max(1) as f64))
        .collect();

    let mut grad_v = vec![T::zero(); n];
    let mut grad_f = vec![T::zero(); n];
    let mut shell_minima: Vec<(T, T)> = Vec::with_capacity(radii.len());
    let mut samples: Vec<(T, T, Vec<T>)> = Vec::new(); // (R, g, x)
    for &radius in radii {
        let mut shell_min = T::infinity();
        let mut shell_arg = dirs[0].clone();
        for u in &dirs {
            let x: Vec<T> = u.iter().map(|&c| c * radius).collect();
            friction.grad_into(&x, &mut grad_f)?;
            for i in 0..n {
                grad_f[i] -= a * x[i];
            }
            let mut g_min_t = T::infinity();
            for &t in &times {
                potential.grad_x_into(&x, t, &mut grad_v)?;
                let g = linalg::dot(&grad_v, &grad_f);
                if g < g_min_t {
                    g_min_t = g;
                }
            }
            samples.push((radius, g_min_t, x.clone()));
            if g_min_t < shell_min {
                shell_min = g_min_t;
                shell_arg = x;
            }
        }
        if !shell_min.is_finite() {
            return Err(Error::NumericDomain {
                what: "inner-product shell minimum".into(),
                witness: Witness::at_x(lower_slice(&shell_arg)),
            });
        }
        shell_minima.push((radius, shell_min));
    }

    // The top three shell minima must grow strictly.
    let top = &shell_minima[shell_minima.len() - 3..];
    if top[1].1 <= top[0].1 || top[2].1 <= top[1].1 {
        let witness = samples
            .iter()
            .rev()
            .find(|(r, g, _)| *r == top[2].0 && *g == top[2].1)
            .map(|(_, _, x)| x.clone())
            .unwrap_or_default();
        return Err(Error::DissipativityFailure {
            reason: format!(
                "shell minima do not grow on the top three shells: {:?}",
                top.iter().map(|(r, g)| (r.to_f64().unwrap(), g.to_f64().unwrap())).collect::<Vec<_>>()
            ),
            witness: Witness::at_x(lower_slice(&witness)),
        });
    }

    // Log-log least squares on the largest shells.
    let fitted_shells = (shell_minima.len() / 2).max(3).min(shell_minima.len());
    let fit = &shell_minima[shell_minima.len() - fitted_shells..];
    if fit.iter().any(|(_, g)| *g <= T::zero()) {
        return Err(Error::DissipativityFailure {
            reason: "shell minima used for the growth fit are not positive".into(),
            witness: Witness::at_x(Vec::new()),
        });
    }
    let k: T = lit(fit.len() as f64);
    let mut sx = T::zero();
    let mut sy = T::zero();
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (r, g) in fit {
        let lx = r.ln();
        let ly = g.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    let intercept = (sy - slope * sx) / k;
    let two = T::one() + T::one();
    let m_hat = slope / two;
    let b_hat = intercept.exp() / two;

    let mut defect = T::zero();
    for (r, g, _) in &samples {
        let bound = b_hat * r.powf(two * m_hat);
        let d = bound - *g;
        if d > defect {
            defect = d;
        }
    }

    Ok(InnerBoundFit { b_hat, m_hat, big_m_hat: defect, shell_minima, fitted_shells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly1(terms: &[(u32, f64)]) -> MultiPoly<f64> {
        MultiPoly::from_f64_terms(1, &terms.iter().map(|&(e, c)| (vec![e], c)).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn leading_form_picks_top_degree() {
        // x^4/12 - x^2/2 -> x^4/12
        let p = poly1(&[(4, 1.0 / 12.0), (2, -0.5)]);
        let lead = p.leading_form().unwrap();
        assert_eq!(lead.degree(), 4);
        assert_relative_eq!(lead.eval(&[2.0]), 16.0 / 12.0, max_relative = 1e-14);
    }

    #[test]
    fn leading_form_expanded_norm_fourth() {
        // ||x||^4 + ||x||^2 in n=2 -> x1^4 + 2 x1^2 x2^2 + x2^4
        let mut terms = MultiPoly::<f64>::norm_even_power(2, 2).terms().to_vec();
        terms.extend(MultiPoly::<f64>::norm_even_power(2, 1).terms().to_vec());
        let p = MultiPoly::new(2, terms).unwrap();
        let lead = p.leading_form().unwrap();
        assert_eq!(lead.degree(), 4);
        assert_eq!(lead.poly().terms().len(), 3);
        assert_relative_eq!(lead.eval(&[1.0, 1.0]), 4.0, max_relative = 1e-14);
        assert_eq!(lead.poly().unit_norm_power(), Some(2));
    }

    #[test]
    fn leading_form_mixed_monomials() {
        let p: MultiPoly<f64> = MultiPoly::from_f64_terms(2, &[(vec![3, 1], 1.0), (vec![1, 1], 1.0)]).unwrap();
        let lead = p.leading_form().unwrap();
        assert_eq!(lead.degree(), 4);
        assert_eq!(lead.poly().terms().len(), 1);
    }

    #[test]
    fn zero_poly_has_no_leading_form() {
        let p = MultiPoly::<f64>::new(1, vec![]).unwrap();
        assert!(matches!(p.leading_form(), Err(Error::EmptyPoly)));
    }

    #[test]
    fn sphere_min_axis_quadratic() {
        // x1^2 + 2 x2^2: min 1 at (+-1, 0)
        let p: MultiPoly<f64> = MultiPoly::from_f64_terms(2, &[(vec![2, 0], 1.0), (vec![0, 2], 2.0)]).unwrap();
        let m = min_on_sphere(&p.leading_form().unwrap(), 64).unwrap();
        assert_relative_eq!(m.min_value, 1.0, epsilon = 1e-9);
        assert!(m.positive_definite);
        assert_relative_eq!(m.witness[0].abs(), 1.0, epsilon = 1e-6);
        assert!(m.witness[1].abs() < 1e-6);
    }

    #[test]
    fn sphere_min_constant_on_sphere() {
        let p = MultiPoly::<f64>::norm_even_power(3, 2);
        let m = min_on_sphere(&p.leading_form().unwrap(), 64).unwrap();
        assert_relative_eq!(m.min_value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sphere_min_detects_sign_change() {
        // x1^4 - x2^4: min -1 at (0, +-1)
        let p: MultiPoly<f64> = MultiPoly::from_f64_terms(2, &[(vec![4, 0], 1.0), (vec![0, 4], -1.0)]).unwrap();
        let m = min_on_sphere(&p.leading_form().unwrap(), 64).unwrap();
        assert_relative_eq!(m.min_value, -1.0, epsilon = 1e-9);
        assert!(!m.positive_definite);
        assert!(m.witness[0].abs() < 1e-6);
    }

    #[test]
    fn odd_degree_rejected() {
        let p: MultiPoly<f64> = MultiPoly::from_f64_terms(1, &[(vec![3], 1.0)]).unwrap();
        assert!(matches!(
            min_on_sphere(&p.leading_form().unwrap(), 64),
            Err(Error::OddDegreeForm(3))
        ));
    }

    #[test]
    fn refinement_is_monotone() {
        let p: MultiPoly<f64> = MultiPoly::from_f64_terms(
            3,
            &[
                (vec![4, 0, 0], 1.0),
                (vec![0, 4, 0], 0.3),
                (vec![0, 0, 4], 2.0),
                (vec![2, 2, 0], -0.4),
                (vec![0, 2, 2], 0.7),
            ],
        )
        .unwrap();
        let lead = p.leading_form().unwrap();
        let coarse = min_on_sphere(&lead, 64).unwrap().min_value;
        let fine = min_on_sphere(&lead, 128).unwrap().min_value;
        assert!(fine <= coarse + 1e-9, "coarse={coarse} fine={fine}");
    }

    #[test]
    fn homogeneity_scaling() {
        let p: MultiPoly<f64> = MultiPoly::from_f64_terms(2, &[(vec![2, 2], 1.5), (vec![4, 0], -0.2)]).unwrap();
        let form = p.leading_form().unwrap();
        let u = [0.6, -0.8];
        for s in [0.5, 2.0, 7.3] {
            let scaled: Vec<f64> = u.iter().map(|&c| c * s).collect();
            let expected = s.powi(form.degree() as i32) * form.eval(&u);
            assert_relative_eq!(form.eval(&scaled), expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn euler_identity_on_random_points() {
        let p: MultiPoly<f64> = MultiPoly::from_f64_terms(
            3,
            &[(vec![2, 2, 0], 1.0), (vec![0, 0, 4], -2.5), (vec![1, 1, 2], 0.7)],
        )
        .unwrap();
        let form = p.leading_form().unwrap();
        let d = form.degree() as f64;
        for i in 0..100u64 {
            let x: Vec<f64> = (0..3).map(|j| 4.0 * rng::std_normal(rng::key3(11, i, j)) + 0.1).collect();
            let g = form.grad(&x);
            let lhs: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
            let rhs = d * form.eval(&x);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()),
                "euler identity violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn constants_for_quartic_friction() {
        // V = ||x||^2, F = ||x||^4: p=1, q=2, nu=1, a=1, c_max = min(8, 2) = 2, m=2.
        for n in [1usize, 2] {
            let v = MultiPoly::<f64>::norm_even_power(n, 1);
            let f = MultiPoly::<f64>::norm_even_power(n, 2);
            let c = uf1_constants(&v, &f, 256, None).unwrap();
            assert_eq!((c.p, c.q), (1, 2));
            assert_relative_eq!(c.nu.unwrap(), 1.0, epsilon = 1e-9);
            assert_relative_eq!(c.a, 1.0, epsilon = 1e-12);
            assert_relative_eq!(c.c_max, 2.0, epsilon = 1e-9);
            assert_relative_eq!(c.m, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constants_for_quadratic_pair() {
        // V = x^2, F = x^2: lambda = 1, a = lambda, c_max = min(2(2-1), 2) = 2, m = 1.
        let v = poly1(&[(2, 1.0)]);
        let c = uf1_constants(&v, &v, 256, None).unwrap();
        assert_eq!((c.p, c.q), (1, 1));
        assert_relative_eq!(c.lambda.unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(c.a, 1.0, epsilon = 1e-9);
        assert_relative_eq!(c.c_max, 2.0, epsilon = 1e-9);
        assert_relative_eq!(c.m, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_leading_form_is_a_certificate_failure() {
        let v = poly1(&[(2, 1.0)]);
        let f = poly1(&[(4, -1.0)]);
        match uf1_constants(&v, &f, 64, None) {
            Err(Error::CertificateFailure { witness, .. }) => {
                assert_relative_eq!(witness.x[0].abs(), 1.0, epsilon = 1e-6);
            }
            other => panic!("expected certificate failure, got {other:?}"),
        }
    }

    #[test]
    fn open_problem_polynomials_need_small_a() {
        // V = x^4/4, F = x^2/2: q = 1, nu = 1/2; a defaults to min(1, nu) = 1/2.
        let v = poly1(&[(4, 0.25)]);
        let f = poly1(&[(2, 0.5)]);
        let c = uf1_constants(&v, &f, 64, None).unwrap();
        assert_relative_eq!(c.a, 0.5, epsilon = 1e-9);
        assert_relative_eq!(c.c_max, 1.0, epsilon = 1e-9);
        assert!(matches!(uf1_constants(&v, &f, 64, Some(1.0)), Err(Error::CertificateInvalid(_))));
    }
}
