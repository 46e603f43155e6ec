//! Two-sample distances and permutation tests between stroboscopic
//! snapshots, operationalizing equality of laws at times one period apart.
//!
//! The identity of laws cannot be tested exactly; the adopted criterion is
//! "standardized distance below a threshold, with a non-significant
//! permutation test and no significant upward trend in the distance
//! sequence". Energy distance is the default statistic (no tuning
//! parameters); sliced Wasserstein-1 is the cross-check.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng::{self, CounterRng};
use crate::scalar::{lit, to_f64, Scalar};
use crate::sde::EmpiricalLaw;
use rayon::prelude::*;

/// Pairwise terms above this budget are estimated from a seeded subsample
/// of exactly this many pairs.
pub const PAIR_BUDGET: usize = 10_000_000;

/// Options for the distance statistics.
#[derive(Clone, Copy, Debug)]
pub struct StatOpts {
    /// Subsampling budget per pairwise term.
    pub pair_budget: usize,
    /// Seed for pair subsampling and projection directions.
    pub seed: u64,
    /// Projection count for sliced Wasserstein-1.
    pub n_projections: usize,
}

impl Default for StatOpts {
    fn default() -> Self {
        StatOpts { pair_budget: PAIR_BUDGET, seed: 0x7e57_5eed, n_projections: 64 }
    }
}

/// Which two-sample statistic to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatKind {
    Energy,
    SlicedW1,
}

impl StatKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatKind::Energy => "energy",
            StatKind::SlicedW1 => "sliced-w1",
        }
    }
}

impl std::str::FromStr for StatKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(StatKind::Energy),
            "sliced-w1" => Ok(StatKind::SlicedW1),
            other => Err(Error::Contract(format!(
                "unknown statistic `{other}`; expected energy or sliced-w1"
            ))),
        }
    }
}

#[inline]
fn row_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

fn check_dims<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<()> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch { what: "two-sample state", expected: a.cols(), got: b.cols() });
    }
    if a.rows() < 2 || b.rows() < 2 {
        return Err(Error::Contract("each sample needs at least 2 points".into()));
    }
    Ok(())
}

/// Mean pairwise distance between rows of `a` and rows of `b` (ordered
/// pairs, diagonal included), exact below the pair budget and estimated
/// from a seeded pair subsample above it.
fn mean_cross_distance<T: Scalar>(a: &Mat<T>, b: &Mat<T>, budget: usize, pair_seed: u64) -> (T, bool) {
    let (na, nb) = (a.rows(), b.rows());
    let pairs = na.saturating_mul(nb);
    if pairs <= budget {
        let sum: T = (0..na)
            .into_par_iter()
            .map(|i| {
                let mut s = T::zero();
                for j in 0..nb {
                    s += row_distance(a.row(i), b.row(j));
                }
                s
            })
            .collect::<Vec<T>>()
            .into_iter()
            .fold(T::zero(), |acc, v| acc + v);
        (sum / lit(pairs as f64), false)
    } else {
        let sum: T = (0..budget)
            .into_par_iter()
            .chunks(1 << 16)
            .map(|chunk| {
                let mut s = T::zero();
                for p in chunk {
                    let i = pick(rng::key3(pair_seed, p as u64, 0), na);
                    let j = pick(rng::key3(pair_seed, p as u64, 1), nb);
                    s += row_distance(a.row(i), b.row(j));
                }
                s
            })
            .collect::<Vec<T>>()
            .into_iter()
            .fold(T::zero(), |acc, v| acc + v);
        (sum / lit(budget as f64), true)
    }
}

/// Map a key to `0..n` by the 128-bit multiply trick (bias `~ n / 2^64`).
#[inline]
fn pick(key: u64, n: usize) -> usize {
    ((key as u128 * n as u128) >> 64) as usize
}

/// Energy distance between two empirical samples (V-statistic form):
/// `2 E|A - B| - E|A - A'| - E|B - B'|`.
pub fn energy_distance<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<T> {
    energy_distance_with(a, b, &StatOpts::default()).map(|(v, _)| v)
}

/// [`energy_distance`] with explicit options; the flag reports whether any
/// term was subsampled.
pub fn energy_distance_with<T: Scalar>(a: &Mat<T>, b: &Mat<T>, opts: &StatOpts) -> Result<(T, bool)> {
    check_dims(a, b)?;
    let (ab, s1) = mean_cross_distance(a, b, opts.pair_budget, rng::key2(opts.seed, 0));
    let (aa, s2) = mean_cross_distance(a, a, opts.pair_budget, rng::key2(opts.seed, 1));
    let (bb, s3) = mean_cross_distance(b, b, opts.pair_budget, rng::key2(opts.seed, 2));
    let two: T = lit(2.0);
    // The V-statistic is nonnegative; clamp away subsampling noise so the
    // reported distance honors that.
    Ok(((two * ab - aa - bb).max(T::zero()), s1 || s2 || s3))
}

/// 1-D Wasserstein-1 distance between sorted samples (quantile coupling;
/// unequal sizes handled by piecewise-constant quantile functions).
fn wasserstein1_sorted<T: Scalar>(a: &[T], b: &[T]) -> T {
    let (na, nb) = (a.len(), b.len());
    if na == nb {
        let mut s = T::zero();
        for i in 0..na {
            s += (a[i] - b[i]).abs();
        }
        return s / lit(na as f64);
    }
    // Merge the quantile breakpoints i/na and j/nb.
    let mut total = T::zero();
    let mut i = 0usize;
    let mut j = 0usize;
    let mut q_prev = 0.0f64;
    while i < na && j < nb {
        let qa = (i + 1) as f64 / na as f64;
        let qb = (j + 1) as f64 / nb as f64;
        let q = qa.min(qb);
        total += lit::<T>(q - q_prev) * (a[i] - b[j]).abs();
        q_prev = q;
        if qa <= q + 1e-15 {
            i += 1;
        }
        if qb <= q + 1e-15 {
            j += 1;
        }
    }
    total
}

/// Sliced Wasserstein-1: average 1-D W1 over seeded random unit directions.
pub fn sliced_w1<T: Scalar>(a: &Mat<T>, b: &Mat<T>, n_projections: usize, seed: u64) -> Result<T> {
    check_dims(a, b)?;
    if n_projections < 16 {
        return Err(Error::Contract(format!("need at least 16 projections, got {n_projections}")));
    }
    let d = a.cols();
    let values: Vec<T> = (0..n_projections as u64)
        .into_par_iter()
        .map(|p| {
            // Seeded gaussian direction, normalized.
            let mut dir: Vec<T> = (0..d)
                .map(|l| lit::<T>(rng::std_normal(rng::key3(seed, p, l as u64))))
                .collect();
            let norm = crate::linalg::norm(&dir);
            if norm > T::zero() {
                crate::linalg::scale(T::one() / norm, &mut dir);
            } else {
                dir[0] = T::one();
            }
            let mut pa: Vec<T> = (0..a.rows()).map(|i| crate::linalg::dot(a.row(i), &dir)).collect();
            let mut pb: Vec<T> = (0..b.rows()).map(|i| crate::linalg::dot(b.row(i), &dir)).collect();
            pa.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
            pb.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
            wasserstein1_sorted(&pa, &pb)
        })
        .collect();
    let sum = values.into_iter().fold(T::zero(), |acc, v| acc + v);
    Ok(sum / lit(n_projections as f64))
}

fn statistic<T: Scalar>(kind: StatKind, a: &Mat<T>, b: &Mat<T>, opts: &StatOpts) -> Result<T> {
    match kind {
        StatKind::Energy => energy_distance_with(a, b, opts).map(|(v, _)| v),
        StatKind::SlicedW1 => sliced_w1(a, b, opts.n_projections, opts.seed),
    }
}

/// Outcome of a permutation test.
#[derive(Clone, Debug)]
pub struct PermutationOutcome<T> {
    pub observed: T,
    pub p_value: f64,
    pub n_perm: usize,
    /// The pooled sample was a single repeated point; `p = 1` by convention.
    pub degenerate: bool,
}

/// Two-sample permutation test: `p = (1 + #{permuted >= observed}) / (n_perm + 1)`.
pub fn permutation_test<T: Scalar>(
    a: &Mat<T>,
    b: &Mat<T>,
    kind: StatKind,
    n_perm: usize,
    seed: u64,
    opts: &StatOpts,
) -> Result<PermutationOutcome<T>> {
    check_dims(a, b)?;
    if n_perm < 100 {
        return Err(Error::Contract(format!("need at least 100 permutations, got {n_perm}")));
    }
    let (na, nb) = (a.rows(), b.rows());
    let d = a.cols();
    let pooled: Vec<&[T]> = (0..na).map(|i| a.row(i)).chain((0..nb).map(|j| b.row(j))).collect();

    let first = pooled[0];
    if pooled.iter().all(|row| row.iter().zip(first).all(|(&u, &v)| u == v)) {
        return Ok(PermutationOutcome { observed: T::zero(), p_value: 1.0, n_perm, degenerate: true });
    }

    // The pair-subsample stream is shared by the observed and permuted
    // statistics so the test compares like with like.
    let stat_opts = StatOpts { seed: rng::key2(seed, 0xb0b), ..*opts };
    let observed = statistic(kind, a, b, &stat_opts)?;

    let mut indices: Vec<usize> = (0..na + nb).collect();
    let mut perm_a = Mat::zeros(na, d);
    let mut perm_b = Mat::zeros(nb, d);
    let mut exceed = 0usize;
    for perm in 0..n_perm as u64 {
        let mut shuffler = CounterRng::from_parts(seed, perm + 1);
        indices.iter_mut().enumerate().for_each(|(i, v)| *v = i);
        shuffler.shuffle(&mut indices);
        fill_from_pooled(&pooled, &indices[..na], &mut perm_a);
        fill_from_pooled(&pooled, &indices[na..], &mut perm_b);
        let stat = statistic(kind, &perm_a, &perm_b, &stat_opts)?;
        if stat >= observed {
            exceed += 1;
        }
    }
    let p_value = (1.0 + exceed as f64) / (n_perm as f64 + 1.0);
    Ok(PermutationOutcome { observed, p_value, n_perm, degenerate: false })
}

fn fill_from_pooled<T: Scalar>(pooled: &[&[T]], picks: &[usize], out: &mut Mat<T>) {
    for (r, &idx) in picks.iter().enumerate() {
        let src = pooled[idx];
        for (c, &v) in src.iter().enumerate() {
            out[(r, c)] = v;
        }
    }
}

/// Per-coordinate standardization parameters (pooled mean and population
/// standard deviation; constant coordinates keep scale one).
#[derive(Clone, Debug, serde::Serialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Standardize both samples by pooled per-coordinate mean and standard
/// deviation so distance thresholds are scale-free.
pub fn standardize_pair<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<(Mat<T>, Mat<T>, Standardization)> {
    check_dims(a, b)?;
    let d = a.cols();
    let total = a.rows() + b.rows();
    let mut mean = vec![T::zero(); d];
    let mut var = vec![T::zero(); d];
    for m in [a, b] {
        for i in 0..m.rows() {
            for (c, &v) in m.row(i).iter().enumerate() {
                mean[c] += v;
            }
        }
    }
    let count: T = lit(total as f64);
    for mu in mean.iter_mut() {
        *mu /= count;
    }
    for m in [a, b] {
        for i in 0..m.rows() {
            for (c, &v) in m.row(i).iter().enumerate() {
                let dlt = v - mean[c];
                var[c] += dlt * dlt;
            }
        }
    }
    let std: Vec<T> = var
        .iter()
        .map(|&v| {
            let s = (v / count).sqrt();
            if s > T::zero() {
                s
            } else {
                T::one()
            }
        })
        .collect();

    let rescale = |m: &Mat<T>| -> Mat<T> {
        let mut out = Mat::zeros(m.rows(), d);
        for i in 0..m.rows() {
            for (c, &v) in m.row(i).iter().enumerate() {
                out[(i, c)] = (v - mean[c]) / std[c];
            }
        }
        out
    };
    let standardization = Standardization {
        mean: mean.iter().map(|&v| to_f64(v)).collect(),
        std: std.iter().map(|&v| to_f64(v)).collect(),
    };
    Ok((rescale(a), rescale(b), standardization))
}

/// Normal CDF (Abramowitz-Stegun 7.1.26 rational erf approximation,
/// absolute error below 1.5e-7; plenty for 5% trend decisions).
pub fn normal_cdf(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    let (sign, x) = if x < 0.0 { (-1.0, -x) } else { (1.0, x) };
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-x * x).exp();
    0.5 * (1.0 + sign * erf)
}

/// One-sided Mann-Kendall p-value against an increasing trend (small p
/// means the sequence is significantly increasing). Ties are handled by the
/// usual variance correction.
pub fn mann_kendall_increase_p(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return 1.0;
    }
    let mut s: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += match xs[j].partial_cmp(&xs[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let nf = n as f64;
    let mut var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    // Tie correction.
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        let tp = (j - i) as f64;
        if tp > 1.0 {
            var -= tp * (tp - 1.0) * (2.0 * tp + 5.0) / 18.0;
        }
        i = j;
    }
    if var <= 0.0 {
        return 1.0;
    }
    let z = if s > 0 { (s as f64 - 1.0) / var.sqrt() } else { (s as f64 + 1.0) / var.sqrt() };
    1.0 - normal_cdf(z)
}

/// Distance-with-test summary for one snapshot pair.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DistanceReport {
    pub statistic: String,
    pub value: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub seed: u64,
}

/// Run a two-sample test and package the outcome.
pub fn two_sample<T: Scalar>(
    a: &Mat<T>,
    b: &Mat<T>,
    kind: StatKind,
    n_perm: usize,
    seed: u64,
    opts: &StatOpts,
) -> Result<DistanceReport> {
    let outcome = permutation_test(a, b, kind, n_perm, seed, opts)?;
    Ok(DistanceReport {
        statistic: kind.name().to_string(),
        value: to_f64(outcome.observed),
        p_value: outcome.p_value,
        n_a: a.rows(),
        n_b: b.rows(),
        seed,
    })
}

/// Options for [`periodicity_report`].
#[derive(Clone, Debug)]
pub struct PeriodicityOpts {
    pub kind: StatKind,
    /// Distance threshold on standardized samples.
    pub epsilon: f64,
    pub n_perm: usize,
    pub seed: u64,
    pub stat: StatOpts,
    /// Significance level for the permutation and trend tests.
    pub alpha: f64,
}

impl Default for PeriodicityOpts {
    fn default() -> Self {
        PeriodicityOpts {
            kind: StatKind::Energy,
            epsilon: 0.05,
            n_perm: 199,
            seed: 1,
            stat: StatOpts::default(),
            alpha: 0.05,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PeriodDistance {
    /// Index of the earlier snapshot in the consecutive pair.
    pub k: usize,
    /// Standardized distance.
    pub value: f64,
    /// Raw (unstandardized) distance.
    pub raw_value: f64,
    pub p: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PeriodicityReport {
    pub distances: Vec<PeriodDistance>,
    pub verdict: bool,
    pub threshold: f64,
    pub statistic: String,
    /// Standardization of the final (verdict) pair.
    pub standardization: Standardization,
    /// Mann-Kendall p-value against an increasing trend on the final third.
    pub trend_p: f64,
    pub notes: Vec<String>,
}

impl PeriodicityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Consecutive-snapshot distances with permutation p-values and the
/// periodicity verdict: the last distance must fall below the threshold
/// with a non-significant permutation test, and the distance sequence over
/// the final third must not increase significantly.
pub fn periodicity_report<T: Scalar>(
    snapshots: &[EmpiricalLaw<T>],
    opts: &PeriodicityOpts,
) -> Result<PeriodicityReport> {
    if snapshots.len() < 3 {
        return Err(Error::Contract(format!(
            "periodicity needs at least 3 snapshots, got {}",
            snapshots.len()
        )));
    }
    let mut distances = Vec::with_capacity(snapshots.len() - 1);
    let mut last_standardization = None;
    let mut last_p = 0.0;
    for k in 0..snapshots.len() - 1 {
        let a = &snapshots[k].samples;
        let b = &snapshots[k + 1].samples;
        let (sa, sb, standardization) = standardize_pair(a, b)?;
        let outcome = permutation_test(&sa, &sb, opts.kind, opts.n_perm, rng::key2(opts.seed, k as u64), &opts.stat)?;
        let raw = statistic(opts.kind, a, b, &opts.stat)?;
        distances.push(PeriodDistance {
            k,
            value: to_f64(outcome.observed),
            raw_value: to_f64(raw),
            p: outcome.p_value,
        });
        last_p = outcome.p_value;
        last_standardization = Some(standardization);
    }

    let values: Vec<f64> = distances.iter().map(|d| d.value).collect();
    let tail_len = (values.len().div_ceil(3)).max(3).min(values.len());
    let trend_p = mann_kendall_increase_p(&values[values.len() - tail_len..]);

    let last = distances.last().expect("at least two snapshots");
    let below = last.value < opts.epsilon;
    let non_sig = last_p > opts.alpha;
    let no_increase = trend_p > opts.alpha;
    let verdict = below && non_sig && no_increase;

    let mut notes = Vec::new();
    if !below {
        notes.push(format!("final distance {} is not below the threshold {}", last.value, opts.epsilon));
    }
    if !non_sig {
        notes.push(format!("final permutation p-value {last_p} is significant"));
    }
    if !no_increase {
        notes.push(format!("distance sequence increases significantly (trend p = {trend_p})"));
    }

    Ok(PeriodicityReport {
        distances,
        verdict,
        threshold: opts.epsilon,
        statistic: opts.kind.name().to_string(),
        standardization: last_standardization.expect("at least one pair"),
        trend_p,
        notes,
    })
}

/// Mean/covariance profile entry at one within-period time.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ProfileRow {
    pub t_first: f64,
    pub t_second: f64,
    pub mean_first: Vec<f64>,
    pub mean_second: Vec<f64>,
    pub mean_diff: Vec<f64>,
    /// Combined standard error of the mean difference, per coordinate.
    pub mean_se: Vec<f64>,
    /// Coordinates whose mean difference exceeds three standard errors.
    pub flagged: Vec<bool>,
    pub cov_first: Vec<Vec<f64>>,
    pub cov_second: Vec<Vec<f64>>,
    pub cov_diff: Vec<Vec<f64>>,
    pub cov_se: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
    /// Inferred period (time shift between matched snapshots).
    pub period: f64,
}

impl ProfileTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn all_means_within_3se(&self) -> bool {
        self.rows.iter().all(|r| r.flagged.iter().all(|&f| !f))
    }
}

fn mean_and_cov<T: Scalar>(m: &Mat<T>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = m.cols();
    let n = m.rows();
    let mut mean = vec![0.0f64; d];
    for i in 0..n {
        for (c, &v) in m.row(i).iter().enumerate() {
            mean[c] += to_f64(v);
        }
    }
    for mu in mean.iter_mut() {
        *mu /= n as f64;
    }
    let mut cov = vec![vec![0.0f64; d]; d];
    for i in 0..n {
        let row = m.row(i);
        for a in 0..d {
            let da = to_f64(row[a]) - mean[a];
            for b in a..d {
                let db = to_f64(row[b]) - mean[b];
                cov[a][b] += da * db;
            }
        }
    }
    let denom = (n as f64 - 1.0).max(1.0);
    for a in 0..d {
        for b in a..d {
            cov[a][b] /= denom;
            cov[b][a] = cov[a][b];
        }
    }
    (mean, cov)
}

/// Per-time mean and covariance of matched within-period snapshots from two
/// consecutive periods, with differences and standard errors.
pub fn periodic_profile<T: Scalar>(
    first: &[EmpiricalLaw<T>],
    second: &[EmpiricalLaw<T>],
) -> Result<ProfileTable> {
    if first.len() != second.len() || first.is_empty() {
        return Err(Error::Contract(format!(
            "profile needs matched snapshot lists, got {} and {}",
            first.len(),
            second.len()
        )));
    }
    let period = to_f64(second[0].time) - to_f64(first[0].time);
    if period <= 0.0 {
        return Err(Error::Contract("second period must come after the first".into()));
    }
    for (a, b) in first.iter().zip(second) {
        let shift = to_f64(b.time) - to_f64(a.time);
        if (shift - period).abs() > 1e-9 * (1.0 + period) {
            return Err(Error::Contract(format!(
                "snapshot times are not matched one period apart: {} vs {}",
                to_f64(a.time),
                to_f64(b.time)
            )));
        }
        if a.state_dim() != b.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "profile state",
                expected: a.state_dim(),
                got: b.state_dim(),
            });
        }
    }

    let mut rows = Vec::with_capacity(first.len());
    for (a, b) in first.iter().zip(second) {
        let (mean1, cov1) = mean_and_cov(&a.samples);
        let (mean2, cov2) = mean_and_cov(&b.samples);
        let d = mean1.len();
        let (n1, n2) = (a.len() as f64, b.len() as f64);
        let mut mean_diff = vec![0.0; d];
        let mut mean_se = vec![0.0; d];
        let mut flagged = vec![false; d];
        for c in 0..d {
            mean_diff[c] = mean2[c] - mean1[c];
            mean_se[c] = (cov1[c][c] / n1 + cov2[c][c] / n2).sqrt();
            flagged[c] = mean_diff[c].abs() > 3.0 * mean_se[c] && mean_se[c] > 0.0;
        }
        let mut cov_diff = vec![vec![0.0; d]; d];
        let mut cov_se = vec![vec![0.0; d]; d];
        for p in 0..d {
            for q in 0..d {
                cov_diff[p][q] = cov2[p][q] - cov1[p][q];
                // Asymptotic variance of a sample covariance entry under
                // near-normality: (c_pp c_qq + c_pq^2) / n.
                let v1 = (cov1[p][p] * cov1[q][q] + cov1[p][q] * cov1[p][q]) / n1;
                let v2 = (cov2[p][p] * cov2[q][q] + cov2[p][q] * cov2[p][q]) / n2;
                cov_se[p][q] = (v1 + v2).sqrt();
            }
        }
        rows.push(ProfileRow {
            t_first: to_f64(a.time),
            t_second: to_f64(b.time),
            mean_first: mean1,
            mean_second: mean2,
            mean_diff,
            mean_se,
            flagged,
            cov_first: cov1,
            cov_second: cov2,
            cov_diff,
            cov_se,
        });
    }
    Ok(ProfileTable { rows, period })
}
