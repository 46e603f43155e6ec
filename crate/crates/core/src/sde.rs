//! Time stepping for the second-order systems, safe for superlinear
//! polynomial drifts.
//!
//! The default scheme tames the full drift increment, `b -> b / (1 + h|b|)`,
//! which caps the per-step drift displacement below one and prevents the
//! moment explosion plain Euler-Maruyama suffers under superlinear drifts.
//! Noise increments come from counter-based streams keyed by
//! `(seed, path, step, lane)`, so ensembles are bit-identical for any thread
//! count, and the step is snapped to an integer fraction of the period so
//! stroboscopic snapshots land on exact grid points.

use crate::error::{Error, Result, Witness};
use crate::linalg::{self, Mat};
use crate::lyapunov::{psi, UfCertificate};
use crate::model::{DriftScratch, SystemSpec};
use crate::rng;
use crate::scalar::{lit, lower_slice, to_f64, Scalar};
use rayon::prelude::*;

/// Maximal tolerated fraction of blown-up paths before the empirical law is
/// considered biased.
pub const BLOWUP_LIMIT: f64 = 0.01;

/// Reserved step index for initial-condition draws.
const INIT_STEP: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    EulerMaruyama,
    TamedEuler,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "euler-maruyama",
            Scheme::TamedEuler => "tamed-euler",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler-maruyama" => Ok(Scheme::EulerMaruyama),
            "tamed-euler" => Ok(Scheme::TamedEuler),
            other => Err(Error::Contract(format!(
                "unknown scheme `{other}`; expected euler-maruyama or tamed-euler"
            ))),
        }
    }
}

/// Simulation horizon: an end time or a whole number of periods.
#[derive(Clone, Copy, Debug)]
pub enum Horizon<T> {
    EndTime(T),
    Periods(u32),
}

/// Simulation configuration.
#[derive(Clone, Debug)]
pub struct SdeConfig<T> {
    /// Requested step; snapped to `period / ceil(period / step)`.
    pub step: T,
    pub scheme: Scheme,
    pub horizon: Horizon<T>,
    pub seed: u64,
    pub ensemble_size: usize,
    pub burn_in_periods: u32,
    /// Explicit snapshot times; defaults to the integer multiples of the
    /// period from the burn-in to the horizon.
    pub snapshot_times: Option<Vec<T>>,
}

impl<T: Scalar> SdeConfig<T> {
    pub fn new(step: T, scheme: Scheme, horizon: Horizon<T>, seed: u64) -> Self {
        SdeConfig {
            step,
            scheme,
            horizon,
            seed,
            ensemble_size: 1,
            burn_in_periods: 0,
            snapshot_times: None,
        }
    }

    pub fn with_ensemble(mut self, size: usize) -> Self {
        self.ensemble_size = size;
        self
    }

    pub fn with_burn_in(mut self, periods: u32) -> Self {
        self.burn_in_periods = periods;
        self
    }

    pub fn with_snapshot_times(mut self, times: Vec<T>) -> Self {
        self.snapshot_times = Some(times);
        self
    }
}

/// Step and snapshot schedule after snapping to the period grid.
#[derive(Clone, Debug)]
pub struct TimeGrid<T> {
    pub h: T,
    pub requested_h: T,
    pub steps_per_period: u64,
    pub total_steps: u64,
    pub snapshot_steps: Vec<u64>,
    pub snapshot_times: Vec<T>,
}

/// Snap the step to the period and turn snapshot times into step indices.
pub fn resolve_time_grid<T: Scalar>(sys: &SystemSpec<T>, config: &SdeConfig<T>) -> Result<TimeGrid<T>> {
    if !(config.step > T::zero()) {
        return Err(Error::Contract("step size must be positive".into()));
    }
    if config.ensemble_size == 0 {
        return Err(Error::Contract("ensemble size must be at least 1".into()));
    }
    let period = sys.period();
    let ratio = (period / config.step).ceil();
    let steps_per_period = ratio.to_f64().unwrap_or(f64::NAN) as u64;
    if steps_per_period == 0 || !ratio.is_finite() {
        return Err(Error::Contract("step size exceeds the period".into()));
    }
    let h = period / lit(steps_per_period as f64);

    let horizon_steps = match config.horizon {
        Horizon::Periods(p) => steps_per_period * p as u64,
        Horizon::EndTime(t_end) => {
            if !(t_end > T::zero()) {
                return Err(Error::Contract("end time must be positive".into()));
            }
            (t_end / h).ceil().to_f64().unwrap_or(f64::NAN) as u64
        }
    };

    let snapshot_times: Vec<T> = match &config.snapshot_times {
        Some(times) => times.clone(),
        None => {
            let last_period = horizon_steps / steps_per_period;
            (config.burn_in_periods as u64..=last_period)
                .map(|k| period * lit(k as f64))
                .collect()
        }
    };
    let mut snapshot_steps = Vec::with_capacity(snapshot_times.len());
    for &t in &snapshot_times {
        let idx = (t / h).round().to_f64().unwrap_or(f64::NAN);
        if !idx.is_finite() || idx < 0.0 {
            return Err(Error::Contract(format!("snapshot time {} is not reachable", to_f64(t))));
        }
        let idx = idx as u64;
        let aligned = h * lit(idx as f64);
        if (aligned - t).abs() > lit::<T>(1e-9) * (T::one() + t.abs()) {
            return Err(Error::Contract(format!(
                "snapshot time {} does not lie on the step grid (h = {})",
                to_f64(t),
                to_f64(h)
            )));
        }
        snapshot_steps.push(idx);
    }
    if snapshot_steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("snapshot times must be strictly increasing".into()));
    }
    let total_steps = horizon_steps.max(snapshot_steps.last().copied().unwrap_or(0));
    Ok(TimeGrid {
        h,
        requested_h: config.step,
        steps_per_period,
        total_steps,
        snapshot_steps,
        snapshot_times,
    })
}

/// State of one path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathState<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub t: T,
}

impl<T: Scalar> PathState<T> {
    pub fn new(x: Vec<T>, y: Vec<T>, t: T) -> Self {
        PathState { x, y, t }
    }

    pub fn origin(n: usize) -> Self {
        PathState { x: vec![T::zero(); n], y: vec![T::zero(); n], t: T::zero() }
    }

    pub fn is_finite(&self) -> bool {
        linalg::all_finite(&self.x) && linalg::all_finite(&self.y) && self.t.is_finite()
    }

    fn witness(&self) -> Witness {
        Witness { x: lower_slice(&self.x), y: lower_slice(&self.y), t: to_f64(self.t) }
    }
}

/// Reusable buffers for stepping.
pub struct StepScratch<T> {
    dx: Vec<T>,
    dy: Vec<T>,
    noise: Vec<T>,
    drift: DriftScratch<T>,
}

impl<T: Scalar> StepScratch<T> {
    pub fn new(n: usize) -> Self {
        StepScratch {
            dx: vec![T::zero(); n],
            dy: vec![T::zero(); n],
            noise: vec![T::zero(); n],
            drift: DriftScratch::new(n),
        }
    }
}

fn step_in_place<T: Scalar>(
    sys: &SystemSpec<T>,
    scheme: Scheme,
    state: &mut PathState<T>,
    h: T,
    noise_increment: &[T],
    ws: &mut StepScratch<T>,
) -> Result<()> {
    sys.drift_into(&state.x, &state.y, state.t, &mut ws.dx, &mut ws.dy, &mut ws.drift)?;
    sys.noise_apply_into(&state.x, &state.y, state.t, noise_increment, &mut ws.noise)?;
    let factor = match scheme {
        Scheme::EulerMaruyama => h,
        Scheme::TamedEuler => {
            let drift_norm = (linalg::norm_sq(&ws.dx) + linalg::norm_sq(&ws.dy)).sqrt();
            h / (T::one() + h * drift_norm)
        }
    };
    for i in 0..state.x.len() {
        state.x[i] += factor * ws.dx[i];
        state.y[i] += factor * ws.dy[i] + ws.noise[i];
    }
    if !linalg::all_finite(&state.x) || !linalg::all_finite(&state.y) {
        return Err(Error::BlowUp { t: to_f64(state.t), witness: state.witness() });
    }
    Ok(())
}

/// One Euler-Maruyama step; the caller supplies the noise increment
/// (`sqrt(h) * standard normal` per Wiener coordinate).
pub fn em_step<T: Scalar>(
    sys: &SystemSpec<T>,
    state: &PathState<T>,
    h: T,
    noise_increment: &[T],
) -> Result<PathState<T>> {
    let mut next = state.clone();
    let mut ws = StepScratch::new(sys.dim());
    step_in_place(sys, Scheme::EulerMaruyama, &mut next, h, noise_increment, &mut ws)?;
    next.t = state.t + h;
    Ok(next)
}

/// One tamed-Euler step: the full drift `(dx, dy)` is scaled by
/// `1 / (1 + h |drift|)`; the diffusion is untamed.
pub fn tamed_step<T: Scalar>(
    sys: &SystemSpec<T>,
    state: &PathState<T>,
    h: T,
    noise_increment: &[T],
) -> Result<PathState<T>> {
    let mut next = state.clone();
    let mut ws = StepScratch::new(sys.dim());
    step_in_place(sys, Scheme::TamedEuler, &mut next, h, noise_increment, &mut ws)?;
    next.t = state.t + h;
    Ok(next)
}

struct RawPath<T> {
    /// One row `(x, y)` per snapshot, until blow-up.
    rows: Vec<Option<Vec<T>>>,
    blow_up: Option<(f64, PathState<T>)>,
}

fn run_path<T: Scalar>(
    sys: &SystemSpec<T>,
    grid: &TimeGrid<T>,
    scheme: Scheme,
    seed: u64,
    path_index: u64,
    initial: &PathState<T>,
) -> RawPath<T> {
    let n = sys.dim();
    let k = sys.wiener_dim();
    let mut ws = StepScratch::new(n);
    let mut state = initial.clone();
    let mut rows: Vec<Option<Vec<T>>> = vec![None; grid.snapshot_steps.len()];
    let mut next_snapshot = 0usize;
    let sqrt_h = grid.h.sqrt();
    let mut increment = vec![T::zero(); k];
    let mut last_good = state.clone();

    for step in 0..=grid.total_steps {
        if next_snapshot < grid.snapshot_steps.len() && grid.snapshot_steps[next_snapshot] == step {
            let mut row = Vec::with_capacity(2 * n);
            row.extend_from_slice(&state.x);
            row.extend_from_slice(&state.y);
            rows[next_snapshot] = Some(row);
            next_snapshot += 1;
        }
        if step == grid.total_steps {
            break;
        }
        state.t = grid.h * lit(step as f64);
        for (lane, slot) in increment.iter_mut().enumerate() {
            *slot = sqrt_h * lit(rng::std_normal(rng::key4(seed, path_index, step, lane as u64)));
        }
        // Any step failure (overflow in the drift, non-finite update) ends
        // the path as a blow-up.
        if step_in_place(sys, scheme, &mut state, grid.h, &increment, &mut ws).is_err() {
            return RawPath { rows, blow_up: Some((to_f64(state.t), last_good)) };
        }
        last_good.x.copy_from_slice(&state.x);
        last_good.y.copy_from_slice(&state.y);
        last_good.t = state.t;
    }
    RawPath { rows, blow_up: None }
}

/// A simulated path observed at the snapshot times.
#[derive(Clone, Debug)]
pub struct SimulatedPath<T> {
    pub snapshots: Vec<PathState<T>>,
    /// Set when the path blew up: `(time, last finite state)`. Snapshots
    /// after the blow-up are dropped.
    pub blow_up: Option<(f64, PathState<T>)>,
}

/// Simulate a single path (path index 0 of the seed's ensemble).
pub fn simulate_path<T: Scalar>(
    sys: &SystemSpec<T>,
    config: &SdeConfig<T>,
    initial: &PathState<T>,
) -> Result<SimulatedPath<T>> {
    if !initial.is_finite() {
        return Err(Error::Contract("initial state must be finite".into()));
    }
    let grid = resolve_time_grid(sys, config)?;
    let raw = run_path(sys, &grid, config.scheme, config.seed, 0, initial);
    let snapshots = raw
        .rows
        .iter()
        .zip(&grid.snapshot_times)
        .filter_map(|(row, &t)| {
            row.as_ref().map(|r| {
                let n = sys.dim();
                PathState::new(r[..n].to_vec(), r[n..].to_vec(), t)
            })
        })
        .collect();
    Ok(SimulatedPath { snapshots, blow_up: raw.blow_up })
}

/// Initial law of the ensemble.
#[derive(Clone, Debug)]
pub enum InitialLaw<T> {
    /// Every path starts at the same state.
    Point { x: Vec<T>, y: Vec<T> },
    /// Independent normal coordinates around `mean` (length `2n`) with
    /// per-coordinate standard deviations `std`.
    ProductNormal { mean: Vec<T>, std: Vec<T> },
}

impl<T: Scalar> InitialLaw<T> {
    pub fn origin(n: usize) -> Self {
        InitialLaw::Point { x: vec![T::zero(); n], y: vec![T::zero(); n] }
    }

    fn sample(&self, seed: u64, path: u64, n: usize) -> PathState<T> {
        match self {
            InitialLaw::Point { x, y } => PathState::new(x.clone(), y.clone(), T::zero()),
            InitialLaw::ProductNormal { mean, std } => {
                let draw = |lane: u64, m: T, s: T| {
                    m + s * lit::<T>(rng::std_normal(rng::key4(seed, path, INIT_STEP, lane)))
                };
                let x = (0..n).map(|i| draw(i as u64, mean[i], std[i])).collect();
                let y = (0..n).map(|i| draw((n + i) as u64, mean[n + i], std[n + i])).collect();
                PathState::new(x, y, T::zero())
            }
        }
    }
}

/// Provenance of an empirical law.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: u64,
    pub scheme: String,
    pub h: f64,
    pub requested_h: f64,
    pub n: usize,
    pub k: usize,
    pub ensemble_size: usize,
    pub rejected_paths: usize,
}

/// Ensemble samples of `(x, y)` frozen at one time instant.
#[derive(Clone, Debug)]
pub struct EmpiricalLaw<T> {
    pub time: T,
    /// `surviving paths x 2n` matrix; each row is `(x, y)`.
    pub samples: Mat<T>,
    /// Original path index of each row.
    pub path_indices: Vec<usize>,
    pub provenance: Provenance,
}

impl<T: Scalar> EmpiricalLaw<T> {
    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }

    pub fn state_dim(&self) -> usize {
        self.samples.cols()
    }
}

fn config_hash<T: Scalar>(config: &SdeConfig<T>, grid: &TimeGrid<T>) -> u64 {
    let mut h = rng::splitmix64(config.seed);
    h = rng::key2(h, to_f64(grid.h).to_bits());
    h = rng::key2(h, grid.total_steps);
    h = rng::key2(h, config.ensemble_size as u64);
    h = rng::key2(h, config.scheme.name().len() as u64 ^ (config.scheme as u64) << 32);
    for &s in &grid.snapshot_steps {
        h = rng::key2(h, s);
    }
    h
}

/// Simulate an ensemble and collect stroboscopic snapshots.
///
/// Paths are mutually independent, each driven by its own counter-based
/// substream, so the result does not depend on the thread count. Paths that
/// blow up are excluded from every snapshot and counted; more than
/// [`BLOWUP_LIMIT`] of the ensemble blowing up is an error because the
/// surviving empirical law would be biased.
pub fn ensemble_snapshots<T: Scalar>(
    sys: &SystemSpec<T>,
    config: &SdeConfig<T>,
    initial: &InitialLaw<T>,
) -> Result<Vec<EmpiricalLaw<T>>> {
    let grid = resolve_time_grid(sys, config)?;
    let n = sys.dim();
    let m = config.ensemble_size;

    let raws: Vec<RawPath<T>> = (0..m as u64)
        .into_par_iter()
        .map(|path| {
            let start = initial.sample(config.seed, path, n);
            run_path(sys, &grid, config.scheme, config.seed, path, &start)
        })
        .collect();

    let rejected = raws.iter().filter(|r| r.blow_up.is_some()).count();
    if rejected as f64 > BLOWUP_LIMIT * m as f64 {
        return Err(Error::EnsembleQuality {
            rejected,
            total: m,
            limit_percent: BLOWUP_LIMIT * 100.0,
        });
    }

    let hash = config_hash(config, &grid);
    let provenance = Provenance {
        seed: config.seed,
        config_hash: hash,
        scheme: config.scheme.name().to_string(),
        h: to_f64(grid.h),
        requested_h: to_f64(grid.requested_h),
        n,
        k: sys.wiener_dim(),
        ensemble_size: m,
        rejected_paths: rejected,
    };

    let mut laws = Vec::with_capacity(grid.snapshot_steps.len());
    for (si, &t) in grid.snapshot_times.iter().enumerate() {
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(m - rejected);
        let mut idx = Vec::with_capacity(m - rejected);
        for (p, raw) in raws.iter().enumerate() {
            if raw.blow_up.is_some() {
                continue;
            }
            if let Some(row) = &raw.rows[si] {
                rows.push(row.clone());
                idx.push(p);
            }
        }
        laws.push(EmpiricalLaw {
            time: t,
            samples: Mat::from_rows(&rows),
            path_indices: idx,
            provenance: provenance.clone(),
        });
    }
    Ok(laws)
}

/// Monte Carlo estimate of the generator drift from one-step increments.
#[derive(Clone, Debug)]
pub struct DynkinEstimate<T> {
    pub estimate: T,
    pub std_error: T,
    pub samples: usize,
    pub excluded: usize,
}

/// Estimate `(E[Psi(Z_h)] - Psi(z)) / h` over `m` independent one-step
/// Euler-Maruyama samples. Compare against the closed-form generator drift.
pub fn dynkin_estimate<T: Scalar>(
    sys: &SystemSpec<T>,
    cert: &UfCertificate<T>,
    z: &PathState<T>,
    h: T,
    m: usize,
    seed: u64,
) -> Result<DynkinEstimate<T>> {
    if m < 2 {
        return Err(Error::Contract("need at least two Monte Carlo samples".into()));
    }
    let psi0 = psi(sys, cert, &z.x, &z.y, z.t)?;
    let n = sys.dim();
    let k = sys.wiener_dim();
    let sqrt_h = h.sqrt();

    // Accumulate deviations from the first sample's value; with zero noise
    // every sample is identical and the variance comes out exactly zero.
    let shift = {
        let mut ws = StepScratch::new(n);
        let mut state = z.clone();
        let mut increment = vec![T::zero(); k];
        for (lane, slot) in increment.iter_mut().enumerate() {
            *slot = sqrt_h * lit(rng::std_normal(rng::key4(seed, 0, 0, lane as u64)));
        }
        step_in_place(sys, Scheme::EulerMaruyama, &mut state, h, &increment, &mut ws)?;
        state.t = z.t + h;
        (psi(sys, cert, &state.x, &state.y, state.t)? - psi0) / h
    };

    let chunked: Vec<(T, T, usize, usize)> = (0..m)
        .into_par_iter()
        .chunks(4096)
        .map(|chunk| {
            let mut ws = StepScratch::new(n);
            let mut increment = vec![T::zero(); k];
            let mut state = z.clone();
            let mut sum = T::zero();
            let mut sum_sq = T::zero();
            let mut count = 0usize;
            let mut excluded = 0usize;
            for j in chunk {
                state.x.copy_from_slice(&z.x);
                state.y.copy_from_slice(&z.y);
                state.t = z.t;
                for (lane, slot) in increment.iter_mut().enumerate() {
                    *slot = sqrt_h * lit(rng::std_normal(rng::key4(seed, j as u64, 0, lane as u64)));
                }
                let stepped = step_in_place(sys, Scheme::EulerMaruyama, &mut state, h, &increment, &mut ws);
                let value = match stepped {
                    Ok(()) => {
                        state.t = z.t + h;
                        psi(sys, cert, &state.x, &state.y, state.t).map(|p1| (p1 - psi0) / h)
                    }
                    Err(e) => Err(e),
                };
                match value {
                    Ok(v) if v.is_finite() => {
                        let d = v - shift;
                        sum += d;
                        sum_sq += d * d;
                        count += 1;
                    }
                    _ => excluded += 1,
                }
            }
            (sum, sum_sq, count, excluded)
        })
        .collect();

    let mut sum = T::zero();
    let mut sum_sq = T::zero();
    let mut count = 0usize;
    let mut excluded = 0usize;
    for (s, s2, c, e) in chunked {
        sum += s;
        sum_sq += s2;
        count += c;
        excluded += e;
    }
    if excluded as f64 > BLOWUP_LIMIT * m as f64 || count < 2 {
        return Err(Error::EnsembleQuality {
            rejected: excluded,
            total: m,
            limit_percent: BLOWUP_LIMIT * 100.0,
        });
    }
    let count_t: T = lit(count as f64);
    let dev_mean = sum / count_t;
    let var = ((sum_sq / count_t) - dev_mean * dev_mean).max(T::zero());
    let std_error = (var / count_t).sqrt();
    Ok(DynkinEstimate { estimate: shift + dev_mean, std_error, samples: count, excluded })
}

#[cfg(test)]
mod tests;
