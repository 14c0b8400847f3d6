//! Exact-expectation error analysis and seeded Monte Carlo verification.
//!
//! `exact_mse` is the primary oracle: it sums the estimator variance over
//! the finite observation alphabet in exact rational arithmetic, so the
//! claim `n * MSE = PUT` can be checked without sampling noise. `mc_mse` is
//! the secondary sanity layer; per-trial RNG streams are split off the
//! master seed by counter so results are bit-identical across thread counts.

use crate::rational::{rat_from_f64, rat_one, rat_to_f64, rat_zero, Rat};
use crate::scheme::{to_plain_scheme, SchemeError, SrScheme};
use num::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("theta has {got} entries, scheme expects {expected}")]
    ThetaLength { got: usize, expected: usize },
    #[error("theta is not a distribution: {0}")]
    ThetaInvalid(String),
    #[error("vertex index {x} out of range for v={v}")]
    VertexOutOfRange { x: usize, v: usize },
    #[error("need at least 2 trials, got {0}")]
    TooFewTrials(usize),
    #[error("need at least 1 client, got 0")]
    NoClients,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// How the data distribution is specified. `Uniform` and `Vertex` resolve
/// to exact rationals; `Explicit` entries are taken as exact rational images
/// of the floats and normalized by their exact sum.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSpec {
    Uniform,
    Vertex { x: usize },
    Explicit { probs: Vec<f64> },
}

impl ThetaSpec {
    pub fn to_rationals(&self, v: usize) -> Result<Vec<Rat>, SimError> {
        match self {
            ThetaSpec::Uniform => {
                let share = rat_one() / Rat::from_integer((v as i64).into());
                Ok(vec![share; v])
            }
            ThetaSpec::Vertex { x } => {
                if *x >= v {
                    return Err(SimError::VertexOutOfRange { x: *x, v });
                }
                let mut t = vec![rat_zero(); v];
                t[*x] = rat_one();
                Ok(t)
            }
            ThetaSpec::Explicit { probs } => {
                if probs.len() != v {
                    return Err(SimError::ThetaLength { got: probs.len(), expected: v });
                }
                if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                    return Err(SimError::ThetaInvalid("negative or non-finite entry".into()));
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(SimError::ThetaInvalid(format!("entries sum to {sum}")));
                }
                let exact: Vec<Rat> = probs.iter().map(|&p| rat_from_f64(p)).collect();
                let total: Rat = exact.iter().sum();
                Ok(exact.into_iter().map(|p| p / &total).collect())
            }
        }
    }

    pub fn to_f64(&self, v: usize) -> Result<Vec<f64>, SimError> {
        Ok(self.to_rationals(v)?.iter().map(rat_to_f64).collect())
    }
}

/// Whether clients share randomness with the server or run the round-robin
/// plain scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sr,
    Plain,
}

/// One Monte Carlo experiment: `trials` independent estimates, each from
/// `n` simulated clients drawing data from `theta`.
#[derive(Clone, Debug, Serialize)]
pub struct SimConfig {
    pub theta: ThetaSpec,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub mode: Mode,
    /// Project each estimate onto the probability simplex before measuring
    /// the error. Off by default: the calibrated estimator is unbiased only
    /// unprojected, and the trade-off formulas refer to the raw estimator.
    #[serde(default)]
    pub project: bool,
}

impl SimConfig {
    pub fn new(theta: ThetaSpec, n: usize, trials: usize, master_seed: u64, mode: Mode) -> Self {
        Self { theta, n, trials, master_seed, mode, project: false }
    }

    fn validate(&self, scheme: &SrScheme) -> Result<(), SimError> {
        self.theta.to_rationals(scheme.v())?;
        if self.n == 0 {
            return Err(SimError::NoClients);
        }
        if self.mode == Mode::Plain && self.n <= scheme.u_count() {
            return Err(SimError::Scheme(SchemeError::PlainTooFewClients {
                n: self.n,
                c: scheme.u_count(),
            }));
        }
        Ok(())
    }
}

/// Monte Carlo output: mean and standard error of `n * MSE` over trials.
#[derive(Clone, Debug, Serialize)]
pub struct SimReport {
    pub mean_n_mse: f64,
    /// Sample standard deviation of the per-trial `n * MSE` divided by
    /// `sqrt(trials)`.
    pub stderr_n_mse: f64,
    pub config: SimConfig,
    pub elapsed_s: f64,
    #[serde(skip)]
    pub per_trial_mse: Vec<f64>,
}

/// Inverse-CDF tables for one scheme, built once per simulation.
struct SamplingTables {
    theta: Vec<f64>,
    theta_cdf: Vec<f64>,
    /// prob_z0[u][x] = P(Z = 0 | U = u, X = x)
    prob_z0: Vec<Vec<f64>>,
}

impl SamplingTables {
    fn new(scheme: &SrScheme, theta: &[f64]) -> Self {
        let mut cdf = Vec::with_capacity(theta.len());
        let mut acc = 0.0;
        for &p in theta {
            acc += p;
            cdf.push(acc);
        }
        // guard the last boundary against rounding
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        let prob_z0 = scheme
            .per_u()
            .iter()
            .map(|m| m.to_f64_rows().iter().map(|row| row[0]).collect())
            .collect();
        Self { theta: theta.to_vec(), theta_cdf: cdf, prob_z0 }
    }

    fn draw_x(&self, rng: &mut ChaCha8Rng) -> usize {
        let r: f64 = rng.random();
        self.theta_cdf.partition_point(|&c| c <= r).min(self.theta_cdf.len() - 1)
    }

    fn draw_z(&self, rng: &mut ChaCha8Rng, u: usize, x: usize) -> u8 {
        let r: f64 = rng.random();
        u8::from(r >= self.prob_z0[u][x])
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(point: &[f64]) -> Vec<f64> {
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite estimates"));
    let mut acc = 0.0;
    let mut threshold = 0.0;
    for (i, &val) in sorted.iter().enumerate() {
        acc += val;
        let candidate = (acc - 1.0) / (i + 1) as f64;
        if val - candidate > 0.0 {
            threshold = candidate;
        }
    }
    point.iter().map(|&p| (p - threshold).max(0.0)).collect()
}

fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    // ChaCha streams give 2^64 independent substreams per master seed, so
    // trials can run in any order on any number of threads.
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

fn trial_mse(
    scheme: &SrScheme,
    cfg: &SimConfig,
    tables: &SamplingTables,
    trial_index: u64,
) -> Result<f64, SimError> {
    let mut rng = trial_rng(cfg.master_seed, trial_index);
    let estimate = match cfg.mode {
        Mode::Sr => {
            let c = scheme.u_count();
            let mut us = Vec::with_capacity(cfg.n);
            let mut zs = Vec::with_capacity(cfg.n);
            for _ in 0..cfg.n {
                let x = tables.draw_x(&mut rng);
                let u = rng.random_range(0..c);
                us.push(u);
                zs.push(tables.draw_z(&mut rng, u, x));
            }
            scheme.estimate(&us, &zs)?
        }
        Mode::Plain => {
            let plain = to_plain_scheme(scheme, cfg.n)?;
            let mut ys = Vec::with_capacity(cfg.n);
            for i in 0..cfg.n {
                let x = tables.draw_x(&mut rng);
                let u = plain.assignment(i);
                ys.push(tables.draw_z(&mut rng, u, x));
            }
            plain.estimate(&ys)?
        }
    };
    let estimate = if cfg.project { project_to_simplex(&estimate) } else { estimate };
    Ok(tables
        .theta
        .iter()
        .zip(&estimate)
        .map(|(t, e)| (t - e) * (t - e))
        .sum())
}

/// Simulates one trial: draws the clients' data, shared values and reports,
/// applies the matching estimator, and returns the squared error. Fixed
/// `(master_seed, trial_index)` gives a bit-identical result regardless of
/// thread count.
pub fn run_trial(scheme: &SrScheme, cfg: &SimConfig, trial_index: u64) -> Result<f64, SimError> {
    cfg.validate(scheme)?;
    let theta = cfg.theta.to_f64(scheme.v())?;
    let tables = SamplingTables::new(scheme, &theta);
    trial_mse(scheme, cfg, &tables, trial_index)
}

fn summarize(
    cfg: &SimConfig,
    per_trial_mse: Vec<f64>,
    started: Instant,
) -> SimReport {
    let n = cfg.n as f64;
    let trials = per_trial_mse.len() as f64;
    let mean = per_trial_mse.iter().map(|m| n * m).sum::<f64>() / trials;
    let ss = per_trial_mse
        .iter()
        .map(|m| {
            let d = n * m - mean;
            d * d
        })
        .sum::<f64>();
    let stderr = (ss / (trials - 1.0)).sqrt() / trials.sqrt();
    SimReport {
        mean_n_mse: mean,
        stderr_n_mse: stderr,
        config: cfg.clone(),
        elapsed_s: started.elapsed().as_secs_f64(),
        per_trial_mse,
    }
}

/// Monte Carlo estimate of `n * MSE`. Deterministic for a fixed master seed:
/// per-trial streams are derived by counter and recombined in trial order.
///
/// With the `parallel` feature (default) trials run on the rayon pool;
/// without it this is [`mc_mse_sequential`].
pub fn mc_mse(scheme: &SrScheme, cfg: &SimConfig) -> Result<SimReport, SimError> {
    cfg.validate(scheme)?;
    if cfg.trials < 2 {
        return Err(SimError::TooFewTrials(cfg.trials));
    }
    let started = Instant::now();
    let theta = cfg.theta.to_f64(scheme.v())?;
    let tables = SamplingTables::new(scheme, &theta);

    #[cfg(feature = "parallel")]
    let per_trial: Result<Vec<f64>, SimError> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| trial_mse(scheme, cfg, &tables, t))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let per_trial: Result<Vec<f64>, SimError> =
        (0..cfg.trials as u64).map(|t| trial_mse(scheme, cfg, &tables, t)).collect();

    Ok(summarize(cfg, per_trial?, started))
}

/// Single-threaded Monte Carlo lane. Always available; must agree
/// bit-for-bit with [`mc_mse`].
pub fn mc_mse_sequential(scheme: &SrScheme, cfg: &SimConfig) -> Result<SimReport, SimError> {
    cfg.validate(scheme)?;
    if cfg.trials < 2 {
        return Err(SimError::TooFewTrials(cfg.trials));
    }
    let started = Instant::now();
    let theta = cfg.theta.to_f64(scheme.v())?;
    let tables = SamplingTables::new(scheme, &theta);
    let per_trial: Result<Vec<f64>, SimError> =
        (0..cfg.trials as u64).map(|t| trial_mse(scheme, cfg, &tables, t)).collect();
    Ok(summarize(cfg, per_trial?, started))
}

/// Caps the rayon worker pool. A no-op without the `parallel` feature and
/// once a global pool already exists.
pub fn set_thread_count(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

/// Exact MSE of the estimator via finite summation, as a rational.
///
/// Shared-randomness mode: `(1/(n c1^2)) sum_x Var(eta_x(W))`. Plain mode:
/// `(1/(c1^2 floor(n/C) C^2)) sum_x sum_j Var(eta_x(j, Y_j))`.
pub fn exact_mse_rational(
    scheme: &SrScheme,
    theta: &[Rat],
    n: usize,
    mode: Mode,
) -> Result<Rat, SimError> {
    if theta.len() != scheme.v() {
        return Err(SimError::ThetaLength { got: theta.len(), expected: scheme.v() });
    }
    let total: Rat = theta.iter().sum();
    if theta.iter().any(|t| t.is_negative()) || total != rat_one() {
        return Err(SimError::ThetaInvalid("exact theta must lie on the simplex".into()));
    }
    if n == 0 {
        return Err(SimError::NoClients);
    }
    let c1 = scheme.c1_exact();
    match mode {
        Mode::Sr => {
            let var_sum: Rat = scheme.eta_var_exact(theta).into_iter().sum();
            Ok(var_sum / (c1 * c1 * Rat::from_integer((n as i64).into())))
        }
        Mode::Plain => {
            let c = scheme.u_count();
            if n <= c {
                return Err(SimError::Scheme(SchemeError::PlainTooFewClients { n, c }));
            }
            let blocks = n / c;
            let mut var_sum = rat_zero();
            for u in 0..c {
                var_sum += scheme.eta_var_given_u(u, theta).into_iter().sum::<Rat>();
            }
            let denom = c1 * c1 * Rat::from_integer(((blocks * c * c) as i64).into());
            Ok(var_sum / denom)
        }
    }
}

/// Float view of [`exact_mse_rational`] with `theta` given as a spec.
pub fn exact_mse(
    scheme: &SrScheme,
    theta: &ThetaSpec,
    n: usize,
    mode: Mode,
) -> Result<f64, SimError> {
    let theta = theta.to_rationals(scheme.v())?;
    Ok(rat_to_f64(&exact_mse_rational(scheme, &theta, n, mode)?))
}

/// Evaluates the exact `n * MSE` over a probe set — the uniform
/// distribution, every vertex, every edge midpoint, and `samples` uniform
/// simplex draws — and returns the maximizer.
///
/// Ties within 1e-10 of the maximum resolve to the uniform distribution.
pub fn worst_case_scan(
    scheme: &SrScheme,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64), SimError> {
    let v = scheme.v();
    let share = rat_one() / Rat::from_integer((v as i64).into());
    let uniform = vec![share; v];
    let n_mse = |theta: &[Rat]| -> Result<f64, SimError> {
        Ok(n as f64 * rat_to_f64(&exact_mse_rational(scheme, theta, n, Mode::Sr)?))
    };
    let uniform_value = n_mse(&uniform)?;
    let mut best_theta: Vec<Rat> = uniform.clone();
    let mut best = uniform_value;

    let mut probes: Vec<Vec<Rat>> = Vec::new();
    for x in 0..v {
        let mut t = vec![rat_zero(); v];
        t[x] = rat_one();
        probes.push(t);
    }
    let half = Rat::new(1.into(), 2.into());
    for x in 0..v {
        for y in x + 1..v {
            let mut t = vec![rat_zero(); v];
            t[x] = half.clone();
            t[y] = half.clone();
            probes.push(t);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grain = 1i64 << 16;
    for _ in 0..samples {
        // normalized exponentials are uniform on the simplex; quantized to
        // 2^-16 so the exact evaluation stays cheap
        let draws: Vec<i64> = (0..v)
            .map(|_| {
                let e = -(1.0 - rng.random::<f64>()).ln();
                ((e * grain as f64).round() as i64).max(1)
            })
            .collect();
        let total: i64 = draws.iter().sum();
        probes.push(draws.into_iter().map(|d| Rat::new(d.into(), total.into())).collect());
    }

    for theta in probes {
        let value = n_mse(&theta)?;
        if value > best {
            best = value;
            best_theta = theta;
        }
    }
    if best <= uniform_value + 1e-10 {
        best = uniform_value;
        best_theta = uniform;
    }
    Ok((best_theta.iter().map(rat_to_f64).collect(), best))
}
