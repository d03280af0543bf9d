//! Monte Carlo orchestration.
//!
//! Runs execute in parallel on a dedicated pool; their outcomes are reduced
//! strictly in run order, so the worker count never changes a result bit.

use std::collections::BTreeMap;
use std::time::Instant;

use log::{debug, info, warn};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wrw_core::matlib::cholesky;
use wrw_core::{
    convergence_check, run_adaptive_filter, run_filter, simulate_trajectory, smooth, AdaptiveMode, ConvergenceReport,
    FilterStepRecord, GaussState, NoiseSpec, SmoothedTrajectory, StateSpaceModel,
};

use crate::error::{BenchError, Result};
use crate::metrics::{mean, EstimateKind, RmseAccumulator, RmseReport};
use crate::oracle::{compare, kalman_filter, rts_smoother, LinearGaussianSystem, OracleDiff};
use crate::scenario::{Algorithm, InitMode, ScenarioConfig};

/// Runs may fail only below this fraction before the experiment aborts.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, Default)]
pub struct MonteCarloOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Also run the linear oracle on every realization.
    pub oracle: bool,
}

/// One realization: hidden truth, its measurements and the filter's
/// initial belief. Index `k` of `truth`/`measurements` is epoch `k + 1`.
#[derive(Debug, Clone)]
pub struct Realization {
    pub run: usize,
    pub seed: u64,
    pub truth: Vec<Vec<f64>>,
    pub measurements: Vec<Vec<f64>>,
    pub init: GaussState<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epoch: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochConditionRecord {
    pub epoch: usize,
    pub cond1_max_eig: f64,
    pub cond2_max_eig: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub runs: usize,
    pub mean_violation_rate: f64,
    pub mean_v_decrease_fraction: f64,
    /// Per-epoch conditions of the trajectory run.
    pub per_epoch: Vec<EpochConditionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub smoothed: RmseReport,
    pub filtered: RmseReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub runs: usize,
    pub max_abs_diff: OracleDiff,
}

/// Truth and smoothed estimates of one run, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub run: usize,
    pub truth: Vec<Vec<f64>>,
    pub estimates: BTreeMap<Algorithm, Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub config: ScenarioConfig,
    pub results: BTreeMap<Algorithm, AlgorithmResult>,
    pub failures: Vec<RunFailure>,
    pub excluded_runs: Vec<usize>,
    /// SHA-256 over every run's measurement digest, in run order.
    pub measurement_digest: String,
    pub oracle: Option<OracleSummary>,
    pub trajectory: Option<TrajectorySample>,
}

struct AlgorithmRun {
    filtered: Vec<Vec<f64>>,
    smoothed: Vec<Vec<f64>>,
    convergence: Option<ConvergenceReport<f64>>,
    seconds: f64,
}

struct RunOutcome {
    run: usize,
    truth: Vec<Vec<f64>>,
    measurement_hash: [u8; 32],
    algorithms: Vec<(Algorithm, std::result::Result<AlgorithmRun, RunFailure>)>,
    oracle: Option<std::result::Result<OracleDiff, RunFailure>>,
}

/// SHA-256 of the little-endian bytes of every measurement value.
pub fn measurement_hash(measurements: &[Vec<f64>]) -> [u8; 32] {
    let mut h = Sha256::new();
    for z in measurements {
        for v in z {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().into()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Simulates run `run` of the scenario.
pub fn realize(cfg: &ScenarioConfig, model: &dyn StateSpaceModel<f64>, run: usize) -> wrw_core::Result<Realization> {
    let seed = cfg.seed_for_run(run);
    let truth_noise = cfg
        .truth_noise()
        .map_err(|e| wrw_core::Error::InvalidConfig(e.to_string()))?;
    let p0 = cfg.p0().map_err(|e| wrw_core::Error::InvalidConfig(e.to_string()))?;
    let traj = simulate_trajectory(model, &truth_noise, &cfg.truth.x0, cfg.steps + 1, seed)?;

    let mean = match cfg.filter.init {
        InitMode::Truth => cfg.truth.x0.clone(),
        InitMode::Fixed => cfg.filter.x0.clone().unwrap_or_else(|| cfg.truth.x0.clone()),
        InitMode::Sampled => {
            // separate stream from the simulator's, same key
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let xi: Vec<f64> = (0..cfg.truth.x0.len())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let l = cholesky(&p0)?;
            l.mul_vec(&xi).iter().zip(&cfg.truth.x0).map(|(a, b)| a + b).collect()
        }
    };
    Ok(Realization {
        run,
        seed,
        truth: traj.truth[1..].to_vec(),
        measurements: traj.measurements[1..].to_vec(),
        init: GaussState::new(mean, p0)?,
    })
}

/// Forward pass of `algorithm` followed by the RTS pass.
pub fn run_algorithm(
    algorithm: Algorithm,
    model: &dyn StateSpaceModel<f64>,
    cfg: &ScenarioConfig,
    noise: &NoiseSpec<f64>,
    init: &GaussState<f64>,
    measurements: &[Vec<f64>],
) -> wrw_core::Result<(Vec<FilterStepRecord<f64>>, SmoothedTrajectory<f64>)> {
    let adaptive = cfg.adaptive.config();
    let records = match algorithm {
        Algorithm::Cks => run_filter(model, noise, init, measurements)?,
        Algorithm::Acks => run_adaptive_filter(model, noise, init, measurements, &adaptive, AdaptiveMode::Windowed)?,
        Algorithm::Wrwacrts => run_adaptive_filter(model, noise, init, measurements, &adaptive, AdaptiveMode::Wrw)?,
    };
    let smoothed = smooth(&records)?;
    Ok((records, smoothed))
}

fn failure(real: &Realization, algorithm: Option<Algorithm>, err: &wrw_core::Error) -> RunFailure {
    RunFailure {
        run: real.run,
        seed: real.seed,
        algorithm,
        epoch: err.epoch().map(|e| e + 1),
        message: err.root().to_string(),
    }
}

fn execute_run(
    cfg: &ScenarioConfig,
    model: &dyn StateSpaceModel<f64>,
    noise: &NoiseSpec<f64>,
    oracle: Option<&LinearGaussianSystem>,
    run: usize,
) -> std::result::Result<RunOutcome, RunFailure> {
    let real = realize(cfg, model, run).map_err(|e| RunFailure {
        run,
        seed: cfg.seed_for_run(run),
        algorithm: None,
        epoch: e.epoch(),
        message: format!("simulation: {}", e.root()),
    })?;
    let hash = measurement_hash(&real.measurements);
    let lyapunov = cfg.lyapunov.enabled.then(|| cfg.lyapunov.params());

    let mut algorithms = Vec::with_capacity(cfg.algorithms.len());
    for &algo in &cfg.algorithms {
        assert_eq!(
            measurement_hash(&real.measurements),
            hash,
            "measurements changed between algorithms"
        );
        let started = Instant::now();
        let outcome = run_algorithm(algo, model, cfg, noise, &real.init, &real.measurements)
            .and_then(|(records, smoothed)| {
                let convergence = lyapunov
                    .as_ref()
                    .map(|p| convergence_check(&records, model, p, Some(&real.truth)))
                    .transpose()?;
                Ok(AlgorithmRun {
                    filtered: records.iter().map(|r| r.updated.mean.clone()).collect(),
                    smoothed: smoothed.states.iter().map(|s| s.mean.clone()).collect(),
                    convergence,
                    seconds: started.elapsed().as_secs_f64(),
                })
            })
            .map_err(|e| failure(&real, Some(algo), &e));
        if let Err(f) = &outcome {
            debug!("run {} {}: {}", run, algo, f.message);
        }
        algorithms.push((algo, outcome));
    }

    let oracle = oracle.map(|sys| {
        let records = run_filter(model, noise, &real.init, &real.measurements)
            .and_then(|r| smooth(&r).map(|s| (r, s)))
            .map_err(|e| failure(&real, None, &e))?;
        let x0 = DVector::from_column_slice(&real.init.mean);
        let p0 = DMatrix::from_row_slice(4, 4, real.init.cov.as_slice());
        let kf = kalman_filter(sys, &x0, &p0, &real.measurements).map_err(|e| RunFailure {
            run,
            seed: real.seed,
            algorithm: None,
            epoch: None,
            message: format!("oracle: {e}"),
        })?;
        let rts = rts_smoother(sys, &kf).map_err(|e| RunFailure {
            run,
            seed: real.seed,
            algorithm: None,
            epoch: None,
            message: format!("oracle: {e}"),
        })?;
        Ok(compare(&records.0, &records.1, &kf, &rts))
    });

    Ok(RunOutcome {
        run,
        truth: real.truth,
        measurement_hash: hash,
        algorithms,
        oracle,
    })
}

fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(BenchError::Config("workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start {n} workers: {e}")))
}

/// Runs every configured algorithm on every realization and aggregates the
/// RMSE of smoothed and filtered estimates.
pub fn run_monte_carlo(cfg: &ScenarioConfig, opts: &MonteCarloOptions) -> Result<MonteCarloResult> {
    cfg.validate()?;
    let model = cfg.model()?;
    let noise = cfg.filter_noise()?;
    let oracle = opts
        .oracle
        .then(|| LinearGaussianSystem::from_scenario(cfg))
        .transpose()?;
    let pool = worker_pool(opts.workers)?;
    info!(
        "scenario `{}`: {} runs x {} steps, algorithms {:?}, {} workers",
        cfg.name,
        cfg.runs,
        cfg.steps,
        cfg.algorithms,
        pool.current_num_threads()
    );

    let outcomes: Vec<std::result::Result<RunOutcome, RunFailure>> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run| execute_run(cfg, model.as_ref(), &noise, oracle.as_ref(), run))
            .collect()
    });

    let mut failures = Vec::new();
    let mut excluded_runs = Vec::new();
    for outcome in &outcomes {
        let mut failed = false;
        match outcome {
            Err(f) => {
                failures.push(f.clone());
                failed = true;
            }
            Ok(o) => {
                for (_, a) in &o.algorithms {
                    if let Err(f) = a {
                        failures.push(f.clone());
                        failed = true;
                    }
                }
                if let Some(Err(f)) = &o.oracle {
                    failures.push(f.clone());
                    failed = true;
                }
            }
        }
        if failed {
            let run = match outcome {
                Ok(o) => o.run,
                Err(f) => f.run,
            };
            excluded_runs.push(run);
        }
    }
    if !excluded_runs.is_empty() {
        let fraction = excluded_runs.len() as f64 / cfg.runs as f64;
        for f in failures.iter().take(5) {
            warn!(
                "run {} (seed {}) {} failed at epoch {:?}: {}",
                f.run,
                f.seed,
                f.algorithm.map_or("simulation", Algorithm::label),
                f.epoch,
                f.message
            );
        }
        if fraction >= MAX_FAILURE_FRACTION {
            let first = &failures[0];
            return Err(BenchError::Numerical(format!(
                "{} of {} runs failed (limit {:.0}%); first: run {} seed {} {} epoch {:?}: {}",
                excluded_runs.len(),
                cfg.runs,
                MAX_FAILURE_FRACTION * 100.0,
                first.run,
                first.seed,
                first.algorithm.map_or("simulation", Algorithm::label),
                first.epoch,
                first.message
            )));
        }
        warn!("excluding {} failed runs from the aggregates", excluded_runs.len());
    }

    let included: Vec<&RunOutcome> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok())
        .filter(|o| !excluded_runs.contains(&o.run))
        .collect();

    let mut digest = Sha256::new();
    for o in outcomes.iter().filter_map(|o| o.as_ref().ok()) {
        digest.update(o.measurement_hash);
    }
    let measurement_digest = hex(&digest.finalize());

    let mut results = BTreeMap::new();
    for (slot, &algo) in cfg.algorithms.iter().enumerate() {
        let mut smoothed = RmseAccumulator::new(cfg.steps);
        let mut filtered = RmseAccumulator::new(cfg.steps);
        let mut seconds = 0.0;
        let mut violation = Vec::new();
        let mut decrease = Vec::new();
        let mut per_epoch = None;
        for o in &included {
            let (a, run) = &o.algorithms[slot];
            debug_assert_eq!(*a, algo);
            let run = run.as_ref().expect("failed runs are excluded");
            smoothed.add_run(&o.truth, run.smoothed.iter().map(Vec::as_slice));
            filtered.add_run(&o.truth, run.filtered.iter().map(Vec::as_slice));
            seconds += run.seconds;
            if let Some(c) = &run.convergence {
                violation.push(c.violation_rate);
                decrease.push(c.v_decrease_fraction.unwrap_or(f64::NAN));
                if per_epoch.is_none() {
                    per_epoch = Some(
                        c.per_epoch
                            .iter()
                            .map(|e| EpochConditionRecord {
                                epoch: e.epoch + 1,
                                cond1_max_eig: e.cond1_max_eig,
                                cond2_max_eig: e.cond2_max_eig,
                                satisfied: e.satisfied,
                            })
                            .collect(),
                    );
                }
            }
        }
        let convergence = per_epoch.map(|per_epoch| ConvergenceSummary {
            runs: violation.len(),
            mean_violation_rate: mean(&violation),
            mean_v_decrease_fraction: mean(&decrease),
            per_epoch,
        });
        results.insert(
            algo,
            AlgorithmResult {
                smoothed: smoothed.finish(algo, EstimateKind::Smoothed, seconds),
                filtered: filtered.finish(algo, EstimateKind::Filtered, seconds),
                convergence,
            },
        );
    }

    let oracle = oracle.map(|_| OracleSummary {
        runs: included.len(),
        max_abs_diff: included
            .iter()
            .filter_map(|o| o.oracle.as_ref().and_then(|r| r.as_ref().ok()))
            .fold(OracleDiff::default(), |acc, d| acc.merge(*d)),
    });

    let trajectory = included.first().map(|o| TrajectorySample {
        run: o.run,
        truth: o.truth.clone(),
        estimates: cfg
            .algorithms
            .iter()
            .zip(&o.algorithms)
            .map(|(&algo, (_, r))| (algo, r.as_ref().expect("included").smoothed.clone()))
            .collect(),
    });

    Ok(MonteCarloResult {
        config: cfg.clone(),
        results,
        failures,
        excluded_runs,
        measurement_digest,
        oracle,
        trajectory,
    })
}
