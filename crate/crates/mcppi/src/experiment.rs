//! Per-seed experiment pipelines and the output directory layout.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mcppi_core::envs::{rollout_return, BboFunction, ControlTask};
use mcppi_core::metrics::fft_smoothness;
use mcppi_core::mpc::{run_mpc_episode_with, MpcConfig};
use mcppi_core::ppi::{run_episodic_with, EpisodicConfig, IterationRecord, Policy};
use mcppi_core::priors::{FeatureKind, FeaturePolicy, Kernel, MatrixNormalPolicy, TimeGrid};
use mcppi_core::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Mode, PriorKind};
use crate::parallel::Parallel;
use crate::trace::{write_summary, write_trace, SummaryRow, TraceRow};
use crate::RunError;

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// Record wall-clock time per iteration; off by default so outputs are reproducible.
    pub wall_time: bool,
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub rows: Vec<TraceRow>,
    pub summary: SummaryRow,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub outcomes: Vec<SeedOutcome>,
    pub failures: usize,
}

pub fn trace_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("trace_seed{seed}.csv"))
}

pub fn summary_path(dir: &Path) -> PathBuf {
    dir.join("summary.csv")
}

/// Run every seed (concurrently) and write one trace per seed plus `summary.csv`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, RunError> {
    std::fs::create_dir_all(&spec.out_dir)
        .map_err(|source| RunError::Io { path: spec.out_dir.display().to_string(), source })?;
    let outcomes: Vec<SeedOutcome> =
        spec.seeds.par_iter().map(|&seed| run_seed(&spec.config, seed, spec.wall_time)).collect();
    for o in &outcomes {
        write_trace(&o.rows, &trace_path(&spec.out_dir, o.summary.seed))?;
    }
    let summaries: Vec<SummaryRow> = outcomes.iter().map(|o| o.summary.clone()).collect();
    write_summary(&summaries, &summary_path(&spec.out_dir))?;
    let failures = summaries.iter().filter(|s| s.status != "ok").count();
    Ok(ExperimentReport { outcomes, failures })
}

struct Recorder {
    rows: Vec<TraceRow>,
    clock: Option<Instant>,
}

impl Recorder {
    fn new(wall_time: bool) -> Self {
        Self { rows: Vec::new(), clock: wall_time.then(Instant::now) }
    }

    fn record(&mut self, r: &mut IterationRecord, step: i64) {
        if let Some(clock) = &mut self.clock {
            r.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
            *clock = Instant::now();
        }
        self.rows.push(TraceRow {
            step,
            iter: r.iter,
            alpha: r.alpha,
            ess: r.ess,
            return_min: r.return_min,
            return_median: r.return_median,
            return_max: r.return_max,
            smoothness: r.smoothness,
            wall_ms: r.wall_ms,
        });
    }
}

struct Final {
    final_return: f64,
    smoothness: f64,
    mean_ess: f64,
}

/// Run one seed; failures are captured in the summary status.
pub fn run_seed(config: &ExperimentConfig, seed: u64, wall_time: bool) -> SeedOutcome {
    let mut rec = Recorder::new(wall_time);
    let result = match config.mode {
        Mode::Bbo => run_bbo(config, seed, &mut rec),
        Mode::Episodic => run_episodic_task(config, seed, &mut rec),
        Mode::Mpc => run_mpc(config, seed, &mut rec),
    };
    let summary = match result {
        Ok(f) => SummaryRow {
            seed,
            status: "ok".into(),
            final_return: f.final_return,
            smoothness: f.smoothness,
            mean_ess: f.mean_ess,
        },
        Err(e) => SummaryRow {
            seed,
            status: format!("error: {e}"),
            final_return: f64::NAN,
            smoothness: f64::NAN,
            mean_ess: f64::NAN,
        },
    };
    SeedOutcome { rows: rec.rows, summary }
}

/// Isotropic Gaussian search distribution `N(init_mean·1, init_variance·I)`
/// as a one-step matrix normal with a fitted scalar scale.
pub fn bbo_policy(config: &ExperimentConfig) -> mcppi_core::Result<Policy> {
    let b = &config.bbo;
    let grid = TimeGrid::new(0.0, 1.0, 1)?;
    let p = MatrixNormalPolicy::from_kernel(
        grid,
        Kernel::White { variance: b.init_variance },
        DMatrix::identity(b.dimension, b.dimension),
        DVector::from_element(b.dimension, b.init_mean),
    )?;
    Ok(Policy::MatrixNormal(p))
}

/// Action prior over `grid`, centred within the task limits. Feature priors
/// place RBF centres over `span`.
pub fn action_prior(config: &ExperimentConfig, task: &ControlTask, grid: TimeGrid, span: (f64, f64)) -> mcppi_core::Result<Policy> {
    let pr = &config.prior;
    let limits = task.limits();
    let kernel = match pr.kind {
        PriorKind::Se => Kernel::se(pr.lengthscale, pr.variance),
        PriorKind::White => Kernel::White { variance: pr.variance },
        PriorKind::Rbf | PriorKind::Qrff => {
            let kind = if pr.kind == PriorKind::Rbf {
                FeatureKind::NormalizedRbf { d: pr.features, lengthscale: pr.lengthscale }
            } else {
                FeatureKind::QuadratureRff { nu: pr.order, lengthscale: pr.lengthscale }
            };
            let mn = MatrixNormalPolicy::from_actuator_limits(grid, Kernel::White { variance: 1.0 }, &limits)?;
            return Ok(Policy::Features(FeaturePolicy::prior(kind, pr.variance, grid, span, mn.sigma, mn.mean_offset)?));
        }
    };
    Ok(Policy::MatrixNormal(MatrixNormalPolicy::from_actuator_limits(grid, kernel, &limits)?))
}

fn run_bbo(config: &ExperimentConfig, seed: u64, rec: &mut Recorder) -> mcppi_core::Result<Final> {
    let f = BboFunction::new(config.bbo.function, config.bbo.dimension)?;
    let objective = move |x: &DMatrix<f64>| f.evaluate(x);
    let cfg = EpisodicConfig {
        n_iter: config.optimizer.n_iter,
        n_samples: config.optimizer.n_samples,
        strategy: config.optimizer.strategy(),
        seed,
        limits: None,
    };
    let (policy, trace) = run_episodic_with(&objective, bbo_policy(config)?, &cfg, &Parallel, |r, _| rec.record(r, 0))?;
    Ok(Final { final_return: f.evaluate(&policy.mean_actions()?)?, smoothness: f64::NAN, mean_ess: trace.mean_ess() })
}

fn run_episodic_task(config: &ExperimentConfig, seed: u64, rec: &mut Recorder) -> mcppi_core::Result<Final> {
    let task = config.task.task();
    task.validate()?;
    let grid = TimeGrid::new(0.0, task.dt(), task.steps())?;
    let prior = action_prior(config, &task, grid, (0.0, grid.end()))?;
    let initial = task.initial_state();
    let objective = |a: &DMatrix<f64>| rollout_return(&task, a, &initial).map(|r| r.total);
    let limits = task.limits();
    let cfg = EpisodicConfig {
        n_iter: config.optimizer.n_iter,
        n_samples: config.optimizer.n_samples,
        strategy: config.optimizer.strategy(),
        seed,
        limits: Some(limits),
    };
    let (policy, trace) = run_episodic_with(&objective, prior, &cfg, &Parallel, |r, _| rec.record(r, 0))?;
    let mean = policy.mean_actions()?;
    Ok(Final {
        final_return: rollout_return(&task, &mean, &initial)?.total,
        smoothness: fft_smoothness(&mean, 1.0 / task.dt())?.score,
        mean_ess: trace.mean_ess(),
    })
}

fn run_mpc(config: &ExperimentConfig, seed: u64, rec: &mut Recorder) -> mcppi_core::Result<Final> {
    let task = config.task.task();
    task.validate()?;
    let h = config.mpc.horizon;
    let grid = TimeGrid::new(0.0, task.dt(), h)?;
    let span = (0.0, (task.steps() + h) as f64 * task.dt());
    let prior = action_prior(config, &task, grid, span)?;
    let cfg = MpcConfig {
        horizon: h,
        n_iters_per_step: config.mpc.iters_per_step,
        n_warmstart_iters: config.mpc.warmstart_iters,
        n_samples: config.optimizer.n_samples,
        gamma: config.mpc.gamma,
        strategy: config.optimizer.strategy(),
        seed,
    };
    let log = run_mpc_episode_with(&task, &task, prior, &cfg, &Parallel, |r, step| {
        rec.record(r, step.map_or(-1, |s| s as i64))
    })?;
    if let Some((step, e)) = log.failure {
        return Err(mcppi_core::Error::InvalidInput(format!("episode failed at step {step}: {e}")));
    }
    let ess = log.ess_per_iteration();
    Ok(Final {
        final_return: log.total_return,
        smoothness: fft_smoothness(&log.actions, 1.0 / task.dt())?.score,
        mean_ess: if ess.is_empty() { f64::NAN } else { ess.iter().sum::<f64>() / ess.len() as f64 },
    })
}
