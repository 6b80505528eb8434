//! Harris Hawks Optimization over bounded continuous domains.
//!
//! Each iteration scores the hawks that moved, takes the best position found so
//! far as the rabbit, and moves every hawk with one of six rules selected by
//! its escaping energy. Positions are clamped into the box after every move.
//! Hawk `i` at iteration `t` draws from its own ChaCha stream, and all updates
//! in an iteration read the same snapshot of the population, so serial and
//! parallel runs produce identical traces.

mod benchmark;
mod rules;

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rng;

pub use benchmark::{benchmark_objective, rastrigin, rosenbrock, sphere, Benchmark};
pub use rules::{
    dive_candidate, escaping_energy, explore_rabbit_mean, explore_random_hawk, hard_besiege, levy_candidate,
    levy_flight, mantegna_sigma, select_phase, soft_besiege, update_position, DiveTrial, Phase, UpdateContext,
    UpdateOutcome, LEVY_BETA,
};

#[derive(Debug, Error)]
pub enum HhoError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid optimizer parameters: {0}")]
    InvalidParams(String),
    #[error("all {n_hawks} initial evaluations returned non-finite values")]
    AllNonFinite { n_hawks: usize },
    #[error("unknown benchmark '{0}' (expected sphere, rastrigin or rosenbrock)")]
    UnknownBenchmark(String),
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
    #[error("cannot write convergence trace: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HhoError> = std::result::Result<T, E>;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(HhoError::InvalidSpace(format!(
                "{} lower bounds vs {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(HhoError::InvalidSpace("zero dimensions".into()));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(HhoError::InvalidSpace(format!(
                    "dimension {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval on every dimension.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }

    /// Elementwise clamp into the box.
    pub fn clamp(&self, mut x: Vec<f64>) -> Vec<f64> {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hawk {
    pub position: Vec<f64>,
    /// `None` until evaluated; +infinity marks a failed evaluation.
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HhoParams {
    pub n_hawks: usize,
    pub max_iters: usize,
    pub levy_beta: f64,
    pub seed: u64,
    /// Worker threads for evaluations and updates; 1 runs on the caller's thread.
    pub jobs: usize,
}

impl Default for HhoParams {
    fn default() -> Self {
        Self { n_hawks: 30, max_iters: 500, levy_beta: LEVY_BETA, seed: 0, jobs: 1 }
    }
}

impl HhoParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_hawks < 2 {
            return Err(HhoError::InvalidParams(format!("n_hawks must be at least 2, got {}", self.n_hawks)));
        }
        if self.max_iters < 1 {
            return Err(HhoError::InvalidParams("max_iters must be at least 1".into()));
        }
        if !(self.levy_beta > 1.0 && self.levy_beta <= 2.0) {
            return Err(HhoError::InvalidParams(format!("levy_beta must lie in (1, 2], got {}", self.levy_beta)));
        }
        if self.jobs < 1 {
            return Err(HhoError::InvalidParams("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Where an objective call comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EvalKind {
    /// Scoring a hawk's position at the start of an iteration.
    Population,
    /// Scoring a rapid-dive candidate during an update.
    Dive,
}

/// Call site of one objective evaluation; `iter` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalContext {
    pub iter: usize,
    pub hawk: usize,
    pub kind: EvalKind,
    /// Position of this call among the hawk's evaluations in the iteration.
    pub seq: usize,
}

/// A function to minimize. Plain closures `Fn(&[f64]) -> f64` qualify.
pub trait Objective: Sync {
    fn evaluate(&self, position: &[f64], ctx: EvalContext) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, position: &[f64], _ctx: EvalContext) -> f64 {
        self(position)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 0-based.
    pub iter: usize,
    pub best_fitness: f64,
    /// Mean over hawks with finite fitness; +infinity when there are none.
    pub mean_fitness: f64,
    pub best_position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConvergenceTrace {
    pub records: Vec<IterationRecord>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn best_fitness(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_fitness).collect()
    }

    /// `iter,best_fitness,mean_fitness`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,best_fitness,mean_fitness\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{},{}", r.iter, r.best_fitness, r.mean_fitness);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HhoResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub trace: ConvergenceTrace,
}

/// `n_hawks` positions drawn uniformly in the box from stream 0 of the seed.
pub fn init_population(space: &SearchSpace, params: &HhoParams) -> Vec<Hawk> {
    let mut r = rng::seeded(params.seed);
    (0..params.n_hawks)
        .map(|_| {
            let position = (0..space.dim())
                .map(|i| {
                    let u: f64 = r.random();
                    space.lower[i] + u * (space.upper[i] - space.lower[i])
                })
                .collect();
            Hawk { position: space.clamp(position), fitness: None }
        })
        .collect()
}

fn map_hawks<T, F>(pool: Option<&rayon::ThreadPool>, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match pool {
        Some(p) => p.install(|| (0..n).into_par_iter().map(&f).collect()),
        None => (0..n).map(f).collect(),
    }
}

fn column_mean(positions: &[Vec<f64>]) -> Vec<f64> {
    let dim = positions[0].len();
    let mut mean = vec![0.0; dim];
    for p in positions {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    let n = positions.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Minimizes `objective` over `space`.
///
/// Each of the `max_iters` iterations scores the hawks whose position changed,
/// records the best-so-far, and (except in the last iteration, whose moves
/// would never be scored) updates every hawk. The best-so-far includes dive
/// candidates. `observer` sees each iteration's record as it is produced.
pub fn optimize<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    params: &HhoParams,
    mut observer: Option<&mut dyn FnMut(&IterationRecord)>,
) -> Result<HhoResult> {
    params.validate()?;
    let pool = if params.jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(params.jobs)
                .build()
                .map_err(|e| HhoError::ThreadPool(e.to_string()))?,
        )
    } else {
        None
    };
    let pool = pool.as_ref();
    let n = params.n_hawks;
    let t_max = params.max_iters;

    let mut hawks = init_population(space, params);
    let mut best_position = hawks[0].position.clone();
    let mut best_fitness = f64::INFINITY;
    let mut trace = ConvergenceTrace::default();

    for t in 0..t_max {
        let scored = map_hawks(pool, n, |i| match hawks[i].fitness {
            Some(f) => f,
            None => rules::finite_or_inf(
                objective
                    .evaluate(&hawks[i].position, EvalContext { iter: t, hawk: i, kind: EvalKind::Population, seq: 0 }),
            ),
        });
        for (h, f) in hawks.iter_mut().zip(&scored) {
            h.fitness = Some(*f);
        }
        if t == 0 && scored.iter().all(|f| f.is_infinite()) {
            return Err(HhoError::AllNonFinite { n_hawks: n });
        }
        for (h, &f) in hawks.iter().zip(&scored) {
            if f < best_fitness {
                best_fitness = f;
                best_position.clone_from(&h.position);
            }
        }
        let finite: Vec<f64> = scored.iter().copied().filter(|f| f.is_finite()).collect();
        let mean_fitness =
            if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 };

        if t + 1 < t_max {
            let positions: Vec<Vec<f64>> = hawks.iter().map(|h| h.position.clone()).collect();
            let mean = column_mean(&positions);
            let ctx = UpdateContext {
                space,
                population: &positions,
                rabbit: &best_position,
                mean: &mean,
                levy_beta: params.levy_beta,
            };
            let outcomes = map_hawks(pool, n, |i| {
                let mut r = rng::substream(params.seed, (t * n + i) as u64 + 1);
                let e0: f64 = r.random_range(-1.0..1.0);
                let energy = escaping_energy(e0, t, t_max);
                let mut seq = 0;
                let mut eval = |p: &[f64]| {
                    seq += 1;
                    objective.evaluate(p, EvalContext { iter: t, hawk: i, kind: EvalKind::Dive, seq })
                };
                update_position(&positions[i], scored[i], energy, &ctx, &mut r, &mut eval)
            });
            for (h, o) in hawks.iter_mut().zip(outcomes) {
                for d in &o.dives {
                    if d.fitness < best_fitness {
                        best_fitness = d.fitness;
                        best_position.clone_from(&d.position);
                    }
                }
                h.position = o.position;
                h.fitness = o.fitness;
            }
        }

        let record = IterationRecord { iter: t, best_fitness, mean_fitness, best_position: best_position.clone() };
        if let Some(obs) = observer.as_mut() {
            obs(&record);
        }
        trace.records.push(record);
    }

    Ok(HhoResult { best_position, best_fitness, trace })
}
