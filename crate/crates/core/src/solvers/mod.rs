//! Solver backends behind one trait, looked up by name at runtime.
//!
//! A [`Solver`] turns a model into a [`Restarter`] once (precomputing
//! neighbor lists, temperature scales and so on); the shared runner then
//! executes independent restarts in parallel. Restart `r` draws from random
//! stream `(seed, r)`, so results do not depend on the thread count.

mod anneal;
mod exhaustive;
mod simcim;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{bits_to_spins, IsingModel, QuboModel};
use crate::rng::DEFAULT_SEED;

pub use anneal::SimulatedAnnealing;
pub use exhaustive::{BruteForce, BRUTE_FORCE_CAP};
pub use simcim::SimCim;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveParams {
    /// SA sweeps per restart; one sweep proposes every variable once.
    pub sweeps: usize,
    /// SimCIM integration steps per restart.
    pub steps: usize,
    pub restarts: usize,
    pub seed: u64,
    /// SA start temperature; probed from the model when absent.
    pub t_initial: Option<f64>,
    /// SA final temperature; `1e-3 · t_initial` when absent.
    pub t_final: Option<f64>,
    /// SA per-sweep cooling factor; overrides `t_final` when set.
    pub ratio: Option<f64>,
    pub pump_start: f64,
    pub pump_end: f64,
    /// SimCIM coupling scale; `1 / (dt · spectral scale of J)` when absent.
    pub zeta: Option<f64>,
    pub noise: f64,
    pub dt: f64,
    pub clamp: f64,
    /// Stop launching restarts once this much wall time has elapsed.
    pub time_budget_ms: Option<u64>,
    pub threads: Option<usize>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            sweeps: 1000,
            steps: 1000,
            restarts: 10,
            seed: DEFAULT_SEED,
            t_initial: None,
            t_final: None,
            ratio: None,
            pump_start: -1.0,
            pump_end: 1.0,
            zeta: None,
            noise: 0.01,
            dt: 0.05,
            clamp: 1.0,
            time_budget_ms: None,
            threads: None,
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.sweeps == 0 || self.steps == 0 || self.restarts == 0 {
            return bad("sweeps, steps and restarts must be positive");
        }
        for t in [self.t_initial, self.t_final].into_iter().flatten() {
            if !(t.is_finite() && t > 0.0) {
                return bad("temperatures must be positive");
            }
        }
        if let (Some(a), Some(b)) = (self.t_initial, self.t_final) {
            if b > a {
                return bad("final temperature exceeds initial temperature");
            }
        }
        if let Some(r) = self.ratio {
            if !(r > 0.0 && r < 1.0) {
                return bad("cooling ratio must lie in (0, 1)");
            }
        }
        if !(self.clamp.is_finite() && self.clamp > 0.0) {
            return bad("amplitude clamp must be positive");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("step size must be positive");
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad("noise amplitude must be non-negative");
        }
        if let Some(z) = self.zeta {
            if !(z.is_finite() && z > 0.0) {
                return bad("coupling scale must be positive");
            }
        }
        if !(self.pump_start.is_finite() && self.pump_end.is_finite()) {
            return bad("pump endpoints must be finite");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartResult {
    pub index: u64,
    pub assignment: Vec<u8>,
    pub energy: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub solver: String,
    pub best_assignment: Vec<u8>,
    pub best_energy: f64,
    pub restart_energies: Vec<f64>,
    pub restart_wall_ms: Vec<f64>,
    pub restarts_executed: usize,
    /// Number of assignments attaining the minimum, for exact solvers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum_count: Option<u64>,
}

impl SolveOutcome {
    /// The outcome minus its timings, for reproducibility comparisons.
    pub fn without_timings(&self) -> SolveOutcome {
        SolveOutcome {
            restart_wall_ms: Vec::new(),
            ..self.clone()
        }
    }
}

/// Runs one restart of a prepared solver.
pub trait Restarter: Send + Sync {
    /// Final bit assignment of restart `index`.
    fn run(&self, index: u64) -> Vec<u8>;

    /// Upper bound on useful restarts (exact solvers need one).
    fn max_restarts(&self) -> Option<usize> {
        None
    }

    fn optimum_count(&self) -> Option<u64> {
        None
    }
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;

    fn prepare<'a>(
        &self,
        model: &'a QuboModel,
        params: &SolveParams,
    ) -> Result<Box<dyn Restarter + 'a>>;
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// Executes restarts `0..params.restarts`, respecting the time budget.
pub fn run_restarts(
    restarter: &dyn Restarter,
    params: &SolveParams,
    score: &(dyn Fn(&[u8]) -> f64 + Sync),
) -> Vec<RestartResult> {
    let total = restarter
        .max_restarts()
        .map_or(params.restarts, |m| m.min(params.restarts));
    let one = |index: u64| {
        let start = Instant::now();
        let assignment = restarter.run(index);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        RestartResult {
            index,
            energy: score(&assignment),
            assignment,
            wall_ms,
        }
    };
    with_pool(params.threads, || match params.time_budget_ms {
        None => (0..total as u64).into_par_iter().map(one).collect(),
        Some(budget) => {
            let started = Instant::now();
            let wave = rayon::current_num_threads().max(1);
            let mut out = Vec::with_capacity(total);
            let mut next = 0usize;
            while next < total && (next == 0 || started.elapsed().as_millis() < budget as u128) {
                let end = (next + wave).min(total);
                out.extend(
                    (next as u64..end as u64)
                        .into_par_iter()
                        .map(one)
                        .collect::<Vec<_>>(),
                );
                next = end;
            }
            out
        }
    })
}

/// Minimum energy, ties broken toward the lexicographically smallest bits.
pub fn reduce(solver: &str, results: &[RestartResult], optimum_count: Option<u64>) -> SolveOutcome {
    let best = results
        .iter()
        .min_by(|a, b| {
            a.energy
                .total_cmp(&b.energy)
                .then_with(|| a.assignment.cmp(&b.assignment))
        })
        .expect("at least one restart runs");
    SolveOutcome {
        solver: solver.to_string(),
        best_assignment: best.assignment.clone(),
        best_energy: best.energy,
        restart_energies: results.iter().map(|r| r.energy).collect(),
        restart_wall_ms: results.iter().map(|r| r.wall_ms).collect(),
        restarts_executed: results.len(),
        optimum_count,
    }
}

/// Solves a QUBO with `solver`, scoring restarts by exact QUBO energy.
pub fn solve_with(solver: &dyn Solver, model: &QuboModel, params: &SolveParams) -> Result<SolveOutcome> {
    params.validate()?;
    if model.n == 0 {
        return Err(Error::EmptyModel);
    }
    let restarter = solver.prepare(model, params)?;
    let results = run_restarts(restarter.as_ref(), params, &|z| model.energy_unchecked(z));
    Ok(reduce(solver.name(), &results, restarter.optimum_count()))
}

pub fn solve_sa(model: &QuboModel, params: &SolveParams) -> Result<SolveOutcome> {
    solve_with(&SimulatedAnnealing, model, params)
}

pub fn solve_bruteforce(model: &QuboModel) -> Result<SolveOutcome> {
    let params = SolveParams {
        restarts: 1,
        ..Default::default()
    };
    solve_with(&BruteForce, model, &params)
}

/// Runs SimCIM directly on an Ising model; energies are Ising energies,
/// equal to the QUBO energies of the returned bits.
pub fn solve_simcim(model: &IsingModel, params: &SolveParams) -> Result<SolveOutcome> {
    params.validate()?;
    if model.n == 0 {
        return Err(Error::EmptyModel);
    }
    let restarter = simcim::SimCimRestarter::new(model.clone(), params);
    let score = |z: &[u8]| {
        let s = bits_to_spins(z).expect("solver emits bits");
        model.energy(&s).expect("length matches")
    };
    let results = run_restarts(&restarter, params, &score);
    Ok(reduce(SimCim.name(), &results, None))
}

/// Name → solver table.
#[derive(Clone)]
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Arc<dyn Solver>>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = SolverRegistry::empty();
        r.register(Arc::new(SimulatedAnnealing));
        r.register(Arc::new(SimCim));
        r.register(Arc::new(BruteForce));
        r
    }
}

impl SolverRegistry {
    pub fn empty() -> Self {
        SolverRegistry {
            solvers: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, solver: Arc<dyn Solver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Solver>> {
        self.solvers
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownSolver(name.to_string()))
    }

    pub fn solve(&self, model: &QuboModel, method: &str, params: &SolveParams) -> Result<SolveOutcome> {
        let solver = self.get(method)?;
        solve_with(solver.as_ref(), model, params)
    }
}

/// Uniform dispatch over the built-in solvers.
pub fn solve(model: &QuboModel, method: &str, params: &SolveParams) -> Result<SolveOutcome> {
    SolverRegistry::default().solve(model, method, params)
}
