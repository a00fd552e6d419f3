//! Success probability, R99 and time-to-solution measurements, plus the
//! seven-core benchmark suite and its results log.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoder::{encode, EncodeOptions, FuelCounts};
use crate::error::{Error, Result};
use crate::feasibility::check_bits;
use crate::geometry::CoreLayout;
use crate::model::QuboModel;
use crate::presets;
use crate::solvers::{run_restarts, SolveParams, Solver, SolverRegistry};

/// Energies at or below this count as zero for the feasibility criterion.
pub const ZERO_ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "target")]
pub enum SuccessCriterion {
    /// The run's assignment decodes and passes every rule.
    Feasible,
    EnergyAtMost(f64),
}

/// A layout-level problem: the core, its counts, options and encoded model.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub layout: CoreLayout,
    pub counts: FuelCounts,
    pub options: EncodeOptions,
    pub model: QuboModel,
}

impl Instance {
    pub fn new(layout: CoreLayout, counts: FuelCounts, options: EncodeOptions) -> Result<Self> {
        let model = encode(&layout, counts, &options)?;
        Ok(Instance {
            name: layout.name().to_string(),
            layout,
            counts,
            options,
            model,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub runs: usize,
    pub successes: usize,
    pub theta: f64,
    pub criterion: SuccessCriterion,
    /// Median single-run wall time.
    pub tau_ms: f64,
    pub run_energies: Vec<f64>,
    pub run_wall_ms: Vec<f64>,
    /// SHA-256 over every run's assignment, in run order.
    pub assignment_digest: String,
    /// Assignment of the lowest-indexed successful run.
    pub witness: Option<Vec<u8>>,
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Runs `runs` independent single-restart solves (run `r` uses random
/// stream `(seed, r)`) and counts how many meet `criterion`.
pub fn estimate_success(
    solver: &dyn Solver,
    params: &SolveParams,
    model: &QuboModel,
    instance: Option<&Instance>,
    runs: usize,
    seed: u64,
    criterion: SuccessCriterion,
) -> Result<SuccessEstimate> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    if criterion == SuccessCriterion::Feasible && instance.is_none() {
        return Err(Error::InvalidConfig(
            "the feasibility criterion needs a layout instance".into(),
        ));
    }
    let params = SolveParams {
        restarts: runs,
        seed,
        time_budget_ms: None,
        ..params.clone()
    };
    params.validate()?;
    if model.n == 0 {
        return Err(Error::EmptyModel);
    }
    let restarter = solver.prepare(model, &params)?;
    let results = run_restarts(restarter.as_ref(), &params, &|z| model.energy_unchecked(z));

    let mut successes = 0;
    let mut witness = None;
    let mut hasher = Sha256::new();
    for r in &results {
        hasher.update(&r.assignment);
        let ok = match criterion {
            SuccessCriterion::EnergyAtMost(t) => r.energy <= t,
            SuccessCriterion::Feasible => {
                let inst = instance.expect("checked above");
                check_bits(&r.assignment, &inst.layout, inst.counts, &inst.options)?.feasible
            }
        };
        if ok {
            successes += 1;
            if witness.is_none() {
                witness = Some(r.assignment.clone());
            }
        }
    }
    let wall: Vec<f64> = results.iter().map(|r| r.wall_ms).collect();
    let executed = results.len();
    Ok(SuccessEstimate {
        runs: executed,
        successes,
        theta: successes as f64 / executed as f64,
        criterion,
        tau_ms: median(&wall),
        run_energies: results.iter().map(|r| r.energy).collect(),
        run_wall_ms: wall,
        assignment_digest: hex(&hasher.finalize()),
        witness,
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Repetitions needed to succeed with probability 0.99; at least 1, and
/// `+∞` when `θ = 0`.
pub fn r99(theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidProbability(theta));
    }
    if theta == 0.0 {
        return Ok(f64::INFINITY);
    }
    if theta == 1.0 {
        return Ok(1.0);
    }
    Ok(((1.0f64 - 0.99).ln() / (1.0 - theta).ln()).max(1.0))
}

/// Time to solution, `τ_a · R99(θ)`.
pub fn tts(tau_ms: f64, theta: f64) -> Result<f64> {
    if !(tau_ms.is_finite() && tau_ms > 0.0) {
        return Err(Error::InvalidRunTime(tau_ms));
    }
    Ok(tau_ms * r99(theta)?)
}

/// JSON has no infinity; an unbounded R99/TTS is stored as `null`.
mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub instance: String,
    pub solver: String,
    pub n_vars: usize,
    pub params_digest: String,
    pub tau_ms: f64,
    pub runs: usize,
    pub successes: usize,
    pub theta: f64,
    #[serde(with = "inf_as_null")]
    pub r99: f64,
    #[serde(with = "inf_as_null")]
    pub tts_ms: f64,
    pub seed: u64,
    pub run_wall_ms: Vec<f64>,
    pub timestamp_ms: u64,
}

impl BenchmarkRecord {
    pub fn from_estimate(
        instance: &str,
        solver: &str,
        n_vars: usize,
        params: &SolveParams,
        est: &SuccessEstimate,
        seed: u64,
    ) -> Result<Self> {
        // τ_a of a very fast run can round to zero; keep TTS well-defined
        let tau = est.tau_ms.max(f64::MIN_POSITIVE);
        Ok(BenchmarkRecord {
            instance: instance.to_string(),
            solver: solver.to_string(),
            n_vars,
            params_digest: params_digest(params)?,
            tau_ms: est.tau_ms,
            runs: est.runs,
            successes: est.successes,
            theta: est.theta,
            r99: r99(est.theta)?,
            tts_ms: tts(tau, est.theta)?,
            seed,
            run_wall_ms: est.run_wall_ms.clone(),
            timestamp_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        })
    }
}

/// Short SHA-256 of the parameters' canonical JSON.
pub fn params_digest(params: &SolveParams) -> Result<String> {
    let json = serde_json::to_vec(params)?;
    Ok(hex(&Sha256::digest(&json))[..16].to_string())
}

/// Appends one JSON record per line.
pub fn append_records(path: &Path, records: &[BenchmarkRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    for r in records {
        let line = serde_json::to_string(r)?;
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<BenchmarkRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: k + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "instance,solver,n_vars,theta,r99,tau_ms,tts_ms,seed";

pub fn to_csv(records: &[BenchmarkRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.instance, r.solver, r.n_vars, r.theta, r.r99, r.tau_ms, r.tts_ms, r.seed
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteInstance {
    /// Built-in core name.
    pub core: String,
    /// Defaults to the table counts for the core size.
    pub counts: Option<FuelCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub instances: Vec<SuiteInstance>,
    pub solvers: Vec<String>,
    pub params: SolveParams,
    pub options: EncodeOptions,
    pub runs: usize,
    pub seed: u64,
    pub log: Option<PathBuf>,
}

impl SuiteConfig {
    /// The benchmark table, limited to cores of at most `max_cells` cells.
    pub fn table1(max_cells: usize, solvers: &[&str]) -> Self {
        SuiteConfig {
            instances: presets::TABLE1
                .iter()
                .filter(|p| p.cells <= max_cells)
                .map(|p| SuiteInstance {
                    core: p.name.to_string(),
                    counts: Some(p.counts),
                })
                .collect(),
            solvers: solvers.iter().map(|s| s.to_string()).collect(),
            params: SolveParams::default(),
            options: EncodeOptions::default(),
            runs: 100,
            seed: crate::rng::DEFAULT_SEED,
            log: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub records: Vec<BenchmarkRecord>,
    pub estimates: Vec<SuccessEstimate>,
    /// Log write failures; the suite keeps going after them.
    pub io_errors: Vec<String>,
    /// Instances that could not be encoded, e.g. counts not summing to the core size.
    pub instance_errors: Vec<(String, String)>,
}

/// One record per (instance, solver). Configuration problems are reported
/// before anything runs.
pub fn run_suite(config: &SuiteConfig, registry: &SolverRegistry) -> Result<SuiteReport> {
    let solvers = config
        .solvers
        .iter()
        .map(|s| registry.get(s))
        .collect::<Result<Vec<_>>>()?;
    if config.runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    config.params.validate()?;
    let mut report = SuiteReport::default();
    let mut instances = Vec::new();
    for si in &config.instances {
        let layout = presets::builtin_core(&si.core)?;
        let counts = match si.counts {
            Some(c) => c,
            None => presets::table1_counts(layout.len()).ok_or_else(|| {
                Error::InvalidConfig(format!("no reference counts for `{}`", si.core))
            })?,
        };
        match Instance::new(layout, counts, config.options) {
            Ok(inst) => instances.push(inst),
            Err(e @ Error::CountsMismatch { .. }) => {
                report.instance_errors.push((si.core.clone(), e.to_string()))
            }
            Err(e) => return Err(e),
        }
    }

    for inst in &instances {
        for solver in &solvers {
            let est = estimate_success(
                solver.as_ref(),
                &config.params,
                &inst.model,
                Some(inst),
                config.runs,
                config.seed,
                SuccessCriterion::Feasible,
            )?;
            let params = SolveParams {
                restarts: config.runs,
                seed: config.seed,
                ..config.params.clone()
            };
            let rec = BenchmarkRecord::from_estimate(
                &inst.name,
                solver.name(),
                inst.model.n,
                &params,
                &est,
                config.seed,
            )?;
            if let Some(path) = &config.log {
                if let Err(e) = append_records(path, std::slice::from_ref(&rec)) {
                    report.io_errors.push(e.to_string());
                }
            }
            report.records.push(rec);
            report.estimates.push(est);
        }
    }
    Ok(report)
}
