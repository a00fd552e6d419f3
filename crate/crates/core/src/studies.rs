//! Batch studies: feasibility maps over (once, twice) count mixes and
//! closed reload cycles under fuel aging.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::ops::RangeInclusive;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::ZERO_ENERGY_TOL;
use crate::encoder::{encode, EncodeOptions, FuelCounts};
use crate::error::{Error, Result};
use crate::feasibility::{check, check_bits, decode, BurnLevel, LoadingPattern};
use crate::geometry::CoreLayout;
use crate::rng::derive_seed;
use crate::solvers::{solve_bruteforce, solve_with, SolveParams, Solver, BRUTE_FORCE_CAP};

/// One reload step: twice-burnt fuel is discharged and replaced by fresh
/// fuel, everything else ages by one cycle, `T(a, b, c) = (c, a, b)`.
pub fn cycle_transition(c: FuelCounts) -> FuelCounts {
    FuelCounts::new(c.twice, c.fresh, c.once)
}

/// A closed orbit of [`cycle_transition`], starting at its smallest triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReloadCycle {
    pub triples: Vec<FuelCounts>,
}

impl ReloadCycle {
    /// The orbit of `start`, rotated to begin at its smallest member.
    pub fn orbit(start: FuelCounts) -> Self {
        let mut triples = vec![start];
        let mut next = cycle_transition(start);
        while next != start {
            triples.push(next);
            next = cycle_transition(next);
        }
        let k = (0..triples.len())
            .min_by_key(|&i| triples[i])
            .expect("orbit is non-empty");
        triples.rotate_left(k);
        ReloadCycle { triples }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

impl std::fmt::Display for ReloadCycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .triples
            .iter()
            .map(|t| format!("({}, {}, {})", t.fresh, t.once, t.twice))
            .collect();
        f.write_str(&parts.join(" -> "))
    }
}

/// Every aging orbit fully contained in `feasible`, one per orbit.
pub fn find_cycles(feasible: &[FuelCounts]) -> Vec<ReloadCycle> {
    let set: BTreeSet<FuelCounts> = feasible.iter().copied().collect();
    let cycles: BTreeSet<ReloadCycle> = set
        .iter()
        .map(|&t| ReloadCycle::orbit(t))
        .filter(|c| c.triples.iter().all(|t| set.contains(t)))
        .collect();
    cycles.into_iter().collect()
}

/// Count with each starting point of a cycle listed separately.
pub fn count_with_rotations(cycles: &[ReloadCycle]) -> usize {
    cycles.iter().map(ReloadCycle::len).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// A checker-verified witness was found.
    Feasible,
    /// No witness within budget; not a proof of anything.
    Unknown,
    /// Exhaustive search proved the minimum energy is positive.
    Infeasible,
    /// Once and twice counts exceed the core.
    Invalid,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Unknown => "unknown",
            Verdict::Infeasible => "infeasible",
            Verdict::Invalid => "invalid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub layout: String,
    pub once: usize,
    pub twice: usize,
    pub verdict: Verdict,
    pub best_energy: Option<f64>,
    pub restarts_used: usize,
    /// Burn level per cell for `feasible` points.
    pub witness: Option<Vec<BurnLevel>>,
}

impl SweepRecord {
    /// `(fresh, once, twice)` for a core of `cells` cells, if valid.
    pub fn counts(&self, cells: usize) -> Option<FuelCounts> {
        cells
            .checked_sub(self.once + self.twice)
            .map(|fresh| FuelCounts::new(fresh, self.once, self.twice))
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub once: RangeInclusive<usize>,
    pub twice: RangeInclusive<usize>,
    pub params: SolveParams,
    pub options: EncodeOptions,
    /// Settle heuristic failures by exhaustive search when the model is small enough.
    pub certify: bool,
}

fn validate_range(name: &str, r: &RangeInclusive<usize>, cells: usize) -> Result<()> {
    if r.start() > r.end() || *r.end() > cells {
        return Err(Error::InvalidRange(format!(
            "{name} range {}..={} must be ascending and within 0..={cells}",
            r.start(),
            r.end()
        )));
    }
    Ok(())
}

fn read_sweep_log(path: &Path, layout: &str) -> Result<BTreeMap<(usize, usize), SweepRecord>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SweepRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: k + 1,
            message: e.to_string(),
        })?;
        if rec.layout == layout {
            done.insert((rec.once, rec.twice), rec);
        }
    }
    Ok(done)
}

pub fn read_sweep_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut out = Vec::new();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: k + 1,
                message: e.to_string(),
            })?);
        }
    }
    Ok(out)
}

fn sweep_point(
    layout: &CoreLayout,
    once: usize,
    twice: usize,
    solver: &dyn Solver,
    config: &SweepConfig,
) -> Result<SweepRecord> {
    let n = layout.len();
    let mut rec = SweepRecord {
        layout: layout.name().to_string(),
        once,
        twice,
        verdict: Verdict::Invalid,
        best_energy: None,
        restarts_used: 0,
        witness: None,
    };
    let Some(fresh) = n.checked_sub(once + twice) else {
        return Ok(rec);
    };
    let counts = FuelCounts::new(fresh, once, twice);
    let model = encode(layout, counts, &config.options)?;
    let params = SolveParams {
        seed: derive_seed(config.params.seed, &[once as u64, twice as u64]),
        ..config.params.clone()
    };
    let out = solve_with(solver, &model, &params)?;
    rec.best_energy = Some(out.best_energy);
    rec.restarts_used = out.restarts_executed;
    rec.verdict = Verdict::Unknown;

    let mut candidate = Some(out.best_assignment).filter(|_| out.best_energy <= ZERO_ENERGY_TOL);
    if candidate.is_none() && config.certify && model.n <= BRUTE_FORCE_CAP {
        let exact = solve_bruteforce(&model)?;
        rec.best_energy = Some(exact.best_energy);
        if exact.best_energy > ZERO_ENERGY_TOL {
            rec.verdict = Verdict::Infeasible;
        } else {
            candidate = Some(exact.best_assignment);
        }
    }
    if let Some(z) = candidate {
        if check_bits(&z, layout, counts, &config.options)?.feasible {
            rec.verdict = Verdict::Feasible;
            rec.witness = Some(decode(&z, layout)?.levels);
        }
    }
    Ok(rec)
}

/// Attempts every `(once, twice)` grid point, skipping points already in
/// the resume log and appending new ones as they finish.
pub fn feasibility_map(
    layout: &CoreLayout,
    config: &SweepConfig,
    solver: &dyn Solver,
    log: Option<&Path>,
) -> Result<Vec<SweepRecord>> {
    let n = layout.len();
    validate_range("once", &config.once, n)?;
    validate_range("twice", &config.twice, n)?;
    config.params.validate()?;

    let mut done = match log {
        Some(p) => read_sweep_log(p, layout.name())?,
        None => BTreeMap::new(),
    };
    let pending: Vec<(usize, usize)> = config
        .once
        .clone()
        .flat_map(|a| config.twice.clone().map(move |b| (a, b)))
        .filter(|k| !done.contains_key(k))
        .collect();

    let writer = match log {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| Error::io(p, e))?;
            Some(Mutex::new((p, f)))
        }
        None => None,
    };

    let fresh: Vec<SweepRecord> = pending
        .par_iter()
        .map(|&(a, b)| {
            let rec = sweep_point(layout, a, b, solver, config)?;
            if let Some(w) = &writer {
                let line = serde_json::to_string(&rec)?;
                let mut guard = w.lock().expect("log writer poisoned");
                let (path, file) = &mut *guard;
                writeln!(file, "{line}").map_err(|e| Error::io(*path, e))?;
            }
            Ok(rec)
        })
        .collect::<Result<_>>()?;

    for r in fresh {
        done.insert((r.once, r.twice), r);
    }
    Ok(done
        .into_iter()
        .filter(|((a, b), _)| config.once.contains(a) && config.twice.contains(b))
        .map(|(_, r)| r)
        .collect())
}

/// Re-checks every stored witness; returns the `(once, twice)` points that fail.
pub fn verify_witnesses(
    records: &[SweepRecord],
    layout: &CoreLayout,
    options: &EncodeOptions,
) -> Result<Vec<(usize, usize)>> {
    let mut bad = Vec::new();
    for r in records.iter().filter(|r| r.verdict == Verdict::Feasible) {
        let ok = match (&r.witness, r.counts(layout.len())) {
            (Some(w), Some(counts)) if w.len() == layout.len() => {
                check(&LoadingPattern::new(w.clone()), layout, counts, options)?.feasible
            }
            _ => false,
        };
        if !ok {
            bad.push((r.once, r.twice));
        }
    }
    Ok(bad)
}

/// Feasible `(fresh, once, twice)` triples among sweep records.
pub fn feasible_counts(records: &[SweepRecord], cells: usize) -> Vec<FuelCounts> {
    records
        .iter()
        .filter(|r| r.verdict == Verdict::Feasible)
        .filter_map(|r| r.counts(cells))
        .collect()
}

/// Verdict grid: one row per twice count, one column per once count.
pub fn grid_csv(
    records: &[SweepRecord],
    once: &RangeInclusive<usize>,
    twice: &RangeInclusive<usize>,
) -> String {
    let by_point: BTreeMap<(usize, usize), Verdict> =
        records.iter().map(|r| ((r.once, r.twice), r.verdict)).collect();
    let mut out = String::from("twice\\once");
    for a in once.clone() {
        out.push_str(&format!(",{a}"));
    }
    out.push('\n');
    for b in twice.clone() {
        out.push_str(&b.to_string());
        for a in once.clone() {
            let v = by_point
                .get(&(a, b))
                .map_or(String::new(), |v| v.to_string());
            out.push(',');
            out.push_str(&v);
        }
        out.push('\n');
    }
    out
}
