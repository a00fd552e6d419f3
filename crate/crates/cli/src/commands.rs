use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde_json::json;

use fuelqubo::benchmark::{run_suite, to_csv, BenchmarkRecord, SuiteConfig, SuiteInstance};
use fuelqubo::feasibility::check_bits;
use fuelqubo::presets::{builtin_core, table1_counts};
use fuelqubo::studies::{
    count_with_rotations, feasibility_map, feasible_counts, find_cycles, grid_csv,
    read_sweep_records, SweepConfig, SweepRecord, Verdict,
};
use fuelqubo::{
    check, decode, encode, CoreLayout, EncodeOptions, Error, FeasibilityReport, FuelCounts,
    LoadingPattern, SolveParams, SolverRegistry,
};

use crate::args::{Command, Format, Global, Suite};

pub const RESULTS_DIR_ENV: &str = "FUELQUBO_RESULTS_DIR";

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or inputs.
    Usage(String),
    Core(Error),
    /// `check` found rule violations.
    Infeasible,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Infeasible => 1,
            Failure::Usage(_) => 2,
            Failure::Core(e) if e.is_io() || matches!(e, Error::Json(_) | Error::Parse { .. }) => 3,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Infeasible => f.write_str("pattern is infeasible"),
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Relative paths land in the results directory when one is configured.
fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(RESULTS_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Default file in the results directory, if one is configured.
fn default_in_results(name: &str) -> Option<PathBuf> {
    std::env::var_os(RESULTS_DIR_ENV).map(|d| Path::new(&d).join(name))
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn emit(g: &Global, content: &str) -> Outcome {
    match &g.out {
        Some(p) => {
            let path = resolve(p);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            std::fs::write(&path, content).map_err(|e| io_err(&path, e))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(v).map_err(Error::from)? + "\n")
}

fn layout(g: &Global) -> Result<CoreLayout, Failure> {
    let base = match (&g.layout_file, &g.core) {
        (Some(p), _) => CoreLayout::load(resolve(p))?,
        (None, Some(name)) => builtin_core(name)?,
        (None, None) => return Err(usage("one of --core or --layout-file is required")),
    };
    Ok(match g.inner_depth {
        Some(d) => base.classify_regions(d)?,
        None => base,
    })
}

fn counts(g: &Global, layout: &CoreLayout) -> Result<FuelCounts, Failure> {
    match g.counts.as_deref() {
        None => Err(usage("--counts is required (fresh,once,twice or table1)")),
        Some("table1") => table1_counts(layout.len()).ok_or_else(|| {
            usage(format!("no reference counts for a {}-cell core", layout.len()))
        }),
        Some(s) => Ok(s.parse()?),
    }
}

fn options(g: &Global) -> EncodeOptions {
    EncodeOptions {
        weights: g.weights.unwrap_or_default(),
        ..EncodeOptions::with_symmetry(g.rot_sym, g.mirror_sym)
    }
}

fn params(g: &Global) -> SolveParams {
    let d = SolveParams::default();
    SolveParams {
        sweeps: g.sweeps.unwrap_or(d.sweeps),
        steps: g.steps.unwrap_or(d.steps),
        restarts: g.restarts.unwrap_or(d.restarts),
        seed: g.seed,
        time_budget_ms: g.budget_ms,
        threads: g.threads,
        ..d
    }
}

pub fn run(g: &Global, command: &Command) -> Outcome {
    match command {
        Command::Layout => cmd_layout(g),
        Command::Encode { ising } => cmd_encode(g, *ising),
        Command::Solve { pattern_out } => cmd_solve(g, pattern_out.as_deref()),
        Command::Check { pattern } => cmd_check(g, pattern),
        Command::Bench {
            suite,
            solvers,
            max_core,
            log,
        } => cmd_bench(g, *suite, solvers, *max_core, log.as_deref()),
        Command::Sweep {
            once,
            twice,
            log,
            certify,
        } => cmd_sweep(g, once.as_deref(), twice.as_deref(), log.as_deref(), *certify),
        Command::Cycles { log, triples } => cmd_cycles(g, log.as_deref(), triples.as_deref()),
    }
}

fn cmd_layout(g: &Global) -> Outcome {
    let l = layout(g)?;
    let (border, middle, inner) = l.region_tally();
    let out = match g.format {
        Format::Text => format!(
            "{}{}: {} cells (border P {border}, middle M {middle}, inner I {inner})\n",
            l.render(|i| l.region(i).marker()),
            l.name(),
            l.len()
        ),
        Format::Json => pretty(&json!({
            "name": l.name(),
            "cells": l.len(),
            "inner_depth": l.inner_depth(),
            "regions": { "border": border, "middle": middle, "inner": inner },
            "layout": l.to_file(),
        }))?,
        Format::Csv => {
            let mut s = String::from("id,x,y,region\n");
            for c in l.cells() {
                let _ = writeln!(s, "{},{},{},{}", c.id, c.x, c.y, l.region(c.id).marker());
            }
            s
        }
    };
    emit(g, &out)
}

fn cmd_encode(g: &Global, ising: bool) -> Outcome {
    let l = layout(g)?;
    let c = counts(g, &l)?;
    let opts = options(g);
    let model = encode(&l, c, &opts)?;
    eprintln!(
        "{} counts {c} symmetry {}: {} variables, {} linear and {} quadratic terms, offset {}",
        l.name(),
        opts.symmetry_group(),
        model.n,
        model.linear.len(),
        model.quadratic.len(),
        model.offset
    );
    let out = if ising {
        let m = model.to_ising();
        match g.format {
            Format::Text => m.to_text(),
            Format::Json => pretty(&json!({
                "core": l.name(), "counts": c.to_string(), "kind": "ising",
                "n_vars": m.n, "linear_terms": m.h.len(), "quadratic_terms": m.j.len(),
                "offset": m.offset, "model": m.to_text(),
            }))?,
            Format::Csv => terms_csv(m.offset, &m.h, &m.j),
        }
    } else {
        match g.format {
            Format::Text => model.to_text(),
            Format::Json => pretty(&json!({
                "core": l.name(), "counts": c.to_string(), "kind": "qubo",
                "n_vars": model.n, "linear_terms": model.linear.len(),
                "quadratic_terms": model.quadratic.len(),
                "offset": model.offset, "model": model.to_text(),
            }))?,
            Format::Csv => terms_csv(model.offset, &model.linear, &model.quadratic),
        }
    };
    emit(g, &out)
}

fn terms_csv(
    offset: f64,
    linear: &std::collections::BTreeMap<usize, f64>,
    quadratic: &std::collections::BTreeMap<(usize, usize), f64>,
) -> String {
    let mut s = format!("kind,i,j,value\noffset,,,{offset}\n");
    for (i, v) in linear {
        let _ = writeln!(s, "linear,{i},,{v}");
    }
    for ((i, j), v) in quadratic {
        let _ = writeln!(s, "quadratic,{i},{j},{v}");
    }
    s
}

fn pattern_csv(l: &CoreLayout, p: &LoadingPattern) -> String {
    let mut s = String::from("cell,x,y,level\n");
    for c in l.cells() {
        let _ = writeln!(s, "{},{},{},{}", c.id, c.x, c.y, p.levels[c.id] as u8);
    }
    s
}

fn report_text(report: &FeasibilityReport) -> String {
    report.to_table()
}

fn report_csv(report: &FeasibilityReport) -> String {
    let mut s = String::from("rule,cells,message\n");
    for v in &report.violations {
        let cells: Vec<String> = v.cells.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{},{},\"{}\"", v.rule, cells.join(" "), v.message.replace('"', "'"));
    }
    s
}

fn cmd_solve(g: &Global, pattern_out: Option<&Path>) -> Outcome {
    let l = layout(g)?;
    let c = counts(g, &l)?;
    let opts = options(g);
    let model = encode(&l, c, &opts)?;
    let p = params(g);
    let outcome = SolverRegistry::default().solve(&model, &g.method, &p)?;
    let report = check_bits(&outcome.best_assignment, &l, c, &opts)?;
    let pattern = decode(&outcome.best_assignment, &l).ok();
    eprintln!(
        "{} {}: best energy {} over {} restarts, {}",
        l.name(),
        g.method,
        outcome.best_energy,
        outcome.restarts_executed,
        if report.feasible { "feasible" } else { "infeasible" }
    );

    let target = pattern_out
        .map(resolve)
        .or_else(|| default_in_results(&format!("{}-{}-pattern.json", l.name(), g.method)));
    if let (Some(path), Some(pat)) = (&target, &pattern) {
        pat.save(l.name(), path)?;
        eprintln!("saved pattern to {}", path.display());
    }

    let out = match g.format {
        Format::Text => {
            let mut s = String::new();
            if let Some(pat) = &pattern {
                s.push_str(&pat.render(&l));
            }
            let _ = writeln!(s, "energy: {}", outcome.best_energy);
            s.push_str(&report_text(&report));
            s
        }
        Format::Json => pretty(&json!({
            "core": l.name(),
            "counts": c.to_string(),
            "method": g.method,
            "seed": p.seed,
            "energy": outcome.best_energy,
            "feasible": report.feasible,
            "restarts": outcome.restarts_executed,
            "restart_energies": outcome.restart_energies,
            "assignment": outcome.best_assignment,
            "pattern": pattern.as_ref().map(|p| p.levels.clone()),
            "violations": report.violations,
        }))?,
        Format::Csv => match &pattern {
            Some(pat) => pattern_csv(&l, pat),
            None => report_csv(&report),
        },
    };
    emit(g, &out)
}

fn cmd_check(g: &Global, path: &Path) -> Outcome {
    let (layout_name, pattern) = LoadingPattern::load(resolve(path))?;
    let l = if g.core.is_some() || g.layout_file.is_some() {
        layout(g)?
    } else {
        let base = builtin_core(&layout_name)?;
        match g.inner_depth {
            Some(d) => base.classify_regions(d)?,
            None => base,
        }
    };
    let c = match &g.counts {
        Some(_) => counts(g, &l)?,
        None => pattern.counts(),
    };
    let report = check(&pattern, &l, c, &options(g))?;
    let out = match g.format {
        Format::Text => pattern.render(&l) + &report_text(&report),
        Format::Json => pretty(&json!({
            "core": l.name(),
            "counts": c.to_string(),
            "feasible": report.feasible,
            "violations": report.violations,
        }))?,
        Format::Csv => report_csv(&report),
    };
    emit(g, &out)?;
    if report.feasible {
        Ok(())
    } else {
        Err(Failure::Infeasible)
    }
}

fn cmd_bench(
    g: &Global,
    suite: Option<Suite>,
    solvers: &[String],
    max_core: Option<usize>,
    log: Option<&Path>,
) -> Outcome {
    let names: Vec<&str> = solvers.iter().map(String::as_str).collect();
    let mut config = match suite {
        Some(Suite::Table1) => SuiteConfig::table1(max_core.unwrap_or(usize::MAX), &names),
        None => {
            let core = g
                .core
                .clone()
                .ok_or_else(|| usage("bench needs --suite table1 or a built-in --core"))?;
            let counts = match g.counts.as_deref() {
                None | Some("table1") => None,
                Some(s) => Some(s.parse()?),
            };
            SuiteConfig {
                instances: vec![SuiteInstance { core, counts }],
                ..SuiteConfig::table1(0, &names)
            }
        }
    };
    config.params = params(g);
    config.options = options(g);
    config.seed = g.seed;
    if let Some(r) = g.runs {
        config.runs = r;
    }
    config.log = log.map(resolve).or_else(|| default_in_results("bench.jsonl"));

    let report = run_suite(&config, &SolverRegistry::default())?;
    for (core, e) in &report.instance_errors {
        eprintln!("skipped {core}: {e}");
    }
    for e in &report.io_errors {
        eprintln!("log write failed: {e}");
    }
    for r in &report.records {
        eprintln!(
            "{} {}: theta {} ({}/{}), tts {} ms",
            r.instance, r.solver, r.theta, r.successes, r.runs, r.tts_ms
        );
    }
    let out = match g.format {
        Format::Csv => to_csv(&report.records),
        Format::Json => records_jsonl(&report.records)?,
        Format::Text => bench_table(&report.records),
    };
    emit(g, &out)
}

fn records_jsonl<T: serde::Serialize>(records: &[T]) -> Result<String, Failure> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).map_err(Error::from)?);
        s.push('\n');
    }
    Ok(s)
}

fn bench_table(records: &[BenchmarkRecord]) -> String {
    let mut s = format!(
        "{:<10} {:<10} {:>6} {:>7} {:>9} {:>10} {:>12}\n",
        "instance", "solver", "n_vars", "theta", "r99", "tau_ms", "tts_ms"
    );
    for r in records {
        let _ = writeln!(
            s,
            "{:<10} {:<10} {:>6} {:>7.3} {:>9.2} {:>10.3} {:>12.3}",
            r.instance, r.solver, r.n_vars, r.theta, r.r99, r.tau_ms, r.tts_ms
        );
    }
    s
}

/// Parses `lo:hi` (inclusive) or a single value.
fn parse_range(s: Option<&str>, cells: usize, name: &str) -> Result<RangeInclusive<usize>, Failure> {
    let Some(s) = s else {
        return Ok(0..=cells);
    };
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("--{name} expects `lo:hi` or a number, got `{s}`")))
    };
    match s.split_once(':') {
        Some((a, b)) => Ok(num(a)?..=num(b)?),
        None => {
            let v = num(s)?;
            Ok(v..=v)
        }
    }
}

fn verdict_glyph(v: Verdict) -> char {
    match v {
        Verdict::Feasible => '#',
        Verdict::Unknown => '?',
        Verdict::Infeasible => '.',
        Verdict::Invalid => ' ',
    }
}

fn sweep_text(records: &[SweepRecord], once: &RangeInclusive<usize>, twice: &RangeInclusive<usize>) -> String {
    let by_point: std::collections::BTreeMap<(usize, usize), Verdict> =
        records.iter().map(|r| ((r.once, r.twice), r.verdict)).collect();
    let mut s = String::from("rows: twice (top = highest), columns: once\n");
    for b in twice.clone().rev() {
        let _ = write!(s, "{b:>4} ");
        for a in once.clone() {
            s.push(by_point.get(&(a, b)).map_or(' ', |v| verdict_glyph(*v)));
        }
        s.push('\n');
    }
    s.push_str("# feasible  ? unknown  . infeasible\n");
    s
}

fn cmd_sweep(
    g: &Global,
    once: Option<&str>,
    twice: Option<&str>,
    log: Option<&Path>,
    certify: bool,
) -> Outcome {
    let l = layout(g)?;
    let once = parse_range(once, l.len(), "once")?;
    let twice = parse_range(twice, l.len(), "twice")?;
    let config = SweepConfig {
        once: once.clone(),
        twice: twice.clone(),
        params: params(g),
        options: options(g),
        certify,
    };
    let solver = SolverRegistry::default().get(&g.method)?;
    let log = log
        .map(resolve)
        .or_else(|| default_in_results(&format!("sweep-{}.jsonl", l.name())));
    let records = feasibility_map(&l, &config, solver.as_ref(), log.as_deref())?;
    let tally = |v: Verdict| records.iter().filter(|r| r.verdict == v).count();
    eprintln!(
        "{}: {} points, {} feasible, {} unknown, {} infeasible, {} invalid",
        l.name(),
        records.len(),
        tally(Verdict::Feasible),
        tally(Verdict::Unknown),
        tally(Verdict::Infeasible),
        tally(Verdict::Invalid)
    );
    let out = match g.format {
        Format::Csv => grid_csv(&records, &once, &twice),
        Format::Json => records_jsonl(&records)?,
        Format::Text => sweep_text(&records, &once, &twice),
    };
    emit(g, &out)
}

fn parse_triples(s: &str) -> Result<Vec<FuelCounts>, Failure> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<FuelCounts>().map_err(Failure::from))
        .collect()
}

fn cmd_cycles(g: &Global, log: Option<&Path>, triples: Option<&str>) -> Outcome {
    let feasible = match (triples, log) {
        (Some(t), _) => parse_triples(t)?,
        (None, Some(p)) => {
            let records = read_sweep_records(&resolve(p))?;
            let cells = if g.core.is_some() || g.layout_file.is_some() {
                layout(g)?.len()
            } else {
                let names: std::collections::BTreeSet<&str> =
                    records.iter().map(|r| r.layout.as_str()).collect();
                match names.into_iter().collect::<Vec<_>>().as_slice() {
                    [] => 0,
                    [one] => builtin_core(one)?.len(),
                    _ => return Err(usage("log holds several layouts; pick one with --core")),
                }
            };
            let own: Vec<SweepRecord> = match &g.core {
                Some(name) => records.into_iter().filter(|r| &r.layout == name).collect(),
                None => records,
            };
            feasible_counts(&own, cells)
        }
        (None, None) => return Err(usage("cycles needs --log or --triples")),
    };
    let cycles = find_cycles(&feasible);
    let rotated = count_with_rotations(&cycles);
    eprintln!("{} cycles ({rotated} counting rotations)", cycles.len());
    let out = match g.format {
        Format::Text => {
            let mut s = String::new();
            for c in &cycles {
                let _ = writeln!(s, "{c}");
            }
            let _ = writeln!(s, "{} cycles, {rotated} counting rotations", cycles.len());
            s
        }
        Format::Json => pretty(&json!({
            "cycles": cycles.iter().map(|c| c.triples.iter().map(|t| [t.fresh, t.once, t.twice]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "canonical": cycles.len(),
            "with_rotations": rotated,
        }))?,
        Format::Csv => {
            let mut s = String::from("cycle,step,fresh,once,twice\n");
            for (k, c) in cycles.iter().enumerate() {
                for (step, t) in c.triples.iter().enumerate() {
                    let _ = writeln!(s, "{k},{step},{},{},{}", t.fresh, t.once, t.twice);
                }
            }
            s
        }
    };
    emit(g, &out)
}
