//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! gating failure. Criterion 11 is long-running and only runs when
//! `FUELQUBO_LONG_RUN=1`.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;

use fuelqubo::benchmark::{
    append_records, estimate_success, r99, read_records, BenchmarkRecord, Instance,
    SuccessCriterion, ZERO_ENERGY_TOL,
};
use fuelqubo::feasibility::check_bits;
use fuelqubo::geometry::{LatticeMap, SymmetryGroup};
use fuelqubo::model::{bits_to_spins, QuboBuilder, QuboModel};
use fuelqubo::presets::{builtin_core, TABLE1};
use fuelqubo::rng::{stream, DEFAULT_SEED};
use fuelqubo::solvers::{solve_bruteforce, solve_sa, solve_simcim, SimulatedAnnealing};
use fuelqubo::studies::{
    count_with_rotations, cycle_transition, feasibility_map, find_cycles, verify_witnesses,
    SweepConfig, Verdict,
};
use fuelqubo::{check, decode, encode, CoreLayout, EncodeOptions, FuelCounts, SolveParams};

type Outcome = Result<String, String>;
/// `(core, successes, assignment digest)` per recovery core.
type Recovered = Vec<(String, usize, String)>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), || {
        format!("took {elapsed:.2?}, limit {limit_s} s")
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const SYMMETRY_OPTIONS: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

fn geometry_fidelity() -> Outcome {
    let start = Instant::now();
    let mut sizes = Vec::new();
    for p in &TABLE1 {
        sizes.push(builtin_core(p.name).map_err(err)?.len());
    }
    ensure(sizes == [13, 37, 69, 97, 121, 193, 241], || format!("cell counts {sizes:?}"))?;
    within(start.elapsed(), 1)?;
    Ok(format!("cells {sizes:?} in {:.2?}", start.elapsed()))
}

fn zero_energy_iff_feasible() -> Outcome {
    let start = Instant::now();
    let layout = builtin_core("plus5").map_err(err)?;
    let counts = [
        FuelCounts::new(2, 2, 1),
        FuelCounts::new(4, 0, 1),
        FuelCounts::new(4, 1, 0),
        FuelCounts::new(1, 2, 2),
        FuelCounts::new(0, 4, 1),
    ];
    let mut feasible_total = 0;
    for (rot, mirror) in SYMMETRY_OPTIONS {
        let options = EncodeOptions::with_symmetry(rot, mirror);
        for &c in &counts {
            let model = encode(&layout, c, &options).map_err(err)?;
            for mask in 0u32..1 << 15 {
                let z: Vec<u8> = (0..15).map(|k| ((mask >> k) & 1) as u8).collect();
                let zero = model.energy(&z).map_err(err)?.abs() <= ZERO_ENERGY_TOL;
                let ok = check_bits(&z, &layout, c, &options).map_err(err)?.feasible;
                ensure(zero == ok, || {
                    format!("rot={rot} mirror={mirror} counts={c} z={z:?}: zero={zero} feasible={ok}")
                })?;
                feasible_total += ok as usize;
            }
        }
    }
    ensure(feasible_total > 0, || "no feasible assignment at all".into())?;
    within(start.elapsed(), 30)?;
    Ok(format!(
        "4 symmetry options x {} count triples x 32768 assignments, {feasible_total} feasible, {:.2?}",
        counts.len(),
        start.elapsed()
    ))
}

fn random_qubo(rng: &mut impl Rng, n: usize, pairs: Option<usize>) -> QuboModel {
    let mut b = QuboBuilder::new(n);
    b.add_offset(rng.gen_range(-5.0..5.0));
    for i in 0..n {
        b.add_linear(i, rng.gen_range(-1.0..1.0));
    }
    match pairs {
        Some(m) if n > 1 => {
            for _ in 0..m {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                if i != j {
                    b.add_quadratic(i, j, rng.gen_range(-1.0..1.0));
                }
            }
        }
        Some(_) => {}
        None => {
            for i in 0..n {
                for j in i + 1..n {
                    b.add_quadratic(i, j, rng.gen_range(-1.0..1.0));
                }
            }
        }
    }
    b.build()
}

fn qubo_ising_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(DEFAULT_SEED, 3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(1..=600);
        let model = random_qubo(&mut rng, n, Some(4 * n));
        let ising = model.to_ising();
        for _ in 0..1000 {
            let z: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let eq = model.energy(&z).map_err(err)?;
            let ei = ising.energy(&bits_to_spins(&z).map_err(err)?).map_err(err)?;
            let rel = (eq - ei).abs() / eq.abs().max(1.0);
            worst = worst.max(rel);
            ensure(rel <= 1e-9, || format!("n={n}: qubo {eq} vs ising {ei}"))?;
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!("50 models x 1000 assignments, worst relative gap {worst:.1e}, {:.2?}", start.elapsed()))
}

fn solver_oracle_agreement() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(DEFAULT_SEED, 4);
    let sa = SolveParams { restarts: 100, sweeps: 500, ..Default::default() };
    let cim = SolveParams { restarts: 100, ..Default::default() };
    let (mut sa_hits, mut cim_hits) = (0, 0);
    for _ in 0..50 {
        let n = rng.gen_range(2..=16);
        let model = random_qubo(&mut rng, n, None);
        let exact = solve_bruteforce(&model).map_err(err)?.best_energy;
        let e_sa = solve_sa(&model, &sa).map_err(err)?.best_energy;
        let e_cim = solve_simcim(&model.to_ising(), &cim).map_err(err)?.best_energy;
        sa_hits += close(e_sa, exact, 1e-9) as usize;
        cim_hits += close(e_cim, exact, 1e-9) as usize;
    }
    let detail = format!("SA {sa_hits}/50, SimCIM {cim_hits}/50, {:.2?}", start.elapsed());
    ensure(sa_hits >= 48 && cim_hits >= 40, || detail.clone())?;
    within(start.elapsed(), 300)?;
    Ok(detail)
}

const RECOVERY_CORES: [(&str, FuelCounts); 3] = [
    ("core13", FuelCounts::new(8, 4, 1)),
    ("core37", FuelCounts::new(16, 17, 4)),
    ("core69", FuelCounts::new(33, 21, 15)),
];
const RECOVERY_RUNS: usize = 20;

fn recovery_params() -> SolveParams {
    SolveParams { sweeps: 20_000, ..Default::default() }
}

fn recover_patterns(log: &std::path::Path) -> Result<Recovered, String> {
    let params = recovery_params();
    let mut out = Vec::new();
    for (name, counts) in RECOVERY_CORES {
        let inst = Instance::new(builtin_core(name).map_err(err)?, counts, EncodeOptions::default())
            .map_err(err)?;
        let est = estimate_success(
            &SimulatedAnnealing,
            &params,
            &inst.model,
            Some(&inst),
            RECOVERY_RUNS,
            DEFAULT_SEED,
            SuccessCriterion::Feasible,
        )
        .map_err(err)?;
        ensure(est.theta >= 0.9, || format!("{name}: theta {}", est.theta))?;
        let slowest = est.run_wall_ms.iter().fold(0.0f64, |m, &v| m.max(v));
        ensure(slowest <= 10_000.0, || format!("{name}: slowest run {slowest:.0} ms"))?;
        let witness = est.witness.as_ref().ok_or("no witness")?;
        ensure(inst.model.energy(witness).map_err(err)?.abs() <= ZERO_ENERGY_TOL, || {
            format!("{name}: feasible witness has nonzero energy")
        })?;
        let rec = BenchmarkRecord::from_estimate(name, "sa", inst.model.n, &params, &est, DEFAULT_SEED)
            .map_err(err)?;
        ensure(rec.tts_ms.is_finite(), || format!("{name}: TTS not finite"))?;
        append_records(log, &[rec]).map_err(err)?;
        out.push((name.to_string(), est.successes, est.assignment_digest));
    }
    Ok(out)
}

fn pattern_recovery(log: &std::path::Path) -> Result<(String, Recovered), String> {
    let start = Instant::now();
    let results = recover_patterns(log)?;
    let logged = read_records(log).map_err(err)?;
    ensure(logged.len() == RECOVERY_CORES.len(), || format!("{} logged records", logged.len()))?;
    let summary: Vec<String> = logged
        .iter()
        .map(|r| format!("{} theta={} tts={:.1}ms", r.instance, r.theta, r.tts_ms))
        .collect();
    Ok((format!("{}, {:.2?}", summary.join("; "), start.elapsed()), results))
}

fn r99_arithmetic() -> Outcome {
    ensure(r99(0.99).map_err(err)? == 1.0, || "r99(0.99) != 1".into())?;
    let half = r99(0.5).map_err(err)?;
    ensure((half - 6.6439).abs() <= 1e-4, || format!("r99(0.5) = {half}"))?;
    ensure(r99(0.0).map_err(err)?.is_infinite(), || "r99(0) finite".into())?;
    let mut prev = f64::INFINITY;
    for k in 0..100 {
        let v = r99(k as f64 / 99.0).map_err(err)?;
        ensure(v <= prev, || format!("not monotone at step {k}"))?;
        prev = v;
    }
    Ok(format!("r99(0.5) = {half:.6}"))
}

fn invariant_under(layout: &CoreLayout, levels: &[fuelqubo::feasibility::BurnLevel], map: LatticeMap) -> Result<(), String> {
    let perm = layout.permutation(map).map_err(|id| format!("cell {id} has no image"))?;
    ensure((0..layout.len()).all(|i| levels[perm[i]] == levels[i]), || {
        format!("pattern not invariant under {map:?}")
    })
}

fn symmetry_constraints() -> Outcome {
    let layout = builtin_core("core13").map_err(err)?;
    let counts = FuelCounts::new(8, 4, 1);
    let params = SolveParams { restarts: 8, sweeps: 2000, ..Default::default() };
    let mut notes = Vec::new();
    for (rot, mirror, group) in [(true, false, SymmetryGroup::Rotational), (true, true, SymmetryGroup::Full)] {
        let options = EncodeOptions::with_symmetry(rot, mirror);
        let model = encode(&layout, counts, &options).map_err(err)?;
        let out = solve_sa(&model, &params).map_err(err)?;
        ensure(out.best_energy.abs() <= ZERO_ENERGY_TOL, || {
            format!("rot={rot} mirror={mirror}: best energy {}", out.best_energy)
        })?;
        let pattern = decode(&out.best_assignment, &layout).map_err(err)?;
        let report = check(&pattern, &layout, counts, &options).map_err(err)?;
        ensure(report.feasible, || report.to_table())?;
        for map in group.elements() {
            invariant_under(&layout, &pattern.levels, map)?;
        }
        notes.push(format!("{group} ({} elements) ok", group.order()));
    }
    Ok(format!("core13 8/4/1: {}", notes.join(", ")))
}

fn sweep_ground_truth() -> Outcome {
    let start = Instant::now();
    let layout = builtin_core("plus5").map_err(err)?;
    let config = SweepConfig {
        once: 0..=5,
        twice: 0..=5,
        params: SolveParams { restarts: 20, sweeps: 500, ..Default::default() },
        options: EncodeOptions::default(),
        certify: true,
    };
    let records = feasibility_map(&layout, &config, &SimulatedAnnealing, None).map_err(err)?;
    ensure(records.len() == 36, || format!("{} records", records.len()))?;
    let mut feasible = 0;
    for r in &records {
        let expected = match r.counts(5) {
            None => Verdict::Invalid,
            Some(c) => {
                let model = encode(&layout, c, &config.options).map_err(err)?;
                if solve_bruteforce(&model).map_err(err)?.best_energy <= ZERO_ENERGY_TOL {
                    Verdict::Feasible
                } else {
                    Verdict::Infeasible
                }
            }
        };
        ensure(r.verdict == expected, || {
            format!("({}, {}): {} vs brute force {expected}", r.once, r.twice, r.verdict)
        })?;
        feasible += (expected == Verdict::Feasible) as usize;
    }
    let bad = verify_witnesses(&records, &layout, &config.options).map_err(err)?;
    ensure(bad.is_empty(), || format!("witnesses rejected at {bad:?}"))?;
    within(start.elapsed(), 120)?;
    Ok(format!("36 grid points, {feasible} feasible, all match, {:.2?}", start.elapsed()))
}

fn cycle_logic() -> Outcome {
    let listed = [
        [(76, 49, 68), (68, 76, 49), (49, 68, 76)],
        [(72, 49, 72), (72, 72, 49), (49, 72, 72)],
        [(68, 57, 68), (68, 68, 57), (57, 68, 68)],
    ];
    let t = |(a, b, c): (usize, usize, usize)| FuelCounts::new(a, b, c);
    let mut all = Vec::new();
    for cycle in listed {
        for k in 0..3 {
            let next = cycle_transition(t(cycle[k]));
            ensure(next == t(cycle[(k + 1) % 3]), || format!("{} -> {next}", t(cycle[k])))?;
            all.push(t(cycle[k]));
        }
    }
    let cycles = find_cycles(&all);
    ensure(cycles.len() == 3, || format!("{} canonical cycles", cycles.len()))?;
    let rotated = count_with_rotations(&cycles);
    ensure(rotated == 9, || format!("{rotated} with rotations"))?;
    Ok("3 canonical cycles, 9 with rotations".into())
}

fn determinism(first: &Recovered) -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let again = recover_patterns(&dir.path().join("again.jsonl"))?;
    ensure(&again == first, || "repeat run differs".into())?;
    Ok(format!("{} cores reproduced bit-identically", again.len()))
}

fn long_run_pwr193() -> Outcome {
    let start = Instant::now();
    let budget = Duration::from_secs(600);
    let layout = builtin_core("pwr193").map_err(err)?;
    let counts = FuelCounts::new(64, 80, 49);
    let options = EncodeOptions::default();
    let model = encode(&layout, counts, &options).map_err(err)?;
    let mut round = 0u64;
    while start.elapsed() < budget {
        let params = SolveParams {
            sweeps: 50_000,
            restarts: rayon::current_num_threads(),
            seed: fuelqubo::rng::derive_seed(DEFAULT_SEED, &[round]),
            ..Default::default()
        };
        let out = solve_sa(&model, &params).map_err(err)?;
        if check_bits(&out.best_assignment, &layout, counts, &options).map_err(err)?.feasible {
            return Ok(format!("feasible after {} rounds, {:.2?}", round + 1, start.elapsed()));
        }
        round += 1;
    }
    Err(format!("no feasible pattern within {budget:?}"))
}

fn run(id: &str, name: &str, gating: bool, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
    let tag = match (&result, gating) {
        (Ok(_), _) => "PASS",
        (Err(_), true) => "FAIL",
        (Err(_), false) => "FAIL (non-gating)",
    };
    let detail = match &result {
        Ok(d) | Err(d) => d,
    };
    println!("criterion {id:>2} {tag}: {name} [{:.2?}] {detail}", start.elapsed());
    result.is_ok() || !gating
}

fn main() {
    // `cargo test -- <filter>` passes arguments through; this suite always runs whole.
    let mut ok = true;
    ok &= run("1", "geometry fidelity", true, geometry_fidelity);
    ok &= run("2", "zero energy iff feasible", true, zero_energy_iff_feasible);
    ok &= run("3", "QUBO/Ising identity", true, qubo_ising_identity);
    ok &= run("4", "solver/oracle agreement", true, solver_oracle_agreement);

    let dir = tempfile::tempdir().expect("temp dir");
    let mut recovered = None;
    ok &= run("5", "feasible pattern recovery", true, || {
        let (detail, results) = pattern_recovery(&dir.path().join("bench.jsonl"))?;
        recovered = Some(results);
        Ok(detail)
    });
    ok &= run("6", "R99 arithmetic", true, r99_arithmetic);
    ok &= run("7", "symmetry constraints", true, symmetry_constraints);
    ok &= run("8", "sweep ground truth", true, sweep_ground_truth);
    ok &= run("9", "cycle logic", true, cycle_logic);
    ok &= run("10", "determinism", true, || match &recovered {
        Some(first) => determinism(first),
        None => Err("criterion 5 did not complete".into()),
    });
    if std::env::var("FUELQUBO_LONG_RUN").is_ok_and(|v| v == "1") {
        run("11", "pwr193 long run", false, long_run_pwr193);
    } else {
        println!("criterion 11 SKIP: pwr193 long run (set FUELQUBO_LONG_RUN=1)");
    }
    if !ok {
        std::process::exit(1);
    }
}
