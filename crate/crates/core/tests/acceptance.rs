//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::{Command, Output};
use std::time::{Duration, Instant};

use stc_core::builtins::{registry, Hint, Params};
use stc_core::error::Error;
use stc_core::eval::eval_psi_ref;
use stc_core::exec::{
    join, run_data_parallel_product, run_data_parallel_readonly, split, ExecConfig, FlagList, Mutation,
};
use stc_core::fuzz::{gen_random_program, sample_value, FuzzConfig, Xorshift64Star};
use stc_core::model::{init_state, register_thread, Multigraph, ThreadSpec};
use stc_core::program::{run_program, Body, Mode};
use stc_core::value::{TypeDesc, Value};
use stc_core::word::{validate_word, Word};

const FUZZ_SEED: u64 = 7;
const FUZZ_TRIALS: usize = 500;
const ORACLE_LIMIT: Duration = Duration::from_secs(60);
const LAW_LIMIT: Duration = Duration::from_secs(5);
const BENCH_LIMIT: Duration = Duration::from_secs(30);
const DETERMINISM_LIMIT: Duration = Duration::from_secs(20);
/// Sequential median must reach this fraction of k·l·d.
const SEQ_FLOOR: f64 = 0.9;
/// Pipeline median must stay below this fraction of the sequential median.
const PIPELINE_CEILING: f64 = 0.5;

type Outcome = Result<String, String>;

fn stc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stc")).args(args).output().expect("spawn stc")
}

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    let detail = format!("{detail} in {:.2}s (limit {}s)", took.as_secs_f64(), limit.as_secs());
    if took <= limit {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let trials = FUZZ_TRIALS.to_string();
    let seed = FUZZ_SEED.to_string();
    let out = stc(&["check", "--fuzz", "--seed", &seed, "--trials", &trials]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let summary = stdout.lines().last().unwrap_or("").to_string();
    if out.status.code() != Some(0) || summary != format!("{FUZZ_TRIALS}/{FUZZ_TRIALS} equal") {
        return Err(format!("exit {:?}, summary `{summary}`", out.status.code()));
    }
    within(ORACLE_LIMIT, start, summary)
}

fn functor_law() -> Outcome {
    let start = Instant::now();
    let cfg = FuzzConfig { seed: 11, ..FuzzConfig::default() };
    let mut rng = Xorshift64Star::new(cfg.seed);
    let mut checked = 0;
    while checked < 100 {
        let p = gen_random_program(&cfg, &mut rng);
        let Body::Word(w) = &p.body else { continue };
        let g = &p.graph;
        let at = rng.range_usize(0, w.letters().len());
        let (first, second) = w.word().split_at(at);
        let mid = if at == 0 { w.src().clone() } else { g.thread(w.letters()[at - 1]).unwrap().tgt.clone() };
        let first = if first.is_empty() { first.with_anchor(w.src().clone()) } else { first };
        let second = if second.is_empty() { second.with_anchor(mid) } else { second };
        let v1 = validate_word(g, &first).map_err(|e| e.to_string())?;
        let v2 = validate_word(g, &second).map_err(|e| e.to_string())?;
        let whole = eval_psi_ref(g, w, p.input.clone(), init_state(g)).map_err(|e| e.to_string())?;
        let (ys, s) = eval_psi_ref(g, &v1, p.input.clone(), init_state(g)).map_err(|e| e.to_string())?;
        let composed = eval_psi_ref(g, &v2, ys, s).map_err(|e| e.to_string())?;
        if whole != composed {
            return Err(format!("word {} split at {at} differs (program {})", w.word(), p.serialize()));
        }
        checked += 1;
    }
    within(LAW_LIMIT, start, format!("{checked} words"))
}

fn random_side(rng: &mut Xorshift64Star, n: usize) -> Vec<Value> {
    (0..n).map(|_| Value::Int(rng.range_i64(-1000, 1000))).collect()
}

fn split_join() -> Outcome {
    let start = Instant::now();
    let mut rng = Xorshift64Star::new(23);
    for i in 0..200 {
        let n = rng.range_usize(0, 100);
        let xs: Vec<Value> = (0..n)
            .map(|_| {
                let v = Value::Int(rng.range_i64(-1000, 1000));
                if rng.chance(1, 2) { Value::inl(v) } else { Value::inr(v) }
            })
            .collect();
        let (bs, cs, flags) = split(xs.clone()).map_err(|e| e.to_string())?;
        if join(bs, cs, &flags).map_err(|e| e.to_string())? != xs {
            return Err(format!("join(split(xs)) != xs for list {i}"));
        }
    }
    for i in 0..200 {
        let (nb, nc) = (rng.range_usize(0, 50), rng.range_usize(0, 50));
        let (bs, cs) = (random_side(&mut rng, nb), random_side(&mut rng, nc));
        let mut flags = vec![true; nb];
        flags.extend(vec![false; nc]);
        for j in (1..flags.len()).rev() {
            let k = rng.below(j as u64 + 1) as usize;
            flags.swap(j, k);
        }
        let flags = FlagList(flags);
        let joined = join(bs.clone(), cs.clone(), &flags).map_err(|e| e.to_string())?;
        if split(joined).map_err(|e| e.to_string())? != (bs, cs, flags) {
            return Err(format!("split(join(..)) differs for triple {i}"));
        }
    }
    for i in 0..50 {
        let (nb, nc) = (rng.range_usize(0, 20), rng.range_usize(0, 20));
        let (bs, cs) = (random_side(&mut rng, nb), random_side(&mut rng, nc));
        let mut flags: Vec<bool> = std::iter::repeat_n(true, nb).chain(std::iter::repeat_n(false, nc)).collect();
        match rng.below(3) {
            0 => flags.push(rng.chance(1, 2)),
            1 if !flags.is_empty() => {
                let k = rng.below(flags.len() as u64) as usize;
                flags.remove(k);
            }
            _ if !flags.is_empty() => {
                let k = rng.below(flags.len() as u64) as usize;
                flags[k] = !flags[k];
            }
            _ => flags.push(true),
        }
        match join(bs, cs, &FlagList(flags)) {
            Err(Error::FlagMismatch(_)) => {}
            other => return Err(format!("invalid triple {i} gave {other:?}")),
        }
    }
    within(LAW_LIMIT, start, "200 round trips, 200 inverse round trips, 50 mismatches".into())
}

/// The state half of each product builtin, written out independently.
fn iterate_h(name: &str, sigma: &Value, n: usize) -> Value {
    match (name, sigma) {
        ("add1_tick", Value::Int(s)) => Value::Int((0..n).fold(*s, |s, _| s.wrapping_add(1))),
        ("negate_tick", Value::Int(s)) => Value::Int((0..n).fold(*s, |s, _| s.wrapping_mul(3).wrapping_add(1))),
        ("halve_decay", Value::Float(s)) => Value::Float((0..n).fold(*s, |s, _| 0.5 * s + 1.0)),
        _ => panic!("no independent h for {name}"),
    }
}

fn fast_paths() -> Outcome {
    let start = Instant::now();
    let mut rng = Xorshift64Star::new(31);
    let candidates: Vec<_> = registry().iter().filter(|d| d.hint != Hint::General).collect();
    let (mut readonly, mut product) = (0, 0);
    for i in 0..100 {
        let def = *rng.pick(&candidates);
        let params = if def.is_polymorphic() { Params::default().with_type(TypeDesc::Int) } else { Params::default() };
        let entry = def.instantiate(&params).map_err(|e| e.to_string())?;
        let sigma = sample_value(&entry.state_type, &mut rng, 1000);
        let spec = ThreadSpec::new(1, def.name, params, sigma.clone()).map_err(|e| e.to_string())?;
        let n = rng.range_usize(0, 40);
        let xs: Vec<Value> = (0..n).map(|_| sample_value(&entry.src, &mut rng, 1000)).collect();
        let g = register_thread(spec.clone(), Multigraph::new()).map_err(|e| e.to_string())?;
        let w = validate_word(&g, &Word::new([1u64])).map_err(|e| e.to_string())?;
        let (want_ys, want_s) = eval_psi_ref(&g, &w, xs.clone(), init_state(&g)).map_err(|e| e.to_string())?;
        let want_sigma = want_s.get(spec.id).cloned().unwrap();
        let cfg = ExecConfig::with_workers(1 + i % 4);
        let got = match def.hint {
            Hint::ReadOnly => {
                readonly += 1;
                run_data_parallel_readonly(&spec, xs.clone(), sigma.clone(), &cfg)
            }
            _ => {
                product += 1;
                let independent = iterate_h(def.name, &sigma, n);
                if independent != want_sigma {
                    return Err(format!("{}: reference state {want_sigma} but h^{n} gives {independent}", def.name));
                }
                run_data_parallel_product(&spec, xs.clone(), sigma.clone(), &cfg)
            }
        }
        .map_err(|e| e.to_string())?;
        if got != (want_ys, want_sigma) {
            return Err(format!("{} fast path differs on program {i}", def.name));
        }
    }
    within(LAW_LIMIT, start, format!("{readonly} read-only, {product} product programs"))
}

fn schedule_shape() -> Outcome {
    let (k, l, d) = (4.0, 20.0, 10.0);
    let start = Instant::now();
    let out = stc(&["bench", "--stages", "4", "--list-len", "20", "--delay-ms", "10", "--workers", "4"]);
    if !out.status.success() {
        return Err(format!("bench exited {:?}", out.status.code()));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    if lines.next() != Some("mode,stages,list_len,delay_ms,wall_ms") {
        return Err("bad CSV header".into());
    }
    let mut wall = std::collections::HashMap::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let ms: f64 = cols.get(4).and_then(|c| c.parse().ok()).ok_or(format!("bad row `{line}`"))?;
        wall.insert(cols[0].to_string(), ms);
    }
    let (seq, pipe) = match (wall.get("seq"), wall.get("pipeline")) {
        (Some(s), Some(p)) => (*s, *p),
        _ => return Err("missing seq or pipeline row".into()),
    };
    let floor = SEQ_FLOOR * k * l * d;
    let detail = format!("seq {seq:.1} ms (floor {floor:.0}), pipeline {pipe:.1} ms = {:.2} x seq (ceiling {PIPELINE_CEILING})", pipe / seq);
    if seq < floor || pipe > PIPELINE_CEILING * seq {
        return Err(detail);
    }
    within(BENCH_LIMIT, start, detail)
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let cfg = FuzzConfig { seed: 101, ..FuzzConfig::default() };
    let mut rng = Xorshift64Star::new(cfg.seed);
    let mut corpus = Vec::new();
    while corpus.len() < 50 {
        let p = gen_random_program(&cfg, &mut rng);
        if p.is_branch() {
            corpus.push(p);
        }
    }
    for (i, p) in corpus.iter().enumerate() {
        let reference = run_program(p, Mode::Seq, &ExecConfig::with_workers(1)).map_err(|e| e.to_string())?.to_json().to_string();
        for workers in [1, 4] {
            for mode in [Mode::Pipeline, Mode::Auto] {
                for run in 0..5 {
                    let got = run_program(p, mode, &ExecConfig::with_workers(workers)).map_err(|e| e.to_string())?;
                    if got.to_json().to_string() != reference {
                        return Err(format!("program {i} ({}) differs: {mode} workers={workers} run {run}", p.digest()));
                    }
                }
            }
        }
    }
    within(DETERMINISM_LIMIT, start, format!("{} branch programs x 5 runs x workers {{1,4}} x {{pipeline,auto}}", corpus.len()))
}

fn mutation_sensitivity() -> Outcome {
    let trials = FUZZ_TRIALS.to_string();
    let seed = FUZZ_SEED.to_string();
    let mut caught = Vec::new();
    for m in Mutation::ALL {
        let out = stc(&["check", "--fuzz", "--seed", &seed, "--trials", &trials, "--mutation", m.name()]);
        if out.status.code() != Some(1) {
            return Err(format!("{m} not caught (exit {:?})", out.status.code()));
        }
        let stdout = String::from_utf8_lossy(&out.stdout);
        let first = stdout.lines().find_map(|l| l.strip_prefix("trial ").filter(|l| l.contains("DIVERGED")));
        let trial = first.and_then(|l| l.split_whitespace().next()).unwrap_or("?");
        caught.push(format!("{m}@{trial}"));
    }
    Ok(format!("caught {}", caught.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("oracle equivalence (fuzz seed 7, 500 trials)", oracle_equivalence),
        ("functor law (100 words)", functor_law),
        ("split/join round trips", split_join),
        ("data-parallel fast paths (100 programs)", fast_paths),
        ("pipeline schedule shape (k=4, l=20, d=10)", schedule_shape),
        ("determinism under scheduling (50 branch programs)", determinism),
        ("mutation sensitivity (5 mutations, 500 trials)", mutation_sensitivity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
