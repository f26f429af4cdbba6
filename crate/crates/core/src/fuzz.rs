//! Seed-deterministic program generation.
//!
//! The generator is xorshift64* (Vigna): the seed is scrambled through one
//! splitmix64 step (a zero result is replaced by `0x9E3779B97F4A7C15`), then
//! each draw does
//!
//! ```text
//! x ^= x >> 12; x ^= x << 25; x ^= x >> 27;
//! return x * 0x2545F4914F6CDD1D   (wrapping)
//! ```
//!
//! `below(n)` is `next % n`. Trial `i` of a run with seed `s` uses its own
//! stream seeded with `s ^ ((i + 1) * 0x9E3779B97F4A7C15)`, so a trial can be
//! regenerated without replaying the ones before it.

use crate::builtins::{lookup, registry, Params};
use crate::exec::BranchProgram;
use crate::model::ThreadSpec;
use crate::program::{BodySpec, Program};
use crate::value::{TypeDesc, Value};
use crate::word::Word;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xorshift64Star {
    state: u64,
}

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Xorshift64Star {
    pub fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        Xorshift64Star { state: if s == 0 { GOLDEN } else { s } }
    }

    pub fn for_trial(seed: u64, trial: u64) -> Self {
        Xorshift64Star::new(seed ^ trial.wrapping_add(1).wrapping_mul(GOLDEN))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform-ish in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Inclusive range.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        let span = hi.wrapping_sub(lo) as u64;
        if span == u64::MAX {
            return self.next_u64() as i64;
        }
        lo.wrapping_add(self.below(span + 1) as i64)
    }

    /// Inclusive range.
    pub fn range_usize(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below((hi - lo) as u64 + 1) as usize
    }

    /// True with probability `num / den`.
    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len() as u64) as usize]
    }
}

const MAX_SAMPLE_LEN: usize = 4;

/// A random inhabitant of `desc`. Integers fall in `[-int_bound, int_bound]`,
/// floats are quarter-integers in the same range, strings are short lowercase.
pub fn sample_value(desc: &TypeDesc, rng: &mut Xorshift64Star, int_bound: i64) -> Value {
    let bound = int_bound.max(0);
    match desc {
        TypeDesc::Unit => Value::Unit,
        TypeDesc::Bool => Value::Bool(rng.chance(1, 2)),
        TypeDesc::Int => Value::Int(rng.range_i64(-bound, bound)),
        TypeDesc::Float => Value::Float(rng.range_i64(-bound, bound) as f64 / 4.0),
        TypeDesc::Str => {
            let n = rng.range_usize(0, MAX_SAMPLE_LEN);
            Value::Str((0..n).map(|_| (b'a' + rng.below(26) as u8) as char).collect())
        }
        TypeDesc::List(e) => {
            let n = rng.range_usize(0, MAX_SAMPLE_LEN);
            Value::List((0..n).map(|_| sample_value(e, rng, int_bound)).collect())
        }
        TypeDesc::Pair(a, b) => {
            let a = sample_value(a, rng, int_bound);
            Value::pair(a, sample_value(b, rng, int_bound))
        }
        TypeDesc::Sum(l, r) => {
            if rng.chance(1, 2) {
                Value::inl(sample_value(l, rng, int_bound))
            } else {
                Value::inr(sample_value(r, rng, int_bound))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub trials: usize,
    /// Upper bound on the number of threads in a generated graph.
    pub max_edges: usize,
    pub max_word_len: usize,
    pub max_list_len: usize,
    /// Integer payloads are drawn from `[-int_bound, int_bound]`.
    pub int_bound: i64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig { seed: 0, trials: 100, max_edges: 8, max_word_len: 5, max_list_len: 20, int_bound: 1000 }
    }
}

const INT_ENDO: &[&str] = &["counter_add", "scale_by_state", "add1_tick", "running_sum", "negate_tick", "delay_identity_ms"];

struct Builder<'a> {
    cfg: &'a FuzzConfig,
    rng: &'a mut Xorshift64Star,
    threads: Vec<ThreadSpec>,
    /// Slots promised to mandatory threads not yet added.
    reserved: usize,
}

impl Builder<'_> {
    fn add(&mut self, func: &str, params: Params) -> u64 {
        let id = self.threads.len() as u64 + 1;
        let state_type = lookup(func).and_then(|d| d.instantiate(&params)).expect("registry entry").state_type;
        let init = sample_value(&state_type, self.rng, self.cfg.int_bound);
        self.threads.push(ThreadSpec::new(id, func, params, init).expect("generated thread is well typed"));
        id
    }

    fn add_endo(&mut self, desc: &TypeDesc) -> u64 {
        let candidates: Vec<&str> = match desc {
            TypeDesc::Int => INT_ENDO.to_vec(),
            TypeDesc::Float => vec!["ema_half", "halve_decay", "delay_identity_ms"],
            TypeDesc::Str => vec!["append_tag", "concat_state", "delay_identity_ms"],
            _ => vec!["delay_identity_ms"],
        };
        let f = *self.rng.pick(&candidates);
        let params = if f == "delay_identity_ms" && desc != &TypeDesc::Int {
            Params::default().with_type(desc.clone())
        } else {
            Params::default()
        };
        self.add(f, params)
    }

    fn budget(&self) -> usize {
        self.cfg.max_edges.saturating_sub(self.threads.len() + self.reserved)
    }

    fn list(&mut self, desc: &TypeDesc) -> Vec<Value> {
        let n = self.rng.range_usize(0, self.cfg.max_list_len);
        (0..n).map(|_| sample_value(desc, self.rng, self.cfg.int_bound)).collect()
    }

    /// Builtins whose source is `desc`, as (name, params).
    fn successors(desc: &TypeDesc) -> Vec<(&'static str, Params)> {
        let mut out = Vec::new();
        for def in registry() {
            if def.name == "delay_identity_ms" {
                out.push((def.name, Params::default().with_type(desc.clone())));
            } else if def.name == "merge_sum" {
                if let TypeDesc::Sum(a, b) = desc {
                    if a == b {
                        out.push((def.name, Params::default().with_type((**a).clone())));
                    }
                }
            } else if def.default_signature().0 == *desc {
                out.push((def.name, Params::default()));
            }
        }
        out
    }

    /// A path of distinct threads. With labels, vertex `v{i}` sits between
    /// letter `i` and `i + 1`, so the graph is a simple chain.
    fn chain(&mut self) -> (Word, TypeDesc) {
        let len = self.rng.range_usize(1, self.cfg.max_word_len.min(self.cfg.max_edges).max(1));
        let labelled = self.rng.chance(1, 2);
        let start = self.rng.pick(&[TypeDesc::Int, TypeDesc::Int, TypeDesc::Float, TypeDesc::Str]).clone();
        let mut desc = start.clone();
        let mut letters = Vec::with_capacity(len);
        for i in 0..len {
            let options = Self::successors(&desc);
            let (f, mut params) = self.rng.pick(&options).clone();
            if labelled {
                params = params.with_labels(format!("v{i}"), format!("v{}", i + 1));
            }
            let id = self.add(f, params);
            desc = self.threads.last().expect("just added").tgt.desc.clone();
            letters.push(id);
        }
        (Word::new(letters), start)
    }

    /// A word over a small pool of `int -> int` threads with at least one repeat.
    fn repeated(&mut self) -> Word {
        let pool_size = self.rng.range_usize(1, self.cfg.max_edges.clamp(1, 3));
        let pool: Vec<u64> = (0..pool_size).map(|_| self.add_endo(&TypeDesc::Int)).collect();
        let len = self.rng.range_usize(2, self.cfg.max_word_len.max(2));
        let mut letters: Vec<u64> = (0..len).map(|_| *self.rng.pick(&pool)).collect();
        let mut seen = std::collections::HashSet::new();
        if letters.iter().all(|n| seen.insert(*n)) {
            let last = letters.len() - 1;
            letters[last] = letters[self.rng.below(last as u64) as usize];
        }
        Word::new(letters)
    }

    fn endo_run(&mut self, desc: &TypeDesc, max: usize) -> Vec<u64> {
        let n = self.rng.range_usize(0, max.min(self.budget()));
        (0..n).map(|_| self.add_endo(desc)).collect()
    }

    fn branch(&mut self) -> BranchProgram {
        let stringy = self.rng.chance(1, 3) && self.cfg.max_edges >= 4;
        self.reserved = if stringy { 4 } else { 2 };
        let mut producer = self.endo_run(&TypeDesc::Int, 1);
        self.reserved -= 1;
        let splitter = if self.rng.chance(1, 2) { "branch_even" } else { "branch_threshold" };
        producer.push(self.add(splitter, Params::default()));
        let side = |b: &mut Self| {
            let mut w = b.endo_run(&TypeDesc::Int, 2);
            if stringy {
                b.reserved -= 1;
                w.push(b.add("int_to_str", Params::default()));
            }
            w
        };
        let left = side(self);
        let right = side(self);
        let d = if stringy { TypeDesc::Str } else { TypeDesc::Int };
        self.reserved -= 1;
        let mut consumer = vec![self.add("merge_sum", Params::default().with_type(d.clone()))];
        consumer.extend(self.endo_run(&d, 1));
        BranchProgram { producer: Word::new(producer), left: Word::new(left), right: Word::new(right), consumer: Word::new(consumer) }
    }

    /// Unused threads so the graph is more than the path.
    fn distractors(&mut self) {
        let n = self.rng.range_usize(0, self.budget().min(2));
        for _ in 0..n {
            let def = self.rng.pick(registry());
            let params = if def.is_polymorphic() { Params::default().with_type(TypeDesc::Int) } else { Params::default() };
            self.add(def.name, params);
        }
    }
}

/// Generates one program from `rng`. Roughly 20% repeated-letter words, 20%
/// branch programs, the rest distinct-letter chains.
pub fn gen_random_program(cfg: &FuzzConfig, rng: &mut Xorshift64Star) -> Program {
    let mut b = Builder { cfg, rng, threads: Vec::new(), reserved: 0 };
    let kind = b.rng.below(10);
    let (body, input_type) = if kind < 2 && cfg.max_word_len >= 2 {
        (BodySpec::Word(b.repeated()), TypeDesc::Int)
    } else if kind < 4 && cfg.max_edges >= 2 {
        (BodySpec::Branch(b.branch()), TypeDesc::Int)
    } else {
        let (w, t) = b.chain();
        (BodySpec::Word(w), t)
    };
    b.distractors();
    let input = b.list(&input_type);
    Program::new(b.threads, body, input, input_type).expect("generated program is valid")
}

/// The program for trial `trial` of a fuzz run.
pub fn trial_program(cfg: &FuzzConfig, trial: usize) -> Program {
    gen_random_program(cfg, &mut Xorshift64Star::for_trial(cfg.seed, trial as u64))
}
