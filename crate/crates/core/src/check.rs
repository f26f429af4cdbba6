//! Equivalence checks: every executor against the stage-wise reference, plus
//! the algebraic laws the executors rely on.

use std::fmt;

use crate::error::Result;
use crate::eval::{eval_psi_ref, psi_letter};
use crate::exec::{
    classify_thread, join, run_data_parallel_product, run_data_parallel_readonly, spot_check_hint, split, ExecConfig,
    FlagList, Mutation, StageClassification,
};
use crate::fuzz::{trial_program, FuzzConfig, Xorshift64Star};
use crate::model::{init_state, StateStore, ThreadId};
use crate::program::{run_program, Body, Mode, Program, RunOutput};
use crate::value::{PortType, Value};
use crate::word::{smap_check, validate_word, SmapCheck, Word};

pub const WORKER_COUNTS: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOptions {
    pub workers: Vec<usize>,
    pub mutation: Option<Mutation>,
    /// Random `(x, σ)` pairs per thread when validating classification hints.
    pub hint_samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { workers: WORKER_COUNTS.to_vec(), mutation: None, hint_samples: 20 }
    }
}

/// Where two results first disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub check: String,
    /// Output position, when the outputs differ.
    pub index: Option<usize>,
    /// State slot, when the outputs agree but the final states differ.
    pub slot: Option<ThreadId>,
    pub expected: String,
    pub got: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.check)?;
        match (self.index, self.slot) {
            (Some(i), _) => write!(f, "output[{i}] ")?,
            (None, Some(s)) => write!(f, "final_state[{s}] ")?,
            _ => {}
        }
        write!(f, "expected {} got {}", self.expected, self.got)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialReport {
    pub trial: Option<usize>,
    pub digest: String,
    /// Names of the checks that ran, in order.
    pub modes: Vec<String>,
    pub equal: bool,
    pub divergence: Option<Divergence>,
    /// Replayable serialization; present exactly when `equal` is false.
    pub program: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EquivReport {
    pub trials: Vec<TrialReport>,
}

impl EquivReport {
    pub fn passed(&self) -> usize {
        self.trials.iter().filter(|t| t.equal).count()
    }

    pub fn all_equal(&self) -> bool {
        self.trials.iter().all(|t| t.equal)
    }

    pub fn first_failure(&self) -> Option<&TrialReport> {
        self.trials.iter().find(|t| !t.equal)
    }
}

fn describe(r: &Result<RunOutput>) -> String {
    match r {
        Ok(out) => format!("output of length {}", out.output.len()),
        Err(e) => format!("error `{e}`"),
    }
}

fn first_list_difference(want: &[Value], got: &[Value]) -> Option<(usize, String, String)> {
    let n = want.len().max(got.len());
    (0..n).find_map(|i| match (want.get(i), got.get(i)) {
        (Some(a), Some(b)) if a == b => None,
        (a, b) => Some((
            i,
            a.map_or("<missing>".into(), ToString::to_string),
            b.map_or("<missing>".into(), ToString::to_string),
        )),
    })
}

fn first_state_difference(want: &StateStore, got: &StateStore) -> Option<(ThreadId, String, String)> {
    let mut ids = want.domain();
    ids.extend(got.domain());
    ids.into_iter().find_map(|id| match (want.get(id), got.get(id)) {
        (Some(a), Some(b)) if a == b => None,
        (a, b) => Some((
            id,
            a.map_or("<missing>".into(), ToString::to_string),
            b.map_or("<missing>".into(), ToString::to_string),
        )),
    })
}

fn compare(check: &str, want: &Result<RunOutput>, got: &Result<RunOutput>) -> Option<Divergence> {
    let div = |index, slot, expected, got| Some(Divergence { check: check.to_string(), index, slot, expected, got });
    match (want, got) {
        (Ok(w), Ok(g)) => {
            if let Some((i, a, b)) = first_list_difference(&w.output, &g.output) {
                return div(Some(i), None, a, b);
            }
            if let Some((s, a, b)) = first_state_difference(&w.final_state, &g.final_state) {
                return div(None, Some(s), a, b);
            }
            None
        }
        (Err(a), Err(b)) if a == b => None,
        _ => div(None, None, describe(want), describe(got)),
    }
}

fn compare_lists(check: &str, want: &[Value], got: &[Value]) -> Option<Divergence> {
    first_list_difference(want, got).map(|(i, a, b)| Divergence { check: check.into(), index: Some(i), slot: None, expected: a, got: b })
}

fn failure(check: &str, expected: String, got: String) -> Divergence {
    Divergence { check: check.into(), index: None, slot: None, expected, got }
}

struct Trial<'a> {
    program: &'a Program,
    opts: &'a CheckOptions,
    rng: Xorshift64Star,
    modes: Vec<String>,
}

impl Trial<'_> {
    fn cfg(&self, workers: usize) -> ExecConfig {
        ExecConfig::with_workers(workers).mutated(self.opts.mutation)
    }

    fn run(&mut self, name: String, mode: Mode, workers: usize) -> Result<RunOutput> {
        self.modes.push(name);
        run_program(self.program, mode, &self.cfg(workers))
    }

    fn executors(&mut self) -> Option<Divergence> {
        let reference = self.run("seq".into(), Mode::Seq, 1);
        if interleavable(&self.program.body) {
            let got = self.run("interleaved".into(), Mode::Interleaved, 1);
            if let Some(d) = compare("interleaved", &reference, &got) {
                return Some(d);
            }
        }
        let workers = self.opts.workers.clone();
        for &w in &workers {
            let name = format!("pipeline/w{w}");
            let got = self.run(name.clone(), Mode::Pipeline, w);
            if let Some(d) = compare(&name, &reference, &got) {
                return Some(d);
            }
            let again = self.run(format!("{name}/repeat"), Mode::Pipeline, w);
            if let Some(d) = compare(&format!("{name}/repeat"), &got, &again) {
                return Some(d);
            }
        }
        for &w in &workers {
            let name = format!("auto/w{w}");
            let got = self.run(name.clone(), Mode::Auto, w);
            if let Some(d) = compare(&name, &reference, &got) {
                return Some(d);
            }
        }
        None
    }

    /// `Ψ(w2 · w1) = Ψ(w2) ∘ Ψ(w1)` at a random cut.
    fn functor_law(&mut self) -> Option<Divergence> {
        let Body::Word(w) = &self.program.body else { return None };
        self.modes.push("functor-law".into());
        let g = &self.program.graph;
        let at = self.rng.range_usize(0, w.letters().len());
        let (first, second) = w.word().split_at(at);
        let mid = match at.checked_sub(1) {
            Some(i) => g.thread(w.letters()[i]).map(|t| t.tgt.clone()),
            None => Ok(w.src().clone()),
        };
        let result = (|| -> Result<(RunOutput, RunOutput)> {
            let mid: PortType = mid?;
            let v1 = validate_word(g, &anchored(first, w.src().clone()))?;
            let v2 = validate_word(g, &anchored(second, mid))?;
            let (whole_ys, whole_s) = eval_psi_ref(g, w, self.program.input.clone(), init_state(g))?;
            let (ys, s) = eval_psi_ref(g, &v1, self.program.input.clone(), init_state(g))?;
            let (ys, s) = eval_psi_ref(g, &v2, ys, s)?;
            Ok((RunOutput { output: whole_ys, final_state: whole_s }, RunOutput { output: ys, final_state: s }))
        })();
        match result {
            Ok((whole, composed)) => compare(&format!("functor-law@{at}"), &Ok(whole), &Ok(composed)),
            Err(e) => Some(failure("functor-law", "composable halves".into(), e.to_string())),
        }
    }

    /// Round trips on the producer output of a branch program and on a random sum list.
    fn split_join(&mut self) -> Option<Divergence> {
        self.modes.push("split-join".into());
        let mut lists = Vec::new();
        if let Body::Branch(b) = &self.program.body {
            match eval_psi_ref(&self.program.graph, &b.producer, self.program.input.clone(), init_state(&self.program.graph)) {
                Ok((ys, _)) => lists.push(ys),
                Err(e) => return Some(failure("split-join", "producer output".into(), e.to_string())),
            }
        }
        let n = self.rng.range_usize(0, 100);
        lists.push(
            (0..n)
                .map(|_| {
                    let v = Value::Int(self.rng.range_i64(-100, 100));
                    if self.rng.chance(1, 2) { Value::inl(v) } else { Value::inr(v) }
                })
                .collect(),
        );
        for xs in lists {
            let (bs, cs, flags) = match split(xs.clone()) {
                Ok(t) => t,
                Err(e) => return Some(failure("split", "a sum list".into(), e.to_string())),
            };
            match join(bs.clone(), cs.clone(), &flags) {
                Ok(back) => {
                    if let Some(d) = compare_lists("join(split(xs))", &xs, &back) {
                        return Some(d);
                    }
                    match split(back) {
                        Ok(t) if t == (bs.clone(), cs.clone(), flags.clone()) => {}
                        Ok((_, _, f)) => return Some(failure("split(join(..))", flags.to_string(), f.to_string())),
                        Err(e) => return Some(failure("split(join(..))", flags.to_string(), e.to_string())),
                    }
                }
                Err(e) => return Some(failure("join(split(xs))", "a list".into(), e.to_string())),
            }
            let mut extra = flags.0.clone();
            extra.push(true);
            if join(bs, cs, &FlagList(extra)).is_ok() {
                return Some(failure("join-mismatch", "FlagMismatch".into(), "a list".into()));
            }
        }
        None
    }

    /// Each read-only or product letter, on the list it actually sees,
    /// against one step of the reference.
    fn fast_paths(&mut self) -> Option<Divergence> {
        let Body::Word(w) = &self.program.body else { return None };
        self.modes.push("fast-paths".into());
        let g = &self.program.graph;
        let cfg = self.cfg(4);
        let mut state = init_state(g);
        let mut xs = self.program.input.clone();
        for &n in w.letters() {
            let spec = match g.thread(n) {
                Ok(s) => s,
                Err(e) => return Some(failure("fast-paths", "thread".into(), e.to_string())),
            };
            let sigma = state.get(n).cloned().unwrap_or(Value::Unit);
            let fast = match classify_thread(spec) {
                StageClassification::General => None,
                StageClassification::ReadOnly => Some(run_data_parallel_readonly(spec, xs.clone(), sigma, &cfg)),
                StageClassification::Product(_) => Some(run_data_parallel_product(spec, xs.clone(), sigma, &cfg)),
            };
            let ys = match psi_letter(g, n, &xs, &mut state) {
                Ok(ys) => ys,
                Err(e) => return Some(failure("fast-paths", "reference step".into(), e.to_string())),
            };
            if let Some(fast) = fast {
                let check = format!("fast-path/{n}");
                let want = Ok(RunOutput { output: ys.clone(), final_state: [(n, state.get(n).cloned().unwrap_or(Value::Unit))].into_iter().collect() });
                let got = fast.map(|(out, s)| RunOutput { output: out, final_state: [(n, s)].into_iter().collect() });
                if let Some(d) = compare(&check, &want, &got) {
                    return Some(d);
                }
            }
            xs = ys;
        }
        None
    }

    fn hints(&mut self) -> Option<Divergence> {
        self.modes.push("hints".into());
        for t in self.program.graph.edges() {
            if let Err(msg) = spot_check_hint(t, &mut self.rng, self.opts.hint_samples, 1000) {
                return Some(failure("hints", format!("{} hint", t.hint()), msg));
            }
        }
        None
    }
}

fn anchored(w: Word, at: PortType) -> Word {
    if w.is_empty() {
        w.with_anchor(at)
    } else {
        w
    }
}

fn interleavable(body: &Body) -> bool {
    match body {
        Body::Word(w) => smap_check(w.word()) == SmapCheck::Ok,
        Body::Branch(b) => {
            [&b.producer, &b.left, &b.right, &b.consumer].iter().all(|w| smap_check(w.word()) == SmapCheck::Ok)
        }
    }
}

/// Seed for the checker's own random choices, derived from the program so a
/// dumped program replays identically.
fn check_seed(p: &Program) -> u64 {
    u64::from_str_radix(&p.digest(), 16).unwrap_or(0)
}

/// Runs the whole suite on one program and stops at the first divergence.
pub fn check_program(p: &Program, opts: &CheckOptions) -> TrialReport {
    let mut t = Trial { program: p, opts, rng: Xorshift64Star::new(check_seed(p)), modes: Vec::new() };
    let divergence = t
        .executors()
        .or_else(|| t.functor_law())
        .or_else(|| t.split_join())
        .or_else(|| t.fast_paths())
        .or_else(|| t.hints());
    let equal = divergence.is_none();
    TrialReport {
        trial: None,
        digest: p.digest(),
        modes: t.modes,
        equal,
        divergence,
        program: (!equal).then(|| p.serialize()),
    }
}

/// Checks `cfg.trials` generated programs.
pub fn check_fuzz(cfg: &FuzzConfig, opts: &CheckOptions) -> EquivReport {
    let trials = (0..cfg.trials)
        .map(|i| {
            let p = trial_program(cfg, i);
            TrialReport { trial: Some(i), ..check_program(&p, opts) }
        })
        .collect();
    EquivReport { trials }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;

    const COUNTER: &str = r#"{"threads":[{"id":1,"fn":"counter_add","init_state":0},{"id":2,"fn":"scale_by_state","init_state":3}],"word":[1,2,1],"input":[10,20,30]}"#;

    #[test]
    fn clean_program_passes() {
        let p = parse_program(COUNTER).unwrap();
        let r = check_program(&p, &CheckOptions::default());
        assert!(r.equal, "{:?}", r.divergence);
        assert!(r.program.is_none());
        assert!(r.modes.contains(&"pipeline/w8".to_string()));
        assert!(!r.modes.contains(&"interleaved".to_string()));
    }

    #[test]
    fn mutation_is_reported_with_a_replayable_program() {
        let p = parse_program(COUNTER).unwrap();
        let opts = CheckOptions { mutation: Some(Mutation::DropStateUpdate), ..CheckOptions::default() };
        let r = check_program(&p, &opts);
        assert!(!r.equal);
        let d = r.divergence.clone().unwrap();
        assert!(d.index.is_some() || d.slot.is_some(), "{d}");
        let replay = parse_program(r.program.as_deref().unwrap()).unwrap();
        assert_eq!(check_program(&replay, &opts), r);
    }

    #[test]
    fn small_fuzz_run_is_clean() {
        let cfg = FuzzConfig { seed: 3, trials: 40, ..FuzzConfig::default() };
        let report = check_fuzz(&cfg, &CheckOptions::default());
        assert!(report.all_equal(), "{:?}", report.first_failure());
        assert_eq!(report.passed(), 40);
    }
}
