//! Coproduct branching: `consumer ∘ [left, right] ∘ producer` lifted over a list.
//!
//! The producer emits a list of sums. `split` separates it into the `inl`
//! payloads, the `inr` payloads and a flag list remembering the original
//! order; the two sides run concurrently on disjoint state slots; `join`
//! puts the results back in order using the flags.

use std::collections::BTreeSet;
use std::fmt;
use std::thread;

use crate::error::{Error, Result};
use crate::eval::{check_inputs, eval_phi, eval_psi_ref};
use crate::exec::auto::auto_letters;
use crate::exec::pipeline::run_letters;
use crate::exec::{ExecConfig, Mutation};
use crate::model::{Multigraph, StateStore, ThreadId};
use crate::value::{PortType, TypeDesc, Value};
use crate::word::{validate_word, ValidatedWord, Word};

/// `true` for an element taken from the left list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FlagList(pub Vec<bool>);

impl FlagList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_left(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }
}

impl fmt::Display for FlagList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b { 'T' } else { 'F' }).collect();
        write!(f, "[{s}]")
    }
}

pub fn split(xs: Vec<Value>) -> Result<(Vec<Value>, Vec<Value>, FlagList)> {
    let mut bs = Vec::new();
    let mut cs = Vec::new();
    let mut flags = Vec::with_capacity(xs.len());
    for (i, x) in xs.into_iter().enumerate() {
        match x {
            Value::Inl(b) => {
                bs.push(*b);
                flags.push(true);
            }
            Value::Inr(c) => {
                cs.push(*c);
                flags.push(false);
            }
            other => return Err(Error::type_mismatch(format!("split element {i}"), "sum", other)),
        }
    }
    Ok((bs, cs, FlagList(flags)))
}

pub fn join(bs: Vec<Value>, cs: Vec<Value>, flags: &FlagList) -> Result<Vec<Value>> {
    let (nb, nc) = (bs.len(), cs.len());
    let mut bs = bs.into_iter();
    let mut cs = cs.into_iter();
    let mut out = Vec::with_capacity(flags.len());
    for (i, &left) in flags.0.iter().enumerate() {
        let next = if left { bs.next().map(Value::inl) } else { cs.next().map(Value::inr) };
        match next {
            Some(v) => out.push(v),
            None => {
                let side = if left { "left" } else { "right" };
                return Err(Error::FlagMismatch(format!("flag {i} asks for a {side} element but the {side} list is exhausted")));
            }
        }
    }
    if bs.next().is_some() || cs.next().is_some() {
        return Err(Error::FlagMismatch(format!(
            "{} flags cannot place {nb} left and {nc} right elements",
            flags.len()
        )));
    }
    Ok(out)
}

/// The four words of a branch program, each in application order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchProgram {
    pub producer: Word,
    pub left: Word,
    pub right: Word,
    pub consumer: Word,
}

impl BranchProgram {
    pub fn letter_set(&self) -> BTreeSet<ThreadId> {
        [&self.producer, &self.left, &self.right, &self.consumer].iter().flat_map(|w| w.letters().iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedBranch {
    pub producer: ValidatedWord,
    pub left: ValidatedWord,
    pub right: ValidatedWord,
    pub consumer: ValidatedWord,
}

impl ValidatedBranch {
    pub fn src(&self) -> &PortType {
        self.producer.src()
    }

    pub fn tgt(&self) -> &PortType {
        self.consumer.tgt()
    }

    pub fn program(&self) -> BranchProgram {
        BranchProgram {
            producer: self.producer.word().clone(),
            left: self.left.word().clone(),
            right: self.right.word().clone(),
            consumer: self.consumer.word().clone(),
        }
    }

    fn words(&self) -> [&ValidatedWord; 4] {
        [&self.producer, &self.left, &self.right, &self.consumer]
    }
}

fn sum_parts(port: &PortType, what: &str) -> Result<(TypeDesc, TypeDesc)> {
    match &port.desc {
        TypeDesc::Sum(b, c) => Ok(((**b).clone(), (**c).clone())),
        other => Err(Error::BranchShape(format!("{what} must be a sum type, found `{other}`"))),
    }
}

fn validate_part(graph: &Multigraph, word: &Word, inferred: TypeDesc) -> Result<ValidatedWord> {
    if word.is_empty() && word.anchor().is_none() {
        validate_word(graph, &word.clone().with_anchor(PortType::anonymous(inferred)))
    } else {
        validate_word(graph, word)
    }
}

fn expect_desc(port: &PortType, want: &TypeDesc, what: &str) -> Result<()> {
    if &port.desc == want {
        Ok(())
    } else {
        Err(Error::BranchShape(format!("{what} is `{}` but `{want}` is required", port.desc)))
    }
}

/// Validates the four words and their junctions. Empty words without an
/// anchor take the type at their junction; an empty producer takes `input`.
pub fn validate_branch(graph: &Multigraph, prog: &BranchProgram, input: &TypeDesc) -> Result<ValidatedBranch> {
    let mut seen = BTreeSet::new();
    for w in [&prog.producer, &prog.left, &prog.right, &prog.consumer] {
        for n in w.letter_set() {
            if !seen.insert(n) {
                return Err(Error::OverlappingBranchLetters(n));
            }
        }
    }
    let producer = validate_part(graph, &prog.producer, input.clone())?;
    expect_desc(producer.src(), input, "producer source")?;
    let (b, c) = sum_parts(producer.tgt(), "producer target")?;
    let left = validate_part(graph, &prog.left, b.clone())?;
    expect_desc(left.src(), &b, "left source")?;
    let right = validate_part(graph, &prog.right, c.clone())?;
    expect_desc(right.src(), &c, "right source")?;
    let joined = TypeDesc::sum(left.tgt().desc.clone(), right.tgt().desc.clone());
    let consumer = validate_part(graph, &prog.consumer, joined.clone())?;
    expect_desc(consumer.src(), &joined, "consumer source")?;
    Ok(ValidatedBranch { producer, left, right, consumer })
}

/// Sequential reference: each stage consumes its whole list before the next.
pub fn eval_branch_ref(graph: &Multigraph, vb: &ValidatedBranch, xs: Vec<Value>, state: StateStore) -> Result<(Vec<Value>, StateStore)> {
    let (ys, state) = eval_psi_ref(graph, &vb.producer, xs, state)?;
    let (bs, cs, flags) = split(ys)?;
    let (bs, state) = eval_psi_ref(graph, &vb.left, bs, state)?;
    let (cs, state) = eval_psi_ref(graph, &vb.right, cs, state)?;
    let ds = join(bs, cs, &flags)?;
    eval_psi_ref(graph, &vb.consumer, ds, state)
}

/// Element-at-a-time oracle: every element goes through producer, the side
/// its tag selects, and consumer before the next element starts.
pub fn eval_branch_interleaved(
    graph: &Multigraph,
    vb: &ValidatedBranch,
    xs: Vec<Value>,
    state: StateStore,
) -> Result<(Vec<Value>, StateStore)> {
    for w in vb.words() {
        let mut seen = BTreeSet::new();
        if let Some(&n) = w.letters().iter().find(|n| !seen.insert(**n)) {
            return Err(Error::RepeatedLetter(n));
        }
    }
    check_inputs(vb.src(), &xs)?;
    let mut state = state;
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        let (y, s) = eval_phi(graph, &vb.producer, x, state)?;
        let (d, s) = match y {
            Value::Inl(b) => {
                let (b, s) = eval_phi(graph, &vb.left, *b, s)?;
                (Value::inl(b), s)
            }
            Value::Inr(c) => {
                let (c, s) = eval_phi(graph, &vb.right, *c, s)?;
                (Value::inr(c), s)
            }
            other => return Err(Error::type_mismatch("producer output", &vb.producer.tgt().desc, other)),
        };
        let (z, s) = eval_phi(graph, &vb.consumer, d, s)?;
        out.push(z);
        state = s;
    }
    Ok((out, state))
}

/// How each of the four sub-words is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubwordStrategy {
    Pipeline,
    /// Fast paths where the classification allows, pipelines elsewhere.
    Auto,
}

fn run_sub(
    graph: &Multigraph,
    letters: &[ThreadId],
    xs: Vec<Value>,
    store: &mut StateStore,
    cfg: &ExecConfig,
    strategy: SubwordStrategy,
) -> Result<Vec<Value>> {
    match strategy {
        SubwordStrategy::Pipeline => run_letters(graph, letters, xs, store, cfg),
        SubwordStrategy::Auto => auto_letters(graph, letters, xs, store, cfg),
    }
}

/// Task-parallel evaluation. The two sides get disjoint parts of the store
/// and run on separate threads when more than one worker is available.
pub fn run_task_parallel_branch(
    graph: &Multigraph,
    vb: &ValidatedBranch,
    xs: Vec<Value>,
    state: StateStore,
    cfg: &ExecConfig,
    strategy: SubwordStrategy,
) -> Result<(Vec<Value>, StateStore)> {
    check_inputs(vb.src(), &xs)?;
    let mut store = state;
    let ys = run_sub(graph, vb.producer.letters(), xs, &mut store, cfg, strategy)?;
    let (bs, cs, flags) = split(ys)?;

    let mut left_store = store.split_off(&vb.left.word().letter_set())?;
    let mut right_store = store.split_off(&vb.right.word().letter_set())?;
    let (bs, cs) = if cfg.workers() > 1 {
        let half = ExecConfig { workers: cfg.workers().div_ceil(2), ..cfg.clone() };
        let half = &half;
        thread::scope(|scope| {
            let l = scope.spawn(|| run_sub(graph, vb.left.letters(), bs, &mut left_store, half, strategy));
            let r = run_sub(graph, vb.right.letters(), cs, &mut right_store, half, strategy);
            (l.join().unwrap_or(Err(Error::WorkerPanicked)), r)
        })
    } else {
        let l = run_sub(graph, vb.left.letters(), bs, &mut left_store, cfg, strategy);
        let r = run_sub(graph, vb.right.letters(), cs, &mut right_store, cfg, strategy);
        (l, r)
    };
    let (bs, cs) = (bs?, cs?);
    store.absorb(left_store);
    store.absorb(right_store);

    let flags = if cfg.has(Mutation::IgnoreJoinFlags) {
        FlagList(std::iter::repeat_n(true, bs.len()).chain(std::iter::repeat_n(false, cs.len())).collect())
    } else {
        flags
    };
    let ds = join(bs, cs, &flags)?;
    let zs = run_sub(graph, vb.consumer.letters(), ds, &mut store, cfg, strategy)?;
    Ok((zs, store))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::Params;
    use crate::fuzz::Xorshift64Star;
    use crate::model::{init_state, register_thread, ThreadSpec};

    fn ints(xs: &[i64]) -> Vec<Value> {
        Value::ints(xs.iter().copied())
    }

    #[test]
    fn split_examples() {
        assert_eq!(split(vec![]).unwrap(), (vec![], vec![], FlagList(vec![])));
        let xs = vec![Value::inl(Value::Int(1)), Value::inr(Value::Int(9)), Value::inl(Value::Int(2))];
        assert_eq!(split(xs).unwrap(), (ints(&[1, 2]), ints(&[9]), FlagList(vec![true, false, true])));
        let xs = vec![Value::inr(Value::Int(4)), Value::inr(Value::Int(5))];
        assert_eq!(split(xs).unwrap(), (vec![], ints(&[4, 5]), FlagList(vec![false, false])));
        assert!(matches!(split(ints(&[1])), Err(Error::Type { .. })));
    }

    #[test]
    fn join_examples() {
        assert_eq!(join(vec![], vec![], &FlagList(vec![])).unwrap(), vec![]);
        assert_eq!(
            join(ints(&[1, 2]), ints(&[9]), &FlagList(vec![true, false, true])).unwrap(),
            vec![Value::inl(Value::Int(1)), Value::inr(Value::Int(9)), Value::inl(Value::Int(2))]
        );
        assert!(matches!(join(ints(&[1]), vec![], &FlagList(vec![false])), Err(Error::FlagMismatch(_))));
        assert!(matches!(join(ints(&[1, 2]), vec![], &FlagList(vec![true])), Err(Error::FlagMismatch(_))));
    }

    #[test]
    fn round_trips_on_random_lists() {
        let mut rng = Xorshift64Star::new(5);
        for _ in 0..200 {
            let n = rng.below(101) as usize;
            let xs: Vec<Value> = (0..n)
                .map(|_| {
                    let v = Value::Int(rng.range_i64(-50, 50));
                    if rng.below(2) == 0 { Value::inl(v) } else { Value::inr(v) }
                })
                .collect();
            let (bs, cs, flags) = split(xs.clone()).unwrap();
            assert_eq!(flags.count_left(), bs.len());
            assert_eq!(join(bs, cs, &flags).unwrap(), xs);
        }
    }

    pub(crate) fn if_graph() -> (Multigraph, ValidatedBranch) {
        let threads = [
            ThreadSpec::new(1, "branch_even", Params::default(), Value::Unit).unwrap(),
            ThreadSpec::new(2, "add1_tick", Params::default(), Value::Int(0)).unwrap(),
            ThreadSpec::new(3, "scale_by_state", Params::default(), Value::Int(3)).unwrap(),
            ThreadSpec::new(4, "merge_sum", Params::default(), Value::Unit).unwrap(),
        ];
        let g = threads.into_iter().fold(Multigraph::new(), |g, t| register_thread(t, g).unwrap());
        let prog = BranchProgram { producer: Word::new([1u64]), left: Word::new([2u64]), right: Word::new([3u64]), consumer: Word::new([4u64]) };
        let vb = validate_branch(&g, &prog, &TypeDesc::Int).unwrap();
        (g, vb)
    }

    #[test]
    fn if_expression_example() {
        let (g, vb) = if_graph();
        let (ys, s) = eval_branch_ref(&g, &vb, ints(&[2, 3, 4]), init_state(&g)).unwrap();
        assert_eq!(ys, ints(&[3, 9, 5]));
        assert_eq!(s.get(ThreadId(2)), Some(&Value::Int(2)));
        assert_eq!(s.get(ThreadId(3)), Some(&Value::Int(3)));
        assert_eq!(eval_branch_interleaved(&g, &vb, ints(&[2, 3, 4]), init_state(&g)).unwrap(), (ys.clone(), s.clone()));
        for workers in [1, 2, 4] {
            for strategy in [SubwordStrategy::Pipeline, SubwordStrategy::Auto] {
                let got = run_task_parallel_branch(&g, &vb, ints(&[2, 3, 4]), init_state(&g), &ExecConfig::with_workers(workers), strategy).unwrap();
                assert_eq!(got, (ys.clone(), s.clone()));
            }
        }
        let empty = run_task_parallel_branch(&g, &vb, vec![], init_state(&g), &ExecConfig::with_workers(2), SubwordStrategy::Pipeline).unwrap();
        assert_eq!(empty, (vec![], init_state(&g)));
    }

    #[test]
    fn ignoring_flags_changes_the_order() {
        let (g, vb) = if_graph();
        let cfg = ExecConfig::with_workers(2).mutated(Some(Mutation::IgnoreJoinFlags));
        let (ys, _) = run_task_parallel_branch(&g, &vb, ints(&[2, 3, 4]), init_state(&g), &cfg, SubwordStrategy::Pipeline).unwrap();
        assert_eq!(ys, ints(&[3, 5, 9]));
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let (g, _) = if_graph();
        let shared = BranchProgram { producer: Word::new([1u64]), left: Word::new([2u64]), right: Word::new([2u64]), consumer: Word::new([4u64]) };
        assert_eq!(validate_branch(&g, &shared, &TypeDesc::Int), Err(Error::OverlappingBranchLetters(ThreadId(2))));
        let not_sum = BranchProgram { producer: Word::new([2u64]), left: Word::new([3u64]), right: Word::new(Vec::<u64>::new()), consumer: Word::new([4u64]) };
        assert!(matches!(validate_branch(&g, &not_sum, &TypeDesc::Int), Err(Error::BranchShape(_))));
    }

    #[test]
    fn empty_sides_are_inferred() {
        let (g, _) = if_graph();
        let prog = BranchProgram { producer: Word::new([1u64]), left: Word::new(Vec::<u64>::new()), right: Word::new([3u64]), consumer: Word::new([4u64]) };
        let vb = validate_branch(&g, &prog, &TypeDesc::Int).unwrap();
        let (ys, _) = eval_branch_ref(&g, &vb, ints(&[2, 3]), init_state(&g)).unwrap();
        assert_eq!(ys, ints(&[2, 9]));
    }

    #[test]
    fn sides_touch_only_their_own_slots() {
        let (g, vb) = if_graph();
        let (_, s) = run_task_parallel_branch(&g, &vb, ints(&[2, 4]), init_state(&g), &ExecConfig::with_workers(2), SubwordStrategy::Pipeline).unwrap();
        // only evens: the right side never ran
        assert_eq!(s.get(ThreadId(3)), Some(&Value::Int(3)));
        assert_eq!(s.get(ThreadId(2)), Some(&Value::Int(2)));
    }
}
