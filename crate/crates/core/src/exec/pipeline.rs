//! Pipeline execution: one stage per letter, connected by bounded FIFOs.
//!
//! Each stage takes its private state slot out of the store and owns it until
//! end of stream, when it appends `(id, state)` to the end-of-stream message
//! and forwards it. The collector reassembles the store from that message.
//! Because every stage sees its inputs in list order and no two stages share a
//! slot, the result equals stage-wise evaluation.
//!
//! Words with repeated letters are cut into distinct-letter segments which run
//! one after another.

use std::sync::mpsc::{sync_channel, Receiver, SyncSender, TryRecvError, TrySendError};
use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::eval::check_inputs;
use crate::exec::{ExecConfig, Mutation};
use crate::model::{Multigraph, StateStore, ThreadId, ThreadSpec};
use crate::value::Value;
use crate::word::{segment_word, ValidatedWord};

enum Msg {
    Item(Value),
    End(Vec<(ThreadId, Value)>),
    Abort(Error),
}

impl Msg {
    fn is_terminal(&self) -> bool {
        !matches!(self, Msg::Item(_))
    }
}

struct Stage<'g> {
    spec: &'g ThreadSpec,
    state: Value,
    initial: Value,
    drop_update: bool,
    drop_final: bool,
}

impl<'g> Stage<'g> {
    fn new(spec: &'g ThreadSpec, state: Value, cfg: &ExecConfig) -> Self {
        Stage {
            spec,
            initial: state.clone(),
            state,
            drop_update: cfg.has(Mutation::DropStateUpdate),
            drop_final: cfg.has(Mutation::DropFinalState),
        }
    }

    fn process(&mut self, x: &Value) -> Result<Value> {
        let (y, next) = self.spec.apply(x, &self.state)?;
        if !self.drop_update {
            self.state = next;
        }
        Ok(y)
    }

    fn finish(self) -> (ThreadId, Value) {
        let state = if self.drop_final { self.initial } else { self.state };
        (self.spec.id, state)
    }

    fn handle(&mut self, msg: Msg) -> (Msg, bool) {
        match msg {
            Msg::Item(x) => match self.process(&x) {
                Ok(y) => (Msg::Item(y), false),
                Err(e) => (Msg::Abort(e), true),
            },
            Msg::End(states) => (Msg::End(states), true),
            Msg::Abort(e) => (Msg::Abort(e), true),
        }
    }
}

struct StageTask<'g> {
    stage: Option<Stage<'g>>,
    input: Option<Receiver<Msg>>,
    output: SyncSender<Msg>,
    pending: Option<Msg>,
    done: bool,
}

impl StageTask<'_> {
    fn seal(&mut self, msg: Msg) -> Msg {
        match msg {
            Msg::End(mut states) => {
                if let Some(stage) = self.stage.take() {
                    states.push(stage.finish());
                }
                Msg::End(states)
            }
            other => other,
        }
    }

    /// A worker that owns exactly one stage can block on its channels.
    fn run_blocking(mut self) {
        let input = self.input.take().expect("input present");
        loop {
            let msg = match input.recv() {
                Ok(m) => m,
                Err(_) => Msg::Abort(Error::ChannelClosed),
            };
            let (out, terminal) = self.stage.as_mut().expect("stage alive").handle(msg);
            let out = if terminal { self.seal(out) } else { out };
            if self.output.send(out).is_err() || terminal {
                return;
            }
        }
    }

    /// One non-blocking step. Returns true when anything moved.
    fn poll(&mut self) -> bool {
        let mut progressed = false;
        if let Some(msg) = self.pending.take() {
            let terminal = msg.is_terminal();
            match self.output.try_send(msg) {
                Ok(()) => {
                    progressed = true;
                    if terminal {
                        self.finish();
                        return true;
                    }
                }
                Err(TrySendError::Full(msg)) => {
                    self.pending = Some(msg);
                    return false;
                }
                Err(TrySendError::Disconnected(_)) => {
                    self.finish();
                    return true;
                }
            }
        }
        let received = match self.input.as_ref().expect("input present").try_recv() {
            Ok(m) => m,
            Err(TryRecvError::Empty) => return progressed,
            Err(TryRecvError::Disconnected) => Msg::Abort(Error::ChannelClosed),
        };
        let (out, terminal) = self.stage.as_mut().expect("stage alive").handle(received);
        self.pending = Some(if terminal { self.seal(out) } else { out });
        true
    }

    fn finish(&mut self) {
        self.done = true;
        self.input = None;
    }
}

/// Round-robin over several stages on one worker thread.
fn run_multiplexed(mut tasks: Vec<StageTask<'_>>) {
    let mut idle = 0u32;
    while tasks.iter().any(|t| !t.done) {
        let mut progressed = false;
        for t in tasks.iter_mut().filter(|t| !t.done) {
            progressed |= t.poll();
        }
        if progressed {
            idle = 0;
        } else {
            idle += 1;
            if idle < 64 {
                thread::yield_now();
            } else {
                thread::sleep(Duration::from_micros(50));
            }
        }
    }
}

/// Runs one distinct-letter segment; `letters` are in application order.
fn run_segment(
    graph: &Multigraph,
    letters: &[ThreadId],
    xs: Vec<Value>,
    store: &mut StateStore,
    cfg: &ExecConfig,
) -> Result<Vec<Value>> {
    if letters.is_empty() {
        return Ok(xs);
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(&dup) = letters.iter().find(|n| !seen.insert(**n)) {
        return Err(Error::RepeatedLetterInSegment(dup));
    }
    let mut order = letters.to_vec();
    if cfg.has(Mutation::SwapStageOrder) {
        order.reverse();
    }
    let mut stages = Vec::with_capacity(order.len());
    for &id in &order {
        let spec = graph.thread(id)?;
        stages.push(Stage::new(spec, store.take(id)?, cfg));
    }

    if stages.len() == 1 {
        let mut stage = stages.pop().expect("one stage");
        let ys = xs.iter().map(|x| stage.process(x)).collect::<Result<Vec<_>>>()?;
        let (id, state) = stage.finish();
        store.insert(id, state);
        return Ok(ys);
    }

    let k = stages.len();
    let workers = cfg.workers().min(k);
    let cap = cfg.channel_capacity.max(1);
    let (feed_tx, mut upstream) = sync_channel::<Msg>(cap);
    let mut buckets: Vec<Vec<StageTask<'_>>> = (0..workers).map(|_| Vec::new()).collect();
    for (i, stage) in stages.into_iter().enumerate() {
        let (tx, rx) = sync_channel::<Msg>(cap);
        let input = std::mem::replace(&mut upstream, rx);
        buckets[i % workers].push(StageTask { stage: Some(stage), input: Some(input), output: tx, pending: None, done: false });
    }
    let sink = upstream;

    let collected = thread::scope(|scope| {
        scope.spawn(move || {
            for x in xs {
                if feed_tx.send(Msg::Item(x)).is_err() {
                    return;
                }
            }
            let _ = feed_tx.send(Msg::End(Vec::new()));
        });
        for mut bucket in buckets {
            scope.spawn(move || {
                if bucket.len() == 1 {
                    bucket.pop().expect("one task").run_blocking();
                } else {
                    run_multiplexed(bucket);
                }
            });
        }
        let mut ys = Vec::new();
        loop {
            match sink.recv() {
                Ok(Msg::Item(y)) => ys.push(y),
                Ok(Msg::End(states)) => return Ok((ys, states)),
                Ok(Msg::Abort(e)) => return Err(e),
                Err(_) => return Err(Error::ChannelClosed),
            }
        }
    });
    let (ys, states) = collected?;
    if states.len() != k {
        return Err(Error::ChannelClosed);
    }
    for (id, state) in states {
        store.insert(id, state);
    }
    Ok(ys)
}

/// Runs `letters` (application order) as back-to-back pipeline segments.
pub(crate) fn run_letters(
    graph: &Multigraph,
    letters: &[ThreadId],
    xs: Vec<Value>,
    store: &mut StateStore,
    cfg: &ExecConfig,
) -> Result<Vec<Value>> {
    let segments = segment_word(&crate::word::Word::new(letters.iter().copied()));
    if cfg.has(Mutation::RemoveSegmentBarrier) && segments.segments.len() > 1 {
        let base = store.clone();
        let mut ys = xs;
        for seg in &segments.segments {
            let mut scratch = base.clone();
            ys = run_segment(graph, seg.letters(), ys, &mut scratch, cfg)?;
            for &id in seg.letters() {
                store.insert(id, scratch.take(id)?);
            }
        }
        return Ok(ys);
    }
    let mut ys = xs;
    for seg in &segments.segments {
        ys = run_segment(graph, seg.letters(), ys, store, cfg)?;
    }
    Ok(ys)
}

/// Pipeline-parallel evaluation of a validated word over a list.
pub fn run_pipeline(
    graph: &Multigraph,
    word: &ValidatedWord,
    xs: Vec<Value>,
    state: StateStore,
    cfg: &ExecConfig,
) -> Result<(Vec<Value>, StateStore)> {
    check_inputs(word.src(), &xs)?;
    let mut state = state;
    let ys = run_letters(graph, word.letters(), xs, &mut state, cfg)?;
    Ok((ys, state))
}
