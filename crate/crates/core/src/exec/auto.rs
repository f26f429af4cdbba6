//! Mixed strategy: letters classified read-only or product take their
//! data-parallel fast path, maximal runs of general letters are pipelined.
//! Cutting a word into consecutive pieces is safe by the functor law.

use crate::error::Result;
use crate::eval::check_inputs;
use crate::exec::data_parallel::{run_data_parallel_product, run_data_parallel_readonly};
use crate::exec::pipeline::run_letters;
use crate::exec::{classify_thread, ExecConfig, StageClassification};
use crate::model::{Multigraph, StateStore, ThreadId};
use crate::value::Value;
use crate::word::ValidatedWord;

pub(crate) fn auto_letters(
    graph: &Multigraph,
    letters: &[ThreadId],
    xs: Vec<Value>,
    store: &mut StateStore,
    cfg: &ExecConfig,
) -> Result<Vec<Value>> {
    let mut ys = xs;
    let mut general: Vec<ThreadId> = Vec::new();
    for &n in letters {
        let spec = graph.thread(n)?;
        let class = classify_thread(spec);
        if matches!(class, StageClassification::General) {
            general.push(n);
            continue;
        }
        if !general.is_empty() {
            ys = run_letters(graph, &general, ys, store, cfg)?;
            general.clear();
        }
        let sigma = store.take(n)?;
        let (out, next) = match class {
            StageClassification::ReadOnly => run_data_parallel_readonly(spec, ys, sigma, cfg)?,
            _ => run_data_parallel_product(spec, ys, sigma, cfg)?,
        };
        store.insert(n, next);
        ys = out;
    }
    if !general.is_empty() {
        ys = run_letters(graph, &general, ys, store, cfg)?;
    }
    Ok(ys)
}

pub fn run_auto(
    graph: &Multigraph,
    word: &ValidatedWord,
    xs: Vec<Value>,
    state: StateStore,
    cfg: &ExecConfig,
) -> Result<(Vec<Value>, StateStore)> {
    check_inputs(word.src(), &xs)?;
    let mut state = state;
    let ys = auto_letters(graph, word.letters(), xs, &mut state, cfg)?;
    Ok((ys, state))
}
