//! Sequential semantics of words.
//!
//! * [`eval_phi`] runs a word on a single element.
//! * [`eval_psi_ref`] lifts a word over a list stage by stage: the first
//!   letter consumes the whole list before the second one starts. This is the
//!   reference every parallel executor is compared against.
//! * [`eval_interleaved`] pushes each element through the whole word before
//!   touching the next. It agrees with the reference only when no letter
//!   repeats, and is used as an independent oracle for that fact.

use crate::error::{Error, Result};
use crate::model::{Multigraph, StateStore, ThreadId};
use crate::value::{PortType, Value};
use crate::word::{smap_check, SmapCheck, ValidatedWord};

/// Applies thread `id` to `x`, touching only slot `id` of the store.
pub(crate) fn apply_extended(graph: &Multigraph, id: ThreadId, x: &Value, state: &mut StateStore) -> Result<Value> {
    let thread = graph.thread(id)?;
    let slot = state.get(id).ok_or(Error::UnknownThreadId(id))?;
    let (y, next) = thread.apply(x, slot)?;
    state.insert(id, next);
    Ok(y)
}

pub(crate) fn check_input(port: &PortType, x: &Value) -> Result<()> {
    if x.conforms(&port.desc) {
        Ok(())
    } else {
        Err(Error::type_mismatch(format!("input at `{port}`"), &port.desc, x))
    }
}

pub(crate) fn check_inputs(port: &PortType, xs: &[Value]) -> Result<()> {
    xs.iter().try_for_each(|x| check_input(port, x))
}

/// Slots outside the word's letters must come out untouched, and the domain
/// must not change.
#[cfg(debug_assertions)]
pub(crate) fn debug_check_frame(letters: &[ThreadId], before: &StateStore, after: &StateStore) {
    assert_eq!(before.domain(), after.domain(), "state store domain changed");
    for (id, v) in before.iter() {
        if !letters.contains(&id) {
            assert_eq!(Some(v), after.get(id), "slot {id} outside the word was modified");
        }
    }
}

/// Single-element semantics: apply `n_1`, then `n_2`, ... The empty word is
/// the identity.
pub fn eval_phi(graph: &Multigraph, word: &ValidatedWord, x: Value, mut state: StateStore) -> Result<(Value, StateStore)> {
    check_input(word.src(), &x)?;
    #[cfg(debug_assertions)]
    let before = state.clone();
    let mut y = x;
    for &n in word.letters() {
        y = apply_extended(graph, n, &y, &mut state)?;
    }
    #[cfg(debug_assertions)]
    #[cfg(debug_assertions)]
    debug_check_frame(word.letters(), &before, &state);
    Ok((y, state))
}

/// Maps one thread over a whole list, threading its private state.
pub(crate) fn psi_letter(graph: &Multigraph, id: ThreadId, xs: &[Value], state: &mut StateStore) -> Result<Vec<Value>> {
    xs.iter().map(|x| apply_extended(graph, id, x, state)).collect()
}

/// Stage-wise list semantics; the canonical reference result.
pub fn eval_psi_ref(
    graph: &Multigraph,
    word: &ValidatedWord,
    xs: Vec<Value>,
    mut state: StateStore,
) -> Result<(Vec<Value>, StateStore)> {
    check_inputs(word.src(), &xs)?;
    #[cfg(debug_assertions)]
    let before = state.clone();
    let mut ys = xs;
    for &n in word.letters() {
        ys = psi_letter(graph, n, &ys, &mut state)?;
    }
    #[cfg(debug_assertions)]
    #[cfg(debug_assertions)]
    debug_check_frame(word.letters(), &before, &state);
    Ok((ys, state))
}

/// Element-at-a-time evaluation: `Φ(w)` on the head, then recurse on the tail
/// with the updated state. Rejects words with a repeated letter.
pub fn eval_interleaved(
    graph: &Multigraph,
    word: &ValidatedWord,
    xs: Vec<Value>,
    state: StateStore,
) -> Result<(Vec<Value>, StateStore)> {
    if let SmapCheck::RepeatedLetters(repeated) = smap_check(word.word()) {
        let first = *repeated.iter().next().expect("non-empty set");
        return Err(Error::RepeatedLetter(first));
    }
    let mut state = state;
    let mut ys = Vec::with_capacity(xs.len());
    for x in xs {
        let (y, next) = eval_phi(graph, word, x, state)?;
        ys.push(y);
        state = next;
    }
    Ok((ys, state))
}
