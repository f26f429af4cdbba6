//! Fast paths for threads whose list lifting degenerates to a plain `map`.

use std::thread;

use crate::error::{Error, Result};
use crate::eval::check_inputs;
use crate::exec::{classify_thread, ExecConfig, Mutation, StageClassification};
use crate::model::ThreadSpec;
use crate::value::Value;

/// Order-preserving parallel map over contiguous chunks.
fn chunked_map<F>(xs: &[Value], workers: usize, f: F) -> Result<Vec<Value>>
where
    F: Fn(&Value) -> Result<Value> + Sync,
{
    if workers <= 1 || xs.len() < 2 {
        return xs.iter().map(&f).collect();
    }
    let chunk = xs.len().div_ceil(workers);
    let f = &f;
    let parts: Vec<Result<Vec<Value>>> = thread::scope(|scope| {
        let handles: Vec<_> = xs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(f).collect::<Result<Vec<_>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or(Err(Error::WorkerPanicked))).collect()
    });
    let mut ys = Vec::with_capacity(xs.len());
    for part in parts {
        ys.extend(part?);
    }
    Ok(ys)
}

fn check_output(spec: &ThreadSpec, y: Value) -> Result<Value> {
    if y.conforms(&spec.tgt.desc) {
        Ok(y)
    } else {
        Err(Error::type_mismatch(format!("output of thread {}", spec.id), &spec.tgt.desc, &y))
    }
}

/// Read-only thread over a list: every element sees the same state.
pub fn run_data_parallel_readonly(spec: &ThreadSpec, xs: Vec<Value>, state: Value, cfg: &ExecConfig) -> Result<(Vec<Value>, Value)> {
    if !matches!(classify_thread(spec), StageClassification::ReadOnly) {
        return Err(Error::Classification { id: spec.id, expected: "read-only" });
    }
    check_inputs(&spec.src, &xs)?;
    let ys = chunked_map(&xs, cfg.workers(), |x| {
        let (y, _) = spec.func.call(x, &state)?;
        check_output(spec, y)
    })?;
    Ok((ys, state))
}

/// Product thread over a list: outputs are `map g xs`, the state is `h`
/// applied `len(xs)` times. The two halves run concurrently.
pub fn run_data_parallel_product(spec: &ThreadSpec, xs: Vec<Value>, state: Value, cfg: &ExecConfig) -> Result<(Vec<Value>, Value)> {
    let StageClassification::Product(parts) = classify_thread(spec) else {
        return Err(Error::Classification { id: spec.id, expected: "product" });
    };
    check_inputs(&spec.src, &xs)?;
    let steps = if cfg.has(Mutation::DropStateUpdate) { 0 } else { xs.len() };
    let map_workers = cfg.workers().saturating_sub(1).max(1);
    let (ys, next) = thread::scope(|scope| {
        let advance = scope.spawn(|| {
            let mut s = state.clone();
            for _ in 0..steps {
                s = (parts.step)(&s)?;
            }
            Ok::<_, Error>(s)
        });
        let ys = chunked_map(&xs, map_workers, |x| check_output(spec, (parts.pure)(x)?));
        (ys, advance.join().unwrap_or(Err(Error::WorkerPanicked)))
    });
    let next = next?;
    if !next.conforms(&spec.state_type) {
        return Err(Error::type_mismatch(format!("state of thread {}", spec.id), &spec.state_type, &next));
    }
    Ok((ys?, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::Params;
    use crate::eval::eval_psi_ref;
    use crate::model::{init_state, register_thread, Multigraph, StateStore, ThreadId};
    use crate::word::{validate_word, Word};
    use proptest::prelude::*;

    fn spec(name: &str, init: i64) -> ThreadSpec {
        ThreadSpec::new(1, name, Params::default(), Value::Int(init)).unwrap()
    }

    #[test]
    fn readonly_scales_elementwise() {
        let s = spec("scale_by_state", 3);
        let out = run_data_parallel_readonly(&s, Value::ints([1, 2, 3]), Value::Int(3), &ExecConfig::with_workers(2)).unwrap();
        assert_eq!(out, (Value::ints([3, 6, 9]), Value::Int(3)));
        let out = run_data_parallel_readonly(&s, vec![], Value::Int(3), &ExecConfig::with_workers(2)).unwrap();
        assert_eq!(out, (vec![], Value::Int(3)));
    }

    #[test]
    fn product_maps_and_iterates() {
        let s = spec("add1_tick", 0);
        let out = run_data_parallel_product(&s, Value::ints([5, 6]), Value::Int(0), &ExecConfig::with_workers(3)).unwrap();
        assert_eq!(out, (Value::ints([6, 7]), Value::Int(2)));
        let out = run_data_parallel_product(&s, vec![], Value::Int(0), &ExecConfig::with_workers(3)).unwrap();
        assert_eq!(out, (vec![], Value::Int(0)));
    }

    #[test]
    fn wrong_classification_is_rejected() {
        let s = spec("counter_add", 0);
        assert!(matches!(
            run_data_parallel_readonly(&s, vec![], Value::Int(0), &ExecConfig::default()),
            Err(Error::Classification { .. })
        ));
        assert!(matches!(
            run_data_parallel_product(&s, vec![], Value::Int(0), &ExecConfig::default()),
            Err(Error::Classification { .. })
        ));
    }

    fn reference(spec: &ThreadSpec, xs: Vec<Value>, state: Value) -> (Vec<Value>, Value) {
        let g = register_thread(spec.clone(), Multigraph::new()).unwrap();
        let w = validate_word(&g, &Word::new([spec.id])).unwrap();
        let mut st: StateStore = init_state(&g);
        st.insert(spec.id, state);
        let (ys, st) = eval_psi_ref(&g, &w, xs, st).unwrap();
        (ys, st.get(ThreadId(1)).unwrap().clone())
    }

    proptest! {
        #[test]
        fn fast_paths_match_reference(xs in prop::collection::vec(any::<i64>(), 0..64), sigma in any::<i64>(), workers in 1usize..6) {
            let xs = Value::ints(xs);
            let cfg = ExecConfig::with_workers(workers);
            for name in ["scale_by_state"] {
                let s = spec(name, sigma);
                prop_assert_eq!(run_data_parallel_readonly(&s, xs.clone(), Value::Int(sigma), &cfg).unwrap(), reference(&s, xs.clone(), Value::Int(sigma)));
            }
            for name in ["add1_tick", "negate_tick"] {
                let s = spec(name, sigma);
                prop_assert_eq!(run_data_parallel_product(&s, xs.clone(), Value::Int(sigma), &cfg).unwrap(), reference(&s, xs.clone(), Value::Int(sigma)));
            }
        }
    }
}
