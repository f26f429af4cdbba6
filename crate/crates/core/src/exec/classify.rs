use crate::builtins::{Hint, ProductParts};
use crate::fuzz::{sample_value, Xorshift64Star};
use crate::model::ThreadSpec;

/// How a thread's list lifting may be parallelised.
#[derive(Debug, Clone, Copy)]
pub enum StageClassification {
    General,
    /// `ys = map (x -> f(x, σ)) xs`, state unchanged.
    ReadOnly,
    /// `ys = map g xs` and `σ' = h^len(xs)(σ)`, independently.
    Product(ProductParts),
}

impl StageClassification {
    pub fn hint(&self) -> Hint {
        match self {
            StageClassification::General => Hint::General,
            StageClassification::ReadOnly => Hint::ReadOnly,
            StageClassification::Product(_) => Hint::Product,
        }
    }
}

/// Returns the registry's declared classification. Nothing is inferred from
/// sampling; [`spot_check_hint`] exists to validate hints, not to derive them.
pub fn classify_thread(spec: &ThreadSpec) -> StageClassification {
    match (spec.hint(), spec.func.product_parts()) {
        (Hint::ReadOnly, _) => StageClassification::ReadOnly,
        (Hint::Product, Some(parts)) => StageClassification::Product(parts),
        _ => StageClassification::General,
    }
}

/// Tries `samples` random `(x, σ)` pairs against the declared hint. Returns a
/// description of the first counterexample.
pub fn spot_check_hint(spec: &ThreadSpec, rng: &mut Xorshift64Star, samples: usize, int_bound: i64) -> Result<(), String> {
    let class = classify_thread(spec);
    if matches!(class, StageClassification::General) {
        return Ok(());
    }
    for _ in 0..samples {
        let x = sample_value(&spec.src.desc, rng, int_bound);
        let s = sample_value(&spec.state_type, rng, int_bound);
        let (y, s2) = spec.apply(&x, &s).map_err(|e| format!("thread {}: {e}", spec.id))?;
        match class {
            StageClassification::ReadOnly if s2 != s => {
                return Err(format!("thread {} declared read-only but changed state {s} -> {s2} on input {x}", spec.id));
            }
            StageClassification::Product(parts) => {
                let gy = (parts.pure)(&x).map_err(|e| e.to_string())?;
                let hs = (parts.step)(&s).map_err(|e| e.to_string())?;
                if gy != y || hs != s2 {
                    return Err(format!(
                        "thread {} declared product but ({x}, {s}) -> ({y}, {s2}) differs from ({gy}, {hs})",
                        spec.id
                    ));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{registry, Params};
    use crate::value::Value;

    fn spec(name: &str, init: Value) -> ThreadSpec {
        ThreadSpec::new(1, name, Params::default(), init).unwrap()
    }

    #[test]
    fn required_classifications() {
        assert!(matches!(classify_thread(&spec("counter_add", Value::Int(0))), StageClassification::General));
        assert!(matches!(classify_thread(&spec("scale_by_state", Value::Int(0))), StageClassification::ReadOnly));
        assert!(matches!(classify_thread(&spec("add1_tick", Value::Int(0))), StageClassification::Product(_)));
    }

    #[test]
    fn scale_by_state_leaves_state_untouched_on_random_pairs() {
        let mut rng = Xorshift64Star::new(11);
        assert_eq!(spot_check_hint(&spec("scale_by_state", Value::Int(0)), &mut rng, 1000, 1 << 40), Ok(()));
    }

    #[test]
    fn add1_tick_is_independent_on_random_pairs() {
        let mut rng = Xorshift64Star::new(12);
        assert_eq!(spot_check_hint(&spec("add1_tick", Value::Int(0)), &mut rng, 1000, 1 << 40), Ok(()));
    }

    #[test]
    fn every_registry_hint_survives_spot_checks() {
        let mut rng = Xorshift64Star::new(13);
        for def in registry() {
            let e = def.instantiate(&Params::default()).unwrap();
            let init = sample_value(&e.state_type, &mut rng, 10);
            let t = ThreadSpec::new(1, def.name, Params::default(), init).unwrap();
            assert_eq!(spot_check_hint(&t, &mut rng, 200, 1000), Ok(()), "{}", def.name);
        }
    }
}
