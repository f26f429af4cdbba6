//! The fixed library of transfer functions a program may name.
//!
//! Every entry is a pure, deterministic `(input, state) -> (output, state')`
//! over the closed value universe. Integer arithmetic wraps; float arithmetic
//! is plain IEEE-754 double precision. Entries may carry a classification
//! hint (read-only or product) which the data-parallel executors trust.

use std::fmt;
use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::value::{TypeDesc, Value};

/// Per-thread parameters from the program file's `params` object.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params {
    /// Sleep duration for `delay_identity_ms`.
    pub ms: Option<u64>,
    /// Type argument for polymorphic builtins (`merge_sum`, `delay_identity_ms`).
    pub ty: Option<TypeDesc>,
    /// Vertex names overriding the anonymous port names.
    pub src_label: Option<String>,
    pub tgt_label: Option<String>,
}

impl Params {
    pub fn with_ms(mut self, ms: u64) -> Self {
        self.ms = Some(ms);
        self
    }

    pub fn with_type(mut self, ty: TypeDesc) -> Self {
        self.ty = Some(ty);
        self
    }

    pub fn with_labels(mut self, src: impl Into<String>, tgt: impl Into<String>) -> Self {
        self.src_label = Some(src.into());
        self.tgt_label = Some(tgt.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hint {
    General,
    /// State is consulted but never modified.
    ReadOnly,
    /// Output depends only on the input, new state only on the old state.
    Product,
}

impl fmt::Display for Hint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hint::General => "general",
            Hint::ReadOnly => "read-only",
            Hint::Product => "product",
        })
    }
}

pub type TransferFn = fn(&Params, &Value, &Value) -> Result<(Value, Value)>;
pub type UnaryFn = fn(&Value) -> Result<Value>;

/// The two independent halves of a product thread.
#[derive(Clone, Copy)]
pub struct ProductParts {
    /// Maps an input to an output.
    pub pure: UnaryFn,
    /// Advances the state by one element.
    pub step: UnaryFn,
}

impl fmt::Debug for ProductParts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ProductParts")
    }
}

type SignatureFn = fn(&Params) -> Result<(TypeDesc, TypeDesc, TypeDesc)>;

/// A registry row. Instantiating it with [`Params`] yields a [`BuiltinEntry`].
pub struct BuiltinDef {
    pub name: &'static str,
    pub hint: Hint,
    signature: SignatureFn,
    transfer: TransferFn,
    product: Option<ProductParts>,
    accepts_ms: bool,
    accepts_type: bool,
}

/// A builtin resolved against concrete parameters.
#[derive(Clone)]
pub struct BuiltinEntry {
    pub name: &'static str,
    pub params: Params,
    pub src: TypeDesc,
    pub tgt: TypeDesc,
    pub state_type: TypeDesc,
    pub hint: Hint,
    transfer: TransferFn,
    product: Option<ProductParts>,
}

impl fmt::Debug for BuiltinEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BuiltinEntry")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("src", &self.src)
            .field("tgt", &self.tgt)
            .field("state_type", &self.state_type)
            .field("hint", &self.hint)
            .finish()
    }
}

impl PartialEq for BuiltinEntry {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params
    }
}

impl BuiltinEntry {
    /// Applies the transfer function without type checks.
    pub fn call(&self, x: &Value, state: &Value) -> Result<(Value, Value)> {
        (self.transfer)(&self.params, x, state)
    }

    pub fn product_parts(&self) -> Option<ProductParts> {
        self.product
    }
}

impl BuiltinDef {
    pub fn instantiate(&self, params: &Params) -> Result<BuiltinEntry> {
        let bad = |msg: &str| Error::InvalidParam { func: self.name.to_string(), msg: msg.to_string() };
        if params.ms.is_some() && !self.accepts_ms {
            return Err(bad("`ms` is not accepted"));
        }
        if params.ty.is_some() && !self.accepts_type {
            return Err(bad("`type` is not accepted"));
        }
        let (src, tgt, state_type) = (self.signature)(params)?;
        Ok(BuiltinEntry {
            name: self.name,
            params: params.clone(),
            src,
            tgt,
            state_type,
            hint: self.hint,
            transfer: self.transfer,
            product: self.product,
        })
    }

    /// Source type with default parameters; used by the fuzzer to match ports.
    pub fn default_signature(&self) -> (TypeDesc, TypeDesc, TypeDesc) {
        (self.signature)(&Params::default()).expect("defaults are valid")
    }

    pub fn is_polymorphic(&self) -> bool {
        self.accepts_type
    }
}

/// Looks up `name` and instantiates it with default parameters.
pub fn builtin(name: &str) -> Result<BuiltinEntry> {
    builtin_with(name, &Params::default())
}

pub fn builtin_with(name: &str, params: &Params) -> Result<BuiltinEntry> {
    lookup(name)?.instantiate(params)
}

pub fn lookup(name: &str) -> Result<&'static BuiltinDef> {
    REGISTRY
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| Error::UnknownFunction(name.to_string()))
}

pub fn registry() -> &'static [BuiltinDef] {
    REGISTRY
}

fn bad_arg(func: &str, what: &str, v: &Value) -> Error {
    Error::type_mismatch(func.to_string(), what, v)
}

fn int(func: &str, v: &Value) -> Result<i64> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(bad_arg(func, "int", other)),
    }
}

fn float(func: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        other => Err(bad_arg(func, "float", other)),
    }
}

fn string<'a>(func: &str, v: &'a Value) -> Result<&'a str> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(bad_arg(func, "str", other)),
    }
}

macro_rules! sig {
    ($src:expr, $tgt:expr, $st:expr) => {
        |_| Ok(($src, $tgt, $st))
    };
}

fn int_sum() -> TypeDesc {
    TypeDesc::sum(TypeDesc::Int, TypeDesc::Int)
}

fn int_pair() -> TypeDesc {
    TypeDesc::pair(TypeDesc::Int, TypeDesc::Int)
}

fn int_list() -> TypeDesc {
    TypeDesc::list(TypeDesc::Int)
}

const HISTORY_LEN: usize = 4;

fn add1_pure(x: &Value) -> Result<Value> {
    Ok(Value::Int(int("add1_tick", x)?.wrapping_add(1)))
}

fn add1_step(s: &Value) -> Result<Value> {
    Ok(Value::Int(int("add1_tick", s)?.wrapping_add(1)))
}

fn negate_pure(x: &Value) -> Result<Value> {
    Ok(Value::Int(int("negate_tick", x)?.wrapping_neg()))
}

fn negate_step(s: &Value) -> Result<Value> {
    Ok(Value::Int(int("negate_tick", s)?.wrapping_mul(3).wrapping_add(1)))
}

fn halve_pure(x: &Value) -> Result<Value> {
    Ok(Value::Float(float("halve_decay", x)? * 0.5))
}

fn halve_step(s: &Value) -> Result<Value> {
    Ok(Value::Float(float("halve_decay", s)? * 0.5 + 1.0))
}

fn product_transfer(parts: ProductParts) -> impl Fn(&Value, &Value) -> Result<(Value, Value)> {
    move |x, s| Ok(((parts.pure)(x)?, (parts.step)(s)?))
}

const ADD1: ProductParts = ProductParts { pure: add1_pure, step: add1_step };
const NEGATE: ProductParts = ProductParts { pure: negate_pure, step: negate_step };
const HALVE: ProductParts = ProductParts { pure: halve_pure, step: halve_step };

static REGISTRY: &[BuiltinDef] = &[
    BuiltinDef {
        name: "counter_add",
        hint: Hint::General,
        signature: sig!(TypeDesc::Int, TypeDesc::Int, TypeDesc::Int),
        transfer: |_, x, s| {
            let (x, s) = (int("counter_add", x)?, int("counter_add", s)?);
            Ok((Value::Int(x.wrapping_add(s)), Value::Int(s.wrapping_add(1))))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "scale_by_state",
        hint: Hint::ReadOnly,
        signature: sig!(TypeDesc::Int, TypeDesc::Int, TypeDesc::Int),
        transfer: |_, x, s| {
            let (xi, si) = (int("scale_by_state", x)?, int("scale_by_state", s)?);
            Ok((Value::Int(xi.wrapping_mul(si)), s.clone()))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "add1_tick",
        hint: Hint::Product,
        signature: sig!(TypeDesc::Int, TypeDesc::Int, TypeDesc::Int),
        transfer: |_, x, s| product_transfer(ADD1)(x, s),
        product: Some(ADD1),
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "branch_even",
        hint: Hint::ReadOnly,
        signature: sig!(TypeDesc::Int, int_sum(), TypeDesc::Unit),
        transfer: |_, x, s| {
            let xi = int("branch_even", x)?;
            let y = if xi % 2 == 0 { Value::inl(x.clone()) } else { Value::inr(x.clone()) };
            Ok((y, s.clone()))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "merge_sum",
        hint: Hint::ReadOnly,
        signature: |p| {
            let d = p.ty.clone().unwrap_or(TypeDesc::Int);
            Ok((TypeDesc::sum(d.clone(), d.clone()), d, TypeDesc::Unit))
        },
        transfer: |_, x, s| match x {
            Value::Inl(v) | Value::Inr(v) => Ok(((**v).clone(), s.clone())),
            other => Err(bad_arg("merge_sum", "sum", other)),
        },
        product: None,
        accepts_ms: false,
        accepts_type: true,
    },
    BuiltinDef {
        name: "delay_identity_ms",
        hint: Hint::ReadOnly,
        signature: |p| {
            let d = p.ty.clone().unwrap_or(TypeDesc::Int);
            Ok((d.clone(), d, TypeDesc::Unit))
        },
        transfer: |p, x, s| {
            let ms = p.ms.unwrap_or(0);
            if ms > 0 {
                thread::sleep(Duration::from_millis(ms));
            }
            Ok((x.clone(), s.clone()))
        },
        product: None,
        accepts_ms: true,
        accepts_type: true,
    },
    BuiltinDef {
        name: "append_tag",
        hint: Hint::ReadOnly,
        signature: sig!(TypeDesc::Str, TypeDesc::Str, TypeDesc::Str),
        transfer: |_, x, s| {
            let (xs, ss) = (string("append_tag", x)?, string("append_tag", s)?);
            Ok((Value::Str(format!("{xs}{ss}")), s.clone()))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "running_sum",
        hint: Hint::General,
        signature: sig!(TypeDesc::Int, TypeDesc::Int, TypeDesc::Int),
        transfer: |_, x, s| {
            let total = int("running_sum", s)?.wrapping_add(int("running_sum", x)?);
            Ok((Value::Int(total), Value::Int(total)))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "negate_tick",
        hint: Hint::Product,
        signature: sig!(TypeDesc::Int, TypeDesc::Int, TypeDesc::Int),
        transfer: |_, x, s| product_transfer(NEGATE)(x, s),
        product: Some(NEGATE),
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "branch_threshold",
        hint: Hint::General,
        signature: sig!(TypeDesc::Int, int_sum(), TypeDesc::Int),
        transfer: |_, x, s| {
            let (xi, si) = (int("branch_threshold", x)?, int("branch_threshold", s)?);
            let y = if xi >= si { Value::inl(x.clone()) } else { Value::inr(x.clone()) };
            Ok((y, x.clone()))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "int_to_str",
        hint: Hint::ReadOnly,
        signature: sig!(TypeDesc::Int, TypeDesc::Str, TypeDesc::Unit),
        transfer: |_, x, s| Ok((Value::Str(int("int_to_str", x)?.to_string()), s.clone())),
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "str_len",
        hint: Hint::ReadOnly,
        signature: sig!(TypeDesc::Str, TypeDesc::Int, TypeDesc::Int),
        transfer: |_, x, s| {
            let len = string("str_len", x)?.chars().count() as i64;
            Ok((Value::Int(len.wrapping_add(int("str_len", s)?)), s.clone()))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "int_to_float",
        hint: Hint::ReadOnly,
        signature: sig!(TypeDesc::Int, TypeDesc::Float, TypeDesc::Unit),
        transfer: |_, x, s| Ok((Value::Float(int("int_to_float", x)? as f64 / 4.0), s.clone())),
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "ema_half",
        hint: Hint::General,
        signature: sig!(TypeDesc::Float, TypeDesc::Float, TypeDesc::Float),
        transfer: |_, x, s| {
            let y = 0.5 * float("ema_half", x)? + 0.5 * float("ema_half", s)?;
            Ok((Value::Float(y), Value::Float(y)))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "halve_decay",
        hint: Hint::Product,
        signature: sig!(TypeDesc::Float, TypeDesc::Float, TypeDesc::Float),
        transfer: |_, x, s| product_transfer(HALVE)(x, s),
        product: Some(HALVE),
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "float_round",
        hint: Hint::ReadOnly,
        signature: sig!(TypeDesc::Float, TypeDesc::Int, TypeDesc::Unit),
        // `as` saturates and maps NaN to 0.
        transfer: |_, x, s| Ok((Value::Int(float("float_round", x)?.round() as i64), s.clone())),
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "concat_state",
        hint: Hint::General,
        signature: sig!(TypeDesc::Str, TypeDesc::Str, TypeDesc::Str),
        transfer: |_, x, s| {
            let joined = format!("{}{}", string("concat_state", s)?, string("concat_state", x)?);
            Ok((Value::Str(joined.clone()), Value::Str(joined)))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "pair_count",
        hint: Hint::General,
        signature: sig!(TypeDesc::Int, int_pair(), TypeDesc::Int),
        transfer: |_, x, s| {
            let si = int("pair_count", s)?;
            int("pair_count", x)?;
            Ok((Value::pair(x.clone(), s.clone()), Value::Int(si.wrapping_add(1))))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "pair_sum",
        hint: Hint::ReadOnly,
        signature: sig!(int_pair(), TypeDesc::Int, TypeDesc::Unit),
        transfer: |_, x, s| match x {
            Value::Pair(a, b) => Ok((Value::Int(int("pair_sum", a)?.wrapping_add(int("pair_sum", b)?)), s.clone())),
            other => Err(bad_arg("pair_sum", "pair", other)),
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "history",
        hint: Hint::General,
        signature: sig!(TypeDesc::Int, int_list(), int_list()),
        transfer: |_, x, s| {
            int("history", x)?;
            let Value::List(prev) = s else {
                return Err(bad_arg("history", "list(int)", s));
            };
            let skip = (prev.len() + 1).saturating_sub(HISTORY_LEN);
            let next: Vec<Value> = prev.iter().skip(skip).cloned().chain([x.clone()]).collect();
            Ok((Value::List(next.clone()), Value::List(next)))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "list_sum",
        hint: Hint::ReadOnly,
        signature: sig!(int_list(), TypeDesc::Int, TypeDesc::Unit),
        transfer: |_, x, s| {
            let Value::List(items) = x else {
                return Err(bad_arg("list_sum", "list(int)", x));
            };
            let mut total = 0i64;
            for v in items {
                total = total.wrapping_add(int("list_sum", v)?);
            }
            Ok((Value::Int(total), s.clone()))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "is_even",
        hint: Hint::ReadOnly,
        signature: sig!(TypeDesc::Int, TypeDesc::Bool, TypeDesc::Unit),
        transfer: |_, x, s| Ok((Value::Bool(int("is_even", x)? % 2 == 0), s.clone())),
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
    BuiltinDef {
        name: "count_true",
        hint: Hint::General,
        signature: sig!(TypeDesc::Bool, TypeDesc::Int, TypeDesc::Int),
        transfer: |_, x, s| {
            let Value::Bool(b) = x else {
                return Err(bad_arg("count_true", "bool", x));
            };
            let next = int("count_true", s)?.wrapping_add(i64::from(*b));
            Ok((Value::Int(next), Value::Int(next)))
        },
        product: None,
        accepts_ms: false,
        accepts_type: false,
    },
];

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn names_are_unique() {
        let names: HashSet<_> = registry().iter().map(|d| d.name).collect();
        assert_eq!(names.len(), registry().len());
    }

    #[test]
    fn required_entries_and_hints() {
        assert_eq!(builtin("counter_add").unwrap().hint, Hint::General);
        assert_eq!(builtin("scale_by_state").unwrap().hint, Hint::ReadOnly);
        assert_eq!(builtin("add1_tick").unwrap().hint, Hint::Product);
        assert_eq!(builtin("branch_even").unwrap().hint, Hint::ReadOnly);
        assert!(builtin("merge_sum").is_ok());
        assert!(builtin("delay_identity_ms").is_ok());
        assert_eq!(builtin("append_tag").unwrap().hint, Hint::ReadOnly);
        assert!(matches!(builtin("nope"), Err(Error::UnknownFunction(n)) if n == "nope"));
    }

    #[test]
    fn required_entry_semantics() {
        let call = |name: &str, x: Value, s: Value| builtin(name).unwrap().call(&x, &s).unwrap();
        assert_eq!(call("counter_add", Value::Int(10), Value::Int(2)), (Value::Int(12), Value::Int(3)));
        assert_eq!(call("scale_by_state", Value::Int(7), Value::Int(3)), (Value::Int(21), Value::Int(3)));
        assert_eq!(call("add1_tick", Value::Int(5), Value::Int(0)), (Value::Int(6), Value::Int(1)));
        assert_eq!(call("branch_even", Value::Int(4), Value::Unit).0, Value::inl(Value::Int(4)));
        assert_eq!(call("branch_even", Value::Int(-3), Value::Unit).0, Value::inr(Value::Int(-3)));
        assert_eq!(call("merge_sum", Value::inr(Value::Int(5)), Value::Unit), (Value::Int(5), Value::Unit));
        assert_eq!(call("merge_sum", Value::inl(Value::Int(5)), Value::Unit), (Value::Int(5), Value::Unit));
        assert_eq!(call("append_tag", Value::str("ab"), Value::str("!")), (Value::str("ab!"), Value::str("!")));
    }

    #[test]
    fn integer_arithmetic_wraps() {
        let e = builtin("counter_add").unwrap();
        assert_eq!(e.call(&Value::Int(i64::MAX), &Value::Int(1)).unwrap().0, Value::Int(i64::MIN));
    }

    #[test]
    fn history_keeps_a_bounded_window() {
        let e = builtin("history").unwrap();
        let mut s = Value::List(vec![]);
        for i in 0..6 {
            s = e.call(&Value::Int(i), &s).unwrap().1;
        }
        assert_eq!(s, Value::List(Value::ints([2, 3, 4, 5])));
    }

    #[test]
    fn polymorphic_signatures_follow_type_param() {
        let p = Params::default().with_type(TypeDesc::Str);
        let m = builtin_with("merge_sum", &p).unwrap();
        assert_eq!(m.src, TypeDesc::sum(TypeDesc::Str, TypeDesc::Str));
        assert_eq!(m.tgt, TypeDesc::Str);
        let d = builtin_with("delay_identity_ms", &Params::default().with_ms(0)).unwrap();
        assert_eq!(d.src, TypeDesc::Int);
        assert!(matches!(
            builtin_with("counter_add", &Params::default().with_ms(3)),
            Err(Error::InvalidParam { .. })
        ));
    }

    #[test]
    fn product_parts_agree_with_transfer() {
        for name in ["add1_tick", "negate_tick"] {
            let e = builtin(name).unwrap();
            let parts = e.product_parts().unwrap();
            for (x, s) in [(0, 0), (-7, 12), (i64::MAX, i64::MIN)] {
                let (y, s2) = e.call(&Value::Int(x), &Value::Int(s)).unwrap();
                assert_eq!(y, (parts.pure)(&Value::Int(x)).unwrap());
                assert_eq!(s2, (parts.step)(&Value::Int(s)).unwrap());
            }
        }
    }

    #[test]
    fn every_builtin_is_deterministic_on_default_inputs() {
        for def in registry() {
            let e = def.instantiate(&Params::default()).unwrap();
            let x = crate::fuzz::sample_value(&e.src, &mut crate::fuzz::Xorshift64Star::new(3), 50);
            let s = crate::fuzz::sample_value(&e.state_type, &mut crate::fuzz::Xorshift64Star::new(4), 50);
            let a = e.call(&x, &s).unwrap();
            let b = e.call(&x, &s).unwrap();
            assert_eq!(a, b, "{}", def.name);
            assert!(a.0.conforms(&e.tgt), "{}", def.name);
            assert!(a.1.conforms(&e.state_type), "{}", def.name);
        }
    }
}
