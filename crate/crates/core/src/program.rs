//! The JSON program format and the run entry point.
//!
//! ```json
//! {
//!   "threads": [{"id": 1, "fn": "counter_add", "init_state": 0, "params": {}}],
//!   "word": [1],
//!   "input": [10, 20, 30],
//!   "input_type": "int"
//! }
//! ```
//!
//! `word` lists letters in application order: `[1, 2]` runs thread 1 first.
//! A branch program replaces the array with
//! `{"branch": {"producer": [..], "left": [..], "right": [..], "consumer": [..]}}`.
//! `anchor` names the vertex (or gives the type) of an empty word and is
//! required exactly when the word is empty.

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Map, Number, Value as Json};
use sha2::{Digest, Sha256};

use crate::builtins::{builtin_with, Params};
use crate::error::{Error, Result};
use crate::eval::{eval_interleaved, eval_psi_ref};
use crate::exec::{
    eval_branch_interleaved, eval_branch_ref, run_auto, run_pipeline, run_task_parallel_branch, validate_branch,
    BranchProgram, ExecConfig, SubwordStrategy, ValidatedBranch,
};
use crate::model::{init_state, register_thread, Multigraph, StateStore, ThreadId, ThreadSpec};
use crate::value::{PortType, TypeDesc, Value};
use crate::word::{validate_word, ValidatedWord, Word};

/// What a program evaluates, before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BodySpec {
    Word(Word),
    Branch(BranchProgram),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    Word(ValidatedWord),
    Branch(ValidatedBranch),
}

impl Body {
    pub fn src(&self) -> &PortType {
        match self {
            Body::Word(w) => w.src(),
            Body::Branch(b) => b.src(),
        }
    }

    pub fn tgt(&self) -> &PortType {
        match self {
            Body::Word(w) => w.tgt(),
            Body::Branch(b) => b.tgt(),
        }
    }

    /// All letters, in application order for words and producer, left,
    /// right, consumer order for branches.
    pub fn letters(&self) -> Vec<ThreadId> {
        match self {
            Body::Word(w) => w.letters().to_vec(),
            Body::Branch(b) => [&b.producer, &b.left, &b.right, &b.consumer]
                .iter()
                .flat_map(|w| w.letters().iter().copied())
                .collect(),
        }
    }
}

/// A graph, a path (or branch program) through it, and an input list.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub graph: Multigraph,
    pub body: Body,
    pub input: Vec<Value>,
    pub input_type: TypeDesc,
}

impl Program {
    /// Registers `threads`, validates `body` and type-checks `input`.
    pub fn new(threads: Vec<ThreadSpec>, body: BodySpec, input: Vec<Value>, input_type: TypeDesc) -> Result<Program> {
        let mut graph = threads.into_iter().try_fold(Multigraph::new(), |g, t| register_thread(t, g))?;
        let body = match body {
            BodySpec::Word(w) => {
                if let Some(anchor) = w.anchor().filter(|_| w.is_empty()) {
                    graph = graph.with_vertex(anchor.clone())?;
                }
                Body::Word(validate_word(&graph, &w)?)
            }
            BodySpec::Branch(b) => Body::Branch(validate_branch(&graph, &b, &input_type)?),
        };
        if body.src().desc != input_type {
            return Err(Error::schema("input_type", format!("`{input_type}` does not match the program source `{}`", body.src().desc)));
        }
        for (i, x) in input.iter().enumerate() {
            if !x.conforms(&input_type) {
                return Err(Error::schema(format!("input[{i}]"), format!("expected {input_type}, got {x}")));
            }
        }
        Ok(Program { graph, body, input, input_type })
    }

    pub fn to_json(&self) -> Json {
        let threads: Vec<Json> = self
            .graph
            .edges()
            .map(|t| {
                json!({
                    "id": t.id.0,
                    "fn": t.func.name,
                    "init_state": value_to_json(&t.init_state),
                    "params": params_to_json(&t.func.params),
                })
            })
            .collect();
        let ids = |w: &Word| Json::from(w.letters().iter().map(|n| n.0).collect::<Vec<_>>());
        let mut top = Map::new();
        top.insert("threads".into(), Json::Array(threads));
        match &self.body {
            Body::Word(w) => {
                top.insert("word".into(), ids(w.word()));
                if w.word().is_empty() {
                    top.insert("anchor".into(), Json::from(w.src().name.clone()));
                }
            }
            Body::Branch(b) => {
                let p = b.program();
                top.insert(
                    "word".into(),
                    json!({"branch": {
                        "producer": ids(&p.producer),
                        "left": ids(&p.left),
                        "right": ids(&p.right),
                        "consumer": ids(&p.consumer),
                    }}),
                );
            }
        }
        top.insert("input".into(), Json::Array(self.input.iter().map(value_to_json).collect()));
        top.insert("input_type".into(), Json::from(self.input_type.to_string()));
        Json::Object(top)
    }

    /// Canonical compact serialization.
    pub fn serialize(&self) -> String {
        self.to_json().to_string()
    }

    pub fn serialize_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json values serialize");
        s.push('\n');
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.serialize().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn is_branch(&self) -> bool {
        matches!(self.body, Body::Branch(_))
    }
}

fn params_to_json(p: &Params) -> Json {
    let mut m = Map::new();
    if let Some(ms) = p.ms {
        m.insert("ms".into(), Json::from(ms));
    }
    if let Some(t) = &p.ty {
        m.insert("type".into(), Json::from(t.to_string()));
    }
    if let Some(l) = &p.src_label {
        m.insert("src_label".into(), Json::from(l.clone()));
    }
    if let Some(l) = &p.tgt_label {
        m.insert("tgt_label".into(), Json::from(l.clone()));
    }
    Json::Object(m)
}

/// Encodes a value. Non-finite floats become the strings `"NaN"`, `"inf"`, `"-inf"`.
pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Unit => Json::Null,
        Value::Bool(b) => Json::Bool(*b),
        Value::Int(i) => Json::from(*i),
        Value::Float(x) => match Number::from_f64(*x) {
            Some(n) => Json::Number(n),
            None if x.is_nan() => Json::from("NaN"),
            None if *x > 0.0 => Json::from("inf"),
            None => Json::from("-inf"),
        },
        Value::Str(s) => Json::from(s.clone()),
        Value::List(xs) => Json::Array(xs.iter().map(value_to_json).collect()),
        Value::Pair(a, b) => Json::Array(vec![value_to_json(a), value_to_json(b)]),
        Value::Inl(v) => json!({ "inl": value_to_json(v) }),
        Value::Inr(v) => json!({ "inr": value_to_json(v) }),
    }
}

/// Decodes a value literal at `path` against the expected type.
pub fn value_from_json(j: &Json, desc: &TypeDesc, path: &str) -> Result<Value> {
    let bad = || Error::schema(path, format!("expected a {desc} literal, got {j}"));
    Ok(match (desc, j) {
        (TypeDesc::Unit, Json::Null) => Value::Unit,
        (TypeDesc::Bool, Json::Bool(b)) => Value::Bool(*b),
        (TypeDesc::Int, Json::Number(n)) => Value::Int(n.as_i64().ok_or_else(bad)?),
        (TypeDesc::Float, Json::Number(n)) => Value::Float(n.as_f64().ok_or_else(bad)?),
        (TypeDesc::Float, Json::String(s)) => Value::Float(match s.as_str() {
            "NaN" => f64::NAN,
            "inf" => f64::INFINITY,
            "-inf" => f64::NEG_INFINITY,
            _ => return Err(bad()),
        }),
        (TypeDesc::Str, Json::String(s)) => Value::Str(s.clone()),
        (TypeDesc::List(e), Json::Array(xs)) => Value::List(
            xs.iter()
                .enumerate()
                .map(|(i, x)| value_from_json(x, e, &format!("{path}[{i}]")))
                .collect::<Result<_>>()?,
        ),
        (TypeDesc::Pair(a, b), Json::Array(xs)) if xs.len() == 2 => Value::pair(
            value_from_json(&xs[0], a, &format!("{path}[0]"))?,
            value_from_json(&xs[1], b, &format!("{path}[1]"))?,
        ),
        (TypeDesc::Sum(l, r), Json::Object(m)) if m.len() == 1 => {
            if let Some(v) = m.get("inl") {
                Value::inl(value_from_json(v, l, &format!("{path}.inl"))?)
            } else if let Some(v) = m.get("inr") {
                Value::inr(value_from_json(v, r, &format!("{path}.inr"))?)
            } else {
                return Err(bad());
            }
        }
        _ => return Err(bad()),
    })
}

fn default_value(desc: &TypeDesc) -> Value {
    match desc {
        TypeDesc::Unit => Value::Unit,
        TypeDesc::Bool => Value::Bool(false),
        TypeDesc::Int => Value::Int(0),
        TypeDesc::Float => Value::Float(0.0),
        TypeDesc::Str => Value::str(""),
        TypeDesc::List(_) => Value::List(Vec::new()),
        TypeDesc::Pair(a, b) => Value::pair(default_value(a), default_value(b)),
        TypeDesc::Sum(a, _) => Value::inl(default_value(a)),
    }
}

fn object<'a>(j: &'a Json, path: &str, allowed: &[&str]) -> Result<&'a Map<String, Json>> {
    let m = j.as_object().ok_or_else(|| Error::schema(path, "expected an object"))?;
    if let Some(k) = m.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::schema(path, format!("unknown field `{k}`")));
    }
    Ok(m)
}

fn required<'a>(m: &'a Map<String, Json>, key: &str, path: &str) -> Result<&'a Json> {
    m.get(key).ok_or_else(|| Error::schema(path, format!("missing field `{key}`")))
}

fn as_str<'a>(j: &'a Json, path: &str) -> Result<&'a str> {
    j.as_str().ok_or_else(|| Error::schema(path, "expected a string"))
}

fn as_type(j: &Json, path: &str) -> Result<TypeDesc> {
    let s = as_str(j, path)?;
    TypeDesc::parse(s).ok_or_else(|| Error::schema(path, format!("unknown type `{s}`")))
}

fn parse_params(func: &str, j: Option<&Json>, path: &str) -> Result<Params> {
    let mut p = Params::default();
    let Some(j) = j else { return Ok(p) };
    let m = j.as_object().ok_or_else(|| Error::schema(path, "expected an object"))?;
    for (k, v) in m {
        let at = format!("{path}.{k}");
        match k.as_str() {
            "ms" => p.ms = Some(v.as_u64().ok_or_else(|| Error::schema(&at, "expected a non-negative integer"))?),
            "type" => p.ty = Some(as_type(v, &at)?),
            "src_label" => p.src_label = Some(as_str(v, &at)?.to_string()),
            "tgt_label" => p.tgt_label = Some(as_str(v, &at)?.to_string()),
            other => {
                return Err(Error::InvalidParam { func: func.to_string(), msg: format!("unknown parameter `{other}`") });
            }
        }
    }
    Ok(p)
}

fn parse_thread(j: &Json, path: &str) -> Result<ThreadSpec> {
    let m = object(j, path, &["id", "fn", "init_state", "params"])?;
    let id = required(m, "id", path)?
        .as_u64()
        .ok_or_else(|| Error::schema(format!("{path}.id"), "expected a non-negative integer"))?;
    let func = as_str(required(m, "fn", path)?, &format!("{path}.fn"))?;
    let params = parse_params(func, m.get("params"), &format!("{path}.params"))?;
    let entry = builtin_with(func, &params)?;
    let init = match m.get("init_state") {
        Some(v) => value_from_json(v, &entry.state_type, &format!("{path}.init_state"))?,
        None => default_value(&entry.state_type),
    };
    ThreadSpec::new(id, func, params, init)
}

fn parse_letters(j: &Json, path: &str) -> Result<Word> {
    let xs = j.as_array().ok_or_else(|| Error::schema(path, "expected an array of thread ids"))?;
    let ids = xs
        .iter()
        .enumerate()
        .map(|(i, x)| x.as_u64().ok_or_else(|| Error::schema(format!("{path}[{i}]"), "expected a thread id")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Word::new(ids))
}

fn parse_anchor(graph_threads: &[ThreadSpec], text: &str) -> Result<PortType> {
    for t in graph_threads {
        for port in [&t.src, &t.tgt] {
            if port.name == text {
                return Ok(port.clone());
            }
        }
    }
    TypeDesc::parse(text)
        .map(PortType::anonymous)
        .ok_or_else(|| Error::schema("anchor", format!("`{text}` is neither a vertex nor a type")))
}

/// Parses and fully validates a program document.
pub fn parse_program(text: &str) -> Result<Program> {
    let doc: Json = serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
    let top = object(&doc, "$", &["threads", "word", "anchor", "input", "input_type"])?;

    let threads = required(top, "threads", "$")?
        .as_array()
        .ok_or_else(|| Error::schema("threads", "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, t)| parse_thread(t, &format!("threads[{i}]")))
        .collect::<Result<Vec<_>>>()?;

    let word = required(top, "word", "$")?;
    let body = match word {
        Json::Array(_) => {
            let w = parse_letters(word, "word")?;
            match (w.is_empty(), top.get("anchor")) {
                (true, Some(a)) => BodySpec::Word(w.with_anchor(parse_anchor(&threads, as_str(a, "anchor")?)?)),
                (true, None) => return Err(Error::schema("anchor", "required when the word is empty")),
                (false, Some(_)) => return Err(Error::schema("anchor", "only allowed when the word is empty")),
                (false, None) => BodySpec::Word(w),
            }
        }
        Json::Object(_) => {
            let outer = object(word, "word", &["branch"])?;
            let b = required(outer, "branch", "word")?;
            let m = object(b, "word.branch", &["producer", "left", "right", "consumer"])?;
            let part = |k: &str| parse_letters(required(m, k, "word.branch")?, &format!("word.branch.{k}"));
            if top.contains_key("anchor") {
                return Err(Error::schema("anchor", "not used by branch programs"));
            }
            BodySpec::Branch(BranchProgram {
                producer: part("producer")?,
                left: part("left")?,
                right: part("right")?,
                consumer: part("consumer")?,
            })
        }
        _ => return Err(Error::schema("word", "expected an array or a branch object")),
    };

    let input_type = match top.get("input_type") {
        Some(t) => as_type(t, "input_type")?,
        None => source_type(&threads, &body)?,
    };
    let input = required(top, "input", "$")?
        .as_array()
        .ok_or_else(|| Error::schema("input", "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, x)| value_from_json(x, &input_type, &format!("input[{i}]")))
        .collect::<Result<Vec<_>>>()?;

    Program::new(threads, body, input, input_type)
}

/// Source type of the body, for documents that omit `input_type`.
fn source_type(threads: &[ThreadSpec], body: &BodySpec) -> Result<TypeDesc> {
    let first = match body {
        BodySpec::Word(w) => match w.letters().first() {
            Some(&n) => n,
            None => return Ok(w.anchor().expect("anchor checked").desc.clone()),
        },
        BodySpec::Branch(b) => *b
            .producer
            .letters()
            .first()
            .ok_or_else(|| Error::schema("input_type", "required when the producer is empty"))?,
    };
    threads
        .iter()
        .find(|t| t.id == first)
        .map(|t| t.src.desc.clone())
        .ok_or(Error::UnknownThreadId(first))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Seq,
    Interleaved,
    Pipeline,
    Auto,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Seq, Mode::Interleaved, Mode::Pipeline, Mode::Auto];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Seq => "seq",
            Mode::Interleaved => "interleaved",
            Mode::Pipeline => "pipeline",
            Mode::Auto => "auto",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub output: Vec<Value>,
    pub final_state: StateStore,
}

impl RunOutput {
    /// `{"output": [...], "final_state": {"<id>": value, ...}}`, slots in id order.
    pub fn to_json(&self) -> Json {
        let state: Map<String, Json> = self.final_state.iter().map(|(id, v)| (id.to_string(), value_to_json(v))).collect();
        json!({
            "output": self.output.iter().map(value_to_json).collect::<Vec<_>>(),
            "final_state": state,
        })
    }
}

/// Runs the program on its own input from the initial state.
pub fn run_program(p: &Program, mode: Mode, cfg: &ExecConfig) -> Result<RunOutput> {
    run_with(p, mode, cfg, p.input.clone(), init_state(&p.graph))
}

pub fn run_with(p: &Program, mode: Mode, cfg: &ExecConfig, xs: Vec<Value>, state: StateStore) -> Result<RunOutput> {
    let g = &p.graph;
    let (output, final_state) = match (&p.body, mode) {
        (Body::Word(w), Mode::Seq) => eval_psi_ref(g, w, xs, state)?,
        (Body::Word(w), Mode::Interleaved) => eval_interleaved(g, w, xs, state)?,
        (Body::Word(w), Mode::Pipeline) => run_pipeline(g, w, xs, state, cfg)?,
        (Body::Word(w), Mode::Auto) => run_auto(g, w, xs, state, cfg)?,
        (Body::Branch(b), Mode::Seq) => eval_branch_ref(g, b, xs, state)?,
        (Body::Branch(b), Mode::Interleaved) => eval_branch_interleaved(g, b, xs, state)?,
        (Body::Branch(b), Mode::Pipeline) => run_task_parallel_branch(g, b, xs, state, cfg, SubwordStrategy::Pipeline)?,
        (Body::Branch(b), Mode::Auto) => run_task_parallel_branch(g, b, xs, state, cfg, SubwordStrategy::Auto)?,
    };
    Ok(RunOutput { output, final_state })
}
