//! The closed value universe carried along edges and held in private state.

use std::fmt;
use std::hash::{Hash, Hasher};

/// Structural shape of a port or state type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeDesc {
    Unit,
    Bool,
    Int,
    Float,
    Str,
    List(Box<TypeDesc>),
    Pair(Box<TypeDesc>, Box<TypeDesc>),
    Sum(Box<TypeDesc>, Box<TypeDesc>),
}

impl TypeDesc {
    pub fn list(elem: TypeDesc) -> Self {
        TypeDesc::List(Box::new(elem))
    }

    pub fn pair(a: TypeDesc, b: TypeDesc) -> Self {
        TypeDesc::Pair(Box::new(a), Box::new(b))
    }

    pub fn sum(a: TypeDesc, b: TypeDesc) -> Self {
        TypeDesc::Sum(Box::new(a), Box::new(b))
    }

    /// Parses the canonical textual form, e.g. `int`, `sum(int,int)`, `list(pair(int,str))`.
    pub fn parse(text: &str) -> Option<TypeDesc> {
        let mut p = TypeParser { src: text.as_bytes(), pos: 0 };
        let t = p.parse_type()?;
        p.skip_ws();
        (p.pos == p.src.len()).then_some(t)
    }
}

impl fmt::Display for TypeDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeDesc::Unit => f.write_str("unit"),
            TypeDesc::Bool => f.write_str("bool"),
            TypeDesc::Int => f.write_str("int"),
            TypeDesc::Float => f.write_str("float"),
            TypeDesc::Str => f.write_str("str"),
            TypeDesc::List(e) => write!(f, "list({e})"),
            TypeDesc::Pair(a, b) => write!(f, "pair({a},{b})"),
            TypeDesc::Sum(a, b) => write!(f, "sum({a},{b})"),
        }
    }
}

struct TypeParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl TypeParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Option<()> {
        self.skip_ws();
        (self.src.get(self.pos) == Some(&c)).then(|| self.pos += 1)
    }

    fn ident(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn parse_type(&mut self) -> Option<TypeDesc> {
        let t = match self.ident() {
            "unit" => TypeDesc::Unit,
            "bool" => TypeDesc::Bool,
            "int" => TypeDesc::Int,
            "float" => TypeDesc::Float,
            "str" => TypeDesc::Str,
            "list" => {
                self.eat(b'(')?;
                let e = self.parse_type()?;
                self.eat(b')')?;
                TypeDesc::list(e)
            }
            kw @ ("pair" | "sum") => {
                let is_pair = kw == "pair";
                self.eat(b'(')?;
                let a = self.parse_type()?;
                self.eat(b',')?;
                let b = self.parse_type()?;
                self.eat(b')')?;
                if is_pair {
                    TypeDesc::pair(a, b)
                } else {
                    TypeDesc::sum(a, b)
                }
            }
            _ => return None,
        };
        Some(t)
    }
}

/// A vertex of the thread multigraph: a named port with a structural type.
///
/// Vertices are identified by name. Two ports are *compatible* when their
/// descriptors agree, regardless of name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortType {
    pub name: String,
    pub desc: TypeDesc,
}

impl PortType {
    /// A port whose name is the canonical rendering of its descriptor.
    pub fn anonymous(desc: TypeDesc) -> Self {
        PortType { name: desc.to_string(), desc }
    }

    pub fn named(name: impl Into<String>, desc: TypeDesc) -> Self {
        PortType { name: name.into(), desc }
    }

    pub fn compatible(&self, other: &PortType) -> bool {
        self.desc == other.desc
    }

    /// True when the name is just the descriptor text.
    pub fn is_anonymous(&self) -> bool {
        self.name == self.desc.to_string()
    }
}

impl fmt::Display for PortType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A runtime value.
///
/// Equality is structural and total: floats compare by bit pattern, so
/// `NaN == NaN` and `0.0 != -0.0`. That is the notion of "bit-exact" used by
/// every executor comparison.
#[derive(Debug, Clone)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
    Pair(Box<Value>, Box<Value>),
    Inl(Box<Value>),
    Inr(Box<Value>),
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Self {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn inl(v: Value) -> Self {
        Value::Inl(Box::new(v))
    }

    pub fn inr(v: Value) -> Self {
        Value::Inr(Box::new(v))
    }

    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn ints(xs: impl IntoIterator<Item = i64>) -> Vec<Value> {
        xs.into_iter().map(Value::Int).collect()
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Checks that the value inhabits `desc`. Lists must be homogeneous.
    pub fn conforms(&self, desc: &TypeDesc) -> bool {
        match (self, desc) {
            (Value::Unit, TypeDesc::Unit)
            | (Value::Bool(_), TypeDesc::Bool)
            | (Value::Int(_), TypeDesc::Int)
            | (Value::Float(_), TypeDesc::Float)
            | (Value::Str(_), TypeDesc::Str) => true,
            (Value::List(xs), TypeDesc::List(e)) => xs.iter().all(|x| x.conforms(e)),
            (Value::Pair(a, b), TypeDesc::Pair(ta, tb)) => a.conforms(ta) && b.conforms(tb),
            (Value::Inl(v), TypeDesc::Sum(l, _)) => v.conforms(l),
            (Value::Inr(v), TypeDesc::Sum(_, r)) => v.conforms(r),
            _ => false,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Value::Unit => 0,
            Value::Bool(_) => 1,
            Value::Int(_) => 2,
            Value::Float(_) => 3,
            Value::Str(_) => 4,
            Value::List(_) => 5,
            Value::Pair(..) => 6,
            Value::Inl(_) => 7,
            Value::Inr(_) => 8,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Unit, Value::Unit) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::List(a), Value::List(b)) => a == b,
            (Value::Pair(a1, b1), Value::Pair(a2, b2)) => a1 == a2 && b1 == b2,
            (Value::Inl(a), Value::Inl(b)) | (Value::Inr(a), Value::Inr(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u8(self.tag());
        match self {
            Value::Unit => {}
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Float(x) => x.to_bits().hash(state),
            Value::Str(s) => s.hash(state),
            Value::List(xs) => xs.hash(state),
            Value::Pair(a, b) => {
                a.hash(state);
                b.hash(state);
            }
            Value::Inl(v) | Value::Inr(v) => v.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::List(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
            Value::Pair(a, b) => write!(f, "({a},{b})"),
            Value::Inl(v) => write!(f, "inl {v}"),
            Value::Inr(v) => write!(f, "inr {v}"),
        }
    }
}
