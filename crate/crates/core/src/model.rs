//! Fundamental state threads, the multigraph they span, and the global state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::builtins::{self, BuiltinEntry, Hint, Params};
use crate::error::{Error, Result};
use crate::value::{PortType, TypeDesc, Value};

/// Index of a fundamental state thread; doubles as the key of its private state slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreadId(pub u64);

impl fmt::Display for ThreadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for ThreadId {
    fn from(n: u64) -> Self {
        ThreadId(n)
    }
}

/// One fundamental state thread: `(src × state) -> (tgt × state)` with its
/// own private state cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreadSpec {
    pub id: ThreadId,
    pub src: PortType,
    pub tgt: PortType,
    pub state_type: TypeDesc,
    pub init_state: Value,
    pub func: BuiltinEntry,
}

impl ThreadSpec {
    /// Resolves `func` in the builtin registry and checks `init_state` against
    /// the builtin's state type. Port names come from `params` labels when
    /// present.
    pub fn new(id: impl Into<ThreadId>, func: &str, params: Params, init_state: Value) -> Result<Self> {
        let id = id.into();
        let entry = builtins::builtin_with(func, &params)?;
        if !init_state.conforms(&entry.state_type) {
            return Err(Error::type_mismatch(
                format!("initial state of thread {id}"),
                &entry.state_type,
                &init_state,
            ));
        }
        let port = |label: &Option<String>, desc: &TypeDesc| match label {
            Some(name) => PortType::named(name.clone(), desc.clone()),
            None => PortType::anonymous(desc.clone()),
        };
        Ok(ThreadSpec {
            id,
            src: port(&params.src_label, &entry.src),
            tgt: port(&params.tgt_label, &entry.tgt),
            state_type: entry.state_type.clone(),
            init_state,
            func: entry,
        })
    }

    pub fn hint(&self) -> Hint {
        self.func.hint
    }

    /// Applies the transfer function, checking input, output and state types.
    pub fn apply(&self, x: &Value, state: &Value) -> Result<(Value, Value)> {
        if !x.conforms(&self.src.desc) {
            return Err(Error::type_mismatch(format!("input of thread {}", self.id), &self.src.desc, x));
        }
        let (y, next) = self.func.call(x, state)?;
        if !y.conforms(&self.tgt.desc) {
            return Err(Error::type_mismatch(format!("output of thread {}", self.id), &self.tgt.desc, &y));
        }
        if !next.conforms(&self.state_type) {
            return Err(Error::type_mismatch(format!("state of thread {}", self.id), &self.state_type, &next));
        }
        Ok((y, next))
    }
}

/// The directed multigraph whose vertices are ports and whose edges are threads.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Multigraph {
    vertices: BTreeMap<String, PortType>,
    edges: BTreeMap<ThreadId, ThreadSpec>,
}

impl Multigraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &PortType> {
        self.vertices.values()
    }

    pub fn vertex(&self, name: &str) -> Option<&PortType> {
        self.vertices.get(name)
    }

    pub fn edges(&self) -> impl Iterator<Item = &ThreadSpec> {
        self.edges.values()
    }

    pub fn edge(&self, id: ThreadId) -> Option<&ThreadSpec> {
        self.edges.get(&id)
    }

    pub fn thread(&self, id: ThreadId) -> Result<&ThreadSpec> {
        self.edges.get(&id).ok_or(Error::UnknownThreadId(id))
    }

    pub fn src(&self, id: ThreadId) -> Option<&PortType> {
        self.edges.get(&id).map(|t| &t.src)
    }

    pub fn tgt(&self, id: ThreadId) -> Option<&PortType> {
        self.edges.get(&id).map(|t| &t.tgt)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn thread_ids(&self) -> impl Iterator<Item = ThreadId> + '_ {
        self.edges.keys().copied()
    }

    fn add_vertex(&mut self, port: &PortType) -> Result<()> {
        match self.vertices.get(&port.name) {
            Some(existing) if existing.desc != port.desc => Err(Error::ConflictingVertex {
                name: port.name.clone(),
                first: existing.desc.to_string(),
                second: port.desc.to_string(),
            }),
            Some(_) => Ok(()),
            None => {
                self.vertices.insert(port.name.clone(), port.clone());
                Ok(())
            }
        }
    }

    /// Adds a vertex without an incident edge, e.g. the anchor of an empty word.
    pub fn with_vertex(mut self, port: PortType) -> Result<Self> {
        self.add_vertex(&port)?;
        Ok(self)
    }

    /// True when the graph has no directed cycle. Self-loops are cycles;
    /// parallel edges are not.
    pub fn is_acyclic(&self) -> bool {
        let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for t in self.edges.values() {
            succ.entry(t.src.name.as_str()).or_default().push(t.tgt.name.as_str());
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color: BTreeMap<&str, u8> = BTreeMap::new();
        for start in self.vertices.keys() {
            if color.get(start.as_str()).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
            color.insert(start.as_str(), 1);
            while let Some((v, i)) = stack.pop() {
                let next = succ.get(v).and_then(|s| s.get(i)).copied();
                match next {
                    Some(w) => {
                        stack.push((v, i + 1));
                        match color.get(w).copied().unwrap_or(0) {
                            1 => return false,
                            0 => {
                                color.insert(w, 1);
                                stack.push((w, 0));
                            }
                            _ => {}
                        }
                    }
                    None => {
                        color.insert(v, 2);
                    }
                }
            }
        }
        true
    }
}

/// Adds `spec` as a new edge, extending the vertex set with its ports.
pub fn register_thread(spec: ThreadSpec, mut graph: Multigraph) -> Result<Multigraph> {
    if graph.edges.contains_key(&spec.id) {
        return Err(Error::DuplicateThreadId(spec.id));
    }
    builtins::lookup(spec.func.name)?;
    graph.add_vertex(&spec.src)?;
    graph.add_vertex(&spec.tgt)?;
    graph.edges.insert(spec.id, spec);
    Ok(graph)
}

/// The global state: one private slot per thread of the governing graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateStore {
    slots: BTreeMap<ThreadId, Value>,
}

impl StateStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: ThreadId) -> Option<&Value> {
        self.slots.get(&id)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ThreadId, &Value)> {
        self.slots.iter().map(|(k, v)| (*k, v))
    }

    pub fn domain(&self) -> BTreeSet<ThreadId> {
        self.slots.keys().copied().collect()
    }

    pub fn insert(&mut self, id: ThreadId, v: Value) -> Option<Value> {
        self.slots.insert(id, v)
    }

    /// Takes a slot out for exclusive ownership by a worker. The caller must
    /// put it back with [`StateStore::insert`].
    pub fn take(&mut self, id: ThreadId) -> Result<Value> {
        self.slots.remove(&id).ok_or(Error::UnknownThreadId(id))
    }

    /// Moves the given slots into a new store.
    pub fn split_off(&mut self, ids: &BTreeSet<ThreadId>) -> Result<StateStore> {
        let mut part = StateStore::new();
        for &id in ids {
            part.slots.insert(id, self.take(id)?);
        }
        Ok(part)
    }

    pub fn absorb(&mut self, other: StateStore) {
        self.slots.extend(other.slots);
    }
}

impl FromIterator<(ThreadId, Value)> for StateStore {
    fn from_iter<I: IntoIterator<Item = (ThreadId, Value)>>(iter: I) -> Self {
        StateStore { slots: iter.into_iter().collect() }
    }
}

/// The initial global state: every slot set to its thread's initial value.
pub fn init_state(graph: &Multigraph) -> StateStore {
    graph.edges().map(|t| (t.id, t.init_state.clone())).collect()
}
