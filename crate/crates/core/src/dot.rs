//! Graphviz rendering of the thread multigraph.

use std::fmt::Write;

use crate::model::Multigraph;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// One node per vertex (sorted by name), one edge per thread (sorted by id)
/// labelled with its id. `extended` labels edges with the lifted morphism
/// and its builtin instead, and annotates nodes with their types.
pub fn export_dot(graph: &Multigraph, extended: bool) -> String {
    let mut out = String::from("digraph {\n");
    for v in graph.vertices() {
        let label = if extended { format!("{} : {}", v.name, v.desc) } else { v.name.clone() };
        writeln!(out, "  {} [label={}];", quote(&v.name), quote(&label)).unwrap();
    }
    for t in graph.edges() {
        let label = if extended { format!("Φ*_M({})\n{}", t.id, t.func.name) } else { t.id.to_string() };
        writeln!(out, "  {} -> {} [label={}];", quote(&t.src.name), quote(&t.tgt.name), quote(&label)).unwrap();
    }
    out.push_str("}\n");
    out
}
