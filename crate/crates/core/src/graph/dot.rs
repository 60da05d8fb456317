use std::fmt::Write;

use super::Graph;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders `g` as a Graphviz digraph. Edge labels give successor positions
/// (1-based); choice nodes show their identifier.
pub fn dot_export(g: &Graph) -> String {
    let mut out = String::from("digraph G {\n  node [shape=plaintext];\n");
    let order = g.preorder();
    for n in &order {
        let node = g.node(*n).expect("preorder yields graph nodes");
        let mut label = escape(node.label.name());
        if let Some(c) = node.choice {
            let _ = write!(label, " [{c}]");
        }
        let root = if *n == g.root() { ", shape=box" } else { "" };
        let _ = writeln!(out, "  n{n} [label=\"{label}\"{root}];");
    }
    for n in &order {
        for (i, s) in g.succs(*n).iter().enumerate() {
            let _ = writeln!(out, "  n{n} -> n{s} [label=\"{}\"];", i + 1);
        }
    }
    out.push_str("}\n");
    out
}
