//! Canonical forms: equality of graphs modulo a renaming of nodes and of
//! choice identifiers.

use std::collections::HashMap;

use super::{ChoiceId, Graph, GraphError, Label, NodeId};

/// One node of a canonical form; its ordinal is its index in the form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CanonEntry {
    pub label: Label,
    pub children: Vec<usize>,
    /// First-occurrence ordinal of the node's choice identifier.
    pub choice: Option<usize>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CanonicalForm(pub Vec<CanonEntry>);

impl CanonicalForm {
    pub fn entries(&self) -> &[CanonEntry] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Numbers nodes in depth-first preorder from the root (successor order) and
/// choice identifiers by first occurrence in the same traversal.
pub fn canonicalize(g: &Graph) -> Result<CanonicalForm, GraphError> {
    let mut ordinal: HashMap<NodeId, usize> = HashMap::with_capacity(g.len());
    let mut done: Vec<bool> = Vec::with_capacity(g.len());
    let mut choices: HashMap<ChoiceId, usize> = HashMap::new();
    let mut entries: Vec<CanonEntry> = Vec::with_capacity(g.len());
    let mut stack: Vec<(NodeId, usize)> = Vec::new();

    let mut enter = |n: NodeId,
                     entries: &mut Vec<CanonEntry>,
                     ordinal: &mut HashMap<NodeId, usize>,
                     done: &mut Vec<bool>|
     -> Result<(), GraphError> {
        let node = g.node(n).ok_or(GraphError::NotInGraph(n))?;
        let choice = node.choice.map(|c| {
            let next = choices.len();
            *choices.entry(c).or_insert(next)
        });
        ordinal.insert(n, entries.len());
        done.push(false);
        entries.push(CanonEntry {
            label: node.label.clone(),
            children: Vec::with_capacity(node.succs.len()),
            choice,
        });
        Ok(())
    };

    enter(g.root(), &mut entries, &mut ordinal, &mut done)?;
    stack.push((g.root(), 0));
    while let Some((n, i)) = stack.pop() {
        let succs = g.succs(n);
        if i < succs.len() {
            stack.push((n, i + 1));
            let s = succs[i];
            match ordinal.get(&s) {
                None => {
                    enter(s, &mut entries, &mut ordinal, &mut done)?;
                    stack.push((s, 0));
                }
                Some(&o) if !done[o] => return Err(GraphError::Cycle(s)),
                Some(_) => {}
            }
        } else {
            let o = ordinal[&n];
            entries[o].children = succs.iter().map(|s| ordinal[s]).collect();
            done[o] = true;
        }
    }
    Ok(CanonicalForm(entries))
}

/// Equality modulo renaming of nodes and choice identifiers.
pub fn graphs_equal(g1: &Graph, g2: &Graph) -> bool {
    match (canonicalize(g1), canonicalize(g2)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}
