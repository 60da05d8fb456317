//! The pull-tab transformation.

use crate::graph::{Allocator, Graph, Node, NodeId};
use crate::rewrite::StepError;

/// Pulls the choice at successor `source_index` of `target` above it.
///
/// Two copies of the target are built, the i-th successor of each replaced
/// by one alternative of the choice; the other successors are shared. A new
/// choice over the copies, carrying the source's identifier, replaces the
/// target. Exactly three nodes are allocated.
pub fn pull_tab(
    g: &Graph,
    target: NodeId,
    source_index: usize,
    alloc: &Allocator,
) -> Result<Graph, StepError> {
    let t = g.node(target).ok_or(StepError::NotInGraph(target))?;
    if t.label.is_choice() {
        return Err(StepError::ChoiceTarget(target));
    }
    let bad = StepError::NotAChoice {
        node: target,
        index: source_index,
    };
    let source = *t.succs.get(source_index).ok_or(bad.clone())?;
    let s = g.node(source).ok_or(bad.clone())?;
    if !s.label.is_choice() {
        return Err(bad);
    }
    let copy = |alt: NodeId| {
        let mut succs = t.succs.clone();
        succs[source_index] = alt;
        (
            alloc.fresh_node(),
            Node::new(t.label.clone(), succs, t.choice),
        )
    };
    let left = copy(s.succs[0]);
    let right = copy(s.succs[1]);
    let top = alloc.fresh_node();
    let choice = Node::new(s.label.clone(), vec![left.0, right.0], s.choice);
    Ok(g.splice(target, [left, right, (top, choice)], top))
}
