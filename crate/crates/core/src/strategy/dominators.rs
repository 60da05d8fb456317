use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{Graph, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DominatorError {
    #[error("the root has no proper dominator")]
    Root,
    #[error("node {0} is not reachable")]
    Unreachable(NodeId),
}

fn postorder(g: &Graph) -> Vec<NodeId> {
    let mut order = Vec::with_capacity(g.len());
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![(g.root(), 0usize)];
    seen.insert(g.root());
    while let Some((n, i)) = stack.pop() {
        let succs = g.succs(n);
        if i < succs.len() {
            stack.push((n, i + 1));
            let s = succs[i];
            if seen.insert(s) {
                stack.push((s, 0));
            }
        } else {
            order.push(n);
        }
    }
    order
}

/// Immediate dominators of every node but the root, by iterative dataflow
/// over reverse postorder (Cooper, Harvey and Kennedy).
pub fn dominator_tree(g: &Graph) -> HashMap<NodeId, NodeId> {
    let post = postorder(g);
    let index: HashMap<NodeId, usize> = post.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let preds = g.preds();
    let root = g.root();
    let mut idom: Vec<Option<usize>> = vec![None; post.len()];
    let r = index[&root];
    idom[r] = Some(r);

    let intersect = |idom: &[Option<usize>], mut a: usize, mut b: usize| {
        while a != b {
            while a < b {
                a = idom[a].expect("processed");
            }
            while b < a {
                b = idom[b].expect("processed");
            }
        }
        a
    };

    let mut changed = true;
    while changed {
        changed = false;
        for n in post.iter().rev() {
            let b = index[n];
            if b == r {
                continue;
            }
            let mut new = None;
            for p in &preds[n] {
                let pi = index[p];
                if idom[pi].is_none() {
                    continue;
                }
                new = Some(match new {
                    None => pi,
                    Some(cur) => intersect(&idom, pi, cur),
                });
            }
            if new.is_some() && idom[b] != new {
                idom[b] = new;
                changed = true;
            }
        }
    }
    post.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(i, n)| (*n, post[idom[i].expect("reachable")]))
        .collect()
}

/// The closest proper dominator of `n`.
pub fn immediate_dominator(g: &Graph, n: NodeId) -> Result<NodeId, DominatorError> {
    if n == g.root() {
        return Err(DominatorError::Root);
    }
    dominator_tree(g)
        .get(&n)
        .copied()
        .ok_or(DominatorError::Unreachable(n))
}
