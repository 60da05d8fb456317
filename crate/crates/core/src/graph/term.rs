use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use super::{Allocator, ChoiceId, GraphError, NodeId, Symbol};

/// Node label: a signature symbol, or a variable (rule graphs only).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Label {
    Sym(Symbol),
    Var(Arc<str>),
}

impl Label {
    pub fn arity(&self) -> usize {
        match self {
            Label::Sym(s) => s.arity(),
            Label::Var(_) => 0,
        }
    }

    pub fn symbol(&self) -> Option<&Symbol> {
        match self {
            Label::Sym(s) => Some(s),
            Label::Var(_) => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Label::Sym(s) => s.name(),
            Label::Var(v) => v,
        }
    }

    pub fn is_choice(&self) -> bool {
        matches!(self, Label::Sym(s) if s.is_choice())
    }

    pub fn is_constructor(&self) -> bool {
        matches!(self, Label::Sym(s) if s.is_constructor())
    }

    pub fn is_operation(&self) -> bool {
        matches!(self, Label::Sym(s) if s.is_operation())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Label::Var(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<Symbol> for Label {
    fn from(s: Symbol) -> Self {
        Label::Sym(s)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Node {
    pub label: Label,
    pub succs: Vec<NodeId>,
    pub choice: Option<ChoiceId>,
}

impl Node {
    pub fn new(label: Label, succs: Vec<NodeId>, choice: Option<ChoiceId>) -> Self {
        Node {
            label,
            succs,
            choice,
        }
    }
}

/// A single-rooted, acyclic term graph.
#[derive(Clone, Debug)]
pub struct Graph {
    root: NodeId,
    nodes: BTreeMap<NodeId, Arc<Node>>,
}

impl Graph {
    #[allow(dead_code)]
    pub(crate) fn from_parts(root: NodeId, nodes: BTreeMap<NodeId, Arc<Node>>) -> Self {
        Graph { root, nodes }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains_key(&n)
    }

    pub fn node(&self, n: NodeId) -> Option<&Node> {
        self.nodes.get(&n).map(|a| a.as_ref())
    }

    /// Panics if `n` is absent; use [`Graph::node`] for a checked lookup.
    pub fn label(&self, n: NodeId) -> &Label {
        &self.nodes[&n].label
    }

    pub fn succs(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[&n].succs
    }

    pub fn choice_id(&self, n: NodeId) -> Option<ChoiceId> {
        self.nodes.get(&n).and_then(|node| node.choice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().map(|(id, n)| (*id, n.as_ref()))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Distinct choice identifiers decorating nodes of the graph.
    pub fn choice_ids(&self) -> BTreeSet<ChoiceId> {
        self.nodes.values().filter_map(|n| n.choice).collect()
    }

    pub fn choice_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.iter()
            .filter(|(_, n)| n.label.is_choice())
            .map(|(id, _)| id)
    }

    pub fn has_choice(&self) -> bool {
        self.nodes.values().any(|n| n.label.is_choice())
    }

    /// Predecessor lists, with one entry per edge, in successor order.
    pub fn preds(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut preds: BTreeMap<NodeId, Vec<NodeId>> =
            self.nodes.keys().map(|k| (*k, Vec::new())).collect();
        for (id, node) in &self.nodes {
            for s in &node.succs {
                preds.entry(*s).or_default().push(*id);
            }
        }
        preds
    }

    /// Number of edges entering each node.
    pub fn in_degrees(&self) -> BTreeMap<NodeId, usize> {
        let mut deg: BTreeMap<NodeId, usize> = self.nodes.keys().map(|k| (*k, 0)).collect();
        for node in self.nodes.values() {
            for s in &node.succs {
                *deg.entry(*s).or_default() += 1;
            }
        }
        deg
    }

    /// Nodes reachable from `from`, including `from`.
    pub fn reachable_from(&self, from: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if let Some(node) = self.nodes.get(&n) {
                stack.extend(node.succs.iter().copied());
            }
        }
        seen
    }

    /// Nodes from which `target` is reachable, including `target` itself.
    pub fn ancestors_of(&self, target: NodeId) -> BTreeSet<NodeId> {
        let preds = self.preds();
        let mut seen = BTreeSet::new();
        let mut stack = vec![target];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if let Some(ps) = preds.get(&n) {
                stack.extend(ps.iter().copied());
            }
        }
        seen
    }

    /// Nodes in depth-first preorder from the root, following successor order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut seen = HashSet::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            order.push(n);
            if let Some(node) = self.nodes.get(&n) {
                stack.extend(node.succs.iter().rev().copied());
            }
        }
        order
    }

    /// The subgraph rooted at `n`.
    pub fn subgraph(&self, n: NodeId) -> Result<Graph, GraphError> {
        if !self.contains(n) {
            return Err(GraphError::NotInGraph(n));
        }
        let keep = self.reachable_from(n);
        let nodes = self
            .nodes
            .iter()
            .filter(|(id, _)| keep.contains(id))
            .map(|(id, node)| (*id, Arc::clone(node)))
            .collect();
        Ok(Graph { root: n, nodes })
    }

    /// Checks every structural invariant of a rooted term graph.
    pub fn validate(&self) -> Result<(), GraphError> {
        if !self.nodes.contains_key(&self.root) {
            return Err(GraphError::NotInGraph(self.root));
        }
        let mut vars = HashSet::new();
        for (id, node) in &self.nodes {
            let arity = node.label.arity();
            if node.succs.len() != arity {
                return Err(GraphError::ArityMismatch {
                    symbol: node.label.name().to_string(),
                    expected: arity,
                    found: node.succs.len(),
                });
            }
            for s in &node.succs {
                if !self.nodes.contains_key(s) {
                    return Err(GraphError::DanglingSuccessor {
                        node: *id,
                        succ: *s,
                    });
                }
            }
            if node.label.is_choice() != node.choice.is_some() {
                return Err(GraphError::Decoration(*id));
            }
            if let Label::Var(v) = &node.label {
                if !vars.insert(v.clone()) {
                    return Err(GraphError::DuplicateVariable(v.to_string()));
                }
            }
        }
        let reach = self.reachable_from(self.root);
        if let Some(n) = self.nodes.keys().find(|k| !reach.contains(k)) {
            return Err(GraphError::Unreachable(*n));
        }
        self.check_acyclic()
    }

    pub fn check_acyclic(&self) -> Result<(), GraphError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<NodeId, u8> = BTreeMap::new();
        let mut stack: Vec<(NodeId, usize)> = vec![(self.root, 0)];
        state.insert(self.root, 1);
        while let Some((n, i)) = stack.pop() {
            let succs = &self.nodes[&n].succs;
            if i < succs.len() {
                stack.push((n, i + 1));
                let s = succs[i];
                match state.get(&s).copied().unwrap_or(0) {
                    0 => {
                        state.insert(s, 1);
                        stack.push((s, 0));
                    }
                    1 => return Err(GraphError::Cycle(s)),
                    _ => {}
                }
            } else {
                state.insert(n, 2);
            }
        }
        Ok(())
    }

    pub fn is_ground(&self) -> bool {
        self.nodes.values().all(|n| !n.label.is_var())
    }

    /// True when every node is constructor-labeled: a value.
    pub fn is_value(&self) -> bool {
        self.nodes.values().all(|n| n.label.is_constructor())
    }

    /// Replaces the node `at` by the graph rooted at `new_root`.
    ///
    /// `new_nodes` are inserted (they may refer to nodes of `self`), every edge
    /// into `at` is redirected to `new_root`, and unreachable nodes are dropped.
    /// Surviving nodes keep their labels and decorations.
    pub(crate) fn splice<I>(&self, at: NodeId, new_nodes: I, new_root: NodeId) -> Graph
    where
        I: IntoIterator<Item = (NodeId, Node)>,
    {
        let mut nodes = self.nodes.clone();
        for (id, node) in new_nodes {
            nodes.insert(id, Arc::new(node));
        }
        if new_root != at {
            for node in nodes.values_mut() {
                if node.succs.contains(&at) {
                    let n = Arc::make_mut(node);
                    for s in n.succs.iter_mut() {
                        if *s == at {
                            *s = new_root;
                        }
                    }
                }
            }
            nodes.remove(&at);
        }
        let root = if self.root == at { new_root } else { self.root };
        let mut g = Graph { root, nodes };
        g.collect_garbage();
        g
    }

    /// Adds `new_nodes` (possibly overriding existing ids), moves the root
    /// to `root` and drops what became unreachable.
    pub(crate) fn rebuilt<I>(&self, root: NodeId, new_nodes: I) -> Graph
    where
        I: IntoIterator<Item = (NodeId, Node)>,
    {
        let mut nodes = self.nodes.clone();
        for (id, node) in new_nodes {
            nodes.insert(id, Arc::new(node));
        }
        let mut g = Graph { root, nodes };
        g.collect_garbage();
        g
    }

    pub(crate) fn collect_garbage(&mut self) {
        if self.nodes.is_empty() {
            return;
        }
        let reach = self.reachable_from(self.root);
        if reach.len() != self.nodes.len() {
            self.nodes.retain(|id, _| reach.contains(id));
        }
    }

    /// `g[n <- h]`: redirects every edge into `n` to the root of `h`.
    ///
    /// Nodes of `h` are either fresh or shared with `self`; shared nodes must
    /// agree on label, successors and decoration.
    pub fn replace_at(&self, n: NodeId, h: &Graph) -> Result<Graph, GraphError> {
        if !self.contains(n) {
            return Err(GraphError::NotInGraph(n));
        }
        let mut fresh = Vec::new();
        for (id, node) in h.iter() {
            match self.node(id) {
                Some(existing) if id == n => {
                    // The replaced node may only reappear unchanged as the
                    // root of an identity replacement.
                    if h.root != n || existing != node {
                        return Err(GraphError::Cycle(n));
                    }
                }
                Some(existing) => {
                    if existing != node {
                        return Err(GraphError::InconsistentSharing(id));
                    }
                }
                None => fresh.push((id, node.clone())),
            }
        }
        let out = self.splice(n, fresh, h.root);
        out.check_acyclic()?;
        Ok(out)
    }

    /// Assigns fresh, pairwise-distinct choice identifiers to every choice
    /// node, producing a one-to-one decoration.
    pub fn redecorate(&self, alloc: &Allocator) -> Graph {
        let mut nodes = self.nodes.clone();
        for node in nodes.values_mut() {
            if node.label.is_choice() {
                Arc::make_mut(node).choice = Some(alloc.fresh_choice());
            }
        }
        Graph {
            root: self.root,
            nodes,
        }
    }
}

/// Incremental construction of graphs with fresh node ids.
pub struct GraphBuilder<'a> {
    alloc: &'a Allocator,
    nodes: BTreeMap<NodeId, Arc<Node>>,
}

impl<'a> GraphBuilder<'a> {
    pub fn new(alloc: &'a Allocator) -> Self {
        GraphBuilder {
            alloc,
            nodes: BTreeMap::new(),
        }
    }

    pub fn alloc(&self) -> &'a Allocator {
        self.alloc
    }

    /// Adds a node labeled by `sym`; choice nodes get a fresh identifier.
    pub fn add(&mut self, sym: &Symbol, succs: Vec<NodeId>) -> NodeId {
        let choice = sym.is_choice().then(|| self.alloc.fresh_choice());
        self.add_node(Label::Sym(sym.clone()), succs, choice)
    }

    pub fn add_var(&mut self, name: &str) -> NodeId {
        self.add_node(Label::Var(name.into()), Vec::new(), None)
    }

    pub fn add_node(
        &mut self,
        label: Label,
        succs: Vec<NodeId>,
        choice: Option<ChoiceId>,
    ) -> NodeId {
        let id = self.alloc.fresh_node();
        self.nodes
            .insert(id, Arc::new(Node::new(label, succs, choice)));
        id
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id).map(|n| n.as_ref())
    }

    /// Drops nodes unreachable from `root` and validates the result.
    pub fn finish(self, root: NodeId) -> Result<Graph, GraphError> {
        let mut g = Graph {
            root,
            nodes: self.nodes,
        };
        if !g.contains(root) {
            return Err(GraphError::NotInGraph(root));
        }
        g.collect_garbage();
        g.validate()?;
        Ok(g)
    }

    /// Like [`finish`](Self::finish) for several roots over the same nodes;
    /// the resulting graphs share the nodes they have in common.
    pub fn finish_many(self, roots: &[NodeId]) -> Result<Vec<Graph>, GraphError> {
        roots
            .iter()
            .map(|r| {
                GraphBuilder {
                    alloc: self.alloc,
                    nodes: self.nodes.clone(),
                }
                .finish(*r)
            })
            .collect()
    }
}

impl PartialEq for Graph {
    /// Structural identity (same node ids). Use
    /// [`graphs_equal`](super::graphs_equal) for equality modulo renaming.
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.nodes == other.nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graphs_equal, parse_linear, print_linear, Signature};

    fn sig() -> Signature {
        Signature::new()
            .with_constructor("a", 0)
            .with_constructor("b", 0)
            .with_constructor("c", 0)
            .with_operation("f", 1)
            .with_operation("g", 2)
    }

    #[test]
    fn replace_leaf() {
        let alloc = Allocator::new();
        let g = parse_linear("f(n:a)", &sig(), &alloc).unwrap();
        let n = g.succs(g.root())[0];
        let h = parse_linear("b", &sig(), &alloc).unwrap();
        let out = g.replace_at(n, &h).unwrap();
        out.validate().unwrap();
        assert_eq!(print_linear(&out), "f(b)");
    }

    #[test]
    fn replace_preserves_sharing() {
        let alloc = Allocator::new();
        let g = parse_linear("(,)(n:a, n)", &sig(), &alloc).unwrap();
        let n = g.succs(g.root())[0];
        let h = parse_linear("c", &sig(), &alloc).unwrap();
        let out = g.replace_at(n, &h).unwrap();
        out.validate().unwrap();
        let expected = parse_linear("(,)(m:c, m)", &sig(), &alloc).unwrap();
        assert!(graphs_equal(&out, &expected));
        assert_eq!(out.succs(out.root())[0], out.succs(out.root())[1]);
    }

    #[test]
    fn replace_root_by_inner_subgraph_collects_garbage() {
        let alloc = Allocator::new();
        let g = parse_linear("?(n:a, b)", &sig(), &alloc).unwrap();
        let n = g.succs(g.root())[0];
        let h = g.subgraph(n).unwrap();
        let out = g.replace_at(g.root(), &h).unwrap();
        out.validate().unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.root(), n);
        assert_eq!(print_linear(&out), "a");
    }

    #[test]
    fn replace_missing_node_fails() {
        let alloc = Allocator::new();
        let g = parse_linear("a", &sig(), &alloc).unwrap();
        let h = parse_linear("b", &sig(), &alloc).unwrap();
        let bogus = alloc.fresh_node();
        assert_eq!(g.replace_at(bogus, &h), Err(GraphError::NotInGraph(bogus)));
    }

    #[test]
    fn replace_does_not_mutate_input() {
        let alloc = Allocator::new();
        let g = parse_linear("g(n:f(a), n)", &sig(), &alloc).unwrap();
        let before = crate::graph::canonicalize(&g).unwrap();
        let n = g.succs(g.root())[0];
        let h = parse_linear("b", &sig(), &alloc).unwrap();
        let _ = g.replace_at(n, &h).unwrap();
        assert_eq!(crate::graph::canonicalize(&g).unwrap(), before);
    }

    #[test]
    fn validate_rejects_bad_arity_and_decoration() {
        let alloc = Allocator::new();
        let s = sig();
        let mut b = GraphBuilder::new(&alloc);
        let a = b.add(s.get("a").unwrap(), vec![]);
        let f = b.add_node(Label::Sym(s.get("g").unwrap().clone()), vec![a], None);
        assert!(matches!(b.finish(f), Err(GraphError::ArityMismatch { .. })));

        let mut b = GraphBuilder::new(&alloc);
        let a = b.add(s.get("a").unwrap(), vec![]);
        let c = b.add(s.get("b").unwrap(), vec![]);
        let q = b.add_node(Label::Sym(Symbol::choice()), vec![a, c], None);
        assert_eq!(b.finish(q), Err(GraphError::Decoration(q)));
    }
}
