//! Single rewrite steps and needed-redex search through definitional trees.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{Allocator, ChoiceId, Graph, Label, Node, NodeId};
use crate::program::{ChoiceRule, DefTree, Pattern, Program, Rule, RuleRef};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum StepKind {
    Rewrite,
    PullTab,
}

/// One step of a computation. For a pull-tab, `node` is the target and
/// `index` the position of the pulled choice among its successors.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Step {
    pub kind: StepKind,
    pub node: NodeId,
    pub rule: Option<RuleRef>,
    pub choice: Option<ChoiceId>,
    pub index: Option<usize>,
}

impl Step {
    pub fn rewrite(node: NodeId, rule: RuleRef, choice: Option<ChoiceId>) -> Step {
        Step {
            kind: StepKind::Rewrite,
            node,
            rule: Some(rule),
            choice,
            index: None,
        }
    }

    pub fn pull_tab(target: NodeId, index: usize, choice: ChoiceId) -> Step {
        Step {
            kind: StepKind::PullTab,
            node: target,
            rule: None,
            choice: Some(choice),
            index: Some(index),
        }
    }

    /// A rewrite by C1 or C2.
    pub fn is_choice_step(&self) -> bool {
        self.kind == StepKind::Rewrite && self.rule.as_ref().and_then(|r| r.choice_rule()).is_some()
    }

    pub fn choice_rule(&self) -> Option<ChoiceRule> {
        self.rule.as_ref().and_then(|r| r.choice_rule())
    }
}

/// Trace line: `<kind> @<node> [rule] [choice-id]`.
impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            StepKind::Rewrite => "rewrite",
            StepKind::PullTab => "pulltab",
        };
        write!(f, "{kind} @{}", self.node)?;
        if let Some(r) = &self.rule {
            write!(f, " {r}")?;
        }
        if let Some(c) = self.choice {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

impl FromStr for Step {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut words = s.split_whitespace();
        let kind = match words.next() {
            Some("rewrite") => StepKind::Rewrite,
            Some("pulltab") => StepKind::PullTab,
            _ => return Err(format!("bad step kind in `{s}`")),
        };
        let node = words
            .next()
            .and_then(|w| w.strip_prefix('@'))
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| format!("bad node in `{s}`"))?;
        let mut step = Step {
            kind,
            node,
            rule: None,
            choice: None,
            index: None,
        };
        for w in words {
            if w.starts_with('?') {
                step.choice = Some(w.parse().map_err(|_| format!("bad choice id `{w}`"))?);
            } else {
                step.rule = Some(w.parse()?);
            }
        }
        Ok(step)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepError {
    #[error("node {0} is not in the graph")]
    NotInGraph(NodeId),
    #[error("rule {rule} does not match at node {node}")]
    NoMatch { node: NodeId, rule: RuleRef },
    #[error("unknown rule {0}")]
    UnknownRule(RuleRef),
    #[error("pull-tab target {0} is a choice")]
    ChoiceTarget(NodeId),
    #[error("successor {index} of node {node} is not a choice")]
    NotAChoice { node: NodeId, index: usize },
}

fn match_pattern(
    g: &Graph,
    n: NodeId,
    p: &Pattern,
    binding: &mut HashMap<Arc<str>, NodeId>,
) -> bool {
    match p {
        Pattern::Var(v) => {
            binding.insert(v.clone(), n);
            true
        }
        Pattern::App(sym, args) => {
            let Some(node) = g.node(n) else {
                return false;
            };
            if node.label.symbol() != Some(sym) {
                return false;
            }
            args.iter()
                .zip(node.succs.iter())
                .all(|(a, s)| match_pattern(g, *s, a, binding))
        }
    }
}

/// Replaces the redex at `at` by a fresh instance of the rule's rhs.
///
/// Variables are bound to the matched argument nodes, so sharing survives
/// the step. Constructed nodes get fresh ids and constructed choices fresh
/// identifiers; every other node keeps its id and decoration.
pub fn rewrite_step(
    g: &Graph,
    at: NodeId,
    rule: &Rule,
    alloc: &Allocator,
) -> Result<Graph, StepError> {
    if !g.contains(at) {
        return Err(StepError::NotInGraph(at));
    }
    let mut binding = HashMap::new();
    if !match_pattern(g, at, rule.pattern(), &mut binding) {
        return Err(StepError::NoMatch {
            node: at,
            rule: rule.reference().clone(),
        });
    }
    let rhs = rule.rhs();
    let mut map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for (id, node) in rhs.iter() {
        let target = match &node.label {
            Label::Var(v) => binding[v],
            _ => alloc.fresh_node(),
        };
        map.insert(id, target);
    }
    let fresh = rhs
        .iter()
        .filter(|(_, n)| !n.label.is_var())
        .map(|(id, node)| {
            let choice = node.label.is_choice().then(|| alloc.fresh_choice());
            let succs = node.succs.iter().map(|s| map[s]).collect();
            (map[&id], Node::new(node.label.clone(), succs, choice))
        });
    let fresh: Vec<_> = fresh.collect();
    Ok(g.splice(at, fresh, map[&rhs.root()]))
}

/// Applies `step`, looking its rule up in `p`.
pub fn apply_step(
    p: &Program,
    g: &Graph,
    step: &Step,
    alloc: &Allocator,
) -> Result<Graph, StepError> {
    match step.kind {
        StepKind::Rewrite => {
            let r = step.rule.as_ref().expect("rewrite steps name a rule");
            let rule = p.rule(r).ok_or_else(|| StepError::UnknownRule(r.clone()))?;
            rewrite_step(g, step.node, rule, alloc)
        }
        StepKind::PullTab => crate::pulltab::pull_tab(g, step.node, step.index.unwrap_or(0), alloc),
    }
}

/// Reduces the choice node `n` by `c`.
pub fn choice_step(
    p: &Program,
    g: &Graph,
    n: NodeId,
    c: ChoiceRule,
    alloc: &Allocator,
) -> Result<(Graph, Step), StepError> {
    let step = Step::rewrite(n, RuleRef::Choice(c), g.choice_id(n));
    Ok((rewrite_step(g, n, p.choice_rule(c), alloc)?, step))
}

/// The instantiated right-hand side of the nullary `main` rule.
pub fn main_graph(p: &Program, alloc: &Allocator) -> Option<Graph> {
    let rule = p.main_rule()?;
    let mut b = crate::graph::GraphBuilder::new(alloc);
    let call = b.add(rule.op(), Vec::new());
    let g = b.finish(call).expect("a nullary call is well formed");
    rewrite_step(&g, call, rule, alloc).ok()
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum HeadResult {
    /// The focus is constructor-rooted.
    Value(NodeId),
    /// The focus is a normal form headed by an operation.
    Failure,
    ChoiceAtRoot(NodeId),
    NeedsStep(Step),
}

/// Finds the step needed to bring `focus` to head normal form.
///
/// A choice at the inductive position of a branch yields a pull-tab whose
/// target is the node holding that choice as successor.
pub fn head_step(p: &Program, g: &Graph, focus: NodeId) -> HeadResult {
    let label = g.label(focus);
    match label {
        Label::Sym(s) if s.is_constructor() => HeadResult::Value(focus),
        Label::Sym(s) if s.is_choice() => HeadResult::ChoiceAtRoot(focus),
        Label::Sym(s) => match p.tree(s.name()) {
            Some(t) => dispatch(p, g, focus, t),
            None => HeadResult::Failure,
        },
        Label::Var(_) => HeadResult::Failure,
    }
}

fn dispatch(p: &Program, g: &Graph, focus: NodeId, tree: &DefTree) -> HeadResult {
    match tree {
        DefTree::Exempt { .. } => HeadResult::Failure,
        DefTree::Rule { pattern, rule } => {
            let op = match pattern {
                Pattern::App(s, _) => s.name_arc(),
                Pattern::Var(_) => unreachable!("tree patterns are calls"),
            };
            HeadResult::NeedsStep(Step::rewrite(
                focus,
                RuleRef::User { op, index: *rule },
                None,
            ))
        }
        DefTree::Branch {
            position, children, ..
        } => {
            let (last, path) = position
                .split_last()
                .expect("inductive positions are arguments");
            let mut parent = focus;
            for i in path {
                parent = g.succs(parent)[*i];
            }
            let m = g.succs(parent)[*last];
            match g.label(m) {
                Label::Sym(s) if s.is_constructor() => {
                    match children.iter().find(|(c, _)| c == s) {
                        Some((_, child)) => dispatch(p, g, focus, child),
                        None => HeadResult::Failure,
                    }
                }
                Label::Sym(s) if s.is_choice() => HeadResult::NeedsStep(Step::pull_tab(
                    parent,
                    *last,
                    g.choice_id(m).expect("choice nodes are decorated"),
                )),
                Label::Sym(_) => match head_step(p, g, m) {
                    HeadResult::Value(_) | HeadResult::ChoiceAtRoot(_) => {
                        unreachable!("operation-rooted focus")
                    }
                    other => other,
                },
                Label::Var(_) => HeadResult::Failure,
            }
        }
    }
}

/// The step needed to bring the whole graph to constructor normal form:
/// the leftmost-outermost non-constructor node of the constructor spine is
/// brought to head normal form. A spine choice below the root yields a
/// pull-tab targeting its constructor parent.
pub fn normal_form_step(p: &Program, g: &Graph) -> HeadResult {
    let root = g.root();
    if !g.label(root).is_constructor() {
        return head_step(p, g, root);
    }
    let mut stack = vec![root];
    let mut seen = std::collections::HashSet::new();
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        let succs = g.succs(n);
        for (i, s) in succs.iter().enumerate() {
            match g.label(*s) {
                Label::Sym(sym) if sym.is_constructor() => {}
                Label::Sym(sym) if sym.is_choice() => {
                    return HeadResult::NeedsStep(Step::pull_tab(
                        n,
                        i,
                        g.choice_id(*s).expect("choice nodes are decorated"),
                    ))
                }
                _ => return head_step(p, g, *s),
            }
        }
        stack.extend(succs.iter().rev().copied());
    }
    HeadResult::Value(root)
}

/// Every redex of `g`: operation nodes whose tree dispatch reaches a rule
/// without evaluation, and both choice rules at each choice node.
pub fn redexes(p: &Program, g: &Graph) -> Vec<Step> {
    let mut out = Vec::new();
    for n in g.preorder() {
        match g.label(n) {
            Label::Sym(s) if s.is_choice() => {
                for c in [ChoiceRule::C1, ChoiceRule::C2] {
                    out.push(Step::rewrite(n, RuleRef::Choice(c), g.choice_id(n)));
                }
            }
            Label::Sym(s) if s.is_operation() => {
                if let Some(t) = p.tree(s.name()) {
                    if let Some(r) = redex_rule(g, n, t) {
                        out.push(Step::rewrite(
                            n,
                            RuleRef::User {
                                op: s.name_arc(),
                                index: r,
                            },
                            None,
                        ));
                    }
                }
            }
            _ => {}
        }
    }
    out
}

fn redex_rule(g: &Graph, n: NodeId, tree: &DefTree) -> Option<usize> {
    match tree {
        DefTree::Rule { rule, .. } => Some(*rule),
        DefTree::Exempt { .. } => None,
        DefTree::Branch {
            position, children, ..
        } => {
            let mut m = n;
            for i in position {
                m = g.succs(m)[*i];
            }
            let s = g.label(m).symbol()?;
            let (_, child) = children.iter().find(|(c, _)| c == s)?;
            redex_rule(g, n, child)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graphs_equal, parse_linear, print_linear};

    const FLIP: &str = "data Bit = 0 | 1\nflip 0 = 1\nflip 1 = 0\ncoin = 0 ? 1\nmain = (flip x, flip x) where x = coin\n";

    fn setup() -> (Program, Allocator) {
        let alloc = Allocator::new();
        (Program::from_source(FLIP, &alloc).unwrap(), alloc)
    }

    #[test]
    fn coin_gets_fresh_choice() {
        let (p, alloc) = setup();
        let g = parse_linear("coin", p.signature(), &alloc).unwrap();
        let before = alloc.choices_issued();
        let rule = &p.rules_of("coin")[0];
        let h = rewrite_step(&g, g.root(), rule, &alloc).unwrap();
        assert_eq!(print_linear(&h), "?_a(0,1)");
        let id = h.choice_id(h.root()).unwrap();
        assert!(id.raw() >= before);
        assert_ne!(Some(id), rule.rhs().choice_id(rule.rhs().root()));
    }

    #[test]
    fn choice_and_flip_rules() {
        let (p, alloc) = setup();
        let g = parse_linear("?(0,1)", p.signature(), &alloc).unwrap();
        let (h, step) = choice_step(&p, &g, g.root(), ChoiceRule::C1, &alloc).unwrap();
        assert_eq!(print_linear(&h), "0");
        assert_eq!(step.choice, g.choice_id(g.root()));
        let g = parse_linear("flip(0)", p.signature(), &alloc).unwrap();
        let h = rewrite_step(&g, g.root(), &p.rules_of("flip")[0], &alloc).unwrap();
        assert_eq!(print_linear(&h), "1");
        assert!(rewrite_step(&g, g.root(), &p.rules_of("flip")[1], &alloc).is_err());
    }

    #[test]
    fn head_step_examples() {
        let (p, alloc) = setup();
        let g = parse_linear("flip(c:coin)", p.signature(), &alloc).unwrap();
        let coin = g.succs(g.root())[0];
        match head_step(&p, &g, g.root()) {
            HeadResult::NeedsStep(s) => {
                assert_eq!(s.node, coin);
                assert_eq!(s.to_string(), format!("rewrite @{coin} coin.1"));
            }
            other => panic!("{other:?}"),
        }
        let g = parse_linear("flip(?(0,1))", p.signature(), &alloc).unwrap();
        let id = g.choice_id(g.succs(g.root())[0]).unwrap();
        assert_eq!(
            head_step(&p, &g, g.root()),
            HeadResult::NeedsStep(Step::pull_tab(g.root(), 0, id))
        );
        let g = parse_linear("flip((,)(0,0))", p.signature(), &alloc).unwrap();
        assert_eq!(head_step(&p, &g, g.root()), HeadResult::Failure);
        let g = parse_linear("?(0,1)", p.signature(), &alloc).unwrap();
        assert_eq!(
            head_step(&p, &g, g.root()),
            HeadResult::ChoiceAtRoot(g.root())
        );
    }

    #[test]
    fn main_keeps_coin_shared() {
        let (p, alloc) = setup();
        let g = parse_linear("main", p.signature(), &alloc).unwrap();
        let g = rewrite_step(&g, g.root(), p.main_rule().unwrap(), &alloc).unwrap();
        let [f1, f2] = g.succs(g.root()) else {
            panic!()
        };
        assert_eq!(g.succs(*f1), g.succs(*f2));
        let HeadResult::NeedsStep(s) = normal_form_step(&p, &g) else {
            panic!()
        };
        let g = apply_step(&p, &g, &s, &alloc).unwrap();
        let [f1, f2] = g.succs(g.root()) else {
            panic!()
        };
        assert_eq!(g.succs(*f1), g.succs(*f2));
        assert_eq!(print_linear(&g), "(,)(flip(n2:?_a(0,1)), flip(n2))");
    }

    #[test]
    fn deep_inductive_position() {
        let alloc = Allocator::new();
        let p = Program::from_source(
            "data N = Z | S/1\ndiv x (S Z) = x\ncoin = Z ? S Z\n",
            &alloc,
        )
        .unwrap();
        let g = parse_linear("div(Z, S(?(Z, S(Z))))", p.signature(), &alloc).unwrap();
        let HeadResult::NeedsStep(s) = head_step(&p, &g, g.root()) else {
            panic!()
        };
        assert_eq!(s.kind, StepKind::PullTab);
        assert_eq!(s.node, g.succs(g.root())[1]);
        let g = parse_linear("div(Z, Z)", p.signature(), &alloc).unwrap();
        assert_eq!(head_step(&p, &g, g.root()), HeadResult::Failure);
        let g = parse_linear("div(Z, S(S(Z)))", p.signature(), &alloc).unwrap();
        assert_eq!(head_step(&p, &g, g.root()), HeadResult::Failure);
    }

    #[test]
    fn step_lines_round_trip() {
        for line in ["rewrite @3 flip.2", "rewrite @7 C1 ?4", "pulltab @5 ?9"] {
            let s: Step = line.parse().unwrap();
            assert_eq!(s.to_string(), line);
        }
        assert!("jump @1".parse::<Step>().is_err());
    }

    #[test]
    fn redex_enumeration() {
        let (p, alloc) = setup();
        let g = parse_linear("(,)(flip(0), flip(?(coin, 1)))", p.signature(), &alloc).unwrap();
        let r = redexes(&p, &g);
        let names: Vec<String> = r
            .iter()
            .map(|s| s.rule.as_ref().unwrap().to_string())
            .collect();
        assert_eq!(names, vec!["flip.1", "C1", "C2", "coin.1"]);
        for s in &r {
            apply_step(&p, &g, s, &alloc).unwrap();
        }
        let h = apply_step(&p, &g, &r[0], &alloc).unwrap();
        let expect = parse_linear("(,)(1, flip(?(coin, 1)))", p.signature(), &alloc).unwrap();
        assert!(graphs_equal(&h, &expect));
    }
}
