use std::collections::{BTreeMap, VecDeque};

use super::{
    dominators::immediate_dominator, Consistency, Ledger, Outcome, Stats, StrategyConfig,
    StrategyKind, ValueSet,
};
use crate::graph::{Allocator, Graph, Label, Node, NodeId, Symbol};
use crate::program::{ChoiceRule, Program};
use crate::pulltab::pull_tab;
use crate::rewrite::{
    apply_step, choice_step, head_step, normal_form_step, HeadResult, Step, StepKind,
};

#[derive(Clone)]
struct Strand {
    graph: Graph,
    ledger: Ledger,
    trace: Vec<Step>,
    tick: u64,
}

enum Advance {
    Continue(Strand),
    Fork(Strand, Strand),
    Value(Strand),
    Failed(Strand),
    Cut(Strand),
}

pub(super) struct Engine<'a> {
    p: &'a Program,
    cfg: &'a StrategyConfig,
    alloc: &'a Allocator,
    observer: &'a mut dyn FnMut(&Graph),
    stats: Stats,
}

impl<'a> Engine<'a> {
    pub(super) fn new(
        p: &'a Program,
        cfg: &'a StrategyConfig,
        alloc: &'a Allocator,
        observer: &'a mut dyn FnMut(&Graph),
    ) -> Self {
        Engine {
            p,
            cfg,
            alloc,
            observer,
            stats: Stats::default(),
        }
    }

    pub(super) fn run(mut self, g: &Graph) -> Outcome {
        let start = self.alloc.nodes_issued();
        (self.observer)(g);
        let mut values = ValueSet::new();
        let mut failures = 0;
        let mut exhausted = false;
        let mut traces = Vec::new();
        let depth_first = self.cfg.kind == StrategyKind::Backtrack;

        let mut queue = VecDeque::from([Strand {
            graph: g.clone(),
            ledger: Ledger::default(),
            trace: Vec::new(),
            tick: 0,
        }]);
        while let Some(s) = queue.pop_front() {
            let finished = match self.advance(s) {
                Advance::Continue(s) => {
                    if depth_first {
                        queue.push_front(s);
                    } else {
                        queue.push_back(s);
                    }
                    None
                }
                Advance::Fork(a, b) => {
                    self.stats.strands_forked += 1;
                    if depth_first {
                        queue.push_front(b);
                        queue.push_front(a);
                    } else {
                        queue.push_back(a);
                        queue.push_back(b);
                    }
                    None
                }
                Advance::Value(s) => {
                    values.insert(s.graph);
                    Some(s.trace)
                }
                Advance::Failed(s) => {
                    failures += 1;
                    self.stats.strands_failed += 1;
                    Some(s.trace)
                }
                Advance::Cut(s) => {
                    exhausted = true;
                    if self.cfg.record_traces {
                        traces.push(s.trace);
                    }
                    break;
                }
            };
            if let Some(t) = finished {
                if self.cfg.record_traces {
                    traces.push(t);
                }
                if self.cfg.max_values.is_some_and(|k| values.len() >= k) {
                    break;
                }
            }
        }
        self.stats.nodes_allocated = self.alloc.nodes_issued() - start;
        Outcome {
            values,
            failures,
            exhausted,
            stats: self.stats,
            traces,
        }
    }

    fn advance(&mut self, mut s: Strand) -> Advance {
        let need = normal_form_step(self.p, &s.graph);
        match need {
            HeadResult::Value(_) => return Advance::Value(s),
            HeadResult::Failure => return Advance::Failed(s),
            _ if self.stats.steps >= self.cfg.max_steps => return Advance::Cut(s),
            _ => {}
        }
        self.stats.steps += 1;
        s.tick += 1;
        match need {
            HeadResult::NeedsStep(step) if step.kind == StepKind::Rewrite => {
                Advance::Continue(self.apply(s, step))
            }
            HeadResult::NeedsStep(step) => {
                let t = step.node;
                let i = step.index.expect("pull-tab steps carry an index");
                let m = s.graph.succs(t)[i];
                self.choice(s, Some((t, i)), m)
            }
            HeadResult::ChoiceAtRoot(m) => self.choice(s, None, m),
            HeadResult::Value(_) | HeadResult::Failure => unreachable!(),
        }
    }

    fn record(&mut self, s: &mut Strand, g: Graph, step: Step) {
        (self.observer)(&g);
        s.graph = g;
        if self.cfg.record_traces {
            s.trace.push(step);
        }
    }

    fn apply(&mut self, mut s: Strand, step: Step) -> Strand {
        let g = apply_step(self.p, &s.graph, &step, self.alloc).expect("needed steps apply");
        if step.kind == StepKind::PullTab {
            self.stats.pull_tabs += 1;
            self.stats.nodes_cloned += 1;
        }
        self.record(&mut s, g, step);
        s
    }

    fn reduce(&mut self, mut s: Strand, m: NodeId, c: ChoiceRule) -> Strand {
        let (g, step) =
            choice_step(self.p, &s.graph, m, c, self.alloc).expect("choice rules apply");
        self.record(&mut s, g, step);
        s
    }

    fn fork_in_place(&mut self, s: Strand, m: NodeId) -> Advance {
        let a = self.reduce(s.clone(), m, ChoiceRule::C1);
        let b = self.reduce(s, m, ChoiceRule::C2);
        Advance::Fork(a, b)
    }

    fn choice(&mut self, s: Strand, target: Option<(NodeId, usize)>, m: NodeId) -> Advance {
        match self.cfg.kind {
            StrategyKind::Backtrack => self.fork_in_place(s, m),
            StrategyKind::Copy => self.copy_split(s, m),
            StrategyKind::Bubble => match target {
                None => self.fork_in_place(s, m),
                Some(_) => Advance::Continue(self.bubble(s, m)),
            },
            StrategyKind::PullTab => self.pull_tab_choice(s, target, m),
        }
    }

    /// Both alternatives of the needed choice `m`, the second with every
    /// ancestor of `m` replaced by a fresh copy.
    fn copy_split(&mut self, s: Strand, m: NodeId) -> Advance {
        let mut context = s.graph.ancestors_of(m);
        context.remove(&m);
        let a = self.reduce(s.clone(), m, ChoiceRule::C1);
        let mut b = self.reduce(s, m, ChoiceRule::C2);
        if !context.is_empty() {
            let map: BTreeMap<NodeId, NodeId> = context
                .iter()
                .map(|n| (*n, self.alloc.fresh_node()))
                .collect();
            let g = &b.graph;
            let clones: Vec<(NodeId, Node)> = context
                .iter()
                .map(|n| {
                    let node = g.node(*n).expect("context survives the choice step");
                    let succs = node
                        .succs
                        .iter()
                        .map(|x| *map.get(x).unwrap_or(x))
                        .collect();
                    let choice = node.choice.map(|_| self.alloc.fresh_choice());
                    (map[n], Node::new(node.label.clone(), succs, choice))
                })
                .collect();
            let g = g.rebuilt(map[&g.root()], clones);
            self.stats.nodes_cloned += context.len();
            (self.observer)(&g);
            b.graph = g;
        }
        Advance::Fork(a, b)
    }

    /// Replaces the closest dominator `d` of the needed choice `m` by a fresh
    /// choice between two copies of the region from `d` down to `m`.
    fn bubble(&mut self, mut s: Strand, m: NodeId) -> Strand {
        let g = &s.graph;
        let d = immediate_dominator(g, m).expect("m is below the root");
        let below = g.reachable_from(d);
        let region: Vec<NodeId> = g
            .ancestors_of(m)
            .into_iter()
            .filter(|n| *n != m && below.contains(n))
            .collect();
        let alts = g.succs(m).to_vec();
        let mut new_nodes = Vec::with_capacity(2 * region.len() + 1);
        let mut tops = Vec::with_capacity(2);
        for alt in alts {
            let map: BTreeMap<NodeId, NodeId> = region
                .iter()
                .map(|n| (*n, self.alloc.fresh_node()))
                .collect();
            for n in &region {
                let node = g.node(*n).expect("region nodes are in the graph");
                let succs = node
                    .succs
                    .iter()
                    .map(|x| {
                        if *x == m {
                            alt
                        } else {
                            *map.get(x).unwrap_or(x)
                        }
                    })
                    .collect();
                let choice = node.choice.map(|_| self.alloc.fresh_choice());
                new_nodes.push((map[n], Node::new(node.label.clone(), succs, choice)));
            }
            tops.push(map[&d]);
        }
        let q = self.alloc.fresh_node();
        new_nodes.push((
            q,
            Node::new(
                Label::Sym(Symbol::choice()),
                tops,
                Some(self.alloc.fresh_choice()),
            ),
        ));
        let h = g.splice(d, new_nodes, q);
        self.stats.bubbles += 1;
        self.stats.nodes_cloned += region.len();
        (self.observer)(&h);
        s.graph = h;
        s
    }

    /// Index of an alternative of `m` that is a failing normal form.
    fn failing_alternative(&self, g: &Graph, m: NodeId) -> Option<usize> {
        g.succs(m)
            .iter()
            .position(|a| head_step(self.p, g, *a) == HeadResult::Failure)
    }

    fn prune(&mut self, mut s: Strand, m: NodeId, failing: usize) -> Advance {
        let keep = if failing == 0 {
            ChoiceRule::C2
        } else {
            ChoiceRule::C1
        };
        if self.cfg.consistency == Consistency::Enforced {
            let id = s.graph.choice_id(m).expect("choice nodes are decorated");
            let fresh = s.ledger.decide(id, keep);
            debug_assert!(fresh, "decided choices are reduced before pruning");
        }
        self.stats.pruned += 1;
        Advance::Continue(self.reduce(s, m, keep))
    }

    fn pull_tab_choice(
        &mut self,
        s: Strand,
        target: Option<(NodeId, usize)>,
        m: NodeId,
    ) -> Advance {
        let enforced = self.cfg.consistency == Consistency::Enforced;
        let id = s.graph.choice_id(m).expect("choice nodes are decorated");
        if enforced {
            if let Some(rule) = s.ledger.get(id) {
                return Advance::Continue(self.reduce(s, m, rule));
            }
        }
        if let Some(k) = self.failing_alternative(&s.graph, m) {
            if target.is_none() || self.cfg.hnf_before_pull {
                return self.prune(s, m, k);
            }
        }
        let Some((t, i)) = target else {
            let mut a = self.reduce(s.clone(), m, ChoiceRule::C1);
            let mut b = self.reduce(s, m, ChoiceRule::C2);
            if enforced {
                a.ledger.decide(id, ChoiceRule::C1);
                b.ledger.decide(id, ChoiceRule::C2);
            }
            return Advance::Fork(a, b);
        };
        if !self.cfg.hnf_before_pull || self.has_hnf_alternative(&s.graph, m) {
            return Advance::Continue(self.pull(s, t, i));
        }
        // Neither alternative is in head normal form: advance one of them,
        // alternating between the two across ticks.
        let k = (s.tick % 2) as usize;
        let alt = s.graph.succs(m)[k];
        match head_step(self.p, &s.graph, alt) {
            HeadResult::NeedsStep(step) if step.kind == StepKind::Rewrite => {
                Advance::Continue(self.apply(s, step))
            }
            HeadResult::NeedsStep(step) => {
                let t = step.node;
                let i = step.index.expect("pull-tab steps carry an index");
                let inner = s.graph.succs(t)[i];
                self.pull_tab_choice(s, Some((t, i)), inner)
            }
            other => unreachable!("alternative neither failing nor in head normal form: {other:?}"),
        }
    }

    fn has_hnf_alternative(&self, g: &Graph, m: NodeId) -> bool {
        g.succs(m)
            .iter()
            .any(|a| matches!(g.label(*a), Label::Sym(s) if s.is_constructor() || s.is_choice()))
    }

    fn pull(&mut self, mut s: Strand, t: NodeId, i: usize) -> Strand {
        let id = s
            .graph
            .choice_id(s.graph.succs(t)[i])
            .expect("choice nodes are decorated");
        let g = pull_tab(&s.graph, t, i, self.alloc).expect("pull-tab preconditions hold");
        self.stats.pull_tabs += 1;
        self.stats.nodes_cloned += 1;
        self.record(&mut s, g, Step::pull_tab(t, i, id));
        s
    }
}
