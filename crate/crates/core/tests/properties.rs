use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pulltab::gen::{random_graph, random_program, random_state, GraphShape, ProgramShape};
use pulltab::graph::{
    graphs_equal, parse_linear, print_linear, Allocator, Graph, GraphBuilder, NodeId, Symbol,
};
use pulltab::program::{DefTree, Pattern, Program, RuleRef};
use pulltab::pulltab::pull_tab;
use pulltab::represented::{pull_tab_sites, represented_set, represented_set_shuffled};
use pulltab::rewrite::{head_step, HeadResult};

fn program_and_graph(seed: u64, alloc: &Allocator) -> (Program, Graph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, p) = random_program(&mut rng, ProgramShape::default(), alloc);
    let g = random_graph(&mut rng, &p, GraphShape::default(), alloc);
    (p, g)
}

fn state(seed: u64, alloc: &Allocator) -> Option<(Program, Graph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, p) = random_program(&mut rng, ProgramShape::default(), alloc);
    let g = random_state(&mut rng, &p, GraphShape::default(), 4, 6, alloc)?;
    Some((p, g))
}

#[derive(Clone, Debug)]
struct Term(Symbol, Vec<Term>);

fn matches(p: &Pattern, t: &Term) -> bool {
    match p {
        Pattern::Var(_) => true,
        Pattern::App(s, ps) => s == &t.0 && ps.iter().zip(&t.1).all(|(p, t)| matches(p, t)),
    }
}

/// Constructor terms of depth at most `depth` over `cs`.
fn terms(cs: &[Symbol], depth: usize) -> Vec<Term> {
    if depth == 0 {
        return Vec::new();
    }
    let smaller = terms(cs, depth - 1);
    let mut out = Vec::new();
    for c in cs {
        let mut partial: Vec<Vec<Term>> = vec![Vec::new()];
        for _ in 0..c.arity() {
            partial = partial
                .into_iter()
                .flat_map(|pre| {
                    smaller.iter().map(move |t| {
                        let mut v = pre.clone();
                        v.push(t.clone());
                        v
                    })
                })
                .collect();
        }
        out.extend(partial.into_iter().map(|args| Term(c.clone(), args)));
    }
    out
}

fn tuples(ts: &[Term], k: usize) -> Vec<Vec<Term>> {
    (0..k).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter()
            .flat_map(|pre| {
                ts.iter().map(move |t| {
                    let mut v = pre.clone();
                    v.push(t.clone());
                    v
                })
            })
            .collect()
    })
}

fn build(b: &mut GraphBuilder<'_>, t: &Term) -> NodeId {
    let succs = t.1.iter().map(|a| build(b, a)).collect();
    b.add(&t.0, succs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn linear_notation_round_trips(seed in any::<u64>()) {
        let alloc = Allocator::new();
        let (p, g) = program_and_graph(seed, &alloc);
        let text = print_linear(&g);
        let back = parse_linear(&text, p.signature(), &alloc).unwrap();
        prop_assert!(graphs_equal(&g, &back), "{text} vs {}", print_linear(&back));
        prop_assert_eq!(print_linear(&back), text);
    }

    #[test]
    fn equality_is_an_equivalence(seed in any::<u64>(), other in any::<u64>()) {
        let alloc = Allocator::new();
        let (p, a) = program_and_graph(seed, &alloc);
        let b = parse_linear(&print_linear(&a), p.signature(), &alloc).unwrap();
        let c = parse_linear(&print_linear(&b), p.signature(), &alloc).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(other);
        let d = random_graph(&mut rng, &p, GraphShape::default(), &alloc);
        prop_assert!(graphs_equal(&a, &a));
        prop_assert!(graphs_equal(&a, &b) && graphs_equal(&b, &a));
        prop_assert!(graphs_equal(&b, &c) && graphs_equal(&a, &c));
        prop_assert_eq!(graphs_equal(&a, &d), graphs_equal(&d, &a));
        prop_assert_eq!(graphs_equal(&a, &d), print_linear(&a) == print_linear(&d));
    }

    #[test]
    fn allocated_identifiers_are_fresh(n in 1usize..500) {
        let alloc = Allocator::new();
        let nodes: BTreeSet<_> = (0..n).map(|_| alloc.fresh_node()).collect();
        let choices: BTreeSet<_> = (0..n).map(|_| alloc.fresh_choice()).collect();
        prop_assert_eq!(nodes.len(), n);
        prop_assert_eq!(choices.len(), n);
    }

    #[test]
    fn replacement_leaves_its_input_unchanged(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let alloc = Allocator::new();
        let (p, g) = program_and_graph(seed, &alloc);
        let before = print_linear(&g);
        let ids: Vec<NodeId> = g.node_ids().collect();
        let n = ids[pick.index(ids.len())];
        let h = parse_linear("A", p.signature(), &alloc).unwrap();
        let out = g.replace_at(n, &h).unwrap();
        prop_assert_eq!(print_linear(&g), before);
        prop_assert_eq!(g.node_ids().collect::<Vec<_>>(), ids);
        if n != g.root() || g.len() > 1 {
            prop_assert!(!out.contains(n));
        }
    }

    #[test]
    fn pull_tab_is_economical_and_conserves_identifiers(seed in any::<u64>()) {
        let alloc = Allocator::new();
        let Some((_, g)) = state(seed, &alloc) else { return Ok(()) };
        for (t, i) in pull_tab_sites(&g) {
            let id = g.choice_id(g.succs(t)[i]).unwrap();
            let before = alloc.nodes_issued();
            let h = pull_tab(&g, t, i, &alloc).unwrap();
            prop_assert_eq!(alloc.nodes_issued() - before, 3);
            let new: Vec<NodeId> = h.node_ids().filter(|n| !g.contains(*n)).collect();
            prop_assert!(new.len() <= 3);
            prop_assert!(h.choice_ids().is_subset(&g.choice_ids()));
            prop_assert!(h.choice_ids().contains(&id));
            let fresh_choices: Vec<_> = new.iter().filter(|n| h.label(**n).is_choice()).collect();
            for n in fresh_choices {
                prop_assert_eq!(h.choice_id(*n), Some(id));
            }
        }
    }

    #[test]
    fn represented_set_ignores_reduction_order(seed in any::<u64>(), order in any::<u64>()) {
        let alloc = Allocator::new();
        let Some((_, g)) = state(seed, &alloc) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(order);
        prop_assert_eq!(represented_set_shuffled(&g, &mut rng), represented_set(&g));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn dispatch_selects_the_unique_matching_rule(seed in any::<u64>()) {
        let alloc = Allocator::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (src, p) = random_program(&mut rng, ProgramShape::default(), &alloc);
        let cs: Vec<Symbol> = ["A", "B", "S"].iter().map(|n| p.signature().lookup(n).unwrap()).collect();
        let ts = terms(&cs, 2);
        for op in p.signature().operations() {
            if op.is_choice() || op.name() == "main" {
                continue;
            }
            let rules = p.rules_of(op.name());
            for args in tuples(&ts, op.arity()) {
                let t = Term(op.clone(), args);
                let hits: Vec<usize> = (0..rules.len()).filter(|k| matches(rules[*k].pattern(), &t)).collect();
                prop_assert!(hits.len() <= 1, "overlap in\n{src}");
                let mut b = GraphBuilder::new(&alloc);
                let root = build(&mut b, &t);
                let g = b.finish(root).unwrap();
                match head_step(&p, &g, g.root()) {
                    HeadResult::NeedsStep(step) => {
                        let want = RuleRef::User { op: op.name().into(), index: hits[0] };
                        prop_assert_eq!(step.rule, Some(want));
                        prop_assert_eq!(step.node, g.root());
                    }
                    HeadResult::Failure => prop_assert!(hits.is_empty(), "{}\n{src}", print_linear(&g)),
                    other => prop_assert!(false, "unexpected {other:?}"),
                }
            }
        }
    }

    #[test]
    fn tree_leaves_biject_with_rules(seed in any::<u64>()) {
        let alloc = Allocator::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (src, p) = random_program(&mut rng, ProgramShape::default(), &alloc);
        for (op, tree) in p.trees() {
            let mut leaves = tree.rule_leaves();
            leaves.sort_unstable();
            let all: Vec<usize> = (0..p.rules_of(op).len()).collect();
            prop_assert_eq!(&leaves, &all, "{}", src);
            // Every leaf pattern is an instance of its ancestors' patterns.
            let mut ok = true;
            tree.visit(&mut |t| {
                if let DefTree::Branch { pattern, children, .. } = t {
                    ok &= children.iter().all(|(_, c)| c.pattern().instance_of(pattern));
                }
            });
            prop_assert!(ok);
        }
    }
}
