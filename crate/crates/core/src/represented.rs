//! Represented sets of decorated graphs and the invariance checks built on them.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{canonicalize, Allocator, CanonicalForm, ChoiceId, Graph, NodeId};
use crate::program::{ChoiceRule, Program};
use crate::pulltab::pull_tab;
use crate::rewrite::{apply_step, redexes, Step, StepError};
use crate::strategy::ValueSet;

/// Assignments are enumerated exhaustively; beyond this many identifiers
/// the enumeration is refused.
pub const MAX_IDENTIFIERS: usize = 20;

/// One decision per choice identifier.
pub type Assignment = BTreeMap<ChoiceId, ChoiceRule>;

fn reduce_choice(g: &Graph, n: NodeId, rule: ChoiceRule) -> Graph {
    let alt = g.succs(n)[rule.alternative()];
    g.splice(n, std::iter::empty(), alt)
}

fn reachable_choices(g: &Graph) -> Vec<NodeId> {
    g.preorder()
        .into_iter()
        .filter(|n| g.label(*n).is_choice())
        .collect()
}

/// Makes the choice steps dictated by `a`, picking the next choice node
/// among the reachable ones with `pick`. Erased choices are never reduced.
pub fn apply_assignment(
    g: &Graph,
    a: &Assignment,
    pick: &mut dyn FnMut(&[NodeId]) -> usize,
) -> Graph {
    let mut g = g.clone();
    loop {
        let choices = reachable_choices(&g);
        if choices.is_empty() {
            return g;
        }
        let n = choices[pick(&choices)];
        let id = g.choice_id(n).expect("choice nodes are decorated");
        g = reduce_choice(&g, n, a[&id]);
    }
}

/// All assignments over the distinct identifiers of `g`.
pub fn assignments(g: &Graph) -> Vec<Assignment> {
    let ids: Vec<ChoiceId> = g.choice_ids().into_iter().collect();
    assert!(
        ids.len() <= MAX_IDENTIFIERS,
        "{} choice identifiers exceed the enumeration limit",
        ids.len()
    );
    (0u64..1 << ids.len())
        .map(|bits| {
            ids.iter()
                .enumerate()
                .map(|(i, id)| {
                    let r = if bits >> i & 1 == 0 {
                        ChoiceRule::C1
                    } else {
                        ChoiceRule::C2
                    };
                    (*id, r)
                })
                .collect()
        })
        .collect()
}

/// The represented set: for every assignment of alternatives to choice
/// identifiers, the graph obtained by reducing the outermost choice until
/// none is left.
///
/// Panics if `g` has more than [`MAX_IDENTIFIERS`] distinct identifiers.
pub fn represented_set(g: &Graph) -> ValueSet {
    assignments(g)
        .iter()
        .map(|a| apply_assignment(g, a, &mut |_| 0))
        .collect()
}

/// [`represented_set`] reducing choices in a random order.
pub fn represented_set_shuffled(g: &Graph, rng: &mut impl Rng) -> ValueSet {
    assignments(g)
        .iter()
        .map(|a| apply_assignment(g, a, &mut |cs| rng.gen_range(0..cs.len())))
        .collect()
}

/// Checks that the pull-tab of `g` at `target` preserves the represented set.
pub fn assert_pulltab_invariance(
    g: &Graph,
    target: NodeId,
    source_index: usize,
    alloc: &Allocator,
) -> Result<bool, StepError> {
    let h = pull_tab(g, target, source_index, alloc)?;
    Ok(represented_set(g) == represented_set(&h))
}

/// Verdict of a bounded reachability check.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Invariance {
    Holds,
    Fails,
    /// The search bound was hit before a witness was found.
    Inconclusive,
}

impl Invariance {
    fn and(self, other: Invariance) -> Invariance {
        match (self, other) {
            (Invariance::Fails, _) | (_, Invariance::Fails) => Invariance::Fails,
            (Invariance::Inconclusive, _) | (_, Invariance::Inconclusive) => {
                Invariance::Inconclusive
            }
            _ => Invariance::Holds,
        }
    }
}

/// Bounds of the reachability search used by the non-choice check.
#[derive(Clone, Copy, Debug)]
pub struct SearchBound {
    pub depth: usize,
    pub states: usize,
}

impl Default for SearchBound {
    fn default() -> Self {
        SearchBound {
            depth: 50,
            states: 20_000,
        }
    }
}

/// Breadth-first search over all rewrite steps (choice steps included)
/// from `sources`, stopping once every form in `targets` has been seen, or
/// once one has when `any` is set. Returns the targets found and whether
/// the search was cut by the bound.
fn search(
    p: &Program,
    sources: &[Graph],
    targets: &HashSet<CanonicalForm>,
    any: bool,
    bound: SearchBound,
    alloc: &Allocator,
) -> (HashSet<CanonicalForm>, bool) {
    let mut found = HashSet::new();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for s in sources {
        let key = canonicalize(s).expect("acyclic");
        if seen.insert(key.clone()) {
            if targets.contains(&key) {
                found.insert(key);
            }
            queue.push_back((s.clone(), 0));
        }
    }
    let done = |found: &HashSet<CanonicalForm>| {
        if any {
            !found.is_empty()
        } else {
            found.len() == targets.len()
        }
    };
    let mut cut = false;
    while let Some((g, d)) = queue.pop_front() {
        if done(&found) {
            return (found, false);
        }
        let steps = redexes(p, &g);
        if d >= bound.depth {
            cut |= !steps.is_empty();
            continue;
        }
        for step in steps {
            let h = apply_step(p, &g, &step, alloc).expect("enumerated redexes apply");
            let key = canonicalize(&h).expect("acyclic");
            if seen.contains(&key) {
                continue;
            }
            if seen.len() >= bound.states {
                cut = true;
                continue;
            }
            seen.insert(key.clone());
            if targets.contains(&key) {
                found.insert(key);
            }
            queue.push_back((h, d + 1));
        }
    }
    let finished = done(&found);
    (found, cut && !finished)
}

/// Checks both claims of invariance by a non-choice rewrite `step` of `g`:
/// every member of R(g) rewrites to some member of R(g'), and every member
/// of R(g') is reached from some member of R(g).
pub fn assert_nonchoice_invariance(
    p: &Program,
    g: &Graph,
    step: &Step,
    bound: SearchBound,
    alloc: &Allocator,
) -> Result<Invariance, StepError> {
    assert!(!step.is_choice_step(), "the step must not be a choice step");
    let h = apply_step(p, g, step, alloc)?;
    let rg: Vec<Graph> = represented_set(g).graphs().cloned().collect();
    let rh: Vec<Graph> = represented_set(&h).graphs().cloned().collect();
    let rh_keys: HashSet<CanonicalForm> = rh
        .iter()
        .map(|x| canonicalize(x).expect("acyclic"))
        .collect();

    let mut verdict = Invariance::Holds;
    for e in &rg {
        let (found, cut) = search(p, std::slice::from_ref(e), &rh_keys, true, bound, alloc);
        verdict = verdict.and(match (found.is_empty(), cut) {
            (false, _) => Invariance::Holds,
            (true, true) => Invariance::Inconclusive,
            (true, false) => Invariance::Fails,
        });
    }
    let (found, cut) = search(p, &rg, &rh_keys, false, bound, alloc);
    verdict = verdict.and(if found.len() == rh_keys.len() {
        Invariance::Holds
    } else if cut {
        Invariance::Inconclusive
    } else {
        Invariance::Fails
    });
    Ok(verdict)
}

/// Pull-tab sites of `g`: (target, successor index) pairs whose successor
/// is a choice and whose target is not.
pub fn pull_tab_sites(g: &Graph) -> Vec<(NodeId, usize)> {
    let mut out = Vec::new();
    for n in g.preorder() {
        if g.label(n).is_choice() {
            continue;
        }
        for (i, s) in g.succs(n).iter().enumerate() {
            if g.label(*s).is_choice() {
                out.push((n, i));
            }
        }
    }
    out
}

/// Picks a random pull-tab site, if any.
pub fn random_pull_tab_site(g: &Graph, rng: &mut impl Rng) -> Option<(NodeId, usize)> {
    pull_tab_sites(g).choose(rng).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{parse_linear, Signature};
    use crate::rewrite::StepKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig() -> Signature {
        Signature::new()
            .with_constructor("0", 0)
            .with_constructor("1", 0)
            .with_constructor("2", 0)
            .with_constructor("3", 0)
            .with_operation("flip", 1)
    }

    fn lines(src: &str) -> Vec<String> {
        let alloc = Allocator::new();
        represented_set(&parse_linear(src, &sig(), &alloc).unwrap()).lines()
    }

    #[test]
    fn examples() {
        assert_eq!(lines("?_a(0,1)"), vec!["0", "1"]);
        assert_eq!(
            lines("(,)(n:?_a(0,1), n)"),
            vec!["(,)(n1:0,n1)", "(,)(n1:1,n1)"]
        );
        assert_eq!(
            lines("(,)(?_a(0,1), ?_a(2,3))"),
            vec!["(,)(0,2)", "(,)(1,3)"]
        );
        assert_eq!(lines("(,)(?_a(0,1), ?_b(2,3))").len(), 4);
        assert_eq!(lines("flip(0)"), vec!["flip(0)"]);
    }

    #[test]
    fn erased_choices_are_skipped() {
        assert_eq!(lines("?_a(?_b(0,1), 2)"), vec!["0", "1", "2"]);
    }

    #[test]
    fn pull_tab_of_a_shared_coin_keeps_states() {
        let alloc = Allocator::new();
        let g2 = parse_linear("(,)(flip(c:?_a(0,1)), flip(c))", &sig(), &alloc).unwrap();
        let f1 = g2.succs(g2.root())[0];
        assert!(assert_pulltab_invariance(&g2, f1, 0, &alloc).unwrap());
        assert_eq!(
            represented_set(&g2).lines(),
            vec!["(,)(flip(n2:0), flip(n2))", "(,)(flip(n2:1), flip(n2))"]
        );
    }

    #[test]
    fn shuffled_order_agrees() {
        let alloc = Allocator::new();
        let g = parse_linear(
            "(,)(?_a(?_b(0,1),2), (,)(?_b(3,0), ?_a(1, ?_c(2,3))))",
            &sig(),
            &alloc,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let base = represented_set(&g);
        for _ in 0..20 {
            assert_eq!(represented_set_shuffled(&g, &mut rng), base);
        }
    }

    #[test]
    fn nonchoice_example() {
        let alloc = Allocator::new();
        let p = Program::from_source("data B = 0 | 1\ncoin = 0 ? 1\n", &alloc).unwrap();
        let g = parse_linear("(,)(coin, 0)", p.signature(), &alloc).unwrap();
        let step = redexes(&p, &g)
            .into_iter()
            .find(|s| s.kind == StepKind::Rewrite)
            .unwrap();
        let v = assert_nonchoice_invariance(&p, &g, &step, SearchBound::default(), &alloc).unwrap();
        assert_eq!(v, Invariance::Holds);
    }

    #[test]
    fn sites() {
        let alloc = Allocator::new();
        let g = parse_linear("?(flip(?(0,1)), (,)(?(2,3), 0))", &sig(), &alloc).unwrap();
        assert_eq!(pull_tab_sites(&g).len(), 2);
        let g = parse_linear("(,)(0,1)", &sig(), &alloc).unwrap();
        assert!(pull_tab_sites(&g).is_empty());
    }
}
