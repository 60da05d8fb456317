//! Randomized verification suites over generated programs and graphs.
//!
//! Every suite is reproducible from its seed. Each one audits the states it
//! produces for choice identifiers that change on a node.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen::{random_graph, random_program, random_state, GraphShape, ProgramShape};
use crate::graph::{graphs_equal, print_linear, Allocator, ChoiceId, Graph, NodeId};
use crate::program::Program;
use crate::pulltab::pull_tab;
use crate::represented::{
    assert_nonchoice_invariance, pull_tab_sites, represented_set, Invariance, SearchBound,
};
use crate::rewrite::{apply_step, main_graph, redexes};
use crate::strategy::{check_consistency, run_observed, StrategyConfig, StrategyKind};

/// Records the choice identifier of every node seen and counts nodes whose
/// identifier differs between two states.
#[derive(Default, Debug)]
pub struct DecorationAudit {
    seen: HashMap<NodeId, Option<ChoiceId>>,
    states: usize,
    violations: usize,
}

impl DecorationAudit {
    pub fn observe(&mut self, g: &Graph) {
        self.states += 1;
        for (id, node) in g.iter() {
            match self.seen.get(&id) {
                Some(c) if *c != node.choice => self.violations += 1,
                Some(_) => {}
                None => {
                    self.seen.insert(id, node.choice);
                }
            }
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn violations(&self) -> usize {
        self.violations
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Suite {
    ParallelMoves,
    PullTab,
    NonChoice,
    Theorem,
    Corollary,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::ParallelMoves,
        Suite::PullTab,
        Suite::NonChoice,
        Suite::Theorem,
        Suite::Corollary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ParallelMoves => "parallel-moves",
            Suite::PullTab => "pulltab",
            Suite::NonChoice => "nonchoice",
            Suite::Theorem => "theorem",
            Suite::Corollary => "corollary",
        }
    }

    pub fn run(self, cases: usize, seed: u64) -> Report {
        match self {
            Suite::ParallelMoves => parallel_moves(cases, seed),
            Suite::PullTab => pulltab_invariance(cases, seed),
            Suite::NonChoice => nonchoice_invariance(cases, seed),
            Suite::Theorem => theorem(cases, seed),
            Suite::Corollary => corollary(cases, seed),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub suite: &'static str,
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    /// Generated instances discarded before testing (no applicable step,
    /// budget exhausted, too many identifiers).
    pub skipped: usize,
    pub audited_states: usize,
    pub audit_violations: usize,
    /// Descriptions of the first few failures.
    pub failures: Vec<String>,
}

impl Report {
    fn new(suite: &'static str) -> Self {
        Report {
            suite,
            ..Report::default()
        }
    }

    fn record(&mut self, verdict: Invariance, describe: impl FnOnce() -> String) {
        self.cases += 1;
        match verdict {
            Invariance::Holds => self.passed += 1,
            Invariance::Inconclusive => self.inconclusive += 1,
            Invariance::Fails => {
                self.failed += 1;
                if self.failures.len() < 5 {
                    self.failures.push(describe());
                }
            }
        }
    }

    fn finish(mut self, audit: &DecorationAudit) -> Self {
        self.audited_states = audit.states();
        self.audit_violations = audit.violations();
        self
    }

    pub fn ok(&self) -> bool {
        self.failed == 0 && self.audit_violations == 0
    }

    pub fn inconclusive_rate(&self) -> f64 {
        if self.cases == 0 {
            0.0
        } else {
            self.inconclusive as f64 / self.cases as f64
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: cases={} passed={} failed={} inconclusive={} skipped={} audited_states={} audit_violations={}",
            self.suite,
            self.cases,
            self.passed,
            self.failed,
            self.inconclusive,
            self.skipped,
            self.audited_states,
            self.audit_violations
        )
    }
}

fn verdict(ok: bool) -> Invariance {
    if ok {
        Invariance::Holds
    } else {
        Invariance::Fails
    }
}

/// Attempts allowed per requested case before a suite gives up.
const ATTEMPTS: usize = 50;

/// Two redexes at distinct nodes, contracted in both orders, give graphs
/// equal up to renaming. A redex erased by the other step is dropped.
pub fn parallel_moves(cases: usize, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alloc = Allocator::new();
    let mut audit = DecorationAudit::default();
    let mut report = Report::new(Suite::ParallelMoves.name());
    let shape = GraphShape {
        max_choices: 4,
        ..GraphShape::default()
    };
    for _ in 0..cases * ATTEMPTS {
        if report.cases >= cases {
            break;
        }
        let (src, p) = random_program(&mut rng, ProgramShape::default(), &alloc);
        let Some(g) = random_state(&mut rng, &p, shape, 3, 8, &alloc) else {
            report.skipped += 1;
            continue;
        };
        let steps = redexes(&p, &g);
        let pairs: Vec<_> = steps
            .iter()
            .enumerate()
            .flat_map(|(i, a)| {
                steps[i + 1..]
                    .iter()
                    .filter(move |b| b.node != a.node)
                    .map(move |b| (a, b))
            })
            .collect();
        let Some((s1, s2)) = pairs.choose(&mut rng).copied() else {
            report.skipped += 1;
            continue;
        };
        audit.observe(&g);
        let both = |first: &crate::rewrite::Step,
                    second: &crate::rewrite::Step,
                    audit: &mut DecorationAudit| {
            let h = apply_step(&p, &g, first, &alloc).expect("redexes apply");
            audit.observe(&h);
            if h.contains(second.node) {
                let h2 =
                    apply_step(&p, &h, second, &alloc).expect("a surviving redex still applies");
                audit.observe(&h2);
                h2
            } else {
                h
            }
        };
        let a = both(s1, s2, &mut audit);
        let b = both(s2, s1, &mut audit);
        report.record(verdict(graphs_equal(&a, &b)), || {
            format!("{src}graph {}\nsteps {s1} / {s2}", print_linear(&g))
        });
    }
    report.finish(&audit)
}

/// A pull-tab step preserves the represented set exactly.
pub fn pulltab_invariance(cases: usize, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alloc = Allocator::new();
    let mut audit = DecorationAudit::default();
    let mut report = Report::new(Suite::PullTab.name());
    let shape = GraphShape {
        max_choices: 4,
        ..GraphShape::default()
    };
    for _ in 0..cases * ATTEMPTS {
        if report.cases >= cases {
            break;
        }
        let (src, p) = random_program(&mut rng, ProgramShape::default(), &alloc);
        let Some(g) = random_state(&mut rng, &p, shape, 3, 4, &alloc) else {
            report.skipped += 1;
            continue;
        };
        let Some((t, i)) = pull_tab_sites(&g).choose(&mut rng).copied() else {
            report.skipped += 1;
            continue;
        };
        let h = pull_tab(&g, t, i, &alloc).expect("sites are valid");
        audit.observe(&g);
        audit.observe(&h);
        report.record(verdict(represented_set(&g) == represented_set(&h)), || {
            format!("{src}graph {}\npull-tab at {t}/{i}", print_linear(&g))
        });
    }
    report.finish(&audit)
}

/// Both claims of invariance by a non-choice rewrite step.
pub fn nonchoice_invariance(cases: usize, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alloc = Allocator::new();
    let mut audit = DecorationAudit::default();
    let mut report = Report::new(Suite::NonChoice.name());
    let shape = GraphShape {
        max_depth: 3,
        max_choices: 3,
        ..GraphShape::default()
    };
    for _ in 0..cases * ATTEMPTS {
        if report.cases >= cases {
            break;
        }
        let (src, p) = random_program(&mut rng, ProgramShape::default(), &alloc);
        let Some(g) = random_state(&mut rng, &p, shape, 3, 4, &alloc) else {
            report.skipped += 1;
            continue;
        };
        let steps: Vec<_> = redexes(&p, &g)
            .into_iter()
            .filter(|s| !s.is_choice_step())
            .collect();
        let Some(step) = steps.choose(&mut rng) else {
            report.skipped += 1;
            continue;
        };
        let h = apply_step(&p, &g, step, &alloc).expect("redexes apply");
        if h.choice_ids().len() > 6 {
            report.skipped += 1;
            continue;
        }
        audit.observe(&g);
        audit.observe(&h);
        let v = assert_nonchoice_invariance(&p, &g, step, SearchBound::default(), &alloc)
            .expect("redexes apply");
        report.record(v, || {
            format!("{src}graph {}\nstep {step}", print_linear(&g))
        });
    }
    report.finish(&audit)
}

/// Budget of each strategy run in the strategy-equivalence suites.
pub const EQUIVALENCE_BUDGET: usize = 5000;

fn strategy_configs() -> Vec<StrategyConfig> {
    let mut v: Vec<StrategyConfig> = StrategyKind::ALL
        .into_iter()
        .map(|k| StrategyConfig::new(k).max_steps(EQUIVALENCE_BUDGET))
        .collect();
    v.push(
        StrategyConfig::new(StrategyKind::PullTab)
            .max_steps(EQUIVALENCE_BUDGET)
            .hnf_before_pull(false),
    );
    for c in &mut v {
        c.record_traces = c.kind == StrategyKind::PullTab;
    }
    v
}

/// Backtracking, copying, bubbling and pull-tabbing (with and without the
/// head-normal-form condition) compute the same values for `main` of random
/// terminating programs; every pull-tab trace is consistent.
pub fn theorem(cases: usize, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alloc = Allocator::new();
    let mut audit = DecorationAudit::default();
    let mut report = Report::new(Suite::Theorem.name());
    let configs = strategy_configs();
    for _ in 0..cases * ATTEMPTS {
        if report.cases >= cases {
            break;
        }
        let (src, p) = random_program(&mut rng, ProgramShape::default(), &alloc);
        let g = main_graph(&p, &alloc).expect("generated programs define main");
        match compare_strategies(&p, &g, &configs, &alloc, &mut audit) {
            None => report.skipped += 1,
            Some(Ok(())) => report.record(Invariance::Holds, String::new),
            Some(Err(why)) => report.record(Invariance::Fails, || format!("{src}{why}")),
        }
    }
    report.finish(&audit)
}

/// Runs every configuration on `g`. `None` if some run exhausted its budget.
pub fn compare_strategies(
    p: &Program,
    g: &Graph,
    configs: &[StrategyConfig],
    alloc: &Allocator,
    audit: &mut DecorationAudit,
) -> Option<Result<(), String>> {
    let mut outcomes = Vec::with_capacity(configs.len());
    for cfg in configs {
        let out =
            run_observed(p, g, cfg, alloc, &mut |s| audit.observe(s)).expect("valid configuration");
        if out.exhausted {
            return None;
        }
        outcomes.push(out);
    }
    let base = &outcomes[0];
    for (cfg, out) in configs.iter().zip(&outcomes).skip(1) {
        if out.values != base.values {
            return Some(Err(format!(
                "{} (hnf_before_pull={}) gave {:?}, {} gave {:?}",
                cfg.kind,
                cfg.hnf_before_pull,
                out.values.lines(),
                configs[0].kind,
                base.values.lines()
            )));
        }
        if let Some(t) = out.traces.iter().find(|t| !check_consistency(t)) {
            let lines: Vec<String> = t.iter().map(|s| s.to_string()).collect();
            return Some(Err(format!("inconsistent trace:\n{}", lines.join("\n"))));
        }
    }
    Some(Ok(()))
}

/// After random non-choice rewrite and pull-tab steps from a graph with
/// distinct identifiers, the consistent values are unchanged: backtracking
/// on the original agrees with consistent pull-tabbing on the result.
pub fn corollary(cases: usize, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alloc = Allocator::new();
    let mut audit = DecorationAudit::default();
    let mut report = Report::new(Suite::Corollary.name());
    for _ in 0..cases * ATTEMPTS {
        if report.cases >= cases {
            break;
        }
        let (src, p) = random_program(&mut rng, ProgramShape::default(), &alloc);
        let g = random_graph(&mut rng, &p, GraphShape::default(), &alloc);
        let mut h = g.clone();
        audit.observe(&h);
        for _ in 0..rng.gen_range(1..=5) {
            let sites = pull_tab_sites(&h);
            let rws: Vec<_> = redexes(&p, &h)
                .into_iter()
                .filter(|s| !s.is_choice_step())
                .collect();
            h = if !sites.is_empty() && (rws.is_empty() || rng.gen_bool(0.5)) {
                let (t, i) = *sites.choose(&mut rng).unwrap();
                pull_tab(&h, t, i, &alloc).expect("sites are valid")
            } else if let Some(s) = rws.choose(&mut rng) {
                apply_step(&p, &h, s, &alloc).expect("redexes apply")
            } else {
                break;
            };
            audit.observe(&h);
        }
        let cfg = StrategyConfig::new(StrategyKind::Backtrack).max_steps(EQUIVALENCE_BUDGET);
        let before =
            run_observed(&p, &g.redecorate(&alloc), &cfg, &alloc, &mut |_| {}).expect("valid");
        let cfg = StrategyConfig::new(StrategyKind::PullTab)
            .max_steps(EQUIVALENCE_BUDGET)
            .traced();
        let after = run_observed(&p, &h, &cfg, &alloc, &mut |s| audit.observe(s)).expect("valid");
        if before.exhausted || after.exhausted {
            report.skipped += 1;
            continue;
        }
        let consistent = after.traces.iter().all(|t| check_consistency(t));
        report.record(verdict(before.values == after.values && consistent), || {
            format!(
                "{src}graph {}\nafter {}\nbacktrack {:?}\npulltab {:?}",
                print_linear(&g),
                print_linear(&h),
                before.values.lines(),
                after.values.lines()
            )
        });
    }
    report.finish(&audit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn audit_detects_changed_identifier() {
        use crate::graph::{parse_linear, Signature};
        let sig = Signature::new()
            .with_constructor("0", 0)
            .with_constructor("1", 0);
        let alloc = Allocator::new();
        let g = parse_linear("?(0,1)", &sig, &alloc).unwrap();
        let mut audit = DecorationAudit::default();
        audit.observe(&g);
        audit.observe(&g.redecorate(&alloc));
        assert_eq!(audit.violations(), 1);
    }

    #[test]
    fn small_suites_pass() {
        for suite in Suite::ALL {
            let r = suite.run(10, 11);
            assert!(r.ok(), "{r}\n{}", r.failures.join("\n---\n"));
            assert_eq!(r.cases, 10, "{r}");
        }
    }
}
