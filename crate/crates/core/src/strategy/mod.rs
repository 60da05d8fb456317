//! Evaluation strategies enumerating the values of an expression.

mod dominators;
mod engine;

pub use dominators::{dominator_tree, immediate_dominator, DominatorError};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{canonicalize, print_linear, Allocator, CanonicalForm, ChoiceId, Graph};
use crate::program::{ChoiceRule, Program};
use crate::rewrite::Step;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum StrategyKind {
    Backtrack,
    Copy,
    Bubble,
    PullTab,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Backtrack,
        StrategyKind::Copy,
        StrategyKind::Bubble,
        StrategyKind::PullTab,
    ];
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Backtrack => "backtrack",
            StrategyKind::Copy => "copy",
            StrategyKind::Bubble => "bubble",
            StrategyKind::PullTab => "pulltab",
        })
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Consistency {
    Enforced,
    Disabled,
}

#[derive(Clone, Debug)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Budget shared by all strands of one run.
    pub max_steps: usize,
    pub max_values: Option<usize>,
    pub consistency: Consistency,
    pub hnf_before_pull: bool,
    pub record_traces: bool,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        StrategyConfig {
            kind,
            max_steps: 10_000,
            max_values: None,
            consistency: Consistency::Enforced,
            hnf_before_pull: true,
            record_traces: false,
        }
    }

    pub fn max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    pub fn max_values(mut self, n: usize) -> Self {
        self.max_values = Some(n);
        self
    }

    pub fn unsound(mut self) -> Self {
        self.consistency = Consistency::Disabled;
        self
    }

    pub fn hnf_before_pull(mut self, on: bool) -> Self {
        self.hnf_before_pull = on;
        self
    }

    pub fn traced(mut self) -> Self {
        self.record_traces = true;
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("consistency can only be disabled for the pulltab strategy")]
    UnsoundWithoutPullTab,
    #[error("the expression to evaluate contains variables")]
    NotGround,
}

/// Decisions taken for choice identifiers along one strand. Write-once.
#[derive(Clone, Default, Debug, PartialEq, Eq)]
pub struct Ledger(BTreeMap<ChoiceId, ChoiceRule>);

impl Ledger {
    pub fn get(&self, id: ChoiceId) -> Option<ChoiceRule> {
        self.0.get(&id).copied()
    }

    /// Records `id ↦ rule`. Returns false, leaving the ledger unchanged, if
    /// `id` was already decided differently.
    pub fn decide(&mut self, id: ChoiceId, rule: ChoiceRule) -> bool {
        match self.0.get(&id) {
            Some(r) => *r == rule,
            None => {
                self.0.insert(id, rule);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ChoiceId, ChoiceRule)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }
}

/// Graphs deduplicated modulo renaming of nodes and choice identifiers.
#[derive(Clone, Default, Debug)]
pub struct ValueSet(BTreeMap<CanonicalForm, Graph>);

impl ValueSet {
    pub fn new() -> Self {
        ValueSet::default()
    }

    /// Returns true if `g` was not yet present.
    pub fn insert(&mut self, g: Graph) -> bool {
        let key = canonicalize(&g).expect("graphs are acyclic");
        if self.0.contains_key(&key) {
            return false;
        }
        self.0.insert(key, g);
        true
    }

    pub fn contains(&self, g: &Graph) -> bool {
        self.0
            .contains_key(&canonicalize(g).expect("graphs are acyclic"))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn graphs(&self) -> impl Iterator<Item = &Graph> {
        self.0.values()
    }

    pub fn is_subset(&self, other: &ValueSet) -> bool {
        self.0.keys().all(|k| other.0.contains_key(k))
    }

    /// Members in linear notation, sorted.
    pub fn lines(&self) -> Vec<String> {
        let mut v: Vec<String> = self.0.values().map(print_linear).collect();
        v.sort();
        v
    }
}

impl PartialEq for ValueSet {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.keys().eq(other.0.keys())
    }
}

impl Eq for ValueSet {}

impl FromIterator<Graph> for ValueSet {
    fn from_iter<I: IntoIterator<Item = Graph>>(iter: I) -> Self {
        let mut s = ValueSet::new();
        for g in iter {
            s.insert(g);
        }
        s
    }
}

#[derive(Clone, Default, Debug, PartialEq, Eq)]
pub struct Stats {
    pub steps: usize,
    pub nodes_allocated: u64,
    /// Context nodes duplicated: one per pull-tab, the bubbled region per
    /// bubbling step, the choice's ancestors per copying split.
    pub nodes_cloned: usize,
    pub pull_tabs: usize,
    pub bubbles: usize,
    pub strands_forked: usize,
    pub strands_failed: usize,
    /// Choices reduced to the sibling of a failing alternative.
    pub pruned: usize,
}

impl Stats {
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("steps", self.steps.to_string()),
            ("nodes_allocated", self.nodes_allocated.to_string()),
            ("nodes_cloned", self.nodes_cloned.to_string()),
            ("pull_tabs", self.pull_tabs.to_string()),
            ("bubbles", self.bubbles.to_string()),
            ("strands_forked", self.strands_forked.to_string()),
            ("strands_failed", self.strands_failed.to_string()),
            ("pruned", self.pruned.to_string()),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub values: ValueSet,
    pub failures: usize,
    /// The step budget ran out while some strand was still live.
    pub exhausted: bool,
    pub stats: Stats,
    /// Step sequence of every finished or cut strand, when recorded.
    pub traces: Vec<Vec<Step>>,
}

/// Evaluates `g` to its set of values.
pub fn run(
    p: &Program,
    g: &Graph,
    cfg: &StrategyConfig,
    alloc: &Allocator,
) -> Result<Outcome, ConfigError> {
    run_observed(p, g, cfg, alloc, &mut |_| {})
}

/// Like [`run`], calling `observer` on the initial graph and on every
/// state produced afterwards.
pub fn run_observed(
    p: &Program,
    g: &Graph,
    cfg: &StrategyConfig,
    alloc: &Allocator,
    observer: &mut dyn FnMut(&Graph),
) -> Result<Outcome, ConfigError> {
    if cfg.consistency == Consistency::Disabled && cfg.kind != StrategyKind::PullTab {
        return Err(ConfigError::UnsoundWithoutPullTab);
    }
    if !g.is_ground() {
        return Err(ConfigError::NotGround);
    }
    Ok(engine::Engine::new(p, cfg, alloc, observer).run(g))
}

fn with_kind(
    p: &Program,
    g: &Graph,
    cfg: &StrategyConfig,
    alloc: &Allocator,
    kind: StrategyKind,
) -> Result<Outcome, ConfigError> {
    let cfg = StrategyConfig {
        kind,
        ..cfg.clone()
    };
    run(p, g, &cfg, alloc)
}

pub fn run_backtrack(
    p: &Program,
    g: &Graph,
    cfg: &StrategyConfig,
    alloc: &Allocator,
) -> Result<Outcome, ConfigError> {
    with_kind(p, g, cfg, alloc, StrategyKind::Backtrack)
}

pub fn run_copy(
    p: &Program,
    g: &Graph,
    cfg: &StrategyConfig,
    alloc: &Allocator,
) -> Result<Outcome, ConfigError> {
    with_kind(p, g, cfg, alloc, StrategyKind::Copy)
}

pub fn run_bubble(
    p: &Program,
    g: &Graph,
    cfg: &StrategyConfig,
    alloc: &Allocator,
) -> Result<Outcome, ConfigError> {
    with_kind(p, g, cfg, alloc, StrategyKind::Bubble)
}

pub fn run_pulltab(
    p: &Program,
    g: &Graph,
    cfg: &StrategyConfig,
    alloc: &Allocator,
) -> Result<Outcome, ConfigError> {
    with_kind(p, g, cfg, alloc, StrategyKind::PullTab)
}

/// True iff all choice steps at nodes sharing an identifier use the same rule.
pub fn check_consistency(trace: &[Step]) -> bool {
    let mut seen: BTreeMap<ChoiceId, ChoiceRule> = BTreeMap::new();
    for s in trace {
        if let (Some(rule), Some(id)) = (s.choice_rule(), s.choice) {
            if *seen.entry(id).or_insert(rule) != rule {
                return false;
            }
        }
    }
    true
}
