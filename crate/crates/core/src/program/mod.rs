//! Program files: parsing, LOIS validation and definitional trees.
//!
//! ```text
//! -- comment
//! data Bit = 0 | 1
//! data Nat = Z | S/1
//! flip 0 = 1
//! flip 1 = 0
//! coin = 0 ? 1
//! main = (flip x, flip x) where x = coin
//! ```

mod parse;
mod tree;
mod validate;

pub use parse::parse_program;
pub use tree::{build_tree, DefTree, NotInductivelySequential, Pattern};
pub use validate::validate_lois;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{Allocator, Graph, GraphError, NodeId, Signature, Symbol};

/// The two rules of the choice operation: `x ? _ = x` and `_ ? y = y`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ChoiceRule {
    C1,
    C2,
}

impl ChoiceRule {
    pub fn other(self) -> ChoiceRule {
        match self {
            ChoiceRule::C1 => ChoiceRule::C2,
            ChoiceRule::C2 => ChoiceRule::C1,
        }
    }

    /// Index of the alternative the rule selects.
    pub fn alternative(self) -> usize {
        match self {
            ChoiceRule::C1 => 0,
            ChoiceRule::C2 => 1,
        }
    }
}

/// Names a rule: one of the choice rules, or the `index`-th (0-based) rule
/// of a program operation. Printed as `C1`, `C2` or `op.k` with `k` 1-based.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum RuleRef {
    Choice(ChoiceRule),
    User { op: Arc<str>, index: usize },
}

impl RuleRef {
    pub fn choice_rule(&self) -> Option<ChoiceRule> {
        match self {
            RuleRef::Choice(c) => Some(*c),
            RuleRef::User { .. } => None,
        }
    }
}

impl fmt::Display for RuleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleRef::Choice(ChoiceRule::C1) => f.write_str("C1"),
            RuleRef::Choice(ChoiceRule::C2) => f.write_str("C2"),
            RuleRef::User { op, index } => write!(f, "{op}.{}", index + 1),
        }
    }
}

impl FromStr for RuleRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "C1" => return Ok(RuleRef::Choice(ChoiceRule::C1)),
            "C2" => return Ok(RuleRef::Choice(ChoiceRule::C2)),
            _ => {}
        }
        let (op, k) = s
            .rsplit_once('.')
            .ok_or_else(|| format!("bad rule reference `{s}`"))?;
        let k: usize = k.parse().map_err(|_| format!("bad rule index in `{s}`"))?;
        if k == 0 || op.is_empty() {
            return Err(format!("bad rule reference `{s}`"));
        }
        Ok(RuleRef::User {
            op: op.into(),
            index: k - 1,
        })
    }
}

/// A rewrite rule. The lhs and rhs graphs share their variable nodes.
#[derive(Clone, Debug)]
pub struct Rule {
    pub(crate) op: Symbol,
    pub(crate) reference: RuleRef,
    pub(crate) line: usize,
    pub(crate) lhs: Graph,
    pub(crate) rhs: Graph,
    pub(crate) var_map: BTreeMap<Arc<str>, NodeId>,
    pub(crate) pattern: Pattern,
    pub(crate) fresh_nodes: usize,
}

impl Rule {
    pub fn op(&self) -> &Symbol {
        &self.op
    }

    pub fn reference(&self) -> &RuleRef {
        &self.reference
    }

    /// Source line (1-based); 0 for built-in rules.
    pub fn line(&self) -> usize {
        self.line
    }

    pub fn lhs(&self) -> &Graph {
        &self.lhs
    }

    pub fn rhs(&self) -> &Graph {
        &self.rhs
    }

    pub fn var_map(&self) -> &BTreeMap<Arc<str>, NodeId> {
        &self.var_map
    }

    /// The lhs as a call pattern.
    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    /// Nodes allocated when the rule fires: every non-variable rhs node.
    pub fn fresh_nodes(&self) -> usize {
        self.fresh_nodes
    }

    pub fn is_choice_rule(&self) -> bool {
        matches!(self.reference, RuleRef::Choice(_))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {}",
            self.pattern,
            crate::graph::print_linear(&self.rhs)
        )
    }
}

/// A located LOIS violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown symbol `{name}`")]
    UnknownSymbol { line: usize, name: String },
    #[error("line {line}: `{symbol}` expects {expected} argument(s), found {found}")]
    Arity {
        line: usize,
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: rhs variable `{name}` is unbound")]
    UnboundVariable { line: usize, name: String },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
    #[error("program is not LOIS:\n{}", list(.0))]
    NotLois(Vec<Violation>),
}

fn list(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A parsed, not yet validated program.
#[derive(Clone, Debug)]
pub struct UncheckedProgram {
    pub(crate) signature: Signature,
    pub(crate) rules: Vec<Rule>,
    pub(crate) groups: Vec<Vec<Symbol>>,
    pub(crate) choice_rules: [Rule; 2],
}

impl UncheckedProgram {
    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }
}

/// A validated LOIS program. Immutable; safe to share between threads.
#[derive(Clone, Debug)]
pub struct Program {
    signature: Signature,
    rules: BTreeMap<String, Vec<Rule>>,
    trees: BTreeMap<String, DefTree>,
    group_of: HashMap<String, usize>,
    groups: Vec<Vec<Symbol>>,
    choice_rules: [Rule; 2],
}

impl Program {
    /// Parses and validates a program file.
    pub fn from_source(text: &str, alloc: &Allocator) -> Result<Program, ProgramError> {
        validate_lois(parse_program(text, alloc)?)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn rules_of(&self, op: &str) -> &[Rule] {
        self.rules.get(op).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.values().flatten()
    }

    pub fn rule(&self, r: &RuleRef) -> Option<&Rule> {
        match r {
            RuleRef::Choice(c) => Some(self.choice_rule(*c)),
            RuleRef::User { op, index } => self.rules.get(op.as_ref())?.get(*index),
        }
    }

    pub fn choice_rule(&self, c: ChoiceRule) -> &Rule {
        &self.choice_rules[c.alternative()]
    }

    pub fn tree(&self, op: &str) -> Option<&DefTree> {
        self.trees.get(op)
    }

    pub fn trees(&self) -> impl Iterator<Item = (&str, &DefTree)> {
        self.trees.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// The nullary `main` operation's single rule, if any.
    pub fn main_rule(&self) -> Option<&Rule> {
        let sym = self.signature.get("main")?;
        if !sym.is_operation() || sym.arity() != 0 {
            return None;
        }
        self.rules_of("main").first()
    }

    /// Constructors of the data type `c` belongs to, in declaration order.
    pub fn siblings(&self, c: &Symbol) -> Vec<Symbol> {
        match self.group_of.get(c.name()) {
            Some(g) => self.groups[*g].clone(),
            None => vec![c.clone()],
        }
    }

    pub fn data_types(&self) -> &[Vec<Symbol>] {
        &self.groups
    }
}
