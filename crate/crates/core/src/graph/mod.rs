//! Rooted term graphs decorated with choice identifiers.
//!
//! A [`Graph`] is an immutable value: every transformation returns a new
//! graph that shares unchanged nodes with its input. Node and choice
//! identifiers come from a session-wide [`Allocator`].

mod canon;
mod dot;
mod ids;
mod linear;
mod symbol;
mod term;

pub use canon::{canonicalize, graphs_equal, CanonEntry, CanonicalForm};
pub use dot::dot_export;
pub use ids::{Allocator, ChoiceId, NodeId};
pub use linear::{choice_tag, parse_linear, print_linear};
pub use symbol::{tuple_name, Signature, Symbol, SymbolKind, CHOICE, PAIR};
pub use term::{Graph, GraphBuilder, Label, Node};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("arity mismatch for `{symbol}`: expected {expected}, found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("node name `{0}` rebound with a different label or successors")]
    NameRebound(String),
    #[error("cycle detected through node {0}")]
    Cycle(NodeId),
    #[error("node {0} is not in the graph")]
    NotInGraph(NodeId),
    #[error("node {node} refers to missing successor {succ}")]
    DanglingSuccessor { node: NodeId, succ: NodeId },
    #[error("node {0} is not reachable from the root")]
    Unreachable(NodeId),
    #[error("node {0}: choice identifier must be present exactly on choice nodes")]
    Decoration(NodeId),
    #[error("variable `{0}` labels more than one node")]
    DuplicateVariable(String),
    #[error("shared node {0} disagrees with the host graph")]
    InconsistentSharing(NodeId),
    #[error("symbol `{name}` already declared as {existing}, cannot redeclare as {requested}")]
    SymbolConflict {
        name: String,
        existing: String,
        requested: String,
    },
}
