use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

/// A node of the node universe. Ids are handed out by an [`Allocator`] and
/// never reused within one session, so a node is placed in service once.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(u64);

impl NodeId {
    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Choice identifier. Opaque; only compared for equality.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ChoiceId(u64);

impl ChoiceId {
    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for ChoiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

impl std::str::FromStr for ChoiceId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('?').unwrap_or(s).parse().map(ChoiceId)
    }
}

impl std::str::FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(NodeId)
    }
}

/// Session-wide source of fresh nodes and choice identifiers.
///
/// Both counters are atomic, so one allocator can be shared by workers
/// evaluating strands concurrently.
#[derive(Debug, Default)]
pub struct Allocator {
    next_node: AtomicU64,
    next_choice: AtomicU64,
}

impl Allocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh_node(&self) -> NodeId {
        NodeId(self.next_node.fetch_add(1, Ordering::Relaxed))
    }

    pub fn fresh_choice(&self) -> ChoiceId {
        ChoiceId(self.next_choice.fetch_add(1, Ordering::Relaxed))
    }

    /// Number of node ids issued so far.
    pub fn nodes_issued(&self) -> u64 {
        self.next_node.load(Ordering::Relaxed)
    }

    pub fn choices_issued(&self) -> u64 {
        self.next_choice.load(Ordering::Relaxed)
    }
}
