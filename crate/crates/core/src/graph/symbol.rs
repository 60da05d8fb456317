use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use super::GraphError;

/// The name of the choice operation.
pub const CHOICE: &str = "?";
/// The name of the built-in pair constructor.
pub const PAIR: &str = "(,)";

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SymbolKind {
    Constructor,
    Operation,
    Choice,
}

#[derive(Debug)]
struct SymbolInfo {
    name: Arc<str>,
    kind: SymbolKind,
    arity: usize,
}

/// A signature symbol. Cheap to clone; compared by name, kind and arity.
#[derive(Clone)]
pub struct Symbol(Arc<SymbolInfo>);

impl Symbol {
    pub fn constructor(name: &str, arity: usize) -> Self {
        Self::new(name, SymbolKind::Constructor, arity)
    }

    pub fn operation(name: &str, arity: usize) -> Self {
        Self::new(name, SymbolKind::Operation, arity)
    }

    /// The binary choice symbol `?`.
    pub fn choice() -> Self {
        static CHOICE_SYM: OnceLock<Symbol> = OnceLock::new();
        CHOICE_SYM
            .get_or_init(|| Symbol::new(CHOICE, SymbolKind::Choice, 2))
            .clone()
    }

    fn new(name: &str, kind: SymbolKind, arity: usize) -> Self {
        Symbol(Arc::new(SymbolInfo {
            name: name.into(),
            kind,
            arity,
        }))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn name_arc(&self) -> Arc<str> {
        Arc::clone(&self.0.name)
    }

    pub fn kind(&self) -> SymbolKind {
        self.0.kind
    }

    pub fn arity(&self) -> usize {
        self.0.arity
    }

    pub fn is_constructor(&self) -> bool {
        self.0.kind == SymbolKind::Constructor
    }

    pub fn is_operation(&self) -> bool {
        self.0.kind == SymbolKind::Operation
    }

    pub fn is_choice(&self) -> bool {
        self.0.kind == SymbolKind::Choice
    }

    fn key(&self) -> (&str, SymbolKind, usize) {
        (&self.0.name, self.0.kind, self.0.arity)
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.key() == other.key()
    }
}

impl Eq for Symbol {}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name(), self.arity())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Name-indexed symbol table. Always contains `?` and the pair constructor.
#[derive(Clone, Debug)]
pub struct Signature {
    symbols: BTreeMap<String, Symbol>,
}

impl Default for Signature {
    fn default() -> Self {
        Self::new()
    }
}

impl Signature {
    pub fn new() -> Self {
        let mut symbols = BTreeMap::new();
        symbols.insert(CHOICE.to_string(), Symbol::choice());
        symbols.insert(PAIR.to_string(), Symbol::constructor(PAIR, 2));
        Signature { symbols }
    }

    /// Adds a symbol, failing if the name is already bound differently.
    pub fn insert(&mut self, sym: Symbol) -> Result<Symbol, GraphError> {
        match self.symbols.get(sym.name()) {
            Some(existing) if *existing == sym => Ok(existing.clone()),
            Some(existing) => Err(GraphError::SymbolConflict {
                name: sym.name().to_string(),
                existing: format!("{:?} {:?}", existing.kind(), existing),
                requested: format!("{:?} {:?}", sym.kind(), sym),
            }),
            None => {
                self.symbols.insert(sym.name().to_string(), sym.clone());
                Ok(sym)
            }
        }
    }

    pub fn with_constructor(mut self, name: &str, arity: usize) -> Self {
        self.insert(Symbol::constructor(name, arity))
            .expect("conflicting constructor");
        self
    }

    pub fn with_operation(mut self, name: &str, arity: usize) -> Self {
        self.insert(Symbol::operation(name, arity))
            .expect("conflicting operation");
        self
    }

    pub fn get(&self, name: &str) -> Option<&Symbol> {
        if let Some(sym) = self.symbols.get(name) {
            return Some(sym);
        }
        None
    }

    /// Looks up `name`, synthesizing tuple constructors `(,,)` on demand.
    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        self.get(name).cloned().or_else(|| tuple_symbol(name))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.values()
    }

    pub fn constructors(&self) -> impl Iterator<Item = &Symbol> {
        self.iter().filter(|s| s.is_constructor())
    }

    pub fn operations(&self) -> impl Iterator<Item = &Symbol> {
        self.iter().filter(|s| s.is_operation())
    }
}

/// Name of the tuple constructor of the given arity, e.g. `(,,)` for 3.
pub fn tuple_name(arity: usize) -> String {
    format!("({})", ",".repeat(arity.saturating_sub(1)))
}

fn tuple_symbol(name: &str) -> Option<Symbol> {
    let inner = name.strip_prefix('(')?.strip_suffix(')')?;
    if inner.is_empty() || !inner.chars().all(|c| c == ',') {
        return None;
    }
    Some(Symbol::constructor(name, inner.len() + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choice_is_binary_and_unique() {
        let sig = Signature::new();
        let q = sig.get("?").unwrap();
        assert!(q.is_choice());
        assert_eq!(q.arity(), 2);
        assert_eq!(sig.iter().filter(|s| s.is_choice()).count(), 1);
    }

    #[test]
    fn arity_is_fixed_per_name() {
        let mut sig = Signature::new().with_constructor("S", 1);
        assert!(sig.insert(Symbol::constructor("S", 2)).is_err());
        assert!(sig.insert(Symbol::operation("S", 1)).is_err());
        assert!(sig.insert(Symbol::constructor("S", 1)).is_ok());
    }

    #[test]
    fn tuples_are_synthesized() {
        let sig = Signature::new();
        assert_eq!(sig.lookup("(,,)").unwrap().arity(), 3);
        assert_eq!(tuple_name(3), "(,,)");
        assert!(sig.lookup("(x)").is_none());
    }
}
