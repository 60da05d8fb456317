//! Linear notation for graphs: `expr ::= [name ':'] symbol ['(' expr {',' expr} ')']`.
//!
//! A name bound with `name:` may later appear bare to denote the same node.
//! Choice nodes may carry a tag, `?_a`; equal tags within one parse share a
//! fresh choice identifier.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{
    Allocator, ChoiceId, Graph, GraphBuilder, GraphError, Label, NodeId, Signature, Symbol,
};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Choice(Option<String>),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    sig: &'a Signature,
    builder: GraphBuilder<'a>,
    names: HashMap<String, NodeId>,
    pending: HashSet<String>,
    tags: HashMap<String, ChoiceId>,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn is_op_char(c: char) -> bool {
    "+-*/<>=!&|$%^~.@".contains(c)
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, GraphError> {
        Err(GraphError::Syntax {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn run(&mut self, pred: fn(char) -> bool) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if pred(c)) {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn token(&mut self) -> Result<Tok, GraphError> {
        self.ws();
        match self.peek() {
            Some('(') => {
                let start = self.pos;
                self.bump();
                let commas = self.run(|c| c == ',');
                if commas.is_empty() || self.peek() != Some(')') {
                    self.pos = start;
                    return self.err("expected a symbol");
                }
                self.bump();
                Ok(Tok::Ident(format!("({commas})")))
            }
            Some('?') => {
                self.bump();
                if self.peek() == Some('_') {
                    self.bump();
                    let tag = self.run(is_ident_char);
                    if tag.is_empty() {
                        return self.err("empty choice tag");
                    }
                    Ok(Tok::Choice(Some(tag)))
                } else {
                    Ok(Tok::Choice(None))
                }
            }
            Some(c) if is_ident_char(c) => Ok(Tok::Ident(self.run(is_ident_char))),
            Some(c) if is_op_char(c) => Ok(Tok::Ident(self.run(is_op_char))),
            Some(c) => self.err(format!("unexpected character `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }

    fn expr(&mut self) -> Result<NodeId, GraphError> {
        let tok = self.token()?;
        self.ws();
        if let Tok::Ident(name) = &tok {
            if self.peek() == Some(':') && name.chars().all(is_ident_char) {
                self.bump();
                return self.bind(name.clone());
            }
            if self.pending.contains(name) {
                return Err(GraphError::Syntax {
                    offset: self.pos,
                    message: format!("cycle detected: `{name}` refers to itself"),
                });
            }
            if let Some(&id) = self.names.get(name) {
                if self.peek() == Some('(') {
                    return self.err(format!("node name `{name}` cannot take arguments"));
                }
                return Ok(id);
            }
        }
        self.application(tok)
    }

    fn bind(&mut self, name: String) -> Result<NodeId, GraphError> {
        self.pending.insert(name.clone());
        let id = self.expr()?;
        self.pending.remove(&name);
        if let Some(&prev) = self.names.get(&name) {
            let (a, b) = (self.builder.get(prev), self.builder.get(id));
            match (a, b) {
                (Some(a), Some(b)) if a.label == b.label && a.succs == b.succs => return Ok(prev),
                _ => return Err(GraphError::NameRebound(name)),
            }
        }
        self.names.insert(name, id);
        Ok(id)
    }

    fn application(&mut self, tok: Tok) -> Result<NodeId, GraphError> {
        let (sym, choice) = match tok {
            Tok::Choice(tag) => {
                let id = match tag {
                    Some(t) => {
                        let alloc = self.builder.alloc();
                        *self.tags.entry(t).or_insert_with(|| alloc.fresh_choice())
                    }
                    None => self.builder.alloc().fresh_choice(),
                };
                (Symbol::choice(), Some(id))
            }
            Tok::Ident(name) => {
                let sym = self
                    .sig
                    .lookup(&name)
                    .ok_or_else(|| GraphError::UnknownSymbol(name.clone()))?;
                (sym, None)
            }
        };
        let mut args = Vec::new();
        self.ws();
        if self.peek() == Some('(') {
            self.bump();
            loop {
                args.push(self.expr()?);
                self.ws();
                match self.bump() {
                    Some(',') => continue,
                    Some(')') => break,
                    _ => return self.err("expected `,` or `)`"),
                }
            }
        }
        if args.len() != sym.arity() {
            return Err(GraphError::ArityMismatch {
                symbol: sym.name().to_string(),
                expected: sym.arity(),
                found: args.len(),
            });
        }
        Ok(self.builder.add_node(Label::Sym(sym), args, choice))
    }
}

/// Parses a ground graph in linear notation against `sig`.
pub fn parse_linear(text: &str, sig: &Signature, alloc: &Allocator) -> Result<Graph, GraphError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        sig,
        builder: GraphBuilder::new(alloc),
        names: HashMap::new(),
        pending: HashSet::new(),
        tags: HashMap::new(),
    };
    let root = p.expr()?;
    p.ws();
    if p.pos != text.len() {
        return p.err("trailing input");
    }
    p.builder.finish(root)
}

/// Tag used when printing the `i`-th distinct choice identifier: a, b, .., z, aa, ab, ..
pub fn choice_tag(mut i: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'a' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

/// Prints `g` in linear notation. Nodes with in-degree two or more are named
/// `n<k>`, `k` being the node's preorder ordinal; choices print as `?_<tag>`.
pub fn print_linear(g: &Graph) -> String {
    let order = g.preorder();
    let ordinal: HashMap<NodeId, usize> = order.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let indeg = g.in_degrees();
    let mut tags: BTreeMap<ChoiceId, usize> = BTreeMap::new();
    for n in &order {
        if let Some(c) = g.choice_id(*n) {
            let next = tags.len();
            tags.entry(c).or_insert(next);
        }
    }
    let mut out = String::new();
    let mut printed = HashSet::new();
    let ctx = PrintCtx {
        g,
        ordinal: &ordinal,
        indeg: &indeg,
        tags: &tags,
    };
    ctx.print(g.root(), &mut out, &mut printed);
    out
}

struct PrintCtx<'a> {
    g: &'a Graph,
    ordinal: &'a HashMap<NodeId, usize>,
    indeg: &'a BTreeMap<NodeId, usize>,
    tags: &'a BTreeMap<ChoiceId, usize>,
}

impl PrintCtx<'_> {
    fn named(&self, n: NodeId) -> bool {
        self.indeg.get(&n).copied().unwrap_or(0) >= 2
    }

    fn is_atom(&self, n: NodeId, printed: &HashSet<NodeId>) -> bool {
        printed.contains(&n) && self.named(n) || self.g.succs(n).is_empty()
    }

    fn print(&self, n: NodeId, out: &mut String, printed: &mut HashSet<NodeId>) {
        let named = self.named(n);
        if named && printed.contains(&n) {
            out.push_str(&format!("n{}", self.ordinal[&n]));
            return;
        }
        printed.insert(n);
        if named {
            out.push_str(&format!("n{}:", self.ordinal[&n]));
        }
        let node = self.g.node(n).expect("node in graph");
        out.push_str(node.label.name());
        if let Some(c) = node.choice {
            out.push('_');
            out.push_str(&choice_tag(self.tags[&c]));
        }
        if node.succs.is_empty() {
            return;
        }
        // Arguments that are all atoms print compactly: `(,)(0,1)`.
        let mut compact = true;
        let mut seen = printed.clone();
        for s in &node.succs {
            if !self.is_atom(*s, &seen) {
                compact = false;
                break;
            }
            seen.insert(*s);
        }
        out.push('(');
        for (i, s) in node.succs.iter().enumerate() {
            if i > 0 {
                out.push_str(if compact { "," } else { ", " });
            }
            self.print(*s, out, printed);
        }
        out.push(')');
    }
}
