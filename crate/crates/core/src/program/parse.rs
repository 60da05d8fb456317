use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::{ChoiceRule, Pattern, ProgramError, Rule, RuleRef, UncheckedProgram};
use crate::graph::{
    tuple_name, Allocator, GraphBuilder, Label, NodeId, Signature, Symbol, CHOICE, PAIR,
};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Tuple(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Query,
    Wild,
    Semi,
    Where,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str, line: usize) -> Result<Vec<Tok>, ProgramError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j] == ',' {
                    j += 1;
                }
                if j > i + 1 && j < chars.len() && chars[j] == ')' {
                    toks.push(Tok::Tuple(tuple_name(j - i)));
                    i = j + 1;
                } else {
                    toks.push(Tok::LParen);
                    i += 1;
                }
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                toks.push(Tok::Comma);
                i += 1;
            }
            '=' => {
                toks.push(Tok::Eq);
                i += 1;
            }
            '?' => {
                toks.push(Tok::Query);
                i += 1;
            }
            ';' => {
                toks.push(Tok::Semi);
                i += 1;
            }
            _ if is_ident_char(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                toks.push(match word.as_str() {
                    "_" => Tok::Wild,
                    "where" => Tok::Where,
                    _ => Tok::Ident(word),
                });
            }
            _ => {
                return Err(ProgramError::Syntax {
                    line,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(toks)
}

/// Surface expression, before name resolution.
#[derive(Clone, Debug)]
enum Expr {
    Name(String),
    App(String, Vec<Expr>),
    Tuple(Vec<Expr>),
    Choice(Box<Expr>, Box<Expr>),
    Wild,
}

struct TokParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> TokParser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ProgramError> {
        Err(ProgramError::Syntax {
            line: self.line,
            message: message.into(),
        })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Ident(_) | Tok::Tuple(_) | Tok::LParen | Tok::Wild)
        )
    }

    /// expr ::= app ['?' expr]
    fn expr(&mut self) -> Result<Expr, ProgramError> {
        let left = self.app()?;
        if self.peek() == Some(&Tok::Query) {
            self.bump();
            let right = self.expr()?;
            return Ok(Expr::Choice(Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    /// app ::= name atom* | atom
    fn app(&mut self) -> Result<Expr, ProgramError> {
        match self.peek() {
            Some(Tok::Ident(name)) | Some(Tok::Tuple(name)) => {
                let is_tuple = matches!(self.peek(), Some(Tok::Tuple(_)));
                self.bump();
                let mut args = Vec::new();
                while self.starts_atom() {
                    args.push(self.atom()?);
                }
                if args.is_empty() && !is_tuple {
                    Ok(Expr::Name(name.clone()))
                } else {
                    Ok(Expr::App(name.clone(), args))
                }
            }
            Some(_) => {
                let a = self.atom()?;
                if self.starts_atom() {
                    return self.err("only named symbols can be applied");
                }
                Ok(a)
            }
            None => self.err("expected an expression"),
        }
    }

    fn atom(&mut self) -> Result<Expr, ProgramError> {
        match self.bump() {
            Some(Tok::Ident(n)) => Ok(Expr::Name(n.clone())),
            Some(Tok::Tuple(n)) => Ok(Expr::App(n.clone(), Vec::new())),
            Some(Tok::Wild) => Ok(Expr::Wild),
            Some(Tok::LParen) => {
                let mut items = vec![self.expr()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.bump();
                    items.push(self.expr()?);
                }
                if self.bump() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                if items.len() == 1 {
                    Ok(items.pop().unwrap())
                } else {
                    Ok(Expr::Tuple(items))
                }
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of line"),
        }
    }
}

struct RawRule {
    line: usize,
    head: String,
    args: Vec<Expr>,
    rhs: Expr,
    bindings: Vec<(String, Expr)>,
}

fn parse_rule_line(toks: &[Tok], line: usize) -> Result<RawRule, ProgramError> {
    let mut depth = 0i32;
    let split = toks
        .iter()
        .position(|t| {
            match t {
                Tok::LParen => depth += 1,
                Tok::RParen => depth -= 1,
                _ => {}
            }
            depth == 0 && *t == Tok::Eq
        })
        .ok_or(ProgramError::Syntax {
            line,
            message: "expected `=`".into(),
        })?;
    let (lhs, rest) = (&toks[..split], &toks[split + 1..]);

    let mut p = TokParser {
        toks: lhs,
        pos: 0,
        line,
    };
    let (head, args) = match p.peek() {
        Some(Tok::Query) => {
            p.bump();
            let mut args = Vec::new();
            while !p.at_end() {
                args.push(p.atom()?);
            }
            (CHOICE.to_string(), args)
        }
        Some(Tok::Ident(_)) | Some(Tok::Wild) | Some(Tok::LParen) | Some(Tok::Tuple(_)) => {
            let head_tok = p.peek().cloned();
            let first = if matches!(head_tok, Some(Tok::Ident(_))) {
                p.bump();
                None
            } else {
                Some(p.atom()?)
            };
            let mut args = Vec::new();
            while p.starts_atom() {
                args.push(p.atom()?);
            }
            if p.peek() == Some(&Tok::Query) {
                // infix choice head: `x ? y`
                p.bump();
                let left = match (first, head_tok) {
                    (Some(a), _) if args.is_empty() => a,
                    (None, Some(Tok::Ident(h))) if args.is_empty() => Expr::Name(h),
                    (None, Some(Tok::Ident(h))) => Expr::App(h, args),
                    _ => return p.err("malformed left operand of `?`"),
                };
                let right = p.app()?;
                (CHOICE.to_string(), vec![left, right])
            } else {
                match (first, head_tok) {
                    (None, Some(Tok::Ident(h))) => (h, args),
                    _ => return p.err("a rule must start with an operation name"),
                }
            }
        }
        _ => return p.err("a rule must start with an operation name"),
    };
    if !p.at_end() {
        return p.err("unexpected tokens in left-hand side");
    }

    let mut p = TokParser {
        toks: rest,
        pos: 0,
        line,
    };
    let rhs = p.expr()?;
    let mut bindings = Vec::new();
    if p.peek() == Some(&Tok::Where) {
        p.bump();
        loop {
            let name = match p.bump() {
                Some(Tok::Ident(n)) => n.clone(),
                _ => return p.err("expected a name after `where`"),
            };
            if p.bump() != Some(&Tok::Eq) {
                return p.err("expected `=` in where binding");
            }
            bindings.push((name, p.expr()?));
            match p.peek() {
                Some(Tok::Semi) => {
                    p.bump();
                }
                None => break,
                Some(t) => return p.err(format!("unexpected token {t:?} in where clause")),
            }
        }
    }
    if !p.at_end() {
        return p.err("unexpected tokens after right-hand side");
    }
    Ok(RawRule {
        line,
        head,
        args,
        rhs,
        bindings,
    })
}

fn parse_data(rest: &str, line: usize, sig: &mut Signature) -> Result<Vec<Symbol>, ProgramError> {
    let (name, ctors) = rest.split_once('=').ok_or(ProgramError::Syntax {
        line,
        message: "expected `data Name = c1 | ..`".into(),
    })?;
    if name.trim().is_empty() || !name.trim().chars().all(is_ident_char) {
        return Err(ProgramError::Syntax {
            line,
            message: "bad data type name".into(),
        });
    }
    let mut group = Vec::new();
    for c in ctors.split('|') {
        let c = c.trim();
        let (cname, arity) = match c.split_once('/') {
            Some((n, a)) => (
                n.trim(),
                a.trim()
                    .parse::<usize>()
                    .map_err(|_| ProgramError::Syntax {
                        line,
                        message: format!("bad arity in `{c}`"),
                    })?,
            ),
            None => (c, 0),
        };
        if cname.is_empty() || !cname.chars().all(is_ident_char) || cname == "_" {
            return Err(ProgramError::Syntax {
                line,
                message: format!("bad constructor `{c}`"),
            });
        }
        let sym = sig
            .insert(Symbol::constructor(cname, arity))
            .map_err(|source| ProgramError::Graph { line, source })?;
        group.push(sym);
    }
    Ok(group)
}

pub(crate) fn choice_rules(alloc: &Allocator) -> [Rule; 2] {
    let make = |which: ChoiceRule| {
        let mut b = GraphBuilder::new(alloc);
        let x = b.add_var("x");
        let y = b.add_var("y");
        let root = b.add(&Symbol::choice(), vec![x, y]);
        let keep = if which == ChoiceRule::C1 { x } else { y };
        let mut graphs = b.finish_many(&[root, keep]).expect("choice rule graphs");
        let rhs = graphs.pop().unwrap();
        let lhs = graphs.pop().unwrap();
        let var_map = BTreeMap::from([(Arc::from("x"), x), (Arc::from("y"), y)]);
        Rule {
            op: Symbol::choice(),
            reference: RuleRef::Choice(which),
            line: 0,
            lhs,
            rhs,
            var_map,
            pattern: Pattern::App(
                Symbol::choice(),
                vec![Pattern::Var("x".into()), Pattern::Var("y".into())],
            ),
            fresh_nodes: 0,
        }
    };
    [make(ChoiceRule::C1), make(ChoiceRule::C2)]
}

/// Parses a program file. Symbols are resolved and rule graphs are built,
/// but LOIS conditions are left to [`validate_lois`](super::validate_lois).
pub fn parse_program(text: &str, alloc: &Allocator) -> Result<UncheckedProgram, ProgramError> {
    let mut sig = Signature::new();
    let mut groups: Vec<Vec<Symbol>> = vec![vec![sig.get(PAIR).unwrap().clone()]];
    let mut raw = Vec::new();

    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let src = match full.find("--") {
            Some(k) => &full[..k],
            None => full,
        };
        let trimmed = src.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("data ") {
            groups.push(parse_data(rest, line, &mut sig)?);
            continue;
        }
        raw.push(parse_rule_line(&lex(trimmed, line)?, line)?);
    }

    // Operations are declared by the heads of their rules.
    for r in &raw {
        if r.head == CHOICE {
            continue;
        }
        match sig.get(&r.head) {
            Some(s) if s.is_constructor() => {}
            Some(s) if s.arity() != r.args.len() => {
                return Err(ProgramError::Arity {
                    line: r.line,
                    symbol: r.head.clone(),
                    expected: s.arity(),
                    found: r.args.len(),
                })
            }
            Some(_) => {}
            None => {
                sig.insert(Symbol::operation(&r.head, r.args.len()))
                    .map_err(|source| ProgramError::Graph {
                        line: r.line,
                        source,
                    })?;
            }
        }
    }

    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut rules = Vec::with_capacity(raw.len());
    for r in raw {
        let op = if r.head == CHOICE {
            Symbol::choice()
        } else {
            sig.get(&r.head).cloned().expect("heads were declared")
        };
        if op.arity() != r.args.len() {
            return Err(ProgramError::Arity {
                line: r.line,
                symbol: r.head.clone(),
                expected: op.arity(),
                found: r.args.len(),
            });
        }
        let index = counts.entry(r.head.clone()).or_default();
        let reference = RuleRef::User {
            op: op.name_arc(),
            index: *index,
        };
        *index += 1;
        rules.push(build_rule(&sig, alloc, op, reference, r)?);
    }

    Ok(UncheckedProgram {
        signature: sig,
        rules,
        groups,
        choice_rules: choice_rules(alloc),
    })
}

struct RuleBuilder<'a> {
    sig: &'a Signature,
    line: usize,
    b: GraphBuilder<'a>,
    vars: BTreeMap<Arc<str>, NodeId>,
    wilds: usize,
}

impl RuleBuilder<'_> {
    fn lookup(&self, name: &str) -> Result<Symbol, ProgramError> {
        self.sig
            .lookup(name)
            .ok_or_else(|| ProgramError::UnknownSymbol {
                line: self.line,
                name: name.to_string(),
            })
    }

    fn arity_check(&self, sym: &Symbol, found: usize) -> Result<(), ProgramError> {
        if sym.arity() != found {
            return Err(ProgramError::Arity {
                line: self.line,
                symbol: sym.name().to_string(),
                expected: sym.arity(),
                found,
            });
        }
        Ok(())
    }

    fn var_node(&mut self, name: &str) -> (Pattern, NodeId) {
        let key: Arc<str> = name.into();
        let id = match self.vars.get(&key) {
            Some(id) => *id,
            None => {
                let id = self.b.add_var(name);
                self.vars.insert(key.clone(), id);
                id
            }
        };
        (Pattern::Var(key), id)
    }

    fn pattern(&mut self, e: &Expr) -> Result<(Pattern, NodeId), ProgramError> {
        match e {
            Expr::Wild => {
                self.wilds += 1;
                Ok(self.var_node(&format!("_{}", self.wilds)))
            }
            Expr::Name(n) => match self.sig.lookup(n) {
                Some(sym) => self.pattern_app(sym, &[]),
                None => Ok(self.var_node(n)),
            },
            Expr::App(n, args) => {
                let sym = self.lookup(n)?;
                self.pattern_app(sym, args)
            }
            Expr::Tuple(items) => {
                let sym = self.lookup(&tuple_name(items.len()))?;
                self.pattern_app(sym, items)
            }
            Expr::Choice(l, r) => {
                self.pattern_app(Symbol::choice(), &[(**l).clone(), (**r).clone()])
            }
        }
    }

    fn pattern_app(
        &mut self,
        sym: Symbol,
        args: &[Expr],
    ) -> Result<(Pattern, NodeId), ProgramError> {
        self.arity_check(&sym, args.len())?;
        let mut pats = Vec::with_capacity(args.len());
        let mut ids = Vec::with_capacity(args.len());
        for a in args {
            let (p, id) = self.pattern(a)?;
            pats.push(p);
            ids.push(id);
        }
        let id = self.b.add(&sym, ids);
        Ok((Pattern::App(sym, pats), id))
    }

    /// Builds an rhs expression. Arguments are resolved before the head.
    fn expr(&mut self, e: &Expr, env: &HashMap<String, NodeId>) -> Result<NodeId, ProgramError> {
        match e {
            Expr::Wild => Err(ProgramError::Syntax {
                line: self.line,
                message: "`_` is not allowed in a right-hand side".into(),
            }),
            Expr::Name(n) => {
                if let Some(id) = env.get(n) {
                    return Ok(*id);
                }
                match self.sig.lookup(n) {
                    Some(sym) => {
                        self.arity_check(&sym, 0)?;
                        Ok(self.b.add(&sym, Vec::new()))
                    }
                    None => Err(ProgramError::UnboundVariable {
                        line: self.line,
                        name: n.clone(),
                    }),
                }
            }
            Expr::App(n, args) => {
                let ids = args
                    .iter()
                    .map(|a| self.expr(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                if env.contains_key(n) {
                    return Err(ProgramError::Syntax {
                        line: self.line,
                        message: format!("variable `{n}` cannot be applied"),
                    });
                }
                let sym = self.lookup(n)?;
                self.arity_check(&sym, ids.len())?;
                Ok(self.b.add(&sym, ids))
            }
            Expr::Tuple(items) => {
                let ids = items
                    .iter()
                    .map(|a| self.expr(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                let sym = self.lookup(&tuple_name(items.len()))?;
                Ok(self.b.add(&sym, ids))
            }
            Expr::Choice(l, r) => {
                let l = self.expr(l, env)?;
                let r = self.expr(r, env)?;
                Ok(self.b.add(&Symbol::choice(), vec![l, r]))
            }
        }
    }
}

fn build_rule(
    sig: &Signature,
    alloc: &Allocator,
    op: Symbol,
    reference: RuleRef,
    raw: RawRule,
) -> Result<Rule, ProgramError> {
    let line = raw.line;
    let mut rb = RuleBuilder {
        sig,
        line,
        b: GraphBuilder::new(alloc),
        vars: BTreeMap::new(),
        wilds: 0,
    };
    let mut arg_pats = Vec::new();
    let mut arg_ids = Vec::new();
    for a in &raw.args {
        let (p, id) = rb.pattern(a)?;
        arg_pats.push(p);
        arg_ids.push(id);
    }
    let lhs_root = rb.b.add(&op, arg_ids);

    let mut env: HashMap<String, NodeId> = rb
        .vars
        .iter()
        .filter(|(k, _)| !k.starts_with('_'))
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    for (name, e) in &raw.bindings {
        if env.contains_key(name) {
            return Err(ProgramError::Syntax {
                line,
                message: format!("`{name}` is bound twice"),
            });
        }
        let id = rb.expr(e, &env)?;
        env.insert(name.clone(), id);
    }
    let rhs_root = rb.expr(&raw.rhs, &env)?;

    let vars = rb.vars;
    let mut graphs =
        rb.b.finish_many(&[lhs_root, rhs_root])
            .map_err(|source| ProgramError::Graph { line, source })?;
    let rhs = graphs.pop().unwrap();
    let lhs = graphs.pop().unwrap();
    let fresh_nodes = rhs
        .iter()
        .filter(|(_, n)| !matches!(n.label, Label::Var(_)))
        .count();
    Ok(Rule {
        op: op.clone(),
        reference,
        line,
        lhs,
        rhs,
        var_map: vars,
        pattern: Pattern::App(op, arg_pats),
        fresh_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::print_linear;

    const FLIP: &str = "data Bit = 0 | 1\nflip 0 = 1\nflip 1 = 0\ncoin = 0 ? 1\n";

    #[test]
    fn running_example_rules() {
        let alloc = Allocator::new();
        let p = parse_program(FLIP, &alloc).unwrap();
        assert_eq!(p.rules.len(), 3);
        let ctors: Vec<_> = p
            .signature
            .constructors()
            .map(|s| s.name().to_string())
            .collect();
        assert!(ctors.contains(&"0".to_string()) && ctors.contains(&"1".to_string()));
        let ops: Vec<_> = p
            .signature
            .operations()
            .map(|s| s.name().to_string())
            .collect();
        assert_eq!(ops, vec!["coin".to_string(), "flip".to_string()]);
        assert_eq!(print_linear(&p.rules[2].rhs), "?_a(0,1)");
        assert_eq!(p.rules[1].reference.to_string(), "flip.2");
    }

    #[test]
    fn where_clause_shares_node() {
        let alloc = Allocator::new();
        let src = format!("{FLIP}main = (flip x, flip x) where x = coin\n");
        let p = parse_program(&src, &alloc).unwrap();
        let main = p.rules.iter().find(|r| r.op.name() == "main").unwrap();
        assert_eq!(print_linear(&main.rhs), "(,)(flip(n2:coin), flip(n2))");
        assert_eq!(main.rhs.len(), 4);
        assert_eq!(main.fresh_nodes, 4);
    }

    #[test]
    fn unbound_rhs_variable() {
        let alloc = Allocator::new();
        let err = parse_program("f x = g y\n", &alloc).unwrap_err();
        assert_eq!(
            err,
            ProgramError::UnboundVariable {
                line: 1,
                name: "y".into()
            }
        );
    }

    #[test]
    fn variables_shared_between_sides() {
        let alloc = Allocator::new();
        let p = parse_program(
            "data N = Z | S/1\nadd Z y = y\nadd (S x) y = S (add x y)\n",
            &alloc,
        )
        .unwrap();
        let r = &p.rules[1];
        let x = r.var_map["x"];
        assert!(r.lhs.contains(x) && r.rhs.contains(x));
        assert_eq!(r.pattern.to_string(), "add(S(x), y)");
        assert_eq!(r.fresh_nodes, 2);
        // collapsing rule: rhs is a single variable node
        let r0 = &p.rules[0];
        assert_eq!(r0.rhs.len(), 1);
        assert_eq!(r0.fresh_nodes, 0);
    }

    #[test]
    fn syntax_and_arity_errors() {
        let alloc = Allocator::new();
        assert!(matches!(
            parse_program("data B = T | F\nnot T = F\nnot x y = T\n", &alloc),
            Err(ProgramError::Arity { line: 3, .. })
        ));
        assert!(matches!(
            parse_program("f x\n", &alloc),
            Err(ProgramError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_program("f = g\n", &alloc),
            Err(ProgramError::UnboundVariable { .. })
        ));
        assert!(matches!(
            parse_program("data B = T\nf = nope T\n", &alloc),
            Err(ProgramError::UnknownSymbol { .. })
        ));
        assert!(matches!(
            parse_program("data P = K/2\nf = K 1\n", &alloc),
            Err(ProgramError::UnboundVariable { .. })
        ));
        assert!(matches!(
            parse_program("data P = K/2 | A\nf = K A\n", &alloc),
            Err(ProgramError::Arity { .. })
        ));
    }

    #[test]
    fn comments_tuples_and_choice_heads() {
        let alloc = Allocator::new();
        let src = "-- leading comment\ndata B = T | F -- trailing\nsw (x, y) = (y, x)\nx ? _ = x\n? _ y = y\nt3 = (,,) T F T\n";
        let p = parse_program(src, &alloc).unwrap();
        assert_eq!(p.rules.len(), 4);
        assert_eq!(p.rules[0].pattern.to_string(), "sw((,)(x, y))");
        assert!(p.rules[1].op.is_choice() && p.rules[2].op.is_choice());
        assert_eq!(print_linear(&p.rules[3].rhs), "(,,)(T,F,T)");
    }
}
