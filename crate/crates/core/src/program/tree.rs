//! Patterns and definitional trees.

use std::fmt;
use std::sync::Arc;

use crate::graph::Symbol;

/// A linear constructor pattern (or a call pattern, when rooted by an
/// operation).
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Pattern {
    Var(Arc<str>),
    App(Symbol, Vec<Pattern>),
}

impl Pattern {
    pub fn at(&self, path: &[usize]) -> Option<&Pattern> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => match self {
                Pattern::App(_, args) => args.get(*i)?.at(rest),
                Pattern::Var(_) => None,
            },
        }
    }

    /// Copy of `self` with the subpattern at `path` replaced by `with`.
    pub fn replaced(&self, path: &[usize], with: Pattern) -> Pattern {
        match path.split_first() {
            None => with,
            Some((i, rest)) => match self {
                Pattern::App(s, args) => {
                    let mut args = args.clone();
                    args[*i] = args[*i].replaced(rest, with);
                    Pattern::App(s.clone(), args)
                }
                Pattern::Var(_) => panic!("path runs through a variable"),
            },
        }
    }

    /// Paths of variable occurrences, left to right.
    pub fn var_positions(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_vars(&mut path, &mut out);
        out
    }

    fn collect_vars(&self, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match self {
            Pattern::Var(_) => out.push(path.clone()),
            Pattern::App(_, args) => {
                for (i, a) in args.iter().enumerate() {
                    path.push(i);
                    a.collect_vars(path, out);
                    path.pop();
                }
            }
        }
    }

    /// Variable names in occurrence order, duplicates included.
    pub fn var_names(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        self.walk(&mut |p| {
            if let Pattern::Var(v) = p {
                out.push(v.clone());
            }
        });
        out
    }

    pub fn walk(&self, f: &mut impl FnMut(&Pattern)) {
        f(self);
        if let Pattern::App(_, args) = self {
            for a in args {
                a.walk(f);
            }
        }
    }

    /// True when `self` is an instance of `general` (variables of `general`
    /// match anything).
    pub fn instance_of(&self, general: &Pattern) -> bool {
        match (general, self) {
            (Pattern::Var(_), _) => true,
            (Pattern::App(g, gargs), Pattern::App(s, sargs)) => {
                g == s && gargs.iter().zip(sargs).all(|(ga, sa)| sa.instance_of(ga))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) => f.write_str(v),
            Pattern::App(s, args) if args.is_empty() => f.write_str(s.name()),
            Pattern::App(s, args) => {
                write!(f, "{}(", s.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Hierarchical dispatch structure of one operation.
#[derive(Clone, Debug, PartialEq)]
pub enum DefTree {
    /// Refines `pattern` at the variable at `position`, one child per
    /// constructor of the variable's type.
    Branch {
        pattern: Pattern,
        position: Vec<usize>,
        children: Vec<(Symbol, DefTree)>,
    },
    /// `rule` indexes the operation's rules in declaration order.
    Rule { pattern: Pattern, rule: usize },
    /// No rule covers this pattern: calls reaching it fail.
    Exempt { pattern: Pattern },
}

impl DefTree {
    pub fn pattern(&self) -> &Pattern {
        match self {
            DefTree::Branch { pattern, .. }
            | DefTree::Rule { pattern, .. }
            | DefTree::Exempt { pattern } => pattern,
        }
    }

    /// Rule indices of the leaves, left to right.
    pub fn rule_leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if let DefTree::Rule { rule, .. } = t {
                out.push(*rule);
            }
        });
        out
    }

    pub fn exempt_leaves(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |t| {
            if matches!(t, DefTree::Exempt { .. }) {
                n += 1;
            }
        });
        n
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a DefTree)) {
        f(self);
        if let DefTree::Branch { children, .. } = self {
            for (_, c) in children {
                c.visit(f);
            }
        }
    }

    fn render(&self, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match self {
            DefTree::Branch {
                pattern,
                position,
                children,
            } => {
                let pos: Vec<String> = position.iter().map(|i| (i + 1).to_string()).collect();
                out.push_str(&format!("{pad}branch {pattern} @{}\n", pos.join(".")));
                for (_, c) in children {
                    c.render(depth + 1, out);
                }
            }
            DefTree::Rule { pattern, rule } => {
                out.push_str(&format!("{pad}rule {pattern} => #{}\n", rule + 1))
            }
            DefTree::Exempt { pattern } => out.push_str(&format!("{pad}exempt {pattern}\n")),
        }
    }
}

impl fmt::Display for DefTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(0, &mut s);
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("operation `{0}` is not inductively sequential")]
pub struct NotInductivelySequential(pub String);

/// Builds the definitional tree of `op` from the lhs patterns of its rules
/// (`patterns[i]` is the call pattern of rule `i`). `siblings` returns the
/// constructors of the type a constructor belongs to, in declaration order.
///
/// At each branch the leftmost variable position where every remaining rule
/// has a constructor is chosen.
pub fn build_tree(
    op: &Symbol,
    patterns: &[Pattern],
    siblings: &dyn Fn(&Symbol) -> Vec<Symbol>,
) -> Result<DefTree, NotInductivelySequential> {
    let root = Pattern::App(
        op.clone(),
        (0..op.arity())
            .map(|i| Pattern::Var(format!("x{}", i + 1).into()))
            .collect(),
    );
    let rules: Vec<usize> = (0..patterns.len()).collect();
    let mut counter = op.arity();
    build(op, root, &rules, patterns, siblings, &mut counter)
}

fn build(
    op: &Symbol,
    pattern: Pattern,
    rules: &[usize],
    patterns: &[Pattern],
    siblings: &dyn Fn(&Symbol) -> Vec<Symbol>,
    counter: &mut usize,
) -> Result<DefTree, NotInductivelySequential> {
    if rules.is_empty() {
        return Ok(DefTree::Exempt { pattern });
    }
    let inductive = pattern.var_positions().into_iter().find(|p| {
        rules
            .iter()
            .all(|r| matches!(patterns[*r].at(p), Some(Pattern::App(s, _)) if s.is_constructor()))
    });
    let Some(position) = inductive else {
        return if rules.len() == 1 {
            Ok(DefTree::Rule {
                pattern,
                rule: rules[0],
            })
        } else {
            Err(NotInductivelySequential(op.name().to_string()))
        };
    };

    let mut ctors: Vec<Symbol> = Vec::new();
    for r in rules {
        if let Some(Pattern::App(c, _)) = patterns[*r].at(&position) {
            for s in siblings(c) {
                if !ctors.contains(&s) {
                    ctors.push(s);
                }
            }
            if !ctors.contains(c) {
                ctors.push(c.clone());
            }
        }
    }

    let mut children = Vec::with_capacity(ctors.len());
    for c in ctors {
        let args = (0..c.arity())
            .map(|_| {
                *counter += 1;
                Pattern::Var(format!("x{counter}").into())
            })
            .collect();
        let child = pattern.replaced(&position, Pattern::App(c.clone(), args));
        let sub: Vec<usize> = rules
            .iter()
            .copied()
            .filter(|r| matches!(patterns[*r].at(&position), Some(Pattern::App(s, _)) if *s == c))
            .collect();
        children.push((c, build(op, child, &sub, patterns, siblings, counter)?));
    }
    Ok(DefTree::Branch {
        pattern,
        position,
        children,
    })
}
