use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{
    build_tree, ChoiceRule, Pattern, Program, ProgramError, Rule, UncheckedProgram, Violation,
};
use crate::graph::{Label, Symbol};

/// Which choice rule a user-written `?` rule restates, if any.
fn as_choice_rule(r: &Rule) -> Option<ChoiceRule> {
    let Pattern::App(_, args) = &r.pattern else {
        return None;
    };
    let (Pattern::Var(x), Pattern::Var(y)) = (&args[0], &args[1]) else {
        return None;
    };
    if x == y {
        return None;
    }
    match r.rhs.label(r.rhs.root()) {
        Label::Var(v) if v == x => Some(ChoiceRule::C1),
        Label::Var(v) if v == y => Some(ChoiceRule::C2),
        _ => None,
    }
}

fn check_rule(r: &Rule, out: &mut Vec<Violation>) -> bool {
    let mut ok = true;
    let mut seen = BTreeSet::new();
    for v in r.pattern.var_names() {
        if !v.starts_with('_') && !seen.insert(v.clone()) {
            out.push(Violation {
                line: r.line,
                message: format!(
                    "rule for `{}` is not left-linear: `{v}` repeats",
                    r.op.name()
                ),
            });
            ok = false;
        }
    }
    if let Pattern::App(_, args) = &r.pattern {
        for a in args {
            let mut bad = None;
            a.walk(&mut |p| {
                if let Pattern::App(s, _) = p {
                    if !s.is_constructor() && bad.is_none() {
                        bad = Some(s.name().to_string());
                    }
                }
            });
            if let Some(s) = bad {
                out.push(Violation {
                    line: r.line,
                    message: format!(
                        "rule for `{}` is not constructor-based: `{s}` in a pattern",
                        r.op.name()
                    ),
                });
                ok = false;
            }
        }
    }
    ok
}

/// Checks the LOIS conditions and builds a definitional tree for every
/// operation. All violations are reported together.
pub fn validate_lois(p: UncheckedProgram) -> Result<Program, ProgramError> {
    let mut violations = Vec::new();

    let mut group_of = HashMap::new();
    for (i, g) in p.groups.iter().enumerate() {
        for c in g {
            group_of.insert(c.name().to_string(), i);
        }
    }
    let siblings = |c: &Symbol| match group_of.get(c.name()) {
        Some(g) => p.groups[*g].clone(),
        None => vec![c.clone()],
    };

    let mut by_op: BTreeMap<String, Vec<Rule>> = BTreeMap::new();
    let mut restated = Vec::new();
    for r in &p.rules {
        if r.op.is_choice() {
            match as_choice_rule(r) {
                Some(c) if !restated.contains(&c) => restated.push(c),
                _ => violations.push(Violation {
                    line: r.line,
                    message: "`?` may only be defined by `x ? _ = x` and `_ ? y = y`".into(),
                }),
            }
            continue;
        }
        if r.op.is_constructor() {
            violations.push(Violation {
                line: r.line,
                message: format!("constructor `{}` heads a rule", r.op.name()),
            });
            continue;
        }
        by_op
            .entry(r.op.name().to_string())
            .or_default()
            .push(r.clone());
    }

    let mut trees = BTreeMap::new();
    for (name, rules) in &by_op {
        let mut ok = true;
        for r in rules {
            ok &= check_rule(r, &mut violations);
        }
        if !ok {
            continue;
        }
        let patterns: Vec<Pattern> = rules.iter().map(|r| r.pattern.clone()).collect();
        match build_tree(&rules[0].op, &patterns, &siblings) {
            Ok(t) => {
                trees.insert(name.clone(), t);
            }
            Err(e) => violations.push(Violation {
                line: rules[0].line,
                message: e.to_string(),
            }),
        }
    }

    if !violations.is_empty() {
        violations.sort_by_key(|v| v.line);
        return Err(ProgramError::NotLois(violations));
    }
    Ok(Program {
        signature: p.signature,
        rules: by_op,
        trees,
        group_of,
        groups: p.groups,
        choice_rules: p.choice_rules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Allocator;
    use crate::program::DefTree;

    const FLIP: &str = "data Bit = 0 | 1\nflip 0 = 1\nflip 1 = 0\ncoin = 0 ? 1\n";

    fn violations(src: &str) -> Vec<Violation> {
        match Program::from_source(src, &Allocator::new()) {
            Err(ProgramError::NotLois(v)) => v,
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn flip_program_valid() {
        let p = Program::from_source(FLIP, &Allocator::new()).unwrap();
        let t = p.tree("flip").unwrap();
        match t {
            DefTree::Branch {
                position, children, ..
            } => {
                assert_eq!(position, &vec![0]);
                assert_eq!(children.len(), 2);
            }
            _ => panic!("flip should branch"),
        }
        assert!(matches!(
            p.tree("coin"),
            Some(DefTree::Rule { rule: 0, .. })
        ));
        assert_eq!(p.rules().count(), 3);
    }

    #[test]
    fn restating_choice_rules_is_accepted() {
        let src = format!("{FLIP}x ? _ = x\n_ ? y = y\n");
        assert!(Program::from_source(&src, &Allocator::new()).is_ok());
    }

    #[test]
    fn redefining_choice_rejected() {
        let v = violations(&format!("{FLIP}x ? _ = x\n_ ? y = y\nx ? y = 0\n"));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].line, 7);
    }

    #[test]
    fn non_left_linear_rejected() {
        let v = violations("data B = true | false\neq x x = true\n");
        assert!(v[0].message.contains("left-linear"));
    }

    #[test]
    fn constructor_head_and_overlap_rejected() {
        let v = violations("data B = T | F\nT = F\nf T x = T\nf x T = F\n");
        assert_eq!(v.len(), 2);
        assert!(v[0].message.contains("constructor"));
        assert!(v[1].message.contains("inductively sequential"));
    }

    #[test]
    fn operation_in_pattern_rejected() {
        let v = violations("data B = T | F\ng = T\nf g = T\n");
        assert!(v[0].message.contains("constructor-based"));
    }

    #[test]
    fn duplicate_rule_rejected() {
        let v = violations("data B = T | F\nf T = T\nf T = F\n");
        assert_eq!(v.len(), 1);
    }
}
