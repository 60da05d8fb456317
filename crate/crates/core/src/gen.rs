//! Random programs, graphs and DAGs for the property suites.
//!
//! Generated programs are stratified: operation `fi` only calls `fj` with
//! `j < i`, so every evaluation terminates.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Allocator, Graph, GraphBuilder, Label, NodeId, Symbol};
use crate::program::Program;
use crate::pulltab::pull_tab;
use crate::represented::pull_tab_sites;
use crate::rewrite::{apply_step, redexes};

/// Shape limits of generated programs.
#[derive(Clone, Copy, Debug)]
pub struct ProgramShape {
    pub max_ops: usize,
    pub max_arity: usize,
    /// Nesting depth of `?` in one right-hand side.
    pub max_choice_depth: usize,
    pub max_expr_depth: usize,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape {
            max_ops: 5,
            max_arity: 2,
            max_choice_depth: 3,
            max_expr_depth: 3,
        }
    }
}

const DATA: &str = "data V = A | B | S/1";

struct ExprGen<'a, R: Rng> {
    rng: &'a mut R,
    shape: ProgramShape,
    /// Arities of the operations callable from this rhs.
    callable: &'a [usize],
    vars: &'a [String],
}

impl<R: Rng> ExprGen<'_, R> {
    fn expr(&mut self, depth: usize, choices: usize) -> String {
        let leaf = depth >= self.shape.max_expr_depth;
        let mut kinds = vec!["ctor"];
        if !self.vars.is_empty() {
            kinds.extend(["var", "var"]);
        }
        if !leaf {
            kinds.extend(["succ", "pair"]);
            if !self.callable.is_empty() {
                kinds.extend(["call", "call", "call"]);
            }
            if choices < self.shape.max_choice_depth {
                kinds.extend(["choice", "choice"]);
            }
        }
        match *kinds.choose(self.rng).unwrap() {
            "var" => self.vars.choose(self.rng).unwrap().clone(),
            "ctor" => ["A", "B"].choose(self.rng).unwrap().to_string(),
            "succ" => format!("S ({})", self.expr(depth + 1, choices)),
            "pair" => format!(
                "({}, {})",
                self.expr(depth + 1, choices),
                self.expr(depth + 1, choices)
            ),
            "choice" => format!(
                "({} ? {})",
                self.expr(depth + 1, choices + 1),
                self.expr(depth + 1, choices + 1)
            ),
            _ => {
                let j = self.rng.gen_range(0..self.callable.len());
                let mut s = format!("f{j}");
                for _ in 0..self.callable[j] {
                    let _ = write!(s, " ({})", self.expr(depth + 1, choices));
                }
                s
            }
        }
    }

    /// A right-hand side, sometimes sharing a `where`-bound node.
    fn rhs(&mut self) -> String {
        if self.rng.gen_bool(0.3) {
            let bound = self.expr(1, 0);
            let use_twice = match self.rng.gen_range(0..3) {
                0 => "(w, w)".to_string(),
                1 if !self.callable.is_empty() => {
                    let j = self.rng.gen_range(0..self.callable.len());
                    match self.callable[j] {
                        0 => format!("(w, f{j})"),
                        1 => format!("(f{j} w, w)"),
                        _ => format!("f{j} w w"),
                    }
                }
                _ => "(S w, w)".to_string(),
            };
            format!("{use_twice} where w = {bound}")
        } else {
            self.expr(0, 0)
        }
    }
}

fn patterns<R: Rng>(
    rng: &mut R,
    arity: usize,
    fresh: &mut usize,
) -> Vec<(Vec<String>, Vec<String>)> {
    let var = |fresh: &mut usize| {
        *fresh += 1;
        format!("x{fresh}")
    };
    if arity == 0 {
        return vec![(Vec::new(), Vec::new())];
    }
    let base: Vec<String> = (0..arity).map(|_| var(fresh)).collect();
    if rng.gen_bool(0.25) {
        return vec![(base.clone(), base)];
    }
    let pos = rng.gen_range(0..arity);
    let mut out = Vec::new();
    for c in ["A", "B", "S"] {
        if !rng.gen_bool(0.8) {
            continue;
        }
        let mut args = base.clone();
        let mut vars: Vec<String> = base
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, v)| v.clone())
            .collect();
        if c == "S" {
            if rng.gen_bool(0.3) {
                for inner in ["A", "B"] {
                    if rng.gen_bool(0.7) {
                        let mut a = args.clone();
                        a[pos] = format!("(S {inner})");
                        out.push((a, vars.clone()));
                    }
                }
                let y = var(fresh);
                args[pos] = format!("(S (S {y}))");
                vars.push(y);
            } else {
                let y = var(fresh);
                args[pos] = format!("(S {y})");
                vars.push(y);
            }
        } else {
            args[pos] = c.to_string();
        }
        out.push((args, vars));
    }
    if out.is_empty() {
        let mut args = base.clone();
        args[pos] = "A".into();
        let vars = base
            .into_iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, v)| v)
            .collect();
        out.push((args, vars));
    }
    out
}

/// Source text of a random terminating LOIS program with a `main` rule.
pub fn random_program_source<R: Rng>(rng: &mut R, shape: ProgramShape) -> String {
    let n = rng.gen_range(1..=shape.max_ops);
    let arities: Vec<usize> = (0..n).map(|_| rng.gen_range(0..=shape.max_arity)).collect();
    let mut src = format!("{DATA}\n");
    let mut fresh = 0;
    for (i, arity) in arities.iter().enumerate() {
        for (args, vars) in patterns(rng, *arity, &mut fresh) {
            let rhs = ExprGen {
                rng,
                shape,
                callable: &arities[..i],
                vars: &vars,
            }
            .rhs();
            let lhs: String = args.iter().map(|a| format!(" {a}")).collect();
            let _ = writeln!(src, "f{i}{lhs} = {rhs}");
        }
    }
    let main = ExprGen {
        rng,
        shape,
        callable: &arities,
        vars: &[],
    }
    .rhs();
    let _ = writeln!(src, "main = {main}");
    src
}

/// A random program, parsed and validated.
pub fn random_program<R: Rng>(
    rng: &mut R,
    shape: ProgramShape,
    alloc: &Allocator,
) -> (String, Program) {
    let src = random_program_source(rng, shape);
    let p = Program::from_source(&src, alloc)
        .unwrap_or_else(|e| panic!("generated program is invalid: {e}\n{src}"));
    (src, p)
}

/// Limits of generated ground graphs.
#[derive(Clone, Copy, Debug)]
pub struct GraphShape {
    pub max_depth: usize,
    pub max_choices: usize,
    /// Probability of reusing an existing node as a successor.
    pub sharing: f64,
}

impl Default for GraphShape {
    fn default() -> Self {
        GraphShape {
            max_depth: 4,
            max_choices: 3,
            sharing: 0.25,
        }
    }
}

struct GraphGen<'a, R: Rng> {
    rng: &'a mut R,
    b: GraphBuilder<'a>,
    symbols: Vec<Symbol>,
    finished: Vec<NodeId>,
    choices: usize,
    shape: GraphShape,
}

impl<R: Rng> GraphGen<'_, R> {
    fn node(&mut self, depth: usize) -> NodeId {
        if !self.finished.is_empty() && self.rng.gen_bool(self.shape.sharing) {
            return *self.finished.choose(self.rng).unwrap();
        }
        let leaf = depth >= self.shape.max_depth;
        let choice = !leaf && self.choices < self.shape.max_choices && self.rng.gen_bool(0.3);
        let sym = if choice {
            self.choices += 1;
            Symbol::choice()
        } else {
            let pool: Vec<&Symbol> = self
                .symbols
                .iter()
                .filter(|s| !leaf || s.arity() == 0)
                .collect();
            (*pool.choose(self.rng).unwrap()).clone()
        };
        let succs = (0..sym.arity()).map(|_| self.node(depth + 1)).collect();
        let id = self.b.add(&sym, succs);
        self.finished.push(id);
        id
    }
}

/// A random ground graph over the symbols of `p` with one-to-one decoration.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    p: &Program,
    shape: GraphShape,
    alloc: &Allocator,
) -> Graph {
    let mut symbols: Vec<Symbol> = p
        .signature()
        .iter()
        .filter(|s| !s.is_choice() && s.name() != "main")
        .cloned()
        .collect();
    symbols.sort();
    let mut gen = GraphGen {
        rng,
        b: GraphBuilder::new(alloc),
        symbols,
        finished: Vec::new(),
        choices: 0,
        shape,
    };
    let root = gen.node(0);
    gen.b
        .finish(root)
        .expect("generated graphs are well formed")
}

/// A random graph followed by up to `steps` random rewrite or pull-tab
/// steps, so that choice identifiers may be shared between nodes.
/// Returns `None` if the state grew past `max_ids` distinct identifiers.
pub fn random_state<R: Rng>(
    rng: &mut R,
    p: &Program,
    shape: GraphShape,
    steps: usize,
    max_ids: usize,
    alloc: &Allocator,
) -> Option<Graph> {
    let mut g = random_graph(rng, p, shape, alloc);
    for _ in 0..rng.gen_range(0..=steps) {
        let sites = pull_tab_sites(&g);
        let rws: Vec<_> = redexes(p, &g)
            .into_iter()
            .filter(|s| !s.is_choice_step())
            .collect();
        g = if !sites.is_empty() && (rws.is_empty() || rng.gen_bool(0.6)) {
            let (t, i) = *sites.choose(rng).unwrap();
            pull_tab(&g, t, i, alloc).expect("sites are valid")
        } else if let Some(s) = rws.choose(rng) {
            apply_step(p, &g, s, alloc).expect("redexes apply")
        } else {
            break;
        };
        if g.choice_ids().len() > max_ids || g.len() > 80 {
            return None;
        }
    }
    (g.choice_ids().len() <= max_ids).then_some(g)
}

/// A random rooted DAG with at most `max_nodes` nodes, every node reachable
/// from the root. Node labels are operations named after their out-degree.
pub fn random_dag<R: Rng>(rng: &mut R, max_nodes: usize, alloc: &Allocator) -> Graph {
    let n = rng.gen_range(1..=max_nodes.max(1));
    let mut b = GraphBuilder::new(alloc);
    // Node k may only point to nodes with a larger index; node 0 is the
    // root and adopts every node left without a predecessor.
    let mut has_pred = vec![false; n];
    let mut built = vec![None; n];
    for k in (0..n).rev() {
        let later = k + 1..n;
        let mut succs: Vec<usize> = Vec::new();
        if k == 0 {
            succs.extend(later.clone().filter(|j| !has_pred[*j]));
        }
        if !later.is_empty() {
            let extra = rng.gen_range(0..=2usize);
            for _ in 0..extra {
                succs.push(rng.gen_range(later.clone()));
            }
            if k > 0 && rng.gen_bool(0.5) {
                if let Some(j) = later.clone().find(|j| !has_pred[*j]) {
                    succs.push(j);
                }
            }
        }
        succs.shuffle(rng);
        for j in &succs {
            has_pred[*j] = true;
        }
        let sym = Symbol::operation(&format!("d{}", succs.len()), succs.len());
        let ss = succs.iter().map(|j| built[*j].expect("built")).collect();
        let id = b.add_node(Label::Sym(sym), ss, None);
        built[k] = Some(id);
    }
    b.finish(built[0].expect("root built"))
        .expect("dag is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn programs_validate() {
        let alloc = Allocator::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (_, p) = random_program(&mut rng, ProgramShape::default(), &alloc);
            assert!(p.main_rule().is_some());
            assert!(p.trees().count() <= ProgramShape::default().max_ops + 1);
        }
    }

    #[test]
    fn graphs_are_ground_and_bounded() {
        let alloc = Allocator::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, p) = random_program(&mut rng, ProgramShape::default(), &alloc);
        for _ in 0..100 {
            let g = random_graph(&mut rng, &p, GraphShape::default(), &alloc);
            assert!(g.is_ground());
            g.validate().unwrap();
            assert!(g.choice_ids().len() <= 3);
        }
    }

    #[test]
    fn dags_are_rooted() {
        let alloc = Allocator::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = random_dag(&mut rng, 30, &alloc);
            g.validate().unwrap();
            assert!(g.len() <= 30);
        }
    }
}
