use std::collections::HashMap;

use crate::error::Result;
use crate::symbol::{SymbolId, SymbolKind};
use crate::tslp::{Term, Tslp};

/// Rewrites `g` into an equivalent TSLP whose nonterminals all have rank
/// at most 1. Rank-k nonterminals (k >= 2) are eliminated one at a time:
/// the right-hand side is decomposed along the paths to its parameters
/// into rank-1 path contexts and rank-0 side trees, which yields a small
/// replacement template that is substituted at every occurrence.
pub fn monadize(g: &Tslp) -> Result<Tslp> {
    let mut symbols = g.symbols.clone();
    let mut rules: HashMap<SymbolId, Term> = g
        .nonterminals
        .iter()
        .map(|&a| (a, g.rhs(a).clone()))
        .collect();
    let mut order: Vec<SymbolId> = g.nonterminals.clone();

    loop {
        let victim = match order.iter().find(|&&a| symbols.rank(a) >= 2) {
            Some(&a) => a,
            None => break,
        };
        let body = rules[&victim].clone();
        let mut fresh = Vec::new();
        let template = decompose(&body, &mut symbols, &mut fresh);
        for (head, rhs) in fresh {
            rules.insert(head, rhs);
            order.push(head);
        }
        rules.remove(&victim);
        order.retain(|&a| a != victim);
        for (_, rhs) in rules.iter_mut() {
            *rhs = replace_occurrences(rhs, victim, &template);
        }
    }

    let reachable = reachable_set(g.start, &order, &rules);
    let order: Vec<SymbolId> = order.into_iter().filter(|a| reachable[a.idx()]).collect();
    let rules: HashMap<SymbolId, Term> = rules
        .into_iter()
        .filter(|(a, _)| reachable[a.idx()])
        .collect();
    Tslp::from_parts(symbols, order, g.start, rules)
}

fn reachable_set(
    start: SymbolId,
    order: &[SymbolId],
    rules: &HashMap<SymbolId, Term>,
) -> Vec<bool> {
    let max = order
        .iter()
        .map(|a| a.idx())
        .max()
        .unwrap_or(0)
        .max(start.idx());
    let mut seen = vec![false; max + 1];
    let mut stack = vec![start];
    seen[start.idx()] = true;
    while let Some(a) = stack.pop() {
        if let Some(body) = rules.get(&a) {
            body.for_each_symbol(&mut |s| {
                if rules.contains_key(&s) && s.idx() < seen.len() && !seen[s.idx()] {
                    seen[s.idx()] = true;
                    stack.push(s);
                }
            });
        }
    }
    seen
}

/// Replaces every occurrence `victim(s1..sk)` by the template with its
/// parameters substituted, innermost first.
fn replace_occurrences(t: &Term, victim: SymbolId, template: &Term) -> Term {
    match t {
        Term::Param(i) => Term::Param(*i),
        Term::Sym(s, cs) => {
            let cs: Vec<Term> = cs
                .iter()
                .map(|c| replace_occurrences(c, victim, template))
                .collect();
            if *s == victim {
                template.substitute(&cs)
            } else {
                Term::Sym(*s, cs)
            }
        }
    }
}

/// Builds the replacement template for a rank >= 2 right-hand side,
/// appending fresh rank <= 1 rules to `fresh`.
fn decompose(
    t: &Term,
    symbols: &mut crate::symbol::SymbolTable,
    fresh: &mut Vec<(SymbolId, Term)>,
) -> Term {
    match t.param_count() {
        0 => match t {
            // Parameterless pieces become rank-0 references.
            Term::Sym(s, cs) if cs.is_empty() => Term::leaf(*s),
            _ => {
                let k = symbols.fresh("K", SymbolKind::Nonterminal, 0);
                fresh.push((k, t.clone()));
                Term::leaf(k)
            }
        },
        1 => match t {
            Term::Param(i) => Term::Param(*i),
            Term::Sym(s, cs) if cs.len() == 1 && matches!(cs[0], Term::Param(_)) => t.clone(),
            _ => {
                // Fold the whole rank-1 context into one fresh nonterminal.
                let orig = t.params()[0];
                let c = symbols.fresh("P", SymbolKind::Nonterminal, 1);
                fresh.push((c, rename_single_param(t, 1)));
                Term::Sym(c, vec![Term::Param(orig)])
            }
        },
        _ => {
            // Walk down while a single child still holds every parameter;
            // that prefix is a rank-1 context around the branching node.
            let total = t.param_count();
            let mut path: Vec<(&Term, usize)> = Vec::new();
            let mut cur = t;
            loop {
                let Term::Sym(_, cs) = cur else { unreachable!() };
                let mut carrier = None;
                for (i, c) in cs.iter().enumerate() {
                    if c.param_count() == total {
                        carrier = Some(i);
                        break;
                    }
                }
                match carrier {
                    Some(i) => {
                        path.push((cur, i));
                        cur = &cs[i];
                    }
                    None => break,
                }
            }
            let Term::Sym(root_sym, root_children) = cur else {
                unreachable!()
            };
            let inner = Term::Sym(
                *root_sym,
                root_children
                    .iter()
                    .map(|c| decompose(c, symbols, fresh))
                    .collect(),
            );
            if path.is_empty() {
                inner
            } else {
                // Rebuild the context with a hole where the walk ended and
                // fold it into a fresh rank-1 nonterminal.
                let mut ctx = Term::Param(1);
                for &(node, hole) in path.iter().rev() {
                    let Term::Sym(s, cs) = node else { unreachable!() };
                    let children = cs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| if i == hole { ctx.clone() } else { c.clone() })
                        .collect();
                    ctx = Term::Sym(*s, children);
                }
                let c = symbols.fresh("P", SymbolKind::Nonterminal, 1);
                fresh.push((c, ctx));
                Term::Sym(c, vec![inner])
            }
        }
    }
}

fn rename_single_param(t: &Term, to: usize) -> Term {
    match t {
        Term::Param(_) => Term::Param(to),
        Term::Sym(s, cs) => Term::Sym(
            *s,
            cs.iter().map(|c| rename_single_param(c, to)).collect(),
        ),
    }
}

/// Rule shapes of a normalized monadic TSLP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `A -> B(C)`, rank 0
    A,
    /// `A(x) -> B(C(x))`, rank 1
    B,
    /// `A -> a`, rank 0
    C,
    /// `A(x) -> f(A1,..,x,..,An)`, rank 1
    D,
}

/// Precomputed shape of a form (d) rule: terminal, parameter position
/// (1-based), and the rank-0 nonterminals at the other child positions.
#[derive(Debug, Clone)]
pub struct DRule {
    pub terminal: SymbolId,
    pub param_pos: usize,
    pub children: Vec<Option<SymbolId>>,
}

/// A monadic TSLP in which every rule has one of the four normal forms,
/// plus the classification each later stage relies on.
#[derive(Debug, Clone)]
pub struct NormalizedTslp {
    pub tslp: Tslp,
    form: Vec<Option<Form>>,
    d_rules: Vec<Option<DRule>>,
    /// Unique terminal in rhs(A), for A in N_2 (the node label source).
    label: Vec<Option<SymbolId>>,
}

impl NormalizedTslp {
    pub fn form(&self, a: SymbolId) -> Form {
        self.form[a.idx()].expect("classified nonterminal")
    }

    pub fn is_n1(&self, a: SymbolId) -> bool {
        matches!(self.form[a.idx()], Some(Form::A | Form::B))
    }

    pub fn is_n2(&self, a: SymbolId) -> bool {
        matches!(self.form[a.idx()], Some(Form::C | Form::D))
    }

    pub fn n_with(&self, f: Form) -> Vec<SymbolId> {
        self.tslp
            .nonterminals
            .iter()
            .copied()
            .filter(|a| self.form[a.idx()] == Some(f))
            .collect()
    }

    pub fn d_rule(&self, a: SymbolId) -> &DRule {
        self.d_rules[a.idx()].as_ref().expect("form (d) nonterminal")
    }

    /// The unique terminal of rhs(A) for A in N_2.
    pub fn label_of(&self, a: SymbolId) -> SymbolId {
        self.label[a.idx()].expect("N_2 nonterminal")
    }

    /// For A in N_1: the two symbols B,C with rhs(A) = B(C) or B(C(x)).
    pub fn spine_pair(&self, a: SymbolId) -> (SymbolId, SymbolId) {
        match self.tslp.rhs(a) {
            Term::Sym(b, cs) => match &cs[0] {
                Term::Sym(c, _) => (*b, *c),
                _ => unreachable!("N_1 rhs"),
            },
            _ => unreachable!("N_1 rhs"),
        }
    }
}

/// Classifies the rules of an already-normalized monadic TSLP; returns
/// None if some rule does not match any of the four forms.
pub fn classify(g: &Tslp) -> Option<NormalizedTslp> {
    let mut form = vec![None; g.symbols.len()];
    let mut d_rules = vec![None; g.symbols.len()];
    let mut label = vec![None; g.symbols.len()];
    for &a in &g.nonterminals {
        let rank = g.rank(a);
        match (rank, g.rhs(a)) {
            (0, Term::Sym(s, cs)) if cs.is_empty() => {
                if g.is_nonterminal(*s) {
                    return None;
                }
                form[a.idx()] = Some(Form::C);
                label[a.idx()] = Some(*s);
            }
            (0, Term::Sym(b, cs)) if cs.len() == 1 => {
                if !g.is_nonterminal(*b) || g.rank(*b) != 1 {
                    return None;
                }
                match &cs[0] {
                    Term::Sym(c, gc) if gc.is_empty() && g.is_nonterminal(*c) => {
                        form[a.idx()] = Some(Form::A);
                    }
                    _ => return None,
                }
            }
            (1, Term::Sym(s, cs)) if !g.is_nonterminal(*s) => {
                // form (d): terminal root, children are x or rank-0 nts
                let mut param_pos = None;
                let mut children = Vec::with_capacity(cs.len());
                if cs.is_empty() {
                    return None;
                }
                for (i, c) in cs.iter().enumerate() {
                    match c {
                        Term::Param(1) => {
                            param_pos = Some(i + 1);
                            children.push(None);
                        }
                        Term::Sym(c, gc)
                            if gc.is_empty()
                                && g.is_nonterminal(*c)
                                && g.rank(*c) == 0 =>
                        {
                            children.push(Some(*c));
                        }
                        _ => return None,
                    }
                }
                let param_pos = param_pos?;
                form[a.idx()] = Some(Form::D);
                label[a.idx()] = Some(*s);
                d_rules[a.idx()] = Some(DRule {
                    terminal: *s,
                    param_pos,
                    children,
                });
            }
            (1, Term::Sym(b, cs)) if cs.len() == 1 && g.rank(*b) == 1 => match &cs[0] {
                Term::Sym(c, gc)
                    if gc.len() == 1
                        && g.is_nonterminal(*c)
                        && g.rank(*c) == 1
                        && matches!(gc[0], Term::Param(1)) =>
                {
                    form[a.idx()] = Some(Form::B);
                }
                _ => return None,
            },
            _ => return None,
        }
    }
    Some(NormalizedTslp {
        tslp: g.clone(),
        form,
        d_rules,
        label,
    })
}

/// Brings a monadic TSLP into the four-form normal form: removes identity
/// and chain nonterminals, then splits remaining right-hand sides
/// top-down, decomposing along the path to the parameter. Output size is
/// at most twice the input size.
pub fn normalize_monadic(g: &Tslp) -> Result<NormalizedTslp> {
    assert!(
        g.nonterminals.iter().all(|&a| g.rank(a) <= 1),
        "normalize_monadic requires a monadic TSLP"
    );
    let mut symbols = g.symbols.clone();

    // Aliases: rank-1 A with rhs x1 (identity), rank-1 A with rhs B(x1),
    // rank-0 A (not S) with a bare nonterminal rhs. alias[A] = None means
    // identity; Some(B) means replace A by B.
    #[derive(Clone, Copy)]
    enum Alias {
        Identity,
        To(SymbolId),
    }
    let mut alias: HashMap<SymbolId, Alias> = HashMap::new();
    for &a in &g.topo {
        match g.rhs(a) {
            Term::Param(1) => {
                alias.insert(a, Alias::Identity);
            }
            Term::Sym(b, cs)
                if cs.len() == 1
                    && g.is_nonterminal(*b)
                    && matches!(cs[0], Term::Param(1)) =>
            {
                let target = resolve_alias(*b, &alias);
                alias.insert(
                    a,
                    match target {
                        Some(t) => Alias::To(t),
                        None => Alias::Identity,
                    },
                );
            }
            Term::Sym(b, cs) if cs.is_empty() && g.is_nonterminal(*b) && a != g.start => {
                let target = resolve_alias(*b, &alias).unwrap_or(*b);
                alias.insert(a, Alias::To(target));
            }
            _ => {}
        }
    }
    fn resolve_alias(b: SymbolId, alias: &HashMap<SymbolId, Alias>) -> Option<SymbolId> {
        match alias.get(&b) {
            None => Some(b),
            Some(Alias::Identity) => None,
            Some(Alias::To(t)) => Some(*t),
        }
    }
    fn apply_alias(t: &Term, alias: &HashMap<SymbolId, Alias>) -> Term {
        match t {
            Term::Param(i) => Term::Param(*i),
            Term::Sym(s, cs) => {
                let cs: Vec<Term> = cs.iter().map(|c| apply_alias(c, alias)).collect();
                match alias.get(s) {
                    Some(Alias::Identity) => cs.into_iter().next().expect("rank-1 alias"),
                    Some(Alias::To(t)) => {
                        if cs.is_empty() {
                            Term::leaf(*t)
                        } else {
                            Term::Sym(*t, cs)
                        }
                    }
                    None => Term::Sym(*s, cs),
                }
            }
        }
    }

    let mut pre: HashMap<SymbolId, Term> = HashMap::new();
    for &a in &g.nonterminals {
        if alias.contains_key(&a) {
            continue;
        }
        pre.insert(a, apply_alias(g.rhs(a), &alias));
    }
    // If rhs(S) is a bare nonterminal, pull up that rule.
    if let Term::Sym(b, cs) = pre[&g.start].clone() {
        if cs.is_empty() && g.is_nonterminal(b) {
            let body = pre[&b].clone();
            pre.insert(g.start, body);
        }
    }

    // Split every right-hand side top-down into the four forms. Fresh
    // rules are shared via a memo keyed by the pre-split term.
    struct Splitter<'a> {
        symbols: &'a mut crate::symbol::SymbolTable,
        #[allow(dead_code)]
        pre: &'a HashMap<SymbolId, Term>,
        out: HashMap<SymbolId, Term>,
        order: Vec<SymbolId>,
        memo: HashMap<Term, SymbolId>,
    }

    impl Splitter<'_> {
        fn is_nt(&self, s: SymbolId) -> bool {
            self.symbols.kind(s) == SymbolKind::Nonterminal
        }

        /// Final right-hand side for a head whose pre-split rhs is `t`.
        fn split(&mut self, t: &Term) -> Term {
            if t.param_count() == 0 {
                self.split_rank0(t)
            } else {
                self.split_rank1(t)
            }
        }

        fn split_rank0(&mut self, t: &Term) -> Term {
            match t {
                Term::Sym(s, cs) if cs.is_empty() => {
                    debug_assert!(!self.is_nt(*s), "aliases were removed");
                    Term::leaf(*s) // form (c)
                }
                Term::Sym(b, cs) if self.is_nt(*b) => {
                    debug_assert_eq!(cs.len(), 1);
                    let c = self.rank0_ref(&cs[0]);
                    Term::Sym(*b, vec![Term::leaf(c)]) // form (a)
                }
                Term::Sym(f, cs) => {
                    // Terminal root: context through the last child.
                    let n = cs.len();
                    let mut ctx_children: Vec<Term> = cs[..n - 1]
                        .iter()
                        .map(|c| Term::leaf(self.rank0_ref(c)))
                        .collect();
                    ctx_children.push(Term::Param(1));
                    let top = self.define(Term::Sym(*f, ctx_children), 1);
                    let e = self.rank0_ref(&cs[n - 1]);
                    Term::Sym(top, vec![Term::leaf(e)]) // form (a)
                }
                Term::Param(_) => unreachable!("rank-0 rhs has no parameters"),
            }
        }

        fn split_rank1(&mut self, t: &Term) -> Term {
            match t {
                Term::Sym(b, cs) if self.is_nt(*b) => {
                    debug_assert_eq!(cs.len(), 1);
                    debug_assert!(
                        !matches!(cs[0], Term::Param(_)),
                        "chain aliases were removed"
                    );
                    let d = self.rank1_ref(&cs[0]);
                    Term::Sym(*b, vec![Term::Sym(d, vec![Term::Param(1)])]) // form (b)
                }
                Term::Sym(f, cs) => {
                    let j = cs
                        .iter()
                        .position(|c| c.param_count() == 1)
                        .expect("parameter present");
                    let ctx_children: Vec<Term> = cs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            if i == j {
                                Term::Param(1)
                            } else {
                                Term::leaf(self.rank0_ref(c))
                            }
                        })
                        .collect();
                    let ctx = Term::Sym(*f, ctx_children);
                    if matches!(cs[j], Term::Param(_)) {
                        ctx // form (d)
                    } else {
                        let top = self.define(ctx, 1);
                        let d = self.rank1_ref(&cs[j]);
                        Term::Sym(top, vec![Term::Sym(d, vec![Term::Param(1)])]) // form (b)
                    }
                }
                Term::Param(_) => unreachable!("identity aliases were removed"),
            }
        }

        /// A rank-0 nonterminal deriving val(t).
        fn rank0_ref(&mut self, t: &Term) -> SymbolId {
            match t {
                Term::Sym(s, cs) if cs.is_empty() && self.is_nt(*s) => *s,
                _ => self.define(t.clone(), 0),
            }
        }

        /// A rank-1 nonterminal whose val is the context t (one parameter).
        fn rank1_ref(&mut self, t: &Term) -> SymbolId {
            match t {
                Term::Sym(b, cs)
                    if cs.len() == 1
                        && self.is_nt(*b)
                        && matches!(cs[0], Term::Param(_)) =>
                {
                    *b
                }
                _ => self.define(t.clone(), 1),
            }
        }

        /// Fresh (memoized) nonterminal for the given pre-split term.
        fn define(&mut self, t: Term, rank: usize) -> SymbolId {
            if let Some(&id) = self.memo.get(&t) {
                return id;
            }
            let id = self.symbols.fresh("N", SymbolKind::Nonterminal, rank);
            self.memo.insert(t.clone(), id);
            let body = self.split(&t);
            self.out.insert(id, body);
            self.order.push(id);
            id
        }
    }

    let mut splitter = Splitter {
        symbols: &mut symbols,
        pre: &pre,
        out: HashMap::new(),
        order: Vec::new(),
        memo: HashMap::new(),
    };
    let mut order: Vec<SymbolId> = Vec::new();
    for &a in &g.nonterminals {
        if !pre.contains_key(&a) {
            continue;
        }
        let body = pre[&a].clone();
        let rhs = splitter.split(&body);
        splitter.out.insert(a, rhs);
        order.push(a);
    }
    order.extend(splitter.order.iter().copied());
    let rules = splitter.out;

    let reachable = reachable_set(g.start, &order, &rules);
    let order: Vec<SymbolId> = order.into_iter().filter(|a| reachable[a.idx()]).collect();
    let rules: HashMap<SymbolId, Term> = rules
        .into_iter()
        .filter(|(a, _)| reachable[a.idx()])
        .collect();
    let tslp = Tslp::from_parts(symbols, order, g.start, rules)?;
    Ok(classify(&tslp).expect("splitting yields the four forms"))
}
