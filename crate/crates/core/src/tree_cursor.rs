use std::collections::HashMap;

use crate::next_link::{NextLinkIndex, Side};
use crate::normalize::{Form, NormalizedTslp};
use crate::slp::Slp;
use crate::string_cursor::{step_left, step_right, StackTriple, StepCounters, TripleStack};
use crate::symbol::{SymbolId, SymbolKind, SymbolTable};

/// The spine SLP of a normalized monadic TSLP: one string rule B C per
/// rule A -> B(C) / B(C(x)), over a fresh symbol table where the rank-≤1
/// tree nonterminals of forms (a)/(b) are string nonterminals and those
/// of forms (c)/(d) are string terminals. val(A) in this SLP is A's
/// spine path: the chain of form-(d) symbols ending in a form-(c) one.
#[derive(Debug, Clone)]
pub struct SpineSlp {
    pub h: Slp,
    pub idx: NextLinkIndex,
    /// tree symbol id -> spine symbol id (nonterminals of the tree grammar)
    pub to_h: Vec<Option<SymbolId>>,
    /// spine symbol id -> tree symbol id
    pub from_h: Vec<SymbolId>,
}

/// All spine-SLP pieces plus the child triples through non-parameter
/// positions of form-(d) rules.
pub fn derive_spine(n: &NormalizedTslp) -> crate::error::Result<SpineSlp> {
    let g = &n.tslp;
    let mut symbols = SymbolTable::new();
    let mut to_h: Vec<Option<SymbolId>> = vec![None; g.symbols.len()];
    let mut from_h: Vec<SymbolId> = Vec::new();
    for &a in &g.nonterminals {
        let kind = if n.is_n1(a) {
            SymbolKind::Nonterminal
        } else {
            SymbolKind::Terminal
        };
        let id = symbols.intern(g.symbols.name(a), kind, 0);
        debug_assert_eq!(id.idx(), from_h.len());
        to_h[a.idx()] = Some(id);
        from_h.push(a);
    }
    let mut rhs: HashMap<SymbolId, Vec<SymbolId>> = HashMap::new();
    let mut order = Vec::new();
    for &a in &g.nonterminals {
        if !n.is_n1(a) {
            continue;
        }
        let (b, c) = n.spine_pair(a);
        let ha = to_h[a.idx()].unwrap();
        rhs.insert(ha, vec![to_h[b.idx()].unwrap(), to_h[c.idx()].unwrap()]);
        order.push(ha);
    }
    let h = Slp::from_parts(symbols, order, rhs)?;
    let idx = NextLinkIndex::new(&h);
    Ok(SpineSlp { h, idx, to_h, from_h })
}

/// The child triples (A, k, A_k) of every form-(d) rule, k ranging over
/// the non-parameter positions.
pub fn m_triples(n: &NormalizedTslp) -> Vec<(SymbolId, usize, SymbolId)> {
    let mut out = Vec::new();
    for &a in &n.tslp.nonterminals {
        if n.form(a) != Form::D {
            continue;
        }
        let d = n.d_rule(a);
        for (k, c) in d.children.iter().enumerate() {
            if let Some(target) = c {
                out.push((a, k + 1, *target));
            }
        }
    }
    out
}

/// One element of a tree-cursor stack: either a string triple over the
/// spine SLP, or a child triple (A, k, A_k) stepping off the spine into
/// the k-th child of a form-(d) node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Str(StackTriple),
    M {
        /// form-(d) tree nonterminal (spine-SLP ids in Str, tree ids here)
        head: SymbolId,
        k: usize,
        target: SymbolId,
    },
}

/// Bookkeeping per maximal string-triple run: where it starts in the
/// entry stack, which rank-0 tree nonterminal it expands, and the 1-based
/// position on that nonterminal's spine path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub start: usize,
    /// rank-0 tree nonterminal whose spine this frame walks
    pub head: SymbolId,
    pub pos: u64,
}

/// Constant-delay navigator over the derived tree. Nodes are identified
/// with derivation-tree paths ending at form-(c)/(d) nonterminals; the
/// stack factorizes into string-triple runs separated by child triples.
#[derive(Debug, Clone)]
pub struct TreeCursor {
    pub entries: Vec<Entry>,
    pub frames: Vec<Frame>,
    pub counters: StepCounters,
}

/// Adapter exposing the trailing string-triple run as a stack; a child
/// triple acts as the left-end marker.
struct TopRun<'a>(&'a mut Vec<Entry>);

impl TripleStack for TopRun<'_> {
    fn pop_triple(&mut self) -> Option<StackTriple> {
        match self.0.last() {
            Some(Entry::Str(t)) => {
                let t = *t;
                self.0.pop();
                Some(t)
            }
            _ => None,
        }
    }
    fn push_triple(&mut self, t: StackTriple) {
        self.0.push(Entry::Str(t));
    }
}

impl TreeCursor {
    /// Cursor at the root of val(a) for a rank-0 tree nonterminal: empty
    /// run for a form-(c) head, else the single all-left descent triple.
    pub fn root(n: &NormalizedTslp, sp: &SpineSlp, a: SymbolId) -> TreeCursor {
        let mut c = TreeCursor {
            entries: Vec::new(),
            frames: Vec::new(),
            counters: StepCounters::default(),
        };
        c.push_root(n, sp, a);
        c
    }

    fn push_root(&mut self, n: &NormalizedTslp, sp: &SpineSlp, a: SymbolId) {
        debug_assert_eq!(n.tslp.rank(a), 0);
        let start = self.entries.len();
        if n.form(a) == Form::A {
            let ha = sp.to_h[a.idx()].unwrap();
            self.counters.pushes += 1;
            self.entries.push(Entry::Str(StackTriple {
                head: ha,
                dir: Side::L,
                target: sp.idx.l.omega(ha),
            }));
        }
        self.frames.push(Frame {
            start,
            head: a,
            pos: 1,
        });
    }

    /// The form-(c)/(d) tree nonterminal this cursor stands on.
    pub fn current(&self, sp: &SpineSlp) -> SymbolId {
        match self.entries.last() {
            None => self.frames[0].head,
            Some(Entry::Str(t)) => sp.from_h[t.target.idx()],
            Some(Entry::M { target, .. }) => *target,
        }
    }

    pub fn label(&self, n: &NormalizedTslp, sp: &SpineSlp) -> SymbolId {
        n.label_of(self.current(sp))
    }

    pub fn rank_of(&self, n: &NormalizedTslp, sp: &SpineSlp) -> usize {
        n.tslp.symbols.rank(self.label(n, sp))
    }

    /// Moves to the i-th child (1-based). False if i exceeds the rank of
    /// the current label; the cursor is unchanged in that case.
    pub fn child(&mut self, n: &NormalizedTslp, sp: &SpineSlp, i: usize) -> bool {
        self.counters.reset();
        if i < 1 || i > self.rank_of(n, sp) {
            return false;
        }
        // Nonzero rank means the current nonterminal has form (d) and the
        // stack ends with a string triple.
        let b = self.current(sp);
        debug_assert_eq!(n.form(b), Form::D);
        let d = n.d_rule(b);
        if i == d.param_pos {
            // The parameter child continues the spine path: one string
            // step right inside the top run.
            let moved = step_right(
                &sp.h,
                &sp.idx,
                &mut TopRun(&mut self.entries),
                &mut self.counters,
            );
            debug_assert!(moved, "form-(d) symbols are never last on a spine");
            self.frames.last_mut().unwrap().pos += 1;
        } else {
            let target = d.children[i - 1].expect("non-parameter child");
            self.counters.pushes += 1;
            self.entries.push(Entry::M { head: b, k: i, target });
            self.push_root(n, sp, target);
        }
        debug_assert!(self.validate(n, sp).is_ok(), "{:?}", self.validate(n, sp));
        true
    }

    /// Moves to the parent. False (cursor unchanged) at the root.
    pub fn parent(&mut self, n: &NormalizedTslp, sp: &SpineSlp) -> bool {
        self.counters.reset();
        if self.frames.len() == 1 {
            let top = self.frames[0];
            // Root: the empty run, or a single all-left triple.
            if self.entries.len() <= top.start
                || (self.entries.len() == top.start + 1 && top.pos == 1)
            {
                return false;
            }
        }
        let top = *self.frames.last().unwrap();
        let run_len = self.entries.len() - top.start;
        if run_len == 0 || (run_len == 1 && top.pos == 1) {
            // The run holds at most the frame's root descent: drop it and
            // its child triple, landing back on the form-(d) node.
            self.counters.pops += (run_len + 1) as u64;
            self.entries.truncate(top.start.saturating_sub(1));
            self.frames.pop();
        } else {
            let moved = step_left(
                &sp.h,
                &sp.idx,
                &mut TopRun(&mut self.entries),
                &mut self.counters,
            );
            debug_assert!(moved, "interior spine positions can step left");
            self.frames.last_mut().unwrap().pos -= 1;
        }
        debug_assert!(self.validate(n, sp).is_ok(), "{:?}", self.validate(n, sp));
        true
    }

    /// Debug validator for the stack factorization invariants.
    pub fn validate(&self, n: &NormalizedTslp, sp: &SpineSlp) -> Result<(), String> {
        if self.frames.is_empty() {
            return Err("no frames".into());
        }
        let mut f = 0usize;
        for (i, e) in self.entries.iter().enumerate() {
            while f + 1 < self.frames.len() && self.frames[f + 1].start <= i {
                f += 1;
            }
            match e {
                Entry::Str(t) => {
                    match self.entries.get(i + 1) {
                        Some(Entry::Str(next)) => {
                            if next.head != t.target {
                                return Err(format!("entry {i}: broken continuity"));
                            }
                            if next.dir == t.dir {
                                return Err(format!("entry {i}: no alternation"));
                            }
                        }
                        _ => {
                            // run ends: target must be an H terminal (N_2)
                            if sp.h.is_nonterminal(t.target) {
                                return Err(format!("entry {i}: run ends on a nonterminal"));
                            }
                        }
                    }
                }
                Entry::M { head, k, target } => {
                    if n.form(*head) != Form::D {
                        return Err(format!("entry {i}: child triple off a non-(d) head"));
                    }
                    let d = n.d_rule(*head);
                    if *k == d.param_pos || d.children.get(k - 1) != Some(&Some(*target)) {
                        return Err(format!("entry {i}: bad child triple"));
                    }
                    // a frame must start right after
                    if !self.frames.iter().any(|fr| fr.start == i + 1) {
                        return Err(format!("entry {i}: no frame after child triple"));
                    }
                }
            }
        }
        // per-frame: pos within the spine length; empty frames only for (c)
        for fr in &self.frames {
            let next_start = self
                .frames
                .iter()
                .map(|o| o.start)
                .filter(|&s| s > fr.start)
                .min()
                .unwrap_or(self.entries.len());
            if next_start == fr.start {
                if n.form(fr.head) != Form::C {
                    return Err("empty frame with a non-(c) head".into());
                }
                if fr.pos != 1 {
                    return Err("empty frame with pos != 1".into());
                }
            } else if n.form(fr.head) != Form::A {
                return Err("nonempty frame with a non-(a) head".into());
            }
        }
        let _ = n;
        Ok(())
    }
}

/// Preorder stream of (label, depth) pairs produced purely by cursor
/// moves; each edge is walked twice.
pub fn dfs_preorder(
    n: &NormalizedTslp,
    sp: &SpineSlp,
    guard: u64,
) -> Result<Vec<(SymbolId, usize)>, crate::error::GrammarError> {
    let mut c = TreeCursor::root(n, sp, n.tslp.start);
    let mut out = Vec::new();
    let mut child_path: Vec<usize> = Vec::new();
    loop {
        if out.len() as u64 >= guard {
            return Err(crate::error::GrammarError::GuardExceeded {
                size: out.len() as u64 + 1,
                guard,
            });
        }
        out.push((c.label(n, sp), child_path.len()));
        if c.rank_of(n, sp) >= 1 {
            assert!(c.child(n, sp, 1));
            child_path.push(1);
            continue;
        }
        // climb to the next unvisited sibling
        loop {
            let Some(i) = child_path.pop() else {
                return Ok(out);
            };
            assert!(c.parent(n, sp));
            if i < c.rank_of(n, sp) {
                assert!(c.child(n, sp, i + 1));
                child_path.push(i + 1);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::normalize_monadic;
    use crate::tslp::{eval_tslp, parse_tslp};

    const EXAMPLE3: &str = "\
start S
S -> A(B)
A(x1) -> C(D(x1))
B -> C(E)
C(x1) -> f(F,x1)
D(x1) -> f(x1,F)
E -> D(F)
F -> G(H)
G(x1) -> J(J(x1))
H -> a
J(x1) -> g(x1)
";

    fn setup(text: &str) -> (NormalizedTslp, SpineSlp) {
        let g = parse_tslp(text).unwrap();
        let n = normalize_monadic(&g).unwrap();
        let sp = derive_spine(&n).unwrap();
        (n, sp)
    }

    #[test]
    fn spine_slp_example3() {
        let (n, sp) = setup(EXAMPLE3);
        let rules: Vec<String> = sp
            .h
            .nonterminals
            .iter()
            .map(|&a| {
                format!(
                    "{} -> {}",
                    sp.h.symbols.name(a),
                    sp.h.rhs(a)
                        .iter()
                        .map(|&s| sp.h.symbols.name(s))
                        .collect::<Vec<_>>()
                        .join("")
                )
            })
            .collect();
        let mut got = rules.clone();
        got.sort();
        let mut expect = vec![
            "S -> AB", "A -> CD", "B -> CE", "E -> DF", "F -> GH", "G -> JJ",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        expect.sort();
        assert_eq!(got, expect);
        let mut m: Vec<String> = m_triples(&n)
            .iter()
            .map(|&(a, k, t)| {
                format!(
                    "({},{k},{})",
                    n.tslp.symbols.name(a),
                    n.tslp.symbols.name(t)
                )
            })
            .collect();
        m.sort();
        assert_eq!(m, vec!["(C,1,F)", "(D,2,F)"]);
    }

    #[test]
    fn root_and_label_example3() {
        let (n, sp) = setup(EXAMPLE3);
        let c = TreeCursor::root(&n, &sp, n.tslp.start);
        // single triple (S, ℓ, C): leftmost spine descent
        assert_eq!(c.entries.len(), 1);
        let Entry::Str(t) = c.entries[0] else { panic!() };
        assert_eq!(sp.h.symbols.name(t.head), "S");
        assert_eq!(t.dir, Side::L);
        assert_eq!(sp.h.symbols.name(t.target), "C");
        assert_eq!(n.tslp.symbols.name(c.label(&n, &sp)), "f");
        assert_eq!(c.rank_of(&n, &sp), 2);
    }

    #[test]
    fn root_of_n1_f() {
        let (n, sp) = setup(EXAMPLE3);
        let f = n.tslp.symbols.lookup("F").unwrap();
        let c = TreeCursor::root(&n, &sp, f);
        let Entry::Str(t) = c.entries[0] else { panic!() };
        assert_eq!(sp.h.symbols.name(t.head), "F");
        assert_eq!(sp.h.symbols.name(t.target), "J");
    }

    #[test]
    fn child_traces_example3() {
        let (n, sp) = setup(EXAMPLE3);
        let name = |id: SymbolId| n.tslp.symbols.name(id).to_string();
        let hname = |id: SymbolId| sp.h.symbols.name(id).to_string();
        // child 1 of the root: off-spine via (C,1,F) then root(F)
        let mut c = TreeCursor::root(&n, &sp, n.tslp.start);
        assert!(c.child(&n, &sp, 1));
        assert_eq!(c.entries.len(), 3);
        assert!(matches!(c.entries[1], Entry::M { k: 1, .. }));
        let Entry::Str(t) = c.entries[2] else { panic!() };
        assert_eq!(hname(t.head), "F");
        assert_eq!(hname(t.target), "J");
        assert_eq!(name(c.label(&n, &sp)), "g");
        // child 2 of the root: down the spine to (S,ℓ,A)(A,r,D)
        let mut c = TreeCursor::root(&n, &sp, n.tslp.start);
        assert!(c.child(&n, &sp, 2));
        let strs: Vec<(String, Side, String)> = c
            .entries
            .iter()
            .map(|e| {
                let Entry::Str(t) = e else { panic!() };
                (hname(t.head), t.dir, hname(t.target))
            })
            .collect();
        assert_eq!(
            strs,
            vec![
                ("S".into(), Side::L, "A".into()),
                ("A".into(), Side::R, "D".into()),
            ]
        );
        assert_eq!(name(c.label(&n, &sp)), "f");
        // then child 2 again: (S,ℓ,A)(A,r,D)(D,2,F)(F,ℓ,J) — the g node
        assert!(c.child(&n, &sp, 2));
        assert_eq!(c.entries.len(), 4);
        assert!(matches!(c.entries[2], Entry::M { k: 2, .. }));
        assert_eq!(name(c.label(&n, &sp)), "g");
        assert_eq!(c.rank_of(&n, &sp), 1);
    }

    #[test]
    fn parent_inverts_child() {
        let (n, sp) = setup(EXAMPLE3);
        let root = TreeCursor::root(&n, &sp, n.tslp.start);
        // BFS over the whole 19-node tree checking parent∘child = id
        let mut queue = vec![root.clone()];
        let mut seen = 0;
        while let Some(c) = queue.pop() {
            seen += 1;
            for i in 1..=c.rank_of(&n, &sp) {
                let mut down = c.clone();
                assert!(down.child(&n, &sp, i));
                let mut back = down.clone();
                assert!(back.parent(&n, &sp));
                assert_eq!(back.entries, c.entries);
                assert_eq!(back.frames, c.frames);
                queue.push(down);
            }
        }
        assert_eq!(seen, 19);
        // parent at the root is undefined and leaves the cursor intact
        let mut r = root.clone();
        assert!(!r.parent(&n, &sp));
        assert_eq!(r.entries, root.entries);
    }

    #[test]
    fn preorder_matches_oracle_example3() {
        let (n, sp) = setup(EXAMPLE3);
        let got: Vec<String> = dfs_preorder(&n, &sp, 1000)
            .unwrap()
            .iter()
            .map(|&(l, _)| n.tslp.symbols.name(l).to_string())
            .collect();
        let g = parse_tslp(EXAMPLE3).unwrap();
        let t = eval_tslp(&g, g.start, 1000).unwrap();
        let expect: Vec<String> = t
            .preorder_labels()
            .iter()
            .map(|&l| g.symbols.name(l).to_string())
            .collect();
        assert_eq!(got.len(), 19);
        assert_eq!(got, expect);
    }

    #[test]
    fn preorder_single_node() {
        let (n, sp) = setup("start S\nS -> a\n");
        let c = TreeCursor::root(&n, &sp, n.tslp.start);
        assert!(c.entries.is_empty());
        assert_eq!(n.tslp.symbols.name(c.label(&n, &sp)), "a");
        let labels = dfs_preorder(&n, &sp, 10).unwrap();
        assert_eq!(labels.len(), 1);
    }

    #[test]
    fn preorder_matches_oracle_generated() {
        use crate::generate::{generate, GenMode};
        use crate::normalize::monadize;
        for (mode, ks) in [
            (GenMode::Chain, vec![0u32, 1, 4, 7]),
            (GenMode::Balanced, vec![0, 1, 4, 7]),
            (GenMode::Random, vec![3, 6, 9]),
        ] {
            for &k in &ks {
                let g = generate(mode, k, 5).unwrap();
                let n = normalize_monadic(&monadize(&g).unwrap()).unwrap();
                let sp = derive_spine(&n).unwrap();
                let got: Vec<String> = dfs_preorder(&n, &sp, 1 << 20)
                    .unwrap()
                    .iter()
                    .map(|&(l, _)| n.tslp.symbols.name(l).to_string())
                    .collect();
                let t = eval_tslp(&g, g.start, 1 << 20).unwrap();
                let expect: Vec<String> = t
                    .preorder_labels()
                    .iter()
                    .map(|&l| g.symbols.name(l).to_string())
                    .collect();
                assert_eq!(got, expect, "{mode:?} k={k}");
            }
        }
    }

    #[test]
    fn constant_delay_counters() {
        let (n, sp) = setup(EXAMPLE3);
        let mut c = TreeCursor::root(&n, &sp, n.tslp.start);
        let mut stack = Vec::new();
        // full DFS with counter checks on every move
        loop {
            let r = c.rank_of(&n, &sp);
            if r >= 1 {
                assert!(c.child(&n, &sp, 1));
                assert!(c.counters.pops + c.counters.pushes <= 8);
                assert!(c.counters.next_links <= 1);
                stack.push(1usize);
                continue;
            }
            loop {
                let Some(i) = stack.pop() else {
                    return;
                };
                assert!(c.parent(&n, &sp));
                assert!(c.counters.pops + c.counters.pushes <= 8);
                assert!(c.counters.next_links <= 1);
                if i < c.rank_of(&n, &sp) {
                    assert!(c.child(&n, &sp, i + 1));
                    stack.push(i + 1);
                    break;
                }
            }
        }
    }

    #[test]
    fn deep_chain_navigation() {
        // 2^16-node spine without materializing: descend parameter child
        // to the bottom and come back.
        use crate::generate::{generate, GenMode};
        use crate::normalize::monadize;
        let g = generate(GenMode::Chain, 15, 0).unwrap();
        let n = normalize_monadic(&monadize(&g).unwrap()).unwrap();
        let sp = derive_spine(&n).unwrap();
        let mut c = TreeCursor::root(&n, &sp, n.tslp.start);
        let mut depth = 0u64;
        while c.rank_of(&n, &sp) >= 1 {
            assert!(c.child(&n, &sp, 1));
            assert!(c.counters.pops + c.counters.pushes <= 8);
            depth += 1;
        }
        assert_eq!(depth, 1 << 15);
        while c.parent(&n, &sp) {
            assert!(c.counters.pops + c.counters.pushes <= 8);
            depth -= 1;
        }
        assert_eq!(depth, 0);
    }
}
