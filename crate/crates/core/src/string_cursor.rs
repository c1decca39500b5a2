use crate::next_link::{NextLinkIndex, Side, Triple};
use crate::slp::Slp;
use crate::symbol::SymbolId;

/// One step of a root-to-leaf path: a maximal run of left (ℓ) or right
/// (r) derivation-tree edges from `head` down to `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackTriple {
    pub head: SymbolId,
    pub dir: Side,
    pub target: SymbolId,
}

/// Per-call operation counts, for the constant-delay assertions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepCounters {
    pub pops: u64,
    pub pushes: u64,
    pub next_links: u64,
}

impl StepCounters {
    pub fn reset(&mut self) {
        *self = StepCounters::default();
    }
}

/// Stack abstraction for the step algorithms: a plain vector for string
/// cursors, or the maximal trailing run of string triples in a larger
/// mixed stack (tree cursors), where `pop_triple` refuses to cross the
/// run boundary.
pub trait TripleStack {
    fn pop_triple(&mut self) -> Option<StackTriple>;
    fn push_triple(&mut self, t: StackTriple);
}

impl TripleStack for Vec<StackTriple> {
    fn pop_triple(&mut self) -> Option<StackTriple> {
        self.pop()
    }
    fn push_triple(&mut self, t: StackTriple) {
        self.push(t);
    }
}

#[inline]
fn pop<S: TripleStack>(stack: &mut S, c: &mut StepCounters) -> Option<StackTriple> {
    let t = stack.pop_triple()?;
    c.pops += 1;
    Some(t)
}

#[inline]
fn push<S: TripleStack>(stack: &mut S, t: StackTriple, c: &mut StepCounters) {
    c.pushes += 1;
    stack.push_triple(t);
}

fn reduce(
    idx: &NextLinkIndex,
    side: Side,
    head: SymbolId,
    target: SymbolId,
    c: &mut StepCounters,
) -> Option<SymbolId> {
    let t = Triple { head, target };
    let r = match side {
        Side::L => idx.reduce_l(t),
        Side::R => idx.reduce_r(t),
    }?;
    c.next_links += 1;
    Some(r.target)
}

/// Appends the path to the leftmost leaf below the position right of the
/// path `stack · (A,ℓ,α)`. Mutates `stack` exactly per the movement
/// rules: climb while coming up right edges, step to the right sibling,
/// then descend leftmost.
fn expand_right<S: TripleStack>(
    g: &Slp,
    idx: &NextLinkIndex,
    stack: &mut S,
    a: SymbolId,
    alpha: SymbolId,
    c: &mut StepCounters,
) {
    let (a1, a2) = g.rhs2(a);
    if alpha != a1 {
        let b = reduce(idx, Side::L, a, alpha, c).expect("alpha below the first rhs symbol");
        push(stack, StackTriple { head: a, dir: Side::L, target: b }, c);
        let (_, b2) = g.rhs2(b);
        push(stack, StackTriple { head: b, dir: Side::R, target: b2 }, c);
        if g.is_nonterminal(b2) {
            let w = idx.l.omega(b2);
            push(stack, StackTriple { head: b2, dir: Side::L, target: w }, c);
        }
    } else {
        match pop(stack, c) {
            None => push(stack, StackTriple { head: a, dir: Side::R, target: a2 }, c),
            Some(t) => {
                debug_assert_eq!(t.dir, Side::R);
                debug_assert_eq!(t.target, a);
                push(stack, StackTriple { head: t.head, dir: Side::R, target: a2 }, c);
            }
        }
        if g.is_nonterminal(a2) {
            let w = idx.l.omega(a2);
            push(stack, StackTriple { head: a2, dir: Side::L, target: w }, c);
        }
    }
}

/// Mirror of `expand_right` for moving one position left.
fn expand_left<S: TripleStack>(
    g: &Slp,
    idx: &NextLinkIndex,
    stack: &mut S,
    a: SymbolId,
    alpha: SymbolId,
    c: &mut StepCounters,
) {
    let (a1, a2) = g.rhs2(a);
    if alpha != a2 {
        let b = reduce(idx, Side::R, a, alpha, c).expect("alpha below the second rhs symbol");
        push(stack, StackTriple { head: a, dir: Side::R, target: b }, c);
        let (b1, _) = g.rhs2(b);
        push(stack, StackTriple { head: b, dir: Side::L, target: b1 }, c);
        if g.is_nonterminal(b1) {
            let w = idx.r.omega(b1);
            push(stack, StackTriple { head: b1, dir: Side::R, target: w }, c);
        }
    } else {
        match pop(stack, c) {
            None => push(stack, StackTriple { head: a, dir: Side::L, target: a1 }, c),
            Some(t) => {
                debug_assert_eq!(t.dir, Side::L);
                debug_assert_eq!(t.target, a);
                push(stack, StackTriple { head: t.head, dir: Side::L, target: a1 }, c);
            }
        }
        if g.is_nonterminal(a1) {
            let w = idx.r.omega(a1);
            push(stack, StackTriple { head: a1, dir: Side::R, target: w }, c);
        }
    }
}

/// Advances the path above `floor` one position to the right. Returns
/// false (stack untouched) when already at the last position.
pub fn step_right<S: TripleStack>(
    g: &Slp,
    idx: &NextLinkIndex,
    stack: &mut S,
    c: &mut StepCounters,
) -> bool {
    let top = pop(stack, c).expect("nonempty sequence");
    if top.dir == Side::L {
        expand_right(g, idx, stack, top.head, top.target, c);
        return true;
    }
    match pop(stack, c) {
        None => {
            // Only right edges up to the root: last position. Restore.
            stack.push_triple(top);
            false
        }
        Some(prev) => {
            debug_assert_eq!(prev.dir, Side::L);
            debug_assert_eq!(prev.target, top.head);
            expand_right(g, idx, stack, prev.head, prev.target, c);
            true
        }
    }
}

/// Mirror of `step_right`; false at position 1.
pub fn step_left<S: TripleStack>(
    g: &Slp,
    idx: &NextLinkIndex,
    stack: &mut S,
    c: &mut StepCounters,
) -> bool {
    let top = pop(stack, c).expect("nonempty sequence");
    if top.dir == Side::R {
        expand_left(g, idx, stack, top.head, top.target, c);
        return true;
    }
    match pop(stack, c) {
        None => {
            stack.push_triple(top);
            false
        }
        Some(prev) => {
            debug_assert_eq!(prev.dir, Side::R);
            debug_assert_eq!(prev.target, top.head);
            expand_left(g, idx, stack, prev.head, prev.target, c);
            true
        }
    }
}

/// Two-way cursor over val(X): a triple stack plus 1-based position,
/// every move touching O(1) triples.
#[derive(Debug, Clone)]
pub struct StringCursor {
    pub stack: Vec<StackTriple>,
    pub pos: u64,
    pub counters: StepCounters,
}

impl StringCursor {
    /// Position 1: one maximal left run from x.
    pub fn begin(idx: &NextLinkIndex, x: SymbolId) -> StringCursor {
        StringCursor {
            stack: vec![StackTriple {
                head: x,
                dir: Side::L,
                target: idx.l.omega(x),
            }],
            pos: 1,
            counters: StepCounters::default(),
        }
    }

    /// Position |val(x)|: one maximal right run from x.
    pub fn end(idx: &NextLinkIndex, x: SymbolId, len: u64) -> StringCursor {
        StringCursor {
            stack: vec![StackTriple {
                head: x,
                dir: Side::R,
                target: idx.r.omega(x),
            }],
            pos: len,
            counters: StepCounters::default(),
        }
    }

    /// The terminal at the current position.
    pub fn symbol(&self) -> SymbolId {
        self.stack.last().expect("valid sequence is nonempty").target
    }

    pub fn right(&mut self, g: &Slp, idx: &NextLinkIndex) -> bool {
        self.counters.reset();
        let moved = step_right(g, idx, &mut self.stack, &mut self.counters);
        if moved {
            self.pos += 1;
            debug_assert!(self.validate(g, idx).is_ok(), "{:?}", self.validate(g, idx));
        }
        moved
    }

    pub fn left(&mut self, g: &Slp, idx: &NextLinkIndex) -> bool {
        self.counters.reset();
        let moved = step_left(g, idx, &mut self.stack, &mut self.counters);
        if moved {
            self.pos -= 1;
            debug_assert!(self.validate(g, idx).is_ok(), "{:?}", self.validate(g, idx));
        }
        moved
    }

    /// Debug validator: alternation, head continuity, terminal ending,
    /// and each target on its head's spine.
    pub fn validate(&self, g: &Slp, idx: &NextLinkIndex) -> Result<(), String> {
        if self.stack.is_empty() {
            return Err("empty sequence".into());
        }
        for (i, t) in self.stack.iter().enumerate() {
            let forest = match t.dir {
                Side::L => &idx.l.forest,
                Side::R => &idx.r.forest,
            };
            if !forest.is_ancestor(t.target, t.head) {
                return Err(format!("triple {i}: target not on the head's spine"));
            }
            if i + 1 < self.stack.len() {
                let next = self.stack[i + 1];
                if next.head != t.target {
                    return Err(format!("triple {i}: broken head continuity"));
                }
                if next.dir == t.dir {
                    return Err(format!("triple {i}: directions do not alternate"));
                }
            }
        }
        let last = self.stack.last().unwrap();
        if g.is_nonterminal(last.target) {
            return Err("last target is not a terminal".into());
        }
        Ok(())
    }
}
