use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::symbol::{SymbolId, SymbolKind, SymbolTable};
use crate::tslp::{Term, Tslp};

/// Family of benchmark grammars, all with derived-tree size exponential
/// in the depth parameter `k` while the grammar itself stays linear in k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// Derived tree is a comb: a spine of 2^k binary nodes.
    Chain,
    /// Derived tree is a full binary tree of depth k.
    Balanced,
    /// Seeded random grammar; derived size lands in [2^k, 2^(k+1)].
    Random,
}

impl std::str::FromStr for GenMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "chain" => Ok(GenMode::Chain),
            "balanced" => Ok(GenMode::Balanced),
            "random" => Ok(GenMode::Random),
            other => Err(format!("unknown generator mode: {other}")),
        }
    }
}

/// Builds a TSLP with the requested shape. Deterministic for a fixed
/// (mode, k, seed); seed only matters for `Random`.
pub fn generate(mode: GenMode, k: u32, seed: u64) -> Result<Tslp> {
    match mode {
        GenMode::Chain => gen_chain(k),
        GenMode::Balanced => gen_balanced(k),
        GenMode::Random => gen_random(k, seed),
    }
}

/// S derives a right comb f(f(...f(a,a)...,a),a) with 2^k f-nodes:
/// B_i squares B_{i-1}, B_0 appends one spine node.
fn gen_chain(k: u32) -> Result<Tslp> {
    let mut symbols = SymbolTable::new();
    let f = symbols.intern("f", SymbolKind::Terminal, 2);
    let a_t = symbols.intern("a", SymbolKind::Terminal, 0);
    let s = symbols.intern("S", SymbolKind::Nonterminal, 0);
    let a = symbols.intern("A", SymbolKind::Nonterminal, 0);
    let mut order = vec![s];
    let mut rules: HashMap<SymbolId, Term> = HashMap::new();
    rules.insert(a, Term::leaf(a_t));
    if k == 0 {
        // One spine node: S -> f(A, A).
        rules.insert(s, Term::Sym(f, vec![Term::leaf(a), Term::leaf(a)]));
        order.push(a);
        return Tslp::from_parts(symbols, order, s, rules);
    }
    let b0 = symbols.intern("B0", SymbolKind::Nonterminal, 1);
    rules.insert(b0, Term::Sym(f, vec![Term::Param(1), Term::leaf(a)]));
    let mut prev = b0;
    let mut bs = vec![b0];
    for i in 1..k {
        let bi = symbols.intern(&format!("B{i}"), SymbolKind::Nonterminal, 1);
        rules.insert(
            bi,
            Term::Sym(prev, vec![Term::Sym(prev, vec![Term::Param(1)])]),
        );
        bs.push(bi);
        prev = bi;
    }
    // S -> B_{k-1}(B_{k-1}(... no: S -> top(A) applies 2^(k-1)... use
    // squaring once more so the comb has exactly 2^k spine nodes.
    let top = symbols.intern(&format!("B{k}"), SymbolKind::Nonterminal, 1);
    rules.insert(
        top,
        Term::Sym(prev, vec![Term::Sym(prev, vec![Term::Param(1)])]),
    );
    bs.push(top);
    rules.insert(s, Term::Sym(top, vec![Term::leaf(a)]));
    order.extend(bs.into_iter().rev());
    order.push(a);
    Tslp::from_parts(symbols, order, s, rules)
}

/// S derives a full binary tree with b-labeled internal nodes of depth k
/// (2^(k+1)-1 nodes): A_i -> b(A_{i-1}, A_{i-1}) with sharing.
fn gen_balanced(k: u32) -> Result<Tslp> {
    let mut symbols = SymbolTable::new();
    let b = symbols.intern("b", SymbolKind::Terminal, 2);
    let a_t = symbols.intern("a", SymbolKind::Terminal, 0);
    let mut order = Vec::new();
    let mut rules: HashMap<SymbolId, Term> = HashMap::new();
    let mut prev = symbols.intern("A0", SymbolKind::Nonterminal, 0);
    rules.insert(prev, Term::leaf(a_t));
    order.push(prev);
    for i in 1..=k {
        let ai = symbols.intern(&format!("A{i}"), SymbolKind::Nonterminal, 0);
        rules.insert(ai, Term::Sym(b, vec![Term::leaf(prev), Term::leaf(prev)]));
        order.push(ai);
        prev = ai;
    }
    order.reverse();
    Tslp::from_parts(symbols, order, prev, rules)
}

/// Grows a pool of rules at random, tracking exact derived sizes, then
/// doubles the current root (s -> 2s+1 per step) until the derived size
/// lands in [2^k, 2^(k+1)).
fn gen_random(k: u32, seed: u64) -> Result<Tslp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut symbols = SymbolTable::new();
    let terminals: Vec<(SymbolId, usize)> = [("a", 0), ("c", 0), ("g", 1), ("f", 2), ("h", 3)]
        .iter()
        .map(|&(n, r)| (symbols.intern(n, SymbolKind::Terminal, r), r))
        .collect();
    let mut rules: HashMap<SymbolId, Term> = HashMap::new();
    let mut order: Vec<SymbolId> = Vec::new();
    // val-tree size of each pool nonterminal (rank 0) / context (rank 1,
    // size counts non-parameter nodes).
    let mut vsize: HashMap<SymbolId, u128> = HashMap::new();
    let mut pool0: Vec<SymbolId> = Vec::new();
    let mut pool1: Vec<SymbolId> = Vec::new();

    let fresh = |symbols: &mut SymbolTable, rank: usize| -> SymbolId {
        symbols.fresh(if rank == 0 { "R" } else { "Q" }, SymbolKind::Nonterminal, rank)
    };

    // Seed the pool with a couple of constants.
    for &(t, r) in &terminals {
        if r == 0 {
            let n = fresh(&mut symbols, 0);
            rules.insert(n, Term::leaf(t));
            vsize.insert(n, 1);
            pool0.push(n);
            order.push(n);
        }
    }

    let limit: u128 = 1u128 << k;
    let steps = (3 * (k as usize + 2)).max(8);
    for _ in 0..steps {
        let rank = if pool1.is_empty() || rng.gen_bool(0.5) { 1 } else { 0 };
        let n = fresh(&mut symbols, rank);
        // Pick a terminal of rank >= 1 and fill its children from the
        // pool, one slot being the parameter (rank 1) or a pool ref.
        let &(t, tr) = terminals
            .iter()
            .filter(|&&(_, r)| r >= 1)
            .nth(rng.gen_range(0..3))
            .unwrap();
        let hole = rng.gen_range(0..tr);
        let mut size: u128 = 1;
        let children: Vec<Term> = (0..tr)
            .map(|i| {
                if rank == 1 && i == hole {
                    Term::Param(1)
                } else {
                    let c = pool0[rng.gen_range(0..pool0.len())];
                    size += vsize[&c];
                    Term::leaf(c)
                }
            })
            .collect();
        let mut body = Term::Sym(t, children);
        // Sometimes wrap in a pool context for extra depth.
        if !pool1.is_empty() && rng.gen_bool(0.4) {
            let q = pool1[rng.gen_range(0..pool1.len())];
            size += vsize[&q];
            body = Term::Sym(q, vec![body]);
        }
        if size > limit {
            continue;
        }
        rules.insert(n, body);
        vsize.insert(n, size);
        if rank == 0 {
            pool0.push(n);
        } else {
            pool1.push(n);
        }
        order.push(n);
    }

    // Close off: repeatedly wrap the current root, doubling its size,
    // until the derived size reaches [2^k, 2^(k+1)): s -> 2s+1 cannot
    // overshoot a power-of-two window.
    let f2 = terminals.iter().find(|&&(_, r)| r == 2).unwrap().0;
    let mut cur = *pool0.last().unwrap();
    let mut cur_size = vsize[&cur];
    while cur_size < limit {
        let d = fresh(&mut symbols, 1);
        rules.insert(d, Term::Sym(f2, vec![Term::Param(1), Term::leaf(cur)]));
        let n = fresh(&mut symbols, 0);
        rules.insert(n, Term::Sym(d, vec![Term::leaf(cur)]));
        order.push(d);
        order.push(n);
        cur_size = 2 * cur_size + 1;
        vsize.insert(n, cur_size);
        cur = n;
    }
    let s = symbols.intern("S", SymbolKind::Nonterminal, 0);
    rules.insert(s, Term::leaf(cur));
    order.push(s);
    order.reverse();
    Tslp::from_parts(symbols, order, s, rules)
}

/// Exact size of the derived tree, without materializing it.
pub fn derived_size(g: &Tslp) -> Result<u128> {
    let mut sizes: HashMap<SymbolId, u128> = HashMap::new();
    for &a in &g.topo {
        let mut total: u128 = 0;
        let mut stack = vec![g.rhs(a)];
        while let Some(t) = stack.pop() {
            match t {
                Term::Param(_) => {}
                Term::Sym(s, cs) => {
                    // By linearity every argument subterm shows up exactly
                    // once in the derived tree, so children add linearly.
                    total += sizes.get(s).copied().unwrap_or(1);
                    stack.extend(cs.iter());
                }
            }
        }
        sizes.insert(a, total);
    }
    Ok(sizes[&g.start])
}
