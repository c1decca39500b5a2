//! O(1) subtree-equality testing on top of the tree cursor.
//!
//! The grammar is first *reduced* (no two nonterminals derive the same
//! tree/context). For every rank-0 nonterminal A of form (a), the spine
//! word val_H(A) = A_1..A_n A_{n+1} has a *split position* s(A): the
//! least i >= 2 where the suffix tree val(A[i:]) equals val(A') for some
//! rank-0 A'. Navigation is modified so a cursor's spine position never
//! reaches s: descending through position s(A)-1's parameter child
//! instead opens a fresh run for A' behind a separator. Two non-leaf
//! subtrees val(C1[n1:]) and val(C2[n2:]) are then equal iff the split
//! distances agree, the closing contexts r_C(C') agree, and the spine
//! prefixes share a long-enough common suffix — the latter answered in
//! O(1) by one LCA query on a Patricia tree over the reversed prefix
//! words.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use crate::error::{GrammarError, Result};
use crate::fingerprint::Fingerprinter;
use crate::next_link::Side;
use crate::normalize::{classify, monadize, normalize_monadic, Form, NormalizedTslp};
use crate::slp::Slp;
use crate::slp_algorithms::{symbol_at, tslp_equal};
use crate::string_cursor::{step_left, step_right, StackTriple, StepCounters, TripleStack};
use crate::symbol::{SymbolId, SymbolKind};
use crate::tree_cursor::{derive_spine, Frame, SpineSlp};
use crate::tslp::{sizes, Term, Tslp};

/// A normalized grammar in which distinct nonterminals derive distinct
/// trees (rank 0) or contexts (rank 1), with the merge map that got it
/// there.
#[derive(Debug, Clone)]
pub struct ReducedTslp {
    pub n: NormalizedTslp,
    /// every original nonterminal -> its surviving representative
    pub merged: HashMap<SymbolId, SymbolId>,
}

/// Merges value-equal nonterminals. Candidates are grouped by
/// (rank, derived size); within a group, rank-0 pairs compare via
/// preorder words and rank-1 pairs via two fresh probe constants
/// substituted for the parameter. Representatives' right-hand sides are
/// rewritten and unreachable rules dropped; val(start) is unchanged.
pub fn reduce_grammar(n: &NormalizedTslp) -> Result<ReducedTslp> {
    let g = &n.tslp;
    let sz = sizes(g)?;
    let mut groups: BTreeMap<(usize, u64), Vec<SymbolId>> = BTreeMap::new();
    for &a in &g.nonterminals {
        groups.entry((g.rank(a), sz.get(a))).or_default().push(a);
    }

    // For rank-1 comparisons: one probe grammar with A -> A(z) rank-0
    // wrappers over two fresh constants.
    let need_probe: Vec<SymbolId> = groups
        .values()
        .filter(|v| v.len() > 1)
        .flatten()
        .copied()
        .filter(|&a| g.rank(a) == 1)
        .collect();
    let probe = if need_probe.is_empty() {
        None
    } else {
        let mut symbols = g.symbols.clone();
        let z1 = symbols.fresh("zprobe", SymbolKind::Terminal, 0);
        let z2 = symbols.fresh("zprobe", SymbolKind::Terminal, 0);
        let mut rules: HashMap<SymbolId, Term> = g
            .nonterminals
            .iter()
            .map(|&x| (x, g.rhs(x).clone()))
            .collect();
        let mut nts = g.nonterminals.clone();
        let mut p1 = HashMap::new();
        let mut p2 = HashMap::new();
        for &a in &need_probe {
            for (z, map) in [(z1, &mut p1), (z2, &mut p2)] {
                let w = symbols.fresh("pr", SymbolKind::Nonterminal, 0);
                rules.insert(w, Term::Sym(a, vec![Term::leaf(z)]));
                nts.push(w);
                map.insert(a, w);
            }
        }
        let start = g.start;
        Some((Tslp::from_parts(symbols, nts, start, rules)?, p1, p2))
    };

    let mut rep: HashMap<SymbolId, SymbolId> = HashMap::new();
    for ((rank, _), members) in &groups {
        let mut leaders: Vec<SymbolId> = Vec::new();
        'member: for &a in members {
            for &l in &leaders {
                let equal = if *rank == 0 {
                    tslp_equal(g, a, g, l)?
                } else {
                    let (gx, p1, p2) = probe.as_ref().expect("probe grammar built");
                    tslp_equal(gx, p1[&a], gx, p1[&l])? && tslp_equal(gx, p2[&a], gx, p2[&l])?
                };
                if equal {
                    rep.insert(a, l);
                    continue 'member;
                }
            }
            leaders.push(a);
            rep.insert(a, a);
        }
    }

    // Keep the start symbol as its class representative.
    let sr = rep[&g.start];
    if sr != g.start {
        for v in rep.values_mut() {
            if *v == sr {
                *v = g.start;
            }
        }
    }

    fn rewrite(t: &Term, rep: &HashMap<SymbolId, SymbolId>) -> Term {
        match t {
            Term::Param(i) => Term::Param(*i),
            Term::Sym(s, cs) => Term::Sym(
                *rep.get(s).unwrap_or(s),
                cs.iter().map(|c| rewrite(c, rep)).collect(),
            ),
        }
    }

    // Reachable representatives from the start, over rewritten bodies.
    let mut reach: Vec<bool> = vec![false; g.symbols.len()];
    let mut stack = vec![g.start];
    reach[g.start.idx()] = true;
    while let Some(x) = stack.pop() {
        let body = rewrite(g.rhs(x), &rep);
        body.for_each_symbol(&mut |s| {
            if g.is_nonterminal(s) && !reach[s.idx()] {
                let r = rep[&s];
                if !reach[r.idx()] {
                    reach[r.idx()] = true;
                    stack.push(r);
                }
                reach[s.idx()] = true;
            }
        });
    }

    let kept: Vec<SymbolId> = g
        .nonterminals
        .iter()
        .copied()
        .filter(|&a| rep[&a] == a && reach[a.idx()])
        .collect();
    let rules: HashMap<SymbolId, Term> = kept
        .iter()
        .map(|&a| (a, rewrite(g.rhs(a), &rep)))
        .collect();
    let g2 = Tslp::from_parts(g.symbols.clone(), kept, g.start, rules)?;
    let n2 = classify(&g2).ok_or_else(|| {
        GrammarError::Invalid("reduction left a rule outside the normal forms".into())
    })?;
    Ok(ReducedTslp { n: n2, merged: rep })
}

/// Per-nonterminal split data for A in N_a.
#[derive(Debug, Clone, Copy)]
pub struct SpineSplit {
    /// spine length ℓ(A) = |val_H(A)|
    pub len: u64,
    /// least position >= 2 whose suffix tree is some rank-0 value
    pub s: u64,
    /// the rank-0 nonterminal with val(A[s:]) = val(A')
    pub a_prime: SymbolId,
    /// the form-(d) spine symbol at position s-1
    pub r_sym: SymbolId,
    /// interned id of the closing context r_A with A' substituted
    pub r_class: u32,
}

#[derive(Debug, Clone)]
pub struct SplitTable {
    splits: Vec<Option<SpineSplit>>,
    /// r_class -> the term r_A(A'), for reporting
    pub r_terms: Vec<Term>,
}

impl SplitTable {
    pub fn get(&self, a: SymbolId) -> &SpineSplit {
        self.splits[a.idx()].as_ref().expect("form-(a) nonterminal")
    }

    pub fn try_get(&self, a: SymbolId) -> Option<&SpineSplit> {
        self.splits[a.idx()].as_ref()
    }
}

/// Spine length and derived-tree weight of every nonterminal: a form-(d)
/// symbol weighs 1 plus its non-parameter subtree sizes, a form-(c)
/// symbol weighs 1, and N_1 symbols sum their spine pair. The weight of
/// a word suffix is exactly the size of the tree it derives.
fn spine_tables(n: &NormalizedTslp) -> Result<(Vec<u64>, Vec<u64>)> {
    let g = &n.tslp;
    let sz = sizes(g)?;
    let mut len = vec![0u64; g.symbols.len()];
    let mut wt = vec![0u64; g.symbols.len()];
    for &a in &g.topo {
        match n.form(a) {
            Form::C => {
                len[a.idx()] = 1;
                wt[a.idx()] = 1;
            }
            Form::D => {
                let d = n.d_rule(a);
                let mut w = 1u64;
                for c in d.children.iter().flatten() {
                    w = w
                        .checked_add(sz.get(*c))
                        .ok_or_else(|| GrammarError::TooLarge {
                            name: g.symbols.name(a).to_string(),
                        })?;
                }
                len[a.idx()] = 1;
                wt[a.idx()] = w;
            }
            Form::A | Form::B => {
                let (b, c) = n.spine_pair(a);
                len[a.idx()] = len[b.idx()] + len[c.idx()];
                wt[a.idx()] = wt[b.idx()]
                    .checked_add(wt[c.idx()])
                    .ok_or_else(|| GrammarError::TooLarge {
                        name: g.symbols.name(a).to_string(),
                    })?;
            }
        }
    }
    Ok((len, wt))
}

/// Smallest position p in val_H(x) whose cumulative weight reaches t,
/// with the exact cumulative weight at p. O(derivation depth).
fn weight_pos(n: &NormalizedTslp, lenv: &[u64], wtv: &[u64], x: SymbolId, t: u64) -> (u64, u64) {
    debug_assert!(t >= 1 && t <= wtv[x.idx()]);
    let mut cur = x;
    let mut t = t;
    let mut off = 0u64;
    let mut cum = 0u64;
    loop {
        if n.is_n2(cur) {
            return (off + 1, cum + wtv[cur.idx()]);
        }
        let (b, c) = n.spine_pair(cur);
        if wtv[b.idx()] >= t {
            cur = b;
        } else {
            t -= wtv[b.idx()];
            off += lenv[b.idx()];
            cum += wtv[b.idx()];
            cur = c;
        }
    }
}

/// Fresh nonterminal deriving val(x[p:]), built by descending the spine
/// derivation; O(depth) fresh symbols per call.
fn suffix_symbol(
    n: &NormalizedTslp,
    lenv: &[u64],
    symbols: &mut crate::symbol::SymbolTable,
    rules: &mut HashMap<SymbolId, Term>,
    x: SymbolId,
    p: u64,
) -> SymbolId {
    if p == 1 {
        return x;
    }
    let (b, c) = n.spine_pair(x);
    let lb = lenv[b.idx()];
    if p <= lb {
        let sb = suffix_symbol(n, lenv, symbols, rules, b, p);
        let rc = symbols.rank(c);
        let w = symbols.fresh("Suf", SymbolKind::Nonterminal, rc);
        let inner = if rc == 1 {
            Term::Sym(c, vec![Term::Param(1)])
        } else {
            Term::leaf(c)
        };
        rules.insert(w, Term::Sym(sb, vec![inner]));
        w
    } else {
        suffix_symbol(n, lenv, symbols, rules, c, p - lb)
    }
}

/// Extends the grammar with a start symbol deriving the spine suffix
/// val(a[s:]).
fn spine_suffix_grammar(
    n: &NormalizedTslp,
    lenv: &[u64],
    a: SymbolId,
    s: u64,
) -> Result<(Tslp, SymbolId)> {
    let g = &n.tslp;
    let mut symbols = g.symbols.clone();
    let mut rules: HashMap<SymbolId, Term> = g
        .nonterminals
        .iter()
        .map(|&x| (x, g.rhs(x).clone()))
        .collect();
    let before = symbols.len();
    let w = suffix_symbol(n, lenv, &mut symbols, &mut rules, a, s);
    let mut nts = g.nonterminals.clone();
    for i in before..symbols.len() {
        nts.push(SymbolId(i as u32));
    }
    let gx = Tslp::from_parts(symbols, nts, w, rules)?;
    Ok((gx, w))
}

/// s(A), A' and r_A for every A in N_a. Candidate positions come from a
/// weighted descent (suffix sizes are strictly decreasing along the
/// spine, so each rank-0 size pins at most one position); candidates are
/// then confirmed in ascending order by comparing the extracted suffix
/// grammar against the same-size rank-0 nonterminals.
pub fn precompute_splits(r: &ReducedTslp, sp: &SpineSlp) -> Result<SplitTable> {
    let n = &r.n;
    let g = &n.tslp;
    let (lenv, wtv) = spine_tables(n)?;
    let sz = sizes(g)?;
    let mut by_size: BTreeMap<u64, Vec<SymbolId>> = BTreeMap::new();
    for &b in &g.nonterminals {
        if g.rank(b) == 0 {
            by_size.entry(sz.get(b)).or_default().push(b);
        }
    }
    let mut splits = vec![None; g.symbols.len()];
    let mut r_terms: Vec<Term> = Vec::new();
    let mut interned: HashMap<Term, u32> = HashMap::new();
    for a in n.n_with(Form::A) {
        let total = wtv[a.idx()];
        debug_assert_eq!(total, sz.get(a));
        let mut cands: Vec<(u64, &Vec<SymbolId>)> = Vec::new();
        for (&v, bs) in &by_size {
            if v >= total {
                continue;
            }
            let (p, cum) = weight_pos(n, &lenv, &wtv, a, total - v);
            if cum == total - v {
                cands.push((p + 1, bs));
            }
        }
        cands.sort_by_key(|&(s, _)| s);
        let mut found = None;
        'outer: for (s, bs) in cands {
            let (gx, w) = spine_suffix_grammar(n, &lenv, a, s)?;
            for &b in bs {
                if tslp_equal(&gx, w, g, b)? {
                    found = Some((s, b));
                    break 'outer;
                }
            }
        }
        let (s, a_prime) = found.ok_or_else(|| {
            GrammarError::Invalid(format!(
                "no split position on the spine of {}",
                g.symbols.name(a)
            ))
        })?;
        let ha = sp.to_h[a.idx()].expect("N_a symbol is in the spine SLP");
        let r_h = symbol_at(&sp.h, ha, s - 1)?;
        let r_sym = sp.from_h[r_h.idx()];
        let r_term = g.rhs(r_sym).substitute(&[Term::leaf(a_prime)]);
        let next = r_terms.len() as u32;
        let r_class = *interned.entry(r_term.clone()).or_insert_with(|| {
            r_terms.push(r_term);
            next
        });
        splits[a.idx()] = Some(SpineSplit {
            len: lenv[a.idx()],
            s,
            a_prime,
            r_sym,
            r_class,
        });
    }
    Ok(SplitTable { splits, r_terms })
}

/// Plain (non-fcns) constant-time LCA over one rooted tree: Euler tour
/// plus a sparse table of depth minima.
#[derive(Debug, Clone, Default)]
struct PlainLca {
    first_occ: Vec<usize>,
    tour: Vec<u32>,
    depth: Vec<u32>,
    table: Vec<Vec<u32>>,
    log2: Vec<u32>,
}

impl PlainLca {
    fn new(root: u32, children: &[Vec<u32>]) -> PlainLca {
        let n = children.len();
        if n == 0 {
            return PlainLca::default();
        }
        let mut first_occ = vec![usize::MAX; n];
        let mut tour = Vec::with_capacity(2 * n);
        let mut depth = Vec::with_capacity(2 * n);
        let mut stack: Vec<(u32, u32, usize)> = vec![(root, 0, 0)];
        while let Some((v, d, ci)) = stack.pop() {
            if first_occ[v as usize] == usize::MAX {
                first_occ[v as usize] = tour.len();
            }
            tour.push(v);
            depth.push(d);
            if let Some(&c) = children[v as usize].get(ci) {
                stack.push((v, d, ci + 1));
                stack.push((c, d + 1, 0));
            }
        }
        let m = tour.len();
        let mut log2 = vec![0u32; m + 1];
        for i in 2..=m {
            log2[i] = log2[i / 2] + 1;
        }
        let levels = log2[m] as usize + 1;
        let mut table: Vec<Vec<u32>> = Vec::with_capacity(levels);
        table.push((0..m as u32).collect());
        for k in 1..levels {
            let span = 1usize << k;
            let prev = &table[k - 1];
            let mut row = Vec::with_capacity(m + 1 - span);
            for i in 0..=(m - span) {
                let a = prev[i];
                let b = prev[i + span / 2];
                row.push(if depth[a as usize] <= depth[b as usize] { a } else { b });
            }
            table.push(row);
        }
        PlainLca {
            first_occ,
            tour,
            depth,
            table,
            log2,
        }
    }

    fn lca(&self, a: u32, b: u32) -> u32 {
        let (mut i, mut j) = (self.first_occ[a as usize], self.first_occ[b as usize]);
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        let k = self.log2[j - i + 1] as usize;
        let x = self.table[k][i];
        let y = self.table[k][j + 1 - (1 << k)];
        let pos = if self.depth[x as usize] <= self.depth[y as usize] { x } else { y };
        self.tour[pos as usize]
    }
}

/// Modified Patricia tree over the reversed spine-prefix words
/// w_A = reverse(val_H(A[: s(A)-2])) $. Internal nodes carry common
/// prefix lengths; longest-common-suffix queries are one LCA.
#[derive(Debug)]
pub struct PatriciaIndex {
    label: Vec<u64>,
    children: Vec<Vec<u32>>,
    leaf_of: Vec<Option<u32>>,
    lca: PlainLca,
    lca_count: AtomicU64,
}

impl Clone for PatriciaIndex {
    fn clone(&self) -> Self {
        PatriciaIndex {
            label: self.label.clone(),
            children: self.children.clone(),
            leaf_of: self.leaf_of.clone(),
            lca: self.lca.clone(),
            lca_count: AtomicU64::new(self.lca_count.load(AtomicOrdering::Relaxed)),
        }
    }
}

/// Lazily seeded fingerprint family over the spine SLP, with a verified
/// longest-common-suffix computation between two word prefixes.
struct HashedSpine<'a> {
    h: &'a Slp,
    fprs: Vec<Fingerprinter>,
}

impl<'a> HashedSpine<'a> {
    const ATTEMPTS: usize = 8;

    fn new(h: &'a Slp) -> HashedSpine<'a> {
        HashedSpine { h, fprs: Vec::new() }
    }

    fn ensure(&mut self, k: usize) -> Result<()> {
        while self.fprs.len() <= k {
            let seed = 0x5u64 << 32 | self.fprs.len() as u64;
            self.fprs.push(Fingerprinter::new(self.h, seed)?);
        }
        Ok(())
    }

    /// Longest common suffix of val_H(a)[..la] and val_H(b)[..lb], by
    /// fingerprint binary search with deterministic boundary checks and
    /// retry on a fresh base.
    fn common_suffix(&mut self, a: SymbolId, la: u64, b: SymbolId, lb: u64) -> Result<u64> {
        let min = la.min(lb);
        if min == 0 || (a == b && la == lb) {
            return Ok(min);
        }
        for attempt in 0..Self::ATTEMPTS {
            self.ensure(attempt)?;
            let f = &self.fprs[attempt];
            let eq = |k: u64| f.range(self.h, a, la - k + 1, la) == f.range(self.h, b, lb - k + 1, lb);
            let mut lo = 0u64;
            let mut hi = min;
            while lo < hi {
                let mid = (lo + hi + 1) / 2;
                if eq(mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            let k = lo;
            if k < min && symbol_at(self.h, a, la - k)? == symbol_at(self.h, b, lb - k)? {
                continue;
            }
            if k > 0 && symbol_at(self.h, a, la - k + 1)? != symbol_at(self.h, b, lb - k + 1)? {
                continue;
            }
            return Ok(k);
        }
        Err(GrammarError::Invalid(
            "persistent fingerprint disagreement in suffix comparison".into(),
        ))
    }

    /// Lexicographic order of w_a vs w_b (reversed prefixes, $ greatest).
    fn cmp_w(
        &mut self,
        (a, la): (SymbolId, u64),
        (b, lb): (SymbolId, u64),
    ) -> Result<std::cmp::Ordering> {
        let k = self.common_suffix(a, la, b, lb)?;
        let ca = if k < la { symbol_at(self.h, a, la - k)?.0 } else { u32::MAX };
        let cb = if k < lb { symbol_at(self.h, b, lb - k)?.0 } else { u32::MAX };
        Ok(ca.cmp(&cb))
    }
}

/// Builds the Patricia structure from the lexicographically sorted
/// leaves and their adjacent common-prefix lengths: recursively, the
/// minimum adjacent value labels an internal node and splits the range.
/// Builds a Patricia index from leaves given in lexicographic order
/// (with end-of-string comparing greatest) as (leaf id, content length)
/// pairs plus the adjacent longest-common-prefix lengths.
pub fn patricia_from_sorted(
    sorted: &[(SymbolId, u64)],
    lcps: &[u64],
    n_symbols: usize,
) -> PatriciaIndex {
    assemble_patricia(sorted, lcps, n_symbols)
}

fn assemble_patricia(
    sorted: &[(SymbolId, u64)],
    lcps: &[u64],
    n_symbols: usize,
) -> PatriciaIndex {
    let mut label: Vec<u64> = Vec::new();
    let mut children: Vec<Vec<u32>> = Vec::new();
    let mut leaf_of: Vec<Option<u32>> = vec![None; n_symbols];

    fn build(
        lo: usize,
        hi: usize,
        sorted: &[(SymbolId, u64)],
        lcps: &[u64],
        label: &mut Vec<u64>,
        children: &mut Vec<Vec<u32>>,
        leaf_of: &mut [Option<u32>],
    ) -> u32 {
        let id = label.len() as u32;
        if lo == hi {
            let (sym, la) = sorted[lo];
            label.push(la);
            children.push(Vec::new());
            leaf_of[sym.idx()] = Some(id);
            return id;
        }
        let m = *lcps[lo..hi].iter().min().expect("nonempty range");
        label.push(m);
        children.push(Vec::new());
        let mut seg = lo;
        let mut kids = Vec::new();
        for j in lo..hi {
            if lcps[j] == m {
                kids.push(build(seg, j, sorted, lcps, label, children, leaf_of));
                seg = j + 1;
            }
        }
        kids.push(build(seg, hi, sorted, lcps, label, children, leaf_of));
        children[id as usize] = kids;
        id
    }

    let lca = if sorted.is_empty() {
        PlainLca::default()
    } else {
        let root = build(
            0,
            sorted.len() - 1,
            sorted,
            lcps,
            &mut label,
            &mut children,
            &mut leaf_of,
        );
        debug_assert_eq!(root, 0);
        PlainLca::new(root, &children)
    };
    PatriciaIndex {
        label,
        children,
        leaf_of,
        lca,
        lca_count: AtomicU64::new(0),
    }
}

/// The modified Patricia tree over all A in N_a, built without ever
/// materializing the (possibly exponential) prefix words: ordering and
/// divergence points come from fingerprint-verified binary search.
pub fn build_patricia(r: &ReducedTslp, sp: &SpineSlp, splits: &SplitTable) -> Result<PatriciaIndex> {
    let members = r.n.n_with(Form::A);
    let mut hs = HashedSpine::new(&sp.h);
    // (tree symbol, H symbol, content length s(A)-2), insertion-sorted by w_A.
    let mut sorted: Vec<(SymbolId, SymbolId, u64)> = Vec::new();
    for m in members {
        let ha = sp.to_h[m.idx()].expect("N_a symbol is in the spine SLP");
        let la = splits.get(m).s - 2;
        let mut lo = 0usize;
        let mut hi = sorted.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            let probe = (sorted[mid].1, sorted[mid].2);
            if hs.cmp_w(probe, (ha, la))? == std::cmp::Ordering::Greater {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        sorted.insert(lo, (m, ha, la));
    }
    let mut lcps = Vec::new();
    for w in sorted.windows(2) {
        lcps.push(hs.common_suffix(w[0].1, w[0].2, w[1].1, w[1].2)?);
    }
    let leaves: Vec<(SymbolId, u64)> = sorted.iter().map(|&(m, _, la)| (m, la)).collect();
    Ok(assemble_patricia(
        &leaves,
        &lcps,
        r.n.tslp.symbols.len(),
    ))
}

impl PatriciaIndex {
    /// Longest common suffix length of the spine prefixes
    /// val_H(A[: s(A)-2]) and val_H(B[: s(B)-2]): the label of the leaf
    /// LCA, in O(1) with at most one LCA evaluation. Identical leaves
    /// report their full content length.
    pub fn lcs_query(&self, a: SymbolId, b: SymbolId) -> u64 {
        let la = self.leaf_of[a.idx()].expect("N_a nonterminal");
        let lb = self.leaf_of[b.idx()].expect("N_a nonterminal");
        if la == lb {
            return self.label[la as usize];
        }
        self.lca_count.fetch_add(1, AtomicOrdering::Relaxed);
        self.label[self.lca.lca(la, lb) as usize]
    }

    /// Number of LCA evaluations performed so far (instrumentation).
    /// Prefix-length label of a node (for internal nodes, the common
    /// prefix length of the leaves below it).
    pub fn node_label(&self, v: usize) -> u64 {
        self.label[v]
    }

    pub fn is_internal(&self, v: usize) -> bool {
        !self.children[v].is_empty()
    }

    pub fn lca_queries(&self) -> u64 {
        self.lca_count.load(AtomicOrdering::Relaxed)
    }

    pub fn node_count(&self) -> usize {
        self.label.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.children.iter().filter(|c| c.is_empty()).count()
    }
}

static NEXT_INDEX_ID: AtomicU64 = AtomicU64::new(1);

/// Everything preprocessed for O(1) navigation-with-equality over one
/// grammar: the reduced normal form, its spine SLP, the split table and
/// the Patricia index.
#[derive(Debug, Clone)]
pub struct EqIndex {
    pub n: NormalizedTslp,
    pub merged: HashMap<SymbolId, SymbolId>,
    pub sp: SpineSlp,
    pub splits: SplitTable,
    pub patricia: PatriciaIndex,
    id: u64,
}

impl EqIndex {
    pub fn new(g: &Tslp) -> Result<EqIndex> {
        let norm = normalize_monadic(&monadize(g)?)?;
        let red = reduce_grammar(&norm)?;
        let sp = derive_spine(&red.n)?;
        let splits = precompute_splits(&red, &sp)?;
        let patricia = build_patricia(&red, &sp, &splits)?;
        Ok(EqIndex {
            n: red.n,
            merged: red.merged,
            sp,
            splits,
            patricia,
            id: NEXT_INDEX_ID.fetch_add(1, AtomicOrdering::Relaxed),
        })
    }

    /// O(1) equality of the subtrees under two cursors of this index.
    /// Leaves compare by label; otherwise the final runs (C_i, n_i) must
    /// agree on split distance and closing context, and the spine
    /// prefixes must share a suffix of length s(C)-1-n — one LCA query.
    pub fn subtree_eq(&self, c1: &EqCursor, c2: &EqCursor) -> Result<bool> {
        if c1.index_id != self.id || c2.index_id != self.id {
            return Err(GrammarError::Invalid(
                "cursor belongs to a different preprocessed grammar".into(),
            ));
        }
        let l1 = c1.label(self);
        let l2 = c2.label(self);
        let symbols = &self.n.tslp.symbols;
        if symbols.rank(l1) == 0 || symbols.rank(l2) == 0 {
            return Ok(symbols.rank(l1) == 0 && symbols.rank(l2) == 0 && l1 == l2);
        }
        let f1 = *c1.frames.last().expect("non-leaf cursor has a frame");
        let f2 = *c2.frames.last().expect("non-leaf cursor has a frame");
        let s1 = self.splits.get(f1.head);
        let s2 = self.splits.get(f2.head);
        if s1.s - f1.pos != s2.s - f2.pos {
            return Ok(false);
        }
        if s1.r_class != s2.r_class {
            return Ok(false);
        }
        let k = s1.s - 1 - f1.pos;
        Ok(k <= self.patricia.lcs_query(f1.head, f2.head))
    }
}

/// One element of an equality-cursor stack: a string triple over the
/// spine SLP, a child triple off the spine, or the separator opening a
/// fresh run at a split boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqEntry {
    Str(StackTriple),
    M {
        head: SymbolId,
        k: usize,
        target: SymbolId,
    },
    Sep,
}

/// Adapter exposing the trailing string-triple run; child triples and
/// separators both act as left-end markers.
struct TopRun<'a>(&'a mut Vec<EqEntry>);

impl TripleStack for TopRun<'_> {
    fn pop_triple(&mut self) -> Option<StackTriple> {
        match self.0.last() {
            Some(EqEntry::Str(t)) => {
                let t = *t;
                self.0.pop();
                Some(t)
            }
            _ => None,
        }
    }
    fn push_triple(&mut self, t: StackTriple) {
        self.0.push(EqEntry::Str(t));
    }
}

/// Tree cursor whose runs never reach their head's split position:
/// descending through the boundary opens a separator-delimited fresh run
/// for the equal-valued rank-0 nonterminal. Supports the same
/// constant-delay child/parent moves plus O(1) subtree equality.
#[derive(Debug, Clone)]
pub struct EqCursor {
    pub entries: Vec<EqEntry>,
    pub frames: Vec<Frame>,
    pub counters: StepCounters,
    index_id: u64,
}

impl EqCursor {
    pub fn root(ix: &EqIndex) -> EqCursor {
        let mut c = EqCursor {
            entries: Vec::new(),
            frames: Vec::new(),
            counters: StepCounters::default(),
            index_id: ix.id,
        };
        c.push_root(ix, ix.n.tslp.start);
        c
    }

    fn push_root(&mut self, ix: &EqIndex, a: SymbolId) {
        debug_assert_eq!(ix.n.tslp.rank(a), 0);
        let start = self.entries.len();
        if ix.n.form(a) == Form::A {
            let ha = ix.sp.to_h[a.idx()].expect("rank-0 nonterminal in the spine SLP");
            self.counters.pushes += 1;
            self.entries.push(EqEntry::Str(StackTriple {
                head: ha,
                dir: Side::L,
                target: ix.sp.idx.l.omega(ha),
            }));
        }
        self.frames.push(Frame {
            start,
            head: a,
            pos: 1,
        });
    }

    /// The form-(c)/(d) tree nonterminal this cursor stands on.
    pub fn current(&self, ix: &EqIndex) -> SymbolId {
        match self.entries.last() {
            None => self.frames[0].head,
            Some(EqEntry::Str(t)) => ix.sp.from_h[t.target.idx()],
            Some(EqEntry::M { target, .. }) => *target,
            Some(EqEntry::Sep) => self.frames.last().expect("frame after separator").head,
        }
    }

    pub fn label(&self, ix: &EqIndex) -> SymbolId {
        ix.n.label_of(self.current(ix))
    }

    pub fn rank_of(&self, ix: &EqIndex) -> usize {
        ix.n.tslp.symbols.rank(self.label(ix))
    }

    /// Moves to the i-th child (1-based); false if i exceeds the rank.
    pub fn child(&mut self, ix: &EqIndex, i: usize) -> bool {
        self.counters.reset();
        if i < 1 || i > self.rank_of(ix) {
            return false;
        }
        let b = self.current(ix);
        debug_assert_eq!(ix.n.form(b), Form::D);
        let d = ix.n.d_rule(b);
        if i == d.param_pos {
            let top = *self.frames.last().expect("spine run has a frame");
            let spl = ix.splits.get(top.head);
            if top.pos + 1 == spl.s {
                // The next spine position would reach the split: open a
                // fresh run for the equal-valued nonterminal instead.
                self.counters.pushes += 1;
                self.entries.push(EqEntry::Sep);
                self.push_root(ix, spl.a_prime);
            } else {
                let moved = step_right(
                    &ix.sp.h,
                    &ix.sp.idx,
                    &mut TopRun(&mut self.entries),
                    &mut self.counters,
                );
                debug_assert!(moved, "positions below the split can step right");
                self.frames.last_mut().expect("frame").pos += 1;
            }
        } else {
            let target = d.children[i - 1].expect("non-parameter child");
            self.counters.pushes += 1;
            self.entries.push(EqEntry::M { head: b, k: i, target });
            self.push_root(ix, target);
        }
        debug_assert!(self.validate(ix).is_ok(), "{:?}", self.validate(ix));
        true
    }

    /// Moves to the parent; false (cursor unchanged) at the root. A run
    /// reduced to its root descent is dropped together with its child
    /// triple or separator.
    pub fn parent(&mut self, ix: &EqIndex) -> bool {
        self.counters.reset();
        if self.frames.len() == 1 {
            let top = self.frames[0];
            if self.entries.len() <= top.start
                || (self.entries.len() == top.start + 1 && top.pos == 1)
            {
                return false;
            }
        }
        let top = *self.frames.last().expect("frame");
        let run_len = self.entries.len() - top.start;
        if run_len == 0 || (run_len == 1 && top.pos == 1) {
            self.counters.pops += (run_len + 1) as u64;
            self.entries.truncate(top.start.saturating_sub(1));
            self.frames.pop();
        } else {
            let moved = step_left(
                &ix.sp.h,
                &ix.sp.idx,
                &mut TopRun(&mut self.entries),
                &mut self.counters,
            );
            debug_assert!(moved, "interior spine positions can step left");
            self.frames.last_mut().expect("frame").pos -= 1;
        }
        debug_assert!(self.validate(ix).is_ok(), "{:?}", self.validate(ix));
        true
    }

    /// Debug validator: run continuity/alternation, well-formed child
    /// triples and separators, and the split invariant pos < s(head) on
    /// every nonempty run.
    pub fn validate(&self, ix: &EqIndex) -> std::result::Result<(), String> {
        if self.frames.is_empty() {
            return Err("no frames".into());
        }
        let n = &ix.n;
        let sp = &ix.sp;
        for (i, e) in self.entries.iter().enumerate() {
            match e {
                EqEntry::Str(t) => match self.entries.get(i + 1) {
                    Some(EqEntry::Str(next)) => {
                        if next.head != t.target {
                            return Err(format!("entry {i}: broken continuity"));
                        }
                        if next.dir == t.dir {
                            return Err(format!("entry {i}: no alternation"));
                        }
                    }
                    _ => {
                        if sp.h.is_nonterminal(t.target) {
                            return Err(format!("entry {i}: run ends on a nonterminal"));
                        }
                    }
                },
                EqEntry::M { head, k, target } => {
                    if n.form(*head) != Form::D {
                        return Err(format!("entry {i}: child triple off a non-(d) head"));
                    }
                    let d = n.d_rule(*head);
                    if *k == d.param_pos || d.children.get(k - 1) != Some(&Some(*target)) {
                        return Err(format!("entry {i}: bad child triple"));
                    }
                    if !self.frames.iter().any(|fr| fr.start == i + 1) {
                        return Err(format!("entry {i}: no frame after child triple"));
                    }
                }
                EqEntry::Sep => {
                    let after = match self.frames.iter().find(|fr| fr.start == i + 1) {
                        Some(fr) => fr,
                        None => return Err(format!("entry {i}: no frame after separator")),
                    };
                    let before = self
                        .frames
                        .iter()
                        .filter(|fr| fr.start <= i)
                        .max_by_key(|fr| fr.start)
                        .ok_or_else(|| format!("entry {i}: no frame before separator"))?;
                    let spl = ix.splits.get(before.head);
                    if before.pos + 1 != spl.s {
                        return Err(format!("entry {i}: separator off the split boundary"));
                    }
                    if after.head != spl.a_prime {
                        return Err(format!("entry {i}: separator opens the wrong run"));
                    }
                }
            }
        }
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
            } else {
                if n.form(fr.head) != Form::A {
                    return Err("nonempty frame with a non-(a) head".into());
                }
                if fr.pos >= ix.splits.get(fr.head).s {
                    return Err(format!(
                        "frame on {} reached its split position",
                        n.tslp.symbols.name(fr.head)
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GenMode};
    use crate::slp::eval_slp;
    use crate::tree::Tree;
    use crate::tree_cursor::TreeCursor;
    use crate::tslp::{eval_tslp, parse_tslp};

    /// The caterpillar grammar: reduced, with s(S)=3, S'=E, r_S=f(A,x).
    const CATERPILLAR: &str = "\
S -> G(A)
A -> a
B(x1) -> f(A, x1)
C -> B(A)
D(x1) -> f(C, x1)
E -> D(C)
F(x1) -> f(x1, E)
G(x1) -> H(I(x1))
H(x1) -> F(B(x1))
I(x1) -> D(B(x1))
";

    fn caterpillar_index() -> EqIndex {
        EqIndex::new(&parse_tslp(CATERPILLAR).unwrap()).unwrap()
    }

    fn sym(ix: &EqIndex, name: &str) -> SymbolId {
        ix.n.tslp.symbols.lookup(name).unwrap()
    }

    #[test]
    fn caterpillar_grammar_is_already_reduced() {
        let g = parse_tslp(CATERPILLAR).unwrap();
        let n = normalize_monadic(&monadize(&g).unwrap()).unwrap();
        let r = reduce_grammar(&n).unwrap();
        assert!(r.merged.iter().all(|(a, b)| a == b));
        assert_eq!(r.n.tslp.nonterminals.len(), n.tslp.nonterminals.len());
    }

    #[test]
    fn duplicate_rules_merge_to_one_survivor() {
        let g = parse_tslp("S -> f(A, B)\nA -> a\nB -> a\n").unwrap();
        let before = eval_tslp(&g, g.start, 100).unwrap();
        let n = normalize_monadic(&monadize(&g).unwrap()).unwrap();
        let r = reduce_grammar(&n).unwrap();
        let a = r.n.tslp.symbols.lookup("A").unwrap();
        let b = r.n.tslp.symbols.lookup("B").unwrap();
        assert_eq!(r.merged[&a], r.merged[&b]);
        let after = eval_tslp(&r.n.tslp, r.n.tslp.start, 100).unwrap();
        assert_eq!(
            before.preorder_labels()
                .iter()
                .map(|&l| g.symbols.name(l))
                .collect::<Vec<_>>(),
            after.preorder_labels()
                .iter()
                .map(|&l| r.n.tslp.symbols.name(l))
                .collect::<Vec<_>>()
        );
    }

    fn names_of(g: &Tslp, t: &Tree) -> Vec<String> {
        t.preorder_labels()
            .iter()
            .map(|&l| g.symbols.name(l).to_string())
            .collect()
    }

    #[test]
    fn reduction_classes_match_value_classes_on_random_grammars() {
        for seed in 0..8u64 {
            let g = generate(GenMode::Random, 5, seed).unwrap();
            let n = normalize_monadic(&monadize(&g).unwrap()).unwrap();
            let r = reduce_grammar(&n).unwrap();
            // val(start) unchanged
            let before = eval_tslp(&n.tslp, n.tslp.start, 1 << 12).unwrap();
            let after = eval_tslp(&r.n.tslp, r.n.tslp.start, 1 << 12).unwrap();
            assert_eq!(names_of(&n.tslp, &before), names_of(&r.n.tslp, &after));
            // surviving rank-0 nonterminals all derive distinct trees
            let rank0: Vec<SymbolId> = r
                .n
                .tslp
                .nonterminals
                .iter()
                .copied()
                .filter(|&a| r.n.tslp.rank(a) == 0)
                .collect();
            for (i, &a) in rank0.iter().enumerate() {
                for &b in &rank0[i + 1..] {
                    let ta = eval_tslp(&r.n.tslp, a, 1 << 12).unwrap();
                    let tb = eval_tslp(&r.n.tslp, b, 1 << 12).unwrap();
                    assert_ne!(
                        names_of(&r.n.tslp, &ta),
                        names_of(&r.n.tslp, &tb),
                        "seed {seed}: unreduced pair"
                    );
                }
            }
            // merge classes agree with the value-equality oracle
            for (&a, &ra) in &r.merged {
                for (&b, &rb) in &r.merged {
                    if n.tslp.rank(a) != 0 || n.tslp.rank(b) != 0 {
                        continue;
                    }
                    let ta = eval_tslp(&n.tslp, a, 1 << 12).unwrap();
                    let tb = eval_tslp(&n.tslp, b, 1 << 12).unwrap();
                    assert_eq!(
                        ra == rb,
                        names_of(&n.tslp, &ta) == names_of(&n.tslp, &tb),
                        "seed {seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn caterpillar_spine_word_and_split() {
        let ix = caterpillar_index();
        let s = sym(&ix, "S");
        let ha = ix.sp.to_h[s.idx()].unwrap();
        let word = eval_slp(&ix.sp.h, ha, 100).unwrap();
        let names: Vec<&str> = word.iter().map(|&w| ix.sp.h.symbols.name(w)).collect();
        assert_eq!(names, ["F", "B", "D", "B", "A"]);
        let spl = ix.splits.get(s);
        assert_eq!(spl.len, 5);
        assert_eq!(spl.s, 3);
        assert_eq!(spl.a_prime, sym(&ix, "E"));
        assert_eq!(ix.n.tslp.symbols.name(spl.r_sym), "B");
        let r_term = &ix.splits.r_terms[spl.r_class as usize];
        assert_eq!(r_term.to_text(&ix.n.tslp.symbols), "f(A,E)");
    }

    #[test]
    fn chain_spine_splits_at_the_bottom_constant() {
        // The comb grammar has no rank-0 nonterminal besides the start
        // and the leaf, so the only split is the spine's last position.
        let g = generate(GenMode::Chain, 4, 0).unwrap();
        let ix = EqIndex::new(&g).unwrap();
        let s = ix.n.tslp.start;
        let spl = ix.splits.get(s);
        assert_eq!(spl.len, (1 << 4) + 1);
        assert_eq!(spl.s, spl.len);
        assert_eq!(ix.n.tslp.rank(spl.a_prime), 0);
        assert_eq!(ix.n.form(spl.a_prime), Form::C);
    }

    #[test]
    fn splits_match_exhaustive_scan_on_random_grammars() {
        for seed in 0..8u64 {
            let g = generate(GenMode::Random, 5, seed).unwrap();
            let norm = normalize_monadic(&monadize(&g).unwrap()).unwrap();
            let red = reduce_grammar(&norm).unwrap();
            let sp = derive_spine(&red.n).unwrap();
            let splits = precompute_splits(&red, &sp).unwrap();
            let n = &red.n;
            let (lenv, _) = spine_tables(n).unwrap();
            let rank0: Vec<SymbolId> = n
                .tslp
                .nonterminals
                .iter()
                .copied()
                .filter(|&a| n.tslp.rank(a) == 0)
                .collect();
            for a in n.n_with(Form::A) {
                // brute force: first position >= 2 whose suffix equals a
                // rank-0 value, scanning every position in order
                let mut expect = None;
                'scan: for s in 2..=lenv[a.idx()] {
                    let (gx, w) = spine_suffix_grammar(n, &lenv, a, s).unwrap();
                    for &b in &rank0 {
                        if tslp_equal(&gx, w, &n.tslp, b).unwrap() {
                            expect = Some((s, b));
                            break 'scan;
                        }
                    }
                }
                let (es, eb) = expect.expect("split always exists");
                let spl = splits.get(a);
                assert_eq!((spl.s, spl.a_prime), (es, eb), "seed {seed}");
            }
        }
    }

    #[test]
    fn patricia_example_tree_shape_and_labels() {
        // Strings abba$, abbb$, ba$, baba$, babb$ (contents reversed
        // into leaf order by the builder's convention: $ compares
        // greatest). Sorted: abba$, abbb$, baba$, babb$, ba$ with
        // adjacent prefix lengths 3, 0, 3, 2.
        let leaves: Vec<(SymbolId, u64)> = [(0u32, 4u64), (1, 4), (3, 4), (4, 4), (2, 2)]
            .iter()
            .map(|&(s, l)| (SymbolId(s), l))
            .collect();
        let lcps = vec![3, 0, 3, 2];
        let idx = assemble_patricia(&leaves, &lcps, 5);
        // 5 leaves + 4 internal nodes, every internal node >= 2 children
        assert_eq!(idx.node_count(), 9);
        assert_eq!(idx.leaf_count(), 5);
        assert!(idx
            .children
            .iter()
            .all(|c| c.is_empty() || c.len() >= 2));
        let mut internal: Vec<u64> = idx
            .children
            .iter()
            .zip(&idx.label)
            .filter(|(c, _)| !c.is_empty())
            .map(|(_, &l)| l)
            .collect();
        internal.sort();
        assert_eq!(internal, [0, 2, 3, 3]);
        assert_eq!(idx.lcs_query(SymbolId(0), SymbolId(1)), 3);
        assert_eq!(idx.lcs_query(SymbolId(2), SymbolId(3)), 2);
        assert_eq!(idx.lcs_query(SymbolId(0), SymbolId(2)), 0);
        // identical-leaf convention: the full content length
        assert_eq!(idx.lcs_query(SymbolId(2), SymbolId(2)), 2);
    }

    #[test]
    fn patricia_with_disjoint_strings_has_root_label_zero() {
        let leaves = vec![(SymbolId(0), 3u64), (SymbolId(1), 5)];
        let idx = assemble_patricia(&leaves, &[0], 2);
        assert_eq!(idx.node_count(), 3);
        assert_eq!(idx.lcs_query(SymbolId(0), SymbolId(1)), 0);
    }

    #[test]
    fn patricia_labels_match_bruteforce_lcps_on_random_strings() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _case in 0..20 {
            let count = rng.gen_range(2..9);
            let strings: Vec<Vec<u32>> = (0..count)
                .map(|_| {
                    let len = rng.gen_range(0..7);
                    (0..len).map(|_| rng.gen_range(0..3u32)).collect()
                })
                .collect();
            // sort with the builder's convention: end-of-string greatest
            let mut order: Vec<usize> = (0..count).collect();
            let cmp = |a: &[u32], b: &[u32]| {
                let k = a.iter().zip(b).take_while(|(x, y)| x == y).count();
                let ca = a.get(k).copied().unwrap_or(u32::MAX);
                let cb = b.get(k).copied().unwrap_or(u32::MAX);
                ca.cmp(&cb)
            };
            order.sort_by(|&i, &j| cmp(&strings[i], &strings[j]));
            let leaves: Vec<(SymbolId, u64)> = order
                .iter()
                .map(|&i| (SymbolId(i as u32), strings[i].len() as u64))
                .collect();
            let lcps: Vec<u64> = order
                .windows(2)
                .map(|w| {
                    strings[w[0]]
                        .iter()
                        .zip(&strings[w[1]])
                        .take_while(|(x, y)| x == y)
                        .count() as u64
                })
                .collect();
            let idx = assemble_patricia(&leaves, &lcps, count);
            assert!(idx.node_count() <= 2 * count - 1);
            for i in 0..count {
                for j in 0..count {
                    let brute = strings[i]
                        .iter()
                        .zip(&strings[j])
                        .take_while(|(x, y)| x == y)
                        .count() as u64;
                    let got = idx.lcs_query(SymbolId(i as u32), SymbolId(j as u32));
                    if i == j || strings[i] == strings[j] {
                        assert_eq!(got, strings[i].len() as u64);
                    } else {
                        assert_eq!(got, brute, "strings {i} vs {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_descent_opens_a_separator_run() {
        let ix = caterpillar_index();
        let mut c = EqCursor::root(&ix);
        // root f: spine position 1 on S (symbol F, parameter first)
        assert_eq!(ix.n.tslp.symbols.name(c.label(&ix)), "f");
        assert!(c.child(&ix, 1)); // to spine position 2 (symbol B, param second)
        assert_eq!(ix.n.tslp.symbols.name(c.label(&ix)), "f");
        // s(S) = 3: the parameter child at position 2 crosses the split
        assert!(c.child(&ix, 2));
        assert_eq!(ix.n.tslp.symbols.name(c.label(&ix)), "f");
        assert_eq!(c.frames.len(), 2);
        assert_eq!(c.frames[1].head, sym(&ix, "E"));
        assert!(matches!(
            c.entries[c.frames[1].start - 1],
            EqEntry::Sep
        ));
        // and back up across the separator
        assert!(c.parent(&ix));
        assert_eq!(c.frames.len(), 1);
        assert_eq!(c.frames[0].pos, 2);
        assert!(c.parent(&ix));
        assert_eq!(c.frames[0].pos, 1);
        assert!(!c.parent(&ix));
    }

    #[test]
    fn caterpillar_boxed_subtree_equals_the_e_child() {
        let ix = caterpillar_index();
        // boxed node: child 1, then the boundary child 2
        let mut boxed = EqCursor::root(&ix);
        assert!(boxed.child(&ix, 1));
        assert!(boxed.child(&ix, 2));
        // occurrence of E: child 2 of the root
        let mut e_node = EqCursor::root(&ix);
        assert!(e_node.child(&ix, 2));
        assert!(ix.subtree_eq(&boxed, &e_node).unwrap());
        assert!(ix.subtree_eq(&e_node, &boxed).unwrap());
        // the root itself is a strictly larger tree
        let root = EqCursor::root(&ix);
        assert!(!ix.subtree_eq(&root, &boxed).unwrap());
        assert!(ix.subtree_eq(&root, &root).unwrap());
    }

    #[test]
    fn cursors_from_different_indexes_are_rejected() {
        let ix1 = caterpillar_index();
        let ix2 = caterpillar_index();
        let c1 = EqCursor::root(&ix1);
        let c2 = EqCursor::root(&ix2);
        assert!(matches!(
            ix1.subtree_eq(&c1, &c2),
            Err(GrammarError::Invalid(_))
        ));
    }

    #[test]
    fn single_node_tree() {
        let ix = EqIndex::new(&parse_tslp("S -> a\n").unwrap()).unwrap();
        let mut c = EqCursor::root(&ix);
        assert_eq!(ix.n.tslp.symbols.name(c.label(&ix)), "a");
        assert!(!c.child(&ix, 1));
        assert!(!c.parent(&ix));
        let d = EqCursor::root(&ix);
        assert!(ix.subtree_eq(&c, &d).unwrap());
    }

    /// Preorder walk with an equality cursor, snapshotting the cursor at
    /// every node; also exercises parent/child inversion on every edge.
    fn eq_dfs(ix: &EqIndex, guard: usize) -> Vec<EqCursor> {
        let mut c = EqCursor::root(ix);
        let mut out = vec![c.clone()];
        // next child index to visit, per cursor depth (root included)
        let mut path: Vec<usize> = vec![1];
        loop {
            assert!(out.len() <= guard, "guard exceeded");
            let rank = c.rank_of(ix);
            let next = *path.last().expect("nonempty path");
            if next <= rank {
                let before = c.clone();
                assert!(c.child(ix, next));
                assert!(
                    c.counters.pops + c.counters.pushes <= 8
                        && c.counters.next_links <= 1,
                    "child step counters out of bounds: {:?}",
                    c.counters
                );
                // parent must invert child
                let mut back = c.clone();
                assert!(back.parent(ix));
                assert!(
                    back.counters.pops + back.counters.pushes <= 8
                        && back.counters.next_links <= 1,
                    "parent step counters out of bounds: {:?}",
                    back.counters
                );
                assert_eq!(back.entries, before.entries);
                assert_eq!(back.frames, before.frames);
                *path.last_mut().expect("nonempty path") = next + 1;
                path.push(1);
                out.push(c.clone());
            } else {
                path.pop();
                if path.is_empty() {
                    break;
                }
                assert!(c.parent(ix));
            }
        }
        out
    }

    #[test]
    fn eq_navigation_matches_plain_cursor_in_lockstep() {
        let mut grammars = vec![parse_tslp(CATERPILLAR).unwrap()];
        for seed in 0..4u64 {
            grammars.push(generate(GenMode::Random, 5, seed).unwrap());
        }
        grammars.push(generate(GenMode::Balanced, 4, 0).unwrap());
        grammars.push(generate(GenMode::Chain, 4, 0).unwrap());
        for g in &grammars {
            let ix = EqIndex::new(g).unwrap();
            let mut tc = TreeCursor::root(&ix.n, &ix.sp, ix.n.tslp.start);
            let mut ec = EqCursor::root(&ix);
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            for _ in 0..2000 {
                assert_eq!(tc.label(&ix.n, &ix.sp), ec.label(&ix));
                let rank = ec.rank_of(&ix);
                if rank > 0 && rng.gen_bool(0.6) {
                    let i = rng.gen_range(1..=rank);
                    assert!(tc.child(&ix.n, &ix.sp, i));
                    assert!(ec.child(&ix, i));
                } else {
                    let a = tc.parent(&ix.n, &ix.sp);
                    let b = ec.parent(&ix);
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn subtree_eq_agrees_with_the_decompressed_oracle() {
        let mut grammars = vec![parse_tslp(CATERPILLAR).unwrap()];
        for seed in 0..6u64 {
            grammars.push(generate(GenMode::Random, 5, seed).unwrap());
        }
        grammars.push(generate(GenMode::Balanced, 3, 0).unwrap());
        grammars.push(generate(GenMode::Chain, 3, 0).unwrap());
        for g in &grammars {
            let ix = EqIndex::new(g).unwrap();
            let tree = eval_tslp(&ix.n.tslp, ix.n.tslp.start, 1 << 12).unwrap();
            let cursors = eq_dfs(&ix, 1 << 12);
            let pre = tree.preorder();
            assert_eq!(cursors.len(), pre.len());
            let before = ix.patricia.lca_queries();
            let mut queries = 0u64;
            for (i, ci) in cursors.iter().enumerate() {
                for (j, cj) in cursors.iter().enumerate() {
                    let got = ix.subtree_eq(ci, cj).unwrap();
                    queries += 1;
                    let want = tree.subtree_eq(pre[i], pre[j]);
                    assert_eq!(got, want, "nodes {i}, {j}");
                }
            }
            // at most one LCA evaluation per equality query
            assert!(ix.patricia.lca_queries() - before <= queries);
        }
    }
}
