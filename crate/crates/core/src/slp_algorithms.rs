use std::collections::HashMap;

use crate::error::{GrammarError, Result};
use crate::fingerprint::Fingerprinter;
use crate::normalize::{monadize, normalize_monadic, Form, NormalizedTslp};
use crate::slp::{lengths, Slp};
use crate::symbol::{SymbolId, SymbolKind, SymbolTable};
use crate::tslp::{sizes, Tslp};

/// val(x)[i] for 1-based i, by length-guided descent, O(depth).
pub fn symbol_at(g: &Slp, x: SymbolId, i: u64) -> Result<SymbolId> {
    let lens = lengths(g)?;
    symbol_at_with(g, &lens, x, i)
}

pub fn symbol_at_with(
    g: &Slp,
    lens: &crate::slp::LengthTable,
    x: SymbolId,
    i: u64,
) -> Result<SymbolId> {
    let total = lens.get(x);
    if i < 1 || i > total {
        return Err(GrammarError::OutOfRange { pos: i, len: total });
    }
    let mut cur = x;
    let mut rest = i;
    while g.is_nonterminal(cur) {
        for &s in g.rhs(cur) {
            let l = lens.get(s);
            if rest <= l {
                cur = s;
                break;
            }
            rest -= l;
        }
    }
    Ok(cur)
}

/// Symbol sequence deriving val(a)[i..] (1-based i), O(depth · arity).
fn suffix_seq(g: &Slp, lens: &crate::slp::LengthTable, a: SymbolId, i: u64) -> Vec<SymbolId> {
    if i == 1 {
        return vec![a];
    }
    let body = g.rhs(a);
    let mut rest = i;
    for (t, &s) in body.iter().enumerate() {
        let l = lens.get(s);
        if rest <= l {
            let mut seq = suffix_seq(g, lens, s, rest);
            seq.extend_from_slice(&body[t + 1..]);
            return seq;
        }
        rest -= l;
    }
    unreachable!("position within |val(a)|");
}

/// Symbol sequence deriving val(a)[..=j] (1-based j).
fn prefix_seq(g: &Slp, lens: &crate::slp::LengthTable, a: SymbolId, j: u64) -> Vec<SymbolId> {
    if j == lens.get(a) {
        return vec![a];
    }
    let body = g.rhs(a);
    let mut rest = j;
    for (t, &s) in body.iter().enumerate() {
        let l = lens.get(s);
        if rest <= l {
            let mut seq = body[..t].to_vec();
            seq.extend(prefix_seq(g, lens, s, rest));
            return seq;
        }
        rest -= l;
    }
    unreachable!("position within |val(a)|");
}

/// An SLP (plus its designated nonterminal) deriving val(x)[i..=j],
/// 1-based inclusive. Cuts the derivation at both endpoints and emits one
/// fresh rule over the existing symbols.
pub fn substring_slp(g: &Slp, x: SymbolId, i: u64, j: u64) -> Result<(Slp, SymbolId)> {
    let lens = lengths(g)?;
    let total = lens.get(x);
    if i < 1 || i > total {
        return Err(GrammarError::OutOfRange { pos: i, len: total });
    }
    if j < i || j > total {
        return Err(GrammarError::OutOfRange { pos: j, len: total });
    }
    // Descend while the whole range sits inside one child.
    let (mut cur, mut lo, mut hi) = (x, i, j);
    'outer: while g.is_nonterminal(cur) && !(lo == 1 && hi == lens.get(cur)) {
        let body = g.rhs(cur);
        let mut off = 0u64;
        for &s in body {
            let l = lens.get(s);
            if lo > off && hi <= off + l {
                cur = s;
                lo -= off;
                hi -= off;
                continue 'outer;
            }
            off += l;
        }
        break;
    }
    let seq = if !g.is_nonterminal(cur) || (lo == 1 && hi == lens.get(cur)) {
        vec![cur]
    } else {
        // Range splits across children of cur.
        let body = g.rhs(cur);
        let mut off = 0u64;
        let mut seq = Vec::new();
        for &s in body {
            let l = lens.get(s);
            let (s_lo, s_hi) = (off + 1, off + l);
            if s_hi < lo || s_lo > hi {
                off += l;
                continue;
            }
            if lo <= s_lo && s_hi <= hi {
                seq.push(s);
            } else if s_lo < lo && hi < s_hi {
                unreachable!("descent would have continued");
            } else if s_lo < lo {
                seq.extend(suffix_seq(g, &lens, s, lo - off));
            } else {
                seq.extend(prefix_seq(g, &lens, s, hi - off));
            }
            off += l;
        }
        seq
    };
    let mut symbols = g.symbols.clone();
    let sub = symbols.fresh("Sub", SymbolKind::Nonterminal, 0);
    let mut rhs: HashMap<SymbolId, Vec<SymbolId>> = g
        .nonterminals
        .iter()
        .map(|&a| (a, g.rhs(a).to_vec()))
        .collect();
    rhs.insert(sub, seq);
    let mut order = vec![sub];
    order.extend(g.nonterminals.iter().copied());
    let out = Slp::from_parts(symbols, order, rhs)?;
    Ok((out, sub))
}

/// Joint terminal codes keyed by (name, rank) so fingerprints agree
/// across two grammars with unrelated symbol ids.
fn joint_codes(g1: &Slp, g2: &Slp) -> (Vec<u64>, Vec<u64>) {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for g in [g1, g2] {
        for id in g.symbols.ids() {
            if !g.is_nonterminal(id) {
                let k = (g.symbols.name(id).to_string(), g.symbols.rank(id));
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
    }
    keys.sort();
    let code_of = |g: &Slp| -> Vec<u64> {
        g.symbols
            .ids()
            .map(|id| {
                if g.is_nonterminal(id) {
                    0
                } else {
                    let k = (g.symbols.name(id).to_string(), g.symbols.rank(id));
                    keys.iter().position(|x| *x == k).unwrap() as u64 + 1
                }
            })
            .collect()
    };
    (code_of(g1), code_of(g2))
}

/// Longest common prefix of val(x1) and val(x2), possibly from different
/// grammars. Monte Carlo binary search over prefix fingerprints with a
/// deterministic mismatch check at the boundary; on a (cosmically
/// unlikely) fingerprint collision the search retries with a fresh base.
pub fn lcp(g1: &Slp, x1: SymbolId, g2: &Slp, x2: SymbolId) -> Result<u64> {
    let (c1, c2) = joint_codes(g1, g2);
    let lens1 = lengths(g1)?;
    let lens2 = lengths(g2)?;
    let max = lens1.get(x1).min(lens2.get(x2));
    let same_symbol = |a: SymbolId, b: SymbolId| -> bool {
        g1.symbols.name(a) == g2.symbols.name(b)
            && g1.symbols.rank(a) == g2.symbols.rank(b)
    };
    for attempt in 0u64..8 {
        let f1 = Fingerprinter::with_codes(g1, 0x51ee7 + attempt, &c1)?;
        let f2 = Fingerprinter::with_codes(g2, 0x51ee7 + attempt, &c2)?;
        debug_assert_eq!(f1.base, f2.base);
        let (mut lo, mut hi) = (0u64, max);
        // invariant: prefixes of length lo agree (per fingerprints)
        while lo < hi {
            let mid = lo + (hi - lo + 1) / 2;
            if f1.prefix(g1, x1, mid).hash == f2.prefix(g2, x2, mid).hash {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        // Deterministic endpoint checks.
        let mismatch_ok = lo == max || {
            let a = symbol_at_with(g1, &lens1, x1, lo + 1)?;
            let b = symbol_at_with(g2, &lens2, x2, lo + 1)?;
            !same_symbol(a, b)
        };
        let match_ok = lo == 0 || {
            let a = symbol_at_with(g1, &lens1, x1, lo)?;
            let b = symbol_at_with(g2, &lens2, x2, lo)?;
            same_symbol(a, b)
        };
        if mismatch_ok && match_ok {
            return Ok(lo);
        }
    }
    Err(GrammarError::Invalid(
        "fingerprint verification failed repeatedly".to_string(),
    ))
}

/// An SLP whose value is the preorder label word of the derived tree.
/// Each rank-1 tree nonterminal splits into a before-parameter and an
/// (optional, possibly empty) after-parameter string nonterminal.
pub fn preorder_slp(n: &NormalizedTslp) -> Result<(Slp, SymbolId)> {
    let g = &n.tslp;
    let mut symbols = SymbolTable::new();
    // Tree terminals keep their rank so equality can distinguish arities.
    let mut term_map: HashMap<SymbolId, SymbolId> = HashMap::new();
    for id in g.symbols.ids() {
        if !g.is_nonterminal(id) {
            let t = symbols.intern(g.symbols.name(id), SymbolKind::Terminal, g.symbols.rank(id));
            term_map.insert(id, t);
        }
    }
    let mut pre_map: HashMap<SymbolId, SymbolId> = HashMap::new();
    let mut post_map: HashMap<SymbolId, Option<SymbolId>> = HashMap::new();
    let mut word_map: HashMap<SymbolId, SymbolId> = HashMap::new();
    for &a in &g.nonterminals {
        let name = g.symbols.name(a);
        if g.rank(a) == 0 {
            word_map.insert(a, symbols.fresh(name, SymbolKind::Nonterminal, 0));
        } else {
            pre_map.insert(
                a,
                symbols.fresh(&format!("{name}_pre"), SymbolKind::Nonterminal, 0),
            );
        }
    }
    let mut rhs: HashMap<SymbolId, Vec<SymbolId>> = HashMap::new();
    let mut order: Vec<SymbolId> = Vec::new();
    // Bottom-up so post_map entries exist before they are referenced.
    for &a in g.topo.iter() {
        match n.form(a) {
            Form::C => {
                let w = word_map[&a];
                rhs.insert(w, vec![term_map[&n.label_of(a)]]);
                order.push(w);
            }
            Form::A => {
                let (b, c) = n.spine_pair(a);
                let w = word_map[&a];
                let mut body = vec![pre_map[&b], word_map[&c]];
                if let Some(p) = post_map[&b] {
                    body.push(p);
                }
                rhs.insert(w, body);
                order.push(w);
            }
            Form::B => {
                let (b, c) = n.spine_pair(a);
                rhs.insert(pre_map[&a], vec![pre_map[&b], pre_map[&c]]);
                order.push(pre_map[&a]);
                let mut body = Vec::new();
                if let Some(p) = post_map[&c] {
                    body.push(p);
                }
                if let Some(p) = post_map[&b] {
                    body.push(p);
                }
                let post = if body.is_empty() {
                    None
                } else {
                    let id = symbols.fresh(
                        &format!("{}_post", g.symbols.name(a)),
                        SymbolKind::Nonterminal,
                        0,
                    );
                    rhs.insert(id, body);
                    order.push(id);
                    Some(id)
                };
                post_map.insert(a, post);
            }
            Form::D => {
                let d = n.d_rule(a);
                let mut body = vec![term_map[&d.terminal]];
                for c in &d.children[..d.param_pos - 1] {
                    body.push(word_map[&c.unwrap()]);
                }
                rhs.insert(pre_map[&a], body);
                order.push(pre_map[&a]);
                let after: Vec<SymbolId> = d.children[d.param_pos..]
                    .iter()
                    .map(|c| word_map[&c.unwrap()])
                    .collect();
                let post = if after.is_empty() {
                    None
                } else {
                    let id = symbols.fresh(
                        &format!("{}_post", g.symbols.name(a)),
                        SymbolKind::Nonterminal,
                        0,
                    );
                    rhs.insert(id, after);
                    order.push(id);
                    Some(id)
                };
                post_map.insert(a, post);
            }
        }
    }
    order.reverse();
    let start = word_map[&g.start];
    let out = Slp::from_parts(symbols, order, rhs)?;
    // The preorder word must be exactly one letter per tree node.
    let lens = lengths(&out)?;
    let tree_sizes = sizes(g)?;
    debug_assert_eq!(lens.get(start), tree_sizes.get(g.start));
    Ok((out, start))
}

/// Whether two rank-0 nonterminals (possibly of different grammars)
/// derive the same tree: equal sizes and the preorder words share a
/// common prefix of full length. Labels compare by (name, rank).
pub fn tslp_equal(g1: &Tslp, a1: SymbolId, g2: &Tslp, a2: SymbolId) -> Result<bool> {
    assert_eq!(g1.rank(a1), 0);
    assert_eq!(g2.rank(a2), 0);
    let s1 = sizes(g1)?.get(a1);
    let s2 = sizes(g2)?.get(a2);
    if s1 != s2 {
        return Ok(false);
    }
    let w1 = preorder_of(g1, a1)?;
    let w2 = preorder_of(g2, a2)?;
    Ok(lcp(&w1.0, w1.1, &w2.0, w2.1)? == s1)
}

fn preorder_of(g: &Tslp, a: SymbolId) -> Result<(Slp, SymbolId)> {
    // Re-root at `a`, then monadize + normalize before taking the word.
    let rules: HashMap<SymbolId, crate::tslp::Term> = g
        .nonterminals
        .iter()
        .map(|&x| (x, g.rhs(x).clone()))
        .collect();
    let rerooted = Tslp::from_parts(g.symbols.clone(), g.nonterminals.clone(), a, rules)?;
    let n = normalize_monadic(&monadize(&rerooted)?)?;
    preorder_slp(&n)
}
