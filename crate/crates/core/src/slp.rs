use std::collections::HashMap;

use crate::error::{GrammarError, Result};
use crate::symbol::{SymbolId, SymbolKind, SymbolTable};

pub const MAX_SIZE: u64 = 1 << 63;

/// A straight-line program: every nonterminal has exactly one rule and the
/// rule relation is acyclic, so each nonterminal derives a unique string.
#[derive(Debug, Clone)]
pub struct Slp {
    pub symbols: SymbolTable,
    /// Nonterminals in declaration order.
    pub nonterminals: Vec<SymbolId>,
    pub terminals: Vec<SymbolId>,
    rhs: Vec<Option<Vec<SymbolId>>>,
    /// Nonterminals ordered so that every rule only refers to earlier
    /// entries or terminals.
    pub topo: Vec<SymbolId>,
}

impl Slp {
    pub fn from_parts(
        symbols: SymbolTable,
        nonterminals: Vec<SymbolId>,
        rhs_map: HashMap<SymbolId, Vec<SymbolId>>,
    ) -> Result<Self> {
        let mut rhs = vec![None; symbols.len()];
        for (&head, body) in &rhs_map {
            rhs[head.idx()] = Some(body.clone());
        }
        let terminals = symbols
            .ids()
            .filter(|id| symbols.is_terminal(*id))
            .collect();
        let mut slp = Slp {
            symbols,
            nonterminals,
            terminals,
            rhs,
            topo: Vec::new(),
        };
        slp.topo = slp.toposort()?;
        Ok(slp)
    }

    pub fn rhs(&self, a: SymbolId) -> &[SymbolId] {
        self.rhs[a.idx()].as_deref().unwrap_or(&[])
    }

    pub fn is_nonterminal(&self, a: SymbolId) -> bool {
        self.rhs[a.idx()].is_some()
    }

    /// The two right-hand side symbols of a binary rule.
    pub fn rhs2(&self, a: SymbolId) -> (SymbolId, SymbolId) {
        let r = self.rhs(a);
        debug_assert_eq!(r.len(), 2);
        (r[0], r[1])
    }

    /// Total length of all right-hand sides.
    pub fn size(&self) -> usize {
        self.nonterminals.iter().map(|a| self.rhs(*a).len()).sum()
    }

    fn toposort(&self) -> Result<Vec<SymbolId>> {
        // Iterative DFS; 0 = unvisited, 1 = on stack, 2 = done.
        let mut state = vec![0u8; self.symbols.len()];
        let mut order = Vec::with_capacity(self.nonterminals.len());
        for &start in &self.nonterminals {
            if state[start.idx()] == 2 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start.idx()] = 1;
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                let body = self.rhs(v);
                if *i < body.len() {
                    let c = body[*i];
                    *i += 1;
                    if self.is_nonterminal(c) {
                        match state[c.idx()] {
                            0 => {
                                state[c.idx()] = 1;
                                stack.push((c, 0));
                            }
                            1 => {
                                let mut names: Vec<&str> =
                                    stack.iter().map(|(s, _)| self.symbols.name(*s)).collect();
                                let pos = names
                                    .iter()
                                    .position(|n| *n == self.symbols.name(c))
                                    .unwrap_or(0);
                                names.push(self.symbols.name(c));
                                return Err(GrammarError::Cycle {
                                    witness: names[pos..].join(" -> "),
                                });
                            }
                            _ => {}
                        }
                    }
                } else {
                    state[v.idx()] = 2;
                    order.push(v);
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &a in &self.nonterminals {
            out.push_str(self.symbols.name(a));
            out.push_str(" ->");
            for &s in self.rhs(a) {
                out.push(' ');
                out.push_str(self.symbols.name(s));
            }
            out.push('\n');
        }
        out
    }
}

fn ident_ok(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses the line-oriented SLP format: `A -> s1 s2 ... sn` rules, `#`
/// comments, optional `terminals a b c` line. Symbols never appearing on a
/// left-hand side are terminals.
pub fn parse_slp(text: &str) -> Result<Slp> {
    let mut heads: Vec<(String, Vec<String>, usize)> = Vec::new();
    let mut declared_terminals: Option<Vec<String>> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let first = tokens.next().unwrap();
        if first == "terminals" {
            declared_terminals = Some(tokens.map(|s| s.to_string()).collect());
            continue;
        }
        if !ident_ok(first) {
            return Err(GrammarError::Syntax {
                line: lineno + 1,
                col: raw.find(first).map(|c| c + 1).unwrap_or(1),
                msg: format!("invalid identifier `{first}`"),
            });
        }
        match tokens.next() {
            Some("->") => {}
            other => {
                return Err(GrammarError::Syntax {
                    line: lineno + 1,
                    col: first.len() + 2,
                    msg: format!("expected `->`, found `{}`", other.unwrap_or("end of line")),
                })
            }
        }
        let body: Vec<String> = tokens.map(|s| s.to_string()).collect();
        if body.is_empty() {
            return Err(GrammarError::Syntax {
                line: lineno + 1,
                col: line.len(),
                msg: "empty right-hand side".into(),
            });
        }
        for s in &body {
            if !ident_ok(s) {
                return Err(GrammarError::Syntax {
                    line: lineno + 1,
                    col: raw.find(s.as_str()).map(|c| c + 1).unwrap_or(1),
                    msg: format!("invalid identifier `{s}`"),
                });
            }
        }
        if heads.iter().any(|(h, _, _)| h == first) {
            return Err(GrammarError::Syntax {
                line: lineno + 1,
                col: 1,
                msg: format!("duplicate rule for `{first}`"),
            });
        }
        heads.push((first.to_string(), body, lineno + 1));
    }
    if heads.is_empty() {
        return Err(GrammarError::Syntax {
            line: 1,
            col: 1,
            msg: "no rules".into(),
        });
    }

    let head_names: Vec<&str> = heads.iter().map(|(h, _, _)| h.as_str()).collect();
    if let Some(decl) = &declared_terminals {
        for t in decl {
            if head_names.contains(&t.as_str()) {
                return Err(GrammarError::TerminalWithRule { name: t.clone() });
            }
        }
    }

    let mut symbols = SymbolTable::new();
    let mut nonterminals = Vec::new();
    for (h, _, _) in &heads {
        nonterminals.push(symbols.intern(h, SymbolKind::Nonterminal, 0));
    }
    let mut rhs_map = HashMap::new();
    for (h, body, _) in &heads {
        let head_id = symbols.lookup(h).unwrap();
        let mut ids = Vec::with_capacity(body.len());
        for s in body {
            let id = match symbols.lookup(s) {
                Some(id) => id,
                None => {
                    if let Some(decl) = &declared_terminals {
                        if !decl.iter().any(|t| t == s) {
                            return Err(GrammarError::Undeclared { name: s.clone() });
                        }
                    }
                    symbols.intern(s, SymbolKind::Terminal, 0)
                }
            };
            ids.push(id);
        }
        rhs_map.insert(head_id, ids);
    }
    if let Some(decl) = &declared_terminals {
        for t in decl {
            symbols.intern(t, SymbolKind::Terminal, 0);
        }
    }
    Slp::from_parts(symbols, nonterminals, rhs_map)
}

/// |val(A)| for every nonterminal, by the length recursion.
#[derive(Debug, Clone)]
pub struct LengthTable {
    lengths: Vec<u64>,
}

impl LengthTable {
    pub fn get(&self, a: SymbolId) -> u64 {
        self.lengths[a.idx()]
    }
}

pub fn lengths(g: &Slp) -> Result<LengthTable> {
    let mut lengths = vec![0u64; g.symbols.len()];
    for id in g.symbols.ids() {
        if !g.is_nonterminal(id) {
            lengths[id.idx()] = 1;
        }
    }
    for &a in &g.topo {
        let mut total: u64 = 0;
        for &s in g.rhs(a) {
            total = total.checked_add(lengths[s.idx()]).ok_or_else(|| {
                GrammarError::TooLarge {
                    name: g.symbols.name(a).to_string(),
                }
            })?;
        }
        if total >= MAX_SIZE {
            return Err(GrammarError::TooLarge {
                name: g.symbols.name(a).to_string(),
            });
        }
        lengths[a.idx()] = total;
    }
    Ok(LengthTable { lengths })
}

/// Fully expands val(x). The brute-force oracle; refuses strings longer
/// than `guard`.
pub fn eval_slp(g: &Slp, x: SymbolId, guard: u64) -> Result<Vec<SymbolId>> {
    let table = lengths(g)?;
    let len = if g.is_nonterminal(x) { table.get(x) } else { 1 };
    if len > guard {
        return Err(GrammarError::GuardExceeded {
            size: len,
            guard,
        });
    }
    let mut out = Vec::with_capacity(len as usize);
    let mut stack = vec![x];
    while let Some(s) = stack.pop() {
        if g.is_nonterminal(s) {
            for &c in g.rhs(s).iter().rev() {
                stack.push(c);
            }
        } else {
            out.push(s);
        }
    }
    Ok(out)
}

/// Renders an expanded string of terminal ids as their concatenated names.
pub fn string_text(g: &Slp, word: &[SymbolId]) -> String {
    word.iter().map(|s| g.symbols.name(*s)).collect()
}

/// Transforms `g` into an SLP where every right-hand side has length
/// exactly 2, preserving val for every surviving nonterminal. Output size
/// is at most twice the input size. Nonterminals keep their ids; chain and
/// unit-length nonterminals are inlined away.
pub fn binarize_slp(g: &Slp) -> Result<Slp> {
    let mut symbols = g.symbols.clone();
    // resolved[s]: the inlined form of s (length 1 means s was eliminated).
    let mut resolved: Vec<Option<Vec<SymbolId>>> = vec![None; symbols.len()];
    for &a in &g.topo {
        let mut body = Vec::new();
        for &s in g.rhs(a) {
            match &resolved[s.idx()] {
                Some(r) if r.len() == 1 => body.push(r[0]),
                _ => body.push(s),
            }
        }
        // Inline symbols that themselves resolved to length-1 bodies.
        let body: Vec<SymbolId> = body
            .into_iter()
            .map(|s| match &resolved[s.idx()] {
                Some(r) if r.len() == 1 => r[0],
                _ => s,
            })
            .collect();
        resolved[a.idx()] = Some(body);
    }

    let mut nonterminals = Vec::new();
    let mut rhs_map: HashMap<SymbolId, Vec<SymbolId>> = HashMap::new();
    let mut survivors = Vec::new();
    for &a in &g.nonterminals {
        let body = resolved[a.idx()].clone().unwrap();
        if body.len() < 2 {
            continue;
        }
        survivors.push((a, body));
    }
    if survivors.is_empty() {
        let a = g.nonterminals[0];
        return Err(GrammarError::TooShortToBinarize {
            name: g.symbols.name(a).to_string(),
            len: 1,
        });
    }
    for (a, body) in survivors {
        if body.len() == 2 {
            nonterminals.push(a);
            rhs_map.insert(a, body);
            continue;
        }
        // A -> a1 A2, Ai -> ai A{i+1}, A{n-1} -> a{n-1} an
        let n = body.len();
        let stem = g.symbols.name(a).to_string();
        let mut splits = Vec::new();
        for i in 2..n {
            splits.push(symbols.fresh(&format!("{stem}_{i}"), SymbolKind::Nonterminal, 0));
        }
        nonterminals.push(a);
        rhs_map.insert(a, vec![body[0], splits[0]]);
        for i in 2..n - 1 {
            nonterminals.push(splits[i - 2]);
            rhs_map.insert(splits[i - 2], vec![body[i - 1], splits[i - 1]]);
        }
        nonterminals.push(splits[n - 3]);
        rhs_map.insert(splits[n - 3], vec![body[n - 2], body[n - 1]]);
    }
    Slp::from_parts(symbols, nonterminals, rhs_map)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const EXAMPLE2: &str = "S -> A B\nA -> B C\nB -> C C\nC -> a D\nD -> a b\n";

    fn example2() -> Slp {
        parse_slp(EXAMPLE2).unwrap()
    }

    #[test]
    fn parse_example2() {
        let g = example2();
        assert_eq!(g.nonterminals.len(), 5);
        assert_eq!(g.terminals.len(), 2);
        assert_eq!(g.size(), 10);
    }

    #[test]
    fn parse_single_rule() {
        let g = parse_slp("S -> a").unwrap();
        let s = g.symbols.lookup("S").unwrap();
        let w = eval_slp(&g, s, 10).unwrap();
        assert_eq!(string_text(&g, &w), "a");
    }

    #[test]
    fn parse_cycle() {
        let err = parse_slp("S -> A\nA -> S").unwrap_err();
        match err {
            GrammarError::Cycle { witness } => assert!(witness.contains("S")),
            other => panic!("expected cycle error, got {other}"),
        }
    }

    #[test]
    fn eval_examples() {
        let g = example2();
        let d = g.symbols.lookup("D").unwrap();
        let c = g.symbols.lookup("C").unwrap();
        let s = g.symbols.lookup("S").unwrap();
        assert_eq!(string_text(&g, &eval_slp(&g, d, 100).unwrap()), "ab");
        assert_eq!(string_text(&g, &eval_slp(&g, c, 100).unwrap()), "aab");
        match eval_slp(&g, s, 4).unwrap_err() {
            GrammarError::GuardExceeded { size, guard } => {
                assert_eq!(size, 15);
                assert_eq!(guard, 4);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn length_table() {
        let g = example2();
        let t = lengths(&g).unwrap();
        let get = |n: &str| t.get(g.symbols.lookup(n).unwrap());
        assert_eq!(get("D"), 2);
        assert_eq!(get("C"), 3);
        assert_eq!(get("B"), 6);
        assert_eq!(get("A"), 9);
        assert_eq!(get("S"), 15);
    }

    #[test]
    fn length_doubling_chain() {
        let mut text = String::from("A0 -> a a\n");
        for i in 1..20 {
            text.push_str(&format!("A{i} -> A{} A{}\n", i - 1, i - 1));
        }
        let g = parse_slp(&text).unwrap();
        let t = lengths(&g).unwrap();
        assert_eq!(t.get(g.symbols.lookup("A19").unwrap()), 1 << 20);
    }

    #[test]
    fn binarize_splits_long_rules() {
        let g = parse_slp("A -> b c d\n").unwrap();
        let h = binarize_slp(&g).unwrap();
        assert_eq!(h.nonterminals.len(), 2);
        for &a in &h.nonterminals {
            assert_eq!(h.rhs(a).len(), 2);
        }
        let a = h.symbols.lookup("A").unwrap();
        assert_eq!(string_text(&h, &eval_slp(&h, a, 100).unwrap()), "bcd");
        assert!(h.size() <= 2 * g.size());
    }

    #[test]
    fn binarize_fixpoint() {
        let g = example2();
        let h = binarize_slp(&g).unwrap();
        assert_eq!(h.to_text(), g.to_text());
    }

    #[test]
    fn binarize_inlines_units() {
        let g = parse_slp("S -> A B\nA -> a\nB -> C\nC -> b c\n").unwrap();
        let h = binarize_slp(&g).unwrap();
        let s = h.symbols.lookup("S").unwrap();
        assert_eq!(string_text(&h, &eval_slp(&h, s, 100).unwrap()), "abc");
        for &a in &h.nonterminals {
            assert_eq!(h.rhs(a).len(), 2);
        }
        assert!(h.symbols.lookup("A").map(|a| !h.is_nonterminal(a)).unwrap_or(true));
    }

    #[test]
    fn roundtrip_serialization() {
        let g = example2();
        let g2 = parse_slp(&g.to_text()).unwrap();
        assert_eq!(g.to_text(), g2.to_text());
    }
}
