use crate::slp::Slp;
use crate::symbol::SymbolId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    L,
    R,
}

/// One trie per terminal, holding every symbol once: the parent of a
/// nonterminal A is the first (side L) or second (side R) symbol of
/// rhs(A); terminals are roots. The reversed root-to-A label path spells
/// the derivation-spine string of A for this side.
#[derive(Debug, Clone)]
pub struct TrieForest {
    pub side: Side,
    pub parent: Vec<Option<SymbolId>>,
    /// children sorted by symbol id, so builds are deterministic
    pub children: Vec<Vec<SymbolId>>,
    /// root terminal above each symbol (the omega map)
    pub root: Vec<SymbolId>,
    pub roots: Vec<SymbolId>,
}

impl TrieForest {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// The spine string of A: A followed by the trie path from A's parent
    /// up to the root.
    pub fn spine_string(&self, a: SymbolId) -> Vec<SymbolId> {
        let mut out = vec![a];
        let mut cur = a;
        while let Some(p) = self.parent[cur.idx()] {
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn is_ancestor(&self, anc: SymbolId, desc: SymbolId) -> bool {
        let mut cur = desc;
        while let Some(p) = self.parent[cur.idx()] {
            if p == anc {
                return true;
            }
            cur = p;
        }
        false
    }
}

/// Builds both trie forests for a binary SLP in one dependency-order pass.
pub fn build_tries(h: &Slp) -> (TrieForest, TrieForest) {
    let n = h.symbols.len();
    let build = |side: Side| -> TrieForest {
        let mut parent = vec![None; n];
        for &a in &h.nonterminals {
            let (b, c) = h.rhs2(a);
            parent[a.idx()] = Some(match side {
                Side::L => b,
                Side::R => c,
            });
        }
        let mut children: Vec<Vec<SymbolId>> = vec![Vec::new(); n];
        for id in h.symbols.ids() {
            if let Some(p) = parent[id.idx()] {
                children[p.idx()].push(id);
            }
        }
        for c in &mut children {
            c.sort();
        }
        let mut root = vec![SymbolId(0); n];
        let mut roots = Vec::new();
        // terminals are roots; resolve in topo order so parents are done
        for id in h.symbols.ids() {
            if parent[id.idx()].is_none() {
                root[id.idx()] = id;
                roots.push(id);
            }
        }
        for &a in &h.topo {
            let p = parent[a.idx()].expect("nonterminal has a parent");
            root[a.idx()] = root[p.idx()];
        }
        TrieForest {
            side,
            parent,
            children,
            root,
            roots,
        }
    };
    (build(Side::L), build(Side::R))
}

/// Constant-time next-link over a trie forest. The child of v1 toward a
/// descendant v2 equals the lowest common ancestor of v2 and v1's last
/// child, provided the LCA is taken in the first-child/next-sibling
/// encoding of the forest — sibling chains make the intermediate
/// children ancestors of the last one.
#[derive(Debug, Clone)]
pub struct LcaIndex {
    /// last (max-id) trie child of each symbol, if any
    last_child: Vec<Option<SymbolId>>,
    /// Euler tour of the fcns encoding: first occurrence per node
    first_occ: Vec<usize>,
    tour: Vec<u32>,
    depth: Vec<u32>,
    /// sparse table over tour positions, by depth
    table: Vec<Vec<u32>>,
    log2: Vec<u32>,
}

impl LcaIndex {
    pub fn new(f: &TrieForest) -> LcaIndex {
        let n = f.len();
        // fcns encoding; index n is a virtual root chaining the real roots
        let mut first_child: Vec<Option<u32>> = vec![None; n + 1];
        let mut next_sibling: Vec<Option<u32>> = vec![None; n + 1];
        let mut last_child: Vec<Option<SymbolId>> = vec![None; n];
        for i in 0..n {
            let cs = &f.children[i];
            if let Some(&first) = cs.first() {
                first_child[i] = Some(first.0);
                last_child[i] = cs.last().copied();
                for w in cs.windows(2) {
                    next_sibling[w[0].idx()] = Some(w[1].0);
                }
            }
        }
        if let Some(&first) = f.roots.first() {
            first_child[n] = Some(first.0);
            for w in f.roots.windows(2) {
                next_sibling[w[0].idx()] = Some(w[1].0);
            }
        }

        // Euler tour of the binary fcns tree, iterative.
        let mut first_occ = vec![usize::MAX; n + 1];
        let mut tour = Vec::with_capacity(4 * n + 4);
        let mut depth = Vec::with_capacity(4 * n + 4);
        let mut stack: Vec<(u32, u32, u8)> = vec![(n as u32, 0, 0)];
        while let Some((v, d, state)) = stack.pop() {
            if first_occ[v as usize] == usize::MAX {
                first_occ[v as usize] = tour.len();
            }
            tour.push(v);
            depth.push(d);
            let kids = [first_child[v as usize], next_sibling[v as usize]];
            let mut next = state;
            while (next as usize) < 2 {
                if let Some(c) = kids[next as usize] {
                    stack.push((v, d, next + 1));
                    stack.push((c, d + 1, 0));
                    break;
                }
                next += 1;
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
        LcaIndex {
            last_child,
            first_occ,
            tour,
            depth,
            table,
            log2,
        }
    }

    /// LCA in the fcns encoding, O(1).
    fn fcns_lca(&self, a: SymbolId, b: SymbolId) -> SymbolId {
        let (mut i, mut j) = (self.first_occ[a.idx()], self.first_occ[b.idx()]);
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        let k = self.log2[j - i + 1] as usize;
        let x = self.table[k][i];
        let y = self.table[k][j + 1 - (1 << k)];
        let pos = if self.depth[x as usize] <= self.depth[y as usize] { x } else { y };
        SymbolId(self.tour[pos as usize])
    }

    /// The child of v1 on the path toward the proper descendant v2.
    pub fn next_link(&self, f: &TrieForest, v1: SymbolId, v2: SymbolId) -> SymbolId {
        debug_assert!(f.is_ancestor(v1, v2), "v1 must be a proper ancestor of v2");
        let last = self.last_child[v1.idx()].expect("ancestors have children");
        self.fcns_lca(v2, last)
    }
}

/// Triple (A, dir, target): a position in the spine string of A. The
/// direction is implied by which forest the triple lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub head: SymbolId,
    pub target: SymbolId,
}

/// Per-side next-link structure with the reduce step used by navigation:
/// writing the spine string of A as `A u t v`, reduce replaces t by the
/// last symbol of u, or is undefined when u is empty.
#[derive(Debug, Clone)]
pub struct SideIndex {
    pub forest: TrieForest,
    pub lca: LcaIndex,
}

impl SideIndex {
    pub fn new(forest: TrieForest) -> SideIndex {
        let lca = LcaIndex::new(&forest);
        SideIndex { forest, lca }
    }

    pub fn reduce(&self, t: Triple) -> Option<Triple> {
        debug_assert!(
            self.forest.is_ancestor(t.target, t.head),
            "target must sit on the head's spine"
        );
        if self.forest.parent[t.head.idx()] == Some(t.target) {
            return None;
        }
        Some(Triple {
            head: t.head,
            target: self.lca.next_link(&self.forest, t.target, t.head),
        })
    }

    /// omega: the first (L) or last (R) terminal of the subtree string.
    pub fn omega(&self, a: SymbolId) -> SymbolId {
        self.forest.root[a.idx()]
    }
}

/// Both sides, ready for cursor algorithms over a binary SLP.
#[derive(Debug, Clone)]
pub struct NextLinkIndex {
    pub l: SideIndex,
    pub r: SideIndex,
}

impl NextLinkIndex {
    pub fn new(h: &Slp) -> NextLinkIndex {
        let (fl, fr) = build_tries(h);
        NextLinkIndex {
            l: SideIndex::new(fl),
            r: SideIndex::new(fr),
        }
    }

    pub fn reduce_l(&self, t: Triple) -> Option<Triple> {
        self.l.reduce(t)
    }

    pub fn reduce_r(&self, t: Triple) -> Option<Triple> {
        self.r.reduce(t)
    }
}

/// DOT rendering of one forest, for the debug CLI.
pub fn forest_dot(f: &TrieForest, symbols: &crate::symbol::SymbolTable) -> String {
    let side = match f.side {
        Side::L => "L",
        Side::R => "R",
    };
    let mut out = format!("digraph tries_{side} {{\n  rankdir=BT;\n");
    for id in 0..f.len() {
        let id = SymbolId(id as u32);
        out.push_str(&format!(
            "  n{} [label=\"{}\"];\n",
            id.0,
            symbols.name(id)
        ));
    }
    for id in 0..f.len() {
        let id = SymbolId(id as u32);
        if let Some(p) = f.parent[id.idx()] {
            out.push_str(&format!("  n{} -> n{};\n", id.0, p.0));
        }
    }
    out.push_str("}\n");
    out
}
