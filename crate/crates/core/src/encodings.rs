//! Binary encodings of unranked trees: first-child/next-sibling and the
//! balanced fan-out encoding bin(t), with decoders and the O(log r)
//! per-step navigation mapping on bin(t).

use crate::error::{GrammarError, Result};
use crate::symbol::{SymbolId, SymbolKind, SymbolTable};
use crate::tree::{Tree, TreeNode};

/// Reserved leaf label marking absent children in the fcns encoding.
pub const NIL: &str = "nil";

/// Gadget labels are `bin<arity>`, one symbol per arity class.
pub fn gadget_name(arity: usize) -> String {
    format!("bin{arity}")
}

fn is_reserved(name: &str) -> bool {
    name == NIL
        || (name.len() > 3
            && name.starts_with("bin")
            && name[3..].bytes().all(|b| b.is_ascii_digit()))
}

/// A labeled ordered tree with unbounded fan-out, plus its own symbol
/// table (symbol ranks are not meaningful here).
#[derive(Debug, Clone)]
pub struct UnrankedTree {
    pub symbols: SymbolTable,
    pub tree: Tree,
}

impl UnrankedTree {
    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn label_name(&self, v: usize) -> &str {
        self.symbols.name(self.tree.label(v))
    }

    pub fn to_text(&self) -> String {
        self.tree.to_text(&self.symbols)
    }

    /// Parses `label(child,child,...)`; labels are any run of characters
    /// other than parentheses, commas and whitespace.
    pub fn parse(text: &str) -> Result<UnrankedTree> {
        let mut symbols = SymbolTable::new();
        let mut nodes: Vec<TreeNode> = Vec::new();
        let mut parents: Vec<usize> = Vec::new();
        let mut last: Option<usize> = None;
        let mut root: Option<usize> = None;
        let (mut line, mut col) = (1u32, 0u32);
        let err = |line: u32, col: u32, msg: &str| GrammarError::Syntax {
            line: line as usize,
            col: col as usize,
            msg: msg.to_string(),
        };
        let mut chars = text.chars().peekable();
        while let Some(&ch) = chars.peek() {
            match ch {
                '\n' => {
                    chars.next();
                    line += 1;
                    col = 0;
                }
                c if c.is_whitespace() => {
                    chars.next();
                    col += 1;
                }
                '(' => {
                    chars.next();
                    col += 1;
                    let v = last
                        .take()
                        .ok_or_else(|| err(line, col, "'(' without a preceding label"))?;
                    parents.push(v);
                }
                ')' => {
                    chars.next();
                    col += 1;
                    if last.is_none() {
                        return Err(err(line, col, "empty child list"));
                    }
                    last = Some(
                        parents
                            .pop()
                            .ok_or_else(|| err(line, col, "unmatched ')'"))?,
                    );
                }
                ',' => {
                    chars.next();
                    col += 1;
                    if last.take().is_none() {
                        return Err(err(line, col, "',' without a preceding subtree"));
                    }
                    if parents.is_empty() {
                        return Err(err(line, col, "',' outside a child list"));
                    }
                }
                _ => {
                    if last.is_some() {
                        return Err(err(line, col, "two subtrees without a separator"));
                    }
                    let mut name = String::new();
                    while let Some(&c) = chars.peek() {
                        if c == '(' || c == ')' || c == ',' || c.is_whitespace() {
                            break;
                        }
                        name.push(c);
                        chars.next();
                        col += 1;
                    }
                    let label = symbols.intern(&name, SymbolKind::Terminal, 0);
                    let parent = parents.last().copied();
                    let id = nodes.len();
                    nodes.push(TreeNode {
                        label,
                        parent,
                        children: Vec::new(),
                    });
                    if let Some(p) = parent {
                        nodes[p].children.push(id);
                    } else if root.is_some() {
                        return Err(err(line, col, "more than one root"));
                    } else {
                        root = Some(id);
                    }
                    last = Some(id);
                }
            }
        }
        if !parents.is_empty() {
            return Err(err(line, col, "unmatched '('"));
        }
        let root = root.ok_or_else(|| err(line, col, "empty input"))?;
        Ok(UnrankedTree {
            symbols,
            tree: Tree { nodes, root },
        })
    }

    fn check_no_reserved(&self) -> Result<()> {
        for v in 0..self.len() {
            if is_reserved(self.label_name(v)) {
                return Err(GrammarError::Invalid(format!(
                    "label {} is reserved for encodings",
                    self.label_name(v)
                )));
            }
        }
        Ok(())
    }
}

/// First-child/next-sibling encoding: the left child of a node is its
/// first child in t, the right child its next sibling; absent ones are
/// `nil` leaves. |fcns(t)| = 2|t| + 1.
pub fn fcns_encode(t: &UnrankedTree) -> Result<UnrankedTree> {
    t.check_no_reserved()?;
    let mut symbols = t.symbols.clone();
    let nil = symbols.intern(NIL, SymbolKind::Terminal, 0);
    let n = t.len();
    // Encoded ids 0..n mirror the original ids; nil leaves follow.
    let mut nodes: Vec<TreeNode> = (0..n)
        .map(|v| TreeNode {
            label: t.tree.label(v),
            parent: None,
            children: Vec::new(),
        })
        .collect();
    let mut left: Vec<Option<usize>> = vec![None; n];
    let mut right: Vec<Option<usize>> = vec![None; n];
    for v in 0..n {
        let cs = t.tree.children(v);
        if let Some(&first) = cs.first() {
            left[v] = Some(first);
        }
        for w in cs.windows(2) {
            right[w[0]] = Some(w[1]);
        }
    }
    for v in 0..n {
        for slot in [left[v], right[v]] {
            let c = slot.unwrap_or_else(|| {
                let id = nodes.len();
                nodes.push(TreeNode {
                    label: nil,
                    parent: None,
                    children: Vec::new(),
                });
                id
            });
            nodes[c].parent = Some(v);
            nodes[v].children.push(c);
        }
    }
    debug_assert_eq!(nodes.len(), 2 * n + 1);
    Ok(UnrankedTree {
        symbols,
        tree: Tree {
            nodes,
            root: t.tree.root,
        },
    })
}

pub fn fcns_decode(e: &UnrankedTree) -> Result<UnrankedTree> {
    let bad = |msg: String| GrammarError::Invalid(msg);
    let nil = e
        .symbols
        .lookup(NIL)
        .ok_or_else(|| bad("no nil leaves: not an fcns encoding".into()))?;
    for v in 0..e.len() {
        let arity = e.tree.children(v).len();
        if e.tree.label(v) == nil && arity != 0 {
            return Err(bad("nil node with children".into()));
        }
        if e.tree.label(v) != nil && arity != 2 {
            return Err(bad(format!("non-nil node with {arity} != 2 children")));
        }
    }
    if e.tree.label(e.tree.root) == nil {
        return Err(bad("nil root".into()));
    }
    if e.tree.label(e.tree.children(e.tree.root)[1]) != nil {
        return Err(bad("the root cannot have a sibling".into()));
    }
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut stack: Vec<(usize, Option<usize>)> = vec![(e.tree.root, None)];
    while let Some((v, parent)) = stack.pop() {
        let id = nodes.len();
        nodes.push(TreeNode {
            label: e.tree.label(v),
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        // original children: left child, then its chain of right children
        let mut cs = Vec::new();
        let mut c = e.tree.children(v)[0];
        while e.tree.label(c) != nil {
            cs.push(c);
            c = e.tree.children(c)[1];
        }
        for &c in cs.iter().rev() {
            stack.push((c, Some(id)));
        }
    }
    Ok(UnrankedTree {
        symbols: e.symbols.clone(),
        tree: Tree { nodes, root: 0 },
    })
}

enum Work {
    /// encode the original node under the (encoded) parent
    Node(usize, Option<usize>),
    /// gadget subtree over children[lo..hi] of an original node, with
    /// the arity-class label, under the (encoded) parent
    Span(SymbolId, usize, usize, usize, usize),
}

/// Balanced binary fan-out encoding: each node of rank s >= 3 becomes
/// the root of a binary gadget of depth ceil(log2 s) with its children
/// as the leaves. Gadget internals use one fresh symbol per arity class
/// and the split is left-leaning (ceil(s/2) / floor(s/2)).
/// |bin(t)| <= 3|t|.
pub fn bin_encode(t: &UnrankedTree) -> Result<UnrankedTree> {
    t.check_no_reserved()?;
    let mut symbols = t.symbols.clone();
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut work = vec![Work::Node(t.tree.root, None)];
    while let Some(w) = work.pop() {
        match w {
            Work::Node(v, parent) => {
                let id = nodes.len();
                nodes.push(TreeNode {
                    label: t.tree.label(v),
                    parent,
                    children: Vec::new(),
                });
                if let Some(p) = parent {
                    nodes[p].children.push(id);
                }
                let cs = t.tree.children(v);
                if cs.len() <= 2 {
                    for &c in cs.iter().rev() {
                        work.push(Work::Node(c, Some(id)));
                    }
                } else {
                    let class =
                        symbols.intern(&gadget_name(cs.len()), SymbolKind::Terminal, 0);
                    let mid = cs.len() - cs.len() / 2;
                    work.push(Work::Span(class, v, mid, cs.len(), id));
                    work.push(Work::Span(class, v, 0, mid, id));
                }
            }
            Work::Span(class, v, lo, hi, parent) => {
                if hi - lo == 1 {
                    work.push(Work::Node(t.tree.children(v)[lo], Some(parent)));
                } else {
                    let id = nodes.len();
                    nodes.push(TreeNode {
                        label: class,
                        parent: Some(parent),
                        children: Vec::new(),
                    });
                    nodes[parent].children.push(id);
                    let mid = lo + (hi - lo) - (hi - lo) / 2;
                    work.push(Work::Span(class, v, mid, hi, id));
                    work.push(Work::Span(class, v, lo, mid, id));
                }
            }
        }
    }
    debug_assert!(nodes.len() <= 3 * t.len(), "bin size bound violated");
    Ok(UnrankedTree {
        symbols,
        tree: Tree { nodes, root: 0 },
    })
}

fn is_gadget(e: &UnrankedTree, v: usize) -> bool {
    is_reserved(e.label_name(v)) && e.label_name(v) != NIL
}

pub fn bin_decode(e: &UnrankedTree) -> Result<UnrankedTree> {
    if is_gadget(e, e.tree.root) {
        return Err(GrammarError::Invalid("gadget label at the root".into()));
    }
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut stack: Vec<(usize, Option<usize>)> = vec![(e.tree.root, None)];
    while let Some((v, parent)) = stack.pop() {
        let id = nodes.len();
        nodes.push(TreeNode {
            label: e.tree.label(v),
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        // flatten gadget internals into the original child list
        let mut cs = Vec::new();
        let mut walk = e.tree.children(v).to_vec();
        walk.reverse();
        while let Some(c) = walk.pop() {
            if is_gadget(e, c) {
                let gcs = e.tree.children(c);
                if gcs.len() != 2 {
                    return Err(GrammarError::Invalid(
                        "gadget node without two children".into(),
                    ));
                }
                walk.push(gcs[1]);
                walk.push(gcs[0]);
            } else {
                cs.push(c);
            }
        }
        for &c in cs.iter().rev() {
            stack.push((c, Some(id)));
        }
    }
    Ok(UnrankedTree {
        symbols: e.symbols.clone(),
        tree: Tree { nodes, root: 0 },
    })
}

/// Per-node leaf spans of an encoded tree, for O(log r) navigation
/// between original-tree nodes inside bin(t).
#[derive(Debug, Clone)]
pub struct BinNav {
    /// original nodes: their fan-out; gadget nodes: leaves below
    span: Vec<u64>,
}

impl BinNav {
    pub fn new(e: &UnrankedTree) -> BinNav {
        let mut span = vec![0u64; e.len()];
        for &v in e.tree.preorder().iter().rev() {
            span[v] = e
                .tree
                .children(v)
                .iter()
                .map(|&c| if is_gadget(e, c) { span[c] } else { 1 })
                .sum();
        }
        BinNav { span }
    }

    /// Fan-out of an original node.
    pub fn arity(&self, v: usize) -> u64 {
        self.span[v]
    }

    /// The bin(t) node of the i-th original child (1-based), with the
    /// number of downward steps taken: ceil(log2 s) at most.
    pub fn child(&self, e: &UnrankedTree, v: usize, i: u64) -> Result<(usize, u32)> {
        if is_gadget(e, v) {
            return Err(GrammarError::Invalid("not an original node".into()));
        }
        let s = self.span[v];
        if i < 1 || i > s {
            return Err(GrammarError::OutOfRange { pos: i, len: s });
        }
        let mut cur = v;
        let mut lo = 1u64;
        let mut steps = 0u32;
        loop {
            for &c in e.tree.children(cur) {
                let w = if is_gadget(e, c) { self.span[c] } else { 1 };
                if i < lo + w {
                    cur = c;
                    steps += 1;
                    break;
                }
                lo += w;
            }
            if !is_gadget(e, cur) {
                return Ok((cur, steps));
            }
        }
    }

    /// The bin(t) node of the original parent, with the number of upward
    /// steps taken: ceil(log2 s) + 1 at most.
    pub fn parent(&self, e: &UnrankedTree, v: usize) -> Result<(usize, u32)> {
        if is_gadget(e, v) {
            return Err(GrammarError::Invalid("not an original node".into()));
        }
        let mut cur = v;
        let mut steps = 0u32;
        while let Some(p) = e.tree.nodes[cur].parent {
            steps += 1;
            if !is_gadget(e, p) {
                return Ok((p, steps));
            }
            cur = p;
        }
        Err(GrammarError::Invalid("the root has no parent".into()))
    }
}
