use crate::symbol::{SymbolId, SymbolTable};

/// A materialized ranked tree in an arena, as produced by the evaluation
/// oracle. Labels refer to a grammar's symbol table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub label: SymbolId,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl Tree {
    pub fn single(label: SymbolId) -> Self {
        Tree {
            nodes: vec![TreeNode {
                label,
                parent: None,
                children: Vec::new(),
            }],
            root: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn label(&self, v: usize) -> SymbolId {
        self.nodes[v].label
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.nodes[v].children
    }

    /// Preorder node ids starting at the root.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &c in self.nodes[v].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Preorder label sequence.
    pub fn preorder_labels(&self) -> Vec<SymbolId> {
        self.preorder().into_iter().map(|v| self.label(v)).collect()
    }

    /// Node ids of the subtree rooted at `v`, in preorder.
    pub fn subtree_preorder(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            for &c in self.nodes[u].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Structural equality of the subtrees rooted at `v` and `w`.
    pub fn subtree_eq(&self, v: usize, w: usize) -> bool {
        let mut stack = vec![(v, w)];
        while let Some((a, b)) = stack.pop() {
            if self.label(a) != self.label(b) || self.children(a).len() != self.children(b).len() {
                return false;
            }
            for (&ca, &cb) in self.children(a).iter().zip(self.children(b)) {
                stack.push((ca, cb));
            }
        }
        true
    }

    /// Renders the subtree at `v` as `label(child,child,...)`.
    pub fn to_text_at(&self, symbols: &SymbolTable, v: usize) -> String {
        let mut out = String::new();
        self.write_term(symbols, v, &mut out);
        out
    }

    pub fn to_text(&self, symbols: &SymbolTable) -> String {
        self.to_text_at(symbols, self.root)
    }

    fn write_term(&self, symbols: &SymbolTable, v: usize, out: &mut String) {
        out.push_str(symbols.name(self.label(v)));
        let cs = self.children(v);
        if !cs.is_empty() {
            out.push('(');
            for (i, &c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                self.write_term(symbols, c, out);
            }
            out.push(')');
        }
    }
}

/// Builder used by the evaluators.
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<TreeNode>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: SymbolId, parent: Option<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            label,
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    pub fn finish(self, root: usize) -> Tree {
        Tree {
            nodes: self.nodes,
            root,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
