use std::collections::HashMap;
use std::fmt;

/// Dense id of an interned symbol. All index structures are keyed by these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId(pub u32);

impl SymbolId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Terminal,
    Nonterminal,
}

#[derive(Debug, Clone)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    pub rank: usize,
}

/// Interner mapping names to dense ids, in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
    by_name: HashMap<String, SymbolId>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str, kind: SymbolKind, rank: usize) -> SymbolId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = SymbolId(self.symbols.len() as u32);
        self.symbols.push(Symbol {
            name: name.to_string(),
            kind,
            rank,
        });
        self.by_name.insert(name.to_string(), id);
        id
    }

    /// Adds a fresh symbol with a name not colliding with any existing one.
    pub fn fresh(&mut self, stem: &str, kind: SymbolKind, rank: usize) -> SymbolId {
        if !self.by_name.contains_key(stem) {
            return self.intern(stem, kind, rank);
        }
        let mut i = 1usize;
        loop {
            let name = format!("{stem}_{i}");
            if !self.by_name.contains_key(&name) {
                return self.intern(&name, kind, rank);
            }
            i += 1;
        }
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.idx()]
    }

    pub fn get_mut(&mut self, id: SymbolId) -> &mut Symbol {
        &mut self.symbols[id.idx()]
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.symbols[id.idx()].name
    }

    pub fn rank(&self, id: SymbolId) -> usize {
        self.symbols[id.idx()].rank
    }

    pub fn kind(&self, id: SymbolId) -> SymbolKind {
        self.symbols[id.idx()].kind
    }

    pub fn is_terminal(&self, id: SymbolId) -> bool {
        self.symbols[id.idx()].kind == SymbolKind::Terminal
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymbolId> {
        (0..self.symbols.len() as u32).map(SymbolId)
    }
}
