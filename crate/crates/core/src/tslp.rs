use std::collections::HashMap;

use crate::error::{GrammarError, Result};
use crate::slp::MAX_SIZE;
use crate::symbol::{SymbolId, SymbolKind, SymbolTable};
use crate::tree::{Tree, TreeBuilder};

/// A term over terminals, nonterminals and parameters, used for TSLP
/// right-hand sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Sym(SymbolId, Vec<Term>),
    Param(usize),
}

impl Term {
    pub fn leaf(sym: SymbolId) -> Term {
        Term::Sym(sym, Vec::new())
    }

    /// Number of non-parameter nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Param(_) => 0,
            Term::Sym(_, cs) => 1 + cs.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// Parameter indices in left-to-right leaf order.
    pub fn params(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut Vec<usize>) {
        match self {
            Term::Param(i) => out.push(*i),
            Term::Sym(_, cs) => cs.iter().for_each(|c| c.collect_params(out)),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Term::Param(_) => 1,
            Term::Sym(_, cs) => cs.iter().map(Term::param_count).sum(),
        }
    }

    /// Substitutes `args[i-1]` for parameter `x_i`.
    pub fn substitute(&self, args: &[Term]) -> Term {
        match self {
            Term::Param(i) => args[*i - 1].clone(),
            Term::Sym(s, cs) => {
                Term::Sym(*s, cs.iter().map(|c| c.substitute(args)).collect())
            }
        }
    }

    pub fn for_each_symbol(&self, f: &mut impl FnMut(SymbolId)) {
        match self {
            Term::Param(_) => {}
            Term::Sym(s, cs) => {
                f(*s);
                cs.iter().for_each(|c| c.for_each_symbol(f));
            }
        }
    }

    pub fn to_text(&self, symbols: &SymbolTable) -> String {
        let mut out = String::new();
        self.write(symbols, &mut out);
        out
    }

    fn write(&self, symbols: &SymbolTable, out: &mut String) {
        match self {
            Term::Param(i) => out.push_str(&format!("x{i}")),
            Term::Sym(s, cs) => {
                out.push_str(symbols.name(*s));
                if !cs.is_empty() {
                    out.push('(');
                    for (i, c) in cs.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        c.write(symbols, out);
                    }
                    out.push(')');
                }
            }
        }
    }
}

/// A tree straight-line program: a linear context-free tree grammar
/// deriving exactly one tree from its start nonterminal.
#[derive(Debug, Clone)]
pub struct Tslp {
    pub symbols: SymbolTable,
    pub nonterminals: Vec<SymbolId>,
    pub start: SymbolId,
    rhs: Vec<Option<Term>>,
    pub topo: Vec<SymbolId>,
}

impl Tslp {
    pub fn from_parts(
        symbols: SymbolTable,
        nonterminals: Vec<SymbolId>,
        start: SymbolId,
        rhs_map: HashMap<SymbolId, Term>,
    ) -> Result<Self> {
        let mut rhs = vec![None; symbols.len()];
        for (&head, body) in &rhs_map {
            rhs[head.idx()] = Some(body.clone());
        }
        let mut tslp = Tslp {
            symbols,
            nonterminals,
            start,
            rhs,
            topo: Vec::new(),
        };
        tslp.validate()?;
        tslp.topo = tslp.toposort()?;
        Ok(tslp)
    }

    pub fn rhs(&self, a: SymbolId) -> &Term {
        self.rhs[a.idx()]
            .as_ref()
            .expect("rhs of a declared nonterminal")
    }

    pub fn is_nonterminal(&self, a: SymbolId) -> bool {
        self.rhs[a.idx()].is_some()
    }

    pub fn rank(&self, a: SymbolId) -> usize {
        self.symbols.rank(a)
    }

    /// Grammar size: total rhs sizes, parameters not counted.
    pub fn size(&self) -> usize {
        self.nonterminals.iter().map(|a| self.rhs(*a).size()).sum()
    }

    fn validate(&self) -> Result<()> {
        for &a in &self.nonterminals {
            let rank = self.rank(a);
            let body = self.rhs(a);
            let mut params = body.params();
            params.sort_unstable();
            for w in params.windows(2) {
                if w[0] == w[1] {
                    return Err(GrammarError::NonLinear {
                        head: self.symbols.name(a).to_string(),
                        param: w[0],
                    });
                }
            }
            let expected: Vec<usize> = (1..=rank).collect();
            if params != expected {
                return Err(GrammarError::ParamSet {
                    head: self.symbols.name(a).to_string(),
                    rank,
                    found: params,
                });
            }
            let mut err = None;
            self.check_ranks(body, &mut err);
            if let Some(e) = err {
                return Err(e);
            }
        }
        if self.rank(self.start) != 0 {
            return Err(GrammarError::Invalid(format!(
                "start nonterminal `{}` must have rank 0",
                self.symbols.name(self.start)
            )));
        }
        Ok(())
    }

    fn check_ranks(&self, t: &Term, err: &mut Option<GrammarError>) {
        if err.is_some() {
            return;
        }
        if let Term::Sym(s, cs) = t {
            let rank = self.symbols.rank(*s);
            if cs.len() != rank {
                *err = Some(GrammarError::RankMismatch {
                    name: self.symbols.name(*s).to_string(),
                    expected: rank,
                    found: cs.len(),
                });
                return;
            }
            for c in cs {
                self.check_ranks(c, err);
            }
        }
    }

    fn toposort(&self) -> Result<Vec<SymbolId>> {
        let mut state = vec![0u8; self.symbols.len()];
        let mut order = Vec::new();
        let mut deps: Vec<Vec<SymbolId>> = vec![Vec::new(); self.symbols.len()];
        for &a in &self.nonterminals {
            let mut ds = Vec::new();
            self.rhs(a).for_each_symbol(&mut |s| {
                if self.is_nonterminal(s) {
                    ds.push(s);
                }
            });
            deps[a.idx()] = ds;
        }
        for &start in &self.nonterminals {
            if state[start.idx()] == 2 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start.idx()] = 1;
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                if *i < deps[v.idx()].len() {
                    let c = deps[v.idx()][*i];
                    *i += 1;
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
        let mut out = format!("start {}\n", self.symbols.name(self.start));
        for &a in &self.nonterminals {
            out.push_str(self.symbols.name(a));
            let rank = self.rank(a);
            if rank > 0 {
                out.push('(');
                for i in 1..=rank {
                    if i > 1 {
                        out.push(',');
                    }
                    out.push_str(&format!("x{i}"));
                }
                out.push(')');
            }
            out.push_str(" -> ");
            out.push_str(&self.rhs(a).to_text(&self.symbols));
            out.push('\n');
        }
        out
    }
}

fn is_param_name(s: &str) -> Option<usize> {
    let rest = s.strip_prefix('x')?;
    if rest.is_empty() || rest.starts_with('0') || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

struct LineParser<'a> {
    line: &'a [u8],
    lineno: usize,
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn new(line: &'a str, lineno: usize) -> Self {
        LineParser {
            line: line.as_bytes(),
            lineno,
            pos: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> GrammarError {
        GrammarError::Syntax {
            line: self.lineno,
            col: self.pos + 1,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.line.len() && self.line[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.line.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.line.len()
            || !(self.line[self.pos].is_ascii_alphabetic() || self.line[self.pos] == b'_')
        {
            return Err(self.err("expected identifier"));
        }
        while self.pos < self.line.len()
            && (self.line[self.pos].is_ascii_alphanumeric() || self.line[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Ok(std::str::from_utf8(&self.line[start..self.pos]).unwrap())
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

/// Raw term over names, resolved to symbols in a second pass.
enum RawTerm {
    Sym(String, Vec<RawTerm>),
    Param(usize),
}

fn parse_raw_term(p: &mut LineParser) -> Result<RawTerm> {
    let name = p.ident()?;
    if let Some(i) = is_param_name(name) {
        return Ok(RawTerm::Param(i));
    }
    let mut children = Vec::new();
    if p.peek() == Some(b'(') {
        p.pos += 1;
        loop {
            children.push(parse_raw_term(p)?);
            match p.peek() {
                Some(b',') => p.pos += 1,
                Some(b')') => {
                    p.pos += 1;
                    break;
                }
                _ => return Err(p.err("expected `,` or `)`")),
            }
        }
    }
    Ok(RawTerm::Sym(name.to_string(), children))
}

/// Parses the TSLP format: optional `start S` line, rules
/// `A(x1,...,xk) -> term` with `f(t1,...,tn)` term syntax.
pub fn parse_tslp(text: &str) -> Result<Tslp> {
    struct RawRule {
        head: String,
        rank: usize,
        body: RawTerm,
        lineno: usize,
    }
    let mut rules: Vec<RawRule> = Vec::new();
    let mut start_name: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim_end();
        if line.trim().is_empty() {
            continue;
        }
        let mut p = LineParser::new(line, lineno + 1);
        let head = p.ident()?.to_string();
        if head == "start" && !p.at_end() && p.peek() != Some(b'(') && p.peek() != Some(b'-') {
            let name = p.ident()?.to_string();
            if !p.at_end() {
                return Err(p.err("unexpected input after start declaration"));
            }
            start_name = Some(name);
            continue;
        }
        if is_param_name(&head).is_some() {
            return Err(p.err("parameter names are reserved"));
        }
        let mut rank = 0;
        if p.peek() == Some(b'(') {
            p.pos += 1;
            loop {
                let param = p.ident()?;
                match is_param_name(param) {
                    Some(i) if i == rank + 1 => rank += 1,
                    _ => {
                        return Err(p.err(format!(
                            "expected parameter x{}, found `{param}`",
                            rank + 1
                        )))
                    }
                }
                match p.peek() {
                    Some(b',') => p.pos += 1,
                    Some(b')') => {
                        p.pos += 1;
                        break;
                    }
                    _ => return Err(p.err("expected `,` or `)`")),
                }
            }
        }
        p.expect(b'-')?;
        if p.line.get(p.pos) != Some(&b'>') {
            return Err(p.err("expected `->`"));
        }
        p.pos += 1;
        let body = parse_raw_term(&mut p)?;
        if !p.at_end() {
            return Err(p.err("unexpected input after term"));
        }
        if rules.iter().any(|r| r.head == head) {
            return Err(GrammarError::Syntax {
                line: lineno + 1,
                col: 1,
                msg: format!("duplicate rule for `{head}`"),
            });
        }
        rules.push(RawRule {
            head,
            rank,
            body,
            lineno: lineno + 1,
        });
    }
    if rules.is_empty() {
        return Err(GrammarError::Syntax {
            line: 1,
            col: 1,
            msg: "no rules".into(),
        });
    }

    let mut symbols = SymbolTable::new();
    for r in &rules {
        symbols.intern(&r.head, SymbolKind::Nonterminal, r.rank);
        if symbols.rank(symbols.lookup(&r.head).unwrap()) != r.rank {
            return Err(GrammarError::RankMismatch {
                name: r.head.clone(),
                expected: symbols.rank(symbols.lookup(&r.head).unwrap()),
                found: r.rank,
            });
        }
    }

    // Resolve terms; terminal ranks are inferred from first use.
    fn resolve(
        raw: &RawTerm,
        symbols: &mut SymbolTable,
        lineno: usize,
    ) -> Result<Term> {
        match raw {
            RawTerm::Param(i) => Ok(Term::Param(*i)),
            RawTerm::Sym(name, children) => {
                let id = match symbols.lookup(name) {
                    Some(id) => {
                        if symbols.rank(id) != children.len() {
                            return Err(GrammarError::RankMismatch {
                                name: name.clone(),
                                expected: symbols.rank(id),
                                found: children.len(),
                            });
                        }
                        id
                    }
                    None => symbols.intern(name, SymbolKind::Terminal, children.len()),
                };
                let cs = children
                    .iter()
                    .map(|c| resolve(c, symbols, lineno))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Term::Sym(id, cs))
            }
        }
    }

    let mut nonterminals = Vec::new();
    let mut rhs_map = HashMap::new();
    for r in &rules {
        let head = symbols.lookup(&r.head).unwrap();
        nonterminals.push(head);
        let body = resolve(&r.body, &mut symbols, r.lineno)?;
        rhs_map.insert(head, body);
    }
    let start = match start_name {
        Some(name) => symbols.lookup(&name).ok_or(GrammarError::Undeclared { name })?,
        None => nonterminals[0],
    };
    Tslp::from_parts(symbols, nonterminals, start, rhs_map)
}

/// Per-nonterminal size of val(A), counting only non-parameter nodes.
#[derive(Debug, Clone)]
pub struct SizeTable {
    sizes: Vec<u64>,
}

impl SizeTable {
    pub fn get(&self, a: SymbolId) -> u64 {
        self.sizes[a.idx()]
    }
}

pub fn sizes(g: &Tslp) -> Result<SizeTable> {
    let mut sizes = vec![0u64; g.symbols.len()];
    for id in g.symbols.ids() {
        if !g.is_nonterminal(id) {
            sizes[id.idx()] = 1;
        }
    }
    fn term_size(t: &Term, sizes: &[u64]) -> Option<u64> {
        match t {
            Term::Param(_) => Some(0),
            Term::Sym(s, cs) => {
                let mut total = sizes[s.idx()];
                for c in cs {
                    total = total.checked_add(term_size(c, sizes)?)?;
                }
                Some(total)
            }
        }
    }
    for &a in &g.topo {
        let s = term_size(g.rhs(a), &sizes).ok_or_else(|| GrammarError::TooLarge {
            name: g.symbols.name(a).to_string(),
        })?;
        if s >= MAX_SIZE {
            return Err(GrammarError::TooLarge {
                name: g.symbols.name(a).to_string(),
            });
        }
        sizes[a.idx()] = s;
    }
    Ok(SizeTable { sizes })
}

/// Node count of val(t) for a closed term (no free parameters after
/// counting: parameter leaves count 0).
pub fn term_val_size(g: &Tslp, t: &Term) -> Result<u64> {
    let table = sizes(g)?;
    fn go(t: &Term, sizes: &SizeTable) -> Option<u64> {
        match t {
            Term::Param(_) => Some(0),
            Term::Sym(s, cs) => {
                let mut total = sizes.get(*s);
                for c in cs {
                    total = total.checked_add(go(c, sizes)?)?;
                }
                Some(total)
            }
        }
    }
    go(t, &table).ok_or(GrammarError::TooLarge {
        name: "<term>".to_string(),
    })
}

/// Expands a closed term to the tree it derives. The brute-force oracle.
pub fn eval_term(g: &Tslp, t: &Term, guard: u64) -> Result<Tree> {
    let size = term_val_size(g, t)?;
    if size > guard {
        return Err(GrammarError::GuardExceeded { size, guard });
    }

    #[derive(Clone)]
    struct Closure<'a> {
        term: &'a Term,
        env: std::rc::Rc<Vec<Closure<'a>>>,
    }
    let empty = std::rc::Rc::new(Vec::new());
    let mut builder = TreeBuilder::new();
    let mut stack: Vec<(Closure, Option<usize>)> = vec![(
        Closure {
            term: t,
            env: empty.clone(),
        },
        None,
    )];
    let mut root = None;
    // Children are attached on creation, so sibling tasks must come off the
    // stack left to right; we also expand closures without creating nodes.
    while let Some((cl, parent)) = stack.pop() {
        match cl.term {
            Term::Param(i) => {
                stack.push((cl.env[*i - 1].clone(), parent));
            }
            Term::Sym(s, cs) => {
                if g.is_nonterminal(*s) {
                    let env = std::rc::Rc::new(
                        cs.iter()
                            .map(|c| Closure {
                                term: c,
                                env: cl.env.clone(),
                            })
                            .collect::<Vec<_>>(),
                    );
                    stack.push((
                        Closure {
                            term: g.rhs(*s),
                            env,
                        },
                        parent,
                    ));
                } else {
                    let v = builder.push(*s, parent);
                    if root.is_none() {
                        root = Some(v);
                    }
                    for c in cs.iter().rev() {
                        stack.push((
                            Closure {
                                term: c,
                                env: cl.env.clone(),
                            },
                            Some(v),
                        ));
                    }
                }
            }
        }
    }
    Ok(builder.finish(root.expect("nonempty tree")))
}

/// Expands val(a) for a rank-0 nonterminal.
pub fn eval_tslp(g: &Tslp, a: SymbolId, guard: u64) -> Result<Tree> {
    eval_term(g, &Term::leaf(a), guard)
}
