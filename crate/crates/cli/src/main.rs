//! `gct`: inspect, decompress, navigate and query grammar-compressed
//! trees (TSLPs) and strings (SLPs).
//!
//! Exit codes: 0 success, 1 invalid input, 2 size guard exceeded.

use std::collections::HashMap;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use gct::error::GrammarError;
use gct::next_link::forest_dot;
use gct::normalize::Form;
use gct::slp::{eval_slp, lengths, string_text};
use gct::slp_algorithms::{lcp, substring_slp, symbol_at};
use gct::string_cursor::StringCursor;
use gct::{
    bin_decode, bin_encode, binarize_slp, build_tries, classify, derive_spine, derived_size,
    eval_tslp, fcns_decode, fcns_encode, generate, monadize, normalize_monadic, parse_slp,
    parse_tslp, EqCursor, EqIndex, GenMode, NextLinkIndex, NormalizedTslp, Slp, SpineSlp,
    SymbolId, TreeCursor, Tslp, UnrankedTree,
};

const DEFAULT_GUARD: u64 = 1_000_000;

#[derive(Parser)]
#[command(name = "gct", version, about = "Grammar-compressed tree & string tools")]
struct Cli {
    /// Mirror the report as a JSON object on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a grammar file and report kind, size and classification.
    Validate { path: PathBuf },
    /// Detailed statistics: normal-form census, spine/trie/index sizes.
    Stats { path: PathBuf },
    /// Evaluate the grammar and print the tree (or string) it derives.
    Decompress {
        path: PathBuf,
        /// Node guard; also settable via GCT_MAX_NODES (default 1000000).
        #[arg(long)]
        max_nodes: Option<u64>,
    },
    /// Convert a TSLP to the monadic a-d normal form and print it.
    Normalize { path: PathBuf },
    /// Run a navigation script from stdin against the grammar's tree.
    ///
    /// Commands, one per line: root | child <i> | parent | label | rank |
    /// mark <name> | goto <name> | eq <name> <name> (needs --eq).
    Nav {
        path: PathBuf,
        /// Use the equality-capable cursor pipeline and enable `eq`.
        #[arg(long)]
        eq: bool,
    },
    /// Compare the subtrees at two node addresses in O(1) per query.
    ///
    /// Each script file holds one move per line (`child <i>` / `parent`),
    /// applied from the root.
    Eq {
        path: PathBuf,
        script_a: PathBuf,
        script_b: PathBuf,
        /// Also print the precomputed split data per nonterminal.
        #[arg(long)]
        stats: bool,
    },
    /// String SLP utilities.
    #[command(subcommand)]
    Slp(SlpCmd),
    /// Encode or decode unranked trees (`label(child,...)` text files).
    Encode {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: EncodeMode,
        /// Invert: read an encoded tree and print the original.
        #[arg(long)]
        decode: bool,
    },
    /// Emit a benchmark grammar on stdout.
    Gen {
        #[arg(long)]
        mode: GenModeArg,
        /// Depth parameter; derived size is exponential in k.
        #[arg(short)]
        k: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random-walk or DFS the compressed tree and report step counters.
    Bench {
        path: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, value_enum, default_value_t = Walk::Random)]
        walk: Walk,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Walk with the equality cursor and run one subtree-equality
        /// query per step (reports LCA counts).
        #[arg(long)]
        eq: bool,
    },
    /// Summarize (or dump in DOT format) the L/R descent-trie forests.
    Tries {
        path: PathBuf,
        #[arg(long)]
        dot: bool,
    },
}

#[derive(Subcommand)]
enum SlpCmd {
    /// Print the i-th symbol (1-based) of the derived string.
    At { path: PathBuf, i: u64 },
    /// Print an SLP for the substring [i..=j] of the derived string.
    Slice { path: PathBuf, i: u64, j: u64 },
    /// Longest common prefix length of two SLP-compressed strings.
    Lcp { path_a: PathBuf, path_b: PathBuf },
    /// Random left/right walk with a string cursor; reports counters.
    Walk {
        path: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodeMode {
    Fcns,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenModeArg {
    Chain,
    Balanced,
    Random,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Walk {
    Random,
    Dfs,
}

enum Grammar {
    Tree(Tslp),
    Str(Slp),
}

struct Failure {
    code: u8,
    msg: String,
}

type CmdResult = Result<(), Failure>;

impl From<GrammarError> for Failure {
    fn from(e: GrammarError) -> Failure {
        let code = match e {
            GrammarError::GuardExceeded { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure {
            code: 1,
            msg: e.to_string(),
        }
    }
}

fn fail(msg: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        msg: msg.into(),
    }
}

fn main() -> ExitCode {
    // die quietly when the consumer of our stdout goes away (e.g. `| head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.cmd {
        Cmd::Validate { path } => cmd_validate(path, cli.json),
        Cmd::Stats { path } => cmd_stats(path, cli.json),
        Cmd::Decompress { path, max_nodes } => cmd_decompress(path, *max_nodes, cli.json),
        Cmd::Normalize { path } => cmd_normalize(path),
        Cmd::Nav { path, eq } => cmd_nav(path, *eq),
        Cmd::Eq {
            path,
            script_a,
            script_b,
            stats,
        } => cmd_eq(path, script_a, script_b, *stats, cli.json),
        Cmd::Slp(sub) => match sub {
            SlpCmd::At { path, i } => cmd_slp_at(path, *i, cli.json),
            SlpCmd::Slice { path, i, j } => cmd_slp_slice(path, *i, *j),
            SlpCmd::Lcp { path_a, path_b } => cmd_slp_lcp(path_a, path_b, cli.json),
            SlpCmd::Walk { path, steps, seed } => cmd_slp_walk(path, *steps, *seed, cli.json),
        },
        Cmd::Encode { path, mode, decode } => cmd_encode(path, *mode, *decode),
        Cmd::Gen { mode, k, seed } => cmd_gen(*mode, *k, *seed),
        Cmd::Bench {
            path,
            steps,
            walk,
            seed,
            eq,
        } => cmd_bench(path, *steps, *walk, *seed, *eq, cli.json),
        Cmd::Tries { path, dot } => cmd_tries(path, *dot, cli.json),
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    Ok(std::fs::read_to_string(path)?)
}

/// Tries the TSLP format first, then the SLP format; on a double
/// failure reports the error of the format the file resembles most.
fn load(path: &PathBuf) -> Result<Grammar, Failure> {
    let text = read(path)?;
    match parse_tslp(&text) {
        Ok(g) => Ok(Grammar::Tree(g)),
        Err(te) => match parse_slp(&text) {
            Ok(g) => Ok(Grammar::Str(g)),
            Err(se) => {
                let looks_tslp = text.contains('(') || text.contains("start");
                Err(Failure::from(if looks_tslp { te } else { se }))
            }
        },
    }
}

fn load_tslp(path: &PathBuf) -> Result<Tslp, Failure> {
    match load(path)? {
        Grammar::Tree(g) => Ok(g),
        Grammar::Str(_) => Err(fail("expected a TSLP, found a string SLP")),
    }
}

fn load_slp(path: &PathBuf) -> Result<Slp, Failure> {
    match load(path)? {
        Grammar::Tree(_) => Err(fail("expected a string SLP, found a TSLP")),
        Grammar::Str(g) => Ok(g),
    }
}

/// The start symbol of an SLP is the head of its first rule.
fn slp_start(g: &Slp) -> Result<SymbolId, Failure> {
    g.nonterminals
        .first()
        .copied()
        .ok_or_else(|| fail("SLP has no rules"))
}

fn guard_value(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("GCT_MAX_NODES")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(DEFAULT_GUARD)
}

fn classification(g: &Tslp) -> String {
    if classify(g).is_some() {
        "a-d normal form".into()
    } else {
        let max_rank = g
            .nonterminals
            .iter()
            .map(|&a| g.rank(a))
            .max()
            .unwrap_or(0);
        if max_rank <= 1 {
            "monadic".into()
        } else {
            format!("general (max nonterminal rank {max_rank})")
        }
    }
}

fn cmd_validate(path: &PathBuf, as_json: bool) -> CmdResult {
    match load(path)? {
        Grammar::Tree(g) => {
            let tree_size = derived_size(&g)?;
            if as_json {
                println!(
                    "{}",
                    json!({
                        "kind": "tslp",
                        "size": g.size(),
                        "rules": g.nonterminals.len(),
                        "tree_size": tree_size.to_string(),
                        "normal_form": classification(&g),
                    })
                );
            } else {
                println!("TSLP, size {}, tree size {}", g.size(), tree_size);
                println!("rules: {}", g.nonterminals.len());
                println!("normal form: {}", classification(&g));
            }
        }
        Grammar::Str(g) => {
            let start = slp_start(&g)?;
            let len = lengths(&g)?.get(start);
            if as_json {
                println!(
                    "{}",
                    json!({
                        "kind": "slp",
                        "size": g.size(),
                        "rules": g.nonterminals.len(),
                        "start": g.symbols.name(start),
                        "length": len,
                    })
                );
            } else {
                println!("SLP, |val({})| = {}", g.symbols.name(start), len);
                println!("size: {}", g.size());
                println!("rules: {}", g.nonterminals.len());
            }
        }
    }
    Ok(())
}

fn normalized(g: &Tslp) -> Result<(NormalizedTslp, SpineSlp), Failure> {
    let n = normalize_monadic(&monadize(g)?)?;
    let sp = derive_spine(&n)?;
    Ok((n, sp))
}

fn cmd_stats(path: &PathBuf, as_json: bool) -> CmdResult {
    match load(path)? {
        Grammar::Tree(g) => {
            let tree_size = derived_size(&g)?;
            let (n, sp) = normalized(&g)?;
            let forms = [Form::A, Form::B, Form::C, Form::D]
                .map(|f| n.n_with(f).len());
            let (l, r) = build_tries(&sp.h);
            let ix = EqIndex::new(&g)?;
            if as_json {
                println!(
                    "{}",
                    json!({
                        "kind": "tslp",
                        "size": g.size(),
                        "rules": g.nonterminals.len(),
                        "tree_size": tree_size.to_string(),
                        "normal_form": classification(&g),
                        "normalized_size": n.tslp.size(),
                        "forms": {"a": forms[0], "b": forms[1], "c": forms[2], "d": forms[3]},
                        "spine_slp_size": sp.h.size(),
                        "l_trie_nodes": l.len(),
                        "r_trie_nodes": r.len(),
                        "patricia_nodes": ix.patricia.node_count(),
                        "patricia_leaves": ix.patricia.leaf_count(),
                        "merged_nonterminals": ix.merged.iter().filter(|(k, v)| k != v).count(),
                    })
                );
            } else {
                println!("TSLP, size {}, tree size {}", g.size(), tree_size);
                println!("rules: {}", g.nonterminals.len());
                println!("normal form: {}", classification(&g));
                println!("normalized size: {}", n.tslp.size());
                println!(
                    "rule forms: a={} b={} c={} d={}",
                    forms[0], forms[1], forms[2], forms[3]
                );
                println!("spine SLP size: {}", sp.h.size());
                println!("L trie nodes: {}", l.len());
                println!("R trie nodes: {}", r.len());
                println!(
                    "patricia index: {} nodes, {} leaves",
                    ix.patricia.node_count(),
                    ix.patricia.leaf_count()
                );
                println!(
                    "value-equal nonterminals merged: {}",
                    ix.merged.iter().filter(|(k, v)| k != v).count()
                );
            }
        }
        Grammar::Str(g) => {
            let start = slp_start(&g)?;
            let len = lengths(&g)?.get(start);
            let bin = binarize_slp(&g)?;
            let (l, r) = build_tries(&bin);
            if as_json {
                println!(
                    "{}",
                    json!({
                        "kind": "slp",
                        "size": g.size(),
                        "rules": g.nonterminals.len(),
                        "length": len,
                        "binarized_size": bin.size(),
                        "l_trie_nodes": l.len(),
                        "r_trie_nodes": r.len(),
                    })
                );
            } else {
                println!("SLP, |val({})| = {}", g.symbols.name(start), len);
                println!("size: {}", g.size());
                println!("rules: {}", g.nonterminals.len());
                println!("binarized size: {}", bin.size());
                println!("L trie nodes: {}", l.len());
                println!("R trie nodes: {}", r.len());
            }
        }
    }
    Ok(())
}

fn cmd_decompress(path: &PathBuf, max_nodes: Option<u64>, as_json: bool) -> CmdResult {
    let guard = guard_value(max_nodes);
    match load(path)? {
        Grammar::Tree(g) => match eval_tslp(&g, g.start, guard) {
            Ok(tree) => {
                let text = tree.to_text(&g.symbols);
                if as_json {
                    println!("{}", json!({"tree": text, "nodes": tree.len()}));
                } else {
                    println!("{text}");
                }
                Ok(())
            }
            Err(GrammarError::GuardExceeded { .. }) => {
                let size = derived_size(&g)?;
                Err(Failure {
                    code: 2,
                    msg: format!("guard exceeded: tree has exactly {size} nodes, guard is {guard}"),
                })
            }
            Err(e) => Err(e.into()),
        },
        Grammar::Str(g) => {
            let start = slp_start(&g)?;
            match eval_slp(&g, start, guard) {
                Ok(word) => {
                    let text = string_text(&g, &word);
                    if as_json {
                        println!("{}", json!({"string": text, "length": word.len()}));
                    } else {
                        println!("{text}");
                    }
                    Ok(())
                }
                Err(GrammarError::GuardExceeded { .. }) => {
                    let len = lengths(&g)?.get(start);
                    Err(Failure {
                        code: 2,
                        msg: format!(
                            "guard exceeded: string has exactly {len} symbols, guard is {guard}"
                        ),
                    })
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn cmd_normalize(path: &PathBuf) -> CmdResult {
    let g = load_tslp(path)?;
    let (n, _) = normalized(&g)?;
    print!("{}", n.tslp.to_text());
    Ok(())
}

enum NavState {
    Plain {
        n: NormalizedTslp,
        sp: SpineSlp,
        cur: Option<TreeCursor>,
        marks: HashMap<String, TreeCursor>,
    },
    Eq {
        ix: Box<EqIndex>,
        cur: Option<EqCursor>,
        marks: HashMap<String, EqCursor>,
    },
}

fn cmd_nav(path: &PathBuf, with_eq: bool) -> CmdResult {
    let g = load_tslp(path)?;
    let mut state = if with_eq {
        NavState::Eq {
            ix: Box::new(EqIndex::new(&g)?),
            cur: None,
            marks: HashMap::new(),
        }
    } else {
        let (n, sp) = normalized(&g)?;
        NavState::Plain {
            n,
            sp,
            cur: None,
            marks: HashMap::new(),
        }
    };
    let mut script = String::new();
    std::io::stdin().read_to_string(&mut script)?;
    for line in script.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        println!("{}", nav_step(&mut state, line));
    }
    Ok(())
}

fn nav_step(state: &mut NavState, line: &str) -> String {
    let mut parts = line.split_whitespace();
    let cmd = parts.next().unwrap_or("");
    let args: Vec<&str> = parts.collect();
    let arg_index = |args: &[&str]| -> Result<usize, String> {
        args.first()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&i| i >= 1)
            .ok_or_else(|| "error: expected a child index >= 1".into())
    };
    macro_rules! need_cursor {
        ($cur:expr) => {
            match $cur.as_mut() {
                Some(c) => c,
                None => return "error: no cursor; run `root` first".into(),
            }
        };
    }
    match state {
        NavState::Plain { n, sp, cur, marks } => match cmd {
            "root" => {
                *cur = Some(TreeCursor::root(n, sp, n.tslp.start));
                "ok".into()
            }
            "child" => {
                let i = match arg_index(&args) {
                    Ok(i) => i,
                    Err(e) => return e,
                };
                let c = need_cursor!(cur);
                if c.child(n, sp, i) {
                    "ok".into()
                } else {
                    "undefined".into()
                }
            }
            "parent" => {
                let c = need_cursor!(cur);
                if c.parent(n, sp) {
                    "ok".into()
                } else {
                    "undefined".into()
                }
            }
            "label" => {
                let c = need_cursor!(cur);
                n.tslp.symbols.name(c.label(n, sp)).to_string()
            }
            "rank" => {
                let c = need_cursor!(cur);
                c.rank_of(n, sp).to_string()
            }
            "mark" => match (args.first(), cur.as_ref()) {
                (Some(name), Some(c)) => {
                    marks.insert(name.to_string(), c.clone());
                    "ok".into()
                }
                (None, _) => "error: mark needs a name".into(),
                (_, None) => "error: no cursor; run `root` first".into(),
            },
            "goto" => match args.first().and_then(|n| marks.get(*n)) {
                Some(c) => {
                    *cur = Some(c.clone());
                    "ok".into()
                }
                None => "error: unknown mark".into(),
            },
            "eq" => "error: `eq` needs the --eq pipeline".into(),
            other => format!("error: unknown command `{other}`"),
        },
        NavState::Eq { ix, cur, marks } => match cmd {
            "root" => {
                *cur = Some(EqCursor::root(ix));
                "ok".into()
            }
            "child" => {
                let i = match arg_index(&args) {
                    Ok(i) => i,
                    Err(e) => return e,
                };
                let c = need_cursor!(cur);
                if c.child(ix, i) {
                    "ok".into()
                } else {
                    "undefined".into()
                }
            }
            "parent" => {
                let c = need_cursor!(cur);
                if c.parent(ix) {
                    "ok".into()
                } else {
                    "undefined".into()
                }
            }
            "label" => {
                let c = need_cursor!(cur);
                ix.n.tslp.symbols.name(c.label(ix)).to_string()
            }
            "rank" => {
                let c = need_cursor!(cur);
                c.rank_of(ix).to_string()
            }
            "mark" => match (args.first(), cur.as_ref()) {
                (Some(name), Some(c)) => {
                    marks.insert(name.to_string(), c.clone());
                    "ok".into()
                }
                (None, _) => "error: mark needs a name".into(),
                (_, None) => "error: no cursor; run `root` first".into(),
            },
            "goto" => match args.first().and_then(|n| marks.get(*n)) {
                Some(c) => {
                    *cur = Some(c.clone());
                    "ok".into()
                }
                None => "error: unknown mark".into(),
            },
            "eq" => {
                let (Some(a), Some(b)) = (
                    args.first().and_then(|n| marks.get(*n)),
                    args.get(1).and_then(|n| marks.get(*n)),
                ) else {
                    return "error: eq needs two mark names".into();
                };
                match ix.subtree_eq(a, b) {
                    Ok(v) => v.to_string(),
                    Err(e) => format!("error: {e}"),
                }
            }
            other => format!("error: unknown command `{other}`"),
        },
    }
}

/// Applies a move-sequence file (`child <i>` / `parent`, one per line)
/// to a fresh root cursor.
fn apply_address(ix: &EqIndex, text: &str, which: &str) -> Result<EqCursor, Failure> {
    let mut c = EqCursor::root(ix);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line == "root" {
            continue;
        }
        let mut parts = line.split_whitespace();
        let moved = match (parts.next(), parts.next()) {
            (Some("child"), Some(i)) => {
                let i: usize = i
                    .parse()
                    .map_err(|_| fail(format!("{which}:{}: bad child index", lineno + 1)))?;
                c.child(ix, i)
            }
            (Some("parent"), None) => c.parent(ix),
            _ => {
                return Err(fail(format!(
                    "{which}:{}: expected `child <i>` or `parent`",
                    lineno + 1
                )))
            }
        };
        if !moved {
            return Err(fail(format!(
                "{which}:{}: move `{line}` is undefined here",
                lineno + 1
            )));
        }
    }
    Ok(c)
}

fn cmd_eq(
    path: &PathBuf,
    script_a: &PathBuf,
    script_b: &PathBuf,
    stats: bool,
    as_json: bool,
) -> CmdResult {
    let g = load_tslp(path)?;
    let ix = EqIndex::new(&g)?;
    let a = apply_address(&ix, &read(script_a)?, "script-a")?;
    let b = apply_address(&ix, &read(script_b)?, "script-b")?;
    let equal = ix.subtree_eq(&a, &b)?;
    if as_json {
        let mut splits = Vec::new();
        if stats {
            for &a in &ix.n.tslp.nonterminals {
                if let Some(s) = ix.splits.try_get(a) {
                    let sym = &ix.n.tslp.symbols;
                    splits.push(json!({
                        "nonterminal": sym.name(a),
                        "spine_length": s.len,
                        "s": s.s,
                        "a_prime": sym.name(s.a_prime),
                        "r": ix.n.tslp.rhs(s.r_sym).to_text(sym),
                    }));
                }
            }
        }
        println!(
            "{}",
            json!({"equal": equal, "lca_queries": ix.patricia.lca_queries(), "splits": splits})
        );
    } else {
        println!("{}", if equal { "equal" } else { "not-equal" });
        if stats {
            for &a in &ix.n.tslp.nonterminals {
                if let Some(s) = ix.splits.try_get(a) {
                    let sym = &ix.n.tslp.symbols;
                    println!(
                        "{}: s={} A'={} r={}",
                        sym.name(a),
                        s.s,
                        sym.name(s.a_prime),
                        ix.n.tslp.rhs(s.r_sym).to_text(sym),
                    );
                }
            }
        }
    }
    Ok(())
}

fn cmd_slp_at(path: &PathBuf, i: u64, as_json: bool) -> CmdResult {
    let g = load_slp(path)?;
    let start = slp_start(&g)?;
    let sym = symbol_at(&g, start, i)?;
    if as_json {
        println!("{}", json!({"position": i, "symbol": g.symbols.name(sym)}));
    } else {
        println!("{}", g.symbols.name(sym));
    }
    Ok(())
}

fn cmd_slp_slice(path: &PathBuf, i: u64, j: u64) -> CmdResult {
    let g = load_slp(path)?;
    let start = slp_start(&g)?;
    let (sub, sub_start) = substring_slp(&g, start, i, j)?;
    // print the start symbol's rule first (first-rule-is-start convention)
    print!("{}", reorder_slp_text(&sub, sub_start));
    Ok(())
}

fn reorder_slp_text(g: &Slp, start: SymbolId) -> String {
    let mut out = String::new();
    let mut order = vec![start];
    order.extend(g.nonterminals.iter().copied().filter(|&a| a != start));
    for a in order {
        out.push_str(g.symbols.name(a));
        out.push_str(" ->");
        for &s in g.rhs(a) {
            out.push(' ');
            out.push_str(g.symbols.name(s));
        }
        out.push('\n');
    }
    out
}

fn cmd_slp_lcp(path_a: &PathBuf, path_b: &PathBuf, as_json: bool) -> CmdResult {
    let ga = load_slp(path_a)?;
    let gb = load_slp(path_b)?;
    let len = lcp(&ga, slp_start(&ga)?, &gb, slp_start(&gb)?)?;
    if as_json {
        println!("{}", json!({"lcp": len}));
    } else {
        println!("{len}");
    }
    Ok(())
}

#[derive(Default)]
struct CounterStats {
    steps: u64,
    sum_ops: u64,
    max_pops: u64,
    max_pushes: u64,
    max_next_links: u64,
    max_depth: usize,
}

impl CounterStats {
    fn record(&mut self, c: gct::StepCounters, depth: usize) {
        self.steps += 1;
        self.sum_ops += c.pops + c.pushes;
        self.max_pops = self.max_pops.max(c.pops);
        self.max_pushes = self.max_pushes.max(c.pushes);
        self.max_next_links = self.max_next_links.max(c.next_links);
        self.max_depth = self.max_depth.max(depth);
    }

    fn mean_ops(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.sum_ops as f64 / self.steps as f64
        }
    }
}

fn print_counter_report(
    label: &str,
    st: &CounterStats,
    wall_ms: f64,
    extra: &[(&str, String)],
    as_json: bool,
) {
    if as_json {
        let mut obj = json!({
            "walk": label,
            "steps": st.steps,
            "wall_ms": wall_ms,
            "mean_stack_ops": st.mean_ops(),
            "max_pops": st.max_pops,
            "max_pushes": st.max_pushes,
            "max_next_links": st.max_next_links,
            "max_depth": st.max_depth,
        });
        for (k, v) in extra {
            obj[*k] = json!(v);
        }
        println!("{obj}");
    } else {
        println!("walk: {label}");
        println!("steps: {}", st.steps);
        println!("wall_ms: {wall_ms:.2}");
        println!("mean_stack_ops: {:.3}", st.mean_ops());
        println!("max_pops: {}", st.max_pops);
        println!("max_pushes: {}", st.max_pushes);
        println!("max_next_links: {}", st.max_next_links);
        println!("max_depth: {}", st.max_depth);
        for (k, v) in extra {
            println!("{k}: {v}");
        }
    }
}

fn cmd_slp_walk(path: &PathBuf, steps: u64, seed: u64, as_json: bool) -> CmdResult {
    let g = load_slp(path)?;
    let start = slp_start(&g)?;
    let bin = binarize_slp(&g)?;
    let bin_start = bin
        .symbols
        .lookup(g.symbols.name(start))
        .ok_or_else(|| fail("start symbol lost in binarization"))?;
    let idx = NextLinkIndex::new(&bin);
    let mut cursor = StringCursor::begin(&idx, bin_start);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = CounterStats::default();
    let t0 = Instant::now();
    for _ in 0..steps {
        if rng.gen_bool(0.5) {
            cursor.right(&bin, &idx);
        } else {
            cursor.left(&bin, &idx);
        }
        st.record(cursor.counters, cursor_depth(&cursor));
    }
    let wall = t0.elapsed().as_secs_f64() * 1e3;
    let sym = bin.symbols.name(cursor.symbol()).to_string();
    print_counter_report("string", &st, wall, &[("final_symbol", sym)], as_json);
    Ok(())
}

fn cursor_depth(c: &StringCursor) -> usize {
    c.stack.len()
}

fn cmd_encode(path: &PathBuf, mode: EncodeMode, decode: bool) -> CmdResult {
    let t = UnrankedTree::parse(&read(path)?)?;
    let out = match (mode, decode) {
        (EncodeMode::Fcns, false) => fcns_encode(&t)?,
        (EncodeMode::Fcns, true) => fcns_decode(&t)?,
        (EncodeMode::Bin, false) => bin_encode(&t)?,
        (EncodeMode::Bin, true) => bin_decode(&t)?,
    };
    println!("{}", out.to_text());
    Ok(())
}

fn cmd_gen(mode: GenModeArg, k: u32, seed: u64) -> CmdResult {
    let mode = match mode {
        GenModeArg::Chain => GenMode::Chain,
        GenModeArg::Balanced => GenMode::Balanced,
        GenModeArg::Random => GenMode::Random,
    };
    let g = generate(mode, k, seed)?;
    print!("{}", g.to_text());
    Ok(())
}

fn cmd_bench(
    path: &PathBuf,
    steps: u64,
    walk: Walk,
    seed: u64,
    with_eq: bool,
    as_json: bool,
) -> CmdResult {
    let g = load_tslp(path)?;
    if with_eq {
        return bench_eq(&g, steps, walk, seed, as_json);
    }
    let (n, sp) = normalized(&g)?;
    let mut c = TreeCursor::root(&n, &sp, n.tslp.start);
    let mut st = CounterStats::default();
    let t0 = Instant::now();
    match walk {
        Walk::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..steps {
                let r = c.rank_of(&n, &sp);
                let pick = rng.gen_range(0..=r);
                if pick == 0 {
                    c.parent(&n, &sp);
                } else {
                    c.child(&n, &sp, pick);
                }
                st.record(c.counters, c.entries.len());
            }
        }
        Walk::Dfs => {
            let guard = guard_value(None);
            dfs_walk(
                steps,
                guard,
                &mut st,
                |c: &mut TreeCursor| c.rank_of(&n, &sp),
                |c, i| c.child(&n, &sp, i),
                |c| c.parent(&n, &sp),
                |c| (c.counters, c.entries.len()),
                &mut c,
            )?;
        }
    }
    let wall = t0.elapsed().as_secs_f64() * 1e3;
    let label = if walk == Walk::Dfs { "dfs" } else { "random" };
    print_counter_report(label, &st, wall, &[], as_json);
    Ok(())
}

/// Full depth-first traversal via cursor moves, recording one counter
/// sample per edge traversal (at most `steps` samples if steps > 0).
#[allow(clippy::too_many_arguments)]
fn dfs_walk<C>(
    steps: u64,
    guard: u64,
    st: &mut CounterStats,
    rank: impl Fn(&mut C) -> usize,
    mut child: impl FnMut(&mut C, usize) -> bool,
    mut parent: impl FnMut(&mut C) -> bool,
    sample: impl Fn(&C) -> (gct::StepCounters, usize),
    c: &mut C,
) -> Result<(), Failure> {
    let mut path: Vec<usize> = vec![1];
    let mut visited: u64 = 1;
    loop {
        if steps > 0 && st.steps >= steps {
            return Ok(());
        }
        let r = rank(c);
        let next = *path.last().unwrap();
        if next <= r {
            assert!(child(c, next));
            let (counters, depth) = sample(c);
            st.record(counters, depth);
            *path.last_mut().unwrap() = next + 1;
            path.push(1);
            visited += 1;
            if visited > guard {
                return Err(GrammarError::GuardExceeded {
                    size: visited,
                    guard,
                }
                .into());
            }
        } else {
            path.pop();
            if path.is_empty() {
                return Ok(());
            }
            assert!(parent(c));
            let (counters, depth) = sample(c);
            st.record(counters, depth);
        }
    }
}

fn bench_eq(g: &Tslp, steps: u64, walk: Walk, seed: u64, as_json: bool) -> CmdResult {
    let ix = EqIndex::new(g)?;
    let root = EqCursor::root(&ix);
    let mut c = EqCursor::root(&ix);
    let mut st = CounterStats::default();
    let mut eq_queries = 0u64;
    let t0 = Instant::now();
    match walk {
        Walk::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..steps {
                let r = c.rank_of(&ix);
                let pick = rng.gen_range(0..=r);
                if pick == 0 {
                    c.parent(&ix);
                } else {
                    c.child(&ix, pick);
                }
                st.record(c.counters, c.entries.len());
                ix.subtree_eq(&c, &root).map_err(Failure::from)?;
                eq_queries += 1;
            }
        }
        Walk::Dfs => {
            let guard = guard_value(None);
            dfs_walk(
                steps,
                guard,
                &mut st,
                |c: &mut EqCursor| c.rank_of(&ix),
                |c, i| c.child(&ix, i),
                |c| c.parent(&ix),
                |c| (c.counters, c.entries.len()),
                &mut c,
            )?;
        }
    }
    let wall = t0.elapsed().as_secs_f64() * 1e3;
    let label = if walk == Walk::Dfs { "dfs" } else { "random" };
    let extra = [
        ("eq_queries", eq_queries.to_string()),
        ("lca_queries", ix.patricia.lca_queries().to_string()),
    ];
    print_counter_report(label, &st, wall, &extra, as_json);
    Ok(())
}

fn cmd_tries(path: &PathBuf, dot: bool, as_json: bool) -> CmdResult {
    let (h, symbols) = match load(path)? {
        Grammar::Tree(g) => {
            let (_, sp) = normalized(&g)?;
            let symbols = sp.h.symbols.clone();
            (sp.h, symbols)
        }
        Grammar::Str(g) => {
            let bin = binarize_slp(&g)?;
            let symbols = bin.symbols.clone();
            (bin, symbols)
        }
    };
    let (l, r) = build_tries(&h);
    if dot {
        println!("// L forest");
        print!("{}", forest_dot(&l, &symbols));
        println!("// R forest");
        print!("{}", forest_dot(&r, &symbols));
    } else if as_json {
        println!(
            "{}",
            json!({"l_trie_nodes": l.len(), "r_trie_nodes": r.len()})
        );
    } else {
        println!("L trie nodes: {}", l.len());
        println!("R trie nodes: {}", r.len());
    }
    Ok(())
}
