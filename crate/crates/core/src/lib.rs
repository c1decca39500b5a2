pub mod encodings;
pub mod equality;
pub mod error;
pub mod fingerprint;
pub mod generate;
pub mod next_link;
pub mod normalize;
pub mod slp;
pub mod slp_algorithms;
pub mod string_cursor;
pub mod symbol;
pub mod tree;
pub mod tree_cursor;
pub mod tslp;

pub use encodings::{bin_decode, bin_encode, fcns_decode, fcns_encode, BinNav, UnrankedTree};
pub use equality::{
    build_patricia, patricia_from_sorted, precompute_splits, reduce_grammar, EqCursor, EqIndex,
    PatriciaIndex, ReducedTslp, SpineSplit, SplitTable,
};
pub use error::{GrammarError, Result};
pub use generate::{derived_size, generate, GenMode};
pub use next_link::{build_tries, LcaIndex, NextLinkIndex, SideIndex, TrieForest, Triple};
pub use normalize::{classify, monadize, normalize_monadic, Form, NormalizedTslp};
pub use slp::{binarize_slp, eval_slp, parse_slp, Slp};
pub use slp_algorithms::{lcp, preorder_slp, substring_slp, symbol_at, tslp_equal};
pub use string_cursor::{StackTriple, StepCounters, StringCursor};
pub use symbol::{Symbol, SymbolId, SymbolKind, SymbolTable};
pub use tree::{Tree, TreeBuilder};
pub use tree_cursor::{derive_spine, dfs_preorder, m_triples, SpineSlp, TreeCursor};
pub use tslp::{eval_term, eval_tslp, parse_tslp, Term, Tslp};
