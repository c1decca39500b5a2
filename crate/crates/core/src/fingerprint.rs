use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::slp::{lengths, LengthTable, Slp};
use crate::symbol::SymbolId;

pub const P: u128 = (1u128 << 61) - 1;

#[inline]
pub fn mod_p(x: u128) -> u64 {
    let r = (x & P) + (x >> 61);
    let r = if r >= P { r - P } else { r };
    r as u64
}

#[inline]
pub fn mul(a: u64, b: u64) -> u64 {
    mod_p(a as u128 * b as u128)
}

#[inline]
pub fn add(a: u64, b: u64) -> u64 {
    let s = a as u128 + b as u128;
    (if s >= P { s - P } else { s }) as u64
}

pub fn pow(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mul(r, b);
        }
        b = mul(b, b);
        e >>= 1;
    }
    r
}

/// Rolling polynomial fingerprint of a string over SymbolId codes:
/// fp(s1..sn) = sum si * base^(n-i) mod p, with fp(uv) =
/// fp(u)*base^|v| + fp(v). Codes are symbol ids shifted by 1 so no
/// symbol hashes to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fp {
    pub hash: u64,
    /// base^len, so concatenation needs no length table lookups.
    pub shift: u64,
    pub len: u64,
}

impl Fp {
    pub const EMPTY: Fp = Fp {
        hash: 0,
        shift: 1,
        len: 0,
    };
}

#[derive(Debug, Clone)]
pub struct Fingerprinter {
    pub base: u64,
    /// fp of val(A) for every nonterminal, fp of the 1-letter string for
    /// every terminal.
    table: Vec<Fp>,
    pub lengths: LengthTable,
}

impl Fingerprinter {
    /// Builds fingerprints bottom-up. `seed` picks the random base;
    /// terminal codes default to symbol ids.
    pub fn new(g: &Slp, seed: u64) -> crate::error::Result<Fingerprinter> {
        let codes: Vec<u64> = g.symbols.ids().map(Self::code).collect();
        Self::with_codes(g, seed, &codes)
    }

    /// Like `new`, but with caller-chosen per-symbol codes, so two
    /// grammars over different symbol tables can hash compatibly.
    pub fn with_codes(g: &Slp, seed: u64, codes: &[u64]) -> crate::error::Result<Fingerprinter> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: u64 = rng.gen_range(2..P as u64 - 1);
        let lens = lengths(g)?;
        let mut table = vec![Fp::EMPTY; g.symbols.len()];
        for id in g.symbols.ids() {
            if !g.is_nonterminal(id) {
                table[id.idx()] = Fp {
                    hash: codes[id.idx()],
                    shift: base,
                    len: 1,
                };
            }
        }
        for &a in &g.topo {
            let mut fp = Fp::EMPTY;
            for &s in g.rhs(a) {
                fp = concat_fp(fp, table[s.idx()]);
            }
            table[a.idx()] = fp;
        }
        Ok(Fingerprinter {
            base,
            table,
            lengths: lens,
        })
    }

    #[inline]
    fn code(s: SymbolId) -> u64 {
        s.0 as u64 + 1
    }

    pub fn of(&self, s: SymbolId) -> Fp {
        self.table[s.idx()]
    }

    /// Fingerprint of val(a)[..n] (first n letters), by walking down the
    /// derivation, O(depth) per call.
    pub fn prefix(&self, g: &Slp, a: SymbolId, n: u64) -> Fp {
        debug_assert!(n <= self.lengths.get(a));
        let mut acc = Fp::EMPTY;
        let mut rest = n;
        let mut cur = a;
        while rest > 0 {
            if rest == self.lengths.get(cur) {
                acc = concat_fp(acc, self.of(cur));
                break;
            }
            let body = g.rhs(cur);
            let mut advanced = false;
            for &s in body {
                let l = self.lengths.get(s);
                if rest >= l {
                    acc = concat_fp(acc, self.of(s));
                    rest -= l;
                } else {
                    cur = s;
                    advanced = true;
                    break;
                }
            }
            if rest == 0 {
                break;
            }
            debug_assert!(advanced, "terminal has length 1, always consumed");
        }
        acc
    }

    /// Fingerprint of val(a)[i..=j] (1-based, inclusive), from two
    /// prefix fingerprints: fp(s[..j]) = fp(s[..i-1])*base^(j-i+1) +
    /// fp(s[i-1..j]).
    pub fn range(&self, g: &Slp, a: SymbolId, i: u64, j: u64) -> Fp {
        debug_assert!(i >= 1);
        if i > j {
            return Fp::EMPTY;
        }
        let pj = self.prefix(g, a, j);
        let pi = self.prefix(g, a, i - 1);
        let len = j - i + 1;
        let shift = pow(self.base, len);
        Fp {
            hash: sub(pj.hash, mul(pi.hash, shift)),
            shift,
            len,
        }
    }
}

#[inline]
pub fn sub(a: u64, b: u64) -> u64 {
    add(a, P as u64 - b)
}

/// fp(uv) from fp(u), fp(v).
#[inline]
pub fn concat_fp(u: Fp, v: Fp) -> Fp {
    Fp {
        hash: add(mul(u.hash, v.shift), v.hash),
        shift: mul(u.shift, v.shift),
        len: u.len + v.len,
    }
}

/// Direct fingerprint of an explicit string, for tests and small inputs.
pub fn fp_of_slice(base: u64, s: &[SymbolId]) -> Fp {
    let mut fp = Fp::EMPTY;
    for &c in s {
        fp = concat_fp(
            fp,
            Fp {
                hash: c.0 as u64 + 1,
                shift: base,
                len: 1,
            },
        );
    }
    fp
}
