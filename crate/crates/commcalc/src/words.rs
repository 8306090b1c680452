//! Words in the free group `F_m`: parsing, free reduction, group operations
//! and exact identity checking.
//!
//! A [`Word`] is stored run-length encoded as `(generator, exponent)` pairs
//! and is always freely reduced, so structural equality is free-group
//! equality. Generators are 0-based in code; the text syntax is 1-based
//! (`x1`, `x2`, ... with `a`..`z` as aliases for `x1`..`x26`).
//!
//! Brackets follow the left-normed convention `h^g = g^-1 h g` and
//! `[g,h] = g^-1 h^-1 g h`; `[u,v,w]` means `[[u,v],w]`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Hard cap on the reduced letter length of any constructed word.
///
/// Instantiated generator families nest conjugates deeply; beyond this the
/// computation is out of the intended envelope and we fail loudly instead
/// of thrashing.
pub const MAX_WORD_LETTERS: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum WordError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("generator x{} out of range for rank {rank}", index + 1)]
    GeneratorOutOfRange { index: usize, rank: usize },
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("word length cap exceeded ({len} letters, cap {cap})")]
    LengthCap { len: u64, cap: u64 },
    #[error("unbound variable `{0}` in pattern")]
    UnboundVariable(String),
    #[error("exponent out of range")]
    ExponentOverflow,
}

/// A freely reduced word in the free group on `rank` generators.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    rank: usize,
    runs: Vec<(usize, i64)>,
}

fn push_reduced(runs: &mut Vec<(usize, i64)>, gen: usize, exp: i64) {
    if exp == 0 {
        return;
    }
    match runs.last_mut() {
        Some((g, e)) if *g == gen => {
            *e += exp;
            if *e == 0 {
                runs.pop();
            }
        }
        _ => runs.push((gen, exp)),
    }
}

impl Word {
    pub fn identity(rank: usize) -> Word {
        Word {
            rank,
            runs: Vec::new(),
        }
    }

    /// The single generator `x_{gen+1}`.
    pub fn generator(rank: usize, gen: usize) -> Result<Word, WordError> {
        if gen >= rank {
            return Err(WordError::GeneratorOutOfRange { index: gen, rank });
        }
        Ok(Word {
            rank,
            runs: vec![(gen, 1)],
        })
    }

    /// Builds a reduced word from arbitrary `(generator, exponent)` runs.
    pub fn from_runs<I>(rank: usize, runs: I) -> Result<Word, WordError>
    where
        I: IntoIterator<Item = (usize, i64)>,
    {
        let mut out = Vec::new();
        for (g, e) in runs {
            if g >= rank {
                return Err(WordError::GeneratorOutOfRange { index: g, rank });
            }
            push_reduced(&mut out, g, e);
        }
        let w = Word { rank, runs: out };
        w.check_cap(MAX_WORD_LETTERS)?;
        Ok(w)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn runs(&self) -> &[(usize, i64)] {
        &self.runs
    }

    pub fn is_identity(&self) -> bool {
        self.runs.is_empty()
    }

    /// Reduced length, counting `a^3` as three letters.
    pub fn letters(&self) -> u64 {
        self.runs.iter().map(|&(_, e)| e.unsigned_abs()).sum()
    }

    fn check_cap(&self, cap: u64) -> Result<(), WordError> {
        let len = self.letters();
        if len > cap {
            return Err(WordError::LengthCap { len, cap });
        }
        Ok(())
    }

    fn require_same_rank(&self, other: &Word) -> Result<(), WordError> {
        if self.rank != other.rank {
            return Err(WordError::RankMismatch(self.rank, other.rank));
        }
        Ok(())
    }

    pub fn mul(&self, rhs: &Word) -> Result<Word, WordError> {
        self.mul_capped(rhs, MAX_WORD_LETTERS)
    }

    pub fn mul_capped(&self, rhs: &Word, cap: u64) -> Result<Word, WordError> {
        self.require_same_rank(rhs)?;
        let mut runs = self.runs.clone();
        for &(g, e) in &rhs.runs {
            push_reduced(&mut runs, g, e);
        }
        let w = Word {
            rank: self.rank,
            runs,
        };
        w.check_cap(cap)?;
        Ok(w)
    }

    pub fn inverse(&self) -> Word {
        let runs = self.runs.iter().rev().map(|&(g, e)| (g, -e)).collect();
        Word {
            rank: self.rank,
            runs,
        }
    }

    pub fn pow(&self, n: i64) -> Result<Word, WordError> {
        if n == 0 || self.is_identity() {
            return Ok(Word::identity(self.rank));
        }
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let times = n.unsigned_abs();
        if times == 1 {
            return Ok(base);
        }
        // Split base = u * core * u^-1 with core cyclically reduced; then
        // base^k = u * core^k * u^-1 and the k copies of core concatenate
        // with no cancellation, so the length is exact up front and the
        // build is linear.
        let mut core = base.runs.clone();
        let mut conj: Vec<(usize, i64)> = Vec::new();
        loop {
            if core.len() < 2 {
                break;
            }
            let (fg, fe) = core[0];
            let (lg, le) = *core.last().unwrap();
            if fg != lg || (fe > 0) == (le > 0) {
                break;
            }
            let step = if fe > 0 { 1 } else { -1 };
            let t = fe.abs().min(le.abs());
            push_reduced(&mut conj, fg, step * t);
            core[0].1 -= step * t;
            core.last_mut().unwrap().1 += step * t;
            if core.last().unwrap().1 == 0 {
                core.pop();
            }
            if core[0].1 == 0 {
                core.remove(0);
            }
        }
        let core_len: u64 = core.iter().map(|&(_, e)| e.unsigned_abs()).sum();
        let conj_len: u64 = conj.iter().map(|&(_, e)| e.unsigned_abs()).sum();
        let total = 2 * conj_len + core_len.saturating_mul(times);
        if total > MAX_WORD_LETTERS {
            return Err(WordError::LengthCap {
                len: total,
                cap: MAX_WORD_LETTERS,
            });
        }
        let mut runs = conj.clone();
        for _ in 0..times {
            for &(g, e) in &core {
                push_reduced(&mut runs, g, e);
            }
        }
        for &(g, e) in conj.iter().rev() {
            push_reduced(&mut runs, g, -e);
        }
        Ok(Word {
            rank: self.rank,
            runs,
        })
    }

    /// `self^g = g^-1 * self * g`.
    pub fn conjugate(&self, by: &Word) -> Result<Word, WordError> {
        by.inverse().mul(self)?.mul(by)
    }

    /// `[self, h] = self^-1 h^-1 self h`.
    pub fn commutator(&self, h: &Word) -> Result<Word, WordError> {
        self.inverse().mul(&h.inverse())?.mul(self)?.mul(h)
    }

    /// Left-normed bracket `[w1, w2, ..., wn] = [[w1, w2], ..., wn]`.
    /// A single argument is returned unchanged.
    pub fn left_normed(words: &[Word]) -> Result<Word, WordError> {
        let mut iter = words.iter();
        let first = iter.next().expect("left_normed needs at least one word");
        let mut acc = first.clone();
        for w in iter {
            acc = acc.commutator(w)?;
        }
        Ok(acc)
    }

    /// Exponent sums per generator.
    pub fn abelianization(&self) -> Vec<i64> {
        let mut v = vec![0i64; self.rank];
        for &(g, e) in &self.runs {
            v[g] += e;
        }
        v
    }

    /// Parses the word grammar (see the crate documentation). `1` denotes
    /// the identity.
    pub fn parse(text: &str, rank: usize) -> Result<Word, WordError> {
        let mut p = Parser {
            bytes: text.as_bytes(),
            pos: 0,
            rank,
            depth: 0,
        };
        let w = p.word()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.err("trailing input"));
        }
        Ok(w)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({})", self)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.runs.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for &(g, e) in &self.runs {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "{}", gen_name(g, self.rank))?;
            if e != 1 {
                write!(f, "^{}", e)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn gen_name(gen: usize, rank: usize) -> String {
    if rank <= 26 {
        ((b'a' + gen as u8) as char).to_string()
    } else {
        format!("x{}", gen + 1)
    }
}

/// Exact free-group equality of two reduced words.
pub fn verify_identity(lhs: &Word, rhs: &Word) -> Result<bool, WordError> {
    lhs.require_same_rank(rhs)?;
    Ok(lhs == rhs)
}

const MAX_PARSE_DEPTH: usize = 256;

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    rank: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> WordError {
        WordError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> Result<(), WordError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", b as char)))
        }
    }

    fn word(&mut self) -> Result<Word, WordError> {
        self.depth += 1;
        if self.depth > MAX_PARSE_DEPTH {
            return Err(self.err("expression nested too deeply"));
        }
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let f = self.factor()?;
            acc = acc.mul(&f)?;
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Word, WordError> {
        let atom = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            match self.peek() {
                Some(b'(') => {
                    self.pos += 1;
                    let by = self.word()?;
                    self.eat(b')')?;
                    atom.conjugate(&by)
                }
                Some(c) if c == b'-' || c.is_ascii_digit() => {
                    let n = self.integer()?;
                    atom.pow(n)
                }
                _ => Err(self.err("expected integer or `(` after `^`")),
            }
        } else {
            Ok(atom)
        }
    }

    fn atom(&mut self) -> Result<Word, WordError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let w = self.word()?;
                self.eat(b')')?;
                Ok(w)
            }
            Some(b'[') => {
                self.pos += 1;
                let mut parts = vec![self.word()?];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    parts.push(self.word()?);
                }
                self.eat(b']')?;
                Word::left_normed(&parts)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(Word::identity(self.rank))
            }
            Some(b'x') => {
                self.pos += 1;
                let n = self.integer()?;
                if n < 1 {
                    return Err(self.err("generator index must be >= 1"));
                }
                Word::generator(self.rank, (n - 1) as usize)
            }
            Some(c) if c.is_ascii_lowercase() => {
                self.pos += 1;
                Word::generator(self.rank, (c - b'a') as usize)
            }
            _ => Err(self.err("expected generator, `(`, `[` or `1`")),
        }
    }

    fn integer(&mut self) -> Result<i64, WordError> {
        self.skip_ws();
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.err("expected integer"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse::<i64>()
            .map_err(|_| WordError::ExponentOverflow)
    }
}

/// An expression tree over generators and named variables; instantiating all
/// variables with words yields a word.
#[derive(Clone, Debug)]
pub enum Pattern {
    Identity,
    Gen(usize),
    Var(String),
    Inverse(Box<Pattern>),
    Product(Vec<Pattern>),
    Power(Box<Pattern>, i64),
    /// `Conjugate(x, g)` is `x^g = g^-1 x g`.
    Conjugate(Box<Pattern>, Box<Pattern>),
    /// Left-normed bracket over two or more entries.
    Bracket(Vec<Pattern>),
}

impl Pattern {
    pub fn var(name: &str) -> Pattern {
        Pattern::Var(name.to_string())
    }

    pub fn substitute(
        &self,
        rank: usize,
        bindings: &HashMap<String, Word>,
    ) -> Result<Word, WordError> {
        match self {
            Pattern::Identity => Ok(Word::identity(rank)),
            Pattern::Gen(g) => Word::generator(rank, *g),
            Pattern::Var(name) => match bindings.get(name) {
                Some(w) if w.rank() == rank => Ok(w.clone()),
                Some(w) => Err(WordError::RankMismatch(w.rank(), rank)),
                None => Err(WordError::UnboundVariable(name.clone())),
            },
            Pattern::Inverse(p) => Ok(p.substitute(rank, bindings)?.inverse()),
            Pattern::Product(ps) => {
                let mut acc = Word::identity(rank);
                for p in ps {
                    acc = acc.mul(&p.substitute(rank, bindings)?)?;
                }
                Ok(acc)
            }
            Pattern::Power(p, n) => p.substitute(rank, bindings)?.pow(*n),
            Pattern::Conjugate(x, g) => x
                .substitute(rank, bindings)?
                .conjugate(&g.substitute(rank, bindings)?),
            Pattern::Bracket(ps) => {
                let words: Vec<Word> = ps
                    .iter()
                    .map(|p| p.substitute(rank, bindings))
                    .collect::<Result<_, _>>()?;
                Word::left_normed(&words)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(text: &str, rank: usize) -> Word {
        Word::parse(text, rank).unwrap()
    }

    #[test]
    fn parses_literal_commutator() {
        let lhs = w("a*b*a^-1*b^-1", 2);
        assert_eq!(lhs.runs(), &[(0, 1), (1, 1), (0, -1), (1, -1)]);
    }

    #[test]
    fn bracket_is_left_normed() {
        // [b,a] = b^-1 a^-1 b a
        assert_eq!(w("[b,a]", 2).runs(), &[(1, -1), (0, -1), (1, 1), (0, 1)]);
        assert_eq!(w("[b,a,a]", 2), w("[[b,a],a]", 2));
    }

    #[test]
    fn group_op_basics() {
        let a = w("a", 2);
        let b = w("b", 2);
        assert!(a.commutator(&a).unwrap().is_identity());
        assert_eq!(a.conjugate(&b).unwrap(), w("b^-1*a*b", 2));
        assert_eq!(w("a*b", 2).inverse(), w("b^-1*a^-1", 2));
    }

    #[test]
    fn reduction_merges_runs() {
        assert_eq!(w("a^2*a^-1*b*b", 2), w("a*b^2", 2));
        assert!(w("a*a^-1", 2).is_identity());
        assert_eq!(w("(a*b)^(b)", 2), w("b^-1*a*b*b", 2));
        assert_eq!(w("a^3", 2).letters(), 3);
    }

    #[test]
    fn parse_round_trips_display() {
        for text in ["a*b^-2*a", "[b,a]", "(a*b)^3", "x1*x2^-1", "1"] {
            let word = w(text, 2);
            assert_eq!(w(&word.to_string(), 2), word);
        }
    }

    #[test]
    fn parser_depth_guard() {
        let deep = format!("{}a{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(matches!(
            Word::parse(&deep, 2),
            Err(WordError::Syntax { .. })
        ));
        let fine = format!("{}a{}", "(".repeat(100), ")".repeat(100));
        assert_eq!(Word::parse(&fine, 2).unwrap(), w("a", 2));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            Word::parse("c", 2),
            Err(WordError::GeneratorOutOfRange { .. })
        ));
        assert!(matches!(
            Word::parse("a*", 2),
            Err(WordError::Syntax { .. })
        ));
        assert!(matches!(
            Word::parse("[a b]", 2),
            Err(WordError::Syntax { .. })
        ));
        assert!(matches!(Word::parse("", 2), Err(WordError::Syntax { .. })));
    }

    #[test]
    fn rank_mismatch_detected() {
        let a2 = w("a", 2);
        let a3 = w("a", 3);
        assert!(matches!(a2.mul(&a3), Err(WordError::RankMismatch(2, 3))));
    }

    #[test]
    fn substitute_pattern() {
        let mut bind = HashMap::new();
        bind.insert("g".to_string(), w("a", 2));
        bind.insert("h".to_string(), w("b", 2));
        let pat = Pattern::Bracket(vec![
            Pattern::var("g"),
            Pattern::var("h"),
            Pattern::var("h"),
            Pattern::var("h"),
        ]);
        assert_eq!(pat.substitute(2, &bind).unwrap(), w("[a,b,b,b]", 2));

        let mut bind2 = HashMap::new();
        bind2.insert("x".to_string(), w("a", 2));
        bind2.insert("y".to_string(), Word::identity(2));
        let pat2 = Pattern::Conjugate(Box::new(Pattern::var("x")), Box::new(Pattern::var("y")));
        assert_eq!(pat2.substitute(2, &bind2).unwrap(), w("a", 2));

        let pat3 = Pattern::Bracket(vec![
            Pattern::var("m"),
            Pattern::Conjugate(Box::new(Pattern::var("m")), Box::new(Pattern::var("g"))),
        ]);
        let mut bind3 = HashMap::new();
        bind3.insert("m".to_string(), w("a", 2));
        bind3.insert("g".to_string(), w("b", 2));
        assert_eq!(pat3.substitute(2, &bind3).unwrap(), w("[a, a^(b)]", 2));

        let unbound = Pattern::var("zz").substitute(2, &HashMap::new());
        assert!(matches!(unbound, Err(WordError::UnboundVariable(_))));
    }

    #[test]
    fn word_length_cap() {
        let a = w("a", 1);
        let big = a.pow(1000).unwrap();
        assert!(matches!(
            big.mul_capped(&big, 1500),
            Err(WordError::LengthCap {
                len: 2000,
                cap: 1500
            })
        ));
        assert!(matches!(a.pow(i64::MAX), Err(WordError::LengthCap { .. })));
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        // Includes conjugate-shaped words, where powering collapses.
        for text in ["a*b", "b^-1*a*b", "a*b*a^-1", "[b,a]", "a^2*b*a^-2", "a"] {
            let word = w(text, 2);
            for n in [-5i64, -2, -1, 0, 1, 2, 3, 7] {
                let direct = word.pow(n).unwrap();
                let base = if n < 0 { word.inverse() } else { word.clone() };
                let mut slow = Word::identity(2);
                for _ in 0..n.unsigned_abs() {
                    slow = slow.mul(&base).unwrap();
                }
                assert_eq!(direct, slow, "{}^{}", text, n);
            }
        }
        // Conjugate towers power in linear time: (w a w^-1)^k = w a^k w^-1.
        let tower = w("b^-1*a*b", 2).pow(100_000).unwrap();
        assert_eq!(tower, w("b^-1*a^100000*b", 2));
    }
}
