//! Milnor mu-bar invariants of longitude presentations.
//!
//! A [`LinkPresentation`] is the algebraic residue of a link: component
//! count `m`, truncation class `q`, and one longitude word per component in
//! the meridian generators. The invariant `mu-bar(i_1 ... i_s i)` is the
//! coefficient of `X_{i_1} ... X_{i_s}` in the Magnus expansion of the
//! `i`-th longitude, reduced modulo the gcd of the shorter invariants over
//! subsequences of the multi-index.
//!
//! The module also converts between mu-bar values and commutator numbers
//! `E(c; l_i)` (the basic-commutator exponents of the longitudes), checks
//! the complete relation set on commutator numbers against cyclic symmetry,
//! counts independent invariants via Witt numbers, classifies multi-indices
//! by extractability, and emits the quotient-group presentation.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use thiserror::Error;

use crate::hall::{witt_count, HallError};
use crate::magnus::{expand, Monomial, Series, SeriesError};
use crate::nilpotent::{ExponentVector, NfError, NilpotentContext};
use crate::words::{gen_name, Word, WordError};

#[derive(Debug, Error)]
pub enum MuError {
    #[error("presentation error: {0}")]
    Presentation(String),
    #[error("multi-index length {len} out of range (need 2 <= len <= q-1 = {max})")]
    LengthOutOfRange { len: usize, max: usize },
    #[error("index {0} out of range for {1} components")]
    IndexOutOfRange(usize, usize),
    #[error("a lower mu-bar invariant of length {0} is nonzero")]
    LowerMuNonzero(usize),
    #[error("extractability classification requires k >= 1")]
    KMustBePositive,
    #[error("class q={q} too small: need q > {need}")]
    ClassTooSmall { q: usize, need: usize },
    #[error(
        "context (rank {ctx_rank}, class {ctx_class}) does not match presentation (m={m}, q={q})"
    )]
    ContextMismatch {
        ctx_rank: usize,
        ctx_class: usize,
        m: usize,
        q: usize,
    },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Nf(#[from] NfError),
    #[error(transparent)]
    Hall(#[from] HallError),
}

/// Longitude words of an `m`-component link, read modulo `gamma_q`.
#[derive(Clone, Debug)]
pub struct LinkPresentation {
    pub components: usize,
    pub class: usize,
    pub longitudes: Vec<Word>,
}

impl LinkPresentation {
    pub fn new(
        components: usize,
        class: usize,
        longitudes: Vec<Word>,
    ) -> Result<LinkPresentation, MuError> {
        if components == 0 {
            return Err(MuError::Presentation("need at least one component".into()));
        }
        if class < 2 {
            return Err(MuError::Presentation("need q >= 2".into()));
        }
        if longitudes.len() != components {
            return Err(MuError::Presentation(format!(
                "expected {} longitudes, got {}",
                components,
                longitudes.len()
            )));
        }
        for l in &longitudes {
            if l.rank() != components {
                return Err(MuError::Presentation(format!(
                    "longitude rank {} does not match m={}",
                    l.rank(),
                    components
                )));
            }
        }
        Ok(LinkPresentation {
            components,
            class,
            longitudes,
        })
    }

    /// Parses the line-oriented format `m=<int>`, `q=<int>`,
    /// `l<i>=<word>`; `/` separates inline fields, `#` starts a comment.
    pub fn parse(text: &str) -> Result<LinkPresentation, MuError> {
        let mut m: Option<usize> = None;
        let mut q: Option<usize> = None;
        let mut longs: BTreeMap<usize, String> = BTreeMap::new();
        for raw in text.split(['\n', '/']) {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(MuError::Presentation(format!(
                    "expected key=value, got `{}`",
                    line
                )));
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "m" => {
                    m = Some(value.parse().map_err(|_| {
                        MuError::Presentation(format!("bad component count `{}`", value))
                    })?)
                }
                "q" => {
                    q = Some(
                        value
                            .parse()
                            .map_err(|_| MuError::Presentation(format!("bad class `{}`", value)))?,
                    )
                }
                _ if key.starts_with('l') => {
                    let i: usize = key[1..].parse().map_err(|_| {
                        MuError::Presentation(format!("bad longitude key `{}`", key))
                    })?;
                    if longs.insert(i, value.to_string()).is_some() {
                        return Err(MuError::Presentation(format!("duplicate longitude l{}", i)));
                    }
                }
                _ => return Err(MuError::Presentation(format!("unknown key `{}`", key))),
            }
        }
        let m = m.ok_or_else(|| MuError::Presentation("missing m=".into()))?;
        let q = q.ok_or_else(|| MuError::Presentation("missing q=".into()))?;
        let mut longitudes = Vec::with_capacity(m);
        for i in 1..=m {
            let text = longs
                .remove(&i)
                .ok_or_else(|| MuError::Presentation(format!("missing longitude l{}", i)))?;
            longitudes.push(Word::parse(&text, m)?);
        }
        if let Some((&i, _)) = longs.iter().next() {
            return Err(MuError::Presentation(format!(
                "longitude l{} exceeds m={}",
                i, m
            )));
        }
        LinkPresentation::new(m, q, longitudes)
    }
}

/// Which subsequence family feeds the indeterminacy gcd.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DeltaMode {
    /// Order-preserving proper subsequences of the multi-index.
    Subsequences,
    /// Additionally closed under cyclic permutation of each subsequence
    /// (Milnor's original convention).
    MilnorCyclic,
}

/// One mu-bar value: the raw Magnus coefficient, the indeterminacy modulus,
/// and the canonical residue (in `[0, modulus)` when the modulus is
/// positive).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MuValue {
    pub index: Vec<usize>,
    pub raw: BigInt,
    pub modulus: BigInt,
    pub residue: BigInt,
}

impl MuValue {
    fn reduce(index: Vec<usize>, raw: BigInt, modulus: BigInt) -> MuValue {
        let residue = if modulus.is_zero() {
            raw.clone()
        } else {
            raw.mod_floor(&modulus)
        };
        MuValue {
            index,
            raw,
            modulus,
            residue,
        }
    }
}

/// Precomputed expansions and invariant tables for one presentation.
///
/// All tables are filled eagerly at construction (bottom-up in the index
/// length), after which queries are read-only.
pub struct MuEngine {
    lp: LinkPresentation,
    mode: DeltaMode,
    expansions: Vec<Series>,
    raw: BTreeMap<Vec<usize>, BigInt>,
    delta: BTreeMap<Vec<usize>, BigInt>,
}

impl MuEngine {
    pub fn new(lp: LinkPresentation, mode: DeltaMode) -> MuEngine {
        let expansions: Vec<Series> = lp.longitudes.iter().map(|l| expand(l, lp.class)).collect();
        let mut engine = MuEngine {
            lp,
            mode,
            raw: BTreeMap::new(),
            delta: BTreeMap::new(),
            expansions,
        };
        engine.fill_tables();
        engine
    }

    pub fn presentation(&self) -> &LinkPresentation {
        &self.lp
    }

    pub fn mode(&self) -> DeltaMode {
        self.mode
    }

    pub fn max_length(&self) -> usize {
        self.lp.class - 1
    }

    fn fill_tables(&mut self) {
        let m = self.lp.components;
        for len in 2..=self.max_length() {
            for idx in all_indices(m, len) {
                let raw = self.raw_coefficient(&idx);
                self.raw.insert(idx, raw);
            }
        }
        // The gcd over proper subsequences of the raw values; by induction
        // over subsequence transitivity this equals the recursive gcd of
        // reduced invariants.
        for len in 2..=self.max_length() {
            for idx in all_indices(m, len) {
                let mut g = BigInt::zero();
                for sub in proper_subsequences(&idx) {
                    match self.mode {
                        DeltaMode::Subsequences => {
                            g = g.gcd(&self.raw[&sub]);
                        }
                        DeltaMode::MilnorCyclic => {
                            let mut rot = sub.clone();
                            for _ in 0..rot.len() {
                                rot.rotate_left(1);
                                g = g.gcd(&self.raw[&rot]);
                            }
                        }
                    }
                }
                self.delta.insert(idx, g);
            }
        }
    }

    fn raw_coefficient(&self, idx: &[usize]) -> BigInt {
        let (head, tail) = idx.split_at(idx.len() - 1);
        let vars: Vec<usize> = head.iter().map(|&i| i - 1).collect();
        self.expansions[tail[0] - 1]
            .coefficient(&vars)
            .expect("monomial length below bound")
    }

    fn check_index(&self, idx: &[usize]) -> Result<(), MuError> {
        if idx.len() < 2 || idx.len() > self.max_length() {
            return Err(MuError::LengthOutOfRange {
                len: idx.len(),
                max: self.max_length(),
            });
        }
        for &i in idx {
            if i == 0 || i > self.lp.components {
                return Err(MuError::IndexOutOfRange(i, self.lp.components));
            }
        }
        Ok(())
    }

    /// The invariant for a 1-based multi-index `(i_1, ..., i_s, i)`.
    pub fn mu(&self, idx: &[usize]) -> Result<MuValue, MuError> {
        self.check_index(idx)?;
        let raw = self.raw[idx].clone();
        let modulus = self.delta[idx].clone();
        Ok(MuValue::reduce(idx.to_vec(), raw, modulus))
    }

    pub fn raw_mu(&self, idx: &[usize]) -> Result<BigInt, MuError> {
        self.check_index(idx)?;
        Ok(self.raw[idx].clone())
    }

    pub fn delta(&self, idx: &[usize]) -> Result<BigInt, MuError> {
        self.check_index(idx)?;
        Ok(self.delta[idx].clone())
    }

    fn check_ctx(&self, ctx: &NilpotentContext) -> Result<(), MuError> {
        if ctx.rank() != self.lp.components || ctx.class() != self.lp.class {
            return Err(MuError::ContextMismatch {
                ctx_rank: ctx.rank(),
                ctx_class: ctx.class(),
                m: self.lp.components,
                q: self.lp.class,
            });
        }
        Ok(())
    }

    /// Commutator numbers of the `i`-th longitude: its Hall-basis exponents.
    pub fn longitude_numbers(
        &self,
        ctx: &NilpotentContext,
        i: usize,
    ) -> Result<ExponentVector, MuError> {
        self.check_ctx(ctx)?;
        Ok(ctx.normal_form(&self.lp.longitudes[i - 1])?)
    }

    /// Reconstructs the invariants of all orderings of the multiset `counts`
    /// (appended index `i`) from the commutator numbers: evaluates
    /// `sum_c E(c; l_i) rho(c)` over the basic commutators of that
    /// multidegree and reads off monomial coefficients, reduced by the
    /// matching modulus.
    pub fn mu_from_e(
        &self,
        ctx: &NilpotentContext,
        counts: &[u32],
        i: usize,
    ) -> Result<BTreeMap<Vec<usize>, MuValue>, MuError> {
        self.check_ctx(ctx)?;
        let nums = self.longitude_numbers(ctx, i)?;
        let weight: u32 = counts.iter().sum();
        let mut combo = Series::zero(self.lp.components, self.lp.class);
        for ord in ctx.ordinals_of_multidegree(counts) {
            let rho = ctx.basis_series(ord).homogeneous_part(weight as usize);
            combo = combo.add(&rho.scaled(nums.get(ord)))?;
        }
        let mut out = BTreeMap::new();
        for mono in Monomial::all_of_multidegree(counts) {
            let mut idx: Vec<usize> = mono.0.iter().map(|&v| v as usize + 1).collect();
            idx.push(i);
            self.check_index(&idx)?;
            let raw = combo
                .terms()
                .get(&mono)
                .cloned()
                .unwrap_or_else(BigInt::zero);
            let modulus = self.delta[&idx].clone();
            out.insert(idx.clone(), MuValue::reduce(idx, raw, modulus));
        }
        Ok(out)
    }

    /// Inverts the previous map when every relevant modulus vanishes: solves
    /// for the commutator numbers of multidegree `counts` from the raw
    /// invariants. `None` when some modulus is nonzero (indeterminate).
    pub fn e_from_mu(
        &self,
        ctx: &NilpotentContext,
        counts: &[u32],
        i: usize,
    ) -> Result<Option<Vec<(usize, BigInt)>>, MuError> {
        self.check_ctx(ctx)?;
        let monos = Monomial::all_of_multidegree(counts);
        let mut target = Vec::with_capacity(monos.len());
        for mono in &monos {
            let mut idx: Vec<usize> = mono.0.iter().map(|&v| v as usize + 1).collect();
            idx.push(i);
            self.check_index(&idx)?;
            if !self.delta[&idx].is_zero() {
                return Ok(None);
            }
            target.push(self.raw[&idx].clone());
        }
        let sol = ctx
            .solve_multidegree(counts, &target)
            .ok_or_else(|| NfError::Inconsistent(counts.iter().sum::<u32>() as usize))?;
        Ok(Some(sol))
    }

    fn require_vanishing_through(&self, n: usize) -> Result<(), MuError> {
        for len in 2..=n.min(self.max_length()) {
            for idx in all_indices(self.lp.components, len) {
                if !self.raw[&idx].is_zero() {
                    return Err(MuError::LowerMuNonzero(len));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the complete relation set on weight-`n` commutator numbers:
    /// for each basic commutator `K` of weight `n+1`,
    /// `sum_{(J,j)=K} sum_c E(K; [m_j, J^c]) E(J^c; l_j)`.
    /// All invariants of length `<= n` must vanish.
    pub fn relations_on_numbers(
        &self,
        ctx: &NilpotentContext,
        n: usize,
    ) -> Result<StarReport, MuError> {
        self.check_ctx(ctx)?;
        if n + 1 >= self.lp.class {
            return Err(MuError::ClassTooSmall {
                q: self.lp.class,
                need: n + 1,
            });
        }
        self.require_vanishing_through(n)?;
        let m = self.lp.components;
        let long_numbers: Vec<ExponentVector> = (1..=m)
            .map(|i| self.longitude_numbers(ctx, i))
            .collect::<Result<_, _>>()?;
        let basis = ctx.basis();
        let mut sums = Vec::new();
        for k_elem in basis.stratum(n + 1) {
            let mut total = BigInt::zero();
            for j in 0..m {
                if k_elem.multidegree[j] == 0 {
                    continue;
                }
                let mut j_counts = k_elem.multidegree.clone();
                j_counts[j] -= 1;
                for c_ord in ctx.ordinals_of_multidegree(&j_counts) {
                    let e_long = long_numbers[j].get(c_ord);
                    if e_long.is_zero() {
                        continue;
                    }
                    let meridian = Word::generator(m, j)?;
                    let rel = meridian.commutator(&basis.as_word(c_ord))?;
                    let rel_nf = ctx.normal_form(&rel)?;
                    total += rel_nf.get(k_elem.ordinal) * e_long;
                }
            }
            sums.push((k_elem.ordinal, total));
        }
        let pass = sums.iter().all(|(_, s)| s.is_zero());
        Ok(StarReport {
            weight: n,
            sums,
            pass,
        })
    }

    /// Compares invariants along cyclic permutations of every multi-index of
    /// the given length, assuming all shorter invariants vanish, and checks
    /// the equivalence with the relation set on commutator numbers.
    pub fn cyclic_symmetry(
        &self,
        ctx: &NilpotentContext,
        length: usize,
    ) -> Result<CyclicReport, MuError> {
        self.check_ctx(ctx)?;
        if length < 2 || length > self.max_length() {
            return Err(MuError::LengthOutOfRange {
                len: length,
                max: self.max_length(),
            });
        }
        self.require_vanishing_through(length - 1)?;
        let mut failures = Vec::new();
        for idx in all_indices(self.lp.components, length) {
            let base = &self.raw[&idx];
            let mut rot = idx.clone();
            for _ in 1..length {
                rot.rotate_left(1);
                if &self.raw[&rot] != base {
                    failures.push((idx.clone(), rot.clone()));
                    break;
                }
            }
        }
        let pass = failures.is_empty();
        let star = self.relations_on_numbers(ctx, length - 1)?;
        Ok(CyclicReport {
            length,
            failures,
            pass,
            star_pass: star.pass,
        })
    }
}

/// Relation sums per weight-`(n+1)` basic commutator.
#[derive(Clone, Debug)]
pub struct StarReport {
    pub weight: usize,
    /// `(ordinal of K, relation sum)`.
    pub sums: Vec<(usize, BigInt)>,
    pub pass: bool,
}

/// Cyclic-symmetry comparison across rotations of each multi-index.
#[derive(Clone, Debug)]
pub struct CyclicReport {
    pub length: usize,
    /// Pairs `(index, rotation)` with differing raw invariants.
    pub failures: Vec<(Vec<usize>, Vec<usize>)>,
    pub pass: bool,
    /// Verdict of the relation set at weight `length - 1` on the same data;
    /// must agree with `pass`.
    pub star_pass: bool,
}

fn all_indices(m: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (1..=m).map(move |i| {
                    let mut t = v.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

fn proper_subsequences(idx: &[usize]) -> Vec<Vec<usize>> {
    let n = idx.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let count = mask.count_ones() as usize;
        if count < 2 || count >= n {
            continue;
        }
        let sub: Vec<usize> = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| idx[i])
            .collect();
        out.push(sub);
    }
    out.sort();
    out.dedup();
    out
}

/// The number of linearly independent invariants of the given length for
/// `m`-component links whose shorter invariants vanish:
/// `m N_{length-1} - N_length` with `N` the Witt count. Knots have none.
pub fn count_independent_mu(m: usize, length: usize) -> u64 {
    assert!(length >= 2);
    if m == 1 {
        return 0;
    }
    m as u64 * witt_count(m, length - 1) - witt_count(m, length)
}

/// Extractability of a mu-bar multi-index from the `k`-quasi-isotopy
/// quotient data.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MuClass {
    /// Deleting some one position leaves at most `k+1` occurrences of every
    /// index: determined by the quotient group and peripheral data.
    Extractable,
    /// Not extractable, but of length at most `2k+3`, hence still invariant
    /// under `k`-quasi-isotopy: the gap the quotient cannot see.
    InvariantOnly,
    /// Not extractable and beyond the invariance range.
    NotExtractable,
    /// Neither rule applies (unreachable for well-formed inputs; the
    /// extractable and heavy conditions are complementary).
    Outside,
}

pub fn classify_mu(idx: &[usize], k: usize) -> Result<MuClass, MuError> {
    if k == 0 {
        return Err(MuError::KMustBePositive);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in idx {
        *counts.entry(i).or_insert(0) += 1;
    }
    let extractable = counts.values().all(|&c| c <= k + 1)
        || (counts.values().filter(|&&c| c > k + 1).count() == 1
            && counts.values().all(|&c| c <= k + 2));
    if extractable {
        return Ok(MuClass::Extractable);
    }
    let heavy = counts.values().any(|&c| c >= k + 3)
        || counts.values().filter(|&&c| c >= k + 2).count() >= 2;
    if heavy {
        if idx.len() <= 2 * k + 3 {
            return Ok(MuClass::InvariantOnly);
        }
        return Ok(MuClass::NotExtractable);
    }
    Ok(MuClass::Outside)
}

/// Emits the presentation of the `k`-quasi-isotopy quotient group: the
/// peripheral relators `[m_i, l_i]`, the basic commutators of weight
/// `<= m(k+1)` with at least `k+2` entries of one symbol, and the
/// left-normed commutators of weight `m(k+1)+1` (freely trivial ones
/// omitted). Relator syntax is re-parseable by the word grammar.
pub fn emit_gk_presentation(lp: &LinkPresentation, k: usize) -> Result<String, MuError> {
    let m = lp.components;
    let class_bound = m * (k + 1);
    if lp.class <= class_bound {
        return Err(MuError::ClassTooSmall {
            q: lp.class,
            need: class_bound,
        });
    }
    use crate::hall::{HallBasis, HallOrder};
    let basis = HallBasis::generate(m, class_bound, HallOrder::Standard)?;
    let mut out = String::new();
    let names: Vec<String> = (0..m).map(|g| gen_name(g, m)).collect();
    out.push_str(&format!("generators: {}\n", names.join(", ")));
    out.push_str("peripheral relators:\n");
    for (i, l) in lp.longitudes.iter().enumerate() {
        out.push_str(&format!("  [{},{}]\n", names[i], l));
    }
    out.push_str(&format!(
        "basic-commutator relators (weight <= {}, some symbol >= {} times):\n",
        class_bound,
        k + 2
    ));
    for e in basis.elems() {
        if e.weight <= class_bound && e.multidegree.iter().any(|&c| c as usize >= k + 2) {
            out.push_str(&format!("  {}\n", basis.bracket_string(e.ordinal)));
        }
    }
    out.push_str(&format!(
        "left-normed relators (weight {}):\n",
        class_bound + 1
    ));
    for seq in all_indices(m, class_bound + 1) {
        if seq[0] == seq[1] {
            continue; // freely trivial
        }
        let items: Vec<String> = seq.iter().map(|&i| names[i - 1].clone()).collect();
        out.push_str(&format!("  [{}]\n", items.join(",")));
    }
    Ok(out)
}
