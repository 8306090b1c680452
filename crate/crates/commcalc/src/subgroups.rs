//! Sifted pivot lattices for instantiated subgroups of `F_m / gamma_q`.
//!
//! A [`Lattice`] keeps, for each weight `n < q`, a Hermite-form system of
//! pivot rows in the free abelian section `gamma_n / gamma_{n+1}` together
//! with the full group elements behind the rows. Sifting an element reduces
//! its leading row by pivot rows using exact integer division steps realized
//! as group multiplications, so every pivot is a genuine element of the
//! subgroup. Closure re-sifts inverses, pairwise products and (for normal
//! subgroups) generator conjugates until nothing new appears; the chain
//! terminates because `F_m / gamma_q` is Noetherian.
//!
//! Generator families are finite truncations of infinite sets, so a computed
//! lattice is an under-approximation: memberships it reports are sound,
//! equalities are asserted only together with a stabilization flag.

use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::hall::HallError;
use crate::magnus::{expand, Series, SeriesError};
use crate::nilpotent::{ExponentVector, NfError, NilpotentContext};
use crate::words::{Word, WordError};
use crate::zmatrix::IntMat;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("instantiation produced more than {0} generators")]
    InstantiationCap(usize),
    #[error("lattice closure did not converge within {0} passes")]
    ClosureCap(usize),
    #[error("class q={q} too small: need q > {need}")]
    ClassTooSmall { q: usize, need: usize },
    #[error("span did not stabilize between box {box_used} and {}; retry with a larger box", box_used + 1)]
    SpanNotStabilized { box_used: usize },
    #[error(transparent)]
    Nf(#[from] NfError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Hall(#[from] HallError),
}

/// How two computed lattices relate under mutual containment.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LatticeOrder {
    Equal,
    /// The left lattice is strictly contained in the right one.
    StrictlyFiner,
    /// The left lattice strictly contains the right one.
    StrictlyCoarser,
    Incomparable,
}

/// One pivot: a genuine subgroup element whose leading row sits in the
/// weight-`n` section with a positive pivot entry.
#[derive(Clone)]
pub struct Pivot {
    pub element: ExponentVector,
    series: Series,
    /// Ordinal of the leading (first nonzero) entry.
    col: usize,
}

pub struct Lattice {
    ctx: Arc<NilpotentContext>,
    normal: bool,
    /// Strata indexed by `weight - 1`; each sorted by pivot column.
    strata: Vec<Vec<Pivot>>,
}

const MAX_CLOSURE_PASSES: usize = 64;

impl Lattice {
    pub fn ctx(&self) -> &Arc<NilpotentContext> {
        &self.ctx
    }

    pub fn is_normal_closed(&self) -> bool {
        self.normal
    }

    pub fn pivots(&self, weight: usize) -> &[Pivot] {
        &self.strata[weight - 1]
    }

    pub fn all_pivots(&self) -> impl Iterator<Item = &Pivot> {
        self.strata.iter().flatten()
    }

    pub fn pivot_count(&self) -> usize {
        self.strata.iter().map(|s| s.len()).sum()
    }

    /// Closes the subgroup generated by `gens` (with ambient conjugation
    /// closure when `normal` is set).
    pub fn close(
        ctx: Arc<NilpotentContext>,
        gens: &[Word],
        normal: bool,
    ) -> Result<Lattice, LatticeError> {
        let mut lat = Lattice {
            strata: vec![Vec::new(); ctx.class() - 1],
            ctx,
            normal,
        };
        for g in gens {
            let s = expand(g, lat.ctx.class());
            lat.insert_series(s)?;
        }
        lat.run_closure()?;
        lat.canonicalize()?;
        Ok(lat)
    }

    /// Closes the subgroup generated by already-collected elements.
    pub fn close_from_vectors(
        ctx: Arc<NilpotentContext>,
        gens: &[ExponentVector],
        normal: bool,
    ) -> Result<Lattice, LatticeError> {
        let mut lat = Lattice {
            strata: vec![Vec::new(); ctx.class() - 1],
            ctx,
            normal,
        };
        for g in gens {
            let s = lat.ctx.series_of(g)?;
            lat.insert_series(s)?;
        }
        lat.run_closure()?;
        lat.canonicalize()?;
        Ok(lat)
    }

    /// The smallest computed lattice containing both operands.
    pub fn join(&self, other: &Lattice) -> Result<Lattice, LatticeError> {
        let gens: Vec<ExponentVector> = self
            .all_pivots()
            .chain(other.all_pivots())
            .map(|p| p.element.clone())
            .collect();
        Lattice::close_from_vectors(self.ctx.clone(), &gens, self.normal || other.normal)
    }

    fn run_closure(&mut self) -> Result<(), LatticeError> {
        for _ in 0..MAX_CLOSURE_PASSES {
            let mut changed = false;
            let snapshot: Vec<Series> = self.all_pivots().map(|p| p.series.clone()).collect();
            for s in &snapshot {
                changed |= self.insert_series(s.invert_unit()?)?;
            }
            for a in &snapshot {
                for b in &snapshot {
                    changed |= self.insert_series(a.mul(b)?)?;
                }
            }
            if self.normal {
                let m = self.ctx.rank();
                let gen_series: Vec<(Series, Series)> = (0..m)
                    .map(|g| {
                        let w = Word::generator(m, g).expect("in range");
                        let s = expand(&w, self.ctx.class());
                        let si = s.invert_unit().expect("unit");
                        (s, si)
                    })
                    .collect();
                for p in &snapshot {
                    for (s, si) in &gen_series {
                        // p^g and p^(g^-1)
                        changed |= self.insert_series(si.mul(p)?.mul(s)?)?;
                        changed |= self.insert_series(s.mul(p)?.mul(si)?)?;
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
        Err(LatticeError::ClosureCap(MAX_CLOSURE_PASSES))
    }

    /// Sifts the element with the given series into the lattice; returns
    /// whether any pivot changed. The element must be a genuine group
    /// element series at the context bound.
    fn insert_series(&mut self, s: Series) -> Result<bool, LatticeError> {
        let mut changed = false;
        let mut cur = s;
        let mut n = 1;
        'weights: while n < self.ctx.class() {
            let part = cur.homogeneous_part(n);
            if part.terms().is_empty() {
                n += 1;
                continue;
            }
            let sol = self
                .ctx
                .solve_weight_part(n, &part)
                .ok_or(NfError::Inconsistent(n))?;
            let mut row = self.dense_row(n, &sol);
            loop {
                let Some(lead) = row.iter().position(|v| !v.is_zero()) else {
                    // Fully reduced at this weight; the series must now
                    // vanish in degree n, so descend.
                    debug_assert!(cur.homogeneous_part(n).terms().is_empty());
                    n += 1;
                    continue 'weights;
                };
                let col = self.ctx.basis().stratum_range(n).start + lead;
                match self.pivot_index(n, col) {
                    None => {
                        // New pivot column.
                        if row[lead].is_negative() {
                            cur = cur.invert_unit()?;
                        }
                        let element = self.ctx.collect(cur.clone())?;
                        let stratum = &mut self.strata[n - 1];
                        let at = stratum.partition_point(|p| p.col < col);
                        stratum.insert(
                            at,
                            Pivot {
                                element,
                                series: cur,
                                col,
                            },
                        );
                        return Ok(true);
                    }
                    Some(idx) => {
                        let pval = self.strata[n - 1][idx].element.get(col).clone();
                        let f = num_integer::Integer::div_floor(&row[lead], &pval);
                        if !f.is_zero() {
                            // cur <- cur * pivot^(-f); only the weight-n row
                            // needs tracking, lower weights stay zero.
                            let pw = self.strata[n - 1][idx].series.pow(&-f.clone())?;
                            cur = cur.mul(&pw)?;
                            let prow = self.pivot_row(n, idx);
                            for (a, b) in row.iter_mut().zip(prow) {
                                *a -= &f * &b;
                            }
                        }
                        if row[lead].is_zero() {
                            continue;
                        }
                        // 0 < remainder < pivot: swap the smaller element in
                        // as the pivot and keep sifting the old one.
                        let element = self.ctx.collect(cur.clone())?;
                        let old = std::mem::replace(
                            &mut self.strata[n - 1][idx],
                            Pivot {
                                element,
                                series: cur,
                                col,
                            },
                        );
                        cur = old.series;
                        row = self.weight_row_of(&old.element, n);
                        changed = true;
                    }
                }
            }
        }
        Ok(changed)
    }

    fn dense_row(&self, n: usize, sol: &[(usize, BigInt)]) -> Vec<BigInt> {
        let range = self.ctx.basis().stratum_range(n);
        let mut row = vec![BigInt::zero(); range.len()];
        for (ord, v) in sol {
            row[ord - range.start] = v.clone();
        }
        row
    }

    fn weight_row_of(&self, e: &ExponentVector, n: usize) -> Vec<BigInt> {
        self.ctx.weight_row(e, n)
    }

    fn pivot_row(&self, n: usize, idx: usize) -> Vec<BigInt> {
        let e = self.strata[n - 1][idx].element.clone();
        self.weight_row_of(&e, n)
    }

    fn pivot_index(&self, n: usize, col: usize) -> Option<usize> {
        self.strata[n - 1].iter().position(|p| p.col == col)
    }

    /// Hermite canonicalization: reduces entries of other pivot rows over
    /// each pivot column into `[0, pivot)`, keeping all elements genuine.
    fn canonicalize(&mut self) -> Result<(), LatticeError> {
        for n in 1..self.ctx.class() {
            let count = self.strata[n - 1].len();
            for i in 0..count {
                let col = self.strata[n - 1][i].col;
                let pval = self.strata[n - 1][i].element.get(col).clone();
                for j in 0..count {
                    if i == j {
                        continue;
                    }
                    let entry = self.strata[n - 1][j].element.get(col).clone();
                    let f = num_integer::Integer::div_floor(&entry, &pval);
                    if f.is_zero() {
                        continue;
                    }
                    let pw = self.strata[n - 1][i].series.pow(&-f)?;
                    let s = self.strata[n - 1][j].series.mul(&pw)?;
                    let element = self.ctx.collect(s.clone())?;
                    let col_j = self.strata[n - 1][j].col;
                    self.strata[n - 1][j] = Pivot {
                        element,
                        series: s,
                        col: col_j,
                    };
                }
            }
        }
        Ok(())
    }

    /// Membership of a word, modulo `gamma_q`, in the computed lattice.
    pub fn contains_word(&self, w: &Word) -> Result<bool, LatticeError> {
        self.contains_series(expand(w, self.ctx.class()))
    }

    pub fn contains_element(&self, e: &ExponentVector) -> Result<bool, LatticeError> {
        self.contains_series(self.ctx.series_of(e)?)
    }

    fn contains_series(&self, s: Series) -> Result<bool, LatticeError> {
        let mut cur = s;
        let mut n = 1;
        while n < self.ctx.class() {
            let part = cur.homogeneous_part(n);
            if part.terms().is_empty() {
                n += 1;
                continue;
            }
            let sol = self
                .ctx
                .solve_weight_part(n, &part)
                .ok_or(NfError::Inconsistent(n))?;
            let mut row = self.dense_row(n, &sol);
            for idx in 0..self.strata[n - 1].len() {
                let col = self.strata[n - 1][idx].col;
                let lead = col - self.ctx.basis().stratum_range(n).start;
                if row[lead].is_zero() {
                    continue;
                }
                let pval = self.strata[n - 1][idx].element.get(col).clone();
                let f = num_integer::Integer::div_floor(&row[lead], &pval);
                if !f.is_zero() {
                    let pw = self.strata[n - 1][idx].series.pow(&-f.clone())?;
                    cur = cur.mul(&pw)?;
                    let prow = self.pivot_row(n, idx);
                    for (a, b) in row.iter_mut().zip(prow) {
                        *a -= &f * &b;
                    }
                }
            }
            if row.iter().any(|v| !v.is_zero()) {
                return Ok(false);
            }
            n += 1;
        }
        Ok(true)
    }

    /// Hermite basis of the image of `lattice intersect gamma_n` in the free
    /// abelian section `gamma_n / gamma_{n+1}`.
    pub fn section(&self, n: usize) -> IntMat {
        let cols = self.ctx.basis().stratum_range(n).len();
        let rows: Vec<Vec<BigInt>> = self.strata[n - 1]
            .iter()
            .map(|p| self.ctx.weight_row(&p.element, n))
            .collect();
        IntMat::from_rows(cols, rows).hermite().0
    }

    /// Index of the weight-`n` section in the full weight-`n` lattice,
    /// `None` when the rank is deficient (infinite index).
    pub fn section_index(&self, n: usize) -> Option<BigInt> {
        self.section(n).lattice_index()
    }

    /// Mutual containment of pivot elements.
    pub fn compare(&self, other: &Lattice) -> Result<LatticeOrder, LatticeError> {
        let mut left_in_right = true;
        for p in self.all_pivots() {
            if !other.contains_series(p.series.clone())? {
                left_in_right = false;
                break;
            }
        }
        let mut right_in_left = true;
        for p in other.all_pivots() {
            if !self.contains_series(p.series.clone())? {
                right_in_left = false;
                break;
            }
        }
        Ok(match (left_in_right, right_in_left) {
            (true, true) => LatticeOrder::Equal,
            (true, false) => LatticeOrder::StrictlyFiner,
            (false, true) => LatticeOrder::StrictlyCoarser,
            (false, false) => LatticeOrder::Incomparable,
        })
    }
}

/// Named generator families from the subgroup filtrations, instantiated as
/// finite word lists under [`InstantiationBounds`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Scheme {
    /// `gamma_n`: all left-normed commutators of weight `n` in the
    /// generators.
    Gamma { n: usize },
    /// `mu_k` by its definition: `[m, m^g]` with `g` running over the
    /// `k`-th iterated normal closure of the meridian `m`.
    MuDef { k: usize },
    /// `mu_k` as the product of the `(k+2)`-nd lower central terms of the
    /// meridian normal closures: left-normed `(k+2)`-fold commutators of
    /// conjugates of one meridian (first slot normalized to the meridian
    /// itself; the rest follows from conjugation closure).
    MuNormalClosures { k: usize },
    /// `mu_k` as generated by `gamma_{m(k+1)+1}` plus the basic commutators
    /// of weight `<= m(k+1)` with at least `k+2` entries of one generator.
    MuBasic { k: usize },
    /// `delta_k`: `(k+2)`-fold Engel values `[g, m, ..., m]` of meridians.
    Delta { k: usize },
    /// `delta_k` via the conjugate-tower form `[m, m^{m^{...^{m^g}}}]`
    /// with `k+1` nested `m`'s.
    DeltaTower { k: usize },
    /// `epsilon_n`: Engel values `[g, h, ..., h]` with `n` entries of `h`.
    Epsilon { n: usize },
    /// `nu_n`: left-normed values `[x, g^{p_1}, ..., g^{p_n}]` over the
    /// cyclic subgroup powers of `g`.
    Nu { n: usize },
    /// `N_k(m_i)`: `[g^-1, g^m]` with `g` in the `k`-th iterated normal
    /// closure of the meridian (0-based index `meridian`).
    Nk { k: usize, meridian: usize },
    /// The second derived subgroup: commutators of pivots of the computed
    /// `gamma_2` lattice.
    DerivedSecond,
}

impl Scheme {
    /// Whether the subgroup is normal in the ambient free group (drives
    /// conjugation closure).
    pub fn is_normal(&self) -> bool {
        !matches!(self, Scheme::Nk { .. })
    }

    pub fn parse(text: &str) -> Option<Scheme> {
        let mut it = text.split(':');
        let head = it.next()?;
        let arg = it.next();
        let num = |a: Option<&str>| a.and_then(|s| s.parse::<usize>().ok());
        let scheme = match head {
            "gamma" => Scheme::Gamma { n: num(arg)? },
            "mu" => Scheme::MuDef { k: num(arg)? },
            "mu27" => Scheme::MuNormalClosures { k: num(arg)? },
            "mu28" => Scheme::MuBasic { k: num(arg)? },
            "delta" => Scheme::Delta { k: num(arg)? },
            "deltatower" => Scheme::DeltaTower { k: num(arg)? },
            "epsilon" => Scheme::Epsilon { n: num(arg)? },
            "nu" => Scheme::Nu { n: num(arg)? },
            "nk" => Scheme::Nk {
                k: num(arg)?,
                meridian: 0,
            },
            "derived2" => Scheme::DerivedSecond,
            _ => return None,
        };
        if it.next().is_some() {
            return None;
        }
        Some(scheme)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Gamma { n } => write!(f, "gamma:{}", n),
            Scheme::MuDef { k } => write!(f, "mu:{}", k),
            Scheme::MuNormalClosures { k } => write!(f, "mu27:{}", k),
            Scheme::MuBasic { k } => write!(f, "mu28:{}", k),
            Scheme::Delta { k } => write!(f, "delta:{}", k),
            Scheme::DeltaTower { k } => write!(f, "deltatower:{}", k),
            Scheme::Epsilon { n } => write!(f, "epsilon:{}", n),
            Scheme::Nu { n } => write!(f, "nu:{}", n),
            Scheme::Nk { k, meridian } => write!(f, "nk:{} (meridian {})", k, meridian + 1),
            Scheme::DerivedSecond => write!(f, "derived2"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InstantiationBounds {
    /// Maximal reduced length of substituted words.
    pub word_len: usize,
    /// Exponent set for cyclic-subgroup slots (`nu` schemes).
    pub powers: Vec<i64>,
    /// Hard cap on the number of generator words produced.
    pub max_generators: usize,
}

impl InstantiationBounds {
    pub fn default_for_rank(rank: usize) -> InstantiationBounds {
        InstantiationBounds {
            word_len: if rank <= 2 { 4 } else { 2 },
            powers: vec![-2, -1, 1, 2],
            max_generators: 2_000_000,
        }
    }

    pub fn with_len(mut self, word_len: usize) -> InstantiationBounds {
        self.word_len = word_len;
        self
    }
}

/// All freely reduced words of length at most `len`, identity included.
pub fn words_up_to(rank: usize, len: usize) -> Vec<Word> {
    let mut out = vec![Word::identity(rank)];
    let mut frontier = vec![Word::identity(rank)];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &frontier {
            for g in 0..rank {
                for e in [1i64, -1] {
                    let last = w.runs().last().copied();
                    if let Some((lg, le)) = last {
                        if lg == g && (le > 0) != (e > 0) {
                            continue; // immediate cancellation
                        }
                    }
                    let ext = w
                        .mul(&Word::generator(rank, g).unwrap().pow(e).unwrap())
                        .unwrap();
                    next.push(ext);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Iterated normal closure levels for a meridian: level 0 is the whole
/// ambient group (all words up to the bound); level `j` consists of products
/// of at most two conjugates `m^{±v}` with `v` from level `j-1`.
pub fn closure_level(
    ctx: &NilpotentContext,
    meridian: usize,
    level: usize,
    bounds: &InstantiationBounds,
) -> Result<Vec<Word>, LatticeError> {
    let rank = ctx.rank();
    let m = Word::generator(rank, meridian)?;
    let m_inv = m.inverse();
    let mut cur = words_up_to(rank, bounds.word_len);
    for _ in 0..level {
        let mut seen: HashSet<Word> = HashSet::new();
        let mut singles = Vec::new();
        for v in &cur {
            for base in [&m, &m_inv] {
                let c = base.conjugate(v)?;
                if !c.is_identity() && seen.insert(c.clone()) {
                    singles.push(c);
                }
            }
        }
        let mut next = singles.clone();
        let mut seen_pairs: HashSet<Word> = seen;
        for a in &singles {
            for b in &singles {
                let p = a.mul(b)?;
                if next.len() + 1 > bounds.max_generators {
                    return Err(LatticeError::InstantiationCap(bounds.max_generators));
                }
                if !p.is_identity() && seen_pairs.insert(p.clone()) {
                    next.push(p);
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Instantiates a generator scheme as a finite, deterministic word list.
pub fn instantiate(
    scheme: &Scheme,
    ctx: &Arc<NilpotentContext>,
    bounds: &InstantiationBounds,
) -> Result<Vec<Word>, LatticeError> {
    let rank = ctx.rank();
    let mut out: Vec<Word> = Vec::new();
    let mut seen: HashSet<Word> = HashSet::new();
    let mut push = |w: Word, out: &mut Vec<Word>| -> Result<(), LatticeError> {
        if out.len() >= bounds.max_generators {
            return Err(LatticeError::InstantiationCap(bounds.max_generators));
        }
        if !w.is_identity() && seen.insert(w.clone()) {
            out.push(w);
        }
        Ok(())
    };
    match scheme {
        Scheme::Gamma { n } => {
            for seq in index_sequences(rank, *n) {
                if *n >= 2 && seq[0] == seq[1] {
                    continue; // freely trivial
                }
                let parts: Vec<Word> = seq
                    .iter()
                    .map(|&g| Word::generator(rank, g).unwrap())
                    .collect();
                push(Word::left_normed(&parts)?, &mut out)?;
            }
        }
        Scheme::MuDef { k } => {
            for meridian in 0..rank {
                let m = Word::generator(rank, meridian)?;
                for g in closure_level(ctx, meridian, *k, bounds)? {
                    push(m.commutator(&m.conjugate(&g)?)?, &mut out)?;
                }
            }
        }
        Scheme::MuNormalClosures { k } => {
            let words = words_up_to(rank, bounds.word_len);
            for meridian in 0..rank {
                let m = Word::generator(rank, meridian)?;
                // Left-normed (k+2)-fold commutators of conjugates of m.
                // Conjugating all slots together is absorbed by the ambient
                // normal closure, so the first slot is fixed to m itself.
                let conjugates: Vec<Word> = {
                    let mut cs = Vec::new();
                    let mut cset = HashSet::new();
                    for v in &words {
                        let c = m.conjugate(v)?;
                        if cset.insert(c.clone()) {
                            cs.push(c);
                        }
                    }
                    cs
                };
                let mut stack = vec![m.clone()];
                build_tuples(&conjugates, *k + 1, &mut stack, &mut |parts| {
                    push(Word::left_normed(parts)?, &mut out)
                })?;
            }
        }
        Scheme::MuBasic { k } => {
            let heavy = k + 2;
            let class_bound = rank * (k + 1);
            if ctx.class() <= class_bound {
                return Err(LatticeError::ClassTooSmall {
                    q: ctx.class(),
                    need: class_bound,
                });
            }
            let basis = ctx.basis();
            for e in basis.elems() {
                if e.weight <= class_bound && e.multidegree.iter().any(|&c| c as usize >= heavy) {
                    push(basis.as_word(e.ordinal), &mut out)?;
                }
            }
            for seq in index_sequences(rank, class_bound + 1) {
                if seq[0] == seq[1] {
                    continue;
                }
                let parts: Vec<Word> = seq
                    .iter()
                    .map(|&g| Word::generator(rank, g).unwrap())
                    .collect();
                push(Word::left_normed(&parts)?, &mut out)?;
            }
        }
        Scheme::Delta { k } => {
            let words = words_up_to(rank, bounds.word_len);
            for meridian in 0..rank {
                let m = Word::generator(rank, meridian)?;
                for g in &words {
                    let mut parts = vec![g.clone()];
                    parts.extend(std::iter::repeat_n(m.clone(), *k + 2));
                    push(Word::left_normed(&parts)?, &mut out)?;
                }
            }
        }
        Scheme::DeltaTower { k } => {
            let words = words_up_to(rank, bounds.word_len);
            for meridian in 0..rank {
                let m = Word::generator(rank, meridian)?;
                for g in &words {
                    let mut tower = g.clone();
                    for _ in 0..*k + 1 {
                        tower = m.conjugate(&tower)?;
                    }
                    push(m.commutator(&tower)?, &mut out)?;
                }
            }
        }
        Scheme::Epsilon { n } => {
            let words = words_up_to(rank, bounds.word_len);
            for g in &words {
                for h in &words {
                    let mut parts = vec![g.clone()];
                    parts.extend(std::iter::repeat_n(h.clone(), *n));
                    push(Word::left_normed(&parts)?, &mut out)?;
                }
            }
        }
        Scheme::Nu { n } => {
            let words = words_up_to(rank, bounds.word_len);
            for x in &words {
                for g in &words {
                    if g.is_identity() {
                        continue;
                    }
                    let mut stack: Vec<Word> = vec![x.clone()];
                    build_power_tuples(g, &bounds.powers, *n, &mut stack, &mut |parts| {
                        push(Word::left_normed(parts)?, &mut out)
                    })?;
                }
            }
        }
        Scheme::Nk { k, meridian } => {
            let m = Word::generator(rank, *meridian)?;
            for g in closure_level(ctx, *meridian, *k, bounds)? {
                push(g.inverse().commutator(&g.conjugate(&m)?)?, &mut out)?;
            }
        }
        Scheme::DerivedSecond => {
            let gamma2 = build(&Scheme::Gamma { n: 2 }, ctx, bounds)?;
            let words: Vec<Word> = gamma2
                .all_pivots()
                .map(|p| ctx.evaluate(&p.element))
                .collect::<Result<_, _>>()?;
            for a in &words {
                for b in &words {
                    push(a.commutator(b)?, &mut out)?;
                }
            }
        }
    }
    Ok(out)
}

fn index_sequences(rank: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..rank).map(move |g| {
                    let mut t = s.clone();
                    t.push(g);
                    t
                })
            })
            .collect();
    }
    out
}

fn build_tuples<F>(
    pool: &[Word],
    slots: usize,
    stack: &mut Vec<Word>,
    f: &mut F,
) -> Result<(), LatticeError>
where
    F: FnMut(&[Word]) -> Result<(), LatticeError>,
{
    if slots == 0 {
        return f(stack);
    }
    for w in pool {
        stack.push(w.clone());
        build_tuples(pool, slots - 1, stack, f)?;
        stack.pop();
    }
    Ok(())
}

fn build_power_tuples<F>(
    g: &Word,
    powers: &[i64],
    slots: usize,
    stack: &mut Vec<Word>,
    f: &mut F,
) -> Result<(), LatticeError>
where
    F: FnMut(&[Word]) -> Result<(), LatticeError>,
{
    if slots == 0 {
        return f(stack);
    }
    for &p in powers {
        stack.push(g.pow(p).map_err(LatticeError::Word)?);
        build_power_tuples(g, powers, slots - 1, stack, f)?;
        stack.pop();
    }
    Ok(())
}

/// Instantiates and closes a scheme.
pub fn build(
    scheme: &Scheme,
    ctx: &Arc<NilpotentContext>,
    bounds: &InstantiationBounds,
) -> Result<Lattice, LatticeError> {
    let gens = instantiate(scheme, ctx, bounds)?;
    Lattice::close(ctx.clone(), &gens, scheme.is_normal())
}

/// Builds the scheme at the given bounds and at `word_len - 1`, reporting
/// whether the two lattices agree (the stabilization flag for equality
/// claims).
pub fn build_stable(
    scheme: &Scheme,
    ctx: &Arc<NilpotentContext>,
    bounds: &InstantiationBounds,
) -> Result<(Lattice, bool), LatticeError> {
    let lat = build(scheme, ctx, bounds)?;
    if bounds.word_len == 0 {
        return Ok((lat, true));
    }
    let smaller = build(scheme, ctx, &bounds.clone().with_len(bounds.word_len - 1))?;
    let stable = matches!(lat.compare(&smaller)?, LatticeOrder::Equal);
    Ok((lat, stable))
}

/// Zeroes every exponent on a basic commutator with at least `k+2`
/// occurrences of some generator or weight above `m(k+1)`; the survivors are
/// the unique normal form in the `k`-quasi-free quotient.
pub fn reduce_mod_mu_k(
    ctx: &NilpotentContext,
    e: &ExponentVector,
    k: usize,
) -> Result<ExponentVector, LatticeError> {
    let class_bound = ctx.rank() * (k + 1);
    if k + 1 >= ctx.class() {
        // No basis element can reach k+2 occurrences or weight > m(k+1).
        return Ok(e.clone());
    }
    if ctx.class() <= class_bound {
        return Err(LatticeError::ClassTooSmall {
            q: ctx.class(),
            need: class_bound,
        });
    }
    let mut out = e.clone();
    for elem in ctx.basis().elems() {
        let heavy = elem.multidegree.iter().any(|&c| c as usize >= k + 2);
        if heavy || elem.weight > class_bound {
            out.set(elem.ordinal, BigInt::zero());
        }
    }
    Ok(out)
}

/// The Hermite span of the leading parts of the `n`-th Engel values
/// `[g, h, ..., h]` in the weight-`(n+1)` section, over abelianized `g`, `h`
/// with entries in `[-box, box]`.
pub struct EngelSpan {
    pub span: IntMat,
    pub box_used: usize,
}

/// Computes the Engel image span and checks stabilization against
/// `box + 1`.
///
/// The section class of `[g,h,...,h]` is linear in the abelianization of
/// `g` and changes sign under `h -> h^-1` up to `(-1)^n`, so `g` runs over
/// unit vectors and `h` over half the grid without changing the span.
pub fn engel_image_span(
    ctx: &Arc<NilpotentContext>,
    n: usize,
    box_bound: usize,
) -> Result<EngelSpan, LatticeError> {
    if ctx.class() < n + 2 {
        return Err(LatticeError::ClassTooSmall {
            q: ctx.class(),
            need: n + 1,
        });
    }
    let rows_small = engel_rows(ctx, n, box_bound)?;
    let cols = ctx.basis().stratum_range(n + 1).len();
    let span_small = IntMat::from_rows(cols, rows_small).hermite().0;
    let rows_big = engel_rows(ctx, n, box_bound + 1)?;
    let span_big = IntMat::from_rows(cols, rows_big).hermite().0;
    if span_small != span_big {
        return Err(LatticeError::SpanNotStabilized {
            box_used: box_bound,
        });
    }
    Ok(EngelSpan {
        span: span_small,
        box_used: box_bound,
    })
}

fn engel_rows(
    ctx: &NilpotentContext,
    n: usize,
    box_bound: usize,
) -> Result<Vec<Vec<BigInt>>, LatticeError> {
    let rank = ctx.rank();
    let mut rows = Vec::new();
    let grid = signed_grid(rank, box_bound as i64);
    for g_idx in 0..rank {
        let g = Word::generator(rank, g_idx)?;
        for hvec in &grid {
            if hvec.iter().all(|&v| v == 0) {
                continue;
            }
            // Sign symmetry: keep representatives with positive leading entry.
            if hvec
                .iter()
                .find(|&&v| v != 0)
                .map(|&v| v < 0)
                .unwrap_or(false)
            {
                continue;
            }
            let h = abelian_word(rank, hvec)?;
            let mut parts = vec![g.clone()];
            parts.extend(std::iter::repeat_n(h, n));
            let value = Word::left_normed(&parts)?;
            let e = ctx.normal_form(&value)?;
            rows.push(ctx.weight_row(&e, n + 1));
        }
    }
    Ok(rows)
}

fn signed_grid(rank: usize, b: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..rank {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-b..=b).map(move |x| {
                    let mut t = v.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

fn abelian_word(rank: usize, exps: &[i64]) -> Result<Word, WordError> {
    let mut w = Word::identity(rank);
    for (g, &e) in exps.iter().enumerate() {
        w = w.mul(&Word::generator(rank, g)?.pow(e)?)?;
    }
    Ok(w)
}
