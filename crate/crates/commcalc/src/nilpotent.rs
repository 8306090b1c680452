//! Normal forms in the free nilpotent group `F_m / gamma_q`.
//!
//! A word is collected into the unique product `c_1^{e_1} c_2^{e_2} ...` of
//! basic commutators in Hall order by iterated leading-part elimination in
//! the Magnus ring: at each weight `n` the degree-`n` part of the current
//! series is written in the (independent) leading parts `rho(c)` of the
//! weight-`n` basis elements, and the corresponding product is divided out.
//! Everything runs in the series ring, so no long words are ever rebuilt.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::hall::{HallBasis, HallError, HallOrder};
use crate::magnus::{expand, Monomial, Series, SeriesError};
use crate::words::{Word, WordError};
use crate::zmatrix::RowSolver;

#[derive(Debug, Error)]
pub enum NfError {
    #[error("word rank {0} does not match context rank {1}")]
    RankMismatch(usize, usize),
    #[error("class must be at least 2, got {0}")]
    ClassTooSmall(usize),
    #[error("series is not the expansion of a group element (inconsistent degree-{0} part)")]
    Inconsistent(usize),
    #[error("exponent too large to evaluate as a word")]
    ExponentTooLarge,
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Hall(#[from] HallError),
}

/// Exponents of the basic commutators of weight `< q`, indexed by ordinal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExponentVector {
    exps: Vec<BigInt>,
}

impl ExponentVector {
    pub fn zero(len: usize) -> ExponentVector {
        ExponentVector {
            exps: vec![BigInt::zero(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.exps.iter().all(|e| e.is_zero())
    }

    pub fn get(&self, ordinal: usize) -> &BigInt {
        &self.exps[ordinal]
    }

    pub fn set(&mut self, ordinal: usize, value: BigInt) {
        self.exps[ordinal] = value;
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, &BigInt)> {
        self.exps.iter().enumerate().filter(|(_, e)| !e.is_zero())
    }
}

struct BlockSolver {
    ordinals: Vec<usize>,
    monomials: Vec<Monomial>,
    solver: RowSolver,
}

struct WeightSolver {
    blocks: BTreeMap<Vec<u32>, BlockSolver>,
}

impl WeightSolver {
    /// Writes a homogeneous degree-`n` part in the weight-`n` leading parts.
    /// `None` when the part is not in their span.
    fn solve(&self, part: &Series, rank: usize) -> Option<Vec<(usize, BigInt)>> {
        let mut grouped: BTreeMap<Vec<u32>, BTreeMap<&Monomial, &BigInt>> = BTreeMap::new();
        for (mono, coeff) in part.terms() {
            grouped
                .entry(mono.multidegree(rank))
                .or_default()
                .insert(mono, coeff);
        }
        let mut out = Vec::new();
        for (md, terms) in grouped {
            let block = self.blocks.get(&md)?;
            let target: Vec<BigInt> = block
                .monomials
                .iter()
                .map(|m| terms.get(m).map(|c| (*c).clone()).unwrap_or_default())
                .collect();
            let x = block.solver.solve(&target)?;
            for (ord, v) in block.ordinals.iter().zip(x) {
                if !v.is_zero() {
                    out.push((*ord, v));
                }
            }
        }
        out.sort_by_key(|&(ord, _)| ord);
        Some(out)
    }
}

/// Shared, immutable data for computing in `F_m / gamma_q`: the Hall basis
/// through weight `q - 1`, the Magnus series of every basis element, and the
/// per-weight leading-part solvers.
pub struct NilpotentContext {
    rank: usize,
    class: usize,
    basis: HallBasis,
    series: Vec<Series>,
    inv_series: Vec<Series>,
    solvers: Vec<WeightSolver>,
}

impl NilpotentContext {
    pub fn new(rank: usize, class: usize, order: HallOrder) -> Result<NilpotentContext, NfError> {
        if class < 2 {
            return Err(NfError::ClassTooSmall(class));
        }
        let basis = HallBasis::generate(rank, class - 1, order)?;
        let mut series = Vec::with_capacity(basis.len());
        let mut inv_series = Vec::with_capacity(basis.len());
        for e in basis.elems() {
            let s = expand(&basis.as_word(e.ordinal), class);
            inv_series.push(s.invert_unit()?);
            series.push(s);
        }
        let mut solvers = Vec::with_capacity(class - 1);
        for weight in 1..class {
            let mut by_md: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
            for e in basis.stratum(weight) {
                by_md
                    .entry(e.multidegree.clone())
                    .or_default()
                    .push(e.ordinal);
            }
            let mut blocks = BTreeMap::new();
            for (md, ordinals) in by_md {
                let monomials = Monomial::all_of_multidegree(&md);
                let rows: Vec<Vec<BigInt>> = ordinals
                    .iter()
                    .map(|&ord| {
                        let rho = series[ord].homogeneous_part(weight);
                        monomials
                            .iter()
                            .map(|m| rho.terms().get(m).cloned().unwrap_or_default())
                            .collect()
                    })
                    .collect();
                let solver = RowSolver::new(rows)
                    .expect("leading parts of basic commutators are independent");
                blocks.insert(
                    md,
                    BlockSolver {
                        ordinals,
                        monomials,
                        solver,
                    },
                );
            }
            solvers.push(WeightSolver { blocks });
        }
        Ok(NilpotentContext {
            rank,
            class,
            basis,
            series,
            inv_series,
            solvers,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The truncation class `q`: all computations are modulo `gamma_q`.
    pub fn class(&self) -> usize {
        self.class
    }

    pub fn basis(&self) -> &HallBasis {
        &self.basis
    }

    /// Cached Magnus series of a basis element, truncated below `q`.
    pub fn basis_series(&self, ordinal: usize) -> &Series {
        &self.series[ordinal]
    }

    fn basis_power(&self, ordinal: usize, e: &BigInt) -> Result<Series, SeriesError> {
        if e.is_negative() {
            self.inv_series[ordinal].pow(&-e)
        } else {
            self.series[ordinal].pow(e)
        }
    }

    /// Collects a unit series (the expansion of a group element) into basic
    /// commutator exponents.
    pub fn collect(&self, s: Series) -> Result<ExponentVector, NfError> {
        if s.rank() != self.rank {
            return Err(NfError::RankMismatch(s.rank(), self.rank));
        }
        debug_assert_eq!(s.bound(), self.class);
        let mut cur = s;
        let mut out = ExponentVector::zero(self.basis.len());
        if !num_traits::One::is_one(&cur.constant_term()) {
            return Err(NfError::Inconsistent(0));
        }
        for n in 1..self.class {
            let part = cur.homogeneous_part(n);
            if part.terms().is_empty() {
                continue;
            }
            let sol = self.solvers[n - 1]
                .solve(&part, self.rank)
                .ok_or(NfError::Inconsistent(n))?;
            // Peel the weight-n factor off the left: the remainder
            // (c_1^{e_1} ... c_k^{e_k})^-1 * v lies in gamma_{n+1}, so the
            // final factorization is the ascending Hall-ordered product.
            let mut corr = Series::one(self.rank, self.class);
            for &(ord, ref e) in sol.iter().rev() {
                corr = corr.mul(&self.basis_power(ord, &-e.clone())?)?;
            }
            cur = corr.mul(&cur)?;
            for (ord, e) in sol {
                out.set(ord, e);
            }
            debug_assert!(cur.homogeneous_part(n).terms().is_empty());
        }
        if !cur.is_one() {
            return Err(NfError::Inconsistent(self.class));
        }
        Ok(out)
    }

    /// The exponent vector of `w` modulo `gamma_q`:
    /// `w = c_1^{e_1} c_2^{e_2} ... (mod gamma_q)` in Hall order.
    pub fn normal_form(&self, w: &Word) -> Result<ExponentVector, NfError> {
        if w.rank() != self.rank {
            return Err(NfError::RankMismatch(w.rank(), self.rank));
        }
        self.collect(expand(w, self.class))
    }

    /// The Hall-ordered product word `prod_c c^{e(c)}`.
    pub fn evaluate(&self, e: &ExponentVector) -> Result<Word, NfError> {
        let mut acc = Word::identity(self.rank);
        for (ord, exp) in e.iter_nonzero() {
            let k = exp.to_i64().ok_or(NfError::ExponentTooLarge)?;
            acc = acc.mul(&self.basis.as_word(ord).pow(k)?)?;
        }
        Ok(acc)
    }

    /// The Magnus series of the normal form, without building the word.
    pub fn series_of(&self, e: &ExponentVector) -> Result<Series, NfError> {
        let mut acc = Series::one(self.rank, self.class);
        for (ord, exp) in e.iter_nonzero() {
            acc = acc.mul(&self.basis_power(ord, exp)?)?;
        }
        Ok(acc)
    }

    /// Least weight with a nonzero exponent; `q` when the whole vector
    /// vanishes (the word lies in `gamma_q`).
    pub fn weight_of(&self, w: &Word) -> Result<usize, NfError> {
        let e = self.normal_form(w)?;
        Ok(self.leading_weight(&e).unwrap_or(self.class))
    }

    pub fn leading_weight(&self, e: &ExponentVector) -> Option<usize> {
        e.iter_nonzero()
            .next()
            .map(|(ord, _)| self.basis.elem(ord).weight)
    }

    /// The exponents of the weight-`n` basis elements, as a dense row.
    pub fn weight_row(&self, e: &ExponentVector, n: usize) -> Vec<BigInt> {
        self.basis
            .stratum_range(n)
            .map(|ord| e.get(ord).clone())
            .collect()
    }

    pub fn nf_multiply(
        &self,
        a: &ExponentVector,
        b: &ExponentVector,
    ) -> Result<ExponentVector, NfError> {
        let s = self.series_of(a)?.mul(&self.series_of(b)?)?;
        self.collect(s)
    }

    pub fn nf_inverse(&self, a: &ExponentVector) -> Result<ExponentVector, NfError> {
        self.collect(self.series_of(a)?.invert_unit()?)
    }

    /// Writes a homogeneous degree-`weight` series in the leading parts of
    /// the weight-`weight` basis elements; `None` when it is not in their
    /// span.
    pub fn solve_weight_part(&self, weight: usize, part: &Series) -> Option<Vec<(usize, BigInt)>> {
        self.solvers[weight - 1].solve(part, self.rank)
    }

    /// Direct access to one weight-`n` linear solve, restricted to a single
    /// multidegree: writes `target` (coefficients over the lexicographic
    /// monomials of that multidegree) in the leading parts of the matching
    /// basis elements.
    pub fn solve_multidegree(
        &self,
        multidegree: &[u32],
        target: &[BigInt],
    ) -> Option<Vec<(usize, BigInt)>> {
        let weight: u32 = multidegree.iter().sum();
        let solver = self.solvers.get(weight as usize - 1)?;
        let block = solver.blocks.get(multidegree)?;
        assert_eq!(target.len(), block.monomials.len());
        let x = block.solver.solve(target)?;
        Some(
            block
                .ordinals
                .iter()
                .zip(x)
                .filter(|(_, v)| !v.is_zero())
                .map(|(&o, v)| (o, v))
                .collect(),
        )
    }

    /// Ordinals of weight-`sum(md)` basis elements with the given multidegree.
    pub fn ordinals_of_multidegree(&self, multidegree: &[u32]) -> Vec<usize> {
        let weight: u32 = multidegree.iter().sum();
        if weight as usize >= self.class {
            return Vec::new();
        }
        self.basis
            .stratum(weight as usize)
            .iter()
            .filter(|e| e.multidegree == multidegree)
            .map(|e| e.ordinal)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(rank: usize, class: usize) -> NilpotentContext {
        NilpotentContext::new(rank, class, HallOrder::Standard).unwrap()
    }

    fn w(text: &str, rank: usize) -> Word {
        Word::parse(text, rank).unwrap()
    }

    #[test]
    fn basis_element_is_its_own_normal_form() {
        let c = ctx(2, 4);
        let e = c.normal_form(&w("[b,a]", 2)).unwrap();
        for (ord, v) in e.iter_nonzero() {
            assert_eq!(ord, 2);
            assert_eq!(v, &BigInt::from(1));
        }
        assert_eq!(e.iter_nonzero().count(), 1);
    }

    #[test]
    fn inverse_commutator_collects_to_minus_one() {
        // a b a^-1 b^-1 = [a^-1, b^-1] = [b,a]^-1 modulo gamma_3, and the
        // degree-2 Magnus part X1X2 - X2X1 confirms the sign.
        let c = ctx(2, 3);
        let word = w("a*b*a^-1*b^-1", 2);
        let s = expand(&word, 3);
        assert_eq!(s.coefficient(&[0, 1]).unwrap(), BigInt::from(1));
        assert_eq!(s.coefficient(&[1, 0]).unwrap(), BigInt::from(-1));
        let e = c.normal_form(&word).unwrap();
        assert_eq!(e.get(2), &BigInt::from(-1));
        assert_eq!(e.iter_nonzero().count(), 1);
    }

    #[test]
    fn identity_collects_to_zero() {
        let c = ctx(2, 4);
        let e = c.normal_form(&Word::identity(2)).unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn evaluate_round_trips() {
        let c = ctx(2, 5);
        let mut e = ExponentVector::zero(c.basis().len());
        e.set(2, BigInt::from(2));
        let word = c.evaluate(&e).unwrap();
        assert_eq!(word, w("[b,a]^2", 2));
        assert_eq!(c.normal_form(&word).unwrap(), e);
        assert!(c
            .evaluate(&ExponentVector::zero(c.basis().len()))
            .unwrap()
            .is_identity());
    }

    #[test]
    fn soundness_on_simple_words() {
        let c = ctx(2, 5);
        for text in ["a*b", "b*a", "[a,b]*a^3", "b^-2*a*b*a"] {
            let word = w(text, 2);
            let e = c.normal_form(&word).unwrap();
            let back = c.evaluate(&e).unwrap();
            assert_eq!(expand(&word, 5), expand(&back, 5), "{}", text);
        }
    }

    #[test]
    fn weight_examples() {
        let c = ctx(2, 6);
        assert_eq!(c.weight_of(&w("[b,a,a]", 2)).unwrap(), 3);
        assert_eq!(c.weight_of(&w("a*b", 2)).unwrap(), 1);
        assert_eq!(c.weight_of(&w("[[b,a],[b,a,a]]", 2)).unwrap(), 5);
        assert_eq!(c.weight_of(&Word::identity(2)).unwrap(), 6);
    }

    #[test]
    fn nf_multiply_laws() {
        let c = ctx(2, 5);
        let e = c.normal_form(&w("a*[b,a]*b^-1", 2)).unwrap();
        let zero = ExponentVector::zero(c.basis().len());
        assert_eq!(c.nf_multiply(&e, &zero).unwrap(), e);
        let inv = c.nf_inverse(&e).unwrap();
        assert!(c.nf_multiply(&e, &inv).unwrap().is_zero());
    }

    #[test]
    fn commutator_defect_between_ab_and_ba() {
        let c = ctx(2, 4);
        let eab = c.normal_form(&w("a*b", 2)).unwrap();
        let eba = c.normal_form(&w("b*a", 2)).unwrap();
        assert_eq!(eab.get(0), eba.get(0));
        assert_eq!(eab.get(1), eba.get(1));
        let diff = eab.get(2) - eba.get(2);
        assert_eq!(diff.magnitude().to_u64_digits(), vec![1]);
    }

    #[test]
    fn collect_rejects_non_group_series() {
        let c = ctx(2, 3);
        // 1 + X1X1 has a degree-2 part outside the span of rho([b,a]).
        let mut s = Series::one(2, 3);
        let bump = expand(&w("a", 2), 3).mul(&expand(&w("a", 2), 3)).unwrap();
        s = s.add(&bump.homogeneous_part(2)).unwrap();
        assert!(matches!(c.collect(s), Err(NfError::Inconsistent(2))));
    }

    #[test]
    fn left_normed_weight_filtration() {
        // Words built from weight-n left-normed commutators have weight >= n.
        let c = ctx(2, 6);
        let gens = [w("a", 2), w("b", 2)];
        let mut prod = Word::identity(2);
        for seq in [[0usize, 1, 0], [1, 0, 0], [0, 1, 1]] {
            let parts: Vec<Word> = seq.iter().map(|&i| gens[i].clone()).collect();
            prod = prod.mul(&Word::left_normed(&parts).unwrap()).unwrap();
        }
        assert!(c.weight_of(&prod).unwrap() >= 3);
    }
}
