//! Truncated integer power series in noncommuting variables and the Magnus
//! map `x_i -> 1 + X_i`.
//!
//! A [`Series`] keeps every monomial of total degree below its truncation
//! bound with an exact big-integer coefficient. All ring operations truncate
//! at the bound. Words of weight `n` expand to `1 +` (terms of degree `>= n`),
//! which is what the normal-form collection in [`crate::nilpotent`] exploits.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::words::Word;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("truncation bounds differ: {0} vs {1}")]
    BoundMismatch(usize, usize),
    #[error("variable ranks differ: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("constant term must be +1 or -1 to invert")]
    NonUnitConstant,
    #[error("monomial of length {len} is not representable below bound {bound}")]
    MonomialTooLong { len: usize, bound: usize },
}

/// A product of variables, `X_{i1} X_{i2} ...`, possibly empty.
///
/// Ordered by total degree first, then lexicographically; this is also the
/// printing order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(pub Vec<u16>);

impl Monomial {
    pub fn empty() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn degree_in(&self, var: usize) -> usize {
        self.0.iter().filter(|&&v| v as usize == var).count()
    }

    /// Occurrence counts per variable.
    pub fn multidegree(&self, rank: usize) -> Vec<u32> {
        let mut md = vec![0u32; rank];
        for &v in &self.0 {
            md[v as usize] += 1;
        }
        md
    }

    /// All monomials with the given occurrence counts, in lexicographic
    /// order.
    pub fn all_of_multidegree(md: &[u32]) -> Vec<Monomial> {
        fn rec(md: &mut [u32], cur: &mut Vec<u16>, out: &mut Vec<Monomial>) {
            if md.iter().all(|&c| c == 0) {
                out.push(Monomial(cur.clone()));
                return;
            }
            for v in 0..md.len() {
                if md[v] > 0 {
                    md[v] -= 1;
                    cur.push(v as u16);
                    rec(md, cur, out);
                    cur.pop();
                    md[v] += 1;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut md.to_vec(), &mut Vec::new(), &mut out);
        out
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.0.len(), &self.0).cmp(&(other.0.len(), &other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// An integer noncommutative polynomial with all terms of degree `< bound`.
#[derive(Clone, PartialEq, Eq)]
pub struct Series {
    rank: usize,
    bound: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

impl Series {
    pub fn zero(rank: usize, bound: usize) -> Series {
        assert!(bound >= 1, "truncation bound must be at least 1");
        Series {
            rank,
            bound,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(rank: usize, bound: usize) -> Series {
        let mut s = Series::zero(rank, bound);
        s.terms.insert(Monomial::empty(), BigInt::one());
        s
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, BigInt> {
        &self.terms
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.constant_term().is_one()
    }

    pub fn constant_term(&self) -> BigInt {
        self.terms
            .get(&Monomial::empty())
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    /// Stored coefficient of the monomial with the given variable indices
    /// (0-based), zero if absent.
    pub fn coefficient(&self, vars: &[usize]) -> Result<BigInt, SeriesError> {
        if vars.len() >= self.bound {
            return Err(SeriesError::MonomialTooLong {
                len: vars.len(),
                bound: self.bound,
            });
        }
        let mono = Monomial(vars.iter().map(|&v| v as u16).collect());
        Ok(self.terms.get(&mono).cloned().unwrap_or_else(BigInt::zero))
    }

    fn compatible(&self, other: &Series) -> Result<(), SeriesError> {
        if self.rank != other.rank {
            return Err(SeriesError::RankMismatch(self.rank, other.rank));
        }
        if self.bound != other.bound {
            return Err(SeriesError::BoundMismatch(self.bound, other.bound));
        }
        Ok(())
    }

    fn insert_add(terms: &mut BTreeMap<Monomial, BigInt>, mono: Monomial, coeff: BigInt) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match terms.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Series) -> Result<Series, SeriesError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            Self::insert_add(&mut out.terms, m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Series {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -std::mem::take(c);
        }
        out
    }

    /// Entrywise scaling by an integer.
    pub fn scaled(&self, by: &BigInt) -> Series {
        if by.is_zero() {
            return Series::zero(self.rank, self.bound);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= by;
        }
        out
    }

    pub fn sub(&self, other: &Series) -> Result<Series, SeriesError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Series) -> Result<Series, SeriesError> {
        self.compatible(other)?;
        let mut terms = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let deg = m1.0.len() + m2.0.len();
                if deg >= self.bound {
                    continue;
                }
                let mut v = Vec::with_capacity(deg);
                v.extend_from_slice(&m1.0);
                v.extend_from_slice(&m2.0);
                Self::insert_add(&mut terms, Monomial(v), c1 * c2);
            }
        }
        Ok(Series {
            rank: self.rank,
            bound: self.bound,
            terms,
        })
    }

    /// Two-sided inverse in the truncated ring; the constant term must be a
    /// unit (`+1` or `-1`).
    pub fn invert_unit(&self) -> Result<Series, SeriesError> {
        let c = self.constant_term();
        if !c.abs().is_one() {
            return Err(SeriesError::NonUnitConstant);
        }
        // S = c (1 + N); S^-1 = c * sum_k (-N)^k, using c^-1 = c.
        let mut n = self.clone();
        for v in n.terms.values_mut() {
            *v *= &c;
        }
        n.terms.remove(&Monomial::empty());
        let neg_n = n.neg();
        // Horner: acc = 1 + (-N)(1 + (-N)(1 + ...)).
        let mut acc = Series::one(self.rank, self.bound);
        for _ in 1..self.bound {
            acc = neg_n.mul(&acc)?.add(&Series::one(self.rank, self.bound))?;
        }
        for v in acc.terms.values_mut() {
            *v *= &c;
        }
        Ok(acc)
    }

    /// `self^e` by binary powering; negative exponents invert first.
    pub fn pow(&self, e: &BigInt) -> Result<Series, SeriesError> {
        let base = if e.is_negative() {
            self.invert_unit()?
        } else {
            self.clone()
        };
        let mut k = e.abs();
        let mut acc = Series::one(self.rank, self.bound);
        let mut sq = base;
        let two = BigInt::from(2);
        while !k.is_zero() {
            if (&k % &two).is_one() {
                acc = acc.mul(&sq)?;
            }
            k /= &two;
            if !k.is_zero() {
                sq = sq.mul(&sq)?;
            }
        }
        Ok(acc)
    }

    /// The terms of exact total degree `n`, as a series with the same bound.
    pub fn homogeneous_part(&self, n: usize) -> Series {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.0.len() == n)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Series {
            rank: self.rank,
            bound: self.bound,
            terms,
        }
    }

    /// Re-truncates to a (possibly different) bound, dropping terms that no
    /// longer fit.
    pub fn with_bound(&self, bound: usize) -> Series {
        assert!(bound >= 1);
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.0.len() < bound)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Series {
            rank: self.rank,
            bound,
            terms,
        }
    }

    /// Minimum number of occurrences of `X_var` over the nonconstant terms;
    /// `None` when there are no nonconstant terms (everything of positive
    /// degree vanished below the bound).
    ///
    /// A term that omits the variable reports 0: the degree bounds this
    /// feeds are lower bounds, and 0 is their honest bottom.
    pub fn min_degree_in(&self, var: usize) -> Option<usize> {
        self.terms
            .iter()
            .filter(|(m, _)| !m.0.is_empty())
            .map(|(m, _)| m.degree_in(var))
            .min()
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let (sign, mag) = if c.is_negative() {
                ("-", -c.clone())
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            first = false;
            let is_const = m.0.is_empty();
            if !mag.is_one() || is_const {
                write!(f, "{}", mag)?;
            }
            for &v in &m.0 {
                write!(f, "X{}", v + 1)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series[{}; D<{}]({})", self.rank, self.bound, self)
    }
}

/// `(1 + X_var)^exp` truncated below `bound`, via binomial coefficients;
/// `exp` may be negative (generalized binomials).
fn generator_power(rank: usize, bound: usize, var: usize, exp: i64) -> Series {
    let mut s = Series::zero(rank, bound);
    let mut coeff = BigInt::one();
    let e = BigInt::from(exp);
    for k in 0..bound {
        if exp >= 0 && (k as i64) > exp {
            break;
        }
        Series::insert_add(&mut s.terms, Monomial(vec![var as u16; k]), coeff.clone());
        // C(e, k+1) = C(e, k) * (e - k) / (k + 1), exact division.
        coeff = coeff * (&e - BigInt::from(k)) / BigInt::from(k + 1);
    }
    s
}

/// The Magnus expansion of a word, truncated below `bound`.
///
/// Each generator maps to `1 + X_i`, each inverse to the alternating
/// geometric series; runs expand in one binomial step each.
pub fn expand(w: &Word, bound: usize) -> Series {
    let mut acc = Series::one(w.rank(), bound);
    for &(g, e) in w.runs() {
        let factor = generator_power(w.rank(), bound, g, e);
        acc = acc
            .mul(&factor)
            .expect("same rank and bound by construction");
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(text: &str, rank: usize) -> Word {
        Word::parse(text, rank).unwrap()
    }

    #[test]
    fn generator_expansion() {
        let s = expand(&w("a", 2), 4);
        assert_eq!(s.to_string(), "1 + X1");
    }

    #[test]
    fn inverse_expansion_is_alternating() {
        let s = expand(&w("a^-1", 2), 4);
        assert_eq!(s.to_string(), "1 - X1 + X1X1 - X1X1X1");
    }

    #[test]
    fn commutator_expansion() {
        let s = expand(&w("[a,b]", 2), 3);
        assert_eq!(s.to_string(), "1 + X1X2 - X2X1");
        assert_eq!(s.coefficient(&[0, 1]).unwrap(), BigInt::from(1));
        assert_eq!(
            expand(&w("a", 2), 3).coefficient(&[]).unwrap(),
            BigInt::from(1)
        );
        assert_eq!(
            expand(&w("a", 2), 3).coefficient(&[1]).unwrap(),
            BigInt::from(0)
        );
        assert!(matches!(
            expand(&w("a", 2), 3).coefficient(&[0, 1, 0]),
            Err(SeriesError::MonomialTooLong { .. })
        ));
    }

    #[test]
    fn geometric_identity() {
        let one_plus = expand(&w("a", 2), 3);
        let inv = expand(&w("a^-1", 2), 3);
        assert!(one_plus.mul(&inv).unwrap().is_one());
        assert_eq!(one_plus.invert_unit().unwrap(), inv);
    }

    #[test]
    fn expansion_is_homomorphic() {
        let u = w("a*b^-1*a", 2);
        let v = w("[b,a]*b^2", 2);
        let lhs = expand(&u.mul(&v).unwrap(), 5);
        let rhs = expand(&u, 5).mul(&expand(&v, 5)).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(
            expand(&u.inverse(), 5),
            expand(&u, 5).invert_unit().unwrap()
        );
    }

    #[test]
    fn min_degree_examples() {
        assert_eq!(expand(&w("[a,b]", 2), 4).min_degree_in(0), Some(1));
        // b contributes no X1 at all: minimum occurrence count is 0.
        assert_eq!(expand(&w("b", 2), 4).min_degree_in(0), Some(0));
        assert_eq!(expand(&w("[[a,b],b]", 2), 4).min_degree_in(1), Some(2));
        assert_eq!(expand(&Word::identity(2), 4).min_degree_in(0), None);
    }

    #[test]
    fn pow_matches_word_power() {
        let u = w("a*b", 2);
        let direct = expand(&u.pow(5).unwrap(), 4);
        let powed = expand(&u, 4).pow(&BigInt::from(5)).unwrap();
        assert_eq!(direct, powed);
        let neg = expand(&u.pow(-3).unwrap(), 4);
        assert_eq!(neg, expand(&u, 4).pow(&BigInt::from(-3)).unwrap());
    }

    #[test]
    fn display_sorts_by_degree_then_lex() {
        let s = expand(&w("[a,b]", 2), 3);
        // degree 0 first, then the two degree-2 monomials in lex order.
        assert_eq!(s.to_string(), "1 + X1X2 - X2X1");
    }
}
