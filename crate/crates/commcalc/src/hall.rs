//! Hall bases of basic commutators, Witt counting, and leading Lie parts.
//!
//! Generators are ordered `x1 < x2 < ... < xm`. Composite basic commutators
//! `(u, v)` require `u > v` in the global order and, when `u = (u1, u2)`,
//! additionally `u2 <= v`. Ordinals are assigned in creation order, weights
//! ascending, so every exponent vector indexed by ordinals is reproducible.

use num_bigint::BigInt;
use thiserror::Error;

use crate::magnus::{expand, Series};
use crate::words::{gen_name, Word};

/// Default cap on the number of generated basis elements.
pub const DEFAULT_BASIS_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum HallError {
    #[error("basis size cap exceeded ({0} elements)")]
    BasisCap(usize),
    #[error("weight {weight} does not fit below series bound {bound}")]
    WeightTooLarge { weight: usize, bound: usize },
}

/// Within a weight, the order in which new pairs `(u, v)` are enumerated.
///
/// `Standard` iterates by `(v, u)` ordinal, `Alternate` by `(u, v)`. Both
/// yield valid Hall systems; exponent vectors depend on the choice, the
/// link invariants computed from them must not.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HallOrder {
    Standard,
    Alternate,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Node {
    Gen(usize),
    /// Ordinals of the two halves, `[u, v]`.
    Pair(usize, usize),
}

#[derive(Clone, Debug)]
pub struct BasicCommutator {
    pub ordinal: usize,
    pub weight: usize,
    pub multidegree: Vec<u32>,
    pub node: Node,
}

#[derive(Clone, Debug)]
pub struct HallBasis {
    rank: usize,
    max_weight: usize,
    order: HallOrder,
    elems: Vec<BasicCommutator>,
    /// `stratum_end[w]` = number of elements of weight `<= w` (index 0 unused).
    stratum_end: Vec<usize>,
}

impl HallBasis {
    pub fn generate(
        rank: usize,
        max_weight: usize,
        order: HallOrder,
    ) -> Result<HallBasis, HallError> {
        Self::generate_capped(rank, max_weight, order, DEFAULT_BASIS_CAP)
    }

    pub fn generate_capped(
        rank: usize,
        max_weight: usize,
        order: HallOrder,
        cap: usize,
    ) -> Result<HallBasis, HallError> {
        assert!(rank >= 1 && max_weight >= 1);
        let mut elems: Vec<BasicCommutator> = Vec::new();
        for g in 0..rank {
            let mut md = vec![0u32; rank];
            md[g] = 1;
            elems.push(BasicCommutator {
                ordinal: g,
                weight: 1,
                multidegree: md,
                node: Node::Gen(g),
            });
        }
        let mut stratum_end = vec![0usize, rank];
        for w in 2..=max_weight {
            let prev_count = elems.len();
            let hall_ok = |elems: &[BasicCommutator], u: usize, v: usize| -> bool {
                if elems[u].weight + elems[v].weight != w || u <= v {
                    return false;
                }
                match elems[u].node {
                    Node::Gen(_) => true,
                    Node::Pair(_, u2) => u2 <= v,
                }
            };
            let push =
                |elems: &mut Vec<BasicCommutator>, u: usize, v: usize| -> Result<(), HallError> {
                    let ordinal = elems.len();
                    if ordinal >= cap {
                        return Err(HallError::BasisCap(cap));
                    }
                    let mut md = elems[u].multidegree.clone();
                    for (a, b) in md.iter_mut().zip(&elems[v].multidegree) {
                        *a += b;
                    }
                    elems.push(BasicCommutator {
                        ordinal,
                        weight: w,
                        multidegree: md,
                        node: Node::Pair(u, v),
                    });
                    Ok(())
                };
            match order {
                HallOrder::Standard => {
                    for v in 0..prev_count {
                        for u in v + 1..prev_count {
                            if hall_ok(&elems, u, v) {
                                push(&mut elems, u, v)?;
                            }
                        }
                    }
                }
                HallOrder::Alternate => {
                    for u in 1..prev_count {
                        for v in 0..u {
                            if hall_ok(&elems, u, v) {
                                push(&mut elems, u, v)?;
                            }
                        }
                    }
                }
            }
            stratum_end.push(elems.len());
        }
        Ok(HallBasis {
            rank,
            max_weight,
            order,
            elems,
            stratum_end,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn max_weight(&self) -> usize {
        self.max_weight
    }

    pub fn order(&self) -> HallOrder {
        self.order
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elems(&self) -> &[BasicCommutator] {
        &self.elems
    }

    pub fn elem(&self, ordinal: usize) -> &BasicCommutator {
        &self.elems[ordinal]
    }

    pub fn stratum_range(&self, weight: usize) -> std::ops::Range<usize> {
        assert!(weight >= 1 && weight <= self.max_weight);
        self.stratum_end[weight - 1]..self.stratum_end[weight]
    }

    pub fn stratum(&self, weight: usize) -> &[BasicCommutator] {
        &self.elems[self.stratum_range(weight)]
    }

    /// The group word obtained by evaluating the bracketing tree.
    pub fn as_word(&self, ordinal: usize) -> Word {
        match self.elems[ordinal].node {
            Node::Gen(g) => Word::generator(self.rank, g).expect("generator within rank"),
            Node::Pair(u, v) => self
                .as_word(u)
                .commutator(&self.as_word(v))
                .expect("commutator of in-rank words"),
        }
    }

    /// Nested bracket notation, e.g. `[[b,a],a]`.
    pub fn bracket_string(&self, ordinal: usize) -> String {
        match self.elems[ordinal].node {
            Node::Gen(g) => gen_name(g, self.rank),
            Node::Pair(u, v) => {
                format!("[{},{}]", self.bracket_string(u), self.bracket_string(v))
            }
        }
    }

    /// The composite element `[u, v]` if it is in the basis.
    pub fn find_pair(&self, u: usize, v: usize) -> Option<usize> {
        self.elems
            .iter()
            .find(|e| e.node == Node::Pair(u, v))
            .map(|e| e.ordinal)
    }

    /// Leading Lie part: the homogeneous degree-`weight` component of the
    /// Magnus expansion of the commutator word, returned at bound `bound`.
    pub fn rho(&self, ordinal: usize, bound: usize) -> Result<Series, HallError> {
        let weight = self.elems[ordinal].weight;
        if weight >= bound {
            return Err(HallError::WeightTooLarge { weight, bound });
        }
        let s = expand(&self.as_word(ordinal), weight + 1);
        Ok(s.homogeneous_part(weight).with_bound(bound))
    }
}

/// Moebius function for small arguments (trial division).
pub fn mobius(n: u64) -> i64 {
    assert!(n >= 1);
    let mut n = n;
    let mut count = 0u32;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            count += 1;
        }
        p += 1;
    }
    if n > 1 {
        count += 1;
    }
    if count.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Witt's formula: the number of basic commutators of weight `n` on `m`
/// generators, `(1/n) * sum_{d|n} mu(d) m^{n/d}`.
pub fn witt_count(m: usize, n: usize) -> u64 {
    assert!(m >= 1 && n >= 1);
    let mut total: i128 = 0;
    for d in 1..=n {
        if !n.is_multiple_of(d) {
            continue;
        }
        let mu = mobius(d as u64) as i128;
        if mu == 0 {
            continue;
        }
        let mut pw: i128 = 1;
        for _ in 0..n / d {
            pw = pw.checked_mul(m as i128).expect("witt_count overflow");
        }
        total += mu * pw;
    }
    debug_assert!(total >= 0 && total % n as i128 == 0);
    (total / n as i128) as u64
}

/// The second Witt formula: basic commutators with prescribed multidegree,
/// `(1/n) * sum_{d | gcd(counts)} mu(d) (n/d)! / prod (counts_i/d)!`.
pub fn witt_multidegree(counts: &[u32]) -> u64 {
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    assert!(n >= 1);
    let g = counts
        .iter()
        .fold(0u64, |acc, &c| num_integer::gcd(acc, c as u64));
    let mut total: i128 = 0;
    for d in 1..=g {
        if g % d != 0 {
            continue;
        }
        let mu = mobius(d) as i128;
        if mu == 0 {
            continue;
        }
        total += mu * multinomial(n / d, counts.iter().map(|&c| c as u64 / d));
    }
    debug_assert!(total >= 0 && total % n as i128 == 0);
    (total / n as i128) as u64
}

fn multinomial(n: u64, parts: impl Iterator<Item = u64>) -> i128 {
    // Product of binomials keeps intermediates integral.
    let mut acc: i128 = 1;
    let mut remaining = n;
    for p in parts {
        acc = acc
            .checked_mul(binomial(remaining, p))
            .expect("multinomial overflow");
        remaining -= p;
    }
    debug_assert_eq!(remaining, 0);
    acc
}

fn binomial(n: u64, k: u64) -> i128 {
    let k = k.min(n - k.min(n));
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as i128).expect("binomial overflow") / (i as i128 + 1);
    }
    acc
}

/// Row matrix of the coefficients of `rho` over all monomials of the given
/// multidegree; used for independence checks and the weight solvers.
pub fn rho_rows_for_multidegree(
    basis: &HallBasis,
    bound: usize,
    multidegree: &[u32],
    monomials: &[crate::magnus::Monomial],
) -> Result<Vec<(usize, Vec<BigInt>)>, HallError> {
    let weight: u32 = multidegree.iter().sum();
    let mut rows = Vec::new();
    for e in basis.stratum(weight as usize) {
        if e.multidegree != multidegree {
            continue;
        }
        let rho = basis.rho(e.ordinal, bound)?;
        let row: Vec<BigInt> = monomials
            .iter()
            .map(|m| rho.terms().get(m).cloned().unwrap_or_default())
            .collect();
        rows.push((e.ordinal, row));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn mobius_small_values() {
        let expect = [1, -1, -1, 0, -1, 1, -1, 0, 0, 1];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(mobius(i as u64 + 1), e, "mobius({})", i + 1);
        }
    }

    #[test]
    fn witt_counts_for_two_generators() {
        // Frozen from the hand Moebius sums, e.g. n=8: (256-16)/8 = 30 and
        // n=9: (512-8)/9 = 56.
        let expect = [2u64, 1, 2, 3, 6, 9, 18, 30, 56];
        for (n, &e) in expect.iter().enumerate() {
            assert_eq!(witt_count(2, n + 1), e);
        }
        assert_eq!(witt_count(3, 3), 8);
    }

    #[test]
    fn witt_multidegree_examples() {
        assert_eq!(witt_multidegree(&[1, 1]), 1);
        assert_eq!(witt_multidegree(&[2, 1]), 1);
        assert_eq!(witt_multidegree(&[5, 0]), 0);
        // Partition identity: sums over multidegrees match witt_count.
        for n in 1..=9usize {
            let mut sum = 0;
            for c1 in 0..=n as u32 {
                let c2 = n as u32 - c1;
                if c1 + c2 >= 1 {
                    sum += witt_multidegree(&[c1, c2]);
                }
            }
            assert_eq!(sum, witt_count(2, n), "n={}", n);
        }
    }

    #[test]
    fn basis_weight_two() {
        let b = HallBasis::generate(2, 2, HallOrder::Standard).unwrap();
        let strings: Vec<String> = (0..b.len()).map(|i| b.bracket_string(i)).collect();
        assert_eq!(strings, vec!["a", "b", "[b,a]"]);
    }

    #[test]
    fn basis_weight_three_rank_three_matches_known_list() {
        let b = HallBasis::generate(3, 3, HallOrder::Standard).unwrap();
        let got: BTreeSet<String> = b
            .stratum(3)
            .iter()
            .map(|e| b.bracket_string(e.ordinal))
            .collect();
        let expect: BTreeSet<String> = [
            "[[b,a],a]",
            "[[b,a],b]",
            "[[b,a],c]",
            "[[c,a],a]",
            "[[c,a],b]",
            "[[c,a],c]",
            "[[c,b],b]",
            "[[c,b],c]",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn basis_weight_four_rank_two() {
        let b = HallBasis::generate(2, 4, HallOrder::Standard).unwrap();
        let got: BTreeSet<String> = b
            .stratum(4)
            .iter()
            .map(|e| b.bracket_string(e.ordinal))
            .collect();
        let expect: BTreeSet<String> = ["[[[b,a],a],a]", "[[[b,a],a],b]", "[[[b,a],b],b]"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn stratum_sizes_match_witt() {
        for (m, max_w) in [(2usize, 9usize), (3, 6)] {
            for order in [HallOrder::Standard, HallOrder::Alternate] {
                let b = HallBasis::generate(m, max_w, order).unwrap();
                for n in 1..=max_w {
                    assert_eq!(
                        b.stratum(n).len() as u64,
                        witt_count(m, n),
                        "m={} n={} order={:?}",
                        m,
                        n,
                        order
                    );
                }
            }
        }
    }

    #[test]
    fn as_word_examples() {
        let b = HallBasis::generate(2, 3, HallOrder::Standard).unwrap();
        assert_eq!(b.as_word(0), Word::parse("a", 2).unwrap());
        assert_eq!(b.as_word(2), Word::parse("[b,a]", 2).unwrap());
        assert_eq!(b.as_word(3), Word::parse("[[b,a],a]", 2).unwrap());
    }

    #[test]
    fn rho_examples() {
        let b = HallBasis::generate(2, 4, HallOrder::Standard).unwrap();
        assert_eq!(b.rho(2, 3).unwrap().to_string(), "-X1X2 + X2X1");
        assert_eq!(b.rho(0, 3).unwrap().to_string(), "X1");
        assert!(matches!(b.rho(3, 3), Err(HallError::WeightTooLarge { .. })));
    }

    #[test]
    fn rho_is_multihomogeneous() {
        let b = HallBasis::generate(3, 4, HallOrder::Standard).unwrap();
        for e in b.elems() {
            let rho = b.rho(e.ordinal, e.weight + 1).unwrap();
            assert!(!rho.terms().is_empty());
            for (mono, _) in rho.terms() {
                assert_eq!(mono.degree(), e.weight);
                assert_eq!(
                    mono.multidegree(3),
                    e.multidegree,
                    "{}",
                    b.bracket_string(e.ordinal)
                );
            }
        }
    }

    #[test]
    fn rho_rows_linearly_independent_by_blocks() {
        use crate::magnus::Monomial;
        use crate::zmatrix::IntMat;
        // Independence of the leading parts, weight by weight and
        // multidegree by multidegree (the blocks are disjoint in columns).
        for (m, max_w) in [(2usize, 6usize), (3, 6)] {
            let b = HallBasis::generate(m, max_w, HallOrder::Standard).unwrap();
            for n in 2..=max_w {
                let mut multidegrees: Vec<Vec<u32>> = Vec::new();
                for e in b.stratum(n) {
                    if !multidegrees.contains(&e.multidegree) {
                        multidegrees.push(e.multidegree.clone());
                    }
                }
                for md in multidegrees {
                    let monos = arrangements(&md);
                    let monos: Vec<Monomial> = monos.into_iter().map(Monomial).collect();
                    let rows = rho_rows_for_multidegree(&b, n + 1, &md, &monos).unwrap();
                    let mat = IntMat::from_rows(
                        monos.len(),
                        rows.iter().map(|(_, r)| r.clone()).collect(),
                    );
                    assert_eq!(mat.rank(), rows.len(), "m={} md={:?}", m, md);
                }
            }
        }
    }

    fn arrangements(md: &[u32]) -> Vec<Vec<u16>> {
        fn rec(md: &mut Vec<u32>, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
            if md.iter().all(|&c| c == 0) {
                out.push(cur.clone());
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
