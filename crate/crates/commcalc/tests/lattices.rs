//! Cross-checks of the subgroup lattices against the filtration identities:
//! Engel/Baer coincidences, the conjugate-tower lemma, the nilpotency-class
//! bound for the meridian filtration, and the metabelian-image coincidence.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

use commcalc::hall::HallOrder;
use commcalc::nilpotent::NilpotentContext;
use commcalc::subgroups::{
    build, closure_level, engel_image_span, instantiate, words_up_to, InstantiationBounds, Lattice,
    LatticeOrder, Scheme,
};
use commcalc::words::Word;

fn ctx(rank: usize, class: usize) -> Arc<NilpotentContext> {
    Arc::new(NilpotentContext::new(rank, class, HallOrder::Standard).unwrap())
}

fn w(text: &str, rank: usize) -> Word {
    Word::parse(text, rank).unwrap()
}

#[test]
fn epsilon_instantiation_contains_generator_commutators() {
    let c = ctx(2, 4);
    let bounds = InstantiationBounds::default_for_rank(2).with_len(1);
    let gens = instantiate(&Scheme::Epsilon { n: 1 }, &c, &bounds).unwrap();
    assert!(gens.contains(&w("[a,b]", 2)));
    assert!(gens.contains(&w("[b,a]", 2)));
    // [a,a] and friends are freely trivial and filtered out.
    assert!(gens.iter().all(|g| !g.is_identity()));
}

#[test]
fn delta_instantiation_shape() {
    let c = ctx(2, 4);
    let bounds = InstantiationBounds::default_for_rank(2).with_len(2);
    let gens = instantiate(&Scheme::Delta { k: 1 }, &c, &bounds).unwrap();
    assert!(gens.contains(&w("[b,a,a,a]", 2)));
    assert!(gens.contains(&w("[a*b,a,a,a]", 2)));
    assert!(gens.contains(&w("[a,b,b,b]", 2)));
}

#[test]
fn mu_def_instantiation_contains_milnor_values() {
    let c = ctx(2, 4);
    let bounds = InstantiationBounds::default_for_rank(2).with_len(1);
    let gens = instantiate(&Scheme::MuDef { k: 0 }, &c, &bounds).unwrap();
    assert!(gens.contains(&w("[a, a^(b)]", 2)));
}

#[test]
fn epsilon2_equals_nu2() {
    // The second Engel and Baer subgroups coincide identically.
    let c = ctx(2, 5);
    let bounds = InstantiationBounds::default_for_rank(2).with_len(2);
    let eps = build(&Scheme::Epsilon { n: 2 }, &c, &bounds).unwrap();
    let nu = build(&Scheme::Nu { n: 2 }, &c, &bounds).unwrap();
    assert_eq!(eps.compare(&nu).unwrap(), LatticeOrder::Equal);
    // And both land inside gamma_3.
    let gam3 = build(&Scheme::Gamma { n: 3 }, &c, &bounds).unwrap();
    assert!(matches!(
        eps.compare(&gam3).unwrap(),
        LatticeOrder::Equal | LatticeOrder::StrictlyFiner
    ));
}

#[test]
fn epsilon_nu_agree_modulo_next_weight() {
    // epsilon_n * gamma_{n+2} = nu_n * gamma_{n+2} at q = n+3.
    for n in [2usize, 3] {
        let c = ctx(2, n + 3);
        let bounds = InstantiationBounds::default_for_rank(2).with_len(if n == 2 { 2 } else { 1 });
        let eps = build(&Scheme::Epsilon { n }, &c, &bounds).unwrap();
        let nu = build(&Scheme::Nu { n }, &c, &bounds).unwrap();
        let gam = build(&Scheme::Gamma { n: n + 2 }, &c, &bounds).unwrap();
        let left = eps.join(&gam).unwrap();
        let right = nu.join(&gam).unwrap();
        assert_eq!(
            left.compare(&right).unwrap(),
            LatticeOrder::Equal,
            "n={}",
            n
        );
        // epsilon_n inside nu_n inside gamma_{n+1}.
        let gam_next = build(&Scheme::Gamma { n: n + 1 }, &c, &bounds).unwrap();
        for p in eps.all_pivots() {
            assert!(nu.contains_element(&p.element).unwrap());
        }
        for p in nu.all_pivots() {
            assert!(gam_next.contains_element(&p.element).unwrap());
        }
    }
}

#[test]
fn conjugate_tower_subgroup_equals_iterated_bracket() {
    // [g, <g>_2^G] agrees with [[[G, g], g], g] as computed lattices
    // (g = a, rank 2, q = 5): the left side brackets g against its level-2
    // iterated normal closure, the right side iterates pivot brackets with
    // ambient normal closure.
    let c = ctx(2, 5);
    let bounds = InstantiationBounds::default_for_rank(2).with_len(1);
    let a = w("a", 2);

    let level2 = closure_level(&c, 0, 2, &bounds).unwrap();
    let left_gens: Vec<Word> = level2
        .iter()
        .map(|h| a.commutator(h).unwrap())
        .filter(|v| !v.is_identity())
        .collect();
    let left = Lattice::close(c.clone(), &left_gens, true).unwrap();

    // Right: [[[G, a], a], a] by pivot iteration.
    let mut cur: Option<Lattice> = None;
    for _ in 0..3 {
        let gens: Vec<Word> = match &cur {
            None => words_up_to(2, 2)
                .iter()
                .map(|x| x.commutator(&a).unwrap())
                .filter(|v| !v.is_identity())
                .collect(),
            Some(lat) => lat
                .all_pivots()
                .map(|p| c.evaluate(&p.element).unwrap().commutator(&a).unwrap())
                .filter(|v| !v.is_identity())
                .collect(),
        };
        cur = Some(Lattice::close(c.clone(), &gens, true).unwrap());
    }
    let right = cur.unwrap();
    assert_eq!(left.compare(&right).unwrap(), LatticeOrder::Equal);
}

#[test]
fn mu1_class_bound_via_weight5_lattice() {
    // gamma_5 F_2 lies inside mu_1: the quotient is nilpotent of class 4.
    let c = ctx(2, 6);
    let bounds = InstantiationBounds::default_for_rank(2);
    let mu = build(&Scheme::MuBasic { k: 1 }, &c, &bounds).unwrap();
    for e in c.basis().stratum(5) {
        assert!(mu.contains_word(&c.basis().as_word(e.ordinal)).unwrap());
    }
    // Milnor case k=0: the three descriptions agree at q=4 too.
    let c4 = ctx(2, 4);
    let b4 = InstantiationBounds::default_for_rank(2).with_len(3);
    let m_def = build(&Scheme::MuDef { k: 0 }, &c4, &b4).unwrap();
    let m_ncl = build(&Scheme::MuNormalClosures { k: 0 }, &c4, &b4).unwrap();
    let m_bas = build(&Scheme::MuBasic { k: 0 }, &c4, &b4).unwrap();
    assert_eq!(m_def.compare(&m_ncl).unwrap(), LatticeOrder::Equal);
    assert_eq!(m_def.compare(&m_bas).unwrap(), LatticeOrder::Equal);
}

#[test]
fn section_indices() {
    let c = ctx(2, 6);
    let bounds = InstantiationBounds::default_for_rank(2);
    let delta = build(&Scheme::Delta { k: 1 }, &c, &bounds).unwrap();
    // Weight-5 section of delta_1 is the full rank-6 lattice.
    assert_eq!(delta.section_index(5), Some(BigInt::one()));
    let gamma2 = build(&Scheme::Gamma { n: 2 }, &c, &bounds).unwrap();
    assert_eq!(gamma2.section_index(2), Some(BigInt::one()));
}

#[test]
fn engel3_section_has_index_two() {
    let c = ctx(2, 5);
    let span = engel_image_span(&c, 3, 2).unwrap();
    assert_eq!(span.span.lattice_index(), Some(BigInt::from(2)));
    // The closed epsilon_3 lattice agrees with the span in its weight-4
    // section (length-1 words miss the mixed direction, length 2 suffices).
    let bounds = InstantiationBounds::default_for_rank(2).with_len(2);
    let eps3 = build(&Scheme::Epsilon { n: 3 }, &c, &bounds).unwrap();
    assert_eq!(eps3.section_index(4), Some(BigInt::from(2)));
}

#[test]
fn closure_invariants_hold_on_closed_lattices() {
    // Products, inverses and (for normal subgroups) generator conjugates of
    // pivot elements all sift to the trivial element.
    let c = ctx(2, 5);
    let bounds = InstantiationBounds::default_for_rank(2).with_len(2);
    let lat = build(&Scheme::Epsilon { n: 2 }, &c, &bounds).unwrap();
    let pivots: Vec<_> = lat.all_pivots().map(|p| p.element.clone()).collect();
    for p in &pivots {
        assert!(lat.contains_element(&c.nf_inverse(p).unwrap()).unwrap());
        for r in &pivots {
            assert!(lat.contains_element(&c.nf_multiply(p, r).unwrap()).unwrap());
        }
        let word = c.evaluate(p).unwrap();
        for g in 0..2 {
            for e in [1i64, -1] {
                let by = Word::generator(2, g).unwrap().pow(e).unwrap();
                assert!(lat.contains_word(&word.conjugate(&by).unwrap()).unwrap());
            }
        }
    }
}

#[test]
fn epsilon2_strictly_finer_than_gamma3_in_rank_three() {
    let c = ctx(3, 4);
    let bounds = InstantiationBounds::default_for_rank(3);
    let eps = build(&Scheme::Epsilon { n: 2 }, &c, &bounds).unwrap();
    let gam = build(&Scheme::Gamma { n: 3 }, &c, &bounds).unwrap();
    assert_eq!(eps.compare(&gam).unwrap(), LatticeOrder::StrictlyFiner);
}

#[test]
fn nk_lattice_is_computable() {
    // N_0(a): [g^-1, g^a] over all g; a plain (non-normal) subgroup.
    let c = ctx(2, 4);
    let bounds = InstantiationBounds::default_for_rank(2).with_len(2);
    let nk = build(&Scheme::Nk { k: 0, meridian: 0 }, &c, &bounds).unwrap();
    assert!(nk.pivot_count() > 0);
    // Its values are commutators, hence inside gamma_2.
    let gam2 = build(&Scheme::Gamma { n: 2 }, &c, &bounds).unwrap();
    for p in nk.all_pivots() {
        assert!(gam2.contains_element(&p.element).unwrap());
    }
}

#[test]
fn engel_values_with_commutator_tail_lie_in_engel_closure() {
    // [g,h,h,[h,g]] and [h,g,h,[h,g]] lie in the normal closure of
    // [g,h,h,h] and [g^-1,h,h,h]; likewise with the tail [g,h]. Checked
    // modulo gamma_6 at g=a, h=b.
    let c = ctx(2, 6);
    let gens = vec![w("[a,b,b,b]", 2), w("[a^-1,b,b,b]", 2)];
    let closure = Lattice::close(c.clone(), &gens, true).unwrap();
    for tail in ["[b,a]", "[a,b]"] {
        for head in ["[a,b,b", "[b,a,b"] {
            let value = w(&format!("{},{}]", head, tail), 2);
            assert!(
                closure.contains_word(&value).unwrap(),
                "{}, {}] not reached",
                head,
                tail
            );
        }
    }
}

#[test]
fn lattices_grow_monotonically_in_the_word_bound() {
    let c = ctx(2, 4);
    for scheme in [Scheme::Epsilon { n: 2 }, Scheme::MuDef { k: 1 }] {
        let mut prev: Option<Lattice> = None;
        for len in 0..=2usize {
            let bounds = InstantiationBounds::default_for_rank(2).with_len(len);
            let lat = build(&scheme, &c, &bounds).unwrap();
            if let Some(p) = &prev {
                let order = p.compare(&lat).unwrap();
                assert!(
                    matches!(order, LatticeOrder::Equal | LatticeOrder::StrictlyFiner),
                    "{} at len {}: {:?}",
                    scheme,
                    len,
                    order
                );
            }
            prev = Some(lat);
        }
    }
}
