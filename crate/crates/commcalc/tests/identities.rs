//! Exact free-group identity checks: the commutator identities the whole
//! calculus leans on, verified with zero tolerance.

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use commcalc::words::{verify_identity, Pattern, Word};

fn w(text: &str, rank: usize) -> Word {
    Word::parse(text, rank).unwrap()
}

fn random_word(rng: &mut StdRng, rank: usize, len: usize) -> Word {
    let mut word = Word::identity(rank);
    for _ in 0..len {
        let g = rng.gen_range(0..rank);
        let e = if rng.gen_bool(0.5) { 1 } else { -1 };
        word = word
            .mul(&Word::generator(rank, g).unwrap().pow(e).unwrap())
            .unwrap();
    }
    word
}

#[test]
fn hall_witt_identity() {
    // [[a,b^-1],c]^b [[b,c^-1],a]^c [[c,a^-1],b]^a = 1, the factors cyclic
    // in (a,b,c).
    let lhs = w("[[a,b^-1],c]^(b) * [[b,c^-1],a]^(c) * [[c,a^-1],b]^(a)", 3);
    assert!(lhs.is_identity());
}

#[test]
fn hall_witt_on_random_words() {
    let mut rng = StdRng::seed_from_u64(0xC0FFEE);
    for _ in 0..50 {
        let a = random_word(&mut rng, 3, 5);
        let b = random_word(&mut rng, 3, 5);
        let c = random_word(&mut rng, 3, 5);
        let t1 = a
            .commutator(&b.inverse())
            .unwrap()
            .commutator(&c)
            .unwrap()
            .conjugate(&b)
            .unwrap();
        let t2 = b
            .commutator(&c.inverse())
            .unwrap()
            .commutator(&a)
            .unwrap()
            .conjugate(&c)
            .unwrap();
        let t3 = c
            .commutator(&a.inverse())
            .unwrap()
            .commutator(&b)
            .unwrap()
            .conjugate(&a)
            .unwrap();
        assert!(t1.mul(&t2).unwrap().mul(&t3).unwrap().is_identity());
    }
}

#[test]
fn product_expansion_identities() {
    // [ab,c] = [a,c]^b [b,c]; [a,bc] = [a,c][a,b]^c;
    // [a^-1,b] = ([a,b]^-1)^(a^-1); x^y = x [x,y].
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..100 {
        let a = random_word(&mut rng, 3, 6);
        let b = random_word(&mut rng, 3, 6);
        let c = random_word(&mut rng, 3, 6);

        let lhs1 = a.mul(&b).unwrap().commutator(&c).unwrap();
        let rhs1 = a
            .commutator(&c)
            .unwrap()
            .conjugate(&b)
            .unwrap()
            .mul(&b.commutator(&c).unwrap())
            .unwrap();
        assert!(verify_identity(&lhs1, &rhs1).unwrap());

        let lhs2 = a.commutator(&b.mul(&c).unwrap()).unwrap();
        let rhs2 = a
            .commutator(&c)
            .unwrap()
            .mul(&a.commutator(&b).unwrap().conjugate(&c).unwrap())
            .unwrap();
        assert!(verify_identity(&lhs2, &rhs2).unwrap());

        let lhs3 = a.inverse().commutator(&b).unwrap();
        let rhs3 = a
            .commutator(&b)
            .unwrap()
            .inverse()
            .conjugate(&a.inverse())
            .unwrap();
        assert!(verify_identity(&lhs3, &rhs3).unwrap());

        let lhs4 = a.conjugate(&b).unwrap();
        let rhs4 = a.mul(&a.commutator(&b).unwrap()).unwrap();
        assert!(verify_identity(&lhs4, &rhs4).unwrap());
    }
}

#[test]
fn double_engel_is_conjugate_of_squared_form() {
    // [[g,h],h] = [h, h^g]^[g,h]
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..50 {
        let g = random_word(&mut rng, 2, 6);
        let h = random_word(&mut rng, 2, 6);
        let lhs = g.commutator(&h).unwrap().commutator(&h).unwrap();
        let rhs = h
            .commutator(&h.conjugate(&g).unwrap())
            .unwrap()
            .conjugate(&g.commutator(&h).unwrap())
            .unwrap();
        assert!(verify_identity(&lhs, &rhs).unwrap());
    }
}

#[test]
fn swapped_engel_conjugation() {
    // [h,g,h,h] = ([g,h,h,h]^([h,[g,h]]^2 [h,g]))^-1
    let g = w("a", 2);
    let h = w("b", 2);
    let lhs = w("[b,a,b,b]", 2);
    let conj = h
        .commutator(&g.commutator(&h).unwrap())
        .unwrap()
        .pow(2)
        .unwrap()
        .mul(&h.commutator(&g).unwrap())
        .unwrap();
    let rhs = w("[a,b,b,b]", 2).conjugate(&conj).unwrap().inverse();
    assert!(verify_identity(&lhs, &rhs).unwrap());
}

#[test]
fn triple_engel_rebracketing() {
    // [g,h,h,h] = ([h,[h,[h,g]]]^([g,h]^h))^-1
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..20 {
        let g = random_word(&mut rng, 2, 5);
        let h = random_word(&mut rng, 2, 5);
        let lhs = Word::left_normed(&[g.clone(), h.clone(), h.clone(), h.clone()]).unwrap();
        let nested = h
            .commutator(&h.commutator(&h.commutator(&g).unwrap()).unwrap())
            .unwrap();
        let conj = g.commutator(&h).unwrap().conjugate(&h).unwrap();
        let rhs = nested.conjugate(&conj).unwrap().inverse();
        assert!(verify_identity(&lhs, &rhs).unwrap());
    }
}

#[test]
fn conjugate_tower_equals_nested_bracket() {
    // [m, m^{m^{...^{m^g}}}] with k+1 nested m's equals the (k+2)-fold
    // nested bracket [m,[m,...,[m,g]...]], exactly, for k <= 4.
    let mut rng = StdRng::seed_from_u64(31);
    for k in 0..=4usize {
        for _ in 0..10 {
            let m = Word::generator(2, 0).unwrap();
            let g = random_word(&mut rng, 2, 5);
            let mut tower = g.clone();
            for _ in 0..k + 1 {
                tower = m.conjugate(&tower).unwrap();
            }
            let lhs = m.commutator(&tower).unwrap();
            let mut rhs = g.clone();
            for _ in 0..k + 2 {
                rhs = m.commutator(&rhs).unwrap();
            }
            assert!(verify_identity(&lhs, &rhs).unwrap(), "k={}", k);
        }
    }
}

#[test]
fn mixed_weight3_commutator_is_conjugate_inverse() {
    // [[b,a],b] = ([[a,b],b]^-1)^[b,a], the step showing both weight-3
    // basics are double Engel values.
    let lhs = w("[[b,a],b]", 2);
    let rhs = w("[[a,b],b]", 2)
        .inverse()
        .conjugate(&w("[b,a]", 2))
        .unwrap();
    assert!(verify_identity(&lhs, &rhs).unwrap());
}

#[test]
fn pattern_instantiation_matches_direct_words() {
    let pat = Pattern::Bracket(vec![
        Pattern::var("g"),
        Pattern::var("m"),
        Pattern::var("m"),
        Pattern::var("m"),
    ]);
    let mut bind = HashMap::new();
    bind.insert("g".into(), w("a*b^-1", 2));
    bind.insert("m".into(), w("b", 2));
    let inst = pat.substitute(2, &bind).unwrap();
    assert_eq!(inst, w("[a*b^-1,b,b,b]", 2));
}
